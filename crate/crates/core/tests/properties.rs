use std::path::PathBuf;

use proptest::prelude::*;
use varbound::fem::{minimize_fe, optimality_residual, FeOptions, Mesh};
use varbound::legendre::{
    certificate_from_dual_fields, conjugate, conjugate_on, convexify, solve_conjugate_dual_1d, DualSettings,
    SampledFunction,
};
use varbound::measures::{check_membership, default_h_basis, default_l_basis, default_phi_basis, pushforward, PiecewiseFunction};
use varbound::omr::{solve_omr, GridSpec, OmrBases};
use varbound::pdr::{solve_pdr, PdrSpec};
use varbound::problem::ProblemFile;
use varbound::{BoxDomain, Exact, PolyVector, Polynomial, Scalar, Var, VarLayout, VariationalProblem};

fn samples() -> impl Strategy<Value = SampledFunction> {
    (3usize..40, -2.0f64..0.0, 0.5f64..3.0)
        .prop_flat_map(|(n, lo, width)| (Just(lo), Just(width), prop::collection::vec(-5.0f64..5.0, n)))
        .prop_map(|(lo, width, values)| SampledFunction::from_fn(lo, lo + width, values.len(), |_| 0.0)
            .and_then(|g| SampledFunction::new(g.grid().to_vec(), values))
            .unwrap())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn triple_conjugate_equals_single(f in samples()) {
        let star = conjugate(&f).unwrap();
        let back = conjugate_on(&star, f.grid()).unwrap();
        let triple = conjugate_on(&back, star.grid()).unwrap();
        prop_assert!(close(star.values(), triple.values(), 1e-9));
    }

    #[test]
    fn young_fenchel_on_all_grid_pairs(f in samples()) {
        let star = conjugate(&f).unwrap();
        for (z, fz) in f.grid().iter().zip(f.values()) {
            for (s, fs) in star.grid().iter().zip(star.values()) {
                prop_assert!(fz + fs >= z * s - 1e-9 * (1.0 + (z * s).abs()));
            }
        }
    }

    #[test]
    fn convexify_is_idempotent_and_below(f in samples()) {
        let c = convexify(&f).unwrap();
        let cc = convexify(&c).unwrap();
        prop_assert!(close(c.values(), cc.values(), 1e-9), "{:?}\n{:?}\n{:?}", f.grid(), c.values(), cc.values());
        for (a, b) in c.values().iter().zip(f.values()) {
            prop_assert!(*a <= b + 1e-9 * (1.0 + b.abs()));
        }
    }
}

fn exact(n: i64, d: i64) -> Exact {
    Exact::from_ratio(n, d)
}

/// Cubic `sum c_k x^k` with small rational coefficients.
fn cubic(l: VarLayout, coefs: &[(i64, i64)]) -> Polynomial<Exact> {
    let x = Polynomial::var(l, Var::X(0));
    let mut p = Polynomial::constant(l, Exact::zero());
    let mut power = Polynomial::constant(l, Exact::from_i64(1));
    for &(n, d) in coefs {
        p = &p + &(&power * &Polynomial::constant(l, exact(n, d)));
        power = &power * &x;
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// Continuous piecewise cubics on three cells of [-1, 1] push forward to
    /// measure pairs with exactly vanishing residuals.
    #[test]
    fn pushforwards_are_exact_members(
        base in prop::collection::vec((-4i64..5, 1i64..4), 4),
        kinks in prop::collection::vec((-3i64..4, 1i64..3), 2),
        cut in 1i64..4,
    ) {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap();
        let z = Polynomial::var(l, Var::Z(0, 0));
        let problem = VariationalProblem::new("random", omega, 1, 2.0, &z * &z);
        let (c1, c2) = (exact(-cut, 4), exact(cut, 4));
        let x = Polynomial::var(l, Var::X(0));
        let p0 = cubic(l, &base);
        let hinge = |c: &Exact, (n, d): (i64, i64)| {
            let shifted = &x - &Polynomial::constant(l, c.clone());
            &shifted * &Polynomial::constant(l, exact(n, d))
        };
        let p1 = &p0 + &hinge(&c1, kinks[0]);
        let p2 = &p1 + &hinge(&c2, kinks[1]);
        let cells = [p0, p1, p2].into_iter().map(|p| PolyVector::new(vec![p]).unwrap()).collect();
        let breakpoints = vec![vec![Exact::from_i64(-1), c1, c2, Exact::from_i64(1)]];
        let u = PiecewiseFunction::new(l, breakpoints, cells, true).unwrap();
        let (mu, nu) = pushforward(&u, &problem).unwrap();
        let report = check_membership(
            &mu, &nu, &problem,
            &default_phi_basis(l, 4), &default_h_basis(l, 4), &default_l_basis(l, 4),
        ).unwrap();
        prop_assert!(report.all_exactly_zero(), "{:?}", report.rows());
    }
}

fn bundled(name: &str) -> ProblemFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/data").join(name);
    ProblemFile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn weak_duality_on_bundled_instances() {
    for name in ["poincare.toml", "double_well.toml", "convex.toml", "well_1d.toml"] {
        let pf = bundled(name);
        let problem = pf.build::<f64>().unwrap();
        let spec = GridSpec::from_section(&pf.grid, problem.layout).unwrap();
        let bases = OmrBases::from_section(&pf.grid, &problem, &spec).unwrap();
        let omr = solve_omr(&problem, &spec, &bases).unwrap();
        let pdr = solve_pdr(&problem, &PdrSpec::from_section(&pf.pdr).unwrap()).unwrap();
        let cert = pdr.certificate.certified_value;
        assert!(pdr.certificate.is_certified(), "{name}");
        assert!(cert <= omr.value + 1e-4, "{name}: certified {cert} above relaxation {}", omr.value);
    }
}

#[test]
fn chebyshev_table_on_convex_instance() {
    let pf = bundled("convex.toml");
    let problem = pf.build::<f64>().unwrap();
    let settings = DualSettings::from_section(&pf.sharp).unwrap();
    let fields = solve_conjugate_dual_1d(&problem, &settings).unwrap();
    let cert = certificate_from_dual_fields(&fields, &problem, &settings).unwrap();
    let mesh = Mesh::uniform(&problem.omega.to_f64(), &[128]).unwrap();
    let u = minimize_fe(&problem, &mesh, &FeOptions::from_section(&pf.fem)).unwrap();
    assert!(u.value >= cert.certified_value);
    let report = optimality_residual(&problem, &u, &cert, &[1e-2, 1e-1, 1.0], 1e-12).unwrap();
    assert_eq!(report.table.len(), 3);
    for row in &report.table {
        assert!(row.holds, "{row:?}");
        assert!(row.lambda + row.sigma <= row.bound);
    }
}
