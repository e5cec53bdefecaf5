//! One line per acceptance criterion, written straight to stderr so it
//! shows up without `--nocapture`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varbound::legendre::{
    certificate_from_dual_fields, conjugate, conjugate_on, convexify, solve_conjugate_dual_1d, DualSettings,
    SampledFunction,
};
use varbound::fem::{minimize_fe, optimality_residual, FeOptions, Mesh};
use varbound::measures::{
    check_membership, default_h_basis, default_l_basis, default_phi_basis, det_jensen_gap, pushforward,
    PiecewiseFunction,
};
use varbound::problem::ProblemFile;
use varbound::{BoxDomain, Exact, PolyVector, Polynomial, Scalar, Var, VarLayout, VariationalProblem};

const PI2_4: f64 = 2.4674011002723395;
/// `int_{-1}^{1} (u'^2 + (u - x)^2) dx` at `u = x - sinh x / sinh 1`.
const CONVEX_F_STAR: f64 = 0.6260705709986627;

type Rows = Vec<HashMap<String, String>>;

struct Run {
    ok: bool,
    stdout: String,
    stderr: String,
    seconds: f64,
}

fn varbound(dir: &Path, args: &[&str]) -> Run {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_varbound")).args(args).current_dir(dir).output().unwrap();
    Run {
        ok: out.status.success(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn table(path: &Path) -> Rows {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn failed_run(run: &Run) -> Verdict {
    verdict(false, format!("command failed: {}{}", run.stderr.trim(), run.stdout.trim()))
}

fn poincare_gap(dir: &Path) -> Verdict {
    let run = varbound(dir, &["sandwich", "poincare", "--out", "c1"]);
    if !run.ok {
        return failed_run(&run);
    }
    let row = &table(&dir.join("c1/sandwich.csv"))[0];
    let (upper, omr, pdr) = (num(row, "upper"), num(row, "omr"), num(row, "pdr_certified"));
    let ok = (upper - PI2_4).abs() <= 1e-3 && omr <= 1e-6 && pdr.abs() <= 1e-6 && run.seconds <= 60.0;
    verdict(ok, format!("upper {upper:.6}, omr {omr:.2e}, certified {pdr:.2e}, {:.1}s", run.seconds))
}

fn double_well_gap(dir: &Path) -> Verdict {
    let start = Instant::now();
    let run = varbound(dir, &["omr", "double_well", "--out", "c2"]);
    if !run.ok {
        return failed_run(&run);
    }
    let omr = num(&table(&dir.join("c2/omr.csv"))[0], "value");
    let masses = table(&dir.join("c2/omr_z_masses.csv"));
    let mass_at = |z: &str| {
        masses.iter().filter(|r| r["z"] == z).map(|r| num(r, "mass_fraction")).sum::<f64>()
    };
    let (plus, minus) = (mass_at("1e0;0e0;0e0;1e0"), mass_at("-1e0;0e0;0e0;-1e0"));
    let run = varbound(dir, &["upper", "double_well", "--out", "c2u"]);
    if !run.ok {
        return failed_run(&run);
    }
    let rows = table(&dir.join("c2u/upper.csv"));
    let at_eighth = rows.iter().find(|r| r["stage"] == "main" && (num(r, "h") - 0.125).abs() < 1e-12);
    let upper = at_eighth.map_or(f64::NAN, |r| num(r, "value"));
    let refined = rows.iter().filter(|r| r["stage"] == "refinement").count();
    let secs = start.elapsed().as_secs_f64();
    let ok = omr <= 1e-6
        && (plus - 0.5).abs() <= 1e-6
        && (minus - 0.5).abs() <= 1e-6
        && upper >= 0.5
        && refined >= 2
        && secs <= 300.0;
    verdict(
        ok,
        format!("omr {omr:.2e}, masses {plus:.6}/{minus:.6}, upper at h=1/8 {upper:.4}, {refined} refinement levels, {secs:.1}s"),
    )
}

fn exact_measures(dir: &Path) -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for (k, file) in ["poincare_mu.measure", "double_well.measure"].iter().enumerate() {
        let out = format!("c3-{k}");
        let run = varbound(dir, &["verify-measure", file, "--exact", "--phi-degree", "4", "--out", &out]);
        let rows = table(&dir.join(&out).join("measure_residuals.csv"));
        let exact_rows: Vec<_> = rows.iter().filter(|r| !r["constraint"].starts_with("support")).collect();
        let zero = exact_rows.iter().all(|r| r["residual"] == "0");
        let div = exact_rows.iter().filter(|r| r["constraint"].starts_with("divergence")).count();
        ok &= run.ok && zero && div > 0;
        details.push(format!("{file}: {} rows ({div} divergence) all zero = {zero}", exact_rows.len()));
    }
    verdict(ok, details.join("; "))
}

fn sharp_convex(dir: &Path) -> Verdict {
    let run = varbound(dir, &["sharp", "convex", "--out", "c4"]);
    if !run.ok {
        return failed_run(&run);
    }
    let sharp = table(&dir.join("c4/sharp.csv")).last().map_or(f64::NAN, |r| num(r, "certified_value"));
    let run = varbound(dir, &["pdr", "solve", "convex", "--out", "c4p"]);
    if !run.ok {
        return failed_run(&run);
    }
    let pdr = num(&table(&dir.join("c4p/pdr.csv"))[0], "certified_value");
    let ok = (sharp - CONVEX_F_STAR).abs() <= 5e-3 && (pdr - CONVEX_F_STAR).abs() <= 5e-3;
    verdict(ok, format!("oracle {CONVEX_F_STAR:.6}, conjugate certificate {sharp:.6}, collocation {pdr:.6}"))
}

/// Nodes strictly inside `[-1, 1]` must be zero, nodes beyond `1 + 2 step`
/// must keep their value.
fn envelope_matches(f: impl Fn(f64) -> f64) -> (bool, f64) {
    let fs = SampledFunction::from_fn(-2.0, 2.0, 401, &f).unwrap();
    let c = convexify(&fs).unwrap();
    let step = fs.step();
    let mut worst = 0.0f64;
    for ((z, v), orig) in fs.grid().iter().zip(c.values()).zip(fs.values()) {
        if z.abs() <= 1.0 {
            worst = worst.max(v.abs());
        } else if z.abs() >= 1.0 + 2.0 * step {
            worst = worst.max((v - orig).abs());
        }
    }
    (worst <= 2.0 * step, worst)
}

fn convexification(dir: &Path) -> Verdict {
    let (a, ea) = envelope_matches(|y| (y - 1.0).abs() * (y + 1.0).abs());
    let (b, eb) = envelope_matches(|z| (z * z - 1.0).powi(2));
    let run = varbound(dir, &["sharp", "well_1d", "--out", "c5"]);
    if !run.ok {
        return failed_run(&run);
    }
    let cert = table(&dir.join("c5/sharp.csv")).last().map_or(f64::NAN, |r| num(r, "certified_value"));
    verdict(
        a && b && cert.abs() <= 1e-9,
        format!("|y-1||y+1| error {ea:.1e}, (z^2-1)^2 error {eb:.1e}, certified value {cert:e}"),
    )
}

fn determinant() -> Verdict {
    let one = Exact::from_i64(1);
    let half = Exact::from_ratio(1, 2);
    let id = vec![one.clone(), Exact::zero(), Exact::zero(), one.clone()];
    let neg: Vec<Exact> = id.iter().map(|v| -v.clone()).collect();
    let (mean_det, det_mean) = det_jensen_gap(&[(id, half.clone()), (neg, half)]).unwrap();
    verdict(mean_det == one && det_mean == Exact::zero(), format!("({mean_det:?}, {det_mean:?})"))
}

fn random_function(rng: &mut ChaCha8Rng) -> SampledFunction {
    let n = rng.gen_range(3..40);
    let lo = rng.gen_range(-2.0..0.0);
    let hi = lo + rng.gen_range(0.5..3.0);
    let g = SampledFunction::from_fn(lo, hi, n, |_| 0.0).unwrap();
    SampledFunction::new(g.grid().to_vec(), (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap()
}

fn legendre_properties(rng: &mut ChaCha8Rng) -> (bool, bool) {
    let (mut involution, mut young) = (true, true);
    for _ in 0..50 {
        let f = random_function(rng);
        let star = conjugate(&f).unwrap();
        let triple = conjugate_on(&conjugate_on(&star, f.grid()).unwrap(), star.grid()).unwrap();
        involution &= star
            .values()
            .iter()
            .zip(triple.values())
            .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        for (z, fz) in f.grid().iter().zip(f.values()) {
            for (s, fs) in star.grid().iter().zip(star.values()) {
                young &= fz + fs >= z * s - 1e-9 * (1.0 + (z * s).abs());
            }
        }
    }
    (involution, young)
}

fn random_pushforwards(rng: &mut ChaCha8Rng) -> bool {
    let l = VarLayout::new(1, 1);
    let omega = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap();
    let z = Polynomial::var(l, Var::Z(0, 0));
    let problem = VariationalProblem::new("random", omega, 1, 2.0, &z * &z);
    let x = Polynomial::var(l, Var::X(0));
    let rational = |rng: &mut ChaCha8Rng| Exact::from_ratio(rng.gen_range(-4..5), rng.gen_range(1..4));
    (0..20).all(|_| {
        let mut p = Polynomial::constant(l, Exact::zero());
        let mut power = Polynomial::constant(l, Exact::from_i64(1));
        for _ in 0..4 {
            p = &p + &(&power * &Polynomial::constant(l, rational(rng)));
            power = &power * &x;
        }
        let cut = rng.gen_range(1..4);
        let cuts = [Exact::from_ratio(-cut, 4), Exact::from_ratio(cut, 4)];
        let mut cells = vec![p];
        for c in &cuts {
            let hinge = &(&x - &Polynomial::constant(l, c.clone())) * &Polynomial::constant(l, rational(rng));
            let next = cells.last().unwrap() + &hinge;
            cells.push(next);
        }
        let cells = cells.into_iter().map(|p| PolyVector::new(vec![p]).unwrap()).collect();
        let bp = vec![vec![Exact::from_i64(-1), cuts[0].clone(), cuts[1].clone(), Exact::from_i64(1)]];
        let u = PiecewiseFunction::new(l, bp, cells, true).unwrap();
        let (mu, nu) = pushforward(&u, &problem).unwrap();
        check_membership(&mu, &nu, &problem, &default_phi_basis(l, 4), &default_h_basis(l, 4), &default_l_basis(l, 4))
            .unwrap()
            .all_exactly_zero()
    })
}

fn chebyshev(convex: &str) -> Result<bool, String> {
    let pf = ProblemFile::parse(convex).map_err(|e| e.to_string())?;
    let problem = pf.build::<f64>().map_err(|e| e.to_string())?;
    let settings = DualSettings::from_section(&pf.sharp).map_err(|e| e.to_string())?;
    let fields = solve_conjugate_dual_1d(&problem, &settings).map_err(|e| e.to_string())?;
    let cert = certificate_from_dual_fields(&fields, &problem, &settings).map_err(|e| e.to_string())?;
    let mesh = Mesh::uniform(&problem.omega.to_f64(), &[128]).map_err(|e| e.to_string())?;
    let u = minimize_fe(&problem, &mesh, &FeOptions::from_section(&pf.fem)).map_err(|e| e.to_string())?;
    let report = optimality_residual(&problem, &u, &cert, &[1e-2, 1e-1, 1.0], 1e-12).map_err(|e| e.to_string())?;
    Ok(report.table.len() == 3 && report.table.iter().all(|r| r.holds))
}

fn property_suites(dir: &Path) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (involution, young) = legendre_properties(&mut rng);
    let members = random_pushforwards(&mut rng);
    let run = varbound(dir, &["examples", "--out", "c7"]);
    let rows = if dir.join("c7/examples.csv").exists() { table(&dir.join("c7/examples.csv")) } else { Vec::new() };
    let duality = rows.len() == 4 && rows.iter().all(|r| num(r, "pdr_certified") <= num(r, "omr") + 1e-4);
    let convex = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/convex.toml")).unwrap();
    let cheb = chebyshev(&convex);
    let secs = start.elapsed().as_secs_f64();
    let ok = involution && young && members && duality && cheb == Ok(true) && secs <= 300.0;
    verdict(
        ok,
        format!(
            "involution {involution}, Young-Fenchel {young}, 20 pushforwards exact {members}, weak duality on {} instances {duality}{}, Chebyshev {cheb:?}, {secs:.1}s",
            rows.len(),
            if run.ok { "" } else { " (examples reported a failed check)" }
        ),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let results = [
        ("1 mean-zero Poincare gap", poincare_gap(d)),
        ("2 double-well gap", double_well_gap(d)),
        ("3 exact measure verification", exact_measures(d)),
        ("4 sharpness on the convex instance", sharp_convex(d)),
        ("5 convexification", convexification(d)),
        ("6 determinant obstruction", determinant()),
        ("7 property suites", property_suites(d)),
    ];
    let mut lines: Vec<String> = results
        .iter()
        .map(|(name, v)| format!("criterion {name}: {} ({})", if v.passed { "PASS" } else { "FAIL" }, v.detail))
        .collect();
    lines.push(format!(
        "criterion 8 out of reach: NOT REPRODUCED (the exact two-well minimum is not certified by the \
         relaxations, which return 0; the finite element value 4 is only an upper bound here. Equality of \
         relaxation and dual values is checked for finite truncations only)"
    ));
    std::io::stderr().write_all(format!("\n{}\n", lines.join("\n")).as_bytes()).unwrap();
    let failed: Vec<_> = results.iter().filter(|(_, v)| !v.passed).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
