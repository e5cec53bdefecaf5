use std::path::PathBuf;

use proptest::prelude::*;
use varbound::fem::{minimize_fe, FeOptions, Mesh};
use varbound::problem::ProblemFile;
use varbound::sampling::gauss_on;

const CONVEX_F_STAR: f64 = 0.6260705709986627;
const PI2_4: f64 = 2.4674011002723395;

fn bundled(name: &str) -> ProblemFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/data").join(name);
    ProblemFile::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn convex_oracle_by_quadrature() {
    let s1 = 1.0f64.sinh();
    let energy: f64 = gauss_on(40, -1.0, 1.0)
        .into_iter()
        .map(|(x, w)| {
            let du = 1.0 - x.cosh() / s1;
            let gap = -x.sinh() / s1;
            w * (du * du + gap * gap)
        })
        .sum();
    assert!((energy - CONVEX_F_STAR).abs() < 1e-14);
    assert!((2.0 * (1.0f64.cosh() / s1 - 1.0) - CONVEX_F_STAR).abs() < 1e-15);
    assert_eq!(bundled("convex.toml").oracle.f_star, Some(CONVEX_F_STAR));
}

#[test]
fn poincare_oracle() {
    assert_eq!(PI2_4, std::f64::consts::PI.powi(2) / 4.0);
    assert_eq!(bundled("poincare.toml").oracle.f_star, Some(PI2_4));
}

#[test]
fn two_well_minimum_is_four() {
    let pf = bundled("double_well.toml");
    let problem = pf.build::<f64>().unwrap();
    let mesh = Mesh::uniform(&problem.omega.to_f64(), &[8, 8]).unwrap();
    let u = minimize_fe(&problem, &mesh, &FeOptions::from_section(&pf.fem)).unwrap();
    assert!((u.value - 4.0).abs() < 1e-9, "{}", u.value);
    assert_eq!(pf.oracle.f_star, Some(4.0));
}

proptest! {
    /// `|Z - I|^2 |Z + I|^2 - 4 + 8 det Z` is a sum of nonnegative terms.
    #[test]
    fn two_well_polyconvex_minorant(z in prop::array::uniform4(-3.0f64..3.0)) {
        let [a, b, c, d] = z;
        let norm2 = a * a + b * b + c * c + d * d;
        let minus = (a - 1.0).powi(2) + b * b + c * c + (d - 1.0).powi(2);
        let plus = (a + 1.0).powi(2) + b * b + c * c + (d + 1.0).powi(2);
        let det = a * d - b * c;
        let identity = norm2 * norm2 + 4.0 - 8.0 * det + 4.0 * (b - c).powi(2);
        prop_assert!((minus * plus - identity).abs() <= 1e-9 * (1.0 + identity.abs()));
        prop_assert!(minus * plus >= 4.0 - 8.0 * det - 1e-9);
    }
}
