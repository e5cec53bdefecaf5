//! Sampling check of the coercivity and growth inequalities that guarantee
//! equality of the measure relaxation and its pointwise dual.
//!
//! The check evaluates the inequalities at quasi-random and lattice points of
//! the truncated sets; a pass is evidence, not a proof.

use super::{total_divergence, VariationalProblem};
use crate::error::{Error, Result};
use crate::poly::{CompiledPoly, PolyVector};
use crate::sampling::Halton;

#[derive(Clone, Debug)]
pub struct CoercivityWitness {
    pub phi0: PolyVector<f64>,
    pub beta: f64,
    pub q: f64,
    pub r: f64,
}

impl CoercivityWitness {
    pub fn validate(&self, p: f64, n: usize) -> Result<()> {
        if self.phi0.len() != n {
            return Err(Error::Dimension(format!("phi0 has {} entries, expected {n}", self.phi0.len())));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Invalid("beta must be positive".into()));
        }
        if !(0.0 <= self.r && self.r < self.q && self.q <= p) {
            return Err(Error::Invalid(format!(
                "need 0 <= r < q <= p, got r = {}, q = {}, p = {p}",
                self.r, self.q
            )));
        }
        Ok(())
    }
}

/// Worst sampled margin of one inequality (`margin >= 0` means satisfied).
#[derive(Clone, Debug)]
pub struct InequalityMargin {
    pub label: &'static str,
    pub samples: usize,
    pub worst: Option<f64>,
    pub worst_point: Vec<f64>,
}

impl InequalityMargin {
    fn new(label: &'static str) -> Self {
        InequalityMargin { label, samples: 0, worst: None, worst_point: Vec::new() }
    }

    fn record(&mut self, margin: f64, point: &[f64]) {
        self.samples += 1;
        let worse = match self.worst {
            None => true,
            Some(w) => margin < w || margin.is_nan(),
        };
        if worse {
            self.worst = Some(margin);
            self.worst_point = point.to_vec();
        }
    }

    /// `None` when no sample fell in the constraint set.
    pub fn passed(&self, tol: f64) -> Option<bool> {
        self.worst.map(|w| w >= -tol)
    }
}

#[derive(Clone, Debug)]
pub struct CoercivityReport {
    pub radius: f64,
    pub bulk_coercivity: InequalityMargin,
    pub boundary_coercivity: InequalityMargin,
    pub bulk_growth: InequalityMargin,
    pub boundary_growth: InequalityMargin,
}

impl CoercivityReport {
    pub fn margins(&self) -> [&InequalityMargin; 4] {
        [&self.bulk_coercivity, &self.boundary_coercivity, &self.bulk_growth, &self.boundary_growth]
    }

    pub fn inconclusive(&self) -> bool {
        self.margins().iter().any(|m| m.samples == 0)
    }

    pub fn passed(&self) -> bool {
        !self.inconclusive() && self.margins().iter().all(|m| m.passed(1e-12) == Some(true))
    }
}

const SUPPORT_TOL: f64 = 1e-12;

/// Evaluates the four inequalities on `samples` quasi-random points of the
/// bulk and boundary phase spaces truncated to `|y|, |z| <= radius`, plus a
/// coarse lattice that contains `y = 0` and `z = 0`.
pub fn check_coercivity(
    problem: &VariationalProblem<f64>,
    witness: &CoercivityWitness,
    radius: f64,
    samples: usize,
) -> Result<CoercivityReport> {
    witness.validate(problem.p, problem.n())?;
    let layout = problem.layout;
    let (n, m) = (layout.n, layout.m);
    let nz = m * n;
    let d_phi0 = total_divergence(&witness.phi0, layout)?;
    let bulk_lhs = (&problem.f + &d_phi0).compile();
    let c = problem.c.compile();
    let d = problem.d.compile();
    let a: Vec<CompiledPoly> = problem.a.iter().map(|p| p.compile()).collect();
    let b: Vec<CompiledPoly> = problem.b.iter().map(|p| p.compile()).collect();
    let g = problem.g.compile();
    let phi0: Vec<CompiledPoly> = witness.phi0.iter().map(|p| p.compile()).collect();
    let (beta, q, r) = (witness.beta, witness.q, witness.r);
    let norm_pow = |v: &[f64], e: f64| -> f64 {
        let s = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if e == 0.0 {
            1.0
        } else {
            s.powf(e)
        }
    };

    let mut report = CoercivityReport {
        radius,
        bulk_coercivity: InequalityMargin::new("bulk coercivity"),
        boundary_coercivity: InequalityMargin::new("boundary coercivity"),
        bulk_growth: InequalityMargin::new("bulk growth of a"),
        boundary_growth: InequalityMargin::new("boundary growth of b"),
    };
    let omega = problem.omega.bounds_f64();

    // Bulk phase space.
    let mut lo: Vec<f64> = omega.iter().map(|b| b.0).collect();
    let mut hi: Vec<f64> = omega.iter().map(|b| b.1).collect();
    lo.extend(std::iter::repeat(-radius).take(m + nz));
    hi.extend(std::iter::repeat(radius).take(m + nz));
    let mut points = Halton::new(n + m + nz).sample_box(samples, &lo, &hi);
    points.extend(lattice_points(&omega, m, nz, radius));
    for pt in &points {
        if c.eval(pt).abs() > SUPPORT_TOL {
            continue;
        }
        let (y, z) = (&pt[n..n + m], &pt[n + m..]);
        let lhs = bulk_lhs.eval(pt);
        report.bulk_coercivity.record(lhs - beta * (norm_pow(y, q) + norm_pow(z, q) - 1.0), pt);
        if !a.is_empty() {
            let av: Vec<f64> = a.iter().map(|ak| ak.eval(pt)).collect();
            report.bulk_growth.record(beta * (norm_pow(y, r) + norm_pow(z, r)) - norm_pow(&av, 1.0), pt);
        }
    }

    // Boundary phase space, facet by facet.
    for facet in problem.omega.facets() {
        let fixed = problem.omega.facet_value(facet);
        let mut lo: Vec<f64> = omega.iter().map(|b| b.0).collect();
        let mut hi: Vec<f64> = omega.iter().map(|b| b.1).collect();
        lo[facet.axis] = fixed;
        hi[facet.axis] = fixed;
        lo.extend(std::iter::repeat(-radius).take(m));
        hi.extend(std::iter::repeat(radius).take(m));
        let per_facet = (samples / (2 * n)).max(16);
        let mut pts = Halton::new(n + m).sample_box(per_facet, &lo, &hi);
        for lp in lattice_points(&omega, m, 0, radius) {
            let mut lp = lp;
            lp[facet.axis] = fixed;
            pts.push(lp);
        }
        for pt in &pts {
            let mut full = pt.clone();
            full.extend(std::iter::repeat(0.0).take(nz));
            if d.eval(&full).abs() > SUPPORT_TOL {
                continue;
            }
            let y = &pt[n..n + m];
            let normal = facet.normal_sign() as f64 * phi0[facet.axis].eval(&full);
            let lhs = g.eval(&full) - normal;
            report.boundary_coercivity.record(lhs - beta * (norm_pow(y, q) - 1.0), &full);
            if !b.is_empty() {
                let bv: Vec<f64> = b.iter().map(|bk| bk.eval(&full)).collect();
                report.boundary_growth.record(beta * norm_pow(y, r) - norm_pow(&bv, 1.0), &full);
            }
        }
    }
    if a.is_empty() {
        report.bulk_growth.samples = report.bulk_coercivity.samples;
        report.bulk_growth.worst = Some(f64::INFINITY);
    }
    if b.is_empty() {
        report.boundary_growth.samples = report.boundary_coercivity.samples;
        report.boundary_growth.worst = Some(f64::INFINITY);
    }
    Ok(report)
}

/// Tensor lattice: x at cell midpoints and corners, y on 5 levels, z on 3 levels
/// (all including 0), capped so the product stays moderate.
fn lattice_points(omega: &[(f64, f64)], m: usize, nz: usize, radius: f64) -> Vec<Vec<f64>> {
    let x_levels: Vec<Vec<f64>> = omega
        .iter()
        .map(|&(lo, hi)| vec![lo, 0.75 * lo + 0.25 * hi, 0.5 * (lo + hi), 0.25 * lo + 0.75 * hi, hi])
        .collect();
    let y_levels = vec![-radius, -0.5 * radius, 0.0, 0.5 * radius, radius];
    let z_levels = vec![-radius, 0.0, radius];
    let mut axes: Vec<Vec<f64>> = x_levels;
    axes.extend(std::iter::repeat(y_levels).take(m));
    axes.extend(std::iter::repeat(z_levels).take(nz));
    let total: usize = axes.iter().map(Vec::len).product();
    let stride = total.div_ceil(20_000).max(1);
    let mut out = Vec::new();
    for flat in (0..total).step_by(stride) {
        let mut rest = flat;
        let mut pt = vec![0.0; axes.len()];
        for (k, axis) in axes.iter().enumerate().rev() {
            pt[k] = axis[rest % axis.len()];
            rest /= axis.len();
        }
        out.push(pt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, VarLayout};
    use crate::problem::BoxDomain;

    fn problem(f: &str) -> VariationalProblem<f64> {
        let l = VarLayout::new(1, 1);
        VariationalProblem::new("t", BoxDomain::new(vec![(-1.0, 1.0)]).unwrap(), 1, 2.0, parse_polynomial(f, l).unwrap())
            .with_dirichlet()
    }

    fn witness() -> CoercivityWitness {
        CoercivityWitness { phi0: PolyVector::zeros(VarLayout::new(1, 1), 1), beta: 0.5, q: 2.0, r: 0.0 }
    }

    #[test]
    fn gradient_only_integrand_fails_bulk_coercivity() {
        let rep = check_coercivity(&problem("z^2"), &witness(), 4.0, 2048).unwrap();
        assert_eq!(rep.bulk_coercivity.passed(1e-12), Some(false));
        assert_eq!(rep.boundary_coercivity.passed(1e-12), Some(true));
        assert_eq!(rep.bulk_growth.passed(1e-12), Some(true));
        assert!(!rep.passed());
    }

    #[test]
    fn full_quadratic_passes() {
        let rep = check_coercivity(&problem("z^2 + y^2"), &witness(), 4.0, 2048).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn invalid_witness_rejected() {
        let mut w = witness();
        w.r = 3.0;
        assert!(check_coercivity(&problem("z^2"), &w, 4.0, 16).is_err());
    }
}
