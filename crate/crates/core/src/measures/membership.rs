use rayon::prelude::*;

use super::ProductMeasure;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, PolyVector, Var, VarLayout};
use crate::problem::{total_divergence, VariationalProblem};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    Integral,
    BulkMarginal,
    BoundaryMarginal,
    Divergence,
}

impl ResidualKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ResidualKind::Integral => "integral",
            ResidualKind::BulkMarginal => "marginal_mu",
            ResidualKind::BoundaryMarginal => "marginal_nu",
            ResidualKind::Divergence => "divergence",
        }
    }
}

/// Residuals of every linear constraint a pair `(mu, nu)` must satisfy.
#[derive(Clone, Debug)]
pub struct MembershipReport<S: Scalar> {
    /// `<a_k, mu> + <b_k, nu> - rhs_k`.
    pub integral_residuals: Vec<S>,
    /// `<h, mu> - ∫_Omega h` per bulk test function.
    pub marginal_mu_residuals: Vec<S>,
    /// `<l, nu> - ∫_dOmega l` per boundary test function.
    pub marginal_nu_residuals: Vec<S>,
    /// `<D phi, mu> - <phi . n, nu>` per test field.
    pub divergence_residuals: Vec<S>,
    /// Worst `|c|` on the atoms of `mu`.
    pub support_violation_mu: f64,
    /// Worst `|d|` on the atoms of `nu`.
    pub support_violation_nu: f64,
    /// `<f, mu> + <g, nu>`.
    pub objective: S,
    pub phi_labels: Vec<String>,
    pub h_labels: Vec<String>,
    pub l_labels: Vec<String>,
}

impl<S: Scalar> MembershipReport<S> {
    /// `(constraint id, residual)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(String, S)> {
        let mut out = Vec::new();
        for (k, r) in self.integral_residuals.iter().enumerate() {
            out.push((format!("integral[{k}]"), r.clone()));
        }
        for (label, r) in self.h_labels.iter().zip(&self.marginal_mu_residuals) {
            out.push((format!("marginal_mu[{label}]"), r.clone()));
        }
        for (label, r) in self.l_labels.iter().zip(&self.marginal_nu_residuals) {
            out.push((format!("marginal_nu[{label}]"), r.clone()));
        }
        for (label, r) in self.phi_labels.iter().zip(&self.divergence_residuals) {
            out.push((format!("divergence[{label}]"), r.clone()));
        }
        out
    }

    fn all_residuals(&self) -> impl Iterator<Item = &S> {
        self.integral_residuals
            .iter()
            .chain(&self.marginal_mu_residuals)
            .chain(&self.marginal_nu_residuals)
            .chain(&self.divergence_residuals)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.all_residuals().map(|r| r.abs_f64()).fold(0.0, f64::max)
    }

    pub fn all_exactly_zero(&self) -> bool {
        self.all_residuals().all(|r| r.is_zero()) && self.support_violation_mu == 0.0 && self.support_violation_nu == 0.0
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_abs_residual() <= tol && self.support_violation_mu <= tol && self.support_violation_nu <= tol
    }
}

pub(crate) fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut current = vec![0u16; nvars];
    fn rec(k: usize, left: u32, current: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if k == current.len() {
            out.push(current.clone());
            return;
        }
        for e in 0..=left {
            current[k] = e as u16;
            rec(k + 1, left - e, current, out);
        }
        current[k] = 0;
    }
    rec(0, degree, &mut current, &mut out);
    out.sort_by_key(|e| (e.iter().map(|&v| v as u32).sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

fn xy_monomial<S: Scalar>(layout: VarLayout, exps: &[u16]) -> Polynomial<S> {
    let powers: Vec<(Var, u16)> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(k, &e)| (layout.var(k), e))
        .collect();
    Polynomial::monomial(layout, S::one(), &powers)
}

/// Monomial test fields `x^α y^β e_i` with `|α| + |β| <= degree`, labelled.
pub fn default_phi_basis<S: Scalar>(layout: VarLayout, degree: u32) -> Vec<(String, PolyVector<S>)> {
    let mut out = Vec::new();
    for exps in monomials_up_to(layout.n + layout.m, degree) {
        let mono: Polynomial<S> = xy_monomial(layout, &exps);
        for i in 0..layout.n {
            let mut phi = PolyVector::zeros(layout, layout.n);
            phi.set(i, mono.clone());
            out.push((format!("{:?} e{}", mono, i + 1), phi));
        }
    }
    out
}

/// Monomials `x^α` with `|α| <= degree`, labelled.
pub fn default_h_basis<S: Scalar>(layout: VarLayout, degree: u32) -> Vec<(String, Polynomial<S>)> {
    monomials_up_to(layout.n, degree)
        .into_iter()
        .map(|exps| {
            let p: Polynomial<S> = xy_monomial(layout, &exps);
            (format!("{p:?}"), p)
        })
        .collect()
}

/// Same monomials as [`default_h_basis`], used on the boundary.
pub fn default_l_basis<S: Scalar>(layout: VarLayout, degree: u32) -> Vec<(String, Polynomial<S>)> {
    default_h_basis(layout, degree)
}

/// Residuals of the integral, marginal, divergence and support constraints.
/// Divergence rows are evaluated concurrently and reported in basis order.
pub fn check_membership<S: Scalar>(
    mu: &ProductMeasure<S>,
    nu: &ProductMeasure<S>,
    problem: &VariationalProblem<S>,
    phi_basis: &[(String, PolyVector<S>)],
    h_basis: &[(String, Polynomial<S>)],
    l_basis: &[(String, Polynomial<S>)],
) -> Result<MembershipReport<S>> {
    let layout = problem.layout;
    if mu.layout() != layout || nu.layout() != layout {
        return Err(Error::Dimension("measure layout differs from problem layout".into()));
    }
    if mu.is_boundary() || !nu.is_boundary() {
        return Err(Error::Invalid("expected a bulk measure and a boundary measure".into()));
    }
    let integral_residuals = problem
        .a
        .iter()
        .zip(&problem.b)
        .zip(&problem.rhs)
        .map(|((a, b), r)| Ok(mu.moment(a)? + nu.moment(b)? - r.clone()))
        .collect::<Result<Vec<_>>>()?;
    let marginal_mu_residuals = h_basis
        .par_iter()
        .map(|(_, h)| Ok(mu.moment(h)? - problem.omega.integrate(h)?))
        .collect::<Result<Vec<_>>>()?;
    let marginal_nu_residuals = l_basis
        .par_iter()
        .map(|(_, l)| Ok(nu.moment(l)? - problem.omega.integrate_boundary(l)?))
        .collect::<Result<Vec<_>>>()?;
    let divergence_residuals = phi_basis
        .par_iter()
        .map(|(_, phi)| {
            let d_phi = total_divergence(phi, layout)?;
            Ok(mu.moment(&d_phi)? - nu.normal_flux(phi)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = mu.moment(&problem.f)? + nu.moment(&problem.g)?;
    Ok(MembershipReport {
        integral_residuals,
        marginal_mu_residuals,
        marginal_nu_residuals,
        divergence_residuals,
        support_violation_mu: mu.support_violation(&problem.c)?,
        support_violation_nu: nu.support_violation(&problem.d)?,
        objective,
        phi_labels: phi_basis.iter().map(|(l, _)| l.clone()).collect(),
        h_labels: h_basis.iter().map(|(l, _)| l.clone()).collect(),
        l_labels: l_basis.iter().map(|(l, _)| l.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{pushforward, PiecewiseFunction};
    use crate::poly::parse_polynomial;
    use crate::problem::BoxDomain;
    use crate::scalar::Exact;

    #[test]
    fn basis_sizes() {
        let l = VarLayout::new(1, 1);
        assert_eq!(default_phi_basis::<Exact>(l, 4).len(), 15);
        assert_eq!(default_h_basis::<Exact>(l, 3).len(), 4);
        let l2 = VarLayout::new(2, 2);
        assert_eq!(default_phi_basis::<f64>(l2, 2).len(), 2 * 15);
    }

    #[test]
    fn pushforward_is_a_member_and_halving_is_not() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap();
        let p = |t: &str| parse_polynomial::<Exact>(t, l).unwrap();
        let problem = VariationalProblem::new("t", omega.clone(), 1, 2.0, p("z^2")).with_dirichlet();
        let u = PiecewiseFunction::global(&omega, PolyVector::new(vec![p("1 - x^2")]).unwrap()).unwrap();
        let (mu, nu) = pushforward(&u, &problem).unwrap();
        let phi = default_phi_basis(l, 4);
        let h = default_h_basis(l, 4);
        let lb = default_l_basis(l, 2);
        let rep = check_membership(&mu, &nu, &problem, &phi, &h, &lb).unwrap();
        assert!(rep.all_exactly_zero(), "{:?}", rep.rows());
        assert_eq!(rep.objective, Exact::from_ratio(8, 3));
        let rep = check_membership(&mu.scaled(&Exact::from_ratio(1, 2)), &nu, &problem, &phi, &h, &lb).unwrap();
        assert_eq!(rep.marginal_mu_residuals[0], Exact::from_i64(-1));
        assert!(!rep.all_exactly_zero());
    }

    #[test]
    fn support_violation_is_reported() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap();
        let p = |t: &str| parse_polynomial::<Exact>(t, l).unwrap();
        let problem = VariationalProblem::new("t", omega.clone(), 1, 2.0, p("z^2")).with_dirichlet();
        let u = PiecewiseFunction::global(&omega, PolyVector::new(vec![p("x")]).unwrap()).unwrap();
        let (mu, nu) = pushforward(&u, &problem).unwrap();
        let rep = check_membership(&mu, &nu, &problem, &[], &[], &[]).unwrap();
        assert_eq!(rep.support_violation_nu, 1.0);
        assert_eq!(rep.support_violation_mu, 0.0);
    }
}
