//! Integral variational problems on boxes and the total divergence operator.

mod coercivity;
mod domain;
mod file;

pub use coercivity::{check_coercivity, CoercivityReport, CoercivityWitness, InequalityMargin};
pub use domain::{BoxDomain, Facet};
pub use file::{
    load_problem_file, parse_scalar, FemSection, GridSection, NumberText, OracleSection, PdrSection, ProblemFile,
    SharpSection,
};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, PolyVector, Var, VarLayout};
use crate::scalar::Scalar;

/// Boundary treatment declared by the problem file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// No boundary condition beyond `d`.
    Free,
    /// Homogeneous Dirichlet data: `d = sum_j y_j^2` unless given explicitly.
    Dirichlet,
}

/// Minimize `int_Omega f(x,u,grad u) dx + int_dOmega g(x,u) dS` subject to
/// `int a + int b = rhs`, `c = 0` in the bulk and `d = 0` on the boundary.
#[derive(Clone, Debug)]
pub struct VariationalProblem<S: Scalar> {
    pub name: String,
    pub layout: VarLayout,
    pub p: f64,
    pub omega: BoxDomain<S>,
    pub f: Polynomial<S>,
    pub g: Polynomial<S>,
    pub a: Vec<Polynomial<S>>,
    pub b: Vec<Polynomial<S>>,
    pub rhs: Vec<S>,
    pub c: Polynomial<S>,
    pub d: Polynomial<S>,
    pub boundary: BoundaryKind,
}

impl<S: Scalar> VariationalProblem<S> {
    /// Unconstrained problem with integrand `f`; add data with the `with_*` methods.
    pub fn new(name: impl Into<String>, omega: BoxDomain<S>, m: usize, p: f64, f: Polynomial<S>) -> Self {
        let layout = VarLayout::new(omega.dim(), m);
        VariationalProblem {
            name: name.into(),
            layout,
            p,
            omega,
            f: f.relayout(layout),
            g: Polynomial::zero(layout),
            a: Vec::new(),
            b: Vec::new(),
            rhs: Vec::new(),
            c: Polynomial::zero(layout),
            d: Polynomial::zero(layout),
            boundary: BoundaryKind::Free,
        }
    }

    pub fn with_dirichlet(mut self) -> Self {
        self.boundary = BoundaryKind::Dirichlet;
        self.d = dirichlet_constraint(self.layout);
        self
    }

    pub fn with_boundary_integrand(mut self, g: Polynomial<S>) -> Self {
        self.g = g;
        self
    }

    pub fn with_integral_constraint(mut self, a: Polynomial<S>, b: Polynomial<S>, rhs: S) -> Self {
        self.a.push(a);
        self.b.push(b);
        self.rhs.push(rhs);
        self
    }

    pub fn with_bulk_constraint(mut self, c: Polynomial<S>) -> Self {
        self.c = c;
        self
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn m(&self) -> usize {
        self.layout.m
    }

    pub fn num_integral_constraints(&self) -> usize {
        self.a.len()
    }

    /// Checks the structural invariants. Non-integer `p` skips the degree check.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::Invalid(format!("growth exponent p = {} must be finite and > 1", self.p)));
        }
        if self.omega.dim() != self.layout.n {
            return Err(Error::Dimension("domain dimension differs from n".into()));
        }
        if self.a.len() != self.b.len() || self.a.len() != self.rhs.len() {
            return Err(Error::Dimension(format!(
                "integral constraints: |a| = {}, |b| = {}, |rhs| = {}",
                self.a.len(),
                self.b.len(),
                self.rhs.len()
            )));
        }
        let all = [&self.f, &self.g, &self.c, &self.d].into_iter().chain(&self.a).chain(&self.b);
        if all.clone().any(|p| p.layout() != self.layout) {
            return Err(Error::Dimension("integrand layout differs from (n, m)".into()));
        }
        for (label, p) in [("g", &self.g), ("d", &self.d)].into_iter().chain(self.b.iter().map(|p| ("b", p))) {
            if p.depends_on_z() {
                return Err(Error::Invalid(format!("boundary function {label} must not depend on z")));
            }
        }
        if self.p.fract() == 0.0 {
            let p = self.p as u32;
            let growth = [("f", &self.f), ("g", &self.g)]
                .into_iter()
                .chain(self.a.iter().map(|q| ("a", q)))
                .chain(self.b.iter().map(|q| ("b", q)));
            for (label, q) in growth {
                if q.degree_yz() > p {
                    return Err(Error::Invalid(format!(
                        "{label} has degree {} in (y, z), exceeding p = {p}",
                        q.degree_yz()
                    )));
                }
            }
        } else {
            log::warn!("non-integer p = {}; polynomial growth check skipped", self.p);
        }
        Ok(())
    }

    /// Bulk constraint parts with the right-hand side folded in:
    /// `a_k - rhs_k / |Omega|`, so the constraint reads `<a~, mu> + <b, nu> = 0`.
    pub fn normalized_a(&self) -> Vec<Polynomial<S>> {
        let vol = self.omega.volume();
        self.a
            .iter()
            .zip(&self.rhs)
            .map(|(a, r)| {
                let shift = Polynomial::constant(self.layout, r.clone() / vol.clone());
                a - &shift
            })
            .collect()
    }

    pub fn is_dirichlet(&self) -> bool {
        self.boundary == BoundaryKind::Dirichlet
    }

    pub fn to_f64(&self) -> VariationalProblem<f64> {
        self.map_scalar(|c| c.to_f64())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> VariationalProblem<T> {
        let mp = |p: &Polynomial<S>| p.map_coeffs(f);
        VariationalProblem {
            name: self.name.clone(),
            layout: self.layout,
            p: self.p,
            omega: self.omega.map(f),
            f: mp(&self.f),
            g: mp(&self.g),
            a: self.a.iter().map(mp).collect(),
            b: self.b.iter().map(mp).collect(),
            rhs: self.rhs.iter().map(f).collect(),
            c: mp(&self.c),
            d: mp(&self.d),
            boundary: self.boundary,
        }
    }
}

/// `sum_j y_j^2`, whose zero set on the boundary encodes `u = 0`.
pub fn dirichlet_constraint<S: Scalar>(layout: VarLayout) -> Polynomial<S> {
    let mut d = Polynomial::zero(layout);
    for j in 0..layout.m {
        d.add_scaled(&Polynomial::monomial(layout, S::one(), &[(Var::Y(j), 2)]), &S::one());
    }
    d
}

/// `D phi = sum_i d phi_i / d x_i + sum_{i,j} (d phi_i / d y_j) z_ji`.
pub fn total_divergence<S: Scalar>(phi: &PolyVector<S>, layout: VarLayout) -> Result<Polynomial<S>> {
    if phi.len() != layout.n {
        return Err(Error::Dimension(format!("phi has {} entries, expected n = {}", phi.len(), layout.n)));
    }
    let mut out = Polynomial::zero(layout);
    for (i, phi_i) in phi.iter().enumerate() {
        if phi_i.layout() != layout {
            return Err(Error::Dimension("phi layout differs from problem layout".into()));
        }
        if phi_i.depends_on_z() {
            return Err(Error::Invalid("test field phi must not depend on z".into()));
        }
        out.add_scaled(&phi_i.partial(Var::X(i)), &S::one());
        for j in 0..layout.m {
            let dy = phi_i.partial(Var::Y(j));
            if dy.is_zero() {
                continue;
            }
            let zji = Polynomial::var(layout, Var::Z(j, i));
            out.add_scaled(&(&dy * &zji), &S::one());
        }
    }
    Ok(out)
}

/// Problem for `v = u - u0`: every integrand is composed with
/// `y -> y + u0(x)`, `z -> z + grad u0(x)`.
pub fn shift_boundary_data<S: Scalar>(
    problem: &VariationalProblem<S>,
    u0: &PolyVector<S>,
) -> Result<VariationalProblem<S>> {
    let layout = problem.layout;
    if u0.len() != layout.m {
        return Err(Error::Dimension(format!("u0 has {} entries, expected m = {}", u0.len(), layout.m)));
    }
    if u0.iter().any(|u| u.layout() != layout || u.depends_on_y() || u.depends_on_z()) {
        return Err(Error::Invalid("u0 must be a polynomial in x only".into()));
    }
    let mut subs = Polynomial::identity_substitution(layout);
    for j in 0..layout.m {
        subs[layout.index(Var::Y(j))] = &Polynomial::var(layout, Var::Y(j)) + u0.get(j);
        for i in 0..layout.n {
            subs[layout.index(Var::Z(j, i))] = &Polynomial::var(layout, Var::Z(j, i)) + &u0.get(j).partial(Var::X(i));
        }
    }
    let shift = |p: &Polynomial<S>| p.compose(&subs);
    let mut out = problem.clone();
    out.f = shift(&problem.f)?;
    out.g = shift(&problem.g)?;
    out.c = shift(&problem.c)?;
    out.d = shift(&problem.d)?;
    out.a = problem.a.iter().map(shift).collect::<Result<_>>()?;
    out.b = problem.b.iter().map(shift).collect::<Result<_>>()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::scalar::Exact;

    fn poly(text: &str, layout: VarLayout) -> Polynomial<Exact> {
        parse_polynomial(text, layout).unwrap()
    }

    fn interval() -> BoxDomain<Exact> {
        BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap()
    }

    #[test]
    fn divergence_scalar_case() {
        let l = VarLayout::new(1, 1);
        let phi = PolyVector::new(vec![poly("x*y", l)]).unwrap();
        assert_eq!(total_divergence(&phi, l).unwrap(), poly("y + x*z", l));
        let phi = PolyVector::new(vec![poly("x^3", l)]).unwrap();
        let d = total_divergence(&phi, l).unwrap();
        assert_eq!(d, poly("3*x^2", l));
        assert!(!d.depends_on_z());
    }

    #[test]
    fn divergence_rejects_z() {
        let l = VarLayout::new(1, 1);
        let phi = PolyVector::new(vec![poly("z", l)]).unwrap();
        assert!(matches!(total_divergence(&phi, l), Err(Error::Invalid(_))));
    }

    #[test]
    fn divergence_vector_case_constant_sigma() {
        let l = VarLayout::new(2, 2);
        let phi = PolyVector::new(vec![poly("2*y1 - 3*y2", l), poly("5*y1 + 7*y2", l)]).unwrap();
        let expected = poly("2*z11 - 3*z21 + 5*z12 + 7*z22", l);
        assert_eq!(total_divergence(&phi, l).unwrap(), expected);
    }

    #[test]
    fn shift_examples() {
        let l = VarLayout::new(1, 1);
        let base = VariationalProblem::new("t", interval(), 1, 2.0, poly("z^2", l));
        let u0 = PolyVector::new(vec![poly("x", l)]).unwrap();
        assert_eq!(shift_boundary_data(&base, &u0).unwrap().f, poly("(z+1)^2", l));
        let base = VariationalProblem::new("t", interval(), 1, 2.0, poly("(y-x)^2", l));
        assert_eq!(shift_boundary_data(&base, &u0).unwrap().f, poly("y^2", l));
        let zero = PolyVector::zeros(l, 1);
        assert_eq!(shift_boundary_data(&base, &zero).unwrap().f, base.f);
    }

    #[test]
    fn validation_catches_bad_data() {
        let l = VarLayout::new(1, 1);
        let ok = VariationalProblem::new("t", interval(), 1, 2.0, poly("z^2", l)).with_dirichlet();
        ok.validate().unwrap();
        let high = VariationalProblem::new("t", interval(), 1, 2.0, poly("z^4", l));
        assert!(high.validate().is_err());
        let mut zb = ok.clone();
        zb.g = poly("z", l);
        assert!(zb.validate().is_err());
        let mut mismatch = ok.clone();
        mismatch.a.push(poly("y", l));
        assert!(matches!(mismatch.validate(), Err(Error::Dimension(_))));
        let fractional = VariationalProblem::new("t", interval(), 1, 2.5, poly("z^4", l));
        fractional.validate().unwrap();
    }

    #[test]
    fn normalized_constraint_moves_rhs() {
        let l = VarLayout::new(1, 1);
        let pr = VariationalProblem::new("t", interval(), 1, 2.0, poly("z^2", l)).with_integral_constraint(
            poly("y^2", l),
            Polynomial::zero(l),
            Exact::one(),
        );
        assert_eq!(pr.normalized_a()[0], poly("y^2 - 1/2", l));
    }
}
