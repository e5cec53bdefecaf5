//! Finitely described measures on the bulk and boundary phase spaces.
//!
//! A [`ProductMeasure`] is a finite sum of pieces `w * base(dx) ⊗ Y(dy) ⊗ Z(dz)`
//! where the base is Lebesgue measure on a sub-box, surface measure on part
//! of a facet, or a Dirac mass, and `Y`, `Z` are finite sums of atoms whose
//! positions may depend polynomially on `x`. Boundary measures have no `z`
//! atoms. Every moment of a polynomial reduces to box integrals, so checks
//! run exactly in [`Exact`](crate::scalar::Exact) arithmetic.

mod file;
mod membership;
mod pushforward;

pub use file::{load_measure_file, MeasureFile};
pub use membership::{
    check_membership, default_h_basis, default_l_basis, default_phi_basis, MembershipReport, ResidualKind,
};
pub(crate) use membership::monomials_up_to;
pub use pushforward::{pushforward, PiecewiseFunction};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, Var, VarLayout};
use crate::problem::{BoxDomain, Facet};
use crate::scalar::Scalar;

/// The `x`-part of a measure piece.
#[derive(Clone, Debug, PartialEq)]
pub enum XBase<S: Scalar> {
    /// Lebesgue measure on a sub-box.
    Lebesgue(BoxDomain<S>),
    /// Surface measure on `{x_axis = value} × prod_{i != axis} (lo_i, hi_i)`.
    /// `others` lists the intervals of the remaining axes in order.
    Surface { facet: Facet, value: S, others: Vec<(S, S)> },
    /// Unit point mass.
    Dirac(Vec<S>),
    /// Unit point mass on a facet, for boundary measures.
    FacetPoint { facet: Facet, point: Vec<S> },
}

impl<S: Scalar> XBase<S> {
    /// Total mass of the base measure.
    pub fn mass(&self) -> S {
        match self {
            XBase::Lebesgue(b) => b.volume(),
            XBase::Surface { others, .. } => {
                others.iter().fold(S::one(), |acc, (lo, hi)| acc * (hi.clone() - lo.clone()))
            }
            XBase::Dirac(_) | XBase::FacetPoint { .. } => S::one(),
        }
    }

    /// Integral of an `x`-only polynomial against the base.
    pub fn integrate(&self, p: &Polynomial<S>) -> Result<S> {
        match self {
            XBase::Lebesgue(b) => b.integrate(p),
            XBase::Surface { facet, value, others } => {
                let restricted = p.substitute_value(Var::X(facet.axis), value);
                let mut bounds = Vec::with_capacity(others.len() + 1);
                let mut it = others.iter();
                for i in 0..p.layout().n {
                    if i == facet.axis {
                        bounds.push((S::zero(), S::one()));
                    } else {
                        bounds.push(it.next().cloned().ok_or_else(|| {
                            Error::Dimension("surface base has too few intervals".into())
                        })?);
                    }
                }
                restricted.integrate_box(&bounds)
            }
            XBase::Dirac(point) | XBase::FacetPoint { point, .. } => {
                let layout = p.layout();
                let mut full = point.clone();
                full.extend(std::iter::repeat(S::zero()).take(layout.nvars() - layout.n));
                if p.depends_on_y() || p.depends_on_z() {
                    return Err(Error::Invalid("Dirac base integrates x-only polynomials".into()));
                }
                p.eval(&full)
            }
        }
    }

    /// A few points of the base, for f64 sampling of non-vanishing polynomials.
    pub(crate) fn sample_points(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axis_levels = |lo: f64, hi: f64| -> Vec<f64> {
            (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1).max(1) as f64).collect()
        };
        let axes: Vec<Vec<f64>> = match self {
            XBase::Lebesgue(b) => b.bounds_f64().iter().map(|&(lo, hi)| axis_levels(lo, hi)).collect(),
            XBase::Surface { facet, value, others } => {
                let mut axes = Vec::new();
                let mut it = others.iter();
                for i in 0..=others.len() {
                    if i == facet.axis {
                        axes.push(vec![value.to_f64()]);
                    } else {
                        let (lo, hi) = it.next().unwrap();
                        axes.push(axis_levels(lo.to_f64(), hi.to_f64()));
                    }
                }
                axes
            }
            XBase::Dirac(p) | XBase::FacetPoint { point: p, .. } => p.iter().map(|v| vec![v.to_f64()]).collect(),
        };
        let total: usize = axes.iter().map(Vec::len).product();
        (0..total)
            .map(|mut flat| {
                let mut pt = vec![0.0; axes.len()];
                for (k, axis) in axes.iter().enumerate().rev() {
                    pt[k] = axis[flat % axis.len()];
                    flat /= axis.len();
                }
                pt
            })
            .collect()
    }
}

/// An atom with a position that is a polynomial map of `x` (entries are
/// polynomials in the problem layout that do not involve `y` or `z`).
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S: Scalar> {
    pub position: Vec<Polynomial<S>>,
    pub mass: S,
}

impl<S: Scalar> Atom<S> {
    pub fn constant(layout: VarLayout, position: Vec<S>, mass: S) -> Self {
        Atom { position: position.into_iter().map(|v| Polynomial::constant(layout, v)).collect(), mass }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurePiece<S: Scalar> {
    pub weight: S,
    pub base: XBase<S>,
    pub y_atoms: Vec<Atom<S>>,
    /// Empty for boundary measures.
    pub z_atoms: Vec<Atom<S>>,
}

/// Finite sum of product pieces; see the module docs.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure<S: Scalar> {
    layout: VarLayout,
    boundary: bool,
    pieces: Vec<MeasurePiece<S>>,
}

impl<S: Scalar> ProductMeasure<S> {
    /// Bulk measure on `Omega × R^m × R^{m×n}`.
    pub fn bulk(layout: VarLayout, pieces: Vec<MeasurePiece<S>>) -> Result<Self> {
        let m = ProductMeasure { layout, boundary: false, pieces };
        m.validate()?;
        Ok(m)
    }

    /// Boundary measure on `dOmega × R^m`.
    pub fn boundary(layout: VarLayout, pieces: Vec<MeasurePiece<S>>) -> Result<Self> {
        let m = ProductMeasure { layout, boundary: true, pieces };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.layout.n, self.layout.m);
        for (k, piece) in self.pieces.iter().enumerate() {
            let ctx = |msg: &str| Error::Invalid(format!("measure piece {k}: {msg}"));
            if piece.weight.to_f64() < 0.0 {
                return Err(ctx("negative weight"));
            }
            match &piece.base {
                XBase::Lebesgue(b) if b.dim() != n => return Err(ctx("base box has wrong dimension")),
                XBase::Surface { others, facet, .. } if others.len() + 1 != n || facet.axis >= n => {
                    return Err(ctx("surface base has wrong dimension"))
                }
                XBase::Dirac(p) | XBase::FacetPoint { point: p, .. } if p.len() != n => {
                    return Err(ctx("Dirac point has wrong dimension"))
                }
                XBase::FacetPoint { facet, .. } if facet.axis >= n => return Err(ctx("facet axis out of range")),
                XBase::FacetPoint { .. } if !self.boundary => return Err(ctx("facet point in a bulk measure")),
                XBase::Surface { .. } if !self.boundary => return Err(ctx("surface base in a bulk measure")),
                XBase::Lebesgue(_) if self.boundary => return Err(ctx("Lebesgue base in a boundary measure")),
                _ => {}
            }
            if piece.y_atoms.is_empty() {
                return Err(ctx("no y atoms"));
            }
            if self.boundary != piece.z_atoms.is_empty() {
                return Err(ctx(if self.boundary { "boundary measure with z atoms" } else { "no z atoms" }));
            }
            for (atoms, len) in [(&piece.y_atoms, m), (&piece.z_atoms, m * n)] {
                for atom in atoms {
                    if atom.mass.to_f64() < 0.0 {
                        return Err(ctx("negative atom mass"));
                    }
                    if atom.position.len() != len {
                        return Err(ctx("atom position has wrong length"));
                    }
                    if atom
                        .position
                        .iter()
                        .any(|p| p.layout() != self.layout || p.depends_on_y() || p.depends_on_z())
                    {
                        return Err(ctx("atom positions must be polynomials in x"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> VarLayout {
        self.layout
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    pub fn pieces(&self) -> &[MeasurePiece<S>] {
        &self.pieces
    }

    pub fn total_mass(&self) -> S {
        self.pieces.iter().fold(S::zero(), |acc, p| {
            let my = p.y_atoms.iter().fold(S::zero(), |a, t| a + t.mass.clone());
            let mz = if self.boundary {
                S::one()
            } else {
                p.z_atoms.iter().fold(S::zero(), |a, t| a + t.mass.clone())
            };
            acc + p.weight.clone() * p.base.mass() * my * mz
        })
    }

    /// Scales every piece weight by `c`.
    pub fn scaled(&self, c: &S) -> Self {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.weight = p.weight.clone() * c.clone();
        }
        out
    }

    /// Calls `visit(piece, composed)` for each atom combination with `test`
    /// composed along the atom positions (a polynomial in `x`), weighted by
    /// the atom masses.
    fn for_each_composed(
        &self,
        test: &Polynomial<S>,
        mut visit: impl FnMut(&MeasurePiece<S>, Polynomial<S>) -> Result<()>,
    ) -> Result<()> {
        let layout = self.layout;
        if test.layout() != layout {
            return Err(Error::Dimension("test polynomial layout differs from measure layout".into()));
        }
        let none: [Atom<S>; 1] = [Atom { position: Vec::new(), mass: S::one() }];
        for piece in &self.pieces {
            let z_atoms: &[Atom<S>] = if self.boundary { &none } else { &piece.z_atoms };
            for ya in &piece.y_atoms {
                for za in z_atoms {
                    let mut subs = Polynomial::identity_substitution(layout);
                    for j in 0..layout.m {
                        subs[layout.index(Var::Y(j))] = ya.position[j].clone();
                    }
                    for k in 0..layout.m * layout.n {
                        subs[layout.n + layout.m + k] = if self.boundary {
                            Polynomial::zero(layout)
                        } else {
                            za.position[k].clone()
                        };
                    }
                    let composed = test.compose(&subs)?.scale(&(ya.mass.clone() * za.mass.clone()));
                    visit(piece, composed)?;
                }
            }
        }
        Ok(())
    }

    /// `<test, measure>`, exact in exact arithmetic. Boundary measures
    /// evaluate `test` at `z = 0`.
    pub fn moment(&self, test: &Polynomial<S>) -> Result<S> {
        let mut total = S::zero();
        self.for_each_composed(test, |piece, composed| {
            total = total.clone() + piece.weight.clone() * piece.base.integrate(&composed)?;
            Ok(())
        })?;
        Ok(total)
    }

    /// `<phi . n_hat, nu>` for a boundary measure, using each piece's facet normal.
    pub fn normal_flux(&self, phi: &crate::poly::PolyVector<S>) -> Result<S> {
        if !self.boundary {
            return Err(Error::Invalid("normal flux needs a boundary measure".into()));
        }
        let mut total = S::zero();
        for (idx, piece) in self.pieces.iter().enumerate() {
            let facet = match &piece.base {
                XBase::Surface { facet, .. } | XBase::FacetPoint { facet, .. } => *facet,
                _ => {
                    return Err(Error::Invalid(format!("boundary piece {idx} has no facet")));
                }
            };
            let single = ProductMeasure { layout: self.layout, boundary: true, pieces: vec![piece.clone()] };
            let component = phi.get(facet.axis);
            let sign = S::from_i64(facet.normal_sign());
            total = total + sign * single.moment(component)?;
        }
        Ok(total)
    }

    /// Largest `|c|` over the atom graphs: exactly zero when `c` vanishes
    /// identically along every atom, otherwise sampled on the base.
    pub fn support_violation(&self, c: &Polynomial<S>) -> Result<f64> {
        let mut worst = 0.0f64;
        let layout = self.layout;
        self.for_each_composed(c, |piece, composed| {
            if composed.is_zero() {
                return Ok(());
            }
            let cf = composed.to_f64().compile();
            for x in piece.base.sample_points(9) {
                let mut full = x;
                full.extend(std::iter::repeat(0.0).take(layout.nvars() - layout.n));
                worst = worst.max(cf.eval(&full).abs());
            }
            Ok(())
        })?;
        Ok(worst)
    }
}

/// Returns `(∫ det z dλ, det ∫ z dλ)` for a finite atomic measure on 2×2
/// matrices (entries row-major). Unequal components show that `λ` cannot
/// be the gradient Young measure of a map whose gradient is `∫ z dλ`.
pub fn det_jensen_gap<S: Scalar>(atoms: &[(Vec<S>, S)]) -> Result<(S, S)> {
    let mut mean_det = S::zero();
    let mut mean = vec![S::zero(); 4];
    for (z, mass) in atoms {
        if z.len() != 4 {
            return Err(Error::Dimension(format!("expected 2x2 atoms, got {} entries", z.len())));
        }
        let det = z[0].clone() * z[3].clone() - z[1].clone() * z[2].clone();
        mean_det = mean_det + mass.clone() * det;
        for (acc, v) in mean.iter_mut().zip(z) {
            *acc = acc.clone() + mass.clone() * v.clone();
        }
    }
    let det_mean = mean[0].clone() * mean[3].clone() - mean[1].clone() * mean[2].clone();
    Ok((mean_det, det_mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::scalar::Exact;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn jensen_gap_examples() {
        let i = vec![q(1, 1), q(0, 1), q(0, 1), q(1, 1)];
        let mi: Vec<Exact> = i.iter().map(|v| -v.clone()).collect();
        let (a, b) = det_jensen_gap(&[(i.clone(), q(1, 2)), (mi, q(1, 2))]).unwrap();
        assert_eq!((a, b), (q(1, 1), q(0, 1)));
        let e1 = vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)];
        let e2 = vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)];
        let (a, b) = det_jensen_gap(&[(e1, q(1, 2)), (e2, q(1, 2))]).unwrap();
        assert_eq!((a, b), (q(0, 1), q(1, 4)));
        let m = vec![q(2, 1), q(3, 1), q(-1, 1), q(5, 1)];
        let (a, b) = det_jensen_gap(&[(m, q(1, 1))]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, q(13, 1));
        assert!(det_jensen_gap(&[(vec![q(1, 1)], q(1, 1))]).is_err());
    }

    #[test]
    fn moments_of_symmetric_atoms() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(q(-1, 1), q(1, 1))]).unwrap();
        let s = Exact::sqrt_int(2) / Exact::from_i64(2);
        let mu = ProductMeasure::bulk(
            l,
            vec![MeasurePiece {
                weight: q(1, 2),
                base: XBase::Lebesgue(omega),
                y_atoms: vec![Atom::constant(l, vec![s.clone()], q(1, 1)), Atom::constant(l, vec![-s], q(1, 1))],
                z_atoms: vec![Atom::constant(l, vec![q(0, 1)], q(1, 1))],
            }],
        )
        .unwrap();
        let p = |t: &str| parse_polynomial::<Exact>(t, l).unwrap();
        assert_eq!(mu.moment(&p("1")).unwrap(), q(2, 1));
        assert_eq!(mu.moment(&p("y")).unwrap(), q(0, 1));
        assert_eq!(mu.moment(&p("y^2")).unwrap(), q(1, 1));
        assert_eq!(mu.moment(&p("z^2")).unwrap(), q(0, 1));
        assert_eq!(mu.total_mass(), q(2, 1));
    }

    #[test]
    fn rejects_malformed_pieces() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(q(-1, 1), q(1, 1))]).unwrap();
        let piece = MeasurePiece {
            weight: q(-1, 1),
            base: XBase::Lebesgue(omega.clone()),
            y_atoms: vec![Atom::constant(l, vec![q(0, 1)], q(1, 1))],
            z_atoms: vec![Atom::constant(l, vec![q(0, 1)], q(1, 1))],
        };
        assert!(ProductMeasure::bulk(l, vec![piece.clone()]).is_err());
        let mut no_z = piece.clone();
        no_z.weight = q(1, 1);
        no_z.z_atoms.clear();
        assert!(ProductMeasure::bulk(l, vec![no_z]).is_err());
        let mut yz = piece;
        yz.weight = q(1, 1);
        yz.y_atoms[0].position[0] = parse_polynomial("y", l).unwrap();
        assert!(ProductMeasure::bulk(l, vec![yz]).is_err());
    }
}
