use std::fmt;

use crate::error::{Error, Result};
use crate::poly::{Polynomial, PolyVector, Var};
use crate::scalar::Scalar;

/// A boundary facet of a box: the face `x_axis = hi` (`upper`) or `x_axis = lo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facet {
    pub axis: usize,
    pub upper: bool,
}

impl Facet {
    /// Sign of the outward normal along `axis`.
    pub fn normal_sign(&self) -> i64 {
        if self.upper {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}={}", self.axis + 1, if self.upper { "hi" } else { "lo" })
    }
}

/// Axis-aligned box `prod_i (lo_i, hi_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain<S: Scalar> {
    bounds: Vec<(S, S)>,
}

impl<S: Scalar> BoxDomain<S> {
    pub fn new(bounds: Vec<(S, S)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Invalid("domain needs at least one axis".into()));
        }
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.to_f64() < hi.to_f64()) {
                return Err(Error::Invalid(format!("axis {} has empty interval", i + 1)));
            }
        }
        Ok(BoxDomain { bounds })
    }

    pub fn unit(n: usize) -> Self {
        BoxDomain { bounds: vec![(S::zero(), S::one()); n] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(S, S)] {
        &self.bounds
    }

    pub fn bounds_f64(&self) -> Vec<(f64, f64)> {
        self.bounds.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect()
    }

    pub fn volume(&self) -> S {
        self.bounds.iter().fold(S::one(), |acc, (lo, hi)| acc * (hi.clone() - lo.clone()))
    }

    pub fn facets(&self) -> Vec<Facet> {
        (0..self.dim()).flat_map(|axis| [Facet { axis, upper: false }, Facet { axis, upper: true }]).collect()
    }

    /// Coordinate of the facet along its axis.
    pub fn facet_value(&self, facet: Facet) -> S {
        let (lo, hi) = &self.bounds[facet.axis];
        if facet.upper {
            hi.clone()
        } else {
            lo.clone()
        }
    }

    /// `(n-1)`-dimensional measure of a facet; facets of an interval are points of measure 1.
    pub fn facet_measure(&self, facet: Facet) -> S {
        self.bounds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != facet.axis)
            .fold(S::one(), |acc, (_, (lo, hi))| acc * (hi.clone() - lo.clone()))
    }

    pub fn boundary_measure(&self) -> S {
        self.facets().into_iter().fold(S::zero(), |acc, f| acc + self.facet_measure(f))
    }

    pub fn integrate(&self, p: &Polynomial<S>) -> Result<S> {
        p.integrate_box(&self.bounds)
    }

    /// Surface integral of an `x`-only polynomial over one facet.
    pub fn integrate_facet(&self, p: &Polynomial<S>, facet: Facet) -> Result<S> {
        let restricted = p.substitute_value(Var::X(facet.axis), &self.facet_value(facet));
        let mut bounds = self.bounds.clone();
        bounds[facet.axis] = (S::zero(), S::one());
        restricted.integrate_box(&bounds)
    }

    pub fn integrate_boundary(&self, p: &Polynomial<S>) -> Result<S> {
        let mut total = S::zero();
        for f in self.facets() {
            total = total + self.integrate_facet(p, f)?;
        }
        Ok(total)
    }

    /// `phi . n_hat` on a facet, i.e. `+-phi_axis`.
    pub fn normal_component(&self, phi: &PolyVector<S>, facet: Facet) -> Polynomial<S> {
        let entry = phi.get(facet.axis);
        if facet.upper {
            entry.clone()
        } else {
            -entry
        }
    }

    /// Uniform partition into `divisions[i]` cells per axis, in row-major order
    /// (last axis fastest).
    pub fn cells(&self, divisions: &[usize]) -> Result<Vec<BoxDomain<S>>> {
        if divisions.len() != self.dim() || divisions.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("cell divisions must be positive, one per axis".into()));
        }
        let axis_cells: Vec<Vec<(S, S)>> = self
            .bounds
            .iter()
            .zip(divisions)
            .map(|((lo, hi), &d)| {
                let step = (hi.clone() - lo.clone()) / S::from_i64(d as i64);
                (0..d)
                    .map(|k| {
                        let a = lo.clone() + step.clone() * S::from_i64(k as i64);
                        let b = if k + 1 == d { hi.clone() } else { lo.clone() + step.clone() * S::from_i64(k as i64 + 1) };
                        (a, b)
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.dim()];
        loop {
            out.push(BoxDomain { bounds: idx.iter().enumerate().map(|(i, &k)| axis_cells[i][k].clone()).collect() });
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < divisions[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    /// True when `facet` of this sub-box lies on `facet` of `outer`.
    pub fn facet_on_boundary_of(&self, facet: Facet, outer: &BoxDomain<S>) -> bool {
        self.facet_value(facet) == outer.facet_value(facet)
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= lo.to_f64() - tol && *v <= hi.to_f64() + tol)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BoxDomain<T> {
        BoxDomain { bounds: self.bounds.iter().map(|(a, b)| (f(a), f(b))).collect() }
    }

    pub fn to_f64(&self) -> BoxDomain<f64> {
        self.map(|v| v.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, VarLayout};
    use crate::scalar::Exact;

    #[test]
    fn interval_boundary_is_two_points() {
        let d = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap();
        assert_eq!(d.volume(), Exact::from_i64(2));
        assert_eq!(d.boundary_measure(), Exact::from_i64(2));
        let l = VarLayout::new(1, 1);
        let p = parse_polynomial::<Exact>("x^3 + 1", l).unwrap();
        assert_eq!(d.integrate_boundary(&p).unwrap(), Exact::from_i64(2));
    }

    #[test]
    fn square_facets() {
        let d = BoxDomain::<Exact>::unit(2);
        assert_eq!(d.facets().len(), 4);
        assert_eq!(d.boundary_measure(), Exact::from_i64(4));
        let l = VarLayout::new(2, 1);
        let p = parse_polynomial::<Exact>("x1*x2", l).unwrap();
        let top = Facet { axis: 1, upper: true };
        assert_eq!(d.integrate_facet(&p, top).unwrap(), Exact::from_ratio(1, 2));
    }

    #[test]
    fn cells_tile_the_box() {
        let d = BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1)), (Exact::zero(), Exact::one())]).unwrap();
        let cells = d.cells(&[4, 3]).unwrap();
        assert_eq!(cells.len(), 12);
        let total = cells.iter().fold(Exact::zero(), |acc, c| acc + c.volume());
        assert_eq!(total, d.volume());
        assert!(d.cells(&[0, 1]).is_err());
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(BoxDomain::new(vec![(1.0, 1.0)]).is_err());
    }
}
