use super::{Atom, MeasurePiece, ProductMeasure, XBase};
use crate::error::{Error, Result};
use crate::poly::{PolyVector, Var, VarLayout};
use crate::problem::{BoxDomain, Facet, VariationalProblem};
use crate::scalar::Scalar;

/// A function `u: Omega -> R^m` that is polynomial on each cell of a tensor
/// grid. Cells are stored row-major (last axis fastest).
#[derive(Clone, Debug)]
pub struct PiecewiseFunction<S: Scalar> {
    layout: VarLayout,
    breakpoints: Vec<Vec<S>>,
    cells: Vec<PolyVector<S>>,
    continuous: bool,
}

impl<S: Scalar> PiecewiseFunction<S> {
    /// Builds the function and, when `continuous` is set, verifies that
    /// neighbouring pieces agree on every shared face.
    pub fn new(layout: VarLayout, breakpoints: Vec<Vec<S>>, cells: Vec<PolyVector<S>>, continuous: bool) -> Result<Self> {
        if breakpoints.len() != layout.n {
            return Err(Error::Dimension("need one breakpoint list per x axis".into()));
        }
        for (i, bp) in breakpoints.iter().enumerate() {
            if bp.len() < 2 || bp.windows(2).any(|w| !(w[0].to_f64() < w[1].to_f64())) {
                return Err(Error::Invalid(format!("breakpoints of axis {} must be strictly increasing", i + 1)));
            }
        }
        let expected: usize = breakpoints.iter().map(|b| b.len() - 1).product();
        if cells.len() != expected {
            return Err(Error::Invalid(format!("u defined on {} cells, grid has {expected}", cells.len())));
        }
        for cell in &cells {
            if cell.len() != layout.m
                || cell.iter().any(|p| p.layout() != layout || p.depends_on_y() || p.depends_on_z())
            {
                return Err(Error::Invalid("each cell needs m polynomials in x".into()));
            }
        }
        let f = PiecewiseFunction { layout, breakpoints, cells, continuous };
        if continuous {
            f.check_continuity()?;
        }
        Ok(f)
    }

    /// A single polynomial on the whole box.
    pub fn global(omega: &BoxDomain<S>, u: PolyVector<S>) -> Result<Self> {
        let layout = u.get(0).layout();
        let breakpoints = omega.bounds().iter().map(|(a, b)| vec![a.clone(), b.clone()]).collect();
        Self::new(layout, breakpoints, vec![u], true)
    }

    pub fn layout(&self) -> VarLayout {
        self.layout
    }

    pub fn breakpoints(&self) -> &[Vec<S>] {
        &self.breakpoints
    }

    pub fn cells(&self) -> &[PolyVector<S>] {
        &self.cells
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    fn divisions(&self) -> Vec<usize> {
        self.breakpoints.iter().map(|b| b.len() - 1).collect()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let div = self.divisions();
        idx.iter().zip(&div).fold(0, |acc, (i, d)| acc * d + i)
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let div = self.divisions();
        let mut idx = vec![0; div.len()];
        for k in (0..div.len()).rev() {
            idx[k] = flat % div[k];
            flat /= div[k];
        }
        idx
    }

    pub fn cell_box(&self, flat: usize) -> BoxDomain<S> {
        let idx = self.multi_index(flat);
        let bounds = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| (self.breakpoints[i][k].clone(), self.breakpoints[i][k + 1].clone()))
            .collect();
        BoxDomain::new(bounds).expect("breakpoints are strictly increasing")
    }

    fn check_continuity(&self) -> Result<()> {
        for flat in 0..self.cells.len() {
            let idx = self.multi_index(flat);
            for axis in 0..self.layout.n {
                if idx[axis] + 1 >= self.breakpoints[axis].len() - 1 {
                    continue;
                }
                let mut next = idx.clone();
                next[axis] += 1;
                let other = self.flat_index(&next);
                let at = &self.breakpoints[axis][idx[axis] + 1];
                for j in 0..self.layout.m {
                    let left = self.cells[flat].get(j).substitute_value(Var::X(axis), at);
                    let right = self.cells[other].get(j).substitute_value(Var::X(axis), at);
                    let diff = &left - &right;
                    let scale = 1.0 + left.max_abs_coeff().max(right.max_abs_coeff());
                    let agrees = diff.is_zero() || (!S::EXACT && diff.max_abs_coeff() <= 1e-10 * scale);
                    if !agrees {
                        return Err(Error::Invalid(format!(
                            "u_{} jumps across x{} = {:?} between cells {flat} and {other}",
                            j + 1,
                            axis + 1,
                            at
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates `u` at a point (f64), using the first cell that contains it.
    pub fn eval_f64(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut idx = Vec::with_capacity(x.len());
        for (axis, &v) in x.iter().enumerate() {
            let bp = &self.breakpoints[axis];
            if v < bp[0].to_f64() - 1e-12 || v > bp[bp.len() - 1].to_f64() + 1e-12 {
                return None;
            }
            let k = bp[1..bp.len() - 1].iter().take_while(|b| b.to_f64() <= v).count();
            idx.push(k);
        }
        let cell = &self.cells[self.flat_index(&idx)];
        let mut pt = x.to_vec();
        pt.extend(std::iter::repeat(0.0).take(self.layout.nvars() - self.layout.n));
        Some(cell.iter().map(|p| p.to_f64().eval(&pt).unwrap()).collect())
    }
}

/// Occupation and boundary measures generated by `u`:
/// `mu = dx ⊗ δ_{u(x)} ⊗ δ_{∇u(x)}` cell by cell and `nu = dS ⊗ δ_{u(x)}`
/// on every boundary face of every cell.
pub fn pushforward<S: Scalar>(
    u: &PiecewiseFunction<S>,
    problem: &VariationalProblem<S>,
) -> Result<(ProductMeasure<S>, ProductMeasure<S>)> {
    if !u.continuous {
        return Err(Error::Invalid("pushforward requires a continuous piecewise polynomial".into()));
    }
    let layout = problem.layout;
    if u.layout != layout {
        return Err(Error::Dimension("u layout differs from problem layout".into()));
    }
    for (axis, (lo, hi)) in problem.omega.bounds().iter().enumerate() {
        let bp = &u.breakpoints[axis];
        if &bp[0] != lo || &bp[bp.len() - 1] != hi {
            return Err(Error::Invalid(format!("u does not cover the domain along axis {}", axis + 1)));
        }
    }
    let mut mu_pieces = Vec::with_capacity(u.cells.len());
    let mut nu_pieces = Vec::new();
    for (flat, cell_u) in u.cells.iter().enumerate() {
        let cell = u.cell_box(flat);
        let mut grad = Vec::with_capacity(layout.m * layout.n);
        for j in 0..layout.m {
            for i in 0..layout.n {
                grad.push(cell_u.get(j).partial(Var::X(i)));
            }
        }
        let y_atom = Atom { position: cell_u.entries().to_vec(), mass: S::one() };
        mu_pieces.push(MeasurePiece {
            weight: S::one(),
            base: XBase::Lebesgue(cell.clone()),
            y_atoms: vec![y_atom.clone()],
            z_atoms: vec![Atom { position: grad, mass: S::one() }],
        });
        for facet in problem.omega.facets() {
            if !cell.facet_on_boundary_of(facet, &problem.omega) {
                continue;
            }
            nu_pieces.push(MeasurePiece {
                weight: S::one(),
                base: surface_base(&cell, facet),
                y_atoms: vec![y_atom.clone()],
                z_atoms: Vec::new(),
            });
        }
    }
    Ok((ProductMeasure::bulk(layout, mu_pieces)?, ProductMeasure::boundary(layout, nu_pieces)?))
}

pub(crate) fn surface_base<S: Scalar>(cell: &BoxDomain<S>, facet: Facet) -> XBase<S> {
    XBase::Surface {
        facet,
        value: cell.facet_value(facet),
        others: cell.bounds().iter().enumerate().filter(|(i, _)| *i != facet.axis).map(|(_, b)| b.clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, Polynomial};
    use crate::scalar::Exact;

    fn interval() -> BoxDomain<Exact> {
        BoxDomain::new(vec![(Exact::from_i64(-1), Exact::from_i64(1))]).unwrap()
    }

    fn poly(t: &str) -> Polynomial<Exact> {
        parse_polynomial(t, VarLayout::new(1, 1)).unwrap()
    }

    fn problem() -> VariationalProblem<Exact> {
        VariationalProblem::new("t", interval(), 1, 2.0, poly("z^2"))
    }

    #[test]
    fn zero_function_generates_point_masses() {
        let u = PiecewiseFunction::global(&interval(), PolyVector::new(vec![poly("0")]).unwrap()).unwrap();
        let (mu, nu) = pushforward(&u, &problem()).unwrap();
        assert_eq!(mu.total_mass(), Exact::from_i64(2));
        assert_eq!(nu.total_mass(), Exact::from_i64(2));
        assert_eq!(nu.pieces().len(), 2);
        assert!(mu.moment(&poly("y^2 + z^2")).unwrap().is_zero());
    }

    #[test]
    fn identity_function_odd_moment() {
        let u = PiecewiseFunction::global(&interval(), PolyVector::new(vec![poly("x")]).unwrap()).unwrap();
        let (mu, _) = pushforward(&u, &problem()).unwrap();
        assert!(mu.moment(&poly("y*z")).unwrap().is_zero());
        assert_eq!(mu.moment(&poly("y^2")).unwrap(), Exact::from_ratio(2, 3));
    }

    #[test]
    fn detects_jumps_and_rejects_discontinuous_input() {
        let l = VarLayout::new(1, 1);
        let bp = vec![vec![Exact::from_i64(-1), Exact::zero(), Exact::from_i64(1)]];
        let cells = vec![PolyVector::new(vec![poly("x")]).unwrap(), PolyVector::new(vec![poly("x + 1")]).unwrap()];
        assert!(PiecewiseFunction::new(l, bp.clone(), cells.clone(), true).is_err());
        let u = PiecewiseFunction::new(l, bp.clone(), cells, false).unwrap();
        assert!(pushforward(&u, &problem()).is_err());
        let hat = vec![PolyVector::new(vec![poly("1 + x")]).unwrap(), PolyVector::new(vec![poly("1 - x")]).unwrap()];
        let u = PiecewiseFunction::new(l, bp, hat, true).unwrap();
        let (mu, nu) = pushforward(&u, &problem()).unwrap();
        assert_eq!(mu.moment(&poly("z^2")).unwrap(), Exact::from_i64(2));
        assert!(nu.moment(&poly("y")).unwrap().is_zero());
        assert_eq!(u.eval_f64(&[0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn missing_cell_is_an_error() {
        let l = VarLayout::new(1, 1);
        let bp = vec![vec![Exact::from_i64(-1), Exact::zero(), Exact::from_i64(1)]];
        let cells = vec![PolyVector::new(vec![poly("x")]).unwrap()];
        assert!(PiecewiseFunction::new(l, bp, cells, true).is_err());
    }
}
