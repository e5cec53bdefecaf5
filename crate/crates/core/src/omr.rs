//! Occupation-measure relaxation on truncated grids.
//!
//! The bulk measure is approximated by non-negative weights on nodes
//! `(x_q, y, z)` where `x_q` runs over Gauss points of a uniform cell
//! partition of the domain and `(y, z)` over a tensor grid in
//! `[-R, R]^m × [-R, R]^{m×n}` plus user-supplied special nodes. The boundary
//! measure lives on Gauss points of the facet cells times the `y` grid.
//! Marginals are imposed per cell and through polynomial test functions;
//! divergence rows use a monomial or Legendre basis of test fields. The optimum is an
//! estimate of the relaxation value, not a certified bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense, VarBound};
use crate::measures::{
    check_membership, default_h_basis, default_l_basis, default_phi_basis, monomials_up_to, Atom, MeasurePiece, MembershipReport,
    ProductMeasure, XBase,
};
use crate::poly::{CompiledPoly, Polynomial, PolyVector, Var, VarLayout};
use crate::problem::{total_divergence, Facet, GridSection, VariationalProblem};
use crate::sampling::gauss_on;

#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Cells per `x` axis.
    pub cells: Vec<usize>,
    /// Gauss points per axis and cell.
    pub gauss: usize,
    pub radius: f64,
    /// Uniform nodes per `y` component on `[-R, R]` (1 means `{0}`).
    pub y_nodes: usize,
    /// Uniform nodes per `z` entry on `[-R, R]`.
    pub z_nodes: usize,
    pub y_special: Vec<Vec<f64>>,
    /// Row-major `z` matrices.
    pub z_special: Vec<Vec<f64>>,
    pub support_tol: f64,
}

/// Test functions used to assemble the LP rows.
#[derive(Clone, Debug)]
pub struct OmrBases {
    pub phi: Vec<(String, PolyVector<f64>)>,
    pub h: Vec<(String, Polynomial<f64>)>,
    pub l: Vec<(String, Polynomial<f64>)>,
}

impl OmrBases {
    /// Monomial bases; `l` uses the same degree as `h`.
    pub fn monomial(layout: VarLayout, phi_degree: u32, h_degree: u32) -> Self {
        OmrBases {
            phi: default_phi_basis(layout, phi_degree),
            h: default_h_basis(layout, h_degree),
            l: default_l_basis(layout, h_degree),
        }
    }

    /// Same spans as [`Self::monomial`], built from products of Legendre
    /// polynomials mapped to `omega` in `x` and to `[-radius, radius]` in `y`.
    /// The LP is equivalent but far better conditioned at high degree.
    pub fn legendre(layout: VarLayout, omega: &[(f64, f64)], radius: f64, phi_degree: u32, h_degree: u32) -> Self {
        let top = phi_degree.max(h_degree) as usize;
        let tables: Vec<Vec<Polynomial<f64>>> = (0..layout.n + layout.m)
            .map(|k| {
                let (lo, hi) = if k < layout.n { omega[k] } else { (-radius, radius) };
                legendre_table(layout, layout.var(k), lo, hi, top)
            })
            .collect();
        let product = |exps: &[u16]| {
            exps.iter().enumerate().fold(Polynomial::one(layout), |acc, (k, &e)| &acc * &tables[k][e as usize])
        };
        let mut phi = Vec::new();
        for exps in monomials_up_to(layout.n + layout.m, phi_degree) {
            let p = product(&exps);
            for i in 0..layout.n {
                let mut v = PolyVector::zeros(layout, layout.n);
                v.set(i, p.clone());
                phi.push((format!("P{exps:?} e{}", i + 1), v));
            }
        }
        let h: Vec<(String, Polynomial<f64>)> = monomials_up_to(layout.n, h_degree)
            .into_iter()
            .map(|exps| {
                let mut full = exps.clone();
                full.resize(layout.n + layout.m, 0);
                (format!("P{exps:?}"), product(&full))
            })
            .collect();
        OmrBases { phi, l: h.clone(), h }
    }

    /// Bases named in the grid section (`basis = "monomial"` or `"legendre"`).
    pub fn from_section(section: &GridSection, problem: &VariationalProblem<f64>, spec: &GridSpec) -> Result<Self> {
        let phi_degree = section.phi_degree.unwrap_or(DEFAULT_PHI_DEGREE);
        let h_degree = section.h_degree.unwrap_or(DEFAULT_H_DEGREE);
        match section.basis.as_deref() {
            None | Some("monomial") => Ok(Self::monomial(problem.layout, phi_degree, h_degree)),
            Some("legendre") => {
                Ok(Self::legendre(problem.layout, &problem.omega.bounds_f64(), spec.radius, phi_degree, h_degree))
            }
            Some(other) => Err(Error::Parse(format!("unknown basis {other:?}; use \"monomial\" or \"legendre\""))),
        }
    }
}

pub const DEFAULT_PHI_DEGREE: u32 = 3;
pub const DEFAULT_H_DEGREE: u32 = 2;

impl GridSpec {
    /// Grid from a problem-file section; unset fields take defaults, with
    /// `R = 4 (1 + amplitude)`.
    pub fn from_section(section: &GridSection, layout: VarLayout) -> Result<Self> {
        let amplitude = section.amplitude.unwrap_or(1.0);
        let radius = match &section.radius {
            Some(r) => r.to_scalar::<f64>()?,
            None => 4.0 * (1.0 + amplitude),
        };
        let phi_degree = section.phi_degree.unwrap_or(DEFAULT_PHI_DEGREE);
        let h_degree = section.h_degree.unwrap_or(DEFAULT_H_DEGREE);
        let needed = phi_degree.max(h_degree) as usize;
        let parse_points = |pts: &Option<Vec<Vec<crate::problem::NumberText>>>| -> Result<Vec<Vec<f64>>> {
            pts.iter().flatten().map(|p| p.iter().map(|v| v.to_scalar::<f64>()).collect()).collect()
        };
        let spec = GridSpec {
            cells: section.cells.clone().unwrap_or_else(|| vec![4; layout.n]),
            gauss: section.gauss.unwrap_or(needed / 2 + 1),
            radius,
            y_nodes: section.y_nodes.unwrap_or(9),
            z_nodes: section.z_nodes.unwrap_or(9),
            y_special: parse_points(&section.y_special)?,
            z_special: parse_points(&section.z_special)?,
            support_tol: section.support_tol.unwrap_or(1e-9),
        };
        spec.validate(layout)?;
        Ok(spec)
    }

    pub fn validate(&self, layout: VarLayout) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Invalid(format!("truncation radius must be positive, got {}", self.radius)));
        }
        if self.cells.len() != layout.n || self.cells.iter().any(|&c| c == 0) || self.gauss == 0 {
            return Err(Error::Invalid("grid needs positive cell counts for every x axis and gauss >= 1".into()));
        }
        for (label, pts, len) in [("y", &self.y_special, layout.m), ("z", &self.z_special, layout.m * layout.n)] {
            for p in pts {
                if p.len() != len {
                    return Err(Error::Dimension(format!("special {label} node has {} entries, expected {len}", p.len())));
                }
                if p.iter().any(|v| v.abs() > self.radius + 1e-12) {
                    return Err(Error::Invalid(format!("special {label} node {p:?} lies outside the truncation box")));
                }
            }
        }
        Ok(())
    }

    fn levels(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![0.0],
            k => (0..k).map(|i| -self.radius + 2.0 * self.radius * i as f64 / (k - 1) as f64).collect(),
        }
    }

    fn tensor(&self, count: usize, dim: usize, special: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let levels = self.levels(count);
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        if levels.is_empty() {
            out.clear();
        } else {
            for _ in 0..dim {
                out = out
                    .into_iter()
                    .flat_map(|p| {
                        levels.iter().map(move |&v| {
                            let mut q = p.clone();
                            q.push(v);
                            q
                        })
                    })
                    .collect();
            }
        }
        for s in special {
            if !out.iter().any(|p| p == s) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn y_grid(&self, m: usize) -> Vec<Vec<f64>> {
        self.tensor(self.y_nodes, m, &self.y_special)
    }

    pub fn z_grid(&self, m: usize, n: usize) -> Vec<Vec<f64>> {
        self.tensor(self.z_nodes, m * n, &self.z_special)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BulkNode {
    pub cell: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryNode {
    pub facet: Facet,
    /// Index of the facet cell within all boundary cells.
    pub cell: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// The LP columns: bulk nodes first, then boundary nodes.
#[derive(Clone, Debug)]
pub struct OmrGrid {
    pub layout: VarLayout,
    pub bulk: Vec<BulkNode>,
    pub boundary: Vec<BoundaryNode>,
    pub cell_volumes: Vec<f64>,
    pub facet_cell_measures: Vec<f64>,
}

/// Non-negative node weights; the LP variable.
#[derive(Clone, Debug)]
pub struct GridMeasurePair {
    pub grid: OmrGrid,
    pub w_mu: Vec<f64>,
    pub w_nu: Vec<f64>,
}

impl GridMeasurePair {
    /// Zeroes weights below `threshold`.
    pub fn thresholded(&self, threshold: f64) -> Self {
        let cut = |w: &Vec<f64>| w.iter().map(|&v| if v < threshold { 0.0 } else { v }).collect();
        GridMeasurePair { grid: self.grid.clone(), w_mu: cut(&self.w_mu), w_nu: cut(&self.w_nu) }
    }

    /// Bulk measure as a sum of Dirac pieces and boundary measure as facet points.
    pub fn to_measures(&self) -> Result<(ProductMeasure<f64>, ProductMeasure<f64>)> {
        let layout = self.grid.layout;
        let mu = self
            .grid
            .bulk
            .iter()
            .zip(&self.w_mu)
            .filter(|(_, w)| **w > 0.0)
            .map(|(node, w)| MeasurePiece {
                weight: *w,
                base: XBase::Dirac(node.x.clone()),
                y_atoms: vec![Atom::constant(layout, node.y.clone(), 1.0)],
                z_atoms: vec![Atom::constant(layout, node.z.clone(), 1.0)],
            })
            .collect();
        let nu = self
            .grid
            .boundary
            .iter()
            .zip(&self.w_nu)
            .filter(|(_, w)| **w > 0.0)
            .map(|(node, w)| MeasurePiece {
                weight: *w,
                base: XBase::FacetPoint { facet: node.facet, point: node.x.clone() },
                y_atoms: vec![Atom::constant(layout, node.y.clone(), 1.0)],
                z_atoms: Vec::new(),
            })
            .collect();
        Ok((ProductMeasure::bulk(layout, mu)?, ProductMeasure::boundary(layout, nu)?))
    }

    /// Bulk mass carried by each distinct `z` node, as fractions of the total,
    /// largest first.
    pub fn z_mass_fractions(&self) -> Vec<(Vec<f64>, f64)> {
        let total: f64 = self.w_mu.iter().sum();
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for (node, w) in self.grid.bulk.iter().zip(&self.w_mu) {
            if *w <= 0.0 {
                continue;
            }
            match out.iter_mut().find(|(z, _)| *z == node.z) {
                Some(entry) => entry.1 += w,
                None => out.push((node.z.clone(), *w)),
            }
        }
        for e in &mut out {
            e.1 /= total;
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)));
        out
    }

    /// Same as [`Self::z_mass_fractions`] for `y` nodes of the bulk measure.
    pub fn y_mass_fractions(&self) -> Vec<(Vec<f64>, f64)> {
        let total: f64 = self.w_mu.iter().sum();
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for (node, w) in self.grid.bulk.iter().zip(&self.w_mu) {
            if *w <= 0.0 {
                continue;
            }
            match out.iter_mut().find(|(y, _)| *y == node.y) {
                Some(entry) => entry.1 += w,
                None => out.push((node.y.clone(), *w)),
            }
        }
        for e in &mut out {
            e.1 /= total;
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)));
        out
    }
}

/// `P_0, .., P_top` in the variable `v` rescaled from `[lo, hi]` to `[-1, 1]`.
fn legendre_table(layout: VarLayout, v: Var, lo: f64, hi: f64, top: usize) -> Vec<Polynomial<f64>> {
    let mut t = Polynomial::var(layout, v).scale(&(2.0 / (hi - lo)));
    t.add_scaled(&Polynomial::one(layout), &(-(hi + lo) / (hi - lo)));
    let mut out = vec![Polynomial::one(layout), t.clone()];
    for k in 1..top {
        let kf = k as f64;
        let mut next = (&t * &out[k]).scale(&((2.0 * kf + 1.0) / (kf + 1.0)));
        next.add_scaled(&out[k - 1], &(-kf / (kf + 1.0)));
        out.push(next);
    }
    out.truncate(top + 1);
    out
}

/// Tensor Gauss points of a box with the product weights.
fn gauss_box(bounds: &[(f64, f64)], count: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for &(lo, hi) in bounds {
        let rule = gauss_on(count, lo, hi);
        out = out
            .into_iter()
            .flat_map(|(p, w)| {
                rule.iter().map(move |&(x, wx)| {
                    let mut q = p.clone();
                    q.push(x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    out
}

/// Enumerates the grid nodes that satisfy the support constraints.
pub fn build_grid(problem: &VariationalProblem<f64>, spec: &GridSpec) -> Result<OmrGrid> {
    let layout = problem.layout;
    spec.validate(layout)?;
    let (n, m) = (layout.n, layout.m);
    let ys = spec.y_grid(m);
    let zs = spec.z_grid(m, n);
    if ys.is_empty() {
        return Err(Error::Infeasible("the y grid is empty, so no measure can carry the x marginal".into()));
    }
    if zs.is_empty() {
        return Err(Error::Infeasible("the z grid is empty, so no bulk measure can carry the x marginal".into()));
    }
    let c = problem.c.compile();
    let d = problem.d.compile();
    let cells = problem.omega.cells(&spec.cells)?;
    let mut bulk = Vec::new();
    let mut cell_volumes = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        cell_volumes.push(cell.volume());
        for (x, _) in gauss_box(&cell.bounds_f64(), spec.gauss) {
            for y in &ys {
                for z in &zs {
                    let pt = layout.flatten(&x, y, z)?;
                    if c.eval(&pt).abs() <= spec.support_tol {
                        bulk.push(BulkNode { cell: ci, x: x.clone(), y: y.clone(), z: z.clone() });
                    }
                }
            }
        }
    }
    let mut boundary = Vec::new();
    let mut facet_cell_measures = Vec::new();
    let zero_z = vec![0.0; m * n];
    for facet in problem.omega.facets() {
        for cell in cells.iter().filter(|c| c.facet_on_boundary_of(facet, &problem.omega)) {
            let fc = facet_cell_measures.len();
            facet_cell_measures.push(cell.facet_measure(facet));
            let others: Vec<(f64, f64)> =
                cell.bounds_f64().iter().enumerate().filter(|(i, _)| *i != facet.axis).map(|(_, b)| *b).collect();
            let value = problem.omega.facet_value(facet);
            for (xo, _) in gauss_box(&others, spec.gauss) {
                let mut x = xo.clone();
                x.insert(facet.axis, value);
                for y in &ys {
                    let pt = layout.flatten(&x, y, &zero_z)?;
                    if d.eval(&pt).abs() <= spec.support_tol {
                        boundary.push(BoundaryNode { facet, cell: fc, x: x.clone(), y: y.clone() });
                    }
                }
            }
        }
    }
    if bulk.is_empty() {
        return Err(Error::EmptySupport("no bulk grid node satisfies |c| <= support tolerance".into()));
    }
    if boundary.is_empty() {
        return Err(Error::EmptySupport("no boundary grid node satisfies |d| <= support tolerance".into()));
    }
    Ok(OmrGrid { layout, bulk, boundary, cell_volumes, facet_cell_measures })
}

/// Row labels of the assembled program, in order.
#[derive(Clone, Debug)]
pub struct OmrRows {
    pub labels: Vec<String>,
}

/// Assembles the grid LP. Columns are `grid.bulk` then `grid.boundary`.
pub fn build_omr_lp(
    problem: &VariationalProblem<f64>,
    grid: &OmrGrid,
    bases: &OmrBases,
) -> Result<(LinearProgram, OmrRows)> {
    problem.validate()?;
    let layout = problem.layout;
    let (nb, ns) = (grid.bulk.len(), grid.boundary.len());
    let ncols = nb + ns;
    let zero_z = vec![0.0; layout.m * layout.n];
    let bulk_pts: Vec<Vec<f64>> =
        grid.bulk.iter().map(|nd| layout.flatten(&nd.x, &nd.y, &nd.z)).collect::<Result<_>>()?;
    let bnd_pts: Vec<Vec<f64>> =
        grid.boundary.iter().map(|nd| layout.flatten(&nd.x, &nd.y, &zero_z)).collect::<Result<_>>()?;

    let eval_bulk = |p: &CompiledPoly| -> Vec<f64> { bulk_pts.par_iter().map(|pt| p.eval(pt)).collect() };
    let eval_bnd = |p: &CompiledPoly| -> Vec<f64> { bnd_pts.par_iter().map(|pt| p.eval(pt)).collect() };
    let joined = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.into_iter().chain(b).collect() };

    let mut cost = eval_bulk(&problem.f.compile());
    cost.extend(eval_bnd(&problem.g.compile()));
    let mut lp = LinearProgram::new(Sense::Minimize, cost, vec![VarBound::NonNegative; ncols]);
    let mut labels = Vec::new();

    for (ci, vol) in grid.cell_volumes.iter().enumerate() {
        let entries: Vec<(usize, f64)> =
            grid.bulk.iter().enumerate().filter(|(_, nd)| nd.cell == ci).map(|(k, _)| (k, 1.0)).collect();
        lp.add_sparse_row(&entries, Relation::Eq, *vol);
        labels.push(format!("mass_cell[{ci}]"));
    }
    for (fi, meas) in grid.facet_cell_measures.iter().enumerate() {
        let entries: Vec<(usize, f64)> =
            grid.boundary.iter().enumerate().filter(|(_, nd)| nd.cell == fi).map(|(k, _)| (nb + k, 1.0)).collect();
        lp.add_sparse_row(&entries, Relation::Eq, *meas);
        labels.push(format!("mass_facet_cell[{fi}]"));
    }
    for (label, h) in &bases.h {
        if h.degree() == 0 {
            continue;
        }
        let row = joined(eval_bulk(&h.compile()), vec![0.0; ns]);
        lp.add_row(row, Relation::Eq, problem.omega.integrate(h)?);
        labels.push(format!("marginal_mu[{label}]"));
    }
    for (label, l) in &bases.l {
        if l.degree() == 0 {
            continue;
        }
        let row = joined(vec![0.0; nb], eval_bnd(&l.compile()));
        lp.add_row(row, Relation::Eq, problem.omega.integrate_boundary(l)?);
        labels.push(format!("marginal_nu[{label}]"));
    }
    for (k, ((a, b), r)) in problem.a.iter().zip(&problem.b).zip(&problem.rhs).enumerate() {
        let row = joined(eval_bulk(&a.compile()), eval_bnd(&b.compile()));
        lp.add_row(row, Relation::Eq, *r);
        labels.push(format!("integral[{k}]"));
    }
    let facets = problem.omega.facets();
    for (label, phi) in &bases.phi {
        let d_phi = total_divergence(phi, layout)?.compile();
        let flux: Vec<CompiledPoly> =
            facets.iter().map(|&f| problem.omega.normal_component(phi, f).compile()).collect();
        let mut row = eval_bulk(&d_phi);
        let bnd: Vec<f64> = grid
            .boundary
            .par_iter()
            .zip(&bnd_pts)
            .map(|(nd, pt)| {
                let fi = facets.iter().position(|f| *f == nd.facet).expect("facet of the domain");
                -flux[fi].eval(pt)
            })
            .collect();
        row.extend(bnd);
        lp.add_row(row, Relation::Eq, 0.0);
        labels.push(format!("divergence[{label}]"));
    }
    Ok((lp, OmrRows { labels }))
}

#[derive(Clone, Debug)]
pub struct OmrSolution {
    pub value: f64,
    pub measures: GridMeasurePair,
    pub rows: usize,
    pub columns: usize,
    pub iterations: usize,
    pub duality_gap: f64,
}

/// Builds the grid, assembles and solves the LP.
pub fn solve_omr(problem: &VariationalProblem<f64>, spec: &GridSpec, bases: &OmrBases) -> Result<OmrSolution> {
    let grid = build_grid(problem, spec)?;
    let (lp, rows) = build_omr_lp(problem, &grid, bases)?;
    log::info!("omr: {} rows, {} bulk + {} boundary nodes", lp.num_rows(), grid.bulk.len(), grid.boundary.len());
    let sol = lp::solve(&lp)?;
    match &sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible | LpStatus::InfeasibleOrUnbounded => {
            return Err(Error::Infeasible(format!(
                "grid LP infeasible ({} rows incl. {} marginal/divergence rows, {} bulk and {} boundary nodes, R = {}); \
                 the grid is too coarse to meet the marginal and divergence constraints",
                lp.num_rows(),
                rows.labels.len(),
                grid.bulk.len(),
                grid.boundary.len(),
                spec.radius
            )))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded("grid LP is unbounded".into())),
        LpStatus::NumericalFailure(msg) => return Err(Error::Numerical(format!("grid LP: {msg}"))),
    }
    let duality_gap = lp::check_duality_gap(&lp, &sol)?;
    let nb = grid.bulk.len();
    let clamp = |v: &f64| v.max(0.0);
    let measures = GridMeasurePair {
        w_mu: sol.x[..nb].iter().map(clamp).collect(),
        w_nu: sol.x[nb..].iter().map(clamp).collect(),
        grid,
    };
    Ok(OmrSolution {
        value: sol.objective,
        measures,
        rows: lp.num_rows(),
        columns: lp.num_cols(),
        iterations: sol.iterations,
        duality_gap,
    })
}

/// Drops weights below `1e-12` and re-checks the measures against the
/// membership test with the same bases used in assembly.
pub fn extract_measure(
    sol: &OmrSolution,
    problem: &VariationalProblem<f64>,
    bases: &OmrBases,
) -> Result<(GridMeasurePair, MembershipReport<f64>)> {
    let pair = sol.measures.thresholded(1e-12);
    let (mu, nu) = pair.to_measures()?;
    let report = check_membership(&mu, &nu, problem, &bases.phi, &bases.h, &bases.l)?;
    Ok((pair, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::problem::BoxDomain;

    fn interval_problem(f: &str) -> VariationalProblem<f64> {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        VariationalProblem::new("t", omega, 1, 2.0, parse_polynomial(f, l).unwrap()).with_dirichlet()
    }

    fn spec() -> GridSpec {
        GridSpec {
            cells: vec![4],
            gauss: 2,
            radius: 2.0,
            y_nodes: 5,
            z_nodes: 5,
            y_special: vec![],
            z_special: vec![],
            support_tol: 1e-9,
        }
    }

    #[test]
    fn zero_function_is_optimal_for_squared_gradient() {
        let problem = interval_problem("z^2");
        let bases = OmrBases::monomial(problem.layout, 3, 2);
        let sol = solve_omr(&problem, &spec(), &bases).unwrap();
        assert!(sol.value.abs() < 1e-12);
        let (pair, rep) = extract_measure(&sol, &problem, &bases).unwrap();
        assert!(rep.within(1e-9), "{:?}", rep.rows());
        assert!((rep.objective - sol.value).abs() < 1e-9);
        assert_eq!(pair.z_mass_fractions()[0].0, vec![0.0]);
    }

    #[test]
    fn empty_z_grid_is_infeasible() {
        let problem = interval_problem("z^2");
        let mut s = spec();
        s.z_nodes = 0;
        let err = solve_omr(&problem, &s, &OmrBases::monomial(problem.layout, 2, 1)).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn special_nodes_must_lie_in_the_box() {
        let mut s = spec();
        s.y_special = vec![vec![3.0]];
        assert!(s.validate(VarLayout::new(1, 1)).is_err());
    }

    #[test]
    fn all_zero_weights_violate_the_mass_marginal() {
        let problem = interval_problem("z^2");
        let bases = OmrBases::monomial(problem.layout, 2, 1);
        let sol = solve_omr(&problem, &spec(), &bases).unwrap();
        let mut zeroed = sol.clone();
        zeroed.measures.w_mu.iter_mut().for_each(|w| *w = 0.0);
        let (_, rep) = extract_measure(&zeroed, &problem, &bases).unwrap();
        assert!(!rep.within(1e-6));
        assert!((rep.marginal_mu_residuals[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn more_test_fields_never_lower_the_value() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let f = parse_polynomial("z^2 + y^2 - 2*x*y + x^2", l).unwrap();
        let problem = VariationalProblem::new("t", omega, 1, 2.0, f).with_dirichlet();
        let mut last = f64::NEG_INFINITY;
        for deg in 1..=3 {
            let v = solve_omr(&problem, &spec(), &OmrBases::monomial(l, deg, 2)).unwrap().value;
            assert!(v >= last - 1e-9, "degree {deg}: {v} < {last}");
            last = v;
        }
    }
}
