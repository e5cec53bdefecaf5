//! Pointwise dual relaxation: polynomial certificates `(phi, eta, h, l)`
//! with `F >= 0` on the bulk set and `G >= 0` on the boundary set prove
//! the lower bound `int h + int l`.
//!
//! Certificates are found by a collocation LP (nonnegativity imposed at
//! nodes, refined by exchange rounds that add the worst points found) and
//! then certified by estimating the minima of `F` and `G` and shifting `h`
//! and `l` down by any negativity. The minima come from dense sampling and
//! local descent on the truncated sets, so a certified value is as reliable
//! as that search.

mod file;
mod search;

pub use file::{CertificateFile, VerificationEntry};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense, VarBound};
use crate::measures::default_h_basis;
use crate::poly::{Polynomial, PolyVector, Var, VarLayout};
use crate::problem::{dirichlet_constraint, total_divergence, Facet, PdrSection, VariationalProblem};
use search::{search_minima, Objective};

/// Shape of the test field `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ansatz {
    /// All monomials `x^a y^b e_i` up to the degree.
    Full,
    /// `phi_i = sum_j sigma_ij(x) y_j`: monomials of degree one in `y`.
    SigmaY,
}

impl std::str::FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ansatz::Full),
            "sigma_y" => Ok(Ansatz::SigmaY),
            other => Err(Error::Parse(format!("unknown ansatz {other:?}; use \"full\" or \"sigma_y\""))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PdrSpec {
    pub phi_degree: u32,
    pub h_degree: u32,
    /// Degree of `l` per facet; ignored for Dirichlet problems, where `l = 0`.
    pub l_degree: u32,
    pub ansatz: Ansatz,
    /// Chebyshev-Lobatto collocation nodes per `x` axis.
    pub x_nodes: usize,
    pub y_nodes: usize,
    pub z_nodes: usize,
    pub radius: f64,
    pub y_special: Vec<Vec<f64>>,
    pub z_special: Vec<Vec<f64>>,
    pub exchange_rounds: usize,
    /// Verification samples per phase-space variable.
    pub verify_samples: usize,
    /// Second LP stage choosing the optimal certificate of least l1 norm.
    pub regularize: bool,
    pub support_tol: f64,
}

impl Default for PdrSpec {
    fn default() -> Self {
        PdrSpec {
            phi_degree: 3,
            h_degree: 4,
            l_degree: 2,
            ansatz: Ansatz::Full,
            x_nodes: 9,
            y_nodes: 9,
            z_nodes: 9,
            radius: 4.0,
            y_special: Vec::new(),
            z_special: Vec::new(),
            exchange_rounds: 4,
            verify_samples: 4096,
            regularize: true,
            support_tol: 1e-9,
        }
    }
}

impl PdrSpec {
    pub fn from_section(section: &PdrSection) -> Result<Self> {
        let d = PdrSpec::default();
        let spec = PdrSpec {
            phi_degree: section.phi_degree.unwrap_or(d.phi_degree),
            h_degree: section.h_degree.unwrap_or(d.h_degree),
            l_degree: section.l_degree.unwrap_or(d.l_degree),
            ansatz: match &section.ansatz {
                Some(a) => a.parse()?,
                None => d.ansatz,
            },
            x_nodes: section.x_nodes.unwrap_or_else(|| d.x_nodes.max(section.h_degree.unwrap_or(0) as usize + 5)),
            y_nodes: section.y_nodes.unwrap_or(d.y_nodes),
            z_nodes: section.z_nodes.unwrap_or(d.z_nodes),
            radius: section.radius.unwrap_or(d.radius),
            y_special: Vec::new(),
            z_special: Vec::new(),
            exchange_rounds: section.exchange_rounds.unwrap_or(d.exchange_rounds),
            verify_samples: section.verify_samples.unwrap_or(d.verify_samples),
            regularize: section.regularize.unwrap_or(d.regularize),
            support_tol: d.support_tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Invalid("collocation radius must be positive".into()));
        }
        if self.x_nodes < 2 || self.y_nodes == 0 || self.z_nodes == 0 {
            return Err(Error::Invalid("collocation needs x_nodes >= 2 and nonempty y, z grids".into()));
        }
        if self.ansatz == Ansatz::SigmaY && self.phi_degree == 0 {
            return Err(Error::Invalid("sigma_y ansatz needs phi_degree >= 1".into()));
        }
        Ok(())
    }
}

/// Result of certification.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub radius: f64,
    pub samples: usize,
    /// Estimated minimum of `F` on the truncated bulk set and where it occurs.
    pub min_f: f64,
    pub min_f_point: Vec<f64>,
    pub min_g: f64,
    pub min_g_point: Vec<f64>,
    /// Amounts subtracted from `h` and from every `l_facet`.
    pub shift_h: f64,
    pub shift_l: f64,
    /// False when the minimum search broke down or found no admissible point.
    pub verified: bool,
    pub caveat: String,
}

/// A tuple `(phi, eta, h, l)` with its bound.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub layout: VarLayout,
    pub phi: PolyVector<f64>,
    pub eta: Vec<f64>,
    pub h: Polynomial<f64>,
    /// One polynomial in `x` per facet, in [`crate::problem::BoxDomain::facets`] order.
    pub l: Vec<(Facet, Polynomial<f64>)>,
    /// `int h + int l` before certification.
    pub raw_value: f64,
    /// Bound after the shift; equals `raw_value` until certified.
    pub certified_value: f64,
    pub verification: Option<Verification>,
}

impl DualCertificate {
    /// The certificate `phi = 0, eta = 0, h = 0, l = 0`.
    pub fn zero(problem: &VariationalProblem<f64>) -> Self {
        let layout = problem.layout;
        DualCertificate {
            layout,
            phi: PolyVector::zeros(layout, layout.n),
            eta: vec![0.0; problem.num_integral_constraints()],
            h: Polynomial::zero(layout),
            l: problem.omega.facets().into_iter().map(|f| (f, Polynomial::zero(layout))).collect(),
            raw_value: 0.0,
            certified_value: 0.0,
            verification: None,
        }
    }

    /// `int_Omega h + sum_facets int l`.
    pub fn bound(&self, problem: &VariationalProblem<f64>) -> Result<f64> {
        let mut total = problem.omega.integrate(&self.h)?;
        for (facet, l) in &self.l {
            total += problem.omega.integrate_facet(l, *facet)?;
        }
        Ok(total)
    }

    pub fn is_certified(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| v.verified)
    }
}

/// `F = f + D phi - eta . a~ - h`, where `a~_k = a_k - rhs_k / |Omega|` folds
/// the constraint right-hand side into the bulk part.
pub fn assemble_f(
    problem: &VariationalProblem<f64>,
    phi: &PolyVector<f64>,
    eta: &[f64],
    h: &Polynomial<f64>,
) -> Result<Polynomial<f64>> {
    if eta.len() != problem.num_integral_constraints() {
        return Err(Error::Dimension(format!(
            "eta has {} entries, problem has {} integral constraints",
            eta.len(),
            problem.num_integral_constraints()
        )));
    }
    let mut out = &problem.f + &total_divergence(phi, problem.layout)?;
    for (e, a) in eta.iter().zip(problem.normalized_a()) {
        out.add_scaled(&a, &-e);
    }
    out.add_scaled(h, &-1.0);
    Ok(out)
}

/// `G = g - phi . n - eta . b - l` on one facet.
pub fn assemble_g(
    problem: &VariationalProblem<f64>,
    phi: &PolyVector<f64>,
    eta: &[f64],
    l: &Polynomial<f64>,
    facet: Facet,
) -> Result<Polynomial<f64>> {
    if eta.len() != problem.num_integral_constraints() {
        return Err(Error::Dimension("eta length differs from the number of integral constraints".into()));
    }
    let mut out = &problem.g - &problem.omega.normal_component(phi, facet);
    for (e, b) in eta.iter().zip(&problem.b) {
        out.add_scaled(b, &-e);
    }
    out.add_scaled(l, &-1.0);
    Ok(out)
}

/// Unknown coefficients of a certificate.
#[derive(Clone, Debug)]
pub struct CertificateBasis {
    layout: VarLayout,
    /// `(component, monomial)` for each `phi` coefficient.
    phi: Vec<(usize, Polynomial<f64>)>,
    n_eta: usize,
    h: Vec<Polynomial<f64>>,
    l: Vec<(Facet, Polynomial<f64>)>,
}

impl CertificateBasis {
    pub fn new(problem: &VariationalProblem<f64>, spec: &PdrSpec) -> Self {
        let layout = problem.layout;
        let mut phi = Vec::new();
        let xy = VarLayout::new(layout.n + layout.m, 1);
        for (_, mono) in default_h_basis::<f64>(xy, spec.phi_degree) {
            // Re-embed a monomial in (x, y) into the problem layout.
            let (exps, _) = mono.terms().next().map(|(m, c)| (m.exponents().to_vec(), *c)).unwrap();
            let y_deg: u32 = exps[layout.n..layout.n + layout.m].iter().map(|&e| e as u32).sum();
            if spec.ansatz == Ansatz::SigmaY && y_deg != 1 {
                continue;
            }
            let powers: Vec<(Var, u16)> = exps
                .iter()
                .take(layout.n + layout.m)
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| (layout.var(k), e))
                .collect();
            let p = Polynomial::monomial(layout, 1.0, &powers);
            for i in 0..layout.n {
                phi.push((i, p.clone()));
            }
        }
        let h: Vec<Polynomial<f64>> = default_h_basis(layout, spec.h_degree).into_iter().map(|(_, p)| p).collect();
        let mut l = Vec::new();
        if !problem.is_dirichlet() {
            for facet in problem.omega.facets() {
                for (_, p) in default_h_basis::<f64>(layout, spec.l_degree) {
                    if !p.depends_on(Var::X(facet.axis)) {
                        l.push((facet, p));
                    }
                }
            }
        }
        CertificateBasis { layout, phi, n_eta: problem.num_integral_constraints(), h, l }
    }

    pub fn len(&self) -> usize {
        self.phi.len() + self.n_eta + self.h.len() + self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of coefficients that enter as split non-negative pairs.
    fn split_len(&self) -> usize {
        self.phi.len() + self.n_eta
    }

    /// Assembles a certificate from signed coefficients in basis order.
    pub fn certificate(&self, problem: &VariationalProblem<f64>, coefs: &[f64]) -> Result<DualCertificate> {
        let layout = self.layout;
        let mut phi = PolyVector::zeros(layout, layout.n);
        let mut k = 0;
        for (i, mono) in &self.phi {
            let mut entry = phi.get(*i).clone();
            entry.add_scaled(mono, &coefs[k]);
            phi.set(*i, entry);
            k += 1;
        }
        let eta = coefs[k..k + self.n_eta].to_vec();
        k += self.n_eta;
        let mut h = Polynomial::zero(layout);
        for mono in &self.h {
            h.add_scaled(mono, &coefs[k]);
            k += 1;
        }
        let mut l: Vec<(Facet, Polynomial<f64>)> =
            problem.omega.facets().into_iter().map(|f| (f, Polynomial::zero(layout))).collect();
        for (facet, mono) in &self.l {
            let slot = l.iter_mut().find(|(f, _)| f == facet).expect("facet of the domain");
            slot.1.add_scaled(mono, &coefs[k]);
            k += 1;
        }
        let mut cert = DualCertificate {
            layout,
            phi,
            eta,
            h,
            l,
            raw_value: 0.0,
            certified_value: 0.0,
            verification: None,
        };
        cert.raw_value = cert.bound(problem)?;
        cert.certified_value = cert.raw_value;
        Ok(cert)
    }
}

/// Collocation points of the bulk set `Gamma` and of `Lambda` on each facet.
#[derive(Clone, Debug, Default)]
pub struct Collocation {
    pub bulk: Vec<Vec<f64>>,
    pub boundary: Vec<(Facet, Vec<f64>)>,
    /// Initial `x` nodes and `(y, z)` tails, kept for slice-wise exchange.
    x_bulk: Vec<Vec<f64>>,
    tails_bulk: Vec<Vec<f64>>,
    x_boundary: Vec<(Facet, Vec<f64>)>,
    tails_boundary: Vec<Vec<f64>>,
}

fn lobatto(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = -(std::f64::consts::PI * k as f64 / (count - 1) as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * t
        })
        .collect()
}

fn uniform(count: usize, r: f64) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count).map(|k| -r + 2.0 * r * k as f64 / (count - 1) as f64).collect()
}

fn tensor(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

impl Collocation {
    pub fn new(problem: &VariationalProblem<f64>, spec: &PdrSpec) -> Result<Self> {
        let layout = problem.layout;
        let (n, m) = (layout.n, layout.m);
        let omega = problem.omega.bounds_f64();
        let x_axes: Vec<Vec<f64>> = omega.iter().map(|&(lo, hi)| lobatto(spec.x_nodes, lo, hi)).collect();
        let mut ys = tensor(&vec![uniform(spec.y_nodes, spec.radius); m]);
        ys.extend(spec.y_special.iter().cloned());
        let mut zs = tensor(&vec![uniform(spec.z_nodes, spec.radius); m * n]);
        zs.extend(spec.z_special.iter().cloned());
        let c = problem.c.compile();
        let d = problem.d.compile();
        let mut bulk = Vec::new();
        let x_bulk = tensor(&x_axes);
        let zero_z = vec![0.0; m * n];
        let mut tails_bulk = Vec::new();
        for y in &ys {
            for z in &zs {
                tails_bulk.push(y.iter().chain(z).copied().collect::<Vec<f64>>());
            }
        }
        let tails_boundary: Vec<Vec<f64>> = ys.iter().map(|y| y.iter().chain(&zero_z).copied().collect()).collect();
        let mut x_boundary = Vec::new();
        for x in x_bulk.iter().cloned() {
            for y in &ys {
                for z in &zs {
                    let pt = layout.flatten(&x, y, z)?;
                    if c.eval(&pt).abs() <= spec.support_tol {
                        bulk.push(pt);
                    }
                }
            }
        }
        let mut boundary = Vec::new();
        for facet in problem.omega.facets() {
            let mut axes = x_axes.clone();
            axes[facet.axis] = vec![problem.omega.facet_value(facet)];
            for x in tensor(&axes) {
                x_boundary.push((facet, x.clone()));
                for y in &ys {
                    let pt = layout.flatten(&x, y, &zero_z)?;
                    if d.eval(&pt).abs() <= spec.support_tol {
                        boundary.push((facet, pt));
                    }
                }
            }
        }
        if bulk.is_empty() {
            return Err(Error::EmptySupport("no collocation node satisfies |c| <= support tolerance".into()));
        }
        Ok(Collocation { bulk, boundary, x_bulk, tails_bulk, x_boundary, tails_boundary })
    }

    pub fn len(&self) -> usize {
        self.bulk.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rows `F(node) >= 0` and `G(node) >= 0`, linear in the certificate
/// coefficients. Column `k` of the result multiplies coefficient `k`;
/// the second entry is the constant part (`f` or `g` at the node).
fn collocation_rows(
    problem: &VariationalProblem<f64>,
    basis: &CertificateBasis,
    nodes: &Collocation,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let layout = problem.layout;
    let d_phi: Vec<_> = basis
        .phi
        .iter()
        .map(|(i, mono)| {
            let mut v = PolyVector::zeros(layout, layout.n);
            v.set(*i, mono.clone());
            total_divergence(&v, layout).map(|p| p.compile())
        })
        .collect::<Result<_>>()?;
    let a_norm: Vec<_> = problem.normalized_a().iter().map(|p| p.compile()).collect();
    let b: Vec<_> = problem.b.iter().map(|p| p.compile()).collect();
    let h: Vec<_> = basis.h.iter().map(|p| p.compile()).collect();
    let f = problem.f.compile();
    let g = problem.g.compile();
    let mut rows: Vec<(Vec<f64>, f64)> = nodes
        .bulk
        .par_iter()
        .map(|pt| {
            let mut row = Vec::with_capacity(basis.len());
            row.extend(d_phi.iter().map(|p| p.eval(pt)));
            row.extend(a_norm.iter().map(|p| -p.eval(pt)));
            row.extend(h.iter().map(|p| -p.eval(pt)));
            row.extend(std::iter::repeat(0.0).take(basis.l.len()));
            (row, f.eval(pt))
        })
        .collect();
    let boundary_rows: Vec<(Vec<f64>, f64)> = nodes
        .boundary
        .par_iter()
        .map(|(facet, pt)| {
            let sign = facet.normal_sign() as f64;
            let mut row = Vec::with_capacity(basis.len());
            row.extend(basis.phi.iter().map(|(i, mono)| {
                if *i == facet.axis {
                    -sign * mono.eval(pt).unwrap_or(f64::NAN)
                } else {
                    0.0
                }
            }));
            row.extend(b.iter().map(|p| -p.eval(pt)));
            row.extend(std::iter::repeat(0.0).take(basis.h.len()));
            row.extend(basis.l.iter().map(|(lf, mono)| if lf == facet { -mono.eval(pt).unwrap_or(f64::NAN) } else { 0.0 }));
            (row, g.eval(pt))
        })
        .collect();
    rows.extend(boundary_rows);
    Ok(rows)
}

/// Column bookkeeping: `phi` and `eta` coefficients enter as `p - q` with
/// `p, q >= 0`; `h` and `l` coefficients are free.
struct Columns {
    split: usize,
    free: usize,
}

impl Columns {
    fn total(&self) -> usize {
        2 * self.split + self.free
    }

    fn expand(&self, row: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total());
        for v in &row[..self.split] {
            out.push(*v);
            out.push(-v);
        }
        out.extend_from_slice(&row[self.split..]);
        out
    }

    fn collapse(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.split).map(|k| x[2 * k] - x[2 * k + 1]).collect();
        out.extend_from_slice(&x[2 * self.split..]);
        out
    }
}

/// The collocation LP: maximize `int h + int l` subject to the node rows.
pub fn build_pdr_lp(
    problem: &VariationalProblem<f64>,
    basis: &CertificateBasis,
    nodes: &Collocation,
) -> Result<LinearProgram> {
    if nodes.is_empty() {
        return Err(Error::EmptySupport("empty collocation set".into()));
    }
    let cols = Columns { split: basis.split_len(), free: basis.h.len() + basis.l.len() };
    let mut objective = vec![0.0; basis.len()];
    let off = basis.split_len();
    for (k, mono) in basis.h.iter().enumerate() {
        objective[off + k] = problem.omega.integrate(mono)?;
    }
    for (k, (facet, mono)) in basis.l.iter().enumerate() {
        objective[off + basis.h.len() + k] = problem.omega.integrate_facet(mono, *facet)?;
    }
    let mut bounds = vec![VarBound::NonNegative; 2 * cols.split];
    bounds.extend(std::iter::repeat(VarBound::Free).take(cols.free));
    let mut lp = LinearProgram::new(Sense::Maximize, cols.expand(&objective), bounds);
    for (row, constant) in collocation_rows(problem, basis, nodes)? {
        lp.add_row(cols.expand(&row), Relation::Ge, -constant);
    }
    Ok(lp)
}

/// Outcome of [`solve_pdr`].
#[derive(Clone, Debug)]
pub struct PdrSolution {
    /// Certified certificate (after the shift).
    pub certificate: DualCertificate,
    /// LP optimum of the last collocation round.
    pub lp_value: f64,
    pub rounds: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
}

fn solve_lp_checked(lp: &LinearProgram) -> Result<lp::LpSolution> {
    let sol = lp::solve(lp)?;
    match &sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::Infeasible("collocation LP infeasible".into())),
        LpStatus::Unbounded | LpStatus::InfeasibleOrUnbounded => Err(Error::Unbounded(
            "collocation LP unbounded; add x nodes or lower the h degree".into(),
        )),
        LpStatus::NumericalFailure(m) => Err(Error::Numerical(format!("collocation LP: {m}"))),
    }
}

/// One collocation solve: stage one maximizes the bound, the optional stage
/// two keeps the bound and minimizes the l1 norm of the `phi`, `eta` part.
fn collocation_solve(
    problem: &VariationalProblem<f64>,
    basis: &CertificateBasis,
    nodes: &Collocation,
    regularize: bool,
) -> Result<(DualCertificate, f64, usize)> {
    let mut lp = build_pdr_lp(problem, basis, nodes)?;
    let sol = solve_lp_checked(&lp)?;
    let cols = Columns { split: basis.split_len(), free: basis.h.len() + basis.l.len() };
    let mut iterations = sol.iterations;
    let mut x = sol.x.clone();
    if regularize && cols.split > 0 {
        let value_row = lp.cost.clone();
        let slack = 1e-9 * (1.0 + sol.objective.abs());
        lp.add_row(value_row, Relation::Ge, sol.objective - slack);
        lp.sense = Sense::Minimize;
        lp.cost = (0..cols.total()).map(|k| if k < 2 * cols.split { 1.0 } else { 0.0 }).collect();
        match lp::solve(&lp) {
            Ok(s2) if s2.is_optimal() => {
                iterations += s2.iterations;
                x = s2.x;
            }
            Ok(s2) => log::warn!("regularization stage skipped: {:?}", s2.status),
            Err(e) => log::warn!("regularization stage skipped: {e}"),
        }
    }
    let cert = basis.certificate(problem, &cols.collapse(&x))?;
    Ok((cert, sol.objective, iterations))
}

/// Box of the truncated bulk phase space and of `Lambda` on a facet.
fn bulk_box(problem: &VariationalProblem<f64>, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let layout = problem.layout;
    let mut lo: Vec<f64> = problem.omega.bounds_f64().iter().map(|b| b.0).collect();
    let mut hi: Vec<f64> = problem.omega.bounds_f64().iter().map(|b| b.1).collect();
    let rest = layout.nvars() - layout.n;
    lo.extend(std::iter::repeat(-radius).take(rest));
    hi.extend(std::iter::repeat(radius).take(rest));
    (lo, hi)
}

fn facet_box(problem: &VariationalProblem<f64>, radius: f64, facet: Facet) -> (Vec<f64>, Vec<f64>) {
    let layout = problem.layout;
    let (mut lo, mut hi) = bulk_box(problem, radius);
    let v = problem.omega.facet_value(facet);
    lo[facet.axis] = v;
    hi[facet.axis] = v;
    // z does not enter boundary functions.
    for k in layout.n + layout.m..layout.nvars() {
        lo[k] = 0.0;
        hi[k] = 0.0;
    }
    if problem.d == dirichlet_constraint(layout) {
        for k in layout.n..layout.n + layout.m {
            lo[k] = 0.0;
            hi[k] = 0.0;
        }
    }
    (lo, hi)
}

/// Estimated minima of `F` and of `G` over each facet, with the best points.
#[derive(Clone, Debug)]
pub struct MinimumSearch {
    pub bulk: Vec<(Vec<f64>, f64)>,
    pub boundary: Vec<(Facet, Vec<f64>, f64)>,
    pub reliable: bool,
    pub admissible: bool,
}

/// Minimum search used by certification and by exchange rounds.
pub fn search_negativity(
    problem: &VariationalProblem<f64>,
    cert: &DualCertificate,
    radius: f64,
    samples_per_var: usize,
    extra_bulk: &[Vec<f64>],
) -> Result<MinimumSearch> {
    let layout = problem.layout;
    let f_poly = assemble_f(problem, &cert.phi, &cert.eta, &cert.h)?;
    let obj = Objective::new(&f_poly);
    let (lo, hi) = bulk_box(problem, radius);
    let c = problem.c.compile();
    let tol = 1e-9;
    let keep_c = |p: &[f64]| c.eval(p).abs() <= tol;
    let samples = samples_per_var * layout.nvars();
    let bulk_res = search_minima(&obj, &lo, &hi, samples, extra_bulk, 32, &keep_c);
    let d = problem.d.compile();
    let keep_d = |p: &[f64]| d.eval(p).abs() <= tol;
    let mut boundary = Vec::new();
    let mut reliable = bulk_res.iter().all(|r| r.reliable);
    let mut admissible = !bulk_res.is_empty();
    for (facet, l) in &cert.l {
        let g_poly = assemble_g(problem, &cert.phi, &cert.eta, l, *facet)?;
        let gobj = Objective::new(&g_poly);
        let (flo, fhi) = facet_box(problem, radius, *facet);
        let free = flo.iter().zip(&fhi).filter(|(a, b)| a != b).count().max(1);
        let res = search_minima(&gobj, &flo, &fhi, samples_per_var * free, &[], 32, &keep_d);
        reliable &= res.iter().all(|r| r.reliable);
        admissible &= !res.is_empty();
        boundary.extend(res.into_iter().map(|r| (*facet, r.point, r.value)));
    }
    boundary.sort_by(|a, b| a.2.total_cmp(&b.2));
    Ok(MinimumSearch {
        bulk: bulk_res.into_iter().map(|r| (r.point, r.value)).collect(),
        boundary,
        reliable,
        admissible,
    })
}

/// Estimates `m_F` and `m_G` and shifts `h` and every `l` down by their
/// negative parts, so `certified_value = raw_value + |Omega| min(0, m_F) +
/// |dOmega| min(0, m_G)`.
pub fn certify(
    problem: &VariationalProblem<f64>,
    cert: &DualCertificate,
    radius: f64,
    samples_per_var: usize,
) -> Result<DualCertificate> {
    let found = search_negativity(problem, cert, radius, samples_per_var, &[])?;
    let (min_f_point, min_f) = found.bulk.first().cloned().unwrap_or((Vec::new(), f64::NAN));
    let (min_g_point, min_g) = found.boundary.first().map(|(_, p, v)| (p.clone(), *v)).unwrap_or((Vec::new(), 0.0));
    let verified = found.reliable && found.admissible && min_f.is_finite() && min_g.is_finite();
    let shift_h = if verified { min_f.min(0.0) } else { 0.0 };
    let shift_l = if verified { min_g.min(0.0) } else { 0.0 };
    let mut out = cert.clone();
    let layout = problem.layout;
    out.h.add_scaled(&Polynomial::constant(layout, 1.0), &shift_h);
    for (_, l) in &mut out.l {
        l.add_scaled(&Polynomial::constant(layout, 1.0), &shift_l);
    }
    let raw = cert.raw_value;
    out.raw_value = raw;
    out.certified_value = if verified { out.bound(problem)?.min(raw) } else { f64::NEG_INFINITY };
    let caveat = if verified {
        format!(
            "minima estimated from {} samples per variable and local descent on |y|, |z| <= {radius}; not a proof",
            samples_per_var
        )
    } else if !found.admissible {
        "no sample satisfied the pointwise constraints; certificate unverified".to_string()
    } else {
        "local descent broke down; minimum estimate unreliable; certificate unverified".to_string()
    };
    out.verification = Some(Verification {
        radius,
        samples: samples_per_var,
        min_f,
        min_f_point,
        min_g,
        min_g_point,
        shift_h,
        shift_l,
        verified,
        caveat,
    });
    Ok(out)
}

/// For every initial collocation `x`, the minimum over the `(y, z)` slice,
/// started from the best grid tail and polished with `x` fixed.
fn slice_minima(
    problem: &VariationalProblem<f64>,
    cert: &DualCertificate,
    nodes: &Collocation,
    radius: f64,
) -> Result<(Vec<(Vec<f64>, f64)>, Vec<(Facet, Vec<f64>, f64)>)> {
    let layout = problem.layout;
    let c = problem.c.compile();
    let d = problem.d.compile();
    let tol = 1e-9;
    let best_on_slice = |obj: &Objective, x: &[f64], tails: &[Vec<f64>], lo: &[f64], hi: &[f64], keep: &dyn Fn(&[f64]) -> bool| {
        let start = tails
            .iter()
            .map(|t| x.iter().chain(t).copied().collect::<Vec<f64>>())
            .filter(|p| keep(p))
            .map(|p| (obj.eval(&p), p))
            .min_by(|a, b| a.0.total_cmp(&b.0))?;
        let (p, v, ok) = search::polish(obj, &start.1, lo, hi, 200);
        Some(if ok && keep(&p) && v <= start.0 { (p, v) } else { (start.1, start.0) })
    };
    let f_obj = Objective::new(&assemble_f(problem, &cert.phi, &cert.eta, &cert.h)?);
    let (blo, bhi) = bulk_box(problem, radius);
    let keep_c = |p: &[f64]| c.eval(p).abs() <= tol;
    let bulk: Vec<(Vec<f64>, f64)> = nodes
        .x_bulk
        .par_iter()
        .filter_map(|x| {
            let mut lo = blo.clone();
            let mut hi = bhi.clone();
            lo[..layout.n].copy_from_slice(x);
            hi[..layout.n].copy_from_slice(x);
            best_on_slice(&f_obj, x, &nodes.tails_bulk, &lo, &hi, &keep_c)
        })
        .collect();
    let keep_d = |p: &[f64]| d.eval(p).abs() <= tol;
    let mut boundary = Vec::new();
    for (facet, l) in &cert.l {
        let g_obj = Objective::new(&assemble_g(problem, &cert.phi, &cert.eta, l, *facet)?);
        let (flo, fhi) = facet_box(problem, radius, *facet);
        let found: Vec<(Facet, Vec<f64>, f64)> = nodes
            .x_boundary
            .par_iter()
            .filter(|(f, _)| f == facet)
            .filter_map(|(_, x)| {
                let mut lo = flo.clone();
                let mut hi = fhi.clone();
                lo[..layout.n].copy_from_slice(x);
                hi[..layout.n].copy_from_slice(x);
                best_on_slice(&g_obj, x, &nodes.tails_boundary, &lo, &hi, &keep_d).map(|(p, v)| (*facet, p, v))
            })
            .collect();
        boundary.extend(found);
    }
    Ok((bulk, boundary))
}

/// Collocation LP with exchange rounds followed by certification.
pub fn solve_pdr(problem: &VariationalProblem<f64>, spec: &PdrSpec) -> Result<PdrSolution> {
    problem.validate()?;
    spec.validate()?;
    let basis = CertificateBasis::new(problem, spec);
    let mut nodes = Collocation::new(problem, spec)?;
    let (mut cert, mut lp_value, mut iterations) = collocation_solve(problem, &basis, &nodes, spec.regularize)?;
    let mut rounds = 0;
    let exchange_samples = (spec.verify_samples / 4).max(256);
    while rounds < spec.exchange_rounds {
        let mut found = search_negativity(problem, &cert, spec.radius, exchange_samples, &[])?;
        let (sb, sg) = slice_minima(problem, &cert, &nodes, spec.radius)?;
        found.bulk.extend(sb);
        found.boundary.extend(sg);
        let tol = 1e-10 * (1.0 + lp_value.abs());
        let mut added = 0;
        for (pt, v) in found.bulk.iter().filter(|(_, v)| *v < -tol) {
            let _ = v;
            nodes.bulk.push(pt.clone());
            added += 1;
        }
        for (facet, pt, _) in found.boundary.iter().filter(|(_, _, v)| *v < -tol) {
            nodes.boundary.push((*facet, pt.clone()));
            added += 1;
        }
        if added == 0 {
            break;
        }
        rounds += 1;
        log::info!("pdr exchange round {rounds}: {added} nodes added");
        let (c, v, it) = collocation_solve(problem, &basis, &nodes, spec.regularize)?;
        cert = c;
        lp_value = v;
        iterations += it;
    }
    let certified = certify(problem, &cert, spec.radius, spec.verify_samples)?;
    Ok(PdrSolution { certificate: certified, lp_value, rounds, nodes: nodes.len(), lp_iterations: iterations })
}

/// The bound sandwich `L_pdr <= F_omr <= F*` at finite scale.
#[derive(Clone, Debug)]
pub struct WeakDualityReport {
    pub certified: f64,
    pub omr_value: f64,
    pub upper: Option<f64>,
    pub tol: f64,
    /// `certified <= omr_value + tol`.
    pub consistent: bool,
    pub message: String,
}

pub fn weak_duality_report(
    problem: &VariationalProblem<f64>,
    omr_value: f64,
    cert: &DualCertificate,
    upper: Option<f64>,
    tol: f64,
) -> WeakDualityReport {
    let certified = cert.certified_value;
    let consistent = certified <= omr_value + tol && upper.map_or(true, |u| omr_value <= u + tol && certified <= u + tol);
    let message = if consistent {
        match upper {
            Some(u) => format!("{}: {certified:.6e} <= {omr_value:.6e} <= {u:.6e}", problem.name),
            None => format!("{}: {certified:.6e} <= {omr_value:.6e}", problem.name),
        }
    } else {
        format!(
            "{}: discretization failure, certified {certified:.6e} vs omr {omr_value:.6e} vs upper {upper:?} (tol {tol:e})",
            problem.name
        )
    };
    WeakDualityReport { certified, omr_value, upper, tol, consistent, message }
}
