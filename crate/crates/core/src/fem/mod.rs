//! Upper bounds from P1 finite elements and optimality-residual diagnostics.
//!
//! Dirichlet data are imposed by elimination. Integral constraints are
//! either affine in `u` (handled by projection) or homogeneous quadratic in
//! `(u, grad u)` (handled by rescaling onto the sphere).

mod mesh;

pub use mesh::Mesh;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use mesh::{element_rules, facet_rules, ElementRule};

use crate::error::{Error, Result};
use crate::pdr::{assemble_f, assemble_g, DualCertificate};
use crate::poly::{CompiledPoly, Polynomial, Var, VarLayout};
use crate::problem::{BoundaryKind, FemSection, Facet, VariationalProblem};

#[derive(Clone, Debug, PartialEq)]
pub struct FeOptions {
    pub multistart: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Random starts are uniform in `[-init_amplitude, init_amplitude]`.
    pub init_amplitude: f64,
    pub gtol: f64,
}

impl Default for FeOptions {
    fn default() -> Self {
        FeOptions { multistart: 4, seed: 0, max_iter: 20_000, init_amplitude: 1.0, gtol: 1e-9 }
    }
}

impl FeOptions {
    pub fn from_section(s: &FemSection) -> Self {
        let d = FeOptions::default();
        FeOptions {
            multistart: s.multistart.unwrap_or(d.multistart).max(1),
            seed: s.seed.unwrap_or(d.seed),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            init_amplitude: s.init_amplitude.unwrap_or(d.init_amplitude),
            ..d
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeSolution {
    pub mesh: Mesh,
    /// Node-major values: component `j` of node `a` is `nodal[a * m + j]`.
    pub nodal: Vec<f64>,
    pub m: usize,
    /// Functional value, an upper bound on `F*`.
    pub value: f64,
    /// `int a_k + int b_k - rhs_k` for each integral constraint.
    pub constraint_residuals: Vec<f64>,
    /// Functional value after each accepted step of the best start.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The line search failed before the gradient test was met.
    pub stalled: bool,
    /// Final value of every start, in seed order.
    pub basins: Vec<f64>,
    pub best_start: usize,
}

/// An integrand with its partial derivatives in `y` and `z`.
struct Integrand {
    value: CompiledPoly,
    dy: Vec<CompiledPoly>,
    dz: Vec<CompiledPoly>,
}

impl Integrand {
    fn new(p: &Polynomial<f64>) -> Self {
        let l = p.layout();
        let dy = (0..l.m).map(|j| p.partial(Var::Y(j)).compile()).collect();
        let dz = (0..l.m).flat_map(|j| (0..l.n).map(move |i| (j, i))).map(|(j, i)| p.partial(Var::Z(j, i)).compile()).collect();
        Integrand { value: p.compile(), dy, dz }
    }
}

enum ConstraintKind {
    Affine,
    Quadratic,
}

struct Constraint {
    bulk: Integrand,
    boundary: Integrand,
    rhs: f64,
    kind: ConstraintKind,
}

/// The discrete functional on a fixed mesh.
struct Discrete<'a> {
    layout: VarLayout,
    mesh: &'a Mesh,
    rules: Vec<ElementRule>,
    facet_rules: Vec<(Facet, ElementRule)>,
    objective: (Integrand, Integrand),
    constraints: Vec<Constraint>,
    free: Vec<bool>,
}

fn homogeneous_yz_degree(p: &Polynomial<f64>, layout: VarLayout) -> Option<u32> {
    let mut deg = None;
    for (mono, c) in p.terms() {
        if *c == 0.0 {
            continue;
        }
        let e = mono.exponents();
        let d: u32 = e[layout.n..].iter().map(|&v| u32::from(v)).sum();
        match deg {
            None => deg = Some(d),
            Some(k) if k != d => return None,
            _ => {}
        }
    }
    deg
}

impl<'a> Discrete<'a> {
    fn new(problem: &VariationalProblem<f64>, mesh: &'a Mesh) -> Result<Self> {
        let layout = problem.layout;
        if mesh.dim() != layout.n {
            return Err(Error::Dimension(format!("mesh is {}-dimensional, problem has n = {}", mesh.dim(), layout.n)));
        }
        if !problem.c.is_zero() {
            return Err(Error::Invalid("finite elements do not support pointwise bulk constraints".into()));
        }
        let free = match problem.boundary {
            BoundaryKind::Dirichlet => mesh
                .on_boundary
                .iter()
                .flat_map(|&b| std::iter::repeat(!b).take(layout.m))
                .collect(),
            BoundaryKind::Free if problem.d.is_zero() => vec![true; mesh.num_nodes() * layout.m],
            BoundaryKind::Free => {
                return Err(Error::Invalid("finite elements support only Dirichlet or free boundaries".into()));
            }
        };
        let mut degree = problem.f.degree().max(problem.g.degree());
        let mut constraints = Vec::new();
        for k in 0..problem.a.len() {
            let (a, b) = (&problem.a[k], &problem.b[k]);
            degree = degree.max(a.degree()).max(b.degree());
            let linear = a.degree_yz() <= 1 && !a.depends_on_z() && b.degree_yz() <= 1;
            let kind = if linear {
                ConstraintKind::Affine
            } else {
                let both = homogeneous_yz_degree(&(a + b), layout);
                let qa = homogeneous_yz_degree(a, layout).map_or(a.is_zero(), |d| d == 2);
                let qb = homogeneous_yz_degree(b, layout).map_or(b.is_zero(), |d| d == 2);
                if both == Some(2) && qa && qb && problem.rhs[k] > 0.0 {
                    ConstraintKind::Quadratic
                } else {
                    return Err(Error::Invalid(format!(
                        "integral constraint {k} is neither affine in u nor a positive quadratic normalization"
                    )));
                }
            };
            constraints.push(Constraint { bulk: Integrand::new(a), boundary: Integrand::new(b), rhs: problem.rhs[k], kind });
        }
        if constraints.iter().filter(|c| matches!(c.kind, ConstraintKind::Quadratic)).count() > 1 {
            return Err(Error::Invalid("at most one quadratic normalization is supported".into()));
        }
        Ok(Discrete {
            layout,
            mesh,
            rules: element_rules(mesh, degree),
            facet_rules: facet_rules(mesh, degree),
            objective: (Integrand::new(&problem.f), Integrand::new(&problem.g)),
            constraints,
            free,
        })
    }

    fn num_dofs(&self) -> usize {
        self.mesh.num_nodes() * self.layout.m
    }

    /// Point `(x, u, grad u)` at a quadrature point of `rule`.
    fn state(&self, rule: &ElementRule, q: usize, u: &[f64], with_grad: bool) -> Vec<f64> {
        let (n, m) = (self.layout.n, self.layout.m);
        let qp = &rule.points[q];
        let mut point = vec![0.0; self.layout.nvars()];
        point[..n].copy_from_slice(&qp.x);
        for (a, &node) in rule.nodes.iter().enumerate() {
            for j in 0..m {
                let v = u[node * m + j];
                point[n + j] += qp.basis[a] * v;
                if with_grad {
                    for i in 0..n {
                        point[n + m + j * n + i] += rule.grads[a][i] * v;
                    }
                }
            }
        }
        point
    }

    /// Value and gradient of `int bulk + int boundary` with respect to nodal values.
    fn functional(&self, bulk: &Integrand, boundary: &Integrand, u: &[f64], grad: bool) -> (f64, Vec<f64>) {
        let (n, m) = (self.layout.n, self.layout.m);
        let mut total = 0.0;
        let mut g = if grad { vec![0.0; self.num_dofs()] } else { Vec::new() };
        for rule in &self.rules {
            for q in 0..rule.points.len() {
                let p = self.state(rule, q, u, true);
                let w = rule.points[q].w;
                total += w * bulk.value.eval(&p);
                if grad {
                    let dy: Vec<f64> = bulk.dy.iter().map(|d| d.eval(&p)).collect();
                    let dz: Vec<f64> = bulk.dz.iter().map(|d| d.eval(&p)).collect();
                    for (a, &node) in rule.nodes.iter().enumerate() {
                        for j in 0..m {
                            let mut s = dy[j] * rule.points[q].basis[a];
                            for i in 0..n {
                                s += dz[j * n + i] * rule.grads[a][i];
                            }
                            g[node * m + j] += w * s;
                        }
                    }
                }
            }
        }
        if !boundary.value.is_zero() {
            for (_, rule) in &self.facet_rules {
                for q in 0..rule.points.len() {
                    let p = self.state(rule, q, u, false);
                    let w = rule.points[q].w;
                    total += w * boundary.value.eval(&p);
                    if grad {
                        for (a, &node) in rule.nodes.iter().enumerate() {
                            for j in 0..m {
                                g[node * m + j] += w * boundary.dy[j].eval(&p) * rule.points[q].basis[a];
                            }
                        }
                    }
                }
            }
        }
        if grad {
            g.iter_mut().zip(&self.free).for_each(|(v, f)| {
                if !f {
                    *v = 0.0;
                }
            });
        }
        (total, g)
    }

    fn objective(&self, u: &[f64]) -> f64 {
        self.functional(&self.objective.0, &self.objective.1, u, false).0
    }

    fn objective_grad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        self.functional(&self.objective.0, &self.objective.1, u, true)
    }

    fn residuals(&self, u: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| self.functional(&c.bulk, &c.boundary, u, false).0 - c.rhs).collect()
    }

    /// Gradients of the constraint functionals at `u`.
    fn normals(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.constraints.iter().map(|c| self.functional(&c.bulk, &c.boundary, u, true).1).collect()
    }

    /// Projects onto the affine constraints, then rescales onto the sphere.
    fn retract(&self, u: &mut [f64]) -> Result<()> {
        if self.constraints.is_empty() {
            return Ok(());
        }
        for _ in 0..50 {
            for c in self.constraints.iter().filter(|c| matches!(c.kind, ConstraintKind::Affine)) {
                let (v, g) = self.functional(&c.bulk, &c.boundary, u, true);
                let gg = dot(&g, &g);
                if gg > 0.0 {
                    let t = (v - c.rhs) / gg;
                    u.iter_mut().zip(&g).for_each(|(x, y)| *x -= t * y);
                }
            }
            if let Some(c) = self.constraints.iter().find(|c| matches!(c.kind, ConstraintKind::Quadratic)) {
                let (v, _) = self.functional(&c.bulk, &c.boundary, u, false);
                if !(v > 0.0) {
                    return Err(Error::Numerical("normalization integral vanished during retraction".into()));
                }
                let s = (c.rhs / v).sqrt();
                u.iter_mut().for_each(|x| *x *= s);
            }
            let worst = self.residuals(u).iter().fold(0.0f64, |m, r| m.max(r.abs()));
            if worst <= 1e-12 {
                return Ok(());
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run {
    u: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    stalled: bool,
}

/// `P = K + M` for every component, with fixed dofs removed. Dense
/// Cholesky up to `DENSE_LIMIT` free dofs, lumped diagonal beyond.
enum Preconditioner {
    Dense { chol: Cholesky<f64, Dyn>, index: Vec<Option<usize>> },
    Diagonal(Vec<f64>),
}

const DENSE_LIMIT: usize = 3000;

impl Preconditioner {
    fn new(disc: &Discrete) -> Self {
        let m = disc.layout.m;
        let rules = element_rules(disc.mesh, 2);
        let mut index = Vec::with_capacity(disc.free.len());
        let mut count = 0;
        for &f in &disc.free {
            index.push(f.then(|| {
                count += 1;
                count - 1
            }));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for rule in &rules {
            for (a, &na) in rule.nodes.iter().enumerate() {
                for (b, &nb) in rule.nodes.iter().enumerate() {
                    let stiff: f64 = dot(&rule.grads[a], &rule.grads[b]);
                    let v: f64 = rule.points.iter().map(|q| q.w * (stiff + q.basis[a] * q.basis[b])).sum();
                    for j in 0..m {
                        entries.push((na * m + j, nb * m + j, v));
                    }
                }
            }
        }
        if count <= DENSE_LIMIT {
            let mut mat = DMatrix::<f64>::zeros(count, count);
            for &(r, c, v) in &entries {
                if let (Some(r), Some(c)) = (index[r], index[c]) {
                    mat[(r, c)] += v;
                }
            }
            if let Some(chol) = mat.cholesky() {
                return Preconditioner::Dense { chol, index };
            }
        }
        let mut diag = vec![0.0; disc.free.len()];
        for (r, c, v) in entries {
            if r == c {
                diag[r] += v;
            }
        }
        Preconditioner::Diagonal(diag)
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Dense { chol, index } => {
                let rhs = DVector::from_iterator(
                    chol.l_dirty().nrows(),
                    g.iter().zip(index).filter(|(_, i)| i.is_some()).map(|(v, _)| *v),
                );
                let sol = chol.solve(&rhs);
                index.iter().map(|i| i.map_or(0.0, |k| sol[k])).collect()
            }
            Preconditioner::Diagonal(d) => g.iter().zip(d).map(|(v, w)| if *w > 0.0 { v / w } else { 0.0 }).collect(),
        }
    }
}

/// Removes from `v` its `P`-orthogonal component along the constraint
/// normals, given `pn[k] = P^-1 normals[k]`.
fn tangent_part(v: &mut [f64], normals: &[Vec<f64>], pn: &[Vec<f64>]) {
    let k = normals.len();
    if k == 0 {
        return;
    }
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&normals[i], &pn[j]));
    let rhs = DVector::from_iterator(k, normals.iter().map(|n| dot(n, v)));
    let Some(c) = gram.clone().lu().solve(&rhs) else {
        return;
    };
    for (ck, q) in c.iter().zip(pn) {
        v.iter_mut().zip(q).for_each(|(x, y)| *x -= ck * y);
    }
}

/// Preconditioned Polak-Ribiere+ conjugate gradients on the constraint
/// manifold, with Armijo backtracking on the retracted trial point.
fn descend(disc: &Discrete, pre: &Preconditioner, mut u: Vec<f64>, opts: &FeOptions) -> Result<Run> {
    disc.retract(&mut u)?;
    let riemannian = |u: &[f64], g: &[f64]| -> Vec<f64> {
        let normals = disc.normals(u);
        let pn: Vec<Vec<f64>> = normals.iter().map(|n| pre.apply(n)).collect();
        let mut p = pre.apply(g);
        tangent_part(&mut p, &normals, &pn);
        p
    };
    let (mut f, mut g) = disc.objective_grad(&u);
    let mut pg = riemannian(&u, &g);
    let mut d: Vec<f64> = pg.iter().map(|v| -v).collect();
    let mut step = 1.0;
    let mut trace = vec![f];
    let mut quiet = 0;
    for it in 0..opts.max_iter {
        let gnorm = dot(&g, &pg).max(0.0).sqrt();
        if gnorm <= opts.gtol * (1.0 + f.abs()) {
            return Ok(Run { u, value: f, trace, iterations: it, converged: true, stalled: false });
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = pg.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        while t > 1e-18 {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            disc.retract(&mut trial)?;
            let ft = disc.objective(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((mut un, mut fnew)) = accepted else {
            return Ok(Run { u, value: f, trace, iterations: it, converged: false, stalled: true });
        };
        // Minimizer of the quadratic through f, slope and the accepted value.
        let curvature = fnew - f - slope * t;
        if curvature > 0.0 {
            let tq = -slope * t * t / (2.0 * curvature);
            if tq < 0.9 * t && tq > 1e-3 * t {
                let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + tq * b).collect();
                disc.retract(&mut trial)?;
                let fq = disc.objective(&trial);
                if fq < fnew {
                    un = trial;
                    fnew = fq;
                    t = tq;
                }
            }
        }
        step = t;
        let (_, gn) = disc.objective_grad(&un);
        let pgn = riemannian(&un, &gn);
        let beta = (dot(&gn, &pgn) - dot(&gn, &pg)) / dot(&g, &pg).max(f64::MIN_POSITIVE);
        let beta = beta.max(0.0);
        let mut dn: Vec<f64> = pgn.iter().zip(&d).map(|(a, b)| -a + beta * b).collect();
        if beta > 0.0 {
            let normals = disc.normals(&un);
            let pn: Vec<Vec<f64>> = normals.iter().map(|n| pre.apply(n)).collect();
            tangent_part(&mut dn, &normals, &pn);
        }
        quiet = if (f - fnew).abs() <= 1e-13 * (1.0 + f.abs()) { quiet + 1 } else { 0 };
        u = un;
        f = fnew;
        g = gn;
        pg = pgn;
        d = dn;
        trace.push(f);
        if quiet >= 3 {
            return Ok(Run { u, value: f, trace, iterations: it + 1, converged: true, stalled: false });
        }
    }
    Ok(Run { u, value: f, trace, iterations: opts.max_iter, converged: false, stalled: false })
}

fn random_start(disc: &Discrete, seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    disc.free.iter().map(|&f| if f { rng.gen_range(-amplitude..=amplitude) } else { 0.0 }).collect()
}

/// Best of `multistart` seeded local minimizations, run in parallel.
/// Ties go to the lowest start index.
pub fn minimize_fe(problem: &VariationalProblem<f64>, mesh: &Mesh, opts: &FeOptions) -> Result<FeSolution> {
    minimize_fe_from(problem, mesh, opts, None)
}

/// As [`minimize_fe`], with an optional extra start placed before the random ones.
pub fn minimize_fe_from(
    problem: &VariationalProblem<f64>,
    mesh: &Mesh,
    opts: &FeOptions,
    initial: Option<&[f64]>,
) -> Result<FeSolution> {
    let disc = Discrete::new(problem, mesh)?;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(u0) = initial {
        if u0.len() != disc.num_dofs() {
            return Err(Error::Dimension(format!("initial guess has {} values, expected {}", u0.len(), disc.num_dofs())));
        }
        let mut u = u0.to_vec();
        u.iter_mut().zip(&disc.free).for_each(|(v, f)| {
            if !f {
                *v = 0.0;
            }
        });
        starts.push(u);
    }
    for k in 0..opts.multistart.max(1) {
        starts.push(random_start(&disc, opts.seed.wrapping_add(k as u64), opts.init_amplitude));
    }
    let pre = Preconditioner::new(&disc);
    let runs: Vec<Result<Run>> = starts.into_par_iter().map(|u0| descend(&disc, &pre, u0, opts)).collect();
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let basins: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let best_start = (0..runs.len()).fold(0, |b, k| if runs[k].value < runs[b].value { k } else { b });
    let best = runs.into_iter().nth(best_start).expect("at least one start");
    if best.stalled {
        warn!("finite-element descent stalled after {} iterations at {}", best.iterations, best.value);
    }
    info!("fe {:?}: U = {} after {} iterations", mesh.divisions, best.value, best.iterations);
    let constraint_residuals = disc.residuals(&best.u);
    Ok(FeSolution {
        mesh: mesh.clone(),
        m: problem.layout.m,
        value: best.value,
        nodal: best.u,
        constraint_residuals,
        trace: best.trace,
        iterations: best.iterations,
        converged: best.converged,
        stalled: best.stalled,
        basins,
        best_start,
    })
}

impl FeSolution {
    /// Evaluates given nodal values without optimizing. Dirichlet nodes must be zero.
    pub fn from_nodal(problem: &VariationalProblem<f64>, mesh: &Mesh, nodal: Vec<f64>) -> Result<Self> {
        let disc = Discrete::new(problem, mesh)?;
        if nodal.len() != disc.num_dofs() {
            return Err(Error::Dimension(format!("{} nodal values, expected {}", nodal.len(), disc.num_dofs())));
        }
        if nodal.iter().zip(&disc.free).any(|(v, f)| !f && *v != 0.0) {
            return Err(Error::Invalid("nodal values violate the Dirichlet condition".into()));
        }
        let value = disc.objective(&nodal);
        let constraint_residuals = disc.residuals(&nodal);
        Ok(FeSolution {
            mesh: mesh.clone(),
            m: problem.layout.m,
            value,
            nodal,
            constraint_residuals,
            trace: vec![value],
            iterations: 0,
            converged: true,
            stalled: false,
            basins: vec![value],
            best_start: 0,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.mesh.interpolate(&self.nodal, self.m, x)
    }
}

/// Minimizes on each mesh in turn; every refinement also starts from the
/// previous solution, interpolated.
pub fn refinement_study(
    problem: &VariationalProblem<f64>,
    levels: &[Vec<usize>],
    opts: &FeOptions,
) -> Result<Vec<FeSolution>> {
    let mut out: Vec<FeSolution> = Vec::new();
    for divisions in levels {
        let mesh = Mesh::uniform(&problem.omega.to_f64(), divisions)?;
        let initial: Option<Vec<f64>> = out.last().map(|prev| mesh.nodes.iter().flat_map(|x| prev.eval(x)).collect());
        out.push(minimize_fe_from(problem, &mesh, opts, initial.as_deref())?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevRow {
    pub delta: f64,
    /// Measure of `{F >= delta}` in the bulk.
    pub lambda: f64,
    /// Measure of `{G >= delta}` on the boundary.
    pub sigma: f64,
    /// `2 epsilon / delta`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub sup_bulk: f64,
    pub sup_boundary: f64,
    pub min_bulk: f64,
    pub min_boundary: f64,
    /// `int F + int G`, equal to `U - (int h + int l)` up to quadrature error.
    pub integral: f64,
    pub epsilon: f64,
    pub table: Vec<ChebyshevRow>,
}

/// Evaluates `F` and `G` of `cert` along `u` and tabulates the measures of
/// their superlevel sets against `2 epsilon / delta`, with
/// `epsilon = (U - certified value) / 2 + slack`. Measures are computed
/// with the element quadrature weights.
pub fn optimality_residual(
    problem: &VariationalProblem<f64>,
    u: &FeSolution,
    cert: &DualCertificate,
    deltas: &[f64],
    slack: f64,
) -> Result<ResidualReport> {
    let disc = Discrete::new(problem, &u.mesh)?;
    let worst = u.constraint_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst > 1e-6 {
        return Err(Error::Invalid(format!("u violates the integral constraints by {worst:.3e}")));
    }
    if !cert.is_certified() {
        warn!("optimality residual computed for an uncertified certificate");
    }
    let f_poly = assemble_f(problem, &cert.phi, &cert.eta, &cert.h)?;
    let degree = f_poly.degree().max(8);
    let rules = element_rules(&u.mesh, degree);
    let fc = f_poly.compile();
    let mut bulk: Vec<(f64, f64)> = Vec::new();
    for rule in &rules {
        for q in 0..rule.points.len() {
            let p = disc.state(rule, q, &u.nodal, true);
            bulk.push((fc.eval(&p), rule.points[q].w));
        }
    }
    let mut boundary: Vec<(f64, f64)> = Vec::new();
    for (facet, l) in &cert.l {
        let g_poly = assemble_g(problem, &cert.phi, &cert.eta, l, *facet)?;
        let gc = g_poly.compile();
        for (f2, rule) in facet_rules(&u.mesh, g_poly.degree().max(8)) {
            if f2 != *facet {
                continue;
            }
            for q in 0..rule.points.len() {
                let p = disc.state(&rule, q, &u.nodal, false);
                boundary.push((gc.eval(&p), rule.points[q].w));
            }
        }
    }
    let extreme = |v: &[(f64, f64)], max: bool| {
        v.iter().map(|p| p.0).fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| if max { a.max(b) } else { a.min(b) })
    };
    let integral = bulk.iter().chain(&boundary).map(|(v, w)| v * w).sum();
    let epsilon = 0.5 * (u.value - cert.certified_value) + slack;
    let table = deltas
        .iter()
        .map(|&delta| {
            let lambda = bulk.iter().filter(|(v, _)| *v >= delta).map(|(_, w)| w).sum();
            let sigma = boundary.iter().filter(|(v, _)| *v >= delta).map(|(_, w)| w).sum();
            let bound = 2.0 * epsilon / delta;
            ChebyshevRow { delta, lambda, sigma, bound, holds: lambda + sigma <= bound }
        })
        .collect();
    Ok(ResidualReport {
        sup_bulk: extreme(&bulk, true).max(0.0),
        sup_boundary: if boundary.is_empty() { 0.0 } else { extreme(&boundary, true).max(0.0) },
        min_bulk: extreme(&bulk, false),
        min_boundary: if boundary.is_empty() { 0.0 } else { extreme(&boundary, false) },
        integral,
        epsilon,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::problem::BoxDomain;

    fn interval_problem(f: &str) -> VariationalProblem<f64> {
        let omega = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        VariationalProblem::new("t", omega, 1, 2.0, parse_polynomial(f, VarLayout::new(1, 1)).unwrap())
    }

    #[test]
    fn poincare_mean_zero() {
        let l = VarLayout::new(1, 1);
        let p = interval_problem("z^2")
            .with_integral_constraint(parse_polynomial("y", l).unwrap(), Polynomial::zero(l), 0.0)
            .with_integral_constraint(parse_polynomial("y^2", l).unwrap(), Polynomial::zero(l), 1.0);
        let mesh = Mesh::uniform(&p.omega, &[64]).unwrap();
        let sol = minimize_fe(&p, &mesh, &FeOptions { multistart: 2, seed: 3, ..FeOptions::default() }).unwrap();
        let target = std::f64::consts::PI.powi(2) / 4.0;
        assert!(sol.value >= target - 1e-9);
        assert!(sol.value - target < 2e-3, "{}", sol.value);
        assert!(sol.constraint_residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn zero_certificate_residual_vanishes_at_zero() {
        let p = interval_problem("z^2").with_dirichlet();
        let mesh = Mesh::uniform(&p.omega, &[8]).unwrap();
        let u = FeSolution::from_nodal(&p, &mesh, vec![0.0; 9]).unwrap();
        assert_eq!(u.value, 0.0);
        let mut cert = DualCertificate::zero(&p);
        cert.verification = None;
        let report = optimality_residual(&p, &u, &cert, &[0.01, 0.1, 1.0], 0.0).unwrap();
        assert_eq!(report.sup_bulk, 0.0);
        assert_eq!(report.min_bulk, 0.0);
        assert!(report.table.iter().all(|r| r.lambda == 0.0 && r.holds));
    }

    #[test]
    fn dirichlet_nodes_are_fixed() {
        let p = interval_problem("z^2 + (y - x)^2").with_dirichlet();
        let mesh = Mesh::uniform(&p.omega, &[32]).unwrap();
        let sol = minimize_fe(&p, &mesh, &FeOptions { multistart: 1, ..FeOptions::default() }).unwrap();
        assert_eq!(sol.nodal[0], 0.0);
        assert_eq!(sol.nodal[32], 0.0);
        let oracle = 2.0 * (1.0f64.cosh() / 1.0f64.sinh() - 1.0);
        assert!(sol.value >= oracle && sol.value - oracle < 1e-3, "{}", sol.value);
        assert!(FeSolution::from_nodal(&p, &mesh, vec![1.0; 33]).is_err());
    }

    #[test]
    fn unsupported_constraints_are_rejected() {
        let l = VarLayout::new(1, 1);
        let p = interval_problem("z^2").with_integral_constraint(parse_polynomial("y^3", l).unwrap(), Polynomial::zero(l), 1.0);
        let mesh = Mesh::uniform(&p.omega, &[4]).unwrap();
        assert!(minimize_fe(&p, &mesh, &FeOptions::default()).is_err());
    }
}
