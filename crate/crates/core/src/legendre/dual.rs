//! The conjugate dual problem in one dimension and the certificates built
//! from its solution.
//!
//! For `f = f0(x, z) + f1(x, y)` on an interval the dual reads
//! `sup int -f0*(x, sigma) - f1*(x, rho)` subject to `sigma' = rho`. A
//! solution gives the certificate `phi = -sigma(x) y`, `eta = 0`,
//! `h = -f0*(x, sigma) - f1*(x, sigma')`, `l = 0`.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{convexify, uniform_grid, Hull, SampledFunction};
use crate::error::{Error, Result};
use crate::pdr::{certify, DualCertificate};
use crate::poly::{Polynomial, PolyVector, Var, VarLayout};
use crate::problem::{BoundaryKind, SharpSection, VariationalProblem};
use crate::sampling::gauss_on;

#[derive(Clone, Debug, PartialEq)]
pub struct DualSettings {
    pub x_nodes: usize,
    /// Nodes of the `z` and `y` grids used to sample `f0(x, .)` and `f1(x, .)`.
    pub conj_nodes: usize,
    pub z_range: f64,
    pub y_range: f64,
    /// Degree of the least-squares fit of `sigma`.
    pub fit_degree: usize,
    pub h_fit_degree: usize,
    /// Largest accepted fit residual, relative to `1 + max |sigma|`.
    pub fit_tol: f64,
    /// Report the envelope of `f0` (nonconvex integrands in one dimension).
    pub convexify: bool,
    pub max_iter: usize,
    /// Optimize log-sum-exp smoothed conjugates with decreasing temperature.
    pub smooth: bool,
    pub verify_radius: f64,
    pub verify_samples: usize,
}

impl Default for DualSettings {
    fn default() -> Self {
        DualSettings {
            x_nodes: 101,
            conj_nodes: 401,
            z_range: 8.0,
            y_range: 8.0,
            fit_degree: 8,
            h_fit_degree: 16,
            fit_tol: 1e-2,
            convexify: false,
            max_iter: 3000,
            smooth: true,
            verify_radius: 8.0,
            verify_samples: 4096,
        }
    }
}

impl DualSettings {
    pub fn from_section(s: &SharpSection) -> Result<Self> {
        let d = DualSettings::default();
        let fit_degree = s.fit_degree.unwrap_or(d.fit_degree);
        let z_range = s.z_range.unwrap_or(d.z_range);
        let y_range = s.y_range.unwrap_or(d.y_range);
        let out = DualSettings {
            x_nodes: s.x_nodes.unwrap_or(d.x_nodes),
            conj_nodes: s.conj_nodes.unwrap_or(d.conj_nodes),
            z_range,
            y_range,
            fit_degree,
            h_fit_degree: 2 * fit_degree,
            convexify: s.convexify.unwrap_or(d.convexify),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            smooth: s.smooth.unwrap_or(d.smooth),
            verify_radius: z_range.max(y_range),
            ..d
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_nodes < 3 || self.conj_nodes < 3 {
            return Err(Error::Invalid("sharp grids need at least 3 nodes".into()));
        }
        if !(self.z_range > 0.0 && self.y_range > 0.0 && self.verify_radius > 0.0) {
            return Err(Error::Invalid("sharp ranges must be positive".into()));
        }
        if self.fit_degree >= self.x_nodes || self.h_fit_degree >= self.x_nodes {
            return Err(Error::Invalid(format!("fit degree must be below x_nodes = {}", self.x_nodes)));
        }
        Ok(())
    }
}

/// `f = f0(x, z) + f1(x, y)`; terms depending on `x` only are kept in `f1`.
#[derive(Clone, Debug)]
pub struct ConvexAdditive {
    pub f0: Polynomial<f64>,
    pub f1: Polynomial<f64>,
    /// `(F, c)` when `f1 = F(x) y + c(x)`.
    pub linear: Option<(Polynomial<f64>, Polynomial<f64>)>,
}

pub fn split_convex_additive(problem: &VariationalProblem<f64>) -> Result<ConvexAdditive> {
    let layout = problem.layout;
    if layout.n != 1 || layout.m != 1 {
        return Err(Error::Invalid("the constructive dual solve needs n = m = 1".into()));
    }
    if !problem.a.is_empty() || !problem.c.is_zero() || !problem.g.is_zero() {
        return Err(Error::Invalid("convex-additive problems carry no g, c or integral constraints".into()));
    }
    let y = layout.index(Var::Y(0));
    let z = layout.index(Var::Z(0, 0));
    let mut f0 = Polynomial::zero(layout);
    let mut f1 = Polynomial::zero(layout);
    for (mono, c) in problem.f.terms() {
        let e = mono.exponents();
        match (e[y] > 0, e[z] > 0) {
            (true, true) => {
                return Err(Error::Invalid(format!("f = {} couples u and its derivative", problem.f)));
            }
            (false, true) => f0.add_term(mono.clone(), *c),
            _ => f1.add_term(mono.clone(), *c),
        }
    }
    let linear = (f1.degree_y() <= 1).then(|| {
        let slope = f1.partial(Var::Y(0));
        let rest = f1.substitute_value(Var::Y(0), &0.0);
        (slope, rest)
    });
    Ok(ConvexAdditive { f0, f1, linear })
}

/// Numerical check of the convexity and growth hypotheses on the sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypotheses {
    pub f0_convex: bool,
    pub f1_convex: bool,
    /// `f0` and `f1` grow at most like `|.|^p`.
    pub growth: bool,
    /// `f0` and `f1` grow at least like `|.|^p` on the outer half of the grid.
    pub coercive: bool,
    pub linear_f1: bool,
}

impl Hypotheses {
    /// Convexity of `f0` is not needed in one dimension, since `f0*` is
    /// the conjugate of the envelope.
    pub fn hold(&self) -> bool {
        self.f1_convex && (self.linear_f1 || (self.growth && self.coercive)) && (self.growth || self.linear_f1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateStatus {
    /// Hypotheses hold, so the dual objective estimates `F*`.
    Sharp,
    UncertifiedEstimate,
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateStatus::Sharp => "sharp estimate",
            EstimateStatus::UncertifiedEstimate => "uncertified estimate",
        })
    }
}

/// Dual fields on the `x` grid; `rho` is the discrete derivative of `sigma`.
#[derive(Clone, Debug)]
pub struct DualFieldPair {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: Vec<f64>,
    /// Trapezoid rule for `int -f0*(x, sigma) - f1*(x, rho)` with sampled conjugates.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: EstimateStatus,
    pub hypotheses: Hypotheses,
    /// Largest gap between `f0` and its envelope on the sampling grid.
    pub envelope_gap: f64,
}

/// Central differences inside, one-sided at the ends.
fn derivative(sigma: &[f64], h: f64) -> Vec<f64> {
    let n = sigma.len();
    (0..n)
        .map(|i| match i {
            0 => (sigma[1] - sigma[0]) / h,
            i if i + 1 == n => (sigma[n - 1] - sigma[n - 2]) / h,
            i => (sigma[i + 1] - sigma[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Transpose of [`derivative`].
fn derivative_adjoint(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    out[0] -= g[0] / h;
    out[1] += g[0] / h;
    out[n - 1] += g[n - 1] / h;
    out[n - 2] -= g[n - 1] / h;
    for i in 1..n - 1 {
        out[i + 1] += g[i] / (2.0 * h);
        out[i - 1] -= g[i] / (2.0 * h);
    }
    out
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

struct Tables {
    f0: Vec<Hull>,
    f1: Vec<Hull>,
}

fn sample_tables(
    ca: &ConvexAdditive,
    x: &[f64],
    settings: &DualSettings,
    linear: bool,
) -> Result<(Tables, Vec<SampledFunction>, Vec<SampledFunction>)> {
    let zg = uniform_grid(-settings.z_range, settings.z_range, settings.conj_nodes)?;
    let yg = uniform_grid(-settings.y_range, settings.y_range, settings.conj_nodes)?;
    let f0 = ca.f0.compile();
    let f1 = ca.f1.compile();
    let s0: Vec<SampledFunction> = x
        .par_iter()
        .map(|&xi| SampledFunction::new(zg.clone(), zg.iter().map(|&z| f0.eval(&[xi, 0.0, z])).collect()))
        .collect::<Result<_>>()?;
    let s1: Vec<SampledFunction> = if linear {
        Vec::new()
    } else {
        x.par_iter()
            .map(|&xi| SampledFunction::new(yg.clone(), yg.iter().map(|&y| f1.eval(&[xi, y, 0.0])).collect()))
            .collect::<Result<_>>()?
    };
    let tables = Tables {
        f0: s0.par_iter().map(|s| Hull::new(s.grid(), s.values())).collect(),
        f1: s1.par_iter().map(|s| Hull::new(s.grid(), s.values())).collect(),
    };
    Ok((tables, s0, s1))
}

fn envelope_gap(samples: &[SampledFunction]) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for s in samples {
        let env = convexify(s)?;
        for (a, b) in s.values().iter().zip(env.values()) {
            gap = gap.max(a - b);
        }
    }
    Ok(gap)
}

fn check_hypotheses(
    ca: &ConvexAdditive,
    problem: &VariationalProblem<f64>,
    s0: &[SampledFunction],
    s1: &[SampledFunction],
) -> Result<(Hypotheses, f64)> {
    let p = problem.p;
    let gap0 = envelope_gap(s0)?;
    let gap1 = envelope_gap(s1)?;
    let scale = |s: &[SampledFunction]| 1.0 + s.iter().flat_map(|f| f.values()).fold(0.0f64, |m, v| m.max(v.abs()));
    let coercive_on = |samples: &[SampledFunction]| {
        samples.iter().all(|s| {
            let r = s.grid().iter().fold(0.0f64, |m, g| m.max(g.abs()));
            s.grid()
                .iter()
                .zip(s.values())
                .filter(|(g, _)| g.abs() >= 0.5 * r)
                .all(|(g, v)| *v / g.abs().powf(p) > 0.0)
        })
    };
    let linear = ca.linear.is_some();
    let hyp = Hypotheses {
        f0_convex: gap0 <= 1e-9 * scale(s0),
        f1_convex: linear || gap1 <= 1e-9 * scale(s1),
        growth: f64::from(ca.f0.degree_z()) <= p + 1e-12 && (linear || f64::from(ca.f1.degree_y()) <= p + 1e-12),
        coercive: f64::from(ca.f0.degree_z()) >= p - 1e-12
            && coercive_on(s0)
            && (linear || (f64::from(ca.f1.degree_y()) >= p - 1e-12 && coercive_on(s1))),
        linear_f1: linear,
    };
    Ok((hyp, gap0))
}

/// Limited-memory BFGS with Armijo backtracking. Returns the final point,
/// the iteration count and whether the gradient test was met.
fn lbfgs(
    fg: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    max_iter: usize,
    gtol: f64,
    mut on_iterate: impl FnMut(&[f64]),
) -> (Vec<f64>, usize, bool) {
    const MEMORY: usize = 10;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut x = x0;
    let (mut f, mut g) = fg(&x);
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for it in 0..max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= gtol {
            return (x, it, true);
        }
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = hist.last().map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            hist.clear();
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &dir);
        }
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let (ft, gt) = fg(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                next = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = next else {
            return (x, it, false);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == MEMORY {
                hist.remove(0);
            }
            hist.push((s, y, 1.0 / sy));
        }
        let stalled = (f - fn_).abs() <= 1e-15 * (1.0 + f.abs());
        x = xn;
        f = fn_;
        g = gn;
        on_iterate(&x);
        if stalled && t < 1.0 {
            return (x, it + 1, false);
        }
    }
    (x, max_iter, false)
}

fn domain_interval(problem: &VariationalProblem<f64>) -> (f64, f64) {
    problem.omega.bounds_f64()[0]
}

/// Maximizes the discretized dual over the values of `sigma` on a uniform
/// `x` grid. Free boundaries pin `sigma` to zero at both ends.
pub fn solve_conjugate_dual_1d(problem: &VariationalProblem<f64>, settings: &DualSettings) -> Result<DualFieldPair> {
    settings.validate()?;
    let ca = split_convex_additive(problem)?;
    let (a, b) = domain_interval(problem);
    let x = uniform_grid(a, b, settings.x_nodes)?;
    let n = x.len();
    let h = (b - a) / (n - 1) as f64;
    let w = trapezoid_weights(n, h);
    let (tables, s0, s1) = sample_tables(&ca, &x, settings, ca.linear.is_some())?;
    let (hypotheses, envelope_gap) = check_hypotheses(&ca, problem, &s0, &s1)?;
    let status = if hypotheses.hold() { EstimateStatus::Sharp } else { EstimateStatus::UncertifiedEstimate };
    if status == EstimateStatus::UncertifiedEstimate {
        warn!("sharpness hypotheses fail on the sampling grid: {hypotheses:?}");
    }
    let free = problem.boundary == BoundaryKind::Free && problem.d.is_zero();

    if let Some((slope, rest)) = &ca.linear {
        return solve_linear(problem, &ca, slope, rest, &x, &w, &tables, free, status, hypotheses, envelope_gap);
    }

    let exact = |sigma: &[f64]| -> f64 {
        let rho = derivative(sigma, h);
        (0..n).map(|i| w[i] * (-tables.f0[i].conjugate(sigma[i]) - tables.f1[i].conjugate(rho[i]))).sum()
    };
    let pin = |g: &mut Vec<f64>| {
        if free {
            g[0] = 0.0;
            g[n - 1] = 0.0;
        }
    };
    let neg_objective = |sigma: &[f64], tau: Option<f64>| -> (f64, Vec<f64>) {
        let rho = derivative(sigma, h);
        let parts: Vec<(f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (v0, d0) = match tau {
                    Some(t) => tables.f0[i].smooth_conjugate(sigma[i], t),
                    None => (tables.f0[i].conjugate(sigma[i]), tables.f0[i].z[tables.f0[i].argmax(sigma[i])]),
                };
                let (v1, d1) = match tau {
                    Some(t) => tables.f1[i].smooth_conjugate(rho[i], t),
                    None => (tables.f1[i].conjugate(rho[i]), tables.f1[i].z[tables.f1[i].argmax(rho[i])]),
                };
                (w[i] * (v0 + v1), w[i] * d0, w[i] * d1)
            })
            .collect();
        let value = parts.iter().map(|p| p.0).sum();
        let g1: Vec<f64> = parts.iter().map(|p| p.2).collect();
        let mut grad = derivative_adjoint(&g1, h);
        grad.iter_mut().zip(&parts).for_each(|(g, p)| *g += p.1);
        pin(&mut grad);
        (value, grad)
    };

    let mut sigma = vec![0.0; n];
    let mut best = (exact(&sigma), sigma.clone());
    let stages: Vec<Option<f64>> =
        if settings.smooth { [1e-1, 1e-2, 1e-3, 1e-4].into_iter().map(Some).collect() } else { vec![None] };
    let per_stage = (settings.max_iter / stages.len()).max(1);
    let mut iterations = 0;
    let mut converged = true;
    for tau in stages {
        let gtol = 1e-9 * (b - a);
        let (next, it, ok) = lbfgs(|s| neg_objective(s, tau), sigma, per_stage, gtol, |s| {
            let v = exact(s);
            if v > best.0 {
                best = (v, s.to_vec());
            }
        });
        iterations += it;
        converged = ok || it < per_stage;
        sigma = next;
    }
    let last = exact(&sigma);
    if last >= best.0 {
        best = (last, sigma);
    }
    if !converged {
        warn!("dual ascent stopped before the gradient test; returning the best iterate");
    }
    let (objective, sigma) = best;
    let rho = derivative(&sigma, h);
    Ok(DualFieldPair { x, sigma, rho, objective, iterations, converged, status, hypotheses, envelope_gap })
}

/// `f1 = F(x) y + c(x)`: `f1*` is finite only at `rho = F`, so `sigma` is a
/// primitive of `F` and only its constant is free.
#[allow(clippy::too_many_arguments)]
fn solve_linear(
    problem: &VariationalProblem<f64>,
    ca: &ConvexAdditive,
    slope: &Polynomial<f64>,
    rest: &Polynomial<f64>,
    x: &[f64],
    w: &[f64],
    tables: &Tables,
    free: bool,
    status: EstimateStatus,
    hypotheses: Hypotheses,
    envelope_gap: f64,
) -> Result<DualFieldPair> {
    let _ = ca;
    let primitive = primitive_values(slope, x);
    let fc = slope.compile();
    let rc = rest.compile();
    let rho: Vec<f64> = x.iter().map(|&xi| fc.eval(&[xi, 0.0, 0.0])).collect();
    let c_vals: Vec<f64> = x.iter().map(|&xi| rc.eval(&[xi, 0.0, 0.0])).collect();
    let value = |c: f64| -> f64 {
        (0..x.len()).map(|i| w[i] * (-tables.f0[i].conjugate(c + primitive[i]) + c_vals[i])).sum()
    };
    let constant = if free {
        let end = primitive[x.len() - 1];
        if end.abs() > 1e-9 * (1.0 + primitive.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            return Err(Error::Infeasible(format!(
                "free boundary with f1 linear needs int F = 0, got {end:.3e} in {}",
                problem.name
            )));
        }
        0.0
    } else {
        let lo = tables.f0.iter().map(|t| t.slopes.first().copied().unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
        let hi = tables.f0.iter().map(|t| t.slopes.last().copied().unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
        let pmin = primitive.iter().copied().fold(f64::INFINITY, f64::min);
        let pmax = primitive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        golden_max(&value, lo - pmax, hi - pmin, 200)
    };
    let sigma: Vec<f64> = primitive.iter().map(|p| constant + p).collect();
    Ok(DualFieldPair {
        x: x.to_vec(),
        objective: value(constant),
        sigma,
        rho,
        iterations: 200,
        converged: true,
        status,
        hypotheses,
        envelope_gap,
    })
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// `int_{x_0}^{x_i} F` by Gauss rules exact for the degree of `F`.
fn primitive_values(slope: &Polynomial<f64>, x: &[f64]) -> Vec<f64> {
    let fc = slope.compile();
    let order = slope.degree() as usize / 2 + 1;
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for pair in x.windows(2) {
        acc += gauss_on(order, pair[0], pair[1]).iter().map(|(t, wt)| wt * fc.eval(&[*t, 0.0, 0.0])).sum::<f64>();
        out.push(acc);
    }
    out
}

/// Exact primitive `int_a^x F` as a polynomial in `x`.
fn primitive_poly(slope: &Polynomial<f64>, a: f64) -> Polynomial<f64> {
    let layout = slope.layout();
    let xi = layout.index(Var::X(0));
    let mut out = Polynomial::zero(layout);
    for (mono, c) in slope.terms() {
        let mut e = mono.exponents().to_vec();
        e[xi] += 1;
        let k = f64::from(e[xi]);
        out.add_term(crate::poly::Monomial::from_exponents(e), c / k);
    }
    let at_a = out.substitute_value(Var::X(0), &a).constant_term();
    out.add_scaled(&Polynomial::one(layout), &-at_a);
    out
}

/// Least-squares fit in the Chebyshev basis of `[a, b]`, returned as a
/// polynomial in `x` together with the largest nodal residual.
fn chebyshev_fit(layout: VarLayout, x: &[f64], values: &[f64], degree: usize) -> Result<(Polynomial<f64>, f64)> {
    let (a, b) = (x[0], x[x.len() - 1]);
    let scale = 2.0 / (b - a);
    let t_of = |xi: f64| scale * (xi - a) - 1.0;
    let cols = degree + 1;
    let mut m = DMatrix::<f64>::zeros(x.len(), cols);
    for (r, &xi) in x.iter().enumerate() {
        let t = t_of(xi);
        let (mut prev, mut cur) = (1.0, t);
        m[(r, 0)] = 1.0;
        if cols > 1 {
            m[(r, 1)] = t;
        }
        for k in 2..cols {
            let next = 2.0 * t * cur - prev;
            m[(r, k)] = next;
            prev = cur;
            cur = next;
        }
    }
    let rhs = DVector::from_column_slice(values);
    let coef = m
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Numerical(format!("least-squares fit failed: {e}")))?;
    let residual = (&m * &coef - &rhs).amax();
    let t = {
        let mut t = Polynomial::var(layout, Var::X(0)).scale(&scale);
        t.add_scaled(&Polynomial::one(layout), &(-scale * a - 1.0));
        t
    };
    let mut prev = Polynomial::one(layout);
    let mut cur = t.clone();
    let mut out = prev.scale(&coef[0]);
    if cols > 1 {
        out.add_scaled(&cur, &coef[1]);
    }
    for k in 2..cols {
        let next = &(&t * &cur).scale(&2.0) - &prev;
        out.add_scaled(&next, &coef[k]);
        prev = cur;
        cur = next;
    }
    Ok((out, residual))
}

/// Builds `phi = -sigma(x) y`, `eta = 0`, `l = 0` and a polynomial fit of
/// `h = -f0*(x, sigma) - f1*(x, sigma')`, then certifies it.
pub fn certificate_from_dual_fields(
    fields: &DualFieldPair,
    problem: &VariationalProblem<f64>,
    settings: &DualSettings,
) -> Result<DualCertificate> {
    settings.validate()?;
    let ca = split_convex_additive(problem)?;
    let layout = problem.layout;
    let x = &fields.x;
    if x.len() < 2 || fields.sigma.len() != x.len() {
        return Err(Error::Dimension("dual fields and x grid disagree".into()));
    }
    let (tables, _, _) = sample_tables(&ca, x, settings, ca.linear.is_some())?;
    let (sigma, rho): (Polynomial<f64>, Vec<f64>) = match &ca.linear {
        Some((slope, _)) => {
            let mut s = primitive_poly(slope, x[0]);
            s.add_scaled(&Polynomial::one(layout), &fields.sigma[0]);
            let fc = slope.compile();
            (s, x.iter().map(|&xi| fc.eval(&[xi, 0.0, 0.0])).collect())
        }
        None => {
            let degree = settings.fit_degree.min(x.len() - 1);
            let (s, residual) = chebyshev_fit(layout, x, &fields.sigma, degree)?;
            let bound = settings.fit_tol * (1.0 + fields.sigma.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            if residual > bound {
                return Err(Error::Numerical(format!(
                    "sigma fit residual {residual:.3e} exceeds {bound:.3e}; try fit_degree {}",
                    degree + 2
                )));
            }
            let ds = s.partial(Var::X(0)).compile();
            let rho = x.iter().map(|&xi| ds.eval(&[xi, 0.0, 0.0])).collect();
            (s, rho)
        }
    };
    let sc = sigma.compile();
    let h_vals: Vec<f64> = match &ca.linear {
        Some((_, rest)) => {
            let rc = rest.compile();
            x.iter()
                .enumerate()
                .map(|(i, &xi)| -tables.f0[i].conjugate(sc.eval(&[xi, 0.0, 0.0])) + rc.eval(&[xi, 0.0, 0.0]))
                .collect()
        }
        None => x
            .iter()
            .enumerate()
            .map(|(i, &xi)| -tables.f0[i].conjugate(sc.eval(&[xi, 0.0, 0.0])) - tables.f1[i].conjugate(rho[i]))
            .collect(),
    };
    let (h, _) = chebyshev_fit(layout, x, &h_vals, settings.h_fit_degree.min(x.len() - 1))?;
    let phi = PolyVector::new(vec![-(&sigma * &Polynomial::var(layout, Var::Y(0)))])?;
    let mut cert = DualCertificate::zero(problem);
    cert.phi = phi;
    cert.h = h;
    cert.raw_value = cert.bound(problem)?;
    cert.certified_value = cert.raw_value;
    certify(problem, &cert, settings.verify_radius, settings.verify_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::problem::BoxDomain;

    fn problem(f: &str, dirichlet: bool) -> VariationalProblem<f64> {
        let omega = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let f = parse_polynomial(f, VarLayout::new(1, 1)).unwrap();
        let p = VariationalProblem::new("t", omega, 1, 2.0, f);
        if dirichlet {
            p.with_dirichlet()
        } else {
            p
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let h = 0.3;
        let s = [0.4, -1.0, 2.0, 0.7, 1.1];
        let g = [1.0, 0.5, -0.2, 3.0, -1.5];
        let lhs: f64 = derivative(&s, h).iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = derivative_adjoint(&g, h).iter().zip(&s).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn splits_and_rejects_coupling() {
        let p = problem("z^2 + (y - x)^2", true);
        let ca = split_convex_additive(&p).unwrap();
        assert_eq!(ca.f0.degree_y(), 0);
        assert!(ca.linear.is_none());
        assert!(split_convex_additive(&problem("z*y", true)).is_err());
        let lin = split_convex_additive(&problem("z^2 + x*y", true)).unwrap();
        assert!(lin.linear.is_some());
    }

    #[test]
    fn trivial_instance_has_zero_fields() {
        let p = problem("z^2 + y^2", true);
        let s = DualSettings { x_nodes: 41, conj_nodes: 201, verify_samples: 512, ..DualSettings::default() };
        let fields = solve_conjugate_dual_1d(&p, &s).unwrap();
        assert!(fields.objective.abs() < 1e-12, "{}", fields.objective);
        assert!(fields.sigma.iter().all(|v| v.abs() < 1e-9));
        assert_eq!(fields.status, EstimateStatus::Sharp);
        let cert = certificate_from_dual_fields(&fields, &p, &s).unwrap();
        assert!(cert.is_certified());
        assert!(cert.certified_value.abs() < 1e-9, "{}", cert.certified_value);
    }

    #[test]
    fn linear_f1_uses_primitive() {
        let p = problem("z^2 + x*y", true);
        let s = DualSettings { x_nodes: 201, conj_nodes: 801, verify_samples: 512, ..DualSettings::default() };
        let fields = solve_conjugate_dual_1d(&p, &s).unwrap();
        // u = (x^3 - x)/12 and F* = int x u / 2 = -1/90.
        assert!((fields.objective + 1.0 / 90.0).abs() < 1e-3, "{}", fields.objective);
        let cert = certificate_from_dual_fields(&fields, &p, &s).unwrap();
        assert!(cert.is_certified());
        assert!((cert.certified_value + 1.0 / 90.0).abs() < 2e-3, "{}", cert.certified_value);
    }

    #[test]
    fn chebyshev_fit_reproduces_polynomials() {
        let layout = VarLayout::new(1, 1);
        let x = uniform_grid(0.0, 2.0, 21).unwrap();
        let v: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t * t).collect();
        let (p, r) = chebyshev_fit(layout, &x, &v, 4).unwrap();
        assert!(r < 1e-12);
        let want = parse_polynomial::<f64>("1 - 2*x + 0.5*x^3", layout).unwrap();
        for (m, c) in want.terms() {
            assert!((p.coefficient(m) - c).abs() < 1e-9);
        }
    }
}
