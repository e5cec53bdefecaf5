use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense, VarBound};

/// Entering-column rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pricing {
    /// Smallest eligible index throughout.
    Bland,
    /// Most negative reduced cost, switching to Bland's rule after a run of
    /// degenerate pivots until the objective moves again.
    Hybrid,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    /// Solve tall programs through their dual.
    pub auto_dualize: bool,
    /// Largest row count solved directly after the dual was found infeasible.
    pub max_direct_rows: usize,
    pub max_iter: usize,
    /// Pivots between refactorizations of the basis inverse.
    pub reinvert_every: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub pricing: Pricing,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            auto_dualize: true,
            max_direct_rows: 3000,
            max_iter: 200_000,
            reinvert_every: 100,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            pricing: Pricing::Hybrid,
        }
    }
}

const DEGENERATE_RUN: usize = 50;
/// Relative size of the right-hand side perturbation.
const PERTURBATION: f64 = 1e-8;
/// Largest negative basic value accepted after the perturbation is removed.
const RESTORE_TOL: f64 = 1e-9;
const PAR_ROWS: usize = 128;

#[derive(Clone, Copy, Debug)]
enum Col {
    /// Column `k` of the dense structural block.
    Dense(usize),
    /// `sign * e_row` (slack or surplus).
    Unit(usize, f64),
    /// `e_row`, phase one only.
    Artificial(usize),
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Failed(String),
}

#[derive(Clone)]
struct Tableau {
    m: usize,
    /// Column-major structural block, `m` entries per column.
    dense: Vec<f64>,
    cols: Vec<Col>,
    b: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    /// Row-major basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_reinvert: usize,
}

impl Tableau {
    fn alpha(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        match self.cols[j] {
            Col::Dense(k) => {
                let a = &self.dense[k * m..(k + 1) * m];
                let nz: Vec<(usize, f64)> = a.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
                let row = |r: usize| {
                    let bi = &self.binv[r * m..(r + 1) * m];
                    nz.iter().map(|&(k, v)| bi[k] * v).sum::<f64>()
                };
                if m >= PAR_ROWS {
                    (0..m).into_par_iter().map(row).collect()
                } else {
                    (0..m).map(row).collect()
                }
            }
            Col::Unit(r0, s) => (0..m).map(|r| s * self.binv[r * m + r0]).collect(),
            Col::Artificial(r0) => (0..m).map(|r| self.binv[r * m + r0]).collect(),
        }
    }

    fn dot(&self, y: &[f64], j: usize) -> f64 {
        let m = self.m;
        match self.cols[j] {
            Col::Dense(k) => self.dense[k * m..(k + 1) * m].iter().zip(y).map(|(a, v)| a * v).sum(),
            Col::Unit(r, s) => s * y[r],
            Col::Artificial(r) => y[r],
        }
    }

    /// `y = c_B^T B^{-1}`.
    fn prices(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = cost[j];
            if c != 0.0 {
                for (yk, bk) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let mut prow: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for v in &mut prow {
            *v /= piv;
        }
        let update = |(i, row): (usize, &mut [f64])| {
            if i == r {
                row.copy_from_slice(&prow);
            } else if alpha[i] != 0.0 {
                let a = alpha[i];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= a * p;
                }
            }
        };
        if m >= PAR_ROWS {
            self.binv.par_chunks_mut(m).enumerate().for_each(update);
        } else {
            self.binv.chunks_mut(m).enumerate().for_each(update);
        }
        let theta = self.xb[r] / piv;
        for i in 0..m {
            if i == r {
                self.xb[i] = theta;
            } else {
                self.xb[i] -= alpha[i] * theta;
                if self.xb[i] < 0.0 && self.xb[i] > -1e-13 {
                    self.xb[i] = 0.0;
                }
            }
        }
        let out = self.basis[r];
        self.position[out] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;
        self.iterations += 1;
        self.since_reinvert += 1;
    }

    /// Rebuilds `B^{-1}` by Gauss-Jordan elimination with partial pivoting.
    fn reinvert(&mut self) -> Result<(), String> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            match self.cols[j] {
                Col::Dense(k) => {
                    for r in 0..m {
                        a[r * m + c] = self.dense[k * m + r];
                    }
                }
                Col::Unit(r, s) => a[r * m + c] = s,
                Col::Artificial(r) => a[r * m + c] = 1.0,
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (p, best) = (col..m)
                .map(|r| (r, a[r * m + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-12 {
                return Err("basis matrix became singular".into());
            }
            if p != col {
                for k in 0..m {
                    a.swap(p * m + k, col * m + k);
                    inv.swap(p * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            let prow_a: Vec<f64> = a[col * m..(col + 1) * m].to_vec();
            let prow_i: Vec<f64> = inv[col * m..(col + 1) * m].to_vec();
            let elim = |(r, (ar, ir)): (usize, (&mut [f64], &mut [f64]))| {
                if r == col {
                    return;
                }
                let f = ar[col];
                if f != 0.0 {
                    for k in 0..m {
                        ar[k] -= f * prow_a[k];
                        ir[k] -= f * prow_i[k];
                    }
                }
            };
            if m >= PAR_ROWS {
                a.par_chunks_mut(m).zip(inv.par_chunks_mut(m)).enumerate().for_each(elim);
            } else {
                a.chunks_mut(m).zip(inv.chunks_mut(m)).enumerate().for_each(elim);
            }
        }
        self.binv = inv;
        self.xb = (0..m)
            .map(|r| {
                let v: f64 = self.binv[r * m..(r + 1) * m].iter().zip(&self.b).map(|(x, y)| x * y).sum();
                if v < 0.0 && v > -1e-11 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        self.since_reinvert = 0;
        Ok(())
    }

    fn run(
        &mut self,
        cost: &[f64],
        allow_artificial: bool,
        options: &SimplexOptions,
        mut trace: Option<(&mut Vec<f64>, f64)>,
    ) -> PhaseEnd {
        let m = self.m;
        let mut degenerate = 0usize;
        let mut confirmed = false;
        loop {
            if self.iterations >= options.max_iter {
                return PhaseEnd::Failed(format!("iteration limit {} reached", options.max_iter));
            }
            if self.since_reinvert >= options.reinvert_every {
                if let Err(e) = self.reinvert() {
                    return PhaseEnd::Failed(e);
                }
            }
            let y = self.prices(cost);
            let bland = options.pricing == Pricing::Bland || degenerate >= DEGENERATE_RUN;
            let eligible = |j: usize| {
                self.position[j].is_none() && (allow_artificial || !matches!(self.cols[j], Col::Artificial(_)))
            };
            let reduced = |j: usize| cost[j] - self.dot(&y, j);
            let entering = if bland {
                (0..self.cols.len()).find(|&j| eligible(j) && reduced(j) < -options.opt_tol)
            } else {
                let pick = |acc: Option<(usize, f64)>, (j, d): (usize, f64)| match acc {
                    Some((_, best)) if best <= d => acc,
                    _ => Some((j, d)),
                };
                let cand: Vec<(usize, f64)> = if self.cols.len() >= 4096 {
                    (0..self.cols.len())
                        .into_par_iter()
                        .filter(|&j| eligible(j))
                        .map(|j| (j, reduced(j)))
                        .filter(|(_, d)| *d < -options.opt_tol)
                        .collect()
                } else {
                    (0..self.cols.len())
                        .filter(|&j| eligible(j))
                        .map(|j| (j, reduced(j)))
                        .filter(|(_, d)| *d < -options.opt_tol)
                        .collect()
                };
                cand.into_iter().fold(None, pick).map(|(j, _)| j)
            };
            let Some(q) = entering else {
                // Confirm optimality on a fresh factorization.
                if confirmed || self.since_reinvert == 0 {
                    return PhaseEnd::Optimal;
                }
                if let Err(e) = self.reinvert() {
                    return PhaseEnd::Failed(e);
                }
                confirmed = true;
                continue;
            };
            confirmed = false;
            let alpha = self.alpha(q);
            let amax = alpha.iter().fold(0.0f64, |a, v| a.max(*v));
            let ptol = options.pivot_tol.max(1e-9 * amax);
            let leave = if bland {
                let mut leave: Option<(usize, f64)> = None;
                for r in (0..m).filter(|&r| alpha[r] > ptol) {
                    let ratio = self.xb[r].max(0.0) / alpha[r];
                    leave = match leave {
                        Some((r0, best))
                            if best < ratio
                                || ((ratio - best).abs() <= 1e-12 * (1.0 + best.abs())
                                    && self.basis[r0] < self.basis[r]) =>
                        {
                            Some((r0, best))
                        }
                        _ => Some((r, ratio)),
                    };
                }
                leave
            } else {
                // Harris: bound the step with relaxed ratios, then take the largest pivot below it.
                let relaxed = (0..m)
                    .filter(|&r| alpha[r] > ptol)
                    .map(|r| (self.xb[r].max(0.0) + options.feas_tol) / alpha[r])
                    .fold(f64::INFINITY, f64::min);
                (0..m)
                    .filter(|&r| alpha[r] > ptol && self.xb[r].max(0.0) / alpha[r] <= relaxed)
                    .max_by(|&a, &b| alpha[a].total_cmp(&alpha[b]).then(b.cmp(&a)))
                    .map(|r| (r, self.xb[r].max(0.0) / alpha[r]))
            };
            let Some((r, step)) = leave else {
                return PhaseEnd::Unbounded;
            };
            if step <= options.feas_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q, &alpha);
            if let Some((t, sign)) = trace.as_mut() {
                let obj: f64 = self.basis.iter().zip(&self.xb).map(|(&j, x)| cost[j] * x).sum();
                t.push(*sign * obj);
            }
        }
    }
}

/// Phase one from the all-slack/artificial basis, then phase two.
fn two_phase(
    t: &mut Tableau,
    cost1: &[f64],
    cost2: &[f64],
    bmax: f64,
    options: &SimplexOptions,
    trace: &mut Vec<f64>,
    sign: f64,
) -> Result<(), LpSolution> {
    let m = t.m;
    if t.cols.iter().any(|c| matches!(c, Col::Artificial(_))) {
        match t.run(cost1, true, options, None) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Err(LpSolution::failed(
                    LpStatus::NumericalFailure("phase one reported unbounded".into()),
                    t.iterations,
                ))
            }
            PhaseEnd::Failed(e) => return Err(LpSolution::failed(LpStatus::NumericalFailure(e), t.iterations)),
        }
        let infeas: f64 = t.basis.iter().zip(&t.xb).map(|(&j, x)| cost1[j] * x).sum();
        if infeas > 1e3 * options.feas_tol * (1.0 + bmax) {
            return Err(LpSolution::failed(LpStatus::Infeasible, t.iterations));
        }
        // Drive zero-level artificials out of the basis where a pivot exists.
        for r in 0..m {
            if !matches!(t.cols[t.basis[r]], Col::Artificial(_)) {
                continue;
            }
            let row: Vec<f64> = t.binv[r * m..(r + 1) * m].to_vec();
            let cand = (0..t.cols.len())
                .filter(|&j| t.position[j].is_none() && !matches!(t.cols[j], Col::Artificial(_)))
                .map(|j| (j, t.dot(&row, j).abs()))
                .filter(|&(_, v)| v > 1e-7)
                .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                    Some(a) if a.1 >= c.1 => Some(a),
                    _ => Some(c),
                })
                .map(|(j, _)| j);
            if let Some(q) = cand {
                let alpha = t.alpha(q);
                t.pivot(r, q, &alpha);
            }
        }
    }
    match t.run(cost2, false, options, Some((trace, sign))) {
        PhaseEnd::Optimal => Ok(()),
        PhaseEnd::Unbounded => Err(LpSolution::failed(LpStatus::Unbounded, t.iterations)),
        PhaseEnd::Failed(e) => Err(LpSolution::failed(LpStatus::NumericalFailure(e), t.iterations)),
    }
}

/// Two-phase primal simplex on the program as stated.
pub(crate) fn solve_primal(lp: &LinearProgram, options: &SimplexOptions) -> LpSolution {
    let (m, n) = (lp.num_rows(), lp.num_cols());
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };

    // Row scaling to unit max-norm, then sign flips so that b >= 0.
    let mut row_factor = vec![1.0; m];
    let mut relations = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let norm = lp.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut f = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let mut rel = lp.relation(i);
        if lp.rhs()[i] < 0.0 {
            f = -f;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        row_factor[i] = f;
        relations.push(rel);
        b.push(lp.rhs()[i] * f);
    }

    // Structural columns, free variables split into a +/- pair.
    let mut origin: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        origin.push((j, 1.0));
        if lp.bounds[j] == VarBound::Free {
            origin.push((j, -1.0));
        }
    }
    let ns = origin.len();
    let mut dense = vec![0.0; ns * m];
    for (k, &(j, s)) in origin.iter().enumerate() {
        for i in 0..m {
            dense[k * m + i] = s * lp.entry(i, j) * row_factor[i];
        }
    }
    let mut cols: Vec<Col> = (0..ns).map(Col::Dense).collect();
    let mut cost2: Vec<f64> = origin.iter().map(|&(j, s)| sign * s * lp.cost[j]).collect();
    let mut basis = vec![usize::MAX; m];
    for (i, rel) in relations.iter().enumerate() {
        match rel {
            Relation::Le => {
                basis[i] = cols.len();
                cols.push(Col::Unit(i, 1.0));
                cost2.push(0.0);
            }
            Relation::Ge => {
                cols.push(Col::Unit(i, -1.0));
                cost2.push(0.0);
            }
            Relation::Eq => {}
        }
    }
    let mut cost1 = vec![0.0; cols.len()];
    for (i, rel) in relations.iter().enumerate() {
        if *rel != Relation::Le {
            basis[i] = cols.len();
            cols.push(Col::Artificial(i));
            cost1.push(1.0);
            cost2.push(0.0);
        }
    }
    let mut position = vec![None; cols.len()];
    for (r, &j) in basis.iter().enumerate() {
        position[j] = Some(r);
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let start = Tableau {
        m,
        dense,
        cols,
        b: b.clone(),
        basis,
        position,
        binv,
        xb: b.clone(),
        iterations: 0,
        since_reinvert: 0,
    };
    let bmax = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let phases = |rhs: &[f64], trace: &mut Vec<f64>| -> Result<Tableau, LpSolution> {
        let mut t = start.clone();
        t.b = rhs.to_vec();
        t.xb = rhs.to_vec();
        two_phase(&mut t, &cost1, &cost2, bmax, options, trace, sign)?;
        Ok(t)
    };

    // Perturbing the scaled right-hand side removes the degenerate vertices
    // that otherwise stall the pricing. The final basis is then re-evaluated
    // at the true right-hand side; when that is infeasible the program is
    // solved again unperturbed.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let perturbed: Vec<f64> = b.iter().map(|v| v + PERTURBATION * (1.0 + v.abs()) * (1.0 + rng.gen::<f64>())).collect();
    let mut trace = Vec::new();
    let spent;
    let restored = match phases(&perturbed, &mut trace) {
        Ok(mut t) => {
            spent = t.iterations;
            t.b = b.clone();
            let clean = t.reinvert().is_ok()
                && t.basis.iter().zip(&t.xb).all(|(&j, &v)| {
                    v >= -RESTORE_TOL && (!matches!(t.cols[j], Col::Artificial(_)) || v <= RESTORE_TOL)
                });
            clean.then_some(t)
        }
        Err(fail) => {
            spent = fail.iterations;
            None
        }
    };
    let mut t = match restored {
        Some(t) => t,
        None => {
            trace.clear();
            match phases(&b, &mut trace) {
                Ok(mut t) => {
                    t.iterations += spent;
                    t
                }
                Err(mut fail) => {
                    fail.iterations += spent;
                    return fail;
                }
            }
        }
    };
    for v in &mut t.xb {
        *v = v.max(0.0);
    }

    let mut x = vec![0.0; n];
    for (r, &j) in t.basis.iter().enumerate() {
        if let Col::Dense(k) = t.cols[j] {
            let (orig, s) = origin[k];
            x[orig] += s * t.xb[r];
        }
    }
    let y = t.prices(&cost2);
    let duals: Vec<f64> = y.iter().zip(&row_factor).map(|(v, f)| sign * v * f).collect();
    let bmax = lp.rhs().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let resid = lp.primal_residual(&x);
    if resid > 1e-6 * (1.0 + bmax) {
        return LpSolution::failed(
            LpStatus::NumericalFailure(format!("final primal residual {resid:.3e}")),
            t.iterations,
        );
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        duals,
        iterations: t.iterations,
        objective_trace: trace,
        solved_dual: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_duality_gap, solve_with};

    #[test]
    fn bland_and_hybrid_agree() {
        // Klee-Minty cube in 4 dimensions.
        let d = 4;
        let cost: Vec<f64> = (0..d).map(|j| -(2f64.powi((d - 1 - j) as i32))).collect();
        let mut lp = LinearProgram::new(Sense::Minimize, cost, vec![VarBound::NonNegative; d]);
        for i in 0..d {
            let mut row = vec![0.0; d];
            for (j, v) in row.iter_mut().enumerate().take(i) {
                *v = 2f64.powi((i - j + 1) as i32);
            }
            row[i] = 1.0;
            lp.add_row(row, Relation::Le, 5f64.powi(i as i32 + 1));
        }
        let a = solve_with(&lp, &SimplexOptions { pricing: Pricing::Bland, ..Default::default() }).unwrap();
        let b = solve_with(&lp, &SimplexOptions::default()).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        assert!((a.objective + 625.0).abs() < 1e-9);
        assert!(check_duality_gap(&lp, &a).unwrap() < 1e-8);
    }

    #[test]
    fn trace_is_monotone() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0, 4.0], vec![VarBound::NonNegative; 3]);
        lp.add_row(vec![1.0, 1.0, 2.0], Relation::Le, 4.0);
        lp.add_row(vec![2.0, 0.0, 3.0], Relation::Le, 5.0);
        lp.add_row(vec![2.0, 1.0, 3.0], Relation::Le, 7.0);
        let sol = solve_with(&lp, &SimplexOptions::default()).unwrap();
        assert!(sol.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!((sol.objective - sol.objective_trace.last().copied().unwrap_or(0.0)).abs() < 1e-6);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // min x s.t. -x <= -2
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0], vec![VarBound::NonNegative]);
        lp.add_row(vec![-1.0], Relation::Le, -2.0);
        let sol = solve_with(&lp, &SimplexOptions::default()).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.duals[0] + 1.0).abs() < 1e-12);
    }
}
