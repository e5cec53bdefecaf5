//! Dense linear programming by the revised primal simplex method.
//!
//! Linearly dependent equality rows are removed first. Rows are then
//! equilibrated to unit max-norm, free variables are split, and a two-phase
//! method with artificial variables runs on a slightly perturbed right-hand
//! side. The entering column has the most negative reduced cost with a
//! Harris ratio test; after a run of degenerate pivots the solver switches to
//! Bland's rule (smallest eligible index, ratio ties to the smallest basic
//! index) so it cannot cycle. Runs are deterministic. Programs with many more
//! rows than columns are solved through their dual, which keeps the basis
//! small.

mod dump;
mod simplex;

pub use dump::to_lp_format;
pub use simplex::{Pricing, SimplexOptions};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `min/max c·x` subject to `A x (<=|>=|=) b`, each `x_j >= 0` or free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub cost: Vec<f64>,
    pub bounds: Vec<VarBound>,
    matrix: Vec<f64>,
    relations: Vec<Relation>,
    rhs: Vec<f64>,
    pub var_names: Option<Vec<String>>,
}

impl LinearProgram {
    pub fn new(sense: Sense, cost: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        LinearProgram { sense, cost, bounds, matrix: Vec::new(), relations: Vec::new(), rhs: Vec::new(), var_names: None }
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_cols(), "row length must equal the number of columns");
        self.matrix.extend(coeffs);
        self.relations.push(relation);
        self.rhs.push(rhs);
    }

    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut row = vec![0.0; self.num_cols()];
        for &(j, v) in entries {
            row[j] += v;
        }
        self.add_row(row, relation, rhs);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_cols();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn relation(&self, i: usize) -> Relation {
        self.relations[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.num_cols() + j]
    }

    /// Multiplies row `i` (coefficients and right-hand side) by `factor > 0`.
    pub fn scale_row(&mut self, i: usize, factor: f64) {
        assert!(factor > 0.0);
        let n = self.num_cols();
        for v in &mut self.matrix[i * n..(i + 1) * n] {
            *v *= factor;
        }
        self.rhs[i] *= factor;
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.num_cols() {
            return Err(Error::Dimension(format!(
                "{} bounds for {} columns",
                self.bounds.len(),
                self.num_cols()
            )));
        }
        if self.matrix.len() != self.num_rows() * self.num_cols() || self.relations.len() != self.num_rows() {
            return Err(Error::Dimension("constraint matrix shape is inconsistent".into()));
        }
        if self.cost.iter().chain(&self.matrix).chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("linear program has non-finite entries".into()));
        }
        if let Some(names) = &self.var_names {
            if names.len() != self.num_cols() {
                return Err(Error::Dimension("variable name count differs from column count".into()));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of the constraints and bounds by `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.num_rows() {
            let ax: f64 = self.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            let r = ax - self.rhs[i];
            let viol = match self.relations[i] {
                Relation::Le => r.max(0.0),
                Relation::Ge => (-r).max(0.0),
                Relation::Eq => r.abs(),
            };
            worst = worst.max(viol);
        }
        for (v, b) in x.iter().zip(&self.bounds) {
            if *b == VarBound::NonNegative {
                worst = worst.max(-v);
            }
        }
        worst
    }

    /// The LP dual, written as a maximization in the variables `y` (one per row).
    /// For a minimization primal, `y_i <= 0` on `<=` rows is expressed by
    /// negating the column, so every dual variable here is free or non-negative.
    fn dual(&self) -> (LinearProgram, Vec<f64>) {
        let sign = if self.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let (m, n) = (self.num_rows(), self.num_cols());
        // Column flips: for `<=` rows the natural dual sign is non-positive.
        let flips: Vec<f64> = self
            .relations
            .iter()
            .map(|r| if *r == Relation::Le { -1.0 } else { 1.0 })
            .collect();
        let cost: Vec<f64> = (0..m).map(|i| self.rhs[i] * flips[i]).collect();
        let bounds: Vec<VarBound> = self
            .relations
            .iter()
            .map(|r| if *r == Relation::Eq { VarBound::Free } else { VarBound::NonNegative })
            .collect();
        let mut dual = LinearProgram::new(Sense::Maximize, cost, bounds);
        dual.matrix.reserve(n * m);
        for j in 0..n {
            let row: Vec<f64> = (0..m).map(|i| self.entry(i, j) * flips[i]).collect();
            let rel = if self.bounds[j] == VarBound::Free { Relation::Eq } else { Relation::Le };
            dual.add_row(row, rel, sign * self.cost[j]);
        }
        (dual, flips)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Either infeasible or unbounded (detected through an infeasible dual).
    InfeasibleOrUnbounded,
    NumericalFailure(String),
}

/// Result of a solve. `duals` are shadow prices, `d objective / d rhs_i`,
/// so that at an optimum `objective = rhs · duals`.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Primal objective after every phase-two pivot, in the original sense.
    /// Pivots run on a slightly perturbed right-hand side, so the last entry
    /// can differ from `objective` by about `1e-8` relative.
    pub objective_trace: Vec<f64>,
    pub solved_dual: bool,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn failed(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            objective: f64::NAN,
            iterations,
            objective_trace: Vec::new(),
            solved_dual: false,
        }
    }
}

/// Solves with default options.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    match independent_equalities(lp) {
        Presolve::Inconsistent => Ok(LpSolution::failed(LpStatus::Infeasible, 0)),
        Presolve::Full => solve_independent(lp, options),
        Presolve::Reduced(kept) => {
            let mut sub = LinearProgram::new(lp.sense, lp.cost.clone(), lp.bounds.clone());
            for &i in &kept {
                sub.add_row(lp.row(i).to_vec(), lp.relation(i), lp.rhs[i]);
            }
            log::debug!("presolve dropped {} dependent equality rows", lp.num_rows() - kept.len());
            let mut sol = solve_independent(&sub, options)?;
            if sol.is_optimal() {
                let mut duals = vec![0.0; lp.num_rows()];
                for (k, &i) in kept.iter().enumerate() {
                    duals[i] = sol.duals[k];
                }
                sol.duals = duals;
            }
            Ok(sol)
        }
    }
}

enum Presolve {
    Full,
    Reduced(Vec<usize>),
    Inconsistent,
}

/// Finds equality rows that are linear combinations of earlier ones by
/// Gram-Schmidt with reorthogonalization on unit-norm rows.
fn independent_equalities(lp: &LinearProgram) -> Presolve {
    let n = lp.num_cols();
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut kept = Vec::with_capacity(lp.num_rows());
    for i in 0..lp.num_rows() {
        if lp.relation(i) != Relation::Eq {
            kept.push(i);
            continue;
        }
        let norm = lp.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if lp.rhs[i].abs() > 1e-9 {
                return Presolve::Inconsistent;
            }
            continue;
        }
        let mut v: Vec<f64> = lp.row(i).iter().map(|a| a / norm).collect();
        let mut beta = lp.rhs[i] / norm;
        for _ in 0..2 {
            for (q, qb) in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                if c != 0.0 {
                    for (vk, qk) in v.iter_mut().zip(q) {
                        *vk -= c * qk;
                    }
                    beta -= c * qb;
                }
            }
        }
        let rest = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if rest < 1e-9 {
            if beta.abs() > 1e-7 * (1.0 + (lp.rhs[i] / norm).abs()) {
                return Presolve::Inconsistent;
            }
            continue;
        }
        for vk in &mut v {
            *vk /= rest;
        }
        basis.push((v, beta / rest));
        kept.push(i);
        debug_assert!(basis.last().map_or(true, |b| b.0.len() == n));
    }
    if kept.len() == lp.num_rows() {
        Presolve::Full
    } else {
        Presolve::Reduced(kept)
    }
}

fn solve_independent(lp: &LinearProgram, options: &SimplexOptions) -> Result<LpSolution> {
    let dualize = options.auto_dualize && lp.num_rows() > 2 * lp.num_cols() && lp.num_rows() > 64;
    if !dualize {
        return Ok(simplex::solve_primal(lp, options));
    }
    let (dual, flips) = lp.dual();
    let dsol = simplex::solve_primal(&dual, options);
    match dsol.status {
        LpStatus::Optimal => {
            let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
            // Shadow prices of the dual constraints are the primal variables.
            let x = dsol.duals.clone();
            let duals: Vec<f64> = dsol.x.iter().zip(&flips).map(|(w, f)| sign * w * f).collect();
            let objective = lp.objective_value(&x);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                duals,
                objective,
                iterations: dsol.iterations,
                objective_trace: Vec::new(),
                solved_dual: true,
            })
        }
        LpStatus::Unbounded => Ok(LpSolution::failed(LpStatus::Infeasible, dsol.iterations)),
        LpStatus::Infeasible | LpStatus::InfeasibleOrUnbounded => {
            if lp.num_rows() <= options.max_direct_rows {
                Ok(simplex::solve_primal(lp, options))
            } else {
                Ok(LpSolution::failed(LpStatus::InfeasibleOrUnbounded, dsol.iterations))
            }
        }
        LpStatus::NumericalFailure(msg) => {
            Ok(LpSolution::failed(LpStatus::NumericalFailure(format!("while solving the dual: {msg}")), dsol.iterations))
        }
    }
}

/// `|c·x - b·y|` for an optimal solution.
pub fn check_duality_gap(lp: &LinearProgram, sol: &LpSolution) -> Result<f64> {
    if !sol.is_optimal() {
        return Err(Error::Invalid(format!("duality gap needs an optimal solution, status is {:?}", sol.status)));
    }
    let primal = lp.objective_value(&sol.x);
    let dual: f64 = lp.rhs.iter().zip(&sol.duals).map(|(b, y)| b * y).sum();
    Ok((primal - dual).abs())
}

/// Largest violation of dual feasibility and complementary slackness
/// (reduced costs of the original columns and row slacks).
pub fn complementarity_residual(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut worst = 0.0f64;
    for j in 0..lp.num_cols() {
        let aty: f64 = (0..lp.num_rows()).map(|i| lp.entry(i, j) * sol.duals[i]).sum();
        // For min: reduced cost c_j - A_j·y >= 0 on non-negative columns, = 0 on free ones.
        let d = sign * (lp.cost[j] - aty);
        let v = match lp.bounds[j] {
            VarBound::Free => d.abs(),
            VarBound::NonNegative => (-d).max(0.0).max((d * sol.x[j]).abs()),
        };
        worst = worst.max(v);
    }
    for i in 0..lp.num_rows() {
        let ax: f64 = lp.row(i).iter().zip(&sol.x).map(|(a, v)| a * v).sum();
        let slack = ax - lp.rhs[i];
        worst = worst.max((slack * sol.duals[i]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonneg(n: usize) -> Vec<VarBound> {
        vec![VarBound::NonNegative; n]
    }

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0], nonneg(1));
        lp.add_row(vec![1.0], Relation::Ge, 3.0);
        let sol = solve(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!(check_duality_gap(&lp, &sol).unwrap() < 1e-8);
    }

    #[test]
    fn maximize_simplex_corner() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0], nonneg(2));
        lp.add_row(vec![1.0, 1.0], Relation::Le, 1.0);
        let sol = solve(&lp).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0], vec![VarBound::Free]);
        lp.add_row(vec![1.0], Relation::Eq, 1.0);
        lp.add_row(vec![1.0], Relation::Eq, 2.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(check_duality_gap(&lp, &sol).is_err());
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-1.0, 0.0], nonneg(2));
        lp.add_row(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_mixed_rows() {
        // min x + 2y  s.t. x + y >= 1, x - y = 0.5, y free, x >= 0
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0], vec![VarBound::NonNegative, VarBound::Free]);
        lp.add_row(vec![1.0, 1.0], Relation::Ge, 1.0);
        lp.add_row(vec![1.0, -1.0], Relation::Eq, 0.5);
        let sol = solve(&lp).unwrap();
        assert!((sol.x[0] - 0.75).abs() < 1e-12 && (sol.x[1] - 0.25).abs() < 1e-12);
        assert!((sol.objective - 1.25).abs() < 1e-12);
        assert!(check_duality_gap(&lp, &sol).unwrap() < 1e-10);
        assert!(complementarity_residual(&lp, &sol) < 1e-10);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0], nonneg(2));
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 2.0);
        lp.add_row(vec![2.0, 2.0], Relation::Eq, 4.0);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 1.5);
        let sol = solve(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tall_programs_go_through_the_dual() {
        // max t s.t. t <= 1 + k/100 for k = 0..200, t free
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0], vec![VarBound::Free]);
        for k in 0..200 {
            lp.add_row(vec![1.0], Relation::Le, 1.0 + k as f64 / 100.0);
        }
        let sol = solve(&lp).unwrap();
        assert!(sol.solved_dual);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!(check_duality_gap(&lp, &sol).unwrap() < 1e-10);
        let direct = solve_with(&lp, &SimplexOptions { auto_dualize: false, ..Default::default() }).unwrap();
        assert!((direct.objective - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn tall_unbounded_program() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0], vec![VarBound::Free]);
        for k in 0..100 {
            lp.add_row(vec![1.0], Relation::Ge, k as f64);
        }
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn validation_rejects_nan() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![f64::NAN], nonneg(1));
        lp.add_row(vec![1.0], Relation::Ge, 0.0);
        assert!(solve(&lp).is_err());
    }
}
