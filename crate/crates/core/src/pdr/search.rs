//! Sampling-based minimum search for polynomials on boxes.

use rayon::prelude::*;

use crate::poly::{CompiledPoly, Polynomial};
use crate::sampling::Halton;

/// A polynomial with its gradient, compiled for f64 evaluation.
pub(crate) struct Objective {
    value: CompiledPoly,
    grad: Vec<CompiledPoly>,
}

impl Objective {
    pub(crate) fn new(p: &Polynomial<f64>) -> Self {
        let layout = p.layout();
        let grad = (0..layout.nvars()).map(|k| p.partial(layout.var(k)).compile()).collect();
        Objective { value: p.compile(), grad }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SearchResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// False when polishing produced non-finite values.
    pub reliable: bool,
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Projected gradient descent with Armijo backtracking inside `[lo, hi]`.
/// Coordinates with `lo == hi` stay fixed.
pub(crate) fn polish(obj: &Objective, start: &[f64], lo: &[f64], hi: &[f64], max_iter: usize) -> (Vec<f64>, f64, bool) {
    let mut x = start.to_vec();
    let mut fx = obj.eval(&x);
    let mut step = 1.0;
    for _ in 0..max_iter {
        if !fx.is_finite() {
            return (x, fx, false);
        }
        let g = obj.gradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            return (x, fx, false);
        }
        let mut accepted = false;
        while step > 1e-16 {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v - step * d).collect();
            clamp(&mut trial, lo, hi);
            let moved: f64 = trial.iter().zip(&x).zip(&g).map(|((t, v), d)| d * (v - t)).sum();
            let ft = obj.eval(&trial);
            if ft.is_finite() && ft <= fx - 1e-4 * moved && moved > 0.0 {
                x = trial;
                fx = ft;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, fx, fx.is_finite())
}

/// Evaluates `obj` on Halton points of the box plus `extra` points, keeps
/// the points accepted by `keep`, then polishes the `starts` best. Results
/// are sorted by value, best first.
pub(crate) fn search_minima(
    obj: &Objective,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    extra: &[Vec<f64>],
    starts: usize,
    keep: &(dyn Fn(&[f64]) -> bool + Sync),
) -> Vec<SearchResult> {
    let mut points = Halton::new(lo.len()).sample_box(samples, lo, hi);
    points.extend(extra.iter().cloned());
    let mut scored: Vec<(f64, Vec<f64>)> =
        points.into_par_iter().filter(|p| keep(p)).map(|p| (obj.eval(&p), p)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(starts);
    let mut out: Vec<SearchResult> = scored
        .into_par_iter()
        .map(|(v0, p)| {
            let (x, v, ok) = polish(obj, &p, lo, hi, 500);
            // Polishing may leave the constraint set; fall back to the sample.
            if keep(&x) && v <= v0 {
                SearchResult { point: x, value: v, reliable: ok }
            } else {
                SearchResult { point: p, value: v0, reliable: ok }
            }
        })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, VarLayout};

    #[test]
    fn finds_interior_and_boundary_minima() {
        let l = VarLayout::new(1, 1);
        let p = parse_polynomial::<f64>("(y - 0.3)^2 + (z + 0.7)^2 - x", l).unwrap();
        let obj = Objective::new(&p);
        let res = search_minima(&obj, &[-1.0, -2.0, -2.0], &[1.0, 2.0, 2.0], 512, &[], 8, &|_| true);
        let best = &res[0];
        assert!((best.value + 1.0).abs() < 1e-9, "{best:?}");
        assert!((best.point[0] - 1.0).abs() < 1e-12);
        assert!((best.point[1] - 0.3).abs() < 1e-5 && (best.point[2] + 0.7).abs() < 1e-5);
    }

    #[test]
    fn fixed_coordinates_do_not_move() {
        let l = VarLayout::new(1, 1);
        let p = parse_polynomial::<f64>("y^2 + x", l).unwrap();
        let obj = Objective::new(&p);
        let (x, v, ok) = polish(&obj, &[1.0, 0.5, 0.0], &[1.0, -1.0, 0.0], &[1.0, 1.0, 0.0], 100);
        assert!(ok);
        assert_eq!(x[0], 1.0);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
