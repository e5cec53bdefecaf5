//! Discrete Legendre transforms and convex envelopes of sampled functions.
//!
//! A [`SampledFunction`] is a list of values on a strictly increasing grid,
//! extended by `+inf` outside the grid. Conjugates are computed from the
//! lower convex hull of the graph, so for piecewise-linear data they are
//! exact at every dual node.

mod dual;

pub use dual::{
    certificate_from_dual_fields, solve_conjugate_dual_1d, split_convex_additive, ConvexAdditive, DualFieldPair,
    DualSettings, EstimateStatus, Hypotheses,
};

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Invalid("sampled function needs a nonempty grid".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::Dimension(format!("{} grid nodes but {} values", grid.len(), values.len())));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Invalid("grid must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("sampled values must be finite".into()));
        }
        Ok(SampledFunction { grid, values })
    }

    /// Samples `f` on `count` uniform nodes of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = uniform_grid(lo, hi, count)?;
        let values = grid.iter().map(|&z| f(z)).collect();
        SampledFunction::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest gap between consecutive nodes, zero for a single node.
    pub fn step(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolation; `+inf` outside the grid.
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.grid.len();
        let (lo, hi) = (self.grid[0], self.grid[n - 1]);
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if z < lo - slack || z > hi + slack {
            return f64::INFINITY;
        }
        if n == 1 {
            return self.values[0];
        }
        let k = self.grid.partition_point(|&g| g <= z).clamp(1, n - 1);
        let (z0, z1) = (self.grid[k - 1], self.grid[k]);
        let t = ((z - z0) / (z1 - z0)).clamp(0.0, 1.0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }
}

pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Invalid("grid needs at least one node".into()));
    }
    if count == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    if !(lo < hi) {
        return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { hi } else { lo + h * i as f64 }).collect())
}

/// Indices of the lower convex hull of the points `(grid[i], values[i])`
/// by monotone chain. Collinear interior points are dropped.
pub(crate) fn lower_hull(grid: &[f64], values: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (grid[b] - grid[a]) * (values[i] - values[a]) - (values[b] - values[a]) * (grid[i] - grid[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Lower hull of a sampled graph, stored as vertices and edge slopes.
#[derive(Clone, Debug)]
pub(crate) struct Hull {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    /// `slopes[k]` is the slope between vertices `k` and `k + 1`.
    pub slopes: Vec<f64>,
}

impl Hull {
    pub fn new(grid: &[f64], values: &[f64]) -> Self {
        let idx = lower_hull(grid, values);
        let z: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let f: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let slopes = z.windows(2).zip(f.windows(2)).map(|(zw, fw)| (fw[1] - fw[0]) / (zw[1] - zw[0])).collect();
        Hull { z, f, slopes }
    }

    /// Vertex attaining `max_k z_k s - f_k`. The slope bracket is only a
    /// starting guess: slopes between nearly coincident vertices are noise,
    /// so the guess is refined by climbing the unimodal vertex values.
    pub fn argmax(&self, s: f64) -> usize {
        let value = |k: usize| self.z[k] * s - self.f[k];
        let mut k = self.slopes.partition_point(|&m| m < s);
        while k > 0 && value(k - 1) > value(k) {
            k -= 1;
        }
        while k + 1 < self.z.len() && value(k + 1) > value(k) {
            k += 1;
        }
        k
    }

    /// `max_k z_k s - f_k`, the conjugate of the sampled function.
    pub fn conjugate(&self, s: f64) -> f64 {
        let k = self.argmax(s);
        self.z[k] * s - self.f[k]
    }

    /// Log-sum-exp smoothing of [`Hull::conjugate`] at temperature `tau`,
    /// with its derivative. Overestimates by at most `tau * ln(#vertices)`.
    pub fn smooth_conjugate(&self, s: f64, tau: f64) -> (f64, f64) {
        let k = self.argmax(s);
        let top = self.z[k] * s - self.f[k];
        let mut sum = 0.0;
        let mut first = 0.0;
        let mut walk = |j: usize| -> bool {
            let e = (self.z[j] * s - self.f[j] - top) / tau;
            if e < -40.0 {
                return false;
            }
            let w = e.exp();
            sum += w;
            first += w * self.z[j];
            true
        };
        walk(k);
        for j in (0..k).rev() {
            if !walk(j) {
                break;
            }
        }
        for j in k + 1..self.z.len() {
            if !walk(j) {
                break;
            }
        }
        (top + tau * sum.ln(), first / sum)
    }
}

/// `s -> max_z {z s - f(z)}` over the nodes of `fs`, evaluated on `grid`.
pub fn conjugate_on(fs: &SampledFunction, grid: &[f64]) -> Result<SampledFunction> {
    let hull = Hull::new(&fs.grid, &fs.values);
    let values = grid.iter().map(|&s| hull.conjugate(s)).collect();
    SampledFunction::new(grid.to_vec(), values)
}

/// Discrete conjugate on a uniform dual grid spanning the hull slopes, with
/// as many nodes as the input. A single-node input has every slope as a
/// subgradient; its conjugate is returned on `[-1, 1]`.
pub fn conjugate(fs: &SampledFunction) -> Result<SampledFunction> {
    let hull = Hull::new(&fs.grid, &fs.values);
    let grid = match (hull.slopes.first(), hull.slopes.last()) {
        (Some(&lo), Some(&hi)) if hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) => {
            uniform_grid(lo, hi, fs.len().max(2))?
        }
        (Some(&lo), Some(&hi)) => vec![0.5 * (lo + hi)],
        _ => uniform_grid(-1.0, 1.0, 3)?,
    };
    let values = grid.iter().map(|&s| hull.conjugate(s)).collect();
    SampledFunction::new(grid, values)
}

/// Convex envelope on the original grid, computed as the double conjugate
/// through the exact hull slopes.
pub fn convexify(fs: &SampledFunction) -> Result<SampledFunction> {
    let hull = Hull::new(&fs.grid, &fs.values);
    if hull.slopes.is_empty() {
        return Ok(fs.clone());
    }
    let mut slopes = hull.slopes.clone();
    slopes.dedup_by(|a, b| *a - *b <= 1e-12 * (1.0 + a.abs().max(b.abs())));
    let star = conjugate_on(fs, &slopes)?;
    conjugate_on(&star, &fs.grid)
}

/// Values on a tensor grid, stored row-major: `values[i * gy.len() + j]`
/// belongs to `(gx[i], gy[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction2 {
    gx: Vec<f64>,
    gy: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction2 {
    pub fn new(gx: Vec<f64>, gy: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != gx.len() * gy.len() {
            return Err(Error::Dimension(format!("expected {} values, got {}", gx.len() * gy.len(), values.len())));
        }
        SampledFunction::new(gx.clone(), vec![0.0; gx.len()])?;
        SampledFunction::new(gy.clone(), vec![0.0; gy.len()])?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("sampled values must be finite".into()));
        }
        Ok(SampledFunction2 { gx, gy, values })
    }

    pub fn from_fn(gx: Vec<f64>, gy: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = gx.iter().flat_map(|&a| gy.iter().map(move |&b| (a, b))).map(|(a, b)| f(a, b)).collect();
        SampledFunction2::new(gx, gy, values)
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.gy.len() + j]
    }

    fn slope_range(&self, axis: usize) -> (f64, f64) {
        let (nx, ny) = (self.gx.len(), self.gy.len());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let (outer, inner) = if axis == 0 { (ny, nx) } else { (nx, ny) };
        for o in 0..outer {
            for k in 1..inner {
                let (a, b, d) = if axis == 0 {
                    (self.at(k - 1, o), self.at(k, o), self.gx[k] - self.gx[k - 1])
                } else {
                    (self.at(o, k - 1), self.at(o, k), self.gy[k] - self.gy[k - 1])
                };
                let m = (b - a) / d;
                lo = lo.min(m);
                hi = hi.max(m);
            }
        }
        if lo > hi {
            (-1.0, 1.0)
        } else {
            (lo, hi)
        }
    }
}

/// Conjugate of a tensor-sampled function by two one-dimensional sweeps:
/// `f*(s, t) = max_b {t b + max_a {s a - f(a, b)}}`.
pub fn conjugate_2d_on(fs: &SampledFunction2, sx: &[f64], sy: &[f64]) -> Result<SampledFunction2> {
    let (nx, ny) = (fs.gx.len(), fs.gy.len());
    // inner[j][k] = max_a {sx[k] a - f(a, gy[j])}
    let inner: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..nx).map(|i| fs.at(i, j)).collect();
            let hull = Hull::new(&fs.gx, &col);
            sx.iter().map(|&s| hull.conjugate(s)).collect()
        })
        .collect();
    let values: Vec<f64> = (0..sx.len())
        .into_par_iter()
        .flat_map_iter(|k| {
            let neg: Vec<f64> = (0..ny).map(|j| -inner[j][k]).collect();
            let hull = Hull::new(&fs.gy, &neg);
            sy.iter().map(move |&t| hull.conjugate(t)).collect::<Vec<_>>()
        })
        .collect();
    SampledFunction2::new(sx.to_vec(), sy.to_vec(), values)
}

/// [`conjugate_2d_on`] on uniform dual grids spanning the axis-wise
/// difference quotients.
pub fn conjugate_2d(fs: &SampledFunction2) -> Result<SampledFunction2> {
    let (ax, bx) = fs.slope_range(0);
    let (ay, by) = fs.slope_range(1);
    let sx = if bx > ax { uniform_grid(ax, bx, fs.gx.len().max(2))? } else { vec![ax] };
    let sy = if by > ay { uniform_grid(ay, by, fs.gy.len().max(2))? } else { vec![ay] };
    conjugate_2d_on(fs, &sx, &sy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convexify_survives_nearly_collinear_hull_edges() {
        let f = SampledFunction::from_fn(-1.6296092124439583, -0.797475827087528, 35, |_| 0.0).unwrap();
        let mut values = vec![0.0; 35];
        values[4] = -4.560072875108253;
        values[19] = -4.733817445993915;
        values[33] = 3.7229101129075093;
        let f = SampledFunction::new(f.grid().to_vec(), values).unwrap();
        let c = convexify(&f).unwrap();
        let cc = convexify(&c).unwrap();
        for (a, b) in c.values().iter().zip(cc.values()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((c.values()[2] - 0.5 * f.values()[4]).abs() < 1e-12);
    }

    #[test]
    fn quadratic_conjugate() {
        let f = SampledFunction::from_fn(-4.0, 4.0, 801, |z| z * z).unwrap();
        let h = f.step();
        let fs = conjugate(&f).unwrap();
        assert!((fs.grid()[0] + 8.0).abs() < 0.02 && (fs.grid()[fs.len() - 1] - 8.0).abs() < 0.02);
        for s in [-4.0, -2.5, -0.3, 0.0, 1.7, 4.0] {
            assert!((fs.eval(s) - s * s / 4.0).abs() <= 2.0 * h * h, "s = {s}");
        }
    }

    #[test]
    fn quartic_conjugate() {
        let f = SampledFunction::from_fn(-3.0, 3.0, 1201, |z| z.powi(4) / 4.0).unwrap();
        let fs = conjugate(&f).unwrap();
        for s in [-5.0f64, -1.0, 0.5, 2.0, 6.0] {
            let exact = 0.75 * s.abs().powf(4.0 / 3.0);
            assert!((fs.eval(s) - exact).abs() < 1e-3, "s = {s}: {} vs {exact}", fs.eval(s));
        }
    }

    #[test]
    fn linear_conjugate_is_an_indicator() {
        let f = SampledFunction::from_fn(-3.0, 3.0, 61, |z| 2.0 * z).unwrap();
        let fs = conjugate(&f).unwrap();
        assert_eq!(fs.len(), 1);
        assert!((fs.grid()[0] - 2.0).abs() < 1e-12);
        assert!(fs.eval(2.0).abs() < 1e-12);
        assert_eq!(fs.eval(2.1), f64::INFINITY);
        assert_eq!(fs.eval(1.9), f64::INFINITY);
    }

    #[test]
    fn envelopes() {
        let f = SampledFunction::from_fn(-3.0, 3.0, 601, |y| ((y - 1.0) * (y + 1.0)).abs()).unwrap();
        let env = convexify(&f).unwrap();
        for (k, &y) in f.grid().iter().enumerate() {
            let expect = if y.abs() <= 1.0 { 0.0 } else { f.values()[k] };
            assert!((env.values()[k] - expect).abs() < 1e-9, "y = {y}");
        }
        let w = SampledFunction::from_fn(-2.0, 2.0, 401, |z| (z * z - 1.0).powi(2)).unwrap();
        let env = convexify(&w).unwrap();
        for (k, &z) in w.grid().iter().enumerate() {
            if z.abs() <= 1.0 {
                assert!(env.values()[k].abs() < 1e-12);
            } else {
                assert!((env.values()[k] - w.values()[k]).abs() < 1e-9);
            }
        }
        let q = SampledFunction::from_fn(-2.0, 2.0, 401, |z| z.powi(4)).unwrap();
        let env = convexify(&q).unwrap();
        for (a, b) in env.values().iter().zip(q.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn piecewise_linear_input_is_exact() {
        // |z| has conjugate 0 on [-1, 1].
        let f = SampledFunction::new(vec![-2.0, 0.0, 2.0], vec![2.0, 0.0, 2.0]).unwrap();
        let fs = conjugate(&f).unwrap();
        assert_eq!(fs.grid(), &[-1.0, 0.0, 1.0]);
        assert!(fs.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tensor_sweep_matches_separable_sum() {
        let g = uniform_grid(-3.0, 3.0, 121).unwrap();
        let f = SampledFunction2::from_fn(g.clone(), g.clone(), |a, b| a * a + 0.5 * b * b).unwrap();
        let s = uniform_grid(-2.0, 2.0, 9).unwrap();
        let fs = conjugate_2d_on(&f, &s, &s).unwrap();
        for (i, &a) in s.iter().enumerate() {
            for (j, &b) in s.iter().enumerate() {
                let exact = a * a / 4.0 + b * b / 2.0;
                assert!((fs.at(i, j) - exact).abs() < 1e-3, "({a}, {b})");
            }
        }
        let auto = conjugate_2d(&f).unwrap();
        assert_eq!(auto.gx().len(), 121);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SampledFunction::new(vec![], vec![]).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0], vec![f64::NAN]).is_err());
    }
}
