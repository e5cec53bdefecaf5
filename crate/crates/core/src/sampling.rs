//! Deterministic low-discrepancy sampling.

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    out
}

/// Halton sequence in `[0, 1)^dim`, skipping the all-zero first point.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sampler supports at most {} dimensions", PRIMES.len());
        Halton { dim, next: 1 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.next;
        self.next += 1;
        (0..self.dim).map(|k| radical_inverse(i, PRIMES[k])).collect()
    }

    /// `count` points mapped affinely onto the box `lo..hi` per coordinate.
    pub fn sample_box(&mut self, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(lo.len(), self.dim);
        assert_eq!(hi.len(), self.dim);
        (0..count)
            .map(|_| {
                let u = self.next_point();
                u.iter().enumerate().map(|(k, t)| lo[k] + t * (hi[k] - lo[k])).collect()
            })
            .collect()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(count > 0);
    let n = count;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[lo, hi]`.
pub fn gauss_on(count: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(count);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    nodes.iter().zip(&weights).map(|(x, w)| (mid + half * x, half * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn halton_stays_in_box() {
        let mut h = Halton::new(3);
        for p in h.sample_box(500, &[-1.0, 0.0, 2.0], &[1.0, 1.0, 5.0]) {
            assert!(p[0] >= -1.0 && p[0] < 1.0);
            assert!(p[2] >= 2.0 && p[2] < 5.0);
        }
    }

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for count in 1..12 {
            let rule = gauss_on(count, -1.0, 2.0);
            for k in 0..(2 * count) {
                let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = (2f64.powi(k as i32 + 1) - (-1f64).powi(k as i32 + 1)) / (k as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-11 * (1.0 + exact.abs()), "count {count} k {k}");
            }
        }
    }
}
