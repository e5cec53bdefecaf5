use super::Polynomial;

/// Flattened `f64` polynomial for repeated evaluation in hot loops.
///
/// Terms are stored as a coefficient plus a list of `(variable, exponent)`
/// factors; evaluation builds a per-variable power table once per point.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    max_exp: Vec<u16>,
    coeffs: Vec<f64>,
    factors: Vec<Vec<(u32, u16)>>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial<f64>) -> Self {
        let nvars = p.layout().nvars();
        let mut max_exp = vec![0u16; nvars];
        let mut coeffs = Vec::with_capacity(p.num_terms());
        let mut factors = Vec::with_capacity(p.num_terms());
        for (m, &c) in p.terms() {
            let mut fs = Vec::new();
            for (k, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    fs.push((k as u32, e));
                    max_exp[k] = max_exp[k].max(e);
                }
            }
            coeffs.push(c);
            factors.push(fs);
        }
        CompiledPoly { nvars, max_exp, coeffs, factors }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates at a flat point; `point.len()` must equal `nvars`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.nvars);
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (c, fs) in self.coeffs.iter().zip(&self.factors) {
            let mut term = *c;
            for &(k, e) in fs {
                term *= powi(point[k as usize], e);
            }
            total += term;
        }
        total
    }

    /// Evaluates at many points stored row-major in `points`.
    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        let mut table = PowerTable::new(&self.max_exp);
        points
            .chunks_exact(self.nvars.max(1))
            .map(|pt| {
                table.fill(pt);
                self.eval_with(&table)
            })
            .collect()
    }

    fn eval_with(&self, table: &PowerTable) -> f64 {
        let mut total = 0.0;
        for (c, fs) in self.coeffs.iter().zip(&self.factors) {
            let mut term = *c;
            for &(k, e) in fs {
                term *= table.get(k as usize, e);
            }
            total += term;
        }
        total
    }
}

fn powi(v: f64, e: u16) -> f64 {
    match e {
        1 => v,
        2 => v * v,
        3 => v * v * v,
        _ => v.powi(e as i32),
    }
}

struct PowerTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl PowerTable {
    fn new(max_exp: &[u16]) -> Self {
        let mut offsets = Vec::with_capacity(max_exp.len());
        let mut total = 0;
        for &e in max_exp {
            offsets.push(total);
            total += e as usize + 1;
        }
        PowerTable { offsets, values: vec![1.0; total] }
    }

    fn fill(&mut self, point: &[f64]) {
        for (k, &v) in point.iter().enumerate() {
            let start = self.offsets[k];
            let end = self.offsets.get(k + 1).copied().unwrap_or(self.values.len());
            let mut acc = 1.0;
            for slot in &mut self.values[start..end] {
                *slot = acc;
                acc *= v;
            }
        }
    }

    fn get(&self, k: usize, e: u16) -> f64 {
        self.values[self.offsets[k] + e as usize]
    }
}

#[cfg(test)]
mod tests {
    use crate::poly::{parse_polynomial, VarLayout};

    #[test]
    fn matches_generic_eval() {
        let l = VarLayout::new(2, 1);
        let p = parse_polynomial::<f64>("x1^3*y - 2*z11*z12^2 + 0.5", l).unwrap();
        let c = p.compile();
        let pt = [0.3, -1.1, 2.0, 0.7, -0.4];
        let expected = p.eval(&pt).unwrap();
        assert!((c.eval(&pt) - expected).abs() < 1e-14);
        let many = c.eval_many(&[pt, pt].concat());
        assert!((many[1] - expected).abs() < 1e-14);
    }
}
