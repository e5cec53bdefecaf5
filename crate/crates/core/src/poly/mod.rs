//! Sparse multivariate polynomials over the variable blocks `x`, `y`, `z`.
//!
//! A [`VarLayout`] with dimensions `(n, m)` fixes `n + m + m*n` variables in
//! the order `x_1..x_n, y_1..y_m, z_11, z_12, .., z_mn`, where `z_ji` stands
//! for the partial derivative of `u_j` with respect to `x_i`.

mod compiled;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use compiled::CompiledPoly;
pub use parse::{parse_polynomial, parse_polyvector};

/// Dimensions of the `x` (independent) and `y` (dependent) blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarLayout {
    pub n: usize,
    pub m: usize,
}

/// A single variable of a layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
    /// `Z(j, i)` is the derivative of `u_j` with respect to `x_i`.
    Z(usize, usize),
}

impl VarLayout {
    pub fn new(n: usize, m: usize) -> Self {
        VarLayout { n, m }
    }

    pub fn nvars(&self) -> usize {
        self.n + self.m + self.m * self.n
    }

    pub fn index(&self, v: Var) -> usize {
        match v {
            Var::X(i) => {
                assert!(i < self.n, "x index out of range");
                i
            }
            Var::Y(j) => {
                assert!(j < self.m, "y index out of range");
                self.n + j
            }
            Var::Z(j, i) => {
                assert!(j < self.m && i < self.n, "z index out of range");
                self.n + self.m + j * self.n + i
            }
        }
    }

    pub fn var(&self, index: usize) -> Var {
        if index < self.n {
            Var::X(index)
        } else if index < self.n + self.m {
            Var::Y(index - self.n)
        } else {
            let k = index - self.n - self.m;
            Var::Z(k / self.n, k % self.n)
        }
    }

    pub fn is_valid(&self, v: Var) -> bool {
        match v {
            Var::X(i) => i < self.n,
            Var::Y(j) => j < self.m,
            Var::Z(j, i) => j < self.m && i < self.n,
        }
    }

    pub fn var_name(&self, index: usize) -> String {
        let scalar = self.n == 1 && self.m == 1;
        match self.var(index) {
            Var::X(i) if scalar => {
                let _ = i;
                "x".to_string()
            }
            Var::Y(_) if scalar => "y".to_string(),
            Var::Z(..) if scalar => "z".to_string(),
            Var::X(i) => format!("x{}", i + 1),
            Var::Y(j) => format!("y{}", j + 1),
            Var::Z(j, i) if self.m < 10 && self.n < 10 => format!("z{}{}", j + 1, i + 1),
            Var::Z(j, i) => format!("z{}_{}", j + 1, i + 1),
        }
    }

    /// Packs block values into one flat point, checking dimensions.
    pub fn flatten<S: Clone>(&self, x: &[S], y: &[S], z: &[S]) -> Result<Vec<S>> {
        if x.len() != self.n || y.len() != self.m || z.len() != self.m * self.n {
            return Err(Error::Dimension(format!(
                "point has (|x|, |y|, |z|) = ({}, {}, {}), expected ({}, {}, {})",
                x.len(),
                y.len(),
                z.len(),
                self.n,
                self.m,
                self.m * self.n
            )));
        }
        let mut out = Vec::with_capacity(self.nvars());
        out.extend_from_slice(x);
        out.extend_from_slice(y);
        out.extend_from_slice(z);
        Ok(out)
    }
}

/// Exponent vector of a monomial, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn from_exponents(exps: Vec<u16>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with coefficients in `S`; zero coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S: Scalar> {
    layout: VarLayout,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(layout: VarLayout) -> Self {
        Polynomial { layout, terms: BTreeMap::new() }
    }

    pub fn constant(layout: VarLayout, c: S) -> Self {
        let mut p = Self::zero(layout);
        p.add_term(Monomial::one(layout.nvars()), c);
        p
    }

    pub fn one(layout: VarLayout) -> Self {
        Self::constant(layout, S::one())
    }

    pub fn var(layout: VarLayout, v: Var) -> Self {
        Self::monomial(layout, S::one(), &[(v, 1)])
    }

    pub fn monomial(layout: VarLayout, c: S, powers: &[(Var, u16)]) -> Self {
        let mut exps = vec![0u16; layout.nvars()];
        for &(v, e) in powers {
            exps[layout.index(v)] += e;
        }
        let mut p = Self::zero(layout);
        p.add_term(Monomial(exps), c);
        p
    }

    pub fn from_terms(layout: VarLayout, terms: impl IntoIterator<Item = (Monomial, S)>) -> Self {
        let mut p = Self::zero(layout);
        for (mono, c) in terms {
            assert_eq!(mono.0.len(), layout.nvars(), "monomial length does not match layout");
            p.add_term(mono, c);
        }
        p
    }

    pub fn layout(&self) -> VarLayout {
        self.layout
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &Monomial) -> S {
        self.terms.get(mono).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coefficient(&Monomial::one(self.layout.nvars()))
    }

    /// Adds `c * mono` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, mono: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&mono);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    fn block_degree(&self, range: std::ops::Range<usize>) -> u32 {
        self.terms
            .keys()
            .map(|m| m.0[range.clone()].iter().map(|&e| e as u32).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_x(&self) -> u32 {
        self.block_degree(0..self.layout.n)
    }

    pub fn degree_y(&self) -> u32 {
        self.block_degree(self.layout.n..self.layout.n + self.layout.m)
    }

    pub fn degree_z(&self) -> u32 {
        self.block_degree(self.layout.n + self.layout.m..self.layout.nvars())
    }

    /// Joint degree in the `(y, z)` variables.
    pub fn degree_yz(&self) -> u32 {
        self.block_degree(self.layout.n..self.layout.nvars())
    }

    pub fn depends_on_y(&self) -> bool {
        self.degree_y() > 0
    }

    pub fn depends_on_z(&self) -> bool {
        self.degree_z() > 0
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let k = self.layout.index(v);
        self.terms.keys().any(|m| m.0[k] > 0)
    }

    fn check_layout(&self, other: &Self) {
        assert_eq!(self.layout, other.layout, "polynomials over different layouts");
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.layout);
        }
        let mut out = Self::zero(self.layout);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        self.check_layout(other);
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v.clone() * c.clone());
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.layout);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative.
    pub fn partial(&self, v: Var) -> Self {
        let k = self.layout.index(v);
        let mut out = Self::zero(self.layout);
        for (m, c) in &self.terms {
            let e = m.0[k];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[k] -= 1;
            out.add_term(Monomial(exps), c.clone() * S::from_i64(e as i64));
        }
        out
    }

    /// Evaluates at a flat point of length `nvars`.
    pub fn eval(&self, point: &[S]) -> Result<S> {
        if point.len() != self.layout.nvars() {
            return Err(Error::Dimension(format!(
                "evaluation point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.layout.nvars()
            )));
        }
        let mut cache: Vec<Vec<S>> = point.iter().map(|v| vec![S::one(), v.clone()]).collect();
        let mut total = S::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (k, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let powers = &mut cache[k];
                while powers.len() <= e as usize {
                    let next = powers.last().unwrap().clone() * point[k].clone();
                    powers.push(next);
                }
                term = term * powers[e as usize].clone();
            }
            total = total + term;
        }
        Ok(total)
    }

    /// Evaluates at block values `(x, y, z)`, with `z` in row-major `(j, i)` order.
    pub fn eval_blocks(&self, x: &[S], y: &[S], z: &[S]) -> Result<S> {
        let point = self.layout.flatten(x, y, z)?;
        self.eval(&point)
    }

    /// Replaces a variable by a constant.
    pub fn substitute_value(&self, v: Var, value: &S) -> Self {
        let k = self.layout.index(v);
        let mut out = Self::zero(self.layout);
        for (m, c) in &self.terms {
            let e = m.0[k];
            let mut exps = m.0.clone();
            exps[k] = 0;
            out.add_term(Monomial(exps), c.clone() * value.pow_u32(e as u32));
        }
        out
    }

    /// Substitutes every variable `k` by `subs[k]`; the result lives in the
    /// layout of the substitutes.
    pub fn compose(&self, subs: &[Polynomial<S>]) -> Result<Self> {
        if subs.len() != self.layout.nvars() {
            return Err(Error::Dimension(format!(
                "compose needs {} substitutes, got {}",
                self.layout.nvars(),
                subs.len()
            )));
        }
        let target = subs.first().map(|s| s.layout).unwrap_or(self.layout);
        if subs.iter().any(|s| s.layout != target) {
            return Err(Error::Dimension("substitutes use different layouts".into()));
        }
        let mut cache: Vec<Vec<Polynomial<S>>> =
            subs.iter().map(|s| vec![Polynomial::one(target), s.clone()]).collect();
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (k, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let powers = &mut cache[k];
                while powers.len() <= e as usize {
                    let next = powers.last().unwrap() * &subs[k];
                    powers.push(next);
                }
                term = &term * &powers[e as usize];
            }
            out.add_scaled(&term, &S::one());
        }
        Ok(out)
    }

    /// Identity substitution list for this layout, to be edited before [`compose`](Self::compose).
    pub fn identity_substitution(layout: VarLayout) -> Vec<Polynomial<S>> {
        (0..layout.nvars()).map(|k| Polynomial::var(layout, layout.var(k))).collect()
    }

    /// Integrates over the axis-aligned box `bounds` (one interval per `x` axis).
    pub fn integrate_box(&self, bounds: &[(S, S)]) -> Result<S> {
        if self.depends_on_y() || self.depends_on_z() {
            return Err(Error::Invalid("integrate_box requires a polynomial in x only".into()));
        }
        if bounds.len() != self.layout.n {
            return Err(Error::Dimension(format!(
                "box has {} axes, polynomial has n = {}",
                bounds.len(),
                self.layout.n
            )));
        }
        let mut total = S::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, (lo, hi)) in bounds.iter().enumerate() {
                term = term * integrate_power(m.0[i] as u32, lo, hi);
            }
            total = total + term;
        }
        Ok(total)
    }

    /// Integrates over a subset of the `x` axes, leaving the others free.
    /// `bounds[i] = None` keeps axis `i`.
    pub fn integrate_axes(&self, bounds: &[Option<(S, S)>]) -> Result<Self> {
        if bounds.len() != self.layout.n {
            return Err(Error::Dimension("integrate_axes needs one entry per x axis".into()));
        }
        let mut out = Self::zero(self.layout);
        for (m, c) in &self.terms {
            let mut exps = m.0.clone();
            let mut coeff = c.clone();
            for (i, b) in bounds.iter().enumerate() {
                if let Some((lo, hi)) = b {
                    coeff = coeff * integrate_power(exps[i] as u32, lo, hi);
                    exps[i] = 0;
                }
            }
            out.add_term(Monomial(exps), coeff);
        }
        Ok(out)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.layout);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Re-embeds the polynomial in a layout with the same `n` and `m` plus
    /// possibly fewer used blocks; panics if variables would be lost.
    pub fn relayout(&self, layout: VarLayout) -> Self {
        if layout == self.layout {
            return self.clone();
        }
        let mut out = Self::zero(layout);
        for (m, c) in &self.terms {
            let mut exps = vec![0u16; layout.nvars()];
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let v = self.layout.var(k);
                    assert!(layout.is_valid(v), "variable {v:?} not present in target layout");
                    exps[layout.index(v)] = e;
                }
            }
            out.add_term(Monomial(exps), c.clone());
        }
        out
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(&self.to_f64())
    }

    /// Largest coefficient magnitude, 0 for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

fn integrate_power<S: Scalar>(k: u32, lo: &S, hi: &S) -> S {
    let k1 = k + 1;
    (hi.pow_u32(k1) - lo.pow_u32(k1)) / S::from_i64(k1 as i64)
}

impl<'a, S: Scalar> std::ops::Add<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn add(self, rhs: &Polynomial<S>) -> Polynomial<S> {
        let mut out = self.clone();
        out.add_scaled(rhs, &S::one());
        out
    }
}

impl<'a, S: Scalar> std::ops::Sub<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn sub(self, rhs: &Polynomial<S>) -> Polynomial<S> {
        let mut out = self.clone();
        out.add_scaled(rhs, &(-S::one()));
        out
    }
}

impl<'a, S: Scalar> std::ops::Mul<&'a Polynomial<S>> for &'a Polynomial<S> {
    type Output = Polynomial<S>;
    fn mul(self, rhs: &Polynomial<S>) -> Polynomial<S> {
        self.check_layout(rhs);
        let mut out = Polynomial::zero(self.layout);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<S: Scalar> std::ops::Neg for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        self.scale(&(-S::one()))
    }
}

impl<S: Scalar> std::ops::Add for Polynomial<S> {
    type Output = Polynomial<S>;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl<S: Scalar> std::ops::Sub for Polynomial<S> {
    type Output = Polynomial<S>;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<S: Scalar> std::ops::Mul for Polynomial<S> {
    type Output = Polynomial<S>;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<S: Scalar> std::ops::Neg for Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Self {
        -&self
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(self, f, |c| c.to_string())
    }
}

impl<S: Scalar> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(self, f, |c| format!("{c:?}"))
    }
}

/// Text form accepted by [`parse_polynomial`]; floats use the shortest
/// round-trip representation.
pub fn format_polynomial<S: Scalar>(p: &Polynomial<S>) -> String {
    format!("{p:?}")
}

fn write_poly<S: Scalar>(
    p: &Polynomial<S>,
    f: &mut fmt::Formatter<'_>,
    coeff: impl Fn(&S) -> String,
) -> fmt::Result {
    if p.terms.is_empty() {
        return write!(f, "0");
    }
    for (idx, (m, c)) in p.terms.iter().rev().enumerate() {
        let mut text = coeff(c);
        let negative = text.starts_with('-');
        if negative {
            text.remove(0);
        }
        if idx == 0 {
            if negative {
                write!(f, "-")?;
            }
        } else if negative {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        let mut factors = Vec::new();
        for (k, &e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(p.layout.var_name(k)),
                _ => factors.push(format!("{}^{}", p.layout.var_name(k), e)),
            }
        }
        if factors.is_empty() {
            write!(f, "{text}")?;
        } else if text == "1" || text == "1.0" {
            write!(f, "{}", factors.join("*"))?;
        } else {
            write!(f, "{}*{}", text, factors.join("*"))?;
        }
    }
    Ok(())
}

/// A vector of polynomials over one layout, e.g. a test field `phi: R^n`.
#[derive(Clone, PartialEq)]
pub struct PolyVector<S: Scalar> {
    entries: Vec<Polynomial<S>>,
}

impl<S: Scalar> PolyVector<S> {
    pub fn new(entries: Vec<Polynomial<S>>) -> Result<Self> {
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.layout != first.layout) {
                return Err(Error::Dimension("PolyVector entries use different layouts".into()));
            }
        }
        Ok(PolyVector { entries })
    }

    pub fn zeros(layout: VarLayout, len: usize) -> Self {
        PolyVector { entries: vec![Polynomial::zero(layout); len] }
    }

    pub fn entries(&self) -> &[Polynomial<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &Polynomial<S> {
        &self.entries[i]
    }

    pub fn set(&mut self, i: usize, p: Polynomial<S>) {
        self.entries[i] = p;
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Polynomial<S>> {
        self.entries.iter()
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Polynomial::is_zero)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&Polynomial<S>) -> Polynomial<T>) -> PolyVector<T> {
        PolyVector { entries: self.entries.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> PolyVector<f64> {
        self.map(Polynomial::to_f64)
    }

    pub fn eval(&self, point: &[S]) -> Result<Vec<S>> {
        self.entries.iter().map(|p| p.eval(point)).collect()
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|p| p.scale(c))
    }
}

impl<S: Scalar> fmt::Debug for PolyVector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.iter()).finish()
    }
}

impl<S: Scalar> std::ops::Index<usize> for PolyVector<S> {
    type Output = Polynomial<S>;
    fn index(&self, i: usize) -> &Polynomial<S> {
        &self.entries[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn l11() -> VarLayout {
        VarLayout::new(1, 1)
    }

    fn p(text: &str, layout: VarLayout) -> Polynomial<Exact> {
        parse_polynomial(text, layout).unwrap()
    }

    #[test]
    fn monomial_product_evaluates() {
        let q = p("x*z", l11());
        let v = q.eval(&[Exact::from_i64(2), Exact::from_i64(7), Exact::from_i64(3)]).unwrap();
        assert_eq!(v, Exact::from_i64(6));
    }

    #[test]
    fn zero_and_root() {
        let zero = Polynomial::<f64>::zero(l11());
        assert_eq!(zero.eval(&[0.3, -1.2, 4.0]).unwrap(), 0.0);
        let q = p("y^2 - 1", l11());
        assert!(q.eval(&[Exact::zero(), Exact::one(), Exact::zero()]).unwrap().is_zero());
    }

    #[test]
    fn eval_checks_dimension() {
        let q = p("x", l11());
        assert!(matches!(q.eval(&[Exact::one()]), Err(Error::Dimension(_))));
        assert!(q.eval_blocks(&[Exact::one()], &[], &[]).is_err());
    }

    #[test]
    fn partials() {
        let l = l11();
        assert_eq!(p("y^2", l).partial(Var::Y(0)), p("2*y", l));
        assert!(p("y^2", l).partial(Var::X(0)).is_zero());
        assert_eq!(p("x*y*z", l).partial(Var::X(0)), p("y*z", l));
    }

    #[test]
    fn box_integrals() {
        let one_d = VarLayout::new(1, 1);
        let b = [(Exact::from_i64(-1), Exact::from_i64(1))];
        assert_eq!(p("x^2", one_d).integrate_box(&b).unwrap(), Exact::from_ratio(2, 3));
        assert_eq!(p("1", one_d).integrate_box(&b).unwrap(), Exact::from_i64(2));
        let two_d = VarLayout::new(2, 1);
        let b2 = [(Exact::zero(), Exact::one()), (Exact::zero(), Exact::one())];
        assert_eq!(p("x1*x2", two_d).integrate_box(&b2).unwrap(), Exact::from_ratio(1, 4));
        assert!(matches!(p("y", one_d).integrate_box(&b), Err(Error::Invalid(_))));
    }

    #[test]
    fn no_zero_terms_after_cancellation() {
        let a = p("x + y", l11());
        let b = p("x - y", l11());
        let d = &a - &b;
        assert_eq!(d.num_terms(), 1);
        let zero = &a - &a;
        assert!(zero.is_zero());
        assert_eq!(zero.num_terms(), 0);
    }

    #[test]
    fn degree_queries() {
        let q = p("x^3*y + z^2 + 1", l11());
        assert_eq!(q.degree(), 4);
        assert_eq!(q.degree_x(), 3);
        assert_eq!(q.degree_yz(), 2);
        assert!(q.depends_on_z());
    }

    #[test]
    fn compose_shift() {
        let l = l11();
        let f = p("z^2", l);
        let mut subs = Polynomial::identity_substitution(l);
        subs[2] = p("z + 1", l);
        assert_eq!(f.compose(&subs).unwrap(), p("(z+1)^2", l));
    }

    #[test]
    fn graded_lex_order_is_deterministic() {
        let q = p("1 + y + x^2 + x*y", l11());
        let degrees: Vec<u32> = q.terms().map(|(m, _)| m.degree()).collect();
        assert_eq!(degrees, vec![0, 1, 2, 2]);
        assert_eq!(format!("{q:?}"), "x^2 + x*y + y + 1");
    }

    #[test]
    fn substitute_and_partial_integration() {
        let l = VarLayout::new(2, 1);
        let q = p("x1^2*x2 + y", l);
        let fixed = q.substitute_value(Var::X(1), &Exact::from_i64(2));
        assert_eq!(fixed, p("2*x1^2 + y", l));
        let half = p("x1*x2", l)
            .integrate_axes(&[Some((Exact::zero(), Exact::one())), None])
            .unwrap();
        assert_eq!(half, p("x2/2", l));
    }
}
