use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::exact::{format_rational, to_f64, Rational};

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Terms are keyed by exponent vectors (length `nvars`), ordered
/// lexicographically. Zero coefficients are never stored, so equal
/// polynomials compare equal structurally.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// The coordinate function `phi_{i+1}` (0-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, Rational::one())
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exps.len(), nvars, "exponent length must match variable count");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        MultiPoly { nvars, terms }
    }

    /// `y = 1 + phi_1 + ... + phi_n`.
    pub fn y(nvars: usize) -> Self {
        (0..nvars).fold(Self::one(nvars), |acc, i| &acc + &Self::var(nvars, i))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    /// Partial derivative with respect to `phi_{i+1}`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * Rational::from_integer(e[i].into()));
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(self.nvars), |acc, _| &acc * self)
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &p) in point.iter().zip(e) {
                if p > 0 {
                    t *= num_traits::pow(x.clone(), p as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| e.iter().zip(point).fold(to_f64(c), |t, (&p, x)| t * x.powi(p as i32))).sum()
    }

    fn fmt_monomial(e: &[u32]) -> String {
        let parts: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, &p)| if p == 1 { format!("phi{}", i + 1) } else { format!("phi{}^{}", i + 1, p) })
            .collect();
        parts.join("*")
    }

    /// Renders each term as `coef*monomial`, with `suffix` appended to
    /// the monomial part (used for `y^-m`).
    pub(crate) fn term_strings(&self, suffix: &str) -> Vec<String> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mono = Self::fmt_monomial(e);
                let mut factors = Vec::new();
                let unit = c.is_one() && !(mono.is_empty() && suffix.is_empty());
                if !unit {
                    let txt = format_rational(c);
                    if txt.contains('/') || txt.starts_with('-') {
                        factors.push(format!("({txt})"));
                    } else {
                        factors.push(txt);
                    }
                }
                if !mono.is_empty() {
                    factors.push(mono);
                }
                if !suffix.is_empty() {
                    factors.push(suffix.to_string());
                }
                factors.join("*")
            })
            .collect()
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        write!(f, "{}", self.term_strings("").join(" + "))
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect() }
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    #[test]
    fn arithmetic_is_canonical() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let a = &(&x + &y) * &(&x - &y);
        let b = &(&x * &x) - &(&y * &y);
        assert_eq!(a, b);
        assert!((&a - &b).is_zero());
        assert_eq!(a.total_degree(), 2);
    }

    #[test]
    fn derivative_of_y_power() {
        let y = MultiPoly::y(3);
        let y3 = y.pow(3);
        // d/dphi_2 y^3 = 3 y^2
        assert_eq!(y3.derivative(1), y.pow(2).scale(&int(3)));
    }

    #[test]
    fn evaluation_is_exact() {
        let p = &MultiPoly::monomial(2, vec![2, 1], ratio(1, 3)) + &MultiPoly::constant(2, int(1));
        assert_eq!(p.eval(&[int(3), ratio(1, 2)]), ratio(5, 2));
        assert!((p.eval_f64(&[3.0, 0.5]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn display_is_stable() {
        let p = &MultiPoly::monomial(2, vec![2, 0], ratio(1, 3)) + &MultiPoly::monomial(2, vec![0, 1], int(-2));
        assert_eq!(p.to_string(), "(-2)*phi2 + (1/3)*phi1^2");
    }
}
