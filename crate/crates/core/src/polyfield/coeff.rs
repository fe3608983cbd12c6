use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::exact::Rational;

use super::poly::MultiPoly;

/// A function `sum_m p_m(phi) / y(phi)^m` on the open orthant.
///
/// Terms with different y-powers are kept apart; equality and zero tests
/// clear denominators instead of merging in storage.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalCoefficient {
    nvars: usize,
    terms: BTreeMap<u32, MultiPoly>,
}

impl RationalCoefficient {
    pub fn zero(nvars: usize) -> Self {
        RationalCoefficient { nvars, terms: BTreeMap::new() }
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        Self::with_y_power(p, 0)
    }

    /// `p / y^m`.
    pub fn with_y_power(p: MultiPoly, m: u32) -> Self {
        let mut out = Self::zero(p.nvars());
        out.add_term(m, p);
        out
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(nvars, c))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// `(y-power, numerator)` pairs in ascending y-power.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &MultiPoly)> {
        self.terms.iter().map(|(m, p)| (*m, p))
    }

    pub fn y_power_term(&self, m: u32) -> MultiPoly {
        self.terms.get(&m).cloned().unwrap_or_else(|| MultiPoly::zero(self.nvars))
    }

    pub fn max_y_power(&self) -> u32 {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|&m| m == 0)
    }

    /// Largest total degree among stored numerators.
    pub fn total_degree(&self) -> u32 {
        self.terms.values().map(MultiPoly::total_degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: u32, p: MultiPoly) {
        if p.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&m) {
            Some(existing) => &existing + &p,
            None => p,
        };
        if !merged.is_zero() {
            self.terms.insert(m, merged);
        }
    }

    /// Numerator after multiplying through by `y^M`, `M` the largest power.
    pub fn cleared_numerator(&self) -> MultiPoly {
        let top = self.max_y_power();
        let y = MultiPoly::y(self.nvars);
        self.terms.iter().fold(MultiPoly::zero(self.nvars), |acc, (m, p)| &acc + &(p * &y.pow(top - m)))
    }

    /// Zero as a rational function on the orthant.
    pub fn is_zero(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        if self.terms.len() == 1 {
            return false;
        }
        self.cleared_numerator().is_zero()
    }

    /// Drops the representation to empty when it denotes the zero function.
    pub fn normalized(self) -> Self {
        if self.terms.len() > 1 && self.is_zero() {
            Self::zero(self.nvars)
        } else {
            self
        }
    }

    pub fn equals(&self, other: &Self) -> bool {
        (self - other).is_zero()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        RationalCoefficient { nvars: self.nvars, terms: self.terms.iter().map(|(m, p)| (*m, p.scale(c))).collect() }
    }

    /// Uses `d y / d phi_i = 1`:
    /// `d(p / y^m) = (dp) / y^m - m p / y^(m+1)`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (&m, p) in &self.terms {
            out.add_term(m, p.derivative(i));
            if m > 0 {
                out.add_term(m + 1, p.scale(&Rational::from_integer((-(m as i64)).into())));
            }
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        if self.terms.is_empty() {
            return Rational::zero();
        }
        let y: Rational = point.iter().cloned().sum::<Rational>() + Rational::from_integer(1.into());
        let mut acc = Rational::zero();
        for (&m, p) in &self.terms {
            acc += p.eval(point) / num_traits::pow(y.clone(), m as usize);
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let y = 1.0 + point.iter().sum::<f64>();
        self.terms.iter().map(|(&m, p)| p.eval_f64(point) / y.powi(m as i32)).sum()
    }

    pub(crate) fn term_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&m, p) in &self.terms {
            let suffix = if m == 0 { String::new() } else { format!("y^-{m}") };
            out.extend(p.term_strings(&suffix));
        }
        out
    }
}

impl fmt::Display for RationalCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.term_strings();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Add for &RationalCoefficient {
    type Output = RationalCoefficient;
    fn add(self, rhs: &RationalCoefficient) -> RationalCoefficient {
        let mut out = self.clone();
        for (&m, p) in &rhs.terms {
            out.add_term(m, p.clone());
        }
        out
    }
}

impl Sub for &RationalCoefficient {
    type Output = RationalCoefficient;
    fn sub(self, rhs: &RationalCoefficient) -> RationalCoefficient {
        let mut out = self.clone();
        for (&m, p) in &rhs.terms {
            out.add_term(m, -p);
        }
        out
    }
}

impl Neg for &RationalCoefficient {
    type Output = RationalCoefficient;
    fn neg(self) -> RationalCoefficient {
        RationalCoefficient { nvars: self.nvars, terms: self.terms.iter().map(|(m, p)| (*m, -p)).collect() }
    }
}

impl Mul for &RationalCoefficient {
    type Output = RationalCoefficient;
    fn mul(self, rhs: &RationalCoefficient) -> RationalCoefficient {
        let mut out = RationalCoefficient::zero(self.nvars);
        for (&ma, pa) in &self.terms {
            for (&mb, pb) in &rhs.terms {
                out.add_term(ma + mb, pa * pb);
            }
        }
        out
    }
}
