//! Exact rational scalars and fraction-free linear algebra.
//!
//! Every rank decision in the crate goes through [`bareiss_rank`], which
//! clears denominators row by row and then runs Bareiss elimination over
//! the integers, so intermediate entries stay bounded by minors of the
//! input instead of growing like naive rational Gaussian elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"`, an integer, or a decimal literal (`"-1.25"`, `"3e-2"`)
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        let den: BigInt = den.trim().parse().map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(s).ok_or_else(|| ParseRationalError::Malformed(s.to_string()))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut all = String::with_capacity(whole.len() + frac.len());
    all.push_str(whole);
    all.push_str(frac);
    let mut value = Rational::from_integer(all.parse::<BigInt>().ok()?);
    let shift = exponent - frac.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Some(if negative { -value } else { value })
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator can overflow f64 separately
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Scales a rational row by the lcm of its denominators.
fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
}

/// Runs fraction-free elimination in place and returns the rank.
fn bareiss_in_place(m: &mut [Vec<BigInt>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Exact rank of a rational matrix given as rows.
pub fn bareiss_rank(rows: &[Vec<Rational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| integer_row(r)).collect();
    bareiss_in_place(&mut m)
}

/// Exact determinant of a square rational matrix.
pub fn determinant(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    if n == 0 {
        return Rational::one();
    }
    assert!(rows.iter().all(|r| r.len() == n), "determinant of non-square matrix");
    let mut scale = Rational::one();
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in rows {
        let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        scale /= Rational::from_integer(lcm.clone());
        m.push(row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect());
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            sign = -sign;
        }
        for r in col + 1..n {
            for c in col + 1..n {
                let v = &m[col][col] * &m[r][c] - &m[r][col] * &m[col][c];
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[col][col].clone();
    }
    let det = Rational::from_integer(m[n - 1][n - 1].clone()) * scale;
    if sign < 0 {
        -det
    } else {
        det
    }
}

pub fn transpose(rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    if rows.is_empty() {
        return Vec::new();
    }
    (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].clone()).collect()).collect()
}

/// True when `v` is a linear combination of `rows`.
pub fn in_row_space(rows: &[Vec<Rational>], v: &[Rational]) -> bool {
    let base = bareiss_rank(rows);
    let mut stacked = rows.to_vec();
    stacked.push(v.to_vec());
    bareiss_rank(&stacked) == base
}

/// Coefficients `c` with `sum_r c_r rows[r] = v`, if any exist.
pub fn row_combination(rows: &[Vec<Rational>], v: &[Rational]) -> Option<Vec<Rational>> {
    // Solve rows^T c = v by elimination on the augmented system.
    let m = rows.len();
    let mut sys: Vec<Vec<Rational>> = (0..v.len())
        .map(|i| rows.iter().map(|r| r[i].clone()).chain(std::iter::once(v[i].clone())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m {
        let Some(p) = (row..sys.len()).find(|&r| !sys[r][col].is_zero()) else {
            continue;
        };
        sys.swap(row, p);
        let inv = sys[row][col].recip();
        for x in sys[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..sys.len() {
            if r != row && !sys[r][col].is_zero() {
                let f = sys[r][col].clone();
                for c in 0..=m {
                    let d = &f * &sys[row][c];
                    sys[r][c] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if sys[row..].iter().any(|r| !r[m].is_zero()) {
        return None;
    }
    let mut c = vec![Rational::zero(); m];
    for (r, &col) in pivots.iter().enumerate() {
        c[col] = sys[r][m].clone();
    }
    Some(c)
}

pub fn is_nonnegative(q: &Rational) -> bool {
    !q.is_negative()
}
