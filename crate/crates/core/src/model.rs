//! Hidden-Markov drift model: drift vectors, generator matrix and the
//! derived drift-difference geometry.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{format_rational, parse_rational, ParseRationalError, Rational};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad rational in {field}: {source}")]
    Rational {
        field: String,
        #[source]
        source: ParseRationalError,
    },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("state index {index} out of range for {states} states")]
    IndexOutOfRange { index: usize, states: usize },
    #[error("difference vectors are antipodal: a_{0} = -a_{1}")]
    Antipodal(usize, usize),
    #[error("model is invalid: {0}")]
    Invalid(String),
}

/// Drift vectors `lambda[0..=n]` in Q^k and generator `q` of the hidden chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub k: usize,
    pub n: usize,
    pub lambda: Vec<Vec<Rational>>,
    pub q: Vec<Vec<Rational>>,
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

/// Difference matrix `A` (k x n, column i is `lambda_i - lambda_0`), its Gram
/// matrix and squared column norms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftGeometry {
    pub k: usize,
    pub n: usize,
    /// Row-major, `a[r][i]` is coordinate r of a_{i+1}.
    pub a: Vec<Vec<Rational>>,
    pub sigma: Vec<Vec<Rational>>,
    pub sqnorms: Vec<Rational>,
}

impl DriftGeometry {
    /// Column a_i (1-based state index i in 1..=n) as a vector in Q^k.
    pub fn column(&self, i: usize) -> Vec<Rational> {
        (0..self.k).map(|r| self.a[r][i - 1].clone()).collect()
    }

    /// Rows of `A^T`, i.e. the vectors a_1..a_n.
    pub fn columns(&self) -> Vec<Vec<Rational>> {
        (1..=self.n).map(|i| self.column(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Degenerate,
    Elliptic,
}

impl ModelSpec {
    /// Builds a model and checks that dimensions line up.
    pub fn new(k: usize, lambda: Vec<Vec<Rational>>, q: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        let n = lambda.len().saturating_sub(1);
        let spec = ModelSpec { k, n, lambda, q, labels: None };
        spec.check_structure()?;
        Ok(spec)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, ModelError> {
        self.labels = Some(labels);
        self.check_structure()?;
        Ok(self)
    }

    pub fn states(&self) -> usize {
        self.n + 1
    }

    pub fn regime(&self) -> Regime {
        if self.k < self.n {
            Regime::Degenerate
        } else {
            Regime::Elliptic
        }
    }

    /// True when every entry of the generator is zero.
    pub fn is_testing(&self) -> bool {
        self.q.iter().flatten().all(Zero::is_zero)
    }

    pub fn check_structure(&self) -> Result<(), ModelError> {
        if self.k == 0 {
            return Err(ModelError::Structure("k must be positive".into()));
        }
        if self.n == 0 || self.lambda.len() != self.n + 1 {
            return Err(ModelError::Structure(format!(
                "expected n+1 = {} drift vectors with n >= 1, got {}",
                self.n + 1,
                self.lambda.len()
            )));
        }
        if let Some((i, v)) = self.lambda.iter().enumerate().find(|(_, v)| v.len() != self.k) {
            return Err(ModelError::Structure(format!(
                "drift vector {i} has length {}, expected k = {}",
                v.len(),
                self.k
            )));
        }
        if self.q.len() != self.n + 1 || self.q.iter().any(|row| row.len() != self.n + 1) {
            return Err(ModelError::Structure(format!("generator must be {0}x{0}", self.n + 1)));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.n + 1 {
                return Err(ModelError::Structure(format!("expected {} labels, got {}", self.n + 1, labels.len())));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }
}

/// Checks generator and drift invariants. Never mutates the model.
pub fn validate_model(spec: &ModelSpec) -> Result<ValidationResult, ModelError> {
    spec.check_structure()?;
    let mut out = ValidationResult::default();
    for (i, row) in spec.q.iter().enumerate() {
        let sum: Rational = row.iter().cloned().sum();
        if !sum.is_zero() {
            out.violations.push(Violation {
                code: "generator-row-sum",
                message: format!("row {i} of Q sums to {}", format_rational(&sum)),
            });
        }
        for (j, q) in row.iter().enumerate() {
            if i != j && q.is_negative() {
                out.violations.push(Violation {
                    code: "generator-offdiag-negative",
                    message: format!("q[{i}][{j}] = {} is negative", format_rational(q)),
                });
            }
            if i == j && q.is_positive() {
                out.violations.push(Violation {
                    code: "generator-diag-positive",
                    message: format!("q[{i}][{i}] = {} is positive", format_rational(q)),
                });
            }
        }
    }
    for i in 0..spec.states() {
        for j in i + 1..spec.states() {
            if spec.lambda[i] == spec.lambda[j] {
                out.violations.push(Violation {
                    code: "drifts-not-distinct",
                    message: format!("drift vectors {i} and {j} coincide"),
                });
            }
        }
    }
    if spec.regime() == Regime::Elliptic {
        out.warnings.push(format!(
            "k = {} >= n = {}: classically elliptic regime, outside the degenerate case",
            spec.k, spec.n
        ));
    }
    Ok(out)
}

/// Computes A, Sigma = A^T A and the squared norms exactly.
pub fn derive_geometry(spec: &ModelSpec) -> Result<DriftGeometry, ModelError> {
    spec.check_structure()?;
    let (k, n) = (spec.k, spec.n);
    let a: Vec<Vec<Rational>> =
        (0..k).map(|r| (1..=n).map(|i| &spec.lambda[i][r] - &spec.lambda[0][r]).collect()).collect();
    let dot = |i: usize, j: usize| -> Rational { (0..k).map(|r| &a[r][i] * &a[r][j]).sum() };
    let sigma: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| dot(i, j)).collect()).collect();
    let sqnorms = (0..n).map(|i| sigma[i][i].clone()).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (0..k).all(|r| (&a[r][i] + &a[r][j]).is_zero()) {
                return Err(ModelError::Antipodal(i + 1, j + 1));
            }
        }
    }
    Ok(DriftGeometry { k, n, a, sigma, sqnorms })
}

/// Permutes states so that `new_base` becomes state 0 (swapping it with the
/// old state 0).
pub fn relabel_base(spec: &ModelSpec, new_base: usize) -> Result<ModelSpec, ModelError> {
    if new_base > spec.n {
        return Err(ModelError::IndexOutOfRange { index: new_base, states: spec.states() });
    }
    let mut perm: Vec<usize> = (0..spec.states()).collect();
    perm.swap(0, new_base);
    let lambda = perm.iter().map(|&p| spec.lambda[p].clone()).collect();
    let q = perm.iter().map(|&pi| perm.iter().map(|&pj| spec.q[pi][pj].clone()).collect()).collect();
    let labels = spec.labels.as_ref().map(|l| perm.iter().map(|&p| l[p].clone()).collect());
    Ok(ModelSpec { k: spec.k, n: spec.n, lambda, q, labels })
}

/// On-disk JSON representation with rationals as strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub k: usize,
    pub n: usize,
    pub lambda: Vec<Vec<RationalText>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<RationalText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A rational written as a JSON string (`"p/q"` or decimal) or a JSON integer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalText {
    Text(String),
    Integer(i64),
}

impl RationalText {
    fn parse(&self) -> Result<Rational, ParseRationalError> {
        match self {
            RationalText::Text(s) => parse_rational(s),
            RationalText::Integer(v) => Ok(crate::exact::int(*v)),
        }
    }
}

impl ModelFile {
    pub fn into_spec(self) -> Result<ModelSpec, ModelError> {
        let parse_matrix = |name: &str, m: &[Vec<RationalText>]| -> Result<Vec<Vec<Rational>>, ModelError> {
            m.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, v)| {
                            v.parse()
                                .map_err(|source| ModelError::Rational { field: format!("{name}[{i}][{j}]"), source })
                        })
                        .collect()
                })
                .collect()
        };
        let spec = ModelSpec {
            k: self.k,
            n: self.n,
            lambda: parse_matrix("lambda", &self.lambda)?,
            q: parse_matrix("Q", &self.q)?,
            labels: self.labels,
        };
        spec.check_structure()?;
        Ok(spec)
    }
}

impl From<&ModelSpec> for ModelFile {
    fn from(spec: &ModelSpec) -> Self {
        let text = |m: &[Vec<Rational>]| {
            m.iter().map(|row| row.iter().map(|v| RationalText::Text(format_rational(v))).collect()).collect()
        };
        ModelFile { k: spec.k, n: spec.n, lambda: text(&spec.lambda), q: text(&spec.q), labels: spec.labels.clone() }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model(k={}, n={}", self.k, self.n)?;
        for (i, l) in self.lambda.iter().enumerate() {
            let parts: Vec<String> = l.iter().map(format_rational).collect();
            write!(f, ", lambda_{i}=({})", parts.join(","))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{determinant, int};

    fn scalar_model(drifts: &[i64], q: Vec<Vec<Rational>>) -> ModelSpec {
        ModelSpec::new(1, drifts.iter().map(|&d| vec![int(d)]).collect(), q).unwrap()
    }

    fn zero_q(states: usize) -> Vec<Vec<Rational>> {
        vec![vec![int(0); states]; states]
    }

    #[test]
    fn three_drift_model_is_valid() {
        let spec = scalar_model(&[0, 1, 2], zero_q(3));
        let res = validate_model(&spec).unwrap();
        assert!(res.is_valid(), "{res:?}");
        assert!(res.warnings.is_empty());
        assert!(spec.is_testing());
    }

    #[test]
    fn row_sum_violation_is_reported() {
        let mut q = zero_q(3);
        q[1][2] = int(1);
        let res = validate_model(&scalar_model(&[0, 1, 2], q)).unwrap();
        assert_eq!(res.codes(), vec!["generator-row-sum"]);
    }

    #[test]
    fn sign_violations_are_reported() {
        let mut q = zero_q(3);
        q[0][0] = int(1);
        q[0][1] = int(-1);
        let res = validate_model(&scalar_model(&[0, 1, 2], q)).unwrap();
        assert_eq!(res.codes(), vec!["generator-diag-positive", "generator-offdiag-negative"]);
    }

    #[test]
    fn repeated_drift_is_reported() {
        let res = validate_model(&scalar_model(&[0, 1, 1], zero_q(3))).unwrap();
        assert_eq!(res.codes(), vec!["drifts-not-distinct"]);
    }

    #[test]
    fn elliptic_regime_is_a_warning() {
        let spec = ModelSpec::new(2, vec![vec![int(0), int(0)], vec![int(1), int(0)]], zero_q(2)).unwrap();
        let res = validate_model(&spec).unwrap();
        assert!(res.is_valid());
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let bad =
            ModelSpec { k: 2, n: 1, lambda: vec![vec![int(0), int(0)], vec![int(1)]], q: zero_q(2), labels: None };
        assert!(matches!(validate_model(&bad), Err(ModelError::Structure(_))));
        let bad_q = ModelSpec { k: 1, n: 1, lambda: vec![vec![int(0)], vec![int(1)]], q: zero_q(3), labels: None };
        assert!(matches!(validate_model(&bad_q), Err(ModelError::Structure(_))));
    }

    #[test]
    fn geometry_of_three_drifts() {
        let g = derive_geometry(&scalar_model(&[0, 1, 2], zero_q(3))).unwrap();
        assert_eq!(g.a, vec![vec![int(1), int(2)]]);
        assert_eq!(g.sigma, vec![vec![int(1), int(2)], vec![int(2), int(4)]]);
        assert_eq!(g.sqnorms, vec![int(1), int(4)]);
    }

    #[test]
    fn antipodal_differences_are_rejected() {
        let err = derive_geometry(&scalar_model(&[0, 1, -1], zero_q(3))).unwrap_err();
        assert!(matches!(err, ModelError::Antipodal(1, 2)));
    }

    #[test]
    fn relabel_identity_and_involution() {
        let mut q = zero_q(3);
        q[0][0] = int(-2);
        q[0][1] = int(1);
        q[0][2] = int(1);
        let spec = scalar_model(&[0, 1, 2], q);
        assert_eq!(relabel_base(&spec, 0).unwrap(), spec);
        let twice = relabel_base(&relabel_base(&spec, 1).unwrap(), 1).unwrap();
        assert_eq!(twice, spec);
        assert!(matches!(relabel_base(&spec, 3), Err(ModelError::IndexOutOfRange { .. })));
    }

    #[test]
    fn relabel_at_last_state_flips_differences() {
        let spec = scalar_model(&[0, 1, 2], zero_q(3));
        let g = derive_geometry(&relabel_base(&spec, 2).unwrap()).unwrap();
        assert_eq!(g.a, vec![vec![int(-1), int(-2)]]);
    }

    #[test]
    fn relabel_keeps_characteristic_polynomial() {
        let mut q = zero_q(3);
        q[0] = vec![int(-3), int(1), int(2)];
        q[1] = vec![int(4), int(-4), int(0)];
        let spec = scalar_model(&[0, 1, 2], q);
        let moved = relabel_base(&spec, 2).unwrap();
        for x in -3..=3 {
            let shifted = |m: &Vec<Vec<Rational>>| -> Vec<Vec<Rational>> {
                m.iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter().enumerate().map(|(j, v)| if i == j { v - int(x) } else { v.clone() }).collect()
                    })
                    .collect()
            };
            assert_eq!(determinant(&shifted(&spec.q)), determinant(&shifted(&moved.q)));
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let text = r#"{"k":1,"n":2,"lambda":[["0"],["1/3"],["0.25"]],"Q":[["-1","1/2","0.5"],[0,0,0],[0,0,0]],"labels":["a","b","c"]}"#;
        let spec = ModelSpec::from_json(text).unwrap();
        assert_eq!(spec.lambda[1][0], crate::exact::ratio(1, 3));
        assert_eq!(spec.lambda[2][0], crate::exact::ratio(1, 4));
        let again = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn json_errors_are_typed() {
        assert!(matches!(ModelSpec::from_json("{"), Err(ModelError::Json(_))));
        let bad = r#"{"k":1,"n":1,"lambda":[["0"],["x"]],"Q":[["0","0"],["0","0"]]}"#;
        assert!(matches!(ModelSpec::from_json(bad), Err(ModelError::Rational { .. })));
        let mismatch = r#"{"k":2,"n":1,"lambda":[["0"],["1"]],"Q":[["0","0"],["0","0"]]}"#;
        assert!(matches!(ModelSpec::from_json(mismatch), Err(ModelError::Structure(_))));
    }
}
