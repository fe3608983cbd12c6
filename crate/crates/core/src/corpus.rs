//! Built-in example models with their expected analysis outcome.

use serde::Serialize;

use crate::exact::{int, Rational};
use crate::hormander::Verdict;
use crate::model::ModelSpec;
use crate::theorems::AnalysisReport;

#[derive(Clone, Debug, Serialize)]
pub struct ExpectedSummary {
    /// Criteria expected to hold.
    pub holds: Vec<&'static str>,
    /// Criteria expected to be applicable but fail.
    pub fails: Vec<&'static str>,
    pub brute_rank: usize,
    pub spans: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleDescriptor {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: serde_json::Value,
    pub expected: ExpectedSummary,
    #[serde(skip)]
    pub model: ModelSpec,
}

impl ExampleDescriptor {
    /// Differences between `report` and the expected summary; empty on a match.
    pub fn mismatches(&self, report: &AnalysisReport) -> Vec<String> {
        let mut out = Vec::new();
        for (codes, want) in [(&self.expected.holds, true), (&self.expected.fails, false)] {
            for code in codes.iter() {
                match report.verdicts.iter().find(|v| v.theorem.code() == *code) {
                    Some(v) if v.holds == Some(want) => {}
                    Some(v) => out.push(format!("{code}: expected holds={want}, got {:?}", v.holds)),
                    None => out.push(format!("{code}: missing")),
                }
            }
        }
        let ranks = &report.brute.ranks;
        if ranks.iter().any(|r| *r != self.expected.brute_rank) {
            out.push(format!("brute rank: expected {} at every point, got {ranks:?}", self.expected.brute_rank));
        }
        let spans = report.brute.verdict == Verdict::SpansEverySample;
        if spans != self.expected.spans {
            out.push(format!("spanning: expected {}, got {}", self.expected.spans, report.brute.verdict.code()));
        }
        if !report.agreement {
            out.push(format!("criteria disagree with brute force: {:?}", report.disagreements));
        }
        out
    }
}

pub const NAMES: [&str; 4] = ["testing-three-drifts", "multi-coordinate-detection", "regime-tracking", "byzantine"];

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

/// One Brownian channel with drift 0, 1 or 2 and no switching.
pub fn testing_three_drifts() -> ModelSpec {
    ModelSpec::new(1, vec![ints(&[0]), ints(&[1]), ints(&[2])], vec![vec![int(0); 3]; 3])
        .expect("well-formed")
        .with_labels(vec!["drift0".into(), "drift1".into(), "drift2".into()])
        .expect("well-formed")
}

/// `K` of `N` channels gain drift `mu` at an exponential time of rate `rate`
/// (spread evenly over the `C(N, K)` subsets).
pub fn multi_coordinate_detection(big_n: usize, big_k: usize, mu: i64, rate: i64) -> ModelSpec {
    let subsets = k_subsets(big_n, big_k);
    let n = subsets.len();
    let mut lambda = vec![vec![int(0); big_n]];
    for s in &subsets {
        lambda.push((0..big_n).map(|r| if s.contains(&r) { int(mu) } else { int(0) }).collect());
    }
    let mut q = vec![vec![int(0); n + 1]; n + 1];
    q[0][0] = int(-(n as i64) * rate);
    for j in 1..=n {
        q[0][j] = int(rate);
    }
    let labels = std::iter::once("no-change".to_string())
        .chain(subsets.iter().map(|s| {
            let names: Vec<String> = s.iter().map(|r| (r + 1).to_string()).collect();
            format!("S{{{}}}", names.join(","))
        }))
        .collect();
    ModelSpec::new(big_n, lambda, q).expect("well-formed").with_labels(labels).expect("well-formed")
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Off state 0 switching to one of three on levels and back.
pub fn regime_tracking() -> ModelSpec {
    let q = vec![ints(&[-3, 1, 1, 1]), ints(&[2, -2, 0, 0]), ints(&[2, 0, -2, 0]), ints(&[2, 0, 0, -2])];
    ModelSpec::new(2, vec![ints(&[0, 0]), ints(&[1, 0]), ints(&[0, 1]), ints(&[1, 2])], q)
        .expect("well-formed")
        .with_labels(vec!["off".into(), "level1".into(), "level2".into(), "level3".into()])
        .expect("well-formed")
}

/// Two channels that may already be corrupted at time zero; corrupted states
/// fall back to the post-change state 0 at rate `rate`.
pub fn byzantine(rate: i64) -> ModelSpec {
    let q =
        vec![ints(&[0, 0, 0, 0]), ints(&[rate, -rate, 0, 0]), ints(&[rate, 0, -rate, 0]), ints(&[rate, 0, 0, -rate])];
    ModelSpec::new(2, vec![ints(&[1, 1]), ints(&[0, 1]), ints(&[1, 0]), ints(&[0, 0])], q)
        .expect("well-formed")
        .with_labels(vec!["both".into(), "second".into(), "first".into(), "none".into()])
        .expect("well-formed")
}

/// Single channel, one change from drift 0 to `drift` at rate `rate`.
pub fn classic_detection(rate: i64, drift: i64) -> ModelSpec {
    ModelSpec::new(1, vec![ints(&[0]), ints(&[drift])], vec![ints(&[-rate, rate]), ints(&[0, 0])]).expect("well-formed")
}

pub fn descriptor(name: &str) -> Option<ExampleDescriptor> {
    descriptor_with(name, 4, 2)
}

/// Like [`descriptor`], with the channel count and subset size of the
/// multi-coordinate example overridable.
pub fn descriptor_with(name: &str, big_n: usize, big_k: usize) -> Option<ExampleDescriptor> {
    let d = match name {
        "testing-three-drifts" => ExampleDescriptor {
            name: NAMES[0],
            description: "one channel, three constant drifts 0, 1, 2, no switching",
            parameters: serde_json::json!({"k": 1, "n": 2, "lambda": [0, 1, 2]}),
            expected: ExpectedSummary { holds: vec!["TESTING_IFF"], fails: vec![], brute_rank: 2, spans: true },
            model: testing_three_drifts(),
        },
        "multi-coordinate-detection" => {
            let model = multi_coordinate_detection(big_n, big_k, 1, 1);
            let n = model.n;
            ExampleDescriptor {
                name: NAMES[1],
                description: "K of N channels gain a drift at one exponential time",
                parameters: serde_json::json!({"N": big_n, "K": big_k, "mu": 1, "rate": 1}),
                expected: ExpectedSummary {
                    holds: vec!["DETECT_SUFF_INFLOW"],
                    fails: vec![],
                    brute_rank: n,
                    spans: true,
                },
                model,
            }
        }
        "regime-tracking" => ExampleDescriptor {
            name: NAMES[2],
            description: "off state switching to three on levels and back, two channels",
            parameters: serde_json::json!({"k": 2, "n": 3, "on_rates": [1, 1, 1], "off_rates": [2, 2, 2]}),
            expected: ExpectedSummary { holds: vec!["DETECT_SUFF_INFLOW"], fails: vec![], brute_rank: 3, spans: true },
            model: regime_tracking(),
        },
        "byzantine" => ExampleDescriptor {
            name: NAMES[3],
            description: "two channels possibly corrupted at time zero, common disorder",
            parameters: serde_json::json!({"mu0": 0, "mu1": 1, "m0": 0, "m1": 1, "rate": 1}),
            expected: ExpectedSummary {
                holds: vec!["DETECT_SUFF_AUGMENTED"],
                fails: vec!["DETECT_SUFF_INFLOW"],
                brute_rank: 3,
                spans: true,
            },
            model: byzantine(1),
        },
        _ => return None,
    };
    Some(d)
}

pub fn all() -> Vec<ExampleDescriptor> {
    NAMES.iter().map(|n| descriptor(n).expect("known name")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_geometry, validate_model};

    #[test]
    fn corpus_models_are_valid() {
        for d in all() {
            let v = validate_model(&d.model).unwrap();
            assert!(v.is_valid(), "{}: {:?}", d.name, v.codes());
            derive_geometry(&d.model).unwrap();
        }
        assert!(validate_model(&classic_detection(3, 1)).unwrap().is_valid());
    }

    #[test]
    fn byzantine_difference_matrix() {
        let g = derive_geometry(&byzantine(1)).unwrap();
        assert_eq!(g.a, vec![ints(&[-1, 0, -1]), ints(&[0, -1, -1])]);
    }

    #[test]
    fn multi_coordinate_shape() {
        let m = multi_coordinate_detection(4, 2, 1, 1);
        assert_eq!((m.k, m.n), (4, 6));
        assert_eq!(m.q[0][0], int(-6));
        assert!(m.q[1..].iter().flatten().all(|x| *x == int(0)));
        assert_eq!(multi_coordinate_detection(5, 2, 1, 1).n, 10);
    }

    #[test]
    fn mismatches_are_reported() {
        let report = crate::theorems::analyze(&testing_three_drifts(), &Default::default()).unwrap();
        assert!(descriptor("testing-three-drifts").unwrap().mismatches(&report).is_empty());
        let wrong = descriptor("byzantine").unwrap().mismatches(&report);
        assert_eq!(wrong.len(), 2, "{wrong:?}");
    }

    #[test]
    fn unknown_name() {
        assert!(descriptor("nope").is_none());
    }
}
