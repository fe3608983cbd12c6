//! Parametric rank criteria, closed-form brackets, and the cross-check of
//! both against the brute-force span engine.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{bareiss_rank, format_rational, int, row_combination, Rational};
use crate::hormander::{
    check_hormander, check_observation, check_parabolic, CheckOptions, HormanderError, LieSpanReport, Mode, Verdict,
};
use crate::model::{derive_geometry, validate_model, DriftGeometry, ModelError, ModelSpec};
use crate::polyfield::{build_diffusion_fields, MultiPoly, RationalCoefficient, VectorField};

#[derive(Debug, Error)]
pub enum TheoremError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hormander(#[from] HormanderError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TheoremId {
    TestingIff,
    DetectSuffInflow,
    DetectSuffAugmented,
}

impl TheoremId {
    pub fn code(self) -> &'static str {
        match self {
            TheoremId::TestingIff => "TESTING_IFF",
            TheoremId::DetectSuffInflow => "DETECT_SUFF_INFLOW",
            TheoremId::DetectSuffAugmented => "DETECT_SUFF_AUGMENTED",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremVerdict {
    pub theorem: TheoremId,
    pub applicable: bool,
    pub reason: String,
    /// `None` when not applicable.
    pub holds: Option<bool>,
    pub witness: Value,
    pub predicted_lie_dim: Option<usize>,
}

fn matrix_json(rows: &[Vec<Rational>]) -> Value {
    rows.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect()
}

fn vector_json(v: &[Rational]) -> Value {
    v.iter().map(format_rational).collect()
}

/// Rank test on `[A^T | |a|^2]`. Decisive only when `n = k + 1`; for
/// `n > k + 1` the condition fails outright.
pub fn check_testing_iff(geom: &DriftGeometry) -> TheoremVerdict {
    let (n, k) = (geom.n, geom.k);
    let at = geom.columns();
    let augmented: Vec<Vec<Rational>> = at
        .iter()
        .zip(&geom.sqnorms)
        .map(|(row, s)| row.iter().cloned().chain(std::iter::once(s.clone())).collect())
        .collect();
    let rank_a = bareiss_rank(&at);
    let rank_aug = bareiss_rank(&augmented);
    let combination = row_combination(&geom.a, &geom.sqnorms);
    let mut witness = json!({
        "rank_a": rank_a,
        "augmented": matrix_json(&augmented),
        "augmented_rank": rank_aug,
        "sqnorms": vector_json(&geom.sqnorms),
    });
    if let Some(c) = &combination {
        witness["sqnorms_as_rows_of_a"] = vector_json(c);
    }
    let (applicable, reason, holds) = if k >= n {
        (false, "k >= n: classically elliptic regime".to_string(), None)
    } else if n > k + 1 {
        (true, format!("n = {n} > k + 1 = {}", k + 1), Some(false))
    } else {
        let ok = rank_a == k && combination.is_none();
        let why = if rank_a < k {
            format!("rank A = {rank_a} < k = {k}")
        } else if ok {
            "rank A = k and |a|^2 outside the row space of A".to_string()
        } else {
            "|a|^2 lies in the row space of A".to_string()
        };
        (true, why, Some(ok))
    };
    TheoremVerdict {
        theorem: TheoremId::TestingIff,
        applicable,
        reason,
        holds,
        witness,
        predicted_lie_dim: Some(rank_aug),
    }
}

fn pairwise_distinct(cols: &[Vec<Rational>]) -> Option<(usize, usize)> {
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            if cols[i] == cols[j] {
                return Some((i + 1, j + 1));
            }
        }
    }
    None
}

/// Every nonzero state has positive inflow from some other state.
pub fn check_detection_suff_inflow(spec: &ModelSpec, geom: &DriftGeometry) -> TheoremVerdict {
    let n = spec.n;
    let starved: Vec<usize> = (1..=n).filter(|&i| !(0..=n).any(|m| m != i && spec.q[m][i].is_positive())).collect();
    let witness = json!({ "columns_without_inflow": starved });
    if let Some((i, j)) = pairwise_distinct(&geom.columns()) {
        return TheoremVerdict {
            theorem: TheoremId::DetectSuffInflow,
            applicable: false,
            reason: format!("a_{i} = a_{j}"),
            holds: None,
            witness,
            predicted_lie_dim: None,
        };
    }
    let holds = starved.is_empty();
    TheoremVerdict {
        theorem: TheoremId::DetectSuffInflow,
        applicable: true,
        reason: if holds {
            "every column of Q has positive off-diagonal inflow".into()
        } else {
            format!("no inflow into states {starved:?}")
        },
        holds: Some(holds),
        witness,
        predicted_lie_dim: holds.then_some(n),
    }
}

/// No inflow into any nonzero state, some exit to state 0, and the rank of
/// `[A^T | |a|^2 | 1]`.
pub fn check_detection_suff_augmented(spec: &ModelSpec, geom: &DriftGeometry) -> TheoremVerdict {
    let n = spec.n;
    let inflow: Vec<(usize, usize)> = (1..=n)
        .flat_map(|j| (0..=n).filter(move |&m| m != j).map(move |m| (m, j)))
        .filter(|&(m, j)| !spec.q[m][j].is_zero())
        .collect();
    let exits: Vec<usize> = (1..=n).filter(|&j| spec.q[j][0].is_positive()).collect();
    let tilde: Vec<Vec<Rational>> = geom
        .columns()
        .into_iter()
        .zip(&geom.sqnorms)
        .map(|(mut row, s)| {
            row.push(s.clone());
            row.push(int(1));
            row
        })
        .collect();
    let rank = bareiss_rank(&tilde);
    // Same matrix with the exit rates folded into the norm column:
    // [A^T | |a|^2 + 2 q_.0 | 1]. It bounds the span for any exit profile.
    let exit_adjusted: Vec<Vec<Rational>> = tilde
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut row = row.clone();
            row[geom.k] += &spec.q[i + 1][0] * int(2);
            row
        })
        .collect();
    let witness = json!({
        "augmented": matrix_json(&tilde),
        "augmented_rank": rank,
        "exit_adjusted_rank": bareiss_rank(&exit_adjusted),
        "states_exiting_to_0": exits,
    });
    if let Some(&(m, j)) = inflow.first() {
        return TheoremVerdict {
            theorem: TheoremId::DetectSuffAugmented,
            applicable: false,
            reason: format!("q_{m}{j} != 0 gives inflow into state {j}"),
            holds: None,
            witness,
            predicted_lie_dim: None,
        };
    }
    if exits.is_empty() {
        return TheoremVerdict {
            theorem: TheoremId::DetectSuffAugmented,
            applicable: false,
            reason: "no state exits to state 0".into(),
            holds: None,
            witness,
            predicted_lie_dim: None,
        };
    }
    let predicted = rank.min(n);
    TheoremVerdict {
        theorem: TheoremId::DetectSuffAugmented,
        applicable: true,
        reason: format!("rank of the augmented matrix is {rank}, n = {n}"),
        holds: Some(predicted == n),
        witness,
        predicted_lie_dim: Some(predicted),
    }
}

fn linear_form(geom: &DriftGeometry, weight: impl Fn(usize) -> Rational) -> MultiPoly {
    (0..geom.n).fold(MultiPoly::zero(geom.n), |acc, j| &acc + &MultiPoly::var(geom.n, j).scale(&weight(j)))
}

/// `[D_0, D_r] = -sum_s (alpha_rs / y - beta_r beta_s / y^2) D_s` with
/// `alpha_rs = sum_j a_jr a_js phi_j`, `beta_r = sum_j a_jr phi_j`; `r` is 1-based.
pub fn closed_form_d0_bracket(geom: &DriftGeometry, r: usize) -> VectorField {
    let r = r - 1;
    let diffusions = build_diffusion_fields(geom);
    let beta = |s: usize| linear_form(geom, |j| geom.a[s][j].clone());
    let beta_r = beta(r);
    let mut out = VectorField::zero(geom.n, "");
    for (s, d) in diffusions.iter().enumerate() {
        let alpha = linear_form(geom, |j| &geom.a[r][j] * &geom.a[s][j]);
        let coeff =
            &RationalCoefficient::with_y_power(&beta_r * &beta(s), 2) - &RationalCoefficient::with_y_power(alpha, 1);
        out = out.add(&d.times(&coeff)).expect("same space");
    }
    out.relabeled(format!("[D_0,D_{}]", r + 1))
}

fn power_product(base: impl Fn(usize) -> Rational, alpha: &[u32]) -> Rational {
    alpha.iter().enumerate().fold(Rational::one(), |acc, (r, &e)| acc * num_traits::pow(base(r), e as usize))
}

/// Closed form of `ad_{D_1}^{alpha_1} .. ad_{D_k}^{alpha_k} J`:
///
/// `(-1)^|alpha| prod_r a_jr^alpha_r q_0j
///  + sum_m prod_r (a_mr - a_jr)^alpha_r q_mj phi_m
///  - phi_j sum_m prod_r a_mr^alpha_r q_m0 phi_m`.
pub fn g_alpha_jump(spec: &ModelSpec, geom: &DriftGeometry, alpha: &[u32]) -> Result<VectorField, TheoremError> {
    if alpha.len() != geom.k {
        return Err(TheoremError::Usage(format!("multi-index has length {}, expected {}", alpha.len(), geom.k)));
    }
    let order: u32 = alpha.iter().sum();
    if order == 0 {
        return Err(TheoremError::Usage("multi-index must have positive order".into()));
    }
    let n = geom.n;
    let sign = if order.is_multiple_of(2) { int(1) } else { int(-1) };
    let a = |i: usize, r: usize| geom.a[r][i - 1].clone();
    let quadratic = (1..=n).fold(MultiPoly::zero(n), |acc, m| {
        let c = power_product(|r| a(m, r), alpha) * &spec.q[m][0];
        &acc + &MultiPoly::var(n, m - 1).scale(&c)
    });
    let comps = (1..=n)
        .map(|j| {
            let phi_j = MultiPoly::var(n, j - 1);
            let mut p = MultiPoly::constant(n, &sign * power_product(|r| a(j, r), alpha) * &spec.q[0][j]);
            for m in 1..=n {
                let c = power_product(|r| a(m, r) - a(j, r), alpha) * &spec.q[m][j];
                p = &p + &MultiPoly::var(n, m - 1).scale(&c);
            }
            p = &p - &(&phi_j * &quadratic);
            RationalCoefficient::from_poly(p)
        })
        .collect();
    let label: Vec<String> = alpha.iter().map(u32::to_string).collect();
    Ok(VectorField::new(comps, format!("G^({})J", label.join(","))))
}

/// Closed form of `[J, D_r]` (1-based `r`): the negative of the first-order
/// `ad_{D_r} J`, with constant, linear and `phi_j`-times-linear parts.
pub fn jump_bracket(spec: &ModelSpec, geom: &DriftGeometry, r: usize) -> Result<VectorField, TheoremError> {
    let mut alpha = vec![0; geom.k];
    alpha[r - 1] = 1;
    Ok(g_alpha_jump(spec, geom, &alpha)?.scale(&int(-1)).relabeled(format!("[J,D_{r}]")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AchievedForm {
    PureEI,
    NeedsFallback,
}

#[derive(Clone, Debug)]
pub struct IsolatingOperator {
    /// 1-based coordinate.
    pub target: usize,
    /// Node at which the interpolating polynomial is pinned to 1, and the
    /// term it keeps (`"q_0i"` or `"q_mi*phi_m"`).
    pub anchor: Option<(Vec<Rational>, String)>,
    /// Sparse `alpha -> C_alpha` with the field equal to `sum C_alpha G^alpha J`.
    pub coefficients: BTreeMap<Vec<u32>, Rational>,
    pub field: VectorField,
    pub achieved_form: AchievedForm,
}

impl IsolatingOperator {
    pub fn to_json_value(&self) -> Value {
        json!({
            "target": self.target,
            "anchor": self.anchor.as_ref().map(|(v, t)| json!({"node": vector_json(v), "term": t})),
            "coefficients": self.coefficients.iter()
                .map(|(a, c)| json!({"alpha": a, "c": format_rational(c)}))
                .collect::<Vec<_>>(),
            "field": self.field.to_string(),
            "achieved_form": self.achieved_form,
        })
    }
}

/// A term of `sum_alpha C_alpha G^alpha J` before interpolation: `P(node)`
/// times `value` in coordinate `coord` (`None` means every coordinate).
struct NodeTerm {
    node: Vec<Rational>,
    coord: Option<usize>,
}

fn node_terms(spec: &ModelSpec, geom: &DriftGeometry) -> Vec<NodeTerm> {
    let n = spec.n;
    let cols = geom.columns();
    let mut out = Vec::new();
    for j in 1..=n {
        if !spec.q[0][j].is_zero() {
            out.push(NodeTerm { node: cols[j - 1].iter().map(|x| -x).collect(), coord: Some(j) });
        }
        for m in 1..=n {
            if m != j && !spec.q[m][j].is_zero() {
                let node = cols[m - 1].iter().zip(&cols[j - 1]).map(|(x, y)| x - y).collect();
                out.push(NodeTerm { node, coord: Some(j) });
            }
        }
    }
    for m in 1..=n {
        if !spec.q[m][0].is_zero() {
            out.push(NodeTerm { node: cols[m - 1].clone(), coord: None });
        }
    }
    out
}

/// Coefficients (ascending powers) of the polynomial through the given points.
fn lagrange(points: &[(Rational, Rational)]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); points.len()];
    for (i, (xi, yi)) in points.iter().enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = vec![Rational::one()];
        let mut denom = Rational::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * xj;
            }
            basis = next;
            denom *= xi - xj;
        }
        let scale = yi / denom;
        for (d, c) in basis.into_iter().enumerate() {
            out[d] += c * &scale;
        }
    }
    out
}

/// Interpolating factors `P_r` with `P(v) = 1` and `P(w) = 0` for each `w`,
/// expanded to `alpha -> C_alpha`.
fn interpolate_product(v: &[Rational], zeros: &[Vec<Rational>]) -> BTreeMap<Vec<u32>, Rational> {
    let k = v.len();
    let mut pins: Vec<Vec<Rational>> = vec![Vec::new(); k];
    for w in zeros {
        if (0..k).any(|r| pins[r].contains(&w[r])) {
            continue;
        }
        let r = (0..k).find(|&r| w[r] != v[r]).expect("zero node differs from anchor");
        pins[r].push(w[r].clone());
    }
    let mut expanded: BTreeMap<Vec<u32>, Rational> = BTreeMap::from([(vec![0; k], Rational::one())]);
    for r in 0..k {
        let mut pts = vec![(v[r].clone(), Rational::one())];
        pts.extend(pins[r].iter().map(|x| (x.clone(), Rational::zero())));
        let coeffs = lagrange(&pts);
        let mut next = BTreeMap::new();
        for (alpha, c) in &expanded {
            for (d, cd) in coeffs.iter().enumerate() {
                if cd.is_zero() {
                    continue;
                }
                let mut beta = alpha.clone();
                beta[r] += d as u32;
                *next.entry(beta).or_insert_with(Rational::zero) += c * cd;
            }
        }
        next.retain(|_, c: &mut Rational| !c.is_zero());
        expanded = next;
    }
    expanded
}

/// For each coordinate `i`, searches for `sum C_alpha G^alpha J = c_i(phi) e_i`.
///
/// Anchors are tried in order: the constant node `-a_i` (when `q_0i > 0`),
/// then the linear nodes `a_m - a_i` with `q_mi > 0`. An anchor is usable if
/// no other term of the family sits at the same node; the polynomial is then
/// pinned to 1 there and to 0 at every other node and at the origin. If no
/// anchor is usable the operator is reported as needing fallback.
pub fn construct_isolating_operators(
    spec: &ModelSpec,
    geom: &DriftGeometry,
) -> Result<Vec<IsolatingOperator>, TheoremError> {
    let verdict = check_detection_suff_inflow(spec, geom);
    if verdict.holds != Some(true) {
        return Err(TheoremError::Usage(format!("inflow criterion does not hold: {}", verdict.reason)));
    }
    let n = spec.n;
    let cols = geom.columns();
    let terms = node_terms(spec, geom);
    let origin = vec![Rational::zero(); geom.k];
    let mut out = Vec::new();
    for i in 1..=n {
        let mut anchors: Vec<(Vec<Rational>, String, RationalCoefficient)> = Vec::new();
        if spec.q[0][i].is_positive() {
            anchors.push((
                cols[i - 1].iter().map(|x| -x).collect(),
                "q_0i".into(),
                RationalCoefficient::constant(n, spec.q[0][i].clone()),
            ));
        }
        for m in 1..=n {
            if m != i && spec.q[m][i].is_positive() {
                anchors.push((
                    cols[m - 1].iter().zip(&cols[i - 1]).map(|(x, y)| x - y).collect(),
                    format!("q_{m}{i}*phi_{m}"),
                    RationalCoefficient::from_poly(MultiPoly::var(n, m - 1).scale(&spec.q[m][i])),
                ));
            }
        }
        let mut built = None;
        for (v, label, expected) in &anchors {
            let at_anchor = terms.iter().filter(|t| &t.node == v).count();
            if at_anchor != 1 || terms.iter().any(|t| &t.node == v && t.coord != Some(i)) {
                continue;
            }
            let mut zeros: Vec<Vec<Rational>> = terms.iter().map(|t| t.node.clone()).filter(|w| w != v).collect();
            zeros.push(origin.clone());
            zeros.sort();
            zeros.dedup();
            let coefficients = interpolate_product(v, &zeros);
            let field = combine(spec, geom, &coefficients)?.relabeled(format!("T^{i}J"));
            let pure = (1..=n).all(|j| {
                let c = field.component(j - 1);
                if j == i {
                    c.equals(expected)
                } else {
                    c.is_zero()
                }
            });
            if pure {
                built = Some(IsolatingOperator {
                    target: i,
                    anchor: Some((v.clone(), label.clone())),
                    coefficients,
                    field,
                    achieved_form: AchievedForm::PureEI,
                });
                break;
            }
        }
        out.push(built.unwrap_or_else(|| IsolatingOperator {
            target: i,
            anchor: None,
            coefficients: BTreeMap::new(),
            field: VectorField::zero(n, format!("T^{i}J")),
            achieved_form: AchievedForm::NeedsFallback,
        }));
    }
    Ok(out)
}

/// `sum_alpha C_alpha G^alpha J`.
pub fn combine(
    spec: &ModelSpec,
    geom: &DriftGeometry,
    coefficients: &BTreeMap<Vec<u32>, Rational>,
) -> Result<VectorField, TheoremError> {
    let mut out = VectorField::zero(geom.n, "");
    for (alpha, c) in coefficients {
        out = out.add(&g_alpha_jump(spec, geom, alpha)?.scale(c)).expect("same space");
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AnalysisOptions {
    pub check: CheckOptions,
    pub parabolic: bool,
    pub with_x: bool,
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub model: ModelSpec,
    pub mode: Mode,
    pub verdicts: Vec<TheoremVerdict>,
    pub brute: LieSpanReport,
    pub parabolic: Option<LieSpanReport>,
    pub observation: Option<LieSpanReport>,
    pub agreement: bool,
    pub disagreements: Vec<String>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn verdict(&self, id: TheoremId) -> Option<&TheoremVerdict> {
        self.verdicts.iter().find(|v| v.theorem == id)
    }

    pub fn to_json_value(&self) -> Value {
        let model: Value = serde_json::from_str(&self.model.to_json()).expect("model json");
        let mut out = json!({
            "schema_version": SCHEMA_VERSION,
            "model": model,
            "mode": self.mode,
            "verdicts": self.verdicts,
            "brute": self.brute.to_json_value(),
        });
        if let Some(p) = &self.parabolic {
            out["parabolic"] = p.to_json_value();
        }
        if let Some(o) = &self.observation {
            out["observation"] = o.to_json_value();
        }
        out["agreement"] = json!(self.agreement);
        out["disagreements"] = json!(self.disagreements);
        out["warnings"] = json!(self.warnings);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}

/// Runs every applicable criterion and the brute-force span, and compares
/// each predicted dimension with the sampled ranks.
pub fn analyze(spec: &ModelSpec, opts: &AnalysisOptions) -> Result<AnalysisReport, TheoremError> {
    let validation = validate_model(spec)?;
    if !validation.is_valid() {
        return Err(TheoremError::Usage(format!("invalid model: {:?}", validation.codes())));
    }
    let geom = derive_geometry(spec)?;
    let mut warnings = validation.warnings.clone();
    let mode = if spec.is_testing() { Mode::Testing } else { Mode::Detection };

    let mut verdicts = Vec::new();
    if spec.is_testing() {
        verdicts.push(check_testing_iff(&geom));
    } else {
        let mut v = check_testing_iff(&geom);
        v.applicable = false;
        v.holds = None;
        v.predicted_lie_dim = None;
        v.reason = "generator Q is nonzero".into();
        verdicts.push(v);
    }
    verdicts.push(check_detection_suff_inflow(spec, &geom));
    let augmented = check_detection_suff_augmented(spec, &geom);
    let augmented_applies = augmented.applicable;
    verdicts.push(augmented);

    let brute = check_hormander(spec, mode, &opts.check)?;
    warnings.extend(brute.warnings.iter().cloned());
    let parabolic =
        if opts.parabolic || augmented_applies { Some(check_parabolic(spec, mode, &opts.check)?) } else { None };
    let observation = if opts.with_x { Some(check_observation(spec, &opts.check)?) } else { None };

    let mut disagreements = Vec::new();
    for v in &verdicts {
        let Some(predicted) = v.predicted_lie_dim else { continue };
        for (idx, &rank) in brute.ranks.iter().enumerate() {
            if rank == predicted {
                continue;
            }
            let msg = format!("{}: predicted {predicted}, sampled rank {rank} at point {idx}", v.theorem.code());
            if brute.verdict == Verdict::DepthExhausted && rank < predicted {
                warnings.push(format!("{msg} (search exhausted, inconclusive)"));
            } else {
                disagreements.push(msg);
            }
        }
    }
    if brute.verdict == Verdict::DepthExhausted {
        warnings.push("bracket search exhausted before a decision".into());
    }
    Ok(AnalysisReport {
        model: spec.clone(),
        mode,
        verdicts,
        brute,
        parabolic,
        observation,
        agreement: disagreements.is_empty(),
        disagreements,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::exact::ratio;
    use crate::polyfield::{build_jump_field, fields_equal, lie_bracket};

    fn geom(spec: &ModelSpec) -> DriftGeometry {
        derive_geometry(spec).unwrap()
    }

    #[test]
    fn lagrange_through_three_points() {
        let c = lagrange(&[(int(1), int(1)), (int(2), int(0)), (int(3), int(0))]);
        // (x-2)(x-3)/2
        assert_eq!(c, vec![int(3), ratio(-5, 2), ratio(1, 2)]);
    }

    #[test]
    fn d0_bracket_closed_form_at_unit_point() {
        let g = geom(&corpus::testing_three_drifts());
        let f = closed_form_d0_bracket(&g, 1);
        assert_eq!(f.evaluate(&[int(1), int(1)]).unwrap(), vec![ratio(-2, 3), ratio(-4, 3)]);
    }

    #[test]
    fn g_alpha_first_order_constant_field() {
        // Q row 0 = (-2L, L, L), L = 3: only the constant terms survive.
        let spec = ModelSpec::new(
            1,
            vec![vec![int(0)], vec![int(1)], vec![int(2)]],
            vec![vec![int(-6), int(3), int(3)], vec![int(0); 3], vec![int(0); 3]],
        )
        .unwrap();
        let f = g_alpha_jump(&spec, &geom(&spec), &[1]).unwrap();
        let expected = VectorField::new(
            vec![RationalCoefficient::constant(2, int(-3)), RationalCoefficient::constant(2, int(-6))],
            "",
        );
        assert!(fields_equal(&f, &expected));
        assert!(matches!(g_alpha_jump(&spec, &geom(&spec), &[0]), Err(TheoremError::Usage(_))));
    }

    #[test]
    fn g_alpha_matches_iterated_brackets() {
        let spec = corpus::regime_tracking();
        let g = geom(&spec);
        let d = build_diffusion_fields(&g);
        let j = build_jump_field(&spec);
        let once = lie_bracket(&d[0], &j).unwrap();
        assert!(fields_equal(&once, &g_alpha_jump(&spec, &g, &[1, 0]).unwrap()));
        let twice = lie_bracket(&d[1], &once).unwrap();
        assert!(fields_equal(&twice, &g_alpha_jump(&spec, &g, &[1, 1]).unwrap()));
        assert!(fields_equal(&lie_bracket(&j, &d[1]).unwrap(), &jump_bracket(&spec, &g, 2).unwrap()));
    }

    #[test]
    fn classic_detection_isolates_its_coordinate() {
        let spec = corpus::classic_detection(3, 1);
        let ops = construct_isolating_operators(&spec, &geom(&spec)).unwrap();
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].achieved_form, AchievedForm::PureEI);
        assert_eq!(ops[0].field.evaluate(&[ratio(2, 5)]).unwrap(), vec![int(3)]);
    }

    #[test]
    fn collision_switches_to_a_linear_anchor() {
        // a = 1, 2, 3: the constant node -a_1 = -1 coincides with a_1 - a_2,
        // which carries the rate q_12.
        let spec = ModelSpec::new(
            1,
            vec![vec![int(0)], vec![int(1)], vec![int(2)], vec![int(3)]],
            vec![
                vec![int(-3), int(1), int(1), int(1)],
                vec![int(0), int(-1), int(1), int(0)],
                vec![int(0), int(1), int(-1), int(0)],
                vec![int(0); 4],
            ],
        )
        .unwrap();
        let ops = construct_isolating_operators(&spec, &geom(&spec)).unwrap();
        assert!(ops.iter().all(|o| o.achieved_form == AchievedForm::PureEI));
        assert_eq!(ops[0].anchor.as_ref().unwrap().1, "q_21*phi_2");
        assert_eq!(ops[1].anchor.as_ref().unwrap().1, "q_0i");
    }

    #[test]
    fn isolating_operators_need_inflow() {
        let spec = corpus::byzantine(1);
        assert!(matches!(construct_isolating_operators(&spec, &geom(&spec)), Err(TheoremError::Usage(_))));
    }

    #[test]
    fn non_uniform_exit_rates_break_augmented_prediction() {
        let spec = ModelSpec::new(
            1,
            vec![vec![int(-1)], vec![int(-3)], vec![int(-2)], vec![int(2)]],
            vec![vec![int(0); 4], vec![int(0); 4], vec![int(2), int(0), int(-2), int(0)], vec![int(0); 4]],
        )
        .unwrap();
        let v = check_detection_suff_augmented(&spec, &geom(&spec));
        assert_eq!(v.predicted_lie_dim, Some(3));
        assert_eq!(v.witness["exit_adjusted_rank"], json!(2));
        let report = analyze(&spec, &AnalysisOptions::default()).unwrap();
        assert_eq!(report.brute.ranks, vec![2; 5]);
        assert!(!report.agreement);
        let uniform = check_detection_suff_augmented(&corpus::byzantine(1), &geom(&corpus::byzantine(1)));
        assert_eq!(uniform.witness["exit_adjusted_rank"], json!(3));
    }

    #[test]
    fn testing_witness_for_rowspace_case() {
        let spec = ModelSpec::new(
            2,
            vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(0), int(1)], vec![int(1), int(1)]],
            vec![vec![int(0); 4]; 4],
        )
        .unwrap();
        let v = check_testing_iff(&geom(&spec));
        assert_eq!(v.holds, Some(false));
        assert_eq!(v.predicted_lie_dim, Some(2));
        assert_eq!(v.witness["sqnorms_as_rows_of_a"], json!(["1", "1"]));
    }
}
