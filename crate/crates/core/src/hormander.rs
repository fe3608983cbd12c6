//! Bracket generation and pointwise span rank.
//!
//! [`generate_lie_span`] runs a worklist over left-normed brackets
//! `[g, e]` (g a generator, e a retained entry). A candidate is retained only
//! if its value raises the exact rank at one or more sample points, so the
//! search is pruned to directions that are new somewhere. A full-rank report
//! at every sample is a certificate for those points only.

use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{bareiss_rank, format_rational, int, Rational};
use crate::exec::{map_ordered, Execution};
use crate::model::{derive_geometry, ModelError, ModelSpec};
use crate::polyfield::{
    build_diffusion_fields, build_drift, lie_bracket_guarded, FieldError, MultiPoly, RationalCoefficient, VectorField,
    DEFAULT_DEGREE_GUARD,
};

#[derive(Debug, Error)]
pub enum HormanderError {
    #[error("no generators given")]
    NoGenerators,
    #[error("max_depth must be at least 1")]
    InvalidDepth,
    #[error("no sample points given")]
    NoPoints,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Usage(String),
}

/// Expression tree over generator labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Generator(String),
    Bracket(Box<Provenance>, Box<Provenance>),
}

impl Provenance {
    pub fn height(&self) -> usize {
        match self {
            Provenance::Generator(_) => 0,
            Provenance::Bracket(a, b) => 1 + a.height().max(b.height()),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Generator(name) => write!(f, "{name}"),
            Provenance::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BracketEntry {
    pub field: VectorField,
    pub depth: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    SpansEverySample,
    FailsAtSample(Vec<usize>),
    DepthExhausted,
}

impl Verdict {
    pub fn code(&self) -> &'static str {
        match self {
            Verdict::SpansEverySample => "SPANS_EVERY_SAMPLE",
            Verdict::FailsAtSample(_) => "FAILS_AT_SAMPLE",
            Verdict::DepthExhausted => "DEPTH_EXHAUSTED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::FailsAtSample(idx) => {
                let list: Vec<String> = idx.iter().map(usize::to_string).collect();
                write!(f, "FAILS_AT_SAMPLE({})", list.join(","))
            }
            other => write!(f, "{}", other.code()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Testing,
    Detection,
}

#[derive(Clone, Copy, Debug)]
pub struct SpanOptions {
    pub degree_guard: u32,
    /// Upper bound on bracket candidates formed at a single depth.
    pub max_candidates: usize,
    /// Keep every nonzero bracket on the frontier instead of only those that
    /// raise the rank somewhere. Exhaustive up to `max_depth`, and slow.
    pub exhaustive: bool,
    pub execution: Execution,
}

impl Default for SpanOptions {
    fn default() -> Self {
        SpanOptions {
            degree_guard: DEFAULT_DEGREE_GUARD,
            max_candidates: 4096,
            exhaustive: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LieSpanReport {
    pub axes: Vec<String>,
    pub ambient_dim: usize,
    pub max_depth: usize,
    /// Sample points in ambient coordinates; non-phi axes are reported as 0
    /// since no coefficient depends on them.
    pub points: Vec<Vec<Rational>>,
    pub ranks: Vec<usize>,
    pub achieved_at_depth: Vec<usize>,
    pub basis: Vec<Vec<String>>,
    pub verdict: Verdict,
    pub explored_depth: usize,
    pub candidates_evaluated: usize,
    pub retained: Vec<BracketEntry>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    axes: &'a [String],
    ambient_dim: usize,
    max_depth: usize,
    points: Vec<Vec<String>>,
    ranks: &'a [usize],
    depth: &'a [usize],
    basis: &'a [Vec<String>],
    verdict: &'static str,
    failing_points: Vec<usize>,
    explored_depth: usize,
    candidates_evaluated: usize,
    warnings: &'a [String],
}

impl LieSpanReport {
    pub fn min_rank(&self) -> usize {
        self.ranks.iter().copied().min().unwrap_or(0)
    }

    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let failing = match &self.verdict {
            Verdict::FailsAtSample(idx) => idx.clone(),
            _ => Vec::new(),
        };
        let json = ReportJson {
            axes: &self.axes,
            ambient_dim: self.ambient_dim,
            max_depth: self.max_depth,
            points: self.points.iter().map(|p| p.iter().map(format_rational).collect()).collect(),
            ranks: &self.ranks,
            depth: &self.achieved_at_depth,
            basis: &self.basis,
            verdict: self.verdict.code(),
            failing_points: failing,
            explored_depth: self.explored_depth,
            candidates_evaluated: self.candidates_evaluated,
            warnings: &self.warnings,
        };
        serde_json::to_value(json).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}

/// Seeded random rational points with numerators and denominators in 1..=64.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let num: i64 = rng.random_range(1..=64);
                    let den: i64 = rng.random_range(1..=64);
                    Rational::new(num.into(), den.into())
                })
                .collect()
        })
        .collect()
}

struct PointSpan {
    rows: Vec<Vec<Rational>>,
    basis: Vec<String>,
    last_gain: usize,
}

impl PointSpan {
    fn try_add(&mut self, v: &[Rational], label: &Provenance, depth: usize) -> bool {
        if v.iter().all(Zero::is_zero) {
            return false;
        }
        self.rows.push(v.to_vec());
        if bareiss_rank(&self.rows) == self.rows.len() {
            self.basis.push(label.to_string());
            self.last_gain = depth;
            true
        } else {
            self.rows.pop();
            false
        }
    }
}

/// Generates brackets up to `max_depth` and records the exact span rank at
/// each point. `points` are phi coordinates (length `nvars`).
pub fn generate_lie_span(
    generators: &[VectorField],
    max_depth: usize,
    points: &[Vec<Rational>],
    opts: &SpanOptions,
) -> Result<LieSpanReport, HormanderError> {
    let first = generators.first().ok_or(HormanderError::NoGenerators)?;
    if max_depth < 1 {
        return Err(HormanderError::InvalidDepth);
    }
    if points.is_empty() {
        return Err(HormanderError::NoPoints);
    }
    let dim = first.dim();
    for g in &generators[1..] {
        if g.dim() != dim || g.nvars() != first.nvars() || g.extra_axes() != first.extra_axes() {
            return Err(FieldError::DimensionMismatch(first.label().into(), g.label().into()).into());
        }
    }
    for p in points {
        first.evaluate(p)?;
    }

    let exec = opts.execution;
    let mut spans: Vec<PointSpan> =
        points.iter().map(|_| PointSpan { rows: Vec::new(), basis: Vec::new(), last_gain: 0 }).collect();
    let mut retained = Vec::new();
    let mut warnings = Vec::new();
    let mut candidates_evaluated = 0;

    let gens: Vec<BracketEntry> = generators
        .iter()
        .map(|g| BracketEntry { field: g.clone(), depth: 0, provenance: Provenance::Generator(g.label().to_string()) })
        .collect();

    let exhaustive = opts.exhaustive;
    let absorb = |entries: Vec<BracketEntry>, spans: &mut Vec<PointSpan>| -> Result<Vec<BracketEntry>, FieldError> {
        let values =
            map_ordered(exec, &entries, |e| points.iter().map(|p| e.field.evaluate(p)).collect::<Result<Vec<_>, _>>());
        let mut kept = Vec::new();
        for (entry, vals) in entries.into_iter().zip(values) {
            let vals = vals?;
            let mut gained = false;
            for (span, v) in spans.iter_mut().zip(&vals) {
                if span.rows.len() < dim && span.try_add(v, &entry.provenance, entry.depth) {
                    gained = true;
                }
            }
            if gained || exhaustive {
                kept.push(entry);
            }
        }
        Ok(kept)
    };

    let full = |spans: &[PointSpan]| spans.iter().all(|s| s.rows.len() == dim);

    retained.extend(absorb(gens.clone(), &mut spans)?);
    let mut frontier: Vec<BracketEntry> = gens.iter().filter(|g| !g.field.is_zero()).cloned().collect();
    let mut explored_depth = 0;
    let mut exhausted = false;

    for depth in 1..=max_depth {
        if full(&spans) || frontier.is_empty() {
            break;
        }
        let mut pairs = Vec::new();
        for (gi, g) in gens.iter().enumerate() {
            for (ei, e) in frontier.iter().enumerate() {
                if depth == 1 && ei <= gi {
                    continue;
                }
                pairs.push((g, e));
            }
        }
        if pairs.len() > opts.max_candidates {
            warnings.push(format!(
                "candidate guard: {} brackets at depth {depth} exceed limit {}",
                pairs.len(),
                opts.max_candidates
            ));
            exhausted = true;
            break;
        }
        let brackets = map_ordered(exec, &pairs, |(g, e)| lie_bracket_guarded(&g.field, &e.field, opts.degree_guard));
        let mut candidates = Vec::new();
        for ((g, e), b) in pairs.iter().zip(brackets) {
            match b {
                Ok(field) if field.is_zero() => {}
                Ok(field) => candidates.push(BracketEntry {
                    field,
                    depth,
                    provenance: Provenance::Bracket(Box::new(g.provenance.clone()), Box::new(e.provenance.clone())),
                }),
                Err(FieldError::DegreeGuard { degree, guard }) => {
                    warnings.push(format!("degree guard: bracket of degree {degree} exceeds {guard} at depth {depth}"));
                    exhausted = true;
                }
                Err(other) => return Err(other.into()),
            }
        }
        candidates_evaluated += candidates.len();
        explored_depth = depth;
        let kept = absorb(candidates, &mut spans)?;
        retained.extend(kept.iter().cloned());
        frontier = kept;
        if exhausted {
            break;
        }
    }

    let ranks: Vec<usize> = spans.iter().map(|s| s.rows.len()).collect();
    let verdict = if ranks.iter().all(|&r| r == dim) {
        Verdict::SpansEverySample
    } else if exhausted || (explored_depth == max_depth && !frontier.is_empty()) {
        Verdict::DepthExhausted
    } else {
        Verdict::FailsAtSample((0..ranks.len()).filter(|&i| ranks[i] < dim).collect())
    };

    let pad = dim - first.nvars();
    let mut axes: Vec<String> = (1..=first.nvars()).map(|i| format!("phi{i}")).collect();
    axes.extend(first.extra_axes().iter().cloned());
    Ok(LieSpanReport {
        axes,
        ambient_dim: dim,
        max_depth,
        points: points
            .iter()
            .map(|p| p.iter().cloned().chain(std::iter::repeat_n(Rational::zero(), pad)).collect())
            .collect(),
        ranks,
        achieved_at_depth: spans.iter().map(|s| s.last_gain).collect(),
        basis: spans.into_iter().map(|s| s.basis).collect(),
        verdict,
        explored_depth,
        candidates_evaluated,
        retained,
        warnings,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Defaults to `n + 2` when unset.
    pub max_depth: Option<usize>,
    pub num_points: usize,
    pub seed: u64,
    pub span: SpanOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { max_depth: None, num_points: 5, seed: 0, span: SpanOptions::default() }
    }
}

impl CheckOptions {
    pub fn depth_for(&self, n: usize) -> usize {
        self.max_depth.unwrap_or(n + 2)
    }
}

/// `[drift, D_1, .., D_k]`, with the jump field included in detection mode.
pub fn model_generators(spec: &ModelSpec, mode: Mode) -> Result<Vec<VectorField>, HormanderError> {
    if mode == Mode::Testing && !spec.is_testing() {
        return Err(HormanderError::Usage("testing mode requires Q = 0".into()));
    }
    let geom = derive_geometry(spec)?;
    let mut gens = vec![build_drift(spec, &geom)];
    gens.extend(build_diffusion_fields(&geom));
    Ok(gens)
}

pub fn check_hormander(spec: &ModelSpec, mode: Mode, opts: &CheckOptions) -> Result<LieSpanReport, HormanderError> {
    let gens = model_generators(spec, mode)?;
    let points = sample_points(spec.n, opts.num_points, opts.seed);
    generate_lie_span(&gens, opts.depth_for(spec.n), &points, &opts.span)
}

/// Adds a time axis: the first generator (the drift) gets `-d/dt`, the others
/// a zero time component.
pub fn augment_parabolic(generators: &[VectorField], n: usize) -> Vec<VectorField> {
    generators
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            debug_assert_eq!(g.nvars(), n);
            let c = if idx == 0 { int(-1) } else { int(0) };
            let label = if idx == 0 { format!("-d/dt + {}", g.label()) } else { g.label().to_string() };
            g.clone().with_extra_axes(vec![("t".into(), RationalCoefficient::constant(n, c))]).relabeled(label)
        })
        .collect()
}

/// Generators over `(phi, x)`: the drift gains `sum_r lt_r(phi) d/dx_r` with
/// `lt = (lambda_0 + sum_i lambda_i phi_i) / y`, and each diffusion gains
/// `d/dx_r`.
pub fn augment_observation(spec: &ModelSpec) -> Result<Vec<VectorField>, HormanderError> {
    let geom = derive_geometry(spec)?;
    let (n, k) = (spec.n, spec.k);
    let axis = |r: usize| format!("x{}", r + 1);
    let posterior_drift: Vec<(String, RationalCoefficient)> = (0..k)
        .map(|r| {
            let num = (1..=n).fold(MultiPoly::constant(n, spec.lambda[0][r].clone()), |acc, i| {
                &acc + &MultiPoly::var(n, i - 1).scale(&spec.lambda[i][r])
            });
            (axis(r), RationalCoefficient::with_y_power(num, 1))
        })
        .collect();
    let drift = build_drift(spec, &geom);
    let label = format!("{} + D^X", drift.label());
    let mut gens = vec![drift.with_extra_axes(posterior_drift).relabeled(label)];
    for (r, d) in build_diffusion_fields(&geom).into_iter().enumerate() {
        let axes =
            (0..k).map(|s| (axis(s), RationalCoefficient::constant(n, int(if s == r { 1 } else { 0 })))).collect();
        let label = format!("~{}", d.label());
        gens.push(d.with_extra_axes(axes).relabeled(label));
    }
    Ok(gens)
}

pub fn check_parabolic(spec: &ModelSpec, mode: Mode, opts: &CheckOptions) -> Result<LieSpanReport, HormanderError> {
    let gens = augment_parabolic(&model_generators(spec, mode)?, spec.n);
    let points = sample_points(spec.n, opts.num_points, opts.seed);
    generate_lie_span(&gens, opts.depth_for(spec.n), &points, &opts.span)
}

pub fn check_observation(spec: &ModelSpec, opts: &CheckOptions) -> Result<LieSpanReport, HormanderError> {
    let gens = augment_observation(spec)?;
    let points = sample_points(spec.n, opts.num_points, opts.seed);
    generate_lie_span(&gens, opts.depth_for(spec.n), &points, &opts.span)
}
