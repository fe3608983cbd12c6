//! Monte-Carlo simulation of the hidden chain, the observation and both
//! filters: posterior probabilities `Π` and posterior likelihoods `Φ`.
//!
//! Path `p` of a batch draws from `ChaCha8Rng::seed_from_u64(seed)` switched
//! to stream `p`, so every path is reproducible on its own and the batch does
//! not depend on how paths are scheduled.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exec::{map_range, Execution};
use crate::model::{validate_model, ModelError, ModelSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Committed bound `C` on `max |Π − Φ/y| / dt` per corpus model, from a
/// pilot of 3 × 10⁴ paths (T = 1, dt = 10⁻³, seeds 1–3, uniform prior,
/// Milstein) with a 25% margin over the largest observed value.
pub const PILOT_CONSISTENCY: [(&str, f64); 4] =
    [("testing-three-drifts", 4.4), ("multi-coordinate-detection", 5.0), ("regime-tracking", 5.0), ("byzantine", 2.7)];

/// Pilot fraction of Ex.1 paths whose final posterior mode is the true
/// state (same pilot as [`PILOT_CONSISTENCY`]); chance level is 1/3.
pub const PILOT_MAP_ACCURACY: f64 = 0.592;

pub fn pilot_consistency(name: &str) -> Option<f64> {
    PILOT_CONSISTENCY.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid model: {0:?}")]
    InvalidModel(Vec<&'static str>),
    #[error("{flagged} of {total} paths flagged invalid (limit 1%)")]
    TooManyFlagged { flagged: usize, total: usize },
}

/// Time-stepping scheme shared by both filters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    /// Euler–Maruyama plus the commutative-noise Milstein correction. The
    /// two filters then agree to first order in `dt`.
    #[default]
    Milstein,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub num_paths: usize,
    pub seed: u64,
    pub prior: Vec<f64>,
    /// Keep every `save_stride`-th grid point per path; 0 keeps only the
    /// final state.
    pub save_stride: usize,
    pub phi_floor: f64,
    pub scheme: Scheme,
    #[serde(skip)]
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, num_paths: usize, seed: u64, prior: Vec<f64>) -> Self {
        SimConfig {
            horizon,
            dt,
            num_paths,
            seed,
            prior,
            save_stride: 0,
            phi_floor: 1e-12,
            scheme: Scheme::default(),
            execution: Execution::default(),
        }
    }

    /// Uniform prior over `states` states.
    pub fn uniform(horizon: f64, dt: f64, num_paths: usize, seed: u64, states: usize) -> Self {
        Self::new(horizon, dt, num_paths, seed, vec![1.0 / states as f64; states])
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self, states: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.dt >= self.horizon {
            return bad(format!("dt = {} must be below the horizon {}", self.dt, self.horizon));
        }
        if self.num_paths == 0 {
            return bad("at least one path is required".into());
        }
        if self.prior.len() != states {
            return bad(format!("prior has {} entries, model has {states} states", self.prior.len()));
        }
        if self.prior.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("prior must lie in the interior of the simplex".into());
        }
        let total: f64 = self.prior.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("prior sums to {total}"));
        }
        if self.phi_floor.is_nan() || self.phi_floor <= 0.0 {
            return bad("phi floor must be positive".into());
        }
        Ok(())
    }
}

/// Floating-point copy of a model with the drift differences precomputed.
#[derive(Clone, Debug)]
pub struct FloatModel {
    pub k: usize,
    pub n: usize,
    pub lambda: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// `a[i - 1] = λ_i − λ_0`.
    pub a: Vec<Vec<f64>>,
}

impl FloatModel {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let f = |x: &crate::exact::Rational| x.to_f64().unwrap_or(f64::NAN);
        let lambda: Vec<Vec<f64>> = spec.lambda.iter().map(|r| r.iter().map(f).collect()).collect();
        let q = spec.q.iter().map(|r| r.iter().map(f).collect()).collect();
        let a = lambda[1..].iter().map(|l| l.iter().zip(&lambda[0]).map(|(x, y)| x - y).collect()).collect();
        FloatModel { k: spec.k, n: spec.n, lambda, q, a }
    }

    pub fn states(&self) -> usize {
        self.n + 1
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

fn categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Chain sampled on the grid, plus the exact jump times.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainPath {
    /// State on `[t_m, t_{m+1})`, `steps + 1` entries.
    pub states: Vec<usize>,
    /// `(time, new state)` for every jump before the horizon.
    pub jumps: Vec<(f64, usize)>,
}

/// Exact-jump simulation: exponential holding times, embedded jump chain.
pub fn simulate_chain(q: &[Vec<f64>], initial: usize, horizon: f64, dt: f64, rng: &mut impl Rng) -> ChainPath {
    let steps = (horizon / dt).round() as usize;
    let mut state = initial;
    let mut jumps = Vec::new();
    let mut clock = 0.0;
    loop {
        let rate = -q[state][state];
        if rate <= 0.0 {
            break;
        }
        clock += Exp::new(rate).expect("positive rate").sample(rng);
        if clock >= horizon {
            break;
        }
        let weights: Vec<f64> =
            q[state].iter().enumerate().map(|(j, &x)| if j == state { 0.0 } else { x.max(0.0) }).collect();
        state = categorical(&weights, rng);
        jumps.push((clock, state));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let (mut current, mut next) = (initial, 0);
    for m in 0..=steps {
        let t = m as f64 * dt;
        while next < jumps.len() && jumps[next].0 <= t {
            current = jumps[next].1;
            next += 1;
        }
        states.push(current);
    }
    ChainPath { states, jumps }
}

/// Observation increments `ΔX_m = λ_{θ(t_m)} dt + √dt ξ_m`, one per step.
pub fn simulate_observation(states: &[usize], lambda: &[Vec<f64>], dt: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let sq = dt.sqrt();
    states[..states.len().saturating_sub(1)]
        .iter()
        .map(|&s| {
            lambda[s]
                .iter()
                .map(|l| {
                    let xi: f64 = StandardNormal.sample(rng);
                    l * dt + sq * xi
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FilterDiagnostics {
    /// Largest `|Σ Π − 1|` before renormalization.
    pub max_simplex_drift: f64,
    /// Largest `|Σ Π − 1|` after renormalization.
    pub max_normalized_error: f64,
    pub min_value: f64,
    pub floor_hits: usize,
    pub invalid: bool,
}

/// Filter trajectory on the grid, `steps + 1` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterPath {
    pub values: Vec<Vec<f64>>,
    pub diagnostics: FilterDiagnostics,
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Stepper for the Wonham filter, driven by the innovation `dX − λ̄ dt`,
/// clipped at zero and renormalized after every step.
#[derive(Clone, Debug)]
pub struct PiFilter<'a> {
    model: &'a FloatModel,
    dt: f64,
    scheme: Scheme,
    pub state: Vec<f64>,
    pub diagnostics: FilterDiagnostics,
    lbar: Vec<f64>,
    innovation: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> PiFilter<'a> {
    pub fn new(model: &'a FloatModel, pi0: &[f64], dt: f64, scheme: Scheme) -> Self {
        let states = model.states();
        PiFilter {
            model,
            dt,
            scheme,
            state: pi0.to_vec(),
            diagnostics: FilterDiagnostics { min_value: min_of(pi0), ..Default::default() },
            lbar: vec![0.0; model.k],
            innovation: vec![0.0; model.k],
            u: vec![0.0; states],
            v: vec![0.0; states],
            next: vec![0.0; states],
        }
    }

    /// Advances one step; `false` once the path is invalid.
    pub fn step(&mut self, dx: &[f64]) -> bool {
        if self.diagnostics.invalid {
            return false;
        }
        let (m, dt, pi) = (self.model, self.dt, &mut self.state);
        let states = m.states();
        for r in 0..m.k {
            self.lbar[r] = (0..states).map(|j| pi[j] * m.lambda[j][r]).sum();
            self.innovation[r] = dx[r] - self.lbar[r] * dt;
        }
        let (mut u_mean, mut v_mean) = (0.0, 0.0);
        for j in 0..states {
            let (mut u, mut v) = (0.0, 0.0);
            for r in 0..m.k {
                let c = m.lambda[j][r] - self.lbar[r];
                u += c * self.innovation[r];
                v += c * c;
            }
            self.u[j] = u;
            self.v[j] = v;
            u_mean += pi[j] * u * u;
            v_mean += pi[j] * v;
        }
        let mut total = 0.0;
        for j in 0..states {
            let inflow: f64 = (0..states).map(|i| m.q[i][j] * pi[i]).sum();
            let mut step = inflow * dt + pi[j] * self.u[j];
            if self.scheme == Scheme::Milstein {
                let u = self.u[j];
                step += 0.5 * pi[j] * ((u * u - self.v[j] * dt) - (u_mean - v_mean * dt));
            }
            self.next[j] = (pi[j] + step).max(0.0);
            total += self.next[j];
        }
        let diag = &mut self.diagnostics;
        diag.max_simplex_drift = diag.max_simplex_drift.max((total - 1.0).abs());
        if !(total.is_finite() && total > 0.0) {
            diag.invalid = true;
            return false;
        }
        let mut sum = 0.0;
        for j in 0..states {
            pi[j] = self.next[j] / total;
            sum += pi[j];
            diag.min_value = diag.min_value.min(pi[j]);
        }
        diag.max_normalized_error = diag.max_normalized_error.max((sum - 1.0).abs());
        true
    }
}

/// Stepper for the posterior likelihoods, driven by `dX − λ_0 dt`; any
/// coordinate that reaches zero or below is reset to the floor and counted.
#[derive(Clone, Debug)]
pub struct PhiFilter<'a> {
    model: &'a FloatModel,
    dt: f64,
    scheme: Scheme,
    floor: f64,
    pub state: Vec<f64>,
    pub diagnostics: FilterDiagnostics,
    shifted: Vec<f64>,
    jump: Vec<f64>,
    sq: Vec<f64>,
}

impl<'a> PhiFilter<'a> {
    pub fn new(model: &'a FloatModel, phi0: &[f64], dt: f64, scheme: Scheme, floor: f64) -> Self {
        PhiFilter {
            model,
            dt,
            scheme,
            floor,
            state: phi0.to_vec(),
            diagnostics: FilterDiagnostics { min_value: min_of(phi0), ..Default::default() },
            shifted: vec![0.0; model.k],
            jump: vec![0.0; model.n],
            sq: model.a.iter().map(|a| dot(a, a)).collect(),
        }
    }

    /// Advances one step; `false` once the path is invalid.
    pub fn step(&mut self, dx: &[f64]) -> bool {
        if self.diagnostics.invalid {
            return false;
        }
        let (m, dt) = (self.model, self.dt);
        for r in 0..m.k {
            self.shifted[r] = dx[r] - m.lambda[0][r] * dt;
        }
        jump_part_into(m, &self.state, &mut self.jump);
        let diag = &mut self.diagnostics;
        for i in 0..m.n {
            let phi = &mut self.state[i];
            let u = dot(&m.a[i], &self.shifted);
            let mut step = self.jump[i] * dt + *phi * u;
            if self.scheme == Scheme::Milstein {
                step += 0.5 * *phi * (u * u - self.sq[i] * dt);
            }
            *phi += step;
            if !phi.is_finite() {
                diag.invalid = true;
            } else if *phi <= 0.0 {
                *phi = self.floor;
                diag.floor_hits += 1;
            }
            diag.min_value = diag.min_value.min(*phi);
        }
        !diag.invalid
    }
}

pub fn filter_pi(increments: &[Vec<f64>], model: &FloatModel, pi0: &[f64], dt: f64, scheme: Scheme) -> FilterPath {
    let mut f = PiFilter::new(model, pi0, dt, scheme);
    let mut values = vec![f.state.clone()];
    for dx in increments {
        if !f.step(dx) {
            break;
        }
        values.push(f.state.clone());
    }
    FilterPath { values, diagnostics: f.diagnostics }
}

pub fn filter_phi(
    increments: &[Vec<f64>],
    model: &FloatModel,
    phi0: &[f64],
    dt: f64,
    scheme: Scheme,
    floor: f64,
) -> FilterPath {
    let mut f = PhiFilter::new(model, phi0, dt, scheme, floor);
    let mut values = vec![f.state.clone()];
    for dx in increments {
        if !f.step(dx) {
            break;
        }
        values.push(f.state.clone());
    }
    FilterPath { values, diagnostics: f.diagnostics }
}

/// Itô drift of `Φ` in innovation form: the jump part `J` plus
/// `Φ^i a_i·(λ̄ − λ_0)`.
pub fn phi_drift(model: &FloatModel, phi: &[f64]) -> Vec<f64> {
    let y = 1.0 + phi.iter().sum::<f64>();
    let lbar_shift: Vec<f64> =
        (0..model.k).map(|r| (0..model.n).map(|m| phi[m] * model.a[m][r]).sum::<f64>() / y).collect();
    let mut jump = vec![0.0; model.n];
    jump_part_into(model, phi, &mut jump);
    (0..model.n).map(|i| jump[i] + phi[i] * dot(&model.a[i], &lbar_shift)).collect()
}

fn jump_part_into(model: &FloatModel, phi: &[f64], out: &mut [f64]) {
    let full = |m: usize| if m == 0 { 1.0 } else { phi[m - 1] };
    let exit: f64 = (0..=model.n).map(|m| model.q[m][0] * full(m)).sum();
    for i in 1..=model.n {
        out[i - 1] = (0..=model.n).map(|m| model.q[m][i] * full(m)).sum::<f64>() - phi[i - 1] * exit;
    }
}

/// `Π` recovered from `Φ`: `(1, Φ) / (1 + ΣΦ)`.
pub fn phi_to_pi(phi: &[f64]) -> Vec<f64> {
    let y = 1.0 + phi.iter().sum::<f64>();
    std::iter::once(1.0 / y).chain(phi.iter().map(|p| p / y)).collect()
}

/// `max_i |Π^i − (1, Φ)^i / y|`.
pub fn coordinate_gap(pi: &[f64], phi: &[f64]) -> f64 {
    let y = 1.0 + phi.iter().sum::<f64>();
    phi.iter().zip(&pi[1..]).map(|(f, p)| (f / y - p).abs()).fold((1.0 / y - pi[0]).abs(), f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SavedPoint {
    pub t: f64,
    pub theta: usize,
    pub x: Vec<f64>,
    pub pi: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub theta_initial: usize,
    pub theta_final: usize,
    pub jumps: usize,
    pub pi_final: Vec<f64>,
    pub phi_final: Vec<f64>,
    pub sup_discrepancy: f64,
    pub pi_diagnostics: FilterDiagnostics,
    pub phi_diagnostics: FilterDiagnostics,
    pub saved: Vec<SavedPoint>,
}

impl PathRecord {
    pub fn flagged(&self) -> bool {
        self.pi_diagnostics.invalid || self.phi_diagnostics.invalid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchDiagnostics {
    pub max_simplex_drift: f64,
    pub max_normalized_error: f64,
    pub min_pi: f64,
    pub min_phi: f64,
    pub floor_hits: usize,
    pub flagged_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchStatistics {
    pub valid_paths: usize,
    pub pi_final_mean: Vec<f64>,
    pub pi_final_stderr: Vec<f64>,
    /// `(mean − prior) / stderr` per state.
    pub martingale_z: Vec<f64>,
    pub theta_final_freq: Vec<f64>,
    /// Fraction of paths whose final posterior mode is the true final state.
    pub map_accuracy: f64,
    /// Mean posterior mass on the true final state.
    pub mean_true_state_mass: f64,
    pub consistency_sup: f64,
    pub consistency_mean: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationBatch {
    pub config: SimConfig,
    pub paths: Vec<PathRecord>,
    pub diagnostics: BatchDiagnostics,
    pub statistics: BatchStatistics,
}

/// RNG for path `index` of a batch seeded with `seed`.
pub fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulates one path of a batch.
pub fn simulate_path(model: &FloatModel, cfg: &SimConfig, index: usize) -> PathRecord {
    let mut rng = path_rng(cfg.seed, index);
    let theta0 = categorical(&cfg.prior, &mut rng);
    let steps = cfg.steps();
    let chain = simulate_chain(&model.q, theta0, steps as f64 * cfg.dt, cfg.dt, &mut rng);
    let phi0: Vec<f64> = cfg.prior[1..].iter().map(|p| p / cfg.prior[0]).collect();
    let mut pi = PiFilter::new(model, &cfg.prior, cfg.dt, cfg.scheme);
    let mut phi = PhiFilter::new(model, &phi0, cfg.dt, cfg.scheme, cfg.phi_floor);
    let sq = cfg.dt.sqrt();
    let mut dx = vec![0.0; model.k];
    let mut x = vec![0.0; model.k];
    let mut sup = coordinate_gap(&pi.state, &phi.state);
    let mut saved = Vec::new();
    let mut save = |m: usize, x: &[f64], pi: &[f64], phi: &[f64]| {
        if cfg.save_stride > 0 && (m.is_multiple_of(cfg.save_stride) || m == steps) {
            saved.push(SavedPoint {
                t: m as f64 * cfg.dt,
                theta: chain.states[m],
                x: x.to_vec(),
                pi: pi.to_vec(),
                phi: phi.to_vec(),
            });
        }
    };
    save(0, &x, &pi.state, &phi.state);
    for m in 0..steps {
        let lambda = &model.lambda[chain.states[m]];
        for r in 0..model.k {
            let xi: f64 = StandardNormal.sample(&mut rng);
            dx[r] = lambda[r] * cfg.dt + sq * xi;
            x[r] += dx[r];
        }
        let ok_pi = pi.step(&dx);
        let ok_phi = phi.step(&dx);
        if !(ok_pi && ok_phi) {
            break;
        }
        sup = sup.max(coordinate_gap(&pi.state, &phi.state));
        save(m + 1, &x, &pi.state, &phi.state);
    }
    PathRecord {
        index,
        theta_initial: theta0,
        theta_final: chain.states[steps],
        jumps: chain.jumps.len(),
        pi_final: pi.state,
        phi_final: phi.state,
        sup_discrepancy: sup,
        pi_diagnostics: pi.diagnostics,
        phi_diagnostics: phi.diagnostics,
        saved,
    }
}

/// Runs `cfg.num_paths` independent paths and aggregates them.
pub fn run_batch(spec: &ModelSpec, cfg: &SimConfig) -> Result<SimulationBatch, SimError> {
    let v = validate_model(spec)?;
    if !v.is_valid() {
        return Err(SimError::InvalidModel(v.codes()));
    }
    cfg.validate(spec.states())?;
    let model = FloatModel::from_spec(spec);
    let paths = map_range(cfg.execution, cfg.num_paths, |p| simulate_path(&model, cfg, p));
    let flagged = paths.iter().filter(|p| p.flagged()).count();
    if flagged * 100 > cfg.num_paths {
        return Err(SimError::TooManyFlagged { flagged, total: cfg.num_paths });
    }
    let diagnostics = BatchDiagnostics {
        max_simplex_drift: paths.iter().map(|p| p.pi_diagnostics.max_simplex_drift).fold(0.0, f64::max),
        max_normalized_error: paths.iter().map(|p| p.pi_diagnostics.max_normalized_error).fold(0.0, f64::max),
        min_pi: paths.iter().map(|p| p.pi_diagnostics.min_value).fold(f64::INFINITY, f64::min),
        min_phi: paths.iter().map(|p| p.phi_diagnostics.min_value).fold(f64::INFINITY, f64::min),
        floor_hits: paths.iter().map(|p| p.phi_diagnostics.floor_hits).sum(),
        flagged_paths: flagged,
    };
    let statistics = statistics(&paths, &cfg.prior);
    Ok(SimulationBatch { config: cfg.clone(), paths, diagnostics, statistics })
}

fn statistics(paths: &[PathRecord], prior: &[f64]) -> BatchStatistics {
    let states = prior.len();
    let valid: Vec<&PathRecord> = paths.iter().filter(|p| !p.flagged()).collect();
    let m = valid.len().max(1) as f64;
    let mean: Vec<f64> = (0..states).map(|i| valid.iter().map(|p| p.pi_final[i]).sum::<f64>() / m).collect();
    let stderr: Vec<f64> = (0..states)
        .map(|i| {
            let var = valid.iter().map(|p| (p.pi_final[i] - mean[i]).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            (var / m).sqrt()
        })
        .collect();
    let z = (0..states).map(|i| if stderr[i] > 0.0 { (mean[i] - prior[i]) / stderr[i] } else { 0.0 }).collect();
    let mut freq = vec![0.0; states];
    for p in &valid {
        freq[p.theta_final] += 1.0 / m;
    }
    let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best });
    let hits = valid.iter().filter(|p| argmax(&p.pi_final) == p.theta_final).count();
    BatchStatistics {
        valid_paths: valid.len(),
        pi_final_mean: mean,
        pi_final_stderr: stderr,
        martingale_z: z,
        theta_final_freq: freq,
        map_accuracy: hits as f64 / m,
        mean_true_state_mass: valid.iter().map(|p| p.pi_final[p.theta_final]).sum::<f64>() / m,
        consistency_sup: valid.iter().map(|p| p.sup_discrepancy).fold(0.0, f64::max),
        consistency_mean: valid.iter().map(|p| p.sup_discrepancy).sum::<f64>() / m,
    }
}

impl SimulationBatch {
    pub fn summary_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "config": {
                "horizon": self.config.horizon,
                "dt": self.config.dt,
                "steps": self.config.steps(),
                "num_paths": self.config.num_paths,
                "seed": self.config.seed,
                "prior": self.config.prior,
                "phi_floor": self.config.phi_floor,
                "scheme": self.config.scheme,
            },
            "diagnostics": self.diagnostics,
            "statistics": self.statistics,
        })
    }

    /// One row per saved point: `path,t,theta,x1..,pi0..,phi1..`.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        let Some(first) = self.paths.iter().find_map(|p| p.saved.first()) else {
            return writeln!(out, "path,t,theta");
        };
        let mut header = vec!["path".to_string(), "t".into(), "theta".into()];
        header.extend((1..=first.x.len()).map(|r| format!("x{r}")));
        header.extend((0..first.pi.len()).map(|i| format!("pi{i}")));
        header.extend((1..=first.phi.len()).map(|i| format!("phi{i}")));
        writeln!(out, "{}", header.join(","))?;
        for p in &self.paths {
            for s in &p.saved {
                let mut row = vec![p.index.to_string(), s.t.to_string(), s.theta.to_string()];
                row.extend(s.x.iter().chain(&s.pi).chain(&s.phi).map(|v| v.to_string()));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}
