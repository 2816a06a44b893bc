//! Metropolis-Hastings proposal kernels (RW, pCN, AM, DIAM), the shared
//! accept/reject step, and the lag-blocked adaptation that refreshes the
//! step size, the proposal factor and a batch of pre-scaled noise every
//! `n_lag` iterations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{cholesky, dot, tri_invert, tri_matvec_into, tri_solve_into, DenseMatrix, LowerTriangular};
use crate::moments::{blend_local_global, GlobalMoments, MomentAccumulator};
use crate::targets::LogDensity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    /// `x + β A W`, fixed `A`.
    Rw,
    /// `x_ref + √(1-β²)(x - x_ref) + β A W`, fixed `A`.
    Pcn,
    /// Random walk with `A Aᵀ` the adapted empirical covariance.
    Am,
    /// pCN form with the adapted empirical covariance factor.
    Diam,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 4] = [
        ProposalKind::Rw,
        ProposalKind::Pcn,
        ProposalKind::Am,
        ProposalKind::Diam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::Rw => "rw",
            ProposalKind::Pcn => "pcn",
            ProposalKind::Am => "am",
            ProposalKind::Diam => "diam",
        }
    }

    /// Whether the proposal contracts toward `x_ref` (pCN form).
    pub fn contracts(self) -> bool {
        matches!(self, ProposalKind::Pcn | ProposalKind::Diam)
    }

    pub fn adapts_covariance(self) -> bool {
        matches!(self, ProposalKind::Am | ProposalKind::Diam)
    }

    pub fn default_band(self) -> (f64, f64) {
        if self.contracts() {
            (0.3, 0.5)
        } else {
            (0.1, 0.3)
        }
    }

    pub fn default_beta_max(self) -> f64 {
        if self.contracts() {
            1.0
        } else {
            10.0
        }
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProposalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "rw" => ProposalKind::Rw,
            "pcn" => ProposalKind::Pcn,
            "am" => ProposalKind::Am,
            "diam" => ProposalKind::Diam,
            other => return Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
        })
    }
}

/// Pivot of the pCN/DIAM contraction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefMode {
    #[default]
    Zero,
    Fixed(Vec<f64>),
    /// Follows the blended empirical mean once `ref_start` iterations have run.
    AdaptiveMean,
}

/// Escalating diagonal jitter for covariances that fail to factor.
pub const JITTER_LADDER: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub kind: ProposalKind,
    /// Initial step size β.
    pub beta_init: f64,
    /// Multiplier on the DIAM noise factor (≥ 1); forced to 1 for the other kernels.
    pub inflation: f64,
    pub ref_mode: RefMode,
    /// Iterations between step-size, factor and noise-batch updates.
    pub n_lag: usize,
    /// Target acceptance band `(lo, hi)` for the step-size controller.
    pub acceptance_band: (f64, f64),
    /// Iterations discarded before moments and traces are collected, rounded up to a multiple of `n_lag`.
    pub burn_in: usize,
    /// Minimum blended sample count before the covariance factor is first updated.
    pub adapt_start: u64,
    /// Sample-count weight of the reference covariance `A₀A₀ᵀ` mixed into
    /// every adapted covariance: `(n C + w A₀A₀ᵀ) / (n + w)`. Zero disables it.
    pub prior_weight: u64,
    /// Iteration after which `RefMode::AdaptiveMean` starts moving the pivot.
    pub ref_start: u64,
    /// β is multiplied or divided by this when the acceptance rate leaves the band.
    pub beta_factor: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub adapt_beta: bool,
    pub adapt_covariance: bool,
    /// Keep an explicit `A⁻¹` for the weighted quadratic instead of triangular solves.
    pub explicit_inverse: bool,
    /// Fixed factor for RW/pCN and the starting factor for AM/DIAM; identity when absent.
    pub reference_factor: Option<LowerTriangular>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self::new(ProposalKind::Diam, 2)
    }
}

impl KernelConfig {
    /// Defaults for dimension `d`.
    pub fn new(kind: ProposalKind, d: usize) -> Self {
        let d = d.max(1);
        Self {
            kind,
            beta_init: (2.4 / (d as f64).sqrt()).min(0.5),
            inflation: 1.0,
            ref_mode: RefMode::Zero,
            n_lag: (d / 2).max(1),
            acceptance_band: kind.default_band(),
            burn_in: 5 * d,
            adapt_start: 5 * d as u64,
            prior_weight: 5 * d as u64,
            ref_start: 10 * d as u64,
            beta_factor: 1.1,
            beta_min: 1e-6,
            beta_max: kind.default_beta_max(),
            adapt_beta: true,
            adapt_covariance: true,
            explicit_inverse: false,
            reference_factor: None,
        }
    }

    /// Re-derives the kind-dependent defaults (band, β cap) after changing `kind`.
    pub fn with_kind(mut self, kind: ProposalKind) -> Self {
        self.kind = kind;
        self.acceptance_band = kind.default_band();
        self.beta_max = kind.default_beta_max();
        self
    }

    pub fn effective_inflation(&self) -> f64 {
        if self.kind == ProposalKind::Diam {
            self.inflation
        } else {
            1.0
        }
    }

    /// Burn-in rounded up to whole lag intervals.
    pub fn burn_in_steps(&self) -> u64 {
        let lag = self.n_lag.max(1) as u64;
        (self.burn_in as u64).div_ceil(lag) * lag
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let (lo, hi) = self.acceptance_band;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad(format!("acceptance band ({lo}, {hi}) must satisfy 0 < lo < hi < 1"));
        }
        if self.n_lag == 0 {
            return bad("n_lag must be positive".into());
        }
        if !(self.inflation >= 1.0 && self.inflation.is_finite()) {
            return bad(format!("inflation must be >= 1, got {}", self.inflation));
        }
        if !(self.beta_min > 0.0 && self.beta_min <= self.beta_max) {
            return bad("need 0 < beta_min <= beta_max".into());
        }
        if self.kind.contracts() && self.beta_max > 1.0 {
            return bad("pcn/diam need beta_max <= 1".into());
        }
        if !(self.beta_init > 0.0 && self.beta_init.is_finite()) {
            return bad(format!("beta_init must be positive, got {}", self.beta_init));
        }
        if self.kind.contracts() && self.beta_init > 1.0 {
            return bad("pcn/diam need beta_init <= 1".into());
        }
        if !(self.beta_factor > 1.0) {
            return bad("beta_factor must exceed 1".into());
        }
        if let RefMode::Fixed(r) = &self.ref_mode {
            check_dim(d, r.len())?;
        }
        if let Some(f) = &self.reference_factor {
            check_dim(d, f.dim())?;
        }
        Ok(())
    }
}

/// Per-chain sampler state; owned by exactly one worker.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub(crate) x: Vec<f64>,
    pub(crate) log_pi: f64,
    /// `½ inflation⁻² |A⁻¹(x - x_ref)|²` at `x`.
    pub(crate) quad: f64,
    pub(crate) n: u64,
    pub(crate) n_accepted: u64,
    pub(crate) beta: f64,
    pub(crate) factor: LowerTriangular,
    pub(crate) factor_inv: Option<LowerTriangular>,
    pub(crate) x_ref: Vec<f64>,
    /// `n_lag` increments of length `d`, row-major.
    pub(crate) noise: Vec<f64>,
    pub(crate) noise_pos: usize,
    /// Samples of the current batch.
    pub(crate) moments: MomentAccumulator,
    pub(crate) factor_updates: u64,
}

impl ChainState {
    /// Starts a chain at `x0` with the reference factor and a fresh noise batch.
    pub fn new<T, R>(cfg: &KernelConfig, target: &T, x0: Vec<f64>, noise_rng: &mut R) -> Result<Self>
    where
        T: LogDensity + ?Sized,
        R: Rng + ?Sized,
    {
        let d = target.dim();
        cfg.validate(d)?;
        check_dim(d, x0.len())?;
        let factor = cfg
            .reference_factor
            .clone()
            .unwrap_or_else(|| LowerTriangular::identity(d));
        let x_ref = match &cfg.ref_mode {
            RefMode::Fixed(r) => r.clone(),
            RefMode::Zero | RefMode::AdaptiveMean => vec![0.0; d],
        };
        let log_pi = target.log_density(&x0);
        let mut state = Self {
            x: x0,
            log_pi,
            quad: 0.0,
            n: 0,
            n_accepted: 0,
            beta: cfg.beta_init,
            factor_inv: None,
            factor,
            x_ref,
            noise: Vec::new(),
            noise_pos: 0,
            moments: MomentAccumulator::new(d),
            factor_updates: 0,
        };
        state.refresh_factor_cache(cfg)?;
        state.refresh_noise(cfg, noise_rng);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn log_pi(&self) -> f64 {
        self.log_pi
    }

    pub fn iteration(&self) -> u64 {
        self.n
    }

    pub fn accepted_since_lag(&self) -> u64 {
        self.n_accepted
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn factor(&self) -> &LowerTriangular {
        &self.factor
    }

    pub fn reference(&self) -> &[f64] {
        &self.x_ref
    }

    pub fn moments(&self) -> &MomentAccumulator {
        &self.moments
    }

    pub fn factor_updates(&self) -> u64 {
        self.factor_updates
    }

    /// Cached weighted quadratic at the current state.
    pub fn cached_quadratic(&self) -> f64 {
        self.quad
    }

    /// Replaces the proposal factor, refreshing caches and the noise batch.
    pub fn set_factor<R: Rng + ?Sized>(
        &mut self,
        cfg: &KernelConfig,
        factor: LowerTriangular,
        noise_rng: &mut R,
    ) -> Result<()> {
        check_dim(self.dim(), factor.dim())?;
        self.factor = factor;
        self.refresh_factor_cache(cfg)?;
        self.refresh_noise(cfg, noise_rng);
        Ok(())
    }

    /// Moves the chain to `x`, refreshing the cached density and quadratic.
    pub fn set_position<T: LogDensity + ?Sized>(
        &mut self,
        cfg: &KernelConfig,
        target: &T,
        x: &[f64],
    ) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        self.x.copy_from_slice(x);
        self.log_pi = target.log_density(x);
        self.quad = weighted_quadratic(cfg, self, x);
        Ok(())
    }

    pub fn set_reference(&mut self, cfg: &KernelConfig, x_ref: Vec<f64>) -> Result<()> {
        check_dim(self.dim(), x_ref.len())?;
        self.x_ref = x_ref;
        self.quad = weighted_quadratic(cfg, self, &self.x);
        Ok(())
    }

    pub(crate) fn refresh_factor_cache(&mut self, cfg: &KernelConfig) -> Result<()> {
        self.factor_inv = if cfg.explicit_inverse {
            Some(tri_invert(&self.factor)?)
        } else {
            None
        };
        self.quad = weighted_quadratic(cfg, self, &self.x);
        Ok(())
    }

    /// Draws `n_lag` increments `ξ = β · inflation · A · W` in one pass.
    pub(crate) fn refresh_noise<R: Rng + ?Sized>(&mut self, cfg: &KernelConfig, rng: &mut R) {
        let d = self.dim();
        let lag = cfg.n_lag;
        let mut w = vec![0.0; d * lag];
        for v in w.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let scale = self.beta * cfg.effective_inflation();
        let mut noise = vec![0.0; d * lag];
        let factor = &self.factor;
        let fill = |(out, w): (&mut [f64], &[f64])| {
            tri_matvec_into(factor, w, out).expect("sized by construction");
            out.iter_mut().for_each(|v| *v *= scale);
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if d >= 64 {
                noise
                    .par_chunks_mut(d)
                    .zip(w.par_chunks(d))
                    .for_each(fill);
            } else {
                noise.chunks_mut(d).zip(w.chunks(d)).for_each(fill);
            }
        }
        #[cfg(not(feature = "parallel"))]
        noise.chunks_mut(d).zip(w.chunks(d)).for_each(fill);
        self.noise = noise;
        self.noise_pos = 0;
    }

    /// The next pre-scaled increment, if the batch is not exhausted.
    pub fn peek_noise(&self) -> Option<&[f64]> {
        let d = self.dim();
        let start = self.noise_pos * d;
        self.noise.get(start..start + d)
    }
}

/// Candidate state for the given pre-scaled increment. Pure.
pub fn propose(cfg: &KernelConfig, state: &ChainState, noise: &[f64]) -> Result<Vec<f64>> {
    check_dim(state.dim(), noise.len())?;
    if cfg.kind.contracts() {
        let rho = (1.0 - state.beta * state.beta).max(0.0).sqrt();
        Ok(state
            .x
            .iter()
            .zip(&state.x_ref)
            .zip(noise)
            .map(|((x, r), xi)| r + rho * (x - r) + xi)
            .collect())
    } else {
        Ok(state.x.iter().zip(noise).map(|(x, xi)| x + xi).collect())
    }
}

/// `½ inflation⁻² |A⁻¹(z - x_ref)|²` for the contracting kernels, zero otherwise.
pub fn weighted_quadratic(cfg: &KernelConfig, state: &ChainState, z: &[f64]) -> f64 {
    if !cfg.kind.contracts() {
        return 0.0;
    }
    let centered: Vec<f64> = z.iter().zip(&state.x_ref).map(|(a, r)| a - r).collect();
    let mut white = vec![0.0; centered.len()];
    match &state.factor_inv {
        Some(inv) => tri_matvec_into(inv, &centered, &mut white).expect("dimension checked"),
        None => tri_solve_into(&state.factor, &centered, &mut white).expect("factor has positive diagonal"),
    }
    let infl = cfg.effective_inflation();
    0.5 * dot(&white, &white) / (infl * infl)
}

/// Log density and weighted quadratic of a candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateEval {
    pub log_pi: f64,
    pub quad: f64,
    pub log_ratio: f64,
}

pub fn evaluate_candidate<T: LogDensity + ?Sized>(
    cfg: &KernelConfig,
    target: &T,
    state: &ChainState,
    candidate: &[f64],
) -> CandidateEval {
    let log_pi = target.log_density(candidate);
    let quad = weighted_quadratic(cfg, state, candidate);
    let log_ratio = if cfg.kind.contracts() {
        (log_pi + quad) - (state.log_pi + state.quad)
    } else {
        log_pi - state.log_pi
    };
    CandidateEval {
        log_pi,
        quad,
        log_ratio: if log_ratio.is_nan() { f64::NEG_INFINITY } else { log_ratio },
    }
}

/// `log[π(x*) q(x*, x) / (π(x) q(x, x*))]` for the current state.
pub fn log_accept_ratio<T: LogDensity + ?Sized>(
    cfg: &KernelConfig,
    target: &T,
    state: &ChainState,
    candidate: &[f64],
) -> f64 {
    evaluate_candidate(cfg, target, state, candidate).log_ratio
}

/// One Metropolis-Hastings transition using the next pre-scaled increment.
/// Post burn-in, the resulting state (accepted or repeated) enters the
/// chain's batch moments.
pub fn mh_step<T, R>(cfg: &KernelConfig, target: &T, state: &mut ChainState, rng: &mut R) -> Result<bool>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let noise = state.peek_noise().ok_or(Error::NoiseExhausted)?;
    let candidate = propose(cfg, state, noise)?;
    let eval = evaluate_candidate(cfg, target, state, &candidate);
    let u: f64 = rng.random();
    let accepted = u.ln() < eval.log_ratio;
    if accepted {
        state.x = candidate;
        state.log_pi = eval.log_pi;
        state.quad = eval.quad;
        state.n_accepted += 1;
    }
    state.noise_pos += 1;
    state.n += 1;
    if state.n > cfg.burn_in_steps() {
        state.moments.accumulate(&state.x)?;
    }
    Ok(accepted)
}

/// What a lag boundary changed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagOutcome {
    pub acceptance_rate: f64,
    pub beta: f64,
    pub factor_updated: bool,
    /// Relative jitter applied to factor the covariance, zero when none was needed.
    pub jitter: f64,
}

/// Step-size controller: multiply or divide by `beta_factor` outside the band, then clamp.
pub fn adapt_beta(cfg: &KernelConfig, beta: f64, acceptance_rate: f64) -> f64 {
    let (lo, hi) = cfg.acceptance_band;
    let next = if acceptance_rate > hi {
        beta * cfg.beta_factor
    } else if acceptance_rate < lo {
        beta / cfg.beta_factor
    } else {
        beta
    };
    next.clamp(cfg.beta_min, cfg.beta_max)
}

/// Cholesky with escalating diagonal jitter `ε · tr(C)/d · I`.
/// Returns `Ok(None)` when the covariance carries no spread at all.
pub fn factor_with_jitter(c: &DenseMatrix) -> Result<Option<(LowerTriangular, f64)>> {
    if let Ok(l) = cholesky(c) {
        return Ok(Some((l, 0.0)));
    }
    let d = c.rows() as f64;
    let trace = c.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return Ok(None);
    }
    let mut last = 0.0;
    for eps in JITTER_LADDER {
        let mut jittered = c.clone();
        jittered.add_to_diagonal(eps * trace / d);
        if let Ok(l) = cholesky(&jittered) {
            return Ok(Some((l, eps)));
        }
        last = eps;
    }
    Err(Error::JitterExhausted {
        jitter: last,
        trace,
        min_diag: c.diagonal().into_iter().fold(f64::INFINITY, f64::min),
    })
}

/// Count-weighted mix of the empirical covariance and the reference covariance.
pub fn regularized_covariance(cfg: &KernelConfig, c: &DenseMatrix, count: u64) -> DenseMatrix {
    if cfg.prior_weight == 0 {
        return c.clone();
    }
    let n = count as f64;
    let w = cfg.prior_weight as f64;
    let mut out = c.clone();
    out.scale(n / (n + w));
    match &cfg.reference_factor {
        Some(f) => {
            let c0 = f.gram();
            for (o, r) in out.as_mut_slice().iter_mut().zip(c0.as_slice()) {
                *o += w / (n + w) * r;
            }
        }
        None => out.add_to_diagonal(w / (n + w)),
    }
    out
}

/// False while a chain that never moved leaves only rounding noise in its covariance.
fn has_spread(c: &DenseMatrix, mean: &[f64]) -> bool {
    let d = c.rows() as f64;
    let scale = d + dot(mean, mean);
    c.trace() > 1e-12 * scale
}

/// Lag-boundary update: step size from the interval acceptance rate, the
/// proposal factor from the blended local/global covariance, the adaptive
/// pivot, and a fresh batch of `n_lag` increments.
pub fn lag_update<T, R>(
    cfg: &KernelConfig,
    target: &T,
    state: &mut ChainState,
    global: &GlobalMoments,
    noise_rng: &mut R,
) -> Result<LagOutcome>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let _ = target;
    let acceptance_rate = state.n_accepted as f64 / cfg.n_lag as f64;
    if cfg.adapt_beta {
        state.beta = adapt_beta(cfg, state.beta, acceptance_rate);
    }
    state.n_accepted = 0;

    let mut factor_updated = false;
    let mut jitter = 0.0;
    let wants_factor = cfg.kind.adapts_covariance() && cfg.adapt_covariance;
    let wants_ref = cfg.kind.contracts()
        && cfg.ref_mode == RefMode::AdaptiveMean
        && state.n >= cfg.ref_start;
    if wants_factor || wants_ref {
        let blended = blend_local_global(&state.moments, global)?;
        if wants_factor && blended.count >= cfg.adapt_start.max(2) {
            let c = regularized_covariance(cfg, &blended.covariance, blended.count);
            if has_spread(&c, &blended.mean) {
                let (l, eps) = factor_with_jitter(&c)?
                    .ok_or_else(|| Error::DegenerateTrace("covariance has no spread".into()))?;
                state.factor = l;
                state.factor_updates += 1;
                factor_updated = true;
                jitter = eps;
            }
        }
        if wants_ref && blended.count > 0 {
            state.x_ref = blended.mean;
        }
    }
    state.refresh_factor_cache(cfg)?;
    state.refresh_noise(cfg, noise_rng);
    Ok(LagOutcome {
        acceptance_rate,
        beta: state.beta,
        factor_updated,
        jitter,
    })
}
