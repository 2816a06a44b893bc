//! Fork/join orchestration of one or more chains: burn-in, batches of `M`
//! lag intervals, a barrier merge of moments, stopping rules, and resumable
//! checkpoints.

mod checkpoint;

pub use checkpoint::{Checkpoint, ChainSnapshot, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{cov_error, mean_error, psrf, ChainMoments, PsrfInput};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::moments::{GlobalMoments, MomentAccumulator};
use crate::proposals::{lag_update, mh_step, ChainState, KernelConfig};
use crate::rng::{make_rng_stream, StreamPurpose, StreamRng};
use crate::targets::{build_target, eigen_projection, AnalyticMoments, LogDensity, TargetKind};

/// Which target to build when the runner owns it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub dim: usize,
    pub seed: u64,
}

/// Stopping rules, combined with OR. Tolerances need analytic moments
/// (`cov_tol`, `mean_tol`) or at least two chains (`psrf_tol`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub cov_tol: Option<f64>,
    pub mean_tol: Option<f64>,
    /// Stop once every `√R_i` is below this.
    pub psrf_tol: Option<f64>,
    /// Never start a batch that would take `N` past this.
    pub max_samples: Option<u64>,
    /// Seconds, checked at batch boundaries.
    pub max_wall_time: Option<f64>,
}

impl StopRule {
    pub fn has_tolerance(&self) -> bool {
        self.cov_tol.is_some() || self.mean_tol.is_some() || self.psrf_tol.is_some()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Chains of a batch run on the rayon pool; sequential without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// What will actually run given the compiled features.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

impl FromStr for Execution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" | "seq" => Ok(Execution::Sequential),
            "parallel" | "par" => Ok(Execution::Parallel),
            other => Err(Error::InvalidConfig(format!("unknown execution mode '{other}'"))),
        }
    }
}

/// Scalar function of the state recorded at every post-burn-in iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Functional {
    LogDensity,
    /// Projection on the eigenvector of the smallest covariance eigenvalue.
    EigenMin,
    /// Projection on the eigenvector of the largest covariance eigenvalue.
    EigenMax,
    /// Projection on eigenvector `k` (ascending eigenvalue order).
    Eigen(usize),
    Coord(usize),
}

impl Functional {
    pub fn needs_eigen(self) -> bool {
        matches!(self, Functional::EigenMin | Functional::EigenMax | Functional::Eigen(_))
    }

    pub fn eval<T: LogDensity + ?Sized>(self, target: &T, x: &[f64], log_pi: f64) -> f64 {
        let eig = || target.eigen().expect("checked at configuration");
        match self {
            Functional::LogDensity => log_pi,
            Functional::EigenMin => eigen_projection(eig(), 0, x),
            Functional::EigenMax => eigen_projection(eig(), x.len() - 1, x),
            Functional::Eigen(k) => eigen_projection(eig(), k, x),
            Functional::Coord(k) => x[k],
        }
    }

    pub fn check<T: LogDensity + ?Sized>(self, target: &T) -> Result<()> {
        let d = target.dim();
        match self {
            Functional::Eigen(k) | Functional::Coord(k) if k >= d => Err(Error::InvalidConfig(
                format!("functional '{self}' indexes past dimension {d}"),
            )),
            f if f.needs_eigen() && target.eigen().is_none() => Err(Error::InvalidConfig(
                format!("functional '{self}' needs a target with a known eigenbasis"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::LogDensity => f.write_str("log_density"),
            Functional::EigenMin => f.write_str("eigen_min"),
            Functional::EigenMax => f.write_str("eigen_max"),
            Functional::Eigen(k) => write!(f, "eigen:{k}"),
            Functional::Coord(k) => write!(f, "coord:{k}"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown functional '{s}'"));
        match s {
            "log_density" => Ok(Functional::LogDensity),
            "eigen_min" => Ok(Functional::EigenMin),
            "eigen_max" => Ok(Functional::EigenMax),
            _ => {
                let (head, idx) = s.split_once(':').ok_or_else(bad)?;
                let k: usize = idx.parse().map_err(|_| bad())?;
                match head {
                    "eigen" => Ok(Functional::Eigen(k)),
                    "coord" => Ok(Functional::Coord(k)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl Serialize for Functional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Functional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Target to build for [`run_single_chain`] and [`run_concurrent`].
    pub target: Option<TargetSpec>,
    pub kernel: KernelConfig,
    /// `P`.
    pub chains: usize,
    /// `M`, lag intervals per batch.
    pub intervals: usize,
    /// `K_max`.
    pub max_batches: Option<u64>,
    pub stop: StopRule,
    /// Chains start at `dispersion · N(0, I)`.
    pub dispersion: f64,
    pub master_seed: u64,
    pub functionals: Vec<Functional>,
    pub record_traces: bool,
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(kernel: KernelConfig) -> Self {
        Self {
            target: None,
            kernel,
            chains: 1,
            intervals: 10,
            max_batches: Some(1000),
            stop: StopRule::default(),
            dispersion: 1.0,
            master_seed: 0,
            functionals: vec![Functional::LogDensity],
            record_traces: true,
            execution: Execution::default(),
        }
    }

    /// `P · M · n_lag`.
    pub fn samples_per_batch(&self) -> u64 {
        (self.chains * self.intervals * self.kernel.n_lag) as u64
    }

    pub fn validate<T: LogDensity + ?Sized>(&self, target: &T) -> Result<()> {
        let d = target.dim();
        if let Some(spec) = &self.target {
            if spec.dim != d {
                return Err(Error::DimensionMismatch {
                    expected: spec.dim,
                    found: d,
                });
            }
        }
        self.kernel.validate(d)?;
        if self.chains == 0 {
            return Err(Error::InvalidConfig("need at least one chain".into()));
        }
        if self.intervals == 0 {
            return Err(Error::InvalidConfig("intervals per batch must be positive".into()));
        }
        if self.chains > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many chains".into()));
        }
        if !(self.dispersion >= 0.0 && self.dispersion.is_finite()) {
            return Err(Error::InvalidConfig("dispersion must be finite and non-negative".into()));
        }
        if self.stop.psrf_tol.is_some() && self.chains < 2 {
            return Err(Error::InvalidConfig("the psrf stopping rule needs at least 2 chains".into()));
        }
        if (self.stop.cov_tol.is_some() || self.stop.mean_tol.is_some())
            && target.analytic_moments().is_none()
        {
            return Err(Error::InvalidConfig(
                "cov/mean stopping rules need a target with known moments".into(),
            ));
        }
        for tol in [self.stop.cov_tol, self.stop.mean_tol, self.stop.psrf_tol].into_iter().flatten() {
            if !(tol > 0.0) {
                return Err(Error::InvalidConfig(format!("tolerance {tol} must be positive")));
            }
        }
        if self.max_batches.is_none()
            && self.stop.max_samples.is_none()
            && self.stop.max_wall_time.is_none()
            && !self.stop.has_tolerance()
        {
            return Err(Error::InvalidConfig("no stopping rule and no cap: the run would never end".into()));
        }
        for f in &self.functionals {
            f.check(target)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CovTol,
    MeanTol,
    Psrf,
    MaxSamples,
    WallTime,
    BatchCap,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::CovTol | StopReason::MeanTol | StopReason::Psrf)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::CovTol => "covariance tolerance",
            StopReason::MeanTol => "mean tolerance",
            StopReason::Psrf => "psrf tolerance",
            StopReason::MaxSamples => "sample cap",
            StopReason::WallTime => "wall time",
            StopReason::BatchCap => "batch cap",
        })
    }
}

/// State of the run after one merged batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    /// 1-based batch index `k`.
    pub batch: u64,
    /// Version of the global snapshot the chains adapted against; always `batch - 1`.
    pub snapshot_version: u64,
    /// `N` after this batch.
    pub samples: u64,
    pub betas: Vec<f64>,
    /// Per-chain acceptance rate over the batch.
    pub acceptance: Vec<f64>,
    pub max_psrf: Option<f64>,
    pub cov_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub seconds: f64,
}

/// Functional traces, `values[functional][chain][iterate]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub names: Vec<String>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl Traces {
    pub fn get(&self, name: &str) -> Option<&[Vec<f64>]> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub chains: usize,
    pub intervals: usize,
    pub n_lag: usize,
    /// `K`.
    pub batches: u64,
    /// `N = P M K n_lag`.
    pub samples: u64,
    /// Seconds including burn-in.
    pub wall_time: f64,
    /// Mean seconds per batch, burn-in excluded.
    pub time_per_batch: f64,
    pub burn_in_seconds: f64,
    pub mean: Vec<f64>,
    pub covariance: DenseMatrix,
    pub final_betas: Vec<f64>,
    pub history: Vec<BatchRecord>,
    pub stop_reason: StopReason,
    pub converged: bool,
    #[serde(skip)]
    pub traces: Traces,
}

impl RunResult {
    pub fn final_psrf(&self) -> Option<f64> {
        self.history.last().and_then(|r| r.max_psrf)
    }
}

/// One chain's state, streams, per-chain history moments and traces.
#[derive(Clone, Debug)]
pub(crate) struct ChainWorker {
    pub(crate) index: usize,
    pub(crate) state: ChainState,
    pub(crate) noise_rng: StreamRng,
    pub(crate) accept_rng: StreamRng,
    /// All merged batches of this chain alone.
    pub(crate) history: GlobalMoments,
    pub(crate) batch_accepted: u64,
    pub(crate) traces: Vec<Vec<f64>>,
}

impl ChainWorker {
    fn start<T: LogDensity + ?Sized>(cfg: &RunConfig, target: &T, index: usize) -> Result<Self> {
        let d = target.dim();
        let chain = index as u32;
        let mut init = make_rng_stream(cfg.master_seed, chain, StreamPurpose::Init);
        let x0: Vec<f64> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut init);
                cfg.dispersion * z
            })
            .collect();
        let mut noise_rng = make_rng_stream(cfg.master_seed, chain, StreamPurpose::Noise);
        let state = ChainState::new(&cfg.kernel, target, x0, &mut noise_rng)?;
        Ok(Self {
            index,
            state,
            noise_rng,
            accept_rng: make_rng_stream(cfg.master_seed, chain, StreamPurpose::Accept),
            history: GlobalMoments::new(d, (cfg.intervals * cfg.kernel.n_lag) as u64),
            batch_accepted: 0,
            traces: vec![Vec::new(); cfg.functionals.len()],
        })
    }

    fn burn_in<T: LogDensity + ?Sized>(
        &mut self,
        cfg: &RunConfig,
        target: &T,
        global: &GlobalMoments,
    ) -> Result<()> {
        let k = &cfg.kernel;
        while self.state.iteration() < k.burn_in_steps() {
            for _ in 0..k.n_lag {
                mh_step(k, target, &mut self.state, &mut self.accept_rng)?;
            }
            lag_update(k, target, &mut self.state, global, &mut self.noise_rng)?;
        }
        Ok(())
    }

    fn batch<T: LogDensity + ?Sized>(
        &mut self,
        cfg: &RunConfig,
        target: &T,
        global: &GlobalMoments,
    ) -> Result<()> {
        let k = &cfg.kernel;
        self.batch_accepted = 0;
        for _ in 0..cfg.intervals {
            for _ in 0..k.n_lag {
                if mh_step(k, target, &mut self.state, &mut self.accept_rng)? {
                    self.batch_accepted += 1;
                }
                if cfg.record_traces {
                    for (f, trace) in cfg.functionals.iter().zip(self.traces.iter_mut()) {
                        trace.push(f.eval(target, &self.state.x, self.state.log_pi));
                    }
                }
            }
            lag_update(k, target, &mut self.state, global, &mut self.noise_rng)?;
        }
        Ok(())
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

/// Runs `work` on every chain, in parallel when enabled, surfacing panics per chain.
fn for_each_chain<F>(execution: Execution, workers: &mut [ChainWorker], work: F) -> Result<()>
where
    F: Fn(&mut ChainWorker) -> Result<()> + Sync + Send,
{
    let guarded = |w: &mut ChainWorker| -> Result<()> {
        let chain = w.index;
        catch_unwind(AssertUnwindSafe(|| work(w))).unwrap_or_else(|payload| {
            Err(Error::ChainPanicked {
                chain,
                message: panic_message(payload),
            })
        })
    };
    match execution.effective() {
        Execution::Sequential => workers.iter_mut().try_for_each(guarded),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                // collect every outcome so the lowest failing chain is reported deterministically
                let outcomes: Vec<Result<()>> = workers.par_iter_mut().map(guarded).collect();
                outcomes.into_iter().collect()
            }
            #[cfg(not(feature = "parallel"))]
            workers.iter_mut().try_for_each(guarded)
        }
    }
}

/// A resumable multi-chain run over a borrowed target.
pub struct Sampler<'t, T: LogDensity + ?Sized> {
    cfg: RunConfig,
    target: &'t T,
    truth: Option<AnalyticMoments>,
    workers: Vec<ChainWorker>,
    global: GlobalMoments,
    burned_in: bool,
    history: Vec<BatchRecord>,
    elapsed: f64,
    burn_in_seconds: f64,
}

impl<'t, T: LogDensity + ?Sized> Sampler<'t, T> {
    pub fn new(cfg: RunConfig, target: &'t T) -> Result<Self> {
        cfg.validate(target)?;
        let workers = (0..cfg.chains)
            .map(|p| ChainWorker::start(&cfg, target, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            global: GlobalMoments::new(target.dim(), cfg.samples_per_batch()),
            truth: target.analytic_moments(),
            cfg,
            target,
            workers,
            burned_in: false,
            history: Vec::new(),
            elapsed: 0.0,
            burn_in_seconds: 0.0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn global(&self) -> &GlobalMoments {
        &self.global
    }

    pub fn history(&self) -> &[BatchRecord] {
        &self.history
    }

    pub fn batches(&self) -> u64 {
        self.global.batches()
    }

    pub fn samples(&self) -> u64 {
        self.global.count()
    }

    pub fn chain_state(&self, chain: usize) -> &ChainState {
        &self.workers[chain].state
    }

    /// PSRF over every merged batch, or `None` with fewer than 2 chains or 2 samples per chain.
    pub fn psrf(&self) -> Result<Option<crate::diagnostics::PsrfReport>> {
        if self.workers.len() < 2 || self.workers[0].history.count() < 2 {
            return Ok(None);
        }
        let chains: Vec<ChainMoments> = self
            .workers
            .iter()
            .map(|w| ChainMoments {
                mean: w.history.mean().to_vec(),
                second: w.history.second().clone(),
            })
            .collect();
        let report = psrf(&PsrfInput {
            chains: &chains,
            global_mean: self.global.mean(),
            samples_per_chain: self.workers[0].history.count(),
        })?;
        Ok(Some(report))
    }

    fn run_burn_in(&mut self) -> Result<()> {
        let start = Instant::now();
        let (cfg, target, global) = (&self.cfg, self.target, &self.global);
        for_each_chain(cfg.execution, &mut self.workers, |w| w.burn_in(cfg, target, global))?;
        self.burned_in = true;
        self.burn_in_seconds = start.elapsed().as_secs_f64();
        self.elapsed += self.burn_in_seconds;
        Ok(())
    }

    /// Runs one fork/join batch and merges it. Burn-in runs first if pending.
    pub fn step_batch(&mut self) -> Result<BatchRecord> {
        if !self.burned_in {
            self.run_burn_in()?;
        }
        let start = Instant::now();
        let snapshot_version = self.global.batches();
        {
            let (cfg, target, global) = (&self.cfg, self.target, &self.global);
            for_each_chain(cfg.execution, &mut self.workers, |w| w.batch(cfg, target, global))?;
        }
        // barrier: every chain is parked, merge in ascending chain order
        let locals: Vec<MomentAccumulator> = self.workers.iter().map(|w| w.state.moments.clone()).collect();
        self.global = self.global.merge_batch(&locals)?;
        for w in &mut self.workers {
            w.history = w.history.merge_batch(std::slice::from_ref(&w.state.moments))?;
            w.state.moments.reset();
        }
        let per_chain = (self.cfg.intervals * self.cfg.kernel.n_lag) as f64;
        // a chain that has not moved yet has no within variance: report it as unconverged
        let max_psrf = match self.psrf() {
            Err(Error::ZeroWithinVariance { .. }) => Some(f64::INFINITY),
            r => r?.map(|r| r.max()),
        };
        let (cov_err, mean_err) = match &self.truth {
            Some(t) => (
                Some(cov_error(&self.global.covariance(), &t.covariance)?),
                Some(mean_error(self.global.mean(), &t.mean)?),
            ),
            None => (None, None),
        };
        let seconds = start.elapsed().as_secs_f64();
        self.elapsed += seconds;
        let record = BatchRecord {
            batch: self.global.batches(),
            snapshot_version,
            samples: self.global.count(),
            betas: self.workers.iter().map(|w| w.state.beta).collect(),
            acceptance: self
                .workers
                .iter()
                .map(|w| w.batch_accepted as f64 / per_chain)
                .collect(),
            max_psrf,
            cov_error: cov_err,
            mean_error: mean_err,
            seconds,
        };
        self.history.push(record.clone());
        Ok(record)
    }

    fn tolerance_reached(&self, r: &BatchRecord) -> Option<StopReason> {
        let stop = &self.cfg.stop;
        let below = |tol: Option<f64>, v: Option<f64>| matches!((tol, v), (Some(t), Some(v)) if v < t);
        if below(stop.cov_tol, r.cov_error) {
            Some(StopReason::CovTol)
        } else if below(stop.mean_tol, r.mean_error) {
            Some(StopReason::MeanTol)
        } else if below(stop.psrf_tol, r.max_psrf) {
            Some(StopReason::Psrf)
        } else {
            None
        }
    }

    fn cap_reached(&self) -> Option<StopReason> {
        let stop = &self.cfg.stop;
        if let Some(k) = self.cfg.max_batches {
            if self.global.batches() >= k {
                return Some(StopReason::BatchCap);
            }
        }
        if let Some(n) = stop.max_samples {
            if self.global.count() + self.cfg.samples_per_batch() > n {
                return Some(StopReason::MaxSamples);
            }
        }
        if let Some(t) = stop.max_wall_time {
            if self.elapsed >= t {
                return Some(StopReason::WallTime);
            }
        }
        None
    }

    /// Runs batches until a tolerance is met or a cap is hit.
    pub fn run(&mut self) -> Result<RunResult> {
        let reason = loop {
            if let Some(r) = self.history.last().and_then(|r| self.tolerance_reached(r)) {
                break r;
            }
            if let Some(r) = self.cap_reached() {
                break r;
            }
            self.step_batch()?;
        };
        Ok(self.result(reason))
    }

    pub fn result(&self, stop_reason: StopReason) -> RunResult {
        let batches = self.global.batches();
        let batch_secs: f64 = self.history.iter().map(|r| r.seconds).sum();
        RunResult {
            chains: self.cfg.chains,
            intervals: self.cfg.intervals,
            n_lag: self.cfg.kernel.n_lag,
            batches,
            samples: self.global.count(),
            wall_time: self.elapsed,
            time_per_batch: if self.history.is_empty() {
                0.0
            } else {
                batch_secs / self.history.len() as f64
            },
            burn_in_seconds: self.burn_in_seconds,
            mean: self.global.mean().to_vec(),
            covariance: self.global.covariance(),
            final_betas: self.workers.iter().map(|w| w.state.beta).collect(),
            history: self.history.clone(),
            stop_reason,
            converged: stop_reason.converged(),
            traces: Traces {
                names: self.cfg.functionals.iter().map(|f| f.to_string()).collect(),
                values: (0..self.cfg.functionals.len())
                    .map(|f| self.workers.iter().map(|w| w.traces[f].clone()).collect())
                    .collect(),
            },
        }
    }
}

fn owned_target(cfg: &RunConfig) -> Result<crate::targets::Target> {
    let spec = cfg
        .target
        .ok_or_else(|| Error::InvalidConfig("run config has no target".into()))?;
    build_target(spec.kind, spec.dim, spec.seed)
}

/// Runs chain 0 alone with sequential execution.
pub fn run_single_chain(cfg: &RunConfig) -> Result<RunResult> {
    let target = owned_target(cfg)?;
    run_single_chain_on(cfg, &target)
}

pub fn run_single_chain_on<T: LogDensity + ?Sized>(cfg: &RunConfig, target: &T) -> Result<RunResult> {
    let mut single = cfg.clone();
    single.chains = 1;
    single.execution = Execution::Sequential;
    Sampler::new(single, target)?.run()
}

/// Runs `P` chains with a barrier merge after every batch.
pub fn run_concurrent(cfg: &RunConfig) -> Result<RunResult> {
    let target = owned_target(cfg)?;
    run_concurrent_on(cfg, &target)
}

pub fn run_concurrent_on<T: LogDensity + ?Sized>(cfg: &RunConfig, target: &T) -> Result<RunResult> {
    Sampler::new(cfg.clone(), target)?.run()
}

/// Sizes the global rayon pool from `threads`, else `DIAM_THREADS`, else rayon's default.
/// Returns the pool size in effect; a pool that already exists is left alone.
pub fn init_thread_pool(threads: Option<usize>) -> usize {
    let requested = threads.or_else(|| {
        std::env::var("DIAM_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    });
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        1
    }
}
