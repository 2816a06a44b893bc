//! Timing sweeps over dimension and chain count, and least-squares fits of
//! time against `(1, d, d²)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_invert, DenseMatrix};
use crate::proposals::{KernelConfig, ProposalKind};
use crate::runner::{Execution, RunConfig, Sampler, StopReason};
use crate::targets::{build_target, LogDensity, TargetKind};

/// `y ≈ a + b·d + c·d²` by ordinary least squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// R² of the full fit.
    pub r2: f64,
    /// R² of the reduced fit `y ≈ a' + c'·d²`: the share of variance the quadratic term explains alone.
    pub quadratic_r2: f64,
    /// Slope `c'` of the reduced fit.
    pub quadratic_coef: f64,
    pub residuals: Vec<f64>,
}

fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    // scale columns to unit max so the normal equations stay well conditioned
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE))
        .collect();
    let mut xtx = DenseMatrix::zeros(k, k);
    let mut xty = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let v: f64 = columns[i]
                .iter()
                .zip(&columns[j])
                .map(|(a, b)| a / scales[i] * b / scales[j])
                .sum();
            xtx.set(i, j, v);
        }
        xty[i] = columns[i].iter().zip(y).map(|(a, b)| a / scales[i] * b).sum();
    }
    let beta = spd_invert(&xtx)?.matvec(&xty)?;
    Ok(beta.iter().zip(&scales).map(|(b, s)| b / s).collect())
}

fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

pub fn fit_quadratic(d: &[f64], y: &[f64]) -> Result<QuadraticFit> {
    if d.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            found: y.len(),
        });
    }
    if d.len() < 3 {
        return Err(Error::InvalidConfig("a quadratic fit needs at least 3 points".into()));
    }
    let ones = vec![1.0; d.len()];
    let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
    let full = least_squares(&[ones.clone(), d.to_vec(), sq.clone()], y)?;
    let fitted: Vec<f64> = d
        .iter()
        .map(|x| full[0] + full[1] * x + full[2] * x * x)
        .collect();
    let reduced = least_squares(&[ones, sq.clone()], y)?;
    let reduced_fit: Vec<f64> = sq.iter().map(|s| reduced[0] + reduced[1] * s).collect();
    Ok(QuadraticFit {
        a: full[0],
        b: full[1],
        c: full[2],
        r2: r_squared(y, &fitted),
        quadratic_r2: r_squared(y, &reduced_fit),
        quadratic_coef: reduced[1],
        residuals: y.iter().zip(&fitted).map(|(a, b)| a - b).collect(),
    })
}

/// Wall time for a fixed number of post-burn-in samples at one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimTiming {
    pub dim: usize,
    pub n_lag: usize,
    pub samples: u64,
    pub seconds: f64,
    pub seconds_per_sample: f64,
    pub samples_per_second: f64,
}

/// Times `samples` iterations (rounded up to whole lag intervals) of one
/// chain, burn-in disabled, traces off.
pub fn time_fixed_samples<T: LogDensity + ?Sized>(
    target: &T,
    kernel: &KernelConfig,
    samples: u64,
    seed: u64,
) -> Result<DimTiming> {
    let mut k = kernel.clone();
    k.burn_in = 0;
    let intervals = (samples as usize).div_ceil(k.n_lag).max(1);
    let mut cfg = RunConfig::new(k);
    cfg.intervals = intervals;
    cfg.max_batches = Some(1);
    cfg.master_seed = seed;
    cfg.record_traces = false;
    cfg.execution = Execution::Sequential;
    let mut sampler = Sampler::new(cfg, target)?;
    let start = Instant::now();
    let rec = sampler.step_batch()?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(DimTiming {
        dim: target.dim(),
        n_lag: kernel.n_lag,
        samples: rec.samples,
        seconds,
        seconds_per_sample: seconds / rec.samples as f64,
        samples_per_second: rec.samples as f64 / seconds,
    })
}

/// Dimension sweep on `kind` targets with `n_lag = d/2`; the best of `repeats` timings per point.
pub fn sweep_dims(
    target: TargetKind,
    kernel: ProposalKind,
    dims: &[usize],
    samples: u64,
    repeats: usize,
    seed: u64,
) -> Result<Vec<DimTiming>> {
    if dims.is_empty() {
        return Err(Error::InvalidConfig("empty dimension sweep".into()));
    }
    dims.iter()
        .map(|&d| {
            let t = build_target(target, d, seed)?;
            let cfg = KernelConfig::new(kernel, d);
            let mut best: Option<DimTiming> = None;
            for r in 0..repeats.max(1) {
                let timing = time_fixed_samples(&t, &cfg, samples, seed.wrapping_add(r as u64))?;
                if best.as_ref().is_none_or(|b| timing.seconds < b.seconds) {
                    best = Some(timing);
                }
            }
            Ok(best.expect("at least one repeat"))
        })
        .collect()
}

/// Outcome of one run to convergence at a given chain count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTiming {
    pub chains: usize,
    pub samples: u64,
    pub batches: u64,
    pub total_time: f64,
    pub time_per_batch: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// Runs `base` to its stopping rule for each chain count.
pub fn sweep_chains<T: LogDensity + ?Sized>(
    target: &T,
    base: &RunConfig,
    chains: &[usize],
) -> Result<Vec<ChainTiming>> {
    if chains.is_empty() {
        return Err(Error::InvalidConfig("empty chain sweep".into()));
    }
    chains
        .iter()
        .map(|&p| {
            let mut cfg = base.clone();
            cfg.chains = p;
            cfg.record_traces = false;
            let r = Sampler::new(cfg, target)?.run()?;
            Ok(ChainTiming {
                chains: p,
                samples: r.samples,
                batches: r.batches,
                total_time: r.wall_time,
                time_per_batch: r.time_per_batch,
                converged: r.converged,
                stop_reason: r.stop_reason,
            })
        })
        .collect()
}
