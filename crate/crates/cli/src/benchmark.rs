use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use diam::benchmark::{fit_quadratic, sweep_chains, sweep_dims, ChainTiming, DimTiming, QuadraticFit};
use diam::runner::{RunConfig, TargetSpec};
use diam::{KernelConfig, ProposalKind};

use crate::config::{apply_stop_rules, target_kind};
use crate::error::{CliError, CliResult};
use crate::output::{create_dir, csv_writer, fmt_f64, write_json};

pub const BENCHMARK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long = "target", default_value = "pi1")]
    pub target: String,
    #[arg(long, default_value = "diam")]
    pub kernel: String,
    /// Dimensions for the fixed-sample timing sweep; `n_lag = d/2`.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Post-burn-in samples timed at each dimension.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Timings per dimension; the fastest is kept.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Chain counts for the run-to-tolerance sweep.
    #[arg(long, value_delimiter = ',')]
    pub chains: Vec<usize>,
    /// Dimension of the chain sweep.
    #[arg(long, default_value_t = 50)]
    pub chain_dim: usize,
    /// Stopping rules of the chain sweep (psrf:TOL, cov:TOL, mean:TOL).
    #[arg(long, default_values_t = ["cov:0.3".to_string()])]
    pub stop: Vec<String>,
    /// Sample cap of each chain-sweep run.
    #[arg(long, default_value_t = 2_000_000)]
    pub max_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct BenchmarkFile<'a> {
    format_version: u32,
    target: &'a str,
    kernel: ProposalKind,
    samples: u64,
    dims: &'a [DimTiming],
    fit: Option<&'a QuadraticFit>,
    chain_dim: usize,
    chains: &'a [ChainTiming],
}

pub fn run(args: BenchmarkArgs) -> CliResult<()> {
    if args.dims.is_empty() && args.chains.is_empty() {
        return Err(CliError::Config("empty sweep: give --dims and/or --chains".into()));
    }
    if args.dims.contains(&0) || args.chains.contains(&0) || args.chain_dim == 0 {
        return Err(CliError::Config("dimensions and chain counts must be positive".into()));
    }
    let kind = target_kind(&args.target, None, None)?;
    let kernel: ProposalKind = args.kernel.parse()?;
    create_dir(&args.out)?;

    let dims = if args.dims.is_empty() {
        Vec::new()
    } else {
        sweep_dims(kind, kernel, &args.dims, args.samples, args.repeats, args.seed)?
    };
    let mut w = csv_writer(&args.out.join("dims.csv"))?;
    w.write_record(["dim", "n_lag", "samples", "seconds", "seconds_per_sample", "samples_per_second"])?;
    for t in &dims {
        w.write_record([
            t.dim.to_string(),
            t.n_lag.to_string(),
            t.samples.to_string(),
            fmt_f64(t.seconds),
            fmt_f64(t.seconds_per_sample),
            fmt_f64(t.samples_per_second),
        ])?;
    }
    w.flush()?;

    let fit = if dims.len() >= 3 {
        let d: Vec<f64> = dims.iter().map(|t| t.dim as f64).collect();
        let y: Vec<f64> = dims.iter().map(|t| t.seconds).collect();
        Some(fit_quadratic(&d, &y)?)
    } else {
        None
    };
    let mut w = csv_writer(&args.out.join("fit.csv"))?;
    w.write_record(["term", "value"])?;
    if let Some(f) = &fit {
        for (k, v) in [
            ("a", f.a),
            ("b", f.b),
            ("c", f.c),
            ("r2", f.r2),
            ("quadratic_r2", f.quadratic_r2),
            ("quadratic_coef", f.quadratic_coef),
        ] {
            w.write_record([k.to_string(), fmt_f64(v)])?;
        }
    }
    w.flush()?;

    let chains = if args.chains.is_empty() {
        Vec::new()
    } else {
        let target = diam::build_target(kind, args.chain_dim, args.seed)?;
        let mut cfg = RunConfig::new(KernelConfig::new(kernel, args.chain_dim));
        cfg.target = Some(TargetSpec {
            kind,
            dim: args.chain_dim,
            seed: args.seed,
        });
        cfg.master_seed = args.seed;
        cfg.max_batches = None;
        apply_stop_rules(&mut cfg.stop, &args.stop)?;
        cfg.stop.max_samples = Some(args.max_samples);
        if cfg.stop.psrf_tol.is_some() && args.chains.contains(&1) {
            return Err(CliError::Config("the psrf rule cannot be used with a 1-chain run".into()));
        }
        sweep_chains(&target, &cfg, &args.chains)?
    };
    let mut w = csv_writer(&args.out.join("chains.csv"))?;
    w.write_record(["chains", "samples", "batches", "total_time", "time_per_batch", "converged", "stop_reason"])?;
    for c in &chains {
        w.write_record([
            c.chains.to_string(),
            c.samples.to_string(),
            c.batches.to_string(),
            fmt_f64(c.total_time),
            fmt_f64(c.time_per_batch),
            c.converged.to_string(),
            serde_json::to_value(c.stop_reason)?.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;

    write_json(
        &args.out.join("benchmark.json"),
        &BenchmarkFile {
            format_version: BENCHMARK_FORMAT_VERSION,
            target: kind.tag(),
            kernel,
            samples: args.samples,
            dims: &dims,
            fit: fit.as_ref(),
            chain_dim: args.chain_dim,
            chains: &chains,
        },
    )?;
    Ok(())
}
