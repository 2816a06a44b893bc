//! Sampling configuration: an optional TOML file with one section per
//! module, overridden field by field by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use diam::runner::{Execution, Functional, RunConfig, StopRule, TargetSpec};
use diam::targets::Target;
use diam::{KernelConfig, LogDensity, ProposalKind, RefMode, TargetKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub kind: Option<String>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub sigma2: Option<f64>,
    pub b: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: Option<String>,
    pub beta_init: Option<f64>,
    pub inflation: Option<f64>,
    pub ref_mode: Option<String>,
    pub n_lag: Option<usize>,
    pub acceptance_band: Option<[f64; 2]>,
    pub burn_in: Option<usize>,
    pub adapt_start: Option<u64>,
    pub prior_weight: Option<u64>,
    pub ref_start: Option<u64>,
    pub beta_factor: Option<f64>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub adapt_beta: Option<bool>,
    pub adapt_covariance: Option<bool>,
    pub explicit_inverse: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub chains: Option<usize>,
    pub intervals: Option<usize>,
    pub max_batches: Option<u64>,
    pub dispersion: Option<f64>,
    pub seed: Option<u64>,
    pub functionals: Option<Vec<String>>,
    pub execution: Option<String>,
    pub record_traces: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    /// Same syntax as `--stop`, e.g. `["psrf:1.1", "cov:0.001"]`.
    pub rules: Option<Vec<String>>,
    pub max_samples: Option<u64>,
    pub max_wall_time: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Target selection flags shared by `sample` and `benchmark`.
#[derive(Debug, Default, Args)]
pub struct TargetFlags {
    /// pi1 … pi6.
    #[arg(long = "target")]
    pub kind: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Seed of the random target construction.
    #[arg(long)]
    pub target_seed: Option<u64>,
    /// pi4 eigenvalue scale (default 1/d).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// pi5/pi6 twist strength.
    #[arg(long)]
    pub b: Option<f64>,
    /// Load a target written by `generate-target` instead of building one.
    #[arg(long)]
    pub target_file: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SampleFlags {
    /// TOML file with [target], [kernel], [run], [stop] and [output] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub target: TargetFlags,
    /// rw, pcn, am or diam.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub beta_init: Option<f64>,
    #[arg(long)]
    pub inflation: Option<f64>,
    /// zero or adaptive_mean.
    #[arg(long)]
    pub ref_mode: Option<String>,
    #[arg(long)]
    pub n_lag: Option<usize>,
    /// Acceptance band as lo,hi.
    #[arg(long, value_delimiter = ',', num_args = 2, value_name = "LO,HI")]
    pub band: Option<Vec<f64>>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub adapt_start: Option<u64>,
    #[arg(long)]
    pub prior_weight: Option<u64>,
    #[arg(long)]
    pub explicit_inverse: bool,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Lag intervals per batch (M).
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub max_batches: Option<u64>,
    /// Chains start at dispersion · N(0, I).
    #[arg(long)]
    pub dispersion: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated: log_density, eigen_min, eigen_max, eigen:K, coord:K.
    #[arg(long, value_delimiter = ',')]
    pub functionals: Option<Vec<String>>,
    /// sequential or parallel.
    #[arg(long)]
    pub execution: Option<String>,
    #[arg(long)]
    pub no_traces: bool,
    /// psrf:TOL, cov:TOL, mean:TOL or none; repeatable, any rule stops the run.
    #[arg(long)]
    pub stop: Vec<String>,
    #[arg(long)]
    pub max_samples: Option<u64>,
    /// Seconds.
    #[arg(long)]
    pub max_wall_time: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,json.
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Continue from a checkpoint written by a previous run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

pub fn parse_formats(list: Option<&[String]>) -> CliResult<Formats> {
    let Some(list) = list else {
        return Ok(Formats { csv: true, json: true });
    };
    let mut f = Formats { csv: false, json: false };
    for item in list {
        match item.trim() {
            "csv" => f.csv = true,
            "json" => f.json = true,
            other => return Err(CliError::Config(format!("unknown output format '{other}'"))),
        }
    }
    if !f.csv && !f.json {
        return Err(CliError::Config("no output format selected".into()));
    }
    Ok(f)
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {what} '{s}'")))
}

/// Applies `--stop` style rules to `stop`; `none` clears every tolerance.
pub fn apply_stop_rules(stop: &mut StopRule, rules: &[String]) -> CliResult<()> {
    for rule in rules {
        let rule = rule.trim();
        if rule == "none" {
            stop.cov_tol = None;
            stop.mean_tol = None;
            stop.psrf_tol = None;
            continue;
        }
        let (name, value) = rule
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("stop rule '{rule}' is not NAME:VALUE")))?;
        let v: f64 = parse("stop tolerance", value)?;
        match name {
            "psrf" => stop.psrf_tol = Some(v),
            "cov" => stop.cov_tol = Some(v),
            "mean" => stop.mean_tol = Some(v),
            other => return Err(CliError::Config(format!("unknown stop rule '{other}'"))),
        }
    }
    Ok(())
}

/// Target kind with its optional parameter applied.
pub fn target_kind(kind: &str, sigma2: Option<f64>, b: Option<f64>) -> CliResult<TargetKind> {
    let base: TargetKind = kind.parse().map_err(CliError::from)?;
    Ok(match base {
        TargetKind::Pi4 { .. } => {
            if b.is_some() {
                return Err(CliError::Config("--b applies only to pi5 and pi6".into()));
            }
            TargetKind::Pi4 { sigma2 }
        }
        TargetKind::Pi5 { b: default } => {
            if sigma2.is_some() {
                return Err(CliError::Config("--sigma2 applies only to pi4".into()));
            }
            TargetKind::Pi5 { b: b.unwrap_or(default) }
        }
        TargetKind::Pi6 { b: default } => {
            if sigma2.is_some() {
                return Err(CliError::Config("--sigma2 applies only to pi4".into()));
            }
            TargetKind::Pi6 { b: b.unwrap_or(default) }
        }
        other => {
            if sigma2.is_some() || b.is_some() {
                return Err(CliError::Config(format!("{other} takes no --sigma2 or --b")));
            }
            other
        }
    })
}

/// Builds or loads the target from flags over file values.
pub fn resolve_target(flags: &TargetFlags, file: &TargetSection) -> CliResult<Target> {
    let path = flags.target_file.clone().or_else(|| file.file.clone());
    if let Some(path) = path {
        let mut r = std::io::BufReader::new(
            std::fs::File::open(&path)
                .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?,
        );
        return Ok(Target::read_from(&mut r)?);
    }
    let kind = flags
        .kind
        .clone()
        .or_else(|| file.kind.clone())
        .ok_or_else(|| CliError::Config("no target given (--target or --target-file)".into()))?;
    let dim = flags
        .dim
        .or(file.dim)
        .ok_or_else(|| CliError::Config("no dimension given (--dim)".into()))?;
    let kind = target_kind(&kind, flags.sigma2.or(file.sigma2), flags.b.or(file.b))?;
    let seed = flags.target_seed.or(file.seed).unwrap_or(0);
    Ok(diam::build_target(kind, dim, seed)?)
}

pub fn load_file(flags: &SampleFlags) -> CliResult<FileConfig> {
    match &flags.config {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

/// Settings that may change between a run and its resumption: caps,
/// stopping rules, execution mode and trace recording.
pub fn apply_run_overrides(flags: &SampleFlags, file: &FileConfig, run: &mut RunConfig) -> CliResult<()> {
    let rs = &file.run;
    if let Some(v) = flags.max_batches.or(rs.max_batches) {
        run.max_batches = Some(v);
    }
    if let Some(e) = flags.execution.as_deref().or(rs.execution.as_deref()) {
        run.execution = e.parse::<Execution>()?;
    }
    if flags.no_traces || rs.record_traces == Some(false) {
        run.record_traces = false;
    }
    let ss = &file.stop;
    if let Some(rules) = &ss.rules {
        apply_stop_rules(&mut run.stop, rules)?;
    }
    if !flags.stop.is_empty() {
        run.stop.cov_tol = None;
        run.stop.mean_tol = None;
        run.stop.psrf_tol = None;
        apply_stop_rules(&mut run.stop, &flags.stop)?;
    }
    if let Some(v) = flags.max_samples.or(ss.max_samples) {
        run.stop.max_samples = Some(v);
    }
    if let Some(v) = flags.max_wall_time.or(ss.max_wall_time) {
        run.stop.max_wall_time = Some(v);
    }
    Ok(())
}

pub fn resolve_output(flags: &SampleFlags, file: &FileConfig) -> CliResult<(PathBuf, Formats)> {
    let out_dir = flags
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("diam-out"));
    let formats = parse_formats(flags.format.as_deref().or(file.output.formats.as_deref()))?;
    Ok((out_dir, formats))
}

/// True when any target selection was given on the command line or in the file.
pub fn has_target(flags: &SampleFlags, file: &FileConfig) -> bool {
    let t = &flags.target;
    t.kind.is_some() || t.target_file.is_some() || file.target.kind.is_some() || file.target.file.is_some()
}

/// Everything `sample` needs once flags and file are merged.
pub struct SampleSetup {
    pub target: Target,
    pub run: RunConfig,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

pub fn resolve_sample(flags: &SampleFlags) -> CliResult<SampleSetup> {
    let file = load_file(flags)?;
    let target = resolve_target(&flags.target, &file.target)?;
    let d = target.dim();
    let ks = &file.kernel;

    let kind: ProposalKind = match flags.kernel.as_deref().or(ks.kind.as_deref()) {
        Some(k) => k.parse()?,
        None => ProposalKind::Diam,
    };
    let mut k = KernelConfig::new(kind, d);
    if let Some(v) = flags.beta_init.or(ks.beta_init) {
        k.beta_init = v;
    }
    k.inflation = match flags.inflation.or(ks.inflation) {
        Some(v) => v,
        None if target.kind().is_twisted() && kind == ProposalKind::Diam => 1.2,
        None => 1.0,
    };
    if let Some(m) = flags.ref_mode.as_deref().or(ks.ref_mode.as_deref()) {
        k.ref_mode = match m {
            "zero" => RefMode::Zero,
            "adaptive_mean" => RefMode::AdaptiveMean,
            other => return Err(CliError::Config(format!("unknown ref mode '{other}'"))),
        };
    }
    if let Some(v) = flags.n_lag.or(ks.n_lag) {
        k.n_lag = v;
    }
    if let Some(b) = &flags.band {
        k.acceptance_band = (b[0], b[1]);
    } else if let Some([lo, hi]) = ks.acceptance_band {
        k.acceptance_band = (lo, hi);
    }
    if let Some(v) = flags.burn_in.or(ks.burn_in) {
        k.burn_in = v;
    }
    if let Some(v) = flags.adapt_start.or(ks.adapt_start) {
        k.adapt_start = v;
    }
    if let Some(v) = flags.prior_weight.or(ks.prior_weight) {
        k.prior_weight = v;
    }
    if let Some(v) = ks.ref_start {
        k.ref_start = v;
    }
    if let Some(v) = ks.beta_factor {
        k.beta_factor = v;
    }
    if let Some(v) = ks.beta_min {
        k.beta_min = v;
    }
    if let Some(v) = ks.beta_max {
        k.beta_max = v;
    }
    if let Some(v) = ks.adapt_beta {
        k.adapt_beta = v;
    }
    if let Some(v) = ks.adapt_covariance {
        k.adapt_covariance = v;
    }
    k.explicit_inverse = flags.explicit_inverse || ks.explicit_inverse.unwrap_or(false);

    let rs = &file.run;
    let mut run = RunConfig::new(k);
    run.target = Some(TargetSpec {
        kind: target.kind(),
        dim: d,
        seed: target.seed(),
    });
    if let Some(v) = flags.chains.or(rs.chains) {
        run.chains = v;
    }
    if let Some(v) = flags.intervals.or(rs.intervals) {
        run.intervals = v;
    }
    if let Some(v) = flags.dispersion.or(rs.dispersion) {
        run.dispersion = v;
    }
    if let Some(v) = flags.seed.or(rs.seed) {
        run.master_seed = v;
    }
    let functionals = flags.functionals.clone().or_else(|| rs.functionals.clone());
    run.functionals = match functionals {
        Some(list) => list
            .iter()
            .map(|s| s.trim().parse::<Functional>())
            .collect::<Result<_, _>>()?,
        None if target.eigen().is_some() => {
            vec![Functional::LogDensity, Functional::EigenMin, Functional::EigenMax]
        }
        None => vec![Functional::LogDensity],
    };

    apply_run_overrides(flags, &file, &mut run)?;
    let (out_dir, formats) = resolve_output(flags, &file)?;
    run.validate(&target)?;
    Ok(SampleSetup {
        target,
        run,
        out_dir,
        formats,
    })
}
