use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use diam::diagnostics::{acf, default_max_lag, iact_from_acf, psrf_from_chains, psrf_from_traces, ChainMoments, TraceSummary};
use diam::runner::Checkpoint;

use crate::error::{CliError, CliResult};
use crate::output::{create_dir, csv_writer, fmt_f64, fmt_opt, read_trace, write_json};
use crate::sample::file_stem;

pub const DIAGNOSTICS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Output directory of a `sample` run, as DIR or LABEL=DIR; every
    /// trace_*.csv in it is read. Repeat to compare runs side by side.
    #[arg(long, short)]
    pub input: Vec<String>,
    /// A single trace file (iter,chain_0,…) as FILE or LABEL=FILE; repeatable.
    #[arg(long)]
    pub trace: Vec<String>,
    /// Checkpoint whose per-chain moments give a coordinate-wise PSRF.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Largest ACF lag (default min(N/2 - 1, 1000) of the shortest chain).
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct FunctionalReport {
    source: String,
    name: String,
    chains: usize,
    max_lag: usize,
    per_chain: Vec<TraceSummary>,
    mean_iact: f64,
    total_ess: f64,
    psrf: Option<f64>,
}

#[derive(Debug, Serialize)]
struct HistoryRow {
    source: String,
    batch: u64,
    samples: u64,
    max_psrf: Option<f64>,
    cov_error: Option<f64>,
    mean_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CheckpointPsrf {
    batches: u64,
    samples_per_chain: u64,
    max: f64,
    sqrt_r: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct DiagnosticsFile {
    format_version: u32,
    functionals: Vec<FunctionalReport>,
    psrf_history: Vec<HistoryRow>,
    checkpoint_psrf: Option<CheckpointPsrf>,
}

struct Loaded {
    source: String,
    name: String,
    path: PathBuf,
    chains: Vec<Vec<f64>>,
}

fn split_label(arg: &str, fallback: impl FnOnce(&Path) -> String) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let p = PathBuf::from(arg);
            (fallback(&p), p)
        }
    }
}

fn trace_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    stem.strip_prefix("trace_").unwrap_or(stem).to_string()
}

fn dir_label(p: &Path) -> String {
    p.file_name().and_then(|n| n.to_str()).unwrap_or("run").to_string()
}

/// `(source, trace file)` pairs plus the run directories that may hold a history.csv.
fn collect_inputs(args: &DiagnoseArgs) -> CliResult<(Vec<(String, PathBuf)>, Vec<(String, PathBuf)>)> {
    let mut files = Vec::new();
    let mut dirs = Vec::new();
    for arg in &args.input {
        let (label, dir) = split_label(arg, dir_label);
        let entries = std::fs::read_dir(&dir)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
            })
            .collect();
        found.sort();
        files.extend(found.into_iter().map(|f| (label.clone(), f)));
        dirs.push((label, dir));
    }
    for arg in &args.trace {
        files.push(split_label(arg, |_| "trace".to_string()));
    }
    let mut labels: Vec<&String> = dirs.iter().map(|(l, _)| l).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("input labels must be distinct (use LABEL=DIR)".into()));
    }
    if files.is_empty() && args.checkpoint.is_none() {
        return Err(CliError::Config("nothing to diagnose (--input, --trace or --checkpoint)".into()));
    }
    Ok((files, dirs))
}

fn read_history(source: &str, path: &Path) -> CliResult<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let h = r.headers()?.clone();
    let col = |name: &str| {
        h.iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Runtime(format!("{}: missing column {name}", path.display())))
    };
    let (ib, is, ip, ic, im) = (col("batch")?, col("samples")?, col("max_psrf")?, col("cov_error")?, col("mean_error")?);
    let bad = |f: &str| CliError::Runtime(format!("{}: bad field '{f}'", path.display()));
    let opt = |f: &str| -> CliResult<Option<f64>> {
        if f.is_empty() {
            Ok(None)
        } else {
            f.parse().map(Some).map_err(|_| bad(f))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(HistoryRow {
            source: source.to_string(),
            batch: rec[ib].parse().map_err(|_| bad(&rec[ib]))?,
            samples: rec[is].parse().map_err(|_| bad(&rec[is]))?,
            max_psrf: opt(&rec[ip])?,
            cov_error: opt(&rec[ic])?,
            mean_error: opt(&rec[im])?,
        });
    }
    Ok(rows)
}

fn checkpoint_psrf(path: &Path) -> CliResult<CheckpointPsrf> {
    let ckpt = Checkpoint::load(path).map_err(|e| match e {
        diam::Error::Io(_) => CliError::Config(format!("cannot read checkpoint {}: {e}", path.display())),
        other => CliError::from(other),
    })?;
    let per_chain = ckpt.batches * (ckpt.config.intervals * ckpt.config.kernel.n_lag) as u64;
    let chains: Vec<ChainMoments> = ckpt
        .chains
        .iter()
        .map(|c| ChainMoments {
            mean: c.history_mean.clone(),
            second: c.history_second.clone(),
        })
        .collect();
    let report = psrf_from_chains(&chains, per_chain)?;
    Ok(CheckpointPsrf {
        batches: ckpt.batches,
        samples_per_chain: per_chain,
        max: report.max(),
        sqrt_r: report.sqrt_r,
    })
}

pub fn run(args: DiagnoseArgs) -> CliResult<()> {
    let (files, dirs) = collect_inputs(&args)?;
    let mut loaded = Vec::with_capacity(files.len());
    for (source, path) in files {
        let (_, chains) = read_trace(&path)?;
        let n = chains.iter().map(Vec::len).min().unwrap_or(0);
        if n < 2 {
            return Err(CliError::Runtime(format!("{}: fewer than 2 iterates per chain", path.display())));
        }
        loaded.push(Loaded {
            source,
            name: trace_name(&path),
            path,
            chains,
        });
    }
    create_dir(&args.out)?;

    // one lag window per functional so the per-source ACF columns line up
    let mut windows: BTreeMap<String, usize> = BTreeMap::new();
    for l in &loaded {
        let n = l.chains.iter().map(Vec::len).min().unwrap_or(0);
        let w = args.max_lag.unwrap_or_else(|| default_max_lag(n)).min(n - 1);
        windows.entry(l.name.clone()).and_modify(|m| *m = (*m).min(w)).or_insert(w);
    }

    let mut acf_w = csv_writer(&args.out.join("acf.csv"))?;
    acf_w.write_record(["source", "functional", "chain", "lag", "rho"])?;
    let mut iact_w = csv_writer(&args.out.join("iact.csv"))?;
    iact_w.write_record(["source", "functional", "chain", "samples", "mean", "variance", "iact", "ess"])?;
    let mut psrf_w = csv_writer(&args.out.join("psrf.csv"))?;
    psrf_w.write_record(["source", "functional", "chains", "samples_per_chain", "psrf"])?;

    let mut reports = Vec::new();
    // functional -> [(source, chain-averaged ACF)]
    let mut wide: BTreeMap<String, Vec<(String, Vec<f64>)>> = BTreeMap::new();
    for l in &loaded {
        let max_lag = windows[&l.name];
        let mut per_chain = Vec::with_capacity(l.chains.len());
        let mut avg = vec![0.0; max_lag + 1];
        for (c, trace) in l.chains.iter().enumerate() {
            let rho = acf(trace, max_lag).map_err(|e| {
                CliError::Runtime(format!("{} ({} chain {c}): {e}", l.path.display(), l.name))
            })?;
            for (lag, r) in rho.iter().enumerate() {
                acf_w.write_record([l.source.clone(), l.name.clone(), c.to_string(), lag.to_string(), fmt_f64(*r)])?;
                avg[lag] += r / l.chains.len() as f64;
            }
            let len = trace.len() as f64;
            let mean = trace.iter().sum::<f64>() / len;
            let variance = trace.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;
            let tau = iact_from_acf(&rho);
            let s = TraceSummary {
                name: l.name.clone(),
                samples: trace.len(),
                mean,
                variance,
                iact: tau,
                ess: len / tau,
            };
            iact_w.write_record([
                l.source.clone(),
                l.name.clone(),
                c.to_string(),
                s.samples.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.variance),
                fmt_f64(s.iact),
                fmt_f64(s.ess),
            ])?;
            per_chain.push(s);
        }
        wide.entry(l.name.clone()).or_default().push((l.source.clone(), avg));
        let n = l.chains.iter().map(Vec::len).min().unwrap_or(0);
        let psrf = if l.chains.len() >= 2 {
            let equal: Vec<Vec<f64>> = l.chains.iter().map(|c| c[..n].to_vec()).collect();
            let r = psrf_from_traces(&equal).map_err(|e| CliError::Runtime(format!("{}: {e}", l.name)))?;
            psrf_w.write_record([l.source.clone(), l.name.clone(), l.chains.len().to_string(), n.to_string(), fmt_f64(r)])?;
            Some(r)
        } else {
            None
        };
        reports.push(FunctionalReport {
            source: l.source.clone(),
            name: l.name.clone(),
            chains: l.chains.len(),
            max_lag,
            mean_iact: per_chain.iter().map(|s| s.iact).sum::<f64>() / per_chain.len() as f64,
            total_ess: per_chain.iter().map(|s| s.ess).sum(),
            per_chain,
            psrf,
        });
    }
    acf_w.flush()?;
    iact_w.flush()?;
    psrf_w.flush()?;

    for (name, columns) in &wide {
        let mut w = csv_writer(&args.out.join(format!("acf_{}.csv", file_stem(name))))?;
        let mut header = vec!["lag".to_string()];
        header.extend(columns.iter().map(|(s, _)| s.clone()));
        w.write_record(&header)?;
        for lag in 0..=windows[name] {
            let mut rec = vec![lag.to_string()];
            rec.extend(columns.iter().map(|(_, rho)| fmt_f64(rho[lag])));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    let mut history = Vec::new();
    for (label, dir) in &dirs {
        let h = dir.join("history.csv");
        if h.exists() {
            history.extend(read_history(label, &h)?);
        }
    }
    let mut hist_w = csv_writer(&args.out.join("psrf_history.csv"))?;
    hist_w.write_record(["source", "batch", "samples", "max_psrf", "cov_error", "mean_error"])?;
    for h in &history {
        hist_w.write_record([
            h.source.clone(),
            h.batch.to_string(),
            h.samples.to_string(),
            fmt_opt(h.max_psrf),
            fmt_opt(h.cov_error),
            fmt_opt(h.mean_error),
        ])?;
    }
    hist_w.flush()?;

    let ckpt = match &args.checkpoint {
        Some(p) => {
            let c = checkpoint_psrf(p)?;
            let mut w = csv_writer(&args.out.join("psrf_coords.csv"))?;
            w.write_record(["coordinate", "sqrt_r"])?;
            for (i, r) in c.sqrt_r.iter().enumerate() {
                w.write_record([i.to_string(), fmt_f64(*r)])?;
            }
            w.flush()?;
            Some(c)
        }
        None => None,
    };

    write_json(
        &args.out.join("diagnostics.json"),
        &DiagnosticsFile {
            format_version: DIAGNOSTICS_FORMAT_VERSION,
            functionals: reports,
            psrf_history: history,
            checkpoint_psrf: ckpt,
        },
    )?;
    Ok(())
}
