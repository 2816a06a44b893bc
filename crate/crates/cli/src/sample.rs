use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use diam::runner::Checkpoint;
use diam::runner::{RunConfig, Sampler};
use diam::targets::Target;
use diam::RunResult;

use crate::config::{
    apply_run_overrides, has_target, load_file, resolve_output, resolve_sample, resolve_target, Formats,
    SampleFlags,
};
use crate::error::{CliError, CliResult};
use crate::generate::{summary, TargetSummary};
use crate::output::{create_dir, csv_writer, fmt_f64, fmt_opt, read_trace, write_json, write_trace};

pub const RESULT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub flags: SampleFlags,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    format_version: u32,
    target: TargetSummary,
    config: &'a RunConfig,
    result: &'a RunResult,
    final_psrf: Option<f64>,
    exit_code: u8,
    resumed_from: Option<&'a Path>,
    outputs: Vec<String>,
}

struct Prepared {
    target: Target,
    run: RunConfig,
    out_dir: PathBuf,
    formats: Formats,
    checkpoint: Option<Checkpoint>,
}

fn prepare(flags: &SampleFlags) -> CliResult<Prepared> {
    let Some(path) = &flags.resume else {
        let s = resolve_sample(flags)?;
        return Ok(Prepared {
            target: s.target,
            run: s.run,
            out_dir: s.out_dir,
            formats: s.formats,
            checkpoint: None,
        });
    };
    let ckpt = Checkpoint::load(path).map_err(|e| match e {
        diam::Error::Io(_) => CliError::Config(format!("cannot read checkpoint {}: {e}", path.display())),
        other => CliError::from(other),
    })?;
    let file = load_file(flags)?;
    let target = if has_target(flags, &file) {
        resolve_target(&flags.target, &file.target)?
    } else {
        let spec = ckpt
            .config
            .target
            .ok_or_else(|| CliError::Config("checkpoint names no target; pass --target-file".into()))?;
        diam::build_target(spec.kind, spec.dim, spec.seed)?
    };
    let mut run = ckpt.config.clone();
    apply_run_overrides(flags, &file, &mut run)?;
    let (out_dir, formats) = resolve_output(flags, &file)?;
    Ok(Prepared {
        target,
        run,
        out_dir,
        formats,
        checkpoint: Some(ckpt),
    })
}

pub fn run(args: SampleArgs) -> CliResult<()> {
    let flags = args.flags;
    let p = prepare(&flags)?;
    create_dir(&p.out_dir)?;
    let (mut sampler, first_iter) = match p.checkpoint {
        Some(ckpt) => {
            let per_chain = ckpt.batches * (ckpt.config.intervals * ckpt.config.kernel.n_lag) as u64;
            (Sampler::from_checkpoint(ckpt, &p.target, Some(p.run.clone()))?, per_chain)
        }
        None => (Sampler::new(p.run.clone(), &p.target)?, 0),
    };
    let result = sampler.run()?;
    sampler.checkpoint().save(&p.out_dir.join("checkpoint.bin"))?;

    let cfg = sampler.config();
    let not_converged = result.samples == 0 || (cfg.stop.has_tolerance() && !result.converged);
    let exit_code = if not_converged { 3 } else { 0 };

    let mut outputs = vec!["checkpoint.bin".to_string()];
    if p.formats.csv {
        write_history(&p.out_dir.join("history.csv"), &result)?;
        outputs.push("history.csv".into());
        if cfg.record_traces {
            for (name, chains) in result.traces.names.iter().zip(&result.traces.values) {
                let file = format!("trace_{}.csv", file_stem(name));
                write_trace_continuing(&p.out_dir.join(&file), first_iter, chains)?;
                outputs.push(file);
            }
        }
    }
    if p.formats.json {
        outputs.push("result.json".into());
        let doc = ResultFile {
            format_version: RESULT_FORMAT_VERSION,
            target: summary(&p.target),
            config: cfg,
            result: &result,
            final_psrf: result.final_psrf(),
            exit_code,
            resumed_from: flags.resume.as_deref(),
            outputs,
        };
        write_json(&p.out_dir.join("result.json"), &doc)?;
    }

    eprintln!(
        "diam: {} samples in {} batches, {:.3}s, stopped on {}{}",
        result.samples,
        result.batches,
        result.wall_time,
        result.stop_reason,
        result.final_psrf().map(|r| format!(", max psrf {r:.4}")).unwrap_or_default()
    );
    if not_converged {
        return Err(CliError::NotConverged(if result.samples == 0 {
            "no samples were produced".into()
        } else {
            format!("stopped on {} before any tolerance was met", result.stop_reason)
        }));
    }
    Ok(())
}

/// `eigen:3` becomes `eigen_3` in file names.
pub fn file_stem(functional: &str) -> String {
    functional
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Appends to an earlier trace file when it ends exactly where this segment starts.
fn write_trace_continuing(path: &Path, first_iter: u64, chains: &[Vec<f64>]) -> CliResult<()> {
    if first_iter > 0 && path.exists() {
        if let Ok((0, mut old)) = read_trace(path) {
            if old.len() == chains.len() && old.iter().all(|c| c.len() as u64 == first_iter) {
                for (o, c) in old.iter_mut().zip(chains) {
                    o.extend_from_slice(c);
                }
                return write_trace(path, 0, &old);
            }
        }
    }
    write_trace(path, first_iter, chains)
}

fn write_history(path: &Path, r: &RunResult) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["batch", "snapshot_version", "samples", "max_psrf", "cov_error", "mean_error", "seconds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..r.chains).map(|c| format!("beta_{c}")));
    header.extend((0..r.chains).map(|c| format!("acceptance_{c}")));
    w.write_record(&header)?;
    for b in &r.history {
        let mut rec = vec![
            b.batch.to_string(),
            b.snapshot_version.to_string(),
            b.samples.to_string(),
            fmt_opt(b.max_psrf),
            fmt_opt(b.cov_error),
            fmt_opt(b.mean_error),
            fmt_f64(b.seconds),
        ];
        rec.extend(b.betas.iter().map(|&v| fmt_f64(v)));
        rec.extend(b.acceptance.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
