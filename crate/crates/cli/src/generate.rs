use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use diam::targets::Target;
use diam::TargetKind;

use crate::config::{resolve_target, TargetFlags, TargetSection};
use crate::error::CliResult;
use crate::output::write_json;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub target: TargetFlags,
    /// Binary target file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the JSON summary here (it always goes to stdout).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct TargetSummary {
    pub target: TargetKind,
    pub dim: usize,
    pub seed: u64,
    pub twisted: bool,
    /// Of the Gaussian part.
    pub condition_number: f64,
    pub eigen_min: f64,
    pub eigen_max: f64,
}

pub fn summary(t: &Target) -> TargetSummary {
    let eig = &t.gaussian().eigen_decomposition().values;
    TargetSummary {
        target: t.kind(),
        dim: eig.len(),
        seed: t.seed(),
        twisted: t.kind().is_twisted(),
        condition_number: t.condition_number(),
        eigen_min: eig[0],
        eigen_max: eig[eig.len() - 1],
    }
}

pub fn run(args: GenerateArgs) -> CliResult<()> {
    let target = resolve_target(&args.target, &TargetSection::default())?;
    let mut w = BufWriter::new(File::create(&args.out)?);
    target.write_to(&mut w)?;
    w.flush()?;
    let s = summary(&target);
    if let Some(p) = &args.summary {
        write_json(p, &s)?;
    }
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}
