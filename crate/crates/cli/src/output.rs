//! CSV and JSON writers shared by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form; `NaN` and `inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// `iter,chain_0,…` with one row per iterate; chains of unequal length leave blanks.
pub fn write_trace(path: &Path, first_iter: u64, chains: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..chains.len()).map(|c| format!("chain_{c}")));
    w.write_record(&header)?;
    let rows = chains.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..rows {
        let mut rec = vec![(first_iter + i as u64).to_string()];
        rec.extend(chains.iter().map(|c| c.get(i).map(|&v| fmt_f64(v)).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace file back as `(first_iter, chains)`.
pub fn read_trace(path: &Path) -> CliResult<(u64, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("iter") || headers.len() < 2 {
        return Err(CliError::Runtime(format!(
            "{}: expected header iter,chain_0,…",
            path.display()
        )));
    }
    let p = headers.len() - 1;
    let mut chains = vec![Vec::new(); p];
    let mut first = None;
    for rec in r.records() {
        let rec = rec?;
        let iter: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| CliError::Runtime(format!("{}: bad iteration '{}'", path.display(), &rec[0])))?;
        first.get_or_insert(iter);
        for (c, chain) in chains.iter_mut().enumerate() {
            let field = rec.get(c + 1).unwrap_or("").trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Runtime(format!("{}: bad value '{field}'", path.display())))?;
            chain.push(v);
        }
    }
    Ok((first.unwrap_or(0), chains))
}
