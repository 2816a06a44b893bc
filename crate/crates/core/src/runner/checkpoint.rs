//! Resumable run snapshots taken at batch boundaries.
//!
//! Layout (little-endian): magic `DIAMCKPT`, `u32` version, `u64` header
//! length, a JSON header (config, counters, stream positions, history), then
//! raw `f64` blocks: global mean and second moment, and per chain its state,
//! reference point, factor, pending noise batch and history moments.
//! Floats never pass through JSON so a resumed run is bit-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatchRecord, ChainWorker, RunConfig, Sampler};
use crate::binio::{read_exact, read_f64s, write_f64s};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseMatrix, LowerTriangular};
use crate::moments::{GlobalMoments, MomentAccumulator};
use crate::proposals::ChainState;
use crate::rng::{restore_stream, stream_position, StreamPosition};
use crate::targets::LogDensity;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DIAMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// One chain at a batch boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSnapshot {
    pub x: Vec<f64>,
    pub log_pi: f64,
    pub iteration: u64,
    pub n_accepted: u64,
    pub beta: f64,
    pub factor: LowerTriangular,
    pub factor_updates: u64,
    pub x_ref: Vec<f64>,
    pub noise: Vec<f64>,
    pub noise_pos: usize,
    pub noise_stream: StreamPosition,
    pub accept_stream: StreamPosition,
    pub history_mean: Vec<f64>,
    pub history_second: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub dim: usize,
    pub batches: u64,
    pub burned_in: bool,
    pub elapsed: f64,
    pub burn_in_seconds: f64,
    pub history: Vec<BatchRecord>,
    pub global_mean: Vec<f64>,
    pub global_second: DenseMatrix,
    pub chains: Vec<ChainSnapshot>,
}

#[derive(Serialize, Deserialize)]
struct ChainHeader {
    iteration: u64,
    n_accepted: u64,
    noise_pos: usize,
    factor_updates: u64,
    noise_stream: StreamPosition,
    accept_stream: StreamPosition,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: RunConfig,
    dim: usize,
    batches: u64,
    burned_in: bool,
    elapsed: f64,
    burn_in_seconds: f64,
    history: Vec<BatchRecord>,
    chains: Vec<ChainHeader>,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let header = Header {
            config: self.config.clone(),
            dim: self.dim,
            batches: self.batches,
            burned_in: self.burned_in,
            elapsed: self.elapsed,
            burn_in_seconds: self.burn_in_seconds,
            history: self.history.clone(),
            chains: self
                .chains
                .iter()
                .map(|c| ChainHeader {
                    iteration: c.iteration,
                    n_accepted: c.n_accepted,
                    noise_pos: c.noise_pos,
                    factor_updates: c.factor_updates,
                    noise_stream: c.noise_stream,
                    accept_stream: c.accept_stream,
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        write_f64s(w, &self.global_mean)?;
        write_f64s(w, self.global_second.as_slice())?;
        for c in &self.chains {
            write_f64s(w, &c.x)?;
            write_f64s(w, &[c.log_pi, c.beta])?;
            write_f64s(w, &c.x_ref)?;
            write_f64s(w, c.factor.as_slice())?;
            write_f64s(w, &c.noise)?;
            write_f64s(w, &c.history_mean)?;
            write_f64s(w, c.history_second.as_slice())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        if &read_exact::<8, _>(r)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(read_exact::<4, _>(r)?);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let len = u64::from_le_bytes(read_exact::<8, _>(r)?);
        if len > 1 << 32 {
            return Err(Error::Format(format!("implausible header length {len}")));
        }
        let mut json = vec![0u8; len as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        let d = header.dim;
        let n_lag = header.config.kernel.n_lag;
        let global_mean = read_f64s(r, d)?;
        let global_second = DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?;
        let mut chains = Vec::with_capacity(header.chains.len());
        for h in header.chains {
            let x = read_f64s(r, d)?;
            let scalars = read_f64s(r, 2)?;
            let x_ref = read_f64s(r, d)?;
            let factor = LowerTriangular::from_dense(&DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?)?;
            let noise = read_f64s(r, d * n_lag)?;
            let history_mean = read_f64s(r, d)?;
            let history_second = DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?;
            chains.push(ChainSnapshot {
                x,
                log_pi: scalars[0],
                iteration: h.iteration,
                n_accepted: h.n_accepted,
                beta: scalars[1],
                factor,
                factor_updates: h.factor_updates,
                x_ref,
                noise,
                noise_pos: h.noise_pos,
                noise_stream: h.noise_stream,
                accept_stream: h.accept_stream,
                history_mean,
                history_second,
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self {
            config: header.config,
            dim: d,
            batches: header.batches,
            burned_in: header.burned_in,
            elapsed: header.elapsed,
            burn_in_seconds: header.burn_in_seconds,
            history: header.history,
            global_mean,
            global_second,
            chains,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

impl<'t, T: LogDensity + ?Sized> Sampler<'t, T> {
    /// Snapshot at the current batch boundary. Traces are not included.
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.cfg.clone(),
            dim: self.global.dim(),
            batches: self.global.batches(),
            burned_in: self.burned_in,
            elapsed: self.elapsed,
            burn_in_seconds: self.burn_in_seconds,
            history: self.history.clone(),
            global_mean: self.global.mean().to_vec(),
            global_second: self.global.second().clone(),
            chains: self
                .workers
                .iter()
                .map(|w| ChainSnapshot {
                    x: w.state.x.clone(),
                    log_pi: w.state.log_pi,
                    iteration: w.state.n,
                    n_accepted: w.state.n_accepted,
                    beta: w.state.beta,
                    factor: w.state.factor.clone(),
                    factor_updates: w.state.factor_updates,
                    x_ref: w.state.x_ref.clone(),
                    noise: w.state.noise.clone(),
                    noise_pos: w.state.noise_pos,
                    noise_stream: stream_position(&w.noise_rng),
                    accept_stream: stream_position(&w.accept_rng),
                    history_mean: w.history.mean().to_vec(),
                    history_second: w.history.second().clone(),
                })
                .collect(),
        }
    }

    /// Resumes a run; `cfg_override` may change stopping rules and caps but
    /// must keep the sampling layout.
    pub fn from_checkpoint(ckpt: Checkpoint, target: &'t T, cfg_override: Option<RunConfig>) -> Result<Self> {
        let cfg = match cfg_override {
            Some(c) => {
                let same_layout = c.kernel == ckpt.config.kernel
                    && c.chains == ckpt.config.chains
                    && c.intervals == ckpt.config.intervals
                    && c.master_seed == ckpt.config.master_seed;
                if !same_layout {
                    return Err(Error::InvalidConfig(
                        "resumed runs must keep kernel, chains, intervals and seed".into(),
                    ));
                }
                c
            }
            None => ckpt.config.clone(),
        };
        cfg.validate(target)?;
        check_dim(target.dim(), ckpt.dim)?;
        if ckpt.chains.len() != cfg.chains {
            return Err(Error::Format("chain count does not match the configuration".into()));
        }
        let d = ckpt.dim;
        let spb = cfg.samples_per_batch();
        let per_chain = (cfg.intervals * cfg.kernel.n_lag) as u64;
        let mut workers = Vec::with_capacity(cfg.chains);
        for (index, c) in ckpt.chains.into_iter().enumerate() {
            let mut state = ChainState {
                x: c.x,
                log_pi: c.log_pi,
                quad: 0.0,
                n: c.iteration,
                n_accepted: c.n_accepted,
                beta: c.beta,
                factor: c.factor,
                factor_inv: None,
                x_ref: c.x_ref,
                noise: c.noise,
                noise_pos: c.noise_pos,
                moments: MomentAccumulator::new(d),
                factor_updates: c.factor_updates,
            };
            state.refresh_factor_cache(&cfg.kernel)?;
            workers.push(ChainWorker {
                index,
                state,
                noise_rng: restore_stream(cfg.master_seed, c.noise_stream),
                accept_rng: restore_stream(cfg.master_seed, c.accept_stream),
                history: GlobalMoments::from_parts(ckpt.batches, c.history_mean, c.history_second, per_chain)?,
                batch_accepted: 0,
                traces: vec![Vec::new(); cfg.functionals.len()],
            });
        }
        Ok(Self {
            global: GlobalMoments::from_parts(ckpt.batches, ckpt.global_mean, ckpt.global_second, spb)?,
            truth: target.analytic_moments(),
            cfg,
            target,
            workers,
            burned_in: ckpt.burned_in,
            history: ckpt.history,
            elapsed: ckpt.elapsed,
            burn_in_seconds: ckpt.burn_in_seconds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposals::{KernelConfig, ProposalKind};
    use crate::runner::{Execution, TargetSpec};
    use crate::targets::{build_target, TargetKind};

    fn cfg() -> RunConfig {
        let mut c = RunConfig::new(KernelConfig::new(ProposalKind::Diam, 6));
        c.target = Some(TargetSpec {
            kind: TargetKind::Pi1,
            dim: 6,
            seed: 3,
        });
        c.chains = 3;
        c.intervals = 5;
        c.max_batches = Some(6);
        c.master_seed = 99;
        c.execution = Execution::Sequential;
        c
    }

    #[test]
    fn resume_is_bit_identical() {
        let t = build_target(TargetKind::Pi1, 6, 3).unwrap();
        let straight = Sampler::new(cfg(), &t).unwrap().run().unwrap();

        let mut first = Sampler::new(cfg(), &t).unwrap();
        for _ in 0..2 {
            first.step_batch().unwrap();
        }
        let mut bytes = Vec::new();
        first.checkpoint().write_to(&mut bytes).unwrap();
        let ckpt = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(ckpt, first.checkpoint());
        let resumed = Sampler::from_checkpoint(ckpt, &t, None).unwrap().run().unwrap();

        assert_eq!(resumed.samples, straight.samples);
        assert_eq!(resumed.mean, straight.mean);
        assert_eq!(resumed.covariance, straight.covariance);
        assert_eq!(resumed.final_betas, straight.final_betas);
        let kept = resumed.traces.values[0][0].len();
        assert_eq!(kept, 4 * 5 * 3);
        let tail: Vec<Vec<f64>> = straight.traces.values[0]
            .iter()
            .map(|t| t[t.len() - kept..].to_vec())
            .collect();
        assert_eq!(resumed.traces.values[0], tail);
    }

    #[test]
    fn rejects_foreign_bytes() {
        let err = Checkpoint::read_from(&mut &b"DIAMTGT\0rest"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn layout_changes_rejected() {
        let t = build_target(TargetKind::Pi1, 6, 3).unwrap();
        let s = Sampler::new(cfg(), &t).unwrap();
        let mut other = cfg();
        other.chains = 2;
        assert!(Sampler::from_checkpoint(s.checkpoint(), &t, Some(other)).is_err());
    }
}
