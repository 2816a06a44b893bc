//! Streaming raw moments and the multi-chain merge algebra.
//!
//! Moments are kept as `(count, mean, second)` with `second = E[x xᵀ]`
//! (uncentered); the covariance is formed on demand as `second - mean meanᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{scaled_rank1_in_place, DenseMatrix};

/// Running first and second raw moments of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    count: u64,
    mean: Vec<f64>,
    second: DenseMatrix,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            second: DenseMatrix::zeros(dim, dim),
        }
    }

    pub fn from_parts(count: u64, mean: Vec<f64>, second: DenseMatrix) -> Result<Self> {
        check_dim(mean.len(), second.rows())?;
        check_dim(mean.len(), second.cols())?;
        Ok(Self {
            count,
            mean,
            second,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn second(&self) -> &DenseMatrix {
        &self.second
    }

    pub fn reset(&mut self) {
        self.count = 0;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self.second.as_mut_slice().iter_mut().for_each(|s| *s = 0.0);
    }

    /// Adds one sample: `old · n/(n+1) + new/(n+1)` for both moments.
    pub fn accumulate(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        let n = self.count as f64;
        let keep = n / (n + 1.0);
        let add = 1.0 / (n + 1.0);
        for (m, xi) in self.mean.iter_mut().zip(x) {
            *m = keep * *m + add * xi;
        }
        scaled_rank1_in_place(&mut self.second, keep, x, add)?;
        self.count += 1;
        Ok(())
    }

    /// Centered covariance `second - mean meanᵀ`, symmetrized.
    pub fn covariance(&self) -> DenseMatrix {
        covariance(&self.second, &self.mean)
    }
}

/// `S - m mᵀ`, averaged with its transpose.
pub fn covariance(second: &DenseMatrix, mean: &[f64]) -> DenseMatrix {
    let mut c = second.clone();
    scaled_rank1_in_place(&mut c, 1.0, mean, -1.0).expect("second moment matches mean length");
    c.symmetrize();
    c
}

/// Moments merged from all chains at the end of each completed batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalMoments {
    /// Number of merged batches.
    k: u64,
    second: DenseMatrix,
    mean: Vec<f64>,
    /// Samples contributed per batch across all chains, `M · P · n_lag`.
    samples_per_batch: u64,
}

impl GlobalMoments {
    pub fn new(dim: usize, samples_per_batch: u64) -> Self {
        Self {
            k: 0,
            second: DenseMatrix::zeros(dim, dim),
            mean: vec![0.0; dim],
            samples_per_batch,
        }
    }

    pub fn from_parts(
        k: u64,
        mean: Vec<f64>,
        second: DenseMatrix,
        samples_per_batch: u64,
    ) -> Result<Self> {
        check_dim(mean.len(), second.rows())?;
        Ok(Self {
            k,
            second,
            mean,
            samples_per_batch,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn batches(&self) -> u64 {
        self.k
    }

    pub fn samples_per_batch(&self) -> u64 {
        self.samples_per_batch
    }

    pub fn count(&self) -> u64 {
        self.k * self.samples_per_batch
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn second(&self) -> &DenseMatrix {
        &self.second
    }

    pub fn covariance(&self) -> DenseMatrix {
        covariance(&self.second, &self.mean)
    }

    /// Merges one batch of per-chain moments, in slice order:
    /// `S_k = (k-1)/k · S_{k-1} + 1/(kP) · Σ_p S^p`, likewise for the mean.
    pub fn merge_batch(&self, locals: &[MomentAccumulator]) -> Result<Self> {
        let p = locals.len();
        if p == 0 {
            return Err(Error::InvalidConfig("merge_batch needs at least one chain".into()));
        }
        if self.samples_per_batch % p as u64 != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} samples per batch cannot split over {p} chains",
                self.samples_per_batch
            )));
        }
        let per_chain = self.samples_per_batch / p as u64;
        for (chain, acc) in locals.iter().enumerate() {
            check_dim(self.dim(), acc.dim())?;
            if acc.count() != per_chain {
                return Err(Error::UnequalBatchSizes {
                    chain,
                    expected: per_chain,
                    found: acc.count(),
                });
            }
        }
        let k = self.k + 1;
        let keep = (k - 1) as f64 / k as f64;
        let add = 1.0 / (k as f64 * p as f64);

        let mut mean_sum = vec![0.0; self.dim()];
        let mut second_sum = DenseMatrix::zeros(self.dim(), self.dim());
        for acc in locals {
            for (s, m) in mean_sum.iter_mut().zip(acc.mean()) {
                *s += m;
            }
            for (s, v) in second_sum
                .as_mut_slice()
                .iter_mut()
                .zip(acc.second().as_slice())
            {
                *s += v;
            }
        }
        let mean = self
            .mean
            .iter()
            .zip(&mean_sum)
            .map(|(g, s)| keep * g + add * s)
            .collect();
        let second_data = self
            .second
            .as_slice()
            .iter()
            .zip(second_sum.as_slice())
            .map(|(g, s)| keep * g + add * s)
            .collect();
        Ok(Self {
            k,
            second: DenseMatrix::from_vec(self.dim(), self.dim(), second_data)?,
            mean,
            samples_per_batch: self.samples_per_batch,
        })
    }
}

/// Result of blending a chain's in-batch moments with the last global snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct BlendedMoments {
    pub count: u64,
    pub second: DenseMatrix,
    pub mean: Vec<f64>,
    pub covariance: DenseMatrix,
}

/// Convex combination of global and local moments weighted by their sample
/// counts, `kMP n_lag / (kMP + m) n_lag` and `m n_lag / (kMP + m) n_lag`.
pub fn blend_local_global(local: &MomentAccumulator, global: &GlobalMoments) -> Result<BlendedMoments> {
    check_dim(global.dim(), local.dim())?;
    let g = global.count();
    let l = local.count();
    let total = g + l;
    if total == 0 {
        let d = local.dim();
        return Ok(BlendedMoments {
            count: 0,
            second: DenseMatrix::zeros(d, d),
            mean: vec![0.0; d],
            covariance: DenseMatrix::zeros(d, d),
        });
    }
    if g == 0 {
        return Ok(BlendedMoments {
            count: l,
            second: local.second().clone(),
            mean: local.mean().to_vec(),
            covariance: local.covariance(),
        });
    }
    let wg = g as f64 / total as f64;
    let wl = l as f64 / total as f64;
    let mean: Vec<f64> = global
        .mean()
        .iter()
        .zip(local.mean())
        .map(|(a, b)| wg * a + wl * b)
        .collect();
    let data = global
        .second()
        .as_slice()
        .iter()
        .zip(local.second().as_slice())
        .map(|(a, b)| wg * a + wl * b)
        .collect();
    let second = DenseMatrix::from_vec(local.dim(), local.dim(), data)?;
    let covariance = covariance(&second, &mean);
    Ok(BlendedMoments {
        count: total,
        second,
        mean,
        covariance,
    })
}
