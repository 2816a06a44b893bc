//! Autocorrelation, integrated autocorrelation time, effective sample size,
//! potential scale reduction, and moment errors against known truths.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::moments::covariance;

/// Lag at which the IACT sum is cut once the ACF drops below it.
pub const IACT_CUTOFF: f64 = 0.05;

fn centered_and_variance(trace: &[f64]) -> Result<(Vec<f64>, f64)> {
    if trace.len() < 2 {
        return Err(Error::DegenerateTrace(format!(
            "need at least 2 values, got {}",
            trace.len()
        )));
    }
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateTrace("trace contains non-finite values".into()));
    }
    let n = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / n;
    let centered: Vec<f64> = trace.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / n;
    let scale = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var <= (f64::EPSILON * scale).powi(2) * 16.0 || var == 0.0 {
        return Err(Error::DegenerateTrace("trace has zero variance".into()));
    }
    Ok((centered, var))
}

/// Sample autocorrelations `ρ_0..=ρ_max_lag` with divide-by-N autocovariances.
pub fn acf(trace: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let (c, var) = centered_and_variance(trace)?;
    let n = c.len();
    if max_lag >= n {
        return Err(Error::InvalidConfig(format!(
            "max_lag {max_lag} must be below the trace length {n}"
        )));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let cov: f64 = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
        out.push((cov / n as f64 / var).clamp(-1.0, 1.0));
    }
    Ok(out)
}

/// Default lag window: `min(N/2 - 1, 1000)`.
pub fn default_max_lag(n: usize) -> usize {
    (n / 2).saturating_sub(1).clamp(1, 1000)
}

/// `1 + 2 Σ ρ_n`, summing until the first `ρ_n < 0.05` or the lag window ends.
pub fn iact(trace: &[f64]) -> Result<f64> {
    let max_lag = default_max_lag(trace.len()).min(trace.len().saturating_sub(1));
    iact_with_max_lag(trace, max_lag)
}

pub fn iact_with_max_lag(trace: &[f64], max_lag: usize) -> Result<f64> {
    let rho = acf(trace, max_lag)?;
    Ok(iact_from_acf(&rho))
}

pub fn iact_from_acf(rho: &[f64]) -> f64 {
    let mut sum = 0.0;
    for &r in rho.iter().skip(1) {
        if r < IACT_CUTOFF {
            break;
        }
        sum += r;
    }
    1.0 + 2.0 * sum
}

pub fn ess(trace: &[f64]) -> Result<f64> {
    Ok(trace.len() as f64 / iact(trace)?)
}

/// Per-chain raw moments over that chain's post-burn-in history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMoments {
    pub mean: Vec<f64>,
    pub second: DenseMatrix,
}

/// Inputs of the potential scale reduction factor.
#[derive(Clone, Debug, PartialEq)]
pub struct PsrfInput<'a> {
    pub chains: &'a [ChainMoments],
    pub global_mean: &'a [f64],
    /// Samples per chain, `M K n_lag`.
    pub samples_per_chain: u64,
}

/// Between- and within-chain variances and `√R` per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrfReport {
    pub between: Vec<f64>,
    pub within: Vec<f64>,
    pub sqrt_r: Vec<f64>,
}

impl PsrfReport {
    pub fn max(&self) -> f64 {
        self.sqrt_r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `√R_i` per coordinate, with
/// `B_i = n/(P-1) Σ_p (m^p - m)_i²`, `W_i = n/((n-1)P) Σ_p C^p_ii` and
/// `R_i = (n-1)/n + (P+1)/(P n) · B_i / W_i`.
pub fn psrf(input: &PsrfInput<'_>) -> Result<PsrfReport> {
    let p = input.chains.len();
    if p < 2 {
        return Err(Error::InvalidConfig(format!("psrf needs at least 2 chains, got {p}")));
    }
    let n = input.samples_per_chain;
    if n < 2 {
        return Err(Error::InvalidConfig("psrf needs at least 2 samples per chain".into()));
    }
    let d = input.global_mean.len();
    let nf = n as f64;
    let pf = p as f64;
    let mut between = vec![0.0; d];
    let mut within = vec![0.0; d];
    for chain in input.chains {
        check_dim(d, chain.mean.len())?;
        check_dim(d, chain.second.rows())?;
        for i in 0..d {
            let dm = chain.mean[i] - input.global_mean[i];
            between[i] += dm * dm;
            within[i] += chain.second.get(i, i) - chain.mean[i] * chain.mean[i];
        }
    }
    let mut sqrt_r = vec![0.0; d];
    for i in 0..d {
        between[i] *= nf / (pf - 1.0);
        within[i] *= nf / ((nf - 1.0) * pf);
        if !(within[i] > 0.0) {
            return Err(Error::ZeroWithinVariance { direction: i });
        }
        let r = (nf - 1.0) / nf + (pf + 1.0) / (pf * nf) * between[i] / within[i];
        sqrt_r[i] = r.sqrt();
    }
    Ok(PsrfReport {
        between,
        within,
        sqrt_r,
    })
}

/// Convenience: PSRF with the global mean taken as the average of chain means.
pub fn psrf_from_chains(chains: &[ChainMoments], samples_per_chain: u64) -> Result<PsrfReport> {
    let d = chains.first().map_or(0, |c| c.mean.len());
    let mut global = vec![0.0; d];
    for c in chains {
        check_dim(d, c.mean.len())?;
        for (g, m) in global.iter_mut().zip(&c.mean) {
            *g += m / chains.len() as f64;
        }
    }
    psrf(&PsrfInput {
        chains,
        global_mean: &global,
        samples_per_chain,
    })
}

/// PSRF from raw per-chain sample traces of a scalar functional.
pub fn psrf_from_traces(traces: &[Vec<f64>]) -> Result<f64> {
    let n = traces.first().map_or(0, Vec::len);
    let mut chains = Vec::with_capacity(traces.len());
    for t in traces {
        if t.len() != n {
            return Err(Error::UnequalBatchSizes {
                chain: chains.len(),
                expected: n as u64,
                found: t.len() as u64,
            });
        }
        let mean = t.iter().sum::<f64>() / n as f64;
        let second = t.iter().map(|v| v * v).sum::<f64>() / n as f64;
        chains.push(ChainMoments {
            mean: vec![mean],
            second: DenseMatrix::from_vec(1, 1, vec![second])?,
        });
    }
    Ok(psrf_from_chains(&chains, n as u64)?.sqrt_r[0])
}

/// `‖C_emp - C_true‖_F / ‖C_true‖_F`.
pub fn cov_error(c_emp: &DenseMatrix, c_true: &DenseMatrix) -> Result<f64> {
    Ok(c_emp.sub(c_true)?.frobenius_norm() / c_true.frobenius_norm())
}

/// `‖m_emp - m_true‖₂`.
pub fn mean_error(m_emp: &[f64], m_true: &[f64]) -> Result<f64> {
    check_dim(m_true.len(), m_emp.len())?;
    let diff: Vec<f64> = m_emp.iter().zip(m_true).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff))
}

/// Covariance error from raw moments.
pub fn cov_error_from_raw(second: &DenseMatrix, mean: &[f64], c_true: &DenseMatrix) -> Result<f64> {
    cov_error(&covariance(second, mean), c_true)
}

/// Per-trace ACF summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub name: String,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub iact: f64,
    pub ess: f64,
}

pub fn summarize(name: &str, trace: &[f64]) -> Result<TraceSummary> {
    let (c, var) = centered_and_variance(trace)?;
    let n = c.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    let tau = iact(trace)?;
    Ok(TraceSummary {
        name: name.to_string(),
        samples: n,
        mean,
        variance: var,
        iact: tau,
        ess: n as f64 / tau,
    })
}

/// Monte Carlo standard error of a trace mean, inflated by its IACT.
pub fn mc_standard_error(trace: &[f64]) -> Result<f64> {
    let s = summarize("", trace)?;
    Ok((s.variance * s.iact / s.samples as f64).sqrt())
}
