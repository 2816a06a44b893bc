use proptest::prelude::*;

use diam::diagnostics::{cov_error, mean_error};
use diam::linalg::{cholesky, DenseMatrix};
use diam::runner::{run_concurrent_on, run_single_chain_on, Execution, Functional, RunConfig, Sampler};
use diam::targets::{build_target, GaussianTarget, LogDensity, TargetKind};
use diam::{KernelConfig, ProposalKind, RefMode, StopReason};

fn config(kind: ProposalKind, d: usize, chains: usize, intervals: usize, batches: u64) -> RunConfig {
    let mut cfg = RunConfig::new(KernelConfig::new(kind, d));
    cfg.chains = chains;
    cfg.intervals = intervals;
    cfg.max_batches = Some(batches);
    cfg
}

#[test]
fn identical_seeds_identical_results() {
    let t = build_target(TargetKind::Pi3, 20, 2).unwrap();
    let cfg = config(ProposalKind::Diam, 20, 3, 4, 12);
    let a = run_concurrent_on(&cfg, &t).unwrap();
    let b = run_concurrent_on(&cfg, &t).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.covariance, b.covariance);
    let mut other = cfg.clone();
    other.master_seed = 1;
    assert_ne!(run_concurrent_on(&other, &t).unwrap().traces, a.traces);
}

#[test]
fn one_concurrent_chain_is_the_single_chain_run() {
    let t = build_target(TargetKind::Pi1, 12, 0).unwrap();
    for kind in ProposalKind::ALL {
        let cfg = config(kind, 12, 1, 5, 10);
        let a = run_concurrent_on(&cfg, &t).unwrap();
        let b = run_single_chain_on(&cfg, &t).unwrap();
        assert_eq!(a.traces, b.traces, "{kind}");
        assert_eq!(a.mean, b.mean, "{kind}");
    }
}

#[test]
fn cov_tolerance_stop_is_self_consistent() {
    let t = build_target(TargetKind::Pi1, 10, 1).unwrap();
    let mut cfg = config(ProposalKind::Diam, 10, 1, 10, 100_000);
    cfg.stop.cov_tol = Some(0.05);
    let r = run_concurrent_on(&cfg, &t).unwrap();
    assert_eq!(r.stop_reason, StopReason::CovTol);
    assert!(r.converged);
    let truth = t.analytic_moments().unwrap();
    let err = cov_error(&r.covariance, &truth.covariance).unwrap();
    assert!(err < 0.05, "cov error {err}");
    assert!((err - r.history.last().unwrap().cov_error.unwrap()).abs() < 1e-12);
    let merr = mean_error(&r.mean, &truth.mean).unwrap();
    assert!((merr - r.history.last().unwrap().mean_error.unwrap()).abs() < 1e-12);
}

#[test]
fn psrf_shrinks_with_batches() {
    let t = build_target(TargetKind::Pi2, 8, 1).unwrap();
    let mut cfg = config(ProposalKind::Diam, 8, 4, 5, 8);
    cfg.dispersion = 10.0;
    let r = run_concurrent_on(&cfg, &t).unwrap();
    let at = |k: usize| r.history[k - 1].max_psrf.unwrap();
    assert!(at(2) > at(4) && at(4) > at(8), "{} {} {}", at(2), at(4), at(8));
    let n = (cfg.intervals * cfg.kernel.n_lag) as f64 * 8.0;
    for rec in &r.history {
        assert!(rec.max_psrf.unwrap() >= ((n - 1.0) / n).sqrt() - 1e-12 || rec.batch < 8);
    }
}

#[test]
fn dispersed_starts_give_large_initial_psrf() {
    let t = build_target(TargetKind::Pi1, 10, 1).unwrap();
    let mut cfg = config(ProposalKind::Diam, 10, 4, 2, 1);
    cfg.dispersion = 10.0;
    cfg.stop.psrf_tol = Some(1.1);
    let r = run_concurrent_on(&cfg, &t).unwrap();
    assert!(r.history[0].max_psrf.unwrap() > 1.1);
}

#[test]
fn diam_samples_a_gaussian_with_a_wrong_fixed_factor() {
    // frozen DIAM with mismatched factor, inflation and pivot still targets N(0, C)
    let c = DenseMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.3], [0.0, 0.3, 0.5]]).unwrap();
    let target = GaussianTarget::from_covariance(c.clone()).unwrap();
    let mut k = KernelConfig::new(ProposalKind::Diam, 3);
    k.adapt_covariance = false;
    k.adapt_beta = false;
    k.beta_init = 0.6;
    k.reference_factor = Some(cholesky(&DenseMatrix::from_diag(&[0.5, 2.0, 1.0])).unwrap());
    k.inflation = 1.3;
    k.ref_mode = RefMode::Fixed(vec![0.4, -0.3, 0.2]);
    let mut cfg = RunConfig::new(k);
    cfg.chains = 2;
    cfg.intervals = 200;
    cfg.max_batches = Some(400);
    cfg.record_traces = false;
    let r = run_concurrent_on(&cfg, &target).unwrap();
    let err = r.covariance.sub(&c).unwrap().frobenius_norm() / c.frobenius_norm();
    assert!(err < 0.05, "relative covariance error {err}");
    assert!(r.mean.iter().all(|m| m.abs() < 0.08), "{:?}", r.mean);
}

#[test]
fn every_kernel_runs_on_every_target() {
    for kind in [
        TargetKind::Pi1,
        TargetKind::Pi2,
        TargetKind::Pi3,
        TargetKind::Pi4 { sigma2: None },
        TargetKind::Pi5 { b: 0.3 },
        TargetKind::Pi6 { b: 2.0 },
    ] {
        let t = build_target(kind, 20, 5).unwrap();
        for k in ProposalKind::ALL {
            let cfg = config(k, 20, 2, 3, 6);
            let r = run_concurrent_on(&cfg, &t).unwrap();
            assert_eq!(r.samples, 2 * 3 * 10 * 6);
            assert!(r.mean.iter().all(|v| v.is_finite()), "{kind} {k}");
            assert!(r.final_betas.iter().all(|b| *b > 0.0 && b.is_finite()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Accounting, barrier versions, and agreement of the merged moments with the recorded coordinate traces.
    #[test]
    fn merged_moments_match_traces(
        chains in 1usize..4,
        intervals in 1usize..4,
        n_lag in 1usize..5,
        batches in 1u64..5,
        kind in prop::sample::select(ProposalKind::ALL.to_vec()),
        seed in 0u64..1000,
        parallel in any::<bool>(),
    ) {
        let d = 4;
        let t = build_target(TargetKind::Pi1, d, seed).unwrap();
        let mut k = KernelConfig::new(kind, d);
        k.n_lag = n_lag;
        k.burn_in = 2 * n_lag;
        let mut cfg = RunConfig::new(k);
        cfg.chains = chains;
        cfg.intervals = intervals;
        cfg.max_batches = Some(batches);
        cfg.master_seed = seed;
        cfg.execution = if parallel { Execution::Parallel } else { Execution::Sequential };
        cfg.functionals = (0..d).map(Functional::Coord).collect();
        let mut s = Sampler::new(cfg, &t).unwrap();
        let r = s.run().unwrap();

        prop_assert_eq!(r.samples, chains as u64 * intervals as u64 * n_lag as u64 * batches);
        for rec in &r.history {
            prop_assert_eq!(rec.snapshot_version, rec.batch - 1);
        }
        for j in 0..d {
            let all: Vec<f64> = r.traces.values[j].iter().flatten().copied().collect();
            prop_assert_eq!(all.len() as u64, r.samples);
            let mean = all.iter().sum::<f64>() / all.len() as f64;
            prop_assert!((mean - r.mean[j]).abs() <= 1e-10 * (1.0 + mean.abs()));
            let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
            prop_assert!((var - r.covariance.get(j, j)).abs() <= 1e-9 * (1.0 + var));
        }
    }
}
