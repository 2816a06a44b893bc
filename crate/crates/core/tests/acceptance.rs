//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities, then asserts. Tests take a shared lock so that
//! timing-based criteria are not disturbed by each other.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use diam::benchmark::{fit_quadratic, time_fixed_samples};
use diam::diagnostics::{iact, mc_standard_error};
use diam::linalg::{cholesky, tri_matvec, DenseMatrix, LowerTriangular};
use diam::moments::{GlobalMoments, MomentAccumulator};
use diam::proposals::{log_accept_ratio, mh_step, propose, ChainState};
use diam::runner::{run_concurrent_on, Execution, Functional, RunConfig, Sampler};
use diam::targets::{build_target, GaussianTarget, LogDensity, TargetKind};
use diam::{KernelConfig, ProposalKind, RefMode};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "{} criterion {criterion:>2}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // bypasses the harness capture so every line reaches the log
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn exact_draw(l: &LowerTriangular, rng: &mut impl Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..l.dim()).map(|_| rng.sample(StandardNormal)).collect();
    tri_matvec(l, &z).unwrap()
}

/// Kernel with every adaptation switched off, so one `ChainState` can serve `steps` transitions.
fn frozen(kind: ProposalKind, d: usize, beta: f64, steps: usize) -> KernelConfig {
    let mut k = KernelConfig::new(kind, d);
    k.beta_init = beta;
    k.n_lag = steps;
    k.burn_in = 0;
    k.adapt_beta = false;
    k.adapt_covariance = false;
    k
}

#[test]
fn criterion_01_matched_gaussian_exactness() {
    let _g = lock();
    let start = Instant::now();
    let d = 20;
    let steps = 10_000;
    let target = build_target(TargetKind::Pi1, d, 11).unwrap();
    let gauss = target.gaussian();
    let l = cholesky(gauss.covariance()).unwrap();
    let mut worst = 0.0f64;
    let mut accepted = 0usize;
    for (i, beta) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let mut cfg = frozen(ProposalKind::Diam, d, beta, steps);
        cfg.reference_factor = Some(l.clone());
        cfg.ref_mode = RefMode::Zero;
        cfg.inflation = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(100 + i as u64);
        let x0 = exact_draw(&l, &mut rng);
        let mut st = ChainState::new(&cfg, gauss, x0, &mut rng).unwrap();
        for _ in 0..steps {
            let cand = propose(&cfg, &st, st.peek_noise().unwrap()).unwrap();
            worst = worst.max(log_accept_ratio(&cfg, gauss, &st, &cand).abs());
            accepted += mh_step(&cfg, gauss, &mut st, &mut rng).unwrap() as usize;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let rate = accepted as f64 / (3 * steps) as f64;
    report(
        1,
        worst < 1e-8 && secs < 5.0,
        &format!("max |log α| = {worst:.2e} (< 1e-8) over 3×10⁴ steps, acceptance {rate:.4}, {secs:.2}s (< 5s)"),
    );
}

#[test]
fn criterion_02_pcn_preserves_reference() {
    let _g = lock();
    let start = Instant::now();
    let d = 5;
    let n = 100_000;
    let c = build_target(TargetKind::Pi1, d, 4).unwrap().gaussian().covariance().clone();
    let a = cholesky(&c).unwrap();
    let anything = GaussianTarget::from_covariance(DenseMatrix::identity(d)).unwrap();
    let mut errs = Vec::new();
    for (i, beta) in [0.3, 0.7, 1.0].into_iter().enumerate() {
        let mut cfg = frozen(ProposalKind::Pcn, d, beta, n);
        cfg.reference_factor = Some(a.clone());
        let mut rng = ChaCha12Rng::seed_from_u64(200 + i as u64);
        let mut st = ChainState::new(&cfg, &anything, vec![0.0; d], &mut rng).unwrap();
        let mut acc = MomentAccumulator::new(d);
        for _ in 0..n {
            let x = exact_draw(&a, &mut rng);
            st.set_position(&cfg, &anything, &x).unwrap();
            let y = propose(&cfg, &st, st.peek_noise().unwrap()).unwrap();
            acc.accumulate(&y).unwrap();
            // advances the noise cursor; the accept/reject outcome is irrelevant here
            mh_step(&cfg, &anything, &mut st, &mut rng).unwrap();
        }
        let emp = acc.covariance();
        errs.push(emp.sub(&c).unwrap().frobenius_norm() / c.frobenius_norm());
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    report(
        2,
        worst < 0.05 && secs < 10.0,
        &format!("relative Frobenius error {errs:.4?} at β = 0.3/0.7/1.0 (< 0.05), {secs:.2}s (< 10s)"),
    );
}

#[test]
fn criterion_03_merge_equals_concatenation() {
    let _g = lock();
    let start = Instant::now();
    let d = 3;
    let mut rng = ChaCha12Rng::seed_from_u64(300);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in 1..=4usize {
        for m in [1usize, 2] {
            for k in 1..=3usize {
                for n_lag in [2usize, 5] {
                    let per_chain = m * n_lag;
                    let mut global = GlobalMoments::new(d, (p * per_chain) as u64);
                    let mut all: Vec<Vec<f64>> = Vec::new();
                    for _ in 0..k {
                        let mut locals = Vec::new();
                        for chain in 0..p {
                            let mut acc = MomentAccumulator::new(d);
                            for _ in 0..per_chain {
                                let x: Vec<f64> = (0..d)
                                    .map(|j| 3.0 + chain as f64 + j as f64 * rng.sample::<f64, _>(StandardNormal))
                                    .collect();
                                acc.accumulate(&x).unwrap();
                                all.push(x);
                            }
                            locals.push(acc);
                        }
                        global = global.merge_batch(&locals).unwrap();
                    }
                    // two-pass direct sums over the concatenated history
                    let nn = all.len() as f64;
                    let mean: Vec<f64> = (0..d).map(|j| all.iter().map(|x| x[j]).sum::<f64>() / nn).collect();
                    let mut second = DenseMatrix::zeros(d, d);
                    for i in 0..d {
                        for j in 0..d {
                            second.set(i, j, all.iter().map(|x| x[i] * x[j]).sum::<f64>() / nn);
                        }
                    }
                    let rel_m = global
                        .mean()
                        .iter()
                        .zip(&mean)
                        .map(|(a, b)| ((a - b) / b).abs())
                        .fold(0.0, f64::max);
                    let rel_s = global.second().sub(&second).unwrap().frobenius_norm() / second.frobenius_norm();
                    assert_eq!(global.count(), all.len() as u64);
                    worst = worst.max(rel_m).max(rel_s);
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        worst < 1e-12 && secs < 5.0,
        &format!("{cases} (P, M, K, n_lag) cases, worst relative error {worst:.2e} (< 1e-12), {secs:.2}s (< 5s)"),
    );
}

fn log_density_iact(kind: ProposalKind, d: usize, samples: u64, seed: u64) -> f64 {
    let t = build_target(TargetKind::Pi2, d, 1).unwrap();
    let k = KernelConfig::new(kind, d);
    let mut cfg = RunConfig::new(k.clone());
    cfg.intervals = 20;
    cfg.max_batches = Some(samples.div_ceil(20 * k.n_lag as u64));
    cfg.master_seed = seed;
    cfg.functionals = vec![Functional::LogDensity];
    let r = run_concurrent_on(&cfg, &t).unwrap();
    let trace = &r.traces.get("log_density").unwrap()[0];
    iact(trace).unwrap()
}

#[test]
fn criterion_04_dimension_independence_trend() {
    let _g = lock();
    let start = Instant::now();
    let dims = [10, 20, 40];
    let rw: Vec<f64> = dims.iter().map(|&d| log_density_iact(ProposalKind::Rw, d, 200_000, 3)).collect();
    let dm: Vec<f64> = dims.iter().map(|&d| log_density_iact(ProposalKind::Diam, d, 200_000, 3)).collect();
    let secs = start.elapsed().as_secs_f64();
    let rw_growth = rw[2] / rw[0];
    let dm_growth = dm[2] / dm[0];
    let ordered = rw.iter().zip(&dm).all(|(r, m)| m < r);
    report(
        4,
        rw_growth >= 1.5 && dm_growth <= 2.0 && ordered && secs < 300.0,
        &format!(
            "IACT RW {rw:.2?} (d=40/d=10 = {rw_growth:.2} ≥ 1.5), DIAM {dm:.2?} (ratio {dm_growth:.2} ≤ 2), \
             DIAM < RW everywhere: {ordered}, {secs:.1}s (< 300s)"
        ),
    );
}

#[test]
fn criterion_05_twisted_target_moments() {
    let _g = lock();
    let start = Instant::now();
    let d = 20;
    let b = 0.3;
    let t = build_target(TargetKind::Pi5 { b }, d, 1).unwrap();
    let mut k = KernelConfig::new(ProposalKind::Diam, d);
    k.inflation = 1.2;
    let mut cfg = RunConfig::new(k);
    cfg.chains = 4;
    cfg.intervals = 20;
    cfg.max_batches = Some(100_000);
    cfg.stop.mean_tol = Some(0.01);
    cfg.master_seed = 5;
    // 1-based even indices up to d/10 are twisted: 0-based index 1 at d = 20
    let twisted: Vec<usize> = (0..d / 10).step_by(2).map(|i| i + 1).collect();
    cfg.functionals = twisted.iter().map(|&i| Functional::Eigen(i)).collect();
    let r = run_concurrent_on(&cfg, &t).unwrap();
    let am = t.analytic_moments().unwrap();
    let sigma2 = &t.gaussian().eigen_decomposition().values;
    let coeffs = &t.twist().unwrap().coeffs;

    let mut ok = r.stop_reason == diam::StopReason::MeanTol;
    let mut parts = Vec::new();
    for (f, &i) in twisted.iter().enumerate() {
        // closed forms: mean −b_{i−1}σ²_{i−1}, variance σ²_i + 2 b²_{i−1} σ⁴_{i−1}
        let want_mean = -coeffs[i - 1] * sigma2[i - 1];
        let want_var = sigma2[i] + 2.0 * coeffs[i - 1].powi(2) * sigma2[i - 1].powi(2);
        assert!((want_mean - am.eigen_mean[i]).abs() < 1e-12 * want_mean.abs());
        assert!((want_var - am.eigen_variance[i]).abs() < 1e-12 * want_var);

        let chains = &r.traces.values[f];
        let n: f64 = chains.iter().map(|c| c.len() as f64).sum();
        let mean = chains.iter().flatten().sum::<f64>() / n;
        let var = chains.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // per-chain IACT-corrected standard errors, combined across chains
        let p = chains.len() as f64;
        let se_mean = (chains.iter().map(|c| mc_standard_error(c).unwrap().powi(2)).sum::<f64>()).sqrt() / p;
        let se_var = (chains
            .iter()
            .map(|c| {
                let sq: Vec<f64> = c.iter().map(|v| (v - mean).powi(2)).collect();
                mc_standard_error(&sq).unwrap().powi(2)
            })
            .sum::<f64>())
        .sqrt()
            / p;
        let z_mean = (mean - am.eigen_mean[i]) / se_mean;
        let z_var = (var - am.eigen_variance[i]) / se_var;
        ok &= z_mean.abs() < 3.0 && z_var.abs() < 3.0;
        parts.push(format!(
            "index {i}: mean {mean:.4} vs {:.4} (z = {z_mean:.2}), variance {var:.4} vs {:.4} (z = {z_var:.2})",
            am.eigen_mean[i], am.eigen_variance[i]
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        5,
        ok && secs < 180.0,
        &format!("N = {}, stop {:?}; {}; {secs:.1}s (< 180s)", r.samples, r.stop_reason, parts.join("; ")),
    );
}

#[test]
fn criterion_06_psrf_convergence() {
    let _g = lock();
    let start = Instant::now();
    let t = build_target(TargetKind::Pi1, 10, 1).unwrap();
    let mut cfg = RunConfig::new(KernelConfig::new(ProposalKind::Diam, 10));
    cfg.chains = 4;
    cfg.dispersion = 10.0;
    cfg.intervals = 2;
    cfg.max_batches = Some(5000);
    cfg.stop.psrf_tol = Some(1.1);
    cfg.master_seed = 6;
    let r = run_concurrent_on(&cfg, &t).unwrap();
    let first = r.history[0].max_psrf.unwrap();
    let last = r.final_psrf().unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        6,
        first > 1.2 && last < 1.1 && secs < 120.0,
        &format!(
            "max √R after batch 1 = {first:.3} (> 1.2), final = {last:.4} (< 1.1) after {} batches, N = {}, {secs:.2}s (< 120s)",
            r.batches, r.samples
        ),
    );
}

#[test]
fn criterion_07_n_lag_insensitivity() {
    let _g = lock();
    let start = Instant::now();
    let d = 50;
    let t = build_target(TargetKind::Pi1, d, 1).unwrap();
    let seeds = 4u64;
    let mut ns = Vec::new();
    for n_lag in [d / 2, d, 2 * d] {
        let mut total = 0.0;
        for seed in 0..seeds {
            let mut k = KernelConfig::new(ProposalKind::Diam, d);
            k.n_lag = n_lag;
            let mut cfg = RunConfig::new(k);
            // constant check granularity of 1000 iterations per batch
            cfg.intervals = 1000 / n_lag;
            cfg.max_batches = Some(100_000);
            cfg.stop.mean_tol = Some(0.01);
            cfg.record_traces = false;
            cfg.master_seed = 70 + seed;
            let r = run_concurrent_on(&cfg, &t).unwrap();
            assert_eq!(r.stop_reason, diam::StopReason::MeanTol);
            total += r.samples as f64;
        }
        // first-passage counts are heavy-tailed; compare seed averages
        ns.push((total / seeds as f64).round());
    }
    let secs = start.elapsed().as_secs_f64();
    let spread = ns.iter().copied().fold(0.0, f64::max) / ns.iter().copied().fold(f64::INFINITY, f64::min);
    report(
        7,
        spread <= 2.0 && secs < 300.0,
        &format!("mean N over {seeds} seeds to mean_error < 0.01 at n_lag = 25/50/100: {ns:?}, max/min = {spread:.2} (≤ 2), {secs:.1}s (< 300s)"),
    );
}

#[test]
fn criterion_08_quadratic_cost_scaling() {
    let _g = lock();
    let start = Instant::now();
    let dims = [100usize, 200, 400, 800];
    let samples = 4000;
    let mut per_sample = Vec::new();
    for &d in &dims {
        let t = build_target(TargetKind::Pi1, d, 1).unwrap();
        let k = KernelConfig::new(ProposalKind::Diam, d);
        let best = (0..2)
            .map(|r| time_fixed_samples(&t, &k, samples, r).unwrap().seconds_per_sample)
            .fold(f64::INFINITY, f64::min);
        per_sample.push(best);
    }
    let x: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    let fit = fit_quadratic(&x, &per_sample).unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        8,
        fit.quadratic_r2 > 0.8 && fit.quadratic_coef > 0.0 && secs < 600.0,
        &format!(
            "seconds/sample [{}] at d = 100/200/400/800; fit a = {:.3e}, b = {:.3e}, c = {:.3e}, \
             d² term alone explains {:.3} (> 0.8), {secs:.1}s (< 600s)",
            per_sample.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            fit.a, fit.b, fit.c, fit.quadratic_r2
        ),
    );
}

#[test]
fn criterion_09_concurrent_chain_scaling() {
    let _g = lock();
    let start = Instant::now();
    let d = 200;
    let cov_tol = 0.5;
    let t = build_target(TargetKind::Pi1, d, 1).unwrap();
    let mut rows = Vec::new();
    for p in [1usize, 2, 4] {
        let mut cfg = RunConfig::new(KernelConfig::new(ProposalKind::Diam, d));
        cfg.chains = p;
        cfg.intervals = 10;
        cfg.max_batches = None;
        cfg.stop.cov_tol = Some(cov_tol);
        cfg.stop.max_samples = Some(4_000_000);
        cfg.record_traces = false;
        cfg.execution = Execution::Parallel;
        cfg.master_seed = 9;
        let r = Sampler::new(cfg, &t).unwrap().run().unwrap();
        rows.push((p, r.samples, r.wall_time, r.time_per_batch, r.converged));
    }
    let secs = start.elapsed().as_secs_f64();
    let all_converged = rows.iter().all(|r| r.4);
    let n_ok = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    let t_ok = rows.windows(2).all(|w| w[1].2 <= w[0].2);
    let tpb_ok = rows.windows(2).all(|w| w[1].3 >= w[0].3);
    let table: Vec<String> = rows
        .iter()
        .map(|(p, n, t, tpb, _)| format!("P={p}: N={n} total {t:.1}s per-batch {tpb:.3}s"))
        .collect();
    report(
        9,
        all_converged && n_ok && t_ok && tpb_ok && secs < 600.0,
        &format!(
            "cov_tol {cov_tol}, {} worker threads; {}; N non-increasing: {n_ok}, total time non-increasing: {t_ok}, \
             time/batch non-decreasing: {tpb_ok}, {secs:.1}s (< 600s)",
            diam::runner::init_thread_pool(None),
            table.join("; ")
        ),
    );
}

const GRID: usize = 20;

fn cell(x: &[f64], sd: &[f64]) -> usize {
    let bin = |v: f64, s: f64| (((v / s + 3.0) / 6.0 * GRID as f64).floor().max(0.0) as usize).min(GRID - 1);
    bin(x[0], sd[0]) * GRID + bin(x[1], sd[1])
}

struct FluxCheck {
    pairs: usize,
    exceed: usize,
    allowed: u64,
    chi2: f64,
    p_value: f64,
}

impl FluxCheck {
    fn symmetric(&self) -> bool {
        self.exceed as u64 <= self.allowed && self.p_value > 1e-3
    }
}

/// One transition from each of `n` exact draws of `π`; returns the
/// per-pair and aggregate flux symmetry tests on a 20×20 grid.
fn flux_check<F>(n: usize, target: &GaussianTarget, seed: u64, mut step: F) -> FluxCheck
where
    F: FnMut(&[f64], &mut ChaCha12Rng) -> Vec<f64>,
{
    let c = target.covariance();
    let l = cholesky(c).unwrap();
    let sd = [c.get(0, 0).sqrt(), c.get(1, 1).sqrt()];
    let cells = GRID * GRID;
    let mut counts = vec![0u32; cells * cells];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..n {
        let x = exact_draw(&l, &mut rng);
        let y = step(&x, &mut rng);
        counts[cell(&x, &sd) * cells + cell(&y, &sd)] += 1;
    }
    let (mut pairs, mut exceed, mut chi2) = (0usize, 0usize, 0.0);
    for a in 0..cells {
        for b in a + 1..cells {
            let (ab, ba) = (counts[a * cells + b] as f64, counts[b * cells + a] as f64);
            if ab + ba < 10.0 {
                continue;
            }
            pairs += 1;
            let z2 = (ab - ba).powi(2) / (ab + ba);
            chi2 += z2;
            if z2 > 9.0 {
                exceed += 1;
            }
        }
    }
    // each pair exceeds 3σ with probability 0.0027 under symmetry
    let allowed = Binomial::new(0.0027, pairs as u64).unwrap().inverse_cdf(0.999);
    let p_value = 1.0 - ChiSquared::new(pairs as f64).unwrap().cdf(chi2);
    FluxCheck {
        pairs,
        exceed,
        allowed,
        chi2,
        p_value,
    }
}

#[test]
fn criterion_10_detailed_balance() {
    let _g = lock();
    let start = Instant::now();
    let d = 2;
    let n = 1_000_000;
    let c = DenseMatrix::from_rows(&[[1.0, 0.6], [0.6, 0.5]]).unwrap();
    let target = GaussianTarget::from_covariance(c).unwrap();
    // deliberately wrong factor and pivot so the proposal correction matters
    let wrong = cholesky(&DenseMatrix::from_rows(&[[0.4, -0.1], [-0.1, 0.9]]).unwrap()).unwrap();
    let pivot = vec![0.5, -0.4];

    let mut lines = Vec::new();
    let mut ok = true;
    for (i, kind) in ProposalKind::ALL.into_iter().enumerate() {
        let mut cfg = frozen(kind, d, if kind.contracts() { 0.6 } else { 0.8 }, n);
        if kind.adapts_covariance() {
            cfg.reference_factor = Some(wrong.clone());
        }
        if kind.contracts() {
            cfg.ref_mode = RefMode::Fixed(pivot.clone());
        }
        if kind == ProposalKind::Diam {
            cfg.inflation = 1.3;
        }
        let mut noise_rng = ChaCha12Rng::seed_from_u64(1000 + i as u64);
        let mut st = ChainState::new(&cfg, &target, vec![0.0; d], &mut noise_rng).unwrap();
        let check = flux_check(n, &target, 2000 + i as u64, |x, rng| {
            st.set_position(&cfg, &target, x).unwrap();
            mh_step(&cfg, &target, &mut st, rng).unwrap();
            st.x().to_vec()
        });
        ok &= check.symmetric();
        lines.push(format!(
            "{kind}: {}/{} pairs beyond 3σ (≤ {}), χ² = {:.0}, p = {:.3}",
            check.exceed, check.pairs, check.allowed, check.chi2, check.p_value
        ));
    }

    // negative control: DIAM without the reference-density correction must be caught
    let mut cfg = frozen(ProposalKind::Diam, d, 0.6, n);
    cfg.reference_factor = Some(wrong.clone());
    cfg.ref_mode = RefMode::Fixed(pivot.clone());
    cfg.inflation = 1.3;
    let mut noise_rng = ChaCha12Rng::seed_from_u64(3000);
    let mut st = ChainState::new(&cfg, &target, vec![0.0; d], &mut noise_rng).unwrap();
    let control = flux_check(n, &target, 3001, |x, rng| {
        st.set_position(&cfg, &target, x).unwrap();
        let y = propose(&cfg, &st, st.peek_noise().unwrap()).unwrap();
        let naive = target.log_density(&y) - target.log_density(x);
        // consume the increment through the library step, then override its decision
        mh_step(&cfg, &target, &mut st, rng).unwrap();
        let u: f64 = rng.random();
        if u.ln() < naive { y } else { x.to_vec() }
    });
    let detected = !control.symmetric();
    ok &= detected;
    lines.push(format!(
        "control without correction: {}/{} pairs beyond 3σ, p = {:.1e}, detected: {detected}",
        control.exceed, control.pairs, control.p_value
    ));

    let secs = start.elapsed().as_secs_f64();
    report(10, ok && secs < 120.0, &format!("{}; {secs:.1}s (< 120s)", lines.join("; ")));
}
