//! Sample a 50-dimensional Gaussian with four DIAM chains until the covariance error drops below 5%.

use diam::runner::{RunConfig, Sampler};
use diam::targets::{build_target, TargetKind};
use diam::{KernelConfig, ProposalKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target = build_target(TargetKind::Pi1, 50, 0)?;
    let mut cfg = RunConfig::new(KernelConfig::new(ProposalKind::Diam, 50));
    cfg.chains = 4;
    cfg.stop.cov_tol = Some(0.05);
    let result = Sampler::new(cfg, &target)?.run()?;
    println!("{} samples, stopped on {:?}", result.samples, result.stop_reason);
    Ok(())
}
