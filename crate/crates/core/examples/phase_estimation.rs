//! Phase estimation of a state's own spectrum, with exact evolution and with
//! the swap-trick evolution.

use fidest::iqpe::{iqpe_run, readout_argmax, EvolutionMode, IqpeConfig};
use fidest::{DensityOperator, Result};

pub fn run() -> Result<()> {
    // Eigenvalues on the grid are read out with certainty.
    let registers = 16;
    let cfg = IqpeConfig::spectral(registers)?;
    let rho = DensityOperator::diagonal(&[0.625, 0.375])?;
    let mut evolution = EvolutionMode::Exact.provider(&rho)?;
    let outcome = iqpe_run(
        evolution.as_mut(),
        &DensityOperator::maximally_mixed(2)?,
        &cfg,
    )?;
    println!(
        "grid step {}, readout window starts at {}",
        cfg.grid_step(),
        cfg.window_start()
    );
    for branch in outcome.branches()? {
        println!(
            "  branch weight {:.3}: estimate {:.4} with probability {:.6}",
            branch.weight,
            branch.estimate(),
            branch
                .distribution
                .probabilities()
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        );
    }

    // Off the grid the argmax lands within half a step.
    let cfg = IqpeConfig::spectral(256)?;
    let rho = DensityOperator::diagonal(&[0.3141, 0.6859])?;
    let input = DensityOperator::basis(2, 0)?;
    let mut exact = EvolutionMode::Exact.provider(&rho)?;
    let a = readout_argmax(&iqpe_run(exact.as_mut(), &input, &cfg)?.distribution);
    println!(
        "0.3141 reads as {a:.5} on 256 bins (half step {:.5})",
        cfg.half_step()
    );
    assert!((a - 0.3141).abs() <= cfg.half_step());

    // The swap trick needs many copies per unit of evolution time, so it is
    // shown on a coarse register.
    let cfg = IqpeConfig::spectral(16)?;
    let mut exact = EvolutionMode::Exact.provider(&rho)?;
    let mut lmr = EvolutionMode::lmr(4096).provider(&rho)?;
    let a = readout_argmax(&iqpe_run(exact.as_mut(), &input, &cfg)?.distribution);
    let b = readout_argmax(&iqpe_run(lmr.as_mut(), &input, &cfg)?.distribution);
    println!(
        "on 16 bins: {a:.4} exact, {b:.4} with the swap trick ({} copies)",
        lmr.copies_consumed()
    );
    assert_eq!(a, b);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
