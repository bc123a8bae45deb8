//! The full estimator on a random commuting pair in each mode. The swap-trick
//! mode simulates every evolution from copies and is run on a small register.

use fidest::pipeline::{
    estimate_fidelity, generate_commuting_pair, Mode, PairKind, PipelineConfig,
};
use fidest::Result;

pub fn run() -> Result<()> {
    let pair = generate_commuting_pair(42, 1, PairKind::RandomSpectra)?;
    let runs = [
        (Mode::Truncated, 512),
        (Mode::Exact, 512),
        (Mode::Exact, 32),
        (Mode::Lmr, 32),
    ];
    for (mode, registers) in runs {
        let cfg = PipelineConfig {
            mode,
            registers,
            lmr_steps: 2000,
            ancilla_copies: 2000,
            ..Default::default()
        };
        let r = estimate_fidelity(&pair.rho1, &pair.rho2, &cfg)?;
        println!(
            "{:>9} T={registers:<4} F = {:.6}  oracle {:.6}  error {:.2e}  copies of rho2 {}",
            mode.name(),
            r.fidelity_estimate,
            r.oracle_fidelity,
            r.error(),
            r.ledger.copies_rho2
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
