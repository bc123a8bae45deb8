//! Planned resource counts as the target precision tightens.

use fidest::pipeline::{resource_report, PipelineConfig};
use fidest::Result;

pub fn run() -> Result<()> {
    let cfg = PipelineConfig::default();
    let shared = resource_report(&cfg, 2, 0.1, true)?;
    let fresh = resource_report(&cfg, 2, 0.1, false)?;
    println!(
        "two qubits, T = {}, {} swap-trick steps: {} copies of rho2 when copies are shared, {} otherwise",
        cfg.registers, cfg.lmr_steps, shared.copies_rho2, fresh.copies_rho2
    );
    for eps in [0.1, 0.05, 0.01] {
        println!("eps = {eps}");
        for (k, v) in &resource_report(&cfg, 2, eps, true)?.formula_values {
            println!("    {k:<10} {v:.3e}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
