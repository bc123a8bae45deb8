//! Preparing `sqrt(rho) / Tr sqrt(rho)` by phase estimation, a controlled
//! rotation and post-selection, and reading `Tr sqrt(rho)` off the ancilla.

use fidest::densop::random::{density_in_basis, random_unitary};
use fidest::densop::trace_distance;
use fidest::iqpe::EvolutionMode;
use fidest::oracle::{normalized_sqrt, trace_sqrt};
use fidest::pipeline::snap;
use fidest::sqrtprep::{prepare_sqrt, SqrtPrepConfig};
use fidest::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<()> {
    let registers = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spectrum = snap(&[0.55, 0.25, 0.15, 0.05], registers / 2);
    let rho = density_in_basis(&random_unitary(&mut rng, 4), &spectrum);

    let cfg = SqrtPrepConfig::new(registers, EvolutionMode::Exact)?;
    let out = prepare_sqrt(&rho, &cfg)?;
    let reference = normalized_sqrt(&rho)?;
    println!("spectrum {spectrum:?}");
    println!("phase spectrum {:?}", out.phase_spectrum);
    println!(
        "trace distance to oracle square root: {:.2e}",
        trace_distance(&out.sqrt_state, &reference)?
    );
    println!(
        "post-selection succeeds with p = {:.6} (Tr sqrt(rho)/d = {:.6})",
        out.success_probability,
        trace_sqrt(&rho) / 4.0
    );
    let slack = 4.0 * cfg.lambda_config(4)?.half_step();
    println!(
        "lambda estimate {:.5} vs {:.5} (grid slack {slack:.5})",
        out.lambda_estimate,
        trace_sqrt(&rho)
    );
    assert!((out.lambda_estimate - trace_sqrt(&rho)).abs() <= slack + 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
