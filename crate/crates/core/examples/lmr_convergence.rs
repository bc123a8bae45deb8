//! Density matrix exponentiation: `n` swap-trick steps with fresh copies of
//! `rho` approximate `e^{i rho t} sigma e^{-i rho t}` with error `O(t^2 / n)`.

use fidest::densop::random::random_density;
use fidest::densop::trace_distance;
use fidest::lmr::{exact_evolution, lmr_evolve, LmrConfig};
use fidest::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_density(&mut rng, 4);
    let sigma = random_density(&mut rng, 4);
    let t = 1.0;
    let exact = exact_evolution(&rho, &sigma, t)?;

    println!(
        "{:>6} {:>8} {:>12} {:>10}",
        "n", "copies", "error", "n*error"
    );
    let mut last = f64::INFINITY;
    for n in [4, 16, 64, 256] {
        let mut cfg = LmrConfig::new(t, n)?;
        let (out, copies) = lmr_evolve(&rho, &sigma, &mut cfg)?;
        let err = trace_distance(&out, &exact)?;
        println!("{n:>6} {copies:>8} {err:>12.3e} {:>10.4}", n as f64 * err);
        assert!(err < last);
        last = err;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
