//! Building blocks: tensor products, partial traces and spectra.
//!
//! ```text
//! cargo run --example density_operators
//! ```

use fidest::densop::{partial_trace, spectral_decompose, tensor, trace_distance, DensityOperator};
use fidest::{ComplexMatrix, Result, UnitaryOperator};

pub fn run() -> Result<()> {
    let plus = DensityOperator::basis(2, 0)?.conjugate(&UnitaryOperator::hadamard())?;
    let mixed = DensityOperator::diagonal(&[0.7, 0.3])?;

    let joint = tensor(plus.matrix(), mixed.matrix());
    let back = partial_trace(&joint, &[2, 2], &[1])?;
    println!(
        "Tr_A(|+><+| x rho) recovers rho: max deviation {:.1e}",
        back.max_abs_diff(mixed.matrix())
    );

    let spec = spectral_decompose(plus.matrix())?;
    println!("spectrum of |+><+|: {:?}", spec.eigenvalues());

    println!(
        "trace distance(|+><+|, rho) = {:.4}",
        trace_distance(&plus, &mixed)?
    );

    let sqrt = spec.apply(|x| fidest::C64::from(x.max(0.0).sqrt()));
    assert!(
        sqrt.max_abs_diff(plus.matrix()) < 1e-12,
        "a pure state is its own square root"
    );

    let commutator = ComplexMatrix::commutator_norm(plus.matrix(), mixed.matrix());
    println!("commutator max-entry norm = {commutator:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
