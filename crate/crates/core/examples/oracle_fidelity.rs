//! Reference fidelities: the commuting shortcut against the general
//! Uhlmann formula.

use fidest::oracle::{fidelity_commuting, fidelity_uhlmann, trace_sqrt, DEFAULT_COMMUTATOR_TOL};
use fidest::pipeline::{generate_commuting_pair, PairKind};
use fidest::{DensityOperator, Result};

pub fn run() -> Result<()> {
    for kind in [
        PairKind::RandomSpectra,
        PairKind::Dephased,
        PairKind::ThermalSameHamiltonian,
    ] {
        let pair = generate_commuting_pair(7, 2, kind)?;
        let fast = fidelity_commuting(&pair.rho1, &pair.rho2, DEFAULT_COMMUTATOR_TOL)?;
        let slow = fidelity_uhlmann(&pair.rho1, &pair.rho2)?;
        println!(
            "{kind:?}: F = {fast:.6} (uhlmann {slow:.6}), Tr sqrt(rho1) = {:.4}",
            trace_sqrt(&pair.rho1)
        );
        assert!((fast - slow).abs() < 1e-9);
    }

    // The shortcut refuses non-commuting inputs; the Uhlmann form does not.
    let a = DensityOperator::diagonal(&[0.9, 0.1])?;
    let b = DensityOperator::maximally_mixed(2)?;
    let c = DensityOperator::basis(2, 0)?.conjugate(&fidest::UnitaryOperator::hadamard())?;
    println!("F(diag, I/2) = {:.6}", fidelity_uhlmann(&a, &b)?);
    match fidelity_commuting(&a, &c, DEFAULT_COMMUTATOR_TOL) {
        Ok(_) => unreachable!(),
        Err(e) => println!(
            "non-commuting pair: {e}; uhlmann gives {:.6}",
            fidelity_uhlmann(&a, &c)?
        ),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
