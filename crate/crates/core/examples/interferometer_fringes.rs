//! The Mach–Zehnder circuit: fringes in the output probability encode the
//! overlap of the two square-root states.

use fidest::interferometer::{
    build_generator, default_phi_grid, extract_visibility_spectral, fringe_scan, mzi_run,
    recover_fidelity, MziMode, RecoveryInput, SpectralReadout, DEFAULT_TAU,
};
use fidest::oracle::{fidelity_commuting, normalized_sqrt, trace_sqrt, DEFAULT_COMMUTATOR_TOL};
use fidest::pipeline::{generate_commuting_pair, PairKind};
use fidest::Result;

pub fn run() -> Result<()> {
    let pair = generate_commuting_pair(5, 1, PairKind::RandomSpectra)?;
    let rho_prime = normalized_sqrt(&pair.rho1)?;
    let generator = build_generator(normalized_sqrt(&pair.rho2)?.matrix())?;
    let tau = DEFAULT_TAU;

    for phi in [0.0, std::f64::consts::FRAC_PI_2] {
        let r = mzi_run(&rho_prime, &generator, tau, phi, MziMode::Exact)?;
        println!(
            "phi = {phi:.4}: P(0) = {:.8}, alpha = {:.8}",
            r.p0(),
            r.alpha
        );
    }

    let scan = fringe_scan(
        &rho_prime,
        &generator,
        tau,
        &default_phi_grid(),
        MziMode::Exact,
    )?;
    println!(
        "fringe fit: V = {:.8}, residual {:.1e}",
        scan.visibility, scan.residual
    );

    let truncated = mzi_run(&rho_prime, &generator, tau, 0.0, MziMode::Truncated)?;
    let vis = extract_visibility_spectral(&truncated.sigma, &SpectralReadout::Exact)?;
    let (l1, l2) = (trace_sqrt(&pair.rho1), trace_sqrt(&pair.rho2));
    let from_v = recover_fidelity(
        l1,
        l2,
        tau,
        RecoveryInput::Truncated {
            visibility: vis.visibility,
        },
        0.0,
    )?;
    let from_alpha = recover_fidelity(
        l1,
        l2,
        tau,
        RecoveryInput::Exact {
            alpha: scan.alpha(),
        },
        0.0,
    )?;
    let oracle = fidelity_commuting(&pair.rho1, &pair.rho2, DEFAULT_COMMUTATOR_TOL)?;
    println!(
        "F from visibility {from_v:.8}, from the fringe phase {from_alpha:.8}, oracle {oracle:.8}"
    );
    assert!((from_v - oracle).abs() < 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
