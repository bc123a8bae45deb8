//! Mach–Zehnder circuit on a control qubit and a system register.
//!
//! The control starts in `|0>`, passes a Hadamard and the phase gate
//! `diag(1, e^{iφ})`, drives `U = e^{-iτB}` on the system when it is `|1>`,
//! and meets a second Hadamard. With `α = Tr(U ρ')` the control is found in
//! `|0>` with probability `½[1 + Re(e^{iφ} α)]`, and its reduced state has
//! eigenvalues `(1 ± |α|)/2`.
//!
//! For `ρ' = sqrt(ρ₁)/Tr sqrt(ρ₁)` and `B = sqrt(ρ₂)/Tr sqrt(ρ₂)` with commuting
//! inputs, `Tr(B ρ') = Tr sqrt(ρ₁ρ₂) / (Tr sqrt(ρ₁) Tr sqrt(ρ₂))`, so the
//! first-order term of `α` in `τ` carries the fidelity.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};

use crate::densop::{
    matrix_function, partial_trace, spectral_decompose, tensor, ComplexMatrix, DensityOperator,
    UnitaryOperator, C64,
};
use crate::error::{Error, Result};
use crate::iqpe::{iqpe_run, EvolutionMode, IqpeConfig};
use crate::lmr::{lmr_controlled_evolve, LmrConfig};

pub const DEFAULT_TAU: f64 = 0.01;

/// `{0, π/2, π}`.
pub fn default_phi_grid() -> Vec<f64> {
    vec![0.0, PI / 2.0, PI]
}

/// How the controlled `U` is realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MziMode {
    /// `U = e^{-iτB}` exactly.
    Exact,
    /// `U = 1 - iτB` kept to first order in `τ`; not a physical channel.
    Truncated,
    /// `e^{-iτB}` synthesised from `steps` copies of `B` by the swap trick.
    Lmr { steps: usize },
}

/// The generator of the controlled evolution: the normalised square-root
/// state itself, checked for Hermiticity.
pub fn build_generator(sqrt_state: &ComplexMatrix) -> Result<ComplexMatrix> {
    let deviation = sqrt_state.hermitian_deviation();
    if deviation > crate::densop::HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(sqrt_state.hermitian_part())
}

#[derive(Clone, Debug)]
pub struct MziResult {
    /// Control ⊗ system output; may be slightly non-positive in truncated mode.
    pub rho_f: ComplexMatrix,
    /// Reduced control state.
    pub sigma: ComplexMatrix,
    /// `Tr(U ρ')`.
    pub alpha: C64,
    pub phi: f64,
    pub tau: f64,
    pub mode: MziMode,
    /// Set when `rho_f` has an eigenvalue below `-1e-12`.
    pub non_positive: bool,
    pub copies_consumed: usize,
}

impl MziResult {
    /// Probability of finding the control in `|0>`.
    pub fn p0(&self) -> f64 {
        self.sigma.get(0, 0).re
    }

    /// `α` read back from the control state: `2 e^{-iφ} <-|σ|+>`.
    pub fn alpha_from_sigma(&self) -> C64 {
        let s = &self.sigma;
        let minus_sigma_plus = 0.5 * (s.get(0, 0) + s.get(0, 1) - s.get(1, 0) - s.get(1, 1));
        2.0 * C64::from_polar(1.0, -self.phi) * minus_sigma_plus
    }
}

/// Runs the circuit once at phase `phi`.
pub fn mzi_run(
    rho_prime: &DensityOperator,
    generator: &ComplexMatrix,
    tau: f64,
    phi: f64,
    mode: MziMode,
) -> Result<MziResult> {
    let d = rho_prime.dim();
    rho_prime.matrix().check_same_dim(generator)?;
    if !tau.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "non-finite tau {tau} or phi {phi}"
        )));
    }
    let h = UnitaryOperator::hadamard();
    let p = UnitaryOperator::phase(phi);
    let ph = p.matrix() * h.matrix();
    let control = &(&ph * &ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) * &ph.adjoint();
    let before = tensor(&control, rho_prime.matrix());

    let rho = rho_prime.matrix();
    let (after, alpha, copies) = match mode {
        MziMode::Exact => {
            let u = matrix_function(generator, |x| C64::from_polar(1.0, -tau * x))?;
            let cu = controlled(&u);
            let alpha = (&u * rho).trace();
            (&(&cu * &before) * &cu.adjoint(), alpha, 0)
        }
        MziMode::Truncated => {
            let m = before.as_dmatrix();
            let i = C64::new(0.0, 1.0);
            let b = generator.as_dmatrix();
            let mut out = m.clone();
            // blocks (1,1), (1,0), (0,1) under U = 1 - iτB, dropping τ²
            let b11 = m.view((d, d), (d, d)).into_owned();
            let b10 = m.view((d, 0), (d, d)).into_owned();
            let b01 = m.view((0, d), (d, d)).into_owned();
            let tau_c = C64::new(tau, 0.0);
            out.view_mut((d, d), (d, d))
                .copy_from(&(&b11 - (b * &b11 - &b11 * b) * (i * tau_c)));
            out.view_mut((d, 0), (d, d))
                .copy_from(&(&b10 - b * &b10 * (i * tau_c)));
            out.view_mut((0, d), (d, d))
                .copy_from(&(&b01 + &b01 * b * (i * tau_c)));
            let alpha = C64::new(1.0, 0.0) - i * tau_c * (generator * rho).trace();
            (ComplexMatrix::from_raw(out), alpha, 0)
        }
        MziMode::Lmr { steps } => {
            let resource = DensityOperator::new(generator.clone())?;
            let mut cfg = LmrConfig::new(-2.0 * tau, steps)?;
            let out = lmr_controlled_evolve(&resource, &before, 2, -2.0 * tau, &mut cfg)?;
            (out, C64::default(), cfg.copies_consumed)
        }
    };

    let hi = tensor(h.matrix(), &ComplexMatrix::identity(d));
    let rho_f = &(&hi * &after) * &hi;
    let sigma = partial_trace(&rho_f, &[2, d], &[0])?;
    let min_eig = spectral_decompose(&rho_f.hermitian_part())?
        .eigenvalues()
        .last()
        .copied()
        .unwrap_or(0.0);
    let mut result = MziResult {
        rho_f,
        sigma,
        alpha,
        phi,
        tau,
        mode,
        non_positive: min_eig < -1e-12,
        copies_consumed: copies,
    };
    if let MziMode::Lmr { .. } = mode {
        result.alpha = result.alpha_from_sigma();
    }
    Ok(result)
}

fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.dim();
    let mut m = DMatrix::<C64>::identity(2 * d, 2 * d);
    m.view_mut((d, d), (d, d)).copy_from(u.as_dmatrix());
    ComplexMatrix::from_raw(m)
}

/// Eigenvalues of `σ` and the visibility `λ₊ - λ₋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub copies_consumed: usize,
}

/// How the eigenvalues of `σ` are read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralReadout {
    /// Direct eigen-solve, standing in for error-free phase estimation.
    Exact,
    /// Phase estimation of `σ` under its own evolution.
    Iqpe {
        config: IqpeConfig,
        mode: EvolutionMode,
    },
}

pub fn extract_visibility_spectral(
    sigma: &ComplexMatrix,
    readout: &SpectralReadout,
) -> Result<VisibilityEstimate> {
    if sigma.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "control state must be 2x2, got {}",
            sigma.dim()
        )));
    }
    let (plus, minus, copies) = match readout {
        SpectralReadout::Exact => {
            let spec = spectral_decompose(sigma)?;
            (spec.eigenvalues()[0], spec.eigenvalues()[1], 0)
        }
        SpectralReadout::Iqpe { config, mode } => {
            let state = DensityOperator::new(sigma.clone())?;
            let mut evolution = mode.provider(&state)?;
            let input = DensityOperator::maximally_mixed(2)?;
            let outcome = iqpe_run(evolution.as_mut(), &input, config)?;
            let estimates: Vec<f64> = outcome.branches()?.iter().map(|b| b.estimate()).collect();
            let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // a pure σ leaves a single branch: the other eigenvalue is 0
            let lo = if estimates.len() > 1 {
                estimates.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
            (hi, lo, evolution.copies_consumed())
        }
    };
    Ok(VisibilityEstimate {
        visibility: plus - minus,
        lambda_plus: plus,
        lambda_minus: minus,
        copies_consumed: copies,
    })
}

#[derive(Clone, Debug)]
pub struct FringeScan {
    pub phi_grid: Vec<f64>,
    pub p0_values: Vec<f64>,
    pub visibility: f64,
    pub theta: f64,
    /// Offset of the fitted fringe; ½ for a trace-one control state.
    pub offset: f64,
    /// Largest deviation of a measured point from the fitted fringe.
    pub residual: f64,
    pub copies_consumed: usize,
}

impl FringeScan {
    /// `V e^{iθ}`.
    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.visibility, self.theta)
    }
}

/// Runs the circuit at each phase and fits `P(0; φ) = a + ½ V cos(φ + θ)`.
pub fn fringe_scan(
    rho_prime: &DensityOperator,
    generator: &ComplexMatrix,
    tau: f64,
    phi_grid: &[f64],
    mode: MziMode,
) -> Result<FringeScan> {
    let mut distinct: Vec<f64> = phi_grid.iter().map(|p| p.rem_euclid(2.0 * PI)).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 3 {
        return Err(Error::DegenerateGrid(format!(
            "need at least 3 distinct phases, got {}",
            distinct.len()
        )));
    }

    let mut p0 = Vec::with_capacity(phi_grid.len());
    let mut copies = 0;
    for &phi in phi_grid {
        let run = mzi_run(rho_prime, generator, tau, phi, mode)?;
        p0.push(run.p0());
        copies += run.copies_consumed;
    }

    // P = a + ½ c cos φ - ½ s sin φ with c + is = α
    let design = DMatrix::from_fn(phi_grid.len(), 3, |r, k| match k {
        0 => 1.0,
        1 => 0.5 * phi_grid[r].cos(),
        _ => -0.5 * phi_grid[r].sin(),
    });
    let svd = SVD::new(design.clone(), true, true);
    if svd.singular_values.min() < 1e-9 {
        return Err(Error::DegenerateGrid(
            "phase grid does not determine the fringe".into(),
        ));
    }
    let rhs = DVector::from_vec(p0.clone());
    let fit = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::DegenerateGrid(e.to_string()))?;
    let residual = (&design * &fit - &rhs).amax();
    let (c, s) = (fit[1], fit[2]);
    Ok(FringeScan {
        phi_grid: phi_grid.to_vec(),
        p0_values: p0,
        visibility: c.hypot(s),
        theta: s.atan2(c),
        offset: fit[0],
        residual,
        copies_consumed: copies,
    })
}

/// What the fidelity is recovered from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecoveryInput {
    /// Visibility of the truncated circuit, `V² = 1 + τ² (Tr B ρ')²`.
    Truncated { visibility: f64 },
    /// `α` of the exact circuit, `Im α ≈ -τ Tr(B ρ')`.
    Exact { alpha: C64 },
}

/// `F̂ = λ₁ λ₂ Tr(B ρ')`, with `Tr(B ρ')` taken from the visibility or from
/// `Im α`, clamped to `[0, 1 + 3 slack]`.
pub fn recover_fidelity(
    lambda1: f64,
    lambda2: f64,
    tau: f64,
    input: RecoveryInput,
    slack: f64,
) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidConfig(format!("tau {tau} must be positive")));
    }
    let overlap = match input {
        RecoveryInput::Truncated { visibility } => {
            if visibility < 1.0 {
                return Err(Error::ModeMismatch { visibility });
            }
            (visibility * visibility - 1.0).sqrt() / tau
        }
        RecoveryInput::Exact { alpha } => alpha.im.abs() / tau,
    };
    Ok((lambda1 * lambda2 * overlap).clamp(0.0, 1.0 + 3.0 * slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densop::random::{
        density_in_basis, random_density, random_spectrum, random_unitary,
    };
    use crate::oracle::{fidelity_commuting, normalized_sqrt, trace_sqrt, DEFAULT_COMMUTATOR_TOL};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn commuting_pair(seed: u64, d: usize) -> (DensityOperator, DensityOperator) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(&mut rng, d);
        (
            density_in_basis(&u, &random_spectrum(&mut rng, d)),
            density_in_basis(&u, &random_spectrum(&mut rng, d)),
        )
    }

    #[test]
    fn generator_passthrough() {
        let half = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert_eq!(build_generator(&half).unwrap(), half);
        let d = ComplexMatrix::from_real_diagonal(&[0.366, 0.634]);
        assert_eq!(build_generator(&d).unwrap(), d);
        let bad = ComplexMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(matches!(
            build_generator(&bad),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn identity_gives_full_constructive_interference() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let run = mzi_run(
            &rho,
            &ComplexMatrix::from_real_diagonal(&[0.5, 0.5]),
            0.0,
            0.0,
            MziMode::Exact,
        )
        .unwrap();
        assert!(
            run.sigma
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]))
                < 1e-12
        );
        assert!((run.alpha - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pauli_x_generator_kills_alpha() {
        // U = e^{-iτX} at τ = π/2 is -iX, and Tr(X |0><0|) = 0
        let x = ComplexMatrix::new(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let zero = DensityOperator::basis(2, 0).unwrap();
        let run = mzi_run(&zero, &x, PI / 2.0, 0.0, MziMode::Exact).unwrap();
        assert!(run.alpha.norm() < 1e-12);
        assert!(
            run.sigma
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5]))
                < 1e-12
        );
    }

    #[test]
    fn truncated_mode_alpha_for_maximally_mixed_pair() {
        let half = DensityOperator::maximally_mixed(2).unwrap();
        let run = mzi_run(&half, half.matrix(), 0.01, 0.0, MziMode::Truncated).unwrap();
        assert!((run.alpha - c(1.0, -0.005)).norm() < 1e-15);
        assert!((run.alpha_from_sigma() - run.alpha).norm() < 1e-12);
        let v = extract_visibility_spectral(&run.sigma, &SpectralReadout::Exact).unwrap();
        assert!((v.visibility - 1.0000125).abs() < 1e-7);
        assert!(run.non_positive);
    }

    #[test]
    fn visibility_examples() {
        let readout = SpectralReadout::Iqpe {
            config: IqpeConfig::spectral(8).unwrap(),
            mode: EvolutionMode::Exact,
        };
        let zero = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let v = extract_visibility_spectral(&zero, &readout).unwrap();
        assert_eq!(
            (v.visibility, v.lambda_plus, v.lambda_minus),
            (1.0, 1.0, 0.0)
        );
        let half = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        let v = extract_visibility_spectral(&half, &readout).unwrap();
        assert_eq!(v.visibility, 0.0);
        let v = extract_visibility_spectral(&half, &SpectralReadout::Exact).unwrap();
        assert!(v.visibility.abs() < 1e-12);
    }

    #[test]
    fn fringe_examples() {
        let half = DensityOperator::maximally_mixed(2).unwrap();
        let scan = fringe_scan(
            &half,
            half.matrix(),
            0.0,
            &default_phi_grid(),
            MziMode::Exact,
        )
        .unwrap();
        let expected = [1.0, 0.5, 0.0];
        for (p, e) in scan.p0_values.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
        assert!((scan.alpha() - c(1.0, 0.0)).norm() < 1e-12);

        let x = ComplexMatrix::new(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let zero = DensityOperator::basis(2, 0).unwrap();
        let scan = fringe_scan(&zero, &x, PI / 2.0, &default_phi_grid(), MziMode::Exact).unwrap();
        assert!(scan.p0_values.iter().all(|p| (p - 0.5).abs() < 1e-12));

        let scan = fringe_scan(
            &half,
            half.matrix(),
            0.01,
            &default_phi_grid(),
            MziMode::Exact,
        )
        .unwrap();
        assert!((scan.alpha().im + 0.004999979).abs() < 1e-9);
        assert!(scan.visibility <= 1.0 + 1e-12);
        assert!(scan.residual < 1e-12);
    }

    #[test]
    fn fringe_rejects_degenerate_grids() {
        let half = DensityOperator::maximally_mixed(2).unwrap();
        let two = [0.0, PI];
        assert!(matches!(
            fringe_scan(&half, half.matrix(), 0.01, &two, MziMode::Exact),
            Err(Error::DegenerateGrid(_))
        ));
        let aliased = [0.0, 2.0 * PI, PI];
        assert!(matches!(
            fringe_scan(&half, half.matrix(), 0.01, &aliased, MziMode::Exact),
            Err(Error::DegenerateGrid(_))
        ));
    }

    #[test]
    fn recovery_examples() {
        let r2 = 2f64.sqrt();
        let v = (1.0 + 0.25e-4f64).sqrt();
        let f = recover_fidelity(
            r2,
            r2,
            0.01,
            RecoveryInput::Truncated { visibility: v },
            0.0,
        )
        .unwrap();
        assert!((f - 1.0).abs() < 1e-9);
        let f = recover_fidelity(
            r2,
            r2,
            0.01,
            RecoveryInput::Exact {
                alpha: C64::from_polar(1.0, -0.005),
            },
            0.0,
        )
        .unwrap();
        assert!((f - 0.9999958).abs() < 1e-7);
        let f = recover_fidelity(
            r2,
            r2,
            0.01,
            RecoveryInput::Truncated { visibility: 1.0 },
            0.0,
        )
        .unwrap();
        assert_eq!(f, 0.0);
        assert!(matches!(
            recover_fidelity(
                1.0,
                1.0,
                0.01,
                RecoveryInput::Truncated { visibility: 0.99 },
                0.0
            ),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn lmr_mode_approaches_exact_alpha() {
        let (a, b) = commuting_pair(4, 2);
        let rho_prime = normalized_sqrt(&a).unwrap();
        let gen = normalized_sqrt(&b).unwrap().into_matrix();
        let exact = mzi_run(&rho_prime, &gen, 0.5, 0.3, MziMode::Exact).unwrap();
        let mut last = f64::INFINITY;
        for steps in [4, 16, 64] {
            let run = mzi_run(&rho_prime, &gen, 0.5, 0.3, MziMode::Lmr { steps }).unwrap();
            let err = (run.alpha - exact.alpha).norm();
            assert!(err < last);
            last = err;
            assert_eq!(run.copies_consumed, steps);
        }
        assert!(last < 1e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn truncated_mode_matches_first_order_identities(seed: u64, d in prop::sample::select(vec![2usize, 4])) {
            let (a, b) = commuting_pair(seed, d);
            let tau = 0.01;
            let rho_prime = normalized_sqrt(&a).unwrap();
            let gen = build_generator(normalized_sqrt(&b).unwrap().matrix()).unwrap();
            let run = mzi_run(&rho_prime, &gen, tau, 0.0, MziMode::Truncated).unwrap();
            let ratio = fidelity_commuting(&a, &b, DEFAULT_COMMUTATOR_TOL).unwrap() / (trace_sqrt(&a) * trace_sqrt(&b));
            let measured = run.alpha_from_sigma();
            prop_assert!((measured - c(1.0, -tau * ratio)).norm() <= 1e-12);
            prop_assert!((measured.norm_sqr() - (1.0 + tau * tau * ratio * ratio)).abs() <= 1e-12);
        }

        #[test]
        fn exact_mode_is_unitary_and_sigma_spectrum_follows_alpha(seed: u64, d in prop::sample::select(vec![2usize, 4]), phi in 0.0..(2.0 * PI), tau in 0.0..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho_prime = random_density(&mut rng, d);
            let gen = random_density(&mut rng, d).into_matrix();
            let run = mzi_run(&rho_prime, &gen, tau, phi, MziMode::Exact).unwrap();
            prop_assert!(run.alpha.norm() <= 1.0 + 1e-10);
            prop_assert!((run.alpha_from_sigma() - run.alpha).norm() <= 1e-12);
            let v = extract_visibility_spectral(&run.sigma, &SpectralReadout::Exact).unwrap();
            prop_assert!((v.lambda_plus - (1.0 + run.alpha.norm()) / 2.0).abs() <= 1e-9);
            prop_assert!((v.lambda_minus - (1.0 - run.alpha.norm()) / 2.0).abs() <= 1e-9);
            prop_assert!((run.p0() - 0.5 * (1.0 + (C64::from_polar(1.0, phi) * run.alpha).re)).abs() <= 1e-12);
            prop_assert!(!run.non_positive);
            let scan = fringe_scan(&rho_prime, &gen, tau, &default_phi_grid(), MziMode::Exact).unwrap();
            prop_assert!((scan.alpha() - run.alpha).norm() <= 1e-9);
            prop_assert!(scan.residual <= 1e-9);
        }
    }
}
