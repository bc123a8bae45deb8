//! Preparation of the normalised square-root state `sqrt(rho) / Tr sqrt(rho)`.
//!
//! Phase estimation on the maximally mixed input writes each eigenvalue
//! estimate `φ̃` into a register. An ancilla rotated to amplitude
//! `sqrt(sqrt(φ̃))` on `|1>` and post-selected on `|1>` reweights eigenbranch
//! `u` by `sqrt(φ̃_u)`, leaving `sqrt(rho) / Tr sqrt(rho)` on the system. The
//! ancilla populations form the one-qubit state `χ = diag(1 - p, p)` with
//! `p = Tr sqrt(rho) / d`, and a second phase estimation on `χ` reads `p`.

use crate::densop::{ComplexMatrix, DensityOperator};
use crate::error::{Error, Result};
use crate::iqpe::{iqpe_run, EvolutionMode, IqpeConfig, IqpeOutcome, PhaseDistribution};

/// Readouts may exceed 1 by this much before the grid is declared unsuitable.
pub const CLAMP_SLACK: f64 = 1e-9;

/// One eigenbranch of `rho` as seen through phase estimation.
#[derive(Clone, Debug)]
pub struct SpectrumComponent {
    /// Argmax readout of this branch.
    pub estimate: f64,
    pub weight: f64,
    pub projector: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct SpectrumEstimate {
    pub components: Vec<SpectrumComponent>,
    pub outcome: IqpeOutcome,
    pub copies_consumed: usize,
}

impl SpectrumEstimate {
    pub fn dim(&self) -> usize {
        self.outcome.joint.target_dim()
    }

    /// `(estimate, weight)` pairs.
    pub fn phase_spectrum(&self) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .map(|c| (c.estimate, c.weight))
            .collect()
    }
}

/// Phase estimation of `rho` under its own evolution with a maximally mixed
/// system input, so every eigenbranch carries weight `1/d`.
pub fn estimate_spectrum(
    rho: &DensityOperator,
    cfg: &IqpeConfig,
    mode: &EvolutionMode,
) -> Result<SpectrumEstimate> {
    let mut evolution = mode.provider(rho)?;
    let input = DensityOperator::maximally_mixed(rho.dim())?;
    let outcome = iqpe_run(evolution.as_mut(), &input, cfg)?;
    let components = outcome
        .branches()?
        .into_iter()
        .map(|b| SpectrumComponent {
            estimate: b.estimate(),
            weight: b.weight,
            projector: b.projector(),
        })
        .collect();
    Ok(SpectrumEstimate {
        components,
        outcome,
        copies_consumed: evolution.copies_consumed(),
    })
}

/// The effective one-qubit ancilla `diag(1 - p, p)` with `p = λ / d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AncillaState {
    chi: DensityOperator,
    system_dim: usize,
}

impl AncillaState {
    pub fn new(population: f64, system_dim: usize) -> Result<Self> {
        if !(-1e-12..=1.0 + 1e-12).contains(&population) {
            return Err(Error::InvalidConfig(format!(
                "ancilla population {population} outside [0, 1]"
            )));
        }
        let p = population.clamp(0.0, 1.0);
        Ok(Self {
            chi: DensityOperator::diagonal(&[1.0 - p, p])?,
            system_dim,
        })
    }

    /// Ancilla for a state with `Tr sqrt(rho) = lambda`.
    pub fn from_lambda(lambda: f64, system_dim: usize) -> Result<Self> {
        Self::new(lambda / system_dim as f64, system_dim)
    }

    pub fn chi(&self) -> &DensityOperator {
        &self.chi
    }

    pub fn population(&self) -> f64 {
        self.chi.matrix().get(1, 1).re
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// `d * p`.
    pub fn lambda(&self) -> f64 {
        self.system_dim as f64 * self.population()
    }
}

/// System state and ancilla after the controlled rotation and post-selection.
#[derive(Clone, Debug)]
pub struct PostSelection {
    pub sqrt_state: DensityOperator,
    pub success_probability: f64,
    pub ancilla: AncillaState,
}

/// Rotates an ancilla conditioned on each register bin and keeps the `|1>`
/// outcome.
///
/// The post-selected system state is `Σ_q sqrt(clamp(λ̃_q, 0, 1)) <q|J|q>`
/// where `J` is the joint state left by phase estimation; its trace is the
/// success probability. `ancilla_copies` is the number `z` of ancilla qubits
/// carrying the rotation and must be at least 2.
pub fn rotate_and_postselect(
    spectrum: &SpectrumEstimate,
    ancilla_copies: usize,
) -> Result<PostSelection> {
    if ancilla_copies < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 ancilla copies, got {ancilla_copies}"
        )));
    }
    if let Some(c) = spectrum
        .components
        .iter()
        .find(|c| c.estimate > 1.0 + CLAMP_SLACK)
    {
        return Err(Error::InvalidConfig(format!(
            "eigenvalue readout {} exceeds 1; choose a smaller evolution time",
            c.estimate
        )));
    }
    let grid = spectrum.outcome.config.grid();
    let unnormalised = spectrum
        .outcome
        .joint
        .weighted_target(|q| grid[q].clamp(0.0, 1.0).sqrt());
    let success = unnormalised.trace().re;
    if success <= 0.0 {
        return Err(Error::InvalidConfig(
            "post-selection has zero success probability".into(),
        ));
    }
    let sqrt_state = DensityOperator::new(unnormalised.hermitian_part().scale_real(1.0 / success))?;
    let ancilla = AncillaState::new(success, spectrum.dim())?;
    Ok(PostSelection {
        sqrt_state,
        success_probability: success,
        ancilla,
    })
}

#[derive(Clone, Debug)]
pub struct LambdaEstimate {
    /// `d` times the readout, an estimate of `Tr sqrt(rho)`.
    pub value: f64,
    /// Set when `p = 0`, where `|1>` carries no phase and the readout is 0.
    pub degenerate: bool,
    pub distribution: PhaseDistribution,
    pub copies_consumed: usize,
}

/// Phase estimation of `χ` with its eigenstate `|1>` as the input; the
/// readout estimates `p` and is rescaled by `d`.
pub fn estimate_lambda(
    chi: &AncillaState,
    cfg: &IqpeConfig,
    mode: &EvolutionMode,
) -> Result<LambdaEstimate> {
    let mut evolution = mode.provider(chi.chi())?;
    let input = DensityOperator::basis(2, 1)?;
    let outcome = iqpe_run(evolution.as_mut(), &input, cfg)?;
    let readout = crate::iqpe::readout_argmax(&outcome.distribution);
    Ok(LambdaEstimate {
        value: chi.system_dim() as f64 * readout,
        degenerate: chi.population() == 0.0,
        distribution: outcome.distribution,
        copies_consumed: evolution.copies_consumed(),
    })
}

/// Width of the readout window used for `χ`.
pub const ANCILLA_PERIOD: f64 = 0.3;

/// Phase estimation for `χ` of a `system_dim`-dimensional state.
///
/// `p = Tr sqrt(rho) / d` always lies in `[1/d, 1/sqrt(d)]`, an interval no
/// wider than 1/4, so a window of width 0.3 centred on it reads `p` without
/// ambiguity at `1/0.3` times the resolution of a unit window.
pub fn ancilla_config(registers: usize, system_dim: usize) -> Result<IqpeConfig> {
    let d = system_dim as f64;
    let centre = 0.5 * (1.0 / d + 1.0 / d.sqrt());
    IqpeConfig::windowed(
        registers,
        2.0 * std::f64::consts::PI / ANCILLA_PERIOD,
        centre - 0.5 * ANCILLA_PERIOD,
        Default::default(),
    )
}

/// Settings for the square-root preparation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqrtPrepConfig {
    /// Phase estimation of `rho`; the time must keep eigenvalue 1 apart from 0.
    pub spectrum: IqpeConfig,
    /// Phase estimation of `χ`; `None` uses [`ancilla_config`] for the input
    /// dimension.
    pub lambda: Option<IqpeConfig>,
    pub mode: EvolutionMode,
    /// Ancilla qubits `z`; in LMR mode also the copies of `χ` per evolution.
    pub ancilla_copies: usize,
}

impl SqrtPrepConfig {
    /// `t = π` for the spectrum and a fitted window for `χ`, both on
    /// `registers` bins.
    pub fn new(registers: usize, mode: EvolutionMode) -> Result<Self> {
        Ok(Self {
            spectrum: IqpeConfig::spectral(registers)?,
            lambda: None,
            mode,
            ancilla_copies: 2,
        })
    }

    pub fn lambda_config(&self, system_dim: usize) -> Result<IqpeConfig> {
        match self.lambda {
            Some(cfg) => Ok(cfg),
            None => ancilla_config(self.spectrum.registers(), system_dim),
        }
    }

    fn lambda_mode(&self) -> EvolutionMode {
        match self.mode {
            EvolutionMode::Exact => EvolutionMode::Exact,
            EvolutionMode::Lmr { share_copies, .. } => EvolutionMode::Lmr {
                steps: self.ancilla_copies,
                share_copies,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SqrtPrepResult {
    pub sqrt_state: DensityOperator,
    pub lambda_estimate: f64,
    pub success_probability: f64,
    pub phase_spectrum: Vec<(f64, f64)>,
    pub ancilla: AncillaState,
    pub lambda_degenerate: bool,
    /// Copies of `rho` consumed by the spectrum estimation.
    pub copies_consumed: usize,
    /// Copies of `χ` consumed by the `λ` estimation.
    pub ancilla_copies_consumed: usize,
}

/// Full preparation: spectrum, rotation and post-selection, then `λ`.
pub fn prepare_sqrt(rho: &DensityOperator, cfg: &SqrtPrepConfig) -> Result<SqrtPrepResult> {
    let spectrum = estimate_spectrum(rho, &cfg.spectrum, &cfg.mode)?;
    let post = rotate_and_postselect(&spectrum, cfg.ancilla_copies)?;
    let lambda = estimate_lambda(
        &post.ancilla,
        &cfg.lambda_config(rho.dim())?,
        &cfg.lambda_mode(),
    )?;
    Ok(SqrtPrepResult {
        sqrt_state: post.sqrt_state,
        lambda_estimate: lambda.value,
        success_probability: post.success_probability,
        phase_spectrum: spectrum.phase_spectrum(),
        ancilla: post.ancilla,
        lambda_degenerate: lambda.degenerate,
        copies_consumed: spectrum.copies_consumed,
        ancilla_copies_consumed: lambda.copies_consumed,
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::densop::random::{density_in_basis, random_spectrum, random_unitary};
    use crate::densop::{trace_distance, C64};
    use crate::oracle::{normalized_sqrt, trace_sqrt};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        v
    }

    /// Spectrum on the `t = π` grid of `registers` bins.
    fn snapped_spectrum<R: rand::Rng>(rng: &mut R, d: usize, levels: usize) -> Vec<f64> {
        let mut counts = vec![0usize; d];
        for _ in 0..levels {
            counts[rng.random_range(0..d)] += 1;
        }
        counts.iter().map(|&c| c as f64 / levels as f64).collect()
    }

    #[test]
    fn spectrum_examples() {
        let cfg = IqpeConfig::spectral(8).unwrap();
        let pure = DensityOperator::basis(2, 0).unwrap();
        let s = estimate_spectrum(&pure, &cfg, &EvolutionMode::Exact).unwrap();
        assert_eq!(sorted(s.phase_spectrum()), vec![(1.0, 0.5), (0.0, 0.5)]);

        let half = DensityOperator::maximally_mixed(2).unwrap();
        let s = estimate_spectrum(&half, &cfg, &EvolutionMode::Exact).unwrap();
        assert_eq!(s.phase_spectrum(), vec![(0.5, 0.5), (0.5, 0.5)]);

        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let s = estimate_spectrum(&rho, &cfg, &EvolutionMode::Exact).unwrap();
        assert_eq!(sorted(s.phase_spectrum()), vec![(0.75, 0.5), (0.25, 0.5)]);
        let total: f64 = s.components.iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn postselection_examples() {
        let cfg = IqpeConfig::spectral(8).unwrap();
        let pure = DensityOperator::basis(2, 1).unwrap();
        let s = estimate_spectrum(&pure, &cfg, &EvolutionMode::Exact).unwrap();
        let post = rotate_and_postselect(&s, 2).unwrap();
        assert!(post.sqrt_state.matrix().max_abs_diff(pure.matrix()) < 1e-12);
        assert!((post.success_probability - 0.5).abs() < 1e-12);

        let half = DensityOperator::maximally_mixed(2).unwrap();
        let s = estimate_spectrum(&half, &cfg, &EvolutionMode::Exact).unwrap();
        let post = rotate_and_postselect(&s, 2).unwrap();
        assert!(post.sqrt_state.matrix().max_abs_diff(half.matrix()) < 1e-12);
        assert!((post.success_probability - 0.7071068).abs() < 1e-7);

        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let s = estimate_spectrum(&rho, &cfg, &EvolutionMode::Exact).unwrap();
        let post = rotate_and_postselect(&s, 2).unwrap();
        let m = post.sqrt_state.matrix();
        assert!((m.get(0, 0).re - 0.3660254).abs() < 1e-7);
        assert!((m.get(1, 1).re - 0.6339746).abs() < 1e-7);
        assert!(rotate_and_postselect(&s, 1).is_err());
    }

    #[test]
    fn readout_above_one_is_a_configuration_error() {
        // at t = π/2 the window is [-1.5, 2.5) and eigenvalue 2 of a
        // non-state generator would read out as 2
        let cfg = IqpeConfig::new(8, std::f64::consts::FRAC_PI_2, Default::default()).unwrap();
        let rho = DensityOperator::basis(2, 0).unwrap();
        let mut s = estimate_spectrum(&rho, &cfg, &EvolutionMode::Exact).unwrap();
        s.components[0].estimate = 1.5;
        assert!(matches!(
            rotate_and_postselect(&s, 2),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn ancilla_state() {
        let a = AncillaState::from_lambda(2f64.sqrt(), 2).unwrap();
        assert!((a.population() - 0.7071068).abs() < 1e-7);
        assert_eq!(a.chi().matrix().get(0, 1), C64::default());
        assert!(AncillaState::new(1.5, 2).is_err());
        assert!((a.lambda() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let cfg = IqpeConfig::new(1024, 2.0 * std::f64::consts::PI, Default::default()).unwrap();
        let half = AncillaState::from_lambda(2f64.sqrt(), 2).unwrap();
        let est = estimate_lambda(&half, &cfg, &EvolutionMode::Exact).unwrap();
        assert!((est.value - 1.4142136).abs() <= 2.0 * cfg.half_step());

        let cfg8 = IqpeConfig::new(8, 2.0 * std::f64::consts::PI, Default::default()).unwrap();
        let pure = AncillaState::from_lambda(1.0, 2).unwrap();
        let est = estimate_lambda(&pure, &cfg8, &EvolutionMode::Exact).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(!est.degenerate);

        let zero = AncillaState::new(0.0, 2).unwrap();
        let est = estimate_lambda(&zero, &cfg8, &EvolutionMode::Exact).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.degenerate);
    }

    #[test]
    fn fitted_window_covers_every_population() {
        for d in [2usize, 4, 8, 16] {
            let cfg = ancilla_config(64, d).unwrap();
            let lo = cfg.window_start();
            let hi = lo + cfg.period();
            let (pmin, pmax) = (1.0 / d as f64, 1.0 / (d as f64).sqrt());
            assert!(lo < pmin - 0.02 && pmax + 0.02 < hi, "d = {d}");
            let grid = cfg.grid();
            assert!(grid.iter().all(|&v| v >= lo && v < hi));
        }
    }

    #[test]
    fn lmr_mode_tracks_exact_mode() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let exact =
            prepare_sqrt(&rho, &SqrtPrepConfig::new(4, EvolutionMode::Exact).unwrap()).unwrap();
        let mut cfg = SqrtPrepConfig::new(4, EvolutionMode::lmr(2000)).unwrap();
        cfg.ancilla_copies = 2000;
        let lmr = prepare_sqrt(&rho, &cfg).unwrap();
        assert!(trace_distance(&exact.sqrt_state, &lmr.sqrt_state).unwrap() < 0.02);
        assert_eq!(lmr.copies_consumed, 2000);
        assert_eq!(lmr.ancilla_copies_consumed, 2000);
        assert_eq!(exact.copies_consumed, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn on_grid_states_match_oracle(seed: u64, d in prop::sample::select(vec![2usize, 4])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let registers = 64;
            let spectrum = snapped_spectrum(&mut rng, d, registers / 2);
            let rho = density_in_basis(&random_unitary(&mut rng, d), &spectrum);
            let cfg = SqrtPrepConfig::new(registers, EvolutionMode::Exact).unwrap();
            let out = prepare_sqrt(&rho, &cfg).unwrap();
            let oracle = normalized_sqrt(&rho).unwrap();
            prop_assert!(trace_distance(&out.sqrt_state, &oracle).unwrap() <= 1e-9);
            let tr = trace_sqrt(&rho);
            prop_assert!((out.success_probability - tr / d as f64).abs() <= 1e-9);
            prop_assert!((out.lambda_estimate - tr).abs() <= d as f64 * cfg.lambda_config(d).unwrap().half_step() + 1e-12);
            prop_assert!(out.success_probability >= 1.0 / d as f64 - 1e-12);
            prop_assert!((out.sqrt_state.matrix().trace().re - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn commuting_inputs_give_commuting_outputs(seed: u64, d in prop::sample::select(vec![2usize, 4])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(&mut rng, d);
            let a = density_in_basis(&u, &random_spectrum(&mut rng, d));
            let b = density_in_basis(&u, &random_spectrum(&mut rng, d));
            let cfg = SqrtPrepConfig::new(64, EvolutionMode::Exact).unwrap();
            let sa = prepare_sqrt(&a, &cfg).unwrap();
            let sb = prepare_sqrt(&b, &cfg).unwrap();
            prop_assert!(sa.sqrt_state.matrix().commutator_norm(sb.sqrt_state.matrix()) <= 1e-8);
            prop_assert!((sa.sqrt_state.matrix().trace().re - 1.0).abs() <= 1e-10);
            prop_assert!(sa.success_probability > 0.0 && sa.success_probability <= 1.0);
        }
    }
}
