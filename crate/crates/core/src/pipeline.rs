//! End-to-end fidelity estimation, commuting test pairs and resource accounting.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::densop::random::{density_in_basis, random_spectrum, random_unitary};
use crate::densop::{DensityOperator, UnitaryOperator, C64};
use crate::error::{Error, Result};
use crate::interferometer::{
    build_generator, default_phi_grid, extract_visibility_spectral, fringe_scan, mzi_run,
    recover_fidelity, MziMode, RecoveryInput, SpectralReadout, DEFAULT_TAU,
};
use crate::iqpe::{EvolutionMode, InitialState, IqpeConfig};
use crate::oracle::{
    fidelity_commuting, fidelity_uhlmann, normalized_sqrt, trace_sqrt, OraclePair,
    DEFAULT_COMMUTATOR_TOL,
};
use crate::sqrtprep::{prepare_sqrt, SqrtPrepConfig, SqrtPrepResult, ANCILLA_PERIOD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact unitaries, phase-estimated square roots and `λ`, fidelity from `Im α`.
    Exact,
    /// Exact square roots and `λ`, first-order `U`, fidelity from the visibility.
    Truncated,
    /// Every evolution synthesised from copies by the swap trick.
    Lmr,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Truncated => "truncated",
            Mode::Lmr => "lmr",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "truncated" => Ok(Mode::Truncated),
            "lmr" => Ok(Mode::Lmr),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Phase-estimation register size `T`.
    pub registers: usize,
    /// Interferometer evolution time `t₂`.
    pub tau: f64,
    /// Per-step time for the spectrum of each input.
    pub t_spectrum: f64,
    /// Per-step time for the control state `σ`.
    pub t_sigma: f64,
    pub mode: Mode,
    /// Swap-trick steps per evolution in LMR mode.
    pub lmr_steps: usize,
    /// Ancilla qubits `z` of the square-root rotation.
    pub ancilla_copies: usize,
    pub phi_grid: Vec<f64>,
    pub seed: u64,
    pub commutator_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            registers: 512,
            tau: DEFAULT_TAU,
            t_spectrum: PI,
            t_sigma: PI,
            mode: Mode::Exact,
            lmr_steps: 64,
            ancilla_copies: 2,
            phi_grid: default_phi_grid(),
            seed: 0,
            commutator_tol: DEFAULT_COMMUTATOR_TOL,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.registers < 2 || !self.registers.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "T = {} must be a power of two >= 2",
                self.registers
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 0.1) {
            return Err(Error::InvalidConfig(format!(
                "tau = {} must lie in (0, 0.1]",
                self.tau
            )));
        }
        for t in [self.t_spectrum, self.t_sigma, self.commutator_tol] {
            if !t.is_finite() {
                return Err(Error::InvalidConfig("non-finite time or tolerance".into()));
            }
        }
        if self.lmr_steps == 0 {
            return Err(Error::InvalidConfig("lmr_steps must be positive".into()));
        }
        Ok(())
    }

    fn evolution(&self) -> EvolutionMode {
        match self.mode {
            Mode::Lmr => EvolutionMode::lmr(self.lmr_steps),
            _ => EvolutionMode::Exact,
        }
    }

    fn sqrt_config(&self) -> Result<SqrtPrepConfig> {
        Ok(SqrtPrepConfig {
            spectrum: IqpeConfig::new(self.registers, self.t_spectrum, InitialState::Uniform)?,
            lambda: None,
            mode: self.evolution(),
            ancilla_copies: self.ancilla_copies,
        })
    }

    /// Largest error of a `λ` readout for `dim`-dimensional inputs: `d` times
    /// half a step of the `χ` grid.
    pub fn grid_slack(&self, dim: usize) -> f64 {
        dim as f64 * 0.5 * ANCILLA_PERIOD / self.registers as f64
    }
}

/// Copies, steps and register sizes, measured in a run or derived from a
/// precision target.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ResourceLedger {
    pub copies_rho1: usize,
    pub copies_rho2: usize,
    /// Copies of the ancilla and control states used by their own phase estimations.
    pub copies_auxiliary: usize,
    pub lmr_steps: usize,
    pub iqpe_register_bits: u32,
    pub postselect_expected_repetitions: f64,
    pub formula_values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct EstimationReport {
    pub fidelity_estimate: f64,
    pub oracle_fidelity: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub visibility: f64,
    pub alpha: C64,
    pub phase_spectrum1: Vec<(f64, f64)>,
    pub phase_spectrum2: Vec<(f64, f64)>,
    pub success_probability1: f64,
    pub success_probability2: f64,
    pub commutator_norm: f64,
    pub mode: Mode,
    pub registers: usize,
    pub tau: f64,
    pub seed: u64,
    pub ledger: ResourceLedger,
}

impl EstimationReport {
    pub fn error(&self) -> f64 {
        (self.fidelity_estimate - self.oracle_fidelity).abs()
    }
}

fn exact_phase_spectrum(rho: &DensityOperator) -> Vec<(f64, f64)> {
    let w = 1.0 / rho.dim() as f64;
    rho.spectrum()
        .eigenvalues()
        .iter()
        .map(|&x| (x, w))
        .collect()
}

/// Estimates `Tr sqrt(ρ₁ρ₂)` for a commuting pair.
pub fn estimate_fidelity(
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    cfg: &PipelineConfig,
) -> Result<EstimationReport> {
    cfg.validate()?;
    let pair = OraclePair::new(rho1.clone(), rho2.clone())?;
    if !pair.commutes(cfg.commutator_tol) {
        return Err(Error::NonCommuting {
            norm: pair.commutator_norm,
        });
    }
    let oracle = fidelity_commuting(rho1, rho2, cfg.commutator_tol)?;
    let d = rho1.dim();
    let mut ledger = ResourceLedger {
        iqpe_register_bits: cfg.registers.trailing_zeros(),
        ..Default::default()
    };

    let report = |s1: Prepared,
                  s2: Prepared,
                  visibility: f64,
                  alpha: C64,
                  fidelity: f64,
                  mut ledger: ResourceLedger| {
        ledger.postselect_expected_repetitions = 1.0 / s1.success + 1.0 / s2.success;
        ledger.formula_values = formula_values(rho1.qubits(), None);
        EstimationReport {
            fidelity_estimate: fidelity,
            oracle_fidelity: oracle,
            lambda1: s1.lambda,
            lambda2: s2.lambda,
            visibility,
            alpha,
            phase_spectrum1: s1.phase_spectrum,
            phase_spectrum2: s2.phase_spectrum,
            success_probability1: s1.success,
            success_probability2: s2.success,
            commutator_norm: pair.commutator_norm,
            mode: cfg.mode,
            registers: cfg.registers,
            tau: cfg.tau,
            seed: cfg.seed,
            ledger,
        }
    };

    if cfg.mode == Mode::Truncated {
        let rho_prime = normalized_sqrt(rho1)?;
        let generator = build_generator(normalized_sqrt(rho2)?.matrix())?;
        let (l1, l2) = (trace_sqrt(rho1), trace_sqrt(rho2));
        let run = mzi_run(&rho_prime, &generator, cfg.tau, 0.0, MziMode::Truncated)?;
        let v = extract_visibility_spectral(&run.sigma, &SpectralReadout::Exact)?;
        let f = recover_fidelity(
            l1,
            l2,
            cfg.tau,
            RecoveryInput::Truncated {
                visibility: v.visibility,
            },
            0.0,
        )?;
        let ideal = |rho: &DensityOperator, lambda: f64| Prepared {
            lambda,
            phase_spectrum: exact_phase_spectrum(rho),
            success: lambda / d as f64,
        };
        return Ok(report(
            ideal(rho1, l1),
            ideal(rho2, l2),
            v.visibility,
            run.alpha,
            f,
            ledger,
        ));
    }

    let sqrt_cfg = cfg.sqrt_config()?;
    let s1 = prepare_sqrt(rho1, &sqrt_cfg)?;
    let s2 = prepare_sqrt(rho2, &sqrt_cfg)?;
    let generator = build_generator(s2.sqrt_state.matrix())?;
    let mzi_mode = match cfg.mode {
        Mode::Lmr => MziMode::Lmr {
            steps: cfg.lmr_steps,
        },
        _ => MziMode::Exact,
    };
    let scan = fringe_scan(&s1.sqrt_state, &generator, cfg.tau, &cfg.phi_grid, mzi_mode)?;
    let run = mzi_run(&s1.sqrt_state, &generator, cfg.tau, 0.0, mzi_mode)?;
    let readout = SpectralReadout::Iqpe {
        config: IqpeConfig::new(cfg.registers, cfg.t_sigma, InitialState::Uniform)?,
        mode: cfg.evolution(),
    };
    let v = extract_visibility_spectral(&run.sigma, &readout)?;
    let alpha = scan.alpha();
    let f = recover_fidelity(
        s1.lambda_estimate,
        s2.lambda_estimate,
        cfg.tau,
        RecoveryInput::Exact { alpha },
        cfg.grid_slack(d),
    )?;

    // ρ₁ feeds its own spectrum estimation and, through ρ', each interferometer
    // run; ρ₂ likewise through B.
    ledger.copies_rho1 = s1.copies_consumed;
    ledger.copies_rho2 = s2.copies_consumed + scan.copies_consumed + run.copies_consumed;
    ledger.copies_auxiliary =
        s1.ancilla_copies_consumed + s2.ancilla_copies_consumed + v.copies_consumed;
    ledger.lmr_steps = ledger.copies_rho1 + ledger.copies_rho2 + ledger.copies_auxiliary;
    let prepared = |s: SqrtPrepResult| Prepared {
        lambda: s.lambda_estimate,
        phase_spectrum: s.phase_spectrum,
        success: s.success_probability,
    };
    Ok(report(
        prepared(s1),
        prepared(s2),
        v.visibility,
        alpha,
        f,
        ledger,
    ))
}

/// What the report keeps from the square-root stage of one input.
struct Prepared {
    lambda: f64,
    phase_spectrum: Vec<(f64, f64)>,
    success: f64,
}

/// Oracle fidelity for any pair, used where the pipeline refuses to run.
pub fn oracle_fidelity(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    fidelity_uhlmann(rho1, rho2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// Independent flat-Dirichlet spectra in a shared Haar-random basis.
    RandomSpectra,
    /// Independent spectra, both diagonal in the computational basis.
    Dephased,
    /// Gibbs states of one random Hamiltonian at two temperatures.
    ThermalSameHamiltonian,
}

impl std::str::FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_spectra" | "random-spectra" => Ok(PairKind::RandomSpectra),
            "dephased" => Ok(PairKind::Dephased),
            "thermal_same_hamiltonian" | "thermal" => Ok(PairKind::ThermalSameHamiltonian),
            other => Err(Error::InvalidConfig(format!("unknown pair kind {other:?}"))),
        }
    }
}

fn pair_spectra(rng: &mut ChaCha8Rng, d: usize, kind: PairKind) -> (Vec<f64>, Vec<f64>) {
    match kind {
        PairKind::RandomSpectra | PairKind::Dephased => {
            (random_spectrum(rng, d), random_spectrum(rng, d))
        }
        PairKind::ThermalSameHamiltonian => {
            let energies: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut gibbs = || {
                let beta: f64 = rng.random_range(0.5..4.0);
                let weights: Vec<f64> = energies.iter().map(|e| (-beta * e).exp()).collect();
                let z: f64 = weights.iter().sum();
                weights.iter().map(|w| w / z).collect::<Vec<_>>()
            };
            let a = gibbs();
            (a, gibbs())
        }
    }
}

fn basis_for(rng: &mut ChaCha8Rng, d: usize, kind: PairKind) -> UnitaryOperator {
    match kind {
        PairKind::Dephased => UnitaryOperator::new(crate::densop::ComplexMatrix::identity(d))
            .expect("identity is unitary"),
        _ => random_unitary(rng, d),
    }
}

fn check_qubits(qubits: usize) -> Result<usize> {
    if !(1..=3).contains(&qubits) {
        return Err(Error::InvalidConfig(format!(
            "qubit count {qubits} must be 1, 2 or 3"
        )));
    }
    Ok(1 << qubits)
}

/// Two states sharing a seeded eigenbasis.
pub fn generate_commuting_pair(seed: u64, qubits: usize, kind: PairKind) -> Result<OraclePair> {
    let d = check_qubits(qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = basis_for(&mut rng, d, kind);
    let (a, b) = pair_spectra(&mut rng, d, kind);
    OraclePair::new(density_in_basis(&basis, &a), density_in_basis(&basis, &b))
}

/// Like [`generate_commuting_pair`] with every eigenvalue rounded to a
/// multiple of `1/levels` (largest-remainder rounding, so traces stay 1).
///
/// `levels = T/2` puts the spectra on the default phase-estimation grid of
/// `T` bins.
pub fn generate_snapped_pair(
    seed: u64,
    qubits: usize,
    kind: PairKind,
    levels: usize,
) -> Result<OraclePair> {
    if levels == 0 {
        return Err(Error::InvalidConfig("snap levels must be positive".into()));
    }
    let d = check_qubits(qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = basis_for(&mut rng, d, kind);
    let (a, b) = pair_spectra(&mut rng, d, kind);
    OraclePair::new(
        density_in_basis(&basis, &snap(&a, levels)),
        density_in_basis(&basis, &snap(&b, levels)),
    )
}

/// Largest-remainder rounding of a probability vector to multiples of `1/levels`.
pub fn snap(spectrum: &[f64], levels: usize) -> Vec<f64> {
    let scaled: Vec<f64> = spectrum.iter().map(|p| p * levels as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&i, &j| {
        (scaled[j] - scaled[j].floor()).total_cmp(&(scaled[i] - scaled[i].floor()))
    });
    for &i in order.iter().take(levels.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts.iter().map(|&c| c as f64 / levels as f64).collect()
}

/// Derived parameters and complexity expressions at precision `epsilon`,
/// with all constants set to 1. `None` skips the precision-derived entries.
fn formula_values(qubits: usize, epsilon: Option<f64>) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("t2_stated".into(), 2.0);
    let Some(eps) = epsilon else {
        return m;
    };
    let n_q = qubits as f64;
    let t = 1.0 / eps;
    let n = t * t / eps;
    let registers = ((2.0 * PI / (t * eps / 2.0)).ceil() as usize).next_power_of_two();
    m.insert("t".into(), t);
    m.insert("n".into(), n);
    m.insert("T".into(), registers as f64);
    m.insert("N*t^2/eps".into(), n_q * t * t / eps);
    m.insert("N/eps^3".into(), n_q / eps.powi(3));
    m.insert("1/eps^3".into(), 1.0 / eps.powi(3));
    m.insert("N/eps^4".into(), n_q / eps.powi(4));
    m.insert("N^2/eps^7".into(), n_q * n_q / eps.powi(7));
    m
}

/// Resource accounting for one estimate with `cfg` on `qubits`-qubit inputs.
///
/// Copy counts are those an LMR-mode run with `cfg.lmr_steps` per evolution
/// consumes: one spectrum estimation per input plus one interferometer run per
/// fringe phase and one for `σ`. With unshared copies every control branch
/// draws its own, multiplying the spectrum cost by `T` (the sequential
/// accounting); shared copies give the register-parallel accounting.
pub fn resource_report(
    cfg: &PipelineConfig,
    qubits: usize,
    epsilon: f64,
    share_copies: bool,
) -> Result<ResourceLedger> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon {epsilon} must lie in (0, 1)"
        )));
    }
    cfg.validate()?;
    let d = check_qubits(qubits)?;
    let n = cfg.lmr_steps;
    let per_iqpe = if share_copies { n } else { n * cfg.registers };
    let mzi_runs = cfg.phi_grid.len() + 1;
    let copies_rho1 = per_iqpe;
    let copies_rho2 = per_iqpe + mzi_runs * n;
    let copies_auxiliary = 2 * if share_copies {
        cfg.ancilla_copies
    } else {
        cfg.ancilla_copies * cfg.registers
    } + per_iqpe;
    Ok(ResourceLedger {
        copies_rho1,
        copies_rho2,
        copies_auxiliary,
        lmr_steps: copies_rho1 + copies_rho2 + copies_auxiliary,
        iqpe_register_bits: cfg.registers.trailing_zeros(),
        // worst case p = 1/d per input
        postselect_expected_repetitions: 2.0 * d as f64,
        formula_values: formula_values(qubits, Some(epsilon)),
    })
}
