//! Phase estimation driven by a conditional evolution.
//!
//! A `T`-level control register is prepared in an initial state, the joint
//! state evolves under `Σ_ι |ι><ι| ⊗ e^{i Ω t ι}`, and an inverse Fourier
//! transform on the register concentrates an eigenvalue `λ` of `Ω` near bin
//! `q = λ t T / 2π`. Bin `q` reads out as `λ̃_q = 2π q / (t T)`, wrapped into
//! a window of width `2π / t` centred on `[0, 1]` so that density-operator
//! spectra map to distinct bins whenever `t < 2π`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::densop::{
    spectral_decompose, tensor, ComplexMatrix, DensityOperator, SpectralDecomposition, C64,
};
use crate::error::{Error, Result};
use crate::lmr::{lmr_controlled_evolve, LmrConfig};

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
const DEGENERACY_TOL: f64 = 1e-9;
/// Inputs commuting with the generator to this max-entry norm are simulated
/// branch by branch.
const SLICE_COMMUTATOR_TOL: f64 = 1e-8;
/// Probability gap below which two bins count as tied in the argmax.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitialState {
    /// `T^{-1/2} Σ_ι |ι>`; exact on grid-aligned eigenvalues.
    #[default]
    Uniform,
    /// `sqrt(2/T) Σ_ι sin(π(ι + ½)/T) |ι>`; suppressed far tails.
    A0,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqpeConfig {
    registers: usize,
    time: f64,
    init: InitialState,
    window_start: f64,
}

impl IqpeConfig {
    /// `registers` must be a power of two no smaller than 2 and `time`
    /// (the evolution time per control step) positive and finite.
    pub fn new(registers: usize, time: f64, init: InitialState) -> Result<Self> {
        if registers < 2 || !registers.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "register size {registers} must be a power of two >= 2"
            )));
        }
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "evolution time {time} must be positive"
            )));
        }
        let period = 2.0 * PI / time;
        let window_start = if period > 1.0 {
            -(period - 1.0) / 2.0
        } else {
            0.0
        };
        Ok(Self {
            registers,
            time,
            init,
            window_start,
        })
    }

    /// Config whose readout window `[start, start + 2π/time)` is chosen by
    /// the caller, for eigenvalues known to lie in a short interval.
    pub fn windowed(registers: usize, time: f64, start: f64, init: InitialState) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "window start {start} is not finite"
            )));
        }
        Ok(Self {
            window_start: start,
            ..Self::new(registers, time, init)?
        })
    }

    /// Uniform init with `t = π`, so the grid step is `2/T` and eigenvalues
    /// 0 and 1 land in different bins.
    pub fn spectral(registers: usize) -> Result<Self> {
        Self::new(registers, PI, InitialState::Uniform)
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn init(&self) -> InitialState {
        self.init
    }

    pub fn with_init(self, init: InitialState) -> Self {
        Self { init, ..self }
    }

    /// Spacing `2π / (t T)` between neighbouring readout values.
    pub fn grid_step(&self) -> f64 {
        self.period() / self.registers as f64
    }

    pub fn half_step(&self) -> f64 {
        0.5 * self.grid_step()
    }

    /// Width `2π / t` of the readout window; eigenvalues are only known
    /// modulo this.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.time
    }

    /// Lower end of the readout window.
    pub fn window_start(&self) -> f64 {
        self.window_start
    }

    /// Readout value of bin `q`: `2π q / (t T)` shifted by whole periods into
    /// the window.
    pub fn grid_value(&self, q: usize) -> f64 {
        let p = self.period();
        let v = q as f64 * p / self.registers as f64;
        v - ((v - self.window_start) / p).floor() * p
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.registers).map(|q| self.grid_value(q)).collect()
    }
}

/// Initial control-register amplitudes.
pub fn prepare_init(registers: usize, init: InitialState) -> DVector<C64> {
    let t = registers as f64;
    match init {
        InitialState::Uniform => DVector::from_element(registers, C64::new(t.sqrt().recip(), 0.0)),
        InitialState::A0 => DVector::from_iterator(
            registers,
            (0..registers)
                .map(|i| C64::new((2.0 / t).sqrt() * (PI * (i as f64 + 0.5) / t).sin(), 0.0)),
        ),
    }
}

/// Outcome probabilities of the control register with their readout values.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDistribution {
    probabilities: Vec<f64>,
    grid: Vec<f64>,
}

impl PhaseDistribution {
    pub fn new(probabilities: Vec<f64>, grid: Vec<f64>) -> Result<Self> {
        if probabilities.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} grid points",
                probabilities.len(),
                grid.len()
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {total}"
            )));
        }
        if let Some(&p) = probabilities.iter().find(|&&p| p < -1e-12) {
            return Err(Error::InvalidConfig(format!("negative probability {p}")));
        }
        Ok(Self {
            probabilities,
            grid,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn probability(&self, q: usize) -> f64 {
        self.probabilities[q]
    }

    /// Most probable bin; ties go to the smaller index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (q, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] + TIE_TOL {
                best = q;
            }
        }
        best
    }

    /// `Σ_q p_q f(λ̃_q)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.grid)
            .map(|(p, &x)| p * f(x))
            .sum()
    }
}

/// Readout value of the most probable bin.
pub fn readout_argmax(dist: &PhaseDistribution) -> f64 {
    dist.grid[dist.argmax()]
}

/// Something that can apply `Σ_ι |ι><ι| ⊗ E_ι` with `E_ι ≈ e^{i Ω s ι}`.
pub trait ConditionalEvolution {
    /// The Hermitian generator `Ω`.
    fn generator(&self) -> &ComplexMatrix;

    /// Applies the controlled evolution with per-step time `step_time` to a
    /// dense control ⊗ target operator.
    fn apply_controlled(
        &mut self,
        joint: &ComplexMatrix,
        registers: usize,
        step_time: f64,
    ) -> Result<ComplexMatrix>;

    /// Spectrum of `Ω` when the evolution is the exact unitary; enables the
    /// branch-by-branch simulation.
    fn exact_spectrum(&self) -> Option<&SpectralDecomposition>;

    fn dim(&self) -> usize {
        self.generator().dim()
    }

    /// Copies of the generator state consumed so far.
    fn copies_consumed(&self) -> usize {
        0
    }
}

/// How a density operator is turned into a conditional evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionMode {
    /// Exact unitary from the spectrum.
    Exact,
    /// Swap-trick synthesis with `steps` copies per controlled evolution.
    Lmr { steps: usize, share_copies: bool },
}

impl EvolutionMode {
    pub fn lmr(steps: usize) -> Self {
        EvolutionMode::Lmr {
            steps,
            share_copies: true,
        }
    }

    pub fn provider(&self, generator: &DensityOperator) -> Result<Box<dyn ConditionalEvolution>> {
        Ok(match *self {
            EvolutionMode::Exact => Box::new(ExactEvolution::new(generator.matrix().clone())?),
            EvolutionMode::Lmr {
                steps,
                share_copies,
            } => {
                let mut config = LmrConfig::new(0.0, steps)?;
                config.share_copies = share_copies;
                Box::new(LmrEvolution::new(generator.clone(), config))
            }
        })
    }
}

/// The exact unitary `e^{i Ω s}` obtained from the spectrum of `Ω`.
#[derive(Clone, Debug)]
pub struct ExactEvolution {
    generator: ComplexMatrix,
    spectrum: SpectralDecomposition,
}

impl ExactEvolution {
    pub fn new(generator: ComplexMatrix) -> Result<Self> {
        let spectrum = spectral_decompose(&generator)?;
        Ok(Self {
            generator,
            spectrum,
        })
    }

    pub fn power(&self, time: f64) -> ComplexMatrix {
        self.spectrum.apply(|x| C64::from_polar(1.0, x * time))
    }
}

impl ConditionalEvolution for ExactEvolution {
    fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    fn apply_controlled(
        &mut self,
        joint: &ComplexMatrix,
        registers: usize,
        step_time: f64,
    ) -> Result<ComplexMatrix> {
        let d = self.generator.dim();
        check_joint(joint, registers, d)?;
        let mut block_diag = DMatrix::<C64>::zeros(registers * d, registers * d);
        for r in 0..registers {
            let u = self.power(step_time * r as f64);
            block_diag
                .view_mut((r * d, r * d), (d, d))
                .copy_from(u.as_dmatrix());
        }
        let u = ComplexMatrix::from_raw(block_diag);
        Ok(&(&u * joint) * &u.adjoint())
    }

    fn exact_spectrum(&self) -> Option<&SpectralDecomposition> {
        Some(&self.spectrum)
    }
}

/// `e^{i rho s}` synthesised from copies of `rho` by the swap trick.
#[derive(Clone, Debug)]
pub struct LmrEvolution {
    resource: DensityOperator,
    config: LmrConfig,
}

impl LmrEvolution {
    /// `config.steps` sets the number of swap steps per controlled evolution.
    pub fn new(resource: DensityOperator, config: LmrConfig) -> Self {
        Self { resource, config }
    }

    pub fn config(&self) -> &LmrConfig {
        &self.config
    }
}

impl ConditionalEvolution for LmrEvolution {
    fn generator(&self) -> &ComplexMatrix {
        self.resource.matrix()
    }

    fn apply_controlled(
        &mut self,
        joint: &ComplexMatrix,
        registers: usize,
        step_time: f64,
    ) -> Result<ComplexMatrix> {
        check_joint(joint, registers, self.resource.dim())?;
        let total = step_time * registers as f64;
        lmr_controlled_evolve(&self.resource, joint, registers, total, &mut self.config)
    }

    fn exact_spectrum(&self) -> Option<&SpectralDecomposition> {
        None
    }

    fn copies_consumed(&self) -> usize {
        self.config.copies_consumed
    }
}

fn check_joint(joint: &ComplexMatrix, registers: usize, d: usize) -> Result<()> {
    if joint.dim() != registers * d {
        return Err(Error::DimensionMismatch(format!(
            "joint dimension {} is not {registers} x {d}",
            joint.dim()
        )));
    }
    Ok(())
}

/// One vector of a basis diagonalising both the generator and the input.
#[derive(Clone, Debug)]
pub struct CommonEigenvector {
    pub generator_eigenvalue: f64,
    pub weight: f64,
    pub vector: DVector<C64>,
}

/// Orthonormal basis in which both `generator` and `input` are diagonal.
///
/// Degenerate eigenspaces of the generator are rotated to diagonalise the
/// input, so the result does not depend on the solver's choice of basis there.
pub fn common_eigenbasis(
    spectrum: &SpectralDecomposition,
    input: &ComplexMatrix,
) -> Result<Vec<CommonEigenvector>> {
    let d = spectrum.dim();
    let values = spectrum.eigenvalues();
    let vectors = spectrum.eigenvectors().as_dmatrix();
    let mut out = Vec::with_capacity(d);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (values[start] - values[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        let block = vectors.columns(start, end - start).into_owned();
        let restricted = ComplexMatrix::from_raw(block.adjoint() * input.as_dmatrix() * &block);
        let inner = spectral_decompose(&restricted.hermitian_part())?;
        let rotated = &block * inner.eigenvectors().as_dmatrix();
        let eigenvalue = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        for (k, &w) in inner.eigenvalues().iter().enumerate() {
            out.push(CommonEigenvector {
                generator_eigenvalue: eigenvalue,
                weight: w,
                vector: rotated.column(k).into_owned(),
            });
        }
        start = end;
    }
    Ok(out)
}

/// One eigenbranch of a sliced joint state: `weight |register><register| ⊗ |vector><vector|`.
#[derive(Clone, Debug)]
pub struct EigenBranch {
    pub weight: f64,
    pub generator_eigenvalue: f64,
    pub vector: DVector<C64>,
    pub register: DVector<C64>,
}

/// Joint register ⊗ target state after (or during) phase estimation.
#[derive(Clone, Debug)]
pub enum JointState {
    /// Classical mixture of product eigenbranches, exact when the input
    /// commutes with an exactly exponentiated generator.
    Sliced {
        registers: usize,
        branches: Vec<EigenBranch>,
    },
    /// Full operator on the `registers * target_dim` space.
    Dense {
        registers: usize,
        target_dim: usize,
        matrix: ComplexMatrix,
    },
}

impl JointState {
    pub fn registers(&self) -> usize {
        match self {
            JointState::Sliced { registers, .. } | JointState::Dense { registers, .. } => {
                *registers
            }
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            JointState::Sliced { branches, .. } => branches.first().map_or(0, |b| b.vector.len()),
            JointState::Dense { target_dim, .. } => *target_dim,
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        match self {
            JointState::Dense { matrix, .. } => matrix.clone(),
            JointState::Sliced {
                registers,
                branches,
            } => {
                let d = self.target_dim();
                let mut acc = ComplexMatrix::zeros(registers * d);
                for b in branches {
                    let term = tensor(
                        &ComplexMatrix::outer(&b.register),
                        &ComplexMatrix::outer(&b.vector),
                    );
                    acc = &acc + &term.scale_real(b.weight);
                }
                acc
            }
        }
    }

    /// Probability of each register outcome.
    pub fn register_probabilities(&self) -> Vec<f64> {
        let t = self.registers();
        match self {
            JointState::Sliced { branches, .. } => {
                let mut p = vec![0.0; t];
                for b in branches {
                    for (q, amp) in b.register.iter().enumerate() {
                        p[q] += b.weight * amp.norm_sqr();
                    }
                }
                p
            }
            JointState::Dense {
                target_dim, matrix, ..
            } => (0..t)
                .map(|q| {
                    (0..*target_dim)
                        .map(|k| matrix.get(q * target_dim + k, q * target_dim + k).re)
                        .sum()
                })
                .collect(),
        }
    }

    /// `Σ_q g(q) <q| J |q>`: the unnormalised target state left after a
    /// measurement that keeps outcome `q` with weight `g(q)`.
    pub fn weighted_target(&self, g: impl Fn(usize) -> f64) -> ComplexMatrix {
        let t = self.registers();
        let d = self.target_dim();
        match self {
            JointState::Sliced { branches, .. } => {
                let mut acc = ComplexMatrix::zeros(d);
                for b in branches {
                    let w: f64 = (0..t).map(|q| g(q) * b.register[q].norm_sqr()).sum();
                    acc = &acc + &ComplexMatrix::outer(&b.vector).scale_real(b.weight * w);
                }
                acc
            }
            JointState::Dense { matrix, .. } => {
                let m = matrix.as_dmatrix();
                let mut acc = DMatrix::<C64>::zeros(d, d);
                for q in 0..t {
                    let gq = g(q);
                    if gq != 0.0 {
                        acc += m.view((q * d, q * d), (d, d)) * C64::new(gq, 0.0);
                    }
                }
                ComplexMatrix::from_raw(acc)
            }
        }
    }

    /// Register distribution conditioned on target basis vector `v`:
    /// `p(q | v) ∝ <q, v| J |q, v>`.
    fn conditional_probabilities(&self, v: &DVector<C64>) -> Vec<f64> {
        let joint = self.joint_probabilities(v);
        let marginal: f64 = joint.iter().sum();
        joint.iter().map(|x| x / marginal).collect()
    }

    fn joint_probabilities(&self, v: &DVector<C64>) -> Vec<f64> {
        let t = self.registers();
        let d = self.target_dim();
        match self {
            JointState::Sliced { branches, .. } => {
                let mut p = vec![0.0; t];
                for b in branches {
                    let overlap = b.vector.dotc(v).norm_sqr() * b.weight;
                    if overlap == 0.0 {
                        continue;
                    }
                    for (q, amp) in b.register.iter().enumerate() {
                        p[q] += overlap * amp.norm_sqr();
                    }
                }
                p
            }
            JointState::Dense { matrix, .. } => {
                let m = matrix.as_dmatrix();
                (0..t)
                    .map(|q| {
                        let block = m.view((q * d, q * d), (d, d));
                        (v.adjoint() * block * v)[(0, 0)].re
                    })
                    .collect()
            }
        }
    }
}

/// Register readout of one eigenbranch of the input.
#[derive(Clone, Debug)]
pub struct BranchReadout {
    pub weight: f64,
    pub vector: DVector<C64>,
    pub distribution: PhaseDistribution,
}

impl BranchReadout {
    pub fn estimate(&self) -> f64 {
        readout_argmax(&self.distribution)
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vector)
    }
}

/// Result of one phase-estimation run (before the register is measured).
#[derive(Clone, Debug)]
pub struct IqpeOutcome {
    pub distribution: PhaseDistribution,
    pub joint: JointState,
    pub config: IqpeConfig,
    pub(crate) basis: Vec<CommonEigenvector>,
}

impl IqpeOutcome {
    /// Per-eigenbranch register distributions for every input eigenvector of
    /// non-zero weight, in the common eigenbasis of generator and input.
    pub fn branches(&self) -> Result<Vec<BranchReadout>> {
        let grid = self.config.grid();
        self.basis
            .iter()
            .filter(|b| b.weight > 1e-14)
            .map(|b| {
                let probs = self.joint.conditional_probabilities(&b.vector);
                Ok(BranchReadout {
                    weight: b.weight,
                    vector: b.vector.clone(),
                    distribution: PhaseDistribution::new(probs, grid.clone())?,
                })
            })
            .collect()
    }
}

/// `F^dag` on the register: `|ι> -> T^{-1/2} Σ_q e^{-2πi ι q / T} |q>`.
pub fn inverse_qft(v: &DVector<C64>) -> DVector<C64> {
    fourier(v, -1.0)
}

/// `F`: `|ι> -> T^{-1/2} Σ_q e^{2πi ι q / T} |q>`.
pub fn qft(v: &DVector<C64>) -> DVector<C64> {
    fourier(v, 1.0)
}

fn fourier(v: &DVector<C64>, sign: f64) -> DVector<C64> {
    let t = v.len();
    let twiddle: Vec<C64> = (0..t)
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * k as f64 / t as f64))
        .collect();
    let norm = (t as f64).sqrt().recip();
    DVector::from_iterator(
        t,
        (0..t).map(|q| {
            let mut acc = C64::default();
            for (i, x) in v.iter().enumerate() {
                acc += x * twiddle[(i * q) % t];
            }
            acc * norm
        }),
    )
}

fn fourier_matrix(t: usize, sign: f64) -> DMatrix<C64> {
    let norm = (t as f64).sqrt().recip();
    DMatrix::from_fn(t, t, |q, i| {
        C64::from_polar(norm, sign * 2.0 * PI * ((i * q) % t) as f64 / t as f64)
    })
}

fn apply_register_unitary(joint: &ComplexMatrix, f: &DMatrix<C64>, d: usize) -> ComplexMatrix {
    let lifted = ComplexMatrix::from_raw(f.kronecker(&DMatrix::<C64>::identity(d, d)));
    &(&lifted * joint) * &lifted.adjoint()
}

/// Runs phase estimation of `evolution` on `input`.
///
/// Exact evolutions with an input that commutes with the generator are
/// simulated one eigenbranch at a time as pure register vectors; anything
/// else goes through the dense joint operator.
pub fn iqpe_run(
    evolution: &mut dyn ConditionalEvolution,
    input: &DensityOperator,
    cfg: &IqpeConfig,
) -> Result<IqpeOutcome> {
    let d = evolution.dim();
    if input.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "input dimension {} vs evolution dimension {d}",
            input.dim()
        )));
    }
    let t = cfg.registers();
    let init = prepare_init(t, cfg.init());
    let generator_spectrum = match evolution.exact_spectrum() {
        Some(spec) => spec.clone(),
        None => spectral_decompose(evolution.generator())?,
    };
    let basis = common_eigenbasis(&generator_spectrum, input.matrix())?;
    let commuting = evolution.generator().commutator_norm(input.matrix()) <= SLICE_COMMUTATOR_TOL;

    let joint = if evolution.exact_spectrum().is_some() && commuting {
        let branches = basis
            .iter()
            .filter(|b| b.weight > 1e-14)
            .map(|b| {
                let phase = b.generator_eigenvalue * cfg.time();
                let evolved = DVector::from_iterator(
                    t,
                    init.iter()
                        .enumerate()
                        .map(|(i, a)| a * C64::from_polar(1.0, phase * i as f64)),
                );
                EigenBranch {
                    weight: b.weight,
                    generator_eigenvalue: b.generator_eigenvalue,
                    vector: b.vector.clone(),
                    register: inverse_qft(&evolved),
                }
            })
            .collect();
        JointState::Sliced {
            registers: t,
            branches,
        }
    } else {
        let start = tensor(&ComplexMatrix::outer(&init), input.matrix());
        let evolved = evolution.apply_controlled(&start, t, cfg.time())?;
        JointState::Dense {
            registers: t,
            target_dim: d,
            matrix: apply_register_unitary(&evolved, &fourier_matrix(t, -1.0), d),
        }
    };

    let probabilities = joint.register_probabilities();
    Ok(IqpeOutcome {
        distribution: PhaseDistribution::new(probabilities, cfg.grid())?,
        joint,
        config: *cfg,
        basis,
    })
}

/// Runs the phase-estimation circuit backwards: forward Fourier transform,
/// then the controlled evolution with negated time.
pub fn iqpe_uncompute(
    evolution: &mut dyn ConditionalEvolution,
    joint: &JointState,
    cfg: &IqpeConfig,
) -> Result<JointState> {
    match joint {
        JointState::Sliced {
            registers,
            branches,
        } => {
            let branches = branches
                .iter()
                .map(|b| {
                    let restored = qft(&b.register);
                    let phase = -b.generator_eigenvalue * cfg.time();
                    let register = DVector::from_iterator(
                        *registers,
                        restored
                            .iter()
                            .enumerate()
                            .map(|(i, a)| a * C64::from_polar(1.0, phase * i as f64)),
                    );
                    EigenBranch {
                        register,
                        ..b.clone()
                    }
                })
                .collect();
            Ok(JointState::Sliced {
                registers: *registers,
                branches,
            })
        }
        JointState::Dense {
            registers,
            target_dim,
            matrix,
        } => {
            let unfourier =
                apply_register_unitary(matrix, &fourier_matrix(*registers, 1.0), *target_dim);
            let matrix = evolution.apply_controlled(&unfourier, *registers, -cfg.time())?;
            Ok(JointState::Dense {
                registers: *registers,
                target_dim: *target_dim,
                matrix,
            })
        }
    }
}
