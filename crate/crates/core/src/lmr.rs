//! Density matrix exponentiation with the swap trick.
//!
//! One step consumes a fresh copy of `rho` in register A, applies
//! `e^{i S dt}` to `rho ⊗ sigma` and discards register A:
//!
//! ```text
//! sigma -> Tr_A[ e^{iS dt} (rho ⊗ sigma) e^{-iS dt} ]
//!        = cos²(dt) sigma + sin²(dt) rho + i sin(dt) cos(dt) [rho, sigma]
//!        = sigma + i dt [rho, sigma] + O(dt²)
//! ```
//!
//! Repeating `n` times with `dt = t / n` approximates `e^{i rho t} sigma e^{-i rho t}`
//! with trace-distance error `O(t² / n)`.

use nalgebra::DMatrix;

use crate::densop::{
    matrix_function, partial_trace, spectral_decompose, swap_operator, tensor, ComplexMatrix,
    DensityOperator, C64,
};
use crate::error::{Error, Result};

/// Step count and total time for one exponentiation, plus a running copy counter.
#[derive(Clone, Debug, PartialEq)]
pub struct LmrConfig {
    pub total_time: f64,
    pub steps: usize,
    /// Copies of the resource state consumed so far through this config.
    pub copies_consumed: usize,
    /// When true a controlled evolution reuses each copy across all control
    /// branches; otherwise every branch draws its own copies.
    pub share_copies: bool,
}

impl LmrConfig {
    pub fn new(total_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("LMR needs at least one step".into()));
        }
        if !total_time.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "non-finite LMR time {total_time}"
            )));
        }
        Ok(Self {
            total_time,
            steps,
            copies_consumed: 0,
            share_copies: true,
        })
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Same step count with a different total time and a fresh counter.
    pub fn with_time(&self, total_time: f64) -> Self {
        Self {
            total_time,
            copies_consumed: 0,
            ..self.clone()
        }
    }
}

/// `e^{i S dt}` on `C^d ⊗ C^d`.
fn swap_propagator(d: usize, dt: f64) -> Result<ComplexMatrix> {
    let s = swap_operator(d)?;
    matrix_function(s.matrix(), |x| C64::from_polar(1.0, x * dt))
}

fn swap_channel(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    propagator: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let d = rho.dim();
    let joint = &(propagator * &tensor(rho, sigma)) * &propagator.adjoint();
    partial_trace(&joint, &[d, d], &[1])
}

/// One exact swap-trick step.
pub fn lmr_step(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    dt: f64,
) -> Result<DensityOperator> {
    rho.check_same_dim(sigma)?;
    let propagator = swap_propagator(rho.dim(), dt)?;
    DensityOperator::new(swap_channel(rho.matrix(), sigma.matrix(), &propagator)?)
}

/// `cfg.steps` swap-trick steps of length `cfg.dt()`; returns the evolved
/// state and the number of copies of `rho` consumed by this call.
pub fn lmr_evolve(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    cfg: &mut LmrConfig,
) -> Result<(DensityOperator, usize)> {
    rho.check_same_dim(sigma)?;
    let propagator = swap_propagator(rho.dim(), cfg.dt())?;
    let mut state = sigma.matrix().clone();
    for _ in 0..cfg.steps {
        state = swap_channel(rho.matrix(), &state, &propagator)?.hermitian_part();
    }
    cfg.copies_consumed += cfg.steps;
    Ok((DensityOperator::new(state)?, cfg.steps))
}

/// `e^{i rho t} sigma e^{-i rho t}` computed from the spectrum of `rho`.
pub fn exact_evolution(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    t: f64,
) -> Result<DensityOperator> {
    rho.check_same_dim(sigma)?;
    let u = matrix_function(rho.matrix(), |x| C64::from_polar(1.0, x * t))?;
    DensityOperator::new(&(&u * sigma.matrix()) * &u.adjoint())
}

/// Applies `Σ_ι |ι><ι| ⊗ E_ι` to a joint control ⊗ target operator, where
/// `E_ι` is the LMR approximation of `e^{i rho t ι / registers}`.
///
/// Every step feeds one shared copy of `rho` to all branches, so block
/// `(ι, ι')` evolves under `J -> Tr_A[V_ι (rho ⊗ J) V_ι'^dag]` with
/// `V_ι = e^{i S t ι / (registers n)}`. Because `S² = I` this reduces to
///
/// ```text
/// cos a cos b J + sin a sin b Tr(J) rho + i sin a cos b rho J - i cos a sin b J rho
/// ```
///
/// which is evaluated block by block in the eigenbasis of `rho`. `joint`
/// need not be positive (intermediate operators of a larger circuit are fine).
pub fn lmr_controlled_evolve(
    rho: &DensityOperator,
    joint: &ComplexMatrix,
    registers: usize,
    t: f64,
    cfg: &mut LmrConfig,
) -> Result<ComplexMatrix> {
    let d = rho.dim();
    if registers == 0 || joint.dim() != registers * d {
        return Err(Error::DimensionMismatch(format!(
            "joint dimension {} is not {registers} x {d}",
            joint.dim()
        )));
    }
    let spec = spectral_decompose(rho.matrix())?;
    let phi = spec.eigenvalues();
    let w = spec.eigenvectors().as_dmatrix();
    // block-diagonal I ⊗ W
    let mut big_w = DMatrix::<C64>::zeros(registers * d, registers * d);
    for r in 0..registers {
        big_w.view_mut((r * d, r * d), (d, d)).copy_from(w);
    }
    let mut state = big_w.adjoint() * joint.as_dmatrix() * &big_w;

    let n = cfg.steps;
    let angle = |branch: usize| t * branch as f64 / (registers as f64 * n as f64);
    let (sin, cos): (Vec<f64>, Vec<f64>) = (0..registers).map(|r| angle(r).sin_cos()).unzip();
    let i = C64::new(0.0, 1.0);

    for _ in 0..n {
        for a in 0..registers {
            for b in 0..registers {
                let (sa, ca, sb, cb) = (sin[a], cos[a], sin[b], cos[b]);
                let mut trace = C64::default();
                for k in 0..d {
                    trace += state[(a * d + k, b * d + k)];
                }
                for l in 0..d {
                    for k in 0..d {
                        let coef = ca * cb + i * (sa * cb * phi[k] - ca * sb * phi[l]);
                        let entry = &mut state[(a * d + k, b * d + l)];
                        *entry *= coef;
                        if k == l {
                            *entry += trace * (sa * sb * phi[k]);
                        }
                    }
                }
            }
        }
    }

    cfg.copies_consumed += if cfg.share_copies { n } else { n * registers };
    Ok(ComplexMatrix::from_raw(&big_w * state * big_w.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densop::random::{
        density_in_basis, random_density, random_spectrum, random_unitary,
    };
    use crate::densop::trace_distance;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> DensityOperator {
        DensityOperator::new(ComplexMatrix::new(2, vec![C64::new(0.5, 0.0); 4]).unwrap()).unwrap()
    }

    fn first_order(rho: &DensityOperator, sigma: &DensityOperator, dt: f64) -> ComplexMatrix {
        let comm = rho.matrix().commutator(sigma.matrix());
        sigma.matrix() + &comm.scale(C64::new(0.0, dt))
    }

    #[test]
    fn zero_step_leaves_target_unchanged() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let out = lmr_step(&rho, &plus(), 0.0).unwrap();
        assert!(out.matrix().max_abs_diff(plus().matrix()) < 1e-15);
    }

    #[test]
    fn commuting_step_error_within_dt_squared() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let sigma = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        for dt in [0.1, 0.05, 0.01] {
            let out = lmr_step(&rho, &sigma, dt).unwrap();
            assert!(trace_distance(&out, &sigma).unwrap() <= dt * dt);
        }
    }

    #[test]
    fn step_remainder_is_second_order() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let sigma = plus();
        let mut scaled = Vec::new();
        for dt in [0.1, 0.05, 0.025] {
            let out = lmr_step(&rho, &sigma, dt).unwrap();
            let diff = out.matrix() - &first_order(&rho, &sigma, dt);
            let dist = crate::densop::trace_norm_half(&diff.hermitian_part()).unwrap();
            scaled.push(dist / (dt * dt));
        }
        // Remainder/dt² settles to a constant C as dt halves.
        let c = scaled[2];
        assert!(c < 1.0, "C = {c}");
        for s in &scaled {
            assert!((s - c).abs() / c < 0.01, "{scaled:?}");
        }
    }

    #[test]
    fn evolve_zero_time_single_step() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let mut cfg = LmrConfig::new(0.0, 1).unwrap();
        let (out, copies) = lmr_evolve(&rho, &plus(), &mut cfg).unwrap();
        assert!(out.matrix().max_abs_diff(plus().matrix()) < 1e-15);
        assert_eq!(copies, 1);
        assert_eq!(cfg.copies_consumed, 1);
    }

    #[test]
    fn evolve_error_shrinks_fourfold() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let exact = exact_evolution(&rho, &plus(), 1.0).unwrap();
        let errors: Vec<f64> = [4, 16, 64]
            .iter()
            .map(|&n| {
                let mut cfg = LmrConfig::new(1.0, n).unwrap();
                let (out, _) = lmr_evolve(&rho, &plus(), &mut cfg).unwrap();
                trace_distance(&out, &exact).unwrap()
            })
            .collect();
        assert!(errors[2] < errors[1] && errors[1] < errors[0]);
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.5..4.5).contains(&ratio), "{errors:?}");
        }
    }

    #[test]
    fn commuting_evolution_follows_closed_form() {
        // sigma_{k+1} = cos² sigma_k + sin² rho when everything commutes
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let sigma = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        for n in [4usize, 32, 256] {
            let mut cfg = LmrConfig::new(1.0, n).unwrap();
            let (out, _) = lmr_evolve(&rho, &sigma, &mut cfg).unwrap();
            let keep = cfg.dt().cos().powi(2 * n as i32);
            let expected = rho.matrix() + &(sigma.matrix() - rho.matrix()).scale_real(keep);
            assert!(out.matrix().max_abs_diff(&expected) < 1e-12);
            let err = trace_distance(&out, &sigma).unwrap();
            let td = trace_distance(&rho, &sigma).unwrap();
            assert!(err <= td / n as f64 + 1e-12);
        }
    }

    #[test]
    fn controlled_branches() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let target = plus();
        let registers = 4;
        let t = 1.3;
        let steps = 50;
        let control = |idx: usize| DensityOperator::basis(registers, idx).unwrap();

        // |0><0| branch: identity
        let joint = tensor(control(0).matrix(), target.matrix());
        let mut cfg = LmrConfig::new(t, steps).unwrap();
        let out = lmr_controlled_evolve(&rho, &joint, registers, t, &mut cfg).unwrap();
        assert!(out.max_abs_diff(&joint) < 1e-13);

        // |T-1><T-1| branch matches lmr_evolve at t (T-1)/T
        let joint = tensor(control(registers - 1).matrix(), target.matrix());
        let out = lmr_controlled_evolve(&rho, &joint, registers, t, &mut cfg).unwrap();
        let reduced = partial_trace(&out, &[registers, 2], &[1]).unwrap();
        let mut single =
            LmrConfig::new(t * (registers - 1) as f64 / registers as f64, steps).unwrap();
        let (expected, _) = lmr_evolve(&rho, &target, &mut single).unwrap();
        assert!(reduced.max_abs_diff(expected.matrix()) < 1e-12);

        // uniform classical mixture maps to the mixture of branch outputs
        let mixed = tensor(
            DensityOperator::maximally_mixed(registers)
                .unwrap()
                .matrix(),
            target.matrix(),
        );
        let out = lmr_controlled_evolve(&rho, &mixed, registers, t, &mut cfg).unwrap();
        let mut expected = ComplexMatrix::zeros(registers * 2);
        for idx in 0..registers {
            let branch = tensor(control(idx).matrix(), target.matrix());
            let evolved = lmr_controlled_evolve(&rho, &branch, registers, t, &mut cfg).unwrap();
            expected = &expected + &evolved.scale_real(1.0 / registers as f64);
        }
        assert!(out.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn copy_accounting() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let joint = tensor(
            DensityOperator::maximally_mixed(4).unwrap().matrix(),
            plus().matrix(),
        );
        let mut cfg = LmrConfig::new(1.0, 10).unwrap();
        lmr_controlled_evolve(&rho, &joint, 4, 1.0, &mut cfg).unwrap();
        assert_eq!(cfg.copies_consumed, 10);
        cfg.share_copies = false;
        lmr_controlled_evolve(&rho, &joint, 4, 1.0, &mut cfg).unwrap();
        assert_eq!(cfg.copies_consumed, 10 + 40);
        lmr_evolve(&rho, &plus(), &mut cfg).unwrap();
        assert_eq!(cfg.copies_consumed, 60);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let other = DensityOperator::maximally_mixed(4).unwrap();
        assert!(lmr_step(&rho, &other, 0.1).is_err());
        let mut cfg = LmrConfig::new(1.0, 2).unwrap();
        assert!(lmr_controlled_evolve(&rho, other.matrix(), 3, 1.0, &mut cfg).is_err());
        assert!(LmrConfig::new(1.0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn outputs_are_density_operators(seed: u64, d in prop::sample::select(vec![2usize, 4]), n in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, d);
            let sigma = random_density(&mut rng, d);
            let mut cfg = LmrConfig::new(1.0, n).unwrap();
            let (out, copies) = lmr_evolve(&rho, &sigma, &mut cfg).unwrap();
            prop_assert_eq!(copies, n);
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            prop_assert!(*out.spectrum().eigenvalues().last().unwrap() >= -1e-8);
        }

        #[test]
        fn controlled_block_matches_explicit_swap(seed: u64, t in -2.0f64..2.0) {
            // One step, two branches, against Tr_A[V_a (rho ⊗ J) V_b^dag] built from S.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(&mut rng, 2);
            let rho = density_in_basis(&u, &random_spectrum(&mut rng, 2));
            let joint = random_density(&mut rng, 4);
            let mut cfg = LmrConfig::new(t, 1).unwrap();
            let out = lmr_controlled_evolve(&rho, joint.matrix(), 2, t, &mut cfg).unwrap();
            let v = [swap_propagator(2, 0.0).unwrap(), swap_propagator(2, t / 2.0).unwrap()];
            for a in 0..2 {
                for b in 0..2 {
                    let block = ComplexMatrix::from_raw(joint.matrix().as_dmatrix().view((2 * a, 2 * b), (2, 2)).into_owned());
                    let lifted = &(&v[a] * &tensor(rho.matrix(), &block)) * &v[b].adjoint();
                    let expected = partial_trace(&lifted, &[2, 2], &[1]).unwrap();
                    let got = ComplexMatrix::from_raw(out.as_dmatrix().view((2 * a, 2 * b), (2, 2)).into_owned());
                    prop_assert!(got.max_abs_diff(&expected) < 1e-12);
                }
            }
        }
    }
}
