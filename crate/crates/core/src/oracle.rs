//! Brute-force reference quantities computed directly from the matrices.
//!
//! Fidelity follows the root convention `F = Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`,
//! so for pure states it equals `|<psi1|psi2>|` rather than its square.

use crate::densop::{psd_sqrt, spectral_decompose, trace_of_sqrt, DensityOperator};
use crate::error::{Error, Result};

/// Default max-entry commutator norm below which two states count as commuting.
pub const DEFAULT_COMMUTATOR_TOL: f64 = 1e-8;

/// A pair of states together with the max-entry norm of their commutator.
#[derive(Clone, Debug)]
pub struct OraclePair {
    pub rho1: DensityOperator,
    pub rho2: DensityOperator,
    pub commutator_norm: f64,
}

impl OraclePair {
    pub fn new(rho1: DensityOperator, rho2: DensityOperator) -> Result<Self> {
        rho1.check_same_dim(&rho2)?;
        let commutator_norm = rho1.matrix().commutator_norm(rho2.matrix());
        Ok(Self {
            rho1,
            rho2,
            commutator_norm,
        })
    }

    pub fn commutes(&self, tol: f64) -> bool {
        self.commutator_norm <= tol
    }
}

/// Uhlmann root fidelity via two spectral decompositions.
pub fn fidelity_uhlmann(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    rho1.check_same_dim(rho2)?;
    let root1 = psd_sqrt(rho1.matrix())?;
    let inner = &(&root1 * rho2.matrix()) * &root1;
    let spec = spectral_decompose(&inner.hermitian_part())?;
    trace_of_sqrt(&spec)
}

/// `Tr sqrt(rho1 rho2)`, valid only for commuting states.
pub fn fidelity_commuting(rho1: &DensityOperator, rho2: &DensityOperator, tol: f64) -> Result<f64> {
    rho1.check_same_dim(rho2)?;
    let norm = rho1.matrix().commutator_norm(rho2.matrix());
    if norm > tol {
        return Err(Error::NonCommuting { norm });
    }
    // For commuting PSD operators the product is PSD; symmetrise away rounding.
    let product = &(rho1.matrix() * rho2.matrix()) + &(rho2.matrix() * rho1.matrix());
    let spec = spectral_decompose(&product.scale_real(0.5))?;
    trace_of_sqrt(&spec)
}

/// `Tr sqrt(rho)`, in `[1, sqrt(d)]` for a density operator.
pub fn trace_sqrt(rho: &DensityOperator) -> f64 {
    trace_of_sqrt(&rho.spectrum()).expect("density operator spectrum is non-negative")
}

/// `sqrt(rho) / Tr sqrt(rho)`.
pub fn normalized_sqrt(rho: &DensityOperator) -> Result<DensityOperator> {
    let root = psd_sqrt(rho.matrix())?;
    let tr = root.trace().re;
    DensityOperator::new(root.scale_real(1.0 / tr))
}
