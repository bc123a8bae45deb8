//! Classical simulation of a quantum fidelity-estimation algorithm for
//! commuting density matrices.
//!
//! The estimator chains four stages, each simulated exactly on small systems:
//!
//! 1. [`lmr`]: density matrix exponentiation with the swap trick, turning
//!    copies of `rho` into the channel `e^{i rho t} (.) e^{-i rho t}`.
//! 2. [`iqpe`]: phase estimation driven by that evolution, reading the
//!    spectrum of `rho` onto a grid.
//! 3. [`sqrtprep`]: a controlled rotation and post-selection that prepares
//!    `sqrt(rho) / Tr sqrt(rho)` and an estimate of `Tr sqrt(rho)`.
//! 4. [`interferometer`]: a Mach–Zehnder circuit whose visibility and phase
//!    encode `Tr sqrt(rho1 rho2)`.
//!
//! [`pipeline`] wires the stages together and [`oracle`] provides brute-force
//! reference values for every stage.

pub mod cli;
pub mod densop;
pub mod error;
pub mod interferometer;
pub mod iqpe;
pub mod lmr;
pub mod oracle;
pub mod pipeline;
pub mod sqrtprep;

pub use densop::{ComplexMatrix, DensityOperator, SpectralDecomposition, UnitaryOperator, C64};
pub use error::{Error, Result};
