//! Dense complex linear algebra and quantum-state primitives.

mod format;
mod matrix;
pub mod random;
mod spectral;
mod state;

pub use format::{parse_matrix_str, read_matrix, write_matrix, write_matrix_string};
pub use matrix::{ComplexMatrix, C64};
pub use spectral::{
    matrix_function, psd_sqrt, spectral_decompose, trace_of_sqrt, SpectralDecomposition,
    HERMITIAN_INPUT_TOL, NEGATIVITY_TOL,
};
pub use state::{
    partial_trace, swap_operator, tensor, tensor_density, trace_distance, trace_norm_half,
    DensityOperator, UnitaryOperator, DENSITY_EIGEN_TOL, DENSITY_HERMITIAN_TOL, DENSITY_TRACE_TOL,
    UNITARY_TOL,
};
