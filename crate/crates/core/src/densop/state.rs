use nalgebra::{DMatrix, DVector};

use super::matrix::{ComplexMatrix, C64};
use super::spectral::{spectral_decompose, SpectralDecomposition};
use crate::error::{Error, Result};

/// Max-entry Hermiticity deviation accepted for a density operator.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a density operator.
pub const DENSITY_EIGEN_TOL: f64 = 1e-10;
/// Trace deviation from one accepted for a density operator.
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
/// Max-entry deviation of `U^dag U` from the identity.
pub const UNITARY_TOL: f64 = 1e-9;

/// Trace-one positive semidefinite operator on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates `matrix` and stores its Hermitian part.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TRACE_TOL || trace.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::TraceNotOne { trace: trace.re });
        }
        let matrix = matrix.hermitian_part();
        let spec = spectral_decompose(&matrix)?;
        let min_eigenvalue = spec.eigenvalues().last().copied().unwrap_or(0.0);
        if min_eigenvalue < -DENSITY_EIGEN_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(populations))
    }

    /// `|psi><psi|` for a normalised vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        Self::new(ComplexMatrix::outer(&(psi / C64::new(norm, 0.0))))
    }

    /// Computational basis state `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        let mut pops = vec![0.0; dim];
        pops[index] = 1.0;
        Self::diagonal(&pops)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn spectrum(&self) -> SpectralDecomposition {
        spectral_decompose(&self.matrix).expect("density operator is Hermitian")
    }

    /// `U rho U^dag`.
    pub fn conjugate(&self, u: &UnitaryOperator) -> Result<Self> {
        self.matrix.check_same_dim(u.matrix())?;
        Self::new(&(u.matrix() * &self.matrix) * &u.matrix().adjoint())
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<()> {
        self.matrix.check_same_dim(&other.matrix)
    }
}

/// Square matrix with `U^dag U = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let gram = &matrix.adjoint() * &matrix;
        let deviation = gram.max_abs_diff(&ComplexMatrix::identity(matrix.dim()));
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(h, 0.),
                C64::new(h, 0.),
                C64::new(h, 0.),
                C64::new(-h, 0.),
            ],
        );
        Self {
            matrix: ComplexMatrix::from_raw(m),
        }
    }

    /// `diag(1, e^{i phi})`.
    pub fn phase(phi: f64) -> Self {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1., 0.),
                C64::default(),
                C64::default(),
                C64::from_polar(1.0, phi),
            ],
        );
        Self {
            matrix: ComplexMatrix::from_raw(m),
        }
    }
}

/// Kronecker product with `a` as the slow (left) index.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_raw(a.as_dmatrix().kronecker(b.as_dmatrix()))
}

pub fn tensor_density(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    DensityOperator {
        qubits: a.qubits + b.qubits,
        matrix: tensor(&a.matrix, &b.matrix),
    }
}

/// Traces out every subsystem not listed in `keep`.
///
/// `dims` lists subsystem dimensions from slowest to fastest index; the
/// kept subsystems appear in the result in their original order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {}",
            m.dim()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let out_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let env_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // strides[k] = product of dims after k
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let compose = |kept_index: usize, env_index: usize| -> usize {
        let mut full = 0;
        let mut rem = kept_index;
        for &k in kept.iter().rev() {
            full += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        let mut rem = env_index;
        for &k in traced.iter().rev() {
            full += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        full
    };

    let src = m.as_dmatrix();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for e in 0..env_dim {
        let rows: Vec<usize> = (0..out_dim).map(|i| compose(i, e)).collect();
        for (j, &cj) in rows.iter().enumerate() {
            for (i, &ci) in rows.iter().enumerate() {
                out[(i, j)] += src[(ci, cj)];
            }
        }
    }
    Ok(ComplexMatrix::from_raw(out))
}

/// Swap on `C^d ⊗ C^d`: `S|i>|j> = |j>|i>`.
pub fn swap_operator(d: usize) -> Result<UnitaryOperator> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("swap needs d >= 2, got {d}")));
    }
    let mut m = DMatrix::<C64>::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
        }
    }
    Ok(UnitaryOperator {
        matrix: ComplexMatrix::from_raw(m),
    })
}

/// `½ Σ |eig(a - b)|`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    a.check_same_dim(b)?;
    trace_norm_half(&(a.matrix() - b.matrix()))
}

/// Half the trace norm of a Hermitian matrix.
pub fn trace_norm_half(h: &ComplexMatrix) -> Result<f64> {
    let spec = spectral_decompose(h)?;
    Ok(0.5 * spec.eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}
