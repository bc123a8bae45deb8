use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Hermiticity required of inputs to the eigensolver.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-8;

/// Eigenvalues at or above `-NEGATIVITY_TOL` are clamped to zero under `sqrt`.
pub const NEGATIVITY_TOL: f64 = 1e-10;

/// Real spectrum and orthonormal eigenvectors of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order and column `k` of
/// `eigenvectors` belongs to `eigenvalues[k]`. Within a degenerate
/// eigenspace the basis is whatever the solver returned.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.as_dmatrix().column(k).into_owned()
    }

    /// `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn apply<F>(&self, f: F) -> ComplexMatrix
    where
        F: Fn(f64) -> C64,
    {
        let v = self.eigenvectors.as_dmatrix();
        let d = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&x| f(x)));
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[k];
        }
        ComplexMatrix::from_raw(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| C64::new(x, 0.0))
    }

    /// Max-entry deviation of `V^dag V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.eigenvectors.as_dmatrix();
        let gram = ComplexMatrix::from_raw(v.adjoint() * v);
        gram.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }
}

/// Eigen-decomposes a Hermitian matrix.
///
/// The input is symmetrised before solving, so deviations below
/// [`HERMITIAN_INPUT_TOL`] are silently absorbed.
pub fn spectral_decompose(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = h.hermitian_part();
    let eig = SymmetricEigen::new(sym.into_dmatrix());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver order inside ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_raw(vectors),
    })
}

/// `f(h)` evaluated in the eigenbasis of the Hermitian matrix `h`.
pub fn matrix_function<F>(h: &ComplexMatrix, f: F) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> C64,
{
    Ok(spectral_decompose(h)?.apply(f))
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = spectral_decompose(h)?;
    sqrt_of_spectrum(&spec)
}

fn sqrt_of_spectrum(spec: &SpectralDecomposition) -> Result<ComplexMatrix> {
    if let Some(&min) = spec.eigenvalues().last() {
        if min < -NEGATIVITY_TOL {
            return Err(Error::Negativity { eigenvalue: min });
        }
    }
    Ok(spec.apply(|x| C64::new(x.max(0.0).sqrt(), 0.0)))
}

/// Sum of square roots of the (clamped) spectrum, i.e. `Tr sqrt(h)`.
pub fn trace_of_sqrt(spec: &SpectralDecomposition) -> Result<f64> {
    let mut total = 0.0;
    for &x in spec.eigenvalues() {
        if x < -NEGATIVITY_TOL {
            return Err(Error::Negativity { eigenvalue: x });
        }
        total += x.max(0.0).sqrt();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_spectrum_sorted_descending() {
        let h = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let spec = spectral_decompose(&h).unwrap();
        assert_eq!(spec.eigenvalues(), &[0.75, 0.25]);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = ComplexMatrix::new(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let spec = spectral_decompose(&x).unwrap();
        assert!((spec.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((spec.eigenvalues()[1] + 1.0).abs() < 1e-14);
        assert!(spec.reconstruct().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::new(2, vec![c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert!(matches!(
            spectral_decompose(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn function_at_zero_time_is_identity() {
        let h = ComplexMatrix::from_real_diagonal(&[0.1, 0.2, 0.7]);
        let u = matrix_function(&h, |x| C64::from_polar(1.0, 0.0 * x)).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn sqrt_examples() {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let root = psd_sqrt(&half).unwrap();
        assert!(
            root.max_abs_diff(
                &ComplexMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2)
            ) < 1e-15
        );

        let root = psd_sqrt(&ComplexMatrix::from_real_diagonal(&[0.25, 0.75])).unwrap();
        assert!((root.get(0, 0).re - 0.5).abs() < 1e-7);
        assert!((root.get(1, 1).re - 0.8660254).abs() < 1e-7);
    }

    #[test]
    fn sqrt_clamps_tiny_negatives_and_rejects_large_ones() {
        let tiny = ComplexMatrix::from_real_diagonal(&[1.0, -5e-11]);
        let root = psd_sqrt(&tiny).unwrap();
        assert_eq!(root.get(1, 1), c(0.0, 0.0));
        let neg = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&neg), Err(Error::Negativity { .. })));
    }
}
