//! Seeded random states and unitaries.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::matrix::{ComplexMatrix, C64};
use super::state::{DensityOperator, UnitaryOperator};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> UnitaryOperator {
    let qr = ginibre(rng, d).qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        col *= phase;
    }
    UnitaryOperator::new(ComplexMatrix::from_raw(q)).expect("QR factor is unitary")
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Hilbert-Schmidt random density operator.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityOperator {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(ComplexMatrix::from_raw(m / C64::new(tr, 0.0)))
        .expect("G G^dag / Tr is a density operator")
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_raw(ginibre(rng, d)).hermitian_part()
}

/// `V diag(spectrum) V^dag`.
pub fn density_in_basis(basis: &UnitaryOperator, spectrum: &[f64]) -> DensityOperator {
    let v = basis.matrix();
    let m = &(v * &ComplexMatrix::from_real_diagonal(spectrum)) * &v.adjoint();
    DensityOperator::new(m).expect("rotated spectrum is a density operator")
}
