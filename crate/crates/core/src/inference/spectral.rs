use nalgebra::DMatrix;

use crate::stats::Mat;

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(phi: &Mat<f64>) -> f64 {
    assert!(phi.is_square(), "spectral radius needs a square matrix");
    let n = phi.rows();
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_row_slice(n, n, phi.as_slice());
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}
