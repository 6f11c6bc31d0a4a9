//! Complex linear algebra, Hermitian eigendecomposition and seeded sampling.

mod evd;
mod matrix;
mod rng;

pub use evd::{hermitian_evd, HermitianEigen, MAX_EVD_DIM};
pub use matrix::{CMatrix, CVector};
pub use rng::SimRng;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Unit-norm tolerance applied to precoders and codewords.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Matrix with i.i.d. `CN(0, variance)` entries: real and imaginary parts
/// independent `N(0, variance / 2)`.
pub fn complex_gaussian<T: Real>(
    rows: usize,
    cols: usize,
    variance: T,
    rng: &mut SimRng,
) -> Result<CMatrix<T>> {
    if !(variance >= T::zero()) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "variance must be finite and >= 0, got {variance}"
        )));
    }
    let sd = (variance / T::lit(2.0)).sqrt();
    let data = (0..rows * cols)
        .map(|_| {
            let re: T = rng.normal();
            let im: T = rng.normal();
            Complex::new(re * sd, im * sd)
        })
        .collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Uniformly distributed unit vector in `C^n`.
pub fn random_unit_vector<T: Real>(n: usize, rng: &mut SimRng) -> CVector<T> {
    loop {
        let g = complex_gaussian(n, 1, T::one(), rng).expect("unit variance");
        let v = CVector::new(g.as_slice().to_vec());
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

pub(crate) fn check_unit<T: Real>(w: &CVector<T>) -> Result<()> {
    let n = w.norm();
    if (n - T::one()).abs() > T::tol(UNIT_NORM_TOL, 16.0) || !n.is_finite() {
        return Err(Error::NonUnit(n.as_f64()));
    }
    Ok(())
}

/// `sqrt(1 - |w1^dagger w2|^2)` between the lines spanned by two unit vectors.
pub fn chordal_distance<T: Real>(w1: &CVector<T>, w2: &CVector<T>) -> Result<T> {
    if w1.len() != w2.len() {
        return Err(Error::Dimension(format!(
            "chordal distance between lengths {} and {}",
            w1.len(),
            w2.len()
        )));
    }
    check_unit(w1)?;
    check_unit(w2)?;
    let overlap = w1.dot(w2).norm_sqr().min(T::one());
    Ok((T::one() - overlap).max(T::zero()).sqrt())
}
