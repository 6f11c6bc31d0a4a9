//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported matrix order.
pub const MAX_EVD_DIM: usize = 16;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
///
/// Each eigenvector is unit norm with its largest-magnitude entry real and
/// nonnegative.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<CVector<T>>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn principal(&self) -> (T, &CVector<T>) {
        (self.values[0], &self.vectors[0])
    }

    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + v[i] * v[j].conj() * *lambda;
                }
            }
        }
        out
    }
}

pub fn hermitian_evd<T: Real>(a: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "EVD needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 || n > MAX_EVD_DIM {
        return Err(Error::Dimension(format!(
            "EVD supports orders 1..={MAX_EVD_DIM}, got {n}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let scale = a.frobenius_norm();
    let defect = a.hermitian_defect();
    if defect > T::tol(1e-10, 64.0) * scale.max(T::one()) {
        return Err(Error::NotHermitian(defect.as_f64()));
    }

    // Work on the exactly Hermitian part.
    let mut m = CMatrix::zeros(n, n);
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = (a[(i, j)] + a[(j, i)].conj()) * half;
        }
    }
    let mut v = CMatrix::<T>::identity(n);
    let threshold = T::tol(1e-12, 4.0) * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .re
            .partial_cmp(&m[(i, i)].re)
            .unwrap()
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = order
        .iter()
        .map(|&k| CVector::new((0..n).map(|r| v[(r, k)]).collect()).phase_normalized())
        .collect();
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `m[p][q]` with a unitary `U = D R`: a diagonal phase on
/// column `q` that makes the pivot real, then a real plane rotation.
fn rotate<T: Real>(m: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let n = m.rows();
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag.is_zero() {
        return;
    }
    let phase = apq / mag;
    let phase_conj = phase.conj();
    for k in 0..n {
        m[(k, q)] = m[(k, q)] * phase_conj;
        v[(k, q)] = v[(k, q)] * phase_conj;
    }
    for k in 0..n {
        m[(q, k)] = m[(q, k)] * phase;
    }

    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let two = T::lit(2.0);
    let tau = (aqq - app) / (two * mag);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    for k in 0..n {
        let kp = m[(k, p)];
        let kq = m[(k, q)];
        m[(k, p)] = kp * c - kq * s;
        m[(k, q)] = kp * s + kq * c;
        let vp = v[(k, p)];
        let vq = v[(k, q)];
        v[(k, p)] = vp * c - vq * s;
        v[(k, q)] = vp * s + vq * c;
    }
    for k in 0..n {
        let pk = m[(p, k)];
        let qk = m[(q, k)];
        m[(p, k)] = pk * c - qk * s;
        m[(q, k)] = pk * s + qk * c;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)].im = T::zero();
    m[(q, q)].im = T::zero();
}
