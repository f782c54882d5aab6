//! Lanczos evaluation of exp(-i tau H) |v> for Hermitian actions supplied as
//! closures. The tridiagonal reduction is exponentiated through its
//! eigendecomposition; full reorthogonalization keeps the basis clean, so the
//! propagation is unitary to machine precision.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::Result;

/// y = exp(-i tau T) e_1 for real symmetric tridiagonal T.
fn expm_tridiag_e1(diag: &[f64], offdiag: &[f64], tau: f64) -> Result<Vec<C64>> {
    let k = diag.len();
    let mut t = Array2::<f64>::zeros((k, k));
    for (i, &d) in diag.iter().enumerate() {
        t[[i, i]] = d;
    }
    for (i, &b) in offdiag.iter().enumerate() {
        t[[i, i + 1]] = b;
        t[[i + 1, i]] = b;
    }
    let (vals, vecs) = t.eigh(UPLO::Lower)?;
    let mut y = vec![C64::new(0.0, 0.0); k];
    for (j, &lambda) in vals.iter().enumerate() {
        let phase = C64::new(0.0, -tau * lambda).exp();
        let amp = phase * vecs[[0, j]];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += amp * vecs[[i, j]];
        }
    }
    Ok(y)
}

/// exp(-i tau H) v for Hermitian H given by `apply`. Stops when the residual
/// estimate beta_{k+1} |y_k| drops below `tol`, or at `max_dim` vectors.
pub fn lanczos_expm<F>(mut apply: F, v: &Array1<C64>, tau: f64, tol: f64, max_dim: usize) -> Result<Array1<C64>>
where
    F: FnMut(&Array1<C64>) -> Array1<C64>,
{
    let nrm0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm0 < 1e-300 || tau == 0.0 {
        return Ok(v.clone());
    }
    let dim = v.len();
    let max_dim = max_dim.min(dim).max(1);
    let mut basis: Vec<Array1<C64>> = Vec::with_capacity(max_dim);
    basis.push(v.mapv(|z| z / nrm0));
    let mut alphas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut betas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut y: Vec<C64> = vec![C64::new(1.0, 0.0)];

    for k in 0..max_dim {
        let mut w = apply(&basis[k]);
        let alpha = basis[k]
            .iter()
            .zip(w.iter())
            .map(|(b, w)| (b.conj() * w).re)
            .sum::<f64>();
        alphas.push(alpha);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for b in &basis {
                let ov: C64 = b.iter().zip(w.iter()).map(|(b, w)| b.conj() * w).sum();
                ndarray::Zip::from(&mut w).and(b).for_each(|w, &b| *w -= ov * b);
            }
        }
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        y = expm_tridiag_e1(&alphas, &betas, tau)?;
        let residual = beta * y[k].norm();
        if residual <= tol || beta <= 1e-14 || k + 1 == max_dim {
            break;
        }
        betas.push(beta);
        basis.push(w.mapv(|z| z / beta));
    }

    let mut out = Array1::<C64>::zeros(dim);
    for (b, &c) in basis.iter().zip(y.iter()) {
        ndarray::Zip::from(&mut out).and(b).for_each(|o, &b| *o += c * b);
    }
    Ok(out.mapv(|z| z * nrm0))
}
