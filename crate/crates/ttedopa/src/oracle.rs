//! Brute-force validators, kept independent of the MPS machinery: dense
//! state-vector evolution for small TLS+chain instances and high-resolution
//! adaptive quadrature for measure moments. Operator matrices are rebuilt
//! locally on purpose so a bug in the MPO cannot hide here.

use ndarray::linalg::kron;
use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::chainmap::ChainCoefficients;
use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;
use crate::spectral::{InitialState, SystemModel, ThermalizedSpectralModel};
use crate::tensornet::krylov::lanczos_expm;

/// Hard cap 2 * 6^5 on the Hilbert dimension.
const DIM_CAP: usize = 2 * 6 * 6 * 6 * 6 * 6;
/// Below this, propagate through a cached dense eigendecomposition.
const EIG_CAP: usize = 4096;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn identity(d: usize) -> Array2<C64> {
    Array2::eye(d)
}

fn sz2() -> Array2<C64> {
    array![[c(1.0), c(0.0)], [c(0.0), c(-1.0)]]
}

fn sx2() -> Array2<C64> {
    array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
}

fn lower(d: usize) -> Array2<C64> {
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[[n - 1, n]] = c((n as f64).sqrt());
    }
    m
}

fn number(d: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_iter((0..d).map(|n| c(n as f64))))
}

/// Tensor product over all sites with `ops` placed at their positions and
/// identities elsewhere.
fn product_op(dims: &[usize], ops: &[(usize, &Array2<C64>)]) -> Array2<C64> {
    let mut acc = Array2::from_elem((1, 1), c(1.0));
    for (site, &d) in dims.iter().enumerate() {
        let factor = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, op)| (*op).clone())
            .unwrap_or_else(|| identity(d));
        acc = kron(&acc, &factor);
    }
    acc
}

/// True eigenpairs of a Hermitian matrix. The LAPACK binding hands back
/// conjugated eigenvector columns for complex input; undo that here so
/// callers get V with H V = V diag(vals).
fn eigh_hermitian(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    Ok((vals, vecs.map(|z| z.conj())))
}

/// Exact small-instance reference for TLS+chain dynamics.
pub struct DenseInstance {
    epsilon: f64,
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    g0: f64,
    fock: usize,
    state0: Array1<C64>,
    /// (eigenvalues, eigenvectors) of the dense H; absent above EIG_CAP.
    eig: Option<(Array1<f64>, Array2<C64>)>,
}

impl DenseInstance {
    pub fn new(
        sys: &SystemModel,
        coeffs: &ChainCoefficients,
        fock: usize,
        init: InitialState,
    ) -> Result<DenseInstance> {
        let n = coeffs.n_modes();
        if n == 0 {
            return Err(Error::config("dense oracle needs at least one chain mode"));
        }
        if fock < 2 {
            return Err(Error::config("Fock truncation must be at least 2"));
        }
        let dim = fock
            .checked_pow(n as u32)
            .and_then(|x| x.checked_mul(2))
            .filter(|&x| x <= DIM_CAP)
            .ok_or_else(|| {
                Error::config(format!(
                    "dense dimension 2*{fock}^{n} exceeds the cap {DIM_CAP}"
                ))
            })?;
        let boson_dim = dim / 2;
        let mut state0 = Array1::<C64>::zeros(dim);
        match init {
            InitialState::Excited => state0[0] = c(1.0),
            InitialState::PlusX => {
                let amp = c(std::f64::consts::FRAC_1_SQRT_2);
                state0[0] = amp;
                state0[boson_dim] = amp;
            }
        }
        let mut inst = DenseInstance {
            epsilon: sys.epsilon,
            omegas: coeffs.omegas.clone(),
            couplings: coeffs.couplings.clone(),
            g0: coeffs.g0,
            fock,
            state0,
            eig: None,
        };
        if dim <= EIG_CAP {
            let h = inst.build_dense();
            let herm_defect = (&h - &h.t().map(|z| z.conj()))
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            if herm_defect > 1e-12 {
                return Err(Error::numeric(format!(
                    "dense Hamiltonian not Hermitian, defect {herm_defect:.3e}"
                )));
            }
            inst.eig = Some(eigh_hermitian(&h)?);
        }
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.state0.len()
    }

    fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.fock; self.omegas.len() + 1];
        dims[0] = 2;
        dims
    }

    fn build_dense(&self) -> Array2<C64> {
        let dims = self.dims();
        let d = self.fock;
        let low = lower(d);
        let raise = low.t().map(|z| z.conj());
        let pos = &low + &raise;
        let num = number(d);
        let mut h = product_op(&dims, &[(0, &sz2())]) * c(0.5 * self.epsilon);
        let half_sx = sx2() * c(0.5);
        h = h + product_op(&dims, &[(0, &half_sx), (1, &pos)]) * c(self.g0);
        for (k, &w) in self.omegas.iter().enumerate() {
            h = h + product_op(&dims, &[(k + 1, &num)]) * c(w);
        }
        for (k, &g) in self.couplings.iter().enumerate() {
            let hop = product_op(&dims, &[(k + 1, &raise), (k + 2, &low)]);
            let hop = &hop + &hop.t().map(|z| z.conj());
            h = h + hop * c(g);
        }
        h
    }

    /// H psi without materializing H; used above EIG_CAP and as an
    /// independent cross-check of the dense build.
    pub(crate) fn apply_h(&self, psi: &Array1<C64>) -> Array1<C64> {
        let n = self.omegas.len();
        let d = self.fock;
        let boson_dim = psi.len() / 2;
        let mut stride = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            stride[k] = stride[k + 1] * d;
        }
        let mut out = Array1::<C64>::zeros(psi.len());
        let mut digits = vec![0usize; n];
        for (i, &amp) in psi.iter().enumerate() {
            if amp == c(0.0) {
                continue;
            }
            let sigma = i / boson_dim;
            let mut rest = i % boson_dim;
            for k in 0..n {
                digits[k] = rest / stride[k];
                rest %= stride[k];
            }
            let sz = if sigma == 0 { 1.0 } else { -1.0 };
            let mut diag = 0.5 * self.epsilon * sz;
            for (k, &w) in self.omegas.iter().enumerate() {
                diag += w * digits[k] as f64;
            }
            out[i] += c(diag) * amp;
            // sigma_x/2 * g0 * (c0 + c0dag)
            let flipped = if sigma == 0 { i + boson_dim } else { i - boson_dim };
            if digits[0] + 1 < d {
                out[flipped + stride[0]] += c(0.5 * self.g0 * ((digits[0] + 1) as f64).sqrt()) * amp;
            }
            if digits[0] > 0 {
                out[flipped - stride[0]] += c(0.5 * self.g0 * (digits[0] as f64).sqrt()) * amp;
            }
            for (k, &g) in self.couplings.iter().enumerate() {
                // c_k^dag c_{k+1}
                if digits[k] + 1 < d && digits[k + 1] > 0 {
                    let a = ((digits[k] + 1) as f64).sqrt() * (digits[k + 1] as f64).sqrt();
                    out[i + stride[k] - stride[k + 1]] += c(g * a) * amp;
                }
                // c_k c_{k+1}^dag
                if digits[k] > 0 && digits[k + 1] + 1 < d {
                    let a = (digits[k] as f64).sqrt() * ((digits[k + 1] + 1) as f64).sqrt();
                    out[i - stride[k] + stride[k + 1]] += c(g * a) * amp;
                }
            }
        }
        out
    }

    /// State at time t, propagated from the initial state.
    pub fn evolve_to(&self, t: f64) -> Result<Array1<C64>> {
        match &self.eig {
            Some((vals, vecs)) => {
                let coeff = vecs.t().map(|z| z.conj()).dot(&self.state0);
                let evolved = Array1::from_iter(
                    coeff
                        .iter()
                        .zip(vals.iter())
                        .map(|(&a, &l)| a * C64::new(0.0, -t * l).exp()),
                );
                Ok(vecs.dot(&evolved))
            }
            None => {
                let mut psi = self.state0.clone();
                let mut remaining = t;
                let step = 0.25f64;
                while remaining.abs() > 1e-15 {
                    let tau = remaining.clamp(-step, step);
                    psi = lanczos_expm(|v| self.apply_h(v), &psi, tau, 1e-13, 90)?;
                    remaining -= tau;
                }
                Ok(psi)
            }
        }
    }

    /// Reduced TLS density matrix of a dense state.
    pub fn tls_density(&self, psi: &Array1<C64>) -> Array2<C64> {
        let boson_dim = psi.len() / 2;
        let mut rho = Array2::<C64>::zeros((2, 2));
        for r in 0..boson_dim {
            for a in 0..2 {
                for b in 0..2 {
                    rho[[a, b]] += psi[a * boson_dim + r] * psi[b * boson_dim + r].conj();
                }
            }
        }
        rho
    }

    pub fn sigma_z(&self, psi: &Array1<C64>) -> f64 {
        let rho = self.tls_density(psi);
        (rho[[0, 0]] - rho[[1, 1]]).re
    }

    pub fn sigma_x(&self, psi: &Array1<C64>) -> f64 {
        let rho = self.tls_density(psi);
        (rho[[0, 1]] + rho[[1, 0]]).re
    }

    /// Occupation of chain mode k.
    pub fn boson_occupation(&self, psi: &Array1<C64>, k: usize) -> f64 {
        let n = self.omegas.len();
        assert!(k < n);
        let d = self.fock;
        let boson_dim = psi.len() / 2;
        let mut stride = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            stride[j] = stride[j + 1] * d;
        }
        let mut total = 0.0;
        for (i, amp) in psi.iter().enumerate() {
            let nk = (i % boson_dim) / stride[k] % d;
            total += nk as f64 * amp.norm_sqr();
        }
        total
    }

    fn boson_strides(&self) -> (usize, Vec<usize>) {
        let n = self.omegas.len();
        let d = self.fock;
        let mut stride = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            stride[j] = stride[j + 1] * d;
        }
        (self.dim() / 2, stride)
    }

    /// c_k psi on the truncated Fock space.
    fn lower_site(&self, psi: &Array1<C64>, k: usize) -> Array1<C64> {
        let (boson_dim, stride) = self.boson_strides();
        let d = self.fock;
        let mut out = Array1::<C64>::zeros(psi.len());
        for (i, &amp) in psi.iter().enumerate() {
            let nk = (i % boson_dim) / stride[k] % d;
            if nk > 0 {
                out[i - stride[k]] += c((nk as f64).sqrt()) * amp;
            }
        }
        out
    }

    /// c_k^dag psi; the top truncated level annihilates, matching the MPS side.
    fn raise_site(&self, psi: &Array1<C64>, k: usize) -> Array1<C64> {
        let (boson_dim, stride) = self.boson_strides();
        let d = self.fock;
        let mut out = Array1::<C64>::zeros(psi.len());
        for (i, &amp) in psi.iter().enumerate() {
            let nk = (i % boson_dim) / stride[k] % d;
            if nk + 1 < d {
                out[i + stride[k]] += c(((nk + 1) as f64).sqrt()) * amp;
            }
        }
        out
    }

    /// <c_n^dag c_m>.
    pub fn chain_normal(&self, psi: &Array1<C64>, n: usize, m: usize) -> C64 {
        let a = self.lower_site(psi, n);
        let b = self.lower_site(psi, m);
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    /// <c_n^dag c_m^dag>.
    pub fn chain_anomalous(&self, psi: &Array1<C64>, n: usize, m: usize) -> C64 {
        let a = self.lower_site(psi, n);
        let b = self.raise_site(psi, m);
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    /// <c_n^dag>.
    pub fn chain_single(&self, psi: &Array1<C64>, n: usize) -> C64 {
        let a = self.lower_site(psi, n);
        a.iter().zip(psi.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn sigma_z_series(&self, times: &[f64]) -> Result<Vec<f64>> {
        times
            .iter()
            .map(|&t| Ok(self.sigma_z(&self.evolve_to(t)?)))
            .collect()
    }
}

/// j-th moment of the thermalized measure by adaptive quadrature. The
/// measure behaves like |w|^(s-1) at the origin from both sides, so each
/// half is integrated under w = u^2, which regularizes the endpoint.
pub fn quadrature_moment(model: &ThermalizedSpectralModel, j: u32) -> Result<f64> {
    let (lo, hi) = model.support();
    let pos = |u: f64| {
        let w = u * u;
        2.0 * u * w.powi(j as i32) * model.value(w)
    };
    let mut total = integrate_adaptive(&pos, 0.0, hi.sqrt(), 1e-12, 1e-300)?;
    if lo < 0.0 {
        let neg = |u: f64| {
            let w = -u * u;
            2.0 * u * w.powi(j as i32) * model.value(w)
        };
        total += integrate_adaptive(&neg, 0.0, (-lo).sqrt(), 1e-12, 1e-300)?;
    }
    Ok(total)
}
