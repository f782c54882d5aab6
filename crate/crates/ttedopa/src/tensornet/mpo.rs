//! Matrix product operator for the mapped chain Hamiltonian
//!
//!   H = (eps/2) sigma_z
//!     + g0 (sigma_x/2)(c_0 + c_0^dag)
//!     + sum_k omega_k c_k^dag c_k
//!     + sum_k g_k (c_k^dag c_{k-1} + h.c.)
//!
//! as a bond-dimension-4 finite-state machine: channel 0 = nothing placed,
//! 1 = lowering-type operator open, 2 = raising-type open, 3 = term complete.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::chainmap::ChainCoefficients;
use crate::error::{Error, Result};
use crate::spectral::SystemModel;

pub fn sigma_z() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = C64::new(1.0, 0.0);
    m[[1, 1]] = C64::new(-1.0, 0.0);
    m
}

pub fn sigma_x() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(1.0, 0.0);
    m[[1, 0]] = C64::new(1.0, 0.0);
    m
}

pub fn sigma_y() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(0.0, -1.0);
    m[[1, 0]] = C64::new(0.0, 1.0);
    m
}

/// c |n> = sqrt(n) |n-1>, truncated at `fock` levels.
pub fn boson_lower(fock: usize) -> Array2<C64> {
    let mut m = Array2::zeros((fock, fock));
    for n in 1..fock {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn boson_raise(fock: usize) -> Array2<C64> {
    let mut m = Array2::zeros((fock, fock));
    for n in 1..fock {
        m[[n, n - 1]] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn boson_number(fock: usize) -> Array2<C64> {
    let mut m = Array2::zeros((fock, fock));
    for n in 0..fock {
        m[[n, n]] = C64::new(n as f64, 0.0);
    }
    m
}

fn eye(d: usize) -> Array2<C64> {
    Array2::eye(d)
}

/// Site tensors indexed (left mpo bond, right mpo bond, out, in).
#[derive(Debug, Clone)]
pub struct MpoOperator {
    tensors: Vec<Array4<C64>>,
}

impl MpoOperator {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, i: usize) -> &Array4<C64> {
        &self.tensors[i]
    }
}

fn set_block(w: &mut Array4<C64>, a: usize, b: usize, op: &Array2<C64>) {
    w.slice_mut(s![a, b, .., ..]).assign(op);
}

/// Assemble the chain MPO. `fock` is the per-site boson truncation.
pub fn chain_hamiltonian_mpo(sys: &SystemModel, coeffs: &ChainCoefficients, fock: usize) -> Result<MpoOperator> {
    let n_chain = coeffs.n_modes();
    if n_chain == 0 {
        return Err(Error::config("chain must contain at least one mode"));
    }
    if fock < 2 {
        return Err(Error::config(format!("Fock truncation must be at least 2, got {fock}")));
    }
    let c = boson_lower(fock);
    let cd = boson_raise(fock);
    let num = boson_number(fock);
    let mut tensors = Vec::with_capacity(n_chain + 1);

    // two-level site: opens both channels with sigma_x/2, local (eps/2) sigma_z
    let mut w0 = Array4::<C64>::zeros((1, 4, 2, 2));
    let half_sx = sigma_x().map(|z| 0.5 * z);
    set_block(&mut w0, 0, 0, &eye(2));
    set_block(&mut w0, 0, 1, &half_sx);
    set_block(&mut w0, 0, 2, &half_sx);
    set_block(&mut w0, 0, 3, &sigma_z().map(|z| 0.5 * sys.epsilon * z));
    tensors.push(w0);

    for k in 0..n_chain {
        let g_left = if k == 0 { coeffs.g0 } else { coeffs.couplings[k - 1] };
        let local = num.map(|z| coeffs.omegas[k] * z);
        let close_raise = cd.map(|z| g_left * z);
        let close_lower = c.map(|z| g_left * z);
        if k + 1 == n_chain {
            let mut w = Array4::<C64>::zeros((4, 1, fock, fock));
            set_block(&mut w, 0, 0, &local);
            set_block(&mut w, 1, 0, &close_raise);
            set_block(&mut w, 2, 0, &close_lower);
            set_block(&mut w, 3, 0, &eye(fock));
            tensors.push(w);
        } else {
            let mut w = Array4::<C64>::zeros((4, 4, fock, fock));
            set_block(&mut w, 0, 0, &eye(fock));
            set_block(&mut w, 0, 1, &c);
            set_block(&mut w, 0, 2, &cd);
            set_block(&mut w, 0, 3, &local);
            set_block(&mut w, 1, 3, &close_raise);
            set_block(&mut w, 2, 3, &close_lower);
            set_block(&mut w, 3, 3, &eye(fock));
            tensors.push(w);
        }
    }
    Ok(MpoOperator { tensors })
}
