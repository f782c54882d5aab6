//! Chain mapping: orthogonal-polynomial recurrence coefficients of the
//! thermalized measure J_beta(w) dw, the equivalent star-basis grid, and the
//! Gauss rule they induce.
//!
//! The measure is discretized on a composite Gauss-Legendre grid (graded
//! toward w = 0 where J_beta can carry an integrable singularity), then the
//! recurrence is extracted by Lanczos on the diagonal node matrix with full
//! reorthogonalization. Site energies are the diagonal coefficients, hops the
//! off-diagonal ones, and the system-chain coupling is sqrt(mu0).

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::quad::CompositeGrid;
use crate::spectral::ThermalizedSpectralModel;

const PANEL_ORDER: usize = 16;
const GRADE_LEVELS: usize = 85;

/// Tridiagonal chain representation of a thermalized bath.
#[derive(Debug, Clone)]
pub struct ChainCoefficients {
    /// Site energies omega_k, k = 0..n_modes.
    pub omegas: Vec<f64>,
    /// Hops g_k between neighbouring sites; couplings[k] links sites k and k+1.
    pub couplings: Vec<f64>,
    /// System-chain coupling, sqrt of the measure's zeroth moment.
    pub g0: f64,
    /// Zeroth moment of J_beta.
    pub mu0: f64,
    model: Option<ThermalizedSpectralModel>,
    n_quad: usize,
}

impl ChainCoefficients {
    /// Hand-built chain with no backing measure. Star-grid refinement is
    /// unavailable for these; everything else works.
    pub fn synthetic(omegas: Vec<f64>, couplings: Vec<f64>, g0: f64) -> ChainCoefficients {
        assert_eq!(couplings.len() + 1, omegas.len(), "need one hop fewer than sites");
        ChainCoefficients {
            omegas,
            couplings,
            g0,
            mu0: g0 * g0,
            model: None,
            n_quad: 0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    pub fn model(&self) -> Option<&ThermalizedSpectralModel> {
        self.model.as_ref()
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }
}

/// Discretization grid for the measure, graded toward zero on each side.
fn measure_grid(model: &ThermalizedSpectralModel, n_quad: usize) -> CompositeGrid {
    let (lo, hi) = model.support();
    let sides = if lo < 0.0 { 2 } else { 1 };
    let per_side = (n_quad / (sides * PANEL_ORDER)).saturating_sub(GRADE_LEVELS).max(8);
    let pos = CompositeGrid::graded(0.0, hi, per_side, GRADE_LEVELS, PANEL_ORDER, 0.0);
    if lo < 0.0 {
        let neg = CompositeGrid::graded(lo, 0.0, per_side, GRADE_LEVELS, PANEL_ORDER, 0.0);
        let mut nodes = neg.nodes;
        let mut weights = neg.weights;
        nodes.extend(pos.nodes);
        weights.extend(pos.weights);
        CompositeGrid { nodes, weights }
    } else {
        pos
    }
}

/// Recurrence coefficients (alpha_k, beta_k) of the orthonormal polynomials of
/// a discrete measure sum_i w_i delta(x - x_i), via Lanczos with full
/// reorthogonalization on diag(x) started from the weight vector.
fn lanczos_recurrence(nodes: &[f64], weights: &[f64], n_modes: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = nodes.len();
    if n_modes == 0 {
        return Err(Error::config("n_modes must be at least 1"));
    }
    if n < 2 * n_modes {
        return Err(Error::config(format!(
            "quadrature grid too coarse: {n} nodes for {n_modes} modes"
        )));
    }
    let mu0: f64 = weights.iter().sum();
    if !(mu0 > 0.0) || !mu0.is_finite() {
        return Err(Error::numeric(format!("measure zeroth moment is {mu0}")));
    }
    let x = Array1::from_iter(nodes.iter().copied());
    let scale = nodes.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut basis = Array2::<f64>::zeros((n, n_modes));
    let mut v = Array1::from_iter(weights.iter().map(|&w| (w / mu0).sqrt()));
    basis.column_mut(0).assign(&v);
    let mut alphas = Vec::with_capacity(n_modes);
    let mut betas = Vec::with_capacity(n_modes.saturating_sub(1));
    let mut v_prev: Option<Array1<f64>> = None;
    let mut beta_prev = 0.0;
    for k in 0..n_modes {
        let mut u = &x * &v;
        let alpha = v.dot(&u);
        alphas.push(alpha);
        if k + 1 == n_modes {
            break;
        }
        u -= &(alpha * &v);
        if let Some(ref vp) = v_prev {
            u -= &(beta_prev * vp);
        }
        // two rounds of reorthogonalization keep the basis orthonormal to
        // machine precision over hundreds of modes
        for _ in 0..2 {
            let span = basis.slice(s![.., ..=k]);
            let proj = span.t().dot(&u);
            u -= &span.dot(&proj);
        }
        let beta = u.dot(&u).sqrt();
        if beta <= 1e-14 * scale.max(1.0) {
            return Err(Error::numeric(format!(
                "recurrence breakdown at mode {k}: measure supports only {} modes",
                k + 1
            )));
        }
        u /= beta;
        basis.column_mut(k + 1).assign(&u);
        betas.push(beta);
        v_prev = Some(v);
        beta_prev = beta;
        v = u;
    }
    Ok((alphas, betas, mu0))
}

/// Map a thermalized spectral density onto chain coefficients for `n_modes` sites.
pub fn compute_chain_coefficients(
    model: &ThermalizedSpectralModel,
    n_modes: usize,
    n_quad: usize,
) -> Result<ChainCoefficients> {
    let grid = measure_grid(model, n_quad);
    let mut weights = Vec::with_capacity(grid.len());
    for (&x, &q) in grid.nodes.iter().zip(&grid.weights) {
        let j = model.value(x);
        if !j.is_finite() || j < 0.0 {
            return Err(Error::numeric(format!("spectral density {j} at w = {x}")));
        }
        weights.push(j * q);
    }
    let (omegas, couplings, mu0) = lanczos_recurrence(&grid.nodes, &weights, n_modes)?;
    Ok(ChainCoefficients {
        omegas,
        couplings,
        g0: mu0.sqrt(),
        mu0,
        model: Some(*model),
        n_quad,
    })
}

/// Gauss rule induced by the first n recurrence coefficients (Golub-Welsch):
/// nodes are the Jacobi-matrix eigenvalues, weights mu0 times the squared
/// first components of the eigenvectors.
pub fn gauss_rule(coeffs: &ChainCoefficients) -> Result<(Vec<f64>, Vec<f64>)> {
    let (vals, vecs) = jacobi_eigh(&coeffs.omegas, &coeffs.couplings)?;
    let weights = vecs
        .row(0)
        .iter()
        .map(|&c| coeffs.mu0 * c * c)
        .collect();
    Ok((vals.to_vec(), weights))
}

fn jacobi_eigh(diag: &[f64], offdiag: &[f64]) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n);
    let mut j = Array2::<f64>::zeros((n, n));
    for (k, &d) in diag.iter().enumerate() {
        j[[k, k]] = d;
    }
    for (k, &b) in offdiag.iter().enumerate() {
        j[[k, k + 1]] = b;
        j[[k + 1, k]] = b;
    }
    let (vals, vecs) = j.eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Star (normal-mode) representation of a finite chain, padded to m_pad modes.
#[derive(Debug, Clone)]
pub struct StarGrid {
    /// Normal-mode frequencies, ascending, spanning the measure support.
    pub frequencies: Vec<f64>,
    /// Interval weights: midpoint cell widths, outer cells extrapolated.
    pub weights: Vec<f64>,
    /// Orthogonal chain-to-star transform; rows index chain modes, columns star modes.
    pub transform: Array2<f64>,
}

/// Diagonalize the Jacobi matrix of the measure extended to m_pad modes.
/// Chain correlation matrices are zero-padded to m_pad before rotating, so
/// m_pad only needs to exceed the populated chain region, not match it.
pub fn build_star_grid(coeffs: &ChainCoefficients, m_pad: usize) -> Result<StarGrid> {
    if m_pad < coeffs.n_modes() {
        return Err(Error::config(format!(
            "m_pad = {m_pad} must be at least the chain length {}",
            coeffs.n_modes()
        )));
    }
    let model = coeffs.model.as_ref().ok_or_else(|| {
        Error::validation("star grid needs measure-backed coefficients, not a synthetic chain")
    })?;
    let n_quad = coeffs.n_quad.max(10 * m_pad);
    let ext = compute_chain_coefficients(model, m_pad, n_quad)?;
    let (vals, vecs) = jacobi_eigh(&ext.omegas, &ext.couplings)?;
    let frequencies = vals.to_vec();
    let mut weights = vec![0.0; m_pad];
    for i in 0..m_pad {
        let left = if i == 0 {
            frequencies[0] - 0.5 * (frequencies[1] - frequencies[0])
        } else {
            0.5 * (frequencies[i - 1] + frequencies[i])
        };
        let right = if i == m_pad - 1 {
            frequencies[m_pad - 1] + 0.5 * (frequencies[m_pad - 1] - frequencies[m_pad - 2])
        } else {
            0.5 * (frequencies[i] + frequencies[i + 1])
        };
        weights[i] = right - left;
    }
    Ok(StarGrid {
        frequencies,
        weights,
        transform: vecs,
    })
}
