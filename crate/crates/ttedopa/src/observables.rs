//! Measurements on evolved states: TLS expectations, chain occupations, the
//! full normal/anomalous correlation set, and rotation into the extended
//! (star) frequency picture.
//!
//! Chain modes live on MPS sites 1..=N; all matrices here index chain modes
//! 0..N-1. Two-point functions use one left-to-right sweep per row, reusing
//! the transfer environment, so a full set costs O(N^2) small contractions.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::chainmap::StarGrid;
use crate::error::{Error, Result};
use crate::tensornet::mpo::{boson_lower, boson_number, boson_raise};
use crate::tensornet::mps::{dagger, merge12, merge23, MpsState};

fn conj_m(m: &Array2<C64>) -> Array2<C64> {
    m.map(|z| z.conj())
}

/// op acting on the physical leg: out[l,p,r] = sum_q op[p,q] t[l,q,r].
fn apply_phys(op: &ArrayView2<C64>, t: &Array3<C64>) -> Array3<C64> {
    let (l, p, r) = t.dim();
    let m = t
        .view()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_shape((p, l * r))
        .expect("contiguous reshape")
        .to_owned();
    let out = op.dot(&m);
    let q = out.dim().0;
    out.into_shape_with_order((q, l, r))
        .expect("contiguous reshape")
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned()
}

/// E[r,r'] = sum conj(A[l,p,r]) op[p,q] A[l,q,r'] for the center tensor A.
fn start_env(a: &Array3<C64>, op: &ArrayView2<C64>) -> Array2<C64> {
    let aop = apply_phys(op, a);
    dagger(&merge12(a)).dot(&merge12(&aop))
}

/// Push E through one right-canonical tensor with the identity on its leg.
fn transfer(e: &Array2<C64>, b: &Array3<C64>) -> Array2<C64> {
    let (_, p, s) = b.dim();
    let t = e.dot(&merge23(b));
    let r = t.dim().0;
    let t = t
        .into_shape_with_order((r, p, s))
        .expect("contiguous reshape");
    // E'[s,s'] = sum_{r,p} conj(B[r,p,s]) T[r,p,s']
    conj_m(&merge12(b)).t().dot(&merge12(&t))
}

/// Terminate the sweep at the current site with `op` on its physical leg.
fn close(e: &Array2<C64>, b: &Array3<C64>, op: &ArrayView2<C64>) -> C64 {
    let bop = apply_phys(op, b);
    let t = e.dot(&merge23(&bop));
    (conj_m(&merge23(b)) * &t).sum()
}

#[derive(Debug, Clone)]
pub struct SpinMeasurement {
    pub sz: f64,
    pub sx: f64,
    pub sy: f64,
    /// Reduced TLS density matrix; Hermitian, unit trace.
    pub rho: Array2<C64>,
}

pub fn measure_spin(state: &mut MpsState) -> Result<SpinMeasurement> {
    state.canonicalize_to(0)?;
    let t = state.tensor(0);
    let (_, p, r) = t.dim();
    if p != 2 {
        return Err(Error::config("site 0 is not a two-level system"));
    }
    let m = t
        .view()
        .to_owned()
        .into_shape_with_order((p, r))
        .expect("site 0 has trivial left bond");
    let rho = m.dot(&dagger(&m));
    let tr = (rho[[0, 0]] + rho[[1, 1]]).re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::numeric(format!("reduced density trace {tr} deviates from 1")));
    }
    Ok(SpinMeasurement {
        sz: (rho[[0, 0]] - rho[[1, 1]]).re,
        sx: 2.0 * rho[[0, 1]].re,
        sy: -2.0 * rho[[0, 1]].im,
        rho,
    })
}

/// Per-mode occupations <n_i>, i = 0..N-1, one gauge sweep total.
pub fn measure_chain_occupations(state: &mut MpsState) -> Result<Vec<f64>> {
    let n = state.n_sites() - 1;
    let mut occ = Vec::with_capacity(n);
    for i in 1..=n {
        let d = state.tensor(i).dim().1;
        let num = boson_number(d);
        occ.push(state.expectation_site(i, &num.view())?.re);
    }
    Ok(occ)
}

/// All chain-mode one- and two-point functions at a snapshot.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    /// <c_n^dag c_m>, Hermitian.
    pub normal: Array2<C64>,
    /// <c_n^dag c_m^dag>, symmetric.
    pub anomalous: Array2<C64>,
    /// <c_n^dag>.
    pub singles: Array1<C64>,
    pub time: f64,
}

impl CorrelationSet {
    pub fn n_modes(&self) -> usize {
        self.singles.len()
    }

    fn validate(&self) -> Result<()> {
        let herm = (&self.normal - &dagger(&self.normal))
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if herm > 1e-8 {
            return Err(Error::numeric(format!("normal matrix Hermiticity defect {herm:.3e}")));
        }
        let sym = (&self.anomalous - &self.anomalous.t())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if sym > 1e-8 {
            return Err(Error::numeric(format!("anomalous matrix symmetry defect {sym:.3e}")));
        }
        for k in 0..self.n_modes() {
            if self.normal[[k, k]].re < -1e-10 {
                return Err(Error::numeric(format!(
                    "negative occupation {} at mode {k}",
                    self.normal[[k, k]].re
                )));
            }
        }
        Ok(())
    }
}

pub fn measure_correlation_set(state: &mut MpsState, time: f64) -> Result<CorrelationSet> {
    let n = state.n_sites() - 1;
    let mut normal = Array2::<C64>::zeros((n, n));
    let mut anomalous = Array2::<C64>::zeros((n, n));
    let mut singles = Array1::<C64>::zeros(n);
    for row in 0..n {
        let site = row + 1;
        state.canonicalize_to(site)?;
        let a = state.tensor(site).clone();
        let d = a.dim().1;
        let raise = boson_raise(d);
        let num = boson_number(d);
        let sq_raise = raise.dot(&raise);
        // right of the center is right-canonical, so closing the open bond
        // pair of E against the identity is a plain trace
        let diag_sum = |e: &Array2<C64>| -> C64 { e.diag().sum() };
        normal[[row, row]] = diag_sum(&start_env(&a, &num.view()));
        anomalous[[row, row]] = diag_sum(&start_env(&a, &sq_raise.view()));
        singles[row] = diag_sum(&start_env(&a, &raise.view()));
        let mut env = start_env(&a, &raise.view());
        for col_site in site + 1..=n {
            let b = state.tensor(col_site).clone();
            let db = b.dim().1;
            let col = col_site - 1;
            normal[[row, col]] = close(&env, &b, &boson_lower(db).view());
            anomalous[[row, col]] = close(&env, &b, &boson_raise(db).view());
            normal[[col, row]] = normal[[row, col]].conj();
            anomalous[[col, row]] = anomalous[[row, col]];
            if col_site < n {
                env = transfer(&env, &b);
            }
        }
    }
    let set = CorrelationSet { normal, anomalous, singles, time };
    set.validate()?;
    Ok(set)
}

/// Correlators rotated into the normal-mode (star) frequency basis of a
/// zero-padded chain.
#[derive(Debug, Clone)]
pub struct ExtendedSpectrum {
    pub frequencies: Vec<f64>,
    /// Frequency-interval weights from the grid.
    pub weights: Vec<f64>,
    /// <n_omega> per grid node.
    pub occupations: Vec<f64>,
    /// Interval-weighted density, occupations / weights.
    pub density: Vec<f64>,
    /// Connected pair correlations C(w, w') = <b_w^dag b_w'^dag> - <b_w^dag><b_w'^dag>.
    pub corr: Array2<C64>,
    /// Star-basis normal correlators (kept raw for the thermofield inverse).
    pub star_normal: Array2<C64>,
    /// Star-basis anomalous correlators, unconnected.
    pub star_anomalous: Array2<C64>,
    /// Star-basis singles <b_w^dag>.
    pub star_singles: Array1<C64>,
    pub time: f64,
}

pub fn extended_spectrum(corr: &CorrelationSet, grid: &StarGrid) -> Result<ExtendedSpectrum> {
    let n = corr.n_modes();
    let m = grid.frequencies.len();
    if m < n {
        return Err(Error::config(format!(
            "star grid with {m} modes cannot hold a chain of {n}"
        )));
    }
    // zero-padding the chain matrices to m means only the first n rows of the
    // transform ever touch data
    let u_top = grid.transform.slice(s![..n, ..]).map(|&x| C64::new(x, 0.0));
    let star_normal = u_top.t().dot(&corr.normal).dot(&u_top);
    let star_anomalous = u_top.t().dot(&corr.anomalous).dot(&u_top);
    let star_singles = u_top.t().dot(&corr.singles);
    let occupations: Vec<f64> = star_normal.diag().iter().map(|z| z.re).collect();
    let sum_occ: f64 = occupations.iter().sum();
    let trace: f64 = corr.normal.diag().iter().map(|z| z.re).sum();
    if (sum_occ - trace).abs() > 1e-8 * trace.abs().max(1.0) {
        return Err(Error::numeric(format!(
            "star rotation lost excitations: {sum_occ} vs {trace}"
        )));
    }
    let density: Vec<f64> = occupations
        .iter()
        .zip(&grid.weights)
        .map(|(&o, &w)| o / w)
        .collect();
    let outer = Array2::from_shape_fn((m, m), |(i, j)| star_singles[i] * star_singles[j]);
    let corr_mat = &star_anomalous - &outer;
    Ok(ExtendedSpectrum {
        frequencies: grid.frequencies.clone(),
        weights: grid.weights.clone(),
        occupations,
        density,
        corr: corr_mat,
        star_normal,
        star_anomalous,
        star_singles,
        time: corr.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chainmap::{build_star_grid, compute_chain_coefficients, ChainCoefficients};
    use crate::spectral::{InitialState, SpectralModel, SystemModel, ThermalizedSpectralModel};
    use crate::tensornet::{chain_hamiltonian_mpo, tdvp_step, EvolutionConfig, MpsState};
    use approx::assert_abs_diff_eq;

    #[test]
    fn initial_states_have_textbook_spins() {
        let mut excited = MpsState::initial_state(3, 3, InitialState::Excited).unwrap();
        let s = measure_spin(&mut excited).unwrap();
        assert_abs_diff_eq!(s.sz, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.sx, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.sy, 0.0, epsilon = 1e-14);
        let mut plus = MpsState::initial_state(3, 3, InitialState::PlusX).unwrap();
        let s = measure_spin(&mut plus).unwrap();
        assert_abs_diff_eq!(s.sx, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.sz, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_correlators_vanish() {
        let mut state = MpsState::initial_state(4, 3, InitialState::Excited).unwrap();
        let occ = measure_chain_occupations(&mut state).unwrap();
        assert!(occ.iter().all(|&x| x.abs() < 1e-14));
        let set = measure_correlation_set(&mut state, 0.0).unwrap();
        assert!(set.normal.iter().all(|z| z.norm() < 1e-14));
        assert!(set.anomalous.iter().all(|z| z.norm() < 1e-14));
        assert!(set.singles.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn bare_chain_conserves_excitation_number() {
        // g0 = 0, single excitation on the first chain mode
        let coeffs = ChainCoefficients::synthetic(vec![0.5, 0.45, 0.4], vec![0.2, 0.18], 0.0);
        let mpo = chain_hamiltonian_mpo(&SystemModel { epsilon: 0.3 }, &coeffs, 3).unwrap();
        let mut state = MpsState::product_state(&[2, 3, 3, 3], &[0, 1, 0, 0]).unwrap();
        let cfg = EvolutionConfig { dt: 0.05, chi_max: 16, precision: 1e-8, ..Default::default() };
        let mut traces = Vec::new();
        for _ in 0..30 {
            tdvp_step(&mut state, &mpo, &cfg).unwrap();
            let set = measure_correlation_set(&mut state, 0.0).unwrap();
            traces.push(set.normal.diag().iter().map(|z| z.re).sum::<f64>());
        }
        for &t in &traces {
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-8);
        }
        // occupations moved off the first site
        let occ = measure_chain_occupations(&mut state).unwrap();
        assert!(occ[1] + occ[2] > 1e-3);
        let set = measure_correlation_set(&mut state, 0.0).unwrap();
        let occ_sum: f64 = occ.iter().sum();
        let diag_sum: f64 = set.normal.diag().iter().map(|z| z.re).sum();
        assert_abs_diff_eq!(occ_sum, diag_sum, epsilon = 1e-10);
    }

    #[test]
    fn correlators_match_dense_oracle() {
        use crate::oracle::DenseInstance;
        let coeffs = ChainCoefficients::synthetic(vec![0.5, 0.42, 0.36], vec![0.28, 0.22], 0.55);
        let sys = SystemModel { epsilon: 0.4 };
        let fock = 3;
        let inst = DenseInstance::new(&sys, &coeffs, fock, InitialState::Excited).unwrap();
        let mpo = chain_hamiltonian_mpo(&sys, &coeffs, fock).unwrap();
        let mut state = MpsState::initial_state(3, fock, InitialState::Excited).unwrap();
        let cfg = EvolutionConfig { dt: 0.005, chi_max: 32, precision: 1e-9, ..Default::default() };
        let steps = 300;
        for _ in 0..steps {
            tdvp_step(&mut state, &mpo, &cfg).unwrap();
        }
        let t = cfg.dt * steps as f64;
        let psi = inst.evolve_to(t).unwrap();
        let set = measure_correlation_set(&mut state, t).unwrap();
        for nidx in 0..3 {
            for midx in 0..3 {
                let want_normal = inst.chain_normal(&psi, nidx, midx);
                let got = set.normal[[nidx, midx]];
                assert!(
                    (want_normal - got).norm() < 1e-6,
                    "normal [{nidx},{midx}]: {want_normal} vs {got}"
                );
                let want_anom = inst.chain_anomalous(&psi, nidx, midx);
                let got = set.anomalous[[nidx, midx]];
                assert!(
                    (want_anom - got).norm() < 1e-6,
                    "anomalous [{nidx},{midx}]: {want_anom} vs {got}"
                );
            }
            let want_single = inst.chain_single(&psi, nidx);
            assert!((want_single - set.singles[nidx]).norm() < 1e-6);
        }
    }

    #[test]
    fn star_rotation_preserves_trace_and_resolves_single_excitation() {
        let base = SpectralModel::new(1.0, 0.25, 1.0).unwrap();
        let model = ThermalizedSpectralModel::new(base, 5.0).unwrap();
        let coeffs = compute_chain_coefficients(&model, 6, 4000).unwrap();
        let grid = build_star_grid(&coeffs, 12).unwrap();
        // single excitation on chain mode 0
        let mut state = MpsState::product_state(&[2, 3, 3, 3, 3, 3, 3], &[0, 1, 0, 0, 0, 0, 0]).unwrap();
        let set = measure_correlation_set(&mut state, 0.0).unwrap();
        let spec = extended_spectrum(&set, &grid).unwrap();
        let total: f64 = spec.occupations.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        for (i, &occ) in spec.occupations.iter().enumerate() {
            let want = grid.transform[[0, i]].powi(2);
            assert_abs_diff_eq!(occ, want, epsilon = 1e-10);
        }
        // vacuum input stays dark
        let mut vac = MpsState::initial_state(6, 3, InitialState::Excited).unwrap();
        let vac_set = measure_correlation_set(&mut vac, 0.0).unwrap();
        let vac_spec = extended_spectrum(&vac_set, &grid).unwrap();
        assert!(vac_spec.occupations.iter().all(|&x| x.abs() < 1e-12));
        assert!(vac_spec.corr.iter().all(|z| z.norm() < 1e-12));
    }
}
