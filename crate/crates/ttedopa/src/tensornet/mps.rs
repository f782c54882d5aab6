//! Matrix product states with a movable orthogonality center.
//!
//! Site tensors are rank-3, indexed (left bond, physical, right bond).
//! Site 0 carries the two-level system, sites 1..=n the chain bosons.
//! Everything left of the center is left-orthonormal, everything right of it
//! right-orthonormal; gauge moves are thin QR/LQ factorizations, which never
//! change the state and never shrink a bond (bond dimensions respect exact
//! Schmidt rank bounds by construction).

use ndarray::prelude::*;
use ndarray_linalg::QR;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spectral::InitialState;

pub(crate) fn merge12(a: &Array3<C64>) -> Array2<C64> {
    let (l, p, r) = a.dim();
    a.as_standard_layout()
        .to_shape((l * p, r))
        .expect("contiguous reshape")
        .to_owned()
}

pub(crate) fn merge23(a: &Array3<C64>) -> Array2<C64> {
    let (l, p, r) = a.dim();
    a.as_standard_layout()
        .to_shape((l, p * r))
        .expect("contiguous reshape")
        .to_owned()
}

pub(crate) fn split12(m: Array2<C64>, l: usize, p: usize) -> Array3<C64> {
    let (lp, r) = m.dim();
    debug_assert_eq!(lp, l * p);
    m.as_standard_layout()
        .to_owned()
        .into_shape_with_order((l, p, r))
        .expect("contiguous reshape")
}

pub(crate) fn split23(m: Array2<C64>, p: usize, r: usize) -> Array3<C64> {
    let (l, pr) = m.dim();
    debug_assert_eq!(pr, p * r);
    m.as_standard_layout()
        .to_owned()
        .into_shape_with_order((l, p, r))
        .expect("contiguous reshape")
}

pub(crate) fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().map(|z| z.conj())
}

/// Thin LQ: m = c * q with the rows of q orthonormal.
pub(crate) fn lq(m: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = dagger(m).qr()?;
    Ok((dagger(&r), dagger(&q)))
}

#[derive(Debug, Clone)]
pub struct MpsState {
    tensors: Vec<Array3<C64>>,
    center: usize,
    /// Set when bond expansion wanted more room than chi_max allowed.
    pub chi_saturated: bool,
}

impl MpsState {
    /// Product state with one basis index occupied per site.
    pub fn product_state(dims: &[usize], occupied: &[usize]) -> Result<MpsState> {
        if dims.is_empty() || dims.len() != occupied.len() {
            return Err(Error::config("product state needs one basis index per site"));
        }
        let mut tensors = Vec::with_capacity(dims.len());
        for (&d, &k) in dims.iter().zip(occupied) {
            if k >= d {
                return Err(Error::config(format!("basis index {k} out of range for dimension {d}")));
            }
            let mut t = Array3::<C64>::zeros((1, d, 1));
            t[[0, k, 0]] = C64::new(1.0, 0.0);
            tensors.push(t);
        }
        Ok(MpsState { tensors, center: 0, chi_saturated: false })
    }

    /// System-plus-vacuum-chain start: TLS in `init`, every boson in Fock 0.
    pub fn initial_state(n_chain: usize, fock: usize, init: InitialState) -> Result<MpsState> {
        if n_chain == 0 {
            return Err(Error::config("chain must have at least one site"));
        }
        if fock < 2 {
            return Err(Error::config(format!("Fock truncation must be at least 2, got {fock}")));
        }
        let mut dims = vec![fock; n_chain + 1];
        dims[0] = 2;
        let occupied = vec![0; n_chain + 1];
        let mut state = MpsState::product_state(&dims, &occupied)?;
        if init == InitialState::PlusX {
            let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            state.tensors[0][[0, 0, 0]] = amp;
            state.tensors[0][[0, 1, 0]] = amp;
        }
        Ok(state)
    }

    pub(crate) fn from_parts(tensors: Vec<Array3<C64>>, center: usize) -> MpsState {
        debug_assert!(center < tensors.len());
        MpsState { tensors, center, chi_saturated: false }
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn tensor(&self, i: usize) -> &Array3<C64> {
        &self.tensors[i]
    }

    pub(crate) fn set_tensor(&mut self, i: usize, t: Array3<C64>) {
        self.tensors[i] = t;
    }

    pub(crate) fn set_center(&mut self, i: usize) {
        self.center = i;
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim().1).collect()
    }

    /// Bond dimensions between consecutive sites (length n_sites - 1).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().take(self.n_sites() - 1).map(|t| t.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// State norm; lives entirely in the center tensor.
    pub fn norm(&self) -> f64 {
        self.tensors[self.center].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// QR gauge move center -> center + 1.
    pub fn move_center_right(&mut self) -> Result<()> {
        let i = self.center;
        assert!(i + 1 < self.n_sites(), "center already at right edge");
        let (l, p, _r) = self.tensors[i].dim();
        let (q, rmat) = merge12(&self.tensors[i]).qr()?;
        self.tensors[i] = split12(q, l, p);
        let next = &self.tensors[i + 1];
        let (ln, pn, rn) = next.dim();
        let absorbed = rmat.dot(&merge23(next));
        debug_assert_eq!(absorbed.dim().0, ln, "gauge move must not shrink a bond");
        let _ = ln;
        self.tensors[i + 1] = split23(absorbed, pn, rn);
        self.center = i + 1;
        Ok(())
    }

    /// LQ gauge move center -> center - 1.
    pub fn move_center_left(&mut self) -> Result<()> {
        let i = self.center;
        assert!(i > 0, "center already at left edge");
        let (_l, p, r) = self.tensors[i].dim();
        let (cmat, q) = lq(&merge23(&self.tensors[i]))?;
        self.tensors[i] = split23(q, p, r);
        let prev = &self.tensors[i - 1];
        let (lp, pp, _rp) = prev.dim();
        let absorbed = merge12(prev).dot(&cmat);
        self.tensors[i - 1] = split12(absorbed, lp, pp);
        self.center = i - 1;
        Ok(())
    }

    pub fn canonicalize_to(&mut self, site: usize) -> Result<()> {
        assert!(site < self.n_sites());
        while self.center < site {
            self.move_center_right()?;
        }
        while self.center > site {
            self.move_center_left()?;
        }
        Ok(())
    }

    /// <psi| op |psi> at one site; gauge moves to that site first.
    pub fn expectation_site(&mut self, site: usize, op: &ArrayView2<C64>) -> Result<C64> {
        self.canonicalize_to(site)?;
        let a = &self.tensors[site];
        let (l, p, r) = a.dim();
        debug_assert_eq!(op.dim(), (p, p));
        // rho[p_out, p_in] = sum_{l,r} A[l,p_in,r] conj(A[l,p_out,r])
        let m = a
            .as_standard_layout()
            .to_shape((l, p, r))
            .unwrap()
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .to_shape((p, l * r))
            .unwrap()
            .to_owned();
        let rho = m.map(|z| z.conj()).dot(&m.t());
        Ok((op * &rho).sum())
    }

    /// Largest deviation from the canonical-form isometry conditions; 0 for a
    /// freshly gauged state. Used by tests and validation suites.
    pub fn canonical_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, t) in self.tensors.iter().enumerate() {
            if i < self.center {
                let m = merge12(t);
                let g = dagger(&m).dot(&m);
                worst = worst.max(identity_defect(&g));
            } else if i > self.center {
                let m = merge23(t);
                let g = m.dot(&dagger(&m));
                worst = worst.max(identity_defect(&g));
            }
        }
        worst
    }
}

fn identity_defect(g: &Array2<C64>) -> f64 {
    let n = g.dim().0;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - C64::new(want, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sigma_z() -> Array2<C64> {
        ndarray::array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
        ]
    }

    #[test]
    fn product_state_basics() {
        let s = MpsState::initial_state(4, 3, InitialState::Excited).unwrap();
        assert_eq!(s.n_sites(), 5);
        assert_eq!(s.bond_dims(), vec![1, 1, 1, 1]);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gauge_moves_preserve_state() {
        let mut s = MpsState::initial_state(3, 3, InitialState::PlusX).unwrap();
        let before = s.expectation_site(0, &sigma_z().view()).unwrap();
        s.canonicalize_to(3).unwrap();
        assert!(s.canonical_defect() < 1e-14);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-13);
        s.canonicalize_to(0).unwrap();
        let after = s.expectation_site(0, &sigma_z().view()).unwrap();
        assert_abs_diff_eq!(before.re, after.re, epsilon = 1e-13);
        assert_abs_diff_eq!(before.re, 0.0, epsilon = 1e-15); // plus state
    }

    #[test]
    fn excited_state_sigma_z_is_one() {
        let mut s = MpsState::initial_state(2, 2, InitialState::Excited).unwrap();
        let z = s.expectation_site(0, &sigma_z().view()).unwrap();
        assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(MpsState::initial_state(0, 4, InitialState::Excited).is_err());
        assert!(MpsState::initial_state(3, 1, InitialState::Excited).is_err());
        assert!(MpsState::product_state(&[2, 3], &[0]).is_err());
        assert!(MpsState::product_state(&[2, 3], &[0, 3]).is_err());
    }
}
