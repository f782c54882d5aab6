//! Power-law spectral densities with hard cutoff, their finite-temperature
//! thermal extension to signed frequencies, and bath correlation functions.
//!
//! The thermal extension doubles the support to [-omega_c, omega_c] and
//! weights the two halves so that vacuum dynamics against the extended
//! density reproduce thermal dynamics against the original one. Detailed
//! balance J(+w)/J(-w) = exp(beta w) holds by construction.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// J(w) = 2 alpha w (w/omega_c)^(s-1) on [0, omega_c], zero elsewhere.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralModel {
    pub s: f64,
    pub alpha: f64,
    pub omega_c: f64,
}

impl SpectralModel {
    pub fn new(s: f64, alpha: f64, omega_c: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::config(format!("spectral exponent s must be positive, got {s}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::config(format!("coupling alpha must be non-negative, got {alpha}")));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(Error::config(format!("cutoff omega_c must be positive, got {omega_c}")));
        }
        Ok(SpectralModel { s, alpha, omega_c })
    }

    /// Fixed low-frequency weight across s: alpha(s) = alpha' / epsilon^s,
    /// so that alpha(s) epsilon^s = alpha' independent of s.
    pub fn with_rescaled_alpha(s: f64, alpha_prime: f64, epsilon: f64, omega_c: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
        }
        SpectralModel::new(s, alpha_prime / epsilon.powf(s), omega_c)
    }

    /// Hard cutoff: zero outside (0, omega_c].
    pub fn value(&self, omega: f64) -> f64 {
        if omega <= 0.0 || omega > self.omega_c {
            0.0
        } else {
            2.0 * self.alpha * omega * (omega / self.omega_c).powf(self.s - 1.0)
        }
    }
}

/// Thermalized (signed-frequency) spectral density at inverse temperature beta.
/// beta = f64::INFINITY collapses the support back to [0, omega_c].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThermalizedSpectralModel {
    pub base: SpectralModel,
    pub beta: f64,
}

/// Which integral representation of the bath correlation S(t) to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationRoute {
    /// Original density with Bose factors on [0, omega_c].
    Thermal,
    /// Vacuum form against the extended density on [-omega_c, omega_c].
    ExtendedVacuum,
}

impl ThermalizedSpectralModel {
    pub fn new(base: SpectralModel, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::config(format!("inverse temperature beta must be positive, got {beta}")));
        }
        Ok(ThermalizedSpectralModel { base, beta })
    }

    /// Support of the measure J_beta(w) dw.
    pub fn support(&self) -> (f64, f64) {
        if self.beta.is_infinite() {
            (0.0, self.base.omega_c)
        } else {
            (-self.base.omega_c, self.base.omega_c)
        }
    }

    /// J_beta(w) = (1/2) sign(w) J(|w|) [1 + coth(beta w / 2)]
    ///           = -sign(w) J(|w|) / expm1(-beta w),
    /// the expm1 form staying accurate through |beta w| << 1.
    pub fn value(&self, omega: f64) -> f64 {
        let wc = self.base.omega_c;
        if omega.abs() > wc {
            return 0.0;
        }
        if self.beta.is_infinite() {
            return if omega > 0.0 { self.base.value(omega) } else { 0.0 };
        }
        if omega == 0.0 {
            // analytic limit of (2 alpha / beta) (|w|/wc)^(s-1)
            return if self.base.s > 1.0 {
                0.0
            } else if self.base.s == 1.0 {
                2.0 * self.base.alpha / self.beta
            } else {
                f64::INFINITY
            };
        }
        -omega.signum() * self.base.value(omega.abs()) / f64::exp_m1(-self.beta * omega)
    }

    /// Bath correlation S(t); both routes agree analytically.
    pub fn bath_correlation(&self, t: f64, route: CorrelationRoute) -> Result<C64> {
        let wc = self.base.omega_c;
        let rel = 1e-11;
        let floor = 1e-15;
        match route {
            CorrelationRoute::Thermal => {
                let f = |w: f64| -> C64 {
                    let j = self.base.value(w);
                    let n = bose_occupation(self.beta, w);
                    let phase = C64::new(0.0, -(w * t)).exp();
                    j * ((1.0 + n) * phase + n * phase.conj())
                };
                quad::integrate_adaptive_c64(&f, 0.0, wc, rel, floor)
            }
            CorrelationRoute::ExtendedVacuum => {
                let f = |w: f64| -> C64 { self.value(w) * C64::new(0.0, -(w * t)).exp() };
                let (lo, _) = self.support();
                let neg = if lo < 0.0 {
                    quad::integrate_adaptive_c64(&f, lo, 0.0, rel, floor)?
                } else {
                    C64::new(0.0, 0.0)
                };
                Ok(neg + quad::integrate_adaptive_c64(&f, 0.0, wc, rel, floor)?)
            }
        }
    }

    /// Golden-rule decay constant J_s(eps, beta) = alpha eps (eps^s / wc^(s-1)) [1 + coth(beta eps / 2)].
    /// With alpha = alpha'/eps^s and wc = 1 the value is independent of s.
    pub fn markovian_decay_value(&self, epsilon: f64) -> Result<f64> {
        let wc = self.base.omega_c;
        if !(epsilon > 0.0 && epsilon < wc) {
            return Err(Error::config(format!(
                "decay frequency must lie inside (0, {wc}), got {epsilon}"
            )));
        }
        let one_plus_coth = if self.beta.is_infinite() {
            2.0
        } else {
            -2.0 / f64::exp_m1(-self.beta * epsilon)
        };
        Ok(self.base.alpha * epsilon * epsilon.powf(self.s()) / wc.powf(self.s() - 1.0) * one_plus_coth)
    }

    fn s(&self) -> f64 {
        self.base.s
    }
}

/// Bose-Einstein occupation 1/(e^{beta w} - 1); stable for small and huge beta*w.
pub fn bose_occupation(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let x = beta * omega;
    if x > 700.0 {
        // expm1 would overflow; occupation is e^{-x} to double precision
        (-x).exp()
    } else {
        1.0 / f64::exp_m1(x)
    }
}

/// Two-level system H_S = (epsilon/2) sigma_z; basis index 0 = upper level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemModel {
    pub epsilon: f64,
}

/// Initial product states used throughout: upper level or symmetric sigma_x eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Excited,
    PlusX,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn model(s: f64, alpha: f64, beta: f64) -> ThermalizedSpectralModel {
        ThermalizedSpectralModel::new(SpectralModel::new(s, alpha, 1.0).unwrap(), beta).unwrap()
    }

    #[test]
    fn ohmic_midpoint_value() {
        let j = SpectralModel::new(1.0, 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(j.value(0.5), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn hard_cutoff_support() {
        let j = SpectralModel::new(2.0, 0.3, 1.0).unwrap();
        assert_eq!(j.value(1.0 + 1e-12), 0.0);
        assert_eq!(j.value(-0.2), 0.0);
        assert_eq!(j.value(0.0), 0.0);
        let m = model(2.0, 0.3, 2.0);
        assert_eq!(m.value(1.5), 0.0);
        assert_eq!(m.value(-1.5), 0.0);
    }

    #[test]
    fn thermalized_values_match_reference() {
        let m = model(2.0, 0.25, 2.0);
        assert_relative_eq!(m.value(0.35), 0.12166907414761088, max_relative = 1e-14);
        assert_relative_eq!(m.value(-0.35), 0.06041907414761088, max_relative = 1e-14);
    }

    #[test]
    fn detailed_balance_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5d1a);
        for _ in 0..200 {
            let s = [0.5, 1.0, 2.0, 3.0][rng.gen_range(0..4)];
            let beta = rng.gen_range(0.01..50.0);
            let w = rng.gen_range(1e-6..1.0f64);
            let m = model(s, 0.17, beta);
            let ratio = m.value(w) / m.value(-w);
            assert_relative_eq!(ratio, (beta * w).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_frequency_limits() {
        assert_eq!(model(2.0, 0.25, 2.0).value(0.0), 0.0);
        let m1 = model(1.0, 0.3, 4.0);
        assert_abs_diff_eq!(m1.value(0.0), 2.0 * 0.3 / 4.0, epsilon = 1e-15);
        assert!(model(0.5, 0.1, 2.0).value(0.0).is_infinite());
        // continuity from both sides for s = 1
        assert_relative_eq!(m1.value(1e-9), m1.value(0.0), max_relative = 1e-8);
        assert_relative_eq!(m1.value(-1e-9), m1.value(0.0), max_relative = 1e-8);
    }

    #[test]
    fn small_argument_series_agreement() {
        // J_beta(w) = (2a/b)(1 + x/2 + x^2/12 + O(x^4)), x = beta w, for s = 1
        let m = model(1.0, 0.45, 3.0);
        for &w in &[1e-7, -1e-7, 3e-10, -2e-8] {
            let x: f64 = m.beta * w;
            let series = 2.0 * 0.45 / 3.0 * (1.0 + x / 2.0 + x * x / 12.0);
            assert_relative_eq!(m.value(w), series, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_temperature_collapses_support() {
        let m = model(1.0, 0.1, f64::INFINITY);
        assert_eq!(m.support(), (0.0, 1.0));
        assert_eq!(m.value(-0.3), 0.0);
        assert_relative_eq!(m.value(0.3), 2.0 * 0.1 * 0.3, max_relative = 1e-14);
    }

    #[test]
    fn deep_cold_side_underflows_gracefully() {
        let m = model(2.0, 0.25, 2000.0);
        let v = m.value(-0.5);
        assert!(v >= 0.0 && v < 1e-300, "expected underflow-to-zero, got {v}");
        assert!(m.value(0.5).is_finite());
    }

    #[test]
    fn correlation_routes_agree() {
        for m in [model(2.0, 0.25, 2.0), model(0.5, 0.1, 5.0)] {
            for &t in &[0.0, 0.7, 1.3, 5.0, 10.0] {
                let a = m.bath_correlation(t, CorrelationRoute::Thermal).unwrap();
                let b = m.bath_correlation(t, CorrelationRoute::ExtendedVacuum).unwrap();
                let scale = a.norm().max(1e-12);
                assert!(
                    (a - b).norm() / scale < 1e-8,
                    "routes disagree at t={t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn correlation_reference_values() {
        // S(0) = mu0 and S(1.3), frozen from 30-digit quadrature
        let m = model(2.0, 0.25, 2.0);
        let s0 = m.bath_correlation(0.0, CorrelationRoute::Thermal).unwrap();
        assert_relative_eq!(s0.re, 0.28993732766429963, max_relative = 1e-9);
        assert_abs_diff_eq!(s0.im, 0.0, epsilon = 1e-11);
        let s13 = m.bath_correlation(1.3, CorrelationRoute::ExtendedVacuum).unwrap();
        assert_relative_eq!(s13.re, 0.17369245971665176, max_relative = 1e-9);
        assert_relative_eq!(s13.im, -0.13385888005423846, max_relative = 1e-9);
    }

    #[test]
    fn decay_value_is_s_independent_after_rescaling() {
        let frozen = 0.012132979126878945;
        for s in [1.0, 2.0] {
            let base = SpectralModel::with_rescaled_alpha(s, 0.01, 0.2, 1.0).unwrap();
            let m = ThermalizedSpectralModel::new(base, 2.0).unwrap();
            let v = m.markovian_decay_value(0.2).unwrap();
            assert_relative_eq!(v, frozen, max_relative = 1e-12);
        }
    }

    #[test]
    fn decay_value_domain_errors() {
        let m = model(1.0, 0.1, 2.0);
        assert!(m.markovian_decay_value(0.0).is_err());
        assert!(m.markovian_decay_value(-0.1).is_err());
        assert!(m.markovian_decay_value(1.0).is_err());
        assert!(m.markovian_decay_value(1.7).is_err());
    }

    #[test]
    fn rescaled_alpha_examples() {
        let j = SpectralModel::with_rescaled_alpha(2.0, 0.01, 0.2, 1.0).unwrap();
        assert_abs_diff_eq!(j.alpha, 0.25, epsilon = 1e-15);
        let j = SpectralModel::with_rescaled_alpha(3.0, 0.01, 0.2, 1.0).unwrap();
        assert_abs_diff_eq!(j.alpha, 1.25, epsilon = 1e-12);
        // invariant: alpha(s) * eps^s = alpha'
        assert_relative_eq!(j.alpha * 0.2f64.powf(3.0), 0.01, max_relative = 1e-14);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SpectralModel::new(0.0, 0.1, 1.0).is_err());
        assert!(SpectralModel::new(1.0, -0.1, 1.0).is_err());
        assert!(SpectralModel::new(1.0, 0.1, 0.0).is_err());
        assert!(ThermalizedSpectralModel::new(SpectralModel::new(1.0, 0.1, 1.0).unwrap(), 0.0).is_err());
        assert!(ThermalizedSpectralModel::new(SpectralModel::new(1.0, 0.1, 1.0).unwrap(), -3.0).is_err());
    }
}
