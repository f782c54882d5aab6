//! Run configuration: flat `section.key = value` text files, full-scale
//! defaults, the reduced desk profile, and a content hash that makes runs
//! reproducible and comparable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{InitialState, SpectralModel, SystemModel, ThermalizedSpectralModel};
use crate::tensornet::EvolutionConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub s: f64,
    pub alpha_prime: f64,
    pub omega_c: f64,
    /// Inverse temperature; `spectral.kappa` sets it as beta = kappa / epsilon.
    pub beta: f64,
    pub epsilon: f64,
    pub initial: InitialState,
    pub n_modes: usize,
    pub n_quad: usize,
    pub m_pad: usize,
    pub dt: f64,
    pub t_final: f64,
    pub fock: usize,
    pub chi_max: usize,
    pub precision: f64,
    pub krylov_tol: f64,
    pub krylov_max: usize,
    pub snapshots: Vec<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            s: 2.0,
            alpha_prime: 0.01,
            omega_c: 1.0,
            beta: 2000.0,
            epsilon: 0.2,
            initial: InitialState::Excited,
            n_modes: 120,
            n_quad: 3000,
            m_pad: 700,
            dt: 0.1,
            t_final: 100.0,
            fock: 10,
            chi_max: 100,
            precision: 1e-3,
            krylov_tol: 1e-12,
            krylov_max: 30,
            snapshots: vec![80.0, 100.0],
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Reduced profile sized for minutes-scale runs on one core.
    pub fn apply_desk(&mut self) {
        self.n_modes = 60;
        self.t_final = 40.0;
        self.snapshots = vec![30.0, 40.0];
        self.fock = 6;
        self.chi_max = 40;
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut kappa: Option<f64> = None;
        let mut beta_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let fail = |what: &str| {
                Error::config(format!("line {}: bad {what} value `{value}`", lineno + 1))
            };
            match key {
                "spectral.s" => cfg.s = parse_f64(value).ok_or_else(|| fail(key))?,
                "spectral.alpha_prime" => {
                    cfg.alpha_prime = parse_f64(value).ok_or_else(|| fail(key))?
                }
                "spectral.omega_c" => cfg.omega_c = parse_f64(value).ok_or_else(|| fail(key))?,
                "spectral.beta" => {
                    cfg.beta = parse_f64(value).ok_or_else(|| fail(key))?;
                    beta_set = true;
                }
                "spectral.kappa" => kappa = Some(parse_f64(value).ok_or_else(|| fail(key))?),
                "system.epsilon" => cfg.epsilon = parse_f64(value).ok_or_else(|| fail(key))?,
                "system.initial" => {
                    cfg.initial = match value {
                        "excited" => InitialState::Excited,
                        "plus_x" => InitialState::PlusX,
                        _ => {
                            return Err(Error::config(format!(
                                "line {}: system.initial must be `excited` or `plus_x`, got `{value}`",
                                lineno + 1
                            )))
                        }
                    }
                }
                "chain.n_modes" => cfg.n_modes = parse_usize(value).ok_or_else(|| fail(key))?,
                "chain.n_quad" => cfg.n_quad = parse_usize(value).ok_or_else(|| fail(key))?,
                "chain.m_pad" => cfg.m_pad = parse_usize(value).ok_or_else(|| fail(key))?,
                "evolve.dt" => cfg.dt = parse_f64(value).ok_or_else(|| fail(key))?,
                "evolve.t_final" => cfg.t_final = parse_f64(value).ok_or_else(|| fail(key))?,
                "evolve.fock" => cfg.fock = parse_usize(value).ok_or_else(|| fail(key))?,
                "evolve.chi_max" => cfg.chi_max = parse_usize(value).ok_or_else(|| fail(key))?,
                "evolve.precision" => cfg.precision = parse_f64(value).ok_or_else(|| fail(key))?,
                "evolve.krylov_tol" => {
                    cfg.krylov_tol = parse_f64(value).ok_or_else(|| fail(key))?
                }
                "evolve.krylov_max" => {
                    cfg.krylov_max = parse_usize(value).ok_or_else(|| fail(key))?
                }
                "snapshots" => {
                    let mut ts = Vec::new();
                    for tok in value.split([',', ' ']).filter(|t| !t.is_empty()) {
                        ts.push(parse_f64(tok).ok_or_else(|| fail("snapshots"))?);
                    }
                    cfg.snapshots = ts;
                }
                "output.dir" => cfg.out_dir = Some(PathBuf::from(value)),
                _ => return Err(Error::config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        if let Some(k) = kappa {
            if beta_set {
                return Err(Error::config(
                    "spectral.beta and spectral.kappa are alternatives; set only one",
                ));
            }
            if !(cfg.epsilon > 0.0) {
                return Err(Error::config("spectral.kappa needs system.epsilon > 0"));
            }
            cfg.beta = k / cfg.epsilon;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("spectral.s", self.s),
            ("spectral.omega_c", self.omega_c),
            ("spectral.beta", self.beta),
            ("evolve.dt", self.dt),
            ("evolve.t_final", self.t_final),
            ("evolve.precision", self.precision),
            ("evolve.krylov_tol", self.krylov_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha_prime >= 0.0) || !self.alpha_prime.is_finite() {
            return Err(Error::config(format!(
                "spectral.alpha_prime must be non-negative, got {}",
                self.alpha_prime
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::config(format!(
                "system.epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::config("chain.n_modes must be at least 1"));
        }
        if self.n_quad < 10 * self.n_modes {
            return Err(Error::config(format!(
                "chain.n_quad must be at least 10 * n_modes = {}, got {}",
                10 * self.n_modes,
                self.n_quad
            )));
        }
        if self.m_pad < self.n_modes {
            return Err(Error::config(format!(
                "chain.m_pad must be at least n_modes = {}, got {}",
                self.n_modes, self.m_pad
            )));
        }
        if self.fock < 2 {
            return Err(Error::config("evolve.fock must be at least 2"));
        }
        if self.chi_max == 0 || self.krylov_max == 0 {
            return Err(Error::config("evolve.chi_max and evolve.krylov_max must be positive"));
        }
        let mut last = 0.0;
        for &t in &self.snapshots {
            if !(t > 0.0) || t > self.t_final + 1e-9 {
                return Err(Error::config(format!(
                    "snapshot time {t} outside (0, t_final = {}]",
                    self.t_final
                )));
            }
            if t < last {
                return Err(Error::config("snapshots must be ascending"));
            }
            last = t;
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.epsilon * self.beta
    }

    pub fn spectral_model(&self) -> Result<SpectralModel> {
        SpectralModel::with_rescaled_alpha(self.s, self.alpha_prime, self.epsilon, self.omega_c)
    }

    pub fn thermal_model(&self) -> Result<ThermalizedSpectralModel> {
        ThermalizedSpectralModel::new(self.spectral_model()?, self.beta)
    }

    pub fn system_model(&self) -> SystemModel {
        SystemModel { epsilon: self.epsilon }
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            chi_max: self.chi_max,
            precision: self.precision,
            krylov_tol: self.krylov_tol,
            krylov_max: self.krylov_max,
        }
    }

    /// Canonical rendering: every key on its own sorted line, shortest
    /// round-trip float formatting. Equal configs hash equally.
    pub fn canonical_text(&self) -> String {
        let initial = match self.initial {
            InitialState::Excited => "excited",
            InitialState::PlusX => "plus_x",
        };
        let mut lines = vec![
            format!("chain.m_pad = {}", self.m_pad),
            format!("chain.n_modes = {}", self.n_modes),
            format!("chain.n_quad = {}", self.n_quad),
            format!("evolve.chi_max = {}", self.chi_max),
            format!("evolve.dt = {}", self.dt),
            format!("evolve.fock = {}", self.fock),
            format!("evolve.krylov_max = {}", self.krylov_max),
            format!("evolve.krylov_tol = {}", self.krylov_tol),
            format!("evolve.precision = {}", self.precision),
            format!("evolve.t_final = {}", self.t_final),
            format!("spectral.alpha_prime = {}", self.alpha_prime),
            format!("spectral.beta = {}", self.beta),
            format!("spectral.omega_c = {}", self.omega_c),
            format!("spectral.s = {}", self.s),
            format!("system.epsilon = {}", self.epsilon),
            format!("system.initial = {initial}"),
        ];
        let mut snaps = String::from("snapshots =");
        for t in &self.snapshots {
            write!(snaps, " {t}").expect("string write");
        }
        lines.push(snaps);
        lines.sort();
        let mut out = String::new();
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").expect("string write");
        }
        hex
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_usize(s: &str) -> Option<usize> {
    s.parse::<usize>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn defaults_pass_validation_and_desk_profile_rescales() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_modes, 120);
        assert_eq!(cfg.fock, 10);
        cfg.apply_desk();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_modes, 60);
        assert_eq!(cfg.snapshots, vec![30.0, 40.0]);
        assert_eq!(cfg.chi_max, 40);
    }

    #[test]
    fn parses_dotted_keys_with_comments() {
        let text = "
# heating regime
spectral.s = 2       # ohmicity
spectral.kappa = 0.4
system.epsilon = 0.2
system.initial = plus_x
chain.n_modes = 30
chain.n_quad = 1500
chain.m_pad = 120
evolve.dt = 0.05
snapshots = 10, 20
";
        let cfg = RunConfig::from_text(text).unwrap();
        assert_abs_diff_eq!(cfg.beta, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.kappa(), 0.4, epsilon = 1e-15);
        assert_eq!(cfg.initial, InitialState::PlusX);
        assert_eq!(cfg.n_modes, 30);
        assert_eq!(cfg.snapshots, vec![10.0, 20.0]);
        assert_abs_diff_eq!(cfg.dt, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn unknown_key_and_conflicting_temperature_are_config_errors() {
        let err = RunConfig::from_text("spectral.sss = 2\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_text("spectral.beta = 5\nspectral.kappa = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_text("chain.n_quad = 5\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_tracks_content_not_formatting() {
        let a = RunConfig::from_text("spectral.s = 2\n").unwrap();
        let b = RunConfig::from_text("  spectral.s   =  2.0   # same\n").unwrap();
        let c = RunConfig::from_text("spectral.s = 3\n").unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn rescaled_coupling_depends_on_exponent() {
        let cfg = RunConfig::from_text("spectral.s = 0.5\n").unwrap();
        let model = cfg.spectral_model().unwrap();
        // alpha = alpha' / eps^s
        assert_abs_diff_eq!(model.alpha, 0.01 / 0.2f64.sqrt(), epsilon = 1e-15);
        let cfg3 = RunConfig::from_text("spectral.s = 3\n").unwrap();
        assert_abs_diff_eq!(cfg3.spectral_model().unwrap().alpha, 1.25, epsilon = 1e-12);
    }
}
