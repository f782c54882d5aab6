//! End-to-end runs: chain coefficients -> evolution -> snapshot measurements
//! -> physical back-map -> analysis report, all written into a run directory
//! with a digest manifest. Every stage is callable on its own so the CLI
//! subcommands can replay parts of a run from checkpoints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    adiabatic_potential, cosine_similarity, estimate_damped_cosine_guess,
    estimate_shifted_exponential_guess, find_peaks, fit_curve, polaron_correlation_prediction,
    thermal_cycle_report, FitModel, FitResult, PeakEstimate, ThermalCycleReport,
};
use crate::chainmap::{build_star_grid, compute_chain_coefficients, ChainCoefficients};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::observables::{
    extended_spectrum, measure_chain_occupations, measure_correlation_set, measure_spin,
    ExtendedSpectrum,
};
use crate::spectral::{bose_occupation, InitialState, SpectralModel, ThermalizedSpectralModel};
use crate::tensornet::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::tensornet::{chain_hamiltonian_mpo, expectation, tdvp_step, MpsState};
use crate::thermofield::{physical_spectrum, PhysicalSpectrum};

fn fmt_field(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn time_label(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        format!("{t}")
    }
}

pub fn checkpoint_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("checkpoint_t{}.bin", time_label(t)))
}

/// Chain coefficients for the configured measure, written as `coeffs.csv`.
/// Row k holds the site energy omega_k and the coupling g_k feeding site k
/// (g_0 is the system-chain coupling).
pub fn stage_coeffs(cfg: &RunConfig, out: &Path) -> Result<ChainCoefficients> {
    let model = cfg.thermal_model()?;
    let coeffs = compute_chain_coefficients(&model, cfg.n_modes, cfg.n_quad)?;
    fs::create_dir_all(out)?;
    let mut w = open_writer(&out.join("coeffs.csv"))?;
    writeln!(
        w,
        "# s={} alpha_prime={} beta={} N={} n_quad={}",
        cfg.s, cfg.alpha_prime, cfg.beta, cfg.n_modes, cfg.n_quad
    )?;
    writeln!(w, "k,omega_k,g_k")?;
    for k in 0..coeffs.n_modes() {
        let g = if k == 0 { coeffs.g0 } else { coeffs.couplings[k - 1] };
        writeln!(w, "{k},{},{}", fmt_field(coeffs.omegas[k]), fmt_field(g))?;
    }
    w.flush()?;
    Ok(coeffs)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub state: MpsState,
}

pub struct EvolveSummary {
    pub snapshots: Vec<Snapshot>,
    /// (t, sz, sx, sy) at every step including t = 0.
    pub spin: Vec<(f64, f64, f64, f64)>,
    /// (t, <H>) at every step; the integrator conserves this up to Krylov and
    /// truncation error.
    pub energy: Vec<(f64, f64)>,
    /// (t, ||psi||) at every step.
    pub norm: Vec<(f64, f64)>,
    pub max_chi: usize,
    /// Largest top-Fock-level population seen at any snapshot; a truncation
    /// health indicator.
    pub top_fock_max: f64,
}

fn snapshot_steps(cfg: &RunConfig) -> Result<Vec<(u64, f64)>> {
    let mut steps = Vec::new();
    for &t in &cfg.snapshots {
        let k = (t / cfg.dt).round();
        if (k * cfg.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::config(format!(
                "snapshot time {t} is not a multiple of dt = {}",
                cfg.dt
            )));
        }
        steps.push((k as u64, t));
    }
    Ok(steps)
}

fn top_fock_population(state: &mut MpsState, fock: usize) -> Result<f64> {
    let mut proj = Array2::<C64>::zeros((fock, fock));
    proj[[fock - 1, fock - 1]] = C64::new(1.0, 0.0);
    let n_sites = state.bond_dims().len() + 1;
    let mut worst = 0.0f64;
    for site in 1..n_sites {
        let p = state.expectation_site(site, &proj.view())?.re;
        worst = worst.max(p);
    }
    Ok(worst)
}

/// Integrate the configured model, logging spin components, chain
/// occupations and bond dimensions per step, and checkpointing the state at
/// every snapshot time.
pub fn stage_evolve(cfg: &RunConfig, coeffs: &ChainCoefficients, out: &Path) -> Result<EvolveSummary> {
    let snap_steps = snapshot_steps(cfg)?;
    let n_steps = (cfg.t_final / cfg.dt).round() as u64;
    let sys = cfg.system_model();
    let mpo = chain_hamiltonian_mpo(&sys, coeffs, cfg.fock)?;
    let mut state = MpsState::initial_state(cfg.n_modes, cfg.fock, cfg.initial)?;
    let evo = cfg.evolution();

    fs::create_dir_all(out)?;
    let mut spin_w = open_writer(&out.join("spin.csv"))?;
    let mut occ_w = open_writer(&out.join("chain_occ.csv"))?;
    let mut bond_w = open_writer(&out.join("bonds.csv"))?;
    writeln!(spin_w, "t,sz,sx,sy")?;
    writeln!(occ_w, "t,site,n")?;
    writeln!(bond_w, "step,bond,chi")?;

    let mut spin_series = Vec::with_capacity(n_steps as usize + 1);
    let mut energy_series = Vec::with_capacity(n_steps as usize + 1);
    let mut norm_series = Vec::with_capacity(n_steps as usize + 1);
    let mut snapshots = Vec::new();
    let mut max_chi = 1usize;
    let mut top_fock_max = 0.0f64;
    let hash = cfg.config_hash();

    let record = |state: &mut MpsState,
                      step: u64,
                      spin_w: &mut BufWriter<File>,
                      occ_w: &mut BufWriter<File>,
                      bond_w: &mut BufWriter<File>,
                      spin_series: &mut Vec<(f64, f64, f64, f64)>,
                      energy_series: &mut Vec<(f64, f64)>,
                      norm_series: &mut Vec<(f64, f64)>|
     -> Result<()> {
        let t = step as f64 * cfg.dt;
        let spin = measure_spin(state)?;
        writeln!(
            spin_w,
            "{},{},{},{}",
            fmt_field(t),
            fmt_field(spin.sz),
            fmt_field(spin.sx),
            fmt_field(spin.sy)
        )?;
        spin_series.push((t, spin.sz, spin.sx, spin.sy));
        energy_series.push((t, expectation(state, &mpo).re));
        norm_series.push((t, state.norm()));
        for (site, n) in measure_chain_occupations(state)?.iter().enumerate() {
            writeln!(occ_w, "{},{site},{}", fmt_field(t), fmt_field(*n))?;
        }
        for (b, chi) in state.bond_dims().iter().enumerate() {
            writeln!(bond_w, "{step},{b},{chi}")?;
        }
        Ok(())
    };

    record(
        &mut state,
        0,
        &mut spin_w,
        &mut occ_w,
        &mut bond_w,
        &mut spin_series,
        &mut energy_series,
        &mut norm_series,
    )?;
    for step in 1..=n_steps {
        tdvp_step(&mut state, &mpo, &evo)?;
        max_chi = max_chi.max(state.max_bond());
        record(
            &mut state,
            step,
            &mut spin_w,
            &mut occ_w,
            &mut bond_w,
            &mut spin_series,
            &mut energy_series,
            &mut norm_series,
        )?;
        if let Some(&(_, t_snap)) = snap_steps.iter().find(|&&(k, _)| k == step) {
            let mut snap = state.clone();
            let p = top_fock_population(&mut snap, cfg.fock)?;
            top_fock_max = top_fock_max.max(p);
            let meta = CheckpointMeta {
                time: t_snap,
                step,
                config_hash: hash.clone(),
                bond_dims: snap.bond_dims(),
                chi_saturated: snap.chi_saturated,
            };
            save_checkpoint(&checkpoint_path(out, t_snap), &snap, &meta)?;
            snapshots.push(Snapshot { time: t_snap, state: snap });
        }
    }
    spin_w.flush()?;
    occ_w.flush()?;
    bond_w.flush()?;
    Ok(EvolveSummary {
        snapshots,
        spin: spin_series,
        energy: energy_series,
        norm: norm_series,
        max_chi,
        top_fock_max,
    })
}

/// Reload the states checkpointed by `stage_evolve`, refusing checkpoints
/// that were produced under a different configuration.
pub fn load_snapshots(cfg: &RunConfig, dir: &Path) -> Result<Vec<Snapshot>> {
    let hash = cfg.config_hash();
    let mut snaps = Vec::new();
    for &t in &cfg.snapshots {
        let path = checkpoint_path(dir, t);
        let (state, meta) = load_checkpoint(&path)?;
        if meta.config_hash != hash {
            return Err(Error::validation(format!(
                "checkpoint {} was produced by a different config (hash {} vs {hash})",
                path.display(),
                meta.config_hash
            )));
        }
        snaps.push(Snapshot { time: meta.time, state });
    }
    Ok(snaps)
}

/// Largest per-axis node count exported into corr.csv; the full matrices
/// stay in memory for analysis.
const CORR_EXPORT_MAX: usize = 201;

/// Correlation sets and extended spectra at each snapshot, written as
/// `ext_spectrum.csv` (full star grid) and `corr.csv` (stride-subsampled).
pub fn stage_measure(
    cfg: &RunConfig,
    coeffs: &ChainCoefficients,
    snapshots: &mut [Snapshot],
    out: &Path,
) -> Result<Vec<ExtendedSpectrum>> {
    let star = build_star_grid(coeffs, cfg.m_pad)?;
    fs::create_dir_all(out)?;
    let mut spec_w = open_writer(&out.join("ext_spectrum.csv"))?;
    let mut corr_w = open_writer(&out.join("corr.csv"))?;
    writeln!(spec_w, "t,omega,n,density")?;
    writeln!(corr_w, "t,omega,omega_prime,re_C,im_C")?;
    let mut spectra = Vec::with_capacity(snapshots.len());
    for snap in snapshots.iter_mut() {
        let corr = measure_correlation_set(&mut snap.state, snap.time)?;
        let spec = extended_spectrum(&corr, &star)?;
        for i in 0..spec.frequencies.len() {
            writeln!(
                spec_w,
                "{},{},{},{}",
                fmt_field(snap.time),
                fmt_field(spec.frequencies[i]),
                fmt_field(spec.occupations[i]),
                fmt_field(spec.density[i])
            )?;
        }
        let m = spec.frequencies.len();
        let stride = m.div_ceil(CORR_EXPORT_MAX);
        for i in (0..m).step_by(stride) {
            for j in (0..m).step_by(stride) {
                let c = spec.corr[[i, j]];
                writeln!(
                    corr_w,
                    "{},{},{},{},{}",
                    fmt_field(snap.time),
                    fmt_field(spec.frequencies[i]),
                    fmt_field(spec.frequencies[j]),
                    fmt_field(c.re),
                    fmt_field(c.im)
                )?;
            }
        }
        spectra.push(spec);
    }
    spec_w.flush()?;
    corr_w.flush()?;
    Ok(spectra)
}

/// Physical-picture occupations per snapshot, written as
/// `physical_spectrum.csv`.
pub fn stage_backmap(
    cfg: &RunConfig,
    spectra: &[ExtendedSpectrum],
    out: &Path,
) -> Result<Vec<PhysicalSpectrum>> {
    fs::create_dir_all(out)?;
    let mut w = open_writer(&out.join("physical_spectrum.csv"))?;
    writeln!(w, "t,omega,n,baseline,excess")?;
    let mut all = Vec::with_capacity(spectra.len());
    for spec in spectra {
        let phys = physical_spectrum(spec, cfg.beta)?;
        for i in 0..phys.frequencies.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_field(phys.time),
                fmt_field(phys.frequencies[i]),
                fmt_field(phys.occupations[i]),
                fmt_field(phys.baseline[i]),
                fmt_field(phys.excess[i])
            )?;
        }
        all.push(phys);
    }
    w.flush()?;
    Ok(all)
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotPeaks {
    pub time: f64,
    pub positive: Vec<PeakEstimate>,
    pub negative: Vec<PeakEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialSummary {
    pub omega0: f64,
    pub g0: f64,
    pub q_min: f64,
    pub barrier: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub config_hash: String,
    pub omega_c: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Peaks of the extended-spectrum density in the default windows
    /// [0.5 eps, 1.5 eps] and its mirror, per snapshot.
    pub extended_peaks: Vec<SnapshotPeaks>,
    /// Peaks of the physical excess occupation, positive window only.
    pub physical_peaks: Vec<SnapshotPeaks>,
    pub thermal_cycle: Option<ThermalCycleReport>,
    pub spin_fit: Option<FitResult>,
    pub spin_fit_error: Option<String>,
    pub fit_window: (f64, f64),
    /// Cosine similarity of |C(w, w')| against the polaron prediction on the
    /// band [0.5, 1] omega_c at the latest snapshot.
    pub polaron_similarity: Option<f64>,
    /// (time, total excess physical excitation) per snapshot.
    pub excess_totals: Vec<(f64, f64)>,
    /// Relative change of the excess total between the last two snapshots.
    pub saturation_rel_change: Option<f64>,
    pub potential: PotentialSummary,
}

fn cell_widths(freqs: &[f64]) -> Vec<f64> {
    let m = freqs.len();
    if m < 2 {
        return vec![1.0; m];
    }
    (0..m)
        .map(|i| {
            let left = if i == 0 {
                freqs[0] - 0.5 * (freqs[1] - freqs[0])
            } else {
                0.5 * (freqs[i - 1] + freqs[i])
            };
            let right = if i == m - 1 {
                freqs[m - 1] + 0.5 * (freqs[m - 1] - freqs[m - 2])
            } else {
                0.5 * (freqs[i] + freqs[i + 1])
            };
            right - left
        })
        .collect()
}

fn polaron_band_similarity(spec: &ExtendedSpectrum, model: &SpectralModel) -> Option<f64> {
    let band: Vec<usize> = spec
        .frequencies
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= 0.5 * model.omega_c && w <= model.omega_c)
        .map(|(i, _)| i)
        .collect();
    if band.len() < 3 {
        return None;
    }
    let freqs: Vec<f64> = band.iter().map(|&i| spec.frequencies[i]).collect();
    let pred = polaron_correlation_prediction(model, &freqs);
    let pred_flat: Vec<f64> = pred.matrix.iter().flatten().copied().collect();
    let measured: Vec<f64> = band
        .iter()
        .flat_map(|&i| band.iter().map(move |&j| spec.corr[[i, j]].norm()))
        .collect();
    Some(cosine_similarity(&measured, &pred_flat))
}

/// Fit window defaults to the full series; callers probing late-time
/// behaviour pass an explicit window.
pub fn stage_analyze(
    cfg: &RunConfig,
    spin: &[(f64, f64, f64, f64)],
    spectra: &[ExtendedSpectrum],
    physical: &[PhysicalSpectrum],
    coeffs: &ChainCoefficients,
    fit_window: Option<(f64, f64)>,
    out: &Path,
) -> Result<AnalysisReport> {
    let eps = cfg.epsilon;
    let window_pos = (0.5 * eps, 1.5 * eps);
    let window_neg = (-1.5 * eps, -0.5 * eps);
    let mut extended_peaks = Vec::new();
    for spec in spectra {
        let (positive, negative) = if eps > 0.0 {
            (
                find_peaks(&spec.frequencies, &spec.density, window_pos)?,
                find_peaks(&spec.frequencies, &spec.density, window_neg)?,
            )
        } else {
            (Vec::new(), Vec::new())
        };
        extended_peaks.push(SnapshotPeaks { time: spec.time, positive, negative });
    }
    let mut physical_peaks = Vec::new();
    for phys in physical {
        let positive = if eps > 0.0 {
            find_peaks(&phys.frequencies, &phys.excess, window_pos)?
        } else {
            Vec::new()
        };
        physical_peaks.push(SnapshotPeaks { time: phys.time, positive, negative: Vec::new() });
    }
    let thermal_cycle = if spectra.len() >= 2 && eps > 0.0 {
        let n = spectra.len();
        Some(thermal_cycle_report(&spectra[n - 2], &spectra[n - 1], cfg.beta, eps)?)
    } else {
        None
    };

    let window = fit_window.unwrap_or((0.0, cfg.t_final));
    let ts: Vec<f64> = spin
        .iter()
        .filter(|r| r.0 >= window.0 && r.0 <= window.1)
        .map(|r| r.0)
        .collect();
    let (series, model): (Vec<f64>, FitModel) = match cfg.initial {
        InitialState::PlusX => (
            spin.iter()
                .filter(|r| r.0 >= window.0 && r.0 <= window.1)
                .map(|r| r.2)
                .collect(),
            FitModel::DampedCosine,
        ),
        InitialState::Excited => (
            spin.iter()
                .filter(|r| r.0 >= window.0 && r.0 <= window.1)
                .map(|r| r.1)
                .collect(),
            FitModel::ShiftedExponential,
        ),
    };
    let guess = match model {
        FitModel::DampedCosine => estimate_damped_cosine_guess(&ts, &series),
        FitModel::ShiftedExponential => estimate_shifted_exponential_guess(&ts, &series),
    };
    let (spin_fit, spin_fit_error) = match guess {
        Some(g) => match fit_curve(&ts, &series, model, &g) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, Some("series too short or featureless for a fit guess".into())),
    };

    let polaron_similarity = spectra
        .last()
        .and_then(|spec| cfg.spectral_model().ok().map(|m| (spec, m)))
        .and_then(|(spec, m)| polaron_band_similarity(spec, &m));

    let mut excess_totals = Vec::new();
    for phys in physical {
        let widths = cell_widths(&phys.frequencies);
        let total: f64 = phys.excess.iter().zip(&widths).map(|(e, w)| e * w).sum();
        excess_totals.push((phys.time, total));
    }
    let saturation_rel_change = if excess_totals.len() >= 2 {
        let a = excess_totals[excess_totals.len() - 2].1;
        let b = excess_totals[excess_totals.len() - 1].1;
        Some((b - a).abs() / a.abs().max(1e-300))
    } else {
        None
    };

    let omega0 = coeffs.omegas[0];
    let qspan = (2.0 * coeffs.g0 / omega0).max(1.0);
    let q_grid: Vec<f64> = (0..201).map(|i| -qspan + 2.0 * qspan * i as f64 / 200.0).collect();
    let pot = adiabatic_potential(eps, coeffs.g0, omega0, &q_grid)?;
    let report = AnalysisReport {
        config_hash: cfg.config_hash(),
        omega_c: cfg.omega_c,
        epsilon: eps,
        beta: cfg.beta,
        kappa: cfg.kappa(),
        extended_peaks,
        physical_peaks,
        thermal_cycle,
        spin_fit,
        spin_fit_error,
        fit_window: window,
        polaron_similarity,
        excess_totals,
        saturation_rel_change,
        potential: PotentialSummary {
            omega0,
            g0: coeffs.g0,
            q_min: pot.q_min,
            barrier: pot.barrier,
        },
    };
    fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(out.join("analysis_report.json"), json)?;
    Ok(report)
}

/// Read back a spin.csv written by `stage_evolve`.
pub fn read_spin_csv(path: &Path) -> Result<Vec<(f64, f64, f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::validation(format!(
                "{}: line {} has {} columns, expected 4",
                path.display(),
                i + 1,
                cols.len()
            )));
        }
        let mut vals = [0.0f64; 4];
        for (slot, col) in vals.iter_mut().zip(&cols) {
            *slot = col.parse::<f64>().map_err(|e| {
                Error::validation(format!("{}: line {}: {e}", path.display(), i + 1))
            })?;
        }
        rows.push((vals[0], vals[1], vals[2], vals[3]));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub status: String,
    pub error: Option<String>,
    pub version: String,
    pub omega_c: f64,
    pub config_hash: String,
    pub wall_clock_seconds: f64,
    pub max_chi: usize,
    pub top_fock_max: f64,
    /// Output file name -> sha256 content digest.
    pub files: BTreeMap<String, String>,
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("string write");
    }
    Ok(hex)
}

fn collect_digests(cfg: &RunConfig, out: &Path) -> BTreeMap<String, String> {
    let mut names: Vec<String> = vec![
        "config.txt".into(),
        "coeffs.csv".into(),
        "spin.csv".into(),
        "chain_occ.csv".into(),
        "bonds.csv".into(),
        "ext_spectrum.csv".into(),
        "corr.csv".into(),
        "physical_spectrum.csv".into(),
        "analysis_report.json".into(),
    ];
    for &t in &cfg.snapshots {
        let p = checkpoint_path(out, t);
        names.push(p.file_name().expect("checkpoint name").to_string_lossy().into_owned());
        names.push(format!("{}.json", p.file_name().expect("name").to_string_lossy()));
    }
    let mut files = BTreeMap::new();
    for name in names {
        let path = out.join(&name);
        if path.is_file() {
            if let Ok(d) = file_digest(&path) {
                files.insert(name, d);
            }
        }
    }
    files
}

/// Full pipeline. The manifest is written even when a stage fails, with the
/// status marked FAILED and the error attributed to its stage; the error is
/// still returned so the caller exits nonzero.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.canonical_text())?;
    let t0 = Instant::now();
    let mut max_chi = 0usize;
    let mut top_fock_max = 0.0f64;
    let outcome = (|| -> Result<()> {
        let coeffs = stage_coeffs(cfg, out).map_err(|e| e.with_stage("coeffs"))?;
        let summary = stage_evolve(cfg, &coeffs, out).map_err(|e| e.with_stage("evolve"))?;
        max_chi = summary.max_chi;
        top_fock_max = summary.top_fock_max;
        let mut snaps = summary.snapshots;
        let spectra =
            stage_measure(cfg, &coeffs, &mut snaps, out).map_err(|e| e.with_stage("measure"))?;
        let physical =
            stage_backmap(cfg, &spectra, out).map_err(|e| e.with_stage("backmap"))?;
        stage_analyze(cfg, &summary.spin, &spectra, &physical, &coeffs, None, out)
            .map_err(|e| e.with_stage("analyze"))?;
        Ok(())
    })();
    let manifest = Manifest {
        status: if outcome.is_ok() { "SUCCESS" } else { "FAILED" }.into(),
        error: outcome.as_ref().err().map(|e| e.to_string()),
        version: env!("CARGO_PKG_VERSION").into(),
        omega_c: cfg.omega_c,
        config_hash: cfg.config_hash(),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        max_chi,
        top_fock_max,
        files: collect_digests(cfg, out),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    outcome.map(|()| manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn line(name: &str, passed: bool, detail: String) -> ValidationLine {
    ValidationLine { name: name.into(), passed, detail }
}

/// Deterministic pseudo-random stream for the validation suites; the library
/// itself stays seed-free.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn suite_balance() -> Result<ValidationLine> {
    let exponents = [0.5, 1.0, 2.0, 3.0];
    let mut rng = SplitMix(0x5eed);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let s = exponents[i % exponents.len()];
        let beta = 10f64.powf(3.0 * rng.next_f64() - 1.0);
        let omega = (rng.next_f64() * 0.999 + 1e-4).min(1.0);
        let base = SpectralModel::new(s, 0.01 / 0.2f64.powf(s), 1.0)?;
        let model = ThermalizedSpectralModel::new(base, beta)?;
        let ratio = model.value(omega) / model.value(-omega);
        let want = (beta * omega).exp();
        let rel = (ratio - want).abs() / want;
        worst = worst.max(rel);
    }
    Ok(line(
        "balance",
        worst <= 1e-12,
        format!("worst relative detailed-balance error {worst:.3e} over 1000 draws"),
    ))
}

fn suite_moments() -> Result<ValidationLine> {
    let cases = [(0.5, 2.0), (2.0, 20.0), (3.0, 0.5)];
    let mut worst = 0.0f64;
    for (s, beta) in cases {
        let base = SpectralModel::with_rescaled_alpha(s, 0.01, 0.2, 1.0)?;
        let model = ThermalizedSpectralModel::new(base, beta)?;
        let coeffs = compute_chain_coefficients(&model, 20, 2000)?;
        let mu0 = crate::oracle::quadrature_moment(&model, 0)?;
        let rel = (coeffs.g0 * coeffs.g0 - mu0).abs() / mu0;
        worst = worst.max(rel);
    }
    Ok(line(
        "moments",
        worst <= 1e-8,
        format!("worst relative g0^2 vs zeroth-moment error {worst:.3e}"),
    ))
}

fn suite_oracle() -> Result<ValidationLine> {
    use crate::oracle::DenseInstance;
    use crate::spectral::SystemModel;
    use crate::tensornet::EvolutionConfig;

    let coeffs = ChainCoefficients::synthetic(
        vec![0.7, 0.4, 0.9],
        vec![0.3, 0.2],
        0.35,
    );
    let sys = SystemModel { epsilon: 0.2 };
    let fock = 3;
    let dense = DenseInstance::new(&sys, &coeffs, fock, InitialState::PlusX)?;
    let mpo = chain_hamiltonian_mpo(&sys, &coeffs, fock)?;
    let mut state = MpsState::initial_state(coeffs.n_modes(), fock, InitialState::PlusX)?;
    let evo = EvolutionConfig { dt: 0.01, chi_max: 24, ..EvolutionConfig::default() };
    let mut worst = 0.0f64;
    for step in 1..=100u32 {
        tdvp_step(&mut state, &mpo, &evo)?;
        if step % 10 == 0 {
            let t = step as f64 * evo.dt;
            let psi = dense.evolve_to(t)?;
            let want = dense.sigma_z(&psi);
            let got = measure_spin(&mut state)?.sz;
            worst = worst.max((got - want).abs());
        }
    }
    Ok(line(
        "oracle",
        worst <= 1e-4,
        format!("worst MPS-vs-dense sigma_z deviation {worst:.3e} over t in [0, 1]"),
    ))
}

fn suite_thermofield() -> Result<ValidationLine> {
    let base = SpectralModel::new(1.0, 0.05, 1.0)?;
    let model = ThermalizedSpectralModel::new(base, 5.0)?;
    let coeffs = compute_chain_coefficients(&model, 6, 4000)?;
    let star = build_star_grid(&coeffs, 12)?;
    let fock = 3;
    let mut state = MpsState::initial_state(coeffs.n_modes(), fock, InitialState::Excited)?;
    let corr = measure_correlation_set(&mut state, 0.0)?;
    let spec = extended_spectrum(&corr, &star)?;
    let phys = physical_spectrum(&spec, 5.0)?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, &w) in phys.frequencies.iter().enumerate() {
        let want = bose_occupation(5.0, w);
        if 5.0 * w <= 20.0 {
            let rel = (phys.occupations[i] - want).abs() / want;
            worst = worst.max(rel);
            ok &= rel <= 1e-6;
        } else {
            ok &= (phys.occupations[i] - want).abs() <= 1e-12;
        }
    }
    Ok(line(
        "thermofield",
        ok,
        format!("vacuum back-map worst relative deviation from Bose-Einstein {worst:.3e}"),
    ))
}

/// Named self-check suites surfaced by the CLI `validate` subcommand.
pub fn run_validation(suite: &str) -> Result<Vec<ValidationLine>> {
    let lines = match suite {
        "balance" => vec![suite_balance()?],
        "moments" => vec![suite_moments()?],
        "oracle" => vec![suite_oracle()?],
        "thermofield" => vec![suite_thermofield()?],
        "all" => vec![suite_balance()?, suite_moments()?, suite_oracle()?, suite_thermofield()?],
        other => {
            return Err(Error::config(format!(
                "unknown validation suite `{other}`; expected balance, moments, oracle, thermofield or all"
            )))
        }
    };
    Ok(lines)
}
