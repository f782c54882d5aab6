//! Post-processing: peak finding on spectra, damped-cosine and shifted
//! exponential least-squares fits, the displaced-oscillator double well, the
//! polaron pair-correlation prediction, and two-snapshot heating diagnostics.

use ndarray::prelude::*;
use ndarray_linalg::Solve;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::ExtendedSpectrum;
use crate::spectral::SpectralModel;

#[derive(Debug, Clone, Serialize)]
pub struct PeakEstimate {
    /// Sub-grid peak location from a log-parabola through the apex triple.
    pub location: f64,
    pub height: f64,
    /// Full width at half maximum implied by the parabola curvature.
    pub width: f64,
    pub window: (f64, f64),
}

/// Local maxima of `density` inside `window` after 3-point smoothing.
/// Returned in ascending location order; an empty list means no peak rose
/// above the noise floor, which is not an error.
pub fn find_peaks(
    frequencies: &[f64],
    density: &[f64],
    window: (f64, f64),
) -> Result<Vec<PeakEstimate>> {
    if frequencies.len() != density.len() {
        return Err(Error::config("frequency and density lengths differ"));
    }
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::config(format!("empty peak window [{lo}, {hi}]")));
    }
    let idx: Vec<usize> = (0..frequencies.len())
        .filter(|&i| frequencies[i] >= lo && frequencies[i] <= hi)
        .collect();
    // fewer than three nodes cannot carry a local maximum: nothing to find
    if idx.len() < 3 {
        return Ok(Vec::new());
    }
    let y: Vec<f64> = idx.iter().map(|&i| density[i]).collect();
    let x: Vec<f64> = idx.iter().map(|&i| frequencies[i]).collect();
    let n = y.len();
    let mut smooth = y.clone();
    for i in 1..n - 1 {
        smooth[i] = (y[i - 1] + y[i] + y[i + 1]) / 3.0;
    }
    let floor = 1e-12 * smooth.iter().cloned().fold(0.0f64, f64::max);
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1]) {
            continue;
        }
        if !(smooth[i] > floor && smooth[i] > 0.0) {
            continue;
        }
        let triple_positive = smooth[i - 1] > 0.0 && smooth[i + 1] > 0.0;
        let (location, height, width) = if triple_positive {
            log_parabola(
                (x[i - 1], smooth[i - 1]),
                (x[i], smooth[i]),
                (x[i + 1], smooth[i + 1]),
            )
            .unwrap_or((x[i], smooth[i], x[i + 1] - x[i - 1]))
        } else {
            (x[i], smooth[i], x[i + 1] - x[i - 1])
        };
        peaks.push(PeakEstimate { location, height, width, window });
    }
    Ok(peaks)
}

/// Vertex of the parabola through three points in log space. None when the
/// points do not bend downward.
fn log_parabola(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<(f64, f64, f64)> {
    let (x0, y0) = (p0.0, p0.1.ln());
    let (x1, y1) = (p1.0, p1.1.ln());
    let (x2, y2) = (p2.0, p2.1.ln());
    // divided differences: L(x) = y0 + d1 (x-x0) + d2 (x-x0)(x-x1)
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = ((y2 - y1) / (x2 - x1) - d1) / (x2 - x0);
    if !(d2 < 0.0) {
        return None;
    }
    let xv = 0.5 * (x0 + x1 - d1 / d2);
    if xv < x0 || xv > x2 {
        return None;
    }
    let lv = y0 + d1 * (xv - x0) + d2 * (xv - x0) * (xv - x1);
    // log y = lv + d2 (x-xv)^2 drops by ln 2 at the half-maximum points
    let width = 2.0 * ((2.0f64).ln() / -d2).sqrt();
    Some((xv, lv.exp(), width))
}

pub fn strongest(peaks: &[PeakEstimate]) -> Option<&PeakEstimate> {
    peaks
        .iter()
        .max_by(|a, b| a.height.partial_cmp(&b.height).expect("finite heights"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// a cos(w t) e^(-g t); parameters [a, w, g].
    DampedCosine,
    /// a e^(-g t) + c; parameters [a, g, c].
    ShiftedExponential,
}

impl FitModel {
    pub fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, p: &[f64], t: f64) -> f64 {
        match self {
            FitModel::DampedCosine => p[0] * (p[1] * t).cos() * (-p[2] * t).exp(),
            FitModel::ShiftedExponential => p[0] * (-p[1] * t).exp() + p[2],
        }
    }

    fn jacobian_row(&self, p: &[f64], t: f64) -> [f64; 3] {
        match self {
            FitModel::DampedCosine => {
                let e = (-p[2] * t).exp();
                let c = (p[1] * t).cos();
                let s = (p[1] * t).sin();
                [c * e, -p[0] * t * s * e, -p[0] * t * c * e]
            }
            FitModel::ShiftedExponential => {
                let e = (-p[1] * t).exp();
                [e, -p[0] * t * e, 1.0]
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    /// [a, w, g] or [a, g, c] depending on the model.
    pub params: Vec<f64>,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Levenberg-Marquardt with analytic Jacobians; converges when the update
/// norm falls below 1e-10 relative to the parameter scale.
pub fn fit_curve(
    times: &[f64],
    values: &[f64],
    model: FitModel,
    initial_guess: &[f64],
) -> Result<FitResult> {
    let np = model.n_params();
    if initial_guess.len() != np {
        return Err(Error::config(format!("{model:?} takes {np} parameters")));
    }
    if times.len() != values.len() {
        return Err(Error::config("time and value lengths differ"));
    }
    if times.len() < 4 * np {
        return Err(Error::config(format!(
            "need at least {} samples for a {np}-parameter fit, got {}",
            4 * np,
            times.len()
        )));
    }
    let cost_of = |p: &[f64]| -> f64 {
        times
            .iter()
            .zip(values)
            .map(|(&t, &y)| {
                let r = y - model.eval(p, t);
                r * r
            })
            .sum()
    };
    let mut params = initial_guess.to_vec();
    let mut cost = cost_of(&params);
    let mut lambda = 1e-3;
    let tol = 1e-10;
    let max_iter = 500;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut jtj = Array2::<f64>::zeros((np, np));
        let mut jtr = Array1::<f64>::zeros(np);
        for (&t, &y) in times.iter().zip(values) {
            let row = model.jacobian_row(&params, t);
            let r = y - model.eval(&params, t);
            for a in 0..np {
                jtr[a] += row[a] * r;
                for b in 0..np {
                    jtj[[a, b]] += row[a] * row[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..24 {
            let mut damped = jtj.clone();
            for a in 0..np {
                damped[[a, a]] += lambda * jtj[[a, a]].max(1e-30);
            }
            let delta = match damped.solve(&jtr) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= 3.0;
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            let trial_cost = cost_of(&trial);
            if trial_cost <= cost {
                let scale = 1.0 + params.iter().map(|p| p.abs()).fold(0.0f64, f64::max);
                let step = delta.iter().map(|d| d.abs()).fold(0.0f64, f64::max);
                params = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if step <= tol * scale {
                    return finish(model, params, cost, values.len(), iterations);
                }
                break;
            }
            lambda *= 3.0;
        }
        if !accepted {
            // stuck in a damping spiral: treat as converged if the gradient
            // step is already below tolerance, otherwise report failure below
            break;
        }
    }
    let rms = (cost / values.len() as f64).sqrt();
    Err(Error::numeric(format!(
        "fit did not converge in {iterations} iterations; best {model:?} params {params:?}, residual rms {rms:.3e}"
    )))
}

fn finish(
    model: FitModel,
    mut params: Vec<f64>,
    cost: f64,
    n: usize,
    iterations: usize,
) -> Result<FitResult> {
    // decay-rate slot: index 2 for the cosine model, 1 for the exponential
    let g_idx = match model {
        FitModel::DampedCosine => 2,
        FitModel::ShiftedExponential => 1,
    };
    if params[g_idx] < 0.0 {
        if params[g_idx] > -1e-10 {
            params[g_idx] = 0.0;
        } else {
            return Err(Error::numeric(format!(
                "fit selected negative decay rate {}",
                params[g_idx]
            )));
        }
    }
    // sign convention: keep amplitude positive for the cosine model
    if model == FitModel::DampedCosine {
        params[1] = params[1].abs();
    }
    Ok(FitResult {
        model,
        params,
        residual_rms: (cost / n as f64).sqrt(),
        iterations,
    })
}

/// Starting point for a damped-cosine fit read off the series itself: the
/// zero-crossing spacing pins the frequency to well inside the convex basin
/// (phase error over the window must stay below pi), the first sample gives
/// the amplitude, and the early/late envelope ratio gives the decay.
pub fn estimate_damped_cosine_guess(times: &[f64], values: &[f64]) -> Option<[f64; 3]> {
    if times.len() != values.len() || values.len() < 8 {
        return None;
    }
    let mut crossings = Vec::new();
    for i in 0..values.len() - 1 {
        if values[i] != 0.0 && values[i].signum() != values[i + 1].signum() {
            let f = values[i] / (values[i] - values[i + 1]);
            crossings.push(times[i] + f * (times[i + 1] - times[i]));
        }
    }
    if crossings.is_empty() {
        return None;
    }
    let n = crossings.len();
    // decay does not move the cosine zeros: crossings sit pi/w apart, the
    // first one at pi/(2w) when the window spans less than half a period
    let omega = if n >= 2 {
        (n - 1) as f64 * std::f64::consts::PI / (crossings[n - 1] - crossings[0])
    } else {
        0.5 * std::f64::consts::PI / crossings[0]
    };
    let a = values[0];
    let q = (values.len() / 4).max(1);
    let early = values[..q].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let late = values[values.len() - q..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let span = times[values.len() - 1 - q / 2] - times[q / 2];
    let gamma = if late > 0.0 && early > late && span > 0.0 {
        (early / late).ln() / span
    } else {
        0.0
    };
    Some([a, omega, gamma])
}

/// Starting point for a shifted-exponential fit: late-window mean for the
/// offset, first sample for the amplitude, half-life crossing for the rate.
pub fn estimate_shifted_exponential_guess(times: &[f64], values: &[f64]) -> Option<[f64; 3]> {
    let n = values.len();
    if times.len() != n || n < 8 {
        return None;
    }
    let q = (n / 4).max(1);
    let c: f64 = values[n - q..].iter().sum::<f64>() / q as f64;
    let a = values[0] - c;
    let target = c + 0.5 * a;
    let mut gamma = None;
    for i in 0..n - 1 {
        if (values[i] - target) * (values[i + 1] - target) <= 0.0 && values[i] != values[i + 1] {
            let f = (values[i] - target) / (values[i] - values[i + 1]);
            let t_half = times[i] + f * (times[i + 1] - times[i]);
            if t_half > 0.0 {
                gamma = Some((2.0f64).ln() / t_half);
            }
            break;
        }
    }
    let fallback = 1.0 / (times[n - 1] - times[0]).max(f64::MIN_POSITIVE);
    Some([a, gamma.unwrap_or(fallback), c])
}

/// Adiabatic branches of the TLS + first chain mode after displacing that
/// mode coherently by q: V(q) = w0 q^2 +- sqrt(eps^2/4 + 4 g0^2 q^2).
#[derive(Debug, Clone, Serialize)]
pub struct AdiabaticPotential {
    pub q: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    /// Displacement of the lower-branch minimum (>= 0; 0 means single well).
    pub q_min: f64,
    pub v_at_min: f64,
    /// V_-(0) - V_-(q_min); None when the well is single.
    pub barrier: Option<f64>,
}

pub fn adiabatic_potential(
    epsilon: f64,
    g0: f64,
    omega0: f64,
    q_grid: &[f64],
) -> Result<AdiabaticPotential> {
    if !(omega0 > 0.0) {
        return Err(Error::config("adiabatic potential needs omega0 > 0"));
    }
    let gap = |q: f64| (0.25 * epsilon * epsilon + 4.0 * g0 * g0 * q * q).sqrt();
    let v_minus_at = |q: f64| omega0 * q * q - gap(q);
    let v_plus: Vec<f64> = q_grid.iter().map(|&q| omega0 * q * q + gap(q)).collect();
    let v_minus: Vec<f64> = q_grid.iter().map(|&q| v_minus_at(q)).collect();
    // stationary point off the origin exists when 2 g0^2 / w0 > |eps| / 2
    let s = 2.0 * g0 * g0 / omega0;
    let q_min_sq = if s > 0.5 * epsilon.abs() {
        (s * s - 0.25 * epsilon * epsilon) / (4.0 * g0 * g0)
    } else {
        0.0
    };
    let q_min = q_min_sq.sqrt();
    let v_at_min = v_minus_at(q_min);
    let barrier = if q_min > 0.0 {
        Some(v_minus_at(0.0) - v_at_min)
    } else {
        None
    };
    Ok(AdiabaticPotential { q: q_grid.to_vec(), v_plus, v_minus, q_min, v_at_min, barrier })
}

/// Polaron-picture prediction C(w, w') = w_c sqrt(J(w) J(w')) / (w w') on the
/// positive part of `grid`; zero and negative nodes are excluded.
#[derive(Debug, Clone, Serialize)]
pub struct PolaronPrediction {
    pub frequencies: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

pub fn polaron_correlation_prediction(model: &SpectralModel, grid: &[f64]) -> PolaronPrediction {
    let frequencies: Vec<f64> = grid.iter().copied().filter(|&w| w > 0.0).collect();
    let ratio: Vec<f64> = frequencies
        .iter()
        .map(|&w| model.omega_c * model.value(w).max(0.0).sqrt() / w)
        .collect();
    // C = (w_c sqrt(J)/w) * (sqrt(J')/w'), with the w_c factor applied once
    let matrix = ratio
        .iter()
        .map(|&a| ratio.iter().map(|&b| a * b / model.omega_c).collect())
        .collect();
    PolaronPrediction { frequencies, matrix }
}

/// Cosine similarity between two matrices flattened, used to compare a
/// measured correlation block against the polaron prediction.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Populations integrated over +-eps_bar windows at two snapshot times,
/// their detailed-balance ratio, and the strength of the C(w, -w) ridge.
#[derive(Debug, Clone, Serialize)]
pub struct ThermalCycleReport {
    pub time_early: f64,
    pub time_late: f64,
    /// Peak location on the later snapshot, or None if nothing was found.
    pub epsilon_bar: Option<f64>,
    pub pop_plus: (f64, f64),
    pub pop_minus: (f64, f64),
    pub growth_plus: f64,
    pub growth_minus: f64,
    /// pop(+eps)/pop(-eps) at the later time vs exp(beta eps_bar).
    pub ratio: f64,
    pub boltzmann: f64,
    pub ridge: f64,
    pub off_ridge_median: f64,
    /// ridge over the off-ridge median, the denominator floored at 1e-12 so
    /// a numerically vanished ridge reads as ~0 rather than a noise ratio.
    pub ridge_ratio: f64,
    pub flagged: bool,
}

const PEAK_HALF_WIDTH: f64 = 0.02;

fn window_population(spec: &ExtendedSpectrum, center: f64, half_width: f64) -> f64 {
    spec.frequencies
        .iter()
        .zip(&spec.occupations)
        .filter(|(&w, _)| (w - center).abs() <= half_width)
        .map(|(_, &o)| o)
        .sum()
}

pub fn thermal_cycle_report(
    early: &ExtendedSpectrum,
    late: &ExtendedSpectrum,
    beta: f64,
    epsilon: f64,
) -> Result<ThermalCycleReport> {
    if late.time < early.time {
        return Err(Error::config("snapshots passed in the wrong order"));
    }
    let window = (0.5 * epsilon, 1.5 * epsilon);
    let peaks = find_peaks(&late.frequencies, &late.density, window)?;
    let peak = strongest(&peaks);
    let mut report = ThermalCycleReport {
        time_early: early.time,
        time_late: late.time,
        epsilon_bar: peak.map(|p| p.location),
        pop_plus: (0.0, 0.0),
        pop_minus: (0.0, 0.0),
        growth_plus: 0.0,
        growth_minus: 0.0,
        ratio: f64::NAN,
        boltzmann: f64::NAN,
        ridge: 0.0,
        off_ridge_median: 0.0,
        ridge_ratio: 0.0,
        flagged: peak.is_none(),
    };
    let Some(peak) = peak else {
        return Ok(report);
    };
    let eb = peak.location;
    report.pop_plus = (
        window_population(early, eb, PEAK_HALF_WIDTH),
        window_population(late, eb, PEAK_HALF_WIDTH),
    );
    report.pop_minus = (
        window_population(early, -eb, PEAK_HALF_WIDTH),
        window_population(late, -eb, PEAK_HALF_WIDTH),
    );
    report.growth_plus = report.pop_plus.1 - report.pop_plus.0;
    report.growth_minus = report.pop_minus.1 - report.pop_minus.0;
    report.ratio = if report.pop_minus.1 > 0.0 {
        report.pop_plus.1 / report.pop_minus.1
    } else {
        f64::NAN
    };
    report.boltzmann = (beta * eb).exp();
    // anti-diagonal ridge of |C| across the peak band, contrasted against
    // the whole mixed-sign quadrant away from the mirror line; the correlated
    // spot at (eps, -eps) is narrow, so the reference must range wide
    let band: Vec<usize> = late
        .frequencies
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= 0.5 * eb && w <= 1.5 * eb)
        .map(|(i, _)| i)
        .collect();
    let spacing = median_spacing(&late.frequencies);
    let separation = (0.3 * eb).max(6.0 * spacing);
    let mut ridge = 0.0f64;
    let mut off: Vec<f64> = Vec::new();
    for &i in &band {
        let wi = late.frequencies[i];
        for (j, &wj) in late.frequencies.iter().enumerate() {
            if wj >= 0.0 {
                continue;
            }
            let v = late.corr[[i, j]].norm();
            if (wj + wi).abs() <= 2.0 * spacing {
                ridge = ridge.max(v);
            } else if (wj + wi).abs() > separation {
                off.push(v);
            }
        }
    }
    off.sort_by(|a, b| a.partial_cmp(b).expect("finite correlations"));
    report.ridge = ridge;
    report.off_ridge_median = if off.is_empty() { 0.0 } else { off[off.len() / 2] };
    report.ridge_ratio = ridge / report.off_ridge_median.max(1e-12);
    Ok(report)
}

fn median_spacing(xs: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite spacing"));
    if gaps.is_empty() {
        0.0
    } else {
        gaps[gaps.len() / 2]
    }
}
