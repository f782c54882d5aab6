//! Inverse thermal Bogoliubov transformation: recovers physical
//! positive-frequency bath occupations from extended-environment correlators.
//!
//! Extended modes at +omega play the role of the thermofield primary a1,
//! modes at -omega the auxiliary a2; mode k pairs only with its own mirror.
//! The star grid is not symmetric, so mirror values come from linear
//! interpolation between the bracketing nodes, never extrapolation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::observables::ExtendedSpectrum;
use crate::spectral::bose_occupation;

#[derive(Debug, Clone)]
pub struct ThermofieldAngles {
    /// Positive frequencies, ascending.
    pub frequencies: Vec<f64>,
    pub thetas: Vec<f64>,
    pub cosh_theta: Vec<f64>,
    pub sinh_theta: Vec<f64>,
}

/// cosh theta = sqrt(1+n), sinh theta = sqrt(n) with n the Bose occupation.
/// Beyond beta*omega = 700 the occupation underflows and the angle is zero.
pub fn thermofield_angles(beta: f64, frequencies: &[f64]) -> Result<ThermofieldAngles> {
    if !(beta > 0.0) {
        return Err(Error::config("thermofield angles need beta > 0"));
    }
    let mut thetas = Vec::with_capacity(frequencies.len());
    let mut cosh_theta = Vec::with_capacity(frequencies.len());
    let mut sinh_theta = Vec::with_capacity(frequencies.len());
    let mut prev = f64::INFINITY;
    for &w in frequencies {
        if !(w > 0.0) {
            return Err(Error::config(format!("thermofield frequency {w} must be positive")));
        }
        if w < prev && prev != f64::INFINITY {
            return Err(Error::config("thermofield frequencies must ascend"));
        }
        prev = w;
        let x = beta * w;
        if x > 700.0 {
            thetas.push(0.0);
            cosh_theta.push(1.0);
            sinh_theta.push(0.0);
            continue;
        }
        let n = bose_occupation(beta, w);
        let sh = n.sqrt();
        thetas.push(sh.asinh());
        cosh_theta.push((1.0 + n).sqrt());
        sinh_theta.push(sh);
    }
    Ok(ThermofieldAngles { frequencies: frequencies.to_vec(), thetas, cosh_theta, sinh_theta })
}

fn interp1<T>(xs: &[f64], ys: &[T], x: f64) -> Result<T>
where
    T: Copy
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>,
{
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return Err(Error::validation(format!(
            "frequency {x} outside the grid span [{}, {}]; refusing to extrapolate",
            xs.first().copied().unwrap_or(f64::NAN),
            xs.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let hi = xs.partition_point(|&v| v < x).min(n - 1).max(1);
    let lo = hi - 1;
    let span = xs[hi] - xs[lo];
    if span <= 0.0 {
        return Ok(ys[hi]);
    }
    let t = (x - xs[lo]) / span;
    Ok(ys[lo] * (1.0 - t) + ys[hi] * t)
}

/// Extended correlators regrouped into thermofield pairs (+w, -w) on the
/// positive targets whose mirror stays inside the grid.
#[derive(Debug, Clone)]
pub struct PairedCorrelators {
    pub frequencies: Vec<f64>,
    /// <a1^dag a1> at +w.
    pub n_plus: Vec<f64>,
    /// <a2^dag a2> at -w.
    pub n_minus: Vec<f64>,
    /// <a1^dag a2^dag> at (+w, -w).
    pub cross: Vec<C64>,
    pub time: f64,
}

/// Pair values at one requested frequency; errors if either +w or -w falls
/// outside the extended grid.
pub fn paired_at(spec: &ExtendedSpectrum, omega: f64) -> Result<(f64, f64, C64)> {
    if !(omega > 0.0) {
        return Err(Error::config("pairing frequency must be positive"));
    }
    let xs = &spec.frequencies;
    let n_plus = interp1(xs, &spec.occupations, omega)?;
    let n_minus = interp1(xs, &spec.occupations, -omega)?;
    // anomalous row at +w (interpolated), then column at -w
    let m = xs.len();
    let row: Vec<C64> = (0..m)
        .map(|j| {
            let col: Vec<C64> = spec.star_anomalous.column(j).to_vec();
            interp1(xs, &col, omega)
        })
        .collect::<Result<_>>()?;
    let cross = interp1(xs, &row, -omega)?;
    Ok((n_plus, n_minus, cross))
}

pub fn symmetrize_grid(spec: &ExtendedSpectrum) -> Result<PairedCorrelators> {
    let xs = &spec.frequencies;
    let lo = *xs.first().ok_or_else(|| Error::config("empty extended grid"))?;
    let hi = *xs.last().unwrap();
    if lo >= 0.0 {
        return Err(Error::validation(
            "extended grid has no negative frequencies; nothing to pair against",
        ));
    }
    let cap = hi.min(-lo);
    let targets: Vec<(usize, f64)> = xs
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w > 0.0 && w <= cap)
        .collect();
    if targets.is_empty() {
        return Err(Error::validation("no positive frequencies with an in-grid mirror"));
    }
    let mut frequencies = Vec::with_capacity(targets.len());
    let mut n_plus = Vec::with_capacity(targets.len());
    let mut n_minus = Vec::with_capacity(targets.len());
    let mut cross = Vec::with_capacity(targets.len());
    for &(i, w) in &targets {
        // +w is a grid node, so only the mirror needs interpolation
        frequencies.push(w);
        n_plus.push(spec.occupations[i]);
        n_minus.push(interp1(xs, &spec.occupations, -w)?);
        let row: Vec<C64> = spec.star_anomalous.row(i).to_vec();
        cross.push(interp1(xs, &row, -w)?);
    }
    Ok(PairedCorrelators { frequencies, n_plus, n_minus, cross, time: spec.time })
}

/// Physical-picture occupations next to their thermal baseline.
#[derive(Debug, Clone)]
pub struct PhysicalSpectrum {
    pub frequencies: Vec<f64>,
    pub occupations: Vec<f64>,
    /// Bose-Einstein occupation at the run temperature.
    pub baseline: Vec<f64>,
    /// occupations - baseline.
    pub excess: Vec<f64>,
    pub time: f64,
}

/// <b^dag b> = cosh sinh (<a2 a1> + <a1^dag a2^dag>) + sinh^2 (1 + <a2^dag a2>)
///           + cosh^2 <a1^dag a1>, evaluated per mode pair.
pub fn back_map_occupations(
    paired: &PairedCorrelators,
    angles: &ThermofieldAngles,
    beta: f64,
) -> Result<PhysicalSpectrum> {
    if paired.frequencies.len() != angles.frequencies.len() {
        return Err(Error::config("angle grid does not match the paired grid"));
    }
    for (a, b) in paired.frequencies.iter().zip(&angles.frequencies) {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::config(format!("angle grid node {b} does not match paired node {a}")));
        }
    }
    let k = paired.frequencies.len();
    let mut occupations = Vec::with_capacity(k);
    let mut baseline = Vec::with_capacity(k);
    let mut excess = Vec::with_capacity(k);
    for i in 0..k {
        let ch = angles.cosh_theta[i];
        let sh = angles.sinh_theta[i];
        // <a2 a1> is the conjugate of <a1^dag a2^dag>; their sum is real
        let pair_term = 2.0 * paired.cross[i].re;
        let n = ch * sh * pair_term + sh * sh * (1.0 + paired.n_minus[i]) + ch * ch * paired.n_plus[i];
        if n < -1e-8 {
            return Err(Error::numeric(format!(
                "physical occupation {n} at frequency {} below tolerance",
                paired.frequencies[i]
            )));
        }
        let base = bose_occupation(beta, paired.frequencies[i]);
        occupations.push(n);
        baseline.push(base);
        excess.push(n - base);
    }
    Ok(PhysicalSpectrum {
        frequencies: paired.frequencies.clone(),
        occupations,
        baseline,
        excess,
        time: paired.time,
    })
}

/// Full extended-to-physical chain for one snapshot.
pub fn physical_spectrum(spec: &ExtendedSpectrum, beta: f64) -> Result<PhysicalSpectrum> {
    let paired = symmetrize_grid(spec)?;
    let angles = thermofield_angles(beta, &paired.frequencies)?;
    back_map_occupations(&paired, &angles, beta)
}
