//! Extend a power-law spectral density to signed frequencies at two
//! temperatures and check detailed balance on the result.

use ttedopa::spectral::{SpectralModel, ThermalizedSpectralModel};

fn main() {
    let base = SpectralModel::with_rescaled_alpha(2.0, 0.01, 0.2, 1.0).unwrap();
    println!("base density: s = {}, alpha = {:.5}, cutoff = {}", base.s, base.alpha, base.omega_c);

    for &kappa in &[0.4, 400.0] {
        let beta = kappa / 0.2;
        let model = ThermalizedSpectralModel::new(base.clone(), beta).unwrap();
        let (lo, hi) = model.support();
        println!("\nkappa = {kappa} (beta = {beta}), support [{lo}, {hi}]");
        println!("{:>8} {:>14} {:>14} {:>12}", "omega", "J_th(+w)", "J_th(-w)", "ratio/exp");
        for &w in &[0.05, 0.2, 0.5, 0.9] {
            let jp = model.value(w);
            let jm = model.value(-w);
            if jm > 0.0 {
                // emission over absorption must equal the Boltzmann factor
                let ratio = jp / jm / (beta * w).exp();
                println!("{w:>8.2} {jp:>14.6e} {jm:>14.6e} {ratio:>12.9}");
            } else {
                println!("{w:>8.2} {jp:>14.6e} {jm:>14.6e} {:>12}", "underflow");
            }
        }
    }

    // the cold extension keeps the original density on the positive side
    let cold = ThermalizedSpectralModel::new(base.clone(), 2000.0).unwrap();
    let rel = (cold.value(0.7) - base.value(0.7)).abs() / base.value(0.7);
    println!("\ncold positive side vs bare density at w = 0.7: rel diff {rel:.3e}");
}
