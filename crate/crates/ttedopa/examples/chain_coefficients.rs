//! Map a thermalized bath onto a nearest-neighbor chain and watch the
//! recurrence coefficients settle onto their asymptotic values.

use ttedopa::chainmap::compute_chain_coefficients;
use ttedopa::oracle::quadrature_moment;
use ttedopa::spectral::{SpectralModel, ThermalizedSpectralModel};

fn main() {
    let base = SpectralModel::with_rescaled_alpha(2.0, 0.01, 0.2, 1.0).unwrap();
    let model = ThermalizedSpectralModel::new(base, 2.0).unwrap();
    let coeffs = compute_chain_coefficients(&model, 60, 3000).unwrap();

    let mu0 = quadrature_moment(&model, 0).unwrap();
    println!("system-chain coupling g0 = {:.8}", coeffs.g0);
    println!("total measure weight mu0 = {mu0:.8e}, g0^2 = {:.8e}", coeffs.g0 * coeffs.g0);

    println!("\n{:>4} {:>14} {:>14}", "k", "omega_k", "g_k");
    for k in [0usize, 1, 2, 5, 10, 20, 40, 50, 58] {
        let g = if k == 0 { coeffs.g0 } else { coeffs.couplings[k - 1] };
        println!("{k:>4} {:>14.8} {g:>14.8}", coeffs.omegas[k]);
    }

    // symmetric support [-1, 1]: site energies drift to 0, hoppings to 1/2
    let far = coeffs.omegas.len() - 10;
    println!(
        "\ntail behaviour: |omega_{far}| = {:.3e}, |g_{far} - 1/2| = {:.3e}",
        coeffs.omegas[far].abs(),
        (coeffs.couplings[far - 1] - 0.5).abs()
    );
}
