//! Normalized anti-Stokes spectral mode for Gaussian pump and Stokes pulses.

use cars_qfi::spectral::{normalize_phi, PulseSpectrum, RamanResonance};
use num_complex::Complex64;

fn main() -> cars_qfi::Result<()> {
    let res = RamanResonance::new(20.0, 0.5, 1.0)?;
    let pump = PulseSpectrum::gaussian(100.0, 1.0, Complex64::new(1.0, 0.0))?;
    let stokes = PulseSpectrum::gaussian(80.0, 0.7, Complex64::new(1.0, 0.0))?;
    let spec = normalize_phi(&res, &pump, &stokes)?;
    println!("g = {:.6e}, grid {:?}", spec.g, spec.span());
    for omega in [116.0, 118.0, 119.0, 120.0, 121.0, 122.0, 124.0] {
        let phi = spec.phi_at(omega)?;
        println!("omega {omega:>6.1}  |phi|^2 {:.6e}  arg {:+.4}", phi.norm_sqr(), phi.arg());
    }
    Ok(())
}
