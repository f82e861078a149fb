//! Overlap scalars and Fisher information for a PSF given only as a
//! function, checked against the Gaussian closed forms.

use cars_qfi::excitation::{image_amplitudes, EmitterScene, PlaneWaveExcitation};
use cars_qfi::fisher::{fi_direct, qfi_separation};
use cars_qfi::psf_modes::{gaussian_geometry, psf_geometry, NumericPsf};

fn main() -> cars_qfi::Result<()> {
    let psf = NumericPsf::sampled_gaussian(1.0);
    println!("norm^2 = {:.12}", psf.norm_squared()?);
    let exc = PlaneWaveExcitation::from_ktilde(1.0);
    for s in [0.3, 1.0, 2.0] {
        let num = psf_geometry(&psf, s)?;
        let exact = gaussian_geometry(s, 1.0)?;
        let amps = image_amplitudes(&exc, &EmitterScene::new(s, 0.0, 1.0, 1.0)?, &psf)?;
        println!(
            "s {s:.1}: delta {:.3e}  beta {:.3e}  eta+ {:.3e}  | qfi {:.8}  direct {:.8}",
            (num.delta - exact.delta).abs(),
            (num.beta - exact.beta).abs(),
            (num.eta_plus2 - exact.eta_plus2).abs(),
            qfi_separation(&amps, &num).normalized_value,
            fi_direct(&amps, &psf)?.normalized_value,
        );
    }
    Ok(())
}
