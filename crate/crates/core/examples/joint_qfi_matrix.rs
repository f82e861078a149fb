//! Joint QFI matrix for separation and centroid, away from the origin.

use cars_qfi::excitation::{image_amplitudes, EmitterScene, ExcitationConfig, VortexExcitation};
use cars_qfi::fisher::qfi_matrix;
use cars_qfi::psf_modes::{gaussian_geometry, GaussianPsf};

fn main() -> cars_qfi::Result<()> {
    let exc = ExcitationConfig::Vortex(VortexExcitation::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)?);
    let psf = GaussianPsf::unit();
    for x0 in [0.0, 0.2, 0.5] {
        for s in [0.5, 1.0, 2.0] {
            let amps = image_amplitudes(&exc, &EmitterScene::new(s, x0, 1.0, 1.0)?, &psf)?;
            let m = qfi_matrix(&amps, &gaussian_geometry(s, 1.0)?);
            let (lo, hi) = m.eigenvalues();
            println!(
                "x0 {x0:.1} s {s:.1}: Q_dd {:>8.4} Q_dx0 {:>8.4} Q_x0x0 {:>8.4}  eig [{lo:.4}, {hi:.4}]",
                m.q_dd, m.q_dx0, m.q_x0x0
            );
        }
    }
    Ok(())
}
