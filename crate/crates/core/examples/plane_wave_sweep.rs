//! QFI, direct imaging and SPADE versus separation for tilted plane waves.

use cars_qfi::fisher::{fi_direct, fi_spade, qfi_plane_normalized, qfi_separation, Family};
use cars_qfi::psf_modes::{GaussianPsf, HermiteGaussBasis};

fn main() -> cars_qfi::Result<()> {
    let psf = GaussianPsf::unit();
    let basis = HermiteGaussBasis::new(1.0, 10)?;
    println!("{:>6} {:>5} {:>10} {:>10} {:>10} {:>10}", "ktilde", "s", "qfi", "closed", "direct", "spade10");
    for ktilde in [0.0, 1.0, 2.0, 4.0] {
        for s in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let (amps, geom) = Family::Plane { ktilde }.unit_amplitudes(s)?;
            println!(
                "{ktilde:>6.1} {s:>5.2} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                qfi_separation(&amps, &geom).normalized_value,
                qfi_plane_normalized(ktilde, s),
                fi_direct(&amps, &psf)?.normalized_value,
                fi_spade(&amps, &basis).normalized_value,
            );
        }
    }
    Ok(())
}
