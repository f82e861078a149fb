//! How a vertical offset of the emitter row degrades direct imaging under
//! vortex excitation while SPADE keeps the QFI.

use cars_qfi::fisher::{fi_direct, fi_spade, qfi_separation, Family};
use cars_qfi::psf_modes::{GaussianPsf, HermiteGaussBasis};

fn main() -> cars_qfi::Result<()> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let psf = GaussianPsf::unit();
    let basis = HermiteGaussBasis::new(1.0, 30)?;
    println!("{:>4} {:>5} {:>10} {:>10} {:>10}", "psi", "s", "qfi", "di/qfi", "spade/qfi");
    for psi in [0.0, 0.1, 0.2, 0.3] {
        for s in [0.25, 0.5, 1.0, 2.0] {
            let (amps, geom) = Family::Vortex { a, psi }.unit_amplitudes(s)?;
            let q = qfi_separation(&amps, &geom).normalized_value;
            let di = fi_direct(&amps, &psf)?.normalized_value;
            let sp = fi_spade(&amps, &basis).normalized_value;
            println!("{psi:>4.1} {s:>5.2} {q:>10.5} {:>10.6} {:>10.6}", di / q, sp / q);
        }
    }
    Ok(())
}
