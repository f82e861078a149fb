//! SPADE information as more Hermite-Gauss modes are counted.

use cars_qfi::fisher::{fi_spade_partial_sums, qfi_separation, Family};

fn main() -> cars_qfi::Result<()> {
    let truncations = [5usize, 10, 15, 20, 25];
    print!("{:>5}", "s");
    for m in truncations {
        print!(" {:>9}", format!("M={m}"));
    }
    println!();
    for s in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let (amps, geom) = Family::Plane { ktilde: 2.0 }.unit_amplitudes(s)?;
        let q = qfi_separation(&amps, &geom).normalized_value;
        let sums = fi_spade_partial_sums(&amps, 25);
        print!("{s:>5.2}");
        for m in truncations {
            // Partial sums are w²F; the normalized scale is half of that.
            print!(" {:>9.6}", 0.5 * sums[m] / q);
        }
        println!();
    }
    Ok(())
}
