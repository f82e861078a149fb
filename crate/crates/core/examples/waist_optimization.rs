//! Stokes waist ratio that maximizes the vortex QFI at each separation.

use cars_qfi::fisher::{optimize_waist, qfi_vortex_normalized, WAIST_BOUNDS};

fn main() -> cars_qfi::Result<()> {
    let grid: Vec<f64> = (1..=15).map(|i| 0.2 * i as f64).collect();
    let a_ref = std::f64::consts::FRAC_1_SQRT_2;
    println!("{:>5} {:>8} {:>10} {:>12}", "s", "a_opt", "qfi_opt", "qfi(a=0.71)");
    for o in optimize_waist(0.0, &grid, WAIST_BOUNDS)? {
        println!("{:>5.2} {:>8.4} {:>10.5} {:>12.5}", o.s, o.a, o.qfi, qfi_vortex_normalized(a_ref, 0.0, o.s));
    }
    Ok(())
}
