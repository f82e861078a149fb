//! Compares every closed form with its numerical oracle.

use cars_qfi::adjudication::adjudicate;

fn main() -> cars_qfi::Result<()> {
    let report = adjudicate()?;
    for v in &report.verdicts {
        println!(
            "{:<46} {:>10.3e} (tol {:.0e}) {}{}",
            v.formula,
            v.max_deviation,
            v.tolerance,
            if v.matches { "match" } else { "MISMATCH" },
            if v.shipped { "" } else { ", rejected variant" },
        );
    }
    println!("selected vortex QFI: {:?}", report.vortex_qfi_selected);
    report.check()
}
