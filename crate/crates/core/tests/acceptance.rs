//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Each criterion includes its runtime
//! budget.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::Command;
use std::time::{Duration, Instant};

use cars_qfi::adjudication::adjudicate;
use cars_qfi::excitation::{image_amplitudes, EmitterScene, ExcitationConfig, PlaneWaveExcitation, VortexExcitation};
use cars_qfi::fisher::{
    fi_collinear_normalized, fi_direct, fi_spade, fi_spade_partial_sums, mean_photons_spade, qfi_matrix,
    qfi_plane_normalized, qfi_separation, qfi_separation_gram, small_s_coefficients, Family,
};
use cars_qfi::montecarlo::{run_campaign, CampaignConfig, SourceModel, SpadeModel};
use cars_qfi::psf_modes::{GaussianPsf, HermiteGaussBasis};
use cars_qfi::spectral::{normalize_phi, PulseSpectrum, RamanResonance};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn s_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn plane_qfi_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for kt in [0.0, 1.0, 2.0, 4.0] {
        for s in s_grid(0.01, 3.0, 120) {
            let (amps, geom) = Family::Plane { ktilde: kt }.unit_amplitudes(s).map_err(|e| e.to_string())?;
            let general = qfi_separation(&amps, &geom).normalized_value;
            worst = worst.max((general - qfi_plane_normalized(kt, s)).abs());
        }
    }
    ensure(worst < 1e-10, format!("max |general - closed| = {worst:.2e}"))
}

fn collinear_saturation() -> Outcome {
    let psf = GaussianPsf::unit();
    let basis = HermiteGaussBasis::new(1.0, 30).unwrap();
    let (mut di_worst, mut spade_worst) = (0.0f64, 0.0f64);
    for s in s_grid(0.01, 3.0, 120) {
        let (amps, geom) = Family::Plane { ktilde: 0.0 }.unit_amplitudes(s).map_err(|e| e.to_string())?;
        let q = qfi_separation(&amps, &geom).normalized_value;
        let di = fi_direct(&amps, &psf).map_err(|e| e.to_string())?.normalized_value;
        di_worst = di_worst.max(rel(di, q));
        let sp = fi_spade(&amps, &basis).normalized_value;
        spade_worst = spade_worst.max((sp - fi_collinear_normalized(s)).abs());
    }
    ensure(
        di_worst < 1e-6 && spade_worst < 1e-8,
        format!("DI rel {di_worst:.2e}, SPADE abs {spade_worst:.2e}"),
    )
}

fn small_s_asymptotics() -> Outcome {
    let mut worst = 0.0f64;
    for kt in [0.0f64, 1.0, 2.0] {
        let c = small_s_coefficients(Family::Plane { ktilde: kt }, 30).map_err(|e| e.to_string())?;
        let k2 = kt * kt;
        let di = 3.0 + 2.0 * k2 + k2 * k2;
        let qs = 3.0 + 6.0 * k2 + k2 * k2;
        worst = worst.max(rel(c.c_di, di)).max(rel(c.c_qfi, qs)).max(rel(c.c_spade, qs));
    }
    ensure(worst < 5e-3, format!("max relative coefficient error {:.2e}", worst))
}

fn vortex_adjudication() -> Outcome {
    let report = adjudicate().map_err(|e| e.to_string())?;
    let vortex: Vec<_> = report.verdicts.iter().filter(|v| v.formula.starts_with("vortex_qfi")).collect();
    let matching = vortex.iter().filter(|v| v.matches && v.tolerance <= 1e-9).count();
    let status = Command::new(env!("CARGO_BIN_EXE_cars-qfi"))
        .args(["adjudicate", "--format", "json"])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(
        vortex.len() == 2 && matching == 1 && status.success(),
        format!(
            "{matching} of {} vortex forms match; selected {:?}; exit {:?}",
            vortex.len(),
            report.vortex_qfi_selected,
            status.code()
        ),
    )
}

fn vortex_measurement_claims() -> Outcome {
    let psf = GaussianPsf::unit();
    let basis = HermiteGaussBasis::new(1.0, 30).unwrap();
    let (mut di_worst, mut spade_worst) = (0.0f64, 0.0f64);
    for s in s_grid(0.01, 3.0, 120) {
        let (amps, geom) = Family::Vortex { a: FRAC_1_SQRT_2, psi: 0.0 }.unit_amplitudes(s).map_err(|e| e.to_string())?;
        let q = qfi_separation(&amps, &geom).normalized_value;
        di_worst = di_worst.max(rel(fi_direct(&amps, &psf).map_err(|e| e.to_string())?.normalized_value, q));
        spade_worst = spade_worst.max(rel(fi_spade(&amps, &basis).normalized_value, q));
    }
    let (amps, geom) = Family::Vortex { a: FRAC_1_SQRT_2, psi: 0.3 }.unit_amplitudes(0.5).map_err(|e| e.to_string())?;
    let q = qfi_separation(&amps, &geom).normalized_value;
    let di_ratio = fi_direct(&amps, &psf).map_err(|e| e.to_string())?.normalized_value / q;
    let spade_ratio = fi_spade(&amps, &basis).normalized_value / q;
    ensure(
        di_worst < 1e-6 && spade_worst < 1e-8 && di_ratio < 0.99 && spade_ratio >= 0.999,
        format!(
            "psi=0: DI rel {di_worst:.2e}, SPADE rel {spade_worst:.2e}; psi=0.3, s=0.5: DI/QFI {di_ratio:.4}, SPADE/QFI {spade_ratio:.6}"
        ),
    )
}

fn spade_convergence() -> Outcome {
    let modes = [5usize, 10, 15, 20, 25];
    let mut monotone = true;
    let mut worst_ratio = f64::INFINITY;
    for s in s_grid(0.01, 3.0, 120) {
        let (amps, geom) = Family::Plane { ktilde: 2.0 }.unit_amplitudes(s).map_err(|e| e.to_string())?;
        let q = qfi_separation(&amps, &geom).normalized_value;
        let sums = fi_spade_partial_sums(&amps, 25);
        monotone &= modes.windows(2).all(|w| sums[w[1]] >= sums[w[0]]);
        if s <= 2.0 {
            worst_ratio = worst_ratio.min(0.5 * sums[25] / q);
        }
    }
    ensure(
        monotone && worst_ratio >= 0.999,
        format!("monotone {monotone}; min FI(25)/QFI for s <= 2: {worst_ratio:.6}"),
    )
}

fn information_chain() -> Outcome {
    let psf = GaussianPsf::unit();
    let bases: Vec<HermiteGaussBasis> = [5, 10, 30].iter().map(|&m| HermiteGaussBasis::new(1.0, m).unwrap()).collect();
    let mut families: Vec<Family> = [0.0, 1.0, 2.0, 4.0].iter().map(|&k| Family::Plane { ktilde: k }).collect();
    for a in [0.5, FRAC_1_SQRT_2, 1.0] {
        for psi in [0.0, 0.1, 0.2, 0.3] {
            families.push(Family::Vortex { a, psi });
        }
    }
    let (mut excess, mut gram_worst, mut psd) = (f64::NEG_INFINITY, 0.0f64, true);
    let mut points = 0;
    for fam in &families {
        for s in s_grid(0.01, 3.0, 40) {
            let (amps, geom) = fam.unit_amplitudes(s).map_err(|e| e.to_string())?;
            let q = qfi_separation(&amps, &geom);
            let di = fi_direct(&amps, &psf).map_err(|e| e.to_string())?;
            excess = excess.max(di.normalized_value - q.normalized_value);
            for b in &bases {
                excess = excess.max(fi_spade(&amps, b).normalized_value - q.normalized_value);
            }
            let m = qfi_matrix(&amps, &geom);
            psd &= m.is_psd(1e-9) && m.q_dd == q.value;
            gram_worst = gram_worst.max((qfi_separation_gram(&amps, &geom) - q.value).abs() / q.value.max(1.0));
            points += 1;
        }
    }
    ensure(
        excess <= 1e-6 && psd && gram_worst <= 1e-12,
        format!("{points} points; max FI - QFI = {excess:.2e}; PSD {psd}; Gram vs mode form {gram_worst:.2e}"),
    )
}

fn photon_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psf = GaussianPsf::unit();
    let basis = HermiteGaussBasis::new(1.0, 30).unwrap();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let s = rng.gen_range(0.05..3.0);
        let scene = EmitterScene::new(s, rng.gen_range(-0.5..0.5), rng.gen_range(0.5..2.0), rng.gen_range(0.2..1.0))
            .map_err(|e| e.to_string())?;
        let exc = if i % 2 == 0 {
            ExcitationConfig::Plane(PlaneWaveExcitation::from_ktilde(rng.gen_range(0.0..4.0)))
        } else {
            ExcitationConfig::Vortex(
                VortexExcitation::new(rng.gen_range(0.5..1.0), rng.gen_range(0.0..0.3)).map_err(|e| e.to_string())?,
            )
        };
        let amps = image_amplitudes(&exc, &scene, &psf).map_err(|e| e.to_string())?;
        let sum: f64 = (0..=30).map(|m| mean_photons_spade(&amps, &basis, m).unwrap()).sum();
        worst = worst.max(rel(sum, amps.total_photons()));
    }
    ensure(worst < 1e-10, format!("max relative deficit {worst:.2e} over 20 configurations"))
}

fn monte_carlo_crb() -> Outcome {
    let source = SourceModel::with_photon_budget(Family::Vortex { a: FRAC_1_SQRT_2, psi: 0.0 }, 1.0, 1.0, 10.0)
        .map_err(|e| e.to_string())?;
    let model = SpadeModel::new(source, 30).map_err(|e| e.to_string())?;
    let cfg = CampaignConfig::new(1.0, 10_000, 2024);
    let r = run_campaign(&model, &cfg).map_err(|e| e.to_string())?;
    ensure(
        (0.9..=1.3).contains(&r.ratio) && cfg.batches == 50,
        format!(
            "{} estimates, {:.3} photons/shot, variance/CRB = {:.4}",
            r.estimates.len(),
            r.photons_per_shot,
            r.ratio
        ),
    )
}

fn spectral_normalization() -> Outcome {
    let res = RamanResonance::new(20.0, 0.5, 1.0).map_err(|e| e.to_string())?;
    let pulses = |pu: f64, st: f64| {
        (
            PulseSpectrum::gaussian(100.0, 1.0, Complex64::new(pu, 0.0)).unwrap(),
            PulseSpectrum::gaussian(80.0, 0.7, Complex64::new(st, 0.0)).unwrap(),
        )
    };
    let (p1, s1) = pulses(1.0, 1.0);
    let (p2, s2) = pulses(2.0, 3.0);
    let a = normalize_phi(&res, &p1, &s1).map_err(|e| e.to_string())?;
    let b = normalize_phi(&res, &p2, &s2).map_err(|e| e.to_string())?;
    let n = a.omega.len();
    let h = a.omega[1] - a.omega[0];
    let sq: Vec<f64> = a.phi.iter().map(|z| z.norm_sqr()).collect();
    let norm = h * (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[n - 1])) / (2.0 * std::f64::consts::PI);
    let scaling = rel(b.g / a.g, 12.0);
    ensure(
        (norm - 1.0).abs() <= 1e-6 && scaling <= 1e-9,
        format!("norm - 1 = {:.2e}; g ratio error {scaling:.2e}", norm - 1.0),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut same = true;
    for cmd in ["figure2", "figure3"] {
        let mut files = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{cmd}-{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_cars-qfi"))
                .args([cmd, "--out"])
                .arg(&path)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{cmd} exited with {status}"));
            }
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        same &= !files[0].is_empty() && files[0] == files[1];
    }
    ensure(same, format!("figure2 and figure3 outputs byte-identical: {same}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 plane-wave QFI closed form", Duration::from_secs(1), plane_qfi_closed_form),
        ("2 collinear saturation", Duration::from_secs(30), collinear_saturation),
        ("3 small-s asymptotics", Duration::from_secs(10), small_s_asymptotics),
        ("4 vortex adjudication", Duration::from_secs(5), vortex_adjudication),
        ("5 vortex measurement claims", Duration::from_secs(60), vortex_measurement_claims),
        ("6 SPADE convergence", Duration::from_secs(2), spade_convergence),
        ("7 information chain", Duration::MAX, information_chain),
        ("8 photon conservation", Duration::MAX, photon_conservation),
        ("9 Monte Carlo CRB", Duration::from_secs(60), monte_carlo_crb),
        ("10 spectral normalization", Duration::from_secs(10), spectral_normalization),
        ("11 determinism", Duration::MAX, determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = elapsed > budget;
        let (tag, msg) = match outcome {
            Ok(msg) if !over => ("PASS", msg),
            Ok(msg) => ("FAIL", format!("{msg}; over budget {budget:?}")),
            Err(msg) => ("FAIL", msg),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} [{name}] {msg} ({:.2} s)", elapsed.as_secs_f64());
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
