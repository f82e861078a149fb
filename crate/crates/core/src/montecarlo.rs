//! Monte Carlo check of the Cramér-Rao bound.
//!
//! Photon counts are Poissonian. The counts from `μ` shots are summed per
//! channel, which is again Poisson with mean `μ N_c(s)`, so each estimate
//! costs one draw per channel. The separation is recovered by maximum
//! likelihood and the spread of many estimates is compared with `1/(μF)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excitation::{image_amplitudes_with, EmitterScene, ExcitationConfig, ImageAmplitudes};
use crate::fisher::{fi_direct, fi_spade, Family};
use crate::numerics::{gauss_legendre, golden_section_max};
use crate::psf_modes::{gaussian_geometry, GaussianPsf, HermiteGaussBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRecord {
    pub channel_id: usize,
    pub count: u64,
    pub expected: f64,
}

fn draw(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means, ruled out by callers.
    Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

fn check_expectations(expected: &[f64]) -> Result<()> {
    match expected.iter().position(|&e| !(e >= 0.0) || !e.is_finite()) {
        Some(channel) => Err(Error::NegativeExpectation {
            channel,
            value: expected[channel],
        }),
        None => Ok(()),
    }
}

/// Independent Poisson draws, one per channel.
pub fn sample_counts(expected: &[f64], seed: u64) -> Result<Vec<CountRecord>> {
    check_expectations(expected)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(expected
        .iter()
        .enumerate()
        .map(|(i, &e)| CountRecord {
            channel_id: i,
            count: draw(&mut rng, e),
            expected: e,
        })
        .collect())
}

/// Per-shot channel expectations as a function of the separation.
pub trait CountModel: Sync {
    fn expectations(&self, s: f64) -> Result<Vec<f64>>;

    /// Classical Fisher information per shot for `s` (units of the PSF width).
    fn fisher(&self, s: f64) -> Result<f64>;

    fn label(&self) -> &'static str;
}

/// Number of scan points before golden-section refinement.
pub const ML_SCAN_POINTS: usize = 256;

fn log_likelihood(counts: &[f64], mu: f64, model: &dyn CountModel, s: f64) -> f64 {
    let Ok(expected) = model.expectations(s) else {
        return f64::NEG_INFINITY;
    };
    let mut ll = 0.0;
    for (&n, &e) in counts.iter().zip(&expected) {
        let lambda = mu * e;
        if lambda <= 0.0 {
            if n > 0.0 {
                return f64::NEG_INFINITY;
            }
            continue;
        }
        ll += n * lambda.ln() - lambda;
    }
    ll
}

/// Maximizes `Σ_c n_c ln(μN_c(s)) − μN_c(s)` over `interval`. `counts` are
/// totals over `mu` shots.
pub fn ml_estimate(counts: &[f64], mu: f64, model: &dyn CountModel, interval: (f64, f64)) -> Result<f64> {
    let (lo, hi) = interval;
    if !(hi > lo) || !(lo >= 0.0) {
        return Err(Error::InvalidParameter(format!("search interval {interval:?} is empty")));
    }
    if counts.iter().all(|&n| n == 0.0) {
        return Err(Error::NonIdentifiable("no photons detected".into()));
    }
    let step = (hi - lo) / (ML_SCAN_POINTS - 1) as f64;
    let mid = 0.5 * (lo + hi);
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..ML_SCAN_POINTS {
        let s = lo + step * i as f64;
        let ll = log_likelihood(counts, mu, model, s);
        let better = ll > best.1
            || (ll == best.1 && (s - mid).abs() < (lo + step * best.0 as f64 - mid).abs());
        if better {
            best = (i, ll);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::NonIdentifiable("likelihood is zero over the search interval".into()));
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = lo + step * (best.0 + 1).min(ML_SCAN_POINTS - 1) as f64;
    let (s, ll) = golden_section_max(|s| log_likelihood(counts, mu, model, s), a, b, 1e-9);
    Ok(if ll >= best.1 { s } else { lo + step * best.0 as f64 })
}

/// A family and coupling with a fixed photon budget per shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub family: Family,
    pub g: f64,
    pub kappa: f64,
}

impl SourceModel {
    /// Chooses `g` so that `|α+|² + |α−|² = photons_per_shot` at `s`.
    pub fn with_photon_budget(family: Family, s: f64, kappa: f64, photons_per_shot: f64) -> Result<Self> {
        let unit = Self { family, g: 1.0, kappa };
        let n = unit.amplitudes(s)?.total_photons();
        if !(n > 0.0) {
            return Err(Error::NonIdentifiable(format!("no signal at s = {s}")));
        }
        Ok(Self {
            g: (photons_per_shot / n).sqrt(),
            ..unit
        })
    }

    fn excitation(&self) -> Result<ExcitationConfig> {
        self.family.excitation()
    }

    pub fn amplitudes(&self, s: f64) -> Result<ImageAmplitudes> {
        let scene = EmitterScene::new(s, 0.0, self.g, self.kappa)?;
        Ok(image_amplitudes_with(&self.excitation()?, &scene, &gaussian_geometry(s, 1.0)?))
    }
}

/// Hermite-Gauss mode counting with modes `0..=modes`.
#[derive(Debug, Clone, Copy)]
pub struct SpadeModel {
    pub source: SourceModel,
    pub basis: HermiteGaussBasis,
}

impl SpadeModel {
    pub fn new(source: SourceModel, modes: usize) -> Result<Self> {
        Ok(Self {
            source,
            basis: HermiteGaussBasis::new(1.0, modes)?,
        })
    }
}

impl CountModel for SpadeModel {
    fn expectations(&self, s: f64) -> Result<Vec<f64>> {
        let amps = self.source.amplitudes(s)?;
        (0..=self.basis.truncation_m)
            .map(|m| crate::fisher::mean_photons_spade(&amps, &self.basis, m))
            .collect()
    }

    fn fisher(&self, s: f64) -> Result<f64> {
        Ok(fi_spade(&self.source.amplitudes(s)?, &self.basis).value)
    }

    fn label(&self) -> &'static str {
        "spade"
    }
}

/// Camera with `bins × bins` square pixels over `[-L, L]²`.
#[derive(Debug, Clone)]
pub struct BinnedDirectModel {
    pub source: SourceModel,
    pub bins: usize,
    pub half_width: f64,
    /// Probability mass of `u0²` in each pixel row.
    row_weights: Vec<f64>,
    nodes: Vec<(f64, f64)>,
}

/// One-dimensional PSF factor and its slope.
fn profile_with_slope(t: f64) -> (f64, f64) {
    let p = GaussianPsf::profile_1d(t);
    (p, -2.0 * t * p)
}

/// Default camera resolution.
pub const DI_BINS: usize = 32;
const BIN_NODES: usize = 16;
/// Camera extent beyond each emitter, in PSF widths.
pub const CAMERA_MARGIN: f64 = 3.0;

impl BinnedDirectModel {
    pub fn new(source: SourceModel, bins: usize, half_width: f64) -> Result<Self> {
        if bins == 0 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter("camera needs >= 1 bin and a positive extent".into()));
        }
        let nodes = gauss_legendre(BIN_NODES);
        let h = 2.0 * half_width / bins as f64;
        let row_weights = (0..bins)
            .map(|j| {
                let y0 = -half_width + h * j as f64;
                nodes
                    .iter()
                    .map(|&(t, w)| {
                        let v = GaussianPsf::profile_1d(y0 + 0.5 * h * (t + 1.0));
                        0.5 * h * w * v * v
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            source,
            bins,
            half_width,
            row_weights,
            nodes,
        })
    }

    /// 32×32 camera over the illuminated region at `s`: three PSF widths
    /// beyond each emitter, which loses less than 1e-7 of the light.
    /// Spreading the same pixels over the whole quadrature domain would
    /// cost about 10% of the Fisher information.
    pub fn covering(source: SourceModel, s: f64) -> Result<Self> {
        Self::new(source, DI_BINS, 0.5 * s + CAMERA_MARGIN)
    }

    /// Fails unless the pixelated FI is within 2% of the continuum value.
    pub fn check_resolution(&self, s: f64) -> Result<f64> {
        let r = self.discretization_ratio(s)?;
        if (r - 1.0).abs() > 0.02 {
            return Err(Error::InvalidParameter(format!(
                "{} x {} camera keeps {:.2}% of the direct-imaging information; use more pixels",
                self.bins,
                self.bins,
                100.0 * r
            )));
        }
        Ok(r)
    }

    /// Per-column `(∫|A|² dx, ∫∂s|A|² dx)` where `E = A(x) u(y)`.
    fn columns(&self, s: f64) -> Result<Vec<(f64, f64)>> {
        let amps = self.source.amplitudes(s)?;
        let k = amps.scene.kappa.sqrt();
        let e = amps.emitters;
        let (xl, xr) = (amps.scene.left(), amps.scene.right());
        let h = 2.0 * self.half_width / self.bins as f64;
        Ok((0..self.bins)
            .map(|i| {
                let x0 = -self.half_width + h * i as f64;
                let mut acc = (0.0, 0.0);
                for &(t, w) in &self.nodes {
                    let x = x0 + 0.5 * h * (t + 1.0);
                    let (pl, dl) = profile_with_slope(x - xl);
                    let (pr, dr) = profile_with_slope(x - xr);
                    let a = k * (e.left * pl + e.right * pr);
                    let da = k * (e.ds_left * pl + e.ds_right * pr + 0.5 * e.left * dl - 0.5 * e.right * dr);
                    let wt = 0.5 * h * w;
                    acc.0 += wt * a.norm_sqr();
                    acc.1 += wt * 2.0 * (a.conj() * da).re;
                }
                acc
            })
            .collect())
    }

    /// Fisher information of the pixelated camera, `Σ_b (∂N_b)²/N_b`.
    pub fn binned_fisher(&self, s: f64) -> Result<f64> {
        let cols = self.columns(s)?;
        let mut f = 0.0;
        for &(n, dn) in &cols {
            for &r in &self.row_weights {
                let nb = n * r;
                if nb > 1e-300 {
                    f += (dn * r).powi(2) / nb;
                }
            }
        }
        Ok(f)
    }

    /// Ratio of the pixelated to the continuum direct-imaging FI.
    pub fn discretization_ratio(&self, s: f64) -> Result<f64> {
        let cont = fi_direct(&self.source.amplitudes(s)?, &GaussianPsf::unit())?.value;
        Ok(self.binned_fisher(s)? / cont)
    }
}

impl CountModel for BinnedDirectModel {
    fn expectations(&self, s: f64) -> Result<Vec<f64>> {
        let cols = self.columns(s)?;
        let mut out = Vec::with_capacity(self.bins * self.bins);
        for &(n, _) in &cols {
            out.extend(self.row_weights.iter().map(|&r| n * r));
        }
        Ok(out)
    }

    fn fisher(&self, s: f64) -> Result<f64> {
        self.binned_fisher(s)
    }

    fn label(&self) -> &'static str {
        "direct_imaging_binned"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub true_s: f64,
    /// Shots per estimate.
    pub mu: u64,
    pub batches: usize,
    pub estimates_per_batch: usize,
    pub seed: u64,
    /// ML search interval; defaults to `[max(0, s − 0.5), s + 0.5]`.
    pub interval: Option<(f64, f64)>,
}

impl CampaignConfig {
    pub fn new(true_s: f64, mu: u64, seed: u64) -> Self {
        Self {
            true_s,
            mu,
            batches: 50,
            estimates_per_batch: 40,
            seed,
            interval: None,
        }
    }

    pub fn search_interval(&self) -> (f64, f64) {
        self.interval
            .unwrap_or(((self.true_s - 0.5).max(0.0), self.true_s + 0.5))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationReport {
    pub measurement: String,
    pub true_s: f64,
    pub estimates: Vec<f64>,
    pub mean_estimate: f64,
    pub empirical_variance: f64,
    /// `1/(μF)`.
    pub crb: f64,
    pub ratio: f64,
    pub fisher_per_shot: f64,
    pub photons_per_shot: f64,
    pub mu: u64,
    pub batches: usize,
    pub estimates_per_batch: usize,
    pub seed: u64,
}

/// Runs `batches × estimates_per_batch` independent ML estimates. Batch `b`
/// draws from ChaCha8 stream `b` of the seed, so results do not depend on
/// scheduling.
pub fn run_campaign(model: &dyn CountModel, cfg: &CampaignConfig) -> Result<EstimationReport> {
    let s = cfg.true_s;
    let fisher = model.fisher(s)?;
    if !(fisher > 1e-12) {
        return Err(Error::NonIdentifiable(format!("Fisher information vanishes at s = {s}")));
    }
    if cfg.mu == 0 || cfg.batches == 0 || cfg.estimates_per_batch == 0 {
        return Err(Error::InvalidParameter("campaign needs mu, batches and estimates >= 1".into()));
    }
    let per_shot = model.expectations(s)?;
    check_expectations(&per_shot)?;
    let mu = cfg.mu as f64;
    let totals: Vec<f64> = per_shot.iter().map(|e| e * mu).collect();
    let interval = cfg.search_interval();

    let batches: Vec<Vec<f64>> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            (0..cfg.estimates_per_batch)
                .map(|_| {
                    let counts: Vec<f64> = totals.iter().map(|&l| draw(&mut rng, l) as f64).collect();
                    ml_estimate(&counts, mu, model, interval)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let estimates: Vec<f64> = batches.into_iter().flatten().collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let crb = 1.0 / (mu * fisher);
    Ok(EstimationReport {
        measurement: model.label().into(),
        true_s: s,
        mean_estimate: mean,
        empirical_variance: var,
        crb,
        ratio: var / crb,
        fisher_per_shot: fisher,
        photons_per_shot: per_shot.iter().sum(),
        estimates,
        mu: cfg.mu,
        batches: cfg.batches,
        estimates_per_batch: cfg.estimates_per_batch,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn zero_expectations_give_zero_counts() {
        let r = sample_counts(&[0.0, 0.0, 0.0], 7).unwrap();
        assert!(r.iter().all(|c| c.count == 0));
        assert!(matches!(sample_counts(&[1.0, -0.5], 7), Err(Error::NegativeExpectation { channel: 1, .. })));
    }

    #[test]
    fn poisson_mean() {
        let r = sample_counts(&vec![4.0; 100_000], 11).unwrap();
        let mean = r.iter().map(|c| c.count as f64).sum::<f64>() / 1e5;
        assert!((mean - 4.0).abs() < 3.0 * (4.0f64 / 1e5).sqrt());
        assert_eq!(r[5].expected, 4.0);
    }

    #[test]
    fn seeded_draws_repeat() {
        let e = [0.5, 3.0, 40.0, 1e4];
        assert_eq!(sample_counts(&e, 99).unwrap(), sample_counts(&e, 99).unwrap());
        assert_ne!(sample_counts(&e, 99).unwrap(), sample_counts(&e, 100).unwrap());
    }

    fn vortex_source() -> SourceModel {
        SourceModel::with_photon_budget(Family::Vortex { a: FRAC_1_SQRT_2, psi: 0.0 }, 1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn noise_free_counts_recover_truth() {
        let model = SpadeModel::new(vortex_source(), 30).unwrap();
        let mu = 1e4;
        let counts: Vec<f64> = model.expectations(1.0).unwrap().iter().map(|e| e * mu).collect();
        let est = ml_estimate(&counts, mu, &model, (0.5, 1.5)).unwrap();
        assert!((est - 1.0).abs() < 1e-4, "{est}");
        let zeros = vec![0.0; counts.len()];
        assert!(matches!(ml_estimate(&zeros, mu, &model, (0.5, 1.5)), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn photon_budget() {
        let src = vortex_source();
        assert!((src.amplitudes(1.0).unwrap().total_photons() - 10.0).abs() < 1e-12);
        let model = SpadeModel::new(src, 30).unwrap();
        let total: f64 = model.expectations(1.0).unwrap().iter().sum();
        assert!((total - 10.0).abs() < 1e-9);
    }

    #[test]
    fn camera_conserves_photons_and_resolves_fisher() {
        let src = SourceModel::with_photon_budget(Family::Plane { ktilde: 2.0 }, 1.0, 1.0, 10.0).unwrap();
        let cam = BinnedDirectModel::covering(src, 1.0).unwrap();
        let total: f64 = cam.expectations(1.0).unwrap().iter().sum();
        assert!((total - 10.0).abs() < 1e-6);
        let ratio = cam.check_resolution(1.0).unwrap();
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        let coarse = BinnedDirectModel::new(src, DI_BINS, 8.5).unwrap();
        assert!(coarse.check_resolution(1.0).is_err());
    }

    #[test]
    fn zero_separation_is_not_identifiable() {
        let src = SourceModel {
            family: Family::Vortex { a: FRAC_1_SQRT_2, psi: 0.0 },
            g: 1.0,
            kappa: 1.0,
        };
        let model = SpadeModel::new(src, 30).unwrap();
        let cfg = CampaignConfig::new(0.0, 10_000, 1);
        assert!(matches!(run_campaign(&model, &cfg), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn small_campaign_is_reproducible() {
        let model = SpadeModel::new(vortex_source(), 30).unwrap();
        let mut cfg = CampaignConfig::new(1.0, 10_000, 5);
        cfg.batches = 4;
        cfg.estimates_per_batch = 5;
        let a = run_campaign(&model, &cfg).unwrap();
        let b = run_campaign(&model, &cfg).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.estimates.len(), 20);
    }
}
