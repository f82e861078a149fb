//! Spectral weight of the anti-Stokes emission for one Raman resonance.
//!
//! ```text
//! g Φ(ω) = W ∫ dω'/2π ∫ dω₋/2π  α_pu² α_St / (ω₋ − ω_v + iγ)
//!                               · ψ_pu*(ω − ω₋) ψ_pu*(ω' + ω₋) ψ_St(ω')
//! ```
//!
//! where `W` folds the polarizability and field-strength prefactors. The
//! `+iγ` keeps the integrand smooth, so both integrals use plain adaptive
//! quadrature (inner over `ω'`, outer over `ω₋`).

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, QuadratureSpec};

/// Half-width of each integration window, in bandwidths.
const WINDOW: f64 = 8.0;
/// Points and half-width (in combined bandwidths) of the normalization grid.
pub const PHI_GRID_POINTS: usize = 4096;
pub const PHI_GRID_HALF_WIDTH: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanResonance {
    pub omega_vib: f64,
    pub gamma_vib: f64,
    /// `|α_{g'g}|²` with the field-strength prefactors folded in.
    pub polarizability_weight: f64,
}

impl RamanResonance {
    pub fn new(omega_vib: f64, gamma_vib: f64, polarizability_weight: f64) -> Result<Self> {
        if !(gamma_vib > 0.0) || !(polarizability_weight > 0.0) || !omega_vib.is_finite() {
            return Err(Error::InvalidParameter(
                "resonance needs finite frequency, positive linewidth and weight".into(),
            ));
        }
        Ok(Self {
            omega_vib,
            gamma_vib,
            polarizability_weight,
        })
    }
}

/// Spectral envelope of a pulse, normalized to `∫|ψ|² dω/2π = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralShape {
    /// `ψ(ω) = A exp(-(ω - center)²/(4σ²))`, `σ` the intensity bandwidth.
    Gaussian { center: f64, bandwidth: f64 },
    /// Samples on an increasing grid, linearly interpolated and zero outside.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
}

/// A coherent pulse `α ψ(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpectrum {
    pub shape: SpectralShape,
    pub amplitude: Complex64,
}

impl PulseSpectrum {
    pub fn gaussian(center: f64, bandwidth: f64, amplitude: Complex64) -> Result<Self> {
        if !(bandwidth > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!("pulse bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self {
            shape: SpectralShape::Gaussian { center, bandwidth },
            amplitude,
        })
    }

    /// Tabulated envelope, rescaled so that `∫|ψ|² dω/2π = 1` under linear
    /// interpolation.
    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>, amplitude: Complex64) -> Result<Self> {
        if omega.len() < 2 || omega.len() != values.len() || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("tabulated spectrum needs >= 2 increasing samples".into()));
        }
        // Exact integral of the squared piecewise-linear interpolant.
        let norm2: f64 = omega
            .windows(2)
            .zip(values.windows(2))
            .map(|(w, v)| (w[1] - w[0]) * (v[0] * v[0] + v[0] * v[1] + v[1] * v[1]) / 3.0)
            .sum::<f64>()
            / (2.0 * PI);
        if !(norm2 > 0.0) {
            return Err(Error::InvalidParameter("tabulated spectrum is identically zero".into()));
        }
        let scale = norm2.sqrt().recip();
        Ok(Self {
            shape: SpectralShape::Tabulated {
                omega,
                values: values.into_iter().map(|v| v * scale).collect(),
            },
            amplitude,
        })
    }

    /// Normalized envelope `ψ(ω)`.
    pub fn profile(&self, omega: f64) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { center, bandwidth } => {
                let a = ((2.0 * PI).sqrt() / bandwidth).sqrt();
                let x = omega - center;
                a * (-x * x / (4.0 * bandwidth * bandwidth)).exp()
            }
            SpectralShape::Tabulated { omega: grid, values } => {
                if omega < grid[0] || omega > grid[grid.len() - 1] {
                    return 0.0;
                }
                let i = grid.partition_point(|&w| w <= omega).clamp(1, grid.len() - 1);
                let t = (omega - grid[i - 1]) / (grid[i] - grid[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    pub fn center(&self) -> f64 {
        let (lo, hi) = self.support();
        match &self.shape {
            SpectralShape::Gaussian { center, .. } => *center,
            SpectralShape::Tabulated { .. } => 0.5 * (lo + hi),
        }
    }

    /// RMS intensity bandwidth.
    pub fn bandwidth(&self) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { bandwidth, .. } => *bandwidth,
            SpectralShape::Tabulated { omega, .. } => (omega[omega.len() - 1] - omega[0]) / (2.0 * WINDOW),
        }
    }

    /// Interval outside which the envelope is negligible.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            SpectralShape::Gaussian { center, bandwidth } => (center - WINDOW * bandwidth, center + WINDOW * bandwidth),
            SpectralShape::Tabulated { omega, .. } => (omega[0], omega[omega.len() - 1]),
        }
    }
}

fn spec_for(scale: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-14 * scale,
        rel_tol: 1e-11,
        max_depth: 50,
    }
}

/// Fixed sub-intervals of the outer variable; keeping them independent of
/// `ω` lets quadrature nodes, and so the cached inner integrals, be shared.
const OUTER_PIECES: usize = 16;

/// Evaluates `g Φ(ω)` for many `ω`, caching the inner `ω'` integral by node.
struct WeightIntegrator<'a> {
    res: &'a RamanResonance,
    pump: &'a PulseSpectrum,
    stokes: &'a PulseSpectrum,
    pref: Complex64,
    pieces: Vec<(f64, f64)>,
    inner_spec: QuadratureSpec,
    outer_spec: QuadratureSpec,
    cache: RefCell<HashMap<u64, f64>>,
}

impl<'a> WeightIntegrator<'a> {
    fn new(res: &'a RamanResonance, pump: &'a PulseSpectrum, stokes: &'a PulseSpectrum) -> Self {
        let (st_lo, st_hi) = stokes.support();
        let (pu_lo, pu_hi) = pump.support();
        // ψ_pu(ω' + ω₋) ψ_St(ω') confines ω₋ to supp(pu) − supp(St).
        let (lo, hi) = (pu_lo - st_hi, pu_hi - st_lo);
        let h = (hi - lo) / OUTER_PIECES as f64;
        let pieces = (0..OUTER_PIECES).map(|i| (lo + h * i as f64, lo + h * (i + 1) as f64)).collect();
        let peak = pump.profile(pump.center()).abs().max(1e-300);
        let inner_scale = peak * stokes.profile(stokes.center()).abs() * (st_hi - st_lo);
        Self {
            res,
            pump,
            stokes,
            pref: res.polarizability_weight * pump.amplitude * pump.amplitude * stokes.amplitude / (4.0 * PI * PI),
            pieces,
            inner_spec: spec_for(inner_scale),
            outer_spec: spec_for(inner_scale * peak * h / res.gamma_vib),
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn inner(&self, wm: f64) -> Result<f64> {
        if let Some(&v) = self.cache.borrow().get(&wm.to_bits()) {
            return Ok(v);
        }
        let (lo, hi) = self.stokes.support();
        let v = integrate_1d(|wp: f64| self.pump.profile(wp + wm) * self.stokes.profile(wp), lo, hi, &self.inner_spec)?
            .value;
        self.cache.borrow_mut().insert(wm.to_bits(), v);
        Ok(v)
    }

    fn weight(&self, omega: f64) -> Result<Complex64> {
        let (pu_lo, pu_hi) = self.pump.support();
        let mut total = Complex64::new(0.0, 0.0);
        for &(lo, hi) in &self.pieces {
            // Skip pieces where ψ_pu(ω − ω₋) vanishes.
            if omega - hi > pu_hi || omega - lo < pu_lo {
                continue;
            }
            let mut failure = None;
            let q = integrate_1d(
                |wm: f64| -> Complex64 {
                    let c = self.inner(wm).unwrap_or_else(|e| {
                        failure.get_or_insert(e);
                        0.0
                    });
                    self.pump.profile(omega - wm) * c / Complex64::new(wm - self.res.omega_vib, self.res.gamma_vib)
                },
                lo,
                hi,
                &self.outer_spec,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            total += q.value;
        }
        Ok(self.pref * total)
    }
}

/// `g Φ(ω)` by nested adaptive quadrature.
pub fn spectral_weight(res: &RamanResonance, pump: &PulseSpectrum, stokes: &PulseSpectrum, omega: f64) -> Result<Complex64> {
    WeightIntegrator::new(res, pump, stokes).weight(omega)
}

/// Coupling `g` and normalized spectral mode `Φ(ω)` sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct NormalizedSpectrum {
    pub g: f64,
    pub omega: Vec<f64>,
    pub phi: Vec<Complex64>,
    res: RamanResonance,
    pump: PulseSpectrum,
    stokes: PulseSpectrum,
}

impl NormalizedSpectrum {
    /// `Φ(ω)` evaluated directly (not interpolated).
    pub fn phi_at(&self, omega: f64) -> Result<Complex64> {
        Ok(spectral_weight(&self.res, &self.pump, &self.stokes, omega)? / self.g)
    }

    /// `Φ` at many frequencies, sharing one integration cache.
    pub fn phi_many(&self, omegas: &[f64]) -> Result<Vec<Complex64>> {
        let integrator = WeightIntegrator::new(&self.res, &self.pump, &self.stokes);
        omegas.iter().map(|&w| Ok(integrator.weight(w)? / self.g)).collect()
    }

    /// Grid limits.
    pub fn span(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }
}

/// `σ_c = sqrt(2σ_pu² + σ_St²)`, the bandwidth of the anti-Stokes envelope.
pub fn combined_bandwidth(pump: &PulseSpectrum, stokes: &PulseSpectrum) -> f64 {
    (2.0 * pump.bandwidth().powi(2) + stokes.bandwidth().powi(2)).sqrt()
}

/// Samples `g Φ` on 4096 points over ±12 combined bandwidths around
/// `2ω_pu − ω_St` and normalizes it by trapezoidal integration.
pub fn normalize_phi(res: &RamanResonance, pump: &PulseSpectrum, stokes: &PulseSpectrum) -> Result<NormalizedSpectrum> {
    let center = 2.0 * pump.center() - stokes.center();
    let half = PHI_GRID_HALF_WIDTH * combined_bandwidth(pump, stokes);
    let n = PHI_GRID_POINTS;
    let h = 2.0 * half / (n - 1) as f64;
    let omega: Vec<f64> = (0..n).map(|i| center - half + h * i as f64).collect();
    let integrator = WeightIntegrator::new(res, pump, stokes);
    let weights: Vec<Complex64> = omega.iter().map(|&w| integrator.weight(w)).collect::<Result<_>>()?;
    let sq: Vec<f64> = weights.iter().map(|z| z.norm_sqr()).collect();
    let integral = h * (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[n - 1])) / (2.0 * PI);
    let g = integral.sqrt();
    if !(g > 1e-300) {
        return Err(Error::ZeroSignal(g));
    }
    Ok(NormalizedSpectrum {
        g,
        phi: weights.iter().map(|z| z / g).collect(),
        omega,
        res: *res,
        pump: pump.clone(),
        stokes: stokes.clone(),
    })
}
