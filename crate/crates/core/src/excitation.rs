//! Pump/Stokes excitation profiles and the coherent amplitudes they imprint
//! on the two image-plane modes.
//!
//! A molecule at `r` emits the coherent amplitude `α(r) = -i g u_St(r) u_pu*(r)²`.
//! With emitters at `(x0 ∓ s/2, row)` the signal is the two-mode coherent
//! state with
//!
//! ```text
//! α± = sqrt(κ(1 ± δ)/2) [α(r_right) ± α(r_left)]
//! ```
//!
//! All positions here are in units of the PSF width.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{finite_difference, Stencil};
use crate::psf_modes::{PointSpread, PsfGeometry};

/// Finite-difference step (units of the PSF width).
pub const FD_STEP: f64 = 1e-5;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A transverse excitation pattern seen by the emitters.
pub trait Excitation: Send + Sync {
    /// `u_St(r) · conj(u_pu(r))²` at dimensionless `(x, y)`.
    fn drive(&self, x: f64, y: f64) -> Complex64;

    /// `∂x` of [`drive`](Self::drive). The default is a central difference.
    fn drive_dx(&self, x: f64, y: f64) -> Complex64 {
        finite_difference(|t| self.drive(t, y), x, FD_STEP, Stencil::Central2)
    }

    /// Whether [`drive_dx`](Self::drive_dx) is exact.
    fn has_analytic_derivative(&self) -> bool {
        false
    }

    /// Row (`y`) on which both emitters sit.
    fn emitter_row(&self) -> f64 {
        0.0
    }
}

/// Pump and Stokes plane waves. Wavevectors are in units of `1/w`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneWaveExcitation {
    pub k_pu_x: f64,
    pub k_pu_y: f64,
    pub k_st_x: f64,
    pub k_st_y: f64,
}

impl PlaneWaveExcitation {
    /// Stokes tilt only, so that `k̃ = ktilde`.
    pub fn from_ktilde(ktilde: f64) -> Self {
        Self {
            k_st_x: ktilde,
            ..Self::default()
        }
    }

    /// `k̃ = w (k_St,x - 2 k_pu,x)`.
    pub fn ktilde(&self) -> f64 {
        self.k_st_x - 2.0 * self.k_pu_x
    }

    fn ky(&self) -> f64 {
        self.k_st_y - 2.0 * self.k_pu_y
    }
}

impl Excitation for PlaneWaveExcitation {
    fn drive(&self, x: f64, y: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.ktilde() * x + self.ky() * y)
    }

    fn drive_dx(&self, x: f64, y: f64) -> Complex64 {
        I * self.ktilde() * self.drive(x, y)
    }

    fn has_analytic_derivative(&self) -> bool {
        true
    }
}

/// Plane-wave pump with a first-order Laguerre-Gauss (vortex) Stokes beam
/// `u_St = N r e^{iφ} e^{-r²/a²}`, `N = sqrt(2e)/a`, centred at the origin.
/// The emitters sit on the row `y = psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexExcitation {
    pub a: f64,
    pub psi: f64,
}

impl VortexExcitation {
    pub fn new(a: f64, psi: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !psi.is_finite() {
            return Err(Error::InvalidParameter(format!("vortex needs a > 0 and finite psi, got a = {a}, psi = {psi}")));
        }
        Ok(Self { a, psi })
    }

    pub fn norm(&self) -> f64 {
        (2.0 * std::f64::consts::E).sqrt() / self.a
    }
}

impl Excitation for VortexExcitation {
    fn drive(&self, x: f64, y: f64) -> Complex64 {
        let env = (-(x * x + y * y) / (self.a * self.a)).exp();
        Complex64::new(x, y) * (self.norm() * env)
    }

    fn drive_dx(&self, x: f64, y: f64) -> Complex64 {
        let a2 = self.a * self.a;
        let env = (-(x * x + y * y) / a2).exp();
        (Complex64::new(1.0, 0.0) - Complex64::new(x, y) * (2.0 * x / a2)) * (self.norm() * env)
    }

    fn has_analytic_derivative(&self) -> bool {
        true
    }

    fn emitter_row(&self) -> f64 {
        self.psi
    }
}

/// Either of the two named excitation families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExcitationConfig {
    Plane(PlaneWaveExcitation),
    Vortex(VortexExcitation),
}

impl Excitation for ExcitationConfig {
    fn drive(&self, x: f64, y: f64) -> Complex64 {
        match self {
            Self::Plane(p) => p.drive(x, y),
            Self::Vortex(v) => v.drive(x, y),
        }
    }

    fn drive_dx(&self, x: f64, y: f64) -> Complex64 {
        match self {
            Self::Plane(p) => p.drive_dx(x, y),
            Self::Vortex(v) => v.drive_dx(x, y),
        }
    }

    fn has_analytic_derivative(&self) -> bool {
        true
    }

    fn emitter_row(&self) -> f64 {
        match self {
            Self::Plane(p) => p.emitter_row(),
            Self::Vortex(v) => v.emitter_row(),
        }
    }
}

/// Two emitters at dimensionless separation `s` around centroid `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterScene {
    pub s: f64,
    pub x0: f64,
    pub g: f64,
    pub kappa: f64,
}

impl EmitterScene {
    pub fn new(s: f64, x0: f64, g: f64, kappa: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidParameter(format!("separation must be finite and >= 0, got {s}")));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling g must be positive, got {g}")));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!("transmission must lie in (0, 1], got {kappa}")));
        }
        Ok(Self { s, x0, g, kappa })
    }

    /// Centred scene with `g = κ = 1`.
    pub fn unit(s: f64) -> Self {
        Self {
            s,
            x0: 0.0,
            g: 1.0,
            kappa: 1.0,
        }
    }

    pub fn with_separation(self, s: f64) -> Self {
        Self { s, ..self }
    }

    /// `2κg²`, the scale used for normalized Fisher values.
    pub fn signal_scale(&self) -> f64 {
        2.0 * self.kappa * self.g * self.g
    }

    pub fn left(&self) -> f64 {
        self.x0 - 0.5 * self.s
    }

    pub fn right(&self) -> f64 {
        self.x0 + 0.5 * self.s
    }
}

/// `α(r) = -i g · drive(r)` at a dimensionless point.
pub fn emission_amplitude(exc: &dyn Excitation, scene: &EmitterScene, x: f64, y: f64) -> Complex64 {
    -I * scene.g * exc.drive(x, y)
}

/// How the parameter derivatives in [`ImageAmplitudes`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// Emitter amplitudes `α(r_left)`, `α(r_right)` and their derivatives with
/// respect to the dimensionless `s` and `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterAmplitudes {
    pub left: Complex64,
    pub right: Complex64,
    pub ds_left: Complex64,
    pub ds_right: Complex64,
    pub dx0_left: Complex64,
    pub dx0_right: Complex64,
}

/// Coherent amplitudes in the `u±` modes. Derivatives are with respect to
/// the physical `d` and `x0` (units `1/w`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageAmplitudes {
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    pub d_d_alpha_plus: Complex64,
    pub d_d_alpha_minus: Complex64,
    pub d_x0_alpha_plus: Complex64,
    pub d_x0_alpha_minus: Complex64,
    pub emitters: EmitterAmplitudes,
    pub scene: EmitterScene,
    pub width: f64,
    pub provenance: Provenance,
}

impl ImageAmplitudes {
    /// `N_tot = |α+|² + |α−|²`.
    pub fn total_photons(&self) -> f64 {
        self.alpha_plus.norm_sqr() + self.alpha_minus.norm_sqr()
    }
}

/// Emitter amplitudes and their derivatives for a scene.
pub fn emitter_amplitudes(exc: &dyn Excitation, scene: &EmitterScene) -> EmitterAmplitudes {
    let row = exc.emitter_row();
    let (xl, xr) = (scene.left(), scene.right());
    let dl = -I * scene.g * exc.drive_dx(xl, row);
    let dr = -I * scene.g * exc.drive_dx(xr, row);
    EmitterAmplitudes {
        left: emission_amplitude(exc, scene, xl, row),
        right: emission_amplitude(exc, scene, xr, row),
        ds_left: -0.5 * dl,
        ds_right: 0.5 * dr,
        dx0_left: dl,
        dx0_right: dr,
    }
}

/// Image-mode amplitudes, with the PSF geometry supplied by the caller.
pub fn image_amplitudes_with(exc: &dyn Excitation, scene: &EmitterScene, geom: &PsfGeometry) -> ImageAmplitudes {
    let e = emitter_amplitudes(exc, scene);
    let u = geom.unitless();
    let c = (0.5 * scene.kappa).sqrt();
    let rp = (1.0 + u.delta).sqrt();
    let rm = (1.0 - u.delta).max(0.0).sqrt();
    let sum = e.right + e.left;
    let diff = e.right - e.left;
    let w = geom.width;

    let ds_plus = c * (u.root_plus_prime * sum + rp * (e.ds_right + e.ds_left));
    let ds_minus = c * (u.root_minus_prime * diff + rm * (e.ds_right - e.ds_left));
    ImageAmplitudes {
        alpha_plus: c * rp * sum,
        alpha_minus: c * rm * diff,
        d_d_alpha_plus: ds_plus / w,
        d_d_alpha_minus: ds_minus / w,
        d_x0_alpha_plus: c * rp * (e.dx0_right + e.dx0_left) / w,
        d_x0_alpha_minus: c * rm * (e.dx0_right - e.dx0_left) / w,
        emitters: e,
        scene: *scene,
        width: w,
        provenance: if exc.has_analytic_derivative() {
            Provenance::Analytic
        } else {
            Provenance::FiniteDifference
        },
    }
}

/// Image-mode amplitudes `α±` and their `d`/`x0` derivatives.
pub fn image_amplitudes(exc: &dyn Excitation, scene: &EmitterScene, psf: &dyn PointSpread) -> Result<ImageAmplitudes> {
    let geom = psf.geometry(scene.s)?;
    Ok(image_amplitudes_with(exc, scene, &geom))
}

/// Largest relative deviation between the reported derivatives and finite
/// differences of `α±` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub max_relative_deviation: f64,
    pub one_sided: bool,
}

/// Compares the derivatives in [`image_amplitudes`] against finite
/// differences of the amplitudes (one-sided in `s` when `s < h`).
pub fn amplitude_derivative_check(
    exc: &dyn Excitation,
    scene: &EmitterScene,
    psf: &dyn PointSpread,
) -> Result<DerivativeCheck> {
    let amps = image_amplitudes(exc, scene, psf)?;
    let w = psf.width();
    let at = |s: f64, x0: f64| -> Result<(Complex64, Complex64)> {
        let sc = EmitterScene { s, x0, ..*scene };
        let a = image_amplitudes(exc, &sc, psf)?;
        Ok((a.alpha_plus, a.alpha_minus))
    };

    let h = FD_STEP;
    let one_sided = scene.s < h;
    let mut samples_s = Vec::new();
    let offsets: &[f64] = if one_sided { &[0.0, 1.0, 2.0] } else { &[-1.0, 1.0] };
    for &o in offsets {
        samples_s.push(at(scene.s + o * h, scene.x0)?);
    }
    let fd_s = |pick: fn(&(Complex64, Complex64)) -> Complex64| -> Complex64 {
        let v: Vec<Complex64> = samples_s.iter().map(pick).collect();
        if one_sided {
            (4.0 * v[1] - 3.0 * v[0] - v[2]) / (2.0 * h)
        } else {
            (v[1] - v[0]) / (2.0 * h)
        }
    };
    let xm = at(scene.s, scene.x0 - h)?;
    let xp = at(scene.s, scene.x0 + h)?;

    let pairs = [
        (amps.d_d_alpha_plus * w, fd_s(|p| p.0)),
        (amps.d_d_alpha_minus * w, fd_s(|p| p.1)),
        (amps.d_x0_alpha_plus * w, (xp.0 - xm.0) / (2.0 * h)),
        (amps.d_x0_alpha_minus * w, (xp.1 - xm.1) / (2.0 * h)),
    ];
    let floor = scene.g * scene.kappa.sqrt();
    let max_relative_deviation = pairs
        .iter()
        .map(|(a, b)| (a - b).norm() / a.norm().max(floor))
        .fold(0.0, f64::max);
    Ok(DerivativeCheck {
        max_relative_deviation,
        one_sided,
    })
}
