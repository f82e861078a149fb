//! Point-spread-function geometry for two emitters on the x-axis.
//!
//! Coordinates inside this crate are measured in units of the PSF width `w`
//! (`s = d/w`, emitters at `x0 -/+ s/2`). A [`PointSpread`] exposes its field
//! in those units, normalized so that `∫ u0² dξ dζ = 1`.
//!
//! The image-plane modes are
//!
//! ```text
//! u±(r) = [u0(r - r_right) ± u0(r - r_left)] / sqrt(2(1 ± δ))
//! ```
//!
//! and every separation-dependent scalar that enters the Fisher formulas is
//! collected in [`PsfGeometry`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_2d, power_over_root_factorial, sinh_minus_identity, z_over_sinh, QuadratureSpec, Rect,
};

/// Below this separation the removable 0/0 expressions use series limits.
pub const S_MIN: f64 = 1e-3;

/// Step used when a PSF has no analytic x-derivative.
const FD_STEP: f64 = 1e-5;

/// A real, mirror-symmetric point spread function.
pub trait PointSpread: Send + Sync {
    /// Width `w` that sets the length unit.
    fn width(&self) -> f64;

    /// Field at `(ξ, ζ)` in units of the width.
    fn unit_value(&self, xi: f64, zeta: f64) -> f64;

    /// `∂ξ` of [`unit_value`](Self::unit_value).
    fn unit_dx(&self, xi: f64, zeta: f64) -> f64 {
        (self.unit_value(xi + FD_STEP, zeta) - self.unit_value(xi - FD_STEP, zeta)) / (2.0 * FD_STEP)
    }

    /// Integration cutoff in units of the width, measured beyond the outermost emitter.
    fn support_radius(&self) -> f64 {
        8.0
    }

    /// Field in physical coordinates.
    fn value(&self, x: f64, y: f64) -> f64 {
        let w = self.width();
        self.unit_value(x / w, y / w) / w
    }

    /// Overlap scalars at dimensionless separation `s`.
    fn geometry(&self, s: f64) -> Result<PsfGeometry> {
        quadrature_geometry(self, s)
    }
}

/// Evaluates `u0(r)` for any PSF.
pub fn psf_value(psf: &dyn PointSpread, x: f64, y: f64) -> f64 {
    psf.value(x, y)
}

/// Gaussian PSF `u0(r) = sqrt(2/(π w²)) exp(-r²/w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPsf {
    pub width_w: f64,
}

impl GaussianPsf {
    pub fn new(width_w: f64) -> Result<Self> {
        if !(width_w > 0.0) || !width_w.is_finite() {
            return Err(Error::InvalidParameter(format!("PSF width must be positive, got {width_w}")));
        }
        Ok(Self { width_w })
    }

    /// Unit-width Gaussian.
    pub fn unit() -> Self {
        Self { width_w: 1.0 }
    }

    /// One-dimensional factor `(2/π)^{1/4} exp(-ξ²)`; the PSF is its product in ξ and ζ.
    pub fn profile_1d(xi: f64) -> f64 {
        (2.0 / PI).powf(0.25) * (-xi * xi).exp()
    }
}

impl Default for GaussianPsf {
    fn default() -> Self {
        Self::unit()
    }
}

impl PointSpread for GaussianPsf {
    fn width(&self) -> f64 {
        self.width_w
    }

    fn unit_value(&self, xi: f64, zeta: f64) -> f64 {
        (2.0 / PI).sqrt() * (-(xi * xi + zeta * zeta)).exp()
    }

    fn unit_dx(&self, xi: f64, zeta: f64) -> f64 {
        -2.0 * xi * self.unit_value(xi, zeta)
    }

    fn geometry(&self, s: f64) -> Result<PsfGeometry> {
        gaussian_geometry(s, self.width_w)
    }
}

type FieldFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A PSF given by an arbitrary real evaluator in physical coordinates, with
/// every overlap computed by 2D quadrature.
#[derive(Clone)]
pub struct NumericPsf {
    evaluator: Arc<FieldFn>,
    width_w: f64,
    pub support_radius: f64,
    pub quadrature: QuadratureSpec,
}

impl NumericPsf {
    pub fn new<F>(width_w: f64, support_radius: f64, evaluator: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(width_w > 0.0) || !(support_radius > 0.0) {
            return Err(Error::InvalidParameter(
                "numeric PSF needs positive width and support radius".into(),
            ));
        }
        Ok(Self {
            evaluator: Arc::new(evaluator),
            width_w,
            support_radius,
            quadrature: QuadratureSpec::new(1e-12, 40)?,
        })
    }

    /// Numeric copy of a Gaussian PSF, used to cross-check closed forms.
    pub fn sampled_gaussian(width_w: f64) -> Self {
        let g = GaussianPsf { width_w };
        Self::new(width_w, 8.0, move |x, y| g.value(x, y)).expect("valid width")
    }

    /// `∫ u0² dr` over the support square.
    pub fn norm_squared(&self) -> Result<f64> {
        let l = self.support_radius;
        Ok(integrate_2d(|x, y| self.unit_value(x, y).powi(2), Rect::square(l), &self.quadrature)?.value)
    }
}

impl fmt::Debug for NumericPsf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericPsf")
            .field("width_w", &self.width_w)
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl PointSpread for NumericPsf {
    fn width(&self) -> f64 {
        self.width_w
    }

    fn unit_value(&self, xi: f64, zeta: f64) -> f64 {
        let w = self.width_w;
        w * (self.evaluator)(w * xi, w * zeta)
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// Separation-dependent PSF scalars. Stored in physical units (`1/w`, `1/w²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfGeometry {
    /// Dimensionless separation `d/w`.
    pub s: f64,
    pub width: f64,
    /// Overlap `δ = ∫ u0(r - r1) u0(r - r2) dr`.
    pub delta: f64,
    /// `∂δ/∂d`.
    pub delta_prime: f64,
    /// `(Δk)² = ∫ |∂x u0|² dr`.
    pub dk2: f64,
    /// `β = ∫ ∂x u0(r - r1) ∂x u0(r - r2) dr`.
    pub beta: f64,
    /// `η±² = ∫ |∂d u±|² dr`.
    pub eta_plus2: f64,
    pub eta_minus2: f64,
    /// Squared norms of the centroid-derivative modes `∂x0 u±` after removing
    /// their component along `u∓`.
    pub xi_plus2: f64,
    pub xi_minus2: f64,
    /// `∂d sqrt(1 + δ)` and `∂d sqrt(1 - δ)`.
    pub root_plus_prime: f64,
    pub root_minus_prime: f64,
    /// Quadrature error estimate (zero for closed forms).
    pub error_estimate: f64,
}

impl PsfGeometry {
    /// Dimensionless copies of the overlap scalars (all in units of `w`).
    pub fn unitless(&self) -> UnitlessGeometry {
        let w = self.width;
        UnitlessGeometry {
            delta: self.delta,
            delta_prime: self.delta_prime * w,
            dk2: self.dk2 * w * w,
            beta: self.beta * w * w,
            eta_plus2: self.eta_plus2 * w * w,
            eta_minus2: self.eta_minus2 * w * w,
            root_plus_prime: self.root_plus_prime * w,
            root_minus_prime: self.root_minus_prime * w,
        }
    }
}

/// [`PsfGeometry`] in units of the PSF width; derivatives are with respect to `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitlessGeometry {
    pub delta: f64,
    pub delta_prime: f64,
    pub dk2: f64,
    pub beta: f64,
    pub eta_plus2: f64,
    pub eta_minus2: f64,
    pub root_plus_prime: f64,
    pub root_minus_prime: f64,
}

fn check_separation(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("separation must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// Closed-form Gaussian geometry.
pub fn gaussian_geometry(s: f64, w: f64) -> Result<PsfGeometry> {
    check_separation(s)?;
    let s2 = s * s;
    let z = 0.5 * s2;
    let delta = (-z).exp();
    let delta_prime = -s * delta;
    let beta = delta * (1.0 - s2);

    // η+² = (2 sinh z + s²) / (4 (e^{z/2} + e^{-z/2})²)
    let eta_plus2 = (2.0 * z.sinh() + s2) / (16.0 * (0.5 * z).cosh().powi(2));
    // η−² = (2 sinh z - s²) / (16 sinh²(z/2)) = 2(sinh z - z) / (16 sinh²(z/2))
    let eta_minus2 = if s < S_MIN {
        (z / 12.0) * (1.0 - z * z / 30.0)
    } else {
        2.0 * sinh_minus_identity(z) / (16.0 * (0.5 * z).sinh().powi(2))
    };
    let ratio = z_over_sinh(z);
    let xi_plus2 = 1.0 - ratio;
    let xi_minus2 = 1.0 + ratio;

    let root_plus_prime = -s * delta / (2.0 * (1.0 + delta).sqrt());
    let root_minus_prime = if s == 0.0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        s * delta / (2.0 * (-(-z).exp_m1()).sqrt())
    };

    let iw = 1.0 / w;
    let iw2 = iw * iw;
    Ok(PsfGeometry {
        s,
        width: w,
        delta,
        delta_prime: delta_prime * iw,
        dk2: iw2,
        beta: beta * iw2,
        eta_plus2: eta_plus2 * iw2,
        eta_minus2: eta_minus2 * iw2,
        xi_plus2: xi_plus2 * iw2,
        xi_minus2: xi_minus2 * iw2,
        root_plus_prime: root_plus_prime * iw,
        root_minus_prime: root_minus_prime * iw,
        error_estimate: 0.0,
    })
}

/// Overlap `δ` at separation `s`.
pub fn overlap_delta(psf: &dyn PointSpread, s: f64) -> Result<f64> {
    Ok(psf.geometry(s)?.delta)
}

/// Derivative overlap `β` at separation `s` (units `1/w²`).
pub fn overlap_beta(psf: &dyn PointSpread, s: f64) -> Result<f64> {
    Ok(psf.geometry(s)?.beta)
}

/// Overlap scalars for any PSF.
pub fn psf_geometry(psf: &dyn PointSpread, s: f64) -> Result<PsfGeometry> {
    psf.geometry(s)
}

fn quadrature_geometry<P: PointSpread + ?Sized>(psf: &P, s: f64) -> Result<PsfGeometry> {
    check_separation(s)?;
    let half = 0.5 * s;
    let l = psf.support_radius() + half;
    let dom = Rect::square(l);
    let spec = QuadratureSpec::new(1e-12, 40)?;
    let left = |x: f64, y: f64| psf.unit_value(x + half, y);
    let right = |x: f64, y: f64| psf.unit_value(x - half, y);
    let left_dx = |x: f64, y: f64| psf.unit_dx(x + half, y);
    let right_dx = |x: f64, y: f64| psf.unit_dx(x - half, y);

    let q_delta = integrate_2d(|x, y| left(x, y) * right(x, y), dom, &spec)?;
    let q_dprime = integrate_2d(|x, y| left_dx(x, y) * right(x, y), dom, &spec)?;
    let q_dk2 = integrate_2d(|x, y| psf.unit_dx(x, y).powi(2), Rect::square(psf.support_radius()), &spec)?;
    let q_beta = integrate_2d(|x, y| left_dx(x, y) * right_dx(x, y), dom, &spec)?;

    let delta = q_delta.value;
    let dp = q_dprime.value;
    let dk2 = q_dk2.value;
    let beta = q_beta.value;

    let (eta_plus2, eta_minus2, xi_plus2, xi_minus2, root_minus_prime) = if s < S_MIN {
        // Leading-order limits: u− tends to the normalized derivative mode.
        (0.0, 0.0, 0.0, 2.0 * dk2, (0.5 * dk2).sqrt())
    } else {
        let ep = (dk2 - beta) / (4.0 * (1.0 + delta)) - dp * dp / (4.0 * (1.0 + delta).powi(2));
        let em = (dk2 + beta) / (4.0 * (1.0 - delta)) - dp * dp / (4.0 * (1.0 - delta).powi(2));
        let proj = dp * dp / (1.0 - delta * delta);
        let xp = (dk2 + beta) / (1.0 + delta) - proj;
        let xm = (dk2 - beta) / (1.0 - delta) - proj;
        (ep, em, xp, xm, -dp / (2.0 * (1.0 - delta).sqrt()))
    };
    let root_plus_prime = dp / (2.0 * (1.0 + delta).sqrt());

    let w = psf.width();
    let iw = 1.0 / w;
    let iw2 = iw * iw;
    Ok(PsfGeometry {
        s,
        width: w,
        delta,
        delta_prime: dp * iw,
        dk2: dk2 * iw2,
        beta: beta * iw2,
        eta_plus2: eta_plus2 * iw2,
        eta_minus2: eta_minus2 * iw2,
        xi_plus2: xi_plus2 * iw2,
        xi_minus2: xi_minus2 * iw2,
        root_plus_prime: root_plus_prime * iw,
        root_minus_prime: root_minus_prime * iw,
        error_estimate: q_delta.error_estimate
            + q_dprime.error_estimate
            + q_dk2.error_estimate
            + q_beta.error_estimate,
    })
}

/// Hermite-Gauss measurement basis `u_k(r) = H_k(√2 x/w) u0(r) / sqrt(2^k k!)`,
/// truncated at `truncation_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteGaussBasis {
    pub width_w: f64,
    pub truncation_m: usize,
}

impl HermiteGaussBasis {
    pub fn new(width_w: f64, truncation_m: usize) -> Result<Self> {
        GaussianPsf::new(width_w)?;
        Ok(Self {
            width_w,
            truncation_m,
        })
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k > self.truncation_m {
            return Err(Error::ModeOutOfRange {
                index: k,
                max: self.truncation_m,
            });
        }
        Ok(())
    }

    /// Mode `k` at physical coordinates.
    pub fn mode_value(&self, k: usize, x: f64, y: f64) -> Result<f64> {
        self.check_index(k)?;
        let w = self.width_w;
        Ok(unit_hg_mode(k, x / w, y / w) / w)
    }
}

/// `H_k(√2 ξ) / sqrt(2^k k!)` via the normalized three-term recurrence.
fn normalized_hermite(k: usize, xi: f64) -> f64 {
    let t = std::f64::consts::SQRT_2 * xi;
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = std::f64::consts::SQRT_2 * t;
    for n in 1..k {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * t * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn unit_hg_mode(k: usize, xi: f64, zeta: f64) -> f64 {
    normalized_hermite(k, xi) * GaussianPsf::unit().unit_value(xi, zeta)
}

/// Value of the `k`-th Hermite-Gauss mode at physical point `(x, y)`.
pub fn hg_mode_value(basis: &HermiteGaussBasis, k: usize, x: f64, y: f64) -> Result<f64> {
    basis.mode_value(k, x, y)
}

/// Overlap of HG mode `k` with a unit Gaussian displaced by `c` (units of `w`)
/// along x: `e^{-c²/2} c^k / sqrt(k!)`.
pub fn displaced_overlap(k: usize, c: f64) -> f64 {
    (-0.5 * c * c).exp() * power_over_root_factorial(c, k)
}

/// `∂c` of [`displaced_overlap`].
pub fn displaced_overlap_prime(k: usize, c: f64) -> f64 {
    let lower = if k == 0 {
        0.0
    } else {
        (k as f64).sqrt() * displaced_overlap(k - 1, c)
    };
    lower - c * displaced_overlap(k, c)
}

/// `γ_k = ∫ u_k(r) u0(r - r_right) dr = e^{-s²/8} (s/2)^k / sqrt(k!)`.
pub fn gamma_k(k: usize, s: f64) -> f64 {
    displaced_overlap(k, 0.5 * s)
}
