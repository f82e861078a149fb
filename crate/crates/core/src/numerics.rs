//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature in one and two
//! dimensions, convergent series summation with tail bounds, finite
//! differences, log-factorials and golden-section search.
//!
//! All adaptive routines subdivide in a fixed order and accumulate the final
//! sum over cells in creation order, so results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes on [-1, 1] with Kronrod and embedded Gauss weights
/// (Gauss weight zero for nodes that only belong to the Kronrod extension).
fn gk15_rule() -> &'static [(f64, f64, f64); 15] {
    static RULE: OnceLock<[(f64, f64, f64); 15]> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut rule = [(0.0, 0.0, 0.0); 15];
        let mut idx = 0;
        for j in 0..7 {
            let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
            rule[idx] = (-XGK[j], WGK[j], wg);
            rule[idx + 1] = (XGK[j], WGK[j], wg);
            idx += 2;
        }
        rule[14] = (0.0, WGK[7], WG[3]);
        rule
    })
}

/// Values that adaptive quadrature can accumulate: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Target bound on the summed error estimate.
    pub abs_tol: f64,
    /// Optional relative target; the routine stops once the error is below
    /// `max(abs_tol, rel_tol * |value|)`.
    pub rel_tol: f64,
    /// Maximum bisection depth of any single cell.
    pub max_depth: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, max_depth: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || max_depth < 1 {
            return Err(Error::InvalidParameter(format!(
                "quadrature spec needs abs_tol > 0 and max_depth >= 1 (got {abs_tol}, {max_depth})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol: 0.0,
            max_depth,
        })
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_depth: 30,
        }
    }
}

/// Axis-aligned integration rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// Square `[-h, h]^2`.
    pub fn square(half_width: f64) -> Self {
        Self::new(-half_width, half_width, -half_width, half_width)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct HeapKey(f64, usize);

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    // Largest error first; among equal errors, the oldest cell first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

struct Cell<B, T> {
    bounds: B,
    value: T,
    error: f64,
    depth: usize,
    active: bool,
}

const MAX_CELLS: usize = 400_000;

/// Generic global-adaptive driver: always refines the cell with the largest
/// error estimate until the summed estimate meets the tolerance.
fn adaptive<B, T, R, S>(root: B, spec: &QuadratureSpec, mut rule: R, split: S) -> Result<Quadrature<T>>
where
    B: Copy,
    T: QuadValue,
    R: FnMut(&B) -> (T, f64, usize),
    S: Fn(&B) -> Vec<B>,
{
    let mut cells: Vec<Cell<B, T>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let (v, e, n) = rule(&root);
    let mut evaluations = n;
    cells.push(Cell {
        bounds: root,
        value: v,
        error: e,
        depth: 0,
        active: true,
    });
    heap.push(HeapKey(e, 0));
    let mut total_err = e;
    let mut total_val = v;

    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total_val.magnitude());
        if total_err <= target {
            // Recompute exactly to remove drift from incremental updates.
            let (val, err) = sum_active(&cells);
            if err <= spec.abs_tol.max(spec.rel_tol * val.magnitude()) {
                return Ok(Quadrature {
                    value: val,
                    error_estimate: err,
                    evaluations,
                });
            }
            total_err = err;
            total_val = val;
        }
        let Some(HeapKey(_, idx)) = heap.pop() else {
            let (val, err) = sum_active(&cells);
            return Ok(Quadrature {
                value: val,
                error_estimate: err,
                evaluations,
            });
        };
        if cells[idx].depth >= spec.max_depth || cells.len() >= MAX_CELLS {
            let (_, err) = sum_active(&cells);
            return Err(Error::QuadratureNonConvergence {
                achieved: err,
                requested: target,
            });
        }
        cells[idx].active = false;
        total_err -= cells[idx].error;
        total_val = total_val - cells[idx].value;
        let depth = cells[idx].depth + 1;
        for child in split(&cells[idx].bounds) {
            let (v, e, n) = rule(&child);
            evaluations += n;
            total_err += e;
            total_val = total_val + v;
            let id = cells.len();
            cells.push(Cell {
                bounds: child,
                value: v,
                error: e,
                depth,
                active: true,
            });
            heap.push(HeapKey(e, id));
        }
    }
}

fn sum_active<B, T: QuadValue>(cells: &[Cell<B, T>]) -> (T, f64) {
    let mut val = T::zero();
    let mut err = 0.0;
    for c in cells.iter().filter(|c| c.active) {
        val = val + c.value;
        err += c.error;
    }
    (val, err)
}

fn gk15_interval<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64, usize) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = T::zero();
    let mut g = T::zero();
    for &(x, wk, wg) in gk15_rule() {
        let fx = f(center + half * x);
        k = k + fx * wk;
        if wg != 0.0 {
            g = g + fx * wg;
        }
    }
    let k = k * half;
    let g = g * half;
    (k, (k - g).magnitude(), 15)
}

/// Adaptive 1D integration of `f` over `[a, b]`.
pub fn integrate_1d<T, F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    adaptive(
        (a, b),
        spec,
        |&(lo, hi)| gk15_interval(&mut f, lo, hi),
        |&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            vec![(lo, mid), (mid, hi)]
        },
    )
}

fn gk15_rect<T: QuadValue, F: FnMut(f64, f64) -> T>(f: &mut F, r: &Rect) -> (T, f64, usize) {
    let cx = 0.5 * (r.x0 + r.x1);
    let hx = 0.5 * (r.x1 - r.x0);
    let cy = 0.5 * (r.y0 + r.y1);
    let hy = 0.5 * (r.y1 - r.y0);
    let rule = gk15_rule();
    let mut k = T::zero();
    let mut g = T::zero();
    for &(xi, wki, wgi) in rule {
        let x = cx + hx * xi;
        for &(yj, wkj, wgj) in rule {
            let fxy = f(x, cy + hy * yj);
            k = k + fxy * (wki * wkj);
            if wgi != 0.0 && wgj != 0.0 {
                g = g + fxy * (wgi * wgj);
            }
        }
    }
    let area = hx * hy;
    let k = k * area;
    let g = g * area;
    (k, (k - g).magnitude(), 225)
}

/// Adaptive 2D integration of `f` over a rectangle using a tensor-product
/// Gauss-Kronrod 7/15 pair and quadrisection of the worst cell.
pub fn integrate_2d<T, F>(mut f: F, domain: Rect, spec: &QuadratureSpec) -> Result<Quadrature<T>>
where
    T: QuadValue,
    F: FnMut(f64, f64) -> T,
{
    adaptive(
        domain,
        spec,
        |r| gk15_rect(&mut f, r),
        |r| {
            let mx = 0.5 * (r.x0 + r.x1);
            let my = 0.5 * (r.y0 + r.y1);
            vec![
                Rect::new(r.x0, mx, r.y0, my),
                Rect::new(mx, r.x1, r.y0, my),
                Rect::new(r.x0, mx, my, r.y1),
                Rect::new(mx, r.x1, my, r.y1),
            ]
        },
    )
}

/// A partial sum together with the tail bound that certified it.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

pub const SERIES_MAX_TERMS: usize = 500;

/// Sums `term(0) + term(1) + ...`, stopping after `k` terms once
/// `tail_bound(k)` (a bound on `sum_{j >= k} |term(j)|`) falls below `tol`.
pub fn sum_series<T, B>(term: T, tail_bound: B, tol: f64) -> Result<SeriesSum>
where
    T: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
{
    let mut sum = 0.0;
    for k in 0..=SERIES_MAX_TERMS {
        let bound = tail_bound(k);
        if bound < tol {
            return Ok(SeriesSum {
                value: sum,
                terms: k,
                tail_bound: bound,
            });
        }
        if k == SERIES_MAX_TERMS {
            break;
        }
        sum += term(k);
    }
    Err(Error::SeriesNonConvergence {
        k_max: SERIES_MAX_TERMS,
    })
}

/// Bound on the Poisson tail `sum_{j >= k} e^{-lambda} lambda^j / j!`.
pub fn poisson_tail_bound(lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if kf + 1.0 <= lambda {
        return 1.0;
    }
    let lead = (-lambda + kf * lambda.ln() - ln_factorial(k)).exp();
    lead / (1.0 - lambda / (kf + 1.0))
}

/// Finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`
    Central2,
    /// `(-3f(x) + 4f(x+h) - f(x+2h)) / 2h`, for use at a lower boundary.
    Forward2,
}

pub fn finite_difference<T, F>(f: F, x: f64, h: f64, stencil: Stencil) -> T
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    match stencil {
        Stencil::Central2 => (f(x + h) - f(x - h)) * (0.5 / h),
        Stencil::Forward2 => (f(x + h) * 4.0 - f(x) * 3.0 - f(x + 2.0 * h)) * (0.5 / h),
    }
}

const LN_FACT_TABLE: usize = 1024;

/// `ln(k!)`, tabulated by direct summation up to 1023 and Stirling beyond.
pub fn ln_factorial(k: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for i in 1..LN_FACT_TABLE {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    if k < LN_FACT_TABLE {
        return table[k];
    }
    let n = k as f64;
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n * n * n)
}

/// `c^k / sqrt(k!)` evaluated in log space, with `0^0 = 1`.
pub fn power_over_root_factorial(c: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if c == 0.0 {
        return 0.0;
    }
    let mag = (k as f64 * c.abs().ln() - 0.5 * ln_factorial(k)).exp();
    if c < 0.0 && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// `sinh(z) - z`, accurate for small `z`.
pub fn sinh_minus_identity(z: f64) -> f64 {
    if z.abs() < 1.0 {
        // z^3/3! + z^5/5! + ...
        let z2 = z * z;
        let mut term = z * z2 / 6.0;
        let mut sum: f64 = 0.0;
        let mut n = 3.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            term *= z2 / ((n + 1.0) * (n + 2.0));
            n += 2.0;
        }
        sum
    } else {
        z.sinh() - z
    }
}

/// `z / sinh(z)` with its removable singularity at zero.
pub fn z_over_sinh(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + 7.0 * z2 * z2 / 360.0
    } else {
        z / z.sinh()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`. Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        // Ties move the bracket toward the smaller abscissa.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // Never return something worse than an interior probe already seen.
    if fc > fx && fc >= fd {
        (c, fc)
    } else if fd > fx {
        (d, fd)
    } else {
        (x, fx)
    }
}
