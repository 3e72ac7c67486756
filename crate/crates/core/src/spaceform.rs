//! Candle functions of the constant-curvature model spaces `S^n_κ`, their
//! primitives, model balls, and the chord-angle function `T`.
//!
//! Conventions: `s_κ(t) = (sin(√κ t)/√κ)^{n-1}` (with the usual `t^{n-1}` and
//! `sinh` analogues), set to zero past the conjugate point `π/√κ` when
//! `κ > 0`. `s^↿` and `s^↿↿` are the primitives vanishing at zero; for
//! `κ > 0` they are continued past `π/√κ` as a constant and a linear function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad;

/// Dimension and curvature of a simply connected model space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension must be at least 2, got {n}"));
        }
        if !kappa.is_finite() {
            return domain("curvature must be finite");
        }
        Ok(Self { n, kappa })
    }

    /// `√|κ|`.
    pub fn k(&self) -> f64 {
        self.kappa.abs().sqrt()
    }

    /// First conjugate distance `π/√κ`, or `None` when `κ ≤ 0`.
    pub fn conjugate_distance(&self) -> Option<f64> {
        (self.kappa > 0.0).then(|| PI / self.k())
    }

    /// Volume of a hemisphere `κ^{-n/2} ω_n / 2`, or `None` when `κ ≤ 0`.
    pub fn hemisphere_volume(&self) -> Option<f64> {
        (self.kappa > 0.0).then(|| omega(self.n) / (2.0 * self.k().powi(self.n as i32)))
    }

    /// Radius of a hemisphere, `π/(2√κ)`.
    pub fn max_radius(&self) -> Option<f64> {
        (self.kappa > 0.0).then(|| 0.5 * PI / self.k())
    }
}

/// Volume of the unit `k`-sphere, `ω_k = 2π^{(k+1)/2}/Γ((k+1)/2)`.
pub fn sphere_volume(k: i64) -> Result<f64> {
    if k < 0 {
        return domain(format!("sphere dimension must be nonnegative, got {k}"));
    }
    Ok(omega(k as usize))
}

/// `ω_k` via `ω_k = 2π ω_{k-2}/(k-1)`, exact up to rounding.
pub(crate) fn omega(k: usize) -> f64 {
    let mut w = if k % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        w *= 2.0 * PI / (j as f64 - 1.0);
        j += 2;
    }
    w
}

/// One-dimensional candle `sin(√κ t)/√κ` (`t`, `sinh` analogues). No
/// truncation at the conjugate point.
pub fn sn(kappa: f64, t: f64) -> f64 {
    if kappa > 0.0 {
        let k = kappa.sqrt();
        (k * t).sin() / k
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        (k * t).sinh() / k
    } else {
        t
    }
}

/// Derivative of [`sn`]: `cos(√κ t)`, `1`, `cosh(√−κ t)`.
pub fn cs(kappa: f64, t: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * t).cos()
    } else if kappa < 0.0 {
        ((-kappa).sqrt() * t).cosh()
    } else {
        1.0
    }
}

// Below this value of |κ| t² the n ∈ {2, 4} primitives switch to their Taylor
// series. The closed forms lose about log10(1/(|κ|t²)) digits to
// cancellation, the series converges geometrically with ratio < |κ|t²/6.
const SERIES_SWITCH: f64 = 0.25;

/// Taylor series of the `order`-th derivative of `s_κ` (`order` = 1, 0, −1,
/// −2 for derivative, function, first and second primitive); n ∈ {2, 4}.
fn candle_series(n: usize, kappa: f64, t: f64, order: i32) -> f64 {
    // s(t) = Σ_j c_j t^{2j+1}/(2j+1)!.
    // n = 2: c_j = (−κ)^j, j ≥ 0.
    // n = 4: c_j = (3^{2j+1} − 3)/4 · (−κ)^{j−1}, j ≥ 1.
    let j0: i32 = if n == 2 { 0 } else { 1 };
    let mk = -kappa;
    let mut q = 2 * j0 + 1 - order;
    debug_assert!(q >= 0);
    let mut mono = t.powi(q) / factorial(q as u32);
    let t2 = t * t;
    let mut sum = 0.0;
    let mut pow_mk = 1.0;
    let mut pow9 = 27.0;
    for j in j0..j0 + 40 {
        let c = if n == 2 { pow_mk } else { (pow9 - 3.0) / 4.0 * pow_mk };
        let term = c * mono;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && j > j0 + 1 {
            break;
        }
        pow_mk *= mk;
        if n == 4 {
            pow9 *= 9.0;
        }
        mono *= t2 / (((q + 1) * (q + 2)) as f64);
        q += 2;
    }
    sum
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn check_t(t: f64) {
    debug_assert!(t >= 0.0 || t.is_nan(), "candle evaluated at negative t = {t}");
}

/// Candle function `s_κ(t)`.
pub fn candle(p: ModelParams, t: f64) -> f64 {
    check_t(t);
    let e = (p.n - 1) as i32;
    if p.kappa > 0.0 {
        let k = p.k();
        if k * t >= PI {
            return 0.0;
        }
        ((k * t).sin() / k).powi(e)
    } else {
        sn(p.kappa, t).powi(e)
    }
}

/// `s_κ'(t)`.
pub fn candle_deriv(p: ModelParams, t: f64) -> f64 {
    check_t(t);
    if p.kappa > 0.0 && p.k() * t >= PI {
        return 0.0;
    }
    if p.n == 2 {
        return cs(p.kappa, t);
    }
    let e = (p.n - 2) as i32;
    (p.n - 1) as f64 * sn(p.kappa, t).powi(e) * cs(p.kappa, t)
}

/// `s_κ^↿(t) = ∫₀^t s_κ`.
pub fn candle_anti(p: ModelParams, t: f64) -> f64 {
    check_t(t);
    let n = p.n;
    if p.kappa == 0.0 {
        return t.powi(n as i32) / n as f64;
    }
    if let Some(tc) = p.conjugate_distance() {
        if t > tc {
            return candle_anti(p, tc);
        }
    }
    if (n == 2 || n == 4) && p.kappa.abs() * t * t < SERIES_SWITCH {
        return candle_series(n, p.kappa, t, -1);
    }
    let k = p.k();
    let x = k * t;
    match (n, p.kappa > 0.0) {
        (2, true) => 2.0 * (0.5 * x).sin().powi(2) / (k * k),
        (2, false) => 2.0 * (0.5 * x).sinh().powi(2) / (k * k),
        (4, true) => {
            let w = 2.0 * (0.5 * x).sin().powi(2);
            w * w * (1.0 - w / 3.0) / k.powi(4)
        }
        (4, false) => {
            let w = 2.0 * (0.5 * x).sinh().powi(2);
            w * w * (1.0 + w / 3.0) / k.powi(4)
        }
        _ => quad::integrate(|u| candle(p, u), 0.0, t, 0.0, 1e-14).value,
    }
}

/// `s_κ^↿↿(t) = ∫₀^t s_κ^↿ = ∫₀^t (t−τ) s_κ(τ) dτ`.
pub fn candle_anti2(p: ModelParams, t: f64) -> f64 {
    check_t(t);
    let n = p.n;
    if p.kappa == 0.0 {
        return t.powi(n as i32 + 1) / (n * (n + 1)) as f64;
    }
    if let Some(tc) = p.conjugate_distance() {
        if t > tc {
            return candle_anti2(p, tc) + (t - tc) * candle_anti(p, tc);
        }
    }
    if (n == 2 || n == 4) && p.kappa.abs() * t * t < SERIES_SWITCH {
        return candle_series(n, p.kappa, t, -2);
    }
    let k = p.k();
    let x = k * t;
    match (n, p.kappa > 0.0) {
        (2, true) => (x - x.sin()) / k.powi(3),
        (2, false) => (x.sinh() - x) / k.powi(3),
        (4, true) => {
            let s = x.sin();
            (2.0 / 3.0 * x - s.powi(3) / 9.0 - 2.0 / 3.0 * s) / k.powi(5)
        }
        (4, false) => {
            let s = x.sinh();
            (s.powi(3) / 9.0 - 2.0 / 3.0 * s + 2.0 / 3.0 * x) / k.powi(5)
        }
        _ => quad::integrate(|u| (t - u) * candle(p, u), 0.0, t, 0.0, 1e-14).value,
    }
}

/// A metric ball of the model space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub params: ModelParams,
    pub volume: f64,
    pub radius: f64,
    pub area: f64,
    pub max_chord: f64,
}

impl BallGeometry {
    pub fn from_radius(params: ModelParams, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("radius must be positive and finite, got {r}"));
        }
        if let Some(rmax) = params.max_radius() {
            if r > rmax * (1.0 + 1e-14) {
                return domain(format!("radius {r} exceeds the hemisphere radius {rmax}"));
            }
        }
        let w = omega(params.n - 1);
        Ok(Self {
            params,
            volume: w * candle_anti(params, r),
            radius: r,
            area: w * candle(params, r),
            max_chord: 2.0 * r,
        })
    }

    /// `T(ℓ) = cos α` on the chord curve of this ball.
    pub fn chord_t(&self, ell: f64) -> Result<f64> {
        chord_t(self.params.kappa, self.radius, ell)
    }

    /// Length of the chord leaving the boundary at angle `α` to the normal.
    pub fn chord_length(&self, alpha: f64) -> f64 {
        chord_length_for(self.params.kappa, self.radius, alpha.cos())
    }

    /// Total mass of the chord measure, `A_B ω_{n−2}/(n−1)`.
    pub fn chord_measure_mass(&self) -> f64 {
        self.area * omega(self.params.n - 2) / (self.params.n - 1) as f64
    }
}

/// The ball of volume `V`, found by safeguarded Newton on
/// `ω_{n−1} s_κ^↿(r) = V`.
pub fn ball_from_volume(params: ModelParams, v: f64) -> Result<BallGeometry> {
    if !(v > 0.0 && v.is_finite()) {
        return domain(format!("volume must be positive and finite, got {v}"));
    }
    let w = omega(params.n - 1);
    let target = v / w;
    if params.kappa == 0.0 {
        let r = (target * params.n as f64).powf(1.0 / params.n as f64);
        return BallGeometry::from_radius(params, r);
    }
    let (mut lo, mut hi) = match params.hemisphere_volume() {
        Some(hv) => {
            if v > hv * (1.0 + 1e-12) {
                return domain(format!("volume {v} exceeds the hemisphere volume {hv}"));
            }
            if v >= hv {
                return BallGeometry::from_radius(params, params.max_radius().unwrap());
            }
            (0.0, params.max_radius().unwrap())
        }
        None => {
            let mut hi = (target * params.n as f64).powf(1.0 / params.n as f64).max(1e-300);
            while candle_anti(params, hi) < target {
                hi *= 2.0;
            }
            (0.0, hi)
        }
    };
    let f = |r: f64| candle_anti(params, r) - target;
    // Euclidean guess is good when the ball is small relative to 1/√|κ|.
    let mut r = (target * params.n as f64).powf(1.0 / params.n as f64).clamp(lo, hi);
    if r <= lo || r >= hi {
        r = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let fr = f(r);
        if fr == 0.0 {
            break;
        }
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = candle(params, r);
        let mut next = if d > 0.0 { r - fr / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - r).abs();
        r = next;
        if step <= 1e-15 * r || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    BallGeometry::from_radius(params, r)
}

/// The chord-angle function `T` of a ball of radius `r`: the cosine of the
/// angle between a chord of length `ℓ` and the inner normal.
pub fn chord_t(kappa: f64, r: f64, ell: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("radius must be positive, got {r}"));
    }
    let slack = 1e-12 * r;
    if !(ell >= -slack && ell <= 2.0 * r + slack) {
        return domain(format!("chord length {ell} outside [0, {}]", 2.0 * r));
    }
    let ell = ell.clamp(0.0, 2.0 * r);
    let t = if kappa > 0.0 {
        let k = kappa.sqrt();
        if k * r >= 0.5 * PI {
            return domain("radius reaches the hemisphere; T is degenerate");
        }
        (0.5 * k * ell).tan() / (k * r).tan()
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        (0.5 * k * ell).tanh() / (k * r).tanh()
    } else {
        ell / (2.0 * r)
    };
    Ok(t.clamp(0.0, 1.0))
}

/// Inverse of [`chord_t`]: the chord length with `T(ℓ) = cos α`.
pub fn chord_length_for(kappa: f64, r: f64, cos_alpha: f64) -> f64 {
    let c = cos_alpha.clamp(0.0, 1.0);
    if kappa > 0.0 {
        let k = kappa.sqrt();
        2.0 * (c * (k * r).tan()).atan() / k
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        2.0 * (c * (k * r).tanh()).atanh() / k
    } else {
        2.0 * r * c
    }
}

/// `δⁿ(α) = ω_{n−2} sin^{n−2} α cos α`, the density of the boundary angle.
pub fn delta_weight(n: usize, alpha: f64) -> f64 {
    omega(n - 2) * alpha.sin().powi(n as i32 - 2) * alpha.cos()
}

/// Principal curvatures `κ_1..κ_{n−1}` along a geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSpectrum {
    pub curvatures: Vec<f64>,
}

impl CurvatureSpectrum {
    pub fn new(curvatures: Vec<f64>) -> Result<Self> {
        if curvatures.is_empty() {
            return domain("a curvature spectrum needs at least one entry");
        }
        if curvatures.iter().any(|k| !k.is_finite()) {
            return domain("curvatures must be finite");
        }
        Ok(Self { curvatures })
    }

    /// `(κ, ..., κ)` with `n − 1` entries.
    pub fn constant(params: ModelParams) -> Self {
        Self { curvatures: vec![params.kappa; params.n - 1] }
    }

    pub fn dimension(&self) -> usize {
        self.curvatures.len() + 1
    }

    /// First conjugate distance `π/√max κ_i`, if some `κ_i > 0`.
    pub fn conjugate_distance(&self) -> Option<f64> {
        let kmax = self.curvatures.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (kmax > 0.0).then(|| PI / kmax.sqrt())
    }
}

/// Candle of a spectrum, `Π_i sn_{κ_i}(t)`. Returns `(0, true)` past the
/// first conjugate point.
pub fn candle_from_spectrum(spectrum: &CurvatureSpectrum, t: f64) -> (f64, bool) {
    check_t(t);
    if let Some(tc) = spectrum.conjugate_distance() {
        if t >= tc {
            return (0.0, true);
        }
    }
    (spectrum.curvatures.iter().map(|&k| sn(k, t)).product(), false)
}
