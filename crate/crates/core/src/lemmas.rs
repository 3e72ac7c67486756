//! The `(t, p, q)` reformulation of the four-dimensional certificates of
//! curvature `±1`, and the numerical verification that
//! `H(t,p,q) = G(1/3p,p,p) + G(1/3q,q,q) − 2G(t,p,q)` is nonnegative.
//!
//! Spherical case: `t = tan(ℓ/2)`, `p = 1/(3 tan r cos α)`, and
//! `G = (8/3) arctan t − pq S₀ − (p+q) S₋₁ − S₋₂`.
//! Hyperbolic case: `t = tanh(ℓ/2)`, `p = 1/(3 tanh r cos α) > 1/3`, and
//! `G = (8/3) artanh t − pq S₀ + (p+q) S₋₁ − S₋₂`.
//! In both cases `S₀, S₋₁, S₋₂` are `s, s^↿, s^↿↿` of the unit-curvature
//! candle at `ℓ`, and `G` is the certificate's `g` divided by `9 tan² r`
//! (resp. `9 tanh² r`).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::poly::{Polynomial, PolySystem};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaCase {
    Spherical,
    Hyperbolic,
}

impl LemmaCase {
    /// `±1` in the sign-flipped terms.
    fn sigma(self) -> f64 {
        match self {
            Self::Spherical => 1.0,
            Self::Hyperbolic => -1.0,
        }
    }

    /// Smallest admissible `p` (exclusive).
    pub fn p_min(self) -> f64 {
        match self {
            Self::Spherical => 0.0,
            Self::Hyperbolic => 1.0 / 3.0,
        }
    }

    fn check(self, t: f64, p: f64, q: f64) -> Result<()> {
        let t_ok = match self {
            Self::Spherical => t >= 0.0,
            Self::Hyperbolic => (0.0..1.0).contains(&t),
        };
        if !t_ok {
            return domain(format!("t = {t} outside the {self:?} domain"));
        }
        if !(p > self.p_min() && q > self.p_min()) {
            return domain(format!("p, q must exceed {}", self.p_min()));
        }
        Ok(())
    }
}

/// `(S₁, S₀, S₋₁, S₋₂)`: `s'`, `s`, `s^↿`, `s^↿↿` of the unit candle at
/// `ℓ = 2 arctan t` (resp. `2 artanh t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STable {
    pub s1: f64,
    pub s0: f64,
    pub sm1: f64,
    pub sm2: f64,
}

pub fn s_table(case: LemmaCase, t: f64) -> Result<STable> {
    match case {
        LemmaCase::Spherical if t >= 0.0 => Ok(s_table_unchecked(case, t)),
        LemmaCase::Hyperbolic if (0.0..1.0).contains(&t) => Ok(s_table_unchecked(case, t)),
        _ => domain(format!("t = {t} outside the {case:?} domain")),
    }
}

fn s_table_unchecked(case: LemmaCase, t: f64) -> STable {
    let t2 = t * t;
    match case {
        LemmaCase::Spherical => {
            let u = 1.0 + t2;
            let u3 = u * u * u;
            STable {
                s1: 12.0 * t2 * (1.0 - t2) / u3,
                s0: 8.0 * t * t2 / u3,
                sm1: 4.0 * t2 * t2 * (3.0 + t2) / (3.0 * u3),
                sm2: if t < SERIES_T { sm2_series(-1.0, t) } else { 4.0 / 3.0 * t.atan() - 8.0 / 9.0 * t * t2 / u3 - 4.0 / 3.0 * t / u },
            }
        }
        LemmaCase::Hyperbolic => {
            let u = 1.0 - t2;
            let u3 = u * u * u;
            STable {
                s1: 12.0 * t2 * (1.0 + t2) / u3,
                s0: 8.0 * t * t2 / u3,
                sm1: 4.0 / 3.0 * t2 * t2 * (3.0 - t2) / u3,
                sm2: if t < SERIES_T { sm2_series(1.0, t) } else { 4.0 / 3.0 * t.atanh() + 8.0 / 9.0 * t * t2 / u3 - 4.0 / 3.0 * t / u },
            }
        }
    }
}

/// Below this `t` the closed form of `S₋₂` loses digits to cancellation.
const SERIES_T: f64 = 0.3;

/// `S₋₂ = Σ_k σᵏ ((4/9)k(k+1) − 8k/(3(2k+1))) t^{2k+1}`, `σ = −1` spherical.
fn sm2_series(sigma: f64, t: f64) -> f64 {
    let t2 = t * t;
    let mut pow = t * t2 * t2; // σ² t⁵, k = 2
    let mut sum = 0.0;
    for k in 2..80 {
        let kf = k as f64;
        let c = 4.0 / 9.0 * kf * (kf + 1.0) - 8.0 * kf / (3.0 * (2.0 * kf + 1.0));
        let term = c * pow;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        pow *= sigma * t2;
    }
    sum
}

fn half_length(case: LemmaCase, t: f64) -> f64 {
    match case {
        LemmaCase::Spherical => t.atan(),
        LemmaCase::Hyperbolic => t.atanh(),
    }
}

fn g_from_table(case: LemmaCase, t: f64, s: &STable, p: f64, q: f64) -> f64 {
    8.0 / 3.0 * half_length(case, t) - p * q * s.s0 - case.sigma() * (p + q) * s.sm1 - s.sm2
}

pub fn g(case: LemmaCase, t: f64, p: f64, q: f64) -> Result<f64> {
    case.check(t, p, q)?;
    Ok(g_from_table(case, t, &s_table_unchecked(case, t), p, q))
}

/// `∂G/∂t = ℓ'(t) (4/3 − pq S₁ ∓ (p+q) S₀ − S₋₁)` with `ℓ'(t) = 2/(1 ± t²)`.
pub fn dg_dt(case: LemmaCase, t: f64, p: f64, q: f64) -> Result<f64> {
    case.check(t, p, q)?;
    let s = s_table_unchecked(case, t);
    let dl = 2.0 / (1.0 + case.sigma() * t * t);
    Ok(dl * (4.0 / 3.0 - p * q * s.s1 - case.sigma() * (p + q) * s.s0 - s.sm1))
}

/// `G(1/3p, p, p)`.
pub fn g_diagonal(case: LemmaCase, p: f64) -> Result<f64> {
    g(case, 1.0 / (3.0 * p), p, p)
}

pub fn h(case: LemmaCase, t: f64, p: f64, q: f64) -> Result<f64> {
    Ok(g_diagonal(case, p)? + g_diagonal(case, q)? - 2.0 * g(case, t, p, q)?)
}

/// Spherical: `12p²t⁴ − 16pt³ + (4 − 12p²)t² + 4/3 − 4(3pt − 1)(pt³ − t² − pt − 1/3)`.
/// Hyperbolic: `−12p²t⁴ + 16pt³ − (4 + 12p²)t² + 4/3 − 4(1 − 3pt)(pt³ − t² + pt + 1/3)`.
pub fn check_factorization(case: LemmaCase, p: f64, t: f64) -> f64 {
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    match case {
        LemmaCase::Spherical => {
            let lhs = 12.0 * p * p * t4 - 16.0 * p * t3 + (4.0 - 12.0 * p * p) * t2 + 4.0 / 3.0;
            lhs - 4.0 * (3.0 * p * t - 1.0) * (p * t3 - t2 - p * t - 1.0 / 3.0)
        }
        LemmaCase::Hyperbolic => {
            let lhs = -12.0 * p * p * t4 + 16.0 * p * t3 - (4.0 + 12.0 * p * p) * t2 + 4.0 / 3.0;
            lhs - 4.0 * (1.0 - 3.0 * p * t) * (p * t3 - t2 + p * t + 1.0 / 3.0)
        }
    }
}

/// Largest `|check_factorization|/(1 + |factored value|)` over `points`
/// seeded uniform draws of `(p, t) ∈ [0, 5]²`.
pub fn max_factorization_residual(case: LemmaCase, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let (p, t): (f64, f64) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        worst = worst.max(check_factorization(case, p, t).abs() / (1.0 + factored_quartic(case, p, t).abs()));
    }
    worst
}

/// The factored quartic, whose sign is that of `∂ₜG(t, p, p)`.
pub fn factored_quartic(case: LemmaCase, p: f64, t: f64) -> f64 {
    let (t2, t3) = (t * t, t * t * t);
    match case {
        LemmaCase::Spherical => 4.0 * (3.0 * p * t - 1.0) * (p * t3 - t2 - p * t - 1.0 / 3.0),
        LemmaCase::Hyperbolic => 4.0 * (1.0 - 3.0 * p * t) * (p * t3 - t2 + p * t + 1.0 / 3.0),
    }
}

/// Closed form of `d/dp (G(1/3p,p,p) + 8p/3 − 2π/3)` (spherical case).
pub fn dgdp_closed_form(p: f64) -> f64 {
    let u = 9.0 * p * p + 1.0;
    216.0 * p.powi(4) / (u * u)
}

/// Central difference of `G(1/3p,p,p) + 8p/3 − 2π/3` minus the closed form.
pub fn dgdp_identity(p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return domain(format!("p must be positive, got {p}"));
    }
    let phi = |x: f64| g_diagonal(LemmaCase::Spherical, x).map(|v| v + 8.0 * x / 3.0 - 2.0 * PI / 3.0);
    let h = 1e-5 * p.max(1e-3);
    let fd = (phi(p + h)? - phi(p - h)?) / (2.0 * h);
    Ok(fd - dgdp_closed_form(p))
}

const T: usize = 0;
const P: usize = 1;
const Q: usize = 2;

/// Numerators of `∂H/∂t`, `∂H/∂p`, `∂H/∂q` as polynomials in `(t, p, q)`.
///
/// Spherical: `∂H/∂t = −(16/3) E_t/(1+t²)⁴` and
/// `∂H/∂p = 8 E_p/(3(9p²+1)²(1+t²)³)`.
/// Hyperbolic: `∂H/∂t = (16/3) E_t/(1−t²)⁴` and
/// `∂H/∂p = 8 E_p/(3(9p²−1)²(1−t²)³)`.
pub fn critical_system(case: LemmaCase) -> PolySystem {
    let (et, ep) = match case {
        LemmaCase::Spherical => (
            Polynomial::from_terms(
                3,
                &[
                    (&[4, 1, 1], 9.0),
                    (&[3, 1, 0], -6.0),
                    (&[3, 0, 1], -6.0),
                    (&[2, 0, 0], 3.0),
                    (&[2, 1, 1], -9.0),
                    (&[0, 0, 0], 1.0),
                ],
            ),
            Polynomial::from_terms(
                3,
                &[
                    (&[6, 4, 0], 81.0),
                    (&[4, 4, 0], 243.0),
                    (&[3, 4, 1], 486.0),
                    (&[3, 2, 1], 108.0),
                    (&[3, 0, 1], 6.0),
                    (&[2, 2, 0], -54.0),
                    (&[2, 0, 0], -3.0),
                    (&[0, 2, 0], -18.0),
                    (&[0, 0, 0], -1.0),
                ],
            ),
        ),
        LemmaCase::Hyperbolic => (
            Polynomial::from_terms(
                3,
                &[
                    (&[4, 1, 1], 9.0),
                    (&[3, 1, 0], -6.0),
                    (&[3, 0, 1], -6.0),
                    (&[2, 0, 0], 3.0),
                    (&[2, 1, 1], 9.0),
                    (&[0, 0, 0], -1.0),
                ],
            ),
            Polynomial::from_terms(
                3,
                &[
                    (&[6, 4, 0], 81.0),
                    (&[4, 4, 0], -243.0),
                    (&[3, 4, 1], 486.0),
                    (&[3, 2, 1], -108.0),
                    (&[3, 0, 1], 6.0),
                    (&[2, 2, 0], 54.0),
                    (&[2, 0, 0], -3.0),
                    (&[0, 2, 0], -18.0),
                    (&[0, 0, 0], 1.0),
                ],
            ),
        ),
    };
    let eq = ep.swap_vars(P, Q);
    PolySystem {
        equations: vec![et, ep, eq],
        variables: vec!["t".into(), "p".into(), "q".into()],
        search_box: default_box(case),
    }
}

/// Default search box for the critical points.
pub fn default_box(case: LemmaCase) -> Vec<(f64, f64)> {
    match case {
        LemmaCase::Spherical => vec![(0.01, 5.0), (0.05, 10.0), (0.05, 10.0)],
        LemmaCase::Hyperbolic => vec![(0.01, 0.99), (1.0 / 3.0, 10.0), (1.0 / 3.0, 10.0)],
    }
}

/// `∂H/∂t` and `∂H/∂p` reassembled from the numerators (for cross-checks).
pub fn h_gradient_from_system(case: LemmaCase, sys: &PolySystem, x: [f64; 3]) -> [f64; 3] {
    let [t, p, q] = x;
    let e = sys.eval(&x);
    let sg = case.sigma();
    let u = 1.0 + sg * t * t;
    let dt = -sg * 16.0 / 3.0 * e[0] / u.powi(4);
    let dp = 8.0 * e[1] / (3.0 * (9.0 * p * p + sg).powi(2) * u.powi(3));
    let dq = 8.0 * e[2] / (3.0 * (9.0 * q * q + sg).powi(2) * u.powi(3));
    [dt, dp, dq]
}

/// Euclidean distance from `(t, p, q)` to the curve `{(1/3s, s, s)}`.
pub fn distance_to_curve(x: [f64; 3]) -> f64 {
    let [t, p, q] = x;
    let d2 = |s: f64| (t - 1.0 / (3.0 * s)).powi(2) + (p - s).powi(2) + (q - s).powi(2);
    let s0 = 0.5 * (p + q);
    let guess = [s0, 1.0 / (3.0 * t.max(1e-300))];
    let lo = guess.iter().copied().fold(f64::INFINITY, f64::min) * 0.25;
    let hi = guess.iter().copied().fold(0.0, f64::max) * 4.0;
    let (s, _) = quad::golden_max(|s| -d2(s), lo, hi, 1e-14 * hi);
    d2(s).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalRoot {
    pub point: [f64; 3],
    pub residual: f64,
    pub distance_to_curve: f64,
    pub h_value: f64,
    /// Starts that converged into this cluster.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub starts: usize,
    pub converged: usize,
    pub singular_starts: usize,
    pub stalled: usize,
    pub left_box: usize,
    pub roots: Vec<CriticalRoot>,
    pub max_distance_to_curve: f64,
    pub max_h_value: f64,
}

const NEWTON_TOL: f64 = 1e-12;
const CLUSTER_RADIUS: f64 = 1e-6;

enum StartOutcome {
    Root([f64; 3], f64),
    Singular,
    Stalled,
    LeftBox,
}

/// Multistart Levenberg–Marquardt on the normalized system
/// `Fᵢ/Σ|monomials of Fᵢ|`. Start `i` draws its point from ChaCha stream `i`
/// of `seed`, so the report depends only on the arguments.
pub fn solve_critical_points(
    case: LemmaCase,
    system: &PolySystem,
    search_box: &[(f64, f64)],
    n_starts: usize,
    seed: u64,
) -> Result<CriticalPointReport> {
    if search_box.len() != 3 || search_box.iter().any(|(lo, hi)| !(lo < hi) || *lo < 0.0) {
        return Err(Error::Usage("search box must be three positive intervals".into()));
    }
    let jac = system.jacobian();
    let weights: Vec<Polynomial> = system.equations.iter().map(|p| p.abs_coefficients()).collect();
    let wjac: Vec<Vec<Polynomial>> = weights.iter().map(|w| (0..3).map(|v| w.derivative(v)).collect()).collect();
    let outcomes: Vec<StartOutcome> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x0: [f64; 3] = std::array::from_fn(|k| {
                let (lo, hi) = search_box[k];
                lo + (hi - lo) * rng.random::<f64>()
            });
            levenberg_marquardt(system, &jac, &weights, &wjac, x0, search_box)
        })
        .collect();
    let mut rep = CriticalPointReport {
        starts: n_starts,
        converged: 0,
        singular_starts: 0,
        stalled: 0,
        left_box: 0,
        roots: Vec::new(),
        max_distance_to_curve: 0.0,
        max_h_value: f64::NEG_INFINITY,
    };
    for o in outcomes {
        match o {
            StartOutcome::Root(x, res) => {
                rep.converged += 1;
                if let Some(c) = rep.roots.iter_mut().find(|c| dist(c.point, x) <= CLUSTER_RADIUS) {
                    c.multiplicity += 1;
                } else {
                    let hv = h(case, x[T], x[P], x[Q]).unwrap_or(f64::NAN);
                    rep.roots.push(CriticalRoot {
                        point: x,
                        residual: res,
                        distance_to_curve: distance_to_curve(x),
                        h_value: hv,
                        multiplicity: 1,
                    });
                }
            }
            StartOutcome::Singular => rep.singular_starts += 1,
            StartOutcome::Stalled => rep.stalled += 1,
            StartOutcome::LeftBox => rep.left_box += 1,
        }
    }
    for r in &rep.roots {
        rep.max_distance_to_curve = rep.max_distance_to_curve.max(r.distance_to_curve);
        rep.max_h_value = rep.max_h_value.max(r.h_value);
    }
    Ok(rep)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn levenberg_marquardt(
    sys: &PolySystem,
    jac: &[Vec<Polynomial>],
    weights: &[Polynomial],
    wjac: &[Vec<Polynomial>],
    x0: [f64; 3],
    search_box: &[(f64, f64)],
) -> StartOutcome {
    let eval = |x: &[f64; 3]| -> (Vector3<f64>, Matrix3<f64>) {
        let mut f = Vector3::zeros();
        let mut j = Matrix3::zeros();
        for i in 0..3 {
            let fi = sys.equations[i].eval(x);
            let wi = weights[i].eval(x);
            f[i] = fi / wi;
            for k in 0..3 {
                j[(i, k)] = (jac[i][k].eval(x) * wi - fi * wjac[i][k].eval(x)) / (wi * wi);
            }
        }
        (f, j)
    };
    let mut x = x0;
    let (mut f, mut j) = eval(&x);
    // Discard starts where the Jacobian is numerically singular.
    let row_norms: f64 = (0..3).map(|i| j.row(i).norm()).product();
    if row_norms == 0.0 || (j.determinant().abs() / row_norms) < 1e-14 {
        return StartOutcome::Singular;
    }
    let mut lambda = 1e-3;
    // The search may wander a little outside the box before settling.
    let slack: Vec<(f64, f64)> =
        search_box.iter().map(|&(lo, hi)| (lo - 0.5 * (hi - lo), hi + 0.5 * (hi - lo))).collect();
    for _ in 0..1000 {
        let fnorm = f.amax();
        if fnorm < NEWTON_TOL {
            let inside = x.iter().zip(search_box).all(|(v, (lo, hi))| {
                *v >= lo - 1e-9 * lo.abs().max(1.0) && *v <= hi + 1e-9 * hi.abs().max(1.0)
            });
            return if inside { StartOutcome::Root(x, fnorm) } else { StartOutcome::LeftBox };
        }
        let jt = j.transpose();
        let a = jt * j;
        let gvec = jt * f;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut m = a;
            for k in 0..3 {
                m[(k, k)] += lambda * a[(k, k)].max(1e-12);
            }
            let Some(step) = m.lu().solve(&(-gvec)) else {
                lambda *= 4.0;
                continue;
            };
            let xn = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            if xn.iter().any(|&v| !(v > 0.0)) {
                lambda *= 4.0;
                continue;
            }
            let (fnew, jnew) = eval(&xn);
            if fnew.norm_squared() < f.norm_squared() {
                x = xn;
                f = fnew;
                j = jnew;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            return StartOutcome::Stalled;
        }
        if x.iter().zip(&slack).any(|(v, (lo, hi))| v < lo || v > hi) {
            return StartOutcome::LeftBox;
        }
    }
    StartOutcome::Stalled
}

/// Grid for [`verify_h_nonneg`]: `n` points per axis, endpoints included,
/// `q` on the same range as `p`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HGrid {
    pub n: usize,
    pub t_range: (f64, f64),
    pub p_range: (f64, f64),
}

impl HGrid {
    pub fn default_for(case: LemmaCase, n: usize) -> Self {
        match case {
            LemmaCase::Spherical => Self { n, t_range: (0.02, 4.0), p_range: (0.05, 6.0) },
            LemmaCase::Hyperbolic => Self { n, t_range: (0.01, 0.99), p_range: (0.34, 6.0) },
        }
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect()
    }

    fn resolution(&self) -> f64 {
        let dt = (self.t_range.1 - self.t_range.0) / (self.n - 1) as f64;
        let dp = (self.p_range.1 - self.p_range.0) / (self.n - 1) as f64;
        (dt * dt + 2.0 * dp * dp).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayReport {
    pub name: String,
    pub min: f64,
    /// Minimum over the last third of the ray, the `liminf` estimate.
    pub tail_min: f64,
    pub last: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HScanReport {
    pub case: LemmaCase,
    pub grid: HGrid,
    pub min: f64,
    pub argmin: [f64; 3],
    pub argmin_distance_to_curve: f64,
    pub resolution: f64,
    pub rays: Vec<RayReport>,
    pub passed: bool,
}

pub const H_TOL: f64 = 1e-9;

/// Minimum of `H` over the grid (ties go to the smallest index in `t, p, q`
/// order) plus the escape-ray checks.
pub fn verify_h_nonneg(case: LemmaCase, grid: &HGrid) -> Result<HScanReport> {
    if grid.n < 2 {
        return Err(Error::Usage("H grid needs at least 2 points per axis".into()));
    }
    let ts = HGrid::axis(grid.t_range, grid.n);
    let ps = HGrid::axis(grid.p_range, grid.n);
    case.check(ts[0], ps[0], ps[0])?;
    case.check(*ts.last().unwrap(), *ps.last().unwrap(), *ps.last().unwrap())?;
    let gd: Vec<f64> = ps.iter().map(|&p| g_diagonal(case, p)).collect::<Result<_>>()?;
    let rows: Vec<(f64, usize, usize)> = ts
        .par_iter()
        .map(|&t| {
            let s = s_table_unchecked(case, t);
            let mut best = (f64::INFINITY, 0, 0);
            for (j, &p) in ps.iter().enumerate() {
                for (k, &q) in ps.iter().enumerate() {
                    let v = gd[j] + gd[k] - 2.0 * g_from_table(case, t, &s, p, q);
                    if v < best.0 {
                        best = (v, j, k);
                    }
                }
            }
            best
        })
        .collect();
    let mut min = f64::INFINITY;
    let mut argmin = [0.0; 3];
    for (i, &(v, j, k)) in rows.iter().enumerate() {
        if v < min || v.is_nan() {
            min = v;
            argmin = [ts[i], ps[j], ps[k]];
        }
    }
    let argmin_distance_to_curve = distance_to_curve(argmin);
    let resolution = grid.resolution();
    let rays = escape_rays(case);
    let passed = min >= -H_TOL && argmin_distance_to_curve <= resolution && rays.iter().all(|r| r.passed);
    Ok(HScanReport { case, grid: *grid, min, argmin, argmin_distance_to_curve, resolution, rays, passed })
}

/// `H` along eight paths into the boundary of the domain.
pub fn escape_rays(case: LemmaCase) -> Vec<RayReport> {
    // Parameter u runs over 10^{-1} .. 10^{-7}.
    let us: Vec<f64> = (0..61).map(|i| 10f64.powf(-1.0 - 6.0 * i as f64 / 60.0)).collect();
    type Path = Box<dyn Fn(f64) -> [f64; 3]>;
    let pm = case.p_min();
    let rays: Vec<(&str, Path)> = match case {
        LemmaCase::Spherical => vec![
            ("t -> 0 (p = 0.5, q = 2)", Box::new(|u| [u, 0.5, 2.0])),
            ("t -> inf (p = 0.5, q = 2)", Box::new(|u| [1.0 / u, 0.5, 2.0])),
            ("p -> 0 (t = 1, q = 2)", Box::new(|u| [1.0, u, 2.0])),
            ("p -> inf (t = 1, q = 2)", Box::new(|u| [1.0, 1.0 / u, 2.0])),
            ("p = q -> inf on t = 1/3p", Box::new(|u| [u / 3.0, 1.0 / u, 1.0 / u])),
            ("p = q -> 0 on t = 1/3p", Box::new(|u| [1.0 / (3.0 * u), u, u])),
            ("p = q -> inf (t = 1)", Box::new(|u| [1.0, 1.0 / u, 1.0 / u])),
            ("p -> 0, q -> inf (t = 1)", Box::new(|u| [1.0, u, 1.0 / u])),
        ],
        LemmaCase::Hyperbolic => vec![
            ("t -> 0 (p = 0.5, q = 2)", Box::new(|u| [u, 0.5, 2.0])),
            ("t -> 1 (p = 0.5, q = 2)", Box::new(|u| [1.0 - u, 0.5, 2.0])),
            ("p -> 1/3 (t = 0.5, q = 2)", Box::new(move |u| [0.5, pm + u, 2.0])),
            ("p -> inf (t = 0.5, q = 2)", Box::new(|u| [0.5, 1.0 / u, 2.0])),
            ("p = q -> inf on t = 1/3p", Box::new(|u| [u / 3.0, 1.0 / u, 1.0 / u])),
            ("p = q -> 1/3 on t = 1/3p", Box::new(move |u| [1.0 / (3.0 * (pm + u)), pm + u, pm + u])),
            ("p = q -> inf (t = 0.5)", Box::new(|u| [0.5, 1.0 / u, 1.0 / u])),
            ("p -> 1/3, q -> inf (t = 0.5)", Box::new(move |u| [0.5, pm + u, 1.0 / u])),
        ],
    };
    rays.into_iter()
        .map(|(name, path)| {
            let vals: Vec<f64> = us
                .iter()
                .map(|&u| {
                    let [t, p, q] = path(u);
                    h(case, t, p, q).unwrap_or(f64::NAN)
                })
                .collect();
            let fold = |v: &[f64]| v.iter().fold(f64::INFINITY, |m, &x| if x.is_nan() { f64::NAN } else { m.min(x) });
            let min = fold(&vals);
            let tail_min = fold(&vals[2 * vals.len() / 3..]);
            let last = *vals.last().unwrap();
            RayReport { name: name.to_string(), min, tail_min, last, passed: tail_min >= -H_TOL }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalEntry {
    pub p: f64,
    pub argmax: f64,
    pub argmax_error: f64,
    /// Spherical only: `G(1/3p,p,p) − lim_{t→∞} G(t,p,p)`.
    pub limit_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalReport {
    pub entries: Vec<DiagonalEntry>,
    pub max_argmax_error: f64,
    pub min_limit_margin: Option<f64>,
    pub passed: bool,
}

/// On the slice `q = p`, the maximizer of `G(·, p, p)` is `t = 1/(3p)`:
/// log-spaced scan, golden section, then bisection on `∂ₜG`.
pub fn check_diagonal_maximizer(case: LemmaCase, ps: &[f64], tol: f64) -> Result<DiagonalReport> {
    let entries: Vec<DiagonalEntry> = ps
        .par_iter()
        .map(|&p| {
            case.check(0.0, p, p)?;
            let gp = |t: f64| g(case, t, p, p).unwrap_or(f64::NEG_INFINITY);
            let nodes: Vec<f64> = match case {
                LemmaCase::Spherical => (0..=4000).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 4000.0)).collect(),
                LemmaCase::Hyperbolic => (0..=4000).map(|i| 1.0 - 10f64.powf(-8.0 * i as f64 / 4000.0)).collect(),
            };
            let nodes: Vec<f64> = nodes.into_iter().filter(|&t| case.check(t, p, p).is_ok()).collect();
            let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
            for (i, &t) in nodes.iter().enumerate() {
                let v = gp(t);
                if v > bv {
                    bi = i;
                    bv = v;
                }
            }
            let lo = nodes[bi.saturating_sub(1)];
            let hi = nodes[(bi + 1).min(nodes.len() - 1)];
            let (mut t, _) = quad::golden_max(gp, lo, hi, 1e-12 * hi);
            if let Some(root) = quad::bisect(|x| dg_dt(case, x, p, p).unwrap_or(f64::NAN), lo, hi, 1e-16) {
                t = root;
            }
            let limit_margin = match case {
                LemmaCase::Spherical => Some(g_diagonal(case, p)? - (2.0 * PI / 3.0 - 8.0 * p / 3.0)),
                LemmaCase::Hyperbolic => None,
            };
            let want = 1.0 / (3.0 * p);
            Ok(DiagonalEntry { p, argmax: t, argmax_error: (t - want).abs() / want.max(1.0), limit_margin })
        })
        .collect::<Result<_>>()?;
    let max_argmax_error = entries.iter().map(|e| e.argmax_error).fold(0.0, f64::max);
    let min_limit_margin = entries.iter().filter_map(|e| e.limit_margin).reduce(f64::min);
    let passed = max_argmax_error <= tol && min_limit_margin.is_none_or(|m| m >= 0.0);
    Ok(DiagonalReport { entries, max_argmax_error, min_limit_margin, passed })
}
