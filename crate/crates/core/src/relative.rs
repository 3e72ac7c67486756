//! Domains whose points are joined by at most `m` geodesics:
//! `A ≥ |∂B(mV)|/m`, with equality for the quotient of `B(mV)` by a rotation
//! of order `m`. That quotient's chord measure is `μ_{B(mV)}/m`.

use serde::{Deserialize, Serialize};

use crate::certificate::{certificate_family, closed_form_certificate};
use crate::chord::{discretize_ball_measure, integrate, santalo_target, DiscreteMeasure, Functional};
use crate::error::{domain, Error, Result};
use crate::lp::builders::{build_relative_lp, default_products, LpGrid, RelativeRowScaling};
use crate::lp::{solve, LpStatus};
use crate::negbound::{smallness_ok, SmallnessInput};
use crate::spaceform::{ball_from_volume, BallGeometry, ModelParams};

pub const RELATIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeCase {
    pub params: ModelParams,
    pub m: usize,
    pub v: f64,
}

impl RelativeCase {
    /// Checks `mV` against the hemisphere for `κ > 0`, and for `κ < 0`,
    /// `n = 4` the smallness condition of the quotient, whose longest
    /// geodesic is the diameter `2r₀` of `B(mV)`.
    pub fn new(params: ModelParams, m: usize, v: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Usage("m must be at least 1".into()));
        }
        if !(v > 0.0) {
            return domain(format!("volume must be positive, got {v}"));
        }
        let case = Self { params, m, v };
        let big = case.big_ball()?;
        if let Some(h) = params.hemisphere_volume() {
            if m as f64 * v > h {
                return domain(format!("mV = {} exceeds the hemisphere volume {h}", m as f64 * v));
            }
        }
        if params.kappa < 0.0 && params.n == 4 {
            let s = smallness_ok(SmallnessInput { kappa: params.kappa, l: 2.0 * big.radius, r: big.radius })?;
            if !s.ok {
                return domain(format!("quotient violates the smallness condition (product {})", s.product));
            }
        }
        Ok(case)
    }

    /// `B₀ = B(mV)`.
    pub fn big_ball(&self) -> Result<BallGeometry> {
        ball_from_volume(self.params, self.m as f64 * self.v)
    }
}

/// `|∂B(mV)|/m`.
pub fn relative_bound(case: &RelativeCase) -> Result<f64> {
    Ok(case.big_ball()?.area / case.m as f64)
}

/// `μ_{B(mV)}/m` on `nodes` Gauss–Legendre nodes.
pub fn orbifold_measure(case: &RelativeCase, nodes: usize) -> Result<DiscreteMeasure> {
    Ok(discretize_ball_measure(&case.big_ball()?, nodes)?.scaled(1.0 / case.m as f64))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelativeEqualityReport {
    pub case: RelativeCase,
    pub nodes: usize,
    pub area: f64,
    /// `∫F₁ − mA²`, `∫F₂ − mAV`, `∫F₃ − mV²`, each relative to its target.
    pub croke_relative: [f64; 3],
    /// `(∫ℓ − ω_{n−1}V)/(ω_{n−1}V)`.
    pub santalo_relative: f64,
    pub passed: bool,
}

pub fn verify_relative_equality(case: &RelativeCase, nodes: usize) -> Result<RelativeEqualityReport> {
    let mu = orbifold_measure(case, nodes)?;
    let area = relative_bound(case)?;
    let (mf, v, p) = (case.m as f64, case.v, case.params);
    let targets = [mf * area * area, mf * area * v, mf * v * v];
    let mut croke_relative = [0.0; 3];
    for (k, (out, t)) in croke_relative.iter_mut().zip(targets).enumerate() {
        let f = Functional::from_index(k + 1).expect("indices 1..3 exist");
        *out = (integrate(&mu, f, p)? - t) / t;
    }
    let ball = BallGeometry::from_radius(p, case.big_ball()?.radius)?;
    let s_target = santalo_target(&ball) / mf;
    let santalo_relative = (integrate(&mu, Functional::F4, p)? - s_target) / s_target;
    let passed = croke_relative.iter().all(|r| r.abs() <= RELATIVE_TOL) && santalo_relative.abs() <= RELATIVE_TOL;
    Ok(RelativeEqualityReport { case: *case, nodes, area, croke_relative, santalo_relative, passed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelativeLpReport {
    pub scaling: RelativeRowScaling,
    pub grid: (usize, usize),
    pub status: LpStatus,
    pub optimum: f64,
    pub bound: f64,
    pub relative_error: f64,
}

/// Solves the discretized relative program on a grid aligned with the chord
/// curve of `B(mV)`, with the product family plus the certificate's `f`.
pub fn relative_lp(
    case: &RelativeCase,
    n_ell: usize,
    n_alpha: usize,
    scaling: RelativeRowScaling,
    tol: f64,
) -> Result<RelativeLpReport> {
    let big = case.big_ball()?;
    let cert = closed_form_certificate(case.params, big.radius)?;
    let mut family = default_products();
    family.push(certificate_family(&cert));
    let grid = LpGrid::curve_aligned(&big, n_ell, n_alpha, None)?;
    let lp = build_relative_lp(case.params, case.v, case.m, &grid, &family, scaling)?;
    let sol = solve(&lp, tol)?;
    let bound = relative_bound(case)?;
    Ok(RelativeLpReport {
        scaling,
        grid: (n_ell, n_alpha),
        status: sol.status,
        optimum: sol.objective,
        bound,
        relative_error: (sol.objective - bound) / bound,
    })
}
