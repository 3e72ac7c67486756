//! Curvature bounded by `κ < 0`: the smallness condition, the combined
//! inequality of the four-dimensional case and the two-dimensional lemma in
//! their equality case, and the Jacobian inequality tested on models whose
//! Jacobian along a geodesic is `j(x, y) = J(y − x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chord::{integrate, DiscreteMeasure, Functional};
use crate::error::{domain, Error, Result};
use crate::quad;
use crate::spaceform::{candle_from_spectrum, BallGeometry, CurvatureSpectrum, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessInput {
    pub kappa: f64,
    /// Maximal geodesic length `L`.
    pub l: f64,
    /// Radius of the comparison ball.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    pub product: f64,
    /// `1/2 − product`.
    pub margin: f64,
    pub ok: bool,
}

/// `tanh(L√−κ) tanh(r√−κ) ≤ 1/2`.
pub fn smallness_ok(input: SmallnessInput) -> Result<Smallness> {
    if !(input.kappa < 0.0) {
        return domain(format!("smallness needs kappa < 0, got {}", input.kappa));
    }
    if !(input.l > 0.0 && input.r > 0.0) {
        return domain("L and r must be positive");
    }
    let k = (-input.kappa).sqrt();
    let product = (input.l * k).tanh() * (input.r * k).tanh();
    Ok(Smallness { product, margin: 0.5 - product, ok: product <= 0.5 })
}

fn unit_ball(n: usize, r: f64) -> Result<BallGeometry> {
    BallGeometry::from_radius(ModelParams::new(n, -1.0)?, r)
}

/// LHS − RHS of
/// `∫(F₁ − 6 tanh r F₂ + 9 tanh² r F₃) dμ ≤ A² − 6 tanh r AV + 9 tanh² r V²`
/// with `A, V` of the ball `B⁴₋₁(r)`.
pub fn conjecture_residual(r: f64, measure: &DiscreteMeasure) -> Result<f64> {
    let ball = unit_ball(4, r)?;
    let t = r.tanh();
    let p = ball.params;
    let lhs = integrate(measure, Functional::F1, p)? - 6.0 * t * integrate(measure, Functional::F2, p)?
        + 9.0 * t * t * integrate(measure, Functional::F3, p)?;
    let (a, v) = (ball.area, ball.volume);
    Ok(lhs - (a * a - 6.0 * t * a * v + 9.0 * t * t * v * v))
}

/// Normalization of the `V²` term in the two-dimensional lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hyp2Convention {
    /// `AV − tanh r V²`, matching `∫F₃ dμ = V²` for this measure.
    BareVolume,
    /// `AV − 2π tanh r V²` as printed.
    TwoPi,
}

impl Hyp2Convention {
    fn factor(self) -> f64 {
        match self {
            Self::BareVolume => 1.0,
            Self::TwoPi => 2.0 * std::f64::consts::PI,
        }
    }
}

/// LHS − RHS of `∫(F₂ − tanh r F₃) dμ ≤ AV − c tanh r V²` on `B²₋₁(r)`.
pub fn hyp2_lemma_residual(r: f64, measure: &DiscreteMeasure, convention: Hyp2Convention) -> Result<f64> {
    let ball = unit_ball(2, r)?;
    let t = r.tanh();
    let p = ball.params;
    let lhs = integrate(measure, Functional::F2, p)? - t * integrate(measure, Functional::F3, p)?;
    Ok(lhs - (ball.area * ball.volume - convention.factor() * t * ball.volume * ball.volume))
}

/// Absolute and relative tolerances of the nested quadratures.
pub const Q1_ABS_TOL: f64 = 1e-9;
pub const Q1_REL_TOL: f64 = 1e-12;

/// `J(ℓ)`, `∫₀^ℓ J`, and `∫₀^ℓ∫₀^y J(y − x) dx dy` for a translation
/// invariant Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianIntegrals {
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
}

fn check_model(spectrum: &CurvatureSpectrum) -> Result<()> {
    if spectrum.dimension() != 4 {
        return domain(format!("the inequality is four-dimensional; spectrum has dimension {}", spectrum.dimension()));
    }
    Ok(())
}

fn jacobian_integrals(spectrum: &CurvatureSpectrum, ell: f64) -> Result<JacobianIntegrals> {
    if !(ell > 0.0) || !ell.is_finite() {
        return domain(format!("chord length must be positive, got {ell}"));
    }
    let jf = |u: f64| candle_from_spectrum(spectrum, u).0;
    let inner = |y: f64| {
        let q = quad::integrate(|x| jf(y - x), 0.0, y, Q1_ABS_TOL, Q1_REL_TOL);
        (q.value, q.converged)
    };
    let (j1, ok1) = inner(ell);
    let mut ok2 = true;
    let outer = quad::integrate(
        |y| {
            let (v, ok) = inner(y);
            ok2 &= ok;
            v
        },
        0.0,
        ell,
        Q1_ABS_TOL,
        Q1_REL_TOL,
    );
    if !(ok1 && ok2 && outer.converged) {
        return Err(Error::Domain(format!("nested quadrature did not converge at ell = {ell}")));
    }
    Ok(JacobianIntegrals { j: jf(ell), j1, j2: outer.value })
}

fn q1_side(ji: &JacobianIntegrals, tr: f64, ca: f64, cb: f64) -> f64 {
    ji.j / (ca * cb) - 3.0 * tr * (ji.j1 / ca + ji.j1 / cb) + 9.0 * tr * tr * ji.j2
}

/// Both sides' integrals at one `ℓ`, shared across radii and angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Question1Row {
    pub ell: f64,
    pub model: JacobianIntegrals,
    pub comparison: JacobianIntegrals,
}

impl Question1Row {
    pub fn new(spectrum: &CurvatureSpectrum, ell: f64) -> Result<Self> {
        check_model(spectrum)?;
        let cmp = CurvatureSpectrum::constant(ModelParams::new(4, -1.0)?);
        Ok(Self { ell, model: jacobian_integrals(spectrum, ell)?, comparison: jacobian_integrals(&cmp, ell)? })
    }

    pub fn margin(&self, r: f64, alpha: f64, beta: f64) -> Result<f64> {
        let (ca, cb) = (alpha.cos(), beta.cos());
        if !(r > 0.0) || !(ca > 0.0 && cb > 0.0) {
            return domain("need r > 0 and angles in [0, pi/2)");
        }
        let tr = r.tanh();
        Ok(q1_side(&self.model, tr, ca, cb) - q1_side(&self.comparison, tr, ca, cb))
    }
}

/// LHS − RHS of the Jacobian inequality with comparison curvature `−1`;
/// negative means violated. Both sides go through the same nested
/// quadrature, so the margin of the comparison model itself is exactly 0.
pub fn question1_margin(spectrum: &CurvatureSpectrum, r: f64, ell: f64, alpha: f64, beta: f64) -> Result<f64> {
    Question1Row::new(spectrum, ell)?.margin(r, alpha, beta)
}

/// `(−9/4, −9/16, −9/16)`: the complex hyperbolic plane scaled to sectional
/// curvature in `[−9/4, −9/16]`.
pub fn complex_hyperbolic_spectrum() -> CurvatureSpectrum {
    CurvatureSpectrum { curvatures: vec![-9.0 / 4.0, -9.0 / 16.0, -9.0 / 16.0] }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleSearch {
    pub spectrum: CurvatureSpectrum,
    pub r_max: f64,
    pub ell_max: f64,
    pub grid: usize,
    pub best_r: f64,
    pub best_ell: f64,
    pub best_margin: f64,
    pub found_violation: bool,
}

/// Most negative margin at `cos α = cos β = 1` over
/// `r = r_max·i/grid`, `ℓ = ℓ_max·j/grid`, `i, j = 1..grid`. Ties go to
/// the smallest `(ℓ, r)` index.
pub fn ch2_counterexample_search(
    spectrum: &CurvatureSpectrum,
    ell_max: f64,
    r_max: f64,
    grid: usize,
) -> Result<CounterexampleSearch> {
    if grid == 0 || !(ell_max > 0.0 && r_max > 0.0) {
        return Err(Error::Usage("search needs positive bounds and grid >= 1".into()));
    }
    check_model(spectrum)?;
    let rows: Vec<(f64, f64, f64)> = (1..=grid)
        .into_par_iter()
        .map(|j| {
            let ell = ell_max * j as f64 / grid as f64;
            let row = Question1Row::new(spectrum, ell)?;
            let mut best = (f64::INFINITY, 0.0, ell);
            for i in 1..=grid {
                let r = r_max * i as f64 / grid as f64;
                let m = row.margin(r, 0.0, 0.0)?;
                if m < best.0 {
                    best = (m, r, ell);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best = rows[0];
    for &row in &rows[1..] {
        if row.0 < best.0 {
            best = row;
        }
    }
    Ok(CounterexampleSearch {
        spectrum: spectrum.clone(),
        r_max,
        ell_max,
        grid,
        best_r: best.1,
        best_ell: best.2,
        best_margin: best.0,
        found_violation: best.0 < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::{croke_residual, discretize_ball_measure};
    use crate::spaceform;

    #[test]
    fn smallness_examples() {
        let s = smallness_ok(SmallnessInput { kappa: -1.0, l: 0.5, r: 0.5 }).unwrap();
        assert!((s.product - 0.5f64.tanh().powi(2)).abs() < 1e-15);
        assert!((s.product - 0.2135523).abs() < 1e-7 && s.ok);
        let big = smallness_ok(SmallnessInput { kappa: -1.0, l: 1e3, r: 1e3 }).unwrap();
        assert!(!big.ok && (big.product - 1.0).abs() < 1e-12);
        let scaled = smallness_ok(SmallnessInput { kappa: -4.0, l: 0.25, r: 0.25 }).unwrap();
        assert_eq!(scaled.product, s.product);
        assert!(smallness_ok(SmallnessInput { kappa: 1.0, l: 1.0, r: 1.0 }).is_err());
    }

    #[test]
    fn equality_on_model_balls() {
        for r in [0.5, 1.2] {
            let b4 = unit_ball(4, r).unwrap();
            let mu4 = discretize_ball_measure(&b4, 128).unwrap();
            let rhs = (b4.area - 3.0 * r.tanh() * b4.volume).powi(2);
            assert!(conjecture_residual(r, &mu4).unwrap().abs() <= 1e-7 * rhs);
            // Linear combination of the three identities.
            let t = r.tanh();
            let combo = croke_residual(&b4, &mu4, 1).unwrap() - 6.0 * t * croke_residual(&b4, &mu4, 2).unwrap()
                + 9.0 * t * t * croke_residual(&b4, &mu4, 3).unwrap();
            assert!((combo - conjecture_residual(r, &mu4).unwrap()).abs() <= 1e-12 * b4.area * b4.area);
            assert!(conjecture_residual(r, &mu4.scaled(0.9)).unwrap() < 0.0);

            let b2 = unit_ball(2, r).unwrap();
            let mu2 = discretize_ball_measure(&b2, 128).unwrap();
            let rhs = b2.area * b2.volume - r.tanh() * b2.volume * b2.volume;
            assert!(hyp2_lemma_residual(r, &mu2, Hyp2Convention::BareVolume).unwrap().abs() <= 1e-7 * rhs);
            assert!(hyp2_lemma_residual(r, &mu2, Hyp2Convention::TwoPi).unwrap() > 1e-3 * rhs);
            let empty = DiscreteMeasure::empty();
            assert!((hyp2_lemma_residual(r, &empty, Hyp2Convention::BareVolume).unwrap() + rhs).abs() < 1e-14 * rhs);
        }
    }

    #[test]
    fn jacobian_integrals_match_closed_forms() {
        let p = ModelParams::new(4, -1.0).unwrap();
        let spec = CurvatureSpectrum::constant(p);
        for ell in [0.3, 2.0, 6.0] {
            let ji = jacobian_integrals(&spec, ell).unwrap();
            let (a1, a2) = (spaceform::candle_anti(p, ell), spaceform::candle_anti2(p, ell));
            assert!((ji.j1 - a1).abs() <= 1e-10 * a1.max(1.0), "{ell}");
            assert!((ji.j2 - a2).abs() <= 1e-10 * a2.max(1.0), "{ell}");
        }
    }

    #[test]
    fn comparison_model_has_zero_margin() {
        let spec = CurvatureSpectrum::constant(ModelParams::new(4, -1.0).unwrap());
        for (r, ell, a, b) in [(0.5, 1.0, 0.2, 0.4), (3.0, 7.0, 0.0, 0.0)] {
            assert_eq!(question1_margin(&spec, r, ell, a, b).unwrap(), 0.0);
        }
        assert!(question1_margin(&CurvatureSpectrum { curvatures: vec![-1.0; 2] }, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn stronger_curvature_has_nonnegative_margin() {
        let spec = CurvatureSpectrum { curvatures: vec![-2.0; 3] };
        for (r, ell) in [(0.5, 1.0), (2.0, 3.0), (5.0, 10.0), (0.1, 0.1)] {
            assert!(question1_margin(&spec, r, ell, 0.0, 0.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn complex_hyperbolic_search() {
        let spec = complex_hyperbolic_spectrum();
        let s = ch2_counterexample_search(&spec, 10.0, 5.0, 20).unwrap();
        assert!(s.found_violation, "{s:?}");
        let tiny = ch2_counterexample_search(&spec, 0.1, 0.1, 8).unwrap();
        assert!(tiny.best_margin >= 0.0, "{tiny:?}");
        let again = ch2_counterexample_search(&spec, 10.0, 5.0, 20).unwrap();
        assert_eq!(s.best_margin, again.best_margin);
        assert_eq!((s.best_r, s.best_ell), (again.best_r, again.best_ell));
    }
}
