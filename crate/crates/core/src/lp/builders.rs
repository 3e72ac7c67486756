//! Discretized isoperimetric programs. Variables are `[A, μ(atom_0), ...]`
//! with one atom per grid triple `(ℓ, α, β)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::LinearProgram;
use crate::error::{domain, Error, Result};
use crate::quad;
use crate::spaceform::{self, ball_from_volume, BallGeometry, ModelParams};

/// A member of the family `𝓕` used as a constraint row.
#[derive(Clone)]
pub struct FamilyFunction {
    pub label: String,
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for FamilyFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FamilyFunction").field("label", &self.label).finish_non_exhaustive()
    }
}

impl FamilyFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    /// `(cos α cos β)^γ`.
    pub fn symmetric_product(gamma: f64) -> Self {
        Self::new(format!("(cos a cos b)^{gamma}"), move |a: f64, b: f64| (a.cos() * b.cos()).max(0.0).powf(gamma))
    }

    /// `∫₀^{π/2} f(α, α) δⁿ(α) dα`.
    pub fn diagonal_moment(&self, n: usize) -> f64 {
        quad::integrate(|a| (self.f)(a, a) * spaceform::delta_weight(n, a), 0.0, FRAC_PI_2, 1e-13, 1e-12).value
    }
}

/// The symmetric products with `γ ∈ {1/2, 1, 3/2, 2}`.
pub fn default_products() -> Vec<FamilyFunction> {
    [0.5, 1.0, 1.5, 2.0].into_iter().map(FamilyFunction::symmetric_product).collect()
}

/// Grid of atoms: every `(ℓ, α, β)` with `ℓ ∈ ell` and `α, β ∈ alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpGrid {
    pub ell: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl LpGrid {
    /// `n_alpha` cell midpoints in `α`, and as `ℓ`-nodes the chord lengths of
    /// `ball` at those angles together with `n_ell` uniform midpoints of
    /// `(0, ell_max)`. `ell_max` defaults to `2.5 r`, kept below the conjugate
    /// distance when `κ > 0`.
    pub fn curve_aligned(ball: &BallGeometry, n_ell: usize, n_alpha: usize, ell_max: Option<f64>) -> Result<Self> {
        if n_alpha == 0 {
            return Err(Error::Usage("need at least one alpha node".into()));
        }
        let mut ell_max = ell_max.unwrap_or(2.5 * ball.radius);
        if let Some(tc) = ball.params.conjugate_distance() {
            ell_max = ell_max.min(0.999 * tc);
        }
        let h = FRAC_PI_2 / n_alpha as f64;
        let alpha: Vec<f64> = (0..n_alpha).map(|j| (j as f64 + 0.5) * h).collect();
        let mut ell: Vec<f64> = alpha.iter().map(|&a| ball.chord_length(a)).collect();
        ell.extend((0..n_ell).map(|i| (i as f64 + 0.5) * ell_max / n_ell as f64));
        ell.sort_by(f64::total_cmp);
        ell.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        Ok(Self { ell, alpha })
    }

    pub fn uniform(n_ell: usize, n_alpha: usize, ell_max: f64) -> Self {
        let h = FRAC_PI_2 / n_alpha as f64;
        Self {
            ell: (0..n_ell).map(|i| (i as f64 + 0.5) * ell_max / n_ell as f64).collect(),
            alpha: (0..n_alpha).map(|j| (j as f64 + 0.5) * h).collect(),
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.ell.len() * self.alpha.len() * self.alpha.len()
    }

    /// Atoms in variable order (variable `k + 1` is atom `k`).
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.ell.iter().flat_map(move |&l| {
            self.alpha.iter().flat_map(move |&a| self.alpha.iter().map(move |&b| (l, a, b)))
        })
    }

    fn validate(&self, params: ModelParams) -> Result<()> {
        if self.ell.is_empty() || self.alpha.is_empty() {
            return Err(Error::Usage("grid needs at least one node in each direction".into()));
        }
        if let Some(&a) = self.alpha.iter().find(|&&a| !(a > 0.0 && a < FRAC_PI_2)) {
            return domain(format!("alpha node {a} outside the open interval (0, π/2)"));
        }
        let cap = params.conjugate_distance().unwrap_or(f64::INFINITY);
        if let Some(&l) = self.ell.iter().find(|&&l| !(l > 0.0 && l < cap)) {
            return domain(format!("ell node {l} outside (0, {cap})"));
        }
        Ok(())
    }
}

/// Coefficients of one program: `A`-column entries of rows a, b and the
/// right-hand sides of rows c, d; `area` multiplies the family rows.
struct RowData {
    a_coef: f64,
    b_coef: f64,
    c_rhs: f64,
    d_rhs: f64,
    area: f64,
}

fn assemble(params: ModelParams, grid: &LpGrid, family: &[FamilyFunction], rd: RowData) -> Result<LinearProgram> {
    grid.validate(params)?;
    let k = grid.num_atoms();
    let mut obj = vec![0.0; k + 1];
    obj[0] = 1.0;
    let mut lp = LinearProgram::new(obj);
    let mut ra = vec![0.0; k + 1];
    let mut rb = vec![0.0; k + 1];
    let mut rc = vec![0.0; k + 1];
    let mut rdv = vec![0.0; k + 1];
    let mut rf: Vec<Vec<f64>> = family.iter().map(|_| vec![0.0; k + 1]).collect();
    ra[0] = rd.a_coef;
    rb[0] = rd.b_coef;
    let mut idx = 1;
    for &l in &grid.ell {
        let s = spaceform::candle(params, l);
        let s1 = spaceform::candle_anti(params, l);
        let s2 = spaceform::candle_anti2(params, l);
        for &a in &grid.alpha {
            let ca = a.cos();
            for &b in &grid.alpha {
                let cb = b.cos();
                ra[idx] = -s / (ca * cb);
                rb[idx] = -0.5 * s1 * (1.0 / ca + 1.0 / cb);
                rc[idx] = -s2;
                rdv[idx] = l;
                for (row, fam) in rf.iter_mut().zip(family) {
                    row[idx] = -(fam.f)(a, b);
                }
                idx += 1;
            }
        }
    }
    lp.push_row("a", ra, 0.0);
    lp.push_row("b", rb, 0.0);
    lp.push_row("c", rc, -rd.c_rhs);
    lp.push_row("d", rdv, rd.d_rhs);
    for (row, fam) in rf.into_iter().zip(family) {
        let rhs = -rd.area * fam.diagonal_moment(params.n);
        lp.push_row(format!("f: {}", fam.label), row, rhs);
    }
    Ok(lp)
}

/// The discretized isoperimetric program for volume `v`: minimize `A` over
/// `A ≥ 0` and atom masses, subject to rows a–d and one row per family
/// function.
pub fn build_isoperimetric_lp(params: ModelParams, v: f64, grid: &LpGrid, family: &[FamilyFunction]) -> Result<LinearProgram> {
    let ball = ball_from_volume(params, v)?;
    assemble(
        params,
        grid,
        family,
        RowData {
            a_coef: ball.area,
            b_coef: v,
            c_rhs: v * v,
            d_rhs: spaceform::omega(params.n - 1) * v,
            area: ball.area,
        },
    )
}

/// How rows c and d of the relative program are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelativeRowScaling {
    /// Rows c, d get `m V²` and `ω_{n−1} V`: the single-geodesic scaling
    /// applied to the quotient measure. The orbifold measure is feasible with
    /// equality, and `m = 1` reproduces the isoperimetric program.
    Corrected,
    /// Rows c, d get `ω_{n−1} m V²` and `V`, transposing the two factors.
    AsPrinted,
}

/// The relative (`m`-geodesic) program. `A_R = |∂B(mV)|/m` is the
/// equality-case area.
pub fn build_relative_lp(
    params: ModelParams,
    v: f64,
    m: usize,
    grid: &LpGrid,
    family: &[FamilyFunction],
    scaling: RelativeRowScaling,
) -> Result<LinearProgram> {
    if m == 0 {
        return Err(Error::Usage("m must be at least 1".into()));
    }
    let mf = m as f64;
    let big = ball_from_volume(params, mf * v)?;
    let area_r = big.area / mf;
    let w = spaceform::omega(params.n - 1);
    let (c_rhs, d_rhs) = match scaling {
        RelativeRowScaling::Corrected => (mf * v * v, w * v),
        RelativeRowScaling::AsPrinted => (w * mf * v * v, v),
    };
    assemble(params, grid, family, RowData { a_coef: mf * area_r, b_coef: mf * v, c_rhs, d_rhs, area: area_r })
}
