//! Dual certificates `(a, b, c, d, f)`.
//!
//! For a ball of radius `r` the coefficients solve the consistency equation
//!
//! ```text
//! d = a s'(ℓ)/cos²α + b s(ℓ)/cos α + c s^↿(ℓ)      on  cos α = T(ℓ),
//! ```
//!
//! and `f(α, β) = sup_ℓ g(ℓ, α, β)` with
//! `g = −a s/(cos α cos β) − b (s^↿/2)(1/cos α + 1/cos β) − c s^↿↿ + d ℓ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lp::builders::FamilyFunction;
use crate::quad;
use crate::spaceform::{self, ball_from_volume, chord_length_for, chord_t, BallGeometry, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateSource {
    /// Closed-form coefficients.
    ClosedForm,
    /// Least-squares solution of the consistency equation.
    Consistency,
    /// Supplied by the caller.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub params: ModelParams,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub source: CertificateSource,
}

impl DualCertificate {
    pub fn custom(params: ModelParams, r: f64, [a, b, c, d]: [f64; 4]) -> Self {
        Self { params, r, a, b, c, d, source: CertificateSource::Custom }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Multiply all four coefficients by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { a: self.a * lambda, b: self.b * lambda, c: self.c * lambda, d: self.d * lambda, ..*self }
    }

    /// `g(ℓ, α, β)`, the quantity whose supremum over `ℓ` defines `f`.
    pub fn g(&self, ell: f64, alpha: f64, beta: f64) -> f64 {
        let (ca, cb) = (alpha.cos(), beta.cos());
        let p = self.params;
        let mut v = self.d * ell;
        if self.a != 0.0 {
            v -= self.a * spaceform::candle(p, ell) / (ca * cb);
        }
        if self.b != 0.0 {
            v -= self.b * 0.5 * spaceform::candle_anti(p, ell) * (1.0 / ca + 1.0 / cb);
        }
        if self.c != 0.0 {
            v -= self.c * spaceform::candle_anti2(p, ell);
        }
        v
    }

    /// `∂g/∂ℓ`.
    pub fn g_prime(&self, ell: f64, alpha: f64, beta: f64) -> f64 {
        let (ca, cb) = (alpha.cos(), beta.cos());
        let p = self.params;
        let mut v = self.d;
        if self.a != 0.0 {
            v -= self.a * spaceform::candle_deriv(p, ell) / (ca * cb);
        }
        if self.b != 0.0 {
            v -= self.b * 0.5 * spaceform::candle(p, ell) * (1.0 / ca + 1.0 / cb);
        }
        if self.c != 0.0 {
            v -= self.c * spaceform::candle_anti(p, ell);
        }
        v
    }

    /// Defect of the consistency equation at `ℓ`, relative to the size of
    /// its terms.
    pub fn consistency_defect(&self, ell: f64) -> Result<f64> {
        let row = consistency_row(self.params, self.r, ell)?;
        let terms = [self.a * row[0], self.b * row[1], self.c * row[2], -self.d];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        let sum: f64 = terms.iter().sum();
        Ok(if scale == 0.0 { 0.0 } else { sum.abs() / scale })
    }

    /// `f(α, β)` in closed form where one is known (`κ = 0`).
    pub fn closed_form_f(&self, alpha: f64, beta: f64) -> Option<f64> {
        if self.params.kappa != 0.0 || self.source != CertificateSource::ClosedForm {
            return None;
        }
        let (ca, cb) = (alpha.cos(), beta.cos());
        let r = self.r;
        match self.params.n {
            4 => Some(16.0 * r.powi(3) * (ca * cb).sqrt()),
            2 => Some(4.0 * r * r / (1.0 / ca + 1.0 / cb)),
            _ => None,
        }
    }

    /// Coefficients are all nonnegative (the unsigned dual constraint set).
    pub fn sign_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if v < 0.0 {
                flags.push(format!("negative {name}"));
            }
        }
        flags
    }
}

/// `[s'(ℓ)/cos²α, s(ℓ)/cos α, s^↿(ℓ)]` with `cos α = T(ℓ)`; the consistency
/// equation reads `a·row₀ + b·row₁ + c·row₂ = d`.
fn consistency_row(p: ModelParams, r: f64, ell: f64) -> Result<[f64; 3]> {
    let t = chord_t(p.kappa, r, ell)?;
    if t <= 0.0 {
        return domain("consistency equation is singular at ell = 0");
    }
    Ok([spaceform::candle_deriv(p, ell) / (t * t), spaceform::candle(p, ell) / t, spaceform::candle_anti(p, ell)])
}

fn check_radius(p: ModelParams, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("radius must be positive, got {r}"));
    }
    if let Some(rmax) = p.max_radius() {
        if r >= rmax {
            return domain(format!("radius {r} must be below the hemisphere radius {rmax}"));
        }
    }
    Ok(())
}

/// Result of [`solve_consistency`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencySolution {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Largest relative defect over a node set ten times denser than the fit.
    pub residual: f64,
    /// Singular values of the normalized system, descending.
    pub singular_values: Vec<f64>,
    /// Coefficients that were identically zero to working precision.
    pub zeroed: Vec<String>,
}

impl ConsistencySolution {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn nonnegative(&self) -> bool {
        self.coefficients().iter().all(|&x| x >= 0.0)
    }

    pub fn certificate(&self, params: ModelParams, r: f64) -> DualCertificate {
        DualCertificate { params, r, a: self.a, b: self.b, c: self.c, d: self.d, source: CertificateSource::Consistency }
    }
}

/// Chebyshev nodes strictly inside `(0, 2r)`.
fn chebyshev_nodes(r: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| r * (1.0 - ((2 * i + 1) as f64 * PI / (2 * count) as f64).cos()))
        .collect()
}

// Relative size below which a singular value, or a coefficient, counts as 0.
const NULL_TOL: f64 = 1e-10;

/// Least-squares recovery of `(a, b, c, d)` from the consistency equation.
///
/// The homogeneous system is row- and column-equilibrated and its null vector
/// taken from the SVD. Coefficients that vanish to working precision are set
/// to zero exactly and the rest refit, then the gauge fixes `a = 1` (or
/// `b = 1` when `a = 0`).
pub fn solve_consistency(params: ModelParams, r: f64, node_count: usize) -> Result<ConsistencySolution> {
    if node_count < 8 {
        return Err(Error::Usage(format!("need at least 8 collocation nodes, got {node_count}")));
    }
    check_radius(params, r)?;
    let nodes = chebyshev_nodes(r, node_count);
    let mut rows = Vec::with_capacity(node_count);
    for &l in &nodes {
        let [x0, x1, x2] = consistency_row(params, r, l)?;
        rows.push([x0, x1, x2, -1.0]);
    }
    let names = ["a", "b", "c", "d"];
    let mut active = [true; 4];
    let (mut coef, mut singular_values) = null_vector(&rows, &active)?;
    let big = coef.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut zeroed = Vec::new();
    for k in 0..4 {
        if coef[k].abs() <= NULL_TOL * big {
            active[k] = false;
            zeroed.push(names[k].to_string());
        }
    }
    if !zeroed.is_empty() {
        let (c2, sv2) = null_vector(&rows, &active)?;
        coef = c2;
        singular_values = sv2;
    }
    let pivot = if active[0] { coef[0] } else { coef[1] };
    if pivot == 0.0 {
        return Err(Error::RankDeficient { singular_values });
    }
    for x in coef.iter_mut() {
        *x /= pivot;
    }
    let cert = DualCertificate::custom(params, r, coef);
    let dense = chebyshev_nodes(r, 10 * node_count);
    let mut residual = 0.0f64;
    for &l in &dense {
        residual = residual.max(cert.consistency_defect(l)?);
    }
    Ok(ConsistencySolution { a: coef[0], b: coef[1], c: coef[2], d: coef[3], residual, singular_values, zeroed })
}

/// Null vector of the equilibrated system restricted to `active` columns.
fn null_vector(rows: &[[f64; 4]], active: &[bool; 4]) -> Result<([f64; 4], Vec<f64>)> {
    let cols: Vec<usize> = (0..4).filter(|&k| active[k]).collect();
    let nr = rows.len();
    let nc = cols.len();
    let mut m = DMatrix::zeros(nr, nc);
    for (i, row) in rows.iter().enumerate() {
        let norm = cols.iter().map(|&k| row[k] * row[k]).sum::<f64>().sqrt();
        let norm = if norm > 0.0 { norm } else { 1.0 };
        for (jj, &k) in cols.iter().enumerate() {
            m[(i, jj)] = row[k] / norm;
        }
    }
    let mut colnorm = vec![1.0; nc];
    for (jj, cn) in colnorm.iter_mut().enumerate() {
        let n = m.column(jj).norm();
        if n > 0.0 {
            *cn = n;
            m.column_mut(jj).scale_mut(1.0 / n);
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0];
    // A second (near-)null direction leaves the solution undetermined.
    if sv.len() >= 2 && sv[sv.len() - 2] <= NULL_TOL * smax {
        return Err(Error::RankDeficient { singular_values: sv });
    }
    let last = *order.last().unwrap();
    let mut out = [0.0; 4];
    for (jj, &k) in cols.iter().enumerate() {
        out[k] = v_t[(last, jj)] / colnorm[jj];
    }
    Ok((out, sv))
}

/// Closed-form certificates for `n ∈ {2, 4}`, `κ ∈ {−1, 0, 1}`, extended to
/// every `κ` by dilation.
pub fn closed_form_certificate(params: ModelParams, r: f64) -> Result<DualCertificate> {
    check_radius(params, r)?;
    let n = params.n;
    if n != 2 && n != 4 {
        return Err(Error::NotImplemented { n, kappa: params.kappa });
    }
    let kappa = params.kappa;
    let lam = params.k();
    let (a, b, c, d) = if kappa == 0.0 {
        if n == 4 { (1.0, 0.0, 0.0, 12.0 * r * r) } else { (0.0, 1.0, 0.0, 2.0 * r) }
    } else {
        // Unit-curvature tuple at radius λr, then undo the dilation.
        let r1 = lam * r;
        let t = if kappa > 0.0 { r1.tan() } else { -r1.tanh() };
        let (a1, b1, c1, d1) =
            if n == 4 { (1.0, 6.0 * t, 9.0 * t * t, 12.0 * t * t) } else { (0.0, 1.0, t, 2.0 * t.abs()) };
        let nn = n as i32;
        let (a, b, c, d) = (a1 * lam.powi(nn - 2), b1 * lam.powi(nn - 1), c1 * lam.powi(nn), d1);
        let g = if n == 4 { a } else { b };
        (a / g, b / g, c / g, d / g)
    };
    Ok(DualCertificate { params, r, a, b, c, d, source: CertificateSource::ClosedForm })
}

/// `sup_ℓ g(ℓ, α, β)` and its maximizer.
///
/// Search domain: `[0, π/√κ]` for `κ > 0` (where `g` is continued linearly
/// and must not increase), `[0, 40 max(1, r)]` otherwise. A maximizer on the
/// artificial cap is an error.
pub fn build_f(cert: &DualCertificate, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..FRAC_PI_2).contains(&alpha) || !(0.0..FRAC_PI_2).contains(&beta) {
        return domain(format!("angles must lie in [0, π/2), got ({alpha}, {beta})"));
    }
    let p = cert.params;
    let cap = match p.conjugate_distance() {
        Some(tc) => {
            let slope = cert.d - cert.c * spaceform::candle_anti(p, tc);
            if slope > 1e-9 * cert.d.abs().max(1e-300) {
                return Err(Error::CapReached { cap: tc });
            }
            tc
        }
        None => 40.0 * cert.r.max(1.0),
    };
    const SCAN: usize = 512;
    let h = cap / (SCAN - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..SCAN {
        let v = cert.g(i as f64 * h, alpha, beta);
        if v > best.1 {
            best = (i, v);
        }
    }
    let (i, _) = best;
    if p.kappa <= 0.0 && i == SCAN - 1 {
        return Err(Error::CapReached { cap });
    }
    let lo = i.saturating_sub(1) as f64 * h;
    let hi = ((i + 1).min(SCAN - 1)) as f64 * h;
    let (mut x, mut fx) = quad::golden_max(|l| cert.g(l, alpha, beta), lo, hi, 1e-10 * cap.max(1.0));
    // Polish on the derivative: golden section only locates a flat maximum to
    // about √ε.
    let w = (64.0 * 1e-10 * cap.max(1.0)).max(1e-7 * x);
    let (a, b) = ((x - w).max(lo), (x + w).min(hi));
    if let Some(root) = quad::bisect(|l| cert.g_prime(l, alpha, beta), a, b, 1e-15 * cap) {
        let fr = cert.g(root, alpha, beta);
        if fr >= fx - 1e-13 * fx.abs().max(1.0) {
            x = root;
            fx = fr;
        }
    }
    // Endpoint maxima.
    for e in [0.0, cap] {
        let fe = cert.g(e, alpha, beta);
        if fe > fx {
            x = e;
            fx = fe;
        }
    }
    Ok((fx, x))
}

/// `f = sup_ℓ g` as a family row of the discretized program; `NaN` where
/// the sup cannot be certified, which the solver rejects.
pub fn certificate_family(cert: &DualCertificate) -> FamilyFunction {
    let c = cert.clone();
    FamilyFunction::new("certificate f", move |a, b| build_f(&c, a, b).map(|v| v.0).unwrap_or(f64::NAN))
}

/// Result of [`check_family_membership`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub grid: usize,
    pub epsilon: f64,
    pub min_f: f64,
    /// `min ½(f(α,α) + f(β,β)) − f(α,β)` over the grid.
    pub min_defect: f64,
    pub argmin_defect: (f64, f64),
    /// Smallest off-diagonal defect (`|i − j| ≥ 2`).
    pub min_off_diagonal_defect: f64,
    /// Largest `|i − j|` among pairs with defect `≤ 1e−9`.
    pub max_index_distance_of_zero_set: usize,
    /// Set when `f` could not be evaluated (the supremum is unbounded).
    pub failure: Option<String>,
    pub passed: bool,
}

impl MembershipReport {
    fn failed(grid: usize, epsilon: f64, why: String) -> Self {
        Self {
            grid,
            epsilon,
            min_f: f64::NAN,
            min_defect: f64::NAN,
            argmin_defect: (f64::NAN, f64::NAN),
            min_off_diagonal_defect: f64::NAN,
            max_index_distance_of_zero_set: 0,
            failure: Some(why),
            passed: false,
        }
    }
}

pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Grid check of `f ≥ 0` and `f(α,β) ≤ ½(f(α,α) + f(β,β))` on
/// `[0, π/2 − ε]²`.
pub fn check_family_membership(cert: &DualCertificate, n: usize, epsilon: f64) -> Result<MembershipReport> {
    if n < 2 {
        return Err(Error::Usage("membership grid needs at least 2 points".into()));
    }
    let top = FRAC_PI_2 - epsilon;
    let ang: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
    // f is symmetric: evaluate the upper triangle.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| build_f(cert, ang[i], ang[j]).map(|v| v.0)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let f = |i: usize, j: usize| if i <= j { rows[i][j - i] } else { rows[j][i - j] };
    let mut rep = MembershipReport {
        grid: n,
        epsilon,
        min_f: f64::INFINITY,
        min_defect: f64::INFINITY,
        argmin_defect: (0.0, 0.0),
        min_off_diagonal_defect: f64::INFINITY,
        max_index_distance_of_zero_set: 0,
        failure: None,
        passed: false,
    };
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            rep.min_f = rep.min_f.min(v);
            let defect = 0.5 * (f(i, i) + f(j, j)) - v;
            if defect < rep.min_defect {
                rep.min_defect = defect;
                rep.argmin_defect = (ang[i], ang[j]);
            }
            if j - i >= 2 {
                rep.min_off_diagonal_defect = rep.min_off_diagonal_defect.min(defect);
            }
            if defect <= MEMBERSHIP_TOL {
                rep.max_index_distance_of_zero_set = rep.max_index_distance_of_zero_set.max(j - i);
            }
        }
    }
    rep.passed =
        rep.min_f >= -MEMBERSHIP_TOL && rep.min_defect >= -MEMBERSHIP_TOL && rep.max_index_distance_of_zero_set <= 1;
    Ok(rep)
}

/// Which dual constraint set a certificate is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintSet {
    /// All of `a, b, c, d` must be nonnegative.
    Table1,
    /// Signed coefficients allowed, for the combined negative-curvature
    /// inequality.
    Signed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub consistency_nodes: usize,
    pub diagonal_samples: usize,
    pub membership_grid: usize,
    pub membership_epsilon: f64,
    pub consistency_tol: f64,
    pub argmax_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            consistency_nodes: 640,
            diagonal_samples: 50,
            membership_grid: 50,
            membership_epsilon: 1e-3,
            consistency_tol: 1e-8,
            argmax_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificate: DualCertificate,
    pub constraint_set: ConstraintSet,
    pub consistency_residual: f64,
    pub consistency_ok: bool,
    /// Largest `|ℓ*(α,α) − T⁻¹(cos α)|` over the diagonal samples.
    pub argmax_error: f64,
    pub argmax_ok: bool,
    pub membership: MembershipReport,
    pub sign_flags: Vec<String>,
    pub signs_ok: bool,
    pub passed: bool,
}

/// Check the three hypotheses of the duality principle: consistency on the
/// chord curve, the supremum attained on the curve, and membership in `𝓕`.
pub fn verify_certificate(cert: &DualCertificate, set: ConstraintSet, opts: &VerifyOptions) -> Result<CertificateReport> {
    check_radius(cert.params, cert.r)?;
    let nodes = chebyshev_nodes(cert.r, opts.consistency_nodes);
    let mut consistency_residual = 0.0f64;
    for &l in &nodes {
        consistency_residual = consistency_residual.max(cert.consistency_defect(l)?);
    }
    let k = opts.diagonal_samples;
    let errors: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|i| {
            let alpha = FRAC_PI_2 * (i as f64 + 0.5) / k as f64;
            let want = chord_length_for(cert.params.kappa, cert.r, alpha.cos());
            match build_f(cert, alpha, alpha) {
                Ok((_, l)) => (l - want).abs(),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();
    let argmax_error = errors.into_iter().fold(0.0, f64::max);
    let membership = match check_family_membership(cert, opts.membership_grid, opts.membership_epsilon) {
        Ok(m) => m,
        Err(e @ Error::CapReached { .. }) => {
            MembershipReport::failed(opts.membership_grid, opts.membership_epsilon, e.to_string())
        }
        Err(e) => return Err(e),
    };
    let sign_flags = cert.sign_flags();
    let signs_ok = set == ConstraintSet::Signed || sign_flags.is_empty();
    let consistency_ok = consistency_residual <= opts.consistency_tol;
    let argmax_ok = argmax_error <= opts.argmax_tol * cert.r.max(1.0);
    let passed = consistency_ok && argmax_ok && membership.passed && signs_ok;
    Ok(CertificateReport {
        certificate: *cert,
        constraint_set: set,
        consistency_residual,
        consistency_ok,
        argmax_error,
        argmax_ok,
        membership,
        sign_flags,
        signs_ok,
        passed,
    })
}

/// A certificate together with a passing report.
#[derive(Debug, Clone)]
pub struct VerifiedCertificate {
    report: CertificateReport,
}

impl VerifiedCertificate {
    pub fn new(report: CertificateReport) -> Result<Self> {
        if report.passed { Ok(Self { report }) } else { Err(Error::Unverified) }
    }

    pub fn certificate(&self) -> &DualCertificate {
        &self.report.certificate
    }

    pub fn report(&self) -> &CertificateReport {
        &self.report
    }
}

/// The certified lower bound `A_M ≥ A_B` for volume `v`. The certificate
/// must have been built for the radius of that ball.
pub fn duality_lower_bound(cert: &VerifiedCertificate, v: f64) -> Result<f64> {
    let c = cert.certificate();
    let ball = ball_from_volume(c.params, v)?;
    if (ball.radius - c.r).abs() > 1e-9 * c.r {
        return Err(Error::Usage(format!(
            "certificate is for radius {}, the ball of volume {v} has radius {}",
            c.r, ball.radius
        )));
    }
    Ok(ball.area)
}

/// Dual objective of the isoperimetric program at this certificate,
/// `(−cV² + dω_{n−1}V − A_B ∫ f(α,α) δⁿ dα)/(a A_B + b V)`; equals `A_B`
/// for a valid certificate.
pub fn dual_objective(cert: &DualCertificate) -> Result<f64> {
    let ball = BallGeometry::from_radius(cert.params, cert.r)?;
    let n = cert.params.n;
    let diag = quad::integrate(
        |a| build_f(cert, a, a).map(|v| v.0).unwrap_or(f64::NAN) * spaceform::delta_weight(n, a),
        0.0,
        FRAC_PI_2,
        1e-12,
        1e-11,
    );
    let num = -cert.c * ball.volume * ball.volume + cert.d * spaceform::omega(n - 1) * ball.volume - ball.area * diag.value;
    Ok(num / (cert.a * ball.area + cert.b * ball.volume))
}
