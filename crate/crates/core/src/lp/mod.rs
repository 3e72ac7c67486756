//! Dense linear programs `min c·x  s.t.  A x ≥ b, x ≥ 0` and a two-phase
//! revised simplex solver that returns a primal-dual pair.
//!
//! The dual is `max b·y  s.t.  Aᵀ y ≤ c, y ≥ 0`. Every solution is re-checked
//! with [`verify_weak_duality`] on the unscaled problem; a pair that misses
//! the requested tolerance is reported as [`LpStatus::ToleranceFailure`]
//! rather than as optimal.

pub mod builders;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

/// `minimize objective·x` subject to `row·x ≥ rhs` for every row and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_row(&mut self, label: impl Into<String>, coefficients: Vec<f64>, rhs: f64) {
        self.rows.push(Constraint { label: label.into(), coefficients, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::Usage("linear program has no variables".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("objective has non-finite entries".into()));
        }
        for row in &self.rows {
            if row.coefficients.len() != n {
                return Err(Error::Usage(format!(
                    "row '{}' has {} coefficients, expected {n}",
                    row.label,
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(Error::Usage(format!("row '{}' has non-finite entries", row.label)));
            }
            if row.label.contains(['\t', '\n']) {
                return Err(Error::Usage(format!("row label {:?} contains a tab or newline", row.label)));
            }
        }
        Ok(())
    }

    /// Plain-text form: a `minimize` line, then one line per row,
    /// `label<TAB>coefficients<TAB>>=<TAB>rhs`, coefficients space separated.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        writeln!(out, "minimize\t{}", join(&self.objective)).unwrap();
        for row in &self.rows {
            writeln!(out, "{}\t{}\t>=\t{}", row.label, join(&row.coefficients), row.rhs).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_vec = |s: &str, line: usize| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line, message: format!("{t:?}: {e}") }))
                .collect()
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
        let objective = match first.split_once('\t') {
            Some(("minimize", rest)) => parse_vec(rest, 1)?,
            _ => return Err(Error::Parse { line: 1, message: "expected 'minimize<TAB>...'".into() }),
        };
        let mut lp = Self::new(objective);
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 || fields[2] != ">=" {
                return Err(Error::Parse { line: i + 1, message: "expected label, coefficients, >=, rhs".into() });
            }
            let rhs = fields[3]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            lp.push_row(fields[0], parse_vec(fields[1], i + 1)?, rhs);
        }
        lp.validate()?;
        Ok(lp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    ToleranceFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub report: DualityReport,
    pub iterations: usize,
}

/// Residuals of a primal-dual pair. Violations are relative to the size of
/// the terms in the row (or column) they come from.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct DualityReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max_i (b_i − a_i·x)⁺`, also counting negative entries of `x`.
    pub max_primal_violation: f64,
    /// `max_j (aⱼᵀy − c_j)⁺`, also counting negative entries of `y`.
    pub max_dual_violation: f64,
    /// `primal − dual` objective; nonnegative for feasible pairs.
    pub gap: f64,
    /// Largest `|y_i (a_i·x − b_i)|` or `|x_j (c_j − aⱼᵀy)|`.
    pub complementary_slackness: f64,
}

impl DualityReport {
    /// Does the pair certify optimality to `tol`?
    pub fn certifies(&self, tol: f64) -> bool {
        self.max_primal_violation <= tol
            && self.max_dual_violation <= tol
            && self.gap.abs() <= tol * (1.0 + self.primal_objective.abs())
    }
}

/// Residual report for a candidate pair, independent of how it was found.
pub fn verify_weak_duality(lp: &LinearProgram, primal: &[f64], dual: &[f64]) -> Result<DualityReport> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    if primal.len() != n || dual.len() != m {
        return Err(Error::Usage(format!(
            "pair has sizes ({}, {}), program needs ({n}, {m})",
            primal.len(),
            dual.len()
        )));
    }
    let mut rep = DualityReport::default();
    rep.primal_objective = dot(&lp.objective, primal);
    rep.dual_objective = lp.rows.iter().zip(dual).map(|(r, y)| r.rhs * y).sum();
    for &x in primal {
        rep.max_primal_violation = rep.max_primal_violation.max(-x);
    }
    for &y in dual {
        rep.max_dual_violation = rep.max_dual_violation.max(-y);
    }
    for (row, &y) in lp.rows.iter().zip(dual) {
        let ax = dot(&row.coefficients, primal);
        let size: f64 = 1.0 + row.rhs.abs() + row.coefficients.iter().zip(primal).map(|(a, x)| (a * x).abs()).sum::<f64>();
        let slack = ax - row.rhs;
        rep.max_primal_violation = rep.max_primal_violation.max(-slack / size);
        rep.complementary_slackness = rep.complementary_slackness.max((y * slack).abs() / size);
    }
    for j in 0..n {
        let mut aty = 0.0;
        let mut size = 1.0 + lp.objective[j].abs();
        for (row, &y) in lp.rows.iter().zip(dual) {
            aty += row.coefficients[j] * y;
            size += (row.coefficients[j] * y).abs();
        }
        let reduced = lp.objective[j] - aty;
        rep.max_dual_violation = rep.max_dual_violation.max(-reduced / size);
        rep.complementary_slackness = rep.complementary_slackness.max((primal[j] * reduced).abs() / size);
    }
    rep.gap = rep.primal_objective - rep.dual_objective;
    Ok(rep)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Internal tolerances of the scaled problem.
const OPT_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_SWITCH: usize = 50;
const REFACTOR_EVERY: usize = 64;

/// Solve with the two-phase revised simplex method.
///
/// Pricing is Dantzig's rule with lowest-index tie breaking; after a run of
/// degenerate pivots it switches to Bland's rule until the objective moves
/// again, so runs are deterministic and cannot cycle.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::Usage(format!("tolerance must lie in (0, 1e-3], got {tol}")));
    }
    lp.validate()?;
    let mut s = Simplex::new(lp);
    let outcome = s.run();
    let n = lp.num_vars();
    let m = lp.rows.len();
    let (primal, dual) = match outcome {
        Outcome::Optimal => (s.primal(), s.dual()),
        _ => (vec![0.0; n], vec![0.0; m]),
    };
    let report = verify_weak_duality(lp, &primal, &dual)?;
    let status = match outcome {
        Outcome::Optimal if report.certifies(tol) => LpStatus::Optimal,
        Outcome::Optimal | Outcome::IterationLimit => LpStatus::ToleranceFailure,
        Outcome::Infeasible => LpStatus::Infeasible,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    Ok(LpSolution {
        status,
        objective: report.primal_objective,
        dual_objective: report.dual_objective,
        primal,
        dual,
        report,
        iterations: s.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Working state. Column indices: `0..n` structural, `n..n+m` surplus,
/// `n+m..n+2m` artificial. Row `i` reads
/// `σᵢ Rᵢ (aᵢ·C x') − σᵢ sᵢ + artᵢ = σᵢ Rᵢ bᵢ` with `σᵢ` chosen so the
/// right side is nonnegative.
struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    sigma: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    barred: Vec<bool>,
    binv: DMatrix<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut row_scale = vec![1.0; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let big = row.coefficients.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if big > 0.0 {
                row_scale[i] = 1.0 / big;
            }
        }
        let mut col_scale = vec![1.0; n];
        for (j, c) in col_scale.iter_mut().enumerate() {
            let big = lp.rows.iter().enumerate().fold(0.0f64, |a, (i, r)| a.max((r.coefficients[j] * row_scale[i]).abs()));
            if big > 0.0 {
                *c = 1.0 / big;
            }
        }
        let sigma: Vec<f64> = lp.rows.iter().map(|r| if r.rhs > 0.0 { 1.0 } else { -1.0 }).collect();
        let mut cols = vec![0.0; n * m];
        for (i, row) in lp.rows.iter().enumerate() {
            for j in 0..n {
                cols[j * m + i] = sigma[i] * row_scale[i] * row.coefficients[j] * col_scale[j];
            }
        }
        let rhs: Vec<f64> = lp.rows.iter().enumerate().map(|(i, r)| sigma[i] * row_scale[i] * r.rhs).collect();
        let mut cost = vec![0.0; n + 2 * m];
        for j in 0..n {
            cost[j] = lp.objective[j] * col_scale[j];
        }
        let total = n + 2 * m;
        let mut basis = Vec::with_capacity(m);
        let mut is_basic = vec![false; total];
        let mut barred = vec![false; total];
        for i in 0..m {
            let v = if sigma[i] < 0.0 { n + i } else { n + m + i };
            basis.push(v);
            is_basic[v] = true;
            if sigma[i] < 0.0 {
                // This row never needs an artificial.
                barred[n + m + i] = true;
            }
        }
        Self {
            m,
            n,
            cols,
            cost,
            xb: rhs.clone(),
            rhs,
            sigma,
            row_scale,
            col_scale,
            basis,
            is_basic,
            barred,
            binv: DMatrix::identity(m, m),
            iterations: 0,
            max_iterations: 50_000 + 50 * (n + m),
        }
    }

    /// `B⁻¹`-free column access: writes column `j` into `out`.
    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        if j < self.n {
            out.copy_from_slice(&self.cols[j * self.m..(j + 1) * self.m]);
        } else if j < self.n + self.m {
            let i = j - self.n;
            out[i] = -self.sigma[i];
        } else {
            out[j - self.n - self.m] = 1.0;
        }
    }

    /// `yᵀ col_j` without materializing the column.
    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            dot(y, &self.cols[j * self.m..(j + 1) * self.m])
        } else if j < self.n + self.m {
            let i = j - self.n;
            -self.sigma[i] * y[i]
        } else {
            y[j - self.n - self.m]
        }
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut b = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                b[(i, k)] = col[i];
            }
        }
        match b.lu().try_inverse() {
            Some(inv) => {
                self.binv = inv;
                for i in 0..m {
                    self.xb[i] = (0..m).map(|k| self.binv[(i, k)] * self.rhs[k]).sum();
                }
                true
            }
            None => false,
        }
    }

    fn simplex_multipliers(&self, phase1: bool) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.phase_cost(j, phase1);
            if c != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += c * self.binv[(r, k)];
                }
            }
        }
        y
    }

    fn phase_cost(&self, j: usize, phase1: bool) -> f64 {
        if phase1 {
            if j >= self.n + self.m { 1.0 } else { 0.0 }
        } else if j < self.n {
            self.cost[j]
        } else {
            0.0
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn run(&mut self) -> Outcome {
        if self.m == 0 {
            // Only x ≥ 0: optimal at 0 unless some cost is negative.
            return if self.cost[..self.n].iter().any(|&c| c < 0.0) { Outcome::Unbounded } else { Outcome::Optimal };
        }
        let needs_phase1 = self.basis.iter().any(|&j| self.is_artificial(j));
        if needs_phase1 {
            match self.iterate(true) {
                Outcome::Optimal => {}
                other => return other,
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&j, _)| self.is_artificial(j))
                .map(|(_, &x)| x)
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if infeas > 1e-9 * scale {
                return Outcome::Infeasible;
            }
            self.drive_out_artificials();
        }
        for j in self.n + self.m..self.n + 2 * self.m {
            if !self.is_basic[j] {
                self.barred[j] = true;
            }
        }
        for _ in 0..4 {
            match self.iterate(false) {
                Outcome::Optimal => {}
                other => return other,
            }
            // Polish: fresh factorization, then confirm optimality.
            if !self.refactor() {
                return Outcome::IterationLimit;
            }
            // Roundoff can leave degenerate basics slightly negative; the
            // duality report re-checks feasibility at the caller's tolerance.
            let floor = -1e-7 * (1.0 + self.xb.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
            if self.entering(false, false).is_none() && self.xb.iter().all(|&x| x >= floor) {
                return Outcome::Optimal;
            }
        }
        Outcome::IterationLimit
    }

    fn drive_out_artificials(&mut self) {
        let mut col = vec![0.0; self.m];
        for r in 0..self.m {
            let j = self.basis[r];
            if !self.is_artificial(j) {
                continue;
            }
            let row: Vec<f64> = (0..self.m).map(|k| self.binv[(r, k)]).collect();
            let candidate = (0..self.n + self.m)
                .filter(|&q| !self.is_basic[q])
                .map(|q| (q, self.dot_col(&row, q)))
                .filter(|(_, v)| v.abs() > 1e-7)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
            if let Some((q, _)) = candidate {
                self.column(q, &mut col);
                let u = self.ftran(&col);
                self.pivot(r, q, &u);
            }
        }
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|k| self.binv[(i, k)] * col[k]).sum()).collect()
    }

    /// Entering column, or `None` at optimality.
    fn entering(&self, phase1: bool, bland: bool) -> Option<usize> {
        let y = self.simplex_multipliers(phase1);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n + 2 * self.m {
            if self.is_basic[j] || self.barred[j] || (!phase1 && self.is_artificial(j)) {
                continue;
            }
            let d = self.phase_cost(j, phase1) - self.dot_col(&y, j);
            if d < -OPT_TOL {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn iterate(&mut self, phase1: bool) -> Outcome {
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        let mut col = vec![0.0; self.m];
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            let bland = degenerate_run > DEGENERATE_SWITCH;
            let Some(q) = self.entering(phase1, bland) else {
                return Outcome::Optimal;
            };
            self.column(q, &mut col);
            let u = self.ftran(&col);
            // Ratio test; ties broken by the larger pivot, or in Bland mode
            // by the smaller basic variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if u[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / u[i];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            let better = if tie {
                                if bland { self.basis[i] < self.basis[li] } else { u[i] > u[li] }
                            } else {
                                ratio < lr
                            };
                            if better { Some((i, ratio)) } else { Some((li, lr)) }
                        }
                    };
                }
            }
            let Some((r, theta)) = leave else {
                return Outcome::Unbounded;
            };
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &u);
            self.iterations += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                since_refactor = 0;
                if !self.refactor() {
                    return Outcome::IterationLimit;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, u: &[f64]) {
        let m = self.m;
        let ur = u[r];
        let theta = self.xb[r] / ur;
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * u[i];
            }
        }
        self.xb[r] = theta;
        for k in 0..m {
            self.binv[(r, k)] /= ur;
        }
        for i in 0..m {
            if i != r && u[i] != 0.0 {
                let f = u[i];
                for k in 0..m {
                    let v = self.binv[(r, k)];
                    self.binv[(i, k)] -= f * v;
                }
            }
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.basis[r] = q;
        self.is_basic[q] = true;
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[r].max(0.0) * self.col_scale[j];
            }
        }
        x
    }

    fn dual(&self) -> Vec<f64> {
        let y = self.simplex_multipliers(false);
        (0..self.m).map(|i| (self.sigma[i] * self.row_scale[i] * y[i]).max(0.0)).collect()
    }
}
