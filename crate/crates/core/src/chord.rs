//! The chord measure `μ_B` of a model ball: every geodesic chord is recorded
//! by its length `ℓ` and the angles `α`, `β` its endpoints make with the
//! inner normal. For a ball the measure lives on the curve
//! `cos α = cos β = T(ℓ)`, and its `α`-marginal is `A_B δⁿ(α) dα`.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::spaceform::{self, BallGeometry, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordAtom {
    pub ell: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Quadrature { nodes: usize },
    MonteCarlo { seed: u64, samples: usize },
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<ChordAtom>,
    pub provenance: Provenance,
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        Self { atoms: Vec::new(), provenance: Provenance::External }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Every mass multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let atoms = self.atoms.iter().map(|a| ChordAtom { mass: a.mass * factor, ..*a }).collect();
        Self { atoms, provenance: self.provenance.clone() }
    }

    /// Swap `α` and `β` in every atom.
    pub fn transposed(&self) -> Self {
        let atoms = self.atoms.iter().map(|a| ChordAtom { alpha: a.beta, beta: a.alpha, ..*a }).collect();
        Self { atoms, provenance: self.provenance.clone() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for a in &self.atoms {
            wr.serialize(a)?;
        }
        if self.atoms.is_empty() {
            wr.write_record(["ell", "alpha", "beta", "mass"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let atoms = rd.deserialize().collect::<std::result::Result<Vec<ChordAtom>, _>>()?;
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass >= 0.0) || !(a.ell >= 0.0) {
                return Err(Error::Parse { line: i + 2, message: "negative mass or length".into() });
            }
        }
        Ok(Self { atoms, provenance: Provenance::External })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Density of the `ℓ`-marginal of `μ_B` at `0 < ℓ < 2r`:
/// `A_B δⁿ(α) |dα/dℓ|` with `cos α = T(ℓ)`.
pub fn ball_chord_density(ball: &BallGeometry, ell: f64) -> Result<f64> {
    let n = ball.params.n;
    let c = ball.chord_t(ell)?;
    let s2 = (1.0 - c * c).max(0.0);
    let dt = chord_t_derivative(ball.params.kappa, ball.radius, ell);
    // δⁿ(α)/sin α = ω_{n−2} sin^{n−3} α cos α.
    let sin_pow = if n == 2 {
        if s2 == 0.0 {
            return Ok(f64::INFINITY);
        }
        1.0 / s2.sqrt()
    } else {
        s2.sqrt().powi(n as i32 - 3)
    };
    Ok(ball.area * spaceform::omega(n - 2) * sin_pow * c * dt)
}

fn chord_t_derivative(kappa: f64, r: f64, ell: f64) -> f64 {
    if kappa > 0.0 {
        let k = kappa.sqrt();
        0.5 * k / ((0.5 * k * ell).cos().powi(2) * (k * r).tan())
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        0.5 * k / ((0.5 * k * ell).cosh().powi(2) * (k * r).tanh())
    } else {
        0.5 / r
    }
}

/// Quadrature discretization of `μ_B` with `nodes` atoms on the chord curve.
///
/// The nodes are Gauss-Legendre in `α` (equivalently, in `ℓ` after the
/// substitution `cos α = T(ℓ)`), which removes the endpoint singularity of
/// the `ℓ`-density in dimension 2.
pub fn discretize_ball_measure(ball: &BallGeometry, nodes: usize) -> Result<DiscreteMeasure> {
    if nodes < 8 {
        return Err(Error::Usage(format!("need at least 8 quadrature nodes, got {nodes}")));
    }
    let rule = GaussLegendre::new(nodes);
    let n = ball.params.n;
    let atoms = rule
        .on_interval(0.0, FRAC_PI_2)
        .map(|(alpha, w)| ChordAtom {
            ell: ball.chord_length(alpha),
            alpha,
            beta: alpha,
            mass: ball.area * spaceform::delta_weight(n, alpha) * w,
        })
        .collect();
    Ok(DiscreteMeasure { atoms, provenance: Provenance::Quadrature { nodes } })
}

/// Monte Carlo sample of `μ_B`: `samples` equal-mass atoms with `α` drawn from
/// the density `∝ δⁿ(α)`. Atom `i` uses its own ChaCha stream, so the output
/// depends only on `(seed, i)`.
pub fn sample_chords(ball: &BallGeometry, samples: usize, seed: u64) -> Result<DiscreteMeasure> {
    if samples == 0 {
        return Err(Error::Usage("need at least one sample".into()));
    }
    let n = ball.params.n;
    let mass = ball.chord_measure_mass() / samples as f64;
    let inv = 1.0 / (n - 1) as f64;
    let atoms = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            // CDF of α is sin^{n−1} α.
            let u: f64 = rng.random();
            let alpha = u.powf(inv).asin();
            ChordAtom { ell: ball.chord_length(alpha), alpha, beta: alpha, mass }
        })
        .collect();
    Ok(DiscreteMeasure { atoms, provenance: Provenance::MonteCarlo { seed, samples } })
}

/// Functionals integrated against a chord measure.
#[derive(Clone, Copy)]
pub enum Functional<'a> {
    /// `s(ℓ)/(cos α cos β)`
    F1,
    /// `(s^↿(ℓ)/2)(1/cos α + 1/cos β)`
    F2,
    /// `s^↿↿(ℓ)`
    F3,
    /// `ℓ`
    F4,
    /// `f(α, β)`
    Custom(&'a (dyn Fn(f64, f64) -> f64 + Sync)),
}

impl Functional<'_> {
    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Self::F1),
            2 => Some(Self::F2),
            3 => Some(Self::F3),
            4 => Some(Self::F4),
            _ => None,
        }
    }

    fn divides_by_cos(&self) -> bool {
        matches!(self, Self::F1 | Self::F2)
    }

    /// Value at one atom; `None` when the functional is infinite there.
    pub fn eval(&self, params: ModelParams, a: &ChordAtom) -> Option<f64> {
        let (ca, cb) = (a.alpha.cos(), a.beta.cos());
        if self.divides_by_cos() && (a.alpha >= FRAC_PI_2 || a.beta >= FRAC_PI_2 || ca <= 0.0 || cb <= 0.0) {
            return None;
        }
        Some(match self {
            Self::F1 => spaceform::candle(params, a.ell) / (ca * cb),
            Self::F2 => 0.5 * spaceform::candle_anti(params, a.ell) * (1.0 / ca + 1.0 / cb),
            Self::F3 => spaceform::candle_anti2(params, a.ell),
            Self::F4 => a.ell,
            Self::Custom(f) => f(a.alpha, a.beta),
        })
    }
}

/// `Σ mass · F(atom)`.
pub fn integrate(measure: &DiscreteMeasure, functional: Functional<'_>, params: ModelParams) -> Result<f64> {
    let mut sum = 0.0;
    for (index, a) in measure.atoms.iter().enumerate() {
        if a.mass == 0.0 {
            continue;
        }
        let v = functional.eval(params, a).ok_or(Error::InfiniteContribution { index })?;
        sum += a.mass * v;
    }
    Ok(sum)
}

/// Estimate and standard error for an equal-mass sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn monte_carlo_estimate(
    measure: &DiscreteMeasure,
    functional: Functional<'_>,
    params: ModelParams,
) -> Result<McEstimate> {
    let n = measure.atoms.len();
    if n < 2 {
        return Err(Error::Usage("a standard error needs at least two atoms".into()));
    }
    let mut values = Vec::with_capacity(n);
    for (index, a) in measure.atoms.iter().enumerate() {
        values.push(a.mass * functional.eval(params, a).ok_or(Error::InfiniteContribution { index })?);
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(McEstimate { value: mean * nf, std_error: (var / nf).sqrt() * nf })
}

/// `∫ ℓ dμ − ω_{n−1} V`.
pub fn santalo_residual(ball: &BallGeometry, measure: &DiscreteMeasure) -> f64 {
    let lhs = integrate(measure, Functional::F4, ball.params).expect("F4 is finite everywhere");
    lhs - santalo_target(ball)
}

pub fn santalo_target(ball: &BallGeometry) -> f64 {
    spaceform::omega(ball.params.n - 1) * ball.volume
}

/// Right-hand side of the `which`-th integral identity: `A²`, `AV`, `V²`.
pub fn croke_target(ball: &BallGeometry, which: usize) -> Result<f64> {
    match which {
        1 => Ok(ball.area * ball.area),
        2 => Ok(ball.area * ball.volume),
        3 => Ok(ball.volume * ball.volume),
        _ => Err(Error::Usage(format!("identity index must be 1, 2 or 3, got {which}"))),
    }
}

/// `∫ F_which dμ − target`; vanishes for the model ball.
pub fn croke_residual(ball: &BallGeometry, measure: &DiscreteMeasure, which: usize) -> Result<f64> {
    let target = croke_target(ball, which)?;
    let f = Functional::from_index(which).expect("checked by croke_target");
    Ok(integrate(measure, f, ball.params)? - target)
}
