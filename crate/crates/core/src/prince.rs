//! Gravity felt by an observer on the boundary of a planar domain that is
//! star-shaped at the observer, and the disk as maximizer at fixed area.
//!
//! The domain is given by its chord function `L(α)`, `α ∈ [−π/2, π/2]`
//! measured from the inward normal. Gravity is `(1/2π) ∫ L cos α dα` and
//! area is `∫ L²/2 dα`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad;

pub const PRINCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum StarDomain {
    /// Disk of radius `r`.
    Disk { r: f64 },
    /// Ellipse with semi-axes `a` (towards the observer) and `b`, observed
    /// from an end of the `a`-axis.
    Ellipse { a: f64, b: f64 },
    /// Square of the given side, observed from the midpoint of a side.
    Square { side: f64 },
    /// Piecewise-linear `L` through `(alpha[i], ell[i])`; zero outside.
    Custom { alpha: Vec<f64>, ell: Vec<f64> },
}

impl StarDomain {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Disk { r } if !(*r >= 0.0) => domain("disk radius must be nonnegative"),
            Self::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0) => domain("ellipse axes must be positive"),
            Self::Square { side } if !(*side >= 0.0) => domain("square side must be nonnegative"),
            Self::Custom { alpha, ell } => {
                if alpha.len() != ell.len() || alpha.len() < 2 {
                    return domain("custom table needs at least two (alpha, L) rows");
                }
                if alpha.windows(2).any(|w| !(w[0] < w[1])) {
                    return domain("alpha must be strictly increasing");
                }
                if alpha[0] < -FRAC_PI_2 - 1e-12 || alpha[alpha.len() - 1] > FRAC_PI_2 + 1e-12 {
                    return domain("alpha must lie in [-pi/2, pi/2]");
                }
                if ell.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                    return domain("L must be finite and nonnegative");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `L(α)`.
    pub fn chord(&self, alpha: f64) -> f64 {
        let (s, c) = alpha.sin_cos();
        match self {
            Self::Disk { r } => 2.0 * r * c.max(0.0),
            Self::Ellipse { a, b } => {
                let den = c * c / (a * a) + s * s / (b * b);
                (2.0 * c.max(0.0) / a) / den
            }
            Self::Square { side } => {
                let up = if c > 0.0 { side / c } else { f64::INFINITY };
                let across = if s != 0.0 { 0.5 * side / s.abs() } else { f64::INFINITY };
                up.min(across)
            }
            Self::Custom { alpha: xs, ell: ys } => {
                if alpha < xs[0] || alpha > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&x| x <= alpha).clamp(1, xs.len() - 1);
                let w = (alpha - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + w * (ys[i] - ys[i - 1])
            }
        }
    }

    /// Points where `L` has a kink.
    fn breaks(&self) -> Vec<f64> {
        let mut b = vec![-FRAC_PI_2];
        match self {
            Self::Square { .. } => {
                let k = 0.5f64.atan();
                b.extend([-k, k]);
            }
            Self::Custom { alpha, .. } => b.extend(alpha.iter().copied().filter(|a| a.abs() < FRAC_PI_2)),
            _ => {}
        }
        b.push(FRAC_PI_2);
        b
    }

    /// The domain dilated by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            Self::Disk { r } => Self::Disk { r: r * lambda },
            Self::Ellipse { a, b } => Self::Ellipse { a: a * lambda, b: b * lambda },
            Self::Square { side } => Self::Square { side: side * lambda },
            Self::Custom { alpha, ell } => {
                Self::Custom { alpha: alpha.clone(), ell: ell.iter().map(|l| l * lambda).collect() }
            }
        }
    }

    /// Reads an `alpha,L` table with a header row.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let (mut alpha, mut ell) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
            let (a, l) = rec.map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })?;
            alpha.push(a);
            ell.push(l);
        }
        let d = Self::Custom { alpha, ell };
        d.validate()?;
        Ok(d)
    }

    fn integral(&self, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
        self.validate()?;
        let q = quad::integrate_pieces(|a| f(a, self.chord(a)), &self.breaks(), PRINCE_TOL * 1e-2, PRINCE_TOL);
        if !q.converged {
            return Err(Error::Domain("chord-function quadrature did not converge".into()));
        }
        Ok(q.value)
    }
}

/// `(1/2π) ∫ L(α) cos α dα`.
pub fn gravity(d: &StarDomain) -> Result<f64> {
    Ok(d.integral(|a, l| l * a.cos())? / (2.0 * PI))
}

/// `∫ L(α)²/2 dα`.
pub fn area(d: &StarDomain) -> Result<f64> {
    d.integral(|_, l| 0.5 * l * l)
}

/// Gravity at the boundary of the disk of area `v`: `√(v/π)/2`.
pub fn disk_gravity(v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return domain(format!("area must be nonnegative, got {v}"));
    }
    Ok(0.5 * (v / PI).sqrt())
}

/// `disk_gravity(area) − gravity`; nonnegative, zero for the disk.
pub fn verify_pp(d: &StarDomain) -> Result<f64> {
    Ok(disk_gravity(area(d)?)? - gravity(d)?)
}

/// `(a/2)ℓ² + cos²α/(2a) − ℓ cos α = (aℓ − cos α)²/(2a)`.
pub fn dual_gap(a: f64, alpha: f64, ell: f64) -> Result<f64> {
    if !(a > 0.0) {
        return domain(format!("dual coefficient must be positive, got {a}"));
    }
    // Evaluated as the square so the sign is exact.
    let c = alpha.cos();
    Ok((a * ell - c).powi(2) / (2.0 * a))
}

/// Perimeter lower bound `2√(πV)`.
pub fn weil_bound(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return domain(format!("volume must be positive, got {v}"));
    }
    Ok(2.0 * (PI * v).sqrt())
}

/// The weak-duality chain
/// `gravity ≤ (1/2π)∫((a/2)L² + cos²α/(2a)) dα = (1/2π)(a·area + π/(4a))`
/// with `a = 1/(2r)`, `r` the radius of the disk of the same area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualChain {
    pub a: f64,
    pub gravity: f64,
    pub pointwise_bound: f64,
    pub dual_value: f64,
    pub disk_gravity: f64,
}

pub fn dual_chain(d: &StarDomain) -> Result<DualChain> {
    let v = area(d)?;
    if !(v > 0.0) {
        return domain("dual chain needs positive area");
    }
    let a = 1.0 / (2.0 * (v / PI).sqrt());
    let pointwise_bound = d.integral(|al, l| 0.5 * a * l * l + al.cos().powi(2) / (2.0 * a))? / (2.0 * PI);
    Ok(DualChain {
        a,
        gravity: gravity(d)?,
        pointwise_bound,
        dual_value: (a * v + PI / (4.0 * a)) / (2.0 * PI),
        disk_gravity: disk_gravity(v)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_values() {
        for r in [0.5, 1.0, 3.0] {
            let d = StarDomain::Disk { r };
            assert!((gravity(&d).unwrap() - r / 2.0).abs() <= 1e-10);
            assert!((area(&d).unwrap() - PI * r * r).abs() <= 1e-10 * r * r);
            assert!(verify_pp(&d).unwrap().abs() <= 1e-10);
            let c = dual_chain(&d).unwrap();
            assert!((c.gravity - c.dual_value).abs() <= 1e-10);
            assert!((c.pointwise_bound - c.dual_value).abs() <= 1e-10);
            assert!((weil_bound(area(&d).unwrap()).unwrap() - 2.0 * PI * r).abs() <= 1e-9);
        }
        assert_eq!(gravity(&StarDomain::Disk { r: 0.0 }).unwrap(), 0.0);
        assert_eq!(area(&StarDomain::Disk { r: 0.0 }).unwrap(), 0.0);
    }

    #[test]
    fn disk_gravity_values() {
        assert!((disk_gravity(PI).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(disk_gravity(0.0).unwrap(), 0.0);
        assert!((disk_gravity(4.0 * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((weil_bound(PI).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((weil_bound(1.0).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn square_and_ellipse() {
        let sq = StarDomain::Square { side: 1.0 };
        assert!((area(&sq).unwrap() - 1.0).abs() <= 1e-10);
        let g = gravity(&sq).unwrap();
        assert!(g < 0.2821);
        // 2π·gravity = 2∫₀^k dα + ∫_k^{π/2} cot α dα·2·(1/2), tan k = 1/2.
        let want = (2.0 * 0.5f64.atan() + 0.5 * 5f64.ln()) / (2.0 * PI);
        assert!((g - want).abs() <= 1e-10, "{g} {want}");
        assert!(verify_pp(&sq).unwrap() > 0.0);

        let el = StarDomain::Ellipse { a: 2.0, b: 0.5 };
        assert!((area(&el).unwrap() - PI).abs() <= 1e-9);
        assert!(verify_pp(&el).unwrap() > 0.0);
        assert!((StarDomain::Ellipse { a: 1.0, b: 1.0 }.chord(0.3) - 2.0 * 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn dual_gap_values() {
        assert_eq!(dual_gap(0.5, 0.0, 2.0).unwrap(), 0.0);
        let a: f64 = 0.7;
        assert!(dual_gap(a, 0.4, 0.4f64.cos() / a).unwrap().abs() < 1e-15);
        assert!((dual_gap(1.0, PI / 3.0, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(dual_gap(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn custom_table() {
        let n = 201;
        let alpha: Vec<f64> = (0..n).map(|i| -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64).collect();
        let ell: Vec<f64> = alpha.iter().map(|a| 2.0 * a.cos().max(0.0)).collect();
        let d = StarDomain::Custom { alpha, ell };
        assert!((gravity(&d).unwrap() - 0.5).abs() < 1e-4);
        let csv_text = "alpha,L\n-1.0,0.5\n0.0,1.0\n1.0,0.5\n";
        let c = StarDomain::read_csv(csv_text.as_bytes()).unwrap();
        assert_eq!(c.chord(-0.5), 0.75);
        assert_eq!(c.chord(1.2), 0.0);
        assert!(StarDomain::read_csv("alpha,L\n0.0,1.0\n-1.0,1.0\n".as_bytes()).is_err());
        assert!(StarDomain::read_csv("alpha,L\n0.0,x\n".as_bytes()).is_err());
    }
}
