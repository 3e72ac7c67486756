//! Sparse multivariate polynomials with real coefficients, and square
//! polynomial systems.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// `Σ c_e x^e` over exponent vectors `e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    /// From `(exponents, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms(nvars: usize, terms: &[(&[u32], f64)]) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector has the wrong length");
            *p.terms.entry(e.to_vec()).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    fn monomial(e: &[u32], x: &[f64]) -> f64 {
        e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * Self::monomial(e, x)).sum()
    }

    /// `Σ |c_e x^e|`, the scale against which a value of this polynomial is
    /// small or not.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| (c * Self::monomial(e, x)).abs()).sum()
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut d = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = e.clone();
                e2[var] -= 1;
                *d.terms.entry(e2).or_insert(0.0) += c * e[var] as f64;
            }
        }
        d.terms.retain(|_, c| *c != 0.0);
        d
    }

    /// The polynomial with variables `i` and `j` exchanged.
    pub fn swap_vars(&self, i: usize, j: usize) -> Self {
        let mut s = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.swap(i, j);
            s.terms.insert(e2, *c);
        }
        s
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    /// Polynomial with every coefficient replaced by its absolute value;
    /// equals [`Polynomial::magnitude`] on the positive orthant.
    pub fn abs_coefficients(&self) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c.abs())).collect() }
    }
}

/// Square system `F(x) = 0` with a search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySystem {
    pub equations: Vec<Polynomial>,
    pub variables: Vec<String>,
    pub search_box: Vec<(f64, f64)>,
}

impl PolySystem {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.equations.iter().map(|p| p.eval(x)).collect()
    }

    /// `Fᵢ(x)/Σ|monomials of Fᵢ at x|`, each entry in `[−1, 1]`.
    pub fn normalized(&self, x: &[f64]) -> Vec<f64> {
        self.equations
            .iter()
            .map(|p| {
                let m = p.magnitude(x);
                if m > 0.0 { p.eval(x) / m } else { 0.0 }
            })
            .collect()
    }

    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.equations.iter().map(|p| (0..p.nvars).map(|v| p.derivative(v)).collect()).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.search_box).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative() {
        // x²y − 3y + 2
        let p = Polynomial::from_terms(2, &[(&[2, 1], 1.0), (&[0, 1], -3.0), (&[0, 0], 2.0)]);
        assert_eq!(p.eval(&[2.0, 3.0]), 12.0 - 9.0 + 2.0);
        let dx = p.derivative(0);
        assert_eq!(dx.eval(&[2.0, 3.0]), 12.0);
        let dy = p.derivative(1);
        assert_eq!(dy.eval(&[2.0, 3.0]), 1.0);
        assert_eq!(p.magnitude(&[2.0, 3.0]), 12.0 + 9.0 + 2.0);
        assert_eq!(p.degree_in(0), 2);
        assert_eq!(p.swap_vars(0, 1).eval(&[3.0, 2.0]), p.eval(&[2.0, 3.0]));
    }

    #[test]
    fn cancelling_terms_vanish() {
        let p = Polynomial::from_terms(1, &[(&[1], 1.0), (&[1], -1.0)]);
        assert!(p.terms.is_empty());
    }
}
