//! Closed-form ξ-derivatives of the anisotropic power profile
//! `s(ξ)^μ` with `s = Σ w_i ξ_i²`.
//!
//! Every derivative is kept as a finite sum `Σ_j P_j(ξ) s^{μ−j}` with
//! polynomial `P_j`, which is closed under `∂/∂ξ_i`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

type Monomial = Vec<u32>;

#[derive(Clone, Debug, Default)]
struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    fn one(dim: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; dim], 1.0);
        Self { terms }
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(m).or_insert(0.0);
        *e += c;
    }

    fn add_scaled(&mut self, other: &Poly, c: f64) {
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v * c);
        }
    }

    fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            if m[i] > 0 {
                let mut m2 = m.clone();
                m2[i] -= 1;
                out.add_term(m2, c * m[i] as f64);
            }
        }
        out
    }

    fn times_xi(&self, i: usize, c: f64) -> Poly {
        let mut out = Poly::default();
        for (m, v) in &self.terms {
            let mut m2 = m.clone();
            m2[i] += 1;
            out.add_term(m2, v * c);
        }
        out
    }

    fn eval(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                c * m
                    .iter()
                    .zip(xi)
                    .map(|(&e, &x)| x.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }
}

/// `D^α_ξ (Σ w_i ξ_i²)^{γ/2}` in closed form.
#[derive(Clone, Debug)]
pub struct ProfileDerivative {
    weights: Vec<f64>,
    gamma: f64,
    order: u32,
    /// `(P_j, j)` pairs; the term is `P_j(ξ)·s^{μ−j}`.
    terms: Vec<(Poly, u32)>,
}

impl ProfileDerivative {
    pub fn new(weights: &[f64], gamma: f64, alpha: &[u32]) -> Self {
        let dim = weights.len();
        assert_eq!(dim, alpha.len());
        let mu = 0.5 * gamma;
        let mut terms: BTreeMap<u32, Poly> = BTreeMap::new();
        terms.insert(0, Poly::one(dim));
        for (i, &ai) in alpha.iter().enumerate() {
            for _ in 0..ai {
                let mut next: BTreeMap<u32, Poly> = BTreeMap::new();
                for (&j, p) in &terms {
                    next.entry(j).or_default().add_scaled(&p.derivative(i), 1.0);
                    let c = (mu - j as f64) * 2.0 * weights[i];
                    if c != 0.0 {
                        next.entry(j + 1)
                            .or_default()
                            .add_scaled(&p.times_xi(i, c), 1.0);
                    }
                }
                next.retain(|_, p| !p.is_zero());
                terms = next;
            }
        }
        Self {
            weights: weights.to_vec(),
            gamma,
            order: alpha.iter().sum(),
            terms: terms.into_iter().map(|(j, p)| (p, j)).collect(),
        }
    }

    fn is_polynomial(&self) -> bool {
        let mu = 0.5 * self.gamma;
        mu.fract() == 0.0 && self.terms.iter().all(|(_, j)| (*j as f64) <= mu)
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        let mu = 0.5 * self.gamma;
        let s: f64 = self.weights.iter().zip(xi).map(|(w, x)| w * x * x).sum();
        if self.is_polynomial() {
            return Ok(self
                .terms
                .iter()
                .map(|(p, j)| p.eval(xi) * s.powi((mu as i64 - *j as i64) as i32))
                .sum());
        }
        if s == 0.0 {
            if self.gamma - self.order as f64 > 0.0 {
                return Ok(0.0);
            }
            return Err(Error::Domain(format!(
                "derivative of order {} of a γ={} symbol is singular at ξ=0",
                self.order, self.gamma
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|(p, j)| p.eval(xi) * s.powf(mu - *j as f64))
            .sum())
    }
}

/// All multi-indices of length `dim` with total order at most `n`.
pub fn multi_indices(dim: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[k] = a;
            rec(k + 1, left - a, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, n, &mut cur, &mut out);
    out.sort_by_key(|a| a.iter().sum::<u32>());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_profile_is_polynomial_at_origin() {
        let d = ProfileDerivative::new(&[1.0, 1.0], 2.0, &[2, 0]);
        assert_eq!(d.eval(&[0.0, 0.0]).unwrap(), 2.0);
        let d = ProfileDerivative::new(&[1.0, 1.0], 2.0, &[1, 1]);
        assert_eq!(d.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let d = ProfileDerivative::new(&[1.0], 4.0, &[4]);
        assert_eq!(d.eval(&[0.0]).unwrap(), 24.0);
    }

    #[test]
    fn abs_value_derivative() {
        let d = ProfileDerivative::new(&[1.0], 1.0, &[1]);
        assert!((d.eval(&[2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.eval(&[-2.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(d.eval(&[0.0]).is_err());
        let d0 = ProfileDerivative::new(&[1.0], 1.5, &[1]);
        assert_eq!(d0.eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn multi_index_count() {
        // C(n + d, d)
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(1, 4).len(), 5);
    }
}
