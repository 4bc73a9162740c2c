//! Dyadic parabolic boxes `[i₀2^{−nγ}, (i₀+1)2^{−nγ}) × ∏[i_k 2^{−n}, (i_k+1)2^{−n})`.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicBox {
    pub level: i32,
    /// `(i₀, i₁, …, i_d)`; the first index is the time index.
    pub indices: Vec<i64>,
    pub gamma: f64,
}

impl DyadicBox {
    pub fn new(level: i32, indices: Vec<i64>, gamma: f64) -> Result<Self> {
        if indices.len() < 2 {
            return input("a dyadic box needs a time index and at least one space index");
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return input("gamma must be positive");
        }
        Ok(Self {
            level,
            indices,
            gamma,
        })
    }

    /// The level-`n` box containing `(t, x)`.
    pub fn containing(level: i32, gamma: f64, t: f64, x: &[f64]) -> Self {
        let tl = (-(level as f64) * gamma).exp2();
        let sl = (-(level as f64)).exp2();
        let mut indices = vec![(t / tl).floor() as i64];
        indices.extend(x.iter().map(|v| (v / sl).floor() as i64));
        Self {
            level,
            indices,
            gamma,
        }
    }

    pub fn d(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn time_length(&self) -> f64 {
        (-(self.level as f64) * self.gamma).exp2()
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn time_interval(&self) -> (f64, f64) {
        let l = self.time_length();
        let t0 = self.indices[0] as f64 * l;
        (t0, t0 + l)
    }

    /// Lower spatial corner.
    pub fn corner(&self) -> Vec<f64> {
        let h = self.side();
        self.indices[1..].iter().map(|&i| i as f64 * h).collect()
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        let (a, b) = self.time_interval();
        let h = self.side();
        t >= a
            && t < b
            && self
                .corner()
                .iter()
                .zip(x)
                .all(|(c, v)| *v >= *c && *v < c + h)
    }

    pub fn volume(&self) -> f64 {
        self.time_length() * self.side().powi(self.d() as i32)
    }

    pub fn parent(&self) -> Self {
        Self {
            level: self.level - 1,
            indices: self
                .indices
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    if k == 0 {
                        // time index of the coarser box containing the start
                        let t = i as f64 * self.time_length();
                        (t / (-((self.level - 1) as f64) * self.gamma).exp2()).floor() as i64
                    } else {
                        i.div_euclid(2)
                    }
                })
                .collect(),
            gamma: self.gamma,
        }
    }

    /// Enlarged closed set used off-box in the kernel-difference integral:
    /// time `[t₀ − ℓ, t₀ + 2ℓ]` and the closed ball of radius `2^{−(n−1)}√d`
    /// about the lower spatial corner.
    pub fn enlarged(&self) -> EnlargedBox {
        let l = self.time_length();
        let (t0, _) = self.time_interval();
        EnlargedBox {
            t_lo: t0 - l,
            t_hi: t0 + 2.0 * l,
            center: self.corner(),
            radius: 2.0 * self.side() * (self.d() as f64).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnlargedBox {
    pub t_lo: f64,
    pub t_hi: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl EnlargedBox {
    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        t >= self.t_lo && t <= self.t_hi && r2 <= self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_volume_ratio() {
        let b = DyadicBox::new(3, vec![5, -3], 2.0).unwrap();
        let p = b.parent();
        assert_eq!(p.level, 2);
        assert_eq!(p.indices, vec![1, -2]);
        assert_eq!(p.volume() / b.volume(), 8.0);
        let (a, z) = b.time_interval();
        assert!(p.contains(a, &b.corner()));
        assert!(p.contains(0.5 * (a + z), &b.corner()));
    }

    #[test]
    fn enlarged_contains_box() {
        let b = DyadicBox::new(3, vec![2, 1], 2.0).unwrap();
        let e = b.enlarged();
        let (a, z) = b.time_interval();
        let c = b.corner();
        for t in [a, 0.5 * (a + z), z] {
            for x in [c[0], c[0] + b.side()] {
                assert!(e.contains(t, &[x]));
            }
        }
    }
}
