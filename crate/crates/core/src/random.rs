//! Seeded band-limited test fields.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::field::Field;
use crate::grid::SpacetimeGrid;

fn default_count() -> usize {
    16
}

fn default_modes() -> usize {
    4
}

fn default_time_frequency() -> usize {
    2
}

/// A seeded family of real fields
/// `f(t,x) = m·g(t) + Σ_j A_j (1 + B_j cos(π ω_j t/T)) cos(ξ_j·x + φ_j)`
/// with wavenumbers `|k| ≤ max_mode` (default `N/4`), optionally multiplied
/// by a smooth spatial bump supported in `|x|_∞ < L/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldFamily {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_mode: Option<usize>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_time_frequency")]
    pub time_frequency: usize,
    /// amplitude of the spatially constant component
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub localized: bool,
}

impl Default for FieldFamily {
    fn default() -> Self {
        Self {
            count: default_count(),
            seed: 0,
            max_mode: None,
            modes: default_modes(),
            time_frequency: default_time_frequency(),
            mean: 0.0,
            localized: false,
        }
    }
}

struct Mode {
    k: [i64; 2],
    amp: f64,
    beat: f64,
    omega: f64,
    phase: f64,
}

impl FieldFamily {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            ..Self::default()
        }
    }

    pub fn with_max_mode(mut self, k: usize) -> Self {
        self.max_mode = Some(k);
        self
    }

    pub fn with_mean(mut self, m: f64) -> Self {
        self.mean = m;
        self
    }

    pub fn localized(mut self, yes: bool) -> Self {
        self.localized = yes;
        self
    }

    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn generate(&self, grid: &SpacetimeGrid) -> Result<Vec<Field>> {
        if self.count == 0 {
            return input("field family must be nonempty");
        }
        let kmax = self.max_mode.unwrap_or(grid.n() / 4).min(grid.n() / 2 - 1) as i64;
        if self.modes > 0 && kmax < 1 {
            return input("band limit leaves no nonzero mode");
        }
        Ok((0..self.count)
            .map(|i| self.member(grid, i, kmax))
            .collect())
    }

    fn member(&self, grid: &SpacetimeGrid, index: usize, kmax: i64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64 + 1);
        let d = grid.d();
        let modes: Vec<Mode> = (0..self.modes)
            .map(|_| {
                let mut k = [0i64; 2];
                loop {
                    for kk in k.iter_mut().take(d) {
                        *kk = rng.gen_range(-kmax..=kmax);
                    }
                    if k.iter().any(|&v| v != 0) {
                        break;
                    }
                }
                Mode {
                    k,
                    amp: rng.gen_range(0.5..1.5),
                    beat: rng.gen_range(-0.5..0.5),
                    omega: rng.gen_range(0..=self.time_frequency) as f64,
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        let drift = rng.gen_range(-0.3..0.3);
        let l = grid.half_width();
        let horizon = grid.horizon();
        let mean = self.mean;
        let localized = self.localized;
        Field::from_fn(grid, |t, x| {
            let tau = std::f64::consts::PI * t / horizon;
            let mut v = mean * (1.0 + drift * tau.cos());
            for m in &modes {
                let arg: f64 = x
                    .iter()
                    .zip(&m.k)
                    .map(|(xi, &k)| std::f64::consts::PI / l * k as f64 * xi)
                    .sum();
                v += m.amp * (1.0 + m.beat * (m.omega * tau).cos()) * (arg + m.phase).cos();
            }
            if localized {
                v *= x
                    .iter()
                    .map(|xi| {
                        let r = xi / (0.5 * l);
                        if r.abs() < 1.0 {
                            (0.5 * std::f64::consts::PI * r).cos().powi(2)
                        } else {
                            0.0
                        }
                    })
                    .product::<f64>();
            }
            Complex64::new(v, 0.0)
        })
    }
}

/// A single Fourier mode `e^{iξ·x}` times a time profile.
pub fn single_mode<F>(grid: &SpacetimeGrid, k: [i64; 2], profile: F) -> Field
where
    F: Fn(f64) -> Complex64,
{
    let l = grid.half_width();
    Field::from_fn(grid, |t, x| {
        let arg: f64 = x
            .iter()
            .zip(&k)
            .map(|(xi, &kk)| std::f64::consts::PI / l * kk as f64 * xi)
            .sum();
        profile(t) * Complex64::new(0.0, arg).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Spectral;

    #[test]
    fn deterministic_and_band_limited() {
        let g = SpacetimeGrid::new(1, 4.0, 32, 1.0, 8).unwrap();
        let fam = FieldFamily::new(3, 7);
        let a = fam.generate(&g).unwrap();
        let b = fam.generate(&g).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        let sp = Spectral::new(32, 1);
        let mut v = a[2].slice(3).to_vec();
        sp.forward(&mut v);
        let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (i, c) in v.iter().enumerate() {
            if g.wavenumber(i).abs() > 8 {
                assert!(c.norm() < 1e-10 * peak);
            }
        }
    }

    #[test]
    fn localized_support() {
        let g = SpacetimeGrid::new(1, 4.0, 32, 1.0, 4).unwrap();
        let f = &FieldFamily::new(1, 1).localized(true).generate(&g).unwrap()[0];
        for k in 0..f.levels() {
            for (j, v) in f.slice(k).iter().enumerate() {
                if g.coord(j).abs() >= 2.0 {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }
}
