//! Periodic space grid on [−L, L)^d times a uniform time grid on [0, T].

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::symbols::Symbol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct SpacetimeGrid {
    d: usize,
    half_width: f64,
    n: usize,
    horizon: f64,
    nt: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    d: usize,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "Nt")]
    nt: usize,
}

impl TryFrom<GridRepr> for SpacetimeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        SpacetimeGrid::new(r.d, r.l, r.n, r.t, r.nt)
    }
}

impl From<SpacetimeGrid> for GridRepr {
    fn from(g: SpacetimeGrid) -> Self {
        GridRepr {
            d: g.d,
            l: g.half_width,
            n: g.n,
            t: g.horizon,
            nt: g.nt,
        }
    }
}

impl SpacetimeGrid {
    pub fn new(d: usize, half_width: f64, n: usize, horizon: f64, nt: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return input(format!("grid dimension must be 1 or 2, got {d}"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return input("grid half-width L must be positive");
        }
        if n < 2 || !n.is_power_of_two() {
            return input(format!("N must be a power of two ≥ 2, got {n}"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return input("grid horizon T must be positive");
        }
        if nt == 0 {
            return input("Nt must be positive");
        }
        Ok(Self {
            d,
            half_width,
            n,
            horizon,
            nt,
        })
    }

    /// Desk-scale defaults: d=1 N=1024 Nt=256 L=32; d=2 N=128 Nt=128 L=16.
    pub fn default_for(d: usize, horizon: f64) -> Result<Self> {
        match d {
            1 => Self::new(1, 32.0, 1024, horizon, 256),
            2 => Self::new(2, 16.0, 128, horizon, 128),
            _ => input("grid dimension must be 1 or 2"),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    /// Points per time slice, `N^d`.
    pub fn slice_len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Number of stored time levels, `Nt + 1` (t = 0, Δt, …, T).
    pub fn time_levels(&self) -> usize {
        self.nt + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.nt {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Same extent with `N` and `Nt` doubled.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            nt: 2 * self.nt,
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: f64, nt: usize) -> Result<Self> {
        Self::new(self.d, self.half_width, self.n, horizon, nt)
    }

    pub fn with_nt(&self, nt: usize) -> Result<Self> {
        Self::new(self.d, self.half_width, self.n, self.horizon, nt)
    }

    /// Coordinate of node `j` on one axis: `−L + jΔx`.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    /// Signed wavenumber of FFT index `k`.
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// ξ for FFT index `k` on one axis: `(π/L)·k̃`.
    pub fn xi_1d(&self, k: usize) -> f64 {
        std::f64::consts::PI / self.half_width * self.wavenumber(k) as f64
    }

    /// Multi-index of flat position `idx` (last axis fastest).
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.unflatten(idx);
        (0..self.d).map(|k| self.coord(m[k])).collect()
    }

    pub fn xi(&self, idx: usize) -> Vec<f64> {
        let m = self.unflatten(idx);
        (0..self.d).map(|k| self.xi_1d(m[k])).collect()
    }

    /// Frequency vectors for every flat index.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.slice_len()).map(|i| self.xi(i)).collect()
    }

    /// `(−1)^{Σ k}` in FFT index order.
    pub fn parity(&self, idx: usize) -> f64 {
        let m = self.unflatten(idx);
        let s: usize = m[..self.d].iter().sum();
        if s.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Largest |ξ| on any axis.
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI / self.half_width * (self.n / 2) as f64
    }

    /// Checks that every track breakpoint inside [0, T] is a grid time and
    /// that the track covers [0, T].
    pub fn check_alignment(&self, symbol: &Symbol) -> Result<()> {
        let bps = symbol.breakpoints();
        if bps.is_empty() {
            return Ok(());
        }
        let last = *bps.last().unwrap();
        if last < self.horizon * (1.0 - 1e-12) {
            return input(format!(
                "symbol track ends at {last} before the grid horizon {}",
                self.horizon
            ));
        }
        let dt = self.dt();
        for &b in bps {
            if b > self.horizon * (1.0 + 1e-12) {
                continue;
            }
            let k = b / dt;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return input(format!(
                    "track breakpoint {b} is not a multiple of Δt = {dt}"
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::PiecewiseConstantTrack;

    #[test]
    fn frequencies_and_spacing() {
        let g = SpacetimeGrid::new(1, 4.0, 8, 1.0, 4).unwrap();
        assert_eq!(g.dx(), 1.0);
        let w: Vec<i64> = (0..8).map(|k| g.wavenumber(k)).collect();
        assert_eq!(w, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.coord(0), -4.0);
        assert!((g.xi_1d(1) - std::f64::consts::PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn json_uses_upper_case_names() {
        let g: SpacetimeGrid =
            serde_json::from_str(r#"{"d":2,"L":16,"N":128,"T":1,"Nt":128}"#).unwrap();
        assert_eq!(g.slice_len(), 128 * 128);
        assert!(
            serde_json::from_str::<SpacetimeGrid>(r#"{"d":1,"L":1,"N":100,"T":1,"Nt":8}"#).is_err()
        );
    }

    #[test]
    fn alignment() {
        let tr = PiecewiseConstantTrack::new(vec![0.0, 0.25, 1.0], vec![1.0, 2.0]).unwrap();
        let s = Symbol::time_modulated(2.0, tr).unwrap();
        let g = SpacetimeGrid::new(1, 4.0, 8, 1.0, 8).unwrap();
        assert!(g.check_alignment(&s).is_ok());
        let g = SpacetimeGrid::new(1, 4.0, 8, 1.0, 6).unwrap();
        assert!(g.check_alignment(&s).is_err());
    }
}
