//! Piecewise-constant coefficient tracks a(t) on [0, T].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// A function of time that is constant on each `[b_k, b_{k+1})`.
///
/// The last interval is closed on the right so that the track is defined on
/// all of `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrackRepr", into = "TrackRepr")]
pub struct PiecewiseConstantTrack {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrackRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TrackRepr> for PiecewiseConstantTrack {
    type Error = Error;
    fn try_from(r: TrackRepr) -> Result<Self> {
        Self::new(r.breakpoints, r.values)
    }
}

impl From<PiecewiseConstantTrack> for TrackRepr {
    fn from(t: PiecewiseConstantTrack) -> Self {
        TrackRepr {
            breakpoints: t.breakpoints,
            values: t.values,
        }
    }
}

impl PiecewiseConstantTrack {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return input("track needs at least two breakpoints");
        }
        if values.len() + 1 != breakpoints.len() {
            return input(format!(
                "track has {} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints[0] != 0.0 {
            return input("first track breakpoint must be 0");
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return input("track entries must be finite");
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return input("track breakpoints must be strictly increasing");
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn constant(horizon: f64, value: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    /// Equal-length pieces with values drawn uniformly from `[lo, hi]`.
    pub fn seeded(horizon: f64, pieces: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if pieces == 0 || !(horizon > 0.0) || !(lo <= hi) {
            return input("seeded track needs pieces > 0, horizon > 0 and lo <= hi");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let breakpoints = (0..=pieces)
            .map(|k| horizon * k as f64 / pieces as f64)
            .collect();
        let values = (0..pieces)
            .map(|_| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
            .collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn interval_of(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= 0.0 && t <= self.horizon()
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || !self.contains(t) {
            return input(format!("time {t} outside track [0, {}]", self.horizon()));
        }
        Ok(self.values[self.interval_of(t)])
    }

    /// Exact integral over `[s, t]` as the sum of value times overlap length.
    pub fn integral(&self, s: f64, t: f64) -> Result<f64> {
        if !(s.is_finite() && t.is_finite()) || s > t {
            return input(format!("bad integration range [{s}, {t}]"));
        }
        if !self.contains(s) || !self.contains(t) {
            return input(format!(
                "integration range [{s}, {t}] outside track [0, {}]",
                self.horizon()
            ));
        }
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let lo = self.breakpoints[k].max(s);
            let hi = self.breakpoints[k + 1].min(t);
            if hi > lo {
                acc += v * (hi - lo);
            }
        }
        Ok(acc)
    }

    /// Midpoints of every track interval.
    pub fn midpoints(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_is_sum_of_overlaps() {
        let tr = PiecewiseConstantTrack::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(tr.integral(0.0, 2.0).unwrap(), 4.0);
        assert_eq!(tr.integral(0.5, 1.5).unwrap(), 2.0);
        assert_eq!(tr.integral(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn value_lookup_uses_half_open_intervals() {
        let tr = PiecewiseConstantTrack::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(tr.value_at(0.0).unwrap(), 1.0);
        assert_eq!(tr.value_at(1.0).unwrap(), 3.0);
        assert_eq!(tr.value_at(2.0).unwrap(), 3.0);
        assert!(tr.value_at(2.5).is_err());
    }

    #[test]
    fn rejects_malformed_tracks() {
        assert!(PiecewiseConstantTrack::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseConstantTrack::new(vec![0.5, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseConstantTrack::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
        assert!(PiecewiseConstantTrack::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn seeded_tracks_are_reproducible() {
        let a = PiecewiseConstantTrack::seeded(2.0, 8, 1.0, 3.0, 7).unwrap();
        let b = PiecewiseConstantTrack::seeded(2.0, 8, 1.0, 3.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.min() >= 1.0 && a.max() <= 3.0);
    }
}
