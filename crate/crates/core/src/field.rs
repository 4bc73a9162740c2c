//! Complex samples of a function on a space-time grid or one time slice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::grid::SpacetimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "layout")]
pub enum Layout {
    /// `Nt + 1` time levels.
    Spacetime,
    /// A single slice at time `t`.
    Slice { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: SpacetimeGrid,
    layout: Layout,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &SpacetimeGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.time_levels() * grid.slice_len()],
            grid: grid.clone(),
            layout: Layout::Spacetime,
        }
    }

    pub fn slice_zeros(grid: &SpacetimeGrid, t: f64) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.slice_len()],
            grid: grid.clone(),
            layout: Layout::Slice { t },
        }
    }

    pub fn from_values(
        grid: &SpacetimeGrid,
        layout: Layout,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let levels = match layout {
            Layout::Spacetime => grid.time_levels(),
            Layout::Slice { .. } => 1,
        };
        if values.len() != levels * grid.slice_len() {
            return input(format!(
                "field has {} values, grid needs {}",
                values.len(),
                levels * grid.slice_len()
            ));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return input("field values must be finite");
        }
        Ok(Self {
            grid: grid.clone(),
            layout,
            values,
        })
    }

    /// Samples `f(t, x)` at every grid node.
    pub fn from_fn<F>(grid: &SpacetimeGrid, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Complex64,
    {
        let m = grid.slice_len();
        let mut values = Vec::with_capacity(grid.time_levels() * m);
        for k in 0..grid.time_levels() {
            let t = grid.time(k);
            for i in 0..m {
                values.push(f(t, &grid.point(i)));
            }
        }
        Self {
            grid: grid.clone(),
            layout: Layout::Spacetime,
            values,
        }
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn levels(&self) -> usize {
        self.values.len() / self.grid.slice_len()
    }

    /// Time of level `k`.
    pub fn time(&self, k: usize) -> f64 {
        match self.layout {
            Layout::Spacetime => self.grid.time(k),
            Layout::Slice { t } => t,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn slice(&self, k: usize) -> &[Complex64] {
        let m = self.grid.slice_len();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [Complex64] {
        let m = self.grid.slice_len();
        &mut self.values[k * m..(k + 1) * m]
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Field, b: Complex64) -> Result<Self> {
        if self.grid != other.grid || self.layout != other.layout {
            return input("fields live on different grids");
        }
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(x, y)| *x = a * *x + b * y);
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Real parts of the values.
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_layout() {
        let g = SpacetimeGrid::new(1, 1.0, 8, 1.0, 4).unwrap();
        let f = Field::from_fn(&g, |t, x| Complex64::new(t + x[0], 0.0));
        assert_eq!(f.levels(), 5);
        assert_eq!(f.slice(4)[0].re, 1.0 - 1.0);
        assert!(Field::from_values(&g, Layout::Spacetime, vec![Complex64::default(); 3]).is_err());
    }
}
