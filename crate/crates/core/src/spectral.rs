//! Discrete Fourier transforms on the spatial grid (rustfft backed).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse transforms for `N^d` complex samples, row-major.
/// The inverse is normalized by `N^d`.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("d", &self.d)
            .finish()
    }
}

impl Spectral {
    pub fn new(n: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            d,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        let n = self.n;
        // rows (last axis) are contiguous
        fft.process(data);
        if self.d == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.fwd, data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inv, data);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// `IDFT(m · DFT(data))`.
    pub fn apply_multiplier(&self, data: &mut [Complex64], m: &[Complex64]) {
        self.forward(data);
        data.iter_mut().zip(m).for_each(|(v, w)| *v *= w);
        self.inverse(data);
    }
}
