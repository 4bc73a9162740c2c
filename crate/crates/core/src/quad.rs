//! Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point rule on [−1, 1], by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

pub(crate) fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(20))
}

/// Fixed 20-point rule on [a, b].
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * x
        .iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(c + h * xi))
        .sum::<f64>()
}

/// Adaptive bisection on the 20-point rule. A piece is accepted when its two
/// halves agree with it to `rel` times the magnitude of the first estimate
/// over the whole interval.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    let whole = fixed(f, a, b);
    let tol = rel * whole.abs().max(f64::MIN_POSITIVE);
    rec(f, a, b, whole, tol, 0)
}

fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let l = fixed(f, a, m);
    let r = fixed(f, m, b);
    let s = l + r;
    if depth >= 60 || (s - whole).abs() <= tol {
        return s;
    }
    rec(f, a, m, l, tol, depth + 1) + rec(f, m, b, r, tol, depth + 1)
}

/// Tensor 20-point rule over a box.
pub fn tensor_fixed<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64]) -> f64 {
    let (x, w) = gl20();
    let n = lo.len();
    let mut idx = vec![0usize; n];
    let mut pt = vec![0.0; n];
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).product();
    let mut acc = 0.0;
    loop {
        let mut wt = 1.0;
        for k in 0..n {
            pt[k] = 0.5 * (lo[k] + hi[k]) + 0.5 * (hi[k] - lo[k]) * x[idx[k]];
            wt *= w[idx[k]];
        }
        acc += wt * f(&pt);
        let mut k = 0;
        loop {
            if k == n {
                return acc * vol;
            }
            idx[k] += 1;
            if idx[k] < x.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn tensor_rule_on_box() {
        let v = tensor_fixed(&|p: &[f64]| p[0] * p[0] * p[1], &[0.0, 0.0], &[1.0, 2.0]);
        assert!((v - 2.0 / 3.0).abs() < 1e-13);
    }
}
