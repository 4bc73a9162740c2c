//! Exact means of power functions over boxes that touch their singular point.

use crate::quad;

/// Mean of `|y|^beta` over the box `[lo, hi]` (which must contain the origin
/// in its closure). Returns `+∞` when the singularity is not integrable.
pub fn power_box_mean(beta: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let k = lo.len();
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if beta == 0.0 {
        return 1.0;
    }
    if beta + k as f64 <= 0.0 {
        return f64::INFINITY;
    }
    if k == 1 {
        let (a, b) = (-lo[0], hi[0]);
        return (a.powf(beta + 1.0) + b.powf(beta + 1.0)) / (beta + 1.0) / vol;
    }
    let mut total = 0.0;
    for mask in 0..(1usize << k) {
        let ext: Vec<f64> = (0..k)
            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { -lo[i] })
            .collect();
        if ext.iter().any(|&e| e <= 0.0) {
            continue;
        }
        total += corner_box_integral(beta, &ext);
    }
    total / vol
}

/// `∫_{[0,a_1]×…×[0,a_k]} |y|^β dy` via homogeneity: the integral over the
/// box equals the integral over its complement of the half-size corner box,
/// divided by `1 − 2^{−(β+k)}`.
pub fn corner_box_integral(beta: f64, ext: &[f64]) -> f64 {
    let k = ext.len();
    let f = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().powf(0.5 * beta);
    let mut rest = 0.0;
    for mask in 1..(1usize << k) {
        let lo: Vec<f64> = (0..k)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    0.5 * ext[i]
                } else {
                    0.0
                }
            })
            .collect();
        let hi: Vec<f64> = (0..k)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    ext[i]
                } else {
                    0.5 * ext[i]
                }
            })
            .collect();
        rest += adaptive_box(&f, &lo, &hi, 1e-12, 0);
    }
    rest / (1.0 - (-(beta + k as f64)).exp2())
}

/// Tensor Gauss–Legendre with recursive bisection of every axis until the
/// children agree with the parent. The longest axis is split first when the
/// box is strongly anisotropic.
fn adaptive_box<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], rel: f64, depth: u32) -> f64 {
    let whole = quad::tensor_fixed(f, lo, hi);
    let k = lo.len();
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let wmax = widths.iter().cloned().fold(0.0, f64::max);
    let split: Vec<bool> = widths.iter().map(|&w| w > 0.5 * wmax).collect();
    let mut parts = 0.0;
    let mut children = Vec::new();
    for mask in 0..(1usize << k) {
        if (0..k).any(|i| mask >> i & 1 == 1 && !split[i]) {
            continue;
        }
        let clo: Vec<f64> = (0..k)
            .map(|i| {
                if split[i] && mask >> i & 1 == 1 {
                    0.5 * (lo[i] + hi[i])
                } else {
                    lo[i]
                }
            })
            .collect();
        let chi: Vec<f64> = (0..k)
            .map(|i| {
                if split[i] && mask >> i & 1 == 0 {
                    0.5 * (lo[i] + hi[i])
                } else {
                    hi[i]
                }
            })
            .collect();
        parts += quad::tensor_fixed(f, &clo, &chi);
        children.push((clo, chi));
    }
    if depth >= 4 || (parts - whole).abs() <= rel * parts.abs() {
        return parts;
    }
    children
        .iter()
        .map(|(a, b)| adaptive_box(f, a, b, rel, depth + 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_exact() {
        // mean of |x|^{1/2} over [-1, 4]: (2/3)(1 + 8)/5
        let m = power_box_mean(0.5, &[-1.0], &[4.0]);
        assert!((m - 1.2).abs() < 1e-14);
        assert!(power_box_mean(-1.0, &[-1.0], &[1.0]).is_infinite());
    }

    #[test]
    fn square_corner_integral_matches_polar_closed_form() {
        // ∫_{[0,1]^2} |y|^2 = 2/3
        let v = corner_box_integral(2.0, &[1.0, 1.0]);
        assert!((v - 2.0 / 3.0).abs() < 1e-12, "{v}");
        // ∫_{[0,1]^2} |y|^{-1} = 2 ln(1+√2)
        let v = corner_box_integral(-1.0, &[1.0, 1.0]);
        let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((v - exact).abs() < 1e-10 * exact, "{v} vs {exact}");
    }

    #[test]
    fn anisotropic_box() {
        // ∫_{[0,4]x[0,1]} |y|^2 = (64/3)·1 + 4·(1/3)
        let v = corner_box_integral(2.0, &[4.0, 1.0]);
        assert!((v - (64.0 / 3.0 + 4.0 / 3.0)).abs() < 1e-10);
    }
}
