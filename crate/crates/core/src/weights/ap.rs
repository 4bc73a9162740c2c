//! A_p characteristics over finite ball families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{WeightKind, WeightSpec};
use crate::error::{input, Result};
use crate::par;
use crate::quad;
use crate::report::{EstimateReport, ReportRow, Verdict};

/// Balls `B(center, r)` for every center and radius, plus the number of
/// midpoint cells per axis used when no radial rule applies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallFamily {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub resolution: usize,
}

impl BallFamily {
    /// 64 centers (the origin and 63 seeded points in `[-10, 10]^dim`),
    /// radii `2^k` for `k = -7..=7`.
    pub fn default_for(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centers = vec![vec![0.0; dim]];
        for _ in 0..63 {
            centers.push((0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect());
        }
        Self {
            centers,
            radii: (-7..=7).map(|k| 2f64.powi(k)).collect(),
            resolution: default_resolution(dim),
        }
    }

    /// Balls centered at the origin only.
    pub fn centered(dim: usize, radii: Vec<f64>) -> Self {
        Self {
            centers: vec![vec![0.0; dim]],
            radii,
            resolution: default_resolution(dim),
        }
    }

    pub fn decades(&self) -> f64 {
        let lo = self.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.radii.iter().cloned().fold(0.0, f64::max);
        (hi / lo).log10()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.radii.is_empty() || self.centers.is_empty() {
            return input("ball family is empty");
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return input("ball radii must be positive and finite");
        }
        if self.decades() < 4.0 - 1e-9 {
            return input(format!(
                "ball radii span {:.2} decades; at least 4 are required",
                self.decades()
            ));
        }
        if self.centers.iter().any(|c| c.len() != dim) {
            return input(format!("ball centers must have dimension {dim}"));
        }
        if self.resolution == 0 {
            return input("ball family resolution must be positive");
        }
        Ok(())
    }

    fn balls(&self) -> Vec<(&[f64], f64)> {
        self.centers
            .iter()
            .flat_map(|c| self.radii.iter().map(move |&r| (c.as_slice(), r)))
            .collect()
    }
}

fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 64,
        3 => 24,
        _ => 10,
    }
}

/// Radial integrand profiles g(ρ).
#[derive(Clone, Copy, Debug)]
enum Radial {
    /// ρ^β
    Power(f64),
    /// (t² + ρ²)^{β/2}
    Shifted { t2: f64, beta: f64 },
}

impl Radial {
    fn eval(self, rho: f64) -> f64 {
        match self {
            Radial::Power(b) => rho.powf(b),
            Radial::Shifted { t2, beta } => (t2 + rho * rho).powf(0.5 * beta),
        }
    }

    fn singular_beta(self) -> Option<f64> {
        match self {
            Radial::Power(b) => Some(b),
            Radial::Shifted { t2: 0.0, beta } => Some(beta),
            _ => None,
        }
    }
}

/// `∫_a^b x^β dx` for `0 ≤ a < b`, written to avoid cancellation when the
/// interval is short relative to its distance from 0.
fn positive_power_integral(beta: f64, a: f64, b: f64) -> f64 {
    let k = beta + 1.0;
    if a == 0.0 {
        return if k > 0.0 {
            b.powf(k) / k
        } else {
            f64::INFINITY
        };
    }
    let u = ((b - a) / a).ln_1p();
    if k == 0.0 {
        u
    } else {
        a.powf(k) * (k * u).exp_m1() / k
    }
}

fn power_interval_integral(beta: f64, a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        positive_power_integral(beta, a, b)
    } else if b <= 0.0 {
        positive_power_integral(beta, -b, -a)
    } else {
        positive_power_integral(beta, 0.0, -a) + positive_power_integral(beta, 0.0, b)
    }
}

fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("radial rule used only for n ≤ 3"),
    }
}

/// Mean of g(|y|) over a ball in ℝ^n (n ≤ 3) whose center is at distance
/// `c` from the origin.
fn radial_ball_mean(g: Radial, n: usize, c: f64, r: f64) -> f64 {
    const REL: f64 = 1e-12;
    if n == 1 {
        let (a, b) = (c - r, c + r);
        let integral = match g.singular_beta() {
            Some(beta) => power_interval_integral(beta, a, b),
            None => {
                let f = |x: f64| g.eval(x.abs());
                if a < 0.0 && b > 0.0 {
                    quad::adaptive(&f, a, 0.0, REL) + quad::adaptive(&f, 0.0, b, REL)
                } else {
                    quad::adaptive(&f, a, b, REL)
                }
            }
        };
        return integral / (2.0 * r);
    }
    let vn = unit_ball_volume(n);
    let sn = n as f64 * vn;
    let nn = n as f64;
    if let Some(beta) = g.singular_beta() {
        if c <= r && beta + nn <= 0.0 {
            return f64::INFINITY;
        }
    }
    let mut total = 0.0;
    if c < r {
        let a = r - c;
        total += match g.singular_beta() {
            Some(beta) => sn * a.powf(beta + nn) / (beta + nn),
            None => quad::adaptive(
                &|rho: f64| g.eval(rho) * sn * rho.powi(n as i32 - 1),
                0.0,
                a,
                REL,
            ),
        };
    }
    if c > 0.0 {
        let (lo, hi) = ((r - c).abs(), r + c);
        let frac = |rho: f64| {
            let x = ((rho * rho + c * c - r * r) / (2.0 * rho * c)).clamp(-1.0, 1.0);
            if n == 2 {
                x.acos() / PI
            } else {
                0.5 * (1.0 - x)
            }
        };
        let f = |th: f64| {
            let rho = lo + 0.5 * (hi - lo) * (1.0 - th.cos());
            let jac = 0.5 * (hi - lo) * th.sin();
            if rho <= 0.0 {
                return 0.0;
            }
            g.eval(rho) * sn * rho.powi(n as i32 - 1) * frac(rho) * jac
        };
        total += quad::adaptive(&f, 0.0, PI, REL);
    }
    total / (vn * r.powi(n as i32))
}

/// Midpoint mean of `w^q` over a ball, with exact cells at singular points.
fn midpoint_ball_mean(
    w: &WeightSpec,
    q: f64,
    scale: f64,
    center: &[f64],
    r: f64,
    res: usize,
) -> f64 {
    let n = center.len();
    let h = 2.0 * r / res as f64;
    let mut idx = vec![0usize; n];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let (mut sum, mut count) = (0.0, 0usize);
    let rescale = scale.powf(-q);
    loop {
        let mut d2 = 0.0;
        for k in 0..n {
            lo[k] = center[k] - r + idx[k] as f64 * h;
            hi[k] = lo[k] + h;
            let m = lo[k] + 0.5 * h - center[k];
            d2 += m * m;
        }
        if d2 < r * r {
            sum += w.cell_mean_pow(q, &lo, &hi) * rescale;
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == n {
                return if count == 0 {
                    f64::NAN
                } else {
                    sum / count as f64
                };
            }
            idx[k] += 1;
            if idx[k] < res {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn ball_mean(w: &WeightSpec, q: f64, center: &[f64], r: f64, res: usize) -> f64 {
    if q == 0.0 || w.is_constant() {
        return 1.0;
    }
    let n = w.dim();
    let radial = match w.kind() {
        WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } if n <= 3 => {
            Some(alpha * q)
        }
        WeightKind::PowerTime { alpha1 } => Some(alpha1 * q),
        _ => None,
    };
    match radial {
        Some(beta) => {
            let c = center.iter().map(|x| x * x).sum::<f64>().sqrt();
            radial_ball_mean(Radial::Power(beta), n, c, r)
        }
        None => midpoint_ball_mean(w, q, w.scale(), center, r, res),
    }
}

fn product(a: f64, b: f64, q: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    a * b.powf(q - 1.0)
}

/// `max_B (⨍_B w)(⨍_B w^{−1/(q−1)})^{q−1}` over the family.
pub fn ap_characteristic_with_exponent(w: &WeightSpec, q: f64, family: &BallFamily) -> Result<f64> {
    if !(q.is_finite() && q > 1.0) {
        return input(format!("A_q needs q in (1, ∞), got {q}"));
    }
    family.validate(w.dim())?;
    let balls = family.balls();
    let dual = -1.0 / (q - 1.0);
    let vals = par::map(balls.len(), |i| {
        let (c, r) = balls[i];
        let a = ball_mean(w, 1.0, c, r, family.resolution);
        let b = ball_mean(w, dual, c, r, family.resolution);
        product(a, b, q)
    });
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// A_p characteristic with the weight's own exponent p.
pub fn ap_characteristic(w: &WeightSpec, family: &BallFamily) -> Result<f64> {
    ap_characteristic_with_exponent(w, w.p(), family)
}

const SLICE_OP: &str = "weights::slice_uniform_ap_check";
const SLICE_REF: &str = "sup_t [(t²+|x|²)^{α/2}]_{A_p(ℝᵈ)} < ∞";

/// Growth threshold between the top two decades of the scale `r/t`.
pub const SLICE_GROWTH_RATIO: f64 = 1.10;
/// Allowed spread of the per-time maxima.
pub const SLICE_T_SPREAD: f64 = 4.0;

/// A_p products of `x ↦ (t² + |x|²)^{α/2}` for each sampled `t`, with a
/// check that they stay bounded across time samples and across scales.
pub fn slice_uniform_ap_check(
    alpha: f64,
    p: f64,
    d: usize,
    family: &BallFamily,
    time_samples: &[f64],
) -> Result<EstimateReport> {
    if !(p.is_finite() && p > 1.0) {
        return input("p must lie in (1, ∞)");
    }
    if !(d == 1 || d == 2 || d == 3) {
        return input("slice check supports d ≤ 3");
    }
    if time_samples.is_empty() || time_samples.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return input("time samples must be positive and finite");
    }
    family.validate(d)?;
    let dual = -1.0 / (p - 1.0);
    let balls = family.balls();
    let mut report = EstimateReport::new("slice_uniform_ap");
    let mut per_t = Vec::new();
    // (scale r/t, product)
    let mut scaled: Vec<(f64, f64)> = Vec::new();
    for &t in time_samples {
        let t2 = t * t;
        let vals = par::map(balls.len(), |i| {
            let (c, r) = balls[i];
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let a = radial_ball_mean(Radial::Shifted { t2, beta: alpha }, d, cn, r);
            let b = radial_ball_mean(
                Radial::Shifted {
                    t2,
                    beta: alpha * dual,
                },
                d,
                cn,
                r,
            );
            (r / t, product(a, b, p))
        });
        let m = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        scaled.extend(vals);
        per_t.push(m);
        report.push(
            ReportRow::new(format!("t={t}"), SLICE_OP, SLICE_REF)
                .inputs(format!("alpha={alpha};p={p};d={d};t={t}"))
                .measured(m)
                .verdict(Verdict::Info),
        );
    }
    let max = per_t.iter().cloned().fold(0.0, f64::max);
    let min = per_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = scaled.iter().map(|v| v.0).fold(0.0, f64::max);
    let band = |lo: f64, hi: f64| {
        scaled
            .iter()
            .filter(|v| v.0 > lo && v.0 <= hi)
            .map(|v| v.1)
            .fold(0.0, f64::max)
    };
    let top = band(smax / 10.0, smax);
    let prev = band(smax / 100.0, smax / 10.0);
    let growth = top / prev;
    let inputs = format!("alpha={alpha};p={p};d={d}");
    report.push(
        ReportRow::new("max_over_t", SLICE_OP, SLICE_REF)
            .inputs(inputs.clone())
            .measured(max)
            .pass_if(max.is_finite()),
    );
    report.push(
        ReportRow::new("t_spread", SLICE_OP, SLICE_REF)
            .inputs(inputs.clone())
            .measured(max / min)
            .theory(SLICE_T_SPREAD)
            .pass_if(max / min <= SLICE_T_SPREAD),
    );
    report.push(
        ReportRow::new("scale_growth", SLICE_OP, SLICE_REF)
            .inputs(inputs)
            .measured(growth)
            .theory(SLICE_GROWTH_RATIO)
            .pass_if(growth.is_finite() && growth <= SLICE_GROWTH_RATIO)
            .note("ratio of max products in the top two decades of r/t"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_power_weight_closed_form() {
        // (⨍|x|^{1/2})(⨍|x|^{-1/2}) = (r^{1/2}/1.5)(r^{-1/2}/0.5) = 4/3
        let w = WeightSpec::power_space(0.5, 2.0, 1).unwrap();
        for k in -7..=7 {
            let r = 2f64.powi(k);
            let a = radial_ball_mean(Radial::Power(0.5), 1, 0.0, r);
            let b = radial_ball_mean(Radial::Power(-0.5), 1, 0.0, r);
            assert!((a * b - 4.0 / 3.0).abs() < 1e-14);
        }
        let fam = BallFamily::centered(1, (-7..=7).map(|k| 2f64.powi(k)).collect());
        let c = ap_characteristic(&w, &fam).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn radial_rule_matches_midpoint_in_2d() {
        let w = WeightSpec::power_space(0.7, 2.0, 2).unwrap();
        let c = [1.3, -0.4];
        let exact = radial_ball_mean(Radial::Power(0.7), 2, 1.3f64.hypot(0.4), 2.0);
        let mid = midpoint_ball_mean(&w, 1.0, 1.0, &c, 2.0, 400);
        assert!((exact - mid).abs() < 1e-3 * exact, "{exact} {mid}");
    }

    #[test]
    fn radial_rule_3d_constant_profile() {
        for c in [0.0, 0.5, 1.0, 3.0] {
            let m = radial_ball_mean(Radial::Shifted { t2: 1.0, beta: 0.0 }, 3, c, 1.0);
            assert!((m - 1.0).abs() < 1e-11, "{c}: {m}");
        }
    }

    #[test]
    fn boundary_weight_is_unbounded() {
        let w = WeightSpec::power_space(1.0, 2.0, 1).unwrap();
        let c = ap_characteristic(&w, &BallFamily::default_for(1, 1)).unwrap();
        assert!(c.is_infinite());
    }

    #[test]
    fn narrow_family_rejected() {
        let w = WeightSpec::constant(2.0, 1).unwrap();
        let fam = BallFamily::centered(1, vec![1.0, 10.0]);
        assert!(ap_characteristic(&w, &fam).is_err());
    }
}
