//! Weighted and mixed norms of grid fields, and the Bessel-potential norm
//! equivalence check.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::field::{Field, Layout};
use crate::grid::SpacetimeGrid;
use crate::par;
use crate::report::{EstimateReport, ReportRow, Verdict};
use crate::solver::{bessel_potential, fractional_laplacian};
use crate::weights::WeightSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum NormSpec {
    /// `(∫∫|f|^p w dx dt)^{1/p}` with `w` on ℝ^{d+1}, coordinates `(t, x)`.
    LpSpacetime { p: f64, w: WeightSpec },
    /// `(∫(∫|f|^p w₂ dx)^{q/p} w₁ dt)^{1/q}`.
    Mixed {
        q: f64,
        w1: WeightSpec,
        p: f64,
        w2: WeightSpec,
    },
    /// `‖(1−Δ)^{ν/2} f‖_{L_p(w)}`.
    Bessel { p: f64, nu: f64, w: WeightSpec },
}

impl NormSpec {
    pub fn unweighted(p: f64, d: usize) -> Result<Self> {
        Ok(NormSpec::LpSpacetime {
            p,
            w: WeightSpec::constant(p, d + 1)?,
        })
    }

    fn validate(&self, d: usize) -> Result<()> {
        let exp = |v: f64| -> Result<()> {
            if v.is_finite() && v > 1.0 {
                Ok(())
            } else {
                input(format!("norm exponent {v} outside (1, ∞)"))
            }
        };
        let dim = |w: &WeightSpec, n: usize| -> Result<()> {
            w.check_admissible()?;
            if w.dim() != n {
                return input(format!("weight on ℝ^{} where ℝ^{n} is needed", w.dim()));
            }
            Ok(())
        };
        match self {
            NormSpec::LpSpacetime { p, w } | NormSpec::Bessel { p, w, .. } => {
                exp(*p)?;
                dim(w, d + 1)
            }
            NormSpec::Mixed { q, w1, p, w2 } => {
                exp(*q)?;
                exp(*p)?;
                dim(w1, 1)?;
                dim(w2, d)
            }
        }
    }
}

/// Time cell `[t_n − Δt/2, t_n + Δt/2] ∩ [0, T]`.
fn time_cell(grid: &SpacetimeGrid, n: usize) -> (f64, f64) {
    let t = grid.time(n);
    let h = 0.5 * grid.dt();
    ((t - h).max(0.0), (t + h).min(grid.horizon()))
}

/// Space cell centered at node `idx`.
fn space_cell(grid: &SpacetimeGrid, idx: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 0.5 * grid.dx();
    let x = grid.point(idx);
    (
        x.iter().map(|v| v - h).collect(),
        x.iter().map(|v| v + h).collect(),
    )
}

/// Per-node quadrature weights `|cell| · (cell mean of w)` for a space-time
/// weight, in field order.
pub fn quadrature_weights(grid: &SpacetimeGrid, w: &WeightSpec) -> Result<Vec<f64>> {
    if w.dim() != grid.d() + 1 {
        return input("quadrature needs a weight on ℝ^{d+1}");
    }
    let m = grid.slice_len();
    let dv = grid.cell_volume();
    let constant = w.is_constant();
    let space: Vec<(Vec<f64>, Vec<f64>)> = (0..m).map(|i| space_cell(grid, i)).collect();
    let parts = par::map(grid.time_levels(), |n| {
        let (t0, t1) = time_cell(grid, n);
        let vol = (t1 - t0) * dv;
        space
            .iter()
            .map(|(lo, hi)| {
                if constant {
                    return vol;
                }
                let mut clo = vec![t0];
                clo.extend_from_slice(lo);
                let mut chi = vec![t1];
                chi.extend_from_slice(hi);
                vol * w.cell_mean_pow(1.0, &clo, &chi)
            })
            .collect::<Vec<f64>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

fn lp_spacetime(f: &Field, p: f64, w: &WeightSpec) -> Result<f64> {
    let q = quadrature_weights(f.grid(), w)?;
    let m = f.grid().slice_len();
    let parts = par::map(f.levels(), |n| {
        f.slice(n)
            .iter()
            .zip(&q[n * m..(n + 1) * m])
            .map(|(v, w)| v.norm().powf(p) * w)
            .sum::<f64>()
    });
    Ok(parts.iter().sum::<f64>().powf(1.0 / p))
}

fn mixed(f: &Field, q: f64, w1: &WeightSpec, p: f64, w2: &WeightSpec) -> f64 {
    let grid = f.grid();
    let m = grid.slice_len();
    let dv = grid.cell_volume();
    let w2v: Vec<f64> = (0..m)
        .map(|i| {
            let (lo, hi) = space_cell(grid, i);
            w2.cell_mean_pow(1.0, &lo, &hi)
        })
        .collect();
    let parts = par::map(f.levels(), |n| {
        let (t0, t1) = time_cell(grid, n);
        let inner: f64 = f
            .slice(n)
            .iter()
            .zip(&w2v)
            .map(|(v, w)| v.norm().powf(p) * w)
            .sum::<f64>()
            * dv;
        inner.powf(q / p) * w1.cell_mean_pow(1.0, &[t0], &[t1]) * (t1 - t0)
    });
    parts.iter().sum::<f64>().powf(1.0 / q)
}

/// Cell-quadrature value of the norm: the weight is the cell mean (exact at
/// singular cells, center value elsewhere), `|f|` the node value.
pub fn weighted_norm(field: &Field, spec: &NormSpec) -> Result<f64> {
    if field.layout() != Layout::Spacetime {
        return input("weighted norms need a space-time field");
    }
    spec.validate(field.grid().d())?;
    Ok(match spec {
        NormSpec::LpSpacetime { p, w } => lp_spacetime(field, *p, w)?,
        NormSpec::Mixed { q, w1, p, w2 } => mixed(field, *q, w1, *p, w2),
        NormSpec::Bessel { p, nu, w } => lp_spacetime(&bessel_potential(field, *nu)?, *p, w)?,
    })
}

const EQUIV_OP: &str = "norms::norm_equivalence_check";
const EQUIV_REF: &str = "‖(1−Δ)^{ν/2}f‖ ≈ ‖f‖ + ‖(−Δ)^{ν/2}f‖ in L_p(w)";

/// `r(f) = ‖(1−Δ)^{ν/2}f‖ / (‖f‖ + ‖(−Δ)^{ν/2}f‖)` over a field family.
pub fn norm_equivalence_check(
    fields: &[Field],
    p: f64,
    nu: f64,
    w: &WeightSpec,
) -> Result<EstimateReport> {
    if fields.is_empty() {
        return input("need at least one field");
    }
    if !(nu >= 0.0) {
        return input("ν must be nonnegative");
    }
    let spec = NormSpec::LpSpacetime { p, w: w.clone() };
    let mut report = EstimateReport::new("norm_equivalence");
    let mut ratios = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        let top = weighted_norm(&bessel_potential(f, nu)?, &spec)?;
        let a = weighted_norm(f, &spec)?;
        let b = weighted_norm(&fractional_laplacian(f, nu)?, &spec)?;
        let r = top / (a + b);
        ratios.push(r);
        report.push(
            ReportRow::new(format!("field={k}"), EQUIV_OP, EQUIV_REF)
                .inputs(format!("p={p};nu={nu}"))
                .measured(r)
                .verdict(Verdict::Info),
        );
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let inputs = format!("p={p};nu={nu};fields={}", fields.len());
    report.push(
        ReportRow::new("min_ratio", EQUIV_OP, EQUIV_REF)
            .inputs(inputs.clone())
            .measured(lo)
            .pass_if(lo.is_finite() && lo > 0.0),
    );
    report.push(
        ReportRow::new("max_ratio", EQUIV_OP, EQUIV_REF)
            .inputs(inputs.clone())
            .measured(hi)
            .pass_if(hi.is_finite()),
    );
    report.push(
        ReportRow::new("spread", EQUIV_OP, EQUIV_REF)
            .inputs(inputs)
            .measured(hi / lo)
            .pass_if((hi / lo).is_finite()),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn constant_weight_is_plain_l2() {
        let g = SpacetimeGrid::new(1, 2.0, 32, 1.0, 8).unwrap();
        let f = Field::from_fn(&g, |t, x| Complex64::new((x[0] * t).cos(), x[0]));
        let n = weighted_norm(&f, &NormSpec::unweighted(2.0, 1).unwrap()).unwrap();
        let mut plain = 0.0;
        for k in 0..g.time_levels() {
            let (a, b) = time_cell(&g, k);
            plain += f.slice(k).iter().map(|v| v.norm_sqr()).sum::<f64>() * (b - a) * g.dx();
        }
        assert!((n - plain.sqrt()).abs() < 1e-12 * n);
    }

    #[test]
    fn indicator_with_linear_weight() {
        let g = SpacetimeGrid::new(1, 2.0, 2048, 2.0, 2048).unwrap();
        let f = Field::from_fn(&g, |t, x| {
            let inside = t <= 1.0 && (0.0..=1.0).contains(&x[0]);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        });
        // |x|^1 sits on the A_2 boundary in d = 1; |x|^{1/2} gives ∫∫ = 2/3
        let w = WeightSpec::product_power(0.0, 0.5, 2.0, 1).unwrap();
        let n = weighted_norm(&f, &NormSpec::LpSpacetime { p: 2.0, w }).unwrap();
        assert!((n - (2.0f64 / 3.0).sqrt()).abs() < 2e-3, "{n}");
    }

    #[test]
    fn inadmissible_weight_rejected() {
        let g = SpacetimeGrid::new(1, 2.0, 16, 1.0, 4).unwrap();
        let f = Field::zeros(&g);
        let w = WeightSpec::spacetime_power(2.0, 2.0, 1).unwrap();
        assert!(weighted_norm(&f, &NormSpec::LpSpacetime { p: 2.0, w }).is_err());
    }
}
