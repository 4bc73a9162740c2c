//! Muckenhoupt weights: construction, evaluation, A_p characteristics,
//! regularity constants and required symbol smoothness.

mod ap;
pub mod cell;

pub use ap::{
    ap_characteristic, ap_characteristic_with_exponent, slice_uniform_ap_check, BallFamily,
};

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Values on a uniform grid of `n` points per axis over `[-half_width, half_width)^dim`,
/// row-major with the last axis fastest. Evaluation is nearest-cell with
/// clamping outside the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub half_width: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Constant,
    /// |x|^α on ℝ^dim
    PowerSpace {
        alpha: f64,
    },
    /// |t|^α₁ on ℝ
    PowerTime {
        alpha1: f64,
    },
    /// (t² + |x|²)^{α/2} on ℝ^dim, dim = d + 1
    SpacetimePower {
        alpha: f64,
    },
    /// |t|^α₁ |x|^α₂ on ℝ × ℝ^{dim−1}
    ProductPower {
        alpha1: f64,
        alpha2: f64,
    },
    Tabulated {
        table: Table,
    },
}

/// JSON form: `{kind, alpha?, alpha1?, alpha2?, p, dim}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr", into = "WeightRepr")]
pub struct WeightSpec {
    kind: WeightKind,
    p: f64,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct WeightRepr {
    #[serde(flatten)]
    kind: WeightKind,
    p: f64,
    dim: usize,
}

impl TryFrom<WeightRepr> for WeightSpec {
    type Error = Error;
    fn try_from(r: WeightRepr) -> Result<Self> {
        WeightSpec::new(r.kind, r.p, r.dim)
    }
}

impl From<WeightSpec> for WeightRepr {
    fn from(w: WeightSpec) -> Self {
        WeightRepr {
            kind: w.kind,
            p: w.p,
            dim: w.dim,
        }
    }
}

/// A group of coordinates on which the weight is `|y|^beta`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PowerFactor {
    pub start: usize,
    pub end: usize,
    pub beta: f64,
}

impl WeightSpec {
    /// Builds a weight. Inadmissible exponents are accepted here so that
    /// boundary cases can be probed; see [`WeightSpec::check_admissible`].
    pub fn new(kind: WeightKind, p: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return input(format!("p must lie in (1, ∞), got {p}"));
        }
        if dim == 0 {
            return input("weight dimension must be positive");
        }
        let finite = |v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                input("weight exponents must be finite")
            }
        };
        match &kind {
            WeightKind::Constant => {}
            WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } => {
                finite(*alpha)?
            }
            WeightKind::PowerTime { alpha1 } => {
                finite(*alpha1)?;
                if dim != 1 {
                    return input("power_time weight lives on ℝ (dim = 1)");
                }
            }
            WeightKind::ProductPower { alpha1, alpha2 } => {
                finite(*alpha1)?;
                finite(*alpha2)?;
                if dim < 2 {
                    return input("product_power weight needs dim = d + 1 ≥ 2");
                }
            }
            WeightKind::Tabulated { table } => {
                if table.n == 0 || !(table.half_width > 0.0) {
                    return input("tabulated weight needs n > 0 and half_width > 0");
                }
                let want = table.n.checked_pow(dim as u32);
                if want != Some(table.values.len()) {
                    return input(format!(
                        "tabulated weight needs n^dim = {:?} values, got {}",
                        want,
                        table.values.len()
                    ));
                }
                if table.values.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                    return input("tabulated weight values must be positive and finite");
                }
            }
        }
        Ok(Self { kind, p, dim })
    }

    pub fn constant(p: f64, dim: usize) -> Result<Self> {
        Self::new(WeightKind::Constant, p, dim)
    }

    pub fn power_space(alpha: f64, p: f64, d: usize) -> Result<Self> {
        Self::new(WeightKind::PowerSpace { alpha }, p, d)
    }

    pub fn power_time(alpha1: f64, p: f64) -> Result<Self> {
        Self::new(WeightKind::PowerTime { alpha1 }, p, 1)
    }

    pub fn spacetime_power(alpha: f64, p: f64, d: usize) -> Result<Self> {
        Self::new(WeightKind::SpacetimePower { alpha }, p, d + 1)
    }

    pub fn product_power(alpha1: f64, alpha2: f64, p: f64, d: usize) -> Result<Self> {
        Self::new(WeightKind::ProductPower { alpha1, alpha2 }, p, d + 1)
    }

    pub fn tabulated(table: Table, p: f64, dim: usize) -> Result<Self> {
        Self::new(WeightKind::Tabulated { table }, p, dim)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same weight paired with a different integrability exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.kind.clone(), p, self.dim)
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            WeightKind::Constant => true,
            WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } => {
                *alpha == 0.0
            }
            WeightKind::PowerTime { alpha1 } => *alpha1 == 0.0,
            WeightKind::ProductPower { alpha1, alpha2 } => *alpha1 == 0.0 && *alpha2 == 0.0,
            WeightKind::Tabulated { table } => table.values.iter().all(|&v| v == table.values[0]),
        }
    }

    /// Whether the exponents lie in the open A_p range.
    pub fn is_admissible(&self) -> bool {
        let p = self.p;
        let n = self.dim as f64;
        let inside = |a: f64, k: f64| -k < a && a < k * (p - 1.0);
        match &self.kind {
            WeightKind::Constant | WeightKind::Tabulated { .. } => true,
            WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } => {
                inside(*alpha, n)
            }
            WeightKind::PowerTime { alpha1 } => inside(*alpha1, 1.0),
            WeightKind::ProductPower { alpha1, alpha2 } => {
                inside(*alpha1, 1.0) && inside(*alpha2, n - 1.0)
            }
        }
    }

    pub fn check_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            input(format!("weight {:?} is not in A_{}", self.kind, self.p))
        }
    }

    /// Homogeneous factors `|y_group|^β`; `None` for tabulated weights.
    pub(crate) fn power_factors(&self) -> Option<Vec<PowerFactor>> {
        let n = self.dim;
        let f = |start, end, beta| PowerFactor { start, end, beta };
        Some(match &self.kind {
            WeightKind::Constant => vec![],
            WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } => {
                vec![f(0, n, *alpha)]
            }
            WeightKind::PowerTime { alpha1 } => vec![f(0, 1, *alpha1)],
            WeightKind::ProductPower { alpha1, alpha2 } => {
                vec![f(0, 1, *alpha1), f(1, n, *alpha2)]
            }
            WeightKind::Tabulated { .. } => return None,
        })
    }

    /// w(point). Returns `+∞` at a non-integrable-side singularity
    /// (negative exponent at the origin).
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return input(format!(
                "point has dimension {} but the weight lives on ℝ^{}",
                point.len(),
                self.dim
            ));
        }
        if point.iter().any(|x| !x.is_finite()) {
            return input("weight evaluated at a non-finite point");
        }
        Ok(self.eval_pow(point, 1.0))
    }

    /// `w(point)^q` without dimension checks.
    pub(crate) fn eval_pow(&self, point: &[f64], q: f64) -> f64 {
        if let WeightKind::Tabulated { table } = &self.kind {
            return table_lookup(table, point).powf(q);
        }
        let mut v = 1.0;
        for fac in self.power_factors().unwrap() {
            let beta = fac.beta * q;
            if beta == 0.0 {
                continue;
            }
            let r2: f64 = point[fac.start..fac.end].iter().map(|x| x * x).sum();
            v *= if r2 == 0.0 {
                if beta < 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                r2.powf(0.5 * beta)
            };
        }
        v
    }

    /// Mean of `w^q` over the box `[lo, hi]`: the center value, except that
    /// factors whose singular point lies in the closed box use the exact
    /// cell rule.
    pub fn cell_mean_pow(&self, q: f64, lo: &[f64], hi: &[f64]) -> f64 {
        let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let Some(factors) = self.power_factors() else {
            return self.eval_pow(&center, q);
        };
        let mut v = 1.0;
        for fac in factors {
            let beta = fac.beta * q;
            if beta == 0.0 {
                continue;
            }
            let (l, h) = (&lo[fac.start..fac.end], &hi[fac.start..fac.end]);
            let touches = l.iter().zip(h).all(|(a, b)| *a <= 0.0 && 0.0 <= *b);
            v *= if touches {
                cell::power_box_mean(beta, l, h)
            } else {
                center[fac.start..fac.end]
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .powf(0.5 * beta)
            };
        }
        v
    }

    /// Smallest tabulated value (1 for analytic weights); used to rescale
    /// before raising to large negative powers.
    pub(crate) fn scale(&self) -> f64 {
        match &self.kind {
            WeightKind::Tabulated { table } => {
                table.values.iter().copied().fold(f64::INFINITY, f64::min)
            }
            _ => 1.0,
        }
    }

    /// Regularity constant: the sup of p₀ ∈ (1, 2] with w ∈ A_{p/p₀}.
    pub fn regularity_constant(&self) -> Result<f64> {
        self.check_admissible()?;
        let p = self.p;
        let n = self.dim as f64;
        let r = match &self.kind {
            WeightKind::Constant => p.min(2.0),
            WeightKind::PowerSpace { alpha } | WeightKind::SpacetimePower { alpha } => {
                (p * n / (alpha + n)).min(2.0)
            }
            WeightKind::PowerTime { alpha1 } => (p / (alpha1 + 1.0)).min(2.0),
            WeightKind::ProductPower { alpha1, alpha2 } => {
                let m = n - 1.0;
                (p / (alpha1 + 1.0)).min(p * m / (alpha2 + m)).min(2.0)
            }
            WeightKind::Tabulated { .. } => self.tabulated_regularity()?,
        };
        if !(r > 1.0) {
            return Err(Error::Inconsistent(format!(
                "regularity constant {r} is not above 1"
            )));
        }
        Ok(r)
    }

    fn tabulated_regularity(&self) -> Result<f64> {
        let family = BallFamily::default_for(self.dim, 0x5eed);
        let hi_end = self.p.min(2.0);
        let ok = |p0: f64| -> Result<bool> {
            let q = self.p / p0;
            if q <= 1.0 {
                return Ok(false);
            }
            let c = ap_characteristic_with_exponent(self, q, &family)?;
            Ok(c.is_finite() && c <= 1e6)
        };
        if ok(hi_end - 1e-9)? {
            return Ok(hi_end);
        }
        let (mut lo, mut hi) = (1.0, hi_end);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// A strict member p₀ < R with the same floor behavior.
    pub fn strict_p0(&self) -> Result<f64> {
        Ok(self.regularity_constant()? - 1e-9)
    }
}

fn table_lookup(table: &Table, point: &[f64]) -> f64 {
    let h = 2.0 * table.half_width / table.n as f64;
    let mut idx = 0usize;
    for &x in point {
        let k = ((x + table.half_width) / h).floor();
        let k = k.clamp(0.0, (table.n - 1) as f64) as usize;
        idx = idx * table.n + k;
    }
    table.values[idx]
}

/// Setting for the smoothness order demanded of the symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum SmoothnessSetting {
    /// w ∈ A_p(ℝ^{d+1}).
    SpaceTimeWeight { d: usize, w: WeightSpec },
    /// w₁ ∈ A_q(ℝ), w₂ ∈ A_p(ℝ^d).
    MixedWeights {
        d: usize,
        w1: WeightSpec,
        w2: WeightSpec,
    },
}

fn floor_ratio(d: usize, r: f64) -> usize {
    (d as f64 / r + 1e-9).floor() as usize
}

/// `⌊d/R⌋ + 2`, or `⌊d/R₁⌋ ∨ ⌊d/R₂⌋ + 2` in the mixed setting.
pub fn required_smoothness_order(setting: &SmoothnessSetting) -> Result<usize> {
    match setting {
        SmoothnessSetting::SpaceTimeWeight { d, w } => {
            if w.dim() != d + 1 {
                return input(format!("space-time weight must live on ℝ^{}", d + 1));
            }
            Ok(floor_ratio(*d, w.regularity_constant()?) + 2)
        }
        SmoothnessSetting::MixedWeights { d, w1, w2 } => {
            if w1.dim() != 1 || w2.dim() != *d {
                return input("mixed setting needs w₁ on ℝ and w₂ on ℝ^d");
            }
            let a = floor_ratio(*d, w1.regularity_constant()?);
            let b = floor_ratio(*d, w2.regularity_constant()?);
            Ok(a.max(b) + 2)
        }
    }
}
