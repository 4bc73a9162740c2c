//! Time-measurable symbols ψ(t, ξ) = c(t)·(Σ w_i ξ_i²)^{γ/2}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deriv::{multi_indices, ProfileDerivative};
use crate::error::{input, Error, Result};
use crate::track::PiecewiseConstantTrack;

/// Highest ξ-derivative order served by [`Symbol::eval_derivative`].
pub const DEFAULT_MAX_DERIVATIVE_ORDER: u32 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// ψ = −|ξ|^γ
    FractionalLaplacian,
    /// ψ = −a(t)|ξ|^γ
    TimeModulated,
    /// ψ = −a(t)(Σ w_i ξ_i²)^{γ/2}
    AnisotropicPower,
    /// ψ = −(1 + i b(t))|ξ|^γ
    ComplexShift,
}

/// Parameters for a pseudo-randomly generated coefficient track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomTrack {
    pub horizon: f64,
    #[serde(default = "default_pieces")]
    pub pieces: usize,
    #[serde(default = "default_range")]
    pub range: [f64; 2],
}

fn default_pieces() -> usize {
    8
}

fn default_range() -> [f64; 2] {
    [1.0, 3.0]
}

/// JSON form: `{kind, gamma, track: {breakpoints, values}, seed?}`.
///
/// When `seed` is present and `track` is absent, `random_track` describes a
/// seeded equal-piece track.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<PiecewiseConstantTrack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_track: Option<RandomTrack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_derivative_order: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolSpec", into = "SymbolSpec")]
pub struct Symbol {
    kind: SymbolKind,
    gamma: f64,
    track: Option<PiecewiseConstantTrack>,
    seed: Option<u64>,
    weights: Option<Vec<f64>>,
    max_derivative_order: u32,
}

impl TryFrom<SymbolSpec> for Symbol {
    type Error = Error;
    fn try_from(s: SymbolSpec) -> Result<Self> {
        let track = match (s.track, s.seed, s.random_track) {
            (Some(t), _, _) => Some(t),
            (None, Some(seed), Some(r)) => Some(PiecewiseConstantTrack::seeded(
                r.horizon, r.pieces, r.range[0], r.range[1], seed,
            )?),
            (None, Some(_), None) => {
                return input("a seeded symbol without a track needs `random_track`")
            }
            (None, None, _) => None,
        };
        let mut sym = Symbol::build(s.kind, s.gamma, track, s.weights)?;
        sym.seed = s.seed;
        if let Some(n) = s.max_derivative_order {
            sym.max_derivative_order = n;
        }
        Ok(sym)
    }
}

impl From<Symbol> for SymbolSpec {
    fn from(s: Symbol) -> Self {
        SymbolSpec {
            kind: s.kind,
            gamma: s.gamma,
            track: s.track,
            seed: s.seed,
            random_track: None,
            weights: s.weights,
            max_derivative_order: Some(s.max_derivative_order),
        }
    }
}

impl Symbol {
    fn build(
        kind: SymbolKind,
        gamma: f64,
        track: Option<PiecewiseConstantTrack>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return input(format!("gamma must be positive, got {gamma}"));
        }
        match kind {
            SymbolKind::FractionalLaplacian => {}
            SymbolKind::TimeModulated | SymbolKind::AnisotropicPower => {
                if let Some(t) = &track {
                    if !(t.min() > 0.0) {
                        return input("modulation coefficient must be positive");
                    }
                }
                if kind == SymbolKind::TimeModulated && track.is_none() {
                    return input("time_modulated symbol needs a coefficient track");
                }
            }
            SymbolKind::ComplexShift => {
                if track.is_none() {
                    return input("complex_shift symbol needs a coefficient track");
                }
            }
        }
        if let Some(w) = &weights {
            if kind != SymbolKind::AnisotropicPower {
                return input("direction weights only apply to anisotropic_power");
            }
            if w.is_empty() || w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return input("direction weights must be positive and finite");
            }
        } else if kind == SymbolKind::AnisotropicPower {
            return input("anisotropic_power symbol needs direction weights");
        }
        Ok(Self {
            kind,
            gamma,
            track,
            seed: None,
            weights,
            max_derivative_order: DEFAULT_MAX_DERIVATIVE_ORDER,
        })
    }

    /// ψ = −|ξ|^γ.
    pub fn fractional_laplacian(gamma: f64) -> Result<Self> {
        Self::build(SymbolKind::FractionalLaplacian, gamma, None, None)
    }

    /// ψ = −a(t)|ξ|^γ.
    pub fn time_modulated(gamma: f64, a: PiecewiseConstantTrack) -> Result<Self> {
        Self::build(SymbolKind::TimeModulated, gamma, Some(a), None)
    }

    /// Time-modulated symbol whose track is drawn from `seed`.
    pub fn seeded_time_modulated(
        gamma: f64,
        horizon: f64,
        pieces: usize,
        range: [f64; 2],
        seed: u64,
    ) -> Result<Self> {
        let tr = PiecewiseConstantTrack::seeded(horizon, pieces, range[0], range[1], seed)?;
        let mut s = Self::time_modulated(gamma, tr)?;
        s.seed = Some(seed);
        Ok(s)
    }

    /// ψ = −a(t)(Σ w_i ξ_i²)^{γ/2}; without a track a ≡ 1.
    pub fn anisotropic_power(
        gamma: f64,
        weights: Vec<f64>,
        a: Option<PiecewiseConstantTrack>,
    ) -> Result<Self> {
        Self::build(SymbolKind::AnisotropicPower, gamma, a, Some(weights))
    }

    /// ψ = −(1 + i b(t))|ξ|^γ.
    pub fn complex_shift(gamma: f64, b: PiecewiseConstantTrack) -> Result<Self> {
        Self::build(SymbolKind::ComplexShift, gamma, Some(b), None)
    }

    pub fn with_max_derivative_order(mut self, n: u32) -> Self {
        self.max_derivative_order = n;
        self
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn track(&self) -> Option<&PiecewiseConstantTrack> {
        self.track.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn max_derivative_order(&self) -> u32 {
        self.max_derivative_order
    }

    /// True when ψ is real for every (t, ξ).
    pub fn is_real(&self) -> bool {
        match self.kind {
            SymbolKind::ComplexShift => self
                .track
                .as_ref()
                .map(|t| t.values().iter().all(|&b| b == 0.0))
                .unwrap_or(true),
            _ => true,
        }
    }

    /// Time breakpoints the grid must contain; empty when ψ is time-independent.
    pub fn breakpoints(&self) -> &[f64] {
        match (&self.kind, &self.track) {
            (SymbolKind::FractionalLaplacian, _) | (_, None) => &[],
            (_, Some(t)) => t.breakpoints(),
        }
    }

    fn direction_weights(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.weights {
            Some(w) if w.len() == dim => Ok(w.clone()),
            Some(w) => input(format!(
                "symbol has {} direction weights but ξ has dimension {dim}",
                w.len()
            )),
            None => Ok(vec![1.0; dim]),
        }
    }

    fn check_xi(xi: &[f64]) -> Result<()> {
        if xi.is_empty() || xi.iter().any(|x| !x.is_finite()) {
            return input("ξ must be a non-empty finite vector");
        }
        Ok(())
    }

    /// `(Σ w_i ξ_i²)^{γ/2}`.
    pub fn profile(&self, xi: &[f64]) -> Result<f64> {
        Self::check_xi(xi)?;
        let w = self.direction_weights(xi.len())?;
        let s: f64 = w.iter().zip(xi).map(|(w, x)| w * x * x).sum();
        Ok(s.powf(0.5 * self.gamma))
    }

    /// Profile on a precomputed `|ξ|²`-type quadratic form, skipping checks.
    pub(crate) fn profile_unchecked(&self, xi: &[f64]) -> f64 {
        let s: f64 = match &self.weights {
            Some(w) => w.iter().zip(xi).map(|(w, x)| w * x * x).sum(),
            None => xi.iter().map(|x| x * x).sum(),
        };
        if self.gamma == 2.0 {
            s
        } else {
            s.powf(0.5 * self.gamma)
        }
    }

    /// The time factor c(t) with ψ(t, ξ) = c(t)·profile(ξ).
    pub fn coefficient(&self, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return input("t must be finite");
        }
        let v = |tr: &Option<PiecewiseConstantTrack>| match tr {
            Some(tr) => tr.value_at(t),
            None => Ok(1.0),
        };
        Ok(match self.kind {
            SymbolKind::FractionalLaplacian => Complex64::new(-1.0, 0.0),
            SymbolKind::TimeModulated | SymbolKind::AnisotropicPower => {
                Complex64::new(-v(&self.track)?, 0.0)
            }
            SymbolKind::ComplexShift => Complex64::new(-1.0, -v(&self.track)?),
        })
    }

    /// `∫_s^t c(r) dr`, exact for piecewise-constant tracks.
    pub fn coefficient_integral(&self, s: f64, t: f64) -> Result<Complex64> {
        if !(s.is_finite() && t.is_finite()) {
            return input("time arguments must be finite");
        }
        if s > t {
            return input(format!("need s <= t, got s={s}, t={t}"));
        }
        let integ = |tr: &Option<PiecewiseConstantTrack>| match tr {
            Some(tr) => tr.integral(s, t),
            None => Ok(t - s),
        };
        Ok(match self.kind {
            SymbolKind::FractionalLaplacian => Complex64::new(-(t - s), 0.0),
            SymbolKind::TimeModulated | SymbolKind::AnisotropicPower => {
                Complex64::new(-integ(&self.track)?, 0.0)
            }
            SymbolKind::ComplexShift => Complex64::new(-(t - s), -integ(&self.track)?),
        })
    }

    /// ψ(t, ξ).
    pub fn eval(&self, t: f64, xi: &[f64]) -> Result<Complex64> {
        let p = self.profile(xi)?;
        Ok(self.coefficient(t)? * p)
    }

    /// `D^α_ξ ψ(t, ξ)` in closed form.
    pub fn eval_derivative(&self, t: f64, xi: &[f64], alpha: &[u32]) -> Result<Complex64> {
        Self::check_xi(xi)?;
        if alpha.len() != xi.len() {
            return input("multi-index and ξ have different dimensions");
        }
        let order: u32 = alpha.iter().sum();
        if order > self.max_derivative_order {
            return Err(Error::Capability(format!(
                "derivative order {order} exceeds available order {}",
                self.max_derivative_order
            )));
        }
        let w = self.direction_weights(xi.len())?;
        let d = ProfileDerivative::new(&w, self.gamma, alpha);
        Ok(self.coefficient(t)? * d.eval(xi)?)
    }

    /// Time samples used by default sample plans: track midpoints plus the
    /// midpoints of eight equal pieces of the horizon.
    fn default_times(&self) -> Vec<f64> {
        let horizon = self.track.as_ref().map(|t| t.horizon()).unwrap_or(1.0);
        let mut ts: Vec<f64> = (0..8).map(|k| horizon * (k as f64 + 0.5) / 8.0).collect();
        if let Some(tr) = &self.track {
            ts.extend(tr.midpoints());
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// κ̂ = min over samples of Re[−ψ(t, ξ)]/|ξ|^γ.
    pub fn ellipticity_margin(&self, plan: &SamplePlan) -> Result<f64> {
        plan.validate()?;
        let mut kappa = f64::INFINITY;
        for &t in &plan.times {
            let c = self.coefficient(t)?;
            for xi in plan.points() {
                let v = (-(c * self.profile(&xi)?)).re / abs_pow(&xi, self.gamma);
                kappa = kappa.min(v);
            }
        }
        Ok(kappa)
    }

    /// M̂ = max over samples and |α| ≤ n of |D^α ψ|·|ξ|^{|α|−γ}.
    pub fn regular_upper_bound(&self, n: u32, plan: &SamplePlan) -> Result<f64> {
        if n > self.max_derivative_order {
            return Err(Error::Capability(format!(
                "regular bound of order {n} exceeds available order {}",
                self.max_derivative_order
            )));
        }
        plan.validate()?;
        let dim = plan.dim;
        let w = self.direction_weights(dim)?;
        let derivs: Vec<(u32, ProfileDerivative)> = multi_indices(dim, n)
            .into_iter()
            .map(|a| (a.iter().sum(), ProfileDerivative::new(&w, self.gamma, &a)))
            .collect();
        let cmax = plan
            .times
            .iter()
            .map(|&t| self.coefficient(t).map(|c| c.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let mut m = 0.0f64;
        for xi in plan.points() {
            for (ord, d) in &derivs {
                let v = d.eval(&xi)?.abs() / abs_pow(&xi, self.gamma - *ord as f64);
                m = m.max(v);
            }
        }
        Ok(cmax * m)
    }

    pub fn default_plan(&self, dim: usize) -> SamplePlan {
        SamplePlan::log_spaced(dim, 1e-2, 1e2, 41, 16, self.default_times())
    }

    /// Sampled certification summary for reports.
    pub fn certify(&self, dim: usize, n: u32) -> Result<Certification> {
        let plan = self.default_plan(dim);
        Ok(Certification {
            kappa: self.ellipticity_margin(&plan)?,
            bound: self.regular_upper_bound(n, &plan)?,
            order: n,
            label: "sampled bound",
        })
    }
}

/// Result of sampling the structural conditions.
#[derive(Clone, Debug, Serialize)]
pub struct Certification {
    pub kappa: f64,
    pub bound: f64,
    pub order: u32,
    pub label: &'static str,
}

impl Certification {
    pub fn elliptic(&self) -> bool {
        self.kappa > 0.0
    }
}

/// `|x|^e`, rounded like the isotropic profile.
fn abs_pow(x: &[f64], e: f64) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    if e == 2.0 {
        s
    } else {
        s.powf(0.5 * e)
    }
}

/// Sample points for sup/inf certification.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub dim: usize,
    pub radii: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

impl SamplePlan {
    /// `count` radii log-spaced over `[lo, hi]`; `angles` equispaced
    /// directions in d=2, ±1 in d=1.
    pub fn log_spaced(
        dim: usize,
        lo: f64,
        hi: f64,
        count: usize,
        angles: usize,
        times: Vec<f64>,
    ) -> Self {
        let radii = (0..count)
            .map(|k| {
                let u = k as f64 / (count.max(2) - 1) as f64;
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            })
            .collect();
        let directions = match dim {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..angles)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect(),
            _ => {
                // coordinate axes and the diagonals
                let mut v = Vec::new();
                for i in 0..dim {
                    for sgn in [1.0, -1.0] {
                        let mut e = vec![0.0; dim];
                        e[i] = sgn;
                        v.push(e);
                    }
                }
                let c = 1.0 / (dim as f64).sqrt();
                v.push(vec![c; dim]);
                v.push(vec![-c; dim]);
                v
            }
        };
        Self {
            dim,
            radii,
            directions,
            times,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self
            .radii
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        if self.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return input("sample radii must be positive and finite");
        }
        if (hi / lo).log10() < 4.0 - 1e-9 {
            return input("sample radii must span at least 4 decades");
        }
        let need = if self.dim == 1 { 2 } else { 16 };
        if self.directions.len() < need {
            return input(format!("sample plan needs at least {need} directions"));
        }
        if self.times.len() < 8 {
            return input("sample plan needs at least 8 time samples");
        }
        Ok(())
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.radii.iter().flat_map(move |&r| {
            self.directions
                .iter()
                .map(move |d| d.iter().map(|c| c * r).collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm13() -> Symbol {
        let tr = PiecewiseConstantTrack::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0]).unwrap();
        Symbol::time_modulated(2.0, tr).unwrap()
    }

    #[test]
    fn eval_examples() {
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        assert_eq!(h.eval(0.0, &[3.0]).unwrap(), Complex64::new(-9.0, 0.0));
        let p = Symbol::fractional_laplacian(1.0).unwrap();
        assert_eq!(p.eval(0.3, &[0.0]).unwrap(), Complex64::new(0.0, 0.0));
        let tm = Symbol::time_modulated(2.0, PiecewiseConstantTrack::constant(1.0, 2.0).unwrap())
            .unwrap();
        assert_eq!(tm.eval(0.5, &[1.0, 1.0]).unwrap().re, -4.0);
        assert!(h.eval(0.0, &[f64::NAN]).is_err());
    }

    #[test]
    fn derivative_examples() {
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        assert_eq!(h.eval_derivative(0.0, &[3.0], &[1]).unwrap().re, -6.0);
        assert_eq!(h.eval_derivative(0.0, &[5.0], &[2]).unwrap().re, -2.0);
        let p = Symbol::fractional_laplacian(1.0).unwrap();
        let d = p.eval_derivative(0.0, &[2.0], &[1]).unwrap().re;
        assert!((d + 1.0).abs() < 1e-15);
        assert!(matches!(
            p.eval_derivative(0.0, &[0.0], &[1]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            h.eval_derivative(0.0, &[1.0], &[7]),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn margins_and_bounds() {
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        let plan = h.default_plan(1);
        assert_eq!(h.ellipticity_margin(&plan).unwrap(), 1.0);
        assert_eq!(h.regular_upper_bound(0, &plan).unwrap(), 1.0);
        assert_eq!(h.regular_upper_bound(2, &plan).unwrap(), 2.0);
        let tm = tm13();
        let plan = tm.default_plan(2);
        assert_eq!(tm.ellipticity_margin(&plan).unwrap(), 1.0);
        assert!((tm.regular_upper_bound(0, &plan).unwrap() - 3.0).abs() < 1e-12);
        let cs = Symbol::complex_shift(2.0, PiecewiseConstantTrack::constant(1.0, 0.5).unwrap())
            .unwrap();
        let plan = cs.default_plan(2);
        assert!((cs.ellipticity_margin(&plan).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plan_validation() {
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        let narrow = SamplePlan::log_spaced(2, 1.0, 10.0, 5, 16, vec![0.5; 8]);
        assert!(h.ellipticity_margin(&narrow).is_err());
        let few = SamplePlan::log_spaced(2, 1e-2, 1e2, 5, 4, vec![0.5; 8]);
        assert!(h.ellipticity_margin(&few).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = tm13();
        let j = serde_json::to_string(&s).unwrap();
        let back: Symbol = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        let seeded: Symbol = serde_json::from_str(
            r#"{"kind":"time_modulated","gamma":2,"seed":3,"random_track":{"horizon":1,"pieces":4}}"#,
        )
        .unwrap();
        assert_eq!(seeded.track().unwrap().values().len(), 4);
        assert!(serde_json::from_str::<Symbol>(r#"{"kind":"time_modulated","gamma":2}"#).is_err());
        assert!(
            serde_json::from_str::<Symbol>(r#"{"kind":"fractional_laplacian","gamma":-1}"#)
                .is_err()
        );
    }
}
