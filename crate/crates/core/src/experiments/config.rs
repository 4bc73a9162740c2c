//! JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpacetimeGrid;
use crate::random::FieldFamily;
use crate::symbols::Symbol;
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Apriori,
    TScaling,
    KernelDecay,
    Hormander,
    WeightsAudit,
    MaximalAudit,
    Solve,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Apriori,
        Scenario::TScaling,
        Scenario::KernelDecay,
        Scenario::Hormander,
        Scenario::WeightsAudit,
        Scenario::MaximalAudit,
        Scenario::Solve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Apriori => "apriori",
            Scenario::TScaling => "t_scaling",
            Scenario::KernelDecay => "kernel_decay",
            Scenario::Hormander => "hormander",
            Scenario::WeightsAudit => "weights_audit",
            Scenario::MaximalAudit => "maximal_audit",
            Scenario::Solve => "solve",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s || sc.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
}

/// One kernel-decay case `(ε, m, α, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCase {
    pub epsilon: f64,
    #[serde(default)]
    pub m: u32,
    #[serde(default)]
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub n: u32,
}

/// A source point `(s, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub s: f64,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tcuts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<DecayCase>,
    /// dyadic box level for Hörmander runs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<i32>,
    /// dyadic box indices `(i₀, i₁, …)`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_indices: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<[Pair; 2]>,
    /// power-iteration steps for operator norms
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// compare against one grid refinement
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// compare against a doubled horizon
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double_horizon: Option<bool>,
    /// slice times for the slice-uniform A_p check
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_samples: Option<Vec<f64>>,
}

/// Weights for the mixed norm `L_q(ℝ, w₁; L_p(ℝ^d, w₂))`; the exponents
/// are the weights' own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedWeights {
    pub time: WeightSpec,
    pub space: WeightSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SpacetimeGrid>,
    /// space-time weight (or the single weight audited)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<MixedWeights>,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub fields: FieldFamily,
    /// family for the sharp–maximal check; defaults to `fields`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharp_fields: Option<FieldFamily>,
    /// master seed; family seeds are offsets from it
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario: Some(scenario),
            symbol: None,
            grid: None,
            weight: None,
            mixed: None,
            exponents: Exponents::default(),
            sweep: Sweep::default(),
            fields: FieldFamily::default(),
            sharp_fields: None,
            seed: 0,
            output: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn symbol(&self) -> Result<&Symbol> {
        self.symbol
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a `symbol`".into()))
    }

    pub fn grid(&self) -> Result<&SpacetimeGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a `grid`".into()))
    }

    /// `fields` with the master seed applied.
    pub fn family(&self) -> FieldFamily {
        let mut f = self.fields.clone();
        f.seed = self.seed.wrapping_add(f.seed);
        f
    }

    pub fn sharp_family(&self) -> FieldFamily {
        let mut f = self
            .sharp_fields
            .clone()
            .unwrap_or_else(|| self.fields.clone());
        f.seed = self.seed.wrapping_add(f.seed);
        f
    }
}
