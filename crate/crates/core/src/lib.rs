//! Spectral solver and estimate workbench for parabolic equations driven by
//! time-measurable pseudo-differential operators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deriv;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod field;
pub mod fit;
pub mod grid;
pub mod harmonic;
pub mod io;
pub mod kernel;
pub mod norms;
pub mod par;
pub mod quad;
pub mod random;
pub mod report;
pub mod solver;
pub mod spectral;
pub mod symbols;
pub mod track;
pub mod weights;

pub use error::{Error, Result};
pub use field::{Field, Layout};
pub use grid::SpacetimeGrid;
pub use report::{EstimateReport, ReportRow, Verdict};
pub use symbols::{SamplePlan, Symbol, SymbolKind};
pub use track::PiecewiseConstantTrack;
pub use weights::WeightSpec;
