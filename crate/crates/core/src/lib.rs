//! Loopy belief propagation on binary pairwise models and analysis of its
//! solution space.

pub mod accuracy;
pub mod bp;
pub mod coding;
pub mod error;
pub mod exact;
pub mod fixedpoints;
pub mod math;
pub mod model;
pub mod sbp;
pub mod stability;

pub use accuracy::{AccuracyReport, PatchClass, PatchReport, RsbCombination, RsbSubset};
pub use bp::{BPConfig, BPOutcome, MessageSet, Pseudomarginals, ReparamMessages, ScheduleKind};
pub use coding::{Channel, Decoder, FactorGraph};
pub use error::{Error, Result};
pub use exact::ExactSummary;
pub use fixedpoints::FixedPoint;
pub use model::{Graph, IsingModel, ModelJson, ParamSpec, PatchLayout};
pub use sbp::{SBPConfig, SBPOutcome};
pub use stability::{PhaseRegion, Spectrum, StabilityClass, StabilityRecord};
