//! Learning-and-scheduling laboratory for the empirical c-mu rule.
//!
//! A single server faces `N` jobs whose mean holding costs are unknown. Each
//! slot, every job still present reveals a random cost, the policy picks one
//! job to serve, and regret is measured against the c-mu rule run with the
//! true means.
//!
//! Core types are generic over the scalar type ([`Scalar`] for exact
//! arithmetic, [`Real`] where logarithms or sampling are needed). The aliases
//! below fix the common choices.

pub mod analysis;
pub mod costs;
pub mod engine;
pub mod error;
pub mod generators;
pub mod harness;
pub mod instance;
pub mod policies;
pub mod regret;
pub mod scalar;
pub mod verify;

pub use analysis::{
    brute_force_min_cost, clean_event_coverage, decomposition_check, loglog_slope,
    stochastic_decomposition_check, DecompositionResult, SlopeFit,
};
pub use costs::{confidence_radius, sample_cost, CostKind, CostModel, EstimatorState};
pub use engine::{replay_pair, simulate, simulate_with, SimOptions, Simulation, SlotRecord};
pub use error::{Error, Result};
pub use generators::{GeneratorSpec, LowerBoundSide};
pub use harness::{ExperimentConfig, ResultRow};
pub use instance::{Instance, InstanceFile, InstanceWarning, ServiceKind};
pub use policies::{preemption_length, PolicyConfig, PolicyKind, PolicyState, TsRule};
pub use regret::{benchmark_cost, gap_stats, regret, GapStats, RegretReport, ScheduleTrace};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type InstanceExact = Instance<Rational>;

pub type RegretReport64 = RegretReport<f64>;
pub type RegretReportExact = RegretReport<Rational>;

pub type GapStats64 = GapStats<f64>;
pub type GapStatsExact = GapStats<Rational>;

pub type Estimator64 = EstimatorState<f64>;
pub type Estimator32 = EstimatorState<f32>;

pub type Decomposition64 = DecompositionResult<f64>;
pub type DecompositionExact = DecompositionResult<Rational>;

pub type SlopeFit64 = SlopeFit<f64>;
pub type SlopeFit32 = SlopeFit<f32>;
