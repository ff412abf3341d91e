//! Sunlight-aware task placement for satellite edge computing.
//!
//! The crate models a LEO constellation with inter-satellite and ground
//! links, a per-satellite battery, and several strategies that decide where
//! and when imaging tasks are processed. [`simkit`] runs whole scenarios;
//! [`sbeo`] checks and scores individual placements.

// `!(x > 0.0)` rejects NaN as well, which is the point of those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod energy;
pub mod ids;
pub mod nettopo;
pub mod orbital;
pub mod sbeo;
pub mod scheduler;
pub mod simkit;
pub mod world;

pub use baselines::StrategyKind;
pub use energy::{BatteryTrace, GslPowerMode, LifetimeModel, PowerParams};
pub use ids::{Node, SatId, StationId, TaskId};
pub use nettopo::LinkSharing;
pub use orbital::{Constellation, ConstellationSpec, GroundStation, GroundStationSet, Shell, Sky};
pub use sbeo::{Placement, SbeoInstance, Solution, Task, Violation};
pub use simkit::{run_scenario, Scenario, ScenarioConfig};
pub use world::World;
