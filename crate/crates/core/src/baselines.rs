//! Comparison strategies.
//!
//! These are deliberately small stand-ins, not reimplementations of any
//! published system:
//!
//! * `LocalImmediate` processes every task on its source, first come first
//!   served.
//! * `IntraOrbitPipeline` deals tasks round-robin over the satellites of the
//!   source orbit.
//! * `GreedyPeer` sends each task to whichever of the source and its four
//!   ISL neighbours has the most stored energy, ignoring sunlight.
//! * `GroundOnly` waits for a visible station and downlinks everything.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{SatId, TaskId};
use crate::nettopo::transfer_slots;
use crate::scheduler::{nearest_available_station, Context, Decision, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    SunlightAware,
    LocalImmediate,
    IntraOrbitPipeline,
    GreedyPeer,
    GroundOnly,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::SunlightAware,
        StrategyKind::LocalImmediate,
        StrategyKind::IntraOrbitPipeline,
        StrategyKind::GreedyPeer,
        StrategyKind::GroundOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::SunlightAware => "sunlight-aware",
            StrategyKind::LocalImmediate => "local-immediate",
            StrategyKind::IntraOrbitPipeline => "intra-orbit-pipeline",
            StrategyKind::GreedyPeer => "greedy-peer",
            StrategyKind::GroundOnly => "ground-only",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected one of sunlight-aware, local-immediate, intra-orbit-pipeline, greedy-peer, ground-only)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// State of a baseline strategy.
#[derive(Debug, Clone)]
pub enum Baseline {
    LocalImmediate,
    IntraOrbitPipeline { next: Vec<usize> },
    GreedyPeer,
    GroundOnly,
}

impl Baseline {
    /// `None` for the sunlight-aware strategy, which lives in the scheduler.
    pub fn new(kind: StrategyKind, num_orbits: usize) -> Option<Self> {
        match kind {
            StrategyKind::SunlightAware => None,
            StrategyKind::LocalImmediate => Some(Baseline::LocalImmediate),
            StrategyKind::IntraOrbitPipeline => Some(Baseline::IntraOrbitPipeline { next: vec![0; num_orbits] }),
            StrategyKind::GreedyPeer => Some(Baseline::GreedyPeer),
            StrategyKind::GroundOnly => Some(Baseline::GroundOnly),
        }
    }

    pub fn dispatch(&mut self, ctx: &Context<'_>, schedule: &mut Schedule, k: TaskId, t: usize) -> Decision {
        let task = &ctx.tasks[k.0];
        let dst = match self {
            Baseline::LocalImmediate => task.src,
            Baseline::IntraOrbitPipeline { next } => {
                let orbit = ctx.world.orbit_of(task.src);
                let members = &ctx.world.orbits()[orbit];
                let dst = members[next[orbit] % members.len()];
                next[orbit] = (next[orbit] + 1) % members.len();
                dst
            }
            Baseline::GreedyPeer => greedy_peer(ctx, task.src, t),
            Baseline::GroundOnly => {
                let Some((g, _)) = nearest_available_station(ctx.world, schedule, task.src, t) else {
                    return Decision::Defer;
                };
                let dur = transfer_slots(task.size_bits, ctx.world.gsl_capacity_bps(), ctx.world.slot_seconds());
                return Decision::Ground(schedule.admit_ground(g, task, t, dur));
            }
        };
        if dst == task.src {
            schedule.append_fifo(dst, task, t);
            Decision::Local
        } else {
            schedule.mark_incoming(dst, k);
            Decision::Offload(dst)
        }
    }

    /// Receivers queue arriving tasks first come first served.
    pub fn on_arrival(&mut self, ctx: &Context<'_>, schedule: &mut Schedule, k: TaskId, dst: SatId, t: usize) {
        schedule.clear_incoming(dst, k);
        schedule.append_fifo(dst, &ctx.tasks[k.0], t);
    }
}

/// Source or ISL neighbour with the most energy at the end of slot t − 1;
/// ties prefer the source, then the lowest id.
pub fn greedy_peer(ctx: &Context<'_>, src: SatId, t: usize) -> SatId {
    let mut best = (src, ctx.battery.before(src, t));
    for &nb in ctx.world.isl_neighbors(src) {
        let b = ctx.battery.before(nb, t);
        // neighbours come in ascending id order, so strict improvement keeps the tie rule
        if b > best.1 {
            best = (nb, b);
        }
    }
    best.0
}
