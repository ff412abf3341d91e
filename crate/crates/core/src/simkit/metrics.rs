//! Per-task records and the aggregate report of one run.

use serde::{Deserialize, Serialize};

use crate::baselines::StrategyKind;
use crate::energy::{lifetime_estimate, LifetimeModel};
use crate::ids::{Node, SatId, TaskId};
use crate::sbeo::SbeoInstance;
use crate::scheduler::SchedEvent;
use crate::simkit::engine::SimOutput;

/// Where a task ended up, for the decision breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionClass {
    Ground,
    /// Processed on a satellite, every processing slot in sunlight.
    SunlitSat,
    ShadowedSat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: TaskId,
    pub src: SatId,
    pub dst: Option<Node>,
    pub arrival: usize,
    pub offload_finish: Option<f64>,
    /// First processing slot, or downlink begin for a station.
    pub start: Option<f64>,
    pub completion: Option<f64>,
    pub deadline: usize,
    pub met: bool,
    pub class: Option<DecisionClass>,
}

pub fn task_records(inst: &SbeoInstance, out: &SimOutput) -> Vec<TaskRecord> {
    let world = &inst.world;
    inst.tasks
        .iter()
        .map(|k| {
            let placement = out.solution.get(k.id);
            let (start, completion, class) = match placement {
                None => (None, None, None),
                Some(p) => match p.dst {
                    Node::Ground(_) => {
                        let tr = out.ground[k.id.0].expect("ground placement has a transfer");
                        (Some(tr.begin), Some(tr.finish), Some(DecisionClass::Ground))
                    }
                    Node::Sat(s) => {
                        let lit = (p.start..p.start + k.compute_slots).all(|t| world.sunlit(s, t));
                        let class = if lit { DecisionClass::SunlitSat } else { DecisionClass::ShadowedSat };
                        (Some(p.start as f64), Some((p.start + k.compute_slots) as f64), Some(class))
                    }
                },
            };
            // a satellite task only counts once its input arrived in time
            let arrived = match placement {
                Some(p) => out.offload_finish[k.id.0].is_some_and(|of| p.dst.is_ground() || of <= p.start as f64),
                None => false,
            };
            let met = arrived && completion.is_some_and(|c| c <= k.deadline as f64);
            TaskRecord {
                id: k.id,
                src: k.src,
                dst: placement.map(|p| p.dst),
                arrival: k.arrival,
                offload_finish: out.offload_finish[k.id.0],
                start,
                completion,
                deadline: k.deadline,
                met,
                class,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatMetrics {
    pub sat: SatId,
    pub max_dod: f64,
    pub mean_dod: f64,
    pub lifetime_years: f64,
    pub mean_cycle_dod: f64,
    pub processed_tasks: usize,
    pub brownouts: usize,
}

/// Completion latency quantiles in seconds, over tasks that completed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Latency {
    pub count: usize,
    pub mean_s: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub p99_s: f64,
    pub max_s: f64,
}

/// Share of decisions in percent; all zero without decisions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecisionShare {
    pub ground_pct: f64,
    pub sunlit_pct: f64,
    pub shadowed_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub infeasible_deadline: usize,
    pub no_feasible_destination: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: StrategyKind,
    pub num_sats: usize,
    pub num_tasks: usize,
    pub horizon_slots: usize,
    pub slot_seconds: f64,
    pub global_max_dod: f64,
    /// Mean over satellites of each satellite's maximum DoD.
    pub mean_max_dod: f64,
    /// Mean over satellites and slots.
    pub mean_dod: f64,
    pub latency: Latency,
    pub completed: usize,
    pub missed: usize,
    pub miss_rate: f64,
    pub decisions: DecisionShare,
    /// Satellite-processed tasks that ran entirely in sunlight.
    pub sunlit_processed_fraction: f64,
    pub lifetime_min_years: f64,
    pub lifetime_mean_years: f64,
    pub brownouts: usize,
    pub events: EventCounts,
    pub per_sat: Vec<SatMetrics>,
}

/// Nearest-rank quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn build_report(
    inst: &SbeoInstance,
    out: &SimOutput,
    records: &[TaskRecord],
    lifetime: &LifetimeModel,
) -> MetricsReport {
    let world = &inst.world;
    let dt = world.slot_seconds();
    let n = world.num_sats();
    let mut processed = vec![0usize; n];
    let mut brownouts = vec![0usize; n];
    for b in &out.battery.brownouts {
        brownouts[b.sat.0] += 1;
    }
    for r in records {
        if let Some(Node::Sat(s)) = r.dst {
            processed[s.0] += 1;
        }
    }
    let per_sat: Vec<SatMetrics> = world
        .sats()
        .map(|s| {
            let series = out.battery.dod_series(s);
            let life = lifetime_estimate(&series, world.cycle_slots(), dt, lifetime)
                .unwrap_or(crate::energy::LifetimeEstimate { years: 0.0, mean_cycle_dod: 0.0, degenerate: true });
            SatMetrics {
                sat: s,
                max_dod: out.battery.max_dod(s),
                mean_dod: out.battery.mean_dod(s),
                lifetime_years: life.years,
                mean_cycle_dod: life.mean_cycle_dod,
                processed_tasks: processed[s.0],
                brownouts: brownouts[s.0],
            }
        })
        .collect();
    let mean = |f: &dyn Fn(&SatMetrics) -> f64| {
        if per_sat.is_empty() {
            0.0
        } else {
            per_sat.iter().map(f).sum::<f64>() / per_sat.len() as f64
        }
    };

    let mut lat: Vec<f64> = records.iter().filter_map(|r| r.completion.map(|c| (c - r.arrival as f64) * dt)).collect();
    lat.sort_by(f64::total_cmp);
    let latency = Latency {
        count: lat.len(),
        mean_s: if lat.is_empty() { 0.0 } else { lat.iter().sum::<f64>() / lat.len() as f64 },
        p50_s: quantile(&lat, 0.5),
        p90_s: quantile(&lat, 0.9),
        p99_s: quantile(&lat, 0.99),
        max_s: lat.last().copied().unwrap_or(0.0),
    };

    let count = |c: DecisionClass| records.iter().filter(|r| r.class == Some(c)).count();
    let (g, sun, shade) =
        (count(DecisionClass::Ground), count(DecisionClass::SunlitSat), count(DecisionClass::ShadowedSat));
    let decided = g + sun + shade;
    let pct = |x: usize| if decided == 0 { 0.0 } else { 100.0 * x as f64 / decided as f64 };
    let missed = records.iter().filter(|r| !r.met).count();
    let mut events = EventCounts::default();
    for e in &out.events {
        match e {
            SchedEvent::InfeasibleDeadline { .. } => events.infeasible_deadline += 1,
            SchedEvent::NoFeasibleDestination { .. } => events.no_feasible_destination += 1,
        }
    }
    MetricsReport {
        strategy: out.strategy,
        num_sats: n,
        num_tasks: records.len(),
        horizon_slots: world.horizon(),
        slot_seconds: dt,
        global_max_dod: out.battery.global_max_dod(),
        mean_max_dod: mean(&|m| m.max_dod),
        mean_dod: mean(&|m| m.mean_dod),
        latency,
        completed: records.len() - missed,
        missed,
        miss_rate: if records.is_empty() { 0.0 } else { missed as f64 / records.len() as f64 },
        decisions: DecisionShare { ground_pct: pct(g), sunlit_pct: pct(sun), shadowed_pct: pct(shade) },
        sunlit_processed_fraction: if sun + shade == 0 { 0.0 } else { sun as f64 / (sun + shade) as f64 },
        lifetime_min_years: per_sat.iter().map(|m| m.lifetime_years).reduce(f64::min).unwrap_or(0.0),
        lifetime_mean_years: mean(&|m| m.lifetime_years),
        brownouts: out.battery.brownouts.len(),
        events,
        per_sat,
    }
}
