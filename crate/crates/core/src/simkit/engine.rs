//! The slot loop.
//!
//! Each slot runs, in order: orbit assignment at cycle boundaries, dispatch
//! of new and deferred tasks in id order, one step of every ISL transfer
//! (receivers plan tasks whose transfer completed), and one battery step for
//! every satellite.

use crate::baselines::{Baseline, StrategyKind};
use crate::energy::{BatteryTrace, SlotLoad};
use crate::ids::{SatId, TaskId};
use crate::nettopo::{FlowBook, GroundTransfer};
use crate::sbeo::{gsl_power_on, SbeoInstance, Solution};
use crate::scheduler::{Context, Decision, SchedEvent, Schedule, SunlightAware};

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub strategy: StrategyKind,
    pub solution: Solution,
    pub battery: BatteryTrace,
    /// Slot a satellite-bound transfer completed, or the fractional
    /// downlink finish for a station.
    pub offload_finish: Vec<Option<f64>>,
    pub ground: Vec<Option<GroundTransfer>>,
    /// Slot at which each task left its source's hands.
    pub dispatched: Vec<Option<usize>>,
    pub events: Vec<SchedEvent>,
    pub assignment_epochs: usize,
}

enum Policy {
    Sunlight(SunlightAware),
    Base(Baseline),
}

pub fn simulate(inst: &SbeoInstance, strategy: StrategyKind) -> SimOutput {
    let world = &inst.world;
    let tasks = &inst.tasks;
    let horizon = world.horizon();
    let mut policy = match Baseline::new(strategy, world.orbits().len()) {
        Some(b) => Policy::Base(b),
        None => Policy::Sunlight(SunlightAware::new()),
    };
    let mut arrivals: Vec<Vec<TaskId>> = vec![Vec::new(); horizon];
    for k in tasks {
        if k.arrival < horizon {
            arrivals[k.arrival].push(k.id);
        }
    }
    let mut schedule = Schedule::new(world.num_sats(), world.num_stations(), tasks.len());
    let mut battery = BatteryTrace::new(world.num_sats(), inst.power.battery_j());
    let mut book = FlowBook::new(inst.link_sharing);
    let mut flow_dst: Vec<Option<SatId>> = vec![None; tasks.len()];
    let mut offload_finish = vec![None; tasks.len()];
    let mut ground = vec![None; tasks.len()];
    let mut dispatched = vec![None; tasks.len()];
    let mut deferred: Vec<TaskId> = Vec::new();
    let mut epochs = 0;

    for t in 0..horizon {
        schedule.retire(t);
        if let Policy::Sunlight(sa) = &mut policy {
            let before = sa.assignment.as_ref().map(|a| a.start);
            sa.on_slot(world, tasks, t);
            if sa.assignment.as_ref().map(|a| a.start) != before {
                epochs += 1;
            }
        }

        let mut queue = std::mem::take(&mut deferred);
        queue.extend(arrivals[t].iter().copied());
        queue.sort();
        {
            let ctx = Context { world, power: &inst.power, tasks, battery: &battery };
            for k in queue {
                let decision = match &mut policy {
                    Policy::Sunlight(sa) => sa.select_offload(&ctx, &mut schedule, k, t),
                    Policy::Base(b) => b.dispatch(&ctx, &mut schedule, k, t),
                };
                match decision {
                    Decision::Defer => {
                        deferred.push(k);
                        continue;
                    }
                    Decision::Ground(tr) => {
                        ground[k.0] = Some(tr);
                        offload_finish[k.0] = Some(tr.finish);
                    }
                    Decision::Local => offload_finish[k.0] = Some(tasks[k.0].arrival as f64),
                    Decision::Offload(dst) => {
                        flow_dst[k.0] = Some(dst);
                        book.start(k, tasks[k.0].src, dst, tasks[k.0].size_bits);
                    }
                }
                dispatched[k.0] = Some(t);
            }

            let mut done = book.step(world, t).expect("the ISL grid is connected");
            done.sort();
            for k in done {
                let dst = flow_dst[k.0].expect("flow has a destination");
                offload_finish[k.0] = Some(t as f64);
                match &mut policy {
                    Policy::Sunlight(sa) => sa.on_arrival(&ctx, &mut schedule, k, dst, t),
                    Policy::Base(b) => b.on_arrival(&ctx, &mut schedule, k, dst, t),
                }
            }
        }

        for s in world.sats() {
            let load = SlotLoad {
                sunlit: world.sunlit(s, t),
                processing: schedule.processing_count(s, t),
                gsl_on: gsl_power_on(world, inst.gsl_mode, &schedule.transfers, s, t),
            };
            battery.push(s, t, &inst.power, world.isl_count(), world.slot_seconds(), load);
        }
    }

    let mut events = match policy {
        Policy::Sunlight(sa) => sa.events,
        Policy::Base(_) => Vec::new(),
    };
    if strategy == StrategyKind::SunlightAware {
        // transfers still running at the horizon are past their deadline
        for f in book.active() {
            let sat = flow_dst[f.task.0].expect("flow has a destination");
            events.push(SchedEvent::InfeasibleDeadline { task: f.task, sat, slot: horizon });
        }
    }
    SimOutput {
        strategy,
        solution: schedule.solution,
        battery,
        offload_finish,
        ground,
        dispatched,
        events,
        assignment_epochs: epochs,
    }
}
