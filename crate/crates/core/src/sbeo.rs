//! The battery-aware placement problem: instances, solutions, replay,
//! constraint checking, the max-DoD objective and an exhaustive oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{BatteryTrace, GslPowerMode, PowerParams, SlotLoad};
use crate::ids::{Node, SatId, StationId, TaskId};
use crate::nettopo::{transfer_slots, FlowBook, GroundQueues, GroundTransfer, LinkSharing, RouteError};
use crate::world::{SunSeries, VisWindow, World, WorldDef};

/// (src, z, T_arv, T_cp, T_ddl) with slot-valued times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: TaskId,
    pub src: SatId,
    pub size_bits: f64,
    pub arrival: usize,
    pub compute_slots: usize,
    pub deadline: usize,
}

impl Task {
    /// Latest start that still meets the deadline.
    pub fn latest_start(&self) -> usize {
        self.deadline - self.compute_slots
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if !(self.size_bits > 0.0 && self.size_bits.is_finite()) {
            return Err(InstanceError::BadTask(self.id, "size must be positive"));
        }
        if self.compute_slots == 0 {
            return Err(InstanceError::BadTask(self.id, "compute time must be at least one slot"));
        }
        if self.arrival + self.compute_slots > self.deadline {
            return Err(InstanceError::BadTask(self.id, "deadline leaves no room to compute"));
        }
        Ok(())
    }
}

/// Where a task runs and when.
///
/// For a satellite, `start` is the first processing slot. For a ground
/// station it is the slot at which the downlink is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub dst: Node,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub placements: Vec<Option<Placement>>,
}

impl Solution {
    pub fn new(num_tasks: usize) -> Self {
        Solution { placements: vec![None; num_tasks] }
    }

    pub fn get(&self, k: TaskId) -> Option<Placement> {
        self.placements.get(k.0).copied().flatten()
    }

    /// K_s.
    pub fn tasks_on(&self, s: SatId) -> impl Iterator<Item = TaskId> + '_ {
        self.placements
            .iter()
            .enumerate()
            .filter(move |(_, p)| matches!(p, Some(p) if p.dst == Node::Sat(s)))
            .map(|(k, _)| TaskId(k))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("{0}: {1}")]
    BadTask(TaskId, &'static str),
    #[error("task at position {position} has id {id}; ids must be 0..n in order")]
    TaskOrder { position: usize, id: TaskId },
    #[error("{0}: source satellite does not exist")]
    UnknownSource(TaskId),
    #[error("{task}: deadline {deadline} is past the horizon {horizon}")]
    PastHorizon { task: TaskId, deadline: usize, horizon: usize },
    #[error(transparent)]
    Power(#[from] crate::energy::EnergyError),
    #[error("malformed instance: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbeoInstance {
    pub world: World,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub power: PowerParams,
    #[serde(default)]
    pub gsl_mode: GslPowerMode,
    #[serde(default)]
    pub link_sharing: LinkSharing,
}

impl SbeoInstance {
    pub fn new(world: World, tasks: Vec<Task>, power: PowerParams) -> Result<Self, InstanceError> {
        let inst = SbeoInstance {
            world,
            tasks,
            power,
            gsl_mode: GslPowerMode::default(),
            link_sharing: LinkSharing::default(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        self.power.validate()?;
        for (i, t) in self.tasks.iter().enumerate() {
            if t.id.0 != i {
                return Err(InstanceError::TaskOrder { position: i, id: t.id });
            }
            t.validate()?;
            if t.src.0 >= self.world.num_sats() {
                return Err(InstanceError::UnknownSource(t.id));
            }
            if t.deadline > self.world.horizon() {
                return Err(InstanceError::PastHorizon {
                    task: t.id,
                    deadline: t.deadline,
                    horizon: self.world.horizon(),
                });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let inst: SbeoInstance = serde_json::from_str(text).map_err(|e| InstanceError::Format(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn task(&self, k: TaskId) -> &Task {
        &self.tasks[k.0]
    }

    /// Downlink duration of a task in fractional slots.
    pub fn ground_slots(&self, k: TaskId) -> f64 {
        transfer_slots(self.task(k).size_bits, self.world.gsl_capacity_bps(), self.world.slot_seconds())
    }
}

/// Whether the ground-link draw applies to `s` during slot `t`.
pub fn gsl_power_on(
    world: &World,
    mode: GslPowerMode,
    transfers: &[(SatId, GroundTransfer)],
    s: SatId,
    t: usize,
) -> bool {
    match mode {
        GslPowerMode::Connectivity => world.gsl_connected(s, t),
        GslPowerMode::Transmit => {
            transfers.iter().any(|(src, tr)| *src == s && tr.begin < (t + 1) as f64 && tr.finish > t as f64)
        }
    }
}

/// Physical consequences of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// T_of: the slot a satellite-bound transfer completed, or the
    /// fractional downlink finish for a station.
    pub offload_finish: Vec<Option<f64>>,
    pub ground: Vec<Option<GroundTransfer>>,
    pub battery: BatteryTrace,
    pub route_error: Option<RouteError>,
}

pub fn replay(inst: &SbeoInstance, sol: &Solution) -> Replay {
    let world = &inst.world;
    let horizon = world.horizon();
    let n = inst.tasks.len();
    let mut offload_finish = vec![None; n];
    let mut ground = vec![None; n];

    let mut ground_order: Vec<(usize, TaskId, StationId)> = Vec::new();
    let mut flow_starts: Vec<(usize, TaskId, SatId)> = Vec::new();
    for task in &inst.tasks {
        match sol.get(task.id).map(|p| (p.dst, p.start)) {
            Some((Node::Sat(d), _)) if d == task.src => offload_finish[task.id.0] = Some(task.arrival as f64),
            Some((Node::Sat(d), _)) if d.0 < world.num_sats() => flow_starts.push((task.arrival, task.id, d)),
            Some((Node::Ground(g), start)) if g.0 < world.num_stations() => ground_order.push((start, task.id, g)),
            _ => {}
        }
    }

    ground_order.sort();
    let mut queues = GroundQueues::new(world.num_stations());
    let mut transfers = Vec::new();
    for &(start, k, g) in &ground_order {
        let tr = queues.admit(g, start, inst.ground_slots(k));
        ground[k.0] = Some(tr);
        offload_finish[k.0] = Some(tr.finish);
        transfers.push((inst.task(k).src, tr));
    }

    flow_starts.sort();
    let mut book = FlowBook::new(inst.link_sharing);
    let mut route_error = None;
    let mut next = 0;
    for t in 0..horizon {
        while next < flow_starts.len() && flow_starts[next].0 == t {
            let (_, k, d) = flow_starts[next];
            book.start(k, inst.task(k).src, d, inst.task(k).size_bits);
            next += 1;
        }
        match book.step(world, t) {
            Ok(done) => {
                for k in done {
                    offload_finish[k.0] = Some(t as f64);
                }
            }
            Err(e) => {
                route_error = Some(e);
                break;
            }
        }
    }

    let battery = battery_for(inst, sol, &transfers);
    Replay { offload_finish, ground, battery, route_error }
}

/// Number of tasks processed by each satellite in each slot of the horizon.
fn processing_counts(inst: &SbeoInstance, sol: &Solution) -> Vec<Vec<u32>> {
    let horizon = inst.world.horizon();
    let mut counts = vec![vec![0u32; horizon]; inst.world.num_sats()];
    for task in &inst.tasks {
        if let Some(Placement { dst: Node::Sat(s), start }) = sol.get(task.id) {
            if s.0 < counts.len() {
                for t in start..(start + task.compute_slots).min(horizon) {
                    counts[s.0][t] += 1;
                }
            }
        }
    }
    counts
}

fn battery_for(inst: &SbeoInstance, sol: &Solution, transfers: &[(SatId, GroundTransfer)]) -> BatteryTrace {
    let world = &inst.world;
    let counts = processing_counts(inst, sol);
    let mut trace = BatteryTrace::new(world.num_sats(), inst.power.battery_j());
    for t in 0..world.horizon() {
        for s in world.sats() {
            let load = SlotLoad {
                sunlit: world.sunlit(s, t),
                processing: counts[s.0][t],
                gsl_on: gsl_power_on(world, inst.gsl_mode, transfers, s, t),
            };
            trace.push(s, t, &inst.power, world.isl_count(), world.slot_seconds(), load);
        }
    }
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Unscheduled {
        task: TaskId,
    },
    UnknownDestination {
        task: TaskId,
        dst: Node,
    },
    /// More than one task on a satellite in one slot.
    Overlap {
        sat: SatId,
        slot: usize,
        tasks: Vec<TaskId>,
    },
    /// Processing starts before the input has arrived.
    ProcessBeforeOffload {
        task: TaskId,
        offload_finish: usize,
        start: usize,
    },
    /// The transfer did not complete within the horizon.
    BeyondHorizon {
        task: TaskId,
    },
    DeadlineMiss {
        task: TaskId,
        completion: f64,
        deadline: usize,
    },
    GroundNotVisible {
        task: TaskId,
        station: StationId,
        slot: usize,
    },
    StartBeforeArrival {
        task: TaskId,
        start: usize,
        arrival: usize,
    },
    Unroutable {
        task: TaskId,
        slot: usize,
    },
}

/// Completion time of a placed task in slots, if it completes.
pub fn completion(task: &Task, placement: Placement, replay: &Replay) -> Option<f64> {
    match placement.dst {
        Node::Sat(_) => Some((placement.start + task.compute_slots) as f64),
        Node::Ground(_) => replay.ground[task.id.0].map(|g| g.finish),
    }
}

fn violations_for(inst: &SbeoInstance, sol: &Solution, rp: &Replay) -> Vec<Violation> {
    let world = &inst.world;
    let mut out = Vec::new();
    if let Some(RouteError::Unreachable { slot, .. } | RouteError::StalePath { slot, .. }) = rp.route_error {
        for task in &inst.tasks {
            if let Some(Placement { dst: Node::Sat(d), .. }) = sol.get(task.id) {
                if d != task.src && rp.offload_finish[task.id.0].is_none() {
                    out.push(Violation::Unroutable { task: task.id, slot });
                }
            }
        }
    }
    for task in &inst.tasks {
        let k = task.id;
        let Some(p) = sol.get(k) else {
            out.push(Violation::Unscheduled { task: k });
            continue;
        };
        match p.dst {
            Node::Sat(s) if s.0 >= world.num_sats() => {
                out.push(Violation::UnknownDestination { task: k, dst: p.dst });
                continue;
            }
            Node::Ground(g) if g.0 >= world.num_stations() => {
                out.push(Violation::UnknownDestination { task: k, dst: p.dst });
                continue;
            }
            _ => {}
        }
        match p.dst {
            Node::Sat(_) => match rp.offload_finish[k.0] {
                None => {
                    if rp.route_error.is_none() {
                        out.push(Violation::BeyondHorizon { task: k });
                    }
                }
                Some(of) => {
                    let of = of as usize;
                    if of > p.start {
                        out.push(Violation::ProcessBeforeOffload { task: k, offload_finish: of, start: p.start });
                    }
                }
            },
            Node::Ground(g) => {
                if p.start < task.arrival {
                    out.push(Violation::StartBeforeArrival { task: k, start: p.start, arrival: task.arrival });
                }
                if !world.station_visible(task.src, g, p.start) {
                    out.push(Violation::GroundNotVisible { task: k, station: g, slot: p.start });
                }
            }
        }
        if let Some(done) = completion(task, p, rp) {
            if done > task.deadline as f64 {
                out.push(Violation::DeadlineMiss { task: k, completion: done, deadline: task.deadline });
            }
        }
    }
    for s in world.sats() {
        let mut by_slot: Vec<Vec<TaskId>> = Vec::new();
        for k in sol.tasks_on(s) {
            let task = inst.task(k);
            let start = sol.get(k).expect("placed").start;
            for t in start..start + task.compute_slots {
                if t >= by_slot.len() {
                    by_slot.resize(t + 1, Vec::new());
                }
                by_slot[t].push(k);
            }
        }
        for (slot, tasks) in by_slot.into_iter().enumerate() {
            if tasks.len() > 1 {
                out.push(Violation::Overlap { sat: s, slot, tasks });
            }
        }
    }
    out
}

/// Result of replaying a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub violations: Vec<Violation>,
    pub objective: f64,
    pub replay: Replay,
}

pub fn evaluate(inst: &SbeoInstance, sol: &Solution) -> Evaluation {
    let rp = replay(inst, sol);
    let violations = violations_for(inst, sol, &rp);
    Evaluation { violations, objective: rp.battery.global_max_dod(), replay: rp }
}

/// Every violated constraint, with slot and task ids. Empty iff feasible.
pub fn check_feasible(inst: &SbeoInstance, sol: &Solution) -> Vec<Violation> {
    evaluate(inst, sol).violations
}

/// Maximum DoD over all satellites and slots.
pub fn objective(inst: &SbeoInstance, sol: &Solution) -> f64 {
    let rp = replay(inst, sol);
    rp.battery.global_max_dod()
}

pub const ORACLE_MAX_CANDIDATES: f64 = 1e7;
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("search space of {0:.3e} candidates exceeds the limit")]
    TooLarge(f64),
    #[error("no candidate satisfies every constraint")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub solution: Solution,
    pub objective: f64,
    pub candidates: f64,
    pub evaluated: u64,
}

/// Candidate placements per task, in (dst, start) order.
fn candidate_placements(inst: &SbeoInstance, task: &Task) -> Vec<Placement> {
    let world = &inst.world;
    let mut out = Vec::new();
    for s in world.sats() {
        for start in task.arrival..=task.latest_start() {
            out.push(Placement { dst: Node::Sat(s), start });
        }
    }
    for g in 0..world.num_stations() {
        let g = StationId(g);
        for start in task.arrival..=task.deadline.min(world.horizon().saturating_sub(1)) {
            if world.station_visible(task.src, g, start) {
                out.push(Placement { dst: Node::Ground(g), start });
            }
        }
    }
    out
}

/// Exhaustive minimizer of the objective over feasible solutions.
///
/// Ties within 1e-12 go to the lexicographically smallest (dst, start)
/// vector, which is the enumeration order.
pub fn brute_force_solve(inst: &SbeoInstance) -> Result<OracleResult, OracleError> {
    let options: Vec<Vec<Placement>> = inst.tasks.iter().map(|t| candidate_placements(inst, t)).collect();
    let candidates: f64 = options.iter().map(|o| o.len() as f64).product();
    if candidates > ORACLE_MAX_CANDIDATES {
        return Err(OracleError::TooLarge(candidates));
    }
    let mut search = Search {
        inst,
        options: &options,
        counts: vec![vec![0u32; inst.world.horizon()]; inst.world.num_sats()],
        current: Solution::new(inst.tasks.len()),
        best: None,
        evaluated: 0,
    };
    search.dfs(0);
    let evaluated = search.evaluated;
    match search.best {
        Some((objective, solution)) => Ok(OracleResult { solution, objective, candidates, evaluated }),
        None => Err(OracleError::Infeasible),
    }
}

struct Search<'a> {
    inst: &'a SbeoInstance,
    options: &'a [Vec<Placement>],
    counts: Vec<Vec<u32>>,
    current: Solution,
    best: Option<(f64, Solution)>,
    evaluated: u64,
}

impl Search<'_> {
    /// Max DoD from processing alone; more load never lowers it, so it
    /// bounds every completion of the partial assignment from below.
    fn lower_bound(&self) -> f64 {
        let world = &self.inst.world;
        let p = &self.inst.power;
        let cap = p.battery_j();
        let mut worst: f64 = 0.0;
        for s in world.sats() {
            let mut b = cap;
            for t in 0..world.horizon() {
                let load = SlotLoad {
                    sunlit: world.sunlit(s, t),
                    processing: self.counts[s.0][t],
                    gsl_on: self.inst.gsl_mode == GslPowerMode::Connectivity && world.gsl_connected(s, t),
                };
                b = crate::energy::battery_step(p, world.isl_count(), world.slot_seconds(), load, b).battery_j;
                worst = worst.max(crate::energy::dod(b, cap));
            }
        }
        worst
    }

    fn pruned(&self) -> bool {
        matches!(&self.best, Some((best, _)) if self.lower_bound() >= best - TIE_EPS)
    }

    fn dfs(&mut self, k: usize) {
        if self.pruned() {
            return;
        }
        if k == self.options.len() {
            self.evaluated += 1;
            let ev = evaluate(self.inst, &self.current);
            if ev.violations.is_empty() {
                let better = match &self.best {
                    None => true,
                    Some((best, _)) => ev.objective < best - TIE_EPS,
                };
                if better {
                    self.best = Some((ev.objective, self.current.clone()));
                }
            }
            return;
        }
        let cp = self.inst.tasks[k].compute_slots;
        for i in 0..self.options[k].len() {
            let p = self.options[k][i];
            if let Node::Sat(s) = p.dst {
                let row = &self.counts[s.0];
                if row[p.start..p.start + cp].iter().any(|&c| c > 0) {
                    continue;
                }
                self.counts[s.0][p.start..p.start + cp].iter_mut().for_each(|c| *c += 1);
            }
            self.current.placements[k] = Some(p);
            self.dfs(k + 1);
            self.current.placements[k] = None;
            if let Node::Sat(s) = p.dst {
                self.counts[s.0][p.start..p.start + cp].iter_mut().for_each(|c| *c -= 1);
            }
        }
    }
}

/// Random instance small enough for [`brute_force_solve`]: 1–3 satellites,
/// 1–4 tasks, at most 60 one-minute slots, at most one station.
pub fn random_tiny_instance<R: Rng + ?Sized>(rng: &mut R) -> SbeoInstance {
    let n = rng.gen_range(1..=3usize);
    let horizon = rng.gen_range(20..=60usize);
    let cycle = rng.gen_range(10..=30usize);
    let orbits: Vec<Vec<SatId>> = if n >= 2 && rng.gen_bool(0.5) {
        let mut o = vec![vec![SatId(0), SatId(1)]];
        o.extend((2..n).map(|i| vec![SatId(i)]));
        o
    } else {
        (0..n).map(|i| vec![SatId(i)]).collect()
    };
    let sun = (0..n)
        .map(|_| {
            let lit = rng.gen_range(cycle * 2 / 5..=cycle);
            let phase = rng.gen_range(0..cycle);
            SunSeries((0..horizon + cycle).map(|t| (t + phase) % cycle < lit).collect())
        })
        .collect();
    let mut isl_links: Vec<(SatId, SatId)> = (1..n).map(|i| (SatId(i - 1), SatId(i))).collect();
    if n == 3 {
        isl_links.push((SatId(0), SatId(2)));
    }
    let num_stations = rng.gen_range(0..=1usize);
    let mut gsl_windows = Vec::new();
    if num_stations == 1 {
        for s in 0..n {
            for _ in 0..rng.gen_range(0..=2) {
                let start = rng.gen_range(0..horizon - 1);
                let end = (start + rng.gen_range(2..=8)).min(horizon);
                gsl_windows.push(VisWindow { sat: SatId(s), station: StationId(0), start, end });
            }
        }
    }
    let world = World::new(WorldDef {
        slot_seconds: 60.0,
        horizon,
        cycle_slots: cycle,
        isl_count: crate::world::DEFAULT_ISL_COUNT,
        isl_capacity_bps: crate::world::DEFAULT_ISL_CAPACITY_BPS,
        gsl_capacity_bps: crate::world::DEFAULT_GSL_CAPACITY_BPS,
        num_stations,
        orbits,
        isl_links,
        sun,
        gsl_windows,
    })
    .expect("generated world is consistent");
    let num_tasks = rng.gen_range(1..=4usize);
    let mut drafts: Vec<(usize, usize, f64, usize, usize)> = (0..num_tasks)
        .map(|_| {
            let cp = rng.gen_range(1..=4usize);
            let slack = rng.gen_range(0..=8usize);
            let arrival = rng.gen_range(0..=horizon - cp - slack);
            let src = rng.gen_range(0..n);
            let size = 10f64.powf(rng.gen_range(8.0..10.3));
            (arrival, src, size, cp, arrival + cp + slack)
        })
        .collect();
    drafts.sort_by_key(|d| (d.0, d.1));
    let tasks = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (arrival, src, size_bits, compute_slots, deadline))| Task {
            id: TaskId(i),
            src: SatId(src),
            size_bits,
            arrival,
            compute_slots,
            deadline,
        })
        .collect();
    SbeoInstance::new(world, tasks, PowerParams::default()).expect("generated tasks are valid")
}
