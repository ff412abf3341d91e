//! Sunlight-aware scheduling: orbit assignment, orbit-based offloading and
//! deadline-first processing arrangement.
//!
//! The three stages run at different cadences. Orbit assignment runs once
//! per orbital cycle and pairs every task-producing orbit with idle orbits
//! whose combined sunlight matches its share of the load. Offloading runs
//! for each new task at its source. Arrangement runs whenever a satellite's
//! local queue changes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::energy::{BatteryTrace, PowerParams};
use crate::ids::{Node, SatId, StationId, TaskId};
use crate::nettopo::{transfer_slots, GroundQueues, GroundTransfer};
use crate::orbital::{orbital_period_s, ConstellationSpec};
use crate::sbeo::{Placement, Solution, Task};
use crate::world::World;

/// Slots per orbit: round(period / ΔT), at least 1.
pub fn orbital_cycle(period_s: f64, slot_seconds: f64) -> usize {
    ((period_s / slot_seconds).round() as usize).max(1)
}

/// Cycle length of the slowest shell of `spec`.
pub fn orbital_cycle_for(spec: &ConstellationSpec, slot_seconds: f64) -> usize {
    let period = spec.shells.iter().map(|s| orbital_period_s(s.altitude_km)).fold(0.0, f64::max);
    orbital_cycle(period, slot_seconds)
}

// ---------------------------------------------------------------------------
// knapsack

/// Largest DP table (items × capacity) before weights are scaled down.
pub const KNAPSACK_MAX_CELLS: u64 = 50_000_000;

/// 0/1 knapsack on `(id, weight)` items.
///
/// Picks the subset with the largest total weight not above `capacity`;
/// ties go to fewer items, then to the lexicographically smallest sorted id
/// list. Returns the chosen ids in ascending order.
pub fn knapsack_select(items: &[(usize, u64)], capacity: u64) -> Vec<usize> {
    knapsack_counted(items, capacity).0
}

fn knapsack_counted(items: &[(usize, u64)], capacity: u64) -> (Vec<usize>, u64) {
    let mut items: Vec<(usize, u64)> = items.to_vec();
    items.sort();
    let n = items.len() as u64;
    if n == 0 || capacity == 0 {
        return (Vec::new(), 0);
    }
    // scale so the table stays bounded; ceil on weights keeps the pick within capacity
    let scale = ((n * (capacity + 1)).div_ceil(KNAPSACK_MAX_CELLS)).max(1);
    let cap = (capacity / scale) as usize;
    let w: Vec<usize> = items.iter().map(|&(_, wt)| wt.div_ceil(scale) as usize).collect();
    const NONE: u8 = u8::MAX;
    let width = cap + 1;
    // f[i][c] = fewest items from i.. summing to exactly c
    let mut f = vec![NONE; (items.len() + 1) * width];
    f[items.len() * width] = 0;
    let mut ops = 0u64;
    for i in (0..items.len()).rev() {
        let (head, tail) = f.split_at_mut((i + 1) * width);
        let row = &mut head[i * width..];
        let next = &tail[..width];
        for c in 0..width {
            ops += 1;
            let skip = next[c];
            let take = if w[i] <= c && next[c - w[i]] != NONE { next[c - w[i]] + 1 } else { NONE };
            row[c] = skip.min(take);
        }
    }
    let Some(best) = (0..width).rev().find(|&c| f[c] != NONE) else {
        return (Vec::new(), ops);
    };
    let mut need = f[best];
    let mut rem = best;
    let mut picked = Vec::new();
    for i in 0..items.len() {
        if need == 0 {
            break;
        }
        let next = &f[(i + 1) * width..(i + 2) * width];
        if w[i] <= rem && next[rem - w[i]] == need - 1 {
            picked.push(items[i].0);
            rem -= w[i];
            need -= 1;
        }
    }
    (picked, ops)
}

// ---------------------------------------------------------------------------
// orbit assignment

/// Result of one orbit-assignment epoch starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitAssignment {
    pub start: usize,
    pub cycle: usize,
    /// Orbits whose satellites may receive tasks from orbit i; always contains i.
    pub alt_set: Vec<Vec<usize>>,
    /// Sunlit satellite-slots per orbit over the cycle.
    pub sunlit: Vec<u64>,
    /// Predicted processing slots per orbit over the cycle.
    pub task: Vec<u64>,
    pub weight: Vec<f64>,
    pub target: Vec<i64>,
    /// Orbits left unassigned after every task orbit has picked.
    pub idle: Vec<usize>,
    /// Elementary steps taken, for complexity checks.
    pub ops: u64,
}

/// Pairs task-producing orbits with idle orbits for the cycle starting at `t`.
///
/// `tasks` are the tasks predicted to arrive in `[t, t + cycle)`.
pub fn assign_orbits(world: &World, tasks: &[Task], t: usize) -> OrbitAssignment {
    let cycle = world.cycle_slots();
    let m = world.orbits().len();
    let mut ops = 0u64;
    let sunlit: Vec<u64> = world
        .orbits()
        .iter()
        .map(|orbit| {
            ops += orbit.len() as u64;
            orbit.iter().map(|&s| world.sunlit_count(s, t..t + cycle) as u64).sum()
        })
        .collect();
    let mut task = vec![0u64; m];
    for k in tasks.iter().filter(|k| (t..t + cycle).contains(&k.arrival)) {
        task[world.orbit_of(k.src)] += k.compute_slots as u64;
        ops += 1;
    }
    let total_task: u64 = task.iter().sum();
    let total_sunlit: u64 = sunlit.iter().sum();
    let mut alt_set: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut weight = vec![0.0; m];
    let mut target = vec![0i64; m];
    let mut idle: Vec<usize> = (0..m).filter(|&i| task[i] == 0).collect();
    if total_task == 0 {
        return OrbitAssignment { start: t, cycle, alt_set, sunlit, task, weight, target, idle, ops };
    }
    for i in 0..m {
        weight[i] = task[i] as f64 / total_task as f64;
        target[i] = (weight[i] * total_sunlit as f64).floor() as i64 - sunlit[i] as i64;
        ops += 1;
    }
    for i in (0..m).filter(|&i| task[i] > 0) {
        if target[i] < 0 || idle.is_empty() {
            continue;
        }
        let items: Vec<(usize, u64)> = idle.iter().map(|&j| (j, sunlit[j])).collect();
        let (chosen, dp_ops) = knapsack_counted(&items, target[i] as u64);
        ops += dp_ops + idle.len() as u64;
        idle.retain(|j| !chosen.contains(j));
        alt_set[i].extend(chosen);
    }
    OrbitAssignment { start: t, cycle, alt_set, sunlit, task, weight, target, idle, ops }
}

// ---------------------------------------------------------------------------
// arrangement

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrangeItem {
    pub task: TaskId,
    pub compute_slots: usize,
    pub deadline: usize,
}

impl From<&Task> for ArrangeItem {
    fn from(k: &Task) -> Self {
        ArrangeItem { task: k.id, compute_slots: k.compute_slots, deadline: k.deadline }
    }
}

impl Ord for ArrangeItem {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.deadline, self.task).cmp(&(other.deadline, other.task))
    }
}

impl PartialOrd for ArrangeItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrangement {
    /// (task, start) in processing order.
    pub starts: Vec<(TaskId, usize)>,
    /// Every processing slot of every task is sunlit.
    pub flag_sun: bool,
    /// Tasks whose latest feasible start is before `t`.
    pub infeasible: Vec<TaskId>,
}

/// First start `x` in `[from, to]` whose slots `[x, x + len)` are all sunlit.
pub fn first_sunlit_window(world: &World, s: SatId, from: usize, to: usize, len: usize) -> Option<usize> {
    let mut x = from;
    while x <= to {
        x = world.next_sunlit(s, x)?;
        if x > to {
            return None;
        }
        let lit = world.sunlit_count(s, x..x + len);
        if lit == len {
            return Some(x);
        }
        // skip past the first dark slot of the window
        let mut dark = x;
        while world.sunlit(s, dark) {
            dark += 1;
        }
        x = dark + 1;
    }
    None
}

/// Deadline-first arrangement of `items` on satellite `s` from slot `t`.
pub fn arrange(world: &World, s: SatId, t: usize, items: &[ArrangeItem]) -> Arrangement {
    let mut order: Vec<ArrangeItem> = items.to_vec();
    order.sort();
    let n = order.len();
    let mut latest = vec![0i64; n];
    let mut bound = i64::MAX;
    for i in (0..n).rev() {
        latest[i] = bound.min(order[i].deadline as i64) - order[i].compute_slots as i64;
        bound = latest[i];
    }
    let infeasible: Vec<TaskId> = (0..n).filter(|&i| latest[i] < t as i64).map(|i| order[i].task).collect();
    let mut flag_sun = true;
    let mut earliest = t;
    let mut starts = Vec::with_capacity(n);
    for i in 0..n {
        let cp = order[i].compute_slots;
        let start = if latest[i] < earliest as i64 {
            flag_sun = false;
            earliest
        } else {
            let last = latest[i] as usize;
            match first_sunlit_window(world, s, earliest, last, cp) {
                Some(x) => x,
                None => {
                    flag_sun = false;
                    last
                }
            }
        };
        starts.push((order[i].task, start));
        earliest = start + cp;
    }
    Arrangement { starts, flag_sun, infeasible }
}

// ---------------------------------------------------------------------------
// per-satellite queues shared by all strategies

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Planned {
    pub task: TaskId,
    pub start: usize,
    pub end: usize,
}

/// Event raised while scheduling; the simulation continues regardless.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchedEvent {
    /// Arrangement found a task whose deadline cannot be met.
    InfeasibleDeadline { task: TaskId, sat: SatId, slot: usize },
    /// No satellite of the chosen orbit looked able to meet the deadline.
    NoFeasibleDestination { task: TaskId, dst: SatId, slot: usize },
}

/// Mutable scheduling state: per-satellite plans, in-flight transfers and
/// ground downlink queues. Placements are mirrored into a [`Solution`].
#[derive(Debug, Clone)]
pub struct Schedule {
    plan: Vec<Vec<Planned>>,
    incoming: Vec<Vec<TaskId>>,
    pub ground: GroundQueues,
    pub transfers: Vec<(SatId, GroundTransfer)>,
    pub solution: Solution,
}

impl Schedule {
    pub fn new(num_sats: usize, num_stations: usize, num_tasks: usize) -> Self {
        Schedule {
            plan: vec![Vec::new(); num_sats],
            incoming: vec![Vec::new(); num_sats],
            ground: GroundQueues::new(num_stations),
            transfers: Vec::new(),
            solution: Solution::new(num_tasks),
        }
    }

    pub fn plan(&self, s: SatId) -> &[Planned] {
        &self.plan[s.0]
    }

    pub fn incoming(&self, s: SatId) -> &[TaskId] {
        &self.incoming[s.0]
    }

    /// First slot at or after `t` not taken by a task already running at `t`.
    pub fn busy_until(&self, s: SatId, t: usize) -> usize {
        self.plan[s.0].iter().filter(|p| p.start < t).map(|p| p.end).fold(t, usize::max)
    }

    /// End of the last planned task, or `t`.
    pub fn fifo_end(&self, s: SatId, t: usize) -> usize {
        self.plan[s.0].iter().map(|p| p.end).fold(t, usize::max)
    }

    /// Tasks planned on `s` that have not started by `t`.
    pub fn pending(&self, s: SatId, t: usize) -> Vec<TaskId> {
        self.plan[s.0].iter().filter(|p| p.start >= t).map(|p| p.task).collect()
    }

    /// Processing slots still owed by `s` from `t` on, in-flight tasks included.
    pub fn queued_slots(&self, s: SatId, t: usize, tasks: &[Task]) -> usize {
        let planned: usize = self.plan[s.0].iter().filter(|p| p.end > t).map(|p| p.end - p.start.max(t)).sum();
        let flying: usize = self.incoming[s.0].iter().map(|k| tasks[k.0].compute_slots).sum();
        planned + flying
    }

    pub fn processing_count(&self, s: SatId, t: usize) -> u32 {
        self.plan[s.0].iter().filter(|p| p.start <= t && t < p.end).count() as u32
    }

    fn set(&mut self, s: SatId, task: TaskId, start: usize, compute_slots: usize) {
        let list = &mut self.plan[s.0];
        list.retain(|p| p.task != task);
        list.push(Planned { task, start, end: start + compute_slots });
        list.sort_by_key(|p| (p.start, p.task));
        self.solution.placements[task.0] = Some(Placement { dst: Node::Sat(s), start });
    }

    /// Adopts an arrangement for the pending tasks of `s`.
    pub fn adopt(&mut self, s: SatId, arrangement: &Arrangement, tasks: &[Task]) {
        for &(k, start) in &arrangement.starts {
            self.set(s, k, start, tasks[k.0].compute_slots);
        }
    }

    /// Appends `task` after everything planned on `s`, no earlier than `t`.
    pub fn append_fifo(&mut self, s: SatId, task: &Task, t: usize) -> usize {
        let start = self.fifo_end(s, t);
        self.set(s, task.id, start, task.compute_slots);
        start
    }

    pub fn mark_incoming(&mut self, s: SatId, task: TaskId) {
        self.incoming[s.0].push(task);
    }

    pub fn clear_incoming(&mut self, s: SatId, task: TaskId) {
        self.incoming[s.0].retain(|&k| k != task);
    }

    /// Queues a downlink of `task` to `g` requested at `t`.
    pub fn admit_ground(&mut self, g: StationId, task: &Task, t: usize, duration_slots: f64) -> GroundTransfer {
        let tr = self.ground.admit(g, t, duration_slots);
        self.transfers.push((task.src, tr));
        self.solution.placements[task.id.0] = Some(Placement { dst: Node::Ground(g), start: t });
        tr
    }

    /// Drops plan entries finished before `t`.
    pub fn retire(&mut self, t: usize) {
        for list in &mut self.plan {
            list.retain(|p| p.end > t);
        }
        self.transfers.retain(|(_, tr)| tr.finish > t as f64);
    }

    /// Arrange items: every pending task on `s` at `from`, plus `extra`.
    pub fn arrange_items(&self, s: SatId, from: usize, tasks: &[Task], extra: Option<TaskId>) -> Vec<ArrangeItem> {
        self.pending(s, from).into_iter().chain(extra).map(|k| ArrangeItem::from(&tasks[k.0])).collect()
    }
}

/// Read-only inputs of a dispatch decision.
pub struct Context<'a> {
    pub world: &'a World,
    pub power: &'a PowerParams,
    pub tasks: &'a [Task],
    /// Battery levels up to the end of the previous slot.
    pub battery: &'a BatteryTrace,
}

/// Outcome of dispatching one task at its source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Ground(GroundTransfer),
    /// Planned on the source satellite.
    Local,
    /// Sent over ISLs; the receiver plans it when the transfer completes.
    Offload(SatId),
    /// Try again next slot.
    Defer,
}

/// Visible station with the earliest availability, then shortest ground
/// distance, then lowest id.
pub fn nearest_available_station(world: &World, schedule: &Schedule, s: SatId, t: usize) -> Option<(StationId, f64)> {
    world
        .visible_stations(s, t)
        .into_iter()
        .map(|g| (g, schedule.ground.available_at(g, t), world.ground_distance_km(s, g, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|(g, avail, _)| (g, avail))
}

/// E[s]: sunlight energy over the next cycle plus stored energy minus the
/// energy owed to queued work, all in joules.
pub fn query_energy(ctx: &Context<'_>, schedule: &Schedule, s: SatId, t: usize) -> f64 {
    let dt = ctx.world.slot_seconds();
    let cycle = ctx.world.cycle_slots();
    let sun = ctx.world.sunlit_count(s, t..t + cycle) as f64;
    let queued = schedule.queued_slots(s, t, ctx.tasks) as f64;
    ctx.power.solar_w * sun * dt + ctx.battery.before(s, t) - ctx.power.cp_w * queued * dt
}

/// The full three-stage strategy.
#[derive(Debug, Clone, Default)]
pub struct SunlightAware {
    pub assignment: Option<OrbitAssignment>,
    /// Processing slots sent to each orbit during the current epoch.
    pub cnt: Vec<u64>,
    pub events: Vec<SchedEvent>,
}

impl SunlightAware {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a new assignment epoch at every cycle boundary.
    pub fn on_slot(&mut self, world: &World, tasks: &[Task], t: usize) {
        if t % world.cycle_slots() == 0 || self.assignment.is_none() {
            self.assignment = Some(assign_orbits(world, tasks, t));
            self.cnt = vec![0; world.orbits().len()];
        }
    }

    fn pick_orbit(&self, world: &World, src: SatId) -> usize {
        let own = world.orbit_of(src);
        let Some(a) = &self.assignment else { return own };
        a.alt_set[own]
            .iter()
            .copied()
            .filter(|&j| a.sunlit[j] > 0)
            .min_by(|&x, &y| {
                // cnt[x]/sunlit[x] vs cnt[y]/sunlit[y] without division
                let lhs = self.cnt[x] as u128 * a.sunlit[y] as u128;
                let rhs = self.cnt[y] as u128 * a.sunlit[x] as u128;
                lhs.cmp(&rhs).then(x.cmp(&y))
            })
            .unwrap_or(own)
    }

    /// Chooses where task `k` (arriving now at its source) is processed.
    pub fn select_offload(&mut self, ctx: &Context<'_>, schedule: &mut Schedule, k: TaskId, t: usize) -> Decision {
        let world = ctx.world;
        let task = &ctx.tasks[k.0];
        let src = task.src;

        if let Some((g, avail)) = nearest_available_station(world, schedule, src, t) {
            let dur = transfer_slots(task.size_bits, world.gsl_capacity_bps(), world.slot_seconds());
            if avail + dur <= task.deadline as f64 {
                return Decision::Ground(schedule.admit_ground(g, task, t, dur));
            }
        }

        let from = schedule.busy_until(src, t);
        let local = arrange(world, src, from, &schedule.arrange_items(src, from, ctx.tasks, Some(k)));
        if local.flag_sun && local.infeasible.is_empty() {
            schedule.adopt(src, &local, ctx.tasks);
            return Decision::Local;
        }

        let orbit = self.pick_orbit(world, src);
        self.cnt[orbit] += task.compute_slots as u64;
        let dst = world.orbits()[orbit]
            .iter()
            .copied()
            .map(|s| (s, query_energy(ctx, schedule, s, t)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(s, _)| s)
            .expect("orbits are non-empty");

        if dst == src {
            for &bad in &local.infeasible {
                self.events.push(SchedEvent::InfeasibleDeadline { task: bad, sat: src, slot: t });
            }
            schedule.adopt(src, &local, ctx.tasks);
            return Decision::Local;
        }

        let est = t
            + (transfer_slots(task.size_bits, world.isl_capacity_bps(), world.slot_seconds()).ceil() as usize)
                .saturating_sub(1);
        let from = schedule.busy_until(dst, est);
        let probe = arrange(world, dst, from, &schedule.arrange_items(dst, from, ctx.tasks, Some(k)));
        if !probe.infeasible.is_empty() {
            self.events.push(SchedEvent::NoFeasibleDestination { task: k, dst, slot: t });
        }
        schedule.mark_incoming(dst, k);
        Decision::Offload(dst)
    }

    /// Plans task `k` on `dst` once its transfer completes at slot `t`.
    pub fn on_arrival(&mut self, ctx: &Context<'_>, schedule: &mut Schedule, k: TaskId, dst: SatId, t: usize) {
        schedule.clear_incoming(dst, k);
        let from = schedule.busy_until(dst, t);
        let arr = arrange(ctx.world, dst, from, &schedule.arrange_items(dst, from, ctx.tasks, Some(k)));
        if arr.infeasible.is_empty() {
            schedule.adopt(dst, &arr, ctx.tasks);
        } else {
            for &bad in &arr.infeasible {
                self.events.push(SchedEvent::InfeasibleDeadline { task: bad, sat: dst, slot: t });
            }
            schedule.append_fifo(dst, &ctx.tasks[k.0], t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::tests::line_world;
    use crate::world::{SunSeries, VisWindow, WorldDef};

    fn item(task: usize, cp: usize, deadline: usize) -> ArrangeItem {
        ArrangeItem { task: TaskId(task), compute_slots: cp, deadline }
    }

    #[test]
    fn cycle_lengths() {
        let c550 = orbital_cycle(orbital_period_s(550.0), 1.0);
        assert!((5720..=5740).contains(&c550), "{c550}");
        let c1200 = orbital_cycle(orbital_period_s(1200.0), 1.0);
        assert!((6545..=6565).contains(&c1200), "{c1200}");
        let c550_2 = orbital_cycle(orbital_period_s(550.0), 2.0);
        assert!(c550_2.abs_diff(c550 / 2) <= 1);
    }

    fn brute_knapsack(items: &[(usize, u64)], cap: u64) -> Vec<usize> {
        let mut best: Option<(u64, usize, Vec<usize>)> = None;
        for mask in 0u32..(1 << items.len()) {
            let mut ids: Vec<usize> = (0..items.len()).filter(|i| mask >> i & 1 == 1).map(|i| items[i].0).collect();
            ids.sort();
            let total: u64 = (0..items.len()).filter(|i| mask >> i & 1 == 1).map(|i| items[i].1).sum();
            if total > cap {
                continue;
            }
            let key = (total, ids.len(), ids.clone());
            best = match best {
                None => Some(key),
                Some(b) => {
                    let better = key.0 > b.0 || (key.0 == b.0 && (key.1 < b.1 || (key.1 == b.1 && key.2 < b.2)));
                    Some(if better { key } else { b })
                }
            };
        }
        best.unwrap().2
    }

    #[test]
    fn knapsack_examples() {
        assert!(knapsack_select(&[(0, 3), (1, 4)], 0).is_empty());
        assert_eq!(knapsack_select(&[(0, 3), (1, 4), (2, 5)], 7), vec![0, 1]);
        assert!(knapsack_select(&[(0, 6), (1, 5)], 4).is_empty());
        assert_eq!(knapsack_select(&[(4, 5), (9, 7)], 7), vec![9]);
    }

    #[test]
    fn knapsack_matches_subset_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.gen_range(0..8);
            let items: Vec<(usize, u64)> =
                (0..n).map(|i| (i * 3 + rng.gen_range(0..3), rng.gen_range(0..12))).collect();
            let cap = rng.gen_range(0..40);
            assert_eq!(knapsack_select(&items, cap), brute_knapsack(&items, cap), "{items:?} cap {cap}");
        }
    }

    #[test]
    fn knapsack_scaled_stays_within_capacity() {
        let items: Vec<(usize, u64)> = (0..100).map(|i| (i, 1_000_003 + 7919 * i as u64)).collect();
        let cap = 25_000_000;
        let pick = knapsack_select(&items, cap);
        let total: u64 = pick.iter().map(|&i| items[i].1).sum();
        assert!(total <= cap);
        assert!(total > cap - 2 * 1_800_000);
    }

    fn orbit_world(orbit_sun: &[&str], sats_per_orbit: usize) -> World {
        let mut sun = Vec::new();
        let mut orbits = Vec::new();
        for (i, pattern) in orbit_sun.iter().enumerate() {
            let ids: Vec<SatId> = (0..sats_per_orbit).map(|j| SatId(i * sats_per_orbit + j)).collect();
            for _ in 0..sats_per_orbit {
                sun.push(SunSeries::parse(pattern).unwrap());
            }
            orbits.push(ids);
        }
        let len = orbit_sun[0].len();
        World::new(WorldDef {
            slot_seconds: 1.0,
            horizon: len,
            cycle_slots: len,
            isl_count: 4,
            isl_capacity_bps: 1e9,
            gsl_capacity_bps: 1e8,
            num_stations: 0,
            orbits,
            isl_links: vec![],
            sun,
            gsl_windows: vec![],
        })
        .unwrap()
    }

    fn task(id: usize, src: usize, arrival: usize, cp: usize, deadline: usize) -> Task {
        Task { id: TaskId(id), src: SatId(src), size_bits: 1e8, arrival, compute_slots: cp, deadline }
    }

    #[test]
    fn self_sufficient_orbit_keeps_itself() {
        let w = orbit_world(&["1111111111", "0000000000", "0000000000"], 1);
        let a = assign_orbits(&w, &[task(0, 0, 0, 2, 10)], 0);
        assert_eq!(a.target[0], 0);
        assert_eq!(a.alt_set[0], vec![0]);
        let w = orbit_world(&["1111111111", "0000000001"], 1);
        let a = assign_orbits(&w, &[task(0, 0, 0, 2, 10), task(1, 1, 0, 2, 10)], 0);
        assert!(a.target[0] < 0);
        assert_eq!(a.alt_set[0], vec![0]);
    }

    #[test]
    fn idle_orbits_fill_target() {
        // task orbit 0 has sunlit 0; idle orbits 1 and 2 have 5 and 7
        let w = orbit_world(&["0000000", "1111100", "1111111"], 1);
        let a = assign_orbits(&w, &[task(0, 0, 0, 1, 7)], 0);
        assert_eq!(a.target[0], 12);
        assert_eq!(a.alt_set[0], vec![0, 1, 2]);
        // with target 7, only orbit 2 fits with zero gap
        let items = [(1usize, 5u64), (2, 7)];
        assert_eq!(knapsack_select(&items, 7), vec![2]);
    }

    #[test]
    fn no_tasks_means_singletons() {
        let w = orbit_world(&["0101", "1111"], 2);
        let a = assign_orbits(&w, &[], 0);
        assert_eq!(a.alt_set, vec![vec![0], vec![1]]);
    }

    #[test]
    fn assignment_disjoint_and_within_target() {
        // three task orbits, four idle orbits
        let w = orbit_world(
            &["0011001100", "0000111100", "1100000000", "1111111111", "0111111110", "0011111100", "0001111000"],
            2,
        );
        let tasks = vec![task(0, 0, 0, 3, 10), task(1, 2, 1, 5, 10), task(2, 4, 2, 2, 10), task(3, 5, 3, 4, 10)];
        let a = assign_orbits(&w, &tasks, 0);
        let task_orbits: Vec<usize> = (0..7).filter(|&i| a.task[i] > 0).collect();
        assert_eq!(task_orbits, vec![0, 1, 2]);
        let mut seen = std::collections::BTreeSet::new();
        for &i in &task_orbits {
            assert_eq!(a.alt_set[i][0], i);
            let extra: u64 = a.alt_set[i][1..].iter().map(|&j| a.sunlit[j]).sum();
            if a.target[i] >= 0 {
                assert!(extra as i64 <= a.target[i]);
            }
            for &j in &a.alt_set[i][1..] {
                assert!(seen.insert(j), "orbit {j} assigned twice");
                assert!(a.task[j] == 0);
            }
        }
    }

    #[test]
    fn arrange_single_task_sunlit() {
        let w = line_world(&["1111111111"], vec![]);
        let a = arrange(&w, SatId(0), 2, &[item(0, 3, 9)]);
        assert_eq!(a.starts, vec![(TaskId(0), 2)]);
        assert!(a.flag_sun);
        assert!(a.infeasible.is_empty());
    }

    #[test]
    fn arrange_waits_for_sunrise() {
        let w = line_world(&["0000011111"], vec![]);
        let a = arrange(&w, SatId(0), 1, &[item(0, 2, 9)]);
        assert_eq!(a.starts, vec![(TaskId(0), 5)]);
        assert!(a.flag_sun);
    }

    #[test]
    fn arrange_deadline_forces_eclipse_start() {
        let w = line_world(&["0000000111"], vec![]);
        let a = arrange(&w, SatId(0), 1, &[item(0, 2, 6)]);
        assert_eq!(a.starts, vec![(TaskId(0), 4)]);
        assert!(!a.flag_sun);
        assert!(a.infeasible.is_empty());
    }

    #[test]
    fn arrange_orders_by_deadline_and_chains() {
        let w = line_world(&["11111111111111111111"], vec![]);
        let a = arrange(&w, SatId(0), 0, &[item(0, 3, 20), item(1, 2, 5), item(2, 1, 5)]);
        assert_eq!(a.starts, vec![(TaskId(1), 0), (TaskId(2), 2), (TaskId(0), 3)]);
        let a = arrange(&w, SatId(0), 4, &[item(0, 2, 5)]);
        assert_eq!(a.infeasible, vec![TaskId(0)]);
        assert!(!a.flag_sun);
    }

    #[test]
    fn arrange_sunlight_is_slot_optimal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let sun: String = (0..40).map(|_| if rng.gen_bool(0.6) { '1' } else { '0' }).collect();
            let w = line_world(&[&sun], vec![]);
            let t = rng.gen_range(0..5);
            let items: Vec<ArrangeItem> = (0..rng.gen_range(1..5))
                .map(|i| {
                    let cp = rng.gen_range(1..4);
                    item(i, cp, t + cp + rng.gen_range(0..30))
                })
                .collect();
            let a = arrange(&w, SatId(0), t, &items);
            if !a.infeasible.is_empty() {
                continue;
            }
            let mut sorted = items.clone();
            sorted.sort();
            let mut bound = i64::MAX;
            let mut latest = vec![0i64; sorted.len()];
            for i in (0..sorted.len()).rev() {
                latest[i] = bound.min(sorted[i].deadline as i64) - sorted[i].compute_slots as i64;
                bound = latest[i];
            }
            let mut earliest = t;
            for (i, &(k, start)) in a.starts.iter().enumerate() {
                assert_eq!(k, sorted[i].task);
                let cp = sorted[i].compute_slots;
                assert!(start >= earliest && start as i64 <= latest[i]);
                assert!(start + cp <= sorted[i].deadline);
                let lit = |x: usize| (x..x + cp).all(|u| w.sunlit(SatId(0), u));
                if !lit(start) {
                    for x in earliest..=latest[i] as usize {
                        assert!(!lit(x), "start {x} would have been fully sunlit");
                    }
                }
                earliest = start + cp;
            }
        }
    }

    fn four_sat_world() -> World {
        // orbit 0: sat0, sat1 (eclipse); orbit 1: sat2 (sunlit), sat3 (half)
        World::new(WorldDef {
            slot_seconds: 1.0,
            horizon: 20,
            cycle_slots: 20,
            isl_count: 4,
            isl_capacity_bps: 1e9,
            gsl_capacity_bps: 1e8,
            num_stations: 1,
            orbits: vec![vec![SatId(0), SatId(1)], vec![SatId(2), SatId(3)]],
            isl_links: vec![(SatId(0), SatId(1)), (SatId(2), SatId(3)), (SatId(0), SatId(2)), (SatId(1), SatId(3))],
            sun: vec![
                SunSeries::parse(&"0".repeat(40)).unwrap(),
                SunSeries::parse(&"0".repeat(40)).unwrap(),
                SunSeries::parse(&"1".repeat(40)).unwrap(),
                SunSeries::parse(&"10".repeat(20)).unwrap(),
            ],
            gsl_windows: vec![VisWindow { sat: SatId(1), station: StationId(0), start: 0, end: 20 }],
        })
        .unwrap()
    }

    #[test]
    fn energy_query_terms() {
        let w = line_world(&["1111111111"], vec![]);
        let power = PowerParams::default();
        let tasks = vec![task(0, 0, 0, 3, 10)];
        let battery = BatteryTrace::new(1, power.battery_j());
        let ctx = Context { world: &w, power: &power, tasks: &tasks, battery: &battery };
        let mut sched = Schedule::new(1, 0, 1);
        let fresh = query_energy(&ctx, &sched, SatId(0), 0);
        assert_eq!(fresh, power.solar_w * 10.0 + power.battery_j());
        sched.append_fifo(SatId(0), &tasks[0], 0);
        let loaded = query_energy(&ctx, &sched, SatId(0), 0);
        assert_eq!(fresh - loaded, power.cp_w * 3.0);
    }

    #[test]
    fn energy_query_prefers_more_sun() {
        let w = line_world(&["1111111111000000000000000000000", "1111111111111111111100000000000"], vec![]);
        let power = PowerParams::default();
        let battery = BatteryTrace::new(2, power.battery_j());
        let ctx = Context { world: &w, power: &power, tasks: &[], battery: &battery };
        let sched = Schedule::new(2, 0, 0);
        assert!(query_energy(&ctx, &sched, SatId(1), 0) > query_energy(&ctx, &sched, SatId(0), 0));
    }

    #[test]
    fn ground_fast_path() {
        let w = four_sat_world();
        let power = PowerParams::default();
        let mut k = task(0, 1, 0, 3, 20);
        k.size_bits = 1e8;
        let tasks = vec![k];
        let battery = BatteryTrace::new(4, power.battery_j());
        let ctx = Context { world: &w, power: &power, tasks: &tasks, battery: &battery };
        let mut sched = Schedule::new(4, 1, 1);
        let mut sa = SunlightAware::new();
        sa.on_slot(&w, &tasks, 0);
        match sa.select_offload(&ctx, &mut sched, TaskId(0), 0) {
            Decision::Ground(tr) => assert_eq!((tr.begin, tr.finish), (0.0, 1.0)),
            other => panic!("expected ground, got {other:?}"),
        }
    }

    #[test]
    fn sunlit_source_keeps_task() {
        let w = four_sat_world();
        let power = PowerParams::default();
        let tasks = vec![task(0, 2, 0, 3, 20)];
        let battery = BatteryTrace::new(4, power.battery_j());
        let ctx = Context { world: &w, power: &power, tasks: &tasks, battery: &battery };
        let mut sched = Schedule::new(4, 1, 1);
        let mut sa = SunlightAware::new();
        sa.on_slot(&w, &tasks, 0);
        assert_eq!(sa.select_offload(&ctx, &mut sched, TaskId(0), 0), Decision::Local);
        assert_eq!(sched.solution.get(TaskId(0)), Some(Placement { dst: Node::sat(2), start: 0 }));
    }

    #[test]
    fn eclipsed_source_offloads_to_sunlit_orbit() {
        let w = four_sat_world();
        let power = PowerParams::default();
        let tasks = vec![task(0, 0, 0, 3, 20)];
        let battery = BatteryTrace::new(4, power.battery_j());
        let ctx = Context { world: &w, power: &power, tasks: &tasks, battery: &battery };
        let mut sched = Schedule::new(4, 1, 1);
        let mut sa = SunlightAware::new();
        sa.on_slot(&w, &tasks, 0);
        let a = sa.assignment.as_ref().unwrap();
        assert_eq!(a.alt_set[0], vec![0, 1]);
        // E[s2] = 120·20 + B, E[s3] = 120·10 + B: the fully sunlit satellite wins
        assert_eq!(sa.select_offload(&ctx, &mut sched, TaskId(0), 0), Decision::Offload(SatId(2)));
        assert_eq!(sa.cnt, vec![0, 3]);
        sa.on_arrival(&ctx, &mut sched, TaskId(0), SatId(2), 0);
        assert_eq!(sched.solution.get(TaskId(0)), Some(Placement { dst: Node::sat(2), start: 0 }));
        assert!(sa.events.is_empty());
    }
}
