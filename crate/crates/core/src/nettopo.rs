//! Per-slot network graph, min-hop routing and fair-share transfer progress.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ids::{Node, SatId, StationId, TaskId};
use crate::world::World;

/// l_{s,t} = 1 − Π_g (1 − Vis_{s,g}^t).
pub fn gsl_indicator<I: IntoIterator<Item = bool>>(visibility: I) -> bool {
    let product: u32 = visibility.into_iter().map(|v| 1 - v as u32).product();
    1 - product == 1
}

/// Continuous transfer duration in slots of `size_bits` over one link.
pub fn transfer_slots(size_bits: f64, capacity_bps: f64, slot_seconds: f64) -> f64 {
    size_bits / (capacity_bps * slot_seconds)
}

/// G_t with link capacities.
#[derive(Debug, Clone)]
pub struct TopologySnapshot {
    pub slot: usize,
    num_sats: usize,
    num_stations: usize,
    isl_count: u32,
    isl_capacity_bps: f64,
    gsl_capacity_bps: f64,
    adjacency: Vec<Vec<Node>>,
}

impl TopologySnapshot {
    pub fn from_world(world: &World, slot: usize) -> Self {
        let n = world.num_sats();
        let m = world.num_stations();
        let mut adjacency = vec![Vec::new(); n + m];
        for s in world.sats() {
            adjacency[s.0].extend(world.isl_neighbors(s).iter().map(|&nb| Node::Sat(nb)));
            for g in world.visible_stations(s, slot) {
                adjacency[s.0].push(Node::Ground(g));
                adjacency[n + g.0].push(Node::Sat(s));
            }
        }
        for list in &mut adjacency {
            list.sort();
        }
        TopologySnapshot {
            slot,
            num_sats: n,
            num_stations: m,
            isl_count: world.isl_count(),
            isl_capacity_bps: world.isl_capacity_bps(),
            gsl_capacity_bps: world.gsl_capacity_bps(),
            adjacency,
        }
    }

    fn index(&self, node: Node) -> usize {
        match node {
            Node::Sat(s) => s.0,
            Node::Ground(g) => self.num_sats + g.0,
        }
    }

    fn node(&self, index: usize) -> Node {
        if index < self.num_sats {
            Node::Sat(SatId(index))
        } else {
            Node::Ground(StationId(index - self.num_sats))
        }
    }

    pub fn contains(&self, node: Node) -> bool {
        match node {
            Node::Sat(s) => s.0 < self.num_sats,
            Node::Ground(g) => g.0 < self.num_stations,
        }
    }

    pub fn isl_count(&self) -> u32 {
        self.isl_count
    }

    /// Sorted neighbours of `node`.
    pub fn neighbors(&self, node: Node) -> &[Node] {
        &self.adjacency[self.index(node)]
    }

    pub fn has_edge(&self, i: Node, j: Node) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Cap(i, j) in bit/s; infinite for i = j, `None` without an edge.
    pub fn capacity(&self, i: Node, j: Node) -> Option<f64> {
        if i == j {
            return Some(f64::INFINITY);
        }
        if !self.has_edge(i, j) {
            return None;
        }
        if i.is_ground() || j.is_ground() {
            Some(self.gsl_capacity_bps)
        } else {
            Some(self.isl_capacity_bps)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("no path from {from} to {to} at slot {slot}")]
    Unreachable { from: Node, to: Node, slot: usize },
    #[error("{task}: path uses a link absent at slot {slot}")]
    StalePath { task: TaskId, slot: usize },
}

/// Minimum-hop path from `i` to `j`; among equal-length paths the
/// lexicographically smallest node sequence. Ground stations only appear
/// as endpoints.
pub fn route(topo: &TopologySnapshot, i: Node, j: Node) -> Result<Vec<Node>, RouteError> {
    let unreachable = RouteError::Unreachable { from: i, to: j, slot: topo.slot };
    if !topo.contains(i) || !topo.contains(j) {
        return Err(unreachable);
    }
    if i == j {
        return Ok(vec![i]);
    }
    let total = topo.adjacency.len();
    let mut dist = vec![u32::MAX; total];
    let target = topo.index(j);
    dist[target] = 0;
    let mut frontier = VecDeque::from([target]);
    while let Some(u) = frontier.pop_front() {
        let node = topo.node(u);
        if node.is_ground() && u != target {
            continue;
        }
        for &nb in &topo.adjacency[u] {
            let v = topo.index(nb);
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    let start = topo.index(i);
    if dist[start] == u32::MAX {
        return Err(unreachable);
    }
    let mut path = vec![i];
    let mut cur = start;
    while cur != target {
        let want = dist[cur] - 1;
        let next = topo.adjacency[cur]
            .iter()
            .copied()
            .find(|&nb| {
                let v = topo.index(nb);
                dist[v] == want && (!nb.is_ground() || v == target)
            })
            .expect("bfs layering guarantees a successor");
        path.push(next);
        cur = topo.index(next);
    }
    Ok(path)
}

/// How flows sharing a link divide its capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkSharing {
    /// Cap / (flows on the link), bottleneck over the path.
    #[default]
    EqualShare,
    /// Progressive filling; unused share is redistributed.
    MaxMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub task: TaskId,
    pub src: Node,
    pub dst: Node,
    pub size_bits: f64,
    pub path: Vec<Node>,
    pub bits_sent: f64,
    pub finished_slot: Option<usize>,
}

impl FlowState {
    pub fn new(task: TaskId, src: Node, dst: Node, size_bits: f64) -> Self {
        FlowState { task, src, dst, size_bits, path: Vec::new(), bits_sent: 0.0, finished_slot: None }
    }

    pub fn is_active(&self) -> bool {
        self.finished_slot.is_none()
    }

    pub fn remaining_bits(&self) -> f64 {
        (self.size_bits - self.bits_sent).max(0.0)
    }

    fn links(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Moves every active flow forward by one slot of `dt` seconds.
///
/// Returns the allocation sz_{k,t} in bits for each flow, zero for
/// finished flows. Links are directed, so opposite-direction flows do not
/// share capacity.
pub fn advance_flows(
    flows: &mut [FlowState],
    topo: &TopologySnapshot,
    dt: f64,
    sharing: LinkSharing,
) -> Result<Vec<f64>, RouteError> {
    for f in flows.iter().filter(|f| f.is_active()) {
        let valid = f.path.first() == Some(&f.src)
            && f.path.last() == Some(&f.dst)
            && f.links().all(|(a, b)| topo.has_edge(a, b));
        if !valid {
            return Err(RouteError::StalePath { task: f.task, slot: topo.slot });
        }
    }
    let alloc = match sharing {
        LinkSharing::EqualShare => equal_share(flows, topo, dt),
        LinkSharing::MaxMin => max_min_share(flows, topo, dt),
    };
    for (f, &sz) in flows.iter_mut().zip(&alloc) {
        if !f.is_active() {
            continue;
        }
        f.bits_sent = (f.bits_sent + sz).min(f.size_bits);
        if f.bits_sent >= f.size_bits {
            f.finished_slot = Some(topo.slot);
        }
    }
    Ok(alloc)
}

fn link_counts(flows: &[FlowState]) -> HashMap<(Node, Node), u32> {
    let mut counts = HashMap::new();
    for f in flows.iter().filter(|f| f.is_active()) {
        for link in f.links() {
            *counts.entry(link).or_insert(0) += 1;
        }
    }
    counts
}

fn equal_share(flows: &[FlowState], topo: &TopologySnapshot, dt: f64) -> Vec<f64> {
    let counts = link_counts(flows);
    flows
        .iter()
        .map(|f| {
            if !f.is_active() {
                return 0.0;
            }
            if f.path.len() < 2 {
                return f.remaining_bits();
            }
            f.links()
                .map(|(a, b)| {
                    let cap = topo.capacity(a, b).expect("validated path");
                    dt * cap / counts[&(a, b)] as f64
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn max_min_share(flows: &[FlowState], topo: &TopologySnapshot, dt: f64) -> Vec<f64> {
    let mut alloc = vec![0.0; flows.len()];
    let mut frozen: Vec<bool> = flows.iter().map(|f| !f.is_active()).collect();
    for (k, f) in flows.iter().enumerate() {
        if !frozen[k] && f.path.len() < 2 {
            alloc[k] = f.remaining_bits();
            frozen[k] = true;
        }
    }
    let mut residual: HashMap<(Node, Node), f64> = HashMap::new();
    for f in flows.iter().filter(|f| f.is_active()) {
        for (a, b) in f.links() {
            residual.entry((a, b)).or_insert_with(|| dt * topo.capacity(a, b).expect("validated path"));
        }
    }
    const EPS: f64 = 1e-9;
    while frozen.iter().any(|&z| !z) {
        let mut users: HashMap<(Node, Node), u32> = HashMap::new();
        for (k, f) in flows.iter().enumerate() {
            if !frozen[k] {
                for link in f.links() {
                    *users.entry(link).or_insert(0) += 1;
                }
            }
        }
        let link_step = users.iter().map(|(link, &n)| residual[link] / n as f64).fold(f64::INFINITY, f64::min);
        let demand_step = flows
            .iter()
            .enumerate()
            .filter(|(k, _)| !frozen[*k])
            .map(|(k, f)| f.remaining_bits() - alloc[k])
            .fold(f64::INFINITY, f64::min);
        let step = link_step.min(demand_step).max(0.0);
        for (k, f) in flows.iter().enumerate() {
            if frozen[k] {
                continue;
            }
            alloc[k] += step;
            for link in f.links() {
                *residual.get_mut(&link).expect("tracked link") -= step;
            }
        }
        for (k, f) in flows.iter().enumerate() {
            if frozen[k] {
                continue;
            }
            let saturated = f.links().any(|link| residual[&link] <= EPS * dt.max(1.0));
            let satisfied = alloc[k] >= f.remaining_bits() - EPS;
            if saturated || satisfied {
                frozen[k] = true;
            }
        }
    }
    alloc
}

/// Active satellite-to-satellite transfers, re-routed every slot.
#[derive(Debug, Clone, Default)]
pub struct FlowBook {
    sharing: LinkSharing,
    flows: Vec<FlowState>,
    // ground stations never relay, so satellite pairs keep their route
    cache: HashMap<(Node, Node), Vec<Node>>,
}

impl FlowBook {
    pub fn new(sharing: LinkSharing) -> Self {
        FlowBook { sharing, flows: Vec::new(), cache: HashMap::new() }
    }

    pub fn start(&mut self, task: TaskId, src: SatId, dst: SatId, size_bits: f64) {
        self.flows.push(FlowState::new(task, Node::Sat(src), Node::Sat(dst), size_bits));
    }

    pub fn active(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Routes and advances all flows through slot `t`; returns the tasks
    /// whose transfer completed in this slot.
    pub fn step(&mut self, world: &World, t: usize) -> Result<Vec<TaskId>, RouteError> {
        if self.flows.is_empty() {
            return Ok(Vec::new());
        }
        let topo = TopologySnapshot::from_world(world, t);
        for f in &mut self.flows {
            let key = (f.src, f.dst);
            let cached = self.cache.get(&key).filter(|p| p.windows(2).all(|w| topo.has_edge(w[0], w[1])));
            f.path = match cached {
                Some(p) => p.clone(),
                None => {
                    let p = route(&topo, f.src, f.dst)?;
                    self.cache.insert(key, p.clone());
                    p
                }
            };
        }
        advance_flows(&mut self.flows, &topo, world.slot_seconds(), self.sharing)?;
        let done = self.flows.iter().filter(|f| !f.is_active()).map(|f| f.task).collect();
        self.flows.retain(FlowState::is_active);
        Ok(done)
    }
}

/// Serial per-station downlink queues (T_gs), in fractional slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundQueues {
    available: Vec<f64>,
}

/// One admitted downlink, in fractional slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTransfer {
    pub station: StationId,
    pub begin: f64,
    pub finish: f64,
}

impl GroundQueues {
    pub fn new(num_stations: usize) -> Self {
        GroundQueues { available: vec![0.0; num_stations] }
    }

    /// Earliest time a transfer requested at slot `t` could begin.
    pub fn available_at(&self, g: StationId, t: usize) -> f64 {
        self.available[g.0].max(t as f64)
    }

    pub fn admit(&mut self, g: StationId, t: usize, duration_slots: f64) -> GroundTransfer {
        let begin = self.available_at(g, t);
        let finish = begin + duration_slots;
        self.available[g.0] = finish;
        GroundTransfer { station: g, begin, finish }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{SunSeries, VisWindow, WorldDef};

    /// 2 planes of 2: sat0,sat1 in plane 0; sat2,sat3 in plane 1.
    fn toy_grid(windows: Vec<VisWindow>) -> World {
        World::new(WorldDef {
            slot_seconds: 1.0,
            horizon: 4,
            cycle_slots: 4,
            isl_count: 4,
            isl_capacity_bps: 1e9,
            gsl_capacity_bps: 1e8,
            num_stations: 1,
            orbits: vec![vec![SatId(0), SatId(1)], vec![SatId(2), SatId(3)]],
            isl_links: vec![(SatId(0), SatId(1)), (SatId(2), SatId(3)), (SatId(0), SatId(2)), (SatId(1), SatId(3))],
            sun: vec![SunSeries(vec![true; 4]); 4],
            gsl_windows: windows,
        })
        .unwrap()
    }

    #[test]
    fn indicator_is_any() {
        assert!(!gsl_indicator([]));
        assert!(!gsl_indicator([false, false]));
        assert!(gsl_indicator([false, true, false]));
        assert!(gsl_indicator([true, true]));
    }

    #[test]
    fn routes_on_toy_grid() {
        let world = toy_grid(vec![]);
        let topo = TopologySnapshot::from_world(&world, 0);
        assert_eq!(route(&topo, Node::sat(2), Node::sat(2)).unwrap(), vec![Node::sat(2)]);
        assert_eq!(route(&topo, Node::sat(0), Node::sat(1)).unwrap(), vec![Node::sat(0), Node::sat(1)]);
        // both sat1 and sat2 are two-hop intermediates; the smaller id wins
        assert_eq!(route(&topo, Node::sat(0), Node::sat(3)).unwrap(), vec![Node::sat(0), Node::sat(1), Node::sat(3)]);
        assert_eq!(route(&topo, Node::sat(3), Node::sat(0)).unwrap(), vec![Node::sat(3), Node::sat(1), Node::sat(0)]);
        assert!(matches!(route(&topo, Node::sat(0), Node::ground(0)), Err(RouteError::Unreachable { .. })));
    }

    #[test]
    fn stations_are_not_transit_nodes() {
        let world = World::new(WorldDef {
            slot_seconds: 1.0,
            horizon: 1,
            cycle_slots: 1,
            isl_count: 4,
            isl_capacity_bps: 1e9,
            gsl_capacity_bps: 1e8,
            num_stations: 1,
            orbits: vec![vec![SatId(0)], vec![SatId(1)]],
            isl_links: vec![],
            sun: vec![SunSeries(vec![true]); 2],
            gsl_windows: vec![
                VisWindow { sat: SatId(0), station: StationId(0), start: 0, end: 1 },
                VisWindow { sat: SatId(1), station: StationId(0), start: 0, end: 1 },
            ],
        })
        .unwrap();
        let topo = TopologySnapshot::from_world(&world, 0);
        assert!(route(&topo, Node::sat(0), Node::sat(1)).is_err());
        assert_eq!(route(&topo, Node::sat(1), Node::ground(0)).unwrap().len(), 2);
        assert_eq!(route(&topo, Node::ground(0), Node::sat(0)).unwrap().len(), 2);
    }

    #[test]
    fn shortest_path_matches_exhaustive_enumeration() {
        let world = toy_grid(vec![]);
        let topo = TopologySnapshot::from_world(&world, 0);
        fn simple_paths(topo: &TopologySnapshot, path: &mut Vec<Node>, j: Node, out: &mut Vec<Vec<Node>>) {
            let cur = *path.last().unwrap();
            if cur == j {
                out.push(path.clone());
                return;
            }
            for &nb in topo.neighbors(cur) {
                if !path.contains(&nb) {
                    path.push(nb);
                    simple_paths(topo, path, j, out);
                    path.pop();
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                let mut all = Vec::new();
                simple_paths(&topo, &mut vec![Node::sat(a)], Node::sat(b), &mut all);
                let best = all.iter().min_by(|x, y| x.len().cmp(&y.len()).then(x.cmp(y))).unwrap();
                assert_eq!(&route(&topo, Node::sat(a), Node::sat(b)).unwrap(), best);
            }
        }
    }

    fn flow(task: usize, path: &[Node], size: f64) -> FlowState {
        let mut f = FlowState::new(TaskId(task), path[0], *path.last().unwrap(), size);
        f.path = path.to_vec();
        f
    }

    #[test]
    fn single_flow_uses_full_link() {
        let world = toy_grid(vec![]);
        let topo = TopologySnapshot::from_world(&world, 0);
        let mut flows = vec![flow(0, &[Node::sat(0), Node::sat(1)], 5e9)];
        let sz = advance_flows(&mut flows, &topo, 1.0, LinkSharing::EqualShare).unwrap();
        assert_eq!(sz, vec![1e9]);
        assert_eq!(flows[0].bits_sent, 1e9);
        assert_eq!(flows[0].finished_slot, None);
    }

    #[test]
    fn fair_share_on_ground_link_and_bottleneck() {
        let win = |s| VisWindow { sat: SatId(s), station: StationId(0), start: 0, end: 4 };
        let world = toy_grid(vec![win(1)]);
        let topo = TopologySnapshot::from_world(&world, 0);
        let gs = Node::ground(0);
        let mut flows = vec![flow(0, &[Node::sat(1), gs], 1e12), flow(1, &[Node::sat(0), Node::sat(1), gs], 1e12)];
        let sz = advance_flows(&mut flows, &topo, 1.0, LinkSharing::EqualShare).unwrap();
        assert_eq!(sz, vec![50e6, 50e6]);
    }

    #[test]
    fn completion_slot_and_local_flows() {
        let world = toy_grid(vec![]);
        let mut flows = vec![flow(0, &[Node::sat(0), Node::sat(1)], 2.5e9), flow(1, &[Node::sat(2)], 7e20)];
        let mut history = Vec::new();
        for t in 0..4 {
            let topo = TopologySnapshot::from_world(&world, t);
            history.push(advance_flows(&mut flows, &topo, 1.0, LinkSharing::EqualShare).unwrap());
        }
        assert_eq!(flows[1].finished_slot, Some(0));
        assert_eq!(flows[0].finished_slot, Some(2));
        assert_eq!(flows[0].bits_sent, 2.5e9);
        let sent_before: f64 = history[..2].iter().map(|h| h[0]).sum();
        let sent_through: f64 = history[..3].iter().map(|h| h[0]).sum();
        assert!(sent_before < 2.5e9 && sent_through >= 2.5e9);
        assert_eq!(history[3][0], 0.0);
    }

    #[test]
    fn opposite_directions_do_not_share() {
        let world = toy_grid(vec![]);
        let topo = TopologySnapshot::from_world(&world, 0);
        let mut flows =
            vec![flow(0, &[Node::sat(0), Node::sat(1)], 1e12), flow(1, &[Node::sat(1), Node::sat(0)], 1e12)];
        let sz = advance_flows(&mut flows, &topo, 1.0, LinkSharing::EqualShare).unwrap();
        assert_eq!(sz, vec![1e9, 1e9]);
    }

    #[test]
    fn stale_path_detected() {
        let world = toy_grid(vec![]);
        let topo = TopologySnapshot::from_world(&world, 0);
        let mut flows = vec![flow(3, &[Node::sat(0), Node::sat(3)], 1e9)];
        assert_eq!(
            advance_flows(&mut flows, &topo, 1.0, LinkSharing::EqualShare),
            Err(RouteError::StalePath { task: TaskId(3), slot: 0 })
        );
    }

    #[test]
    fn max_min_redistributes_unused_share() {
        let win = |s| VisWindow { sat: SatId(s), station: StationId(0), start: 0, end: 4 };
        let world = toy_grid(vec![win(1)]);
        let topo = TopologySnapshot::from_world(&world, 0);
        let gs = Node::ground(0);
        // flow 1 is capped at 50 Mbit by the shared ground link; flow 2 shares
        // only the ISL with it and takes the rest of that ISL
        let mut flows = vec![
            flow(0, &[Node::sat(1), gs], 1e12),
            flow(1, &[Node::sat(0), Node::sat(1), gs], 1e12),
            flow(2, &[Node::sat(0), Node::sat(1)], 1e12),
        ];
        let equal = advance_flows(&mut flows.clone(), &topo, 1.0, LinkSharing::EqualShare).unwrap();
        assert_eq!(equal, vec![50e6, 50e6, 500e6]);
        let maxmin = advance_flows(&mut flows, &topo, 1.0, LinkSharing::MaxMin).unwrap();
        assert!((maxmin[0] - 50e6).abs() < 1.0);
        assert!((maxmin[1] - 50e6).abs() < 1.0);
        assert!((maxmin[2] - 950e6).abs() < 1.0);
    }

    #[test]
    fn ground_queue_is_serial() {
        let mut q = GroundQueues::new(1);
        let a = q.admit(StationId(0), 3, 1.5);
        assert_eq!((a.begin, a.finish), (3.0, 4.5));
        let b = q.admit(StationId(0), 4, 1.5);
        assert_eq!((b.begin, b.finish), (4.5, 6.0));
        let c = q.admit(StationId(0), 10, 0.25);
        assert_eq!((c.begin, c.finish), (10.0, 10.25));
    }
}
