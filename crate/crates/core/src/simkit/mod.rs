//! Scenario assembly, the slot loop, metrics and exports.

pub mod config;
pub mod engine;
pub mod export;
pub mod metrics;
pub mod workload;

use crate::baselines::StrategyKind;
use crate::orbital::{Constellation, GeometryError, Sky};
use crate::sbeo::{InstanceError, SbeoInstance};
use crate::scheduler::orbital_cycle_for;
use crate::world::{World, WorldError};

pub use config::{ConfigError, Region, ScenarioConfig, TaskKind, WorkloadConfig};
pub use engine::{simulate, SimOutput};
pub use metrics::{build_report, task_records, MetricsReport, TaskRecord};
pub use workload::generate_workload;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A propagated world together with its generated tasks.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub instance: SbeoInstance,
}

/// Horizon in slots, from `horizon_slots` or `horizon_periods`.
pub fn horizon_slots(cfg: &ScenarioConfig) -> usize {
    match (cfg.horizon_slots, cfg.horizon_periods) {
        (Some(h), _) => h,
        (None, Some(p)) => {
            let cycle = orbital_cycle_for(&cfg.constellation, cfg.slot_seconds);
            ((p * cycle as f64).round() as usize).max(1)
        }
        (None, None) => 1,
    }
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let constellation = Constellation::new(cfg.constellation.clone())?;
    let sky = Sky::new(constellation, cfg.stations()?, cfg.slot_seconds);
    let horizon = horizon_slots(cfg);
    let cycle = orbital_cycle_for(&cfg.constellation, cfg.slot_seconds);
    let tasks = generate_workload(&sky, horizon, &cfg.workload, cfg.seed);
    let world = World::from_sky(sky, horizon, cycle, cfg.network.isl_capacity_bps, cfg.network.gsl_capacity_bps)?;
    let mut instance = SbeoInstance::new(world, tasks, cfg.power_params())?;
    instance.gsl_mode = cfg.network.gsl_power;
    instance.link_sharing = cfg.network.link_sharing;
    Ok(Scenario { config: cfg.clone(), instance })
}

/// The result of running one strategy on a scenario.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub output: SimOutput,
    pub records: Vec<TaskRecord>,
    pub report: MetricsReport,
}

impl Scenario {
    pub fn run(&self, strategy: StrategyKind) -> RunResult {
        run_instance(&self.instance, strategy, &self.config.lifetime)
    }
}

pub fn run_instance(inst: &SbeoInstance, strategy: StrategyKind, lifetime: &crate::LifetimeModel) -> RunResult {
    let output = simulate(inst, strategy);
    let records = task_records(inst, &output);
    let report = build_report(inst, &output, &records, lifetime);
    RunResult { output, records, report }
}

/// Builds the scenario and runs the configured strategy.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Scenario, RunResult), ScenarioError> {
    let scenario = build_scenario(cfg)?;
    let result = scenario.run(cfg.strategy);
    Ok((scenario, result))
}

/// The sunlight-aware heuristic next to the exhaustive optimum on one
/// instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub heuristic: f64,
    /// The heuristic schedule passed every constraint check.
    pub heuristic_feasible: bool,
    pub oracle: Result<f64, crate::sbeo::OracleError>,
}

impl OracleComparison {
    /// Objective gap when both sides are feasible.
    pub fn gap(&self) -> Option<f64> {
        match self.oracle {
            Ok(opt) if self.heuristic_feasible => Some(self.heuristic - opt),
            _ => None,
        }
    }
}

pub fn compare_with_oracle(inst: &SbeoInstance) -> OracleComparison {
    let out = simulate(inst, StrategyKind::SunlightAware);
    let ev = crate::sbeo::evaluate(inst, &out.solution);
    OracleComparison {
        heuristic: ev.replay.battery.global_max_dod(),
        heuristic_feasible: ev.violations.is_empty(),
        oracle: crate::sbeo::brute_force_solve(inst).map(|r| r.objective),
    }
}

/// Random propagated instance: one Walker shell of at most 48 satellites,
/// up to 10 stations and at most 200 tasks with random sizes and slack.
pub fn random_desk_instance<R: rand::Rng + ?Sized>(rng: &mut R) -> SbeoInstance {
    use crate::ids::{SatId, TaskId};
    use crate::orbital::{ConstellationSpec, GroundStation, GroundStationSet, Shell};
    use crate::sbeo::Task;

    let planes = rng.gen_range(1..=6usize);
    let per_plane = rng.gen_range(2..=8usize);
    let mut shell = Shell::walker(rng.gen_range(450.0..1300.0), rng.gen_range(30.0..100.0), planes, per_plane);
    shell.raan_offset_deg = rng.gen_range(0.0..360.0);
    let spec = ConstellationSpec { shells: vec![shell], epoch_day_of_year: rng.gen_range(1..=365) };
    let dt = [5.0, 10.0, 20.0][rng.gen_range(0..3)];
    let stations: Vec<GroundStation> = (0..rng.gen_range(0..=10))
        .map(|i| GroundStation {
            id: format!("gs{i}"),
            latitude_deg: rng.gen_range(-70.0..70.0),
            longitude_deg: rng.gen_range(-180.0..180.0),
        })
        .collect();
    let stations = GroundStationSet::new(stations, rng.gen_range(10.0..30.0)).expect("stations are in range");
    let cycle = orbital_cycle_for(&spec, dt);
    let horizon = rng.gen_range(cycle / 2..=2 * cycle);
    let sky = Sky::new(Constellation::new(spec).expect("shell is valid"), stations, dt);
    let n = sky.constellation().num_sats();
    let world = World::from_sky(sky, horizon, cycle, [1e8, 1e9][rng.gen_range(0..2)], [2e7, 1e8][rng.gen_range(0..2)])
        .expect("sampled world is consistent");

    let mut drafts: Vec<(usize, usize, f64, usize, usize)> = (0..rng.gen_range(0..=200usize))
        .filter_map(|_| {
            let cp = rng.gen_range(1..=8usize);
            let slack = rng.gen_range(0..=60usize);
            let arrival = rng.gen_range(0..horizon);
            let deadline = arrival + cp + slack;
            let size = 10f64.powf(rng.gen_range(7.0..10.0));
            (deadline <= horizon).then_some((arrival, rng.gen_range(0..n), size, cp, deadline))
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
    let power = crate::PowerParams { cp_w: [30.0, 50.0, 60.0][rng.gen_range(0..3)], ..Default::default() };
    let mut inst = SbeoInstance::new(world, tasks, power).expect("generated tasks are valid");
    if rng.gen_bool(0.3) {
        inst.gsl_mode = crate::GslPowerMode::Transmit;
    }
    if rng.gen_bool(0.3) {
        inst.link_sharing = crate::LinkSharing::MaxMin;
    }
    inst
}
