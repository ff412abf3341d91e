use std::path::PathBuf;

use sunedge::simkit::{build_scenario, export, run_scenario, ConfigError};
use sunedge::{ScenarioConfig, StrategyKind};

fn config(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut cfg = ScenarioConfig::load(&path).unwrap();
    cfg.horizon_periods = None;
    cfg.horizon_slots = Some(1500);
    cfg
}

#[test]
fn shipped_configs_validate() {
    for name in ["desk_ship.toml", "desk_wildfire.toml", "full_shell.toml"] {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.ground.stations_file.as_deref(), Some(std::path::Path::new("stations.csv")));
        assert_eq!(cfg.stations().unwrap().len(), 10);
    }
}

#[test]
fn reports_are_internally_consistent() {
    let scenario = build_scenario(&config("desk_wildfire.toml")).unwrap();
    assert_eq!(scenario.instance.world.num_sats(), 48);
    assert!(!scenario.instance.tasks.is_empty());
    for kind in StrategyKind::ALL {
        let r = scenario.run(kind);
        let rep = &r.report;
        assert_eq!(rep.num_tasks, scenario.instance.tasks.len());
        assert_eq!(rep.completed + rep.missed, rep.num_tasks);
        assert_eq!(rep.per_sat.len(), 48);
        let d = rep.decisions;
        let total = d.ground_pct + d.sunlit_pct + d.shadowed_pct;
        assert!(total == 0.0 || (total - 100.0).abs() < 1e-9, "{kind}: {total}");
        assert!(rep.global_max_dod >= rep.mean_max_dod && rep.mean_max_dod >= rep.mean_dod);
        assert!(rep.latency.p50_s <= rep.latency.p90_s && rep.latency.p90_s <= rep.latency.max_s);
        assert_eq!(r.output.battery.len(), 1500);
    }
}

#[test]
fn sunlight_aware_meets_deadlines_on_the_wildfire_desk() {
    let (_, r) = run_scenario(&config("desk_wildfire.toml")).unwrap();
    assert_eq!(r.report.strategy, StrategyKind::SunlightAware);
    assert_eq!(r.report.events.infeasible_deadline + r.report.events.no_feasible_destination, 0);
    assert_eq!(r.report.missed, 0);
}

#[test]
fn exports_have_expected_shape() {
    let scenario = build_scenario(&config("desk_ship.toml")).unwrap();
    let result = scenario.run(StrategyKind::SunlightAware);
    let dir = tempfile::tempdir().unwrap();
    export::write_outputs(dir.path(), &result).unwrap();
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();

    let metrics = read(export::METRICS_CSV);
    assert!(metrics.starts_with("sat,max_dod,mean_dod,mean_cycle_dod,lifetime_years,processed_tasks,brownouts\n"));
    assert_eq!(metrics.lines().count(), 49);

    let tasks = read(export::TASKS_CSV);
    assert!(tasks.starts_with("id,src,dst,arrival,offload_finish,start,completion,deadline,met,class\n"));
    assert_eq!(tasks.lines().count(), scenario.instance.tasks.len() + 1);

    let trace = read(export::DOD_TRACE_CSV);
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 49);
    assert_eq!(lines.count(), 1500);

    let summary: serde_json::Value = serde_json::from_str(&read(export::SUMMARY_JSON)).unwrap();
    assert_eq!(summary["strategy"], "sunlight-aware");
    assert_eq!(summary["num_sats"], 48);
}

#[test]
fn invalid_config_names_the_field() {
    let mut cfg = config("desk_ship.toml");
    cfg.workload.regions[1].lat_min = 95.0;
    match build_scenario(&cfg) {
        Err(sunedge::simkit::ScenarioError::Config(e @ ConfigError::Invalid { .. })) => {
            assert_eq!(e.field(), Some("workload.regions[1].lat_min"));
        }
        other => panic!("{other:?}"),
    }
}
