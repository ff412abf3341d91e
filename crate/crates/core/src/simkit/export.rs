//! CSV and JSON outputs of a run.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::ids::SatId;
use crate::simkit::metrics::{DecisionClass, MetricsReport, TaskRecord};
use crate::simkit::RunResult;

pub const METRICS_CSV: &str = "metrics.csv";
pub const TASKS_CSV: &str = "tasks.csv";
pub const DOD_TRACE_CSV: &str = "dod_trace.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Serialize)]
struct SatRow {
    sat: usize,
    max_dod: f64,
    mean_dod: f64,
    mean_cycle_dod: f64,
    lifetime_years: f64,
    processed_tasks: usize,
    brownouts: usize,
}

#[derive(Serialize)]
struct TaskRow {
    id: usize,
    src: usize,
    dst: String,
    arrival: usize,
    offload_finish: Option<f64>,
    start: Option<f64>,
    completion: Option<f64>,
    deadline: usize,
    met: bool,
    class: &'static str,
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_metrics_csv<W: Write>(w: W, report: &MetricsReport) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for m in &report.per_sat {
        out.serialize(SatRow {
            sat: m.sat.0,
            max_dod: m.max_dod,
            mean_dod: m.mean_dod,
            mean_cycle_dod: m.mean_cycle_dod,
            lifetime_years: m.lifetime_years,
            processed_tasks: m.processed_tasks,
            brownouts: m.brownouts,
        })
        .map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_tasks_csv<W: Write>(w: W, records: &[TaskRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(TaskRow {
            id: r.id.0,
            src: r.src.0,
            dst: r.dst.map(|d| d.to_string()).unwrap_or_default(),
            arrival: r.arrival,
            offload_finish: r.offload_finish,
            start: r.start,
            completion: r.completion,
            deadline: r.deadline,
            met: r.met,
            class: match r.class {
                Some(DecisionClass::Ground) => "ground",
                Some(DecisionClass::SunlitSat) => "sunlit-sat",
                Some(DecisionClass::ShadowedSat) => "shadowed-sat",
                None => "",
            },
        })
        .map_err(csv_err)?;
    }
    out.flush()
}

/// One row per slot, one column per satellite.
pub fn write_dod_trace_csv<W: Write>(mut w: W, result: &RunResult) -> io::Result<()> {
    let battery = &result.output.battery;
    let n = battery.num_sats();
    let mut header = String::from("slot");
    for s in 0..n {
        header.push_str(&format!(",sat{s}"));
    }
    writeln!(w, "{header}")?;
    let series: Vec<Vec<f64>> = (0..n).map(|s| battery.dod_series(SatId(s))).collect();
    for t in 0..battery.len() {
        let mut line = t.to_string();
        for col in &series {
            line.push_str(&format!(",{:.6}", col[t]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn summary_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Writes all four files into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, result: &RunResult) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_metrics_csv(fs::File::create(dir.join(METRICS_CSV))?, &result.report)?;
    write_tasks_csv(fs::File::create(dir.join(TASKS_CSV))?, &result.records)?;
    write_dod_trace_csv(io::BufWriter::new(fs::File::create(dir.join(DOD_TRACE_CSV))?), result)?;
    let mut json = summary_json(&result.report);
    json.push('\n');
    fs::write(dir.join(SUMMARY_JSON), json)
}
