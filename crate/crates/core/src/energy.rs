//! Battery recurrence, depth of discharge and a cycle-life lifetime estimate.

use serde::{Deserialize, Serialize};

use crate::ids::SatId;

pub const JOULES_PER_WH: f64 = 3600.0;
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Per-satellite power figures in watts, battery capacity in watt-hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerParams {
    pub solar_w: f64,
    pub basic_w: f64,
    /// Per link; multiplied by the ISL count.
    pub isl_w: f64,
    pub gsl_w: f64,
    pub cp_w: f64,
    pub battery_wh: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams { solar_w: 120.0, basic_w: 4.0, isl_w: 10.0, gsl_w: 16.0, cp_w: 60.0, battery_wh: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("power figure `{0}` must be finite and non-negative")]
    NegativePower(&'static str),
    #[error("battery capacity must be positive")]
    EmptyBattery,
    #[error("lifetime curve needs a > 0, b > 0 and a positive cycle period")]
    BadCurve,
    #[error("cannot estimate lifetime from an empty DoD series")]
    EmptySeries,
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        for (name, v) in [
            ("solar_w", self.solar_w),
            ("basic_w", self.basic_w),
            ("isl_w", self.isl_w),
            ("gsl_w", self.gsl_w),
            ("cp_w", self.cp_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EnergyError::NegativePower(name));
            }
        }
        if !(self.battery_wh.is_finite() && self.battery_wh > 0.0) {
            return Err(EnergyError::EmptyBattery);
        }
        Ok(())
    }

    /// B_vol in joules.
    pub fn battery_j(&self) -> f64 {
        self.battery_wh * JOULES_PER_WH
    }
}

/// When the ground-link power draw applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GslPowerMode {
    /// Whenever any station is visible.
    #[default]
    Connectivity,
    /// Only during slots that carry a downlink.
    Transmit,
}

/// Loads on one satellite during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotLoad {
    pub sunlit: bool,
    pub processing: u32,
    pub gsl_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub battery_j: f64,
    /// Energy missing below zero before clamping, 0 when the battery held.
    pub deficit_j: f64,
}

impl StepOutcome {
    pub fn brownout(&self) -> bool {
        self.deficit_j > 0.0
    }
}

/// Net power draw in watts (positive = charging).
pub fn net_power_w(params: &PowerParams, isl_count: u32, load: SlotLoad) -> f64 {
    let solar = if load.sunlit { params.solar_w } else { 0.0 };
    let gsl = if load.gsl_on { params.gsl_w } else { 0.0 };
    solar - params.basic_w - params.cp_w * load.processing as f64 - isl_count as f64 * params.isl_w - gsl
}

/// One step of the battery recurrence.
pub fn battery_step(
    params: &PowerParams,
    isl_count: u32,
    slot_seconds: f64,
    load: SlotLoad,
    prev_j: f64,
) -> StepOutcome {
    let raw = (net_power_w(params, isl_count, load) * slot_seconds + prev_j).min(params.battery_j());
    if raw < 0.0 {
        StepOutcome { battery_j: 0.0, deficit_j: -raw }
    } else {
        StepOutcome { battery_j: raw, deficit_j: 0.0 }
    }
}

pub fn dod(battery_j: f64, capacity_j: f64) -> f64 {
    (1.0 - battery_j / capacity_j).clamp(0.0, 1.0)
}

/// Energy in joules spent on one task.
pub fn per_task_energy(cp_w: f64, compute_seconds: f64) -> f64 {
    cp_w * compute_seconds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brownout {
    pub sat: SatId,
    pub slot: usize,
    pub deficit_j: f64,
}

/// B_{s,t} for every satellite; entry `t` is the level at the end of slot `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryTrace {
    capacity_j: f64,
    levels: Vec<Vec<f64>>,
    pub brownouts: Vec<Brownout>,
}

impl BatteryTrace {
    pub fn new(num_sats: usize, capacity_j: f64) -> Self {
        BatteryTrace { capacity_j, levels: vec![Vec::new(); num_sats], brownouts: Vec::new() }
    }

    pub fn capacity_j(&self) -> f64 {
        self.capacity_j
    }

    pub fn num_sats(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// B_{s,t−1}: the level entering slot `t`; full before the first slot.
    pub fn before(&self, s: SatId, t: usize) -> f64 {
        if t == 0 {
            self.capacity_j
        } else {
            self.levels[s.0][t - 1]
        }
    }

    pub fn level(&self, s: SatId, t: usize) -> f64 {
        self.levels[s.0][t]
    }

    pub fn levels(&self, s: SatId) -> &[f64] {
        &self.levels[s.0]
    }

    /// Applies one slot to satellite `s`; slots must be pushed in order.
    pub fn push(
        &mut self,
        s: SatId,
        slot: usize,
        params: &PowerParams,
        isl_count: u32,
        slot_seconds: f64,
        load: SlotLoad,
    ) {
        debug_assert_eq!(self.levels[s.0].len(), slot);
        let prev = self.before(s, slot);
        let out = battery_step(params, isl_count, slot_seconds, load, prev);
        if out.brownout() {
            self.brownouts.push(Brownout { sat: s, slot, deficit_j: out.deficit_j });
        }
        self.levels[s.0].push(out.battery_j);
    }

    pub fn dod(&self, s: SatId, t: usize) -> f64 {
        dod(self.levels[s.0][t], self.capacity_j)
    }

    pub fn dod_series(&self, s: SatId) -> Vec<f64> {
        self.levels[s.0].iter().map(|&b| dod(b, self.capacity_j)).collect()
    }

    pub fn max_dod(&self, s: SatId) -> f64 {
        self.levels[s.0].iter().map(|&b| dod(b, self.capacity_j)).fold(0.0, f64::max)
    }

    pub fn mean_dod(&self, s: SatId) -> f64 {
        let l = &self.levels[s.0];
        if l.is_empty() {
            return 0.0;
        }
        l.iter().map(|&b| dod(b, self.capacity_j)).sum::<f64>() / l.len() as f64
    }

    /// max over satellites and slots.
    pub fn global_max_dod(&self) -> f64 {
        (0..self.num_sats()).map(|s| self.max_dod(SatId(s))).fold(0.0, f64::max)
    }
}

/// Cycles to failure N(d) = a·d^(−b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeModel {
    pub a: f64,
    pub b: f64,
    /// DoD floor; series averaging below it get the ceiling N(min_dod).
    #[serde(default = "default_min_dod")]
    pub min_dod: f64,
}

fn default_min_dod() -> f64 {
    0.01
}

impl Default for LifetimeModel {
    /// 30 000 cycles at 30% DoD, halving for every further 20 points.
    fn default() -> Self {
        LifetimeModel::through_points((0.3, 30_000.0), (0.5, 15_000.0))
    }
}

impl LifetimeModel {
    /// The power law through two (DoD, cycles) points.
    pub fn through_points((d1, n1): (f64, f64), (d2, n2): (f64, f64)) -> Self {
        let b = (n1 / n2).ln() / (d2 / d1).ln();
        LifetimeModel { a: n1 * d1.powf(b), b, min_dod: default_min_dod() }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if self.a > 0.0 && self.b > 0.0 && self.min_dod > 0.0 && self.min_dod <= 1.0 {
            Ok(())
        } else {
            Err(EnergyError::BadCurve)
        }
    }

    pub fn cycles(&self, d: f64) -> f64 {
        self.a * d.powf(-self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub years: f64,
    pub mean_cycle_dod: f64,
    /// All DoD values were zero; `years` is the model ceiling.
    pub degenerate: bool,
}

/// Lifetime from the mean of per-cycle maximum DoD.
///
/// The series is cut into consecutive chunks of `cycle_slots`; each chunk
/// counts as one charge-discharge cycle lasting `cycle_slots · slot_seconds`.
pub fn lifetime_estimate(
    dod_series: &[f64],
    cycle_slots: usize,
    slot_seconds: f64,
    model: &LifetimeModel,
) -> Result<LifetimeEstimate, EnergyError> {
    if dod_series.is_empty() || cycle_slots == 0 {
        return Err(EnergyError::EmptySeries);
    }
    let maxima: Vec<f64> = dod_series.chunks(cycle_slots).map(|c| c.iter().copied().fold(0.0, f64::max)).collect();
    let mean = maxima.iter().sum::<f64>() / maxima.len() as f64;
    let degenerate = dod_series.iter().all(|&d| d == 0.0);
    let d = mean.max(model.min_dod);
    let cycle_seconds = cycle_slots as f64 * slot_seconds;
    Ok(LifetimeEstimate { years: model.cycles(d) * cycle_seconds / SECONDS_PER_YEAR, mean_cycle_dod: mean, degenerate })
}
