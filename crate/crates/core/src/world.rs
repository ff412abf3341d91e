//! The slotted space-ground network as seen by schedulers.
//!
//! A [`World`] is the precomputed input common to every strategy and to the
//! optimality oracle: per-slot sunlight indicators, ground-station contact
//! windows, the static ISL grid, orbit membership and link capacities. It is
//! built either from orbital propagation ([`World::from_sky`]) or directly from
//! a hand-written description ([`WorldDef`]), which is also its serialized form.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::{SatId, StationId};
use crate::nettopo::gsl_indicator;
use crate::orbital::Sky;

pub const DEFAULT_ISL_COUNT: u32 = 4;
pub const DEFAULT_ISL_CAPACITY_BPS: f64 = 1.0e9;
pub const DEFAULT_GSL_CAPACITY_BPS: f64 = 100.0e6;

/// Per-slot sunlight indicator for one satellite, serialized as a `0`/`1` string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SunSeries(pub Vec<bool>);

impl SunSeries {
    pub fn parse(s: &str) -> Result<Self, String> {
        s.chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(format!("unexpected `{other}` in sun series")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SunSeries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SunSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for SunSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SunSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = SunSeries;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a string of 0 and 1")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<SunSeries, E> {
                SunSeries::parse(v).map_err(E::custom)
            }
        }
        deserializer.deserialize_str(V)
    }
}

/// Slots `[start, end)` during which `sat` sees `station` above the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisWindow {
    pub sat: SatId,
    pub station: StationId,
    pub start: usize,
    pub end: usize,
}

/// Serializable description of a [`World`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDef {
    pub slot_seconds: f64,
    pub horizon: usize,
    /// Orbital cycle in slots (prediction window of orbit assignment and energy queries).
    pub cycle_slots: usize,
    #[serde(default = "default_isl_count")]
    pub isl_count: u32,
    #[serde(default = "default_isl_capacity")]
    pub isl_capacity_bps: f64,
    #[serde(default = "default_gsl_capacity")]
    pub gsl_capacity_bps: f64,
    pub num_stations: usize,
    /// ORB_i: satellites of each orbit. Satellite ids must cover 0..n exactly once.
    pub orbits: Vec<Vec<SatId>>,
    /// Undirected inter-satellite links.
    pub isl_links: Vec<(SatId, SatId)>,
    /// sun_{s,t}, one series per satellite, at least `horizon` slots long.
    pub sun: Vec<SunSeries>,
    #[serde(default)]
    pub gsl_windows: Vec<VisWindow>,
}

fn default_isl_count() -> u32 {
    DEFAULT_ISL_COUNT
}
fn default_isl_capacity() -> f64 {
    DEFAULT_ISL_CAPACITY_BPS
}
fn default_gsl_capacity() -> f64 {
    DEFAULT_GSL_CAPACITY_BPS
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("slot length must be positive, got {0}")]
    BadSlot(f64),
    #[error("cycle_slots must be >= 1")]
    BadCycle,
    #[error("orbits must list each satellite 0..{0} exactly once")]
    BadOrbits(usize),
    #[error("satellite {sat}: sun series has {len} slots, horizon is {horizon}")]
    ShortSun { sat: usize, len: usize, horizon: usize },
    #[error("link {0}-{1} references an unknown satellite or is a self-loop")]
    BadLink(usize, usize),
    #[error("window {0:?} references an unknown satellite or station, or is empty")]
    BadWindow(VisWindow),
    #[error("link capacities must be positive")]
    BadCapacity,
}

/// Precomputed network and illumination view over a finite horizon.
#[derive(Debug, Clone)]
pub struct World {
    def: WorldDef,
    orbit_of: Vec<usize>,
    neighbors: Vec<Vec<SatId>>,
    /// prefix[s][t] = number of sunlit slots in [0, t)
    sun_prefix: Vec<Vec<u32>>,
    /// next_sunlit[s][t] = first sunlit slot >= t, u32::MAX if none
    next_sunlit: Vec<Vec<u32>>,
    /// windows per satellite, sorted by start
    windows_by_sat: Vec<Vec<VisWindow>>,
    longest_window: Vec<usize>,
    sky: Option<Arc<Sky>>,
}

impl Serialize for World {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.def.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for World {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let def = WorldDef::deserialize(deserializer)?;
        World::new(def).map_err(de::Error::custom)
    }
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.def == other.def
    }
}

impl World {
    pub fn new(def: WorldDef) -> Result<Self, WorldError> {
        if !(def.slot_seconds > 0.0) {
            return Err(WorldError::BadSlot(def.slot_seconds));
        }
        if def.cycle_slots == 0 {
            return Err(WorldError::BadCycle);
        }
        if !(def.isl_capacity_bps > 0.0 && def.gsl_capacity_bps > 0.0) {
            return Err(WorldError::BadCapacity);
        }
        let n = def.sun.len();
        let mut orbit_of = vec![usize::MAX; n];
        for (i, orbit) in def.orbits.iter().enumerate() {
            for s in orbit {
                if s.0 >= n || orbit_of[s.0] != usize::MAX {
                    return Err(WorldError::BadOrbits(n));
                }
                orbit_of[s.0] = i;
            }
        }
        if orbit_of.contains(&usize::MAX) {
            return Err(WorldError::BadOrbits(n));
        }
        for (s, series) in def.sun.iter().enumerate() {
            if series.len() < def.horizon {
                return Err(WorldError::ShortSun { sat: s, len: series.len(), horizon: def.horizon });
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &def.isl_links {
            if a.0 >= n || b.0 >= n || a == b {
                return Err(WorldError::BadLink(a.0, b.0));
            }
            if !neighbors[a.0].contains(&b) {
                neighbors[a.0].push(b);
                neighbors[b.0].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort();
        }
        let mut windows_by_sat = vec![Vec::new(); n];
        for w in &def.gsl_windows {
            if w.sat.0 >= n || w.station.0 >= def.num_stations || w.start >= w.end {
                return Err(WorldError::BadWindow(*w));
            }
            windows_by_sat[w.sat.0].push(*w);
        }
        for list in &mut windows_by_sat {
            list.sort_by_key(|w| (w.start, w.station));
        }
        let longest_window =
            windows_by_sat.iter().map(|ws| ws.iter().map(|w| w.end - w.start).max().unwrap_or(0)).collect();
        let sun_prefix = def
            .sun
            .iter()
            .map(|series| {
                let mut prefix = Vec::with_capacity(series.len() + 1);
                let mut acc = 0u32;
                prefix.push(0);
                for &lit in &series.0 {
                    acc += lit as u32;
                    prefix.push(acc);
                }
                prefix
            })
            .collect();
        let next_sunlit = def
            .sun
            .iter()
            .map(|series| {
                let mut next = vec![u32::MAX; series.len()];
                let mut upcoming = u32::MAX;
                for t in (0..series.len()).rev() {
                    if series.0[t] {
                        upcoming = t as u32;
                    }
                    next[t] = upcoming;
                }
                next
            })
            .collect();
        Ok(World { def, orbit_of, neighbors, sun_prefix, next_sunlit, windows_by_sat, longest_window, sky: None })
    }

    /// Samples a propagated constellation over `horizon` slots.
    ///
    /// Sunlight is sampled for `horizon + cycle_slots` slots so that
    /// look-ahead queries near the end of the horizon stay defined.
    pub fn from_sky(
        sky: Sky,
        horizon: usize,
        cycle_slots: usize,
        isl_capacity_bps: f64,
        gsl_capacity_bps: f64,
    ) -> Result<Self, WorldError> {
        let constellation = sky.constellation();
        let n = constellation.num_sats();
        let num_stations = sky.stations().len();
        let sun_len = horizon + cycle_slots;
        let mut sun = vec![Vec::with_capacity(sun_len); n];
        let mut windows = Vec::new();
        let mut open: Vec<Option<usize>> = vec![None; n * num_stations];
        for t in 0..sun_len {
            let state = sky.state(t);
            for (s, &lit) in state.sunlit.iter().enumerate() {
                sun[s].push(lit);
            }
            if t >= horizon {
                continue;
            }
            for (s, pos) in state.sat_positions.iter().enumerate() {
                for g in 0..num_stations {
                    let key = s * num_stations + g;
                    let vis = sky.station_visible(pos, StationId(g), t);
                    match (vis, open[key]) {
                        (true, None) => open[key] = Some(t),
                        (false, Some(start)) => {
                            windows.push(VisWindow { sat: SatId(s), station: StationId(g), start, end: t });
                            open[key] = None;
                        }
                        _ => {}
                    }
                }
            }
        }
        for (key, start) in open.iter().enumerate() {
            if let Some(start) = *start {
                windows.push(VisWindow {
                    sat: SatId(key / num_stations),
                    station: StationId(key % num_stations),
                    start,
                    end: horizon,
                });
            }
        }
        let mut isl_links = Vec::new();
        for sat in constellation.satellites() {
            for nb in constellation.isl_neighbors(sat.id) {
                if sat.id < nb && !isl_links.contains(&(sat.id, nb)) {
                    isl_links.push((sat.id, nb));
                }
            }
        }
        let def = WorldDef {
            slot_seconds: sky.slot_seconds(),
            horizon,
            cycle_slots,
            isl_count: DEFAULT_ISL_COUNT,
            isl_capacity_bps,
            gsl_capacity_bps,
            num_stations,
            orbits: constellation.orbits().to_vec(),
            isl_links,
            sun: sun.into_iter().map(SunSeries).collect(),
            gsl_windows: windows,
        };
        let mut world = World::new(def)?;
        world.sky = Some(Arc::new(sky));
        Ok(world)
    }

    pub fn def(&self) -> &WorldDef {
        &self.def
    }

    pub fn sky(&self) -> Option<&Sky> {
        self.sky.as_deref()
    }

    pub fn slot_seconds(&self) -> f64 {
        self.def.slot_seconds
    }

    pub fn horizon(&self) -> usize {
        self.def.horizon
    }

    pub fn cycle_slots(&self) -> usize {
        self.def.cycle_slots
    }

    pub fn isl_count(&self) -> u32 {
        self.def.isl_count
    }

    pub fn isl_capacity_bps(&self) -> f64 {
        self.def.isl_capacity_bps
    }

    pub fn gsl_capacity_bps(&self) -> f64 {
        self.def.gsl_capacity_bps
    }

    pub fn num_sats(&self) -> usize {
        self.def.sun.len()
    }

    pub fn num_stations(&self) -> usize {
        self.def.num_stations
    }

    pub fn sats(&self) -> impl Iterator<Item = SatId> {
        (0..self.num_sats()).map(SatId)
    }

    pub fn orbits(&self) -> &[Vec<SatId>] {
        &self.def.orbits
    }

    pub fn orbit_of(&self, s: SatId) -> usize {
        self.orbit_of[s.0]
    }

    pub fn isl_neighbors(&self, s: SatId) -> &[SatId] {
        &self.neighbors[s.0]
    }

    /// sun_{s,t}; slots past the sampled range count as eclipse.
    pub fn sunlit(&self, s: SatId, t: usize) -> bool {
        self.def.sun[s.0].0.get(t).copied().unwrap_or(false)
    }

    /// Σ sun_{s,τ} over `range`, clipped to the sampled slots.
    pub fn sunlit_count(&self, s: SatId, range: Range<usize>) -> usize {
        let prefix = &self.sun_prefix[s.0];
        let last = prefix.len() - 1;
        let (a, b) = (range.start.min(last), range.end.min(last));
        if b <= a {
            return 0;
        }
        (prefix[b] - prefix[a]) as usize
    }

    /// First sunlit slot at or after `t`.
    pub fn next_sunlit(&self, s: SatId, t: usize) -> Option<usize> {
        match self.next_sunlit[s.0].get(t) {
            Some(&v) if v != u32::MAX => Some(v as usize),
            _ => None,
        }
    }

    pub fn station_visible(&self, s: SatId, g: StationId, t: usize) -> bool {
        self.windows_at(s, t).any(|w| w.station == g)
    }

    /// Stations visible from `s` during slot `t`, in id order.
    pub fn visible_stations(&self, s: SatId, t: usize) -> Vec<StationId> {
        let mut v: Vec<StationId> = self.windows_at(s, t).map(|w| w.station).collect();
        v.sort();
        v.dedup();
        v
    }

    fn windows_at(&self, s: SatId, t: usize) -> impl Iterator<Item = &VisWindow> + '_ {
        let list = &self.windows_by_sat[s.0];
        // windows sorted by start; only those starting in (t - longest, t] can cover t
        let upper = list.partition_point(|w| w.start <= t);
        let lower_start = t.saturating_sub(self.longest_window[s.0]);
        list[..upper].iter().rev().take_while(move |w| w.start >= lower_start).filter(move |w| w.end > t)
    }

    /// l_{s,t}: whether any ground station is reachable.
    pub fn gsl_connected(&self, s: SatId, t: usize) -> bool {
        let visible = self.visible_stations(s, t);
        gsl_indicator((0..self.num_stations()).map(|g| visible.contains(&StationId(g))))
    }

    /// Distance used to break ties between equally available stations.
    /// Worlds without geometry report zero.
    pub fn ground_distance_km(&self, s: SatId, g: StationId, t: usize) -> f64 {
        self.sky.as_ref().map(|sky| sky.ground_distance_km(s, g, t)).unwrap_or(0.0)
    }
}
