//! Circular-orbit constellation geometry.
//!
//! Satellites move on ideal two-body circular orbits (no J2, no drag). The
//! Sun follows a circular ecliptic with fixed obliquity, Earth rotates at the
//! solar rate, and the Earth's shadow is an infinite cylinder of radius
//! [`EARTH_RADIUS_KM`] pointing away from the Sun.

use std::f64::consts::{PI, TAU};
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ids::{Node, SatId, StationId};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
pub const OBLIQUITY_DEG: f64 = 23.44;
pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// Day of year (1-based, fractional) at which the ecliptic longitude is zero.
pub const MARCH_EQUINOX_DAY: f64 = 80.0;
const DAYS_PER_YEAR: f64 = 365.25;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("shell {index}: {reason}")]
    InvalidShell { index: usize, reason: String },
    #[error("epoch day {0} outside 1..=366")]
    InvalidEpoch(u16),
    #[error("ground station `{id}`: {reason}")]
    InvalidStation { id: String, reason: String },
    #[error("minimum elevation {0} deg outside (0, 90)")]
    InvalidElevationMask(f64),
    #[error("reading ground stations from {path}: {source}")]
    StationFile { path: String, source: csv::Error },
    #[error("reading ground stations: {0}")]
    StationCsv(#[from] csv::Error),
}

fn default_raan_spread() -> f64 {
    360.0
}

/// One Walker shell: `num_planes` evenly spaced planes with `sats_per_plane`
/// evenly spaced satellites each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shell {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    /// Walker phasing factor F: plane `p` is shifted by `2π·F·p / (P·S)`.
    #[serde(default)]
    pub phase_offset: f64,
    /// Angular span over which plane RAANs are spread (360 for delta, 180 for star).
    #[serde(default = "default_raan_spread")]
    pub raan_spread_deg: f64,
    /// RAAN of the first plane.
    #[serde(default)]
    pub raan_offset_deg: f64,
}

impl Shell {
    pub fn walker(altitude_km: f64, inclination_deg: f64, planes: usize, per_plane: usize) -> Self {
        Shell {
            altitude_km,
            inclination_deg,
            num_planes: planes,
            sats_per_plane: per_plane,
            phase_offset: 1.0,
            raan_spread_deg: 360.0,
            raan_offset_deg: 0.0,
        }
    }

    fn validate(&self, index: usize) -> Result<(), GeometryError> {
        let bad = |reason: &str| GeometryError::InvalidShell { index, reason: reason.to_string() };
        if !(self.altitude_km > 0.0) {
            return Err(bad("altitude_km must be > 0"));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(bad("inclination_deg must be in [0, 180]"));
        }
        if self.num_planes == 0 {
            return Err(bad("num_planes must be >= 1"));
        }
        if self.sats_per_plane == 0 {
            return Err(bad("sats_per_plane must be >= 1"));
        }
        if !self.phase_offset.is_finite() || !self.raan_spread_deg.is_finite() {
            return Err(bad("phasing parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub shells: Vec<Shell>,
    pub epoch_day_of_year: u16,
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(1..=366).contains(&self.epoch_day_of_year) {
            return Err(GeometryError::InvalidEpoch(self.epoch_day_of_year));
        }
        for (i, shell) in self.shells.iter().enumerate() {
            shell.validate(i)?;
        }
        Ok(())
    }

    pub fn num_sats(&self) -> usize {
        self.shells.iter().map(|s| s.num_planes * s.sats_per_plane).sum()
    }

    pub fn num_orbits(&self) -> usize {
        self.shells.iter().map(|s| s.num_planes).sum()
    }
}

/// Period of a circular orbit at the given altitude, by Kepler's third law.
pub fn orbital_period_s(altitude_km: f64) -> f64 {
    let a = EARTH_RADIUS_KM + altitude_km;
    TAU * (a.powi(3) / EARTH_MU_KM3_S2).sqrt()
}

/// A single satellite on its circular orbit.
#[derive(Debug, Clone)]
pub struct Satellite {
    pub id: SatId,
    pub orbit: usize,
    pub plane: usize,
    pub index_in_plane: usize,
    pub radius_km: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub initial_anomaly_rad: f64,
    pub mean_motion_rad_s: f64,
}

impl Satellite {
    /// Earth-centred inertial position (km) `seconds` after epoch.
    pub fn position_at(&self, seconds: f64) -> Vec3 {
        let u = self.initial_anomaly_rad + self.mean_motion_rad_s * seconds;
        let (su, cu) = u.sin_cos();
        let (so, co) = self.raan_rad.sin_cos();
        let (si, ci) = self.inclination_rad.sin_cos();
        self.radius_km * Vec3::new(cu * co - su * ci * so, cu * so + su * ci * co, su * si)
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.mean_motion_rad_s
    }

    /// Unit normal of the orbital plane.
    pub fn orbit_normal(&self) -> Vec3 {
        let (so, co) = self.raan_rad.sin_cos();
        let (si, ci) = self.inclination_rad.sin_cos();
        Vec3::new(si * so, -si * co, ci)
    }
}

/// Angle (deg) between the sun direction and the orbital plane.
pub fn beta_angle_deg(orbit_normal: &Vec3, sun_dir: &Vec3) -> f64 {
    orbit_normal.dot(sun_dir).clamp(-1.0, 1.0).asin().to_degrees()
}

/// The expanded constellation: satellites, orbits and +Grid neighbours.
#[derive(Debug, Clone)]
pub struct Constellation {
    spec: ConstellationSpec,
    satellites: Vec<Satellite>,
    orbits: Vec<Vec<SatId>>,
    neighbors: Vec<[SatId; 4]>,
}

impl Constellation {
    pub fn new(spec: ConstellationSpec) -> Result<Self, GeometryError> {
        spec.validate()?;
        let mut satellites = Vec::with_capacity(spec.num_sats());
        let mut orbits = Vec::with_capacity(spec.num_orbits());
        let mut neighbors = Vec::with_capacity(spec.num_sats());
        for shell in &spec.shells {
            let base = satellites.len();
            let (planes, per_plane) = (shell.num_planes, shell.sats_per_plane);
            let radius = EARTH_RADIUS_KM + shell.altitude_km;
            let mean_motion = (EARTH_MU_KM3_S2 / radius.powi(3)).sqrt();
            let id_of = |p: usize, j: usize| SatId(base + p * per_plane + j);
            for p in 0..planes {
                let orbit = orbits.len();
                let raan = (shell.raan_offset_deg + shell.raan_spread_deg * p as f64 / planes as f64).to_radians();
                let mut members = Vec::with_capacity(per_plane);
                for j in 0..per_plane {
                    let anomaly = TAU * j as f64 / per_plane as f64
                        + TAU * shell.phase_offset * p as f64 / (planes * per_plane) as f64;
                    let id = id_of(p, j);
                    satellites.push(Satellite {
                        id,
                        orbit,
                        plane: p,
                        index_in_plane: j,
                        radius_km: radius,
                        inclination_rad: shell.inclination_deg.to_radians(),
                        raan_rad: raan,
                        initial_anomaly_rad: anomaly,
                        mean_motion_rad_s: mean_motion,
                    });
                    neighbors.push([
                        id_of(p, (j + 1) % per_plane),
                        id_of(p, (j + per_plane - 1) % per_plane),
                        id_of((p + planes - 1) % planes, j),
                        id_of((p + 1) % planes, j),
                    ]);
                    members.push(id);
                }
                orbits.push(members);
            }
        }
        Ok(Constellation { spec, satellites, orbits, neighbors })
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn satellites(&self) -> &[Satellite] {
        &self.satellites
    }

    pub fn satellite(&self, id: SatId) -> &Satellite {
        &self.satellites[id.0]
    }

    pub fn num_sats(&self) -> usize {
        self.satellites.len()
    }

    /// Satellites of each orbit (ORB_i), one entry per plane across all shells.
    pub fn orbits(&self) -> &[Vec<SatId>] {
        &self.orbits
    }

    /// +Grid neighbours: fore, aft, left plane, right plane.
    ///
    /// For grids with fewer than three planes or satellites per plane some
    /// entries repeat.
    pub fn isl_neighbors(&self, id: SatId) -> [SatId; 4] {
        self.neighbors[id.0]
    }

    /// Positions of every satellite at slot `t` of length `dt` seconds.
    pub fn propagate(&self, t: usize, dt: f64) -> Vec<Vec3> {
        let seconds = t as f64 * dt;
        self.satellites.iter().map(|s| s.position_at(seconds)).collect()
    }

    /// Longest orbital period in the constellation.
    pub fn max_period_s(&self) -> f64 {
        self.satellites.iter().map(Satellite::period_s).fold(0.0, f64::max)
    }
}

/// Ecliptic longitude of the Sun (rad) at `seconds` after 00:00 UTC of `epoch_day`.
fn ecliptic_longitude(epoch_day: u16, seconds: f64) -> f64 {
    let day = epoch_day as f64 + seconds / SECONDS_PER_DAY;
    TAU * (day - MARCH_EQUINOX_DAY) / DAYS_PER_YEAR
}

/// Unit vector from the Earth's centre toward the Sun at a time in seconds.
pub fn sun_direction_at(epoch_day: u16, seconds: f64) -> Vec3 {
    let lambda = ecliptic_longitude(epoch_day, seconds);
    let eps = OBLIQUITY_DEG.to_radians();
    let (sl, cl) = lambda.sin_cos();
    Vec3::new(cl, eps.cos() * sl, eps.sin() * sl).normalize()
}

/// Unit vector toward the Sun at slot `t` of `dt` seconds.
pub fn sun_direction(epoch_day: u16, t: usize, dt: f64) -> Vec3 {
    sun_direction_at(epoch_day, t as f64 * dt)
}

pub fn solar_declination_deg(sun_dir: &Vec3) -> f64 {
    (sun_dir.z / sun_dir.norm()).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Angle (rad) of the Greenwich meridian in the inertial frame.
///
/// Epoch is 00:00 UTC, when Greenwich faces away from the Sun; the Earth
/// turns once per solar day.
pub fn earth_rotation_angle(epoch_day: u16, seconds: f64) -> f64 {
    let sun = sun_direction_at(epoch_day, seconds);
    let sun_ra = sun.y.atan2(sun.x);
    let day_fraction = (seconds / SECONDS_PER_DAY).fract();
    (sun_ra + PI + TAU * day_fraction).rem_euclid(TAU)
}

/// Cylindrical umbra test.
pub fn is_sunlit(sat_position: &Vec3, sun_dir: &Vec3) -> bool {
    let along = sat_position.dot(sun_dir);
    if along >= 0.0 {
        return true;
    }
    let perpendicular = sat_position - along * sun_dir;
    perpendicular.norm() > EARTH_RADIUS_KM
}

/// Whether an orbit of height `h_km` whose plane makes angle `theta_deg`
/// with the sunlight never enters the shadow cylinder.
pub fn full_orbit_sunlit(h_km: f64, theta_deg: f64) -> bool {
    (EARTH_RADIUS_KM + h_km) * theta_deg.to_radians().sin() > EARTH_RADIUS_KM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: String,
    #[serde(rename = "lat")]
    pub latitude_deg: f64,
    #[serde(rename = "lon")]
    pub longitude_deg: f64,
}

pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStationSet {
    pub stations: Vec<GroundStation>,
    pub min_elevation_deg: f64,
}

impl GroundStationSet {
    pub fn new(stations: Vec<GroundStation>, min_elevation_deg: f64) -> Result<Self, GeometryError> {
        let set = GroundStationSet { stations, min_elevation_deg };
        set.validate()?;
        Ok(set)
    }

    pub fn empty() -> Self {
        GroundStationSet { stations: Vec::new(), min_elevation_deg: DEFAULT_MIN_ELEVATION_DEG }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            return Err(GeometryError::InvalidElevationMask(self.min_elevation_deg));
        }
        for gs in &self.stations {
            let bad = |reason: &str| GeometryError::InvalidStation { id: gs.id.clone(), reason: reason.to_string() };
            if !(gs.latitude_deg.abs() <= 90.0) {
                return Err(bad("latitude outside [-90, 90]"));
            }
            if !(-180.0..180.0).contains(&gs.longitude_deg) {
                return Err(bad("longitude outside [-180, 180)"));
            }
        }
        Ok(())
    }

    /// Reads `id,lat,lon` rows.
    pub fn from_csv_reader<R: Read>(reader: R, min_elevation_deg: f64) -> Result<Self, GeometryError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let stations = rdr.deserialize().collect::<Result<Vec<GroundStation>, _>>()?;
        Self::new(stations, min_elevation_deg)
    }

    pub fn from_csv_path(path: &Path, min_elevation_deg: f64) -> Result<Self, GeometryError> {
        let file_err = |source| GeometryError::StationFile { path: path.display().to_string(), source };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(file_err)?;
        let stations = rdr.deserialize().collect::<Result<Vec<GroundStation>, _>>().map_err(file_err)?;
        Self::new(stations, min_elevation_deg)
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Inertial position (km) of a station on the spherical Earth.
    pub fn position(&self, id: StationId, epoch_day: u16, seconds: f64) -> Vec3 {
        let gs = &self.stations[id.0];
        let lat = gs.latitude_deg.to_radians();
        let angle = earth_rotation_angle(epoch_day, seconds) + gs.longitude_deg.to_radians();
        EARTH_RADIUS_KM * Vec3::new(lat.cos() * angle.cos(), lat.cos() * angle.sin(), lat.sin())
    }
}

/// Elevation (deg) of a satellite above the local horizon of a surface point.
pub fn elevation_deg(sat_position: &Vec3, station_position: &Vec3) -> f64 {
    let line = sat_position - station_position;
    let up = station_position.normalize();
    (line.dot(&up) / line.norm()).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Geodetic-free subsatellite point `(lat, lon)` in degrees, lon in [-180, 180).
pub fn subsatellite_point(position: &Vec3, epoch_day: u16, seconds: f64) -> (f64, f64) {
    let lat = (position.z / position.norm()).clamp(-1.0, 1.0).asin().to_degrees();
    let inertial_lon = position.y.atan2(position.x);
    let lon = (inertial_lon - earth_rotation_angle(epoch_day, seconds)).to_degrees();
    (lat, wrap_longitude(lon))
}

pub fn wrap_longitude(lon_deg: f64) -> f64 {
    (lon_deg + 180.0).rem_euclid(360.0) - 180.0
}

pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().clamp(0.0, 1.0).asin()
}

/// Everything observable about the sky in one slot.
#[derive(Debug, Clone)]
pub struct SkyState {
    pub time_slot: usize,
    pub sat_positions: Vec<Vec3>,
    pub sun_unit_vector: Vec3,
    pub sunlit: Vec<bool>,
}

/// Constellation plus ground segment on a fixed slot grid.
#[derive(Debug, Clone)]
pub struct Sky {
    constellation: Constellation,
    stations: GroundStationSet,
    slot_seconds: f64,
}

impl Sky {
    pub fn new(constellation: Constellation, stations: GroundStationSet, slot_seconds: f64) -> Self {
        Sky { constellation, stations, slot_seconds }
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn stations(&self) -> &GroundStationSet {
        &self.stations
    }

    pub fn slot_seconds(&self) -> f64 {
        self.slot_seconds
    }

    pub fn epoch_day(&self) -> u16 {
        self.constellation.spec.epoch_day_of_year
    }

    fn seconds(&self, t: usize) -> f64 {
        t as f64 * self.slot_seconds
    }

    pub fn sun(&self, t: usize) -> Vec3 {
        sun_direction(self.epoch_day(), t, self.slot_seconds)
    }

    pub fn sat_position(&self, sat: SatId, t: usize) -> Vec3 {
        self.constellation.satellite(sat).position_at(self.seconds(t))
    }

    pub fn station_position(&self, gs: StationId, t: usize) -> Vec3 {
        self.stations.position(gs, self.epoch_day(), self.seconds(t))
    }

    pub fn state(&self, t: usize) -> SkyState {
        let sun = self.sun(t);
        let sat_positions = self.constellation.propagate(t, self.slot_seconds);
        let sunlit = sat_positions.iter().map(|p| is_sunlit(p, &sun)).collect();
        SkyState { time_slot: t, sat_positions, sun_unit_vector: sun, sunlit }
    }

    pub fn station_visible(&self, sat_position: &Vec3, gs: StationId, t: usize) -> bool {
        let station = self.station_position(gs, t);
        elevation_deg(sat_position, &station) >= self.stations.min_elevation_deg
    }

    /// Vis_{i,j}^t: +Grid adjacency between satellites, elevation mask between
    /// a satellite and a station, never between two stations.
    pub fn visible(&self, i: Node, j: Node, t: usize) -> bool {
        match (i, j) {
            (Node::Sat(a), Node::Sat(b)) => a != b && self.constellation.isl_neighbors(a).contains(&b),
            (Node::Sat(s), Node::Ground(g)) | (Node::Ground(g), Node::Sat(s)) => {
                self.station_visible(&self.sat_position(s, t), g, t)
            }
            (Node::Ground(_), Node::Ground(_)) => false,
        }
    }

    pub fn subsatellite_point(&self, sat_position: &Vec3, t: usize) -> (f64, f64) {
        subsatellite_point(sat_position, self.epoch_day(), self.seconds(t))
    }

    /// Great-circle distance between a satellite's ground track and a station.
    pub fn ground_distance_km(&self, sat: SatId, gs: StationId, t: usize) -> f64 {
        let (lat, lon) = self.subsatellite_point(&self.sat_position(sat, t), t);
        let station = &self.stations.stations[gs.0];
        great_circle_km(lat, lon, station.latitude_deg, station.longitude_deg)
    }
}

/// Fraction of the slots in `window` during which `sat` is sunlit.
///
/// `states` is indexed by slot; `window` must be non-empty.
pub fn sunlit_ratio(sat: SatId, window: Range<usize>, states: &[SkyState]) -> f64 {
    assert!(!window.is_empty(), "sunlit_ratio over an empty window");
    let len = window.len();
    let lit = states[window].iter().filter(|s| s.sunlit[sat.0]).count();
    lit as f64 / len as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(altitude: f64, inclination: f64, raan: f64, epoch: u16) -> Constellation {
        let mut shell = Shell::walker(altitude, inclination, 1, 1);
        shell.raan_offset_deg = raan;
        Constellation::new(ConstellationSpec { shells: vec![shell], epoch_day_of_year: epoch }).unwrap()
    }

    fn walker(planes: usize, per_plane: usize) -> Constellation {
        Constellation::new(ConstellationSpec {
            shells: vec![Shell::walker(550.0, 53.0, planes, per_plane)],
            epoch_day_of_year: 80,
        })
        .unwrap()
    }

    #[test]
    fn initial_position_sits_on_the_orbit_radius() {
        let c = single(550.0, 53.0, 0.0, 80);
        let p = c.propagate(0, 1.0)[0];
        assert!((p.norm() - 6921.0).abs() < 1e-9);
        // anomaly 0, RAAN 0: ascending node on +x
        assert!((p - Vec3::new(6921.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn period_at_550_km_is_about_5730_s() {
        let period = orbital_period_s(550.0);
        assert!((period - 5730.0).abs() < 1.0, "{period}");
        assert!((orbital_period_s(1200.0) - 6556.0).abs() < 1.0);
    }

    #[test]
    fn propagation_is_periodic() {
        let c = walker(3, 4);
        let period = orbital_period_s(550.0);
        for sat in c.satellites() {
            for start in [0.0, 123.4, 4000.0] {
                let a = sat.position_at(start);
                let b = sat.position_at(start + period);
                assert!((a - b).norm() < 1e-6, "sat {} drifted {}", sat.id, (a - b).norm());
            }
        }
    }

    #[test]
    fn planes_and_slots_are_evenly_spaced() {
        let c = walker(4, 6);
        let sats = c.satellites();
        for w in c.orbits()[0].windows(2) {
            let (a, b) = (&sats[w[0].0], &sats[w[1].0]);
            let gap = b.initial_anomaly_rad - a.initial_anomaly_rad;
            assert!((gap - TAU / 6.0).abs() < 1e-12);
        }
        let raans: Vec<f64> = c.orbits().iter().map(|o| sats[o[0].0].raan_rad).collect();
        for w in raans.windows(2) {
            assert!((w[1] - w[0] - TAU / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equinox_and_solstice_declinations() {
        let eq = solar_declination_deg(&sun_direction(80, 0, 1.0));
        assert!(eq.abs() < 1.0, "{eq}");
        let sol = solar_declination_deg(&sun_direction(172, 0, 1.0));
        assert!((sol - 23.44).abs() < 0.5, "{sol}");
        let winter = solar_declination_deg(&sun_direction(355, 0, 1.0));
        assert!((winter + 23.44).abs() < 0.5, "{winter}");
        for t in [0, 1000, 50_000, 10_000_000] {
            assert!((sun_direction(1, t, 1.0).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn umbra_cylinder() {
        let sun = Vec3::new(1.0, 0.0, 0.0);
        assert!(is_sunlit(&Vec3::new(7000.0, 100.0, 0.0), &sun));
        assert!(!is_sunlit(&Vec3::new(-6921.0, 0.0, 0.0), &sun));
        assert!(is_sunlit(&Vec3::new(-3000.0, 6400.0, 0.0), &sun));
        assert!(!is_sunlit(&Vec3::new(-3000.0, 6300.0, 0.0), &sun));
    }

    #[test]
    fn full_orbit_sunlit_condition() {
        for h in [200.0, 550.0, 1200.0] {
            assert!(full_orbit_sunlit(h, 90.0));
        }
        assert!(!full_orbit_sunlit(550.0, 60.0));
        assert!(full_orbit_sunlit(550.0, 70.0));
        assert!(!full_orbit_sunlit(550.0, 0.0));
    }

    #[test]
    fn sunlit_ratio_extremes() {
        let c = single(550.0, 53.0, 0.0, 80);
        let sky = Sky::new(c, GroundStationSet::empty(), 10.0);
        let mut states: Vec<SkyState> = (0..10).map(|t| sky.state(t)).collect();
        for s in &mut states {
            s.sunlit[0] = true;
        }
        assert_eq!(sunlit_ratio(SatId(0), 0..10, &states), 1.0);
        for s in &mut states {
            s.sunlit[0] = false;
        }
        assert_eq!(sunlit_ratio(SatId(0), 0..10, &states), 0.0);
    }

    #[test]
    fn eclipse_fraction_matches_shadow_chord_at_zero_beta() {
        // Equinox sun is along +x; RAAN 0 with zero inclination puts the
        // plane containing the sun direction.
        let dt = 1.0;
        let c = single(550.0, 0.0, 0.0, 80);
        let period = orbital_period_s(550.0);
        let slots = period.round() as usize;
        let sky = Sky::new(c, GroundStationSet::empty(), dt);
        let dark = (0..slots).filter(|&t| !sky.state(t).sunlit[0]).count();
        let expected = (EARTH_RADIUS_KM / 6921.0).asin() / PI * slots as f64;
        // beta drifts by well under 0.1 deg over one orbit
        assert!((dark as f64 - expected).abs() <= 2.0, "dark {dark} expected {expected}");
    }

    #[test]
    fn grid_neighbors_are_four_distinct_satellites() {
        let c = walker(6, 8);
        for sat in c.satellites() {
            let n = c.isl_neighbors(sat.id);
            let mut uniq = n.to_vec();
            uniq.sort();
            uniq.dedup();
            assert_eq!(uniq.len(), 4);
            assert!(!uniq.contains(&sat.id));
            // symmetric adjacency
            for other in n {
                assert!(c.isl_neighbors(other).contains(&sat.id));
            }
        }
    }

    #[test]
    fn visibility_cases() {
        let c = walker(3, 4);
        let stations =
            GroundStationSet::new(vec![GroundStation { id: "eq".into(), latitude_deg: 0.0, longitude_deg: 0.0 }], 25.0)
                .unwrap();
        let sky = Sky::new(c, stations, 1.0);
        // same-plane successor
        for t in [0, 100, 3000] {
            assert!(sky.visible(Node::sat(0), Node::sat(1), t));
        }
        assert!(!sky.visible(Node::ground(0), Node::ground(0), 0));

        // station directly beneath a satellite and on the far side
        let gs = sky.station_position(StationId(0), 0);
        let overhead = gs.normalize() * 6921.0;
        assert!((elevation_deg(&overhead, &gs) - 90.0).abs() < 1e-9);
        assert!(sky.station_visible(&overhead, StationId(0), 0));
        assert!(!sky.station_visible(&(-overhead), StationId(0), 0));
    }

    #[test]
    fn subsatellite_point_of_overhead_position() {
        let stations = GroundStationSet::new(
            vec![GroundStation { id: "a".into(), latitude_deg: 35.0, longitude_deg: -120.0 }],
            10.0,
        )
        .unwrap();
        let p = stations.position(StationId(0), 150, 4321.0) * (6921.0 / EARTH_RADIUS_KM);
        let (lat, lon) = subsatellite_point(&p, 150, 4321.0);
        assert!((lat - 35.0).abs() < 1e-9 && (lon + 120.0).abs() < 1e-9, "{lat} {lon}");
    }

    #[test]
    fn station_validation() {
        let bad =
            GroundStationSet::new(vec![GroundStation { id: "x".into(), latitude_deg: 91.0, longitude_deg: 0.0 }], 25.0);
        assert!(bad.is_err());
        assert!(GroundStationSet::new(vec![], 0.0).is_err());
        let csv = "id,lat,lon\nboston, 42.36, -71.06\nperth,-31.95,115.86\n";
        let set = GroundStationSet::from_csv_reader(csv.as_bytes(), 25.0).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.stations[1].id, "perth");
    }

    #[test]
    fn spec_validation() {
        let mut spec = ConstellationSpec { shells: vec![Shell::walker(550.0, 53.0, 2, 2)], epoch_day_of_year: 80 };
        assert!(spec.validate().is_ok());
        spec.shells[0].altitude_km = 0.0;
        assert!(spec.validate().is_err());
        spec.shells[0].altitude_km = 550.0;
        spec.shells[0].inclination_deg = 181.0;
        assert!(spec.validate().is_err());
        spec.shells[0].inclination_deg = 53.0;
        spec.epoch_day_of_year = 0;
        assert!(matches!(spec.validate(), Err(GeometryError::InvalidEpoch(0))));
    }
}
