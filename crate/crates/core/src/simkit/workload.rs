//! Imaging tasks generated from ground tracks over regions of interest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ids::{SatId, TaskId};
use crate::orbital::Sky;
use crate::sbeo::Task;
use crate::simkit::config::WorkloadConfig;

/// Tasks for every satellite over `horizon` slots.
///
/// Each satellite images at most once per `interval_s`, starting from a
/// random phase, whenever its subsatellite point lies inside a region. Each
/// image becomes a task with `capture_probability`. Tasks whose deadline
/// falls past the horizon are dropped. Ids follow (arrival, source) order.
pub fn generate_workload(sky: &Sky, horizon: usize, cfg: &WorkloadConfig, seed: u64) -> Vec<Task> {
    let n = sky.constellation().num_sats();
    let dt = sky.slot_seconds();
    let interval = cfg.interval_s();
    let compute_s = cfg.compute_seconds().expect("validated workload has an inference time");
    let compute_slots = ((compute_s / dt) - 1e-9).ceil().max(1.0) as usize;
    let deadline_slots = (cfg.deadline_s / dt + 1e-9).floor() as usize;
    let size_bits = cfg.image_bits();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * interval - interval).collect();
    let mut tasks = Vec::new();
    for t in 0..horizon {
        let now = t as f64 * dt;
        let state = sky.state(t);
        for (s, pos) in state.sat_positions.iter().enumerate() {
            if now - last[s] < interval - 1e-9 {
                continue;
            }
            let (lat, lon) = sky.subsatellite_point(pos, t);
            if !cfg.regions.iter().any(|r| r.contains(lat, lon)) {
                continue;
            }
            last[s] = now;
            let captured = rng.gen::<f64>() < cfg.capture_probability;
            let deadline = t + deadline_slots;
            if captured && deadline <= horizon {
                tasks.push(Task {
                    id: TaskId(tasks.len()),
                    src: SatId(s),
                    size_bits,
                    arrival: t,
                    compute_slots,
                    deadline,
                });
            }
        }
    }
    tasks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbital::{Constellation, ConstellationSpec, GroundStationSet, Shell};
    use crate::simkit::config::{Region, TaskKind};

    fn sky(dt: f64) -> Sky {
        let c = Constellation::new(ConstellationSpec {
            shells: vec![Shell::walker(550.0, 53.0, 2, 3)],
            epoch_day_of_year: 172,
        })
        .unwrap();
        Sky::new(c, GroundStationSet::empty(), dt)
    }

    fn cfg(task: TaskKind, regions: Vec<Region>) -> WorkloadConfig {
        WorkloadConfig {
            task,
            power_level_w: 60.0,
            compute_seconds: None,
            imaging_interval_s: None,
            deadline_s: 300.0,
            image_pixels: 1e8,
            bits_per_pixel: 8.0,
            compression_ratio: 10.0,
            capture_probability: 1.0,
            regions,
        }
    }

    fn world_box() -> Region {
        Region { name: "all".into(), lat_min: -90.0, lat_max: 90.0, lon_min: -180.0, lon_max: 180.0 }
    }

    #[test]
    fn whole_globe_images_every_interval() {
        let sky = sky(1.0);
        let tasks = generate_workload(&sky, 400, &cfg(TaskKind::Wildfire, vec![world_box()]), 1);
        // 6 satellites, one image per 5 s, only arrivals up to slot 100 fit the deadline
        let per_sat = tasks.iter().filter(|k| k.src == SatId(0)).count();
        assert!((20..=21).contains(&per_sat), "{per_sat}");
        assert!(tasks.iter().all(|k| k.deadline == k.arrival + 300 && k.deadline <= 400));
        assert!(tasks.iter().all(|k| k.compute_slots == 51 && k.size_bits == 8e7));
        for w in tasks.windows(2) {
            assert!((w[0].arrival, w[0].src) < (w[1].arrival, w[1].src));
        }
        for (i, k) in tasks.iter().enumerate() {
            assert_eq!(k.id, TaskId(i));
        }
        let mut prev = [None; 6];
        for k in &tasks {
            if let Some(p) = prev[k.src.0] {
                assert_eq!(k.arrival - p, 5);
            }
            prev[k.src.0] = Some(k.arrival);
        }
    }

    #[test]
    fn ship_slots_round_up_and_empty_regions_give_nothing() {
        let sky = sky(2.0);
        let tasks = generate_workload(&sky, 200, &cfg(TaskKind::Ship, vec![world_box()]), 4);
        assert!(tasks.iter().all(|k| k.compute_slots == 2 && k.deadline == k.arrival + 150));
        let none = Region { name: "pole".into(), lat_min: 89.0, lat_max: 90.0, lon_min: 0.0, lon_max: 1.0 };
        assert!(generate_workload(&sky, 200, &cfg(TaskKind::Ship, vec![none]), 4).is_empty());
    }

    #[test]
    fn same_seed_same_tasks() {
        let sky = sky(1.0);
        let mut c = cfg(TaskKind::Ship, vec![world_box()]);
        c.capture_probability = 0.3;
        let a = generate_workload(&sky, 400, &c, 9);
        let b = generate_workload(&sky, 400, &c, 9);
        let other = generate_workload(&sky, 400, &c, 10);
        assert_eq!(a, b);
        assert_ne!(a, other);
        let rate = a.len() as f64 / (6.0 * 101.0);
        assert!((0.2..0.4).contains(&rate), "{rate}");
    }
}
