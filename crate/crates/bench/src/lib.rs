//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sunedge::sbeo::random_tiny_instance;
use sunedge::simkit::random_desk_instance;
use sunedge::{SbeoInstance, ScenarioConfig};

/// A fixed random desk-scale instance with at least `min_tasks` tasks.
pub fn desk_instance(seed: u64, min_tasks: usize) -> SbeoInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst = random_desk_instance(&mut rng);
        if inst.tasks.len() >= min_tasks && inst.world.num_sats() >= 16 {
            return inst;
        }
    }
}

pub fn tiny_instances(seed: u64, count: usize) -> Vec<SbeoInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_tiny_instance(&mut rng)).collect()
}

/// The shipped desk ship scenario, shortened to `horizon` slots.
pub fn desk_ship(horizon: usize) -> ScenarioConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk_ship.toml");
    let mut cfg = ScenarioConfig::load(&path).expect("desk_ship.toml loads");
    cfg.horizon_periods = None;
    cfg.horizon_slots = Some(horizon);
    cfg
}
