//! Fixtures shared by the benchmarks.

use scalespin::{ExperimentConfig, NoiseBundle, QuenchedSystem};

/// Reference system with `replicas` replicas and `n_steps` time steps.
pub fn fixture(replicas: usize, n_steps: usize) -> (ExperimentConfig, QuenchedSystem, NoiseBundle) {
    let mut cfg = ExperimentConfig::reference();
    cfg.dynamics.replicas = replicas;
    cfg.dynamics.n_steps = n_steps;
    let q = QuenchedSystem::from_config(&cfg).expect("reference system");
    let noise = q.noise(&cfg).expect("noise");
    (cfg, q, noise)
}
