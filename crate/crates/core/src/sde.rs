//! Time grids, the common-noise bundle, and Euler–Maruyama integration of the
//! truncated spin system `dσ_x = f_x(σ) dt + B_x(σ) dW_x`.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::interactions::SpinSystem;
use crate::point_process::Configuration;
use crate::scale::{site_weights, weighted_sq_diff, WeightedSpinVector};

/// Uniform grid `t_k = k T / n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("T", "must be finite and > 0"));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be >= 1"));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_times(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }
}

/// Brownian increments `ΔW^m_{k,x} ~ N(0, Δt)`, stored in `(m, k, x)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    seed: u64,
    replicas: usize,
    n_steps: usize,
    n_sites: usize,
    dt: f64,
    increments: Vec<f64>,
}

const WORDS_PER_DRAW: u128 = 4;

/// Standard normal from two 53-bit uniforms (Box–Muller, cosine branch).
#[inline]
fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let scale = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * scale;
    let u2 = (rng.next_u64() >> 11) as f64 * scale;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl NoiseBundle {
    /// A single increment, addressed directly by `(seed, m, k, x)`.
    ///
    /// Replica `m` uses ChaCha stream `m`; draw `(k, x)` sits at word offset
    /// `4 (k N + x)`, so any subset of draws can be regenerated independently.
    pub fn draw(seed: u64, m: usize, k: usize, x: usize, n_sites: usize, dt: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(m as u64);
        rng.set_word_pos(WORDS_PER_DRAW * (k * n_sites + x) as u128);
        dt.sqrt() * box_muller(&mut rng)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments of replica `m` at step `k`, one per site.
    pub fn step(&self, m: usize, k: usize) -> &[f64] {
        let start = (m * self.n_steps + k) * self.n_sites;
        &self.increments[start..start + self.n_sites]
    }

    /// Sums blocks of `factor` consecutive increments, giving the bundle on a
    /// grid `factor` times coarser driven by the same Brownian paths.
    pub fn coarsen(&self, factor: usize) -> Result<NoiseBundle> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(invalid("factor", "must divide n_steps"));
        }
        let n_steps = self.n_steps / factor;
        let n = self.n_sites;
        let mut increments = vec![0.0; self.replicas * n_steps * n];
        for m in 0..self.replicas {
            for k in 0..n_steps {
                let out = &mut increments[(m * n_steps + k) * n..(m * n_steps + k + 1) * n];
                for j in 0..factor {
                    for (o, d) in out.iter_mut().zip(self.step(m, k * factor + j)) {
                        *o += d;
                    }
                }
            }
        }
        Ok(NoiseBundle {
            seed: self.seed,
            replicas: self.replicas,
            n_steps,
            n_sites: n,
            dt: self.dt * factor as f64,
            increments,
        })
    }
}

/// Independent `N(0, Δt)` increments for every `(replica, step, site)`.
pub fn generate_noise(
    config: &Configuration,
    grid: &TimeGrid,
    replicas: usize,
    seed: u64,
) -> Result<NoiseBundle> {
    if replicas == 0 {
        return Err(invalid("replicas", "must be >= 1"));
    }
    let n = config.len();
    let steps = grid.n_steps();
    let sd = grid.dt().sqrt();
    let mut increments = vec![0.0; replicas * steps * n];
    if n > 0 {
        increments
            .par_chunks_mut(steps * n)
            .enumerate()
            .for_each(|(m, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(m as u64);
                rng.set_word_pos(0);
                for slot in chunk.iter_mut() {
                    *slot = sd * box_muller(&mut rng);
                }
            });
    }
    Ok(NoiseBundle {
        seed,
        replicas,
        n_steps: steps,
        n_sites: n,
        dt: grid.dt(),
        increments,
    })
}

/// Where an ensemble came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub initial: String,
    pub noise_seed: Option<u64>,
    pub method: String,
}

/// `M` replica paths of site values on a time grid, stored `(m, k, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEnsemble {
    config: Arc<Configuration>,
    grid: TimeGrid,
    replicas: usize,
    states: Vec<f64>,
    provenance: Provenance,
}

impl ProcessEnsemble {
    /// Builds an ensemble from raw `(m, k, x)` states.
    pub fn from_states(
        config: Arc<Configuration>,
        grid: TimeGrid,
        replicas: usize,
        states: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if states.len() != replicas * grid.n_times() * config.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} states for {replicas} replicas x {} times x {} sites",
                states.len(),
                grid.n_times(),
                config.len()
            )));
        }
        Ok(ProcessEnsemble {
            config,
            grid,
            replicas,
            states,
            provenance,
        })
    }

    /// Every replica equal to `u0` at every grid time.
    pub fn constant(u0: &WeightedSpinVector, grid: TimeGrid, replicas: usize) -> Result<Self> {
        if replicas == 0 {
            return Err(invalid("replicas", "must be >= 1"));
        }
        let n_rows = replicas * grid.n_times();
        let mut states = Vec::with_capacity(n_rows * u0.len());
        for _ in 0..n_rows {
            states.extend_from_slice(u0.values());
        }
        Self::from_states(
            u0.config().clone(),
            grid,
            replicas,
            states,
            Provenance {
                initial: "constant".into(),
                noise_seed: None,
                method: "constant".into(),
            },
        )
    }

    pub fn config(&self) -> &Arc<Configuration> {
        &self.config
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn n_sites(&self) -> usize {
        self.config.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// State of replica `m` at grid time `k`.
    pub fn state(&self, m: usize, k: usize) -> &[f64] {
        let n = self.n_sites();
        let start = (m * self.grid.n_times() + k) * n;
        &self.states[start..start + n]
    }

    /// The whole path of replica `m` (`n_times × n_sites`).
    pub fn path(&self, m: usize) -> &[f64] {
        let len = self.grid.n_times() * self.n_sites();
        &self.states[m * len..(m + 1) * len]
    }

    /// Keeps every `factor`-th grid time, giving the ensemble on a coarser grid.
    pub fn subsample(&self, factor: usize) -> Result<ProcessEnsemble> {
        if factor == 0 || !self.grid.n_steps().is_multiple_of(factor) {
            return Err(invalid("factor", "must divide n_steps"));
        }
        let grid = TimeGrid::new(self.grid.horizon(), self.grid.n_steps() / factor)?;
        let mut states = Vec::with_capacity(self.replicas * grid.n_times() * self.n_sites());
        for m in 0..self.replicas {
            for k in 0..grid.n_times() {
                states.extend_from_slice(self.state(m, k * factor));
            }
        }
        Self::from_states(
            self.config.clone(),
            grid,
            self.replicas,
            states,
            self.provenance.clone(),
        )
    }

    pub(crate) fn ensure_compatible(&self, other: &ProcessEnsemble) -> Result<()> {
        if self.config.id() != other.config.id() {
            return Err(Error::ConfigurationMismatch {
                expected: self.config.id(),
                found: other.config.id(),
            });
        }
        if self.grid != other.grid || self.replicas != other.replicas {
            return Err(Error::ShapeMismatch(
                "ensembles differ in grid or replica count".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn ensure_noise(&self, noise: &NoiseBundle) -> Result<()> {
        check_noise(&self.config, &self.grid, self.replicas, noise)
    }
}

pub(crate) fn check_noise(
    config: &Configuration,
    grid: &TimeGrid,
    replicas: usize,
    noise: &NoiseBundle,
) -> Result<()> {
    if noise.n_sites != config.len()
        || noise.n_steps != grid.n_steps()
        || noise.replicas != replicas
        || (noise.dt - grid.dt()).abs() > 1e-12 * grid.dt()
    {
        return Err(Error::ShapeMismatch(format!(
            "noise ({} replicas, {} steps, {} sites) does not match ({replicas}, {}, {})",
            noise.replicas,
            noise.n_steps,
            noise.n_sites,
            grid.n_steps(),
            config.len()
        )));
    }
    Ok(())
}

/// One left-point update `next = base + f(from) Δt + B(from) ΔW`.
///
/// Shared by the integrator and the Picard map so both produce the same
/// floating-point operations for the same inputs.
#[inline]
pub(crate) fn left_point_update(
    system: &SpinSystem,
    from: &[f64],
    base: &[f64],
    dt: f64,
    dw: &[f64],
    next: &mut [f64],
    drift: &mut [f64],
    diffusion: &mut [f64],
) {
    system.eval_drift(from, drift);
    system.eval_diffusion(from, diffusion);
    for x in 0..next.len() {
        next[x] = base[x] + drift[x] * dt + diffusion[x] * dw[x];
    }
}

pub(crate) fn first_non_finite(path: &[f64], n_sites: usize) -> Option<(usize, usize)> {
    path.iter()
        .position(|v| !v.is_finite())
        .map(|i| (i / n_sites.max(1), i % n_sites.max(1)))
}

/// Explicit Euler–Maruyama `σ_{k+1} = σ_k + f(σ_k) Δt + B(σ_k) ΔW_k` per replica.
pub fn euler_maruyama(
    system: &SpinSystem,
    u0: &WeightedSpinVector,
    grid: &TimeGrid,
    noise: &NoiseBundle,
) -> Result<ProcessEnsemble> {
    let config = system.config();
    u0.ensure_config(config.id())?;
    check_noise(config, grid, noise.replicas, noise)?;
    let n = config.len();
    let times = grid.n_times();
    let dt = grid.dt();
    let mut states = vec![0.0; noise.replicas * times * n];
    if n > 0 {
        states
            .par_chunks_mut(times * n)
            .enumerate()
            .for_each(|(m, path)| {
                let mut drift = vec![0.0; n];
                let mut diffusion = vec![0.0; n];
                path[..n].copy_from_slice(u0.values());
                for k in 0..grid.n_steps() {
                    let (done, rest) = path.split_at_mut((k + 1) * n);
                    let cur = &done[k * n..];
                    left_point_update(
                        system,
                        cur,
                        cur,
                        dt,
                        noise.step(m, k),
                        &mut rest[..n],
                        &mut drift,
                        &mut diffusion,
                    );
                }
            });
    }
    for m in 0..noise.replicas {
        let path = &states[m * times * n..(m + 1) * times * n];
        if let Some((step, site)) = first_non_finite(path, n) {
            return Err(Error::IntegrationDiverged {
                replica: m,
                step,
                site,
            });
        }
    }
    ProcessEnsemble::from_states(
        config.clone(),
        *grid,
        noise.replicas,
        states,
        Provenance {
            initial: format!("u0 on configuration {:#018x}", config.id()),
            noise_seed: Some(noise.seed),
            method: "euler-maruyama".into(),
        },
    )
}

/// Replica mean of `‖ξ(t) - ξ(s)‖_β^p` for grid indices `s_idx < t_idx`.
pub fn increment_moment(
    ens: &ProcessEnsemble,
    s_idx: usize,
    t_idx: usize,
    beta: f64,
    p: f64,
) -> Result<f64> {
    if s_idx >= t_idx || t_idx >= ens.grid.n_times() {
        return Err(Error::IndexOutOfRange(format!(
            "need s_idx < t_idx <= {}, got ({s_idx}, {t_idx})",
            ens.grid.n_steps()
        )));
    }
    if !(p >= 2.0) {
        return Err(invalid("p", "must be >= 2"));
    }
    if !(beta >= 0.0) {
        return Err(invalid("beta", "must be >= 0"));
    }
    let w = site_weights(ens.config.radii(), beta);
    let sum: f64 = (0..ens.replicas)
        .map(|m| weighted_sq_diff(ens.state(m, t_idx), ens.state(m, s_idx), &w).powf(p / 2.0))
        .sum();
    Ok(sum / ens.replicas as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::InteractionFamily;
    use crate::point_process::{build_neighbors, Configuration};

    fn two_sites() -> Arc<Configuration> {
        Arc::new(Configuration::explicit(1, 1.0, &[vec![0.0], vec![0.5]]).unwrap())
    }

    #[test]
    fn noise_is_addressable_and_deterministic() {
        let c = two_sites();
        let g = TimeGrid::new(1.0, 8).unwrap();
        let a = generate_noise(&c, &g, 3, 77).unwrap();
        let b = generate_noise(&c, &g, 3, 77).unwrap();
        assert_eq!(a, b);
        for m in 0..3 {
            for k in 0..8 {
                for x in 0..2 {
                    let d = NoiseBundle::draw(77, m, k, x, 2, g.dt());
                    assert_eq!(a.step(m, k)[x], d);
                }
            }
        }
        assert!(generate_noise(&c, &g, 0, 1).is_err());
    }

    #[test]
    fn noise_moments() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.1]).collect();
        let c = Configuration::explicit(1, 5.0, &pts).unwrap();
        let g = TimeGrid::new(2.0, 40).unwrap();
        let noise = generate_noise(&c, &g, 64, 5).unwrap();
        let inc = noise.increments();
        let count = inc.len() as f64;
        assert!(count >= 1e5);
        let mean = inc.iter().sum::<f64>() / count;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!(mean.abs() <= 4.0 * (g.dt() / count).sqrt(), "mean {mean}");
        assert!((var / g.dt() - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn coarsened_noise_sums_blocks() {
        let c = two_sites();
        let g = TimeGrid::new(1.0, 8).unwrap();
        let fine = generate_noise(&c, &g, 2, 3).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        assert_eq!(coarse.n_steps(), 2);
        assert_eq!(coarse.dt(), 0.5);
        let expect: f64 = (4..8).map(|k| fine.step(1, k)[0]).sum();
        assert!((coarse.step(1, 1)[0] - expect).abs() < 1e-15);
        assert!(fine.coarsen(3).is_err());
    }

    #[test]
    fn zero_coefficients_give_constant_paths() {
        let c = two_sites();
        let sys = SpinSystem::build(
            c.clone(),
            InteractionFamily::zero(1.0),
            InteractionFamily::zero(1.0),
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 10).unwrap();
        let noise = generate_noise(&c, &g, 4, 1).unwrap();
        let u0 = WeightedSpinVector::new(c, vec![0.3, -1.2]).unwrap();
        let ens = euler_maruyama(&sys, &u0, &g, &noise).unwrap();
        for m in 0..4 {
            for k in 0..g.n_times() {
                assert_eq!(ens.state(m, k), u0.values());
            }
        }
    }

    #[test]
    fn isolated_site_stays_put() {
        let c = Arc::new(Configuration::explicit(1, 5.0, &[vec![1.0]]).unwrap());
        let sys = SpinSystem::build(
            c.clone(),
            InteractionFamily::clipped_linear(1.5, 0.5),
            InteractionFamily::clipped_linear(1.5, 0.5),
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 16).unwrap();
        let noise = generate_noise(&c, &g, 3, 2).unwrap();
        let u0 = WeightedSpinVector::new(c, vec![0.7]).unwrap();
        let ens = euler_maruyama(&sys, &u0, &g, &noise).unwrap();
        assert!(ens.states().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn single_step_matches_hand_formula() {
        let c = two_sites();
        let (jd, jb) = (0.4, 0.3);
        let sys = SpinSystem::build(
            c.clone(),
            InteractionFamily::clipped_linear(1.0, jd),
            InteractionFamily::clipped_linear(1.0, jb),
        )
        .unwrap();
        let g = TimeGrid::new(0.25, 1).unwrap();
        let noise = generate_noise(&c, &g, 2, 9).unwrap();
        let u0 = WeightedSpinVector::new(c, vec![0.0, 0.6]).unwrap();
        let ens = euler_maruyama(&sys, &u0, &g, &noise).unwrap();
        // w(0.5) = 1/2 for r = 1
        let f = [jd * 0.5 * 0.6, -jd * 0.5 * 0.6];
        let b = [jb * 0.5 * 0.6, -jb * 0.5 * 0.6];
        for m in 0..2 {
            let dw = noise.step(m, 0);
            for x in 0..2 {
                let expect = u0.values()[x] + f[x] * 0.25 + b[x] * dw[x];
                assert!((ens.state(m, 1)[x] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let c = two_sites();
        let sys = SpinSystem::build(
            c.clone(),
            InteractionFamily::zero(1.0).with_onsite(f64::MAX),
            InteractionFamily::zero(1.0),
        )
        .unwrap();
        let g = TimeGrid::new(10.0, 4).unwrap();
        let noise = generate_noise(&c, &g, 2, 1).unwrap();
        let u0 = WeightedSpinVector::new(c, vec![f64::MAX, 0.0]).unwrap();
        let err = euler_maruyama(&sys, &u0, &g, &noise).unwrap_err();
        assert!(matches!(
            err,
            Error::IntegrationDiverged {
                replica: 0,
                step: 1,
                site: 0
            }
        ));
    }

    #[test]
    fn increment_moment_edge_cases_and_gaussian_oracle() {
        let c = Arc::new(Configuration::explicit(1, 1.0, &[vec![0.0]]).unwrap());
        let b = 0.8;
        let ns = build_neighbors(&c, 1.0).unwrap();
        let sys = SpinSystem::new(
            c.clone(),
            ns,
            InteractionFamily::zero(1.0),
            InteractionFamily::zero(1.0).with_onsite(b),
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 20).unwrap();
        let noise = generate_noise(&c, &g, 4000, 12).unwrap();
        let u0 = WeightedSpinVector::new(c, vec![0.0]).unwrap();
        let ens = euler_maruyama(&sys, &u0, &g, &noise).unwrap();
        assert!(increment_moment(&ens, 3, 3, 0.0, 2.0).is_err());
        assert!(increment_moment(&ens, 3, 21, 0.0, 2.0).is_err());
        // E|Δξ|² = b² Δt (t - s) for the free site at the origin
        for (s, t) in [(0, 5), (2, 12), (0, 20)] {
            let got = increment_moment(&ens, s, t, 0.0, 2.0).unwrap();
            let exact = b * b * g.dt() * (t - s) as f64;
            assert!(
                (got / exact - 1.0).abs() < 0.1,
                "{s}..{t}: {got} vs {exact}"
            );
        }
    }
}
