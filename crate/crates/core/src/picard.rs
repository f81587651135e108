//! The Picard map `𝒯(u)(t) = u0 + ∫ f(u) ds + ∫ B(u) dW` on ensembles under
//! common noise, its iteration, and contraction diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimates::ContractionConstants;
use crate::interactions::SpinSystem;
use crate::scale::{zp_distance, ScaleInterval, WeightedSpinVector, ZpNormEstimate};
use crate::sde::{
    check_noise, first_non_finite, left_point_update, NoiseBundle, ProcessEnsemble, Provenance,
    TimeGrid,
};

/// One application of `𝒯` with left-point Riemann and Itô sums:
/// `out(t_{k+1}) = out(t_k) + f(ens(t_k)) Δt + B(ens(t_k)) ΔW_k`, `out(t_0) = u0`.
pub fn apply_t(
    ens: &ProcessEnsemble,
    u0: &WeightedSpinVector,
    system: &SpinSystem,
    noise: &NoiseBundle,
) -> Result<ProcessEnsemble> {
    let config = system.config();
    u0.ensure_config(config.id())?;
    if ens.config().id() != config.id() {
        return Err(Error::ConfigurationMismatch {
            expected: config.id(),
            found: ens.config().id(),
        });
    }
    ens.ensure_noise(noise)?;
    let grid = *ens.grid();
    let n = config.len();
    let times = grid.n_times();
    let dt = grid.dt();
    let mut states = vec![0.0; ens.replicas() * times * n];
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
                    left_point_update(
                        system,
                        ens.state(m, k),
                        &done[k * n..],
                        dt,
                        noise.step(m, k),
                        &mut rest[..n],
                        &mut drift,
                        &mut diffusion,
                    );
                }
            });
    }
    for m in 0..ens.replicas() {
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
        grid,
        ens.replicas(),
        states,
        Provenance {
            initial: ens.provenance().initial.clone(),
            noise_seed: Some(noise.seed()),
            method: "picard".into(),
        },
    )
}

/// Distances `‖𝒯ⁿ(ξ) - 𝒯ⁿ⁺¹(ξ)‖_{Z_β}` for every grid `β` at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub n: usize,
    pub distances: Vec<ZpNormEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardDiagnostics {
    pub p: f64,
    pub tol: f64,
    pub alpha_star: f64,
    pub betas: Vec<f64>,
    /// Records for `n = 0, 1, ...` in order.
    pub iterations: Vec<IterationRecord>,
    /// `‖ξ - 𝒯(ξ)‖_{Z_{α_*}}` for the start iterate.
    pub initial_gap: ZpNormEstimate,
    /// `‖ξ_fix - 𝒯(ξ_fix)‖_{Z_β}` for every grid `β`.
    pub residual: Vec<ZpNormEstimate>,
    pub converged: bool,
}

impl PicardDiagnostics {
    /// Distance `d_n` at the largest grid `β`.
    pub fn top_distance(&self, n: usize) -> Option<&ZpNormEstimate> {
        self.iterations.get(n).and_then(|r| r.distances.last())
    }

    pub fn n_iterations(&self) -> usize {
        self.iterations.len()
    }
}

fn distances(
    a: &ProcessEnsemble,
    b: &ProcessEnsemble,
    betas: &[f64],
    p: f64,
) -> Result<Vec<ZpNormEstimate>> {
    betas
        .iter()
        .map(|&beta| zp_distance(a, b, beta, p))
        .collect()
}

/// Iterates `𝒯` from the constant start `ξ ≡ u0`.
pub fn picard_iterate(
    u0: &WeightedSpinVector,
    system: &SpinSystem,
    grid: &TimeGrid,
    noise: &NoiseBundle,
    scale: &ScaleInterval,
    p: f64,
    n_max: usize,
    tol: f64,
) -> Result<(ProcessEnsemble, PicardDiagnostics)> {
    let start = ProcessEnsemble::constant(u0, *grid, noise.replicas())?;
    picard_iterate_from(&start, u0, system, noise, scale, p, n_max, tol)
}

/// Iterates `𝒯` from an arbitrary start until `d_n ≤ tol` at the largest
/// grid `β` or `n_max` maps have been applied.
pub fn picard_iterate_from(
    start: &ProcessEnsemble,
    u0: &WeightedSpinVector,
    system: &SpinSystem,
    noise: &NoiseBundle,
    scale: &ScaleInterval,
    p: f64,
    n_max: usize,
    tol: f64,
) -> Result<(ProcessEnsemble, PicardDiagnostics)> {
    if n_max == 0 {
        return Err(invalid("n_max", "must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be > 0"));
    }
    check_noise(start.config(), start.grid(), start.replicas(), noise)?;
    let betas = scale.grid().to_vec();
    let mut cur = start.clone();
    let mut next = apply_t(&cur, u0, system, noise)?;
    let initial_gap = zp_distance(&cur, &next, scale.alpha_star(), p)?;
    let mut iterations = Vec::new();
    let mut converged = false;
    for n in 0..n_max {
        if n > 0 {
            cur = next;
            next = apply_t(&cur, u0, system, noise)?;
        }
        let d = distances(&cur, &next, &betas, p)?;
        let top = d.last().map(|e| e.value).unwrap_or(0.0);
        iterations.push(IterationRecord { n, distances: d });
        if top <= tol {
            converged = true;
            break;
        }
    }
    let after = apply_t(&next, u0, system, noise)?;
    let residual = distances(&next, &after, &betas, p)?;
    Ok((
        next,
        PicardDiagnostics {
            p,
            tol,
            alpha_star: scale.alpha_star(),
            betas,
            iterations,
            initial_gap,
            residual,
            converged,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// `‖ξ₀ - η₀‖_{Z_β}` for every grid `β`.
    pub distances: Vec<ZpNormEstimate>,
    pub from_u0: PicardDiagnostics,
    pub from_alt: PicardDiagnostics,
}

/// Runs the iteration from `ξ ≡ u0` and from `alt_start` under the same
/// noise and compares the two limits.
pub fn uniqueness_probe(
    u0: &WeightedSpinVector,
    alt_start: &ProcessEnsemble,
    system: &SpinSystem,
    noise: &NoiseBundle,
    scale: &ScaleInterval,
    p: f64,
    n_max: usize,
    tol: f64,
) -> Result<UniquenessReport> {
    let (a, from_u0) = picard_iterate(u0, system, alt_start.grid(), noise, scale, p, n_max, tol)?;
    let (b, from_alt) = picard_iterate_from(alt_start, u0, system, noise, scale, p, n_max, tol)?;
    Ok(UniquenessReport {
        distances: distances(&a, &b, scale.grid(), p)?,
        from_u0,
        from_alt,
    })
}

/// One row of the measured-versus-theoretical contraction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionRow {
    pub n: usize,
    pub beta: f64,
    /// Measured `d_n` in `Z_β`.
    pub measured: f64,
    /// Monte Carlo standard error of `d_n` in norm units.
    pub std_error: f64,
    /// `picard_bound(n)` for `δ = β - α_*`.
    pub factor: f64,
    /// `factor^p`, the form without the p-th root.
    pub factor_pow: f64,
    /// `factor · ‖ξ - 𝒯(ξ)‖_{Z_{α_*}}`.
    pub bound: f64,
    pub ratio: f64,
    pub flagged: bool,
}

/// Tabulates `d_n` against `picard_bound(n) ‖ξ - 𝒯ξ‖_{Z_{α_*}}` for every
/// grid `β > α_*`. A row is flagged when `measured > bound + 3 stderr`.
pub fn contraction_report(
    diag: &PicardDiagnostics,
    constants: &ContractionConstants,
) -> Result<Vec<ContractionRow>> {
    if diag.iterations.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let d0 = diag.initial_gap.value;
    let mut rows = Vec::new();
    for rec in &diag.iterations {
        for (beta, est) in diag.betas.iter().zip(&rec.distances) {
            let delta = beta - diag.alpha_star;
            if delta <= 0.0 {
                continue;
            }
            let factor = constants.picard_bound(rec.n, delta)?;
            let bound = factor * d0;
            let se = est.norm_std_error();
            rows.push(ContractionRow {
                n: rec.n,
                beta: *beta,
                measured: est.value,
                std_error: se,
                factor,
                factor_pow: factor.powf(constants.p),
                bound,
                ratio: if bound > 0.0 {
                    est.value / bound
                } else if est.value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                },
                flagged: est.value > bound + 3.0 * se,
            });
        }
    }
    Ok(rows)
}
