//! The scale `X_α`, `α ∈ [α_*, α^*]`, of weighted `ℓ²` spaces over a finite
//! configuration, together with the Monte Carlo `Z^p_{α,T}` norm of
//! ensembles of processes.
//!
//! `‖q‖_α = sqrt(Σ_x |q_x|² e^{-α|x|})`, so larger `α` gives a weaker norm.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::point_process::Configuration;
use crate::sde::ProcessEnsemble;

/// Index interval `[α_*, α^*]` with a diagnostic grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleInterval {
    alpha_star: f64,
    alpha_sup: f64,
    grid: Vec<f64>,
}

impl ScaleInterval {
    pub fn new(alpha_star: f64, alpha_sup: f64, grid: Vec<f64>) -> Result<Self> {
        if !(alpha_star >= 0.0) || !(alpha_sup > alpha_star) || !alpha_sup.is_finite() {
            return Err(invalid("scale", "need 0 <= alpha_star < alpha_sup < inf"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("scale.grid", "must be strictly increasing"));
        }
        if grid.iter().any(|&a| a < alpha_star || a > alpha_sup) {
            return Err(invalid(
                "scale.grid",
                "must lie inside [alpha_star, alpha_sup]",
            ));
        }
        Ok(ScaleInterval {
            alpha_star,
            alpha_sup,
            grid,
        })
    }

    /// `points` equally spaced indices including both endpoints.
    pub fn uniform(alpha_star: f64, alpha_sup: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(invalid("scale.grid_points", "need at least 2 points"));
        }
        let step = (alpha_sup - alpha_star) / (points - 1) as f64;
        let mut grid: Vec<f64> = (0..points).map(|i| alpha_star + step * i as f64).collect();
        grid[points - 1] = alpha_sup;
        Self::new(alpha_star, alpha_sup, grid)
    }

    pub fn alpha_star(&self) -> f64 {
        self.alpha_star
    }

    pub fn alpha_sup(&self) -> f64 {
        self.alpha_sup
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Largest grid index (falls back to `α^*` for an empty grid).
    pub fn top(&self) -> f64 {
        self.grid.last().copied().unwrap_or(self.alpha_sup)
    }

    /// All ordered grid pairs `(α, β)` with `α < β`.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, &a) in self.grid.iter().enumerate() {
            for &b in &self.grid[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }
}

/// Per-site weights `e^{-α|x|}`.
pub fn site_weights(radii: &[f64], alpha: f64) -> Vec<f64> {
    radii.iter().map(|r| (-alpha * r).exp()).collect()
}

pub(crate) fn weighted_sq(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * v * w).sum()
}

pub(crate) fn weighted_sq_diff(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum()
}

/// Spin (or generic site) values attached to one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpinVector {
    config: Arc<Configuration>,
    values: Vec<f64>,
}

impl WeightedSpinVector {
    pub fn new(config: Arc<Configuration>, values: Vec<f64>) -> Result<Self> {
        if values.len() != config.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} sites",
                values.len(),
                config.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "all values must be finite"));
        }
        Ok(WeightedSpinVector { config, values })
    }

    pub fn zeros(config: Arc<Configuration>) -> Self {
        let n = config.len();
        WeightedSpinVector {
            config,
            values: vec![0.0; n],
        }
    }

    pub fn constant(config: Arc<Configuration>, value: f64) -> Result<Self> {
        let n = config.len();
        Self::new(config, vec![value; n])
    }

    pub fn config(&self) -> &Arc<Configuration> {
        &self.config
    }

    pub fn config_id(&self) -> u64 {
        self.config.id()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.config.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.config.clone(), values)
    }

    pub(crate) fn ensure_config(&self, id: u64) -> Result<()> {
        if self.config.id() != id {
            return Err(Error::ConfigurationMismatch {
                expected: id,
                found: self.config.id(),
            });
        }
        Ok(())
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        other.ensure_config(self.config.id())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", "must be finite and >= 0"));
    }
    Ok(())
}

/// `‖v‖_α = sqrt(Σ_x |v_x|² e^{-α|x|})`.
pub fn weighted_norm(v: &WeightedSpinVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let w = site_weights(v.config.radii(), alpha);
    Ok(weighted_sq(&v.values, &w).sqrt())
}

/// `‖v1 - v2‖_α` for vectors on the same configuration.
pub fn norm_distance(v1: &WeightedSpinVector, v2: &WeightedSpinVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    v1.ensure_same(v2)?;
    let w = site_weights(v1.config.radii(), alpha);
    Ok(weighted_sq_diff(&v1.values, &v2.values, &w).sqrt())
}

/// Monte Carlo estimate of `sup_t (E‖u(t)‖_α^p)^{1/p}` over the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZpNormEstimate {
    pub value: f64,
    /// Standard error of the replica mean of `‖u(t_sup)‖_α^p`.
    pub std_error: f64,
    pub p: f64,
    pub alpha: f64,
    pub t_sup: f64,
    pub t_index: usize,
}

impl ZpNormEstimate {
    /// Standard error transported to norm units by the delta method.
    pub fn norm_std_error(&self) -> f64 {
        let mean = self.value.powf(self.p);
        if mean > 0.0 {
            self.std_error / (self.p * mean.powf(1.0 - 1.0 / self.p))
        } else {
            0.0
        }
    }
}

/// Replica mean and standard error of `‖·‖_α^p` at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPoint {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(invalid("p", "must be finite and >= 2"));
    }
    Ok(())
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    // ascending replica order keeps the reduction bit-stable
    let mean = samples.iter().sum::<f64>() / m;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Per-time moments of `‖a(t) - b(t)‖_α^p` (or `‖a(t)‖_α^p` when `b` is `None`).
fn moment_profile(
    a: &ProcessEnsemble,
    b: Option<&ProcessEnsemble>,
    alpha: f64,
    p: f64,
) -> Result<Vec<MomentPoint>> {
    check_alpha(alpha)?;
    check_p(p)?;
    if a.replicas() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if let Some(b) = b {
        a.ensure_compatible(b)?;
    }
    let w = site_weights(a.config().radii(), alpha);
    let n_times = a.grid().n_times();
    let per_replica: Vec<Vec<f64>> = (0..a.replicas())
        .into_par_iter()
        .map(|m| {
            (0..n_times)
                .map(|k| {
                    let sq = match b {
                        Some(b) => weighted_sq_diff(a.state(m, k), b.state(m, k), &w),
                        None => weighted_sq(a.state(m, k), &w),
                    };
                    sq.powf(p / 2.0)
                })
                .collect()
        })
        .collect();
    let mut column = vec![0.0; a.replicas()];
    Ok((0..n_times)
        .map(|k| {
            for (slot, row) in column.iter_mut().zip(&per_replica) {
                *slot = row[k];
            }
            let (mean, std_error) = mean_and_stderr(&column);
            MomentPoint {
                t: a.grid().time(k),
                mean,
                std_error,
            }
        })
        .collect())
}

fn sup_estimate(profile: &[MomentPoint], alpha: f64, p: f64) -> ZpNormEstimate {
    let (t_index, best) = profile
        .iter()
        .enumerate()
        .fold((0, profile[0]), |(bi, b), (i, m)| {
            if m.mean > b.mean {
                (i, *m)
            } else {
                (bi, b)
            }
        });
    ZpNormEstimate {
        value: best.mean.powf(1.0 / p),
        std_error: best.std_error,
        p,
        alpha,
        t_sup: best.t,
        t_index,
    }
}

/// `sup_t (E‖u(t)‖_α^p)^{1/p}` estimated by replica averages on the grid.
pub fn zp_norm_estimate(ens: &ProcessEnsemble, alpha: f64, p: f64) -> Result<ZpNormEstimate> {
    let profile = moment_profile(ens, None, alpha, p)?;
    Ok(sup_estimate(&profile, alpha, p))
}

/// `‖a - b‖_{Z^p_α}` for ensembles sharing grid, configuration and replica count.
pub fn zp_distance(
    a: &ProcessEnsemble,
    b: &ProcessEnsemble,
    alpha: f64,
    p: f64,
) -> Result<ZpNormEstimate> {
    let profile = moment_profile(a, Some(b), alpha, p)?;
    Ok(sup_estimate(&profile, alpha, p))
}

/// Per-time moment profile `E‖u(t)‖_α^p` with standard errors.
pub fn zp_profile(ens: &ProcessEnsemble, alpha: f64, p: f64) -> Result<Vec<MomentPoint>> {
    moment_profile(ens, None, alpha, p)
}
