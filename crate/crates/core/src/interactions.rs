//! Finite-range pair interactions `V_xy(a, b)`, the induced drift map
//! `V̄_x(q) = Σ_y V_xy(q_x, q_y)` and the diagonal diffusion operator
//! `(V̂(q)h)_x = V̄_x(q) h_x`.
//!
//! Every family has the form `V_xy(a, b) = J w(|x - y|) g(b - a)` with a
//! radial profile `w` supported on `[0, r)` and a 1-Lipschitz coupling `g`.
//! The self pair `y = x` additionally carries a constant `onsite` term, so
//! `V_xx ≡ onsite` (since `g(0) = 0`).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point_process::{Configuration, NeighborStructure};
use crate::scale::{
    site_weights, weighted_sq, weighted_sq_diff, ScaleInterval, WeightedSpinVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    /// `J w(s) clamp(b - a, -1, 1)`, `w(s) = (1 - s/r)_+`.
    ClippedLinear,
    /// `J w(s) tanh(b - a)`, `w(s) = (1 - s/r)_+`.
    TanhCoupling,
    /// `J w(s) clamp(b - a, -1, 1)` with `w` linearly interpolated from `table`.
    UserTable,
}

/// An admissible interaction family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionFamily {
    pub kind: InteractionKind,
    pub r: f64,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub onsite: f64,
    /// `(s, w)` knots of the radial profile, used by [`InteractionKind::UserTable`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<[f64; 2]>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl InteractionFamily {
    pub fn clipped_linear(r: f64, coupling: f64) -> Self {
        InteractionFamily {
            kind: InteractionKind::ClippedLinear,
            r,
            coupling,
            onsite: 0.0,
            table: Vec::new(),
        }
    }

    pub fn tanh_coupling(r: f64, coupling: f64) -> Self {
        InteractionFamily {
            kind: InteractionKind::TanhCoupling,
            ..Self::clipped_linear(r, coupling)
        }
    }

    pub fn user_table(r: f64, coupling: f64, table: Vec<[f64; 2]>) -> Self {
        InteractionFamily {
            kind: InteractionKind::UserTable,
            table,
            ..Self::clipped_linear(r, coupling)
        }
    }

    /// The identically vanishing family.
    pub fn zero(r: f64) -> Self {
        Self::clipped_linear(r, 0.0)
    }

    pub fn with_onsite(mut self, onsite: f64) -> Self {
        self.onsite = onsite;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(invalid("r", "must be finite and > 0"));
        }
        if !self.coupling.is_finite() || !self.onsite.is_finite() {
            return Err(invalid("J", "coupling and onsite term must be finite"));
        }
        if self.kind == InteractionKind::UserTable {
            if self.table.len() < 2 {
                return Err(invalid("table", "need at least two knots"));
            }
            if self.table[0][0] != 0.0 {
                return Err(invalid("table", "first knot must be at s = 0"));
            }
            if self.table.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(invalid("table", "knot positions must increase"));
            }
            if self.table.iter().any(|k| !k[1].is_finite()) {
                return Err(invalid("table", "profile values must be finite"));
            }
        }
        Ok(())
    }

    /// Radial profile `w(s)`, zero for `s >= r`.
    pub fn profile(&self, s: f64) -> f64 {
        if !(s < self.r) {
            return 0.0;
        }
        match self.kind {
            InteractionKind::ClippedLinear | InteractionKind::TanhCoupling => 1.0 - s / self.r,
            InteractionKind::UserTable => {
                let t = &self.table;
                match t.iter().position(|k| k[0] > s) {
                    Some(0) => t[0][1],
                    Some(i) => {
                        let ([s0, w0], [s1, w1]) = (t[i - 1], t[i]);
                        w0 + (w1 - w0) * (s - s0) / (s1 - s0)
                    }
                    None => t[t.len() - 1][1],
                }
            }
        }
    }

    fn sup_profile(&self) -> f64 {
        match self.kind {
            InteractionKind::ClippedLinear | InteractionKind::TanhCoupling => 1.0,
            InteractionKind::UserTable => self
                .table
                .iter()
                .filter(|k| k[0] < self.r)
                .map(|k| k[1].abs())
                .fold(0.0, f64::max),
        }
    }

    #[inline]
    fn couple(&self, d: f64) -> f64 {
        match self.kind {
            InteractionKind::ClippedLinear | InteractionKind::UserTable => d.clamp(-1.0, 1.0),
            InteractionKind::TanhCoupling => d.tanh(),
        }
    }

    /// `V_xy(a, b)` for two distinct sites at distance `s`.
    pub fn pair(&self, s: f64, a: f64, b: f64) -> f64 {
        let w = self.profile(s);
        if w == 0.0 {
            0.0
        } else {
            self.coupling * w * self.couple(b - a)
        }
    }

    /// Declared constant `C` of the uniform Lipschitz bound.
    pub fn lipschitz_c(&self) -> f64 {
        self.coupling.abs() * self.sup_profile()
    }

    pub fn is_zero(&self) -> bool {
        (self.coupling == 0.0 || self.sup_profile() == 0.0) && self.onsite == 0.0
    }
}

/// Precomputed pair weights `J w(|x - y|)` in compressed-row form.
#[derive(Debug, Clone)]
pub(crate) struct PairTable {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl PairTable {
    fn build(family: &InteractionFamily, ns: &NeighborStructure) -> Self {
        let mut offsets = Vec::with_capacity(ns.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for x in 0..ns.len() {
            for (&y, &s) in ns.neighbors(x).iter().zip(ns.neighbor_distances(x)) {
                let w = family.coupling * family.profile(s);
                if w != 0.0 {
                    targets.push(y);
                    weights.push(w);
                }
            }
            offsets.push(targets.len());
        }
        PairTable {
            offsets,
            targets,
            weights,
        }
    }
}

fn check_family_on(family: &InteractionFamily, ns: &NeighborStructure) -> Result<()> {
    family.validate()?;
    if ns.r() < family.r {
        return Err(invalid(
            "neighbors",
            format!(
                "neighbor radius {} is smaller than the interaction range {}",
                ns.r(),
                family.r
            ),
        ));
    }
    Ok(())
}

/// Evaluates `V̄(σ)` into `out` using a prebuilt pair table.
#[inline]
fn eval_field(family: &InteractionFamily, table: &PairTable, sigma: &[f64], out: &mut [f64]) {
    for (x, slot) in out.iter_mut().enumerate() {
        let sx = sigma[x];
        let mut acc = family.onsite;
        for e in table.offsets[x]..table.offsets[x + 1] {
            acc += table.weights[e] * family.couple(sigma[table.targets[e]] - sx);
        }
        *slot = acc;
    }
}

fn field(
    family: &InteractionFamily,
    sigma: &WeightedSpinVector,
    ns: &NeighborStructure,
) -> Result<WeightedSpinVector> {
    check_family_on(family, ns)?;
    sigma.ensure_config(ns.config_id())?;
    let table = PairTable::build(family, ns);
    let mut out = vec![0.0; sigma.len()];
    eval_field(family, &table, sigma.values(), &mut out);
    WeightedSpinVector::new(sigma.config().clone(), out)
}

/// Drift `f_x(σ) = Σ_{y∈γ} V_xy(σ_x, σ_y)`.
pub fn drift_field(
    family: &InteractionFamily,
    sigma: &WeightedSpinVector,
    ns: &NeighborStructure,
) -> Result<WeightedSpinVector> {
    field(family, sigma, ns)
}

/// Diagonal `B_x(σ) = Σ_{y∈γ} Ψ_xy(σ_x, σ_y)` of the diffusion operator.
pub fn diffusion_field(
    family: &InteractionFamily,
    sigma: &WeightedSpinVector,
    ns: &NeighborStructure,
) -> Result<WeightedSpinVector> {
    field(family, sigma, ns)
}

/// Action of the diagonal operator on a noise direction `h ∈ ℋ`.
pub fn apply_diagonal(diag: &WeightedSpinVector, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != diag.len() {
        return Err(Error::ShapeMismatch(
            "direction length differs from diagonal".into(),
        ));
    }
    Ok(diag.values().iter().zip(h).map(|(b, v)| b * v).collect())
}

/// Hilbert–Schmidt norm of the diagonal operator `ℋ → X_β`, i.e. `‖diag‖_β`.
pub fn hilbert_schmidt_norm(diag: &WeightedSpinVector, beta: f64) -> Result<f64> {
    crate::scale::weighted_norm(diag, beta)
}

/// Drift and diffusion families bound to one configuration and neighbor structure.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    config: Arc<Configuration>,
    neighbors: NeighborStructure,
    drift: InteractionFamily,
    diffusion: InteractionFamily,
    drift_table: PairTable,
    diffusion_table: PairTable,
}

impl SpinSystem {
    pub fn new(
        config: Arc<Configuration>,
        neighbors: NeighborStructure,
        drift: InteractionFamily,
        diffusion: InteractionFamily,
    ) -> Result<Self> {
        if neighbors.config_id() != config.id() {
            return Err(Error::ConfigurationMismatch {
                expected: config.id(),
                found: neighbors.config_id(),
            });
        }
        check_family_on(&drift, &neighbors)?;
        check_family_on(&diffusion, &neighbors)?;
        let drift_table = PairTable::build(&drift, &neighbors);
        let diffusion_table = PairTable::build(&diffusion, &neighbors);
        Ok(SpinSystem {
            config,
            neighbors,
            drift,
            diffusion,
            drift_table,
            diffusion_table,
        })
    }

    /// Builds the neighbor structure at the larger of the two ranges.
    pub fn build(
        config: Arc<Configuration>,
        drift: InteractionFamily,
        diffusion: InteractionFamily,
    ) -> Result<Self> {
        let r = drift.r.max(diffusion.r);
        let ns = crate::point_process::build_neighbors(&config, r)?;
        Self::new(config, ns, drift, diffusion)
    }

    pub fn config(&self) -> &Arc<Configuration> {
        &self.config
    }

    pub fn neighbors(&self) -> &NeighborStructure {
        &self.neighbors
    }

    pub fn drift(&self) -> &InteractionFamily {
        &self.drift
    }

    pub fn diffusion(&self) -> &InteractionFamily {
        &self.diffusion
    }

    pub fn n_sites(&self) -> usize {
        self.config.len()
    }

    pub(crate) fn eval_drift(&self, sigma: &[f64], out: &mut [f64]) {
        eval_field(&self.drift, &self.drift_table, sigma, out);
    }

    pub(crate) fn eval_diffusion(&self, sigma: &[f64], out: &mut [f64]) {
        eval_field(&self.diffusion, &self.diffusion_table, sigma, out);
    }
}

/// Result of the sampled uniform-Lipschitz check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub c_emp: f64,
    pub declared_c: f64,
    pub range_ok: bool,
    pub within_declared: bool,
}

/// Samples argument quadruples and pair distances in `[0, 2r)` and records
/// the largest ratio `|V(a', b') - V(a'', b'')| / (|a' - a''| + |b' - b''|)`.
pub fn admissibility_check(
    family: &InteractionFamily,
    n_samples: usize,
    seed: u64,
) -> Result<AdmissibilityReport> {
    family.validate()?;
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_emp: f64 = 0.0;
    let mut range_ok = true;
    for i in 0..n_samples {
        let s = rng.random_range(0.0..2.0 * family.r);
        let mut arg = || rng.random_range(-3.0..3.0);
        let (a1, b1, a2, b2) = (arg(), arg(), arg(), arg());
        // every fourth sample perturbs only slightly to probe the local slope
        let (a2, b2) = if i % 4 == 3 {
            (a1 + 1e-3 * (a2 - a1), b1 + 1e-3 * (b2 - b1))
        } else {
            (a2, b2)
        };
        let v1 = family.pair(s, a1, b1);
        let v2 = family.pair(s, a2, b2);
        let denom = (a1 - a2).abs() + (b1 - b2).abs();
        if denom > 0.0 {
            c_emp = c_emp.max((v1 - v2).abs() / denom);
        }
        if s >= family.r && (v1 != 0.0 || v2 != 0.0) {
            range_ok = false;
        }
    }
    let declared_c = family.lipschitz_c();
    Ok(AdmissibilityReport {
        c_emp,
        declared_c,
        range_ok,
        within_declared: c_emp <= declared_c * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Drift,
    Diffusion,
}

/// Maximal measured ratios for one grid pair `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub alpha: f64,
    pub beta: f64,
    /// `max ‖V(u) - V(v)‖_β / ‖u - v‖_α` over sampled pairs.
    pub lipschitz_ratio: f64,
    /// `max ‖V(u)‖_β / (1 + ‖u‖_α)` over sampled base points.
    pub growth_ratio: f64,
}

/// Empirical scale-Lipschitz profile of a drift or diffusion map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlFit {
    pub map: MapKind,
    pub points: Vec<RatioPoint>,
    /// Least-squares slope of `log ratio` against `-log(β - α)`.
    pub slope: f64,
    pub intercept: f64,
    /// `1 / slope`, infinite when the slope is not positive.
    pub q_emp: f64,
    /// Smallest `L` with `ratio ≤ L (β - α)^{-1/q_emp}` at every grid pair.
    pub l_emp: f64,
    /// Same envelope for the linear-growth ratios.
    pub k_emp: f64,
    pub zero_map: bool,
}

impl GlFit {
    /// Smallest `L` making every measured Lipschitz ratio obey `L (β-α)^{-1/q}`.
    pub fn lipschitz_for(&self, q: f64) -> f64 {
        envelope(
            self.points
                .iter()
                .map(|p| (p.beta - p.alpha, p.lipschitz_ratio)),
            q,
        )
    }

    /// Same as [`Self::lipschitz_for`] for the linear-growth ratios.
    pub fn growth_for(&self, q: f64) -> f64 {
        envelope(
            self.points
                .iter()
                .map(|p| (p.beta - p.alpha, p.growth_ratio)),
            q,
        )
    }
}

fn envelope(points: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    points
        .map(|(gap, ratio)| {
            if q.is_infinite() {
                ratio
            } else {
                ratio * gap.powf(1.0 / q)
            }
        })
        .fold(0.0, f64::max)
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Measures `‖map(u) - map(v)‖_β / ‖u - v‖_α` over sampled pairs for every
/// grid pair and fits the singularity exponent in `β - α`.
///
/// Pairs cycle through three shapes: a small single-site perturbation, a
/// small dense perturbation, and two independent vectors.
pub fn gl_exponent_fit(
    map: MapKind,
    family: &InteractionFamily,
    config: &Arc<Configuration>,
    ns: &NeighborStructure,
    scale: &ScaleInterval,
    n_pairs: usize,
    seed: u64,
) -> Result<GlFit> {
    if scale.grid().len() < 4 {
        return Err(Error::DegenerateGrid(
            "need at least 4 scale indices".into(),
        ));
    }
    if n_pairs < 8 {
        return Err(invalid("n_pairs", "must be >= 8"));
    }
    if config.is_empty() {
        return Err(Error::DegenerateGrid("empty configuration".into()));
    }
    check_family_on(family, ns)?;
    if ns.config_id() != config.id() {
        return Err(Error::ConfigurationMismatch {
            expected: config.id(),
            found: ns.config_id(),
        });
    }
    let n = config.len();
    let table = PairTable::build(family, ns);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let mut samples = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let u: Vec<f64> = (0..n).map(|_| normal()).collect();
        let v: Vec<f64> = match i % 3 {
            0 => {
                let site = (normal().abs() * 1e9) as usize % n;
                let mut v = u.clone();
                v[site] += 1e-3;
                v
            }
            1 => u.iter().map(|x| x + 1e-3 * normal()).collect(),
            _ => (0..n).map(|_| normal()).collect(),
        };
        let mut fu = vec![0.0; n];
        let mut fv = vec![0.0; n];
        eval_field(family, &table, &u, &mut fu);
        eval_field(family, &table, &v, &mut fv);
        samples.push((u, v, fu, fv));
    }
    let radii = config.radii();
    let mut points = Vec::new();
    for (alpha, beta) in scale.pairs() {
        let wa = site_weights(radii, alpha);
        let wb = site_weights(radii, beta);
        let mut lip: f64 = 0.0;
        let mut growth: f64 = 0.0;
        for (u, v, fu, fv) in &samples {
            let den = weighted_sq_diff(u, v, &wa).sqrt();
            if den > 0.0 {
                lip = lip.max(weighted_sq_diff(fu, fv, &wb).sqrt() / den);
            }
            growth = growth.max(weighted_sq(fu, &wb).sqrt() / (1.0 + weighted_sq(u, &wa).sqrt()));
        }
        points.push(RatioPoint {
            alpha,
            beta,
            lipschitz_ratio: lip,
            growth_ratio: growth,
        });
    }
    let zero_map = points.iter().all(|p| p.lipschitz_ratio == 0.0);
    let (slope, intercept) = if zero_map {
        (0.0, f64::NEG_INFINITY)
    } else {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.lipschitz_ratio > 0.0)
            .map(|p| (-(p.beta - p.alpha).ln(), p.lipschitz_ratio.ln()))
            .unzip();
        least_squares(&xs, &ys).unwrap_or((0.0, ys.first().copied().unwrap_or(0.0)))
    };
    let q_emp = if slope > 0.0 {
        1.0 / slope
    } else {
        f64::INFINITY
    };
    let mut fit = GlFit {
        map,
        points,
        slope,
        intercept,
        q_emp,
        l_emp: 0.0,
        k_emp: 0.0,
        zero_map,
    };
    fit.l_emp = fit.lipschitz_for(q_emp);
    fit.k_emp = fit.growth_for(q_emp);
    Ok(fit)
}
