//! Two linear maps in `GL_q`: the integral operator with kernel
//! `K(x,y) = a e^{-(β^*/p)|x-y|} (1+|y|)^δ` on `L^p(ℝ, e^{-α|x|}dx)` and the
//! infinite matrix with the same entry profile on weighted `ℓ^p(ℤ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interactions::least_squares;
use crate::scale::ScaleInterval;

fn check_profile(a: f64, beta_sup: f64, delta: f64, p: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid("a", "must be finite and > 0"));
    }
    if !(beta_sup > 0.0) || !beta_sup.is_finite() {
        return Err(invalid("beta_sup", "must be finite and > 0"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid("delta", "must be finite and >= 0"));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("p", "must be finite and > 1"));
    }
    Ok(())
}

fn q_pred(p: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        f64::INFINITY
    } else {
        (p - 1.0) / (p * delta)
    }
}

/// Extremal kernel of the integral operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub a: f64,
    pub beta_sup: f64,
    pub delta: f64,
    pub p: f64,
}

impl KernelSpec {
    pub fn new(a: f64, beta_sup: f64, delta: f64, p: f64) -> Result<Self> {
        check_profile(a, beta_sup, delta, p)?;
        Ok(KernelSpec {
            a,
            beta_sup,
            delta,
            p,
        })
    }

    pub fn kernel(&self, x: f64, y: f64) -> f64 {
        self.a
            * (-(self.beta_sup / self.p) * (x - y).abs()).exp()
            * (1.0 + y.abs()).powf(self.delta)
    }

    /// `(p-1)/(pδ)`, infinite for `δ = 0`.
    pub fn q_pred(&self) -> f64 {
        q_pred(self.p, self.delta)
    }
}

/// Node values on the uniform grid `x_i = -x_max + i h`, `i = 0..=2 x_max / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    x_max: f64,
    h: f64,
    values: Vec<f64>,
}

fn node_count(x_max: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", "must be finite and > 0"));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(invalid("x_max", "must be finite and > 0"));
    }
    let cells = 2.0 * x_max / h;
    if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
        return Err(invalid("h", "must divide 2 x_max"));
    }
    Ok(cells.round() as usize + 1)
}

impl GridFunction {
    pub fn new(x_max: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        let n = node_count(x_max, h)?;
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {n} nodes",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(GridFunction { x_max, h, values })
    }

    pub fn zeros(x_max: f64, h: f64) -> Result<Self> {
        let n = node_count(x_max, h)?;
        Ok(GridFunction {
            x_max,
            h,
            values: vec![0.0; n],
        })
    }

    pub fn from_fn(x_max: f64, h: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = node_count(x_max, h)?;
        let values = (0..n).map(|i| f(-x_max + i as f64 * h)).collect();
        Self::new(x_max, h, values)
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn same_grid(&self, other: &GridFunction) -> bool {
        self.values.len() == other.values.len() && self.h == other.h && self.x_max == other.x_max
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::ShapeMismatch(
                "grid functions live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(GridFunction {
            x_max: self.x_max,
            h: self.h,
            values,
        })
    }
}

/// `Au(x_i) = ∫ K(x_i, y) u(y) dy` by the trapezoidal rule on the grid of `u`.
pub fn kernel_apply(spec: &KernelSpec, u: &GridFunction) -> GridFunction {
    let n = u.len();
    let h = u.h;
    let growth: Vec<f64> = (0..n)
        .map(|j| {
            let end = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
            end * h * spec.a * (1.0 + u.x(j).abs()).powf(spec.delta) * u.values[j]
        })
        .collect();
    let rate = spec.beta_sup / spec.p;
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = u.x(i);
            growth
                .iter()
                .enumerate()
                .map(|(j, g)| (-rate * (x - u.x(j)).abs()).exp() * g)
                .sum()
        })
        .collect();
    GridFunction {
        x_max: u.x_max,
        h,
        values,
    }
}

/// `(Σ h |u(x_i)|^p e^{-α|x_i|})^{1/p}`.
pub fn weighted_lp_norm(u: &GridFunction, alpha: f64, p: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", "must be >= 0"));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", "must be >= 1"));
    }
    let s: f64 = u
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| u.h * v.abs().powf(p) * (-alpha * u.x(i).abs()).exp())
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Matrix `A_kj = a e^{-(β^*/p)|k-j|} (1+|j|)^δ` truncated to `|k|, |j| ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub a: f64,
    pub beta_sup: f64,
    pub delta: f64,
    pub p: f64,
    pub k_max: usize,
}

impl MatrixSpec {
    pub fn new(a: f64, beta_sup: f64, delta: f64, p: f64, k_max: usize) -> Result<Self> {
        check_profile(a, beta_sup, delta, p)?;
        if k_max < 1 {
            return Err(invalid("k_max", "must be >= 1"));
        }
        Ok(MatrixSpec {
            a,
            beta_sup,
            delta,
            p,
            k_max,
        })
    }

    /// Number of indices `2 k_max + 1`; slot `i` holds index `i - k_max`.
    pub fn dim(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn index(&self, slot: usize) -> i64 {
        slot as i64 - self.k_max as i64
    }

    pub fn entry(&self, k: i64, j: i64) -> f64 {
        self.a
            * (-(self.beta_sup / self.p) * (k - j).abs() as f64).exp()
            * (1.0 + j.abs() as f64).powf(self.delta)
    }

    pub fn q_pred(&self) -> f64 {
        q_pred(self.p, self.delta)
    }

    /// `max_j |A_jj| = a (1 + k_max)^δ`.
    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|s| self.entry(self.index(s), self.index(s)).abs())
            .fold(0.0, f64::max)
    }
}

/// Truncated product `(Au)_k = Σ_j A_kj u_j`.
pub fn matrix_apply(spec: &MatrixSpec, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != spec.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{} entries for {} indices",
            u.len(),
            spec.dim()
        )));
    }
    Ok((0..spec.dim())
        .into_par_iter()
        .map(|ks| {
            let k = spec.index(ks);
            u.iter()
                .enumerate()
                .map(|(js, v)| spec.entry(k, spec.index(js)) * v)
                .sum()
        })
        .collect())
}

/// `(Σ_k |u_k|^p e^{-α|k|})^{1/p}` for `u` indexed `-k_max..=k_max`.
pub fn weighted_sequence_norm(u: &[f64], alpha: f64, p: f64) -> Result<f64> {
    if u.len().is_multiple_of(2) {
        return Err(Error::ShapeMismatch("sequence length must be odd".into()));
    }
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", "must be >= 0"));
    }
    let k_max = (u.len() / 2) as i64;
    let s: f64 = u
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs().powf(p) * (-alpha * (i as i64 - k_max).abs() as f64).exp())
        .sum();
    Ok(s.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    Integral(KernelSpec),
    Matrix(MatrixSpec),
}

impl OperatorKind {
    pub fn p(&self) -> f64 {
        match self {
            OperatorKind::Integral(s) => s.p,
            OperatorKind::Matrix(s) => s.p,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            OperatorKind::Integral(s) => s.delta,
            OperatorKind::Matrix(s) => s.delta,
        }
    }

    pub fn beta_sup(&self) -> f64 {
        match self {
            OperatorKind::Integral(s) => s.beta_sup,
            OperatorKind::Matrix(s) => s.beta_sup,
        }
    }
}

/// One row of the ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    /// `max ‖Au‖_β / ‖u‖_α` over the sampled `u`.
    pub ratio_max: f64,
    /// `C (β - α)^{-1/q_pred}` with the fitted envelope constant `C`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub p: f64,
    pub delta: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Reciprocal slope; infinite when the slope is not positive.
    pub q_emp: f64,
    pub q_pred: f64,
    /// Smallest `C` with `ratio_max ≤ C (β - α)^{-1/q_pred}` at every pair.
    pub envelope: f64,
    pub points: Vec<SweepPoint>,
    /// Truncation half-width (`X_max` or `K_max`).
    pub extent: f64,
    /// Final quadrature step; 1 for the matrix.
    pub h: f64,
    /// Whether successive quadrature refinements agreed within 1%.
    pub resolved: bool,
}

/// Gaussian bump parameters `(center, width, sign)` for the sampled inputs.
fn bumps(n_samples: usize, extent: f64, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let c = rng.random_range(-0.9 * extent..0.9 * extent);
            let w = rng.random_range(0.5..2.0);
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (c, w, s)
        })
        .collect()
}

fn bump(x: f64, (c, w, s): (f64, f64, f64)) -> f64 {
    s * (-(x - c) * (x - c) / (2.0 * w * w)).exp()
}

fn ratio_table(
    pairs: &[(f64, f64)],
    samples: &[(f64, f64, f64)],
    eval: impl Fn((f64, f64, f64)) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<f64>> {
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|&b| eval(b))
        .collect::<Result<_>>()?;
    Ok((0..pairs.len())
        .map(|i| per_sample.iter().map(|r| r[i]).fold(0.0, f64::max))
        .collect())
}

fn integral_ratios(
    spec: &KernelSpec,
    pairs: &[(f64, f64)],
    samples: &[(f64, f64, f64)],
    x_max: f64,
    h: f64,
) -> Result<Vec<f64>> {
    ratio_table(pairs, samples, |b| {
        let u = GridFunction::from_fn(x_max, h, |x| bump(x, b))?;
        let au = kernel_apply(spec, &u);
        pairs
            .iter()
            .map(|&(alpha, beta)| {
                Ok(weighted_lp_norm(&au, beta, spec.p)? / weighted_lp_norm(&u, alpha, spec.p)?)
            })
            .collect()
    })
}

fn matrix_ratios(
    spec: &MatrixSpec,
    pairs: &[(f64, f64)],
    samples: &[(f64, f64, f64)],
) -> Result<Vec<f64>> {
    ratio_table(pairs, samples, |b| {
        let u: Vec<f64> = (0..spec.dim())
            .map(|s| bump(spec.index(s) as f64, b))
            .collect();
        let au = matrix_apply(spec, &u)?;
        pairs
            .iter()
            .map(|&(alpha, beta)| {
                Ok(weighted_sequence_norm(&au, beta, spec.p)?
                    / weighted_sequence_norm(&u, alpha, spec.p)?)
            })
            .collect()
    })
}

const MAX_REFINEMENTS: usize = 3;

/// Measures `R(α, β) = max_u ‖Au‖_β / ‖u‖_α` over seeded Gaussian bumps for
/// every grid pair and fits `log R` against `-log(β - α)`.
///
/// The truncation half-width is the smallest integer with
/// `e^{-α_* X_max} < 1e-8`; the quadrature step starts at `1/4` and is halved
/// until the ratios move by less than 1%.
pub fn singularity_fit(
    op: &OperatorKind,
    scale: &ScaleInterval,
    n_samples: usize,
    seed: u64,
) -> Result<SingularityReport> {
    if scale.grid().len() < 5 {
        return Err(Error::DegenerateGrid(
            "need at least 5 scale indices".into(),
        ));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be >= 1"));
    }
    let (p, delta) = (op.p(), op.delta());
    if delta > (p - 1.0) / p {
        return Err(Error::Hypothesis(format!(
            "delta = {delta} exceeds (p-1)/p, so q_pred < 1"
        )));
    }
    if !(op.beta_sup() > scale.alpha_sup()) {
        return Err(Error::Hypothesis(
            "beta_sup must exceed the top of the scale".into(),
        ));
    }
    if !(scale.alpha_star() > 0.0) {
        return Err(Error::DegenerateGrid(
            "alpha_star must be > 0 to truncate".into(),
        ));
    }
    let extent = (1e8f64.ln() / scale.alpha_star()).ceil();
    let pairs = scale.pairs();
    let samples = bumps(n_samples, extent, seed);
    let (ratios, h, resolved) = match op {
        OperatorKind::Integral(spec) => {
            let mut h = 0.25;
            let mut ratios = integral_ratios(spec, &pairs, &samples, extent, h)?;
            let mut resolved = false;
            for _ in 0..MAX_REFINEMENTS {
                let finer = integral_ratios(spec, &pairs, &samples, extent, h / 2.0)?;
                let change = ratios
                    .iter()
                    .zip(&finer)
                    .map(|(a, b)| ((b - a) / b).abs())
                    .fold(0.0, f64::max);
                h /= 2.0;
                ratios = finer;
                if change < 0.01 {
                    resolved = true;
                    break;
                }
            }
            (ratios, h, resolved)
        }
        OperatorKind::Matrix(spec) => {
            let spec = MatrixSpec {
                k_max: spec.k_max.max(extent as usize),
                ..*spec
            };
            (matrix_ratios(&spec, &pairs, &samples)?, 1.0, true)
        }
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .zip(&ratios)
        .map(|(&(a, b), r)| (-(b - a).ln(), r.ln()))
        .unzip();
    let (slope, intercept) =
        least_squares(&xs, &ys).ok_or_else(|| Error::DegenerateGrid("flat sweep".into()))?;
    let qp = q_pred(p, delta);
    let shape = |gap: f64| {
        if qp.is_infinite() {
            1.0
        } else {
            gap.powf(-1.0 / qp)
        }
    };
    let envelope = pairs
        .iter()
        .zip(&ratios)
        .map(|(&(a, b), r)| r / shape(b - a))
        .fold(0.0, f64::max);
    let points = pairs
        .iter()
        .zip(&ratios)
        .map(|(&(alpha, beta), &ratio_max)| SweepPoint {
            alpha,
            beta,
            ratio_max,
            bound: envelope * shape(beta - alpha),
        })
        .collect();
    Ok(SingularityReport {
        p,
        delta,
        slope,
        intercept,
        q_emp: if slope > 0.0 {
            1.0 / slope
        } else {
            f64::INFINITY
        },
        q_pred: qp,
        envelope,
        points,
        extent,
        h,
        resolved,
    })
}
