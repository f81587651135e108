//! Experiment configuration: JSON schema, defaults, validation and seed
//! derivation.
//!
//! Every block is optional; missing fields take the reference values, so
//! `{}` is a complete configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::{InteractionFamily, InteractionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Poisson,
    Hardcore,
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigurationBlock {
    pub dim: usize,
    pub box_halfwidth: f64,
    pub intensity: f64,
    pub kind: SampleKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hc_radius: Option<f64>,
    /// Master seed of the whole run.
    pub seed: u64,
}

impl Default for ConfigurationBlock {
    fn default() -> Self {
        ConfigurationBlock {
            dim: 1,
            box_halfwidth: 50.0,
            intensity: 1.0,
            kind: SampleKind::Poisson,
            hc_radius: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleBlock {
    pub alpha_star: f64,
    pub alpha_sup: f64,
    pub points: usize,
}

impl Default for ScaleBlock {
    fn default() -> Self {
        ScaleBlock {
            alpha_star: 0.5,
            alpha_sup: 2.0,
            points: 6,
        }
    }
}

/// Initial condition `u0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum U0Spec {
    Constant {
        value: f64,
    },
    /// `base + amplitude U(-1, 1)` independently per site.
    Perturbed {
        base: f64,
        amplitude: f64,
    },
    /// JSON array with one value per site.
    File {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsBlock {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_steps: usize,
    pub replicas: usize,
    pub p: f64,
    pub q: f64,
    pub u0: U0Spec,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        DynamicsBlock {
            horizon: 1.0,
            n_steps: 64,
            replicas: 256,
            p: 2.0,
            q: 4.0,
            u0: U0Spec::Perturbed {
                base: 1.0,
                amplitude: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorBlock {
    pub a: f64,
    pub beta_sup: f64,
    pub delta: f64,
    pub p: f64,
    pub samples: usize,
    /// Truncations used for the diagonal growth check.
    pub k_max: Vec<usize>,
}

impl Default for OperatorBlock {
    fn default() -> Self {
        OperatorBlock {
            a: 1.0,
            beta_sup: 3.0,
            delta: 0.25,
            p: 2.0,
            samples: 32,
            k_max: vec![10, 20, 40, 80, 160],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Iterations `1..=contraction_n` compared against the bound.
    pub contraction_n: usize,
    pub gl_pairs: usize,
    pub kolmogorov_pairs: usize,
    pub kolmogorov_slack: f64,
    pub free_site_slack: f64,
    pub regularity_seeds: usize,
    pub c_log_factor: f64,
    pub halving_low: f64,
    pub halving_high: f64,
    /// Fine reference grid is `fine_factor × n_steps`.
    pub fine_factor: usize,
    pub diagonal_rel_tol: f64,
    pub operator_slope_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            picard_tol: 1e-6,
            picard_max_iter: 200,
            contraction_n: 5,
            gl_pairs: 48,
            kolmogorov_pairs: 1024,
            kolmogorov_slack: 0.15,
            free_site_slack: 0.1,
            regularity_seeds: 20,
            c_log_factor: 2.0,
            halving_low: 0.25,
            halving_high: 0.75,
            fine_factor: 8,
            diagonal_rel_tol: 0.1,
            operator_slope_slack: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sample,
    Simulate,
    Picard,
    #[serde(alias = "estimates-only")]
    Estimates,
    OperatorFit,
    Full,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Sample => "sample",
            Suite::Simulate => "simulate",
            Suite::Picard => "picard",
            Suite::Estimates => "estimates",
            Suite::OperatorFit => "operator-fit",
            Suite::Full => "full",
        }
    }

    /// The elementary suites executed, in order.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::Full => vec![
                Suite::Estimates,
                Suite::Sample,
                Suite::Simulate,
                Suite::Picard,
                Suite::OperatorFit,
            ],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub suite: Suite,
    pub output_dir: String,
    /// Worker threads; `None` uses all cores. Never changes results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            suite: Suite::Full,
            output_dir: "out".into(),
            workers: None,
            tolerances: Tolerances::default(),
        }
    }
}

fn default_drift() -> InteractionFamily {
    InteractionFamily::clipped_linear(1.5, 0.2)
}

fn default_diffusion() -> InteractionFamily {
    InteractionFamily::clipped_linear(1.5, 0.1)
}

/// Full experiment description. `Default` is the reference configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub configuration: ConfigurationBlock,
    #[serde(default = "default_drift")]
    pub drift: InteractionFamily,
    #[serde(default = "default_diffusion")]
    pub diffusion: InteractionFamily,
    #[serde(default)]
    pub scale: ScaleBlock,
    #[serde(default)]
    pub dynamics: DynamicsBlock,
    #[serde(default)]
    pub operators: OperatorBlock,
    #[serde(default)]
    pub run: RunBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            configuration: ConfigurationBlock::default(),
            drift: default_drift(),
            diffusion: default_diffusion(),
            scale: ScaleBlock::default(),
            dynamics: DynamicsBlock::default(),
            operators: OperatorBlock::default(),
            run: RunBlock::default(),
        }
    }
}

impl ExperimentConfig {
    /// d=1, R=50, Poisson intensity 1, clipped-linear drift J=0.2 and
    /// diffusion J=0.1 with r=1.5, scale [0.5, 2] on 6 points, T=1,
    /// 64 steps, 256 replicas, p=2, q=4, seed 42.
    pub fn reference() -> Self {
        Self::default()
    }

    pub fn seed(&self) -> u64 {
        self.configuration.seed
    }

    /// Every constraint violation, each prefixed with its field path.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, path: &str, msg: &str| {
            if !ok {
                errs.push(format!("{path}: {msg}"));
            }
        };
        let c = &self.configuration;
        check(
            (1..=3).contains(&c.dim),
            "configuration.dim",
            "must be 1, 2 or 3",
        );
        check(
            c.box_halfwidth > 0.0 && c.box_halfwidth.is_finite(),
            "configuration.box_halfwidth",
            "must be finite and > 0",
        );
        check(
            c.intensity > 0.0 && c.intensity.is_finite(),
            "configuration.intensity",
            "must be finite and > 0",
        );
        match (c.kind, c.hc_radius) {
            (SampleKind::Hardcore, None) => check(
                false,
                "configuration.hc_radius",
                "required for kind hardcore",
            ),
            (SampleKind::Hardcore, Some(h)) => check(
                h > 0.0 && h.is_finite(),
                "configuration.hc_radius",
                "must be finite and > 0",
            ),
            (_, Some(_)) => check(
                false,
                "configuration.hc_radius",
                "only valid for kind hardcore",
            ),
            _ => {}
        }
        for (name, fam) in [("drift", &self.drift), ("diffusion", &self.diffusion)] {
            if let Err(e) = fam.validate() {
                errs.push(format!("{name}: {e}"));
            }
            if fam.kind == InteractionKind::UserTable && fam.table.len() < 2 {
                errs.push(format!("{name}.table: needs at least two knots"));
            }
        }
        let mut check = |ok: bool, path: &str, msg: &str| {
            if !ok {
                errs.push(format!("{path}: {msg}"));
            }
        };
        let s = &self.scale;
        check(
            s.alpha_star >= 0.0 && s.alpha_star.is_finite(),
            "scale.alpha_star",
            "must be finite and >= 0",
        );
        check(
            s.alpha_sup > s.alpha_star && s.alpha_sup.is_finite(),
            "scale.alpha_sup",
            "must be finite and exceed scale.alpha_star",
        );
        check(s.points >= 5, "scale.points", "must be >= 5");
        let d = &self.dynamics;
        check(
            d.horizon > 0.0 && d.horizon.is_finite(),
            "dynamics.T",
            "must be finite and > 0",
        );
        check(d.n_steps >= 8, "dynamics.n_steps", "must be >= 8");
        check(d.replicas >= 2, "dynamics.replicas", "must be >= 2");
        check(
            d.p >= 2.0 && d.p.is_finite(),
            "dynamics.p",
            "must be finite and >= 2",
        );
        check(
            d.q > d.p && d.q.is_finite(),
            "dynamics.q",
            "must exceed dynamics.p (the hypothesis is p in [2, q))",
        );
        match &d.u0 {
            U0Spec::Constant { value } => {
                check(value.is_finite(), "dynamics.u0.value", "must be finite")
            }
            U0Spec::Perturbed { base, amplitude } => check(
                base.is_finite() && amplitude.is_finite() && *amplitude >= 0.0,
                "dynamics.u0",
                "base must be finite and amplitude finite and >= 0",
            ),
            U0Spec::File { path } => check(
                Path::new(path).is_file(),
                "dynamics.u0.path",
                "file does not exist",
            ),
        }
        let o = &self.operators;
        check(
            o.a > 0.0 && o.a.is_finite(),
            "operators.a",
            "must be finite and > 0",
        );
        check(
            o.p > 1.0 && o.p.is_finite(),
            "operators.p",
            "must be finite and > 1",
        );
        check(
            o.delta >= 0.0 && o.delta <= (o.p - 1.0) / o.p,
            "operators.delta",
            "must lie in [0, (p-1)/p]",
        );
        check(
            o.beta_sup > s.alpha_sup,
            "operators.beta_sup",
            "must exceed scale.alpha_sup",
        );
        check(o.samples >= 1, "operators.samples", "must be >= 1");
        check(
            o.k_max.len() >= 2,
            "operators.k_max",
            "needs at least two truncations",
        );
        let t = &self.run.tolerances;
        check(
            t.picard_tol > 0.0,
            "run.tolerances.picard_tol",
            "must be > 0",
        );
        check(
            t.picard_max_iter >= 1,
            "run.tolerances.picard_max_iter",
            "must be >= 1",
        );
        check(t.gl_pairs >= 8, "run.tolerances.gl_pairs", "must be >= 8");
        check(
            t.kolmogorov_pairs >= 1,
            "run.tolerances.kolmogorov_pairs",
            "must be >= 1",
        );
        check(
            t.regularity_seeds >= 1,
            "run.tolerances.regularity_seeds",
            "must be >= 1",
        );
        check(
            t.fine_factor >= 4 && t.fine_factor.is_multiple_of(2),
            "run.tolerances.fine_factor",
            "must be even and >= 4",
        );
        check(
            t.halving_low < t.halving_high,
            "run.tolerances.halving_low",
            "must be below halving_high",
        );
        if let Some(w) = self.run.workers {
            check(w >= 1, "run.workers", "must be >= 1");
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    ExperimentConfig::from_json(&text)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(master ⊕ fnv1a64("{scope}/{purpose}"))`.
///
/// Scope `shared` is used for objects several suites must agree on (the
/// configuration, `u0`, the main noise bundle); otherwise the suite name.
pub fn derive_seed(master: u64, scope: &str, purpose: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in scope
        .bytes()
        .chain(std::iter::once(b'/'))
        .chain(purpose.bytes())
    {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master ^ h)
}
