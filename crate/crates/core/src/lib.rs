//! Numerical realization of global solutions to SDEs in a scale of weighted
//! Hilbert spaces: quenched spin systems on sampled point configurations,
//! scale-indexed Picard iteration under common noise, and the explicit
//! contraction, growth and continuity bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod interactions;
pub mod operators;
pub mod picard;
pub mod point_process;
pub mod scale;
pub mod sde;

pub use config::{derive_seed, load_config, ExperimentConfig, Suite};
pub use error::{Error, Result};
pub use estimates::{
    a_p, a_t, e_series, growth_bound, hat_l, kolmogorov_constant, kolmogorov_fit, picard_bound,
    ContractionConstants, KolmogorovFit, SeriesValue,
};
pub use experiment::{run_experiment, Check, Manifest, QuenchedSystem, RunArtifact};
pub use interactions::{
    admissibility_check, apply_diagonal, diffusion_field, drift_field, gl_exponent_fit,
    hilbert_schmidt_norm, GlFit, InteractionFamily, InteractionKind, MapKind, SpinSystem,
};
pub use operators::{
    kernel_apply, matrix_apply, singularity_fit, weighted_lp_norm, weighted_sequence_norm,
    GridFunction, KernelSpec, MatrixSpec, OperatorKind, SingularityReport,
};
pub use picard::{
    apply_t, contraction_report, picard_iterate, picard_iterate_from, uniqueness_probe,
    ContractionRow, PicardDiagnostics, UniquenessReport,
};
pub use point_process::{
    build_neighbors, regularity_fit, sample_hardcore, sample_poisson, ConfigKind, Configuration,
    NeighborStructure, RegularityFit,
};
pub use scale::{
    norm_distance, weighted_norm, zp_distance, zp_norm_estimate, zp_profile, ScaleInterval,
    WeightedSpinVector, ZpNormEstimate,
};
pub use sde::{
    euler_maruyama, generate_noise, increment_moment, NoiseBundle, ProcessEnsemble, TimeGrid,
};
