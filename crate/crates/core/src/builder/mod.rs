//! Construction pipelines for Lipschitz functions that fail to be
//! differentiable on cone-unrectifiable sets.

mod lemma1;
mod lemma2;
mod modulus;
mod mollify;
mod partition;
mod recursion;
mod stages;
mod theorem4;
mod theorem9;
mod trace_io;
mod zahorski;

pub use lemma1::{lemma1_build, lemma1_build_in, Lemma1Output, Lemma1Report, PieceRecord, WidthCheck, WidthsCfg};
pub use lemma2::{lemma2_build, lemma2_build_in, staircase_length, Lemma2Output, Lemma2Report};
pub use modulus::{modulus_field, modulus_radius};
pub use mollify::{mollify_glue, mollify_glue_with, GlueOptions, GlueResult};
pub use partition::{build_partition, bump_profile, greedy_centers, half_radius_level, Bump, BumpPartition, Carrier};
pub use recursion::{run_recursion, BuildTrace, RecursionCfg, StageChecks, TraceStage};
pub use theorem4::{theorem4_build, Theorem4Cfg, Theorem4Output, Theorem4Report};
pub use theorem9::{golden_direction, theorem9_build, theorem9_directions, StepReport, Theorem9Cfg, Theorem9Output, Theorem9Report};
pub use zahorski::{zahorski_sum, PieceWeight, ZahorskiSum};
pub use trace_io::{read_trace_manifest, write_trace, TraceManifest};
pub use stages::{
    density_failures, lattice_net, level_eps, level_tau, select_stages, stage_load, StageConfig, StagePhi, StageSummary, StagesCfg,
};

/// Aperture used with accuracy `sigma`: sin(arctan(sigma / 15)).
pub fn tau_of_sigma(sigma: f64) -> f64 {
    (sigma / 15.0).atan().sin()
}
