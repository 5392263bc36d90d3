//! Cone-monotone lattice paths: step sets, the discrete width of open grid
//! sets and its exhaustive oracle, width functions, and normal-cone probes.

mod clip;
mod dp;
mod function;
mod normal;
mod of_set;
mod steps;

pub use clip::inside_length;
pub use dp::{width_brute_force, width_open, width_open_with, ConePath, WidthResult, BRUTE_FORCE_NODE_BUDGET};
pub use function::{width_function, width_function_with};
pub use normal::{estimate_normal_cone, DirectionReport, NormalConeEstimate, NormalConeParams};
pub use of_set::{width_of_set, SetWidth};
pub use steps::{build_step_set, StepSet};
