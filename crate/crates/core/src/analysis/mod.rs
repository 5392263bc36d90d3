//! Finite-scale differentiability certificates for sampled fields.

mod dini;
mod example_e;
mod gap;
mod residual;

pub use dini::{dini_derivatives, dyadic_scales, lipschitz_estimate, variation_modulus, DerivativeEstimate};
pub use example_e::{example_e_check, ExampleECheck};
pub use gap::{gap_report, normal_gap_bound, GapReport, GapRow};
pub use residual::{residual_profile, residual_sweep, BallPattern, ResidualProfile, ResidualSweep, SweepRow};

/// Radii 2^{−j} for j = j_min..=j_max, largest first.
pub fn dyadic_radii(j_min: i32, j_max: i32) -> Vec<f64> {
    (j_min..=j_max).map(|j| 2f64.powi(-j)).collect()
}
