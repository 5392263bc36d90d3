use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Vector;

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeEstimate {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    /// (j, t = 2^{−j})
    pub scales: Vec<(i32, f64)>,
    pub quotients: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
}

/// t = 2^{−j} for j = j_min..=j_max.
pub fn dyadic_scales(j_min: i32, j_max: i32) -> Vec<(i32, f64)> {
    (j_min..=j_max).map(|j| (j, 2f64.powi(-j))).collect()
}

/// Difference quotients (f(x+ty) − f(x))/t on the dyadic ladder; max and min
/// stand in for the upper and lower Dini derivatives.
pub fn dini_derivatives(f: &ScalarField, x: &[f64], y: &[f64], j_min: i32, j_max: i32) -> Result<DerivativeEstimate> {
    if j_min > j_max {
        return Err(Error::invalid(format!("empty scale ladder {j_min}..{j_max}")));
    }
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let fx = f.evaluate(x)?;
    let scales = dyadic_scales(j_min, j_max);
    let mut quotients = Vec::with_capacity(scales.len());
    for &(j, t) in &scales {
        let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * b).collect();
        if !f.domain().contains_point(&p) {
            return Err(Error::ProbeEscapes { j });
        }
        quotients.push((f.evaluate(&p)? - fx) / t);
    }
    let upper = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DerivativeEstimate {
        point: x.to_vec(),
        direction: y.to_vec(),
        scales,
        quotients,
        upper,
        lower,
    })
}

pub fn lipschitz_estimate(f: &ScalarField) -> f64 {
    f.lipschitz()
}

/// Largest ‖u_a − u_b‖ over sample pairs closer than `r`.
pub fn variation_modulus(points: &[Vector], u: &[Vector], r: f64) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if crate::geometry::distance(&points[a], &points[b]) < r {
                worst = worst.max(crate::geometry::distance(&u[a], &u[b]));
            }
        }
    }
    worst
}
