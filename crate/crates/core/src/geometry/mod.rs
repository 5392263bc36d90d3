//! Vectors, cones, grid domains and sets, point clouds, and the test-set
//! generators used throughout the toolkit.

mod cloud;
mod distance;
mod generators;
mod grid;

pub use cloud::{NormalData, NormalKind, PointCloud};
pub use distance::{distance_to_complement, distance_to_complement_field};
pub(crate) use distance::distance_to_false_nodes;
pub use generators::{
    cantor_intervals, gen_cantor_product, gen_four_corner_cantor, gen_graph_family,
    gen_line_neighborhood_set, graph_bump, graph_bump_derivative, rational_lines, RationalLine,
};
pub use grid::{GridDomain, GridSet, NeighborhoodResult, MAX_DIM};
pub(crate) use grid::{ravel as ravel_index, strides as index_strides, unravel as unravel_index};

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or direction in ℝⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        Vector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The cone `{v : <v, axis> >= aperture * |v|}` around a unit axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    axis: Vector,
    aperture: f64,
}

impl Cone {
    /// Builds a cone; the axis is normalized, so any nonzero vector is accepted.
    pub fn new(axis: impl Into<Vector>, aperture: f64) -> Result<Self> {
        let axis = axis.into();
        if !(aperture > 0.0 && aperture <= 1.0) {
            return Err(Error::invalid(format!(
                "cone aperture must lie in (0, 1], got {aperture}"
            )));
        }
        let axis = axis
            .normalized()
            .ok_or_else(|| Error::invalid("cone axis must be nonzero"))?;
        Ok(Cone { axis, aperture })
    }

    pub fn axis(&self) -> &Vector {
        &self.axis
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn dim(&self) -> usize {
        self.axis.dim()
    }

    /// Transverse slope bound `tan(beta)` with `sin(beta) = aperture`.
    pub fn tan_beta(&self) -> f64 {
        let a = self.aperture;
        if a >= 1.0 {
            0.0
        } else {
            a / (1.0 - a * a).sqrt()
        }
    }

    pub fn contains(&self, v: &[f64]) -> Result<bool> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.contains_unchecked(v))
    }

    pub(crate) fn contains_unchecked(&self, v: &[f64]) -> bool {
        dot(v, &self.axis) >= self.aperture * norm(v)
    }
}

/// Membership test `<v, e> >= alpha |v|`.
pub fn cone_contains(cone: &Cone, v: &[f64]) -> Result<bool> {
    cone.contains(v)
}
