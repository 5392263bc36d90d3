use serde::Serialize;

use super::dp::width_open_with;
use super::steps::build_step_set;
use crate::error::{Error, Result};
use crate::geometry::{Cone, GridDomain, GridSet, PointCloud};

/// Widths of shrinking grid neighborhoods of a point set.
#[derive(Clone, Debug, Serialize)]
pub struct SetWidth {
    /// `(r, width of the r-neighborhood)`, in the order the radii were given.
    pub values: Vec<(f64, f64)>,
    /// Some radius was below half the grid spacing.
    pub undersampled: bool,
}

impl SetWidth {
    /// Value at the smallest radius: the reported approximation of the width.
    pub fn estimate(&self) -> f64 {
        self.values.last().map_or(0.0, |v| v.1)
    }
}

pub fn width_of_set(
    e: &PointCloud,
    cone: &Cone,
    radii: &[f64],
    s_max: usize,
    domain: &GridDomain,
) -> Result<SetWidth> {
    if radii.is_empty() {
        return Err(Error::invalid("at least one radius is required"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("radii must be strictly decreasing"));
    }
    let steps = build_step_set(cone, s_max)?;
    let mut values = Vec::with_capacity(radii.len());
    let mut undersampled = false;
    for &r in radii {
        let nb = GridSet::neighborhood(domain, e, r)?;
        undersampled |= nb.undersampled;
        values.push((r, width_open_with(&nb.set, &steps)?.value));
    }
    Ok(SetWidth { values, undersampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_four_corner_cantor, Vector};

    #[test]
    fn single_point_shrinks() {
        let d = GridDomain::unit_square(128, 4);
        let e = PointCloud::new(vec![Vector::from([0.5, 0.5])]);
        let c = Cone::new([1.0, 0.0], 0.5).unwrap();
        let w = width_of_set(&e, &c, &[0.1, 0.05, 0.025], 3, &d).unwrap();
        for &(r, v) in &w.values {
            assert!(v <= 2.0 * r / 0.5 + 4.0 * d.spacing(), "r={r} v={v}");
        }
        assert!(w.values[2].1 < w.values[0].1);
    }

    #[test]
    fn horizontal_segment_lower_bound() {
        let d = GridDomain::unit_square(64, 4);
        let e = PointCloud::new((0..=40).map(|i| Vector::from([0.2 + 0.6 * i as f64 / 40.0, 0.5])).collect());
        let c = Cone::new([1.0, 0.0], 0.9).unwrap();
        let w = width_of_set(&e, &c, &[0.1, 0.05, 0.03], 3, &d).unwrap();
        for &(_, v) in &w.values {
            assert!(v >= 0.6);
        }
    }

    #[test]
    fn cantor_widths_decrease() {
        let d = GridDomain::unit_square(512, 4);
        let e = gen_four_corner_cantor(4).unwrap();
        let c = Cone::new([1.0, 0.0], 0.5).unwrap();
        let radii: Vec<f64> = (3..=5).map(|k| 4f64.powi(-k)).collect();
        let w = width_of_set(&e, &c, &radii, 3, &d).unwrap();
        assert!(w.values.windows(2).all(|p| p[1].1 < p[0].1), "{:?}", w.values);
        assert!(width_of_set(&e, &c, &[0.1, 0.2], 3, &d).is_err());
    }
}
