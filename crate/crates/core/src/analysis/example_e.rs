use serde::Serialize;

use super::dini::dini_derivatives;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{NormalKind, PointCloud};

#[derive(Clone, Debug, Serialize)]
pub struct ExampleECheck {
    pub min_upper: f64,
    pub index: usize,
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    /// Samples skipped because their probes left the grid.
    pub skipped: usize,
    pub lipschitz: f64,
}

impl ExampleECheck {
    pub fn passes(&self, slack: f64) -> bool {
        self.min_upper < 1.0 - slack
    }
}

/// Minimum over the samples of the upper Dini estimate along each sample's
/// normal line direction. `f` must have measured Lipschitz constant at most
/// 1 + `lip_tol`.
pub fn example_e_check(f: &ScalarField, e_set: &PointCloud, j_min: i32, j_max: i32, lip_tol: f64) -> Result<ExampleECheck> {
    let lip = f.lipschitz();
    if lip > 1.0 + lip_tol {
        return Err(Error::LipschitzPrecondition {
            measured: lip,
            bound: 1.0 + lip_tol,
        });
    }
    let normals = e_set.normals().ok_or(Error::MissingNormal { index: 0 })?;
    let mut best: Option<ExampleECheck> = None;
    let mut skipped = 0;
    for (i, (p, nd)) in e_set.points().iter().zip(normals).enumerate() {
        let NormalKind::Line(u) = &nd.kind else {
            return Err(Error::invalid(format!("sample {i} has no normal line")));
        };
        match dini_derivatives(f, p, u, j_min, j_max) {
            Ok(d) => {
                if best.as_ref().map_or(true, |b| d.upper < b.min_upper) {
                    best = Some(ExampleECheck {
                        min_upper: d.upper,
                        index: i,
                        point: p.as_slice().to_vec(),
                        direction: u.as_slice().to_vec(),
                        skipped: 0,
                        lipschitz: lip,
                    });
                }
            }
            Err(Error::ProbeEscapes { .. }) => skipped += 1,
            Err(err) => return Err(err),
        }
    }
    let mut out = best.ok_or_else(|| Error::invalid("no sample admits in-grid probes"))?;
    out.skipped = skipped;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_graph_family, graph_bump_derivative, GridDomain};

    fn dom() -> GridDomain {
        GridDomain::square(-1.5, 1.5, 1.0 / 64.0, 0).unwrap()
    }

    #[test]
    fn zero_field() {
        let e = gen_graph_family(3, 32).unwrap();
        let c = example_e_check(&ScalarField::zeros(dom()), &e, 3, 8, 0.0).unwrap();
        assert_eq!(c.min_upper, 0.0);
        assert!(c.passes(0.05));
    }

    #[test]
    fn height_function_dips_on_tilted_graphs() {
        let e = gen_graph_family(8, 64).unwrap();
        let f = ScalarField::from_fn(dom(), |x| x[1]);
        let c = example_e_check(&f, &e, 3, 8, 1e-12).unwrap();
        // ⟨e_x, (0,1)⟩ = 1/√(1 + (φ'(s)/k)²), smallest at k = 1 and the steepest s
        let steep = (0..2001)
            .map(|i| graph_bump_derivative(-1.0 + i as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        let oracle = 1.0 / (1.0 + steep * steep).sqrt();
        assert!(c.min_upper < 1.0 - 0.05);
        assert!(c.min_upper >= oracle - 1e-9);
    }

    #[test]
    fn lipschitz_guard() {
        let e = gen_graph_family(1, 16).unwrap();
        let f = ScalarField::from_fn(dom(), |x| 2.0 * x[0]);
        assert!(matches!(example_e_check(&f, &e, 3, 8, 0.01), Err(Error::LipschitzPrecondition { .. })));
    }
}
