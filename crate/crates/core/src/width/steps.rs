use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Cone, GridDomain, GridSet};

/// One straight piece of a lattice step, in lattice units relative to the
/// start node, together with the cells whose closures contain it.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub length: f64,
    pub cells: Vec<Vec<i64>>,
}

/// Integer offsets usable as cone-monotone path segments.
#[derive(Clone, Debug, Serialize)]
pub struct StepSet {
    cone: Cone,
    s_max: usize,
    steps: Vec<Vec<i64>>,
    #[serde(skip)]
    pieces: Vec<Vec<Piece>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// All primitive offsets `d != 0` with `|d|_inf <= s_max` inside the cone,
/// in lexicographic order. Non-primitive offsets are dropped since they
/// repeat a shorter step in the same direction.
pub fn build_step_set(cone: &Cone, s_max: usize) -> Result<StepSet> {
    if s_max < 1 {
        return Err(Error::invalid("s_max must be >= 1"));
    }
    let n = cone.dim();
    let s = s_max as i64;
    let side = (2 * s + 1) as usize;
    let total = side.pow(n as u32);
    let mut steps = Vec::new();
    for lin in 0..total {
        let mut rem = lin;
        let mut d = vec![0i64; n];
        // most significant axis first so the enumeration is lexicographic
        for a in (0..n).rev() {
            d[a] = (rem % side) as i64 - s;
            rem /= side;
        }
        if d.iter().all(|&v| v == 0) {
            continue;
        }
        if d.iter().fold(0, |g, &v| gcd(g, v)) != 1 {
            continue;
        }
        let df: Vec<f64> = d.iter().map(|&v| v as f64).collect();
        if cone.contains_unchecked(&df) {
            steps.push(d);
        }
    }
    if steps.is_empty() {
        return Err(Error::EmptyStepSet {
            aperture: cone.aperture(),
            s_max,
        });
    }
    let pieces = steps.iter().map(|d| step_pieces(d)).collect();
    Ok(StepSet {
        cone: cone.clone(),
        s_max,
        steps,
        pieces,
    })
}

/// Splits the segment `[0, d]` at every lattice hyperplane crossing.
fn step_pieces(d: &[i64]) -> Vec<Piece> {
    let n = d.len();
    let mut ts: Vec<f64> = vec![0.0, 1.0];
    for &di in d {
        let m = di.unsigned_abs();
        for k in 1..m {
            ts.push(k as f64 / m as f64);
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let len = d.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    let mut out = Vec::new();
    for w in ts.windows(2) {
        let tm = 0.5 * (w[0] + w[1]);
        let mut choices: Vec<Vec<i64>> = Vec::with_capacity(n);
        for &di in d.iter() {
            if di == 0 {
                choices.push(vec![-1, 0]);
            } else {
                choices.push(vec![(di as f64 * tm).floor() as i64]);
            }
        }
        let mut cells = vec![Vec::new()];
        for ch in choices {
            cells = cells
                .into_iter()
                .flat_map(|p: Vec<i64>| {
                    ch.iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out.push(Piece {
            length: (w[1] - w[0]) * len,
            cells,
        });
    }
    out
}

impl StepSet {
    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn steps(&self) -> &[Vec<i64>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn contains(&self, d: &[i64]) -> bool {
        self.steps.iter().any(|s| s == d)
    }

    /// Inside length of step `k` from node `start` (full node index), in
    /// length units. Pieces are summed in order along the step so that every
    /// caller gets bit-identical values.
    pub(crate) fn segment_length(&self, k: usize, start: &[usize], g: &GridSet) -> f64 {
        let d = g.domain();
        let shape = d.cell_shape();
        let mut acc = 0.0;
        for p in &self.pieces[k] {
            let inside = p.cells.iter().all(|c| {
                let mut lin = 0usize;
                let mut stride = 1usize;
                for a in 0..c.len() {
                    let v = start[a] as i64 + c[a];
                    if v < 0 || v as usize >= shape[a] {
                        return false;
                    }
                    lin += v as usize * stride;
                    stride *= shape[a];
                }
                g.is_occupied_linear(lin)
            });
            if inside {
                acc += p.length;
            }
        }
        acc * d.spacing()
    }

    /// Node index reached by taking step `k` from `start`, if inside the lattice.
    pub(crate) fn advance(&self, k: usize, start: &[usize], domain: &GridDomain) -> Option<Vec<usize>> {
        let d = &self.steps[k];
        let mut out = Vec::with_capacity(d.len());
        for a in 0..d.len() {
            let v = start[a] as i64 + d[a];
            if v < 0 || v as usize >= domain.full_nodes(a) {
                return None;
            }
            out.push(v as usize);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(a: f64) -> Cone {
        Cone::new([1.0, 0.0], a).unwrap()
    }

    #[test]
    fn documented_step_sets() {
        assert_eq!(build_step_set(&cone(1.0), 1).unwrap().steps(), &[vec![1, 0]]);
        assert_eq!(
            build_step_set(&cone(0.7), 1).unwrap().steps(),
            &[vec![1, -1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(build_step_set(&cone(0.95), 1).unwrap().steps(), &[vec![1, 0]]);
        assert_eq!(build_step_set(&cone(0.95), 3).unwrap().steps(), &[vec![1, 0]]);
        let s = build_step_set(&cone(0.9), 3).unwrap();
        assert!(s.contains(&[3, 1]) && s.contains(&[3, -1]) && !s.contains(&[2, 0]));
    }

    #[test]
    fn empty_step_set_is_an_error() {
        let c = Cone::new([1.0, 0.3], 1.0).unwrap();
        assert!(matches!(build_step_set(&c, 2), Err(Error::EmptyStepSet { .. })));
    }

    #[test]
    fn pieces_sum_to_step_length() {
        let s = build_step_set(&cone(0.3), 3).unwrap();
        for (d, ps) in s.steps().iter().zip(&s.pieces) {
            let total: f64 = ps.iter().map(|p| p.length).sum();
            let len = d.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            assert!((total - len).abs() < 1e-12);
        }
    }

    #[test]
    fn steps_advance_along_the_axis() {
        for a in [0.2, 0.5, 0.8] {
            let c = Cone::new([0.6, 0.8], a).unwrap();
            for d in build_step_set(&c, 3).unwrap().steps() {
                let p = 0.6 * d[0] as f64 + 0.8 * d[1] as f64;
                assert!(p > 0.0);
            }
        }
    }
}
