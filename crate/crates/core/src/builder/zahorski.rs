use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Clone, Debug, Serialize)]
pub struct PieceWeight {
    pub k: u32,
    pub j: u32,
    pub weight: f64,
    pub lipschitz: f64,
}

#[derive(Clone, Debug)]
pub struct ZahorskiSum {
    pub f: ScalarField,
    pub pieces: Vec<PieceWeight>,
}

impl ZahorskiSum {
    /// Σ 2^{−k−j}·Lip(g_{k,j}); bounds Lip(f) by the triangle inequality.
    pub fn lipschitz_bound(&self) -> f64 {
        self.pieces.iter().map(|p| p.weight * p.lipschitz).sum()
    }
}

/// f = Σ 2^{−k−j}·g_{k,j} over a finite list of indexed pieces.
pub fn zahorski_sum(pieces: &[(ScalarField, (u32, u32))]) -> Result<ZahorskiSum> {
    let Some((first, _)) = pieces.first() else {
        return Err(Error::invalid("zahorski_sum needs at least one piece"));
    };
    let d = first.domain().clone();
    let mut seen = BTreeSet::new();
    let mut acc = vec![0.0; d.node_count()];
    let mut meta = Vec::with_capacity(pieces.len());
    for (g, (k, j)) in pieces {
        if !seen.insert((*k, *j)) {
            return Err(Error::DuplicatePiece(*k, *j));
        }
        if !g.domain().same_lattice(&d) {
            return Err(Error::invalid(format!("piece ({k}, {j}) lives on a different grid")));
        }
        let w = 0.5f64.powi((*k + *j) as i32);
        for (a, s) in acc.iter_mut().zip(g.samples()) {
            *a += w * s;
        }
        meta.push(PieceWeight {
            k: *k,
            j: *j,
            weight: w,
            lipschitz: g.lipschitz(),
        });
    }
    Ok(ZahorskiSum {
        f: ScalarField::new(d, acc)?,
        pieces: meta,
    })
}
