use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PointCloud, Vector};
use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// A regular lattice of spacing `h` over a box, padded on every side by
/// `padding` cells that never hold occupied cells.
///
/// Indices used by the public API are *full* indices: `0..full_cells(a)` for
/// cells and `0..=full_cells(a)` for nodes, with the unpadded box starting at
/// full index `padding`. Linear order is axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    origin: Vector,
    spacing: f64,
    dims: Vec<usize>,
    padding: usize,
}

impl GridDomain {
    pub fn new(origin: impl Into<Vector>, spacing: f64, dims: Vec<usize>, padding: usize) -> Result<Self> {
        let origin = origin.into();
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        if dims.len() != origin.dim() {
            return Err(Error::DimensionMismatch {
                expected: origin.dim(),
                got: dims.len(),
            });
        }
        if dims.len() < 2 || dims.len() > MAX_DIM {
            return Err(Error::invalid(format!("dimension must be in 2..={MAX_DIM}")));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid("all grid dims must be >= 1"));
        }
        Ok(GridDomain {
            origin,
            spacing,
            dims,
            padding,
        })
    }

    /// The unit square `[0,1]^2` with `cells` cells per side.
    pub fn unit_square(cells: usize, padding: usize) -> Self {
        GridDomain::new([0.0, 0.0], 1.0 / cells as f64, vec![cells, cells], padding)
            .expect("valid unit square domain")
    }

    /// Square `[lo, hi]^2` with spacing `h` (the extent is rounded up to whole cells).
    pub fn square(lo: f64, hi: f64, h: f64, padding: usize) -> Result<Self> {
        let cells = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
        GridDomain::new([lo, lo], h, vec![cells, cells], padding)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn origin(&self) -> &Vector {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn full_cells(&self, axis: usize) -> usize {
        self.dims[axis] + 2 * self.padding
    }

    pub fn full_nodes(&self, axis: usize) -> usize {
        self.full_cells(axis) + 1
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim()).map(|a| self.full_cells(a)).product()
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim()).map(|a| self.full_nodes(a)).product()
    }

    pub fn node_shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.full_nodes(a)).collect()
    }

    pub fn cell_shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.full_cells(a)).collect()
    }

    /// Position of the node with full index `idx`.
    pub fn node_position(&self, idx: &[usize]) -> Vector {
        let p = self.padding as f64;
        Vector::new(
            idx.iter()
                .zip(self.origin.iter())
                .map(|(&i, &o)| o + self.spacing * (i as f64 - p))
                .collect(),
        )
    }

    pub fn node_position_linear(&self, lin: usize) -> Vector {
        let idx = unravel(lin, &self.node_shape());
        self.node_position(&idx)
    }

    /// Continuous full-lattice coordinates of a point (node `k` sits at `k`).
    pub fn lattice_coords(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.origin.iter())
            .map(|(&v, &o)| (v - o) / self.spacing + self.padding as f64)
            .collect()
    }

    /// Lower and upper corners of the full (padded) box.
    pub fn full_bounds(&self) -> (Vector, Vector) {
        let lo = self.node_position(&vec![0; self.dim()]);
        let hi = self.node_position(&self.cell_shape());
        (lo, hi)
    }

    /// Lower and upper corners of the unpadded box.
    pub fn inner_bounds(&self) -> (Vector, Vector) {
        let lo = self.origin.clone();
        let hi = Vector::new(
            self.origin
                .iter()
                .zip(&self.dims)
                .map(|(&o, &d)| o + self.spacing * d as f64)
                .collect(),
        );
        (lo, hi)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        let (lo, hi) = self.full_bounds();
        x.len() == self.dim() && x.iter().zip(lo.iter().zip(hi.iter())).all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    pub fn inner_contains_point(&self, x: &[f64], tol: f64) -> bool {
        let (lo, hi) = self.inner_bounds();
        x.len() == self.dim()
            && x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }

    /// Whether a cell (full index) lies in the padding margin.
    pub fn is_padding_cell(&self, idx: &[usize]) -> bool {
        idx.iter()
            .zip(&self.dims)
            .any(|(&i, &d)| i < self.padding || i >= self.padding + d)
    }

    /// Euclidean distance from `x` to the closed box of cell `idx`.
    pub fn cell_box_distance(&self, idx: &[usize], x: &[f64]) -> f64 {
        let lc = self.lattice_coords(x);
        let mut s = 0.0;
        for (&i, &c) in idx.iter().zip(&lc) {
            let lo = i as f64;
            let d = if c < lo {
                lo - c
            } else if c > lo + 1.0 {
                c - lo - 1.0
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt() * self.spacing
    }

    pub fn same_lattice(&self, other: &GridDomain) -> bool {
        self == other
    }

    /// A domain on the same lattice whose unpadded box spans the nodes
    /// `lo..=hi` (full indices of `self`), with its own padding.
    pub fn sub_box(&self, lo: &[usize], hi: &[usize], padding: usize) -> Result<GridDomain> {
        let dims: Vec<usize> = lo.iter().zip(hi).map(|(&a, &b)| b.saturating_sub(a).max(1)).collect();
        GridDomain::new(self.node_position(lo), self.spacing, dims, padding)
    }

    /// Full node index in `self` of the node with full index `idx` in `sub`,
    /// if `sub` lies on the same lattice and the node exists here.
    pub fn map_node_from(&self, sub: &GridDomain, idx: &[usize]) -> Option<Vec<usize>> {
        let p = sub.node_position(idx);
        let lc = self.lattice_coords(&p);
        let mut out = Vec::with_capacity(lc.len());
        for (a, &c) in lc.iter().enumerate() {
            let r = c.round();
            if (c - r).abs() > 1e-6 || r < 0.0 || r as usize >= self.full_nodes(a) {
                return None;
            }
            out.push(r as usize);
        }
        Some(out)
    }

    /// Full node indices of the box `[x - r, x + r]^n`, clipped to the lattice.
    pub fn node_box_around(&self, x: &[f64], r: f64) -> (Vec<usize>, Vec<usize>) {
        let lc = self.lattice_coords(x);
        let w = r / self.spacing;
        let lo = lc.iter().map(|&c| (c - w).floor().max(0.0) as usize).collect();
        let hi = lc
            .iter()
            .enumerate()
            .map(|(a, &c)| ((c + w).ceil().max(0.0) as usize).min(self.full_nodes(a) - 1))
            .collect();
        (lo, hi)
    }
}

pub(crate) fn unravel(mut lin: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(shape.len());
    for &s in shape {
        idx.push(lin % s);
        lin /= s;
    }
    idx
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    let mut lin = 0;
    let mut stride = 1;
    for (&i, &s) in idx.iter().zip(shape) {
        lin += i * stride;
        stride *= s;
    }
    lin
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shape.len());
    let mut s = 1;
    for &d in shape {
        out.push(s);
        s *= d;
    }
    out
}

/// An open set represented as the interior of a union of closed grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    domain: GridDomain,
    occupancy: Vec<bool>,
}

/// Output of [`GridSet::neighborhood`].
#[derive(Clone, Debug)]
pub struct NeighborhoodResult {
    pub set: GridSet,
    /// Set when `r < h/2`, in which case the grid superset may miss geometry
    /// between samples.
    pub undersampled: bool,
}

impl GridSet {
    pub fn empty(domain: GridDomain) -> Self {
        let n = domain.cell_count();
        GridSet {
            domain,
            occupancy: vec![false; n],
        }
    }

    /// Every unpadded cell occupied.
    pub fn full(domain: GridDomain) -> Self {
        Self::from_cells(domain, |_| true)
    }

    /// Occupancy from a predicate on full cell indices; padding stays empty.
    pub fn from_cells(domain: GridDomain, mut pred: impl FnMut(&[usize]) -> bool) -> Self {
        let shape = domain.cell_shape();
        let occupancy = (0..domain.cell_count())
            .map(|lin| {
                let idx = unravel(lin, &shape);
                !domain.is_padding_cell(&idx) && pred(&idx)
            })
            .collect();
        GridSet { domain, occupancy }
    }

    /// Occupancy from a predicate on cell centers.
    pub fn from_centers(domain: GridDomain, mut pred: impl FnMut(&[f64]) -> bool) -> Self {
        let h = domain.spacing();
        let d2 = domain.clone();
        Self::from_cells(domain, |idx| {
            let c: Vec<f64> = d2.node_position(idx).iter().map(|v| v + 0.5 * h).collect();
            pred(&c)
        })
    }

    /// Cells all of whose corner nodes satisfy `pred` (node linear index).
    pub fn from_node_predicate(domain: GridDomain, pred: impl Fn(usize) -> bool) -> Self {
        let nshape = domain.node_shape();
        let n = domain.dim();
        Self::from_cells(domain, |idx| {
            (0..(1usize << n)).all(|mask| {
                let mut node = [0usize; MAX_DIM];
                for a in 0..n {
                    node[a] = idx[a] + ((mask >> a) & 1);
                }
                pred(ravel(&node[..n], &nshape))
            })
        })
    }

    /// Cells with at least one corner node satisfying `pred`.
    pub fn touching_nodes(domain: GridDomain, pred: impl Fn(usize) -> bool) -> Self {
        let nshape = domain.node_shape();
        let n = domain.dim();
        Self::from_cells(domain, |idx| {
            (0..(1usize << n)).any(|mask| {
                let mut node = [0usize; MAX_DIM];
                for a in 0..n {
                    node[a] = idx[a] + ((mask >> a) & 1);
                }
                pred(ravel(&node[..n], &nshape))
            })
        })
    }

    /// Complement within the unpadded box.
    pub fn complement(&self) -> GridSet {
        GridSet::from_cells(self.domain.clone(), |idx| !self.is_occupied(idx))
    }

    /// The same cells on another domain of the same lattice (cells outside
    /// the target's unpadded box are dropped).
    pub fn transfer_to(&self, target: &GridDomain) -> GridSet {
        let shape = self.domain.cell_shape();
        let tshape = target.cell_shape();
        let mut occ = vec![false; target.cell_count()];
        for lin in 0..self.domain.cell_count() {
            if !self.occupancy[lin] {
                continue;
            }
            let idx = unravel(lin, &shape);
            if let Some(t) = target.map_node_from(&self.domain, &idx) {
                if t.iter().zip(&tshape).all(|(&i, &s)| i < s) && !target.is_padding_cell(&t) {
                    occ[ravel(&t, &tshape)] = true;
                }
            }
        }
        GridSet {
            domain: target.clone(),
            occupancy: occ,
        }
    }

    pub fn from_occupancy(domain: GridDomain, occupancy: Vec<bool>) -> Result<Self> {
        if occupancy.len() != domain.cell_count() {
            return Err(Error::invalid(format!(
                "occupancy length {} does not match cell count {}",
                occupancy.len(),
                domain.cell_count()
            )));
        }
        let shape = domain.cell_shape();
        for (lin, &o) in occupancy.iter().enumerate() {
            if o && domain.is_padding_cell(&unravel(lin, &shape)) {
                return Err(Error::invalid("padding cells must not be occupied"));
            }
        }
        Ok(GridSet { domain, occupancy })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_occupied(&self, idx: &[usize]) -> bool {
        self.occupancy[ravel(idx, &self.domain.cell_shape())]
    }

    pub fn is_occupied_linear(&self, lin: usize) -> bool {
        self.occupancy[lin]
    }

    pub fn count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occupancy.iter().any(|&o| o)
    }

    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.occupancy
            .iter()
            .zip(&other.occupancy)
            .all(|(&a, &b)| !a || b)
    }

    pub fn intersect(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(&self, other: &GridSet, f: impl Fn(bool, bool) -> bool) -> GridSet {
        assert!(self.domain == other.domain, "grid sets on different domains");
        GridSet {
            domain: self.domain.clone(),
            occupancy: self
                .occupancy
                .iter()
                .zip(&other.occupancy)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Full indices of the cells whose closure contains the point, or `None`
    /// when the point is outside the full box.
    fn cells_around(&self, x: &[f64]) -> Option<Vec<Vec<usize>>> {
        if !self.domain.contains_point(x) {
            return None;
        }
        let lc = self.domain.lattice_coords(x);
        let shape = self.domain.cell_shape();
        let mut choices: Vec<Vec<usize>> = Vec::with_capacity(lc.len());
        for (a, &c) in lc.iter().enumerate() {
            let r = c.round();
            let mut v = Vec::with_capacity(2);
            if (c - r).abs() < 1e-9 {
                let r = r as i64;
                if r >= 1 {
                    v.push((r - 1) as usize);
                }
                if (r as usize) < shape[a] {
                    v.push(r as usize);
                }
            } else {
                v.push((c.floor() as usize).min(shape[a] - 1));
            }
            choices.push(v);
        }
        let mut out = vec![Vec::new()];
        for ch in choices {
            let mut next = Vec::with_capacity(out.len() * ch.len());
            for prefix in &out {
                for &c in &ch {
                    let mut p = prefix.clone();
                    p.push(c);
                    next.push(p);
                }
            }
            out = next;
        }
        Some(out)
    }

    /// Membership of a point in the represented open set.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        match self.cells_around(x) {
            Some(cells) => {
                let on_boundary_of_box = self
                    .domain
                    .lattice_coords(x)
                    .iter()
                    .enumerate()
                    .any(|(a, &c)| c <= 1e-9 || c >= self.domain.full_cells(a) as f64 - 1e-9);
                !on_boundary_of_box && cells.iter().all(|c| self.is_occupied(c))
            }
            None => false,
        }
    }

    /// Whether the node (full index) is an interior point of the set.
    pub fn node_is_interior(&self, node: &[usize]) -> bool {
        let shape = self.domain.cell_shape();
        let n = node.len();
        for mask in 0..(1usize << n) {
            let mut cell = [0usize; MAX_DIM];
            for a in 0..n {
                let bit = (mask >> a) & 1;
                if bit == 0 {
                    if node[a] == 0 {
                        return false;
                    }
                    cell[a] = node[a] - 1;
                } else {
                    if node[a] >= shape[a] {
                        return false;
                    }
                    cell[a] = node[a];
                }
            }
            if !self.occupancy[ravel(&cell[..n], &shape)] {
                return false;
            }
        }
        true
    }

    /// Interior flag for every node, in node linear order.
    pub fn interior_nodes(&self) -> Vec<bool> {
        let shape = self.domain.node_shape();
        (0..self.domain.node_count())
            .map(|lin| self.node_is_interior(&unravel(lin, &shape)))
            .collect()
    }

    /// Cells whose closure meets some open ball `B(p, r)`, `p` in the cloud.
    pub fn neighborhood(domain: &GridDomain, cloud: &PointCloud, r: f64) -> Result<NeighborhoodResult> {
        if !(r > 0.0) {
            return Err(Error::invalid(format!("neighborhood radius must be positive, got {r}")));
        }
        let h = domain.spacing();
        let shape = domain.cell_shape();
        let mut occ = vec![false; domain.cell_count()];
        let n = domain.dim();
        for p in cloud.points() {
            if p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
            }
            let lc = domain.lattice_coords(p);
            let reach = r / h;
            let mut lo = [0usize; MAX_DIM];
            let mut hi = [0usize; MAX_DIM];
            let mut skip = false;
            for a in 0..n {
                let l = (lc[a] - reach).floor() - 1.0;
                let u = (lc[a] + reach).ceil() + 1.0;
                let l = l.max(0.0);
                let u = u.min(shape[a] as f64 - 1.0);
                if u < l {
                    skip = true;
                    break;
                }
                lo[a] = l as usize;
                hi[a] = u as usize;
            }
            if skip {
                continue;
            }
            let mut idx = lo;
            loop {
                let cell = &idx[..n];
                if !domain.is_padding_cell(cell) && domain.cell_box_distance(cell, p) < r {
                    occ[ravel(cell, &shape)] = true;
                }
                let mut a = 0;
                loop {
                    if a == n {
                        break;
                    }
                    if idx[a] < hi[a] {
                        idx[a] += 1;
                        break;
                    }
                    idx[a] = lo[a];
                    a += 1;
                }
                if a == n {
                    break;
                }
            }
        }
        Ok(NeighborhoodResult {
            set: GridSet {
                domain: domain.clone(),
                occupancy: occ,
            },
            undersampled: r < 0.5 * h,
        })
    }

    /// Writes the set as a binary PBM (P4) plus a `<path>.toml` sidecar.
    /// Image rows run from the top (largest axis-1 index) down.
    pub fn write_pbm(&self, path: &Path) -> Result<()> {
        if self.domain.dim() != 2 {
            return Err(Error::invalid("PBM export supports only planar grids"));
        }
        let w = self.domain.full_cells(0);
        let ht = self.domain.full_cells(1);
        let mut buf = Vec::new();
        write!(buf, "P4\n{w} {ht}\n")?;
        let row_bytes = w.div_ceil(8);
        for row in 0..ht {
            let y = ht - 1 - row;
            let mut bytes = vec![0u8; row_bytes];
            for x in 0..w {
                if self.is_occupied(&[x, y]) {
                    bytes[x / 8] |= 0x80 >> (x % 8);
                }
            }
            buf.extend_from_slice(&bytes);
        }
        fs::write(path, buf)?;
        let header = toml::to_string(&GridHeader::from(&self.domain))
            .map_err(|e| Error::format(path, e.to_string()))?;
        fs::write(sidecar_path(path), header)?;
        Ok(())
    }

    pub fn read_pbm(path: &Path) -> Result<GridSet> {
        let header_text = fs::read_to_string(sidecar_path(path))?;
        let header: GridHeader =
            toml::from_str(&header_text).map_err(|e| Error::format(sidecar_path(path), e.to_string()))?;
        let domain = header.into_domain()?;
        let data = fs::read(path)?;
        let (w, ht, offset) = parse_pbm_header(&data).ok_or_else(|| Error::format(path, "bad PBM header"))?;
        if w != domain.full_cells(0) || ht != domain.full_cells(1) {
            return Err(Error::format(path, "PBM size does not match sidecar header"));
        }
        let row_bytes = w.div_ceil(8);
        if data.len() < offset + row_bytes * ht {
            return Err(Error::format(path, "truncated PBM raster"));
        }
        let mut occ = vec![false; domain.cell_count()];
        let shape = domain.cell_shape();
        for row in 0..ht {
            let y = ht - 1 - row;
            let bytes = &data[offset + row * row_bytes..offset + (row + 1) * row_bytes];
            for x in 0..w {
                if bytes[x / 8] & (0x80 >> (x % 8)) != 0 {
                    occ[ravel(&[x, y], &shape)] = true;
                }
            }
        }
        GridSet::from_occupancy(domain, occ).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    s.into()
}

fn parse_pbm_header(data: &[u8]) -> Option<(usize, usize, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 3 && i < data.len() {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        tokens.push(std::str::from_utf8(&data[start..i]).ok()?.to_string());
    }
    if tokens.len() < 3 || tokens[0] != "P4" {
        return None;
    }
    // exactly one whitespace byte separates the header from the raster
    Some((tokens[1].parse().ok()?, tokens[2].parse().ok()?, i + 1))
}

/// Sidecar header for grid files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GridHeader {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub dims: Vec<usize>,
    pub padding: usize,
}

impl From<&GridDomain> for GridHeader {
    fn from(d: &GridDomain) -> Self {
        GridHeader {
            origin: d.origin().to_vec(),
            spacing: d.spacing(),
            dims: d.dims().to_vec(),
            padding: d.padding(),
        }
    }
}

impl GridHeader {
    pub fn into_domain(self) -> Result<GridDomain> {
        GridDomain::new(self.origin, self.spacing, self.dims, self.padding)
    }
}
