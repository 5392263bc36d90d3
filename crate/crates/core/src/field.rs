//! Node-sampled scalar and vector fields with multilinear interpolation.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GridDomain, Vector, MAX_DIM};
use crate::geometry::{ravel_index, unravel_index};

const MAGIC: &[u8; 4] = b"SFLD";
const VERSION: u32 = 1;

/// A real function sampled at every node of a grid domain.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: GridDomain,
    samples: Vec<f64>,
    lip: OnceLock<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.samples == other.samples
    }
}

impl ScalarField {
    pub fn new(domain: GridDomain, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != domain.node_count() {
            return Err(Error::invalid(format!(
                "field has {} samples, domain has {} nodes",
                samples.len(),
                domain.node_count()
            )));
        }
        Ok(ScalarField {
            domain,
            samples,
            lip: OnceLock::new(),
        })
    }

    pub fn constant(domain: GridDomain, value: f64) -> Self {
        let n = domain.node_count();
        ScalarField::new(domain, vec![value; n]).expect("sized to node count")
    }

    pub fn zeros(domain: GridDomain) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Samples `f` at every node position.
    pub fn from_fn(domain: GridDomain, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let samples = (0..domain.node_count())
            .into_par_iter()
            .map(|lin| f(&domain.node_position_linear(lin)))
            .collect();
        ScalarField::new(domain, samples).expect("sized to node count")
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn at_node(&self, idx: &[usize]) -> f64 {
        self.samples[ravel_index(idx, &self.domain.node_shape())]
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        let samples = self.samples.par_iter().map(|&v| f(v)).collect();
        ScalarField::new(self.domain.clone(), samples).expect("same size")
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync) -> ScalarField {
        assert!(self.domain == other.domain, "fields on different domains");
        let samples = self
            .samples
            .par_iter()
            .zip(other.samples.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::new(self.domain.clone(), samples).expect("same size")
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }

    /// Multilinear interpolation; errors outside the padded box.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains_point(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(self.evaluate_lattice(&self.domain.lattice_coords(x)))
    }

    /// Interpolation at full-lattice coordinates, clamped to the box.
    pub(crate) fn evaluate_lattice(&self, lc: &[f64]) -> f64 {
        interpolate(&self.domain.node_shape(), lc, |lin| self.samples[lin])
    }

    /// Exact Lipschitz constant of the multilinear interpolant (cached).
    ///
    /// Inside a cell each gradient component is affine in the other
    /// coordinates, so the gradient norm peaks at a vertex, where component
    /// `i` is the difference quotient along the cell edge in direction `i`.
    pub fn lipschitz(&self) -> f64 {
        *self.lip.get_or_init(|| {
            let cshape = self.domain.cell_shape();
            let nshape = self.domain.node_shape();
            let h = self.domain.spacing();
            (0..self.domain.cell_count())
                .into_par_iter()
                .map(|lin| cell_gradient_bound(&unravel_index(lin, &cshape), &nshape, h, |l| self.samples[l]))
                .reduce(|| 0.0, f64::max)
        })
    }

    /// Central-difference gradient at a node, one-sided on the box boundary.
    pub fn fd_gradient(&self, idx: &[usize]) -> Vector {
        let shape = self.domain.node_shape();
        let h = self.domain.spacing();
        let lin = ravel_index(idx, &shape);
        let st = crate::geometry::index_strides(&shape);
        let g = (0..idx.len())
            .map(|a| {
                let lo = if idx[a] > 0 { lin - st[a] } else { lin };
                let hi = if idx[a] + 1 < shape[a] { lin + st[a] } else { lin };
                let span = (hi - lo) / st[a];
                if span == 0 {
                    0.0
                } else {
                    (self.samples[hi] - self.samples[lo]) / (span as f64 * h)
                }
            })
            .collect();
        Vector::new(g)
    }

    pub fn gradient_field(&self) -> VectorField {
        let shape = self.domain.node_shape();
        let n = self.domain.dim();
        let data: Vec<f64> = (0..self.domain.node_count())
            .into_par_iter()
            .flat_map_iter(|lin| self.fd_gradient(&unravel_index(lin, &shape)).into_inner())
            .collect();
        VectorField::new(self.domain.clone(), n, data).expect("sized")
    }

    /// Binary format: `SFLD`, version, ndim, node counts, origin, spacing,
    /// padding, then the samples; all little-endian, axis 0 varying fastest.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = &self.domain;
        let mut b = Vec::with_capacity(64 + 8 * self.samples.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(d.dim() as u32).to_le_bytes());
        for &c in d.dims() {
            b.extend_from_slice(&(c as u64).to_le_bytes());
        }
        for &o in d.origin().iter() {
            b.extend_from_slice(&o.to_le_bytes());
        }
        b.extend_from_slice(&d.spacing().to_le_bytes());
        b.extend_from_slice(&(d.padding() as u64).to_le_bytes());
        for v in &self.samples {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn read_binary(path: &Path) -> Result<ScalarField> {
        let data = fs::read(path)?;
        Self::from_bytes(&data).map_err(|m| Error::format(path, m))
    }

    pub fn from_bytes(data: &[u8]) -> std::result::Result<ScalarField, String> {
        let mut r = Reader { data, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let n = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        if !(2..=MAX_DIM).contains(&n) {
            return Err(format!("bad dimension {n}"));
        }
        let dims: Vec<usize> = (0..n).map(|_| r.u64().map(|v| v as usize)).collect::<std::result::Result<_, _>>()?;
        let origin: Vec<f64> = (0..n).map(|_| r.f64()).collect::<std::result::Result<_, _>>()?;
        let spacing = r.f64()?;
        let padding = r.u64()? as usize;
        let domain = GridDomain::new(origin, spacing, dims, padding).map_err(|e| e.to_string())?;
        let count = domain.node_count();
        let samples = (0..count).map(|_| r.f64()).collect::<std::result::Result<Vec<_>, _>>()?;
        if r.pos != data.len() {
            return Err("trailing bytes".into());
        }
        ScalarField::new(domain, samples).map_err(|e| e.to_string())
    }

    /// CSV with one row per node: coordinates then value.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        let names = ["x", "y", "z", "w"];
        writeln!(f, "{},value", names[..self.domain.dim()].join(","))?;
        for (lin, v) in self.samples.iter().enumerate() {
            let p = self.domain.node_position_linear(lin);
            let coords: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            writeln!(f, "{},{v:?}", coords.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.pos + n > self.data.len() {
            return Err("truncated field file".into());
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Multilinear interpolation of node values `get(lin)` at lattice coordinates.
/// Largest gradient norm of the multilinear interpolant on cell `c`; the
/// maximum sits at a vertex, where component `i` is the edge quotient.
pub(crate) fn cell_gradient_bound(c: &[usize], nshape: &[usize], h: f64, get: impl Fn(usize) -> f64) -> f64 {
    let n = c.len();
    let mut best = 0.0f64;
    for mask in 0..(1usize << n) {
        let mut s = 0.0;
        for i in 0..n {
            let mut lo = [0usize; MAX_DIM];
            for a in 0..n {
                lo[a] = c[a] + ((mask >> a) & 1);
            }
            lo[i] = c[i];
            let mut hi = lo;
            hi[i] = c[i] + 1;
            let d = (get(ravel_index(&hi[..n], nshape)) - get(ravel_index(&lo[..n], nshape))) / h;
            s += d * d;
        }
        best = best.max(s.sqrt());
    }
    best
}

pub(crate) fn interpolate(shape: &[usize], lc: &[f64], get: impl Fn(usize) -> f64) -> f64 {
    let n = shape.len();
    let mut base = [0usize; MAX_DIM];
    let mut t = [0.0f64; MAX_DIM];
    for a in 0..n {
        let max_i = shape[a] - 2;
        let c = lc[a].clamp(0.0, (shape[a] - 1) as f64);
        let i = (c.floor() as usize).min(max_i);
        base[a] = i;
        t[a] = c - i as f64;
    }
    let st = crate::geometry::index_strides(shape);
    let mut lin0 = 0;
    for a in 0..n {
        lin0 += base[a] * st[a];
    }
    let mut acc = 0.0;
    for mask in 0..(1usize << n) {
        let mut w = 1.0;
        let mut lin = lin0;
        for a in 0..n {
            if (mask >> a) & 1 == 1 {
                w *= t[a];
                lin += st[a];
            } else {
                w *= 1.0 - t[a];
            }
        }
        if w != 0.0 {
            acc += w * get(lin);
        }
    }
    acc
}

/// A vector of fixed dimension at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    domain: GridDomain,
    components: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(domain: GridDomain, components: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != components * domain.node_count() {
            return Err(Error::invalid("vector field data has the wrong length"));
        }
        Ok(VectorField {
            domain,
            components,
            data,
        })
    }

    pub fn constant(domain: GridDomain, v: &[f64]) -> Self {
        let data = (0..domain.node_count()).flat_map(|_| v.iter().copied()).collect();
        VectorField::new(domain, v.len(), data).expect("sized")
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn at(&self, lin: usize) -> &[f64] {
        &self.data[lin * self.components..(lin + 1) * self.components]
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vector> {
        if !self.domain.contains_point(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        let lc = self.domain.lattice_coords(x);
        let shape = self.domain.node_shape();
        Ok(Vector::new(
            (0..self.components)
                .map(|c| interpolate(&shape, &lc, |lin| self.data[lin * self.components + c]))
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dom() -> GridDomain {
        GridDomain::unit_square(16, 2)
    }

    #[test]
    fn affine_lipschitz_is_exact() {
        let f = ScalarField::from_fn(dom(), |x| 0.3 * x[0] - 0.4 * x[1] + 2.0);
        assert!((f.lipschitz() - 0.5).abs() < 1e-12);
        assert_eq!(ScalarField::constant(dom(), 3.0).lipschitz(), 0.0);
        let v = f.evaluate(&[0.37, 0.61]).unwrap();
        assert!((v - (0.3 * 0.37 - 0.4 * 0.61 + 2.0)).abs() < 1e-12);
        let g = f.fd_gradient(&[7, 9]);
        assert!((g[0] - 0.3).abs() < 1e-12 && (g[1] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn cone_function_lipschitz_is_one() {
        let d = dom();
        let c = d.node_position(&[12, 12]);
        let f = ScalarField::from_fn(d.clone(), |x| crate::geometry::distance(x, &c));
        // adjacent-node quotients never exceed 1 ...
        let shape = d.node_shape();
        let mut q = 0.0f64;
        for lin in 0..d.node_count() {
            let idx = unravel_index(lin, &shape);
            for a in 0..2 {
                if idx[a] + 1 < shape[a] {
                    let mut j = idx.clone();
                    j[a] += 1;
                    q = q.max((f.at_node(&j) - f.samples()[lin]).abs() / d.spacing());
                }
            }
        }
        assert!((q - 1.0).abs() < 1e-9);
        // ... but the bilinear patch at the apex has gradient (1, 1) at c
        assert!((f.lipschitz() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn binary_round_trip() {
        let f = ScalarField::from_fn(dom(), |x| (x[0] * 3.0).sin() + x[1]);
        let back = ScalarField::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(back, f);
        let mut bad = f.to_bytes();
        bad[0] = b'X';
        assert!(ScalarField::from_bytes(&bad).is_err());
        assert!(ScalarField::from_bytes(&f.to_bytes()[..40]).is_err());
    }

    proptest! {
        #[test]
        fn exact_at_nodes_and_cache_dominates_quotients(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = GridDomain::unit_square(6, 1);
            let samples: Vec<f64> = (0..d.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = ScalarField::new(d.clone(), samples.clone()).unwrap();
            let shape = d.node_shape();
            for lin in 0..d.node_count() {
                let p = d.node_position_linear(lin);
                prop_assert!((f.evaluate(&p).unwrap() - samples[lin]).abs() < 1e-12);
                let idx = unravel_index(lin, &shape);
                for a in 0..2 {
                    if idx[a] + 1 < shape[a] {
                        let mut j = idx.clone();
                        j[a] += 1;
                        let q = (f.at_node(&j) - samples[lin]).abs() / d.spacing();
                        prop_assert!(q <= f.lipschitz() + 1e-12);
                    }
                }
            }
        }
    }
}
