use serde::{Deserialize, Serialize};

use super::grid::unravel;
use super::{Cone, GridDomain, GridSet, NormalData, PointCloud, Vector};
use crate::error::{Error, Result};

/// Points of the depth-`depth` four-corner Cantor construction in `[0,1]^2`:
/// images of the origin under compositions of `x -> x/4 + (3/4)c`, `c` a
/// corner of the unit square. Every point claims the full normal set.
pub fn gen_four_corner_cantor(depth: u32) -> Result<PointCloud> {
    if !(1..=8).contains(&depth) {
        return Err(Error::invalid(format!("four-corner depth must be in 1..=8, got {depth}")));
    }
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let mut pts = vec![[0.0f64, 0.0f64]];
    // apply the outermost map last: x = S_{c1}(S_{c2}(...S_{cd}(0)))
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for c in &corners {
            for p in &pts {
                next.push([p[0] / 4.0 + 0.75 * c[0], p[1] / 4.0 + 0.75 * c[1]]);
            }
        }
        pts = next;
    }
    pts.sort_by(|a, b| (a[1], a[0]).partial_cmp(&(b[1], b[0])).unwrap());
    let n = pts.len();
    PointCloud::with_normals(
        pts.into_iter().map(Vector::from).collect(),
        vec![NormalData::full(1.0); n],
    )
}

/// The `2^depth` closed intervals of the depth-`depth` Cantor construction
/// keeping the outer `ratio` fraction of each interval on both sides.
pub fn cantor_intervals(ratio: f64, depth: u32) -> Result<Vec<(f64, f64)>> {
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(Error::invalid(format!("Cantor ratio must lie in (0, 1/2), got {ratio}")));
    }
    if depth > 10 {
        return Err(Error::invalid(format!("Cantor depth must be <= 10, got {depth}")));
    }
    let mut iv = vec![(0.0, 1.0)];
    for _ in 0..depth {
        iv = iv
            .into_iter()
            .flat_map(|(a, b)| {
                let l = (b - a) * ratio;
                [(a, a + l), (b - l, b)]
            })
            .collect();
    }
    Ok(iv)
}

/// Samples of `C × [0,1]` where `C` is the Cantor set of [`cantor_intervals`]:
/// every interval endpoint crossed with `y_samples` equispaced heights.
/// Normals are the horizontal line through `(1,0)`, valid on radius 1.
pub fn gen_cantor_product(ratio: f64, depth: u32, y_samples: usize) -> Result<PointCloud> {
    if y_samples < 2 {
        return Err(Error::invalid("need at least 2 y samples"));
    }
    let iv = cantor_intervals(ratio, depth)?;
    let xs: Vec<f64> = iv.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut pts = Vec::with_capacity(xs.len() * y_samples);
    for j in 0..y_samples {
        let y = j as f64 / (y_samples - 1) as f64;
        for &x in &xs {
            pts.push(Vector::from([x, y]));
        }
    }
    let n = pts.len();
    PointCloud::with_normals(pts, vec![NormalData::line([1.0, 0.0], 1.0); n])
}

/// `(1 - s^2)^2` on `[-1, 1]`, zero outside.
pub fn graph_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        t * t
    }
}

pub fn graph_bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -4.0 * s * (1.0 - s * s)
    }
}

/// Samples of the graphs of `phi/k` for `k = ±1..±k_max` and of the zero
/// function, each tagged with the unit normal `∝ (-(phi/k)'(s), 1)`.
pub fn gen_graph_family(k_max: u32, samples: usize) -> Result<PointCloud> {
    if k_max < 1 {
        return Err(Error::invalid("k_max must be >= 1"));
    }
    if samples < 16 {
        return Err(Error::invalid("need at least 16 samples per graph"));
    }
    let mut ks: Vec<i64> = vec![0];
    for k in 1..=k_max as i64 {
        ks.push(k);
        ks.push(-k);
    }
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for &k in &ks {
        for i in 0..samples {
            let s = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
            let (y, dy) = if k == 0 {
                (0.0, 0.0)
            } else {
                (graph_bump(s) / k as f64, graph_bump_derivative(s) / k as f64)
            };
            let nrm = (1.0 + dy * dy).sqrt();
            pts.push(Vector::from([s, y]));
            normals.push(NormalData::line([-dy / nrm, 1.0 / nrm], 0.25));
        }
    }
    PointCloud::with_normals(pts, normals)
}

/// A line with rational slope and intercept: `y = (p/q) x + r/s`, or the
/// vertical line `x = r/s` when `slope` is `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalLine {
    pub slope: Option<(i64, i64)>,
    pub intercept: (i64, i64),
}

impl RationalLine {
    /// Unit direction with nonnegative first component (`(0,1)` if vertical).
    pub fn direction(&self) -> Vector {
        match self.slope {
            None => Vector::from([0.0, 1.0]),
            Some((p, q)) => {
                let m = p as f64 / q as f64;
                let n = (1.0 + m * m).sqrt();
                Vector::from([1.0 / n, m / n])
            }
        }
    }

    /// Signed distance: `a·x + b` with `|a| = 1`.
    fn normal_form(&self) -> ([f64; 2], f64) {
        let c = self.intercept.0 as f64 / self.intercept.1 as f64;
        match self.slope {
            None => ([1.0, 0.0], -c),
            Some((p, q)) => {
                let m = p as f64 / q as f64;
                let n = (1.0 + m * m).sqrt();
                ([-m / n, 1.0 / n], -c / n)
            }
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        let (a, b) = self.normal_form();
        (a[0] * x[0] + a[1] * x[1] + b).abs()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fractions of height exactly `h` (height `max(|p|, q)`), ordered by
/// absolute value, positive before negative.
fn fractions_of_height(h: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for q in 1..=h {
        for p in -h..=h {
            if p.abs().max(q) == h && gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    if h == 1 {
        out.push((0, 1));
    }
    out.sort_by(|a, b| {
        let va = a.0 as f64 / a.1 as f64;
        let vb = b.0 as f64 / b.1 as f64;
        va.abs().partial_cmp(&vb.abs()).unwrap().then(vb.partial_cmp(&va).unwrap())
    });
    out.dedup();
    out
}

/// The first `count` lines of the fixed enumeration: by height
/// `H = max(height(slope), height(intercept))` with vertical slopes of height
/// 1, then by slope (vertical last), then by intercept.
pub fn rational_lines(count: usize) -> Vec<RationalLine> {
    let mut out = Vec::with_capacity(count);
    let mut h = 1i64;
    let mut by_height: Vec<Vec<(i64, i64)>> = vec![Vec::new()];
    while out.len() < count {
        by_height.push(fractions_of_height(h));
        let height_of = |f: &(i64, i64)| f.0.abs().max(f.1);
        let all: Vec<(i64, i64)> = by_height.iter().flatten().copied().collect();
        let mut slopes: Vec<Option<(i64, i64)>> = all.iter().map(|&f| Some(f)).collect();
        slopes.push(None);
        for slope in &slopes {
            let hs = slope.map_or(1, |f| height_of(&f));
            for ic in &all {
                if hs.max(height_of(ic)) == h && out.len() < count {
                    out.push(RationalLine {
                        slope: *slope,
                        intercept: *ic,
                    });
                }
            }
        }
        h += 1;
    }
    out
}

/// Rasterized union of open strips of half-width `eps_budget·2^{-j}` around
/// the `j`-th enumerated line (`j = 1..line_count`), keeping only lines whose
/// unit direction `u` has `|<u, e>| < aperture/2`.
pub fn gen_line_neighborhood_set(
    domain: &GridDomain,
    line_count: usize,
    eps_budget: f64,
    cone: &Cone,
) -> Result<GridSet> {
    if line_count < 1 {
        return Err(Error::invalid("line_count must be >= 1"));
    }
    if !(eps_budget > 0.0) {
        return Err(Error::invalid("eps_budget must be positive"));
    }
    if domain.dim() != 2 || cone.dim() != 2 {
        return Err(Error::invalid("line neighborhoods are planar"));
    }
    let eta = cone.aperture();
    let kept: Vec<(RationalLine, f64)> = rational_lines(line_count)
        .into_iter()
        .enumerate()
        .filter(|(_, l)| l.direction().dot(cone.axis()).abs() < 0.5 * eta)
        .map(|(j, l)| (l, eps_budget * 0.5f64.powi(j as i32 + 1)))
        .collect();
    let h = domain.spacing();
    let shape = domain.cell_shape();
    let mut occ = vec![false; domain.cell_count()];
    for (lin, o) in occ.iter_mut().enumerate() {
        let idx = unravel(lin, &shape);
        if domain.is_padding_cell(&idx) {
            continue;
        }
        let lo = domain.node_position(&idx);
        let corners = [[lo[0], lo[1]], [lo[0] + h, lo[1]], [lo[0], lo[1] + h], [lo[0] + h, lo[1] + h]];
        *o = kept.iter().any(|(l, eps)| {
            let (a, b) = l.normal_form();
            let vals: Vec<f64> = corners.iter().map(|c| a[0] * c[0] + a[1] * c[1] + b).collect();
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let dist = if min <= 0.0 && max >= 0.0 { 0.0 } else { min.abs().min(max.abs()) };
            dist < *eps
        });
    }
    GridSet::from_occupancy(domain.clone(), occ)
}
