//! Clusters and front geometry on radial samples.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::f64::consts::PI;
use std::io::Write;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::fit::{fit_scaling, ScalingFit};
use crate::lattice::{SitePos, DIRECTIONS};
use crate::percolation::{triangle_centroid, PercolationSample};

/// A dual (hexagonal) edge, stored as the primal pair it separates: the site
/// `inside` and its neighbor in direction `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DualEdge {
    pub inside: SitePos,
    pub dir: u8,
}

impl DualEdge {
    pub fn new(inside: SitePos, dir: usize) -> Self {
        DualEdge {
            inside,
            dir: (dir % 6) as u8,
        }
    }

    pub fn dir_vec(&self) -> SitePos {
        DIRECTIONS[self.dir as usize]
    }

    pub fn outside(&self) -> SitePos {
        self.inside + self.dir_vec()
    }

    /// Euclidean midpoint of the two primal sites.
    pub fn midpoint(&self) -> (f64, f64) {
        let (p, q) = (self.inside.euclidean(), self.outside().euclidean());
        ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0)
    }

    pub fn midpoint_norm(&self) -> f64 {
        let (x, y) = self.midpoint();
        x.hypot(y)
    }
}

/// An interface traced on dual edges.
///
/// Closed curves list each edge once; the edge after the last is the first.
/// `vertices[i]` is the dual vertex between `edges[i]` and its successor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontCurve {
    pub edges: Vec<DualEdge>,
    pub vertices: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
    /// Winding number around the origin; 0 for open curves.
    pub winding: i32,
    pub closed: bool,
}

impl FrontCurve {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Dual-vertex coordinates as CSV with header `x,y,radius`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "radius"])
            .map_err(|e| Error::Format(e.to_string()))?;
        for (&(x, y), r) in self.vertices.iter().zip(&self.radii) {
            w.write_record([x.to_string(), y.to_string(), r.to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub size: usize,
    pub diameter: f64,
}

#[derive(Clone, Debug)]
pub struct ClusterReport {
    /// Clusters ordered by their lexicographically smallest site.
    pub clusters: Vec<ClusterInfo>,
    /// Cluster of the origin, if the origin is in the region and occupied.
    pub origin_cluster: Option<usize>,
    /// Cluster index per region site; `u32::MAX` on vacant sites.
    pub labels: Vec<u32>,
}

impl ClusterReport {
    pub fn count(&self) -> usize {
        self.clusters.len()
    }

    pub fn max_diameter(&self) -> f64 {
        self.clusters.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }
}

/// Projection directions `k·30°`, `k = 0..6`, used for diameters.
fn projection_axes() -> [(f64, f64); 6] {
    std::array::from_fn(|k| {
        let th = k as f64 * PI / 6.0;
        (th.cos(), th.sin())
    })
}

/// Occupied clusters under six-neighbor adjacency.
///
/// Diameters are the largest width of the cluster over six projection
/// directions 30° apart, which is within a factor `cos 15°` of the Euclidean
/// diameter.
pub fn connected_clusters(sample: &PercolationSample) -> ClusterReport {
    let region = sample.region();
    let status = sample.status();
    let mut uf = UnionFind::<usize>::new(region.len());
    for i in 0..region.len() {
        if status[i] {
            for j in region.neighbor_indices(i) {
                if j > i && status[j] {
                    uf.union(i, j);
                }
            }
        }
    }
    let axes = projection_axes();
    let mut root_label = std::collections::HashMap::new();
    let mut labels = vec![u32::MAX; region.len()];
    let mut extent: Vec<[(f64, f64); 6]> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for (i, &z) in region.sites().iter().enumerate() {
        if !status[i] {
            continue;
        }
        let root = uf.find(i);
        let label = *root_label.entry(root).or_insert_with(|| {
            extent.push([(f64::INFINITY, f64::NEG_INFINITY); 6]);
            sizes.push(0);
            sizes.len() - 1
        });
        labels[i] = label as u32;
        sizes[label] += 1;
        let (x, y) = z.euclidean();
        for (e, (cx, cy)) in extent[label].iter_mut().zip(axes) {
            let p = x * cx + y * cy;
            e.0 = e.0.min(p);
            e.1 = e.1.max(p);
        }
    }
    let clusters = sizes
        .iter()
        .zip(&extent)
        .map(|(&size, e)| ClusterInfo {
            size,
            diameter: e.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max),
        })
        .collect();
    let origin_cluster = region
        .index_of(SitePos::ORIGIN)
        .filter(|&i| status[i])
        .map(|i| labels[i] as usize);
    ClusterReport {
        clusters,
        origin_cluster,
        labels,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Dilute,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub max_diameter: f64,
    /// `c·ln n`.
    pub threshold: f64,
    pub origin_diameter: Option<f64>,
    pub cluster_count: usize,
}

/// Dilute iff every cluster has diameter at most `c·ln n`.
pub fn classify_phase(n: f64, sample: &PercolationSample, c: f64) -> Result<PhaseReport> {
    if !(c > 0.0) || !(n > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "classify_phase needs c > 0 and n > 1, got c = {c}, n = {n}"
        )));
    }
    let report = connected_clusters(sample);
    let threshold = c * n.ln();
    let max_diameter = report.max_diameter();
    Ok(PhaseReport {
        phase: if max_diameter <= threshold {
            Phase::Dilute
        } else {
            Phase::Dense
        },
        max_diameter,
        threshold,
        origin_diameter: report.origin_cluster.map(|k| report.clusters[k].diameter),
        cluster_count: report.count(),
    })
}

fn flood(
    sample: &PercolationSample,
    seeds: impl Iterator<Item = usize>,
    pass: impl Fn(usize) -> bool,
) -> Vec<bool> {
    let region = sample.region();
    let mut mark = vec![false; region.len()];
    let mut queue = VecDeque::new();
    for i in seeds {
        if pass(i) && !mark[i] {
            mark[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in region.neighbor_indices(i) {
            if !mark[j] && pass(j) {
                mark[j] = true;
                queue.push_back(j);
            }
        }
    }
    mark
}

/// Vacant sites joined to the region boundary by vacant paths.
pub fn ocean(sample: &PercolationSample) -> Vec<bool> {
    let region = sample.region();
    let status = sample.status();
    flood(
        sample,
        (0..region.len()).filter(|&i| region.is_boundary(i)),
        |i| !status[i],
    )
}

/// Outer boundary of the filled cluster of the origin.
///
/// The ocean is flooded in from the region boundary; the filled cluster is
/// the component of non-ocean sites containing the origin, and its boundary
/// with the ocean is walked counterclockwise.
pub fn extract_front(sample: &PercolationSample, inner_r: f64, outer_r: f64) -> Result<FrontCurve> {
    if !(inner_r >= 0.0 && inner_r < outer_r) {
        return Err(Error::InvalidParameter(format!(
            "extract_front needs 0 <= inner_r < outer_r, got ({inner_r}, {outer_r})"
        )));
    }
    let region = sample.region();
    let origin = region
        .index_of(SitePos::ORIGIN)
        .ok_or_else(|| Error::InvalidRegion("sample region does not contain the origin".into()))?;
    let sea = ocean(sample);
    let inner_sq = inner_r * inner_r * (1.0 + 1e-12);
    if region
        .sites()
        .iter()
        .zip(&sea)
        .any(|(z, &o)| o && (z.norm_sq() as f64) <= inner_sq)
    {
        return Err(Error::NoInterface(format!(
            "vacant sites joined to the region boundary reach radius {inner_r}"
        )));
    }
    let filled = flood(sample, std::iter::once(origin), |i| !sea[i]);
    let outer_sq = outer_r * outer_r * (1.0 + 1e-12);
    for (i, z) in region.sites().iter().enumerate() {
        if !filled[i] {
            continue;
        }
        if region.is_boundary(i) {
            return Err(Error::NoInterface(
                "the filled cluster of the origin touches the region boundary".into(),
            ));
        }
        if z.norm_sq() as f64 > outer_sq {
            return Err(Error::NoInterface(format!(
                "the filled cluster of the origin reaches beyond radius {outer_r}"
            )));
        }
    }
    let in_k = |z: SitePos| region.index_of(z).is_some_and(|i| filled[i]);
    let start_site = region
        .sites()
        .iter()
        .enumerate()
        .filter(|&(i, z)| filled[i] && z.b == 0 && z.a >= 0)
        .map(|(_, &z)| z)
        .max_by_key(|z| z.a)
        .expect("the origin is filled");
    let start = DualEdge::new(start_site, 0);
    let mut edges = Vec::new();
    let mut vertices = Vec::new();
    let (mut z, mut k) = (start_site, 0usize);
    let limit = 6 * region.len() + 6;
    loop {
        edges.push(DualEdge::new(z, k));
        let w = z.neighbor(k);
        let c = z.neighbor((k + 1) % 6);
        vertices.push(triangle_centroid(z, w, c));
        if in_k(c) {
            let d = w - c;
            k = DIRECTIONS.iter().position(|&e| e == d).expect("adjacent sites");
            z = c;
        } else {
            k = (k + 1) % 6;
        }
        if DualEdge::new(z, k) == start {
            break;
        }
        if edges.len() > limit {
            return Err(Error::Trace("hull walk did not close".into()));
        }
    }
    let winding = winding_number(&vertices);
    if winding.abs() != 1 {
        return Err(Error::Trace(format!(
            "front has winding number {winding} around the origin"
        )));
    }
    let radii = vertices.iter().map(|&(x, y)| x.hypot(y)).collect();
    Ok(FrontCurve {
        edges,
        vertices,
        radii,
        winding,
        closed: true,
    })
}

/// Winding number of a closed polygon around the origin.
pub fn winding_number(points: &[(f64, f64)]) -> i32 {
    let mut total = 0.0;
    for (i, &(x0, y0)) in points.iter().enumerate() {
        let (x1, y1) = points[(i + 1) % points.len()];
        let mut d = y1.atan2(x1) - y0.atan2(x0);
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        total += d;
    }
    (total / (2.0 * PI)).round() as i32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontStatistics {
    /// Number of dual edges.
    pub length: usize,
    pub max_outward: f64,
    pub max_inward: f64,
    pub mean_radius: f64,
}

pub fn front_statistics(front: &FrontCurve, r_star: f64) -> FrontStatistics {
    let (lo, hi, sum) = front
        .radii
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), &r| {
            (lo.min(r), hi.max(r), s + r)
        });
    FrontStatistics {
        length: front.len(),
        max_outward: hi - r_star,
        max_inward: r_star - lo,
        mean_radius: sum / front.radii.len().max(1) as f64,
    }
}

/// Whether a dual edge's midpoint lies in the annulus `r1 < ‖m‖ ≤ r2`.
pub fn edge_in_annulus(e: &DualEdge, (r1, r2): (f64, f64)) -> bool {
    let r = e.midpoint_norm();
    r > r1 && r <= r2
}

/// Front edges whose midpoints lie in the annulus `mid`.
pub fn front_edges_in(front: &FrontCurve, mid: (f64, f64)) -> BTreeSet<DualEdge> {
    front
        .edges
        .iter()
        .filter(|e| edge_in_annulus(e, mid))
        .copied()
        .collect()
}

/// Dual edges in the annulus `mid` whose occupied site is joined by an
/// occupied path to `disk(inner_target)` and whose vacant site is joined by a
/// vacant path to a site of norm greater than `outer_target`.
pub fn two_arm_edges(
    sample: &PercolationSample,
    mid: (f64, f64),
    inner_target: f64,
    outer_target: f64,
) -> Result<BTreeSet<DualEdge>> {
    if !(inner_target < mid.0 && mid.0 < mid.1 && mid.1 < outer_target) {
        return Err(Error::InvalidParameter(format!(
            "two_arm_edges needs inner < mid.0 < mid.1 < outer, got {inner_target}, {mid:?}, {outer_target}"
        )));
    }
    let region = sample.region();
    let status = sample.status();
    let sites = region.sites();
    let inner_sq = inner_target * inner_target * (1.0 + 1e-12);
    let outer_sq = outer_target * outer_target * (1.0 + 1e-12);
    let occ = flood(
        sample,
        (0..sites.len()).filter(|&i| sites[i].norm_sq() as f64 <= inner_sq),
        |i| status[i],
    );
    let vac = flood(
        sample,
        (0..sites.len()).filter(|&i| sites[i].norm_sq() as f64 > outer_sq),
        |i| !status[i],
    );
    let mut out = BTreeSet::new();
    for (i, &z) in sites.iter().enumerate() {
        if !occ[i] {
            continue;
        }
        for k in 0..6 {
            let e = DualEdge::new(z, k);
            if region.index_of(e.outside()).is_some_and(|j| vac[j]) && edge_in_annulus(&e, mid) {
                out.insert(e);
            }
        }
    }
    Ok(out)
}

/// Grid offsets tried per axis; the count at each scale is the smallest over
/// the `OFFSETS²` shifted grids.
const OFFSETS: usize = 4;

fn box_count(points: &[(f64, f64)], closed: bool, s: f64) -> usize {
    let step = s / 8.0;
    let m = points.len();
    let segs = if closed { m } else { m.saturating_sub(1) };
    let mut samples = Vec::new();
    if m == 1 {
        samples.push(points[0]);
    }
    for i in 0..segs {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % m];
        let pieces = ((x1 - x0).hypot(y1 - y0) / step).ceil().max(1.0) as usize;
        for j in 0..=pieces {
            let u = j as f64 / pieces as f64;
            samples.push((x0 + u * (x1 - x0), y0 + u * (y1 - y0)));
        }
    }
    let mut best = usize::MAX;
    for ox in 0..OFFSETS {
        for oy in 0..OFFSETS {
            let (dx, dy) = (ox as f64 * s / OFFSETS as f64, oy as f64 * s / OFFSETS as f64);
            let boxes: HashSet<(i64, i64)> = samples
                .iter()
                .map(|&(x, y)| (((x + dx) / s).floor() as i64, ((y + dy) / s).floor() as i64))
                .collect();
            best = best.min(boxes.len());
        }
    }
    best
}

/// Box-counting fit of a polyline: `(s, N(s))` pairs fitted on log-log axes.
/// The dimension estimate is `−slope`.
///
/// Requires at least four increasing scales whose extremes differ by a factor
/// of at least 8.
pub fn box_count_polyline(points: &[(f64, f64)], closed: bool, scales: &[f64]) -> Result<ScalingFit> {
    if scales.len() < 4
        || scales.windows(2).any(|w| !(w[0] < w[1]))
        || !(scales[0] > 0.0)
        || scales[scales.len() - 1] / scales[0] < 8.0
    {
        return Err(Error::InvalidParameter(format!(
            "box counting needs >= 4 increasing positive scales spanning a factor >= 8, got {scales:?}"
        )));
    }
    if points.is_empty() {
        return Err(Error::Degenerate("empty curve".into()));
    }
    let counts: Vec<(f64, f64)> = scales
        .iter()
        .map(|&s| (s, box_count(points, closed, s) as f64))
        .collect();
    if (counts[0].1 as usize) < scales.len() {
        return Err(Error::Degenerate(format!(
            "{} boxes at the finest scale for {} scales",
            counts[0].1,
            scales.len()
        )));
    }
    fit_scaling(&counts)
}

pub fn box_counting_dimension(front: &FrontCurve, scales: &[f64]) -> Result<ScalingFit> {
    box_count_polyline(&front.vertices, front.closed, scales)
}

/// `count` scales in geometric progression from `lo` to `hi`.
pub fn geometric_scales(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
