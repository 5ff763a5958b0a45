//! Inhomogeneous site percolation: samples, crossing events, the
//! characteristic length `L_ε(p)` and the gradient strip.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualEdge, FrontCurve};
use crate::lattice::{Region, RegionSpec, SitePos, DIRECTIONS};
use crate::rng::{mix64, site_uniform, u32_threshold};

/// Where a sample's configuration came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Bernoulli { seed: u64 },
    FromOccupancy { mode: String, seed: u64 },
    Constructed,
}

/// A finite region with an occupied/vacant status on each of its sites.
#[derive(Clone, Debug)]
pub struct PercolationSample {
    region: Arc<Region>,
    status: Vec<bool>,
    provenance: Provenance,
}

impl PercolationSample {
    /// `status[i]` is the status of `region.sites()[i]`; `true` is occupied.
    pub fn new(region: Arc<Region>, status: Vec<bool>, provenance: Provenance) -> Result<Self> {
        if status.len() != region.len() {
            return Err(Error::InvalidParameter(format!(
                "status has {} entries for a region of {} sites",
                status.len(),
                region.len()
            )));
        }
        Ok(PercolationSample {
            region,
            status,
            provenance,
        })
    }

    /// Deterministic sample with `occupied(z)` on every site.
    pub fn from_fn(region: Arc<Region>, occupied: impl Fn(SitePos) -> bool) -> Self {
        let status = region.sites().iter().map(|&z| occupied(z)).collect();
        PercolationSample {
            region,
            status,
            provenance: Provenance::Constructed,
        }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn region_arc(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn occupied_at(&self, i: usize) -> bool {
        self.status[i]
    }

    /// Status of `z`, or `None` outside the region.
    pub fn is_occupied(&self, z: SitePos) -> Option<bool> {
        self.region.index_of(z).map(|i| self.status[i])
    }

    pub fn occupied_count(&self) -> usize {
        self.status.iter().filter(|&&s| s).count()
    }
}

/// Independent Bernoulli sample: `z` is occupied with probability `param(z)`.
///
/// Each site's randomness is a keyed hash of `(seed, z)`, so the configuration
/// on a subregion does not depend on the region it is embedded in.
pub fn sample_bernoulli(
    param: impl Fn(SitePos) -> f64 + Sync,
    region: Arc<Region>,
    seed: u64,
) -> Result<PercolationSample> {
    let status = region
        .sites()
        .par_iter()
        .map(|&z| {
            let p = param(z);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "occupation probability {p} at {z} is outside [0, 1]"
                )));
            }
            Ok((site_uniform(seed, z) as u64) < u32_threshold(p))
        })
        .collect::<Result<Vec<bool>>>()?;
    PercolationSample::new(region, status, Provenance::Bernoulli { seed })
}

/// Inclusive axial box `[a1, a2] × [b1, b2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parallelogram {
    pub a1: i32,
    pub a2: i32,
    pub b1: i32,
    pub b2: i32,
}

impl Parallelogram {
    pub fn new(a1: i32, a2: i32, b1: i32, b2: i32) -> Self {
        Parallelogram { a1, a2, b1, b2 }
    }

    /// The rhombus `[0, n] × [0, n]`.
    pub fn rhombus(n: u32) -> Self {
        Parallelogram::new(0, n as i32, 0, n as i32)
    }

    pub fn width(&self) -> usize {
        (self.a2 - self.a1 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.b2 - self.b1 + 1) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Between the columns `a = a1` and `a = a2`.
    Horizontal,
    /// Between the rows `b = b1` and `b = b2`.
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Occupied,
    Vacant,
}

/// Reusable flood-fill buffers for crossings in boxes of varying size.
#[derive(Default)]
pub struct CrossingScratch {
    stamp: Vec<u32>,
    open: Vec<bool>,
    generation: u32,
    queue: Vec<u32>,
}

impl CrossingScratch {
    fn reset(&mut self, cells: usize) {
        if self.stamp.len() < cells {
            self.stamp = vec![0; cells];
            self.open = vec![false; cells];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
        self.queue.clear();
    }
}

/// Crossing of `open` cells of a `width × height` box, explored lazily:
/// `is_open(i, j)` is evaluated at most once per cell, and only for cells the
/// search actually reaches.
pub fn box_crossing(
    width: usize,
    height: usize,
    direction: Direction,
    scratch: &mut CrossingScratch,
    mut is_open: impl FnMut(usize, usize) -> bool,
) -> bool {
    if width == 0 || height == 0 {
        return false;
    }
    scratch.reset(width * height);
    let g = scratch.generation;
    let mut probe = |scratch: &mut CrossingScratch, i: usize, j: usize| -> bool {
        let c = i * height + j;
        if scratch.stamp[c] != g {
            scratch.stamp[c] = g;
            scratch.open[c] = is_open(i, j);
            if scratch.open[c] {
                scratch.queue.push(c as u32);
                return true;
            }
        }
        false
    };
    let start: Vec<(usize, usize)> = match direction {
        Direction::Horizontal => (0..height).map(|j| (0, j)).collect(),
        Direction::Vertical => (0..width).map(|i| (i, 0)).collect(),
    };
    for (i, j) in start {
        probe(scratch, i, j);
    }
    while let Some(c) = scratch.queue.pop() {
        let (i, j) = (c as usize / height, c as usize % height);
        let done = match direction {
            Direction::Horizontal => i + 1 == width,
            Direction::Vertical => j + 1 == height,
        };
        if done {
            return true;
        }
        for d in DIRECTIONS {
            let (ni, nj) = (i as i64 + d.a as i64, j as i64 + d.b as i64);
            if ni < 0 || nj < 0 || ni >= width as i64 || nj >= height as i64 {
                continue;
            }
            probe(scratch, ni as usize, nj as usize);
        }
    }
    false
}

/// Whether `box_` is crossed in `direction` by a path of `polarity` sites.
pub fn has_crossing(
    sample: &PercolationSample,
    box_: Parallelogram,
    direction: Direction,
    polarity: Polarity,
) -> Result<bool> {
    let region = sample.region();
    let mut index = Vec::with_capacity(box_.width() * box_.height());
    if box_.a1 > box_.a2 || box_.b1 > box_.b2 {
        return Err(Error::InvalidRegion(format!("empty parallelogram {box_:?}")));
    }
    for a in box_.a1..=box_.a2 {
        for b in box_.b1..=box_.b2 {
            match region.index_of(SitePos::new(a, b)) {
                Some(i) => index.push(i),
                None => {
                    return Err(Error::InvalidRegion(format!(
                        "parallelogram {box_:?} is not contained in the sample region"
                    )))
                }
            }
        }
    }
    let want = polarity == Polarity::Occupied;
    let h = box_.height();
    let mut scratch = CrossingScratch::default();
    Ok(box_crossing(box_.width(), h, direction, &mut scratch, |i, j| {
        sample.status[index[i * h + j]] == want
    }))
}

/// One mesh size of a characteristic-length search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub n: u32,
    pub crossings: u32,
    pub trials: u32,
    /// Upper confidence bound on the crossing probability.
    pub upper: f64,
}

/// Estimate of `L_ε(p)` with the crossing curve used to find it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharLengthEstimate {
    pub p: f64,
    pub epsilon: f64,
    /// `None` at `p = 1/2`, where crossing probabilities do not decay.
    pub length: Option<u32>,
    pub samples_per_size: u32,
    pub confidence: String,
    pub curve: Vec<CrossingPoint>,
}

/// Normal quantile of the one-sided 97.5% Wilson bound.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Largest box side considered by the estimator.
pub const MAX_BOX_SIDE: u32 = 1 << 14;

/// Wilson score upper bound for `k` successes in `m` trials.
pub fn wilson_upper(k: u32, m: u32, z: f64) -> f64 {
    let (k, m) = (k as f64, m as f64);
    let ph = k / m;
    let z2 = z * z;
    let center = ph + z2 / (2.0 * m);
    let spread = z * (ph * (1.0 - ph) / m + z2 / (4.0 * m * m)).sqrt();
    ((center + spread) / (1.0 + z2 / m)).min(1.0)
}

/// Box sides `round(1.25^i)`, deduplicated, up to `MAX_BOX_SIDE`.
pub fn size_mesh() -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let mut x = 1.0f64;
    while x <= MAX_BOX_SIDE as f64 {
        let n = x.round() as u32;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= 1.25;
    }
    out
}

fn sample_seed(seed: u64, mesh_index: usize, k: u32) -> u64 {
    mix64(mix64(seed ^ mesh_index as u64) ^ ((k as u64) << 20))
}

/// Monte Carlo probability that the rhombus `[0, n]²` is crossed
/// horizontally by the minority phase at imbalance `q = min(p, 1 − p)`.
///
/// Below 1/2 the minority phase is the occupied one; above, the vacant one, so
/// `p` and `1 − p` give identical results under the same seed.
pub fn minority_crossings(q: f64, n: u32, trials: u32, seed: u64, mesh_index: usize) -> u32 {
    let threshold = u32_threshold(q);
    let side = n as usize + 1;
    (0..trials)
        .into_par_iter()
        .map_init(CrossingScratch::default, |scratch, k| {
            let s = sample_seed(seed, mesh_index, k);
            box_crossing(side, side, Direction::Horizontal, scratch, |i, j| {
                (site_uniform(s, SitePos::new(i as i32, j as i32)) as u64) < threshold
            }) as u32
        })
        .sum()
}

/// `L_ε(p)`: the smallest mesh size whose upper confidence bound on the
/// crossing probability is at most `epsilon`.
///
/// Mesh indices are bracketed by doubling and then bisected, assuming the
/// crossing probability decreases with the box size.
pub fn estimate_characteristic_length(
    p: f64,
    epsilon: f64,
    samples_per_size: u32,
    seed: u64,
) -> Result<CharLengthEstimate> {
    if !(0.0..=1.0).contains(&p) || !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "characteristic length needs p in [0,1] and epsilon in (0,1), got ({p}, {epsilon})"
        )));
    }
    if samples_per_size == 0 {
        return Err(Error::InvalidParameter(
            "samples_per_size must be positive".into(),
        ));
    }
    let confidence = format!("one-sided Wilson bound, z = {WILSON_Z:.3}");
    if p == 0.5 {
        return Ok(CharLengthEstimate {
            p,
            epsilon,
            length: None,
            samples_per_size,
            confidence,
            curve: Vec::new(),
        });
    }
    let q = p.min(1.0 - p);
    let mesh = size_mesh();
    let mut seen: Vec<Option<CrossingPoint>> = vec![None; mesh.len()];
    let mut eval = |i: usize| -> bool {
        let point = seen[i].get_or_insert_with(|| {
            let k = minority_crossings(q, mesh[i], samples_per_size, seed, i);
            CrossingPoint {
                n: mesh[i],
                crossings: k,
                trials: samples_per_size,
                upper: wilson_upper(k, samples_per_size, WILSON_Z),
            }
        });
        point.upper <= epsilon
    };
    let (mut lo, mut hi) = (None::<usize>, 0usize);
    loop {
        if eval(hi) {
            break;
        }
        lo = Some(hi);
        if hi + 1 >= mesh.len() {
            return Err(Error::ResourceCap {
                what: "characteristic-length box side",
                requested: MAX_BOX_SIDE as u64 + 1,
                cap: MAX_BOX_SIDE as u64,
            });
        }
        hi = (2 * hi + 1).min(mesh.len() - 1);
    }
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if eval(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(CharLengthEstimate {
        p,
        epsilon,
        length: Some(mesh[hi]),
        samples_per_size,
        confidence,
        curve: seen.into_iter().flatten().collect(),
    })
}

/// Gradient strip `[0, ell] × [0, N]` with `p(y) = 1 − y/N`.
pub fn strip_gradient_sample(n: u32, ell: u32, seed: u64) -> Result<PercolationSample> {
    if n < 4 || ell < 1 {
        return Err(Error::InvalidParameter(format!(
            "strip requires N >= 4 and ell >= 1, got N = {n}, ell = {ell}"
        )));
    }
    let region = Arc::new(Region::build(RegionSpec::Strip {
        ell: ell as i32,
        height: n as i32,
    })?);
    let nf = n as f64;
    sample_bernoulli(move |z| 1.0 - z.b as f64 / nf, region, seed)
}

/// The interface of a gradient strip and its statistics.
#[derive(Clone, Debug)]
pub struct StripFront {
    pub curve: FrontCurve,
    /// Number of dual edges of the interface.
    pub length: usize,
    /// Largest `|h − N/2|` over interface edges, `h` the edge height in rows.
    pub max_deviation: f64,
    /// True iff the occupied cluster of the bottom and the vacant cluster of
    /// the top share a single spanning interface.
    pub unique: bool,
}

/// Strip geometry: `a ∈ [0, ell]`, `b ∈ [0, n]`, virtual occupied row at
/// `b = −1` and virtual vacant row at `b = n + 1`.
struct StripGrid<'a> {
    sample: &'a PercolationSample,
    ell: i32,
    n: i32,
}

impl StripGrid<'_> {
    fn cell(&self, z: SitePos) -> usize {
        (z.a * (self.n + 1) + z.b) as usize
    }

    fn inside(&self, z: SitePos) -> bool {
        z.a >= 0 && z.a <= self.ell && z.b >= 0 && z.b <= self.n
    }

    fn occupied(&self, z: SitePos) -> bool {
        self.sample.status[self.cell(z)]
    }

    /// Flood fill from the real row next to a virtual row, through sites
    /// satisfying `pass`.
    fn fill(&self, from_top: bool, pass: impl Fn(SitePos) -> bool) -> Vec<bool> {
        let mut mark = vec![false; ((self.ell + 1) * (self.n + 1)) as usize];
        let row = if from_top { self.n } else { 0 };
        let mut queue = VecDeque::new();
        for a in 0..=self.ell {
            let z = SitePos::new(a, row);
            if pass(z) {
                mark[self.cell(z)] = true;
                queue.push_back(z);
            }
        }
        while let Some(z) = queue.pop_front() {
            for w in z.neighbors() {
                if self.inside(w) && !mark[self.cell(w)] && pass(w) {
                    mark[self.cell(w)] = true;
                    queue.push_back(w);
                }
            }
        }
        mark
    }
}

/// Traces the interface between the bottom and the top phases of a strip.
///
/// `V` is the vacant cluster of the top row, `B` the component of the
/// complement of `V` containing the bottom row; the interface is the set of
/// `B`–`V` dual edges, walked from the left wall to the right wall with `B`
/// on the right.
pub fn strip_front(sample: &PercolationSample) -> Result<StripFront> {
    let (ell, n) = match *sample.region().spec() {
        RegionSpec::Strip { ell, height } => (ell, height),
        _ => return Err(Error::InvalidRegion("strip_front requires a strip sample".into())),
    };
    let g = StripGrid { sample, ell, n };
    let v = g.fill(true, |z| !g.occupied(z));
    if (0..=ell).any(|a| v[g.cell(SitePos::new(a, 0))]) {
        return Err(Error::NoInterface(
            "a vacant path joins the top of the strip to its bottom".into(),
        ));
    }
    let b = g.fill(false, |z| !v[g.cell(z)]);
    // -1: wall, 0: B (incl. virtual bottom row), 1: V (incl. virtual top row), 2: other
    let side = |z: SitePos| -> i8 {
        if z.a < 0 || z.a > ell {
            -1
        } else if z.b < 0 {
            0
        } else if z.b > n || v[g.cell(z)] {
            1
        } else if b[g.cell(z)] {
            0
        } else {
            2
        }
    };
    let b0 = (0..=n + 1)
        .find(|&bb| side(SitePos::new(0, bb)) == 1)
        .expect("the virtual top row is in V");
    let mut z = SitePos::new(0, b0 - 1);
    let mut k = 1usize;
    let mut edges = vec![DualEdge::new(z, k)];
    let mut vertices = Vec::new();
    let limit = 6 * ((ell + 3) as usize) * ((n + 3) as usize);
    loop {
        let w = z.neighbor(k);
        let kc = (k + 5) % 6;
        let c = z.neighbor(kc);
        match side(c) {
            -1 => {
                if c.a > ell {
                    break;
                }
                return Err(Error::Trace(format!(
                    "strip interface ran into the left wall at {z}"
                )));
            }
            0 => {
                vertices.push(triangle_centroid(z, w, c));
                let d = w - c;
                k = DIRECTIONS.iter().position(|&e| e == d).expect("adjacent sites");
                z = c;
            }
            _ => {
                vertices.push(triangle_centroid(z, w, c));
                k = kc;
            }
        }
        edges.push(DualEdge::new(z, k));
        if edges.len() > limit {
            return Err(Error::Trace("strip interface walk did not terminate".into()));
        }
    }
    let half = n as f64 / 2.0;
    let max_deviation = edges
        .iter()
        .map(|e| ((2 * e.inside.b + e.dir_vec().b + 1) as f64 / 2.0 - half).abs())
        .fold(0.0, f64::max);

    // second characterization: bottom occupied cluster O against the rest
    let o = g.fill(false, |z| g.occupied(z));
    let u = g.fill(true, |z| !o[g.cell(z)]);
    let o_side = |z: SitePos| -> i8 {
        if z.a < 0 || z.a > ell {
            -1
        } else if z.b < 0 {
            0
        } else if z.b > n {
            1
        } else if o[g.cell(z)] {
            0
        } else if u[g.cell(z)] {
            1
        } else {
            2
        }
    };
    let interface_set = |f: &dyn Fn(SitePos) -> i8| -> BTreeSet<DualEdge> {
        let mut set = BTreeSet::new();
        for a in 0..=ell {
            for bb in -1..=n {
                let z = SitePos::new(a, bb);
                if f(z) != 0 {
                    continue;
                }
                for k in 0..6 {
                    if f(z.neighbor(k)) == 1 {
                        set.insert(DualEdge::new(z, k));
                    }
                }
            }
        }
        set
    };
    let unique = interface_set(&side) == interface_set(&o_side);
    let length = edges.len();
    let radii = vertices.iter().map(|&(x, y)| (x * x + y * y).sqrt()).collect();
    Ok(StripFront {
        curve: FrontCurve {
            edges,
            vertices,
            radii,
            winding: 0,
            closed: false,
        },
        length,
        max_deviation,
        unique,
    })
}

pub(crate) fn triangle_centroid(z: SitePos, w: SitePos, c: SitePos) -> (f64, f64) {
    let (p, q, r) = (z.euclidean(), w.euclidean(), c.euclidean());
    ((p.0 + q.0 + r.0) / 3.0, (p.1 + q.1 + r.1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rhombus_region(n: i32) -> Arc<Region> {
        Arc::new(
            Region::build(RegionSpec::Parallelogram {
                a1: 0,
                a2: n,
                b1: 0,
                b2: n,
            })
            .unwrap(),
        )
    }

    #[test]
    fn bernoulli_extremes_and_fraction() {
        let region = rhombus_region(99);
        let all = sample_bernoulli(|_| 1.0, region.clone(), 1).unwrap();
        assert_eq!(all.occupied_count(), region.len());
        let none = sample_bernoulli(|_| 0.0, region.clone(), 1).unwrap();
        assert_eq!(none.occupied_count(), 0);
        let s = sample_bernoulli(|_| 0.3, region.clone(), 2).unwrap();
        let m = region.len() as f64;
        let frac = s.occupied_count() as f64 / m;
        assert!((frac - 0.3).abs() < 3.0 * (0.21 / m).sqrt(), "{frac}");
        assert!(sample_bernoulli(|_| 1.5, region, 1).is_err());
    }

    #[test]
    fn bernoulli_is_embedding_independent() {
        let small = Arc::new(Region::build(RegionSpec::Disk { r: 10.0 }).unwrap());
        let big = Arc::new(Region::build(RegionSpec::Disk { r: 30.0 }).unwrap());
        let f = |z: SitePos| (z.norm() / 40.0).min(1.0);
        let s1 = sample_bernoulli(f, small.clone(), 9).unwrap();
        let s2 = sample_bernoulli(f, big, 9).unwrap();
        for &z in small.sites() {
            assert_eq!(s1.is_occupied(z), s2.is_occupied(z));
        }
    }

    #[test]
    fn crossing_basics() {
        let region = rhombus_region(9);
        let full = PercolationSample::from_fn(region.clone(), |_| true);
        let box_ = Parallelogram::rhombus(9);
        assert!(has_crossing(&full, box_, Direction::Horizontal, Polarity::Occupied).unwrap());
        assert!(!has_crossing(&full, box_, Direction::Horizontal, Polarity::Vacant).unwrap());
        let row = PercolationSample::from_fn(region.clone(), |z| z.b == 4);
        assert!(has_crossing(&row, box_, Direction::Horizontal, Polarity::Occupied).unwrap());
        assert!(!has_crossing(&row, box_, Direction::Vertical, Polarity::Occupied).unwrap());
        assert!(has_crossing(
            &row,
            Parallelogram::new(0, 9, 4, 4),
            Direction::Vertical,
            Polarity::Occupied
        )
        .unwrap());
        assert!(has_crossing(
            &full,
            Parallelogram::new(0, 10, 0, 9),
            Direction::Horizontal,
            Polarity::Occupied
        )
        .is_err());
        // a diagonal (1,-1) chain crosses horizontally through six-neighbour adjacency
        let diag = PercolationSample::from_fn(region, |z| z.a + z.b == 9);
        assert!(has_crossing(&diag, box_, Direction::Horizontal, Polarity::Occupied).unwrap());
        assert!(has_crossing(&diag, box_, Direction::Vertical, Polarity::Occupied).unwrap());
    }

    #[test]
    fn duality_per_sample() {
        let region = rhombus_region(20);
        let box_ = Parallelogram::rhombus(20);
        for seed in 0..300 {
            let s = sample_bernoulli(|_| 0.5, region.clone(), seed).unwrap();
            let h = has_crossing(&s, box_, Direction::Horizontal, Polarity::Occupied).unwrap();
            let v = has_crossing(&s, box_, Direction::Vertical, Polarity::Vacant).unwrap();
            assert_ne!(h, v, "seed {seed}");
        }
    }

    #[test]
    fn lazy_crossing_agrees_with_materialized() {
        let n = 30u32;
        let region = rhombus_region(n as i32);
        for seed in 0..40 {
            let thr = u32_threshold(0.45);
            let s = PercolationSample::from_fn(region.clone(), |z| (site_uniform(seed, z) as u64) < thr);
            let direct = has_crossing(
                &s,
                Parallelogram::rhombus(n),
                Direction::Horizontal,
                Polarity::Occupied,
            )
            .unwrap();
            let mut scratch = CrossingScratch::default();
            let lazy = box_crossing(31, 31, Direction::Horizontal, &mut scratch, |i, j| {
                (site_uniform(seed, SitePos::new(i as i32, j as i32)) as u64) < thr
            });
            assert_eq!(direct, lazy);
        }
    }

    #[test]
    fn mesh_and_wilson() {
        let mesh = size_mesh();
        assert_eq!(&mesh[..8], &[1, 2, 3, 4, 5, 6, 7, 9]);
        assert!(mesh.windows(2).all(|w| w[0] < w[1]));
        assert!(wilson_upper(0, 1000, WILSON_Z) < 0.004);
        let u = wilson_upper(250, 1000, WILSON_Z);
        assert!(u > 0.25 && u < 0.29);
        assert!(wilson_upper(10, 10, WILSON_Z) > 1.0 - 1e-12);
    }

    #[test]
    fn characteristic_length_symmetry_and_small_p() {
        let a = estimate_characteristic_length(0.45, 0.25, 200, 3).unwrap();
        let b = estimate_characteristic_length(0.55, 0.25, 200, 3).unwrap();
        assert_eq!(a.length, b.length);
        assert_eq!(a.curve, b.curve);
        let small = estimate_characteristic_length(0.2, 0.25, 1000, 4).unwrap();
        assert!(small.length.unwrap() <= 16);
        assert!(estimate_characteristic_length(0.5, 0.25, 1000, 4)
            .unwrap()
            .length
            .is_none());
    }

    #[test]
    fn strip_rows() {
        let s = strip_gradient_sample(8, 50, 1).unwrap();
        for a in 0..=50 {
            assert_eq!(s.is_occupied(SitePos::new(a, 0)), Some(true));
            assert_eq!(s.is_occupied(SitePos::new(a, 8)), Some(false));
        }
        assert!(strip_gradient_sample(3, 5, 1).is_err());
    }

    #[test]
    fn trivial_strip_front() {
        let (n, ell) = (16, 40);
        let region = Arc::new(Region::build(RegionSpec::Strip { ell, height: n }).unwrap());
        let s = PercolationSample::from_fn(region, |z| z.b < n / 2);
        let f = strip_front(&s).unwrap();
        assert_eq!(f.length, 2 * ell as usize + 1);
        assert_eq!(f.max_deviation, 0.0);
        assert!(f.unique);
        assert!(!f.curve.closed);
        for e in &f.curve.edges {
            assert_eq!(s.is_occupied(e.inside), Some(true));
            assert_eq!(s.is_occupied(e.outside()), Some(false));
        }
    }

    #[test]
    fn strip_front_detects_second_interface() {
        let (n, ell) = (16, 30);
        let region = Arc::new(Region::build(RegionSpec::Strip { ell, height: n }).unwrap());
        // occupied bottom, vacant band, occupied band, vacant top
        let s = PercolationSample::from_fn(region.clone(), |z| z.b < 4 || (z.b >= 8 && z.b < 10));
        let f = strip_front(&s).unwrap();
        assert!(!f.unique);
        assert_eq!(f.max_deviation, 2.0);
        let open = PercolationSample::from_fn(region, |z| z.b == 0 && z.a != 3);
        assert!(matches!(strip_front(&open), Err(Error::NoInterface(_))));
    }
}
