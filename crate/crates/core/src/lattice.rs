//! Triangular-lattice geometry.
//!
//! Sites are stored in axial integer coordinates `(a, b)` for the point
//! `a + b·e^{iπ/3}` of the complex plane. Every computation in the crate stays
//! in these coordinates; the Euclidean embedding `(a + b/2, b·√3/2)` is only
//! used for norms, box counting and rendering.
//!
//! The square-lattice picture (unit steps plus one family of diagonals) is the
//! same graph written in the coordinates `(a, b)` directly, which is why no
//! separate embedding is implemented.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Axial coordinates of a triangular-lattice site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SitePos {
    pub a: i32,
    pub b: i32,
}

/// The six unit steps in counterclockwise order starting at angle 0.
pub const DIRECTIONS: [SitePos; 6] = [
    SitePos::new(1, 0),
    SitePos::new(0, 1),
    SitePos::new(-1, 1),
    SitePos::new(-1, 0),
    SitePos::new(0, -1),
    SitePos::new(1, -1),
];

impl SitePos {
    pub const ORIGIN: SitePos = SitePos::new(0, 0);

    pub const fn new(a: i32, b: i32) -> Self {
        SitePos { a, b }
    }

    /// Squared Euclidean norm, `a² + ab + b²`.
    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.a as i64, self.b as i64);
        a * a + a * b + b * b
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn neighbor(self, k: usize) -> SitePos {
        self + DIRECTIONS[k % 6]
    }

    /// The six neighbors in the fixed counterclockwise order of [`DIRECTIONS`].
    pub fn neighbors(self) -> [SitePos; 6] {
        DIRECTIONS.map(|d| self + d)
    }

    /// Rotation by +60° about the origin.
    pub fn rotate_ccw(self) -> SitePos {
        SitePos::new(-self.b, self.a + self.b)
    }

    /// Rotation by −60° about the origin.
    pub fn rotate_cw(self) -> SitePos {
        SitePos::new(self.a + self.b, -self.a)
    }

    /// Reflection across the real axis.
    pub fn conjugate(self) -> SitePos {
        SitePos::new(self.a + self.b, -self.b)
    }

    /// The 12 images of `self` under the dihedral symmetry group of the lattice.
    pub fn dihedral_images(self) -> [SitePos; 12] {
        let mut out = [SitePos::ORIGIN; 12];
        let mut z = self;
        for k in 0..6 {
            out[k] = z;
            out[k + 6] = z.conjugate();
            z = z.rotate_ccw();
        }
        out
    }

    /// Position in the Euclidean plane.
    pub fn euclidean(self) -> (f64, f64) {
        (self.a as f64 + 0.5 * self.b as f64, 0.5 * SQRT3 * self.b as f64)
    }

    /// Nearest lattice site to a Euclidean point (cube rounding).
    pub fn nearest(x: f64, y: f64) -> SitePos {
        let fb = 2.0 * y / SQRT3;
        let fa = x - 0.5 * fb;
        let fc = -fa - fb;
        let (mut ra, mut rb, rc) = (fa.round(), fb.round(), fc.round());
        let (da, db, dc) = ((ra - fa).abs(), (rb - fb).abs(), (rc - fc).abs());
        if da > db && da > dc {
            ra = -rb - rc;
        } else if db > dc {
            rb = -ra - rc;
        }
        SitePos::new(ra as i32, rb as i32)
    }
}

impl std::ops::Add for SitePos {
    type Output = SitePos;
    fn add(self, rhs: SitePos) -> SitePos {
        SitePos::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl std::ops::Sub for SitePos {
    type Output = SitePos;
    fn sub(self, rhs: SitePos) -> SitePos {
        SitePos::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl std::ops::Neg for SitePos {
    type Output = SitePos;
    fn neg(self) -> SitePos {
        SitePos::new(-self.a, -self.b)
    }
}

impl fmt::Display for SitePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

pub fn neighbors(z: SitePos) -> [SitePos; 6] {
    z.neighbors()
}

pub fn norm(z: SitePos) -> f64 {
    z.norm()
}

/// Region descriptor, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// Sites with `a1 ≤ a ≤ a2` and `b1 ≤ b ≤ b2`.
    Parallelogram { a1: i32, a2: i32, b1: i32, b2: i32 },
    /// Sites with norm at most `r`.
    Disk { r: f64 },
    /// Sites with `r_inner < norm ≤ r_outer`.
    Annulus { r_inner: f64, r_outer: f64 },
    /// The gradient strip `[0, ell] × [0, height]`.
    Strip { ell: i32, height: i32 },
    /// Union of other regions.
    Union { parts: Vec<RegionSpec> },
}

// Slack on radius comparisons so that radii computed as square roots of
// integers keep the sites they were meant to contain.
const RADIUS_SLACK: f64 = 1e-9;

fn within(norm_sq: i64, r: f64) -> bool {
    (norm_sq as f64) <= r * r + RADIUS_SLACK * (1.0 + r * r)
}

/// A finite set of sites with constant-time membership and a deterministic,
/// lexicographic enumeration order.
#[derive(Clone, Debug)]
pub struct Region {
    spec: RegionSpec,
    sites: Vec<SitePos>,
    a_min: i32,
    b_min: i32,
    width: usize,
    height: usize,
    index: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl Region {
    pub fn build(spec: RegionSpec) -> Result<Region> {
        if let RegionSpec::Union { parts } = &spec {
            let mut sites = Vec::new();
            for part in parts {
                sites.extend_from_slice(Region::build(part.clone())?.sites());
            }
            sites.sort_unstable();
            sites.dedup();
            return Ok(Region::from_sorted(spec, sites));
        }
        let (a_min, a_max, b_min, b_max) = match spec {
            RegionSpec::Parallelogram { a1, a2, b1, b2 } => {
                if a1 > a2 || b1 > b2 {
                    return Err(Error::InvalidRegion(format!(
                        "parallelogram [{a1},{a2}]x[{b1},{b2}] is empty"
                    )));
                }
                (a1, a2, b1, b2)
            }
            RegionSpec::Strip { ell, height } => {
                if ell < 0 || height < 0 {
                    return Err(Error::InvalidRegion(format!(
                        "strip dimensions must be non-negative, got {ell}x{height}"
                    )));
                }
                (0, ell, 0, height)
            }
            RegionSpec::Disk { r } => {
                if !(r >= 0.0) || !r.is_finite() {
                    return Err(Error::InvalidRegion(format!("disk radius {r} is invalid")));
                }
                let m = (2.0 * r / SQRT3).ceil() as i32 + 1;
                (-m, m, -m, m)
            }
            RegionSpec::Annulus { r_inner, r_outer } => {
                if !(r_inner >= 0.0) || !r_outer.is_finite() {
                    return Err(Error::InvalidRegion(format!(
                        "annulus radii ({r_inner}, {r_outer}) are invalid"
                    )));
                }
                if r_inner >= r_outer {
                    return Err(Error::InvalidRegion(format!(
                        "annulus requires r < r', got ({r_inner}, {r_outer})"
                    )));
                }
                let m = (2.0 * r_outer / SQRT3).ceil() as i32 + 1;
                (-m, m, -m, m)
            }
            RegionSpec::Union { .. } => unreachable!("unions are built above"),
        };
        let keep = |z: SitePos| -> bool {
            match spec {
                RegionSpec::Parallelogram { .. } | RegionSpec::Strip { .. } | RegionSpec::Union { .. } => {
                    true
                }
                RegionSpec::Disk { r } => within(z.norm_sq(), r),
                RegionSpec::Annulus { r_inner, r_outer } => {
                    within(z.norm_sq(), r_outer) && !within(z.norm_sq(), r_inner)
                }
            }
        };
        let mut sites = Vec::new();
        for a in a_min..=a_max {
            for b in b_min..=b_max {
                let z = SitePos::new(a, b);
                if keep(z) {
                    sites.push(z);
                }
            }
        }
        Ok(Region::from_sorted(spec, sites))
    }

    fn from_sorted(spec: RegionSpec, sites: Vec<SitePos>) -> Region {
        let (a_min, a_max, b_min, b_max) = sites
            .iter()
            .fold((i32::MAX, i32::MIN, i32::MAX, i32::MIN), |(a0, a1, b0, b1), z| {
                (a0.min(z.a), a1.max(z.a), b0.min(z.b), b1.max(z.b))
            });
        let (width, height) = if sites.is_empty() {
            (0, 0)
        } else {
            ((a_max - a_min + 1) as usize, (b_max - b_min + 1) as usize)
        };
        let mut index = vec![ABSENT; width * height];
        for (i, z) in sites.iter().enumerate() {
            index[(z.a - a_min) as usize * height + (z.b - b_min) as usize] = i as u32;
        }
        Region {
            spec,
            sites,
            a_min,
            b_min,
            width,
            height,
            index,
        }
    }

    pub fn spec(&self) -> &RegionSpec {
        &self.spec
    }

    /// Sites in lexicographic `(a, b)` order.
    pub fn sites(&self) -> &[SitePos] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index_of(&self, z: SitePos) -> Option<usize> {
        let da = z.a.wrapping_sub(self.a_min);
        let db = z.b.wrapping_sub(self.b_min);
        if da < 0 || db < 0 || da as usize >= self.width || db as usize >= self.height {
            return None;
        }
        match self.index[da as usize * self.height + db as usize] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, z: SitePos) -> bool {
        self.index_of(z).is_some()
    }

    /// Indices of the in-region neighbors of the site with index `i`.
    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let z = self.sites[i];
        DIRECTIONS.iter().filter_map(move |&d| self.index_of(z + d))
    }

    /// True if some neighbor of site `i` lies outside the region.
    pub fn is_boundary(&self, i: usize) -> bool {
        let z = self.sites[i];
        z.neighbors().iter().any(|&w| !self.contains(w))
    }

    /// Inclusive axial bounding box `(a_min, a_max, b_min, b_max)`, or `None`
    /// for an empty region.
    pub fn bounding_box(&self) -> Option<(i32, i32, i32, i32)> {
        if self.sites.is_empty() {
            None
        } else {
            Some((
                self.a_min,
                self.a_min + self.width as i32 - 1,
                self.b_min,
                self.b_min + self.height as i32 - 1,
            ))
        }
    }

    /// Largest site norm in the region.
    pub fn max_norm(&self) -> f64 {
        self.sites
            .iter()
            .map(|z| z.norm_sq())
            .max()
            .map_or(0.0, |m| (m as f64).sqrt())
    }
}

pub fn build_region(spec: RegionSpec) -> Result<Region> {
    Region::build(spec)
}
