//! Snapshot rendering to binary PPM.
//!
//! Files are `P6` pixmaps with the header `P6\n<width> <height>\n255\n`
//! followed by RGB triples row by row, top row first. Each pixel shows the
//! site nearest to its center in the Euclidean embedding, so sites appear as
//! hexagons: occupied dark, vacant light, outside the region white. A front
//! overlay is drawn in red along its dual-vertex polyline.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::FrontCurve;
use crate::lattice::{Region, RegionSpec, SitePos, SQRT3};
use crate::percolation::PercolationSample;
use crate::sampler::{occupancy_to_percolation, OccupancyField};

pub const OCCUPIED: [u8; 3] = [32, 32, 48];
pub const VACANT: [u8; 3] = [236, 236, 224];
pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const FRONT: [u8; 3] = [220, 20, 20];

/// Largest image side produced when the scale is chosen automatically.
pub const MAX_SIDE: usize = 2048;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        let rgb = fill.iter().copied().cycle().take(3 * width * height).collect();
        Image { width, height, rgb }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = 3 * (y as usize * self.width + x as usize);
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    /// Bresenham segment.
    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e))
    }
}

/// Euclidean extent `(x_min, x_max, y_min, y_max)` of a region's sites.
fn extent(region: &Region) -> (f64, f64, f64, f64) {
    region.sites().iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(x0, x1, y0, y1), z| {
            let (x, y) = z.euclidean();
            (x0.min(x), x1.max(x), y0.min(y), y1.max(y))
        },
    )
}

/// Renders a sample at `scale` pixels per lattice unit, or at the largest
/// scale (at most 4) keeping both sides within `MAX_SIDE` when `scale` is
/// `None`.
pub fn render_sample(
    sample: &PercolationSample,
    front: Option<&FrontCurve>,
    scale: Option<f64>,
) -> Result<Image> {
    let region = sample.region();
    if region.is_empty() {
        return Err(Error::Degenerate("cannot render an empty region".into()));
    }
    let (x0, x1, y0, y1) = extent(region);
    let (x0, x1, y0, y1) = (x0 - 1.0, x1 + 1.0, y0 - SQRT3 / 2.0, y1 + SQRT3 / 2.0);
    let s = match scale {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(Error::InvalidParameter(format!(
                "render scale {s} must be positive"
            )))
        }
        None => (MAX_SIDE as f64 / (x1 - x0).max(y1 - y0)).min(4.0),
    };
    let width = ((x1 - x0) * s).ceil().max(1.0) as usize;
    let height = ((y1 - y0) * s).ceil().max(1.0) as usize;
    let mut img = Image::new(width, height, BACKGROUND);
    for py in 0..height {
        let y = y1 - (py as f64 + 0.5) / s;
        for px in 0..width {
            let x = x0 + (px as f64 + 0.5) / s;
            if let Some(occ) = sample.is_occupied(SitePos::nearest(x, y)) {
                img.put(px as i64, py as i64, if occ { OCCUPIED } else { VACANT });
            }
        }
    }
    if let Some(front) = front {
        let to_px = |(x, y): (f64, f64)| (((x - x0) * s).floor() as i64, ((y1 - y) * s).floor() as i64);
        let pts = &front.vertices;
        let segs = if front.closed {
            pts.len()
        } else {
            pts.len().saturating_sub(1)
        };
        for i in 0..segs {
            img.line(to_px(pts[i]), to_px(pts[(i + 1) % pts.len()]), FRONT);
        }
    }
    Ok(img)
}

/// Renders an occupancy field over its support box, grown by `margin` sites.
pub fn render_field(
    field: &OccupancyField,
    front: Option<&FrontCurve>,
    margin: i32,
    scale: Option<f64>,
) -> Result<Image> {
    let (a1, a2, b1, b2) = field.support_box().unwrap_or((0, 0, 0, 0));
    let region = Region::build(RegionSpec::Parallelogram {
        a1: a1.min(0) - margin,
        a2: a2.max(0) + margin,
        b1: b1.min(0) - margin,
        b2: b2.max(0) + margin,
    })?;
    render_sample(&occupancy_to_percolation(field, region.into()), front, scale)
}
