//! Binary grid format shared by occupancy fields and percolation samples.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "DFGRID1\n"
//! header_len   u32
//! header       JSON, header_len bytes
//! run_count    u32
//! runs         run_count × (value u32, length u32)
//! ```
//!
//! The header records what the grid is (`kind`), the engine or provenance and
//! the parameters and seed. The runs encode one value per site in
//! lexicographic `(a, b)` order: over the inclusive support box for an
//! occupancy field (particle counts), over the region's sites for a
//! percolation sample (1 occupied, 0 vacant).

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, RegionSpec, SitePos};
use crate::percolation::{PercolationSample, Provenance};
use crate::sampler::{EngineMode, OccupancyField};

pub const MAGIC: &[u8; 8] = b"DFGRID1\n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridHeader {
    Occupancy {
        mode: EngineMode,
        n: u64,
        mu: f64,
        t: u32,
        seed: u64,
        arrivals: Vec<u64>,
        /// `[a1, a2, b1, b2]`, absent for an empty field.
        support: Option<[i32; 4]>,
    },
    Percolation {
        region: RegionSpec,
        provenance: Provenance,
    },
}

fn rle(values: impl Iterator<Item = u32>) -> Vec<(u32, u32)> {
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for v in values {
        match runs.last_mut() {
            Some((last, len)) if *last == v && *len < u32::MAX => *len += 1,
            _ => runs.push((v, 1)),
        }
    }
    runs
}

fn write_grid<W: Write>(mut out: W, header: &GridHeader, runs: &[(u32, u32)]) -> std::io::Result<()> {
    let json = serde_json::to_vec(header).expect("headers always serialize");
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    out.write_all(&(runs.len() as u32).to_le_bytes())?;
    for &(v, n) in runs {
        out.write_all(&v.to_le_bytes())?;
        out.write_all(&n.to_le_bytes())?;
    }
    out.flush()
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated grid: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

/// Reads the header and the expanded per-site values.
pub fn read_grid<R: Read>(mut input: R) -> Result<(GridHeader, Vec<u32>)> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Format("not a grid file (bad magic)".into()));
    }
    let len = read_u32(&mut input)? as usize;
    let mut json = vec![0u8; len];
    input
        .read_exact(&mut json)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let header: GridHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let runs = read_u32(&mut input)?;
    let mut values = Vec::new();
    for _ in 0..runs {
        let v = read_u32(&mut input)?;
        let n = read_u32(&mut input)?;
        values.extend(std::iter::repeat_n(v, n as usize));
    }
    Ok((header, values))
}

pub fn write_occupancy<W: Write>(field: &OccupancyField, out: W) -> std::io::Result<()> {
    let support = field.support_box();
    let values: Box<dyn Iterator<Item = u32>> = match support {
        None => Box::new(std::iter::empty()),
        Some((a1, a2, b1, b2)) => {
            Box::new((a1..=a2).flat_map(move |a| (b1..=b2).map(move |b| field.get(SitePos::new(a, b)))))
        }
    };
    let header = GridHeader::Occupancy {
        mode: field.mode,
        n: field.n,
        mu: field.mu,
        t: field.t,
        seed: field.seed,
        arrivals: field.arrivals.clone(),
        support: support.map(|(a1, a2, b1, b2)| [a1, a2, b1, b2]),
    };
    write_grid(out, &header, &rle(values))
}

pub fn read_occupancy<R: Read>(input: R) -> Result<OccupancyField> {
    let (header, values) = read_grid(input)?;
    let GridHeader::Occupancy {
        mode,
        n,
        mu,
        t,
        seed,
        arrivals,
        support,
    } = header
    else {
        return Err(Error::Format(
            "grid holds a percolation sample, not an occupancy field".into(),
        ));
    };
    let mut pairs = Vec::new();
    if let Some([a1, a2, b1, b2]) = support {
        if a1 > a2 || b1 > b2 {
            return Err(Error::Format(format!("bad support box {support:?}")));
        }
        let h = (b2 - b1 + 1) as usize;
        let expected = (a2 - a1 + 1) as usize * h;
        if values.len() != expected {
            return Err(Error::Format(format!(
                "grid has {} values for a {expected}-site box",
                values.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if v > 0 {
                pairs.push((SitePos::new(a1 + (k / h) as i32, b1 + (k % h) as i32), v));
            }
        }
    } else if !values.is_empty() {
        return Err(Error::Format("values present without a support box".into()));
    }
    Ok(OccupancyField::from_counts(mode, n, mu, t, seed, arrivals, pairs))
}

pub fn write_percolation<W: Write>(sample: &PercolationSample, out: W) -> std::io::Result<()> {
    let header = GridHeader::Percolation {
        region: sample.region().spec().clone(),
        provenance: sample.provenance().clone(),
    };
    write_grid(out, &header, &rle(sample.status().iter().map(|&s| s as u32)))
}

pub fn read_percolation<R: Read>(input: R) -> Result<PercolationSample> {
    let (header, values) = read_grid(input)?;
    let GridHeader::Percolation { region, provenance } = header else {
        return Err(Error::Format(
            "grid holds an occupancy field, not a percolation sample".into(),
        ));
    };
    let region = Arc::new(Region::build(region)?);
    if values.iter().any(|&v| v > 1) {
        return Err(Error::Format("percolation status values must be 0 or 1".into()));
    }
    PercolationSample::new(region, values.into_iter().map(|v| v == 1).collect(), provenance)
        .map_err(|e| Error::Format(e.to_string()))
}
