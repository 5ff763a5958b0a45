//! Experiment runners. Each returns one row per (time or parameter, replica)
//! in replica order, so outputs do not depend on scheduling.
//!
//! CSV columns per experiment are the field names of the row types below,
//! in declaration order.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    box_counting_dimension, classify_phase, extract_front, front_edges_in, front_statistics,
    geometric_scales, two_arm_edges, FrontCurve, Phase,
};
use crate::grid::write_occupancy;
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::render::{render_sample, Image};
use crate::lattice::{Region, RegionSpec};
use crate::occupation::{critical_radius, source_critical_radius};
use crate::percolation::{
    estimate_characteristic_length, strip_front, strip_gradient_sample, PercolationSample,
};
use crate::rng::replica_seed;
use crate::sampler::{
    occupancy_to_percolation, sample_poisson_with, simulate_particles, simulate_source, EngineMode,
    OccupancyField, PoissonIntensity,
};
use crate::walk_kernel::LCLT_PREFACTOR;

/// `ε` used for the window `w = t^{2/7+ε}` of the two-arm check.
pub const TWO_ARM_EPS: f64 = 0.05;

/// Poisson-field samples cover the disk where the profile exceeds this value.
pub const POISSON_REGION_PROFILE: f64 = 0.02;

/// `t^{2/7} · √t · (t^{2/7})^{−1/4}`: window width times circumference
/// times the two-arm probability at the window scale. Equals `t^{5/7}`.
pub fn expected_length_decomposition(t: f64) -> f64 {
    let w = t.powf(2.0 / 7.0);
    w * t.sqrt() * w.powf(-0.25)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Radius of the Poisson-field sampling disk for `(n, t)`.
pub fn poisson_region_radius(n: f64, t: f64) -> f64 {
    let m = -(1.0 - POISSON_REGION_PROFILE).ln();
    let arg = n * LCLT_PREFACTOR / (t * m);
    (t * arg.ln().max(0.0)).sqrt() + 2.0
}

/// Parallelogram around the occupied sites and the origin, grown by `margin`.
pub fn box_region(field: &OccupancyField, margin: i32) -> Result<Region> {
    let (a1, a2, b1, b2) = field.support_box().unwrap_or((0, 0, 0, 0));
    Region::build(RegionSpec::Parallelogram {
        a1: a1.min(0) - margin,
        a2: a2.max(0) + margin,
        b1: b1.min(0) - margin,
        b2: b2.max(0) + margin,
    })
}

/// Fixed-`n` dense-phase sample on the given engine.
pub struct DenseSampler {
    n: u64,
    t: u32,
    engine: EngineMode,
    intensity: Option<PoissonIntensity>,
    region: Option<Arc<Region>>,
}

impl DenseSampler {
    pub fn new(n: u64, t: u32, engine: EngineMode, kernel: crate::sampler::KernelMode) -> Result<Self> {
        match engine {
            EngineMode::PoissonField => {
                let r = poisson_region_radius(n as f64, t as f64);
                Ok(DenseSampler {
                    n,
                    t,
                    engine,
                    intensity: Some(PoissonIntensity::new(n, t, kernel)?),
                    region: Some(Arc::new(Region::build(RegionSpec::Disk { r })?)),
                })
            }
            EngineMode::ExactN => Ok(DenseSampler {
                n,
                t,
                engine,
                intensity: None,
                region: None,
            }),
            EngineMode::Source => Err(Error::InvalidParameter(
                "the dense sampler runs on the poisson-field or exact-n engine".into(),
            )),
        }
    }

    pub fn sample(&self, seed: u64) -> Result<(OccupancyField, PercolationSample)> {
        match self.engine {
            EngineMode::PoissonField => {
                let region = self.region.clone().expect("set for poisson-field");
                let field = sample_poisson_with(self.intensity.as_ref().expect("set"), &region, seed);
                let sample = occupancy_to_percolation(&field, region);
                Ok((field, sample))
            }
            _ => {
                let field = simulate_particles(self.n, &[self.t], seed)?.remove(0);
                let region = Arc::new(box_region(&field, 2)?);
                let sample = occupancy_to_percolation(&field, region);
                Ok((field, sample))
            }
        }
    }
}

/// Statistics of one radial front, or the reason it could not be extracted.
#[derive(Clone, Debug)]
pub struct FrontAnalysis {
    pub front: Option<FrontCurve>,
    pub length: Option<usize>,
    pub max_in: Option<f64>,
    pub max_out: Option<f64>,
    pub mean_radius: Option<f64>,
    /// Two-arm edge set in the mid annulus equals the front's edges there.
    pub unique: Option<bool>,
    pub dimension: Option<f64>,
    pub error: Option<String>,
}

/// Mid annulus and arm targets `(mid, inner_target, outer_target)` around
/// `r_star` at window `w = t^{2/7+TWO_ARM_EPS}`, or `None` if the inner target
/// would be negative.
pub fn two_arm_annuli(r_star: f64, t: f64) -> Option<((f64, f64), f64, f64)> {
    let w = t.powf(2.0 / 7.0 + TWO_ARM_EPS);
    let inner = r_star - 2.0 * w;
    (inner >= 0.0).then_some(((r_star - w, r_star + w), inner, r_star + 2.0 * w))
}

/// Two-arm edges in the mid annulus versus front edges there.
pub fn two_arm_agreement(
    sample: &PercolationSample,
    front: &FrontCurve,
    r_star: f64,
    t: f64,
) -> Option<bool> {
    let (mid, inner, outer) = two_arm_annuli(r_star, t)?;
    let arms = two_arm_edges(sample, mid, inner, outer).ok()?;
    Some(arms == front_edges_in(front, mid))
}

/// Box-counting dimension over scales from `t^{2/7}/8` to `t^{2/7}`.
pub fn front_dimension(front: &FrontCurve, t: f64) -> Option<f64> {
    let hi = t.powf(2.0 / 7.0);
    let fit = box_counting_dimension(front, &geometric_scales(hi / 8.0, hi, 5)).ok()?;
    Some(-fit.slope)
}

pub fn analyse_front(
    sample: &PercolationSample,
    r_star: f64,
    t: f64,
    inner_r: f64,
    two_arm: bool,
) -> FrontAnalysis {
    match extract_front(sample, inner_r, f64::INFINITY) {
        Ok(front) => {
            let stats = front_statistics(&front, r_star);
            FrontAnalysis {
                length: Some(stats.length),
                max_in: Some(stats.max_inward),
                max_out: Some(stats.max_outward),
                mean_radius: Some(stats.mean_radius),
                unique: if two_arm {
                    two_arm_agreement(sample, &front, r_star, t)
                } else {
                    None
                },
                dimension: front_dimension(&front, t),
                front: Some(front),
                error: None,
            }
        }
        Err(e) => FrontAnalysis {
            front: None,
            length: None,
            max_in: None,
            max_out: None,
            mean_radius: None,
            unique: None,
            dimension: None,
            error: Some(e.to_string()),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub seed: u64,
    #[serde(rename = "L")]
    pub length: Option<usize>,
    pub max_in: Option<f64>,
    pub max_out: Option<f64>,
    pub r_star: f64,
    pub unique_flag: Option<bool>,
    pub t: u32,
    pub n: u64,
    pub replica: u32,
    pub mean_radius: Option<f64>,
    pub dimension: Option<f64>,
    pub error: Option<String>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub replica: u32,
    pub t: u32,
    pub n: u64,
    pub phase: Phase,
    pub max_diameter: f64,
    pub threshold: f64,
    pub origin_diameter: Option<f64>,
    pub cluster_count: usize,
    pub r_star: Option<f64>,
    #[serde(rename = "L")]
    pub length: Option<usize>,
    pub max_in: Option<f64>,
    pub max_out: Option<f64>,
    pub error: Option<String>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiluteRow {
    pub seed: u64,
    pub replica: u32,
    pub t: u32,
    pub n: u64,
    pub phase: Phase,
    pub max_diameter: f64,
    pub threshold: f64,
    pub cluster_count: usize,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripRow {
    pub seed: u64,
    pub replica: u32,
    #[serde(rename = "N")]
    pub height: u32,
    pub ell: u32,
    #[serde(rename = "L")]
    pub length: Option<usize>,
    pub max_deviation: Option<f64>,
    pub unique_flag: Option<bool>,
    pub error: Option<String>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharLengthRow {
    pub seed: u64,
    pub replica: u32,
    pub p: f64,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub length: Option<u32>,
    pub samples_per_size: u32,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub seed: u64,
    pub replica: u32,
    pub t: u32,
    pub mu: f64,
    pub particles: u64,
    pub r_star: f64,
    #[serde(rename = "L")]
    pub length: Option<usize>,
    pub max_in: Option<f64>,
    pub max_out: Option<f64>,
    pub mean_radius: Option<f64>,
    pub mean_radius_over_sqrt_t: Option<f64>,
    pub error: Option<String>,
    pub config_hash: String,
}

/// Optional snapshot sink: `(name, image)` pairs rendered by a runner.
pub type Snapshots = Vec<(String, Image)>;

fn replicas(cfg: &ExperimentConfig) -> Vec<(u32, u64)> {
    (0..cfg.replicas)
        .map(|k| (k, replica_seed(cfg.seed, k as u64)))
        .collect()
}

fn dense_n(cfg: &ExperimentConfig, t: u32) -> u64 {
    cfg.scaled_n()
        .unwrap_or_else(|| (t as f64 / cfg.lambda.unwrap_or(0.25)).round() as u64)
}

/// Dense-phase fronts for every time and replica.
pub fn run_dense_front(cfg: &ExperimentConfig) -> Result<(Vec<FrontRow>, Snapshots)> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut images = Vec::new();
    for t in cfg.scaled_times() {
        let n = dense_n(cfg, t);
        let r_star = critical_radius(n as f64, t as f64)
            .ok_or_else(|| Error::Config(format!("t = {t} is past the dislocation time for n = {n}")))?;
        let sampler = DenseSampler::new(n, t, cfg.engine, cfg.kernel)?;
        let inner_r = (t as f64).powf(cfg.inner_r_exponent);
        let out: Vec<(FrontRow, Option<Image>)> = replicas(cfg)
            .into_par_iter()
            .map(|(k, seed)| -> Result<_> {
                let (_, sample) = sampler.sample(seed)?;
                let a = analyse_front(&sample, r_star, t as f64, inner_r, true);
                let img = if cfg.render && k == 0 {
                    Some(render_sample(&sample, a.front.as_ref(), None)?)
                } else {
                    None
                };
                Ok((
                    FrontRow {
                        seed,
                        length: a.length,
                        max_in: a.max_in,
                        max_out: a.max_out,
                        r_star,
                        unique_flag: a.unique,
                        t,
                        n,
                        replica: k,
                        mean_radius: a.mean_radius,
                        dimension: a.dimension,
                        error: a.error,
                        config_hash: hash.clone(),
                    },
                    img,
                ))
            })
            .collect::<Result<_>>()?;
        for (row, img) in out {
            if let Some(img) = img {
                images.push((format!("front_t{t}.ppm"), img));
            }
            rows.push(row);
        }
    }
    Ok((rows, images))
}

/// Exact-`n` evolution observed at each time: phase, clusters and, before the
/// dislocation time, the front.
pub fn run_regime_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRow>, Snapshots)> {
    cfg.validate()?;
    let hash = cfg.hash();
    let n = cfg.scaled_n().expect("validated");
    let times = cfg.scaled_times();
    let per_replica: Vec<Vec<(SweepRow, Option<Image>)>> = replicas(cfg)
        .into_par_iter()
        .map(|(k, seed)| -> Result<_> {
            let fields = simulate_particles(n, &times, seed)?;
            let mut out = Vec::with_capacity(fields.len());
            for field in fields {
                let t = field.t;
                let region = Arc::new(box_region(&field, 2)?);
                let sample = occupancy_to_percolation(&field, region);
                let phase = classify_phase(n as f64, &sample, cfg.c)?;
                let r_star = critical_radius(n as f64, t as f64);
                let a = r_star.map(|r| {
                    analyse_front(&sample, r, t as f64, (t as f64).powf(cfg.inner_r_exponent), false)
                });
                let img = if cfg.render && k == 0 {
                    Some(render_sample(
                        &sample,
                        a.as_ref().and_then(|a| a.front.as_ref()),
                        None,
                    )?)
                } else {
                    None
                };
                out.push((
                    SweepRow {
                        seed,
                        replica: k,
                        t,
                        n,
                        phase: phase.phase,
                        max_diameter: phase.max_diameter,
                        threshold: phase.threshold,
                        origin_diameter: phase.origin_diameter,
                        cluster_count: phase.cluster_count,
                        r_star,
                        length: a.as_ref().and_then(|a| a.length),
                        max_in: a.as_ref().and_then(|a| a.max_in),
                        max_out: a.as_ref().and_then(|a| a.max_out),
                        error: match &a {
                            Some(a) => a.error.clone(),
                            None => Some("past the dislocation time; no front".into()),
                        },
                        config_hash: hash.clone(),
                    },
                    img,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut images = Vec::new();
    for (row, img) in per_replica.into_iter().flatten() {
        if let Some(img) = img {
            images.push((format!("sweep_t{}.ppm", row.t), img));
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.t, r.replica));
    Ok((rows, images))
}

/// Largest cluster diameter against `c·ln n` on exact-`n` samples.
pub fn run_dilute_check(cfg: &ExperimentConfig) -> Result<Vec<DiluteRow>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let n = cfg.scaled_n().expect("validated");
    let times = cfg.scaled_times();
    let per: Vec<Vec<DiluteRow>> = replicas(cfg)
        .into_par_iter()
        .map(|(k, seed)| -> Result<_> {
            simulate_particles(n, &times, seed)?
                .into_iter()
                .map(|field| {
                    let sample = occupancy_to_percolation(&field, Arc::new(box_region(&field, 1)?));
                    let p = classify_phase(n as f64, &sample, cfg.c)?;
                    Ok(DiluteRow {
                        seed,
                        replica: k,
                        t: field.t,
                        n,
                        phase: p.phase,
                        max_diameter: p.max_diameter,
                        threshold: p.threshold,
                        cluster_count: p.cluster_count,
                        config_hash: hash.clone(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<DiluteRow> = per.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.t, r.replica));
    Ok(rows)
}

/// Gradient-strip fronts.
pub fn run_strip(cfg: &ExperimentConfig) -> Result<Vec<StripRow>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let (height, ell) = cfg.scaled_strip().expect("validated");
    replicas(cfg)
        .into_par_iter()
        .map(|(k, seed)| {
            let sample = strip_gradient_sample(height, ell, seed)?;
            let (length, max_deviation, unique_flag, error) = match strip_front(&sample) {
                Ok(f) => (Some(f.length), Some(f.max_deviation), Some(f.unique), None),
                Err(e) => (None, None, None, Some(e.to_string())),
            };
            Ok(StripRow {
                seed,
                replica: k,
                height,
                ell,
                length,
                max_deviation,
                unique_flag,
                error,
                config_hash: hash.clone(),
            })
        })
        .collect()
}

/// `L_ε(p)` for every `p`; replicas share seeds across `p`.
pub fn run_char_length(cfg: &ExperimentConfig) -> Result<Vec<CharLengthRow>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let samples = cfg.scaled_samples();
    let mut rows = Vec::new();
    for &p in &cfg.p_values {
        for (k, seed) in replicas(cfg) {
            let est = estimate_characteristic_length(p, cfg.epsilon, samples, seed)?;
            rows.push(CharLengthRow {
                seed,
                replica: k,
                p,
                epsilon: cfg.epsilon,
                length: est.length,
                samples_per_size: samples,
                config_hash: hash.clone(),
            });
        }
    }
    Ok(rows)
}

/// Source-model fronts at each time.
pub fn run_source_growth(cfg: &ExperimentConfig) -> Result<(Vec<SourceRow>, Snapshots)> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mu = cfg.mu.expect("validated");
    let times = cfg.scaled_times();
    let per: Vec<Vec<(SourceRow, Option<Image>)>> = replicas(cfg)
        .into_par_iter()
        .map(|(k, seed)| -> Result<_> {
            let mut out = Vec::new();
            for field in simulate_source(mu, &times, seed)? {
                let t = field.t as f64;
                let r_star = source_critical_radius(mu, t)?;
                let sample = occupancy_to_percolation(&field, Arc::new(box_region(&field, 2)?));
                let a = analyse_front(&sample, r_star, t, t.powf(cfg.inner_r_exponent), false);
                let img = if cfg.render && k == 0 {
                    Some(render_sample(&sample, a.front.as_ref(), None)?)
                } else {
                    None
                };
                out.push((
                    SourceRow {
                        seed,
                        replica: k,
                        t: field.t,
                        mu,
                        particles: field.total(),
                        r_star,
                        length: a.length,
                        max_in: a.max_in,
                        max_out: a.max_out,
                        mean_radius: a.mean_radius,
                        mean_radius_over_sqrt_t: a.mean_radius.map(|r| r / t.sqrt()),
                        error: a.error,
                        config_hash: hash.clone(),
                    },
                    img,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut images = Vec::new();
    for (row, img) in per.into_iter().flatten() {
        if let Some(img) = img {
            images.push((format!("source_t{}.ppm", row.t), img));
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.t, r.replica));
    Ok((rows, images))
}

/// Rows as CSV (header from the field names) or as a JSON document
/// `{experiment, seed, config_hash, rows}`.
pub fn encode_rows<T: Serialize>(
    rows: &[T],
    format: OutputFormat,
    cfg: &ExperimentConfig,
) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Format(e.to_string()))
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "experiment": cfg.experiment.as_str(),
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
                "rows": rows,
            });
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Runs the configured experiment and writes `<experiment>.csv` (or `.json`)
/// plus any snapshots into the output directory. Returns the written paths.
pub fn run_experiment(cfg: &ExperimentConfig, format: OutputFormat) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let (table, images) = match cfg.experiment {
        ExperimentKind::RegimeSweep => {
            let (rows, imgs) = run_regime_sweep(cfg)?;
            (encode_rows(&rows, format, cfg)?, imgs)
        }
        ExperimentKind::DenseFront => {
            let (rows, imgs) = run_dense_front(cfg)?;
            (encode_rows(&rows, format, cfg)?, imgs)
        }
        ExperimentKind::DiluteCheck => (encode_rows(&run_dilute_check(cfg)?, format, cfg)?, Vec::new()),
        ExperimentKind::Strip => (encode_rows(&run_strip(cfg)?, format, cfg)?, Vec::new()),
        ExperimentKind::CharLength => (encode_rows(&run_char_length(cfg)?, format, cfg)?, Vec::new()),
        ExperimentKind::SourceGrowth => {
            let (rows, imgs) = run_source_growth(cfg)?;
            (encode_rows(&rows, format, cfg)?, imgs)
        }
    };
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let mut written = Vec::new();
    let table_path = cfg.out.join(format!("{}.{ext}", cfg.experiment.as_str()));
    write_file(&table_path, &table)?;
    written.push(table_path);
    for (name, img) in images {
        let path = cfg.out.join(name);
        img.write_ppm(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes an occupancy field in the binary grid format.
pub fn save_field(field: &OccupancyField, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_occupancy(field, &mut buf).map_err(|e| Error::io(path, e))?;
    write_file(path, &buf)
}
