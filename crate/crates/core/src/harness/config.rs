//! Experiment configuration, in TOML or JSON.
//!
//! ```toml
//! experiment = "dense-front"   # regime-sweep | dense-front | dilute-check
//!                              # | strip | char-length | source-growth
//! seed = 1
//! replicas = 50
//! times = [2500, 10000]
//! lambda = 0.25                # dense-front: n = t / lambda unless n is set
//! engine = "poisson-field"     # dense-front: poisson-field | exact-n
//! kernel = "lclt"              # poisson-field intensity: lclt | exact
//! out = "out"
//! render = false
//! ```
//!
//! Other keys: `n`, `mu` (source-growth), `strip_height`, `ell` (strip),
//! `p_values`, `samples_per_size`, `epsilon` (char-length), `c` (dilute
//! threshold factor), `inner_r_exponent`, `scale` (multiplies `times`, `n`,
//! `strip_height`, `ell` and `samples_per_size`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{DILUTE_DIAMETER_FACTOR, PARTICLE_CAP, TIME_CAP};
use crate::error::{Error, Result};
use crate::occupation::DEFAULT_EPSILON;
use crate::sampler::{EngineMode, KernelMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RegimeSweep,
    DenseFront,
    DiluteCheck,
    Strip,
    CharLength,
    SourceGrowth,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::RegimeSweep => "regime-sweep",
            ExperimentKind::DenseFront => "dense-front",
            ExperimentKind::DiluteCheck => "dilute-check",
            ExperimentKind::Strip => "strip",
            ExperimentKind::CharLength => "char-length",
            ExperimentKind::SourceGrowth => "source-growth",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default)]
    pub times: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default)]
    pub p_values: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples_per_size: u32,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_engine")]
    pub engine: EngineMode,
    #[serde(default = "default_kernel")]
    pub kernel: KernelMode,
    #[serde(default = "default_inner_exponent")]
    pub inner_r_exponent: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub render: bool,
}

fn default_seed() -> u64 {
    1
}
fn default_replicas() -> u32 {
    1
}
fn default_samples() -> u32 {
    1000
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_c() -> f64 {
    DILUTE_DIAMETER_FACTOR
}
fn default_engine() -> EngineMode {
    EngineMode::PoissonField
}
fn default_kernel() -> KernelMode {
    KernelMode::Lclt
}
fn default_inner_exponent() -> f64 {
    0.05
}
fn default_scale() -> f64 {
    1.0
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment: kind,
            seed: default_seed(),
            replicas: default_replicas(),
            times: Vec::new(),
            n: None,
            lambda: None,
            mu: None,
            strip_height: None,
            ell: None,
            p_values: Vec::new(),
            samples_per_size: default_samples(),
            epsilon: default_epsilon(),
            c: default_c(),
            engine: default_engine(),
            kernel: default_kernel(),
            inner_r_exponent: default_inner_exponent(),
            scale: default_scale(),
            out: default_out(),
            render: false,
        };
        match kind {
            ExperimentKind::RegimeSweep => {
                cfg.n = Some(10_000);
                cfg.times = vec![10, 100, 500, 1000, 1463, 2500, 3977, 5000, 10_000];
                cfg.engine = EngineMode::ExactN;
            }
            ExperimentKind::DenseFront => {
                cfg.lambda = Some(0.25);
                cfg.times = vec![2500, 10_000, 40_000];
            }
            ExperimentKind::DiluteCheck => {
                cfg.n = Some(10_000);
                cfg.times = vec![10_000];
                cfg.engine = EngineMode::ExactN;
            }
            ExperimentKind::Strip => {
                cfg.strip_height = Some(512);
                cfg.ell = Some((2.0 * 512f64.powf(4.0 / 7.0)).round() as u32);
            }
            ExperimentKind::CharLength => {
                cfg.p_values = vec![0.52, 0.54, 0.56, 0.58, 0.60];
            }
            ExperimentKind::SourceGrowth => {
                cfg.mu = Some(50.0);
                cfg.times = vec![10, 100, 1000];
                cfg.engine = EngineMode::Source;
            }
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML integers are signed 64-bit, so seeds of `2⁶³` and above only
    /// round-trip through JSON.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form, with the
    /// output directory blanked so that only experiment parameters count.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.out = PathBuf::new();
        let json = serde_json::to_vec(&keyed).expect("configs always serialize");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    fn scaled(&self, x: f64) -> f64 {
        (x * self.scale).round().max(1.0)
    }

    /// Times after applying `scale`.
    pub fn scaled_times(&self) -> Vec<u32> {
        self.times.iter().map(|&t| self.scaled(t as f64) as u32).collect()
    }

    pub fn scaled_n(&self) -> Option<u64> {
        self.n.map(|n| self.scaled(n as f64) as u64)
    }

    pub fn scaled_strip(&self) -> Option<(u32, u32)> {
        Some((
            self.scaled(self.strip_height? as f64) as u32,
            self.scaled(self.ell? as f64) as u32,
        ))
    }

    pub fn scaled_samples(&self) -> u32 {
        self.scaled(self.samples_per_size as f64) as u32
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicas < 1 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        let times = self.scaled_times();
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("times must be strictly increasing".into());
        }
        if let Some(&t) = times.last() {
            if t as u64 > TIME_CAP {
                return Err(Error::ResourceCap {
                    what: "time",
                    requested: t as u64,
                    cap: TIME_CAP,
                });
            }
        }
        if let Some(n) = self.scaled_n() {
            if n > PARTICLE_CAP {
                return Err(Error::ResourceCap {
                    what: "particles",
                    requested: n,
                    cap: PARTICLE_CAP,
                });
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        let needs_times = !matches!(
            self.experiment,
            ExperimentKind::Strip | ExperimentKind::CharLength
        );
        if needs_times && times.is_empty() {
            return bad(format!(
                "{} needs a non-empty times list",
                self.experiment.as_str()
            ));
        }
        match self.experiment {
            ExperimentKind::RegimeSweep | ExperimentKind::DiluteCheck => {
                if self.n.is_none() {
                    return bad("n is required".into());
                }
            }
            ExperimentKind::DenseFront => {
                if self.n.is_none() && !self.lambda.is_some_and(|l| l > 0.0) {
                    return bad("dense-front needs n or a positive lambda".into());
                }
                if !matches!(self.engine, EngineMode::PoissonField | EngineMode::ExactN) {
                    return bad("dense-front runs on the poisson-field or exact-n engine".into());
                }
            }
            ExperimentKind::SourceGrowth => {
                if !self.mu.is_some_and(|m| m > 0.0) {
                    return bad("source-growth needs mu > 0".into());
                }
            }
            ExperimentKind::Strip => {
                if self.scaled_strip().is_none() {
                    return bad("strip needs strip_height and ell".into());
                }
            }
            ExperimentKind::CharLength => {
                if self.p_values.is_empty() || self.p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return bad("char-length needs p_values in [0, 1]".into());
                }
                if self.samples_per_size == 0 {
                    return bad("samples_per_size must be positive".into());
                }
            }
        }
        Ok(())
    }
}
