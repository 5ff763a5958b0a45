//! Command line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 resource cap,
//! 1 any other failure. The default worker count comes from
//! `DIFFRONT_THREADS` and is overridden by `--threads`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::geometry::extract_front;
use crate::grid::{read_grid, read_occupancy, read_percolation, GridHeader};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::experiments::{box_region, run_experiment, OutputFormat};
use crate::harness::render::render_sample;
use crate::sampler::{occupancy_to_percolation, EngineMode, KernelMode};

pub const THREADS_ENV: &str = "DIFFRONT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "diffront",
    version,
    about = "Occupation fronts of diffusing particles on the triangular lattice"
)]
struct Cli {
    /// Experiment config (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; replica seeds are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Independent replicas per time.
    #[arg(long, global = true)]
    replicas: Option<u32>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: $DIFFRONT_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Multiplies times, particle counts, strip sizes and sample counts.
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Write PPM snapshots of the first replica.
    #[arg(long, global = true)]
    render: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    PoissonField,
    ExactN,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Lclt,
    Exact,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact-n evolution across times: phases, clusters, fronts.
    Sweep {
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated, increasing.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<u32>>,
    },
    /// Dense-phase fronts: columns seed, L, max_in, max_out, r_star, unique_flag, ...
    Front {
        /// Particle count.
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated times.
        #[arg(long = "t", value_delimiter = ',')]
        t: Option<Vec<u32>>,
        /// t/n, used when --n is absent.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        #[arg(long, value_enum)]
        kernel: Option<KernelArg>,
    },
    /// Largest cluster diameter against c·ln n past the dislocation time.
    Dilute {
        /// Particle count.
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated times.
        #[arg(long = "t", value_delimiter = ',')]
        t: Option<Vec<u32>>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Gradient-strip fronts.
    Strip {
        /// Strip height N.
        #[arg(long)]
        height: Option<u32>,
        #[arg(long)]
        ell: Option<u32>,
    },
    /// Characteristic lengths L_eps(p).
    Charlen {
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<u32>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Source-model fronts.
    Source {
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "t", value_delimiter = ',')]
        t: Option<Vec<u32>>,
    },
    /// Render a binary grid file to PPM.
    Render {
        input: PathBuf,
        output: PathBuf,
        /// Overlay the front around the origin when one exists.
        #[arg(long)]
        front: bool,
        /// Pixels per lattice unit.
        #[arg(long)]
        pixels: Option<f64>,
    },
    /// Print the model and calibrated constants.
    Constants,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(k) = flag {
        return Ok(Some(k));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn experiment_config(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.experiment != kind {
                return Err(Error::Config(format!(
                    "{} holds a {} config, not {}",
                    path.display(),
                    cfg.experiment.as_str(),
                    kind.as_str()
                )));
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.scale {
        cfg.scale = s;
    }
    cfg.render |= cli.render;
    match &cli.command {
        Command::Sweep { n, times } => {
            cfg.n = n.or(cfg.n);
            if let Some(t) = times {
                cfg.times = t.clone();
            }
        }
        Command::Front {
            n,
            t,
            lambda,
            engine,
            kernel,
        } => {
            if n.is_some() {
                cfg.n = *n;
            }
            if let Some(l) = lambda {
                cfg.lambda = Some(*l);
                if n.is_none() {
                    cfg.n = None;
                }
            }
            if let Some(t) = t {
                cfg.times = t.clone();
            }
            if let Some(e) = engine {
                cfg.engine = match e {
                    EngineArg::PoissonField => EngineMode::PoissonField,
                    EngineArg::ExactN => EngineMode::ExactN,
                };
            }
            if let Some(k) = kernel {
                cfg.kernel = match k {
                    KernelArg::Lclt => KernelMode::Lclt,
                    KernelArg::Exact => KernelMode::Exact,
                };
            }
        }
        Command::Dilute { n, t, c } => {
            cfg.n = n.or(cfg.n);
            if let Some(t) = t {
                cfg.times = t.clone();
            }
            if let Some(c) = c {
                cfg.c = *c;
            }
        }
        Command::Strip { height, ell } => {
            cfg.strip_height = height.or(cfg.strip_height);
            cfg.ell = ell.or(cfg.ell);
        }
        Command::Charlen { p, samples, epsilon } => {
            if let Some(p) = p {
                cfg.p_values = p.clone();
            }
            if let Some(s) = samples {
                cfg.samples_per_size = *s;
            }
            if let Some(e) = epsilon {
                cfg.epsilon = *e;
            }
        }
        Command::Source { mu, t } => {
            cfg.mu = mu.or(cfg.mu);
            if let Some(t) = t {
                cfg.times = t.clone();
            }
        }
        Command::Render { .. } | Command::Constants => unreachable!("not an experiment"),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render_file(input: &Path, output: &Path, with_front: bool, pixels: Option<f64>) -> Result<()> {
    let bytes = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let (header, _) = read_grid(&bytes[..])?;
    let sample = match header {
        GridHeader::Occupancy { .. } => {
            let field = read_occupancy(&bytes[..])?;
            occupancy_to_percolation(&field, box_region(&field, 2)?.into())
        }
        GridHeader::Percolation { .. } => read_percolation(&bytes[..])?,
    };
    let front = if with_front {
        match extract_front(&sample, 0.0, f64::INFINITY) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("no front overlay: {e}");
                None
            }
        }
    } else {
        None
    };
    render_sample(&sample, front.as_ref(), pixels)?.write_ppm(output)
}

fn run(cli: &Cli) -> Result<()> {
    let format = match cli.format {
        Some(FormatArg::Json) => OutputFormat::Json,
        _ => OutputFormat::Csv,
    };
    let kind = match &cli.command {
        Command::Constants => {
            let c = Constants::current();
            let text = match format {
                OutputFormat::Json => serde_json::to_string_pretty(&c).expect("serializable") + "\n",
                OutputFormat::Csv => toml::to_string(&c).map_err(|e| Error::Format(e.to_string()))?,
            };
            print!("{text}");
            return Ok(());
        }
        Command::Render {
            input,
            output,
            front,
            pixels,
        } => {
            return render_file(input, output, *front, *pixels);
        }
        Command::Sweep { .. } => ExperimentKind::RegimeSweep,
        Command::Front { .. } => ExperimentKind::DenseFront,
        Command::Dilute { .. } => ExperimentKind::DiluteCheck,
        Command::Strip { .. } => ExperimentKind::Strip,
        Command::Charlen { .. } => ExperimentKind::CharLength,
        Command::Source { .. } => ExperimentKind::SourceGrowth,
    };
    let cfg = experiment_config(cli, kind)?;
    for path in run_experiment(&cfg, format)? {
        println!("{}", path.display());
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_count(cli.threads).and_then(|threads| match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run(&cli)),
        None => run(&cli),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(cli_main(["diffront", "bogus"]), 2);
        assert_eq!(cli_main(["diffront", "constants", "--no-such-flag"]), 2);
        assert_eq!(cli_main(["diffront"]), 2);
    }

    #[test]
    fn constants_and_help_exit_zero() {
        assert_eq!(cli_main(["diffront", "constants"]), 0);
        assert_eq!(cli_main(["diffront", "--help"]), 0);
    }

    #[test]
    fn caps_exit_three_and_bad_config_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(
            cli_main(["diffront", "front", "--t", "20000000", "--out", out]),
            3
        );
        assert_eq!(cli_main(["diffront", "source", "--mu=-1", "--out", out]), 2);
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "experiment = \"strip\"\nheight = 3").unwrap();
        assert_eq!(
            cli_main(["diffront", "strip", "--config", cfg.to_str().unwrap()]),
            2
        );
    }
}
