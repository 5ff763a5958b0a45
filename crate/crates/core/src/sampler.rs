//! Occupancy engines: exact `n`-walker simulation, direct Poisson-field
//! sampling and the source model, plus the Chen–Stein coupling bound.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{HOEFFDING_C, KERNEL_CAP, PARTICLE_CAP, TIME_CAP};
use crate::error::{Error, Result};
use crate::lattice::{Region, RegionSpec, SitePos};
use crate::occupation::{critical_radius, lambda_c, profile_inverse, ProfileParams};
use crate::percolation::{PercolationSample, Provenance};
use crate::rng::{stream_rng, walk_displacement, ARRIVAL_STREAM, PARTICLE_BLOCK};
use crate::walk_kernel::{exact_distribution, WalkField, LCLT_PREFACTOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    ExactN,
    PoissonField,
    Source,
}

impl EngineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineMode::ExactN => "exact-n",
            EngineMode::PoissonField => "poisson-field",
            EngineMode::Source => "source",
        }
    }
}

/// Particle counts per site, tagged with the engine and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyField {
    pub mode: EngineMode,
    /// Particle count (exact-`n`) or Poisson mean multiplier (Poisson field);
    /// 0 for the source model.
    pub n: u64,
    /// Arrival rate (source model); 0 otherwise.
    pub mu: f64,
    pub t: u32,
    pub seed: u64,
    /// Source model: batch sizes at times `0..=t`.
    pub arrivals: Vec<u64>,
    counts: Vec<(SitePos, u32)>,
}

impl OccupancyField {
    /// Builds a field from arbitrary `(site, count)` pairs; zero counts are
    /// dropped and repeated sites added up.
    pub fn from_counts(
        mode: EngineMode,
        n: u64,
        mu: f64,
        t: u32,
        seed: u64,
        arrivals: Vec<u64>,
        mut pairs: Vec<(SitePos, u32)>,
    ) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut counts: Vec<(SitePos, u32)> = Vec::with_capacity(pairs.len());
        for (z, c) in pairs {
            if c == 0 {
                continue;
            }
            match counts.last_mut() {
                Some(last) if last.0 == z => last.1 += c,
                _ => counts.push((z, c)),
            }
        }
        OccupancyField {
            mode,
            n,
            mu,
            t,
            seed,
            arrivals,
            counts,
        }
    }

    fn from_positions(
        mode: EngineMode,
        n: u64,
        mu: f64,
        t: u32,
        seed: u64,
        arrivals: Vec<u64>,
        positions: &[SitePos],
    ) -> Self {
        let mut sorted = positions.to_vec();
        sorted.par_sort_unstable();
        let mut counts: Vec<(SitePos, u32)> = Vec::new();
        for z in sorted {
            match counts.last_mut() {
                Some(last) if last.0 == z => last.1 += 1,
                _ => counts.push((z, 1)),
            }
        }
        OccupancyField {
            mode,
            n,
            mu,
            t,
            seed,
            arrivals,
            counts,
        }
    }

    /// Nonzero counts in lexicographic site order.
    pub fn counts(&self) -> &[(SitePos, u32)] {
        &self.counts
    }

    pub fn get(&self, z: SitePos) -> u32 {
        self.counts
            .binary_search_by_key(&z, |p| p.0)
            .map_or(0, |i| self.counts[i].1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|p| p.1 as u64).sum()
    }

    /// Number of particles on sites of `region`.
    pub fn total_in(&self, region: &Region) -> u64 {
        self.counts
            .iter()
            .filter(|p| region.contains(p.0))
            .map(|p| p.1 as u64)
            .sum()
    }

    /// Inclusive axial box of the occupied sites.
    pub fn support_box(&self) -> Option<(i32, i32, i32, i32)> {
        if self.counts.is_empty() {
            return None;
        }
        Some(self.counts.iter().fold(
            (i32::MAX, i32::MIN, i32::MAX, i32::MIN),
            |(a0, a1, b0, b1), (z, _)| (a0.min(z.a), a1.max(z.a), b0.min(z.b), b1.max(z.b)),
        ))
    }

    /// `a,b,count` rows for the nonzero sites.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["a", "b", "count"]).map_err(fmt)?;
        for (z, c) in &self.counts {
            w.write_record([z.a.to_string(), z.b.to_string(), c.to_string()])
                .map_err(fmt)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

fn check_snapshots(snapshots: &[u32]) -> Result<()> {
    if snapshots.is_empty() {
        return Err(Error::InvalidParameter("snapshot list is empty".into()));
    }
    if snapshots.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!(
            "snapshot times must be sorted, got {snapshots:?}"
        )));
    }
    let last = *snapshots.last().unwrap();
    if last as u64 > TIME_CAP {
        return Err(Error::ResourceCap {
            what: "snapshot time",
            requested: last as u64,
            cap: TIME_CAP,
        });
    }
    Ok(())
}

/// Particle batches arriving at the origin in the source model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ArrivalLaw {
    /// `Poisson(mu)` particles at every time step.
    Poisson { mu: f64 },
    /// Exactly `n0` particles at every time step.
    Fixed { n0: u64 },
}

impl ArrivalLaw {
    fn mean(&self) -> f64 {
        match *self {
            ArrivalLaw::Poisson { mu } => mu,
            ArrivalLaw::Fixed { n0 } => n0 as f64,
        }
    }
}

/// Independent walkers with one RNG stream per block of `PARTICLE_BLOCK`
/// particles; between snapshots each walker's displacement is drawn in one go.
struct ParticleEngine {
    seed: u64,
    time: Option<u32>,
    positions: Vec<SitePos>,
    births: Vec<u32>,
    rngs: Vec<ChaCha8Rng>,
}

impl ParticleEngine {
    fn new(seed: u64) -> Self {
        ParticleEngine {
            seed,
            time: None,
            positions: Vec::new(),
            births: Vec::new(),
            rngs: Vec::new(),
        }
    }

    fn add(&mut self, count: u64, birth: u32) {
        self.positions
            .extend(std::iter::repeat_n(SitePos::ORIGIN, count as usize));
        self.births.extend(std::iter::repeat_n(birth, count as usize));
        let blocks = self.positions.len().div_ceil(PARTICLE_BLOCK);
        while self.rngs.len() < blocks {
            let b = self.rngs.len() as u64;
            self.rngs.push(stream_rng(self.seed, b));
        }
    }

    /// Moves every particle to time `t`; a particle born at `s` walks from
    /// `max(s, previous time)`.
    fn advance_to(&mut self, t: u32) {
        let t0 = self.time.unwrap_or(0);
        self.positions
            .par_chunks_mut(PARTICLE_BLOCK)
            .zip(self.births.par_chunks(PARTICLE_BLOCK))
            .zip(self.rngs.par_iter_mut())
            .for_each(|((pos, births), rng)| {
                for (p, &s) in pos.iter_mut().zip(births) {
                    let steps = t - s.max(t0);
                    if steps > 0 {
                        *p = *p + walk_displacement(rng, steps as u64);
                    }
                }
            });
        self.time = Some(t);
    }
}

/// Exact-`n` engine: `n` independent walkers from the origin, recorded at each
/// snapshot time.
pub fn simulate_particles(n: u64, snapshots: &[u32], seed: u64) -> Result<Vec<OccupancyField>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > PARTICLE_CAP {
        return Err(Error::ResourceCap {
            what: "particles",
            requested: n,
            cap: PARTICLE_CAP,
        });
    }
    check_snapshots(snapshots)?;
    let mut engine = ParticleEngine::new(seed);
    engine.add(n, 0);
    let mut out = Vec::with_capacity(snapshots.len());
    for &t in snapshots {
        engine.advance_to(t);
        out.push(OccupancyField::from_positions(
            EngineMode::ExactN,
            n,
            0.0,
            t,
            seed,
            Vec::new(),
            &engine.positions,
        ));
    }
    Ok(out)
}

/// Number of exact-`n` particles that land in `region` at time `t`, without
/// materializing the field.
pub fn particles_in_region(n: u64, t: u32, region: &Region, seed: u64) -> Result<u64> {
    if n > PARTICLE_CAP {
        return Err(Error::ResourceCap {
            what: "particles",
            requested: n,
            cap: PARTICLE_CAP,
        });
    }
    check_snapshots(&[t])?;
    let mut engine = ParticleEngine::new(seed);
    engine.add(n, 0);
    engine.advance_to(t);
    Ok(engine.positions.iter().filter(|&&z| region.contains(z)).count() as u64)
}

/// Source model with `Poisson(mu)` arrivals at each time step.
pub fn simulate_source(mu: f64, snapshots: &[u32], seed: u64) -> Result<Vec<OccupancyField>> {
    simulate_arrivals(ArrivalLaw::Poisson { mu }, snapshots, seed)
}

/// Source model: a batch arrives at the origin at each time `0, 1, …`, and the
/// batch from time `s` has walked `t − s` steps at time `t`.
pub fn simulate_arrivals(law: ArrivalLaw, snapshots: &[u32], seed: u64) -> Result<Vec<OccupancyField>> {
    let mean = law.mean();
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "arrival rate must be positive, got {mean}"
        )));
    }
    check_snapshots(snapshots)?;
    let last = *snapshots.last().unwrap() as f64;
    let expected = mean * (last + 1.0);
    if expected > PARTICLE_CAP as f64 {
        return Err(Error::ResourceCap {
            what: "particles",
            requested: expected as u64,
            cap: PARTICLE_CAP,
        });
    }
    let poisson = match law {
        ArrivalLaw::Poisson { mu } => {
            Some(Poisson::new(mu).map_err(|e| Error::InvalidParameter(e.to_string()))?)
        }
        ArrivalLaw::Fixed { .. } => None,
    };
    let mut arrival_rng = stream_rng(seed, ARRIVAL_STREAM);
    let mut engine = ParticleEngine::new(seed);
    let mut arrivals: Vec<u64> = Vec::new();
    let mu = match law {
        ArrivalLaw::Poisson { mu } => mu,
        ArrivalLaw::Fixed { n0 } => n0 as f64,
    };
    let mut out = Vec::with_capacity(snapshots.len());
    for &t in snapshots {
        let first = engine.time.map_or(0, |s| s + 1);
        for s in first..=t {
            let batch = match (&poisson, law) {
                (Some(p), _) => p.sample(&mut arrival_rng) as u64,
                (None, ArrivalLaw::Fixed { n0 }) => n0,
                (None, ArrivalLaw::Poisson { .. }) => unreachable!(),
            };
            arrivals.push(batch);
            engine.add(batch, s);
        }
        engine.advance_to(t);
        out.push(OccupancyField::from_positions(
            EngineMode::Source,
            0,
            mu,
            t,
            seed,
            arrivals.clone(),
            &engine.positions,
        ));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    Exact,
    Lclt,
}

/// Mean particle counts `n·π_t(z)` for the Poisson-field engine.
#[derive(Clone, Debug)]
pub struct PoissonIntensity {
    n: u64,
    t: u32,
    kernel: IntensityKernel,
}

#[derive(Clone, Debug)]
enum IntensityKernel {
    Exact(Arc<WalkField>),
    /// `π̄_t(‖z‖)` up to `r_cut`, zero beyond.
    Lclt {
        r_cut: f64,
    },
}

/// Radius beyond which `n·C·e^{−r²/2t}` drops below `10⁻³`.
pub fn lclt_cutoff(n: u64, t: u32) -> f64 {
    let arg = (n as f64 * HOEFFDING_C * 1e3).max(1.0);
    (2.0 * t as f64 * arg.ln()).sqrt()
}

impl PoissonIntensity {
    pub fn new(n: u64, t: u32, mode: KernelMode) -> Result<Self> {
        let kernel = match mode {
            KernelMode::Exact => IntensityKernel::Exact(Arc::new(exact_distribution(t, KERNEL_CAP as u32)?)),
            KernelMode::Lclt => {
                if t == 0 {
                    return Err(Error::InvalidParameter(
                        "the local-limit kernel needs t >= 1".into(),
                    ));
                }
                let r_cut = lclt_cutoff(n, t);
                log::debug!("lclt intensity n={n} t={t}: zero beyond r_cut={r_cut:.3}");
                IntensityKernel::Lclt { r_cut }
            }
        };
        Ok(PoissonIntensity { n, t, kernel })
    }

    /// Intensity from a precomputed exact kernel.
    pub fn from_field(n: u64, field: Arc<WalkField>) -> Self {
        PoissonIntensity {
            n,
            t: field.t(),
            kernel: IntensityKernel::Exact(field),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn mean(&self, z: SitePos) -> f64 {
        match &self.kernel {
            IntensityKernel::Exact(f) => self.n as f64 * f.get(z),
            IntensityKernel::Lclt { r_cut } => {
                let r2 = z.norm_sq() as f64;
                if r2 > r_cut * r_cut {
                    0.0
                } else {
                    let t = self.t as f64;
                    self.n as f64 * LCLT_PREFACTOR / t * (-r2 / t).exp()
                }
            }
        }
    }
}

/// Contiguous index ranges of region sites sharing the same `a`.
pub(crate) fn row_ranges(region: &Region) -> Vec<std::ops::Range<usize>> {
    let sites = region.sites();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sites.len() {
        if i == sites.len() || sites[i].a != sites[start].a {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Independent `Poisson(mean(z))` counts on every site of `region`, one RNG
/// stream per row of constant `a`.
pub fn sample_poisson_with(intensity: &PoissonIntensity, region: &Region, seed: u64) -> OccupancyField {
    let sites = region.sites();
    let rows = row_ranges(region);
    let counts: Vec<(SitePos, u32)> = rows
        .into_par_iter()
        .map(|range| {
            let row_a = sites[range.start].a;
            let mut rng = stream_rng(seed, row_a as i64 as u64);
            let mut out = Vec::new();
            for &z in &sites[range] {
                let m = intensity.mean(z);
                if m > 0.0 {
                    let c = Poisson::new(m).expect("finite positive mean").sample(&mut rng) as u32;
                    if c > 0 {
                        out.push((z, c));
                    }
                }
            }
            out
        })
        .flatten()
        .collect();
    OccupancyField {
        mode: EngineMode::PoissonField,
        n: intensity.n,
        mu: 0.0,
        t: intensity.t,
        seed,
        arrivals: Vec::new(),
        counts,
    }
}

/// Poisson-field engine: counts `Poisson(n·π_t(z))`, independent over `region`.
pub fn sample_poisson_field(
    n: u64,
    t: u32,
    region: &Region,
    mode: KernelMode,
    seed: u64,
) -> Result<OccupancyField> {
    let intensity = PoissonIntensity::new(n, t, mode)?;
    Ok(sample_poisson_with(&intensity, region, seed))
}

/// `min(1, π_t(A))`.
///
/// The exact-`n` configuration restricted to `A` can be coupled with the
/// Poisson-field configuration so that they agree with probability at least
/// `1 − π_t(A)`.
pub fn chen_stein_bound(field: &WalkField, region: &Region) -> f64 {
    region.sites().iter().map(|&z| field.get(z)).sum::<f64>().min(1.0)
}

/// `min(1, Σ_{z∈A} π̄_t(‖z‖))`, for times beyond the exact-kernel cap.
pub fn chen_stein_bound_lclt(t: u32, region: &Region) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let tf = t as f64;
    Ok(region
        .sites()
        .iter()
        .map(|z| LCLT_PREFACTOR / tf * (-(z.norm_sq() as f64) / tf).exp())
        .sum::<f64>()
        .min(1.0))
}

/// The observation set used to couple the exact and Poissonized models at
/// `λ = t/n < λ_c`: the annulus of half-width `2w`, `w = t^{2/7+ε}`, around
/// `r*`, the small annulus `S_{t^ε, 2t^ε}`, and the strips joining them
/// along the positive axis.
///
/// The vertical connectors `s₂±`, whose shape is left free by the
/// construction, are taken as strips of width `t^ε` and height `w` centered
/// in the overlap of the strips they join.
pub fn coupling_region(n: f64, t: f64, eps: f64) -> Result<Region> {
    let r_star = critical_radius(n, t).ok_or_else(|| {
        Error::InvalidParameter(format!("t = {t} is past the dislocation time {}", lambda_c() * n))
    })?;
    let params = ProfileParams::fixed_n(n, t);
    let r_minus = profile_inverse(&params, 0.6)?;
    let r_plus = profile_inverse(&params, 0.4)?;
    let w = t.powf(2.0 / 7.0 + eps);
    let te = t.powf(eps);
    let para = |x1: f64, x2: f64, y1: f64, y2: f64| RegionSpec::Parallelogram {
        a1: x1.floor() as i32,
        a2: x2.ceil() as i32,
        b1: y1.floor() as i32,
        b2: y2.ceil() as i32,
    };
    let mut parts = vec![
        RegionSpec::Annulus {
            r_inner: (r_star - 2.0 * w).max(0.0),
            r_outer: r_star + 2.0 * w,
        },
        RegionSpec::Annulus {
            r_inner: te,
            r_outer: 2.0 * te,
        },
    ];
    let s1m = (r_minus / 2.0, r_star - 0.99 * w);
    if s1m.0 < s1m.1 {
        parts.push(para(s1m.0, s1m.1, 0.0, w));
    }
    parts.push(para(0.0, r_minus, 0.0, te));
    let mid_m = 0.5 * (s1m.0 + r_minus.min(s1m.1));
    parts.push(para(mid_m - te / 2.0, mid_m + te / 2.0, 0.0, w));
    let s1p = (r_star + 0.99 * w, 2.0 * r_plus);
    parts.push(para(s1p.0, s1p.1, 0.0, w));
    parts.push(para(r_plus, t, 0.0, te));
    let mid_p = 0.5 * (s1p.0.max(r_plus) + s1p.1);
    parts.push(para(mid_p - te / 2.0, mid_p + te / 2.0, 0.0, w));
    Region::build(RegionSpec::Union { parts })
}

/// Site `z` is occupied iff it holds at least one particle.
pub fn occupancy_to_percolation(field: &OccupancyField, region: Arc<Region>) -> PercolationSample {
    let mut status = vec![false; region.len()];
    for (z, c) in field.counts() {
        if *c > 0 {
            if let Some(i) = region.index_of(*z) {
                status[i] = true;
            }
        }
    }
    PercolationSample::new(
        region,
        status,
        Provenance::FromOccupancy {
            mode: field.mode.as_str().to_string(),
            seed: field.seed,
        },
    )
    .expect("status sized to the region")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::poisson_occupation_prob;
    use crate::walk_kernel::cumulative_kernel;

    #[test]
    fn exact_engine_conservation_and_origin() {
        let f = simulate_particles(5, &[0], 1).unwrap();
        assert_eq!(f[0].counts(), &[(SitePos::ORIGIN, 5)]);
        let snaps = simulate_particles(10_000, &[0, 1, 7, 50, 50, 300], 2).unwrap();
        for f in &snaps {
            assert_eq!(f.total(), 10_000);
            assert!(f.counts().iter().all(|(z, _)| z.norm() <= f.t as f64));
        }
        assert!(simulate_particles(0, &[1], 1).is_err());
        assert!(simulate_particles(5, &[3, 1], 1).is_err());
        assert!(matches!(
            simulate_particles(5, &[u32::MAX], 1),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn exact_engine_first_step() {
        let n = 60_000;
        let f = &simulate_particles(n, &[1], 3).unwrap()[0];
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for z in SitePos::ORIGIN.neighbors() {
            let frac = f.get(z) as f64 / n as f64;
            assert!((frac - p).abs() < 3.0 * se, "{z}: {frac}");
        }
        assert_eq!(f.get(SitePos::ORIGIN), 0);
    }

    #[test]
    fn snapshots_match_direct_runs_in_law() {
        // two-stage advance matches the kernel at the final time
        let n = 40_000u64;
        let f = &simulate_particles(n, &[3, 20], 4).unwrap()[1];
        let k = exact_distribution(20, 32).unwrap();
        for z in [SitePos::ORIGIN, SitePos::new(3, 1), SitePos::new(-2, 5)] {
            let p = k.get(z);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let frac = f.get(z) as f64 / n as f64;
            assert!((frac - p).abs() < 4.0 * se, "{z}: {frac} vs {p}");
        }
    }

    #[test]
    fn engines_are_deterministic() {
        let a = simulate_particles(9_000, &[5, 40], 77).unwrap();
        let b = simulate_particles(9_000, &[5, 40], 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_particles(9_000, &[5, 40], 78).unwrap();
        assert_ne!(a, c);
        let s1 = simulate_source(5.0, &[10, 30], 1).unwrap();
        let s2 = simulate_source(5.0, &[10, 30], 1).unwrap();
        assert_eq!(s1, s2);
        let region = Region::build(RegionSpec::Disk { r: 15.0 }).unwrap();
        let p1 = sample_poisson_field(400, 30, &region, KernelMode::Exact, 5).unwrap();
        let p2 = sample_poisson_field(400, 30, &region, KernelMode::Exact, 5).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn poisson_field_marginals() {
        let (n, t) = (50u64, 10u32);
        let field = Arc::new(exact_distribution(t, 16).unwrap());
        let region = Region::build(RegionSpec::Disk { r: 3.0 }).unwrap();
        let intensity = PoissonIntensity::from_field(n, field.clone());
        let z = SitePos::new(2, 0);
        let reps = 10_000;
        let (mut hit, mut sum) = (0u32, 0u64);
        for seed in 0..reps {
            let f = sample_poisson_with(&intensity, &region, seed);
            let c = f.get(z);
            hit += (c > 0) as u32;
            sum += c as u64;
            assert!(f.counts().iter().all(|(w, _)| region.contains(*w)));
        }
        let p = poisson_occupation_prob(n, &field, z);
        let emp = hit as f64 / reps as f64;
        assert!(
            (emp - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt(),
            "{emp} vs {p}"
        );
        let m = n as f64 * field.get(z);
        let mean = sum as f64 / reps as f64;
        assert!((mean - m).abs() < 3.0 * (m / reps as f64).sqrt(), "{mean} vs {m}");
        // zero intensity outside the support gives zero counts
        let far = Region::build(RegionSpec::Parallelogram {
            a1: 20,
            a2: 22,
            b1: 0,
            b2: 2,
        })
        .unwrap();
        assert_eq!(sample_poisson_with(&intensity, &far, 1).total(), 0);
    }

    #[test]
    fn lclt_intensity_cutoff() {
        let it = PoissonIntensity::new(40_000, 10_000, KernelMode::Lclt).unwrap();
        let r_cut = lclt_cutoff(40_000, 10_000);
        assert!(it.mean(SitePos::new(r_cut as i32 + 1, 0)) == 0.0);
        assert!(it.mean(SitePos::new(r_cut as i32 - 1, 0)) > 0.0);
        assert!(40_000.0 * HOEFFDING_C * (-r_cut * r_cut / 20_000.0f64).exp() <= 1.0001e-3);
    }

    #[test]
    fn source_bookkeeping() {
        let f = simulate_source(50.0, &[0], 1).unwrap();
        assert_eq!(f[0].counts().len(), 1);
        assert_eq!(f[0].total(), f[0].arrivals[0]);
        let snaps = simulate_source(3.0, &[0, 5, 5, 40], 2).unwrap();
        for f in &snaps {
            assert_eq!(f.arrivals.len(), f.t as usize + 1);
            assert_eq!(f.total(), f.arrivals.iter().sum::<u64>());
        }
        let fixed = simulate_arrivals(ArrivalLaw::Fixed { n0: 4 }, &[9], 1).unwrap();
        assert_eq!(fixed[0].total(), 40);
        assert!(simulate_source(0.0, &[3], 1).is_err());
    }

    #[test]
    fn source_means() {
        let (mu, t) = (50.0, 200u32);
        let reps = 100;
        let rho0 = cumulative_kernel(t, 256).unwrap().get(SitePos::ORIGIN);
        let (mut tot, mut tot2, mut o, mut o2) = (0.0, 0.0, 0.0, 0.0);
        for seed in 0..reps {
            let f = &simulate_source(mu, &[t], seed).unwrap()[0];
            let x = f.total() as f64;
            let y = f.get(SitePos::ORIGIN) as f64;
            tot += x;
            tot2 += x * x;
            o += y;
            o2 += y * y;
        }
        let r = reps as f64;
        let (m, v) = (tot / r, tot2 / r - (tot / r).powi(2));
        assert!((m - mu * (t as f64 + 1.0)).abs() < 3.0 * (v / r).sqrt().max(1.0));
        let (m, v) = (o / r, o2 / r - (o / r).powi(2));
        assert!(
            (m - mu * rho0).abs() < 3.0 * (v / r).sqrt(),
            "{m} vs {}",
            mu * rho0
        );
    }

    #[test]
    fn chen_stein_examples() {
        let field = exact_distribution(30, 64).unwrap();
        let empty = Region::build(RegionSpec::Union { parts: vec![] }).unwrap();
        assert_eq!(chen_stein_bound(&field, &empty), 0.0);
        let all = Region::build(RegionSpec::Disk { r: 30.0 }).unwrap();
        assert!((chen_stein_bound(&field, &all) - 1.0).abs() < 1e-12);
        let ring = Region::build(RegionSpec::Annulus {
            r_inner: 3.0,
            r_outer: 6.0,
        })
        .unwrap();
        let b = chen_stein_bound(&field, &ring);
        assert!(b > 0.0 && b < 1.0);
    }

    #[test]
    fn coupling_region_contains_its_parts() {
        let (n, t) = (1e4, 2500.0);
        let a = coupling_region(n, t, 0.01).unwrap();
        let r_star = critical_radius(n, t).unwrap();
        let w = t.powf(2.0 / 7.0 + 0.01);
        assert!(a.contains(SitePos::new(r_star.round() as i32, 0)));
        assert!(a.contains(SitePos::new(0, (r_star - 1.5 * w).round() as i32)));
        assert!(a.contains(SitePos::new(2, 0)));
        assert!(a.contains(SitePos::new(2400, 0)));
        assert!(!a.contains(SitePos::new(0, -(r_star + 3.0 * w) as i32)));
        assert!(coupling_region(n, 5000.0, 0.01).is_err());
    }

    #[test]
    fn occupancy_conversion() {
        let region = Arc::new(Region::build(RegionSpec::Disk { r: 2.0 }).unwrap());
        let empty = OccupancyField::from_counts(EngineMode::ExactN, 0, 0.0, 0, 0, vec![], vec![]);
        assert_eq!(
            occupancy_to_percolation(&empty, region.clone()).occupied_count(),
            0
        );
        let f = OccupancyField::from_counts(
            EngineMode::ExactN,
            4,
            0.0,
            0,
            0,
            vec![],
            vec![(SitePos::new(1, 0), 3), (SitePos::new(9, 9), 1)],
        );
        let s = occupancy_to_percolation(&f, region.clone());
        assert_eq!(s.is_occupied(SitePos::new(1, 0)), Some(true));
        assert_eq!(s.occupied_count(), 1);
        let ones: Vec<(SitePos, u32)> = f.counts().iter().map(|&(z, _)| (z, 1)).collect();
        let f1 = OccupancyField::from_counts(EngineMode::ExactN, 4, 0.0, 0, 0, vec![], ones);
        assert_eq!(occupancy_to_percolation(&f1, region).status(), s.status());
    }
}
