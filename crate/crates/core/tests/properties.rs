use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use diffront::geometry::extract_front;
use diffront::grid::{read_occupancy, read_percolation, write_occupancy, write_percolation};
use diffront::harness::config::{ExperimentConfig, ExperimentKind};
use diffront::lattice::{Region, RegionSpec, SitePos};
use diffront::occupation::{
    critical_radius, lambda_c, profile_inverse, radial_profile, source_profile, ProfileParams,
};
use diffront::percolation::{
    has_crossing, sample_bernoulli, strip_front, strip_gradient_sample, Direction, Parallelogram,
    PercolationSample, Polarity,
};
use diffront::sampler::{
    sample_poisson_field, simulate_particles, simulate_source, EngineMode, KernelMode, OccupancyField,
};
use diffront::walk_kernel::{exact_distribution, WalkField};

fn kernels() -> &'static Vec<WalkField> {
    static K: OnceLock<Vec<WalkField>> = OnceLock::new();
    K.get_or_init(|| (0..=24).map(|t| exact_distribution(t, 24).unwrap()).collect())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn ramp_sample(radius: f64, extra: f64, seed: u64) -> PercolationSample {
    let region = Arc::new(Region::build(RegionSpec::Disk { r: radius + extra }).unwrap());
    sample_bernoulli(move |z| (1.0 - z.norm() / radius).clamp(0.0, 1.0), region, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_dihedral_invariant(a in -1000i32..1000, b in -1000i32..1000) {
        let z = SitePos::new(a, b);
        for w in z.dihedral_images() {
            prop_assert_eq!(w.norm_sq(), z.norm_sq());
        }
        prop_assert_eq!(z.rotate_ccw().rotate_cw(), z);
        prop_assert_eq!((-z).norm_sq(), z.norm_sq());
    }

    #[test]
    fn kernel_has_dihedral_symmetry(t in 1u32..=24, a in -24i32..=24, b in -24i32..=24) {
        let field = &kernels()[t as usize];
        let z = SitePos::new(a, b);
        let v = field.get(z);
        for w in z.dihedral_images() {
            prop_assert!((field.get(w) - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn region_membership_matches_enumeration(
        a1 in -20i32..20, w in 0i32..15, b1 in -20i32..20, h in 0i32..15,
        r in 0.0f64..25.0, dr in 0.5f64..10.0,
    ) {
        let specs = [
            RegionSpec::Parallelogram { a1, a2: a1 + w, b1, b2: b1 + h },
            RegionSpec::Disk { r },
            RegionSpec::Annulus { r_inner: r, r_outer: r + dr },
        ];
        for spec in specs {
            let region = Region::build(spec.clone()).unwrap();
            let member = |z: SitePos| match spec {
                RegionSpec::Parallelogram { a1, a2, b1, b2 } => {
                    (a1..=a2).contains(&z.a) && (b1..=b2).contains(&z.b)
                }
                RegionSpec::Disk { r } => z.norm() <= r + 1e-9,
                RegionSpec::Annulus { r_inner, r_outer } => {
                    z.norm() > r_inner + 1e-9 && z.norm() <= r_outer + 1e-9
                }
                _ => unreachable!(),
            };
            let mut count = 0;
            for a in -60..=60 {
                for b in -60..=60 {
                    let z = SitePos::new(a, b);
                    prop_assert_eq!(region.contains(z), member(z), "{:?} at {}", spec, z);
                    count += member(z) as usize;
                }
            }
            prop_assert_eq!(count, region.len());
        }
    }

    #[test]
    fn profiles_strictly_decrease(
        log_ratio in 0.0f64..4.6, t in 10.0f64..1e6, u in 0.0f64..3.0, gap in 1e-3f64..1.0,
        mu in 0.5f64..200.0,
    ) {
        let n = t * log_ratio.exp();
        let (r1, r2) = (u * t.sqrt(), (u + gap) * t.sqrt());
        let decreasing = |hi: f64, lo: f64| hi >= lo && (hi > lo || hi == 1.0 || lo == 0.0);
        let (p1, p2) = (radial_profile(n, t, r1), radial_profile(n, t, r2));
        prop_assert!(decreasing(p1, p2), "{} then {}", p1, p2);
        let (s1, s2) = (r1.max(1e-3), r2.max(1e-3) + 1e-3);
        let (q1, q2) = (source_profile(mu, t, s1).unwrap(), source_profile(mu, t, s2).unwrap());
        prop_assert!(decreasing(q1, q2), "{} then {}", q1, q2);
    }

    #[test]
    fn critical_radius_closed_form_matches_inverse(log_n in 4.0f64..16.0, frac in 0.001f64..0.99) {
        let n = 10f64.powf(log_n);
        let t = frac * lambda_c() * n;
        let closed = critical_radius(n, t).unwrap();
        let inverse = profile_inverse(&ProfileParams::fixed_n(n, t), 0.5).unwrap();
        prop_assert!((closed - inverse).abs() <= 1e-6 * closed.max(1.0), "{} vs {}", closed, inverse);
        prop_assert!((radial_profile(n, t, closed) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rhombus_duality(n in 1u32..40, p in 0.05f64..0.95, seed in any::<u64>()) {
        let box_ = Parallelogram::rhombus(n);
        let region = Arc::new(Region::build(RegionSpec::Parallelogram {
            a1: box_.a1, a2: box_.a2, b1: box_.b1, b2: box_.b2,
        }).unwrap());
        let sample = sample_bernoulli(|_| p, region, seed).unwrap();
        let occ = has_crossing(&sample, box_, Direction::Horizontal, Polarity::Occupied).unwrap();
        let vac = has_crossing(&sample, box_, Direction::Vertical, Polarity::Vacant).unwrap();
        prop_assert_ne!(occ, vac);
    }

    #[test]
    fn strip_front_fails_iff_vacant_crossing(n in 4u32..48, ell in 1u32..48, seed in any::<u64>()) {
        let sample = strip_gradient_sample(n, ell, seed).unwrap();
        let box_ = Parallelogram::new(0, ell as i32, 0, n as i32);
        let vacant = has_crossing(&sample, box_, Direction::Vertical, Polarity::Vacant).unwrap();
        let front = strip_front(&sample);
        prop_assert_eq!(front.is_err(), vacant);
        if let Ok(f) = front {
            prop_assert_eq!(f.length, f.curve.len());
            prop_assert!(f.max_deviation <= n as f64 / 2.0 + 1.0);
        }
    }

    #[test]
    fn front_edges_separate_phases(radius in 6.0f64..30.0, seed in any::<u64>()) {
        let sample = ramp_sample(radius, 3.0, seed);
        if let Ok(front) = extract_front(&sample, 0.0, f64::INFINITY) {
            prop_assert_eq!(front.winding.abs(), 1);
            prop_assert_eq!(front.vertices.len(), front.edges.len());
            for e in &front.edges {
                prop_assert_eq!(sample.is_occupied(e.inside), Some(true));
                prop_assert_eq!(sample.is_occupied(e.outside()), Some(false));
            }
        }
    }

    #[test]
    fn front_ignores_region_enlargement(radius in 6.0f64..30.0, extra in 1.0f64..20.0, seed in any::<u64>()) {
        let small = extract_front(&ramp_sample(radius, 2.0, seed), 0.0, f64::INFINITY);
        let large = extract_front(&ramp_sample(radius, 2.0 + extra, seed), 0.0, f64::INFINITY);
        match (small, large) {
            (Ok(s), Ok(l)) => prop_assert_eq!(s, l),
            (Err(_), Err(_)) => {}
            (s, l) => prop_assert!(false, "outcomes differ: {:?} / {:?}", s.is_ok(), l.is_ok()),
        }
    }

    #[test]
    fn occupancy_grid_round_trip(
        pairs in prop::collection::vec(((-50i32..50, -50i32..50), 0u32..1000), 0..200),
        n in any::<u64>(), t in any::<u32>(), seed in any::<u64>(),
        arrivals in prop::collection::vec(any::<u64>(), 0..10),
    ) {
        let pairs = pairs.into_iter().map(|((a, b), c)| (SitePos::new(a, b), c)).collect();
        let field = OccupancyField::from_counts(EngineMode::Source, n, 1.5, t, seed, arrivals, pairs);
        let mut bytes = Vec::new();
        write_occupancy(&field, &mut bytes).unwrap();
        prop_assert_eq!(read_occupancy(&bytes[..]).unwrap(), field);
    }

    #[test]
    fn percolation_grid_round_trip(r in 0.0f64..40.0, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let region = Arc::new(Region::build(RegionSpec::Disk { r }).unwrap());
        let sample = sample_bernoulli(|_| p, region, seed).unwrap();
        let mut bytes = Vec::new();
        write_percolation(&sample, &mut bytes).unwrap();
        let back = read_percolation(&bytes[..]).unwrap();
        prop_assert_eq!(back.status(), sample.status());
        prop_assert_eq!(back.region().sites(), sample.region().sites());
        prop_assert_eq!(back.provenance(), sample.provenance());
    }

    #[test]
    fn config_round_trips(
        kind in prop::sample::select(vec![
            ExperimentKind::RegimeSweep, ExperimentKind::DenseFront, ExperimentKind::DiluteCheck,
            ExperimentKind::Strip, ExperimentKind::CharLength, ExperimentKind::SourceGrowth,
        ]),
        seed in 0u64..(1u64 << 63), replicas in 1u32..100,
        times in prop::collection::vec(1u32..100_000, 1..6),
        scale in 0.01f64..4.0, epsilon in 0.01f64..0.99,
    ) {
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.seed = seed;
        cfg.replicas = replicas;
        cfg.times = times;
        cfg.scale = scale;
        cfg.epsilon = epsilon;
        prop_assert_eq!(&ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), &cfg);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn engines_ignore_worker_count(seed in any::<u64>(), t in 1u32..300) {
        let region = Region::build(RegionSpec::Disk { r: 3.0 * (t as f64).sqrt() + 2.0 }).unwrap();
        let run = || {
            (
                sample_poisson_field(4 * t as u64, t, &region, KernelMode::Lclt, seed).unwrap(),
                simulate_particles(3000, &[t / 2, t], seed).unwrap(),
                simulate_source(5.0, &[t], seed).unwrap(),
            )
        };
        let one = in_pool(1, run);
        let three = in_pool(3, run);
        prop_assert_eq!(one, three);
    }
}
