//! Measures the calibrated constants frozen in `constants.rs`.
//!
//! Run with `cargo run --release --example calibrate`.

use std::sync::Arc;

use diffront::constants::{CUMULATIVE_FLOOR_C1, KERNEL_CAP};
use diffront::geometry::connected_clusters;
use diffront::lattice::{Region, RegionSpec};
use diffront::sampler::{occupancy_to_percolation, simulate_particles};
use diffront::walk_kernel::{
    cumulative_kernel, cumulative_max_deviation, cumulative_min_near_origin, exact_distribution,
    lclt_max_relative_error,
};

fn main() {
    for t in [100u32, 200, 400, 800] {
        let f = exact_distribution(t, KERNEL_CAP as u32).unwrap();
        let e = lclt_max_relative_error(&f);
        println!(
            "lclt t={t} err={e:.6e} err*t^0.75={:.6}",
            e * (t as f64).powf(0.75)
        );
    }
    for t in [256u32, 1024] {
        let c = cumulative_kernel(t, KERNEL_CAP as u32).unwrap();
        let d = cumulative_max_deviation(&c);
        let m = cumulative_min_near_origin(&c, 0.1);
        println!(
            "cumulative t={t} dev={d:.6e} dev*t^(9/16)={:.6} min={m:.6} c1*ln(t)-min={:.6}",
            d * (t as f64).powf(9.0 / 16.0),
            CUMULATIVE_FLOOR_C1 * (t as f64).ln() - m
        );
    }
    let n = 10_000u64;
    let mut worst = 0.0f64;
    for seed in 1_000_000..1_000_100u64 {
        let f = simulate_particles(n, &[10_000], seed).unwrap().remove(0);
        let (a1, a2, b1, b2) = f.support_box().unwrap();
        let region = Arc::new(Region::build(RegionSpec::Parallelogram { a1, a2, b1, b2 }).unwrap());
        let s = occupancy_to_percolation(&f, region);
        worst = worst.max(connected_clusters(&s).max_diameter());
    }
    println!(
        "dilute pilot max diameter {worst:.4} / ln n = {:.4}",
        worst / (n as f64).ln()
    );
}
