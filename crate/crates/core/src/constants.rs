//! Numerically calibrated constants and resource caps.
//!
//! Each calibrated value was measured once with the procedure noted next to
//! it and then frozen; the test suite checks them on fresh data.

use serde::{Deserialize, Serialize};

use crate::occupation::lambda_constants;

/// `C` in `π_t(z) ≤ C·e^{−‖z‖²/2t}`; holds for every `t ≤ 256`.
pub const HOEFFDING_C: f64 = 1.0;

/// `C` in `max_{‖z‖ ≤ t^{9/16}} |π_t(z)/π̄_t(‖z‖) − 1| ≤ C·t^{−3/4}` for
/// `t ≥ 400`; measured 0.1121 at `t = 400`, rounded up.
pub const LCLT_C: f64 = 0.12;

/// `C` in `max |ρ_t(z) − ρ̄_t(‖z‖)| ≤ C·t^{−9/16}` over
/// `t^{7/16} ≤ ‖z‖ ≤ t^{9/16}`; measured 0.01285 at `t = 256`, plus 25%.
pub const CUMULATIVE_DEVIATION_C: f64 = 0.0161;

/// `C₁ = (√3 e⁻¹/2π)·2ε` with `ε = 0.1`.
pub const CUMULATIVE_FLOOR_C1: f64 = 0.2 * crate::walk_kernel::LCLT_PREFACTOR / std::f64::consts::E;

/// `C₂` in `min_{‖z‖ ≤ t^{1/2−ε}} ρ_t(z) ≥ C₁ ln t − C₂`. The measured
/// `C₁ ln t − min ρ_t` is negative (−0.120 at `t = 256`, −0.147 at `t = 1024`),
/// so `C₂ = 0` suffices.
pub const CUMULATIVE_FLOOR_C2: f64 = 0.0;

/// `c` in the dilute-phase bound `diameter ≤ c·ln n`, calibrated by a pilot
/// run at `n = 10⁴`, `t = 10⁴` on seeds `10⁶..10⁶+100`, disjoint from the
/// test seeds. Largest diameter seen: 12.99 = 1.41·ln n.
pub const DILUTE_DIAMETER_FACTOR: f64 = 2.0;

/// `r*_{μ,t} / √t` for `μ = 50`.
pub const SOURCE_MU50_RSTAR_OVER_SQRT_T: f64 = 1.407_049_295_499_4;

/// Largest time accepted by the exact kernel.
pub const KERNEL_CAP: u64 = 4096;

/// Largest particle count of the particle engines.
pub const PARTICLE_CAP: u64 = 50_000_000;

/// Largest simulated time.
pub const TIME_CAP: u64 = 10_000_000;

/// Everything printed by the `constants` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub lambda_c: f64,
    pub lambda_max: f64,
    pub ratio: f64,
    pub inv_e: f64,
    pub floor_lambda_max_1e4: u64,
    pub floor_lambda_c_1e4: u64,
    pub hoeffding_c: f64,
    pub lclt_c: f64,
    pub cumulative_deviation_c: f64,
    pub cumulative_floor_c1: f64,
    pub cumulative_floor_c2: f64,
    pub dilute_diameter_factor: f64,
    pub source_mu50_rstar_over_sqrt_t: f64,
    pub kernel_cap: u64,
    pub particle_cap: u64,
    pub time_cap: u64,
}

impl Constants {
    pub fn current() -> Self {
        let (lc, lm) = lambda_constants();
        Constants {
            lambda_c: lc,
            lambda_max: lm,
            ratio: lm / lc,
            inv_e: (-1.0f64).exp(),
            floor_lambda_max_1e4: (lm * 1e4).floor() as u64,
            floor_lambda_c_1e4: (lc * 1e4).floor() as u64,
            hoeffding_c: HOEFFDING_C,
            lclt_c: LCLT_C,
            cumulative_deviation_c: CUMULATIVE_DEVIATION_C,
            cumulative_floor_c1: CUMULATIVE_FLOOR_C1,
            cumulative_floor_c2: CUMULATIVE_FLOOR_C2,
            dilute_diameter_factor: DILUTE_DIAMETER_FACTOR,
            source_mu50_rstar_over_sqrt_t: SOURCE_MU50_RSTAR_OVER_SQRT_T,
            kernel_cap: KERNEL_CAP,
            particle_cap: PARTICLE_CAP,
            time_cap: TIME_CAP,
        }
    }
}
