//! Occupation probabilities and the analytic profile layer.
//!
//! Fixed-`n` model: `p̄_{n,t}(r) = 1 − exp(−n π̄_t(r))`, critical radius
//! `r* = √(t·ln(λ_c n / t))`, defined up to the dislocation time
//! `t_c = λ_c n`. Source model: `q̄_{μ,t}(r) = 1 − exp(−μ ρ̄_t(r))` with
//! `r*_{μ,t} = √(E₁⁻¹(2π ln2 / (μ√3)))·√t`.
//!
//! All radii here are real numbers in lattice units; discretization to sites
//! only happens in the samplers.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SitePos, SQRT3};
use crate::walk_kernel::{exp_integral, inverse_exp_integral, WalkField, LCLT_PREFACTOR};

/// Default half-width of the transition window for `r^±` in the fixed-`n` model.
pub const DEFAULT_DELTA: f64 = 0.1;

/// Default crossing threshold used for characteristic lengths.
pub const DEFAULT_EPSILON: f64 = 0.25;

/// `λ_c = √3 / (2π ln 2)`.
pub fn lambda_c() -> f64 {
    SQRT3 / (2.0 * PI * LN_2)
}

/// `(λ_c, λ_max)` with `λ_max = λ_c / e`.
pub fn lambda_constants() -> (f64, f64) {
    let lc = lambda_c();
    (lc, lc / std::f64::consts::E)
}

/// `1 − (1 − π_t(z))ⁿ`, the chance that at least one of `n` walkers sits at `z`.
pub fn exact_occupation_prob(n: u64, field: &WalkField, z: SitePos) -> f64 {
    let pi = field.get(z);
    if pi >= 1.0 {
        return 1.0;
    }
    -(n as f64 * (-pi).ln_1p()).exp_m1()
}

/// `1 − e^{−n π_t(z)}`, the occupation probability with a Poisson number of walkers.
pub fn poisson_occupation_prob(n: u64, field: &WalkField, z: SitePos) -> f64 {
    -(-(n as f64) * field.get(z)).exp_m1()
}

/// Local-limit density with a real-valued time.
pub fn lclt_density_real(t: f64, r: f64) -> f64 {
    LCLT_PREFACTOR / t * (-r * r / t).exp()
}

/// `p̄_{n,t}(r) = 1 − exp(−n π̄_t(r))`.
pub fn radial_profile(n: f64, t: f64, r: f64) -> f64 {
    -(-n * lclt_density_real(t, r)).exp_m1()
}

/// `r*_{n,t} = √(t ln(λ_c n / t))`, or `None` past the dislocation time.
pub fn critical_radius(n: f64, t: f64) -> Option<f64> {
    let ratio = lambda_c() * n / t;
    if ratio < 1.0 {
        None
    } else {
        Some((t * ratio.ln()).max(0.0).sqrt())
    }
}

/// `q̄_{μ,t}(r) = 1 − exp(−μ ρ̄_t(r))` for `r > 0`.
pub fn source_profile(mu: f64, t: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source profile requires r > 0, got {r}"
        )));
    }
    let rho = LCLT_PREFACTOR * exp_integral(r * r / t)?;
    Ok(-(-mu * rho).exp_m1())
}

/// `r*_{μ,t}`: the radius where the source profile crosses 1/2.
pub fn source_critical_radius(mu: f64, t: f64) -> Result<f64> {
    if !(mu > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source critical radius requires mu > 0 and t > 0, got ({mu}, {t})"
        )));
    }
    let x = inverse_exp_integral(2.0 * PI * LN_2 / (mu * SQRT3))?;
    Ok(x.sqrt() * t.sqrt())
}

/// Model parameters for an occupation profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProfileParams {
    FixedN { n: f64, t: f64 },
    SourceMu { mu: f64, t: f64 },
}

impl ProfileParams {
    pub fn fixed_n(n: f64, t: f64) -> Self {
        ProfileParams::FixedN { n, t }
    }

    pub fn source(mu: f64, t: f64) -> Self {
        ProfileParams::SourceMu { mu, t }
    }

    pub fn t(&self) -> f64 {
        match *self {
            ProfileParams::FixedN { t, .. } | ProfileParams::SourceMu { t, .. } => t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProfileParams::FixedN { n, t } => n >= 1.0 && t >= 1.0,
            ProfileParams::SourceMu { mu, t } => mu > 0.0 && t >= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "profile parameters out of range: {self:?}"
            )))
        }
    }

    /// Profile value at radius `r`. The source profile tends to 1 at `0⁺` and
    /// is reported as 1 at `r = 0`.
    pub fn profile(&self, r: f64) -> f64 {
        match *self {
            ProfileParams::FixedN { n, t } => radial_profile(n, t, r),
            ProfileParams::SourceMu { mu, t } => {
                if r <= 0.0 {
                    1.0
                } else {
                    source_profile(mu, t, r).unwrap_or(1.0)
                }
            }
        }
    }

    /// Supremum of the profile (attained at `r = 0` in fixed-`n` mode).
    pub fn profile_max(&self) -> f64 {
        self.profile(0.0)
    }

    /// `r*`: radius where the profile equals 1/2.
    pub fn critical_radius(&self) -> Option<f64> {
        match *self {
            ProfileParams::FixedN { n, t } => critical_radius(n, t),
            ProfileParams::SourceMu { mu, t } => source_critical_radius(mu, t).ok(),
        }
    }

    /// Targets `(inner, outer)` used for `r⁻` and `r⁺`.
    pub fn window_targets(&self, delta: f64) -> (f64, f64) {
        match self {
            ProfileParams::FixedN { .. } => (0.5 + delta, 0.5 - delta),
            ProfileParams::SourceMu { .. } => (0.75, 0.25),
        }
    }
}

/// Radius at which the profile takes the value `target`, by bisection to
/// floating-point resolution.
pub fn profile_inverse(params: &ProfileParams, target: f64) -> Result<f64> {
    params.validate()?;
    let top = params.profile_max();
    let fixed = matches!(params, ProfileParams::FixedN { .. });
    let attainable = if fixed {
        target > 0.0 && target <= top * (1.0 + 1e-14)
    } else {
        target > 0.0 && target < 1.0
    };
    if !attainable {
        return Err(Error::OutOfRange {
            target,
            low: 0.0,
            high: top,
        });
    }
    if fixed && target >= top {
        return Ok(0.0);
    }
    let mut hi = params.t().sqrt().max(1.0);
    while params.profile(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::OutOfRange {
                target,
                low: 0.0,
                high: top,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if params.profile(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Characteristic length as a function of `|p − 1/2|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LengthModel {
    /// `L = prefactor · |p − 1/2|^{−exponent}`.
    PowerLaw { prefactor: f64, exponent: f64 },
    /// Measured `(|p − 1/2|, L)` pairs, interpolated log-log and extrapolated
    /// with the end slopes.
    Table { points: Vec<(f64, f64)> },
    /// `L ≡ value`.
    Constant { value: f64 },
}

impl Default for LengthModel {
    fn default() -> Self {
        LengthModel::PowerLaw {
            prefactor: 1.0,
            exponent: 4.0 / 3.0,
        }
    }
}

impl LengthModel {
    pub fn length(&self, p: f64) -> f64 {
        let gap = (p - 0.5).abs();
        match self {
            LengthModel::PowerLaw { prefactor, exponent } => {
                if gap == 0.0 {
                    f64::INFINITY
                } else {
                    prefactor * gap.powf(-exponent)
                }
            }
            LengthModel::Constant { value } => *value,
            LengthModel::Table { points } => {
                if gap == 0.0 {
                    return f64::INFINITY;
                }
                let mut pts: Vec<(f64, f64)> = points
                    .iter()
                    .filter(|(g, l)| *g > 0.0 && *l > 0.0)
                    .map(|&(g, l)| (g.ln(), l.ln()))
                    .collect();
                pts.sort_by(|x, y| x.0.total_cmp(&y.0));
                match pts.len() {
                    0 => 0.0,
                    1 => pts[0].1.exp(),
                    m => {
                        let x = gap.ln();
                        let k = pts.windows(2).position(|w| x <= w[1].0).unwrap_or(m - 2);
                        let (x0, y0) = pts[k];
                        let (x1, y1) = pts[k + 1];
                        (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).exp()
                    }
                }
            }
        }
    }
}

/// Largest `σ ≥ 0` such that `cond(σ)` holds, assuming `cond` fails for every
/// `σ` past its last true point and `cond(start)` is the leftmost candidate.
fn sup_where(cond: impl Fn(f64) -> bool, start: f64, cap: Option<f64>) -> f64 {
    if !cond(0.0) {
        return 0.0;
    }
    let mut lo = if cond(start) { start } else { 0.0 };
    if let Some(c) = cap {
        if cond(c) {
            return c;
        }
    }
    let mut hi = lo.max(0.5) * 2.0;
    if let Some(c) = cap {
        hi = hi.min(c);
    }
    while cond(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
        if let Some(c) = cap {
            hi = hi.min(c);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cond(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `σ^± = sup{σ : L(p(⌊r*⌋ ± σ)) ≥ σ}`; returns `(σ⁺, σ⁻)`.
pub fn sigma_fluctuation(params: &ProfileParams, model: &LengthModel) -> Result<(f64, f64)> {
    params.validate()?;
    let r_star = params.critical_radius().ok_or_else(|| {
        Error::InvalidParameter("critical radius undefined past the dislocation time".into())
    })?;
    let r0 = r_star.floor();
    let plus = sup_where(|s| model.length(params.profile(r0 + s)) >= s, r_star - r0, None);
    let minus = sup_where(
        |s| model.length(params.profile((r0 - s).max(0.0))) >= s,
        0.0,
        Some(r0),
    );
    Ok((plus, minus))
}

/// Summary of the critical quantities for one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSummary {
    pub lambda_c: f64,
    pub lambda_max: f64,
    pub r_star: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    /// Mean of `σ⁺` and `σ⁻`.
    pub sigma_pred: f64,
}

/// All critical quantities; `None` when `r*` is undefined (dilute side).
pub fn critical_summary(
    params: &ProfileParams,
    delta: f64,
    model: &LengthModel,
) -> Result<Option<CriticalSummary>> {
    params.validate()?;
    let (lambda_c, lambda_max) = lambda_constants();
    let Some(r_star) = params.critical_radius() else {
        return Ok(None);
    };
    let (inner, outer) = params.window_targets(delta);
    if inner >= params.profile_max() {
        return Ok(None);
    }
    let r_minus = profile_inverse(params, inner)?;
    let r_plus = profile_inverse(params, outer)?;
    let (sigma_plus, sigma_minus) = sigma_fluctuation(params, model)?;
    Ok(Some(CriticalSummary {
        lambda_c,
        lambda_max,
        r_star,
        r_minus,
        r_plus,
        sigma_plus,
        sigma_minus,
        sigma_pred: 0.5 * (sigma_plus + sigma_minus),
    }))
}
