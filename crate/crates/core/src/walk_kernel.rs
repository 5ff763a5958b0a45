//! Single-walker distributions on the triangular lattice.
//!
//! Exact kernels `π_t` are computed by repeated convolution with the uniform
//! six-neighbor step, on a dense hexagonal array that only sweeps the current
//! support (`|a|, |b|, |a+b| ≤ t`). The cumulative kernel `ρ_t = Σ_{u≤t} π_u`
//! is accumulated alongside with compensated summation.
//!
//! The continuum counterparts are the local-limit density
//! `π̄_t(r) = √3/(2πt)·e^{−r²/t}` and `ρ̄_t(r) = (√3/2π)·E₁(r²/t)`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{SitePos, SQRT3};

/// `√3 / (2π)`: the lattice's site density factor in the local limit theorem.
pub const LCLT_PREFACTOR: f64 = SQRT3 / (2.0 * PI);

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Square array indexed by axial coordinates in `[-radius, radius]²`.
#[derive(Clone, Debug)]
struct HexArray {
    radius: i32,
    side: usize,
    data: Vec<f64>,
}

impl HexArray {
    fn new(radius: i32) -> Self {
        let side = (2 * radius + 1) as usize;
        HexArray {
            radius,
            side,
            data: vec![0.0; side * side],
        }
    }

    #[inline]
    fn offset(&self, a: i32, b: i32) -> usize {
        (a + self.radius) as usize * self.side + (b + self.radius) as usize
    }

    fn get(&self, z: SitePos) -> f64 {
        if z.a.abs() > self.radius || z.b.abs() > self.radius {
            0.0
        } else {
            self.data[self.offset(z.a, z.b)]
        }
    }
}

/// Inclusive `b` range of the hexagon `|a|, |b|, |a+b| ≤ r` in row `a`.
#[inline]
fn hex_row(a: i32, r: i32) -> (i32, i32) {
    ((-r).max(-r - a), r.min(r - a))
}

/// Sites of the hexagon of radius `r` in lexicographic order.
fn hexagon(r: i32) -> impl Iterator<Item = SitePos> {
    (-r..=r).flat_map(move |a| {
        let (lo, hi) = hex_row(a, r);
        (lo..=hi).map(move |b| SitePos::new(a, b))
    })
}

/// Exact distribution `π_t` of a simple random walk started at the origin.
#[derive(Clone, Debug)]
pub struct WalkField {
    t: u32,
    values: HexArray,
}

impl WalkField {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn get(&self, z: SitePos) -> f64 {
        self.values.get(z)
    }

    /// Sites of the support hexagon with their probabilities, in lexicographic
    /// order. Zero entries inside the hexagon are included.
    pub fn iter(&self) -> impl Iterator<Item = (SitePos, f64)> + '_ {
        hexagon(self.t as i32).map(move |z| (z, self.values.get(z)))
    }

    /// Total mass, compensated.
    pub fn total(&self) -> f64 {
        neumaier_sum(self.iter().map(|(_, v)| v))
    }

    /// Writes `a,b,value` rows for all nonzero sites.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_field_csv(out, self.iter())
    }
}

/// Cumulative kernel `ρ_t(z) = Σ_{u=0..t} π_u(z)`.
#[derive(Clone, Debug)]
pub struct CumulativeField {
    t: u32,
    values: HexArray,
}

impl CumulativeField {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn get(&self, z: SitePos) -> f64 {
        self.values.get(z)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SitePos, f64)> + '_ {
        hexagon(self.t as i32).map(move |z| (z, self.values.get(z)))
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.iter().map(|(_, v)| v))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_field_csv(out, self.iter())
    }
}

fn write_field_csv<W: Write>(mut out: W, rows: impl Iterator<Item = (SitePos, f64)>) -> std::io::Result<()> {
    writeln!(out, "a,b,value")?;
    for (z, v) in rows.filter(|&(_, v)| v != 0.0) {
        writeln!(out, "{},{},{:e}", z.a, z.b, v)?;
    }
    Ok(())
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_cap(t: u32, cap: u32) -> Result<()> {
    if t > cap {
        Err(Error::ResourceCap {
            what: "kernel time",
            requested: t as u64,
            cap: cap as u64,
        })
    } else {
        Ok(())
    }
}

/// Steps `π_u → π_{u+1}` one time unit at a time, optionally accumulating
/// `ρ_u` along the way.
#[derive(Debug)]
pub struct KernelEvolver {
    cap: u32,
    current: WalkField,
    scratch: HexArray,
    cumulative: Option<(HexArray, HexArray)>,
}

impl KernelEvolver {
    /// Starts at `π_0 = δ_origin`. Storage covers times up to `cap`.
    pub fn new(cap: u32, track_cumulative: bool) -> Self {
        let radius = cap as i32 + 1;
        let mut pi = HexArray::new(radius);
        let o = pi.offset(0, 0);
        pi.data[o] = 1.0;
        let cumulative = track_cumulative.then(|| {
            let mut rho = HexArray::new(radius);
            rho.data[o] = 1.0;
            (rho, HexArray::new(radius))
        });
        KernelEvolver {
            cap,
            current: WalkField { t: 0, values: pi },
            scratch: HexArray::new(radius),
            cumulative,
        }
    }

    pub fn time(&self) -> u32 {
        self.current.t
    }

    pub fn current(&self) -> &WalkField {
        &self.current
    }

    /// Advances one step.
    pub fn advance(&mut self) -> Result<()> {
        let t_next = self.current.t + 1;
        check_cap(t_next, self.cap)?;
        let r = t_next as i32;
        let old = &self.current.values;
        let radius = old.radius;
        let side = old.side;
        self.scratch
            .data
            .par_chunks_mut(side)
            .enumerate()
            .for_each(|(row, out)| {
                let a = row as i32 - radius;
                if a.abs() > r {
                    return;
                }
                let (lo, hi) = hex_row(a, r);
                let base = |aa: i32| (aa + radius) as usize * side;
                let (prev, here, next) = (base(a - 1), base(a), base(a + 1));
                for b in lo..=hi {
                    let j = (b + radius) as usize;
                    // z - d for d in DIRECTIONS, in that order
                    let s = old.data[prev + j]
                        + old.data[here + j - 1]
                        + old.data[next + j - 1]
                        + old.data[next + j]
                        + old.data[here + j + 1]
                        + old.data[prev + j + 1];
                    out[j] = s / 6.0;
                }
            });
        std::mem::swap(&mut self.current.values, &mut self.scratch);
        self.current.t = t_next;
        if let Some((rho, comp)) = self.cumulative.as_mut() {
            let pi = &self.current.values;
            for z in hexagon(r) {
                let k = pi.offset(z.a, z.b);
                // Kahan update of rho with pi
                let y = pi.data[k] - comp.data[k];
                let s = rho.data[k] + y;
                comp.data[k] = (s - rho.data[k]) - y;
                rho.data[k] = s;
            }
        }
        Ok(())
    }

    pub fn advance_to(&mut self, t: u32) -> Result<()> {
        check_cap(t, self.cap)?;
        while self.current.t < t {
            self.advance()?;
        }
        Ok(())
    }

    /// Snapshot of `ρ_t` if cumulative tracking is enabled.
    pub fn cumulative(&self) -> Option<CumulativeField> {
        self.cumulative.as_ref().map(|(rho, _)| CumulativeField {
            t: self.current.t,
            values: rho.clone(),
        })
    }

    /// `ρ_t(z)` without copying the field.
    pub fn cumulative_at(&self, z: SitePos) -> Option<f64> {
        self.cumulative.as_ref().map(|(rho, _)| rho.get(z))
    }

    pub fn into_distribution(self) -> WalkField {
        self.current
    }
}

/// `π_t` by `t`-fold convolution. Fails if `t` exceeds `cap`.
pub fn exact_distribution(t: u32, cap: u32) -> Result<WalkField> {
    check_cap(t, cap)?;
    let mut ev = KernelEvolver::new(t, false);
    ev.advance_to(t)?;
    Ok(ev.into_distribution())
}

/// `ρ_t` accumulated during the convolution. Fails if `t` exceeds `cap`.
pub fn cumulative_kernel(t: u32, cap: u32) -> Result<CumulativeField> {
    check_cap(t, cap)?;
    let mut ev = KernelEvolver::new(t, true);
    ev.advance_to(t)?;
    Ok(ev.cumulative().expect("tracking enabled"))
}

/// Local-limit density `π̄_t(r) = √3/(2πt)·e^{−r²/t}`.
pub fn lclt_density(t: u32, r: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParameter(
            "the local-limit density is undefined at t = 0".into(),
        ));
    }
    let t = t as f64;
    Ok(LCLT_PREFACTOR / t * (-r * r / t).exp())
}

/// Largest `|π_t(z)/π̄_t(‖z‖) − 1|` over sites with `‖z‖ ≤ t^{9/16}`.
pub fn lclt_max_relative_error(field: &WalkField) -> f64 {
    let t = field.t();
    if t == 0 {
        return f64::NAN;
    }
    let r_max = (t as f64).powf(9.0 / 16.0);
    field
        .iter()
        .filter(|(z, _)| z.norm() <= r_max)
        .map(|(z, v)| (v / lclt_density(t, z.norm()).unwrap() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Gaussian tail envelope `C·e^{−r²/2t}`.
///
/// At `t = 0` the walk sits at the origin; the envelope is `C` there and zero
/// elsewhere.
pub fn hoeffding_envelope(t: u32, r: f64, c: f64) -> f64 {
    if t == 0 {
        return if r == 0.0 { c } else { 0.0 };
    }
    c * (-r * r / (2.0 * t as f64)).exp()
}

/// Checks `π_t(z) ≤ C·e^{−‖z‖²/2t}` on every site of the field and returns
/// the largest ratio `π_t(z) / envelope`.
pub fn validate_hoeffding(field: &WalkField, c: f64) -> Result<f64> {
    let t = field.t();
    let mut worst = 0.0f64;
    for (z, v) in field.iter() {
        if v == 0.0 {
            continue;
        }
        let bound = hoeffding_envelope(t, z.norm(), c);
        if v > bound {
            return Err(Error::EnvelopeViolated {
                t,
                a: z.a,
                b: z.b,
                value: v,
                bound,
            });
        }
        worst = worst.max(v / bound);
    }
    Ok(worst)
}

/// Exponential integral `E₁(x) = ∫_x^∞ e^{−u}/u du` for `x > 0`.
///
/// Power series with the `−γ − ln x` leading terms for `x ≤ 1`, modified
/// Lentz continued fraction above.
pub fn exp_integral(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("E1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(h * (-x).exp())
    }
}

/// Inverse of `E₁` on `(0, ∞)`, by bisection in log space.
pub fn inverse_exp_integral(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse E1 requires a finite y > 0, got {y}"
        )));
    }
    // E1(x) > -ln x - γ - ... so the root lies in a generous bracket
    let (mut lo, mut hi) = (-800.0f64, 7.0f64);
    while exp_integral(hi.exp())? > y {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if exp_integral(mid.exp())? > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Continuum cumulative kernel `ρ̄_t(r) = (√3/2π)·E₁(r²/t)`.
pub fn rho_bar(t: u32, r: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParameter("rho_bar requires t >= 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rho_bar diverges at r = {r}; requires r > 0"
        )));
    }
    Ok(LCLT_PREFACTOR * exp_integral(r * r / t as f64)?)
}

/// Largest `|ρ_t(z) − ρ̄_t(‖z‖)|` over `t^{7/16} ≤ ‖z‖ ≤ t^{9/16}`.
pub fn cumulative_max_deviation(field: &CumulativeField) -> f64 {
    let t = field.t();
    let (lo, hi) = ((t as f64).powf(7.0 / 16.0), (t as f64).powf(9.0 / 16.0));
    field
        .iter()
        .filter(|(z, _)| (lo..=hi).contains(&z.norm()))
        .map(|(z, v)| (v - rho_bar(t, z.norm()).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Smallest `ρ_t(z)` over `‖z‖ ≤ t^{1/2 − eps}`.
pub fn cumulative_min_near_origin(field: &CumulativeField, eps: f64) -> f64 {
    let r = (field.t() as f64).powf(0.5 - eps);
    field
        .iter()
        .filter(|(z, _)| z.norm() <= r)
        .map(|(_, v)| v)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DIRECTIONS;

    /// Adaptive Simpson on `E₁(x) = ∫_{ln x}^{∞} exp(−e^v) dv`, a smooth
    /// integrand independent of the series / continued-fraction code paths.
    fn e1_quadrature(x: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (l, r) = (simpson(f, a, m), simpson(f, m, b));
            if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
                l + r + (l + r - whole) / 15.0
            } else {
                adapt(f, a, m, l, tol / 2.0, depth - 1) + adapt(f, m, b, r, tol / 2.0, depth - 1)
            }
        }
        let f = |v: f64| (-v.exp()).exp();
        let (a, b) = (x.ln(), (x + 60.0).ln());
        let whole = simpson(&f, a, b);
        adapt(&f, a, b, whole, 1e-14 * whole, 60)
    }

    #[test]
    fn small_time_kernels() {
        let p0 = exact_distribution(0, 10).unwrap();
        assert_eq!(p0.get(SitePos::ORIGIN), 1.0);
        assert_eq!(p0.total(), 1.0);
        let p1 = exact_distribution(1, 10).unwrap();
        assert_eq!(p1.get(SitePos::ORIGIN), 0.0);
        for d in DIRECTIONS {
            assert!((p1.get(d) - 1.0 / 6.0).abs() < 1e-16);
        }
        let p2 = exact_distribution(2, 10).unwrap();
        // six out-and-back paths of weight 1/36
        assert!((p2.get(SitePos::ORIGIN) - 1.0 / 6.0).abs() < 1e-16);
        // two-step paths through a common neighbor: no parity constraint
        for d in DIRECTIONS {
            assert!((p2.get(d) - 2.0 / 36.0).abs() < 1e-16);
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            exact_distribution(11, 10),
            Err(Error::ResourceCap { .. })
        ));
        assert!(matches!(
            cumulative_kernel(11, 10),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn kernel_mass_support_and_symmetry() {
        let mut ev = KernelEvolver::new(64, false);
        for t in 1..=64u32 {
            ev.advance().unwrap();
            let f = ev.current();
            assert!((f.total() - 1.0).abs() < 1e-12, "t={t}");
            for (z, v) in f.iter() {
                assert!((0.0..=1.0).contains(&v));
                if t % 16 == 0 {
                    for w in z.dihedral_images() {
                        assert!((f.get(w) - v).abs() <= 1e-12 * v.max(1e-300) + 1e-300);
                    }
                }
            }
            // nothing leaks outside the support hexagon
            let r = t as i32 + 1;
            for a in -r..=r {
                for b in -r..=r {
                    let z = SitePos::new(a, b);
                    if a.abs().max(b.abs()).max((a + b).abs()) > t as i32 {
                        assert_eq!(f.get(z), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn cumulative_examples() {
        let r0 = cumulative_kernel(0, 10).unwrap();
        assert_eq!(r0.get(SitePos::ORIGIN), 1.0);
        assert_eq!(r0.get(SitePos::new(1, 0)), 0.0);
        let r2 = cumulative_kernel(2, 10).unwrap();
        assert!((r2.get(SitePos::ORIGIN) - 7.0 / 6.0).abs() < 1e-15);
        let mut ev = KernelEvolver::new(100, true);
        let mut prev = ev.cumulative().unwrap();
        for t in 1..=100u32 {
            ev.advance().unwrap();
            let cur = ev.cumulative().unwrap();
            assert!((cur.total() - (t as f64 + 1.0)).abs() < 1e-9);
            if t % 20 == 0 {
                for (z, v) in prev.iter() {
                    assert!(cur.get(z) >= v);
                }
            }
            assert!(cur.get(SitePos::ORIGIN) >= 1.0);
            prev = cur;
        }
    }

    #[test]
    fn lclt_examples() {
        assert!((lclt_density(1, 0.0).unwrap() - 0.275_664_4).abs() < 1e-7);
        assert!(lclt_density(0, 0.0).is_err());
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let v = lclt_density(37, k as f64).unwrap();
            assert!(v < last);
            last = v;
        }
        assert_eq!(lclt_density(37, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn hoeffding_envelope_algebra() {
        assert_eq!(hoeffding_envelope(9, 0.0, 2.5), 2.5);
        let (t, r, c) = (17u32, 3.7f64, 1.3f64);
        let lhs = hoeffding_envelope(t, r * 2f64.sqrt(), c);
        let rhs = hoeffding_envelope(2 * t, 2.0 * r, c);
        assert!((lhs - c * (-r * r / t as f64).exp()).abs() < 1e-15);
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn hoeffding_holds_with_unit_constant() {
        let mut ev = KernelEvolver::new(256, false);
        for _ in 0..256 {
            ev.advance().unwrap();
            let worst = validate_hoeffding(ev.current(), crate::constants::HOEFFDING_C).unwrap();
            assert!(worst <= 1.0);
        }
        let f = exact_distribution(1, 1).unwrap();
        assert!(validate_hoeffding(&f, 0.1).is_err());
    }

    #[test]
    fn exp_integral_against_quadrature() {
        let oracle = e1_quadrature(1.0);
        assert!((oracle - 0.219_383_9).abs() < 1e-7);
        for &x in &[1e-6, 1e-4, 0.01, 0.3, 0.999, 1.0, 1.001, 2.0, 5.0, 13.0, 40.0] {
            let got = exp_integral(x).unwrap();
            let want = e1_quadrature(x);
            assert!(((got - want) / want).abs() < 1e-10, "x={x}: {got} vs {want}");
        }
        assert!(exp_integral(1.0).unwrap() > exp_integral(2.0).unwrap());
        assert!(exp_integral(0.0).is_err());
        assert!(exp_integral(-1.0).is_err());
        for &x in &[1e-4, 1e-6] {
            let lim = e1_quadrature(x) + f64::ln(x);
            assert!((lim + 0.577_215_7).abs() < 2.0 * x + 1e-7);
            assert!((exp_integral(x).unwrap() + x.ln() + EULER_GAMMA).abs() < 2.0 * x);
        }
    }

    #[test]
    fn inverse_exp_integral_round_trips() {
        for &y in &[1e-8, 0.05, 0.219_383_934_395_520_3, 1.0, 7.0, 30.0] {
            let x = inverse_exp_integral(y).unwrap();
            assert!((exp_integral(x).unwrap() / y - 1.0).abs() < 1e-12, "y={y}");
        }
        assert!(inverse_exp_integral(0.0).is_err());
    }

    #[test]
    fn rho_bar_examples() {
        let v = rho_bar(100, 10.0).unwrap();
        // LCLT prefactor times E1(1)
        assert!((v - 0.275_664_448_7 * 0.219_383_934_4).abs() < 1e-9);
        assert!((v - 0.060_476_7).abs() < 1e-6);
        assert!(rho_bar(100, 0.0).is_err());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let f = exact_distribution(1, 4).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "a,b,value");
        assert_eq!(lines.len(), 7);
    }
}
