//! Log-log least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidParameter(
            "scaling fits need positive coordinates".into(),
        ));
    }
    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::InvalidParameter(
            "scaling fit abscissae must be strictly increasing".into(),
        ));
    }
    let m = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse.max(0.0) / (m - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        stderr,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [10.0f64, 100.0, 1000.0]
            .iter()
            .map(|&x| (x, x.powf(5.0 / 7.0)))
            .collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.slope - 5.0 / 7.0).abs() < 1e-12);
        assert!(f.stderr < 1e-7);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_scaling(&pts[..2]).is_err());
        assert!(fit_scaling(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_scaling(&[(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn slope_ignores_prefactor(c in 1e-3f64..1e3, k in -3.0f64..3.0) {
            let pts: Vec<(f64, f64)> = (1..6).map(|i| {
                let x = i as f64 * 1.7;
                (x, c * x.powf(k))
            }).collect();
            let f = fit_scaling(&pts).unwrap();
            prop_assert!((f.slope - k).abs() < 1e-9);
            prop_assert!(f.stderr >= 0.0);
        }
    }
}
