//! Least-squares fits of `log(excess)` against `log(n)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fewest distinct sample sizes a slope may be fitted from.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(n, excess)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Sample sizes dropped because their excess was not positive.
    pub excluded: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub slope_stderr: f64,
    /// `−1/(2 − θ)` when `θ` is known.
    pub predicted: Option<f64>,
}

impl RateFit {
    /// `slope ± 2·stderr`.
    pub fn band(&self) -> (f64, f64) {
        (
            self.slope - 2.0 * self.slope_stderr,
            self.slope + 2.0 * self.slope_stderr,
        )
    }
}

pub fn predicted_exponent(theta: f64) -> f64 {
    -1.0 / (2.0 - theta)
}

/// Natural-log least squares on positive `(n, excess)` pairs.
pub fn fit_log_log(pairs: &[(f64, f64)], theta: Option<f64>) -> Result<RateFit> {
    let (points, excluded): (Vec<_>, Vec<_>) = pairs
        .iter()
        .copied()
        .partition(|(n, e)| *n > 0.0 && *e > 0.0 && e.is_finite());
    let excluded: Vec<f64> = excluded.into_iter().map(|(n, _)| n).collect();
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < MIN_FIT_POINTS {
        return Err(Error::RateFit {
            found: ns.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let residual = (sse / k).sqrt();
    let slope_stderr = if k > 2.0 {
        (sse / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        points,
        excluded,
        slope,
        intercept,
        residual,
        slope_stderr,
        predicted: theta.map(predicted_exponent),
    })
}

/// Median; the mean of the middle pair for even lengths. NaN when empty.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_log_log(
            &[(10.0, 1.0), (100.0, 0.1), (1000.0, 0.01), (10000.0, 0.001)],
            Some(1.0),
        )
        .unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9);
        assert!(f.residual < 1e-12);
        assert_eq!(f.predicted, Some(-1.0));
    }

    #[test]
    fn nonpositive_excluded() {
        let pairs = [
            (10.0, 1.0),
            (100.0, 0.0),
            (1000.0, 0.01),
            (10000.0, 0.001),
            (1e5, 1e-4),
        ];
        let f = fit_log_log(&pairs, None).unwrap();
        assert_eq!(f.excluded, vec![100.0]);
        assert!((f.slope + 1.0).abs() < 1e-9);
        let e = fit_log_log(&pairs[..4], None).unwrap_err();
        assert_eq!(
            e,
            Error::RateFit {
                found: 3,
                required: 4
            }
        );
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
        assert!((predicted_exponent(0.5) + 2.0 / 3.0).abs() < 1e-15);
    }
}
