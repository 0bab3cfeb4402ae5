use std::collections::BTreeMap;

use adasa_core::rates::{fit_log_log, median, RateFit};

use crate::summary::SummaryRow;
use crate::BenchError;

/// Per-`n` medians of the excess risk of successful cells of `algorithm`.
pub fn median_excess(rows: &[SummaryRow], algorithm: &str) -> Vec<(u64, f64)> {
    let mut by_n: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.algorithm == algorithm && r.ok()) {
        if let Some(e) = r.excess_risk {
            by_n.entry(r.n).or_default().push(e);
        }
    }
    by_n.into_iter().map(|(n, v)| (n, median(&v))).collect()
}

/// Log-log slope of the median excess risk against `n`. Sample sizes whose
/// median is not positive are dropped with a warning.
pub fn fit_rate(
    rows: &[SummaryRow],
    algorithm: &str,
    theta: Option<f64>,
) -> Result<RateFit, BenchError> {
    if !rows.iter().any(|r| r.algorithm == algorithm) {
        return Err(BenchError::Input(format!(
            "no rows for algorithm '{algorithm}'"
        )));
    }
    let pairs: Vec<(f64, f64)> = median_excess(rows, algorithm)
        .into_iter()
        .map(|(n, e)| (n as f64, e))
        .collect();
    let fit = fit_log_log(&pairs, theta)?;
    for n in &fit.excluded {
        log::warn!("{algorithm}: median excess at n = {n} is not positive; left out of the fit");
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(pairs: &[(u64, f64)]) -> Vec<SummaryRow> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(n, e))| SummaryRow {
                problem: "p".into(),
                algorithm: "asa".into(),
                n,
                replicate: i,
                seed: 0,
                stream: i as u64,
                samples_used: Some(n),
                excess_risk: Some(e),
                test_error: None,
                wall_ms: Some(0.0),
                stage_count: Some(1),
                trace_file: None,
                error: None,
            })
            .collect()
    }

    #[test]
    fn exact_line() {
        let r = rows(&[(10, 1.0), (100, 0.1), (1000, 0.01), (10000, 0.001)]);
        let f = fit_rate(&r, "asa", None).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn medians_and_exclusion() {
        let mut r = rows(&[
            (10, 1.0),
            (10, 3.0),
            (10, 2.0),
            (100, 0.0),
            (1000, 0.01),
            (10000, 0.001),
            (100000, 1e-4),
        ]);
        r[1].error = Some("boom".into());
        assert_eq!(median_excess(&r, "asa")[0], (10, 1.5));
        let f = fit_rate(&r, "asa", Some(1.0)).unwrap();
        assert_eq!(f.excluded, vec![100.0]);
        assert_eq!(f.predicted, Some(-1.0));
    }

    #[test]
    fn too_few_points_or_unknown_algorithm() {
        let r = rows(&[(10, 1.0), (100, 0.1), (1000, 0.01)]);
        assert!(fit_rate(&r, "asa", None).is_err());
        assert!(fit_rate(&r, "ssg", None).is_err());
    }
}
