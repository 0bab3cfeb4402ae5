//! Smoothing and trend checks for learning curves.

/// Centered moving average with half-width `k`, truncated at the ends.
pub fn moving_average(v: &[f64], k: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Linear interpolation of the curve `points` (sorted by x) at each of
/// `xs`, clamped to the end values outside the sampled range.
pub fn resample(points: &[(f64, f64)], xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let j = points.partition_point(|p| p.0 < x);
            if j == 0 {
                points[0].1
            } else if j == points.len() {
                points[j - 1].1
            } else {
                let ((x0, y0), (x1, y1)) = (points[j - 1], points[j]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
        .collect()
}

/// `k` evenly spaced points `n/k, 2n/k, …, n`.
pub fn even_grid(n: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| n * i as f64 / k as f64).collect()
}

/// Each value is at most `(1 + rel_tol)` times its predecessor.
pub fn is_nonincreasing(v: &[f64], rel_tol: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel_tol))
}

/// Index pairs where [`is_nonincreasing`] fails.
pub fn rises(v: &[f64], rel_tol: f64) -> Vec<usize> {
    v.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] * (1.0 + rel_tol))
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_and_trend() {
        assert_eq!(
            moving_average(&[1.0, 2.0, 3.0, 10.0], 1),
            vec![1.5, 2.0, 5.0, 6.5]
        );
        assert_eq!(moving_average(&[4.0], 3), vec![4.0]);
        let bumpy = [5.0, 4.0, 4.1, 3.0, 2.0, 2.05, 1.0];
        assert!(!is_nonincreasing(&bumpy, 0.0));
        assert!(is_nonincreasing(&bumpy, 0.03));
        assert_eq!(rises(&bumpy, 0.0), vec![2, 5]);
        assert!(is_nonincreasing(&moving_average(&bumpy, 1), 0.0));
    }

    #[test]
    fn resampling() {
        let pts = [(1.0, 10.0), (3.0, 6.0), (7.0, 2.0)];
        assert_eq!(
            resample(&pts, &[0.0, 1.0, 2.0, 5.0, 7.0, 9.0]),
            vec![10.0, 10.0, 8.0, 4.0, 2.0, 2.0]
        );
        assert_eq!(even_grid(10.0, 4), vec![2.5, 5.0, 7.5, 10.0]);
    }
}
