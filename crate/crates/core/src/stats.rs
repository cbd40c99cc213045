//! Compensated summation and small descriptive statistics shared by the
//! estimators and the study harness.

/// Neumaier-compensated sum.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Sum of squared deviations from the mean (two-pass).
pub fn sum_sq_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    sum(values.iter().map(|v| (v - m) * (v - m)))
}

/// Sample variance with denominator `n - 1`.
pub fn sample_variance(values: &[f64]) -> f64 {
    sum_sq_dev(values) / (values.len() as f64 - 1.0)
}

/// Variance with denominator `n`.
pub fn population_variance(values: &[f64]) -> f64 {
    sum_sq_dev(values) / values.len() as f64
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let cov = sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let va = sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let vb = sum(b.iter().map(|y| (y - mb) * (y - mb)));
    cov / (va * vb).sqrt()
}

/// Centered moving average; the window is truncated at the series ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let win: Vec<f64> = values[lo..hi].iter().copied().filter(|v| v.is_finite()).collect();
            if win.is_empty() {
                f64::NAN
            } else {
                mean(&win)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn variance_denominators() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(sample_variance(&v), 1.0);
        assert!((population_variance(&v) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.5), 1.5);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn moving_average_window_one_is_identity() {
        let v = [1.0, 5.0, 2.0, 8.0];
        assert_eq!(moving_average(&v, 1), v.to_vec());
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let v = [0.0, 3.0, 6.0, 9.0];
        let ma = moving_average(&v, 3);
        assert_eq!(ma, vec![1.5, 3.0, 6.0, 7.5]);
    }
}
