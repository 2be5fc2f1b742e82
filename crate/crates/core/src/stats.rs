//! Small order statistics used by the estimators and the experiment reports.

/// Lower median: the element of rank `(len - 1) / 2` in sorted order.
///
/// Panics on an empty slice or NaN input.
pub fn lower_median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("NaN in median"));
    *m
}

/// Entrywise lower median of equally long vectors.
pub fn entrywise_lower_median(rows: &[Vec<f64>]) -> Vec<f64> {
    assert!(!rows.is_empty(), "median of no vectors");
    let len = rows[0].len();
    let mut scratch = vec![0.0; rows.len()];
    (0..len)
        .map(|j| {
            for (s, row) in scratch.iter_mut().zip(rows) {
                *s = row[j];
            }
            lower_median(&mut scratch)
        })
        .collect()
}

/// Linear-interpolation quantile of already sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in data"));
    v
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_median_of_even_count() {
        assert_eq!(lower_median(&mut [4.0, 1.0, 3.0, 2.0]), 2.0);
        assert_eq!(lower_median(&mut [5.0, 1.0, 3.0]), 3.0);
        assert_eq!(lower_median(&mut [7.0]), 7.0);
    }

    #[test]
    fn entrywise_median() {
        let rows = vec![vec![1.0, 9.0], vec![3.0, 8.0], vec![2.0, 7.0]];
        assert_eq!(entrywise_lower_median(&rows), vec![2.0, 8.0]);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.0);
        assert!((quantile_sorted(&s, 0.05) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(sample_std(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(sample_std(&[1.0]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-12);
    }
}
