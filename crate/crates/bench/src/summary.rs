//! Quantile and rolling-median summaries of experiment records.

use std::collections::BTreeMap;

use crate::error::HarnessError;
use crate::experiment::RunRecord;

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical quantile of already sorted data, interpolating linearly between
/// order statistics. `-inf` entries stay `-inf` instead of turning into NaN.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if frac == 0.0 || a == b {
        a
    } else if a.is_infinite() || b.is_infinite() {
        // -inf * (1 - frac) + b * frac
        if a == f64::NEG_INFINITY {
            a
        } else {
            b
        }
    } else {
        a + (b - a) * frac
    }
}

pub fn quantile(xs: &[f64], q: f64) -> Result<f64, HarnessError> {
    check_quantile(q)?;
    if xs.is_empty() {
        return Err(HarnessError::Data("quantile of empty data".into()));
    }
    Ok(quantile_sorted(&sorted(xs), q))
}

pub fn median(xs: &[f64]) -> Result<f64, HarnessError> {
    quantile(xs, 0.5)
}

fn check_quantile(q: f64) -> Result<(), HarnessError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("quantile {q} is outside [0, 1]")))
    }
}

/// Per-iteration quantiles of `best_log_weight_so_far` across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary {
    pub quantiles: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `series[k][i]`: quantile `k` at `iterations[i]`.
    pub series: Vec<Vec<f64>>,
}

impl QuantileSummary {
    /// Name used for quantile `k` in figure tables, e.g. `q0.25`.
    pub fn series_name(&self, k: usize) -> String {
        format!("q{}", self.quantiles[k])
    }

    pub fn final_values(&self) -> Vec<f64> {
        self.series.iter().map(|s| *s.last().expect("nonempty summary")).collect()
    }
}

pub fn quantile_summary(records: &[RunRecord], quantiles: &[f64]) -> Result<QuantileSummary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Data("no records to summarize".into()));
    }
    for &q in quantiles {
        check_quantile(q)?;
    }
    let mut by_iteration: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_iteration.entry(r.iteration).or_default().push(r.best_log_weight_so_far);
    }
    let mut series = vec![Vec::with_capacity(by_iteration.len()); quantiles.len()];
    for values in by_iteration.values() {
        let s = sorted(values);
        for (k, &q) in quantiles.iter().enumerate() {
            series[k].push(quantile_sorted(&s, q));
        }
    }
    Ok(QuantileSummary {
        quantiles: quantiles.to_vec(),
        iterations: by_iteration.into_keys().collect(),
        series,
    })
}

/// Centered rolling median. Near the ends the window is truncated to the
/// available samples; an even number of samples yields the lower median.
pub fn rolling_median(series: &[f64], window: usize) -> Result<Vec<f64>, HarnessError> {
    if window == 0 || window % 2 == 0 {
        return Err(HarnessError::Config(format!("rolling window must be odd, got {window}")));
    }
    let half = window / 2;
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let mut win: Vec<f64> = Vec::with_capacity(window);
    let insert = |win: &mut Vec<f64>, x: f64| {
        let at = win.partition_point(|y| y.total_cmp(&x).is_lt());
        win.insert(at, x);
    };
    // The window for position i is [i - half, i + half] clipped to the data.
    let mut hi = 0;
    for i in 0..n {
        while hi < n && hi <= i + half {
            insert(&mut win, series[hi]);
            hi += 1;
        }
        if i > half {
            let old = series[i - half - 1];
            let at = win.partition_point(|y| y.total_cmp(&old).is_lt());
            win.remove(at);
        }
        out.push(win[(win.len() - 1) / 2]);
    }
    Ok(out)
}

/// Mean of `xs[range]`.
pub fn mean_over(xs: &[f64], range: std::ops::Range<usize>) -> f64 {
    let slice = &xs[range];
    slice.iter().sum::<f64>() / slice.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_closed_cases() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[0.0, 10.0], 0.25).unwrap(), 2.5);
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn quantile_with_negative_infinity() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(quantile(&[ninf, 1.0], 0.5).unwrap(), ninf);
        assert_eq!(quantile(&[ninf, 1.0], 1.0).unwrap(), 1.0);
        assert_eq!(quantile(&[ninf, ninf], 0.3).unwrap(), ninf);
    }

    #[test]
    fn rolling_median_examples() {
        assert_eq!(rolling_median(&[4.0; 6], 3).unwrap(), vec![4.0; 6]);
        assert_eq!(
            rolling_median(&[1.0, 100.0, 1.0, 100.0, 1.0], 3).unwrap(),
            vec![1.0, 1.0, 100.0, 1.0, 1.0]
        );
        assert_eq!(rolling_median(&[5.0, 1.0, 3.0], 1).unwrap(), vec![5.0, 1.0, 3.0]);
        assert_eq!(rolling_median(&[], 3).unwrap(), Vec::<f64>::new());
        assert!(rolling_median(&[1.0], 4).is_err());
        assert!(rolling_median(&[1.0], 0).is_err());
    }

    #[test]
    fn window_wider_than_series() {
        // Every position sees the whole series except for truncation.
        assert_eq!(rolling_median(&[3.0, 1.0, 2.0], 101).unwrap(), vec![2.0, 2.0, 2.0]);
    }
}
