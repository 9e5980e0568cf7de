//! Point-prediction and interval-quality metrics.
//!
//! The interval score for bounds `[L, U]`, observation `y`, and significance
//! `alpha` is
//!
//! ```text
//! IS = max(U - L, eps) + (2/alpha) * [(L - y) 1{y < L} + (y - U) 1{y > U}]
//! ```
//!
//! where `eps` guards against zero-width intervals. Smaller is better: the
//! first term rewards sharpness, the second penalizes coverage violations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geocp::PredictionInterval;

/// RMSE / MAE / R-squared bundle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// `1 - SS_res / SS_tot`; meaningless when the observations have zero
    /// variance, in which case `r2_degenerate` is set.
    pub r2: f64,
    pub r2_degenerate: bool,
}

/// Aggregate interval-quality metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub mean_interval_score: f64,
    pub mean_interval_size: f64,
    /// Fraction of observations inside their interval.
    pub empirical_coverage: f64,
    /// `|coverage - (1 - alpha)|`.
    pub coverage_deviation: f64,
}

/// Computes RMSE, MAE, and R-squared of predictions against observations.
pub fn regression_metrics(pred: &[f64], obs: &[f64]) -> Result<RegressionMetrics> {
    if pred.len() != obs.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: obs.len(),
            context: "predictions vs observations",
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter("empty metric inputs".into()));
    }
    let n = pred.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    for (p, o) in pred.iter().zip(obs) {
        let r = p - o;
        se += r * r;
        ae += r.abs();
    }
    let rmse = (se / n).sqrt();
    let mae = ae / n;

    let obs_mean = obs.iter().sum::<f64>() / n;
    let ss_tot: f64 = obs.iter().map(|o| (o - obs_mean) * (o - obs_mean)).sum();
    let (r2, r2_degenerate) = if ss_tot > 0.0 {
        (1.0 - se / ss_tot, false)
    } else if se == 0.0 {
        (0.0, true)
    } else {
        (f64::NAN, true)
    };
    Ok(RegressionMetrics {
        rmse,
        mae,
        r2,
        r2_degenerate,
    })
}

/// Interval score of a single interval, with a width floor of `1e-6`.
pub fn interval_score(lower: f64, upper: f64, y: f64, alpha: f64) -> Result<f64> {
    interval_score_with_floor(lower, upper, y, alpha, 1e-6)
}

/// Interval score with an explicit zero-width floor.
pub fn interval_score_with_floor(
    lower: f64,
    upper: f64,
    y: f64,
    alpha: f64,
    width_floor: f64,
) -> Result<f64> {
    if lower > upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let width = (upper - lower).max(width_floor);
    let mut penalty = 0.0;
    if y < lower {
        penalty += lower - y;
    }
    if y > upper {
        penalty += y - upper;
    }
    Ok(width + (2.0 / alpha) * penalty)
}

/// Aggregates per-point interval scores, widths, and coverage.
pub fn interval_metrics(
    intervals: &[PredictionInterval],
    observations: &[f64],
    alpha: f64,
) -> Result<IntervalMetrics> {
    if intervals.len() != observations.len() {
        return Err(Error::LengthMismatch {
            left: intervals.len(),
            right: observations.len(),
            context: "intervals vs observations",
        });
    }
    if intervals.is_empty() {
        return Err(Error::InvalidParameter("empty metric inputs".into()));
    }
    let n = intervals.len() as f64;
    let mut score_sum = 0.0;
    let mut size_sum = 0.0;
    let mut covered = 0usize;
    for (iv, &y) in intervals.iter().zip(observations) {
        score_sum += interval_score(iv.lower, iv.upper, y, alpha)?;
        size_sum += iv.upper - iv.lower;
        if y >= iv.lower && y <= iv.upper {
            covered += 1;
        }
    }
    let coverage = covered as f64 / n;
    Ok(IntervalMetrics {
        mean_interval_score: score_sum / n,
        mean_interval_size: size_sum / n,
        empirical_coverage: coverage,
        coverage_deviation: (coverage - (1.0 - alpha)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iv(lower: f64, upper: f64) -> PredictionInterval {
        PredictionInterval {
            lower,
            upper,
            threshold: (upper - lower) / 2.0,
            center: (lower + upper) / 2.0,
        }
    }

    #[test]
    fn perfect_predictions() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.r2, 1.0);
        assert!(!m.r2_degenerate);
    }

    #[test]
    fn worked_rmse_mae() {
        let m = regression_metrics(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_relative_eq!(m.rmse, 3.5355339059327378, max_relative = 1e-12);
        assert_relative_eq!(m.mae, 3.5, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_r2_flagged() {
        let m = regression_metrics(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!(m.r2_degenerate);
        assert_eq!(m.r2, 0.0);
        let m = regression_metrics(&[2.0, 3.0], &[2.0, 2.0]).unwrap();
        assert!(m.r2_degenerate);
        assert!(m.r2.is_nan());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(regression_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn interval_score_examples() {
        assert!((interval_score(0.0, 2.0, 1.0, 0.1).unwrap() - 2.0).abs() < 1e-12);
        assert!((interval_score(0.0, 1.0, 2.0, 0.1).unwrap() - 21.0).abs() < 1e-12);
        assert!((interval_score(1.0, 1.0, 1.0, 0.1).unwrap() - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(matches!(
            interval_score(2.0, 1.0, 1.5, 0.1),
            Err(Error::InvalidBounds { .. })
        ));
    }

    #[test]
    fn interval_metrics_mixed_case() {
        let ivs = [iv(0.0, 2.0), iv(0.0, 1.0)];
        let obs = [1.0, 2.0];
        let m = interval_metrics(&ivs, &obs, 0.1).unwrap();
        assert_relative_eq!(m.mean_interval_score, 11.5, max_relative = 1e-12);
        assert_relative_eq!(m.mean_interval_size, 1.5, max_relative = 1e-12);
        assert_relative_eq!(m.empirical_coverage, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn all_covered_and_none_covered() {
        let ivs = [iv(0.0, 2.0), iv(1.0, 3.0)];
        let m = interval_metrics(&ivs, &[1.0, 2.0], 0.1).unwrap();
        assert_eq!(m.empirical_coverage, 1.0);
        assert_relative_eq!(m.coverage_deviation, 0.1, max_relative = 1e-9);
        let m = interval_metrics(&ivs, &[10.0, -5.0], 0.1).unwrap();
        assert_eq!(m.empirical_coverage, 0.0);
    }

    proptest! {
        #[test]
        fn interval_score_translation_invariant(
            l in -50.0f64..50.0,
            w in 0.0f64..20.0,
            y in -100.0f64..100.0,
            c in -30.0f64..30.0,
        ) {
            let a = interval_score(l, l + w, y, 0.1).unwrap();
            let b = interval_score(l + c, l + w + c, y + c, 0.1).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn interval_score_monotone_in_violation(
            l in -10.0f64..10.0,
            w in 0.0f64..5.0,
            v1 in 0.0f64..10.0,
            v2 in 0.0f64..10.0,
        ) {
            let (small, big) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            let u = l + w;
            let a = interval_score(l, u, u + small, 0.1).unwrap();
            let b = interval_score(l, u, u + big, 0.1).unwrap();
            prop_assert!(a <= b + 1e-12);
        }

        #[test]
        fn mean_score_at_least_mean_size(
            widths in proptest::collection::vec(0.01f64..5.0, 1..30),
            ys in proptest::collection::vec(-10.0f64..10.0, 30),
        ) {
            let ivs: Vec<PredictionInterval> =
                widths.iter().map(|&w| iv(-w / 2.0, w / 2.0)).collect();
            let obs = &ys[..ivs.len()];
            let m = interval_metrics(&ivs, obs, 0.1).unwrap();
            prop_assert!(m.mean_interval_score >= m.mean_interval_size - 1e-12);
        }
    }
}
