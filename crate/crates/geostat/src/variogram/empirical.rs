//! Empirical semivariogram estimation.
//!
//! The per-bin estimate is the mean of squared half-differences
//! `0.5 * (z_i - z_j)^2` over the pairs falling in the bin. The fixed
//! estimator uses equal-width bins and the plain mean; the adaptive
//! estimator picks its bin layout from the pairwise-distance distribution
//! (Silverman's rule or equal-probability quantiles) and replaces the mean
//! with a trimmed mean.
//!
//! A trimmed mean of squared Gaussian differences is biased low, so the
//! adaptive estimator rescales it by the trimmed-mean expectation of a
//! chi-square(1) variable at the realized trim fraction. This keeps the
//! estimator unbiased for Gaussian fields while still shedding outliers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::spatial::PointSet;
use crate::stats::{quantile_sorted, sample_std};

use super::EmpiricalVariogram;

/// Bin-layout rule for the adaptive estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptiveBinning {
    /// Equal-width bins, count from Silverman's bandwidth rule on the
    /// pairwise-distance sample (reconciled with `auto_n_lags`).
    Silverman,
    /// Bin edges at equal-probability quantiles of the pairwise distances.
    Quantile,
}

/// Automatic lag count: `round(sqrt(n))` clamped to `[8, 20]`.
pub fn auto_n_lags(n: usize) -> usize {
    assert!(n >= 2, "need at least two samples");
    ((n as f64).sqrt().round() as usize).clamp(8, 20)
}

/// All pairwise (distance, squared half-difference) tuples, `i < j`.
fn pair_sample(ps: &PointSet) -> Vec<(f64, f64)> {
    let pts = ps.points();
    let vals = ps.values();
    let n = ps.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i].distance(&pts[j]);
            let dz = vals[i] - vals[j];
            pairs.push((d, 0.5 * dz * dz));
        }
    }
    pairs
}

/// Equal-width empirical variogram over `[0, truncate_frac * max_distance]`.
///
/// Bins are half-open except the last; pairs beyond the truncated span are
/// ignored. `include_zero` controls whether zero-distance pairs (duplicate
/// locations) contribute to the first bin. Bins with fewer than `min_pairs`
/// pairs are dropped. Lag centers are the bin midpoints.
pub fn empirical_variogram_fixed(
    ps: &PointSet,
    n_lags: usize,
    truncate_frac: f64,
    include_zero: bool,
    min_pairs: usize,
) -> Result<EmpiricalVariogram> {
    if ps.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 points for an empirical variogram".into(),
        ));
    }
    if n_lags < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 lag bins, got {n_lags}"
        )));
    }
    if !(truncate_frac > 0.0 && truncate_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "truncate_frac must lie in (0, 1], got {truncate_frac}"
        )));
    }

    let pairs = pair_sample(ps);
    let max_d = pairs.iter().map(|p| p.0).fold(0.0f64, f64::max);
    if max_d <= 0.0 {
        // All points coincide: everything is a zero-distance pair.
        if !include_zero {
            return Err(Error::AllBinsEmpty);
        }
        let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if vs.len() < min_pairs.max(1) {
            return Err(Error::AllBinsEmpty);
        }
        let gamma = vs.iter().sum::<f64>() / vs.len() as f64;
        return EmpiricalVariogram::from_parts(
            vec![0.0],
            vec![gamma],
            vec![vs.len()],
            vec![vs.len() as f64],
            vec![(0.0, 0.0)],
        );
    }

    let span = truncate_frac * max_d;
    let width = span / n_lags as f64;
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); n_lags];
    for &(d, v) in &pairs {
        if d == 0.0 && !include_zero {
            continue;
        }
        if d > span {
            continue;
        }
        let idx = ((d / width).floor() as usize).min(n_lags - 1);
        buckets[idx].push(v);
    }

    let centers: Vec<f64> = (0..n_lags).map(|k| (k as f64 + 0.5) * width).collect();
    let edges: Vec<(f64, f64)> = (0..n_lags)
        .map(|k| (k as f64 * width, (k as f64 + 1.0) * width))
        .collect();
    collect_bins(&buckets, &centers, &edges, min_pairs, 0.0)
}

/// Adaptive-bin empirical variogram with a trimmed-mean per-bin estimate.
///
/// The bin count comes from `auto_n_lags` (Silverman mode may reduce it
/// further); lag centers are the mean pair distance within each bin.
pub fn empirical_variogram_adaptive(
    ps: &PointSet,
    binning: AdaptiveBinning,
    trim_frac: f64,
    min_pairs: usize,
) -> Result<EmpiricalVariogram> {
    if ps.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "adaptive binning needs at least 8 points, got {}",
            ps.len()
        )));
    }
    if !(0.0..=0.25).contains(&trim_frac) {
        return Err(Error::InvalidParameter(format!(
            "trim_frac must lie in [0, 0.25], got {trim_frac}"
        )));
    }

    let pairs = pair_sample(ps);
    let mut dists: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    dists.sort_unstable_by(f64::total_cmp);
    let max_d = *dists.last().expect("pairs non-empty");
    if max_d <= 0.0 {
        return Err(Error::AllBinsEmpty);
    }

    let auto = auto_n_lags(ps.len());
    let n_bins = match binning {
        AdaptiveBinning::Silverman => silverman_bin_count(&dists).min(auto),
        AdaptiveBinning::Quantile => auto,
    };

    // Edges: equal width over [0, max_d] or distance quantiles.
    let edges: Vec<f64> = match binning {
        AdaptiveBinning::Silverman => {
            let width = max_d / n_bins as f64;
            (0..=n_bins).map(|k| k as f64 * width).collect()
        }
        AdaptiveBinning::Quantile => {
            let mut e: Vec<f64> = (0..=n_bins)
                .map(|k| quantile_sorted(&dists, k as f64 / n_bins as f64))
                .collect();
            e[0] = 0.0;
            e.dedup_by(|a, b| *a <= *b);
            e
        }
    };
    let n_bins = edges.len() - 1;
    if n_bins == 0 {
        return Err(Error::AllBinsEmpty);
    }

    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    let mut dist_sums = vec![0.0f64; n_bins];
    for &(d, v) in &pairs {
        // Half-open bins, last one closed.
        let idx = match edges[1..].iter().position(|&e| d < e) {
            Some(i) => i,
            None if d <= edges[n_bins] => n_bins - 1,
            None => continue,
        };
        buckets[idx].push(v);
        dist_sums[idx] += d;
    }

    let centers: Vec<f64> = buckets
        .iter()
        .zip(&dist_sums)
        .map(|(b, &s)| if b.is_empty() { 0.0 } else { s / b.len() as f64 })
        .collect();
    let edge_pairs: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    collect_bins(&buckets, &centers, &edge_pairs, min_pairs, trim_frac)
}

/// Bin count from Silverman's bandwidth rule on the sorted distance sample.
fn silverman_bin_count(sorted_dists: &[f64]) -> usize {
    let p = sorted_dists.len();
    let sd = sample_std(sorted_dists);
    let iqr = quantile_sorted(sorted_dists, 0.75) - quantile_sorted(sorted_dists, 0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = 0.9 * scale * (p as f64).powf(-0.2);
    let range = sorted_dists.last().unwrap() - sorted_dists.first().unwrap();
    if bandwidth <= 0.0 || !bandwidth.is_finite() || range <= 0.0 {
        return 20;
    }
    ((range / bandwidth).ceil() as usize).clamp(8, 20)
}

fn collect_bins(
    buckets: &[Vec<f64>],
    centers: &[f64],
    edges: &[(f64, f64)],
    min_pairs: usize,
    trim_frac: f64,
) -> Result<EmpiricalVariogram> {
    let min_pairs = min_pairs.max(1);
    let mut lag_centers = Vec::new();
    let mut gamma_hat = Vec::new();
    let mut pair_counts = Vec::new();
    let mut bin_weights = Vec::new();
    let mut kept_edges = Vec::new();
    for (k, bucket) in buckets.iter().enumerate() {
        if bucket.len() < min_pairs {
            continue;
        }
        let gamma = trimmed_mean_corrected(bucket, trim_frac);
        if !gamma.is_finite() {
            continue;
        }
        lag_centers.push(centers[k]);
        gamma_hat.push(gamma);
        pair_counts.push(bucket.len());
        bin_weights.push(bucket.len() as f64);
        kept_edges.push(edges[k]);
    }
    if lag_centers.is_empty() {
        return Err(Error::AllBinsEmpty);
    }
    EmpiricalVariogram::from_parts(lag_centers, gamma_hat, pair_counts, bin_weights, kept_edges)
}

/// Trimmed mean of squared half-differences, rescaled for consistency under
/// Gaussian increments.
///
/// `floor(trim_frac * n)` values are dropped from each tail. With no trimming
/// this is the plain mean and no rescaling happens.
fn trimmed_mean_corrected(values: &[f64], trim_frac: f64) -> f64 {
    let n = values.len();
    let k = (trim_frac * n as f64).floor() as usize;
    if k == 0 {
        return values.iter().sum::<f64>() / n as f64;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let kept = &sorted[k..n - k];
    let raw = kept.iter().sum::<f64>() / kept.len() as f64;
    raw / chi2_trimmed_mean(k as f64 / n as f64)
}

/// Expected trimmed mean of a chi-square(1) variable with fraction `f`
/// removed from each tail. Uses the identity
/// `E[X 1{X <= t}] = F_3(t)` for X ~ chi-square(1).
fn chi2_trimmed_mean(f: f64) -> f64 {
    debug_assert!((0.0..0.5).contains(&f));
    if f == 0.0 {
        return 1.0;
    }
    let chi1 = ChiSquared::new(1.0).expect("valid dof");
    let chi3 = ChiSquared::new(3.0).expect("valid dof");
    let lo = chi1.inverse_cdf(f);
    let hi = chi1.inverse_cdf(1.0 - f);
    (chi3.cdf(hi) - chi3.cdf(lo)) / (1.0 - 2.0 * f)
}
