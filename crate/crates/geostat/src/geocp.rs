//! Geospatial conformal prediction.
//!
//! Split conformal prediction computes nonconformity scores (absolute
//! residuals) on a calibration set and thresholds new predictions at a score
//! quantile. Here each test location weights the calibration scores with a
//! Gaussian kernel over geographic distance,
//!
//! ```text
//! w_i = exp(-0.5 * (d(test, calib_i) / sigma)^2)
//! ```
//!
//! so nearby calibration points dominate the quantile and interval widths
//! vary over space. The threshold is the weighted (1 - alpha)-quantile
//! `inf { t : sum_i w_i 1{a_i <= t} >= q }`, either stepwise (exactly that
//! infimum) or interpolated (piecewise-linear through the cumulative
//! weights).
//!
//! All distance computations run on coordinates standardized to zero mean
//! and unit variance per axis, fit on the calibration coordinates; kernel
//! bandwidths are expressed in those units.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::interval_score;
use crate::optimize::golden_section_min;
use crate::spatial::Point2;
use crate::stats::sample_std;

/// Per-axis affine standardization fit on calibration coordinates.
#[derive(Debug, Clone, Copy)]
pub struct CoordStandardizer {
    mean: (f64, f64),
    std: (f64, f64),
}

impl CoordStandardizer {
    fn fit(coords: &[Point2]) -> Self {
        let n = coords.len() as f64;
        let mean_x = coords.iter().map(|p| p.x).sum::<f64>() / n;
        let mean_y = coords.iter().map(|p| p.y).sum::<f64>() / n;
        let xs: Vec<f64> = coords.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = coords.iter().map(|p| p.y).collect();
        let std_x = sample_std(&xs);
        let std_y = sample_std(&ys);
        Self {
            mean: (mean_x, mean_y),
            std: (
                if std_x > 0.0 { std_x } else { 1.0 },
                if std_y > 0.0 { std_y } else { 1.0 },
            ),
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2 {
            x: (p.x - self.mean.0) / self.std.0,
            y: (p.y - self.mean.1) / self.std.1,
        }
    }
}

/// Calibration nonconformity scores anchored at their locations.
#[derive(Debug, Clone)]
pub struct CalibrationScores {
    coords: Vec<Point2>,
    scores: Vec<f64>,
    std_coords: Vec<Point2>,
    standardizer: CoordStandardizer,
}

impl CalibrationScores {
    /// Builds the calibration set; scores must be finite and nonnegative.
    pub fn new(coords: Vec<Point2>, scores: Vec<f64>) -> Result<Self> {
        let standardizer = if coords.is_empty() {
            return Err(Error::InvalidParameter(
                "calibration set must be non-empty".into(),
            ));
        } else {
            CoordStandardizer::fit(&coords)
        };
        Self::with_standardizer(coords, scores, standardizer)
    }

    /// Same, but reusing an existing standardizer (used when scoring a
    /// subset of a larger calibration set in the same coordinate frame).
    pub(crate) fn with_standardizer(
        coords: Vec<Point2>,
        scores: Vec<f64>,
        standardizer: CoordStandardizer,
    ) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter(
                "calibration set must be non-empty".into(),
            ));
        }
        if coords.len() != scores.len() {
            return Err(Error::LengthMismatch {
                left: coords.len(),
                right: scores.len(),
                context: "calibration coords vs scores",
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nonconformity score at index {i} must be finite and nonnegative"
            )));
        }
        let std_coords = coords.iter().map(|&p| standardizer.apply(p)).collect();
        Ok(Self {
            coords,
            scores,
            std_coords,
            standardizer,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn coords(&self) -> &[Point2] {
        &self.coords
    }

    pub(crate) fn standardizer(&self) -> CoordStandardizer {
        self.standardizer
    }

    /// Distances from a (raw) test point to every calibration point, in
    /// standardized coordinates.
    fn distance_row(&self, test: Point2) -> Vec<f64> {
        let t = self.standardizer.apply(test);
        self.std_coords.iter().map(|p| t.distance(p)).collect()
    }
}

/// Kernel-bandwidth policy for the geographic weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelPolicy {
    /// Legacy kernel `exp(-0.5 d^2)` with implicit unit bandwidth and no
    /// weight normalization.
    FixedLegacy,
    /// Fixed bandwidth, normalized weights.
    FixedSigma { sigma: f64 },
    /// Per-test bandwidth from the distance to the k-th nearest calibration
    /// point, clipped to `clip`; optionally floored at half the standard
    /// deviation of the test point's distance row.
    KnnAdaptive {
        k: usize,
        clip: (f64, f64),
        dispersion_floor: bool,
    },
    /// Single global bandwidth chosen by multi-start search minimizing the
    /// mean interval score on a calibration holdout.
    OptimizedSigma { search: BandwidthSearch },
}

/// Multi-start bandwidth search configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSearch {
    pub n_starts: usize,
    pub sigma_bounds: (f64, f64),
    pub holdout_frac: f64,
    pub seed: u64,
}

impl Default for BandwidthSearch {
    fn default() -> Self {
        Self {
            n_starts: 8,
            sigma_bounds: (0.01, 2.0),
            holdout_frac: 0.2,
            seed: 0,
        }
    }
}

/// A kernel policy with any global bandwidth search already carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedKernel {
    FixedLegacy,
    FixedSigma(f64),
    KnnAdaptive {
        k: usize,
        clip: (f64, f64),
        dispersion_floor: bool,
    },
}

impl KernelPolicy {
    fn validate(&self) -> Result<()> {
        match *self {
            KernelPolicy::FixedLegacy => Ok(()),
            KernelPolicy::FixedSigma { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "kernel bandwidth must be positive, got {sigma}"
                    )));
                }
                Ok(())
            }
            KernelPolicy::KnnAdaptive { k, clip, .. } => {
                if k == 0 {
                    return Err(Error::InvalidParameter("knn bandwidth needs k >= 1".into()));
                }
                if !(clip.0 > 0.0 && clip.0 <= clip.1 && clip.1.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "clip bounds must satisfy 0 < lo <= hi, got [{}, {}]",
                        clip.0, clip.1
                    )));
                }
                Ok(())
            }
            KernelPolicy::OptimizedSigma { search } => {
                if search.n_starts == 0 {
                    return Err(Error::InvalidParameter(
                        "bandwidth search needs at least one start".into(),
                    ));
                }
                if !(search.sigma_bounds.0 > 0.0 && search.sigma_bounds.0 <= search.sigma_bounds.1)
                {
                    return Err(Error::InvalidParameter(format!(
                        "sigma bounds must satisfy 0 < lo <= hi, got [{}, {}]",
                        search.sigma_bounds.0, search.sigma_bounds.1
                    )));
                }
                if !(search.holdout_frac > 0.0 && search.holdout_frac <= 0.5) {
                    return Err(Error::InvalidParameter(format!(
                        "holdout fraction must lie in (0, 0.5], got {}",
                        search.holdout_frac
                    )));
                }
                Ok(())
            }
        }
    }

    /// Resolves the policy against a calibration set; `OptimizedSigma` runs
    /// its global bandwidth search here, once.
    pub fn resolve(&self, calib: &CalibrationScores, alpha: f64) -> Result<ResolvedKernel> {
        self.validate()?;
        Ok(match *self {
            KernelPolicy::FixedLegacy => ResolvedKernel::FixedLegacy,
            KernelPolicy::FixedSigma { sigma } => ResolvedKernel::FixedSigma(sigma),
            KernelPolicy::KnnAdaptive {
                k,
                clip,
                dispersion_floor,
            } => ResolvedKernel::KnnAdaptive {
                k,
                clip,
                dispersion_floor,
            },
            KernelPolicy::OptimizedSigma { search } => {
                ResolvedKernel::FixedSigma(optimize_bandwidth(calib, &search, alpha)?)
            }
        })
    }
}

/// Geographic weights for one test point, plus the underflow flag.
#[derive(Debug, Clone)]
pub struct GeoWeights {
    pub weights: Vec<f64>,
    /// Every raw kernel weight underflowed to zero; uniform weights were
    /// substituted.
    pub degenerate: bool,
}

/// Absolute-residual nonconformity score.
pub fn nonconformity_abs(prediction: f64, observation: f64) -> f64 {
    (prediction - observation).abs()
}

/// Gaussian kernel weights of the calibration points for one test location.
///
/// `FixedLegacy` returns raw `exp(-0.5 d^2)` without normalization; every
/// other kernel normalizes so the weights sum to one. If all raw weights
/// underflow to zero the result falls back to uniform weights and is
/// flagged degenerate.
pub fn geo_weights(test: Point2, calib: &CalibrationScores, kernel: &ResolvedKernel) -> GeoWeights {
    let dists = calib.distance_row(test);
    let m = dists.len();
    let (raw, normalize): (Vec<f64>, bool) = match *kernel {
        ResolvedKernel::FixedLegacy => {
            (dists.iter().map(|d| (-0.5 * d * d).exp()).collect(), false)
        }
        ResolvedKernel::FixedSigma(sigma) => (
            dists
                .iter()
                .map(|d| {
                    let r = d / sigma;
                    (-0.5 * r * r).exp()
                })
                .collect(),
            true,
        ),
        ResolvedKernel::KnnAdaptive {
            k,
            clip,
            dispersion_floor,
        } => {
            let mut sorted = dists.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            let mut sigma = sorted[k.min(m) - 1];
            if dispersion_floor {
                sigma = sigma.max(0.5 * sample_std(&dists));
            }
            sigma = sigma.clamp(clip.0, clip.1);
            (
                dists
                    .iter()
                    .map(|d| {
                        let r = d / sigma;
                        (-0.5 * r * r).exp()
                    })
                    .collect(),
                true,
            )
        }
    };

    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return GeoWeights {
            weights: vec![1.0 / m as f64; m],
            degenerate: true,
        };
    }
    let weights = if normalize {
        raw.iter().map(|w| w / total).collect()
    } else {
        raw
    };
    GeoWeights {
        weights,
        degenerate: false,
    }
}

/// Quantile-level rule for which cumulative weight triggers the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelRule {
    /// `ceil((1 - alpha)(N + 1)) / N`, slightly conservative.
    Ceiling,
    /// `(1 - alpha)(N + 1) / N`.
    NoCeiling,
}

/// How the weighted quantile is extracted from the cumulative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantileMethod {
    Stepwise,
    Interpolated,
}

/// Conformal quantile level for a calibration size and significance.
pub fn quantile_level(n: usize, alpha: f64, rule: LevelRule) -> f64 {
    assert!(n >= 1, "calibration size must be at least 1");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let raw = (1.0 - alpha) * (n as f64 + 1.0);
    let level = match rule {
        LevelRule::Ceiling => raw.ceil(),
        LevelRule::NoCeiling => raw,
    } / n as f64;
    level.min(1.0)
}

/// Normalizes in place; all-zero weights become uniform.
fn normalized_weights(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

fn sorted_score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort: equal scores keep input order.
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// Smallest score whose cumulative (normalized) weight reaches `q`.
///
/// Falls back to the maximum score when accumulated float error leaves every
/// cumulative weight below `q`.
pub fn weighted_quantile_stepwise(scores: &[f64], weights: &[f64], q: f64) -> f64 {
    assert!(!scores.is_empty(), "quantile of empty scores");
    assert_eq!(scores.len(), weights.len(), "scores vs weights length");
    let w = normalized_weights(weights);
    let order = sorted_score_order(scores);
    let mut cum = 0.0;
    for &i in &order {
        cum += w[i];
        if cum >= q {
            return scores[i];
        }
    }
    scores[*order.last().expect("non-empty")]
}

/// Piecewise-linear weighted quantile through the cumulative-weight curve.
///
/// Clamps to the smallest score below the first cumulative weight and to the
/// largest score at or above the last.
pub fn weighted_quantile_interpolated(scores: &[f64], weights: &[f64], q: f64) -> f64 {
    assert!(!scores.is_empty(), "quantile of empty scores");
    assert_eq!(scores.len(), weights.len(), "scores vs weights length");
    let w = normalized_weights(weights);
    let order = sorted_score_order(scores);
    let sorted: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
    let mut cum = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += w[i];
        cum.push(acc);
    }
    let idx = cum.partition_point(|&c| c < q);
    if idx == 0 {
        return sorted[0];
    }
    if idx >= sorted.len() {
        return *sorted.last().expect("non-empty");
    }
    let (c0, s0) = (cum[idx - 1], sorted[idx - 1]);
    let (c1, s1) = (cum[idx], sorted[idx]);
    if c1 <= c0 {
        return s1;
    }
    s0 + (q - c0) / (c1 - c0) * (s1 - s0)
}

/// Seeded fit/holdout index split used by the bandwidth search.
pub(crate) fn split_fit_holdout(m: usize, frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_hold = ((m as f64 * frac).floor() as usize).max(1);
    let holdout = indices[..n_hold].to_vec();
    let fit = indices[n_hold..].to_vec();
    (fit, holdout)
}

/// Mean interval score over a holdout, thresholding with fixed-`sigma`
/// weights from the fit part.
pub(crate) fn bandwidth_objective(
    fit: &CalibrationScores,
    holdout_coords: &[Point2],
    holdout_scores: &[f64],
    sigma: f64,
    alpha: f64,
    q: f64,
) -> f64 {
    let kernel = ResolvedKernel::FixedSigma(sigma);
    let mut total = 0.0;
    for (&coord, &score) in holdout_coords.iter().zip(holdout_scores) {
        let gw = geo_weights(coord, fit, &kernel);
        let t = weighted_quantile_stepwise(fit.scores(), &gw.weights, q);
        // Absolute-residual geometry: IS depends only on (threshold, score).
        total += interval_score(-t, t, score, alpha).expect("valid interval");
    }
    total / holdout_coords.len() as f64
}

/// Multi-start global bandwidth search.
///
/// Splits the calibration set into fit/holdout parts (seeded), then runs a
/// golden-section refinement around each of `n_starts` log-spaced starting
/// bandwidths; the bounds and the raw starts also compete as candidates.
/// Returns the bandwidth with the smallest mean holdout interval score,
/// ties to the smaller bandwidth. Deterministic given the seed.
pub fn optimize_bandwidth(
    calib: &CalibrationScores,
    search: &BandwidthSearch,
    alpha: f64,
) -> Result<f64> {
    const MIN_CALIBRATION: usize = 10;
    KernelPolicy::OptimizedSigma { search: *search }.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let m = calib.len();
    if m < MIN_CALIBRATION {
        return Err(Error::InsufficientCalibration {
            got: m,
            need: MIN_CALIBRATION,
        });
    }
    let (lo, hi) = search.sigma_bounds;
    if lo == hi {
        return Ok(lo);
    }

    let (fit_idx, hold_idx) = split_fit_holdout(m, search.holdout_frac, search.seed);
    let fit = CalibrationScores::with_standardizer(
        fit_idx.iter().map(|&i| calib.coords[i]).collect(),
        fit_idx.iter().map(|&i| calib.scores[i]).collect(),
        calib.standardizer(),
    )?;
    let hold_coords: Vec<Point2> = hold_idx.iter().map(|&i| calib.coords[i]).collect();
    let hold_scores: Vec<f64> = hold_idx.iter().map(|&i| calib.scores[i]).collect();
    let q = quantile_level(fit.len(), alpha, LevelRule::NoCeiling);

    let objective =
        |sigma: f64| bandwidth_objective(&fit, &hold_coords, &hold_scores, sigma, alpha, q);

    let starts: Vec<f64> = if search.n_starts == 1 {
        vec![(lo.ln() + hi.ln()) / 2.0]
    } else {
        let step = (hi.ln() - lo.ln()) / (search.n_starts - 1) as f64;
        (0..search.n_starts)
            .map(|i| lo.ln() + step * i as f64)
            .collect()
    };

    let mut candidates: Vec<(f64, f64)> = vec![(lo, objective(lo)), (hi, objective(hi))];
    for &log_start in &starts {
        let sigma = log_start.exp().clamp(lo, hi);
        candidates.push((sigma, objective(sigma)));
        let bracket_lo = (sigma / 4.0).max(lo).ln();
        let bracket_hi = (sigma * 4.0).min(hi).ln();
        let (log_best, f_best) =
            golden_section_min(|u| objective(u.exp()), bracket_lo, bracket_hi, 60);
        candidates.push((log_best.exp().clamp(lo, hi), f_best));
    }

    let best = candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("candidates non-empty");
    Ok(best.0)
}

/// A per-test-point prediction interval `center +/- threshold`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    /// The weighted score quantile that produced the bounds.
    pub threshold: f64,
    /// The base prediction the interval is centered on.
    pub center: f64,
}

/// Output of a full conformal run.
#[derive(Debug, Clone)]
pub struct GeoCpOutput {
    pub intervals: Vec<PredictionInterval>,
    /// Number of test points whose kernel weights underflowed to the
    /// uniform fallback.
    pub degenerate_weight_count: usize,
    /// The single global bandwidth, when the kernel has one.
    pub resolved_sigma: Option<f64>,
}

/// Runs geographically weighted split conformal prediction.
///
/// Calibration scores are absolute residuals of the supplied base
/// predictions; each test point gets `prediction +/- threshold` with its own
/// geographically weighted threshold. Output order matches test order.
#[allow(clippy::too_many_arguments)]
pub fn run_geocp(
    predictions_calib: &[f64],
    observations_calib: &[f64],
    coords_calib: &[Point2],
    predictions_test: &[f64],
    coords_test: &[Point2],
    alpha: f64,
    policy: &KernelPolicy,
    method: QuantileMethod,
    level_rule: LevelRule,
) -> Result<GeoCpOutput> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    for (left, right, context) in [
        (
            predictions_calib.len(),
            observations_calib.len(),
            "calibration predictions vs observations",
        ),
        (
            predictions_calib.len(),
            coords_calib.len(),
            "calibration predictions vs coords",
        ),
        (
            predictions_test.len(),
            coords_test.len(),
            "test predictions vs coords",
        ),
    ] {
        if left != right {
            return Err(Error::LengthMismatch {
                left,
                right,
                context,
            });
        }
    }

    let scores: Vec<f64> = predictions_calib
        .iter()
        .zip(observations_calib)
        .map(|(&p, &o)| nonconformity_abs(p, o))
        .collect();
    let calib = CalibrationScores::new(coords_calib.to_vec(), scores)?;
    let kernel = policy.resolve(&calib, alpha)?;
    let resolved_sigma = match kernel {
        ResolvedKernel::FixedSigma(s) => Some(s),
        _ => None,
    };
    let q = quantile_level(calib.len(), alpha, level_rule);

    let per_point: Vec<(PredictionInterval, bool)> = predictions_test
        .par_iter()
        .zip(coords_test.par_iter())
        .map(|(&pred, &coord)| {
            let gw = geo_weights(coord, &calib, &kernel);
            let threshold = match method {
                QuantileMethod::Stepwise => {
                    weighted_quantile_stepwise(calib.scores(), &gw.weights, q)
                }
                QuantileMethod::Interpolated => {
                    weighted_quantile_interpolated(calib.scores(), &gw.weights, q)
                }
            };
            (
                PredictionInterval {
                    lower: pred - threshold,
                    upper: pred + threshold,
                    threshold,
                    center: pred,
                },
                gw.degenerate,
            )
        })
        .collect();

    let degenerate_weight_count = per_point.iter().filter(|(_, d)| *d).count();
    Ok(GeoCpOutput {
        intervals: per_point.into_iter().map(|(iv, _)| iv).collect(),
        degenerate_weight_count,
        resolved_sigma,
    })
}

/// K-nearest-neighbor regressor over standardized features.
///
/// A deliberately simple base predictor for conformal workflows that do not
/// bring their own model: predicts the mean target of the `k` nearest
/// training rows (exact search, distance ties broken by row index).
pub fn baseline_predict_knn(
    train_features: &[Vec<f64>],
    train_targets: &[f64],
    query_features: &[Vec<f64>],
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if train_features.is_empty() {
        return Err(Error::InvalidParameter("empty training set".into()));
    }
    if train_features.len() != train_targets.len() {
        return Err(Error::LengthMismatch {
            left: train_features.len(),
            right: train_targets.len(),
            context: "training features vs targets",
        });
    }
    let dim = train_features[0].len();
    if train_features.iter().any(|f| f.len() != dim)
        || query_features.iter().any(|f| f.len() != dim)
    {
        return Err(Error::InvalidParameter(
            "inconsistent feature dimensions".into(),
        ));
    }

    // Column standardization on training statistics.
    let n = train_features.len() as f64;
    let mut means = vec![0.0; dim];
    let mut stds = vec![0.0; dim];
    for d in 0..dim {
        let col: Vec<f64> = train_features.iter().map(|f| f[d]).collect();
        means[d] = col.iter().sum::<f64>() / n;
        let s = sample_std(&col);
        stds[d] = if s > 0.0 { s } else { 1.0 };
    }
    let standardize = |f: &[f64]| -> Vec<f64> {
        f.iter()
            .enumerate()
            .map(|(d, x)| (x - means[d]) / stds[d])
            .collect()
    };
    let train_std: Vec<Vec<f64>> = train_features.iter().map(|f| standardize(f)).collect();

    let k = k.min(train_features.len());
    let out = query_features
        .par_iter()
        .map(|qf| {
            let q = standardize(qf);
            let mut dists: Vec<(f64, usize)> = train_std
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let d2: f64 = q.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, i)
                })
                .collect();
            dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists[..k].iter().map(|&(_, i)| train_targets[i]).sum::<f64>() / k as f64
        })
        .collect();
    Ok(out)
}
