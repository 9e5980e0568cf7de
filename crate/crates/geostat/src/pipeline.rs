//! End-to-end task runners shared by the CLI and the acceptance suite.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geocp::{self, GeoCpOutput};
use crate::kriging::{KrigingModel, KrigingPrediction, TransformState};
use crate::presets::{EmpiricalConfig, GeoCpPreset, KrigingPreset};
use crate::spatial::{Point2, PointSet};
use crate::variogram::{
    empirical_variogram_adaptive, empirical_variogram_fixed, select_variogram, FitReport,
};

/// Seed salts so the fit, the split, and the bandwidth search never share a
/// generator stream.
pub const SEED_SALT_FIT: u64 = 0x9e3779b97f4a7c15;
pub const SEED_SALT_BANDWIDTH: u64 = 0x6a09e667f3bcc908;

/// Output of a full kriging run.
#[derive(Debug, Clone)]
pub struct KrigingRun {
    pub predictions: Vec<KrigingPrediction>,
    pub fit: FitReport,
    pub transform: TransformState,
    pub variance_clamp_count: usize,
    pub fallback_count: usize,
}

/// Trains a kriging model per the preset and predicts at `targets`.
///
/// When the preset's transform is enabled the variogram is fit on the
/// transformed values and the reported variances stay in transformed units.
pub fn run_kriging(
    preset: &KrigingPreset,
    train: &PointSet,
    targets: &[Point2],
    seed: u64,
) -> Result<KrigingRun> {
    let transform = if preset.transform {
        TransformState::adaptive_log(train.values())
    } else {
        TransformState::disabled()
    };
    let working_values = train
        .values()
        .iter()
        .map(|&v| transform.forward(v))
        .collect::<Result<Vec<f64>>>()?;
    let working = train.with_values(working_values)?;

    let emp = match preset.empirical {
        EmpiricalConfig::Fixed {
            n_lags,
            truncate_frac,
            include_zero,
            min_pairs,
        } => empirical_variogram_fixed(&working, n_lags, truncate_frac, include_zero, min_pairs)?,
        EmpiricalConfig::Adaptive {
            binning,
            trim_frac,
            min_pairs,
        } => empirical_variogram_adaptive(&working, binning, trim_frac, min_pairs)?,
    };

    let fit = select_variogram(
        &emp,
        &preset.candidates,
        preset.loss,
        preset.criterion,
        preset.n_starts,
        &preset.p_grid,
        seed ^ SEED_SALT_FIT,
    )?;

    let model = KrigingModel::new(train.clone(), fit.spec, transform, preset.solver)?;
    let predictions = model.predict(targets)?;
    let variance_clamp_count = predictions.iter().filter(|p| p.variance_clamped).count();
    let fallback_count = predictions.iter().filter(|p| p.used_fallback).count();
    Ok(KrigingRun {
        predictions,
        fit,
        transform,
        variance_clamp_count,
        fallback_count,
    })
}

/// Base predictions for the conformal pipeline: an externally supplied
/// prediction column, or the built-in k-NN regressor.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasePredictor {
    /// Use `predictions[i]` for dataset row `i`.
    External {
        #[serde(skip)]
        predictions: Vec<f64>,
    },
    /// Fit k-NN on the training rows' features (declared features plus
    /// coordinates) and predict the rest.
    BuiltinKnn { k: usize },
}

/// Output of a full conformal run.
#[derive(Debug, Clone)]
pub struct GeoCpRun {
    pub output: GeoCpOutput,
    /// Base predictions on the test rows, in test order.
    pub test_predictions: Vec<f64>,
}

/// Runs the conformal pipeline: calibration on `calib_idx` rows, intervals
/// for `test_idx` rows.
pub fn run_geocp_task(
    preset: &GeoCpPreset,
    data: &Dataset,
    train_idx: &[usize],
    calib_idx: &[usize],
    test_idx: &[usize],
    predictor: &BasePredictor,
    alpha: f64,
    seed: u64,
) -> Result<GeoCpRun> {
    if calib_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::TooFewRows {
            got: calib_idx.len().min(test_idx.len()),
            need: 1,
        });
    }

    let (calib_pred, test_pred) = match predictor {
        BasePredictor::External { predictions } => {
            if predictions.len() != data.len() {
                return Err(Error::LengthMismatch {
                    left: predictions.len(),
                    right: data.len(),
                    context: "external predictions vs dataset rows",
                });
            }
            (
                calib_idx.iter().map(|&i| predictions[i]).collect::<Vec<f64>>(),
                test_idx.iter().map(|&i| predictions[i]).collect::<Vec<f64>>(),
            )
        }
        BasePredictor::BuiltinKnn { k } => {
            let train_feats = data.feature_rows_with_coords(train_idx);
            let train_targets: Vec<f64> = train_idx.iter().map(|&i| data.target[i]).collect();
            let calib_feats = data.feature_rows_with_coords(calib_idx);
            let test_feats = data.feature_rows_with_coords(test_idx);
            (
                geocp::baseline_predict_knn(&train_feats, &train_targets, &calib_feats, *k)?,
                geocp::baseline_predict_knn(&train_feats, &train_targets, &test_feats, *k)?,
            )
        }
    };

    let calib_obs: Vec<f64> = calib_idx.iter().map(|&i| data.target[i]).collect();
    let calib_coords: Vec<Point2> = calib_idx.iter().map(|&i| data.coords[i]).collect();
    let test_coords: Vec<Point2> = test_idx.iter().map(|&i| data.coords[i]).collect();

    // Bind the run seed into the bandwidth search so reruns reproduce.
    let mut kernel = preset.kernel;
    if let crate::geocp::KernelPolicy::OptimizedSigma { ref mut search } = kernel {
        search.seed = seed ^ SEED_SALT_BANDWIDTH;
    }

    let output = geocp::run_geocp(
        &calib_pred,
        &calib_obs,
        &calib_coords,
        &test_pred,
        &test_coords,
        alpha,
        &kernel,
        preset.method,
        preset.level_rule,
    )?;
    Ok(GeoCpRun {
        output,
        test_predictions: test_pred,
    })
}
