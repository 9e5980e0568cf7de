//! The four frozen configurations per task, from the plainest baseline to
//! the fully adaptive variant.
//!
//! Preset names are stable CLI strings: `original`, `openevolve`,
//! `openevolve_geoknow`, `geoevolve`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geocp::{BandwidthSearch, KernelPolicy, LevelRule, QuantileMethod};
use crate::kriging::{Fallback, Regularization, SolverMode, SolverPolicy};
use crate::variogram::{AdaptiveBinning, FitLoss, SelectionCriterion, VariogramKind};

pub const PRESET_NAMES: [&str; 4] = ["original", "openevolve", "openevolve_geoknow", "geoevolve"];

/// Empirical-variogram configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EmpiricalConfig {
    Fixed {
        n_lags: usize,
        truncate_frac: f64,
        include_zero: bool,
        min_pairs: usize,
    },
    Adaptive {
        binning: AdaptiveBinning,
        trim_frac: f64,
        min_pairs: usize,
    },
}

/// A complete kriging configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingPreset {
    pub name: String,
    pub candidates: Vec<VariogramKind>,
    /// Exponents the powered-exponential candidate is expanded over.
    pub p_grid: Vec<f64>,
    pub loss: FitLoss,
    pub n_starts: usize,
    pub criterion: SelectionCriterion,
    pub empirical: EmpiricalConfig,
    pub solver: SolverPolicy,
    /// Apply the adaptive log transform to training values.
    pub transform: bool,
}

/// Which interval metrics a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsSet {
    /// Mean interval score only.
    ScoreOnly,
    /// Score, mean size, coverage, and coverage deviation.
    Full,
}

/// A complete conformal-prediction configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCpPreset {
    pub name: String,
    pub kernel: KernelPolicy,
    pub method: QuantileMethod,
    pub level_rule: LevelRule,
    pub metrics: MetricsSet,
}

/// Smoothness grid used by the adaptive kriging preset, mapped onto the
/// powered-exponential exponent via `p = 2 nu / (nu + 1)`.
pub fn default_p_grid() -> Vec<f64> {
    [0.2f64, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        .iter()
        .map(|nu| (2.0 * nu / (nu + 1.0)).min(2.0))
        .collect()
}

/// The frozen kriging configuration for a preset name.
pub fn kriging_preset(name: &str) -> Result<KrigingPreset> {
    let preset = match name {
        "original" => KrigingPreset {
            name: name.into(),
            candidates: vec![VariogramKind::OriginalExponential],
            p_grid: Vec::new(),
            loss: FitLoss::L1,
            n_starts: 1,
            criterion: SelectionCriterion::MinLoss,
            empirical: EmpiricalConfig::Fixed {
                n_lags: 12,
                truncate_frac: 1.0,
                include_zero: true,
                min_pairs: 1,
            },
            solver: SolverPolicy {
                mode: SolverMode::Global,
                regularization: Regularization::None,
                fallback: Fallback::Fail,
            },
            transform: false,
        },
        "openevolve" => KrigingPreset {
            name: name.into(),
            candidates: vec![
                VariogramKind::Exponential,
                VariogramKind::Gaussian,
                VariogramKind::Linear,
            ],
            p_grid: Vec::new(),
            loss: FitLoss::L1,
            n_starts: 1,
            criterion: SelectionCriterion::MinLoss,
            empirical: EmpiricalConfig::Fixed {
                n_lags: 12,
                truncate_frac: 0.85,
                include_zero: true,
                min_pairs: 1,
            },
            solver: SolverPolicy {
                mode: SolverMode::Global,
                regularization: Regularization::FixedDiagonal(1e-10),
                fallback: Fallback::PseudoInverse,
            },
            transform: false,
        },
        "openevolve_geoknow" => KrigingPreset {
            name: name.into(),
            candidates: vec![
                VariogramKind::Exponential,
                VariogramKind::Gaussian,
                VariogramKind::Linear,
            ],
            p_grid: Vec::new(),
            loss: FitLoss::L2,
            n_starts: 1,
            criterion: SelectionCriterion::MinLoss,
            empirical: EmpiricalConfig::Fixed {
                n_lags: 12,
                truncate_frac: 0.85,
                include_zero: true,
                min_pairs: 5,
            },
            solver: SolverPolicy {
                mode: SolverMode::Global,
                regularization: Regularization::FixedDiagonal(1e-10),
                fallback: Fallback::PseudoInverse,
            },
            transform: false,
        },
        "geoevolve" => KrigingPreset {
            name: name.into(),
            candidates: vec![
                VariogramKind::Exponential,
                VariogramKind::Gaussian,
                VariogramKind::Linear,
                VariogramKind::PoweredExponential,
            ],
            p_grid: default_p_grid(),
            loss: FitLoss::L1,
            n_starts: 16,
            criterion: SelectionCriterion::Aic,
            empirical: EmpiricalConfig::Adaptive {
                binning: AdaptiveBinning::Silverman,
                trim_frac: 0.1,
                min_pairs: 1,
            },
            solver: SolverPolicy {
                mode: SolverMode::Local { k: 25 },
                regularization: Regularization::ConditionAdaptive,
                fallback: Fallback::NeighborMean,
            },
            transform: true,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

/// The frozen conformal configuration for a preset name.
pub fn geocp_preset(name: &str) -> Result<GeoCpPreset> {
    let preset = match name {
        "original" => GeoCpPreset {
            name: name.into(),
            kernel: KernelPolicy::FixedLegacy,
            method: QuantileMethod::Stepwise,
            level_rule: LevelRule::Ceiling,
            metrics: MetricsSet::ScoreOnly,
        },
        "openevolve" => GeoCpPreset {
            name: name.into(),
            kernel: KernelPolicy::KnnAdaptive {
                k: 10,
                clip: (0.01, 2.0),
                dispersion_floor: true,
            },
            method: QuantileMethod::Interpolated,
            level_rule: LevelRule::Ceiling,
            metrics: MetricsSet::ScoreOnly,
        },
        "openevolve_geoknow" => GeoCpPreset {
            name: name.into(),
            kernel: KernelPolicy::KnnAdaptive {
                k: 10,
                clip: (0.05, 0.5),
                dispersion_floor: false,
            },
            method: QuantileMethod::Interpolated,
            level_rule: LevelRule::NoCeiling,
            metrics: MetricsSet::Full,
        },
        "geoevolve" => GeoCpPreset {
            name: name.into(),
            kernel: KernelPolicy::OptimizedSigma {
                search: BandwidthSearch::default(),
            },
            method: QuantileMethod::Stepwise,
            level_rule: LevelRule::NoCeiling,
            metrics: MetricsSet::Full,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn original_kriging_preset_shape() {
        let p = kriging_preset("original").unwrap();
        assert_eq!(p.candidates, vec![VariogramKind::OriginalExponential]);
        assert_eq!(p.solver.mode, SolverMode::Global);
        assert_eq!(p.solver.regularization, Regularization::None);
        assert_eq!(p.solver.fallback, Fallback::Fail);
        assert_eq!(p.n_starts, 1);
        assert!(!p.transform);
        assert_eq!(
            p.empirical,
            EmpiricalConfig::Fixed {
                n_lags: 12,
                truncate_frac: 1.0,
                include_zero: true,
                min_pairs: 1
            }
        );
    }

    #[test]
    fn geoevolve_kriging_preset_shape() {
        let p = kriging_preset("geoevolve").unwrap();
        assert_eq!(p.solver.mode, SolverMode::Local { k: 25 });
        assert_eq!(p.solver.regularization, Regularization::ConditionAdaptive);
        assert_eq!(p.solver.fallback, Fallback::NeighborMean);
        assert_eq!(p.criterion, SelectionCriterion::Aic);
        assert_eq!(p.n_starts, 16);
        assert!(p.transform);
        assert!(p.candidates.contains(&VariogramKind::PoweredExponential));
        assert!(!p.p_grid.is_empty());
        assert!(p.p_grid.iter().all(|&x| x > 0.0 && x <= 2.0));
    }

    #[test]
    fn geocp_preset_shapes() {
        let p = geocp_preset("original").unwrap();
        assert_eq!(p.kernel, KernelPolicy::FixedLegacy);
        assert_eq!(p.method, QuantileMethod::Stepwise);
        assert_eq!(p.level_rule, LevelRule::Ceiling);
        assert_eq!(p.metrics, MetricsSet::ScoreOnly);

        let p = geocp_preset("geoevolve").unwrap();
        assert!(matches!(p.kernel, KernelPolicy::OptimizedSigma { .. }));
        assert_eq!(p.method, QuantileMethod::Stepwise);
        assert_eq!(p.level_rule, LevelRule::NoCeiling);
        assert_eq!(p.metrics, MetricsSet::Full);

        let p = geocp_preset("openevolve_geoknow").unwrap();
        assert_eq!(
            p.kernel,
            KernelPolicy::KnnAdaptive {
                k: 10,
                clip: (0.05, 0.5),
                dispersion_floor: false
            }
        );
        assert_eq!(p.level_rule, LevelRule::NoCeiling);
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(matches!(
            kriging_preset("bogus"),
            Err(Error::UnknownPreset(_))
        ));
        assert!(matches!(geocp_preset("bogus"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn lookups_are_pure() {
        for name in PRESET_NAMES {
            let a = kriging_preset(name).unwrap();
            let b = kriging_preset(name).unwrap();
            assert_eq!(a, b);
            let a = geocp_preset(name).unwrap();
            let b = geocp_preset(name).unwrap();
            assert_eq!(a, b);
        }
    }
}
