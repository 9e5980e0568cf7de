//! Semivariogram models, empirical estimation, and robust fitting.
//!
//! The model family is
//!
//! ```text
//! gamma(h) = nugget + partial_sill * [1 - exp(-(h / range)^p)]
//! ```
//!
//! with `p = 1` (exponential), `p = 2` (Gaussian), free `p` in (0, 2]
//! (powered exponential), plus a bounded linear model and a legacy
//! exponential whose third parameter is a raw decay rate instead of a range.

mod empirical;
mod fit;

pub use empirical::{
    auto_n_lags, empirical_variogram_adaptive, empirical_variogram_fixed, AdaptiveBinning,
};
pub use fit::{
    fit_variogram, information_criteria, select_variogram, FitBounds, FitLoss, FitReport,
    SelectionCriterion,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The semivariogram model shapes the library can fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariogramKind {
    /// Legacy exponential `nugget + sill * (1 - exp(-h * rate))`; the third
    /// parameter is a raw rate, not a range.
    OriginalExponential,
    /// `nugget + sill * (1 - exp(-h / range))`.
    Exponential,
    /// `nugget + sill * (1 - exp(-(h / range)^2))`.
    Gaussian,
    /// `nugget + sill * min(h / range, 1)`.
    Linear,
    /// `nugget + sill * (1 - exp(-(h / range)^p))` with `p` in (0, 2].
    PoweredExponential,
}

impl VariogramKind {
    /// Short stable name used in CLI output and config files.
    pub fn name(&self) -> &'static str {
        match self {
            VariogramKind::OriginalExponential => "original_exponential",
            VariogramKind::Exponential => "exponential",
            VariogramKind::Gaussian => "gaussian",
            VariogramKind::Linear => "linear",
            VariogramKind::PoweredExponential => "powered_exponential",
        }
    }
}

/// A fully parameterized semivariogram model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramSpec {
    pub kind: VariogramKind,
    /// Nugget: semivariance as the lag approaches zero from above.
    pub nugget: f64,
    /// Partial sill: the sill minus the nugget.
    pub partial_sill: f64,
    /// Range parameter (a raw decay rate for `OriginalExponential`).
    pub range: f64,
    /// Exponent, present exactly when `kind` is `PoweredExponential`.
    pub exponent: Option<f64>,
}

impl VariogramSpec {
    /// Builds a spec for the three-parameter kinds.
    pub fn new(kind: VariogramKind, nugget: f64, partial_sill: f64, range: f64) -> Result<Self> {
        if kind == VariogramKind::PoweredExponential {
            return Err(Error::InvalidParameter(
                "powered exponential requires an exponent; use powered_exponential()".into(),
            ));
        }
        Self::validate(nugget, partial_sill, range)?;
        Ok(Self {
            kind,
            nugget,
            partial_sill,
            range,
            exponent: None,
        })
    }

    /// Builds a powered-exponential spec with exponent `p` in (0, 2].
    pub fn powered_exponential(nugget: f64, partial_sill: f64, range: f64, p: f64) -> Result<Self> {
        Self::validate(nugget, partial_sill, range)?;
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent must lie in (0, 2], got {p}"
            )));
        }
        Ok(Self {
            kind: VariogramKind::PoweredExponential,
            nugget,
            partial_sill,
            range,
            exponent: Some(p),
        })
    }

    fn validate(nugget: f64, partial_sill: f64, range: f64) -> Result<()> {
        if !(nugget.is_finite() && nugget >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nugget must be finite and nonnegative, got {nugget}"
            )));
        }
        if !(partial_sill.is_finite() && partial_sill >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "partial sill must be finite and nonnegative, got {partial_sill}"
            )));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "range must be finite and positive, got {range}"
            )));
        }
        Ok(())
    }

    /// Total sill `nugget + partial_sill`.
    pub fn sill(&self) -> f64 {
        self.nugget + self.partial_sill
    }

    /// Evaluates the model at lag `h >= 0`.
    ///
    /// This is the fitted curve, so `evaluate(0)` returns the nugget (the
    /// limit from above); the process semivariance at exactly zero lag is
    /// zero and the kriging assembly handles that distinction itself.
    pub fn evaluate(&self, h: f64) -> f64 {
        debug_assert!(h >= 0.0, "lag must be nonnegative");
        let s = self.partial_sill;
        let shape = match self.kind {
            VariogramKind::OriginalExponential => 1.0 - (-h * self.range).exp(),
            VariogramKind::Exponential => 1.0 - (-h / self.range).exp(),
            VariogramKind::Gaussian => {
                let r = h / self.range;
                1.0 - (-(r * r)).exp()
            }
            VariogramKind::Linear => (h / self.range).min(1.0),
            VariogramKind::PoweredExponential => {
                let p = self.exponent.expect("powered exponential carries p");
                if h == 0.0 {
                    0.0
                } else {
                    1.0 - (-(h / self.range).powf(p)).exp()
                }
            }
        };
        self.nugget + s * shape
    }
}

/// A binned empirical semivariogram.
///
/// Only retained bins are stored: every array has the same length, lags are
/// strictly ascending, and every bin met the pair-count filter it was built
/// with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    lag_centers: Vec<f64>,
    gamma_hat: Vec<f64>,
    pair_counts: Vec<usize>,
    bin_weights: Vec<f64>,
    bin_edges: Vec<(f64, f64)>,
}

impl EmpiricalVariogram {
    /// Assembles an empirical variogram from already-binned data.
    pub fn from_parts(
        lag_centers: Vec<f64>,
        gamma_hat: Vec<f64>,
        pair_counts: Vec<usize>,
        bin_weights: Vec<f64>,
        bin_edges: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = lag_centers.len();
        if n == 0 {
            return Err(Error::AllBinsEmpty);
        }
        for (len, what) in [
            (gamma_hat.len(), "gamma_hat"),
            (pair_counts.len(), "pair_counts"),
            (bin_weights.len(), "bin_weights"),
            (bin_edges.len(), "bin_edges"),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: len,
                    context: what,
                });
            }
        }
        if lag_centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "lag centers must be strictly ascending".into(),
            ));
        }
        if gamma_hat.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidParameter(
                "semivariance estimates must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            lag_centers,
            gamma_hat,
            pair_counts,
            bin_weights,
            bin_edges,
        })
    }

    pub fn len(&self) -> usize {
        self.lag_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lag_centers.is_empty()
    }

    pub fn lag_centers(&self) -> &[f64] {
        &self.lag_centers
    }

    pub fn gamma_hat(&self) -> &[f64] {
        &self.gamma_hat
    }

    pub fn pair_counts(&self) -> &[usize] {
        &self.pair_counts
    }

    pub fn bin_weights(&self) -> &[f64] {
        &self.bin_weights
    }

    pub fn bin_edges(&self) -> &[(f64, f64)] {
        &self.bin_edges
    }

    /// Largest semivariance estimate across bins.
    pub fn max_gamma(&self) -> f64 {
        self.gamma_hat.iter().copied().fold(0.0, f64::max)
    }

    /// Largest lag center.
    pub fn max_lag(&self) -> f64 {
        *self.lag_centers.last().expect("non-empty")
    }

    /// Smallest strictly positive lag center.
    pub fn min_positive_lag(&self) -> f64 {
        self.lag_centers
            .iter()
            .copied()
            .find(|&h| h > 0.0)
            .unwrap_or(self.max_lag())
    }
}
