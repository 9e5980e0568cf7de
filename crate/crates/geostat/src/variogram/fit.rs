//! Variogram model fitting and information-criterion selection.
//!
//! Fitting minimizes `sum_k w_k * rho(gamma_hat(h_k) - gamma_theta(h_k))`
//! with a derivative-free simplex search from multiple starts: one "smart"
//! start built from the empirical curve plus seeded Latin-hypercube starts
//! over the parameter box. Everything is deterministic given the seed.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{latin_hypercube, nelder_mead};

use super::{EmpiricalVariogram, VariogramKind, VariogramSpec};

/// Loss applied to per-bin residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitLoss {
    /// Robust absolute deviation, unweighted.
    L1,
    /// Absolute deviation weighted by the bin weights (pair counts).
    WeightedL1,
    /// Squared deviation, unweighted.
    L2,
    /// Squared deviation weighted by the bin weights (pair counts).
    Wls,
}

/// How a winner is picked among candidate models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionCriterion {
    Aic,
    Bic,
    /// Smallest raw loss value.
    MinLoss,
}

/// Box constraints for the fit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub nugget: (f64, f64),
    pub partial_sill: (f64, f64),
    pub range: (f64, f64),
    /// Exponent interval; a collapsed interval pins the exponent, a proper
    /// one lets the optimizer fit it as a fourth parameter.
    pub exponent: Option<(f64, f64)>,
}

impl FitBounds {
    /// Data-driven default box for one model kind.
    ///
    /// Nugget spans `[0, max gamma_hat]`, the partial sill gets a tiny
    /// positive floor so a fitted model never degenerates to pure noise
    /// silently, and the range spans the observed lags. The legacy
    /// exponential's rate parameter gets the reciprocal interval.
    pub fn default_for(emp: &EmpiricalVariogram, kind: VariogramKind) -> Self {
        let max_gamma = emp.max_gamma();
        let max_lag = emp.max_lag();
        let min_lag = emp.min_positive_lag();
        let sill_floor = 1e-10 * max_gamma;
        let range = match kind {
            VariogramKind::OriginalExponential => (1.0 / (2.0 * max_lag), 1.0 / min_lag),
            _ => (min_lag, 2.0 * max_lag),
        };
        let exponent = match kind {
            VariogramKind::PoweredExponential => Some((0.05, 2.0)),
            _ => None,
        };
        Self {
            nugget: (0.0, max_gamma),
            partial_sill: (sill_floor, 2.0 * max_gamma),
            range,
            exponent,
        }
    }

    /// Same bounds with the exponent pinned to `p`.
    pub fn with_fixed_exponent(mut self, p: f64) -> Self {
        self.exponent = Some((p, p));
        self
    }

    fn validate(&self, kind: VariogramKind) -> Result<()> {
        let intervals = [
            ("nugget", self.nugget, 0.0),
            ("partial_sill", self.partial_sill, 0.0),
            ("range", self.range, f64::MIN_POSITIVE),
        ];
        for (name, (lo, hi), min_lo) in intervals {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min_lo) {
                return Err(Error::InvalidParameter(format!(
                    "invalid {name} bounds [{lo}, {hi}]"
                )));
            }
        }
        if self.range.0 <= 0.0 {
            return Err(Error::InvalidParameter(
                "range lower bound must be positive".into(),
            ));
        }
        match (kind, self.exponent) {
            (VariogramKind::PoweredExponential, Some((lo, hi))) => {
                if !(lo > 0.0 && hi <= 2.0 && lo <= hi) {
                    return Err(Error::InvalidParameter(format!(
                        "exponent bounds [{lo}, {hi}] must lie in (0, 2]"
                    )));
                }
            }
            (VariogramKind::PoweredExponential, None) => {
                return Err(Error::InvalidParameter(
                    "powered exponential needs exponent bounds".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    fn free_exponent(&self) -> bool {
        matches!(self.exponent, Some((lo, hi)) if hi > lo)
    }

    fn as_boxes(&self, kind: VariogramKind) -> Vec<(f64, f64)> {
        let mut b = vec![self.nugget, self.partial_sill, self.range];
        if kind == VariogramKind::PoweredExponential && self.free_exponent() {
            b.push(self.exponent.expect("validated"));
        }
        b
    }
}

/// Outcome of a variogram fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: VariogramSpec,
    pub loss_value: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_starts_tried: usize,
    pub converged: bool,
}

/// Gaussian pseudo-likelihood information criteria from fit residuals.
///
/// `sigma2 = max(RSS / n, 1e-12)`, `log L = -(n/2)(log(2 pi sigma2) + 1)`,
/// `AIC = 2k - 2 log L`, `BIC = k log n - 2 log L`.
pub fn information_criteria(residuals: &[f64], k: usize, n: usize) -> (f64, f64) {
    debug_assert!(n >= k, "more parameters than observations");
    debug_assert_eq!(residuals.len(), n);
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = (rss / n as f64).max(1e-12);
    let log_l = -(n as f64 / 2.0) * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let aic = 2.0 * k as f64 - 2.0 * log_l;
    let bic = k as f64 * (n as f64).ln() - 2.0 * log_l;
    (aic, bic)
}

fn spec_from_params(kind: VariogramKind, x: &[f64], fixed_p: Option<f64>) -> VariogramSpec {
    VariogramSpec {
        kind,
        nugget: x[0],
        partial_sill: x[1],
        range: x[2],
        exponent: match kind {
            VariogramKind::PoweredExponential => Some(x.get(3).copied().or(fixed_p).expect(
                "powered exponential carries its exponent either as x[3] or pinned",
            )),
            _ => None,
        },
    }
}

fn loss_of(
    emp: &EmpiricalVariogram,
    loss: FitLoss,
    kind: VariogramKind,
    x: &[f64],
    fixed_p: Option<f64>,
) -> f64 {
    let spec = spec_from_params(kind, x, fixed_p);
    let mut total = 0.0;
    for (k, (&h, &g)) in emp
        .lag_centers()
        .iter()
        .zip(emp.gamma_hat())
        .enumerate()
    {
        let r = g - spec.evaluate(h);
        total += match loss {
            FitLoss::L1 => r.abs(),
            FitLoss::WeightedL1 => emp.bin_weights()[k] * r.abs(),
            FitLoss::L2 => r * r,
            FitLoss::Wls => emp.bin_weights()[k] * r * r,
        };
    }
    total
}

/// Fits one model kind to an empirical variogram.
///
/// Runs `n_starts` simplex searches (the first from a smart start, the rest
/// from Latin-hypercube points) and returns the best converged one. Errors
/// with `FitFailed` when the data underdetermine the model or no start
/// converges, and with `DegenerateVariogram` when the best fit pins the
/// partial sill at its floor.
pub fn fit_variogram(
    emp: &EmpiricalVariogram,
    kind: VariogramKind,
    loss: FitLoss,
    n_starts: usize,
    bounds: &FitBounds,
    seed: u64,
) -> Result<FitReport> {
    if n_starts == 0 {
        return Err(Error::InvalidParameter("n_starts must be at least 1".into()));
    }
    bounds.validate(kind)?;
    let free_p = kind == VariogramKind::PoweredExponential && bounds.free_exponent();
    let n_params = if free_p { 4 } else { 3 };
    if emp.len() < n_params {
        return Err(Error::FitFailed(format!(
            "{} retained bins cannot determine {} parameters",
            emp.len(),
            n_params
        )));
    }

    let boxes = bounds.as_boxes(kind);
    let fixed_p = if free_p {
        None
    } else {
        bounds.exponent.map(|(lo, _)| lo)
    };

    // Smart start: nugget from the first bin, sill from the highest bin,
    // range at half the span.
    let mut smart = vec![
        emp.gamma_hat()[0].clamp(bounds.nugget.0, bounds.nugget.1),
        (emp.max_gamma() - emp.gamma_hat()[0]).clamp(bounds.partial_sill.0, bounds.partial_sill.1),
        match kind {
            VariogramKind::OriginalExponential => {
                (2.0 / emp.max_lag()).clamp(bounds.range.0, bounds.range.1)
            }
            _ => (0.5 * emp.max_lag()).clamp(bounds.range.0, bounds.range.1),
        },
    ];
    if free_p {
        let (lo, hi) = bounds.exponent.expect("validated");
        smart.push(1.0f64.clamp(lo, hi));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![smart];
    if n_starts > 1 {
        starts.extend(latin_hypercube(&mut rng, &boxes, n_starts - 1));
    }

    let objective = |x: &[f64]| loss_of(emp, loss, kind, x, fixed_p);
    let mut best: Option<crate::optimize::NmResult> = None;
    for start in &starts {
        let res = nelder_mead(objective, start, &boxes, 2000);
        if !res.converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => res.fx < b.fx,
        };
        if better {
            best = Some(res);
        }
    }
    let best = best.ok_or_else(|| Error::FitFailed("no optimizer start converged".into()))?;

    let spec = spec_from_params(kind, &best.x, fixed_p);
    if spec.partial_sill <= bounds.partial_sill.0 {
        return Err(Error::DegenerateVariogram {
            sill_floor: bounds.partial_sill.0,
        });
    }

    let residuals: Vec<f64> = emp
        .lag_centers()
        .iter()
        .zip(emp.gamma_hat())
        .map(|(&h, &g)| g - spec.evaluate(h))
        .collect();
    let (aic, bic) = information_criteria(&residuals, n_params, emp.len());
    Ok(FitReport {
        spec,
        loss_value: best.fx,
        aic,
        bic,
        n_starts_tried: starts.len(),
        converged: true,
    })
}

/// Fits every candidate kind (expanding the powered exponential over
/// `p_grid`) and returns the report minimizing the criterion.
///
/// Exact criterion ties go to the candidate with fewer parameters, then to
/// the earlier candidate.
pub fn select_variogram(
    emp: &EmpiricalVariogram,
    candidates: &[VariogramKind],
    loss: FitLoss,
    criterion: SelectionCriterion,
    n_starts: usize,
    p_grid: &[f64],
    seed: u64,
) -> Result<FitReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate models".into()));
    }

    let mut best: Option<(f64, usize, usize, FitReport)> = None;
    let mut order = 0usize;
    let mut consider = |report: Result<FitReport>, n_params: usize, best: &mut Option<_>| {
        let report = match report {
            Ok(r) => r,
            Err(_) => {
                order += 1;
                return;
            }
        };
        let value = match criterion {
            SelectionCriterion::Aic => report.aic,
            SelectionCriterion::Bic => report.bic,
            SelectionCriterion::MinLoss => report.loss_value,
        };
        let key = (value, n_params, order);
        let replace = match best {
            None => true,
            Some((bv, bk, bo, _)) => {
                matches!(
                    key.0
                        .total_cmp(bv)
                        .then(key.1.cmp(bk))
                        .then(key.2.cmp(bo)),
                    Ordering::Less
                )
            }
        };
        if replace {
            *best = Some((value, n_params, order, report));
        }
        order += 1;
    };

    for &kind in candidates {
        if kind == VariogramKind::PoweredExponential && !p_grid.is_empty() {
            for &p in p_grid {
                let bounds = FitBounds::default_for(emp, kind).with_fixed_exponent(p);
                let report = fit_variogram(emp, kind, loss, n_starts, &bounds, seed);
                consider(report, 3, &mut best);
            }
        } else {
            let bounds = FitBounds::default_for(emp, kind);
            let n_params = if kind == VariogramKind::PoweredExponential {
                4
            } else {
                3
            };
            let report = fit_variogram(emp, kind, loss, n_starts, &bounds, seed);
            consider(report, n_params, &mut best);
        }
    }

    best.map(|(_, _, _, r)| r)
        .ok_or_else(|| Error::FitFailed("every candidate model failed to fit".into()))
}
