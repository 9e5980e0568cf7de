//! Ordinary-kriging prediction.
//!
//! The prediction at a target is the weighted combination `sum(lambda_i *
//! z_i)` whose weights minimize estimation variance subject to
//! `sum(lambda_i) = 1`. The weights solve the Lagrange-augmented system
//!
//! ```text
//! | Gamma  1 | |lambda|   |gamma_0|
//! | 1^T    0 | |  mu  | = |   1   |
//! ```
//!
//! where `Gamma[i][j]` is the semivariogram at the inter-point distance
//! (exactly zero on the diagonal: a point has zero semivariance with itself
//! even under a nugget) and `gamma_0` holds semivariances to the target.
//!
//! The solver runs either on the full training set or on the k nearest
//! neighbors of each target, optionally adds a diagonal regularization to
//! the semivariogram block (fixed, or scheduled from the matrix condition
//! number), and falls back per policy when a system cannot be solved.
//! An optional log transform `z' = log(z + delta)` with a data-driven offset
//! handles skewed values; predictions are mapped back, kriging variances are
//! reported in transformed units.

use nalgebra::{DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{KnnIndex, Point2, PointSet};
use crate::stats::{quantile_sorted, sample_variance};
use crate::variogram::VariogramSpec;

type LuFactors = nalgebra::linalg::LU<f64, Dyn, Dyn>;

/// Which training points enter each target's system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMode {
    /// Every training point, with the factorization shared across targets.
    Global,
    /// The `k` nearest training points of each target.
    Local { k: usize },
}

/// Diagonal regularization added to the semivariogram block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regularization {
    None,
    FixedDiagonal(f64),
    /// Epsilon scheduled from the condition number, 1e-10 up to 1e-4.
    ConditionAdaptive,
}

/// What to do when a system cannot be solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fallback {
    /// Surface a `SingularSystem` error.
    Fail,
    /// Least-squares solution through the pseudo-inverse.
    PseudoInverse,
    /// Predict the neighbor mean, with the neighbor sample variance.
    NeighborMean,
}

/// Full solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverPolicy {
    pub mode: SolverMode,
    pub regularization: Regularization,
    pub fallback: Fallback,
}

impl SolverPolicy {
    fn validate(&self) -> Result<()> {
        if let SolverMode::Local { k } = self.mode {
            if k < 2 {
                return Err(Error::InvalidParameter(format!(
                    "local neighborhood must have k >= 2, got {k}"
                )));
            }
        }
        if let Regularization::FixedDiagonal(eps) = self.regularization {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "fixed diagonal regularization must be nonnegative, got {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// Log-transform state: `forward(v) = log(v + delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformState {
    pub enabled: bool,
    pub delta: f64,
}

impl TransformState {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            delta: 0.0,
        }
    }

    /// Enabled transform with the offset chosen by [`adaptive_log_offset`].
    pub fn adaptive_log(values: &[f64]) -> Self {
        Self {
            enabled: true,
            delta: adaptive_log_offset(values),
        }
    }

    pub fn forward(&self, v: f64) -> Result<f64> {
        if !self.enabled {
            return Ok(v);
        }
        let shifted = v + self.delta;
        if shifted <= 0.0 {
            return Err(Error::NonPositiveAfterOffset {
                value: v,
                delta: self.delta,
            });
        }
        Ok(shifted.ln())
    }

    pub fn back(&self, t: f64) -> f64 {
        if !self.enabled {
            return t;
        }
        t.exp() - self.delta
    }
}

/// Offset `delta` for the log transform.
///
/// Uses the 1st percentile (linear interpolation) of the positive values
/// plus `1e-6`; with no positive values, `|min| + 1e-6`. The offset is
/// raised when needed so `min(values) + delta > 0` always holds.
pub fn adaptive_log_offset(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "offset of empty value list");
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut positives: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    let mut delta = if positives.is_empty() {
        -min + 1e-6
    } else {
        positives.sort_unstable_by(f64::total_cmp);
        quantile_sorted(&positives, 0.01) + 1e-6
    };
    if min <= 0.0 {
        delta = delta.max(-min + 1e-6);
    }
    delta
}

/// Regularization epsilon scheduled from a condition-number estimate.
pub fn condition_adaptive_epsilon(kappa: f64) -> f64 {
    debug_assert!(kappa >= 1.0 || kappa.is_nan());
    if kappa < 1e8 {
        1e-10
    } else if kappa < 1e10 {
        1e-8
    } else if kappa < 1e12 {
        1e-6
    } else {
        1e-4
    }
}

/// Builds the Lagrange-augmented ordinary-kriging system for `neighbors`
/// against `target`.
pub fn assemble_ok_system(
    spec: &VariogramSpec,
    neighbors: &PointSet,
    target: Point2,
) -> (DMatrix<f64>, DVector<f64>) {
    let a = assemble_matrix(spec, neighbors.points());
    let b = assemble_rhs(spec, neighbors.points(), target);
    (a, b)
}

fn assemble_matrix(spec: &VariogramSpec, points: &[Point2]) -> DMatrix<f64> {
    let m = points.len();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in (i + 1)..m {
            let g = spec.evaluate(points[i].distance(&points[j]));
            a[(i, j)] = g;
            a[(j, i)] = g;
        }
        a[(i, m)] = 1.0;
        a[(m, i)] = 1.0;
    }
    a
}

fn assemble_rhs(spec: &VariogramSpec, points: &[Point2], target: Point2) -> DVector<f64> {
    let m = points.len();
    let mut b = DVector::zeros(m + 1);
    for i in 0..m {
        b[i] = spec.evaluate(points[i].distance(&target));
    }
    b[m] = 1.0;
    b
}

/// Condition number of `a`: exact singular-value ratio for systems up to
/// 64x64, a power-iteration estimate beyond that.
pub fn estimate_condition_number(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n <= 64 {
        let sv = a.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if smin <= 0.0 || !smin.is_finite() {
            return f64::INFINITY;
        }
        return smax / smin;
    }
    // a is symmetric, so the 2-norm is the largest absolute eigenvalue;
    // estimate both extremes by (inverse) power iteration.
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut smax = 0.0;
    for _ in 0..30 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        smax = norm;
        v = w / norm;
    }
    let lu = a.clone().lu();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut inv_norm = 0.0;
    for _ in 0..30 {
        let Some(w) = lu.solve(&v) else {
            return f64::INFINITY;
        };
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return f64::INFINITY;
        }
        inv_norm = norm;
        v = w / norm;
    }
    smax * inv_norm
}

fn apply_regularization(a: &DMatrix<f64>, reg: Regularization) -> DMatrix<f64> {
    let eps = match reg {
        Regularization::None => 0.0,
        Regularization::FixedDiagonal(e) => e,
        Regularization::ConditionAdaptive => {
            condition_adaptive_epsilon(estimate_condition_number(a))
        }
    };
    let mut out = a.clone();
    if eps > 0.0 {
        let m = a.nrows() - 1;
        for i in 0..m {
            out[(i, i)] += eps;
        }
    }
    out
}

/// One solved (or fallen-back) kriging system.
#[derive(Debug, Clone)]
pub struct SolvedSystem {
    pub weights: Vec<f64>,
    pub lagrange: f64,
    pub prediction: f64,
    pub variance: f64,
    pub variance_clamped: bool,
    pub used_fallback: bool,
}

/// A single prediction in original value units.
///
/// `variance` is the kriging variance, clamped at zero; when the model's log
/// transform is enabled it is expressed in transformed units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KrigingPrediction {
    pub value: f64,
    pub variance: f64,
    pub used_fallback: bool,
    pub variance_clamped: bool,
}

fn solution_is_valid(sol: &DVector<f64>, m: usize) -> bool {
    sol.iter().all(|x| x.is_finite()) && {
        let s: f64 = sol.rows(0, m).iter().sum();
        (s - 1.0).abs() <= 1e-6
    }
}

fn finish_solution(sol: &DVector<f64>, b: &DVector<f64>, values: &[f64], fellback: bool) -> SolvedSystem {
    let m = values.len();
    let weights: Vec<f64> = sol.rows(0, m).iter().copied().collect();
    let lagrange = sol[m];
    let prediction: f64 = weights.iter().zip(values).map(|(w, v)| w * v).sum();
    let variance_raw: f64 =
        weights.iter().enumerate().map(|(i, w)| w * b[i]).sum::<f64>() + lagrange;
    let variance_clamped = variance_raw < 0.0;
    SolvedSystem {
        weights,
        lagrange,
        prediction,
        variance: variance_raw.max(0.0),
        variance_clamped,
        used_fallback: fellback,
    }
}

fn pseudo_inverse_of(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(smax * 1e-13)
        .map_err(|e| Error::SingularSystem(format!("pseudo-inverse failed: {e}")))
}

fn fallback_solution(
    fallback: Fallback,
    a_reg: &DMatrix<f64>,
    pinv: Option<&DMatrix<f64>>,
    b: &DVector<f64>,
    values: &[f64],
    why: &str,
) -> Result<SolvedSystem> {
    match fallback {
        Fallback::Fail => Err(Error::SingularSystem(why.to_string())),
        Fallback::PseudoInverse => {
            let sol = match pinv {
                Some(p) => p * b,
                None => &pseudo_inverse_of(a_reg)? * b,
            };
            if sol.iter().any(|x| !x.is_finite()) {
                return Err(Error::SingularSystem(
                    "pseudo-inverse produced non-finite weights".into(),
                ));
            }
            Ok(finish_solution(&sol, b, values, true))
        }
        Fallback::NeighborMean => {
            let m = values.len();
            let mean = values.iter().sum::<f64>() / m as f64;
            Ok(SolvedSystem {
                weights: vec![1.0 / m as f64; m],
                lagrange: 0.0,
                prediction: mean,
                variance: sample_variance(values),
                variance_clamped: false,
                used_fallback: true,
            })
        }
    }
}

/// Solves one assembled kriging system under a policy.
///
/// Regularization (per the policy) is added to the semivariogram block
/// before factoring. A solution is rejected when it is non-finite or its
/// weights miss the unit-sum constraint by more than 1e-6; rejection routes
/// to the policy's fallback.
pub fn solve_kriging_system(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: &SolverPolicy,
    neighbor_values: &[f64],
) -> Result<SolvedSystem> {
    let m = neighbor_values.len();
    assert_eq!(a.nrows(), m + 1, "matrix size must be neighbors + 1");
    assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
    assert_eq!(b.len(), m + 1, "rhs size must match the matrix");

    let a_reg = apply_regularization(a, policy.regularization);
    let lu = a_reg.clone().lu();
    if let Some(sol) = lu.solve(b) {
        if solution_is_valid(&sol, m) {
            return Ok(finish_solution(&sol, b, neighbor_values, false));
        }
    }
    fallback_solution(
        policy.fallback,
        &a_reg,
        None,
        b,
        neighbor_values,
        "singular or ill-conditioned kriging system",
    )
}

enum GlobalState {
    /// Factorization looked healthy; per-target solves still validate.
    Factored(Box<LuFactors>),
    /// Known-broken system (duplicate conflict or singular factorization):
    /// every target goes straight to the fallback.
    Broken { pinv: Option<DMatrix<f64>>, why: String },
}

struct GlobalContext {
    a_reg: DMatrix<f64>,
    state: GlobalState,
}

/// An immutable kriging predictor.
pub struct KrigingModel {
    train: PointSet,
    working_values: Vec<f64>,
    spec: VariogramSpec,
    transform: TransformState,
    policy: SolverPolicy,
    knn: Option<KnnIndex>,
    global: Option<GlobalContext>,
}

impl KrigingModel {
    /// Builds the predictor, applying the transform to training values and
    /// pre-factoring the global system when the mode is `Global`.
    pub fn new(
        train: PointSet,
        spec: VariogramSpec,
        transform: TransformState,
        policy: SolverPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        let working_values = train
            .values()
            .iter()
            .map(|&v| transform.forward(v))
            .collect::<Result<Vec<f64>>>()?;

        let mut model = Self {
            train,
            working_values,
            spec,
            transform,
            policy,
            knn: None,
            global: None,
        };
        match policy.mode {
            SolverMode::Local { .. } => {
                model.knn = Some(KnnIndex::build(&model.train));
            }
            SolverMode::Global => {
                model.global = Some(model.build_global_context()?);
            }
        }
        Ok(model)
    }

    pub fn spec(&self) -> &VariogramSpec {
        &self.spec
    }

    pub fn transform(&self) -> TransformState {
        self.transform
    }

    fn build_global_context(&self) -> Result<GlobalContext> {
        let a_raw = assemble_matrix(&self.spec, self.train.points());
        let a_reg = apply_regularization(&a_raw, self.policy.regularization);
        let conflict = conflicting_duplicates(self.train.points(), self.train.values());
        let lu = a_reg.clone().lu();
        let state = if conflict {
            self.broken_state(&a_reg, "duplicate coordinates with differing values")?
        } else if !lu.is_invertible() {
            self.broken_state(&a_reg, "singular global kriging matrix")?
        } else {
            GlobalState::Factored(Box::new(lu))
        };
        Ok(GlobalContext { a_reg, state })
    }

    fn broken_state(&self, a_reg: &DMatrix<f64>, why: &str) -> Result<GlobalState> {
        let pinv = match self.policy.fallback {
            Fallback::PseudoInverse => Some(pseudo_inverse_of(a_reg)?),
            _ => None,
        };
        Ok(GlobalState::Broken {
            pinv,
            why: why.to_string(),
        })
    }

    /// Predicts at every target, in target order.
    ///
    /// Targets are independent; they are evaluated in parallel and the
    /// output is identical to sequential evaluation.
    pub fn predict(&self, targets: &[Point2]) -> Result<Vec<KrigingPrediction>> {
        targets
            .par_iter()
            .map(|&t| self.predict_one(t))
            .collect::<Result<Vec<_>>>()
    }

    fn predict_one(&self, target: Point2) -> Result<KrigingPrediction> {
        let solved = match self.policy.mode {
            SolverMode::Global => self.solve_global(target)?,
            SolverMode::Local { k } => self.solve_local(target, k)?,
        };
        Ok(KrigingPrediction {
            value: self.transform.back(solved.prediction),
            variance: solved.variance,
            used_fallback: solved.used_fallback,
            variance_clamped: solved.variance_clamped,
        })
    }

    fn solve_global(&self, target: Point2) -> Result<SolvedSystem> {
        let ctx = self.global.as_ref().expect("global context built in new()");
        let b = assemble_rhs(&self.spec, self.train.points(), target);
        let m = self.train.len();
        match &ctx.state {
            GlobalState::Factored(lu) => {
                if let Some(sol) = lu.solve(&b) {
                    if solution_is_valid(&sol, m) {
                        return Ok(finish_solution(&sol, &b, &self.working_values, false));
                    }
                }
                fallback_solution(
                    self.policy.fallback,
                    &ctx.a_reg,
                    None,
                    &b,
                    &self.working_values,
                    "global kriging solve rejected",
                )
            }
            GlobalState::Broken { pinv, why } => fallback_solution(
                self.policy.fallback,
                &ctx.a_reg,
                pinv.as_ref(),
                &b,
                &self.working_values,
                why,
            ),
        }
    }

    fn solve_local(&self, target: Point2, k: usize) -> Result<SolvedSystem> {
        let knn = self.knn.as_ref().expect("knn index built in new()");
        let hits = knn.knn_query(target, k);
        let pts: Vec<Point2> = hits.iter().map(|&(i, _)| self.train.points()[i]).collect();
        let vals: Vec<f64> = hits.iter().map(|&(i, _)| self.working_values[i]).collect();

        let a_raw = assemble_matrix(&self.spec, &pts);
        let b = assemble_rhs(&self.spec, &pts, target);
        let a_reg = apply_regularization(&a_raw, self.policy.regularization);

        if conflicting_duplicates(&pts, &vals) {
            return fallback_solution(
                self.policy.fallback,
                &a_reg,
                None,
                &b,
                &vals,
                "duplicate coordinates with differing values in neighborhood",
            );
        }
        let lu = a_reg.clone().lu();
        if let Some(sol) = lu.solve(&b) {
            if solution_is_valid(&sol, pts.len()) {
                return Ok(finish_solution(&sol, &b, &vals, false));
            }
        }
        fallback_solution(
            self.policy.fallback,
            &a_reg,
            None,
            &b,
            &vals,
            "singular or ill-conditioned local kriging system",
        )
    }
}

/// True when two entries share exact coordinates but carry different values.
fn conflicting_duplicates(points: &[Point2], values: &[f64]) -> bool {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    order.windows(2).any(|w| {
        let (p, q) = (points[w[0]], points[w[1]]);
        p.x == q.x && p.y == q.y && values[w[0]] != values[w[1]]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variogram::VariogramKind;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y).unwrap()
    }

    fn exp_spec(nugget: f64, psill: f64, range: f64) -> VariogramSpec {
        VariogramSpec::new(VariogramKind::Exponential, nugget, psill, range).unwrap()
    }

    fn default_policy() -> SolverPolicy {
        SolverPolicy {
            mode: SolverMode::Global,
            regularization: Regularization::None,
            fallback: Fallback::Fail,
        }
    }

    fn random_pointset(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        PointSet::from_xy(&coords, values).unwrap()
    }

    #[test]
    fn offset_for_constant_positive_values() {
        let d = adaptive_log_offset(&[5.0, 5.0, 5.0]);
        assert_relative_eq!(d, 5.0 + 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn offset_uses_percentile_of_positives() {
        let d = adaptive_log_offset(&[-1.0, 2.0, 3.0]);
        assert_relative_eq!(d, 2.01 + 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn offset_guards_all_negative() {
        let d = adaptive_log_offset(&[-4.0, -1.0, -2.0]);
        assert_relative_eq!(d, 4.0 + 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn offset_always_makes_min_positive() {
        let values = [-100.0, 2.0, 3.0];
        let d = adaptive_log_offset(&values);
        assert!(values.iter().copied().fold(f64::INFINITY, f64::min) + d > 0.0);
    }

    #[test]
    fn transform_disabled_is_identity() {
        let t = TransformState::disabled();
        assert_eq!(t.forward(3.7).unwrap(), 3.7);
        assert_eq!(t.back(3.7), 3.7);
    }

    #[test]
    fn transform_log_examples() {
        let t = TransformState {
            enabled: true,
            delta: 1.0,
        };
        assert_eq!(t.forward(0.0).unwrap(), 0.0);
        assert_eq!(t.back(0.0), 0.0);
        assert_relative_eq!(
            t.forward(std::f64::consts::E - 1.0).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            t.forward(-1.0),
            Err(Error::NonPositiveAfterOffset { .. })
        ));
    }

    #[test]
    fn transform_roundtrip() {
        let values = [0.3, 12.5, -0.4, 100.0];
        let t = TransformState::adaptive_log(&values);
        for &v in &values {
            let back = t.back(t.forward(v).unwrap());
            assert_relative_eq!(back, v, max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(condition_adaptive_epsilon(1e6), 1e-10);
        assert_eq!(condition_adaptive_epsilon(1e9), 1e-8);
        assert_eq!(condition_adaptive_epsilon(1e11), 1e-6);
        assert_eq!(condition_adaptive_epsilon(1e13), 1e-4);
        assert_eq!(condition_adaptive_epsilon(f64::INFINITY), 1e-4);
    }

    #[test]
    fn single_neighbor_forces_unit_weight() {
        let spec = exp_spec(0.3, 1.0, 2.0);
        let neighbors = PointSet::from_xy(&[(0.0, 0.0)], vec![7.5]).unwrap();
        let (a, b) = assemble_ok_system(&spec, &neighbors, pt(3.0, 3.0));
        let solved = solve_kriging_system(&a, &b, &default_policy(), neighbors.values()).unwrap();
        assert_relative_eq!(solved.weights[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(solved.prediction, 7.5, max_relative = 1e-12);
    }

    #[test]
    fn pure_nugget_gives_uniform_weights() {
        let spec = exp_spec(0.8, 0.0, 1.0);
        let neighbors = PointSet::from_xy(
            &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap();
        let (a, b) = assemble_ok_system(&spec, &neighbors, pt(0.3, 0.6));
        let solved = solve_kriging_system(&a, &b, &default_policy(), neighbors.values()).unwrap();
        for w in &solved.weights {
            assert_relative_eq!(*w, 0.25, max_relative = 1e-9);
        }
        assert_relative_eq!(solved.prediction, 2.5, max_relative = 1e-9);
    }

    #[test]
    fn symmetric_neighbors_share_weight() {
        let spec = exp_spec(0.1, 1.0, 3.0);
        let neighbors =
            PointSet::from_xy(&[(-1.0, 0.0), (1.0, 0.0)], vec![2.0, 6.0]).unwrap();
        let (a, b) = assemble_ok_system(&spec, &neighbors, pt(0.0, 0.0));
        let solved = solve_kriging_system(&a, &b, &default_policy(), neighbors.values()).unwrap();
        assert_relative_eq!(solved.weights[0], 0.5, max_relative = 1e-10);
        assert_relative_eq!(solved.weights[1], 0.5, max_relative = 1e-10);
        assert_relative_eq!(solved.prediction, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn duplicate_neighbors_hit_neighbor_mean_fallback() {
        let spec = exp_spec(0.0, 1.0, 2.0);
        let neighbors =
            PointSet::from_xy(&[(1.0, 1.0), (1.0, 1.0)], vec![3.0, 3.0]).unwrap();
        let (a, b) = assemble_ok_system(&spec, &neighbors, pt(0.0, 0.0));
        let policy = SolverPolicy {
            fallback: Fallback::NeighborMean,
            ..default_policy()
        };
        let solved = solve_kriging_system(&a, &b, &policy, neighbors.values()).unwrap();
        assert!(solved.used_fallback);
        assert_eq!(solved.prediction, 3.0);
    }

    #[test]
    fn duplicate_conflict_errors_under_fail_policy() {
        let train = PointSet::from_xy(
            &[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let model = KrigingModel::new(
            train,
            exp_spec(0.5, 1.0, 1.0),
            TransformState::disabled(),
            default_policy(),
        )
        .unwrap();
        let err = model.predict(&[pt(0.5, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
    }

    #[test]
    fn duplicate_conflict_pseudo_inverse_still_predicts() {
        let train = PointSet::from_xy(
            &[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
            vec![1.0, 2.0, 3.0, 2.5],
        )
        .unwrap();
        let policy = SolverPolicy {
            fallback: Fallback::PseudoInverse,
            ..default_policy()
        };
        let model = KrigingModel::new(
            train,
            exp_spec(0.5, 1.0, 1.0),
            TransformState::disabled(),
            policy,
        )
        .unwrap();
        let preds = model.predict(&[pt(0.5, 0.5)]).unwrap();
        assert!(preds[0].used_fallback);
        assert!(preds[0].value.is_finite());
    }

    #[test]
    fn exact_interpolation_without_nugget() {
        let train = random_pointset(40, 11);
        let model = KrigingModel::new(
            train.clone(),
            exp_spec(0.0, 1.0, 3.0),
            TransformState::disabled(),
            default_policy(),
        )
        .unwrap();
        let preds = model.predict(train.points()).unwrap();
        for (p, v) in preds.iter().zip(train.values()) {
            assert_relative_eq!(p.value, *v, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn local_with_full_neighborhood_matches_global() {
        let train = random_pointset(30, 21);
        let targets: Vec<Point2> = (0..10)
            .map(|i| pt(0.5 + 0.9 * i as f64, 9.5 - 0.8 * i as f64))
            .collect();
        let spec = exp_spec(0.2, 1.5, 2.5);
        let reg = Regularization::FixedDiagonal(1e-10);
        let global = KrigingModel::new(
            train.clone(),
            spec,
            TransformState::disabled(),
            SolverPolicy {
                mode: SolverMode::Global,
                regularization: reg,
                fallback: Fallback::Fail,
            },
        )
        .unwrap();
        let local = KrigingModel::new(
            train.clone(),
            spec,
            TransformState::disabled(),
            SolverPolicy {
                mode: SolverMode::Local { k: train.len() },
                regularization: reg,
                fallback: Fallback::Fail,
            },
        )
        .unwrap();
        let pg = global.predict(&targets).unwrap();
        let pl = local.predict(&targets).unwrap();
        for (g, l) in pg.iter().zip(&pl) {
            assert_relative_eq!(g.value, l.value, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(g.variance, l.variance, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn pure_nugget_local_predicts_neighbor_mean() {
        let train = random_pointset(50, 31);
        let model = KrigingModel::new(
            train.clone(),
            exp_spec(1.0, 0.0, 1.0),
            TransformState::disabled(),
            SolverPolicy {
                mode: SolverMode::Local { k: 5 },
                regularization: Regularization::None,
                fallback: Fallback::Fail,
            },
        )
        .unwrap();
        let target = pt(5.0, 5.0);
        let knn = KnnIndex::build(&train);
        let expected: f64 = knn
            .knn_query(target, 5)
            .iter()
            .map(|&(i, _)| train.values()[i])
            .sum::<f64>()
            / 5.0;
        let preds = model.predict(&[target]).unwrap();
        assert_relative_eq!(preds[0].value, expected, max_relative = 1e-9);
    }

    #[test]
    fn weights_sum_to_one_across_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let n = rng.gen_range(3..20);
            let train = random_pointset(n, 1000 + trial);
            let spec = exp_spec(
                rng.gen_range(0.0..0.5),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.5..5.0),
            );
            let target = pt(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let (a, b) = assemble_ok_system(&spec, &train, target);
            let solved =
                solve_kriging_system(&a, &b, &default_policy(), train.values()).unwrap();
            let sum: f64 = solved.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8, "weight sum {sum}");
            assert!(solved.variance >= 0.0);
        }
    }

    #[test]
    fn transform_enabled_predicts_in_original_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<(f64, f64)> = (0..25)
            .map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)))
            .collect();
        let values: Vec<f64> = (0..25).map(|_| rng.gen_range(0.5..2.0f64).exp()).collect();
        let train = PointSet::from_xy(&coords, values.clone()).unwrap();
        let transform = TransformState::adaptive_log(&values);
        let model = KrigingModel::new(
            train.clone(),
            exp_spec(0.0, 0.8, 2.0),
            transform,
            default_policy(),
        )
        .unwrap();
        // Exact interpolation still holds in original units.
        let preds = model.predict(&train.points()[..5]).unwrap();
        for (p, v) in preds.iter().zip(&values[..5]) {
            assert_relative_eq!(p.value, *v, max_relative = 1e-6);
        }
    }

    #[test]
    fn condition_estimate_matches_svd_on_small_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let kappa = estimate_condition_number(&a);
        let sv = a.svd(false, false).singular_values;
        assert_relative_eq!(kappa, sv.max() / sv.min(), max_relative = 1e-9);
    }
}
