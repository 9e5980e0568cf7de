//! Derivative-free minimizers used by variogram fitting and bandwidth search.
//!
//! Nelder-Mead handles the non-smooth L1 objectives; box constraints are
//! enforced by clamping candidate points onto the feasible box before
//! evaluation. Everything here is deterministic given the inputs.

use rand::Rng;

#[derive(Debug, Clone)]
pub(crate) struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub converged: bool,
}

fn clamp_to_bounds(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Nelder-Mead simplex minimization on a box.
///
/// `x0` seeds the initial simplex; the other vertices offset each coordinate
/// by 5% of its bound width. Converged means both the function spread and the
/// simplex diameter dropped below tolerance before the iteration cap.
pub(crate) fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_iter: usize,
) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    debug_assert_eq!(dim, bounds.len());
    let f_tol = 1e-12;
    let x_tol = 1e-10;

    let mut eval = |x: &mut Vec<f64>| {
        clamp_to_bounds(x, bounds);
        f(x)
    };

    // Initial simplex.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut base = x0.to_vec();
    let fb = eval(&mut base);
    simplex.push((base.clone(), fb));
    for d in 0..dim {
        let (lo, hi) = bounds[d];
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        let mut step = 0.05 * span;
        if base[d] + step > hi {
            step = -step;
        }
        let mut v = base.clone();
        v[d] += step;
        let fv = eval(&mut v);
        simplex.push((v, fv));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
    };
    order(&mut simplex);

    let mut converged = false;
    for _ in 0..max_iter {
        let spread = simplex[dim].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread.abs() <= f_tol * (1.0 + simplex[0].1.abs()) && diam <= x_tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let worst = simplex[dim].clone();
        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = eval(&mut reflected);

        if fr < simplex[0].1 {
            // Try expanding past the reflection.
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = eval(&mut expanded);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            // Contract toward the centroid.
            let outside = fr < worst.1;
            let anchor = if outside { &reflected } else { &worst.0 };
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(anchor)
                .map(|(c, a)| c + 0.5 * (a - c))
                .collect();
            let fc = eval(&mut contracted);
            if fc < fr.min(worst.1) {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, vi)| b + 0.5 * (vi - b))
                        .collect();
                    let fv = eval(&mut v);
                    *entry = (v, fv);
                }
            }
        }
        order(&mut simplex);
    }

    let (x, fx) = simplex.swap_remove(0);
    NmResult { x, fx, converged }
}

/// Latin-hypercube sample of `n` points over the box, one stratum per point
/// and axis.
pub(crate) fn latin_hypercube<R: Rng>(
    rng: &mut R,
    bounds: &[(f64, f64)],
    n: usize,
) -> Vec<Vec<f64>> {
    let dim = bounds.len();
    let mut points = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        // Fisher-Yates on the stratum order.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            strata.swap(i, j);
        }
        let (lo, hi) = bounds[d];
        for (i, point) in points.iter_mut().enumerate() {
            let u: f64 = rng.gen_range(0.0..1.0);
            let frac = (strata[i] as f64 + u) / n as f64;
            point[d] = lo + frac * (hi - lo);
        }
    }
    points
}

/// Golden-section minimization of a univariate function on `[lo, hi]`.
///
/// Returns the best evaluated point. Tolerates flat or piecewise-constant
/// objectives; on those it simply settles deterministically.
pub(crate) fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if !(hi > lo) {
        return (lo, f(lo));
    }
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let res = nelder_mead(f, &[0.0, 0.0], &[(-5.0, 5.0), (-5.0, 5.0)], 2000);
        assert!(res.converged);
        assert!((res.x[0] - 1.5).abs() < 1e-6);
        assert!((res.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        // Unconstrained minimum at x = -3, box keeps it at the boundary.
        let f = |x: &[f64]| (x[0] + 3.0).powi(2);
        let res = nelder_mead(f, &[1.0, 0.0], &[(0.0, 5.0), (-1.0, 1.0)], 2000);
        assert!(res.x[0] >= 0.0);
        assert!(res.x[0] < 1e-6);
    }

    #[test]
    fn nelder_mead_handles_l1_objective() {
        let f = |x: &[f64]| (x[0] - 2.0).abs() + (x[1] - 1.0).abs();
        let res = nelder_mead(f, &[0.1, 0.1], &[(0.0, 10.0), (0.0, 10.0)], 4000);
        assert!((res.x[0] - 2.0).abs() < 1e-5);
        assert!((res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn latin_hypercube_stratifies_each_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bounds = [(0.0, 10.0), (-2.0, 2.0)];
        let n = 16;
        let pts = latin_hypercube(&mut rng, &bounds, n);
        for d in 0..2 {
            let (lo, hi) = bounds[d];
            let mut seen = vec![false; n];
            for p in &pts {
                let frac = (p[d] - lo) / (hi - lo);
                let stratum = ((frac * n as f64).floor() as usize).min(n - 1);
                seen[stratum] = true;
            }
            assert!(seen.iter().all(|&s| s), "axis {d} missing a stratum");
        }
    }

    #[test]
    fn latin_hypercube_is_seed_deterministic() {
        let bounds = [(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)];
        let a = latin_hypercube(&mut ChaCha8Rng::seed_from_u64(3), &bounds, 8);
        let b = latin_hypercube(&mut ChaCha8Rng::seed_from_u64(3), &bounds, 8);
        assert_eq!(a, b);
    }

    #[test]
    fn golden_section_minimizes_parabola() {
        let (x, _) = golden_section_min(|x| (x - 0.7).powi(2), 0.0, 2.0, 80);
        assert!((x - 0.7).abs() < 1e-9);
    }
}
