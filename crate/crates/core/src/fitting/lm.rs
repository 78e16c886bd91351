//! Bounded Levenberg-Marquardt with finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-10,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmResult {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after the start and after every accepted step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

/// Minimizes `sum r_i(x)^2` subject to `x >= lower` (componentwise).
///
/// `residuals(x, out)` fills `out` (length `m`). Infeasible trial points are
/// clamped onto the bounds. Convergence is declared when the projected
/// gradient `J^T r` drops below `grad_tol` or a step shrinks below
/// `step_tol` (relative to `|x|` when `|x| > 1`).
pub(crate) fn minimize<F>(residuals: F, x0: &[f64], lower: &[f64], m: usize, opts: LmOptions) -> LmResult
where
    F: Fn(&[f64], &mut [f64]),
{
    let p = x0.len();
    let clamp = |x: &mut [f64]| {
        for (v, lo) in x.iter_mut().zip(lower) {
            if *v < *lo {
                *v = *lo;
            }
        }
    };
    let eval = |x: &[f64], r: &mut Vec<f64>| -> f64 {
        residuals(x, r);
        let c: f64 = r.iter().map(|v| v * v).sum();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };

    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut r = vec![0.0; m];
    let mut cost = eval(&x, &mut r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut trial = vec![0.0; p];
    let mut r_trial = vec![0.0; m];
    let mut jac = DMatrix::<f64>::zeros(m, p);
    let mut r_plus = vec![0.0; m];
    let mut r_minus = vec![0.0; m];

    for iter in 0..opts.max_iter {
        // Jacobian, central where both sides are feasible
        for j in 0..p {
            let h = 6e-6 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            xp[j] += h;
            residuals(&xp, &mut r_plus);
            if x[j] - h >= lower[j] {
                let mut xm = x.clone();
                xm[j] -= h;
                residuals(&xm, &mut r_minus);
                for i in 0..m {
                    jac[(i, j)] = (r_plus[i] - r_minus[i]) / (2.0 * h);
                }
            } else {
                for i in 0..m {
                    jac[(i, j)] = (r_plus[i] - r[i]) / h;
                }
            }
        }
        let rv = DVector::from_column_slice(&r);
        let g = jac.tr_mul(&rv);
        let projected = (0..p)
            .map(|j| if x[j] <= lower[j] && g[j] > 0.0 { 0.0 } else { g[j] })
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if projected < opts.grad_tol {
            return LmResult {
                x,
                residuals: r,
                cost,
                iterations: iter,
                converged: true,
                history,
            };
        }
        let a = jac.tr_mul(&jac);
        let diag: Vec<f64> = (0..p).map(|j| a[(j, j)].max(1e-12)).collect();

        loop {
            let mut damped = a.clone();
            for j in 0..p {
                damped[(j, j)] += lambda * diag[j];
            }
            let step = damped.cholesky().map(|c| c.solve(&(-&g)));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    return LmResult {
                        x,
                        residuals: r,
                        cost,
                        iterations: iter,
                        converged: false,
                        history,
                    };
                }
                continue;
            };
            for j in 0..p {
                trial[j] = x[j] + step[j];
            }
            clamp(&mut trial);
            let moved = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            if moved < opts.step_tol * scale {
                return LmResult {
                    x,
                    residuals: r,
                    cost,
                    iterations: iter + 1,
                    converged: true,
                    history,
                };
            }
            let c = eval(&trial, &mut r_trial);
            if c < cost {
                x.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = c;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                return LmResult {
                    x,
                    residuals: r,
                    cost,
                    iterations: iter + 1,
                    converged: false,
                    history,
                };
            }
        }
    }
    LmResult {
        x,
        residuals: r,
        cost,
        iterations: opts.max_iter,
        converged: false,
        history,
    }
}
