//! Newton-Raphson maximization with step-halving.

use crate::core::matrix::Matrix;
use crate::error::{Error, Result};

/// A twice-differentiable log-likelihood in a packed parameter vector.
pub(crate) trait Objective {
    fn npar(&self) -> usize;
    /// Log-likelihood alone; used by the line search.
    fn loglik(&self, theta: &[f64]) -> f64;
    /// Log-likelihood, score, and Hessian.
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Matrix);
}

pub(crate) struct NewtonResult {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub hessian: Matrix,
    /// L2 norm of the score divided by the number of observations.
    pub grad_norm_scaled: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
const SEPARATION_NORM: f64 = 1e3;

/// Maximize the objective from `theta0`. Newton direction with step
/// halving; falls back to the raw gradient direction when the Hessian
/// solve fails or does not yield an ascent direction. Divergence of the
/// scaled coefficient norm past 1e3 is treated as complete separation;
/// `scales` carries per-parameter factors (design column spread for the
/// slopes) so the check does not depend on covariate units.
pub(crate) fn maximize(
    obj: &dyn Objective,
    theta0: Vec<f64>,
    n_obs: usize,
    scales: &[f64],
) -> Result<NewtonResult> {
    let mut theta = theta0;
    let n = n_obs as f64;
    let (mut ll, mut grad, mut hess) = obj.eval(&theta);
    if !ll.is_finite() {
        return Err(Error::InvalidSpec(
            "log-likelihood is not finite at the starting values".into(),
        ));
    }
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..MAX_ITER {
        let grad_norm = l2(&grad);
        if grad_norm / n < GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;

        // Newton direction: solve (-H) s = g.
        let neg_h = negate(&hess);
        let mut step = match neg_h.solve_sym(&grad) {
            Some(s) if dot(&s, &grad) > 0.0 => s,
            _ => grad.clone(),
        };

        // step-halving line search; the full Newton step is also accepted
        // when the likelihood is flat to rounding, which is where the
        // final iterations of an ill-conditioned fit live
        let flat_slack = 1e-13 * (1.0 + ll.abs());
        let mut t = 1.0;
        let mut improved = false;
        for halvings in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let cand_ll = obj.loglik(&cand);
            let acceptable = if halvings == 0 {
                cand_ll >= ll - flat_slack
            } else {
                cand_ll > ll
            };
            if cand_ll.is_finite() && acceptable {
                theta = cand;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // try the gradient direction once before giving up
            step = grad.clone();
            let mut t = 1.0 / (1.0 + l2(&step));
            let mut rescued = false;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let cand_ll = obj.loglik(&cand);
                if cand_ll.is_finite() && cand_ll > ll {
                    theta = cand;
                    rescued = true;
                    break;
                }
                t *= 0.5;
            }
            if !rescued {
                break;
            }
        }

        let scaled_norm = theta
            .iter()
            .zip(scales)
            .map(|(t, s)| (t * s) * (t * s))
            .sum::<f64>()
            .sqrt();
        if scaled_norm > SEPARATION_NORM {
            return Err(Error::CompleteSeparation(SEPARATION_NORM));
        }

        let (new_ll, new_grad, new_hess) = obj.eval(&theta);
        ll = new_ll;
        grad = new_grad;
        hess = new_hess;
    }

    let grad_norm_scaled = l2(&grad) / n;
    if grad_norm_scaled < GRAD_TOL {
        converged = true;
    }
    Ok(NewtonResult {
        theta,
        loglik: ll,
        hessian: hess,
        grad_norm_scaled,
        iterations,
        converged,
    })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn negate(m: &Matrix) -> Matrix {
    let n = m.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = -m[(i, j)];
        }
    }
    out
}
