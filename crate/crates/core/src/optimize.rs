//! Multi-start quasi-Newton building block: L-BFGS with a backtracking line
//! search and central finite-difference gradients.
//!
//! Objectives may return non-finite values for infeasible regions (for
//! example a failed covariance factorization); such points are rejected by
//! the line search.

use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct OptimizeConfig {
    /// Maximum L-BFGS iterations.
    pub max_iters: usize,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Central finite-difference step on the internal scale.
    pub grad_step: f64,
    /// Stop when the gradient infinity norm falls below this times max(1,|f|).
    pub grad_tol: f64,
    /// Stop when the accepted step falls below this infinity norm.
    pub step_tol: f64,
    /// Stop on relative objective change below this.
    pub f_tol: f64,
    /// Evaluate finite-difference probes in parallel.
    pub parallel_gradient: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            max_iters: 60,
            memory: 8,
            grad_step: 1e-6,
            grad_tol: 1e-6,
            step_tol: 1e-11,
            f_tol: 1e-11,
            parallel_gradient: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimize `f` from `x0`. Returns the best point seen even when the start
/// is infeasible or the line search stalls.
pub fn minimize<F>(f: &F, x0: &[f64], cfg: &OptimizeConfig) -> OptimizeResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let p = x0.len();
    let mut evals = 0usize;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    evals += 1;
    if !fx.is_finite() || p == 0 {
        return OptimizeResult {
            x,
            value: if fx.is_finite() { fx } else { f64::INFINITY },
            iterations: 0,
            evaluations: evals,
        };
    }

    let mut grad = fd_gradient(f, &x, fx, cfg, &mut evals);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(cfg.memory);
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        let g_inf = inf_norm(&grad);
        if g_inf <= cfg.grad_tol * fx.abs().max(1.0) {
            break;
        }

        let mut dir = two_loop_direction(&grad, &pairs);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) || !slope.is_finite() {
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                break;
            }
        }

        // Backtracking Armijo search; the first iteration has no curvature
        // information, so its trial step is scaled down from the raw
        // gradient.
        let mut t = if pairs.is_empty() {
            1.0 / (1.0 + g_inf)
        } else {
            1.0
        };
        let mut accepted = None;
        let mut backtracked = false;
        for _ in 0..30 {
            let candidate: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let fc = f(&candidate);
            evals += 1;
            if fc.is_finite() && fc <= fx + 1e-4 * t * slope {
                accepted = Some((candidate, fc));
                break;
            }
            t *= 0.5;
            backtracked = true;
        }
        let Some((mut x_new, mut f_new)) = accepted else {
            break;
        };
        // Expansion: when the first trial was accepted outright, keep
        // doubling while the objective improves. Plain Armijo otherwise
        // crawls along curved valleys.
        if !backtracked {
            for _ in 0..6 {
                t *= 2.0;
                let candidate: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
                let fc = f(&candidate);
                evals += 1;
                if fc.is_finite() && fc < f_new {
                    x_new = candidate;
                    f_new = fc;
                } else {
                    break;
                }
            }
        }

        let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step_inf = inf_norm(&step);
        let grad_new = fd_gradient(f, &x_new, f_new, cfg, &mut evals);
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > 1e-12 * inf_norm(&y).max(1e-300) * step_inf.max(1e-300) && sy.is_finite() {
            if pairs.len() == cfg.memory {
                pairs.remove(0);
            }
            pairs.push((step.clone(), y, 1.0 / sy));
        }

        let f_change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        grad = grad_new;
        iterations += 1;

        if step_inf <= cfg.step_tol || f_change <= cfg.f_tol * fx.abs().max(1.0) {
            break;
        }
    }

    OptimizeResult {
        x,
        value: fx,
        iterations,
        evaluations: evals,
    }
}

/// Central finite differences, falling back to one-sided probes at
/// infeasible boundaries.
fn fd_gradient<F>(f: &F, x: &[f64], fx: f64, cfg: &OptimizeConfig, evals: &mut usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let h = cfg.grad_step;
    let p = x.len();
    let component = |j: usize| -> f64 {
        let mut xp = x.to_vec();
        xp[j] += h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        }
    };
    let g: Vec<f64> = if cfg.parallel_gradient && p > 1 {
        (0..p).into_par_iter().map(component).collect()
    } else {
        (0..p).map(component).collect()
    };
    *evals += 2 * p;
    g
}

fn two_loop_direction(grad: &[f64], pairs: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    let gamma = pairs
        .last()
        .map(|(s, y, _)| dot(s, y) / dot(y, y).max(1e-300))
        .unwrap_or(1.0);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), alpha) in pairs.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
