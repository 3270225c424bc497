use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, softplus};

pub const DEFAULT_MAX_ITER: usize = 5000;
pub const GRADIENT_TOL: f64 = 1e-7;

/// Linear detector `theta . x + intercept`, fitted with inverse penalty `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl LogisticOptions {
    pub fn new(c: f64) -> Self {
        LogisticOptions {
            c,
            max_iter: DEFAULT_MAX_ITER,
            tol: GRADIENT_TOL,
        }
    }
}

/// `sum_i w_i BCE_i + |theta|^2 / (2C)` with the intercept unpenalized.
pub fn logistic_objective(
    x: &[Vec<f64>],
    y: &[bool],
    weights: Option<&[f64]>,
    c: f64,
    theta: &[f64],
    intercept: f64,
) -> f64 {
    let mut loss = 0.0;
    for (i, (row, &yi)) in x.iter().zip(y).enumerate() {
        let z = dot(row, theta) + intercept;
        let w = weights.map_or(1.0, |w| w[i]);
        loss += w * (softplus(z) - if yi { z } else { 0.0 });
    }
    loss + theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * c)
}

/// Gradient of [`logistic_objective`]; the last entry is the intercept component.
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    weights: Option<&[f64]>,
    c: f64,
    theta: &[f64],
    intercept: f64,
) -> Vec<f64> {
    let p = theta.len();
    let mut g = vec![0.0; p + 1];
    for (i, (row, &yi)) in x.iter().zip(y).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let r = w * (sigmoid(dot(row, theta) + intercept) - yi as u8 as f64);
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
        g[p] += r;
    }
    for (gj, t) in g.iter_mut().zip(theta) {
        *gj += t / c;
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Unweighted fit with the default iteration budget.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], c: f64) -> Result<DetectorModel> {
    fit_logistic_with(x, y, None, &LogisticOptions::new(c))
}

/// Damped Newton iterations with a backtracking line search.
pub fn fit_logistic_with(
    x: &[Vec<f64>],
    y: &[bool],
    weights: Option<&[f64]>,
    opts: &LogisticOptions,
) -> Result<DetectorModel> {
    if x.len() != y.len() || weights.is_some_and(|w| w.len() != y.len()) {
        return Err(Error::Fit("feature rows, labels and weights differ in length".into()));
    }
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(Error::Fit(format!("inverse regularization strength {} must be positive", opts.c)));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Fit(format!(
            "logistic fit needs both classes, got {} positive of {}",
            pos,
            y.len()
        )));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::Fit("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite feature value".into()));
    }

    let n = x.len();
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j < p { x[i][j] } else { 1.0 });
    let mut theta = vec![0.0; p];
    let mut intercept = 0.0;
    let mut loss = logistic_objective(x, y, weights, opts.c, &theta, intercept);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let grad = logistic_gradient(x, y, weights, opts.c, &theta, intercept);
        if inf_norm(&grad) <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut hess = DMatrix::zeros(p + 1, p + 1);
        let mut scaled = design.clone();
        for i in 0..n {
            let s = sigmoid(dot(&x[i], &theta) + intercept);
            let w = weights.map_or(1.0, |w| w[i]) * s * (1.0 - s);
            scaled.row_mut(i).scale_mut(w);
        }
        hess.gemm_tr(1.0, &design, &scaled, 0.0);
        for j in 0..p {
            hess[(j, j)] += 1.0 / opts.c;
        }
        let g = DVector::from_vec(grad.clone());
        let step = newton_direction(hess, &g);

        // backtracking on the objective; the direction is a descent direction
        let slope: f64 = -g.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = (0..p).map(|j| theta[j] - t * step[j]).collect();
            let cand_b = intercept - t * step[p];
            let cand_loss = logistic_objective(x, y, weights, opts.c, &cand, cand_b);
            // Near the optimum the loss change drops below rounding noise; fall back to
            // requiring a smaller gradient there.
            let sufficient = cand_loss <= loss + 1e-4 * t * slope
                && cand_loss - loss < -1e-13 * (1.0 + loss.abs());
            let flat = (cand_loss - loss).abs() <= 1e-12 * (1.0 + loss.abs())
                && inf_norm(&logistic_gradient(x, y, weights, opts.c, &cand, cand_b)) < inf_norm(&grad);
            if sufficient || flat {
                theta = cand;
                intercept = cand_b;
                loss = cand_loss;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no representable decrease left; accept the point if the gradient is small relative to the loss
            let gnorm = inf_norm(&grad);
            converged = gnorm <= 1e-6 * (1.0 + loss.abs());
            break;
        }
    }
    Ok(DetectorModel {
        coefficients: theta,
        intercept,
        c: opts.c,
        iterations,
        converged,
    })
}

/// Solve `H d = g`, adding diagonal damping until the Cholesky factorization succeeds.
fn newton_direction(hess: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = hess.diagonal().iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    let mut damping = 0.0;
    loop {
        let mut h = hess.clone();
        if damping > 0.0 {
            for j in 0..h.nrows() {
                h[(j, j)] += damping;
            }
        }
        if let Some(chol) = h.cholesky() {
            return chol.solve(g);
        }
        damping = if damping == 0.0 { 1e-10 * scale } else { damping * 10.0 };
        if damping > 1e10 * scale {
            // gradient step as a last resort
            return g.clone();
        }
    }
}

/// Raw detector margin of a transformed vector.
pub fn raw_margin(model: &DetectorModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.coefficients.len() {
        return Err(Error::Alignment(format!(
            "detector expects {} features, got {}",
            model.coefficients.len(),
            x.len()
        )));
    }
    Ok(dot(&model.coefficients, x) + model.intercept)
}
