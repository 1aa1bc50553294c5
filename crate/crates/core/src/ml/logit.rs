use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Dataset, MlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitParams {
    /// Ridge penalty on the standardized coefficients; the intercept is free.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm is at most this.
    pub tol: f64,
}

impl Default for LogitParams {
    fn default() -> Self {
        Self { l2: 1e-8, max_iter: 100, tol: 1e-6 }
    }
}

/// Logistic regression on z-scored features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub intercept: f64,
    /// One per column, on the standardized scale.
    pub coefficients: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn linear(theta: &[f64], row: &[f64]) -> f64 {
    theta[0] + theta[1..].iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
}

/// Penalized negative log-likelihood; `theta = [intercept, w_1..w_p]`.
pub fn logit_loss(rows: &[Vec<f64>], labels: &[bool], theta: &[f64], l2: f64) -> f64 {
    let nll: f64 = rows
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let t = linear(theta, r);
            softplus(t) - if y { t } else { 0.0 }
        })
        .sum();
    nll + 0.5 * l2 * theta[1..].iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logit_loss`] with respect to `theta`.
pub fn logit_gradient(rows: &[Vec<f64>], labels: &[bool], theta: &[f64], l2: f64) -> Vec<f64> {
    let mut grad = vec![0.0; theta.len()];
    for (r, &y) in rows.iter().zip(labels) {
        let residual = sigmoid(linear(theta, r)) - if y { 1.0 } else { 0.0 };
        grad[0] += residual;
        for (g, x) in grad[1..].iter_mut().zip(r) {
            *g += residual * x;
        }
    }
    for (g, w) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += l2 * w;
    }
    grad
}

fn hessian(rows: &[Vec<f64>], theta: &[f64], l2: f64) -> DMatrix<f64> {
    let k = theta.len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut x = vec![1.0; k];
    for r in rows {
        x[1..].copy_from_slice(r);
        let s = sigmoid(linear(theta, r));
        let weight = s * (1.0 - s);
        for i in 0..k {
            for j in 0..=i {
                h[(i, j)] += weight * x[i] * x[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    for i in 1..k {
        h[(i, i)] += l2;
    }
    h
}

/// Newton direction, falling back to increasing diagonal damping when the
/// Hessian is numerically singular.
fn newton_direction(h: DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
    let g = DVector::from_column_slice(grad);
    let scale = (h.trace() / h.nrows() as f64).max(1e-300);
    let mut damping = 0.0;
    for _ in 0..30 {
        let mut damped = h.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += damping;
        }
        if let Some(chol) = damped.cholesky() {
            let d = -chol.solve(&g);
            if d.iter().all(|v| v.is_finite()) {
                return d.iter().copied().collect();
            }
        }
        damping = if damping == 0.0 { 1e-10 * scale } else { damping * 10.0 };
    }
    grad.iter().map(|g| -g).collect()
}

fn standardize(data: &Dataset) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = data.len() as f64;
    let p = data.columns.len();
    let means: Vec<f64> = (0..p).map(|j| data.rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let ss: f64 = data.rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum();
            let sd = (ss / (n - 1.0).max(1.0)).sqrt();
            if sd > 1e-12 * means[j].abs().max(1.0) {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z = data
        .rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, x)| (x - means[j]) / scales[j]).collect())
        .collect();
    (means, scales, z)
}

/// Fits by damped Newton iterations with a backtracking line search, so the
/// loss never increases. Returns the model and the loss after every
/// iteration (first entry: the loss at zero coefficients).
pub fn fit_logit_traced(data: &Dataset, params: &LogitParams) -> Result<(LogitModel, Vec<f64>), MlError> {
    data.check_trainable()?;
    if params.l2 < 0.0 || !params.l2.is_finite() {
        return Err(MlError::InvalidData("l2 must be finite and >= 0".into()));
    }
    let (means, scales, z) = standardize(data);
    let y = &data.labels;
    let mut theta = vec![0.0; data.columns.len() + 1];
    let mut loss = logit_loss(&z, y, &theta, params.l2);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let grad = logit_gradient(&z, y, &theta, params.l2);
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= params.tol {
            converged = true;
            break;
        }
        let mut direction = newton_direction(hessian(&z, &theta, params.l2), &grad);
        let mut slope: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
        if slope >= 0.0 {
            direction = grad.iter().map(|g| -g).collect();
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }
        let mut step = 1.0;
        let accepted = loop {
            let candidate: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
            let candidate_loss = logit_loss(&z, y, &candidate, params.l2);
            if candidate_loss <= loss + 1e-4 * step * slope {
                break Some((candidate, candidate_loss));
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((candidate, candidate_loss)) => {
                theta = candidate;
                loss = candidate_loss;
                trace.push(loss);
            }
            None => {
                // no further decrease is representable
                converged = true;
                break;
            }
        }
    }
    if !converged {
        warn!("logit: no convergence after {} iterations (separable data?)", params.max_iter);
    }
    let model = LogitModel {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        means,
        scales,
        iterations,
        converged,
    };
    Ok((model, trace))
}

pub fn fit_logit(data: &Dataset, params: &LogitParams) -> Result<LogitModel, MlError> {
    fit_logit_traced(data, params).map(|(m, _)| m)
}

impl LogitModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let t = self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .zip(self.means.iter().zip(&self.scales))
                .map(|((x, w), (m, s))| w * (x - m) / s)
                .sum::<f64>();
        sigmoid(t)
    }

    /// Standardized coefficients by decreasing magnitude.
    pub fn ranked_coefficients(&self, columns: &[String]) -> Vec<(String, f64)> {
        let mut ranked: Vec<(String, f64)> = columns.iter().cloned().zip(self.coefficients.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        ranked
    }
}
