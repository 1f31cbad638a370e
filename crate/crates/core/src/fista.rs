//! Accelerated proximal gradient for `min_β ‖Hβ − X‖₂² + λ‖β‖₁`, used to
//! train the sparse autoencoder output weights.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FistaParams {
    /// L1 weight.
    pub lambda: f64,
    /// Step fraction, strictly inside `(0, 1)`.
    pub delta: f64,
    /// Stop once `‖β_k − β_{k+1}‖₂ < epsilon`.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for FistaParams {
    fn default() -> Self {
        FistaParams {
            lambda: 1e-2,
            delta: 0.9,
            epsilon: 1e-6,
            max_iter: 500,
        }
    }
}

impl FistaParams {
    pub fn with_lambda(lambda: f64) -> Self {
        FistaParams {
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FistaOutcome {
    pub beta: Array2<f64>,
    pub iterations: usize,
    /// False when `max_iter` was reached before the stopping criterion.
    pub converged: bool,
}

/// `max(|c| − t, 0)·sign(c)`.
#[inline]
pub fn shrink(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// Elementwise soft thresholding.
pub fn soft_threshold(c: ArrayView2<f64>, t: f64) -> Array2<f64> {
    c.mapv(|v| shrink(v, t))
}

/// `‖Hβ − X‖₂² + λ‖β‖₁`.
pub fn lasso_objective(h: ArrayView2<f64>, x: ArrayView2<f64>, beta: ArrayView2<f64>, lambda: f64) -> f64 {
    let r = h.dot(&beta) - x;
    r.iter().map(|v| v * v).sum::<f64>() + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

/// Step size `δ / (1 + 2‖H‖₂²)`; the gradient of the smooth term is
/// `2‖H‖₂²`-Lipschitz, so this step always contracts.
pub fn step_size(h: ArrayView2<f64>, delta: f64) -> f64 {
    let s = linalg::spectral_norm(h);
    delta / (1.0 + 2.0 * s * s)
}

pub fn fista_solve(
    h: ArrayView2<f64>,
    target: ArrayView2<f64>,
    params: &FistaParams,
) -> Result<FistaOutcome> {
    fista_solve_from(h, target, params, None)
}

/// Runs the solver starting from `init` (zero when `None`).
pub fn fista_solve_from(
    h: ArrayView2<f64>,
    target: ArrayView2<f64>,
    params: &FistaParams,
    init: Option<ArrayView2<f64>>,
) -> Result<FistaOutcome> {
    params.validate()?;
    if h.nrows() != target.nrows() {
        return Err(Error::DimensionMismatch {
            context: "lasso target rows",
            expected: h.nrows(),
            got: target.nrows(),
        });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lasso design matrix"));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lasso target"));
    }
    let shape = (h.ncols(), target.ncols());
    let mut beta = match init {
        Some(b) if b.dim() == shape => b.to_owned(),
        Some(b) => {
            return Err(Error::DimensionMismatch {
                context: "lasso warm start",
                expected: shape.0 * shape.1,
                got: b.len(),
            })
        }
        None => Array2::zeros(shape),
    };

    let gram = h.t().dot(&h);
    let htx = h.t().dot(&target);
    let gamma = step_size(h, params.delta);
    let thresh = params.lambda * gamma;

    let mut y = beta.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        // c = y − 2γ Hᵀ(Hy − X), with HᵀH and HᵀX precomputed
        let mut c = gram.dot(&y);
        Zip::from(&mut c)
            .and(&y)
            .and(&htx)
            .for_each(|c, &y, &b| *c = y - 2.0 * gamma * (*c - b));
        let next = c.mapv_into(|v| shrink(v, thresh));

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let mut crit = 0.0;
        Zip::from(&mut y).and(&beta).and(&next).for_each(|y, &old, &new| {
            let d = old - new;
            crit += d * d;
            *y = new + momentum * d;
        });
        let crit = crit.sqrt();
        beta = next;
        t = t_next;
        iterations += 1;
        if !crit.is_finite() {
            return Err(Error::Numerical("lasso iterates diverged".into()));
        }
        if crit < params.epsilon {
            converged = true;
            break;
        }
    }
    Ok(FistaOutcome {
        beta,
        iterations,
        converged,
    })
}
