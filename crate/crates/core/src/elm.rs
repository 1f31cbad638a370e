//! Single-hidden-layer network with random, fixed input weights. Only the
//! output weights are trained, by ridge regression or (for autoencoders)
//! by [`crate::fista`].

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::RngStream;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmLayer {
    /// `D × L` input weights.
    pub input_weights: Array2<f64>,
    /// Length-`L` biases.
    pub biases: Array1<f64>,
    pub activation: Activation,
    /// `L × D_Y` output weights, set by training.
    pub output_weights: Option<Array2<f64>>,
}

impl ElmLayer {
    /// Draws input weights and biases i.i.d. uniform on `[-1, 1]`.
    pub fn random(
        input_dim: usize,
        hidden: usize,
        activation: Activation,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::invalid(format!(
                "layer dimensions must be positive, got {input_dim}x{hidden}"
            )));
        }
        let input_weights =
            Array2::from_shape_simple_fn((input_dim, hidden), || rng.random_range(-1.0..=1.0));
        let biases = Array1::from_shape_simple_fn(hidden, || rng.random_range(-1.0..=1.0));
        Ok(ElmLayer {
            input_weights,
            biases,
            activation,
            output_weights: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.input_weights.ncols()
    }

    /// `H = g(X·A + B)`, one row per sample.
    pub fn hidden(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "ELM hidden layer input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut h = x.dot(&self.input_weights);
        let g = self.activation;
        for mut row in h.rows_mut() {
            for (v, &b) in row.iter_mut().zip(self.biases.iter()) {
                *v = g.apply(*v + b);
            }
        }
        Ok(h)
    }

    /// Fits output weights to `target` by ridge regression.
    pub fn fit_ridge(&mut self, x: ArrayView2<f64>, target: ArrayView2<f64>, c: f64) -> Result<()> {
        let h = self.hidden(x)?;
        self.output_weights = Some(ridge_solve(h.view(), target, c)?);
        Ok(())
    }

    /// `Y = H·β`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let beta = self
            .output_weights
            .as_ref()
            .ok_or_else(|| Error::invalid("ELM layer has no trained output weights"))?;
        Ok(self.hidden(x)?.dot(beta))
    }
}

/// `β = (C·I + HᵀH)⁻¹ HᵀT` by Cholesky on the `L × L` Gram matrix.
///
/// Falls back to an SVD solve when the Gram matrix is not numerically
/// positive definite; with `C = 0` that gives the minimum-norm least-squares
/// solution.
pub fn ridge_solve(h: ArrayView2<f64>, t: ArrayView2<f64>, c: f64) -> Result<Array2<f64>> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("ridge weight must be >= 0, got {c}")));
    }
    if h.nrows() != t.nrows() {
        return Err(Error::DimensionMismatch {
            context: "ridge target rows",
            expected: h.nrows(),
            got: t.nrows(),
        });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge design matrix"));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge target"));
    }
    let mut gram = h.t().dot(&h);
    for i in 0..gram.nrows() {
        gram[[i, i]] += c;
    }
    let rhs = h.t().dot(&t);

    let beta = match linalg::cholesky(gram.view()) {
        Some(l) => {
            let mut beta = rhs.clone();
            linalg::cholesky_solve(&l, &mut beta);
            // Two rounds of iterative refinement tighten the normal-equation residual.
            for _ in 0..2 {
                let mut r = &rhs - &gram.dot(&beta);
                linalg::cholesky_solve(&l, &mut r);
                beta += &r;
            }
            beta
        }
        None => svd_solve(gram.view(), rhs.view())?,
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ridge solution is not finite".into()));
    }
    Ok(beta)
}

fn svd_solve(gram: ArrayView2<f64>, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
    let g = linalg::to_nalgebra(gram);
    let b = linalg::to_nalgebra(rhs);
    let svd = g.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * gram.nrows().max(1) as f64;
    let x = svd.solve(&b, eps).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(linalg::from_nalgebra(&x))
}
