//! Hierarchical ELM: sparse ELM autoencoders trained one after another,
//! each feeding `x_{i+1} = x_i·β_iᵀ` forward, topped by a one-class ELM
//! whose output is pulled towards 1 on healthy data.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{NormalizationStats, RngStream, SensorMatrix};
use crate::elm::{Activation, ElmLayer};
use crate::error::{Error, Result};
use crate::fista::{self, FistaParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelmConfig {
    /// Autoencoder widths `L_1..L_N`.
    pub layer_sizes: Vec<usize>,
    /// Width `L_{N+1}` of the one-class layer.
    pub top_size: usize,
    /// Autoencoder L1 weight.
    pub lambda: f64,
    /// Ridge weight of the one-class layer.
    pub c: f64,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for HelmConfig {
    fn default() -> Self {
        HelmConfig {
            layer_sizes: vec![20],
            top_size: 100,
            lambda: 1e-2,
            c: 1e-5,
            ensemble_size: 5,
            seed: 0,
        }
    }
}

impl HelmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() {
            return Err(Error::invalid("HELM needs at least one autoencoder layer"));
        }
        if self.layer_sizes.contains(&0) || self.top_size == 0 {
            return Err(Error::invalid("layer sizes must be >= 1"));
        }
        if !(self.lambda >= 0.0) || !(self.c >= 0.0) {
            return Err(Error::invalid("lambda and C must be >= 0"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelmModel {
    /// Autoencoder output weights; `ae_betas[i]` is `L_i × D_i`.
    pub ae_betas: Vec<Array2<f64>>,
    /// One-class layer with its random `(A, B)` and trained `β`.
    pub top: ElmLayer,
    pub norm: NormalizationStats,
    pub config: HelmConfig,
    /// Whether each autoencoder solve met its stopping criterion.
    #[serde(default)]
    pub ae_converged: Vec<bool>,
}

impl HelmModel {
    /// Trains on raw healthy data; normalization statistics are fitted here.
    pub fn train(x_train: &SensorMatrix, config: &HelmConfig, rng: &mut RngStream) -> Result<Self> {
        let norm = NormalizationStats::fit(x_train)?;
        Self::train_with_stats(x_train, norm, config, rng)
    }

    /// Trains with pre-fitted normalization statistics.
    pub fn train_with_stats(
        x_train: &SensorMatrix,
        norm: NormalizationStats,
        config: &HelmConfig,
        rng: &mut RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let mut x = norm.apply(x_train)?.into_inner();
        let mut ae_betas = Vec::with_capacity(config.layer_sizes.len());
        let mut ae_converged = Vec::with_capacity(config.layer_sizes.len());
        let solver = FistaParams::with_lambda(config.lambda);
        for &width in &config.layer_sizes {
            // (A_i, B_i) only shape the training features; they are not kept.
            let layer = ElmLayer::random(x.ncols(), width, Activation::Sigmoid, rng)?;
            let h = layer.hidden(x.view())?;
            let out = fista::fista_solve(h.view(), x.view(), &solver)?;
            x = x.dot(&out.beta.t());
            ae_betas.push(out.beta);
            ae_converged.push(out.converged);
        }
        let mut top = ElmLayer::random(x.ncols(), config.top_size, Activation::Sigmoid, rng)?;
        let target = Array2::<f64>::ones((x.nrows(), 1));
        top.fit_ridge(x.view(), target.view(), config.c)?;
        Ok(HelmModel {
            ae_betas,
            top,
            norm,
            config: config.clone(),
            ae_converged,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.norm.dim()
    }

    /// Learned features `x_{N+1}` of raw input rows (linear maps, no activation).
    pub fn features(&self, x: &SensorMatrix) -> Result<Array2<f64>> {
        let mut z = self.norm.apply(x)?.into_inner();
        for beta in &self.ae_betas {
            if z.ncols() != beta.ncols() {
                return Err(Error::DimensionMismatch {
                    context: "autoencoder chain",
                    expected: beta.ncols(),
                    got: z.ncols(),
                });
            }
            z = z.dot(&beta.t());
        }
        Ok(z)
    }

    /// One-class output `Y`, one value per input row.
    pub fn run(&self, x: &SensorMatrix) -> Result<Array1<f64>> {
        let z = self.features(x)?;
        let y = self.top.predict(z.view())?;
        Ok(y.column(0).to_owned())
    }
}
