//! Unsupervised fault detection with hierarchical extreme learning machines.
//!
//! A HELM stacks sparse ELM autoencoders (output weights trained by an
//! accelerated proximal-gradient LASSO solver) under a one-class ELM trained
//! to output 1 on healthy data. The residual `|1 − Y|` is a health indicator;
//! a threshold calibrated on held-out healthy data turns it into detections.
//!
//! The crate also contains the baselines (plain one-class ELM, PCA + ELM),
//! a synthetic condition-monitoring generator with five fault types, and the
//! grid-sweep harness used to compare the models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod detector;
pub mod elm;
pub mod error;
pub mod fista;
pub mod helm;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pca;
pub mod sweep;
pub mod synthgen;

pub use data::{NormalizationStats, RngStream, SensorMatrix};
pub use detector::{Detection, DetectorConfig, Label};
pub use elm::{ridge_solve, Activation, ElmLayer};
pub use error::{Error, ErrorKind, Result};
pub use fista::{fista_solve, FistaParams};
pub use helm::{HelmConfig, HelmModel};
pub use metrics::{score_rates, ExperimentReport, Rates};
pub use model::{ElmConfig, Ensemble, Model, ModelConfig, ModelDocument, ModelKind};
pub use pca::{PcaElmConfig, PcaModel};
pub use sweep::{grid_sweep, BenchmarkConfig, ModelGrid};
pub use synthgen::{GeneratorSpec, Reading, SyntheticDataset};
