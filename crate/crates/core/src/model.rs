//! The three one-class pipelines (HELM, plain ELM, PCA + ELM) behind one
//! type, plus output-averaging ensembles and the persisted model document.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{NormalizationStats, RngStream, SensorMatrix};
use crate::detector::DetectorConfig;
use crate::elm::{Activation, ElmLayer};
use crate::error::{Error, Result};
use crate::helm::{HelmConfig, HelmModel};
use crate::pca::{PcaElmConfig, PcaElmModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    pub hidden: usize,
    pub c: f64,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            hidden: 400,
            c: 1e-5,
            ensemble_size: 5,
            seed: 0,
        }
    }
}

/// One-class ELM applied directly to standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassElm {
    pub norm: NormalizationStats,
    pub top: ElmLayer,
    pub config: ElmConfig,
}

impl OneClassElm {
    pub fn train(x_train: &SensorMatrix, config: &ElmConfig, rng: &mut RngStream) -> Result<Self> {
        if config.hidden == 0 || !(config.c >= 0.0) {
            return Err(Error::invalid("ELM needs hidden >= 1 and C >= 0"));
        }
        let norm = NormalizationStats::fit(x_train)?;
        let z = norm.apply(x_train)?;
        let mut top = ElmLayer::random(z.ncols(), config.hidden, Activation::Sigmoid, rng)?;
        let target = Array2::<f64>::ones((z.nrows(), 1));
        top.fit_ridge(z.view(), target.view(), config.c)?;
        Ok(OneClassElm {
            norm,
            top,
            config: config.clone(),
        })
    }

    pub fn run(&self, x: &SensorMatrix) -> Result<Array1<f64>> {
        let z = self.norm.apply(x)?;
        Ok(self.top.predict(z.view())?.column(0).to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Helm,
    Elm,
    PcaElm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Helm, ModelKind::Elm, ModelKind::PcaElm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Helm => "HELM",
            ModelKind::Elm => "ELM",
            ModelKind::PcaElm => "PCAELM",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            ModelKind::Helm => 0x4845_4c4d,
            ModelKind::Elm => 0x454c_4d00,
            ModelKind::PcaElm => 0x5043_4145,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "helm" => Ok(ModelKind::Helm),
            "elm" => Ok(ModelKind::Elm),
            "pca-elm" | "pcaelm" | "pca_elm" => Ok(ModelKind::PcaElm),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Helm(HelmConfig),
    Elm(ElmConfig),
    PcaElm(PcaElmConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Helm(_) => ModelKind::Helm,
            ModelConfig::Elm(_) => ModelKind::Elm,
            ModelConfig::PcaElm(_) => ModelKind::PcaElm,
        }
    }

    pub fn ensemble_size(&self) -> usize {
        match self {
            ModelConfig::Helm(c) => c.ensemble_size,
            ModelConfig::Elm(c) => c.ensemble_size,
            ModelConfig::PcaElm(c) => c.ensemble_size,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Helm(c) => c.seed,
            ModelConfig::Elm(c) => c.seed,
            ModelConfig::PcaElm(c) => c.seed,
        }
    }

    /// Random stream of ensemble member `member`.
    pub fn member_stream(&self, member: usize) -> RngStream {
        RngStream::new(self.seed(), member as u64).child(self.kind().stream_tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Helm(HelmModel),
    Elm(OneClassElm),
    PcaElm(PcaElmModel),
}

impl Model {
    pub fn train(x_train: &SensorMatrix, config: &ModelConfig, rng: &mut RngStream) -> Result<Self> {
        Ok(match config {
            ModelConfig::Helm(c) => Model::Helm(HelmModel::train(x_train, c, rng)?),
            ModelConfig::Elm(c) => Model::Elm(OneClassElm::train(x_train, c, rng)?),
            ModelConfig::PcaElm(c) => Model::PcaElm(PcaElmModel::train(x_train, c, rng)?),
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Helm(m) => m.input_dim(),
            Model::Elm(m) => m.norm.dim(),
            Model::PcaElm(m) => m.input_dim(),
        }
    }

    pub fn run(&self, x: &SensorMatrix) -> Result<Array1<f64>> {
        match self {
            Model::Helm(m) => m.run(x),
            Model::Elm(m) => m.run(x),
            Model::PcaElm(m) => m.run(x),
        }
    }
}

/// Independently trained members whose outputs are averaged before
/// thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub config: ModelConfig,
    pub members: Vec<Model>,
}

impl Ensemble {
    pub fn train(x_train: &SensorMatrix, config: &ModelConfig) -> Result<Self> {
        let size = config.ensemble_size();
        if size == 0 {
            return Err(Error::invalid("ensemble size must be >= 1"));
        }
        let members = (0..size)
            .map(|m| Model::train(x_train, config, &mut config.member_stream(m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            config: config.clone(),
            members,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    /// Mean member output per row.
    pub fn run(&self, x: &SensorMatrix) -> Result<Array1<f64>> {
        let mut acc = Array1::<f64>::zeros(x.nrows());
        for m in &self.members {
            acc += &m.run(x)?;
        }
        Ok(acc / self.members.len() as f64)
    }
}

pub const MODEL_FORMAT: &str = "helm-model";
pub const MODEL_VERSION: u32 = 1;

/// Versioned on-disk model: trained ensemble plus optional calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    /// Column names the model was trained on.
    pub columns: Vec<String>,
    pub ensemble: Ensemble,
    pub detector: Option<DetectorConfig>,
}

impl ModelDocument {
    pub fn new(columns: Vec<String>, ensemble: Ensemble) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            columns,
            ensemble,
            detector: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "not a model document: format {:?}",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                doc.version
            )));
        }
        if doc.ensemble.members.is_empty() {
            return Err(Error::Schema("model has no ensemble members".into()));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that `header` names the training columns, in order.
    pub fn check_columns(&self, header: &[String]) -> Result<()> {
        if header == self.columns.as_slice() {
            return Ok(());
        }
        let missing: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| !header.contains(c))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = header
            .iter()
            .filter(|c| !self.columns.contains(c))
            .map(String::as_str)
            .collect();
        Err(Error::Schema(format!(
            "columns do not match the model (missing: [{}], unexpected: [{}], expected {} columns in training order)",
            missing.join(", "),
            extra.join(", "),
            self.columns.len()
        )))
    }

    pub fn detector(&self) -> Result<&DetectorConfig> {
        self.detector.as_ref().ok_or(Error::Uncalibrated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sensor_header;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn data(k: usize, d: usize, seed: u64) -> SensorMatrix {
        let mut rng = RngStream::new(seed, 0);
        let latent = Array2::from_shape_simple_fn((k, 2), || rng.sample::<f64, _>(StandardNormal));
        let mix = Array2::from_shape_simple_fn((2, d), || rng.random_range(0.2..1.0));
        SensorMatrix::new(latent.dot(&mix) + 3.0).unwrap()
    }

    fn configs() -> Vec<ModelConfig> {
        vec![
            ModelConfig::Helm(HelmConfig {
                layer_sizes: vec![4],
                top_size: 12,
                ensemble_size: 3,
                seed: 11,
                ..Default::default()
            }),
            ModelConfig::Elm(ElmConfig {
                hidden: 15,
                ensemble_size: 2,
                seed: 11,
                ..Default::default()
            }),
            ModelConfig::PcaElm(PcaElmConfig {
                components: 3,
                hidden: 10,
                ensemble_size: 2,
                seed: 11,
                ..Default::default()
            }),
        ]
    }

    #[test]
    fn ensemble_members_are_distinct_and_replayable() {
        let x = data(200, 8, 1);
        for cfg in configs() {
            let a = Ensemble::train(&x, &cfg).unwrap();
            let b = Ensemble::train(&x, &cfg).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.members.len(), cfg.ensemble_size());
            assert_ne!(a.members[0], a.members[1]);
        }
    }

    #[test]
    fn ensemble_output_is_member_mean() {
        let x = data(150, 6, 2);
        let e = Ensemble::train(&x, &configs()[0]).unwrap();
        let y = e.run(&x).unwrap();
        let manual = e
            .members
            .iter()
            .map(|m| m.run(&x).unwrap())
            .fold(Array1::<f64>::zeros(150), |a, b| a + b)
            / 3.0;
        assert_eq!(y, manual);
    }

    #[test]
    fn document_round_trip_is_bitwise() {
        let x = data(120, 5, 3);
        for cfg in configs() {
            let mut doc = ModelDocument::new(sensor_header(5), Ensemble::train(&x, &cfg).unwrap());
            doc.detector = Some(DetectorConfig {
                gamma: 1.5,
                p: 99.5,
                threshold: 0.123456789012345,
            });
            let back = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.ensemble.run(&x).unwrap(), doc.ensemble.run(&x).unwrap());
        }
    }

    #[test]
    fn document_schema_checks() {
        let x = data(60, 3, 4);
        let doc = ModelDocument::new(sensor_header(3), Ensemble::train(&x, &configs()[1]).unwrap());
        assert!(matches!(doc.detector(), Err(Error::Uncalibrated)));
        assert!(doc.check_columns(&sensor_header(3)).is_ok());
        let err = doc
            .check_columns(&["s1".into(), "s2".into(), "temp".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("s3") && err.contains("temp"), "{err}");

        let mut json: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        json["version"] = serde_json::json!(99);
        assert!(matches!(
            ModelDocument::from_json(&json.to_string()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("HELM".parse::<ModelKind>().unwrap(), ModelKind::Helm);
        assert_eq!("pca-elm".parse::<ModelKind>().unwrap(), ModelKind::PcaElm);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
