//! PCA feature map and the PCA + one-class ELM baseline.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{NormalizationStats, RngStream, SensorMatrix};
use crate::elm::{Activation, ElmLayer};
use crate::error::{Error, Result};
use crate::linalg;

/// Cumulative explained-variance ratio at which components stop being added.
pub const VARIANCE_CAP: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// `D × L` with orthonormal columns, sorted by decreasing variance.
    pub components: Array2<f64>,
    /// Variances along the kept components.
    pub explained_variance: Array1<f64>,
    /// Total variance of the training data (sum of all eigenvalues).
    pub total_variance: f64,
    pub mean: Array1<f64>,
}

impl PcaModel {
    /// Eigendecomposition of the sample covariance, keeping at most
    /// `max_components`, and no more than needed to reach 99% of the variance.
    pub fn fit(x: &SensorMatrix, max_components: usize) -> Result<Self> {
        if max_components < 1 {
            return Err(Error::invalid("number of principal components must be >= 1"));
        }
        let data = x.as_array();
        let (k, d) = data.dim();
        if k < 2 {
            return Err(Error::invalid("PCA needs at least two samples"));
        }
        let mean = data.mean_axis(Axis(0)).ok_or(Error::EmptyInput)?;
        let centered = data - &mean;
        let cov = centered.t().dot(&centered) / (k as f64 - 1.0);

        let eig = linalg::to_nalgebra(cov.view()).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total_variance: f64 = eigenvalues.iter().sum();

        let mut keep = max_components.min(k).min(d);
        if total_variance > 0.0 {
            let mut cumulative = 0.0;
            for (i, ev) in eigenvalues.iter().enumerate() {
                cumulative += ev;
                if cumulative / total_variance >= VARIANCE_CAP {
                    keep = keep.min(i + 1);
                    break;
                }
            }
        }

        let mut components = Array2::<f64>::zeros((d, keep));
        for (c, &src) in order.iter().take(keep).enumerate() {
            let v = eig.eigenvectors.column(src);
            // fix the sign so the largest-magnitude entry is positive
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for r in 0..d {
                components[[r, c]] = sign * v[r];
            }
        }
        Ok(PcaModel {
            components,
            explained_variance: Array1::from(eigenvalues[..keep].to_vec()),
            total_variance,
            mean,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn explained_variance_ratio(&self) -> Array1<f64> {
        if self.total_variance > 0.0 {
            &self.explained_variance / self.total_variance
        } else {
            Array1::zeros(self.n_components())
        }
    }

    /// Scores `(X − mean)·components`.
    pub fn transform(&self, x: &SensorMatrix) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "PCA input",
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok((x.as_array() - &self.mean).dot(&self.components))
    }

    /// Maps scores back to the input space.
    pub fn reconstruct(&self, scores: &Array2<f64>) -> Result<Array2<f64>> {
        if scores.ncols() != self.n_components() {
            return Err(Error::DimensionMismatch {
                context: "PCA scores",
                expected: self.n_components(),
                got: scores.ncols(),
            });
        }
        Ok(scores.dot(&self.components.t()) + &self.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaElmConfig {
    /// Requested number of principal components, before the variance cap.
    pub components: usize,
    pub hidden: usize,
    pub c: f64,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for PcaElmConfig {
    fn default() -> Self {
        PcaElmConfig {
            components: 15,
            hidden: 100,
            c: 1e-5,
            ensemble_size: 5,
            seed: 0,
        }
    }
}

/// Standardize, project on principal components, one-class ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaElmModel {
    pub norm: NormalizationStats,
    pub pca: PcaModel,
    pub top: ElmLayer,
    pub config: PcaElmConfig,
}

impl PcaElmModel {
    pub fn train(x_train: &SensorMatrix, config: &PcaElmConfig, rng: &mut RngStream) -> Result<Self> {
        if config.hidden == 0 || !(config.c >= 0.0) {
            return Err(Error::invalid("PCA-ELM needs hidden >= 1 and C >= 0"));
        }
        let norm = NormalizationStats::fit(x_train)?;
        let z = norm.apply(x_train)?;
        let pca = PcaModel::fit(&z, config.components)?;
        let scores = pca.transform(&z)?;
        let mut top = ElmLayer::random(scores.ncols(), config.hidden, Activation::Sigmoid, rng)?;
        let target = Array2::<f64>::ones((scores.nrows(), 1));
        top.fit_ridge(scores.view(), target.view(), config.c)?;
        Ok(PcaElmModel {
            norm,
            pca,
            top,
            config: config.clone(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn run(&self, x: &SensorMatrix) -> Result<Array1<f64>> {
        let z = self.norm.apply(x)?;
        let scores = self.pca.transform(&z)?;
        Ok(self.top.predict(scores.view())?.column(0).to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal(rows: usize, cols: usize, rng: &mut RngStream) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
    }

    #[test]
    fn line_data_clamps_to_one_component() {
        let mut rng = RngStream::new(5, 0);
        let t = normal(500, 1, &mut rng);
        let dir = ndarray::array![[1.0, 2.0, -0.5]];
        let x = t.dot(&dir) + normal(500, 3, &mut rng) * 1e-3;
        let m = PcaModel::fit(&SensorMatrix::new(x).unwrap(), 3).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!(m.explained_variance_ratio()[0] > 0.99);
    }

    #[test]
    fn isotropic_ratios_are_even() {
        let mut rng = RngStream::new(6, 0);
        let x = SensorMatrix::new(normal(10_000, 5, &mut rng)).unwrap();
        let m = PcaModel::fit(&x, 5).unwrap();
        assert_eq!(m.n_components(), 5);
        for r in m.explained_variance_ratio().iter() {
            assert!((r - 0.2).abs() < 0.05, "ratio {r}");
        }
    }

    #[test]
    fn components_orthonormal_and_sorted() {
        let mut rng = RngStream::new(7, 0);
        let scale = ndarray::Array1::from(vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.5]);
        let x = SensorMatrix::new(normal(400, 6, &mut rng) * &scale).unwrap();
        let m = PcaModel::fit(&x, 4).unwrap();
        let gram = m.components.t().dot(&m.components);
        let eye = Array2::<f64>::eye(m.n_components());
        assert!(linalg::fro((&gram - &eye).view()) < 1e-8);
        for w in m.explained_variance.to_vec().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn reconstruction_error_is_discarded_variance() {
        let mut rng = RngStream::new(8, 0);
        let scale = ndarray::Array1::from(vec![10.0, 6.0, 3.0, 0.8, 0.5]);
        let x = SensorMatrix::new(normal(2000, 5, &mut rng) * &scale).unwrap();
        let full = PcaModel::fit(&x, 5).unwrap();
        let m = PcaModel::fit(&x, 2).unwrap();
        assert_eq!(m.n_components(), 2);
        let recon = m.reconstruct(&m.transform(&x).unwrap()).unwrap();
        let err: f64 = (x.as_array() - &recon).iter().map(|v| v * v).sum::<f64>() / 1999.0;
        // eigenvalues 3..5 from an uncapped decomposition of the same data
        let cov_total = full.total_variance;
        let discarded = cov_total - m.explained_variance.sum();
        assert!((err - discarded).abs() <= 1e-6 * discarded);
    }

    #[test]
    fn transform_edge_cases() {
        let mut rng = RngStream::new(9, 0);
        let x = SensorMatrix::new(normal(300, 3, &mut rng) * &ndarray::array![3.0, 2.0, 1.0]).unwrap();
        let m = PcaModel::fit(&x, 3).unwrap();

        let at_mean = SensorMatrix::new(Array2::from_shape_fn((4, 3), |(_, j)| m.mean[j])).unwrap();
        assert!(m.transform(&at_mean).unwrap().iter().all(|v| v.abs() < 1e-14));

        let scores = m.transform(&x).unwrap();
        let centered = x.as_array() - &m.mean;
        for (s, c) in scores.rows().into_iter().zip(centered.rows()) {
            assert!(s.dot(&s) <= c.dot(&c) * (1.0 + 1e-12));
        }

        // idempotent projection
        let recon = SensorMatrix::new(m.reconstruct(&scores).unwrap()).unwrap();
        let again = m.transform(&recon).unwrap();
        assert!(linalg::fro((&again - &scores).view()) < 1e-10 * linalg::fro(scores.view()).max(1.0));

        assert!(m
            .transform(&SensorMatrix::new(Array2::zeros((2, 2))).unwrap())
            .is_err());
        assert!(PcaModel::fit(&x, 0).is_err());
    }

    #[test]
    fn full_rank_identity_components_center() {
        // axis-aligned variances give identity components up to sign
        let x = SensorMatrix::new(ndarray::array![[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]] + 2.0)
            .unwrap();
        let m = PcaModel::fit(&x, 2).unwrap();
        assert_eq!(m.n_components(), 2);
        let scores = m.transform(&x).unwrap();
        let centered = x.as_array() - 2.0;
        assert!(linalg::fro((&scores - &centered).view()) < 1e-12);
    }

    #[test]
    fn covariance_route_matches_svd() {
        let mut rng = RngStream::new(10, 0);
        let x = normal(50, 4, &mut rng) * &ndarray::array![4.0, 2.0, 1.0, 0.5];
        let m = PcaModel::fit(&SensorMatrix::new(x.clone()).unwrap(), 4).unwrap();
        let centered = &x - &x.mean_axis(Axis(0)).unwrap();
        let svd = linalg::to_nalgebra(centered.view()).svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().map(|s| s * s / 49.0).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in m.explained_variance.iter().zip(&sv) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }
}
