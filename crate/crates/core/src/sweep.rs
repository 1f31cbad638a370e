//! Hyperparameter grid sweeps over repeated synthetic experiments.
//!
//! Every repetition draws a fresh dataset, trains each model structure once,
//! and scores every threshold multiplier from the same outputs.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{splitmix64, SensorMatrix};
use crate::detector::{DetectorConfig, GAMMA_PRESETS};
use crate::error::{Error, Result};
use crate::helm::HelmConfig;
use crate::metrics::{flag_rate, Cell, ExperimentReport, RepResult, Timing, FAULT_COUNT};
use crate::model::{ElmConfig, Ensemble, ModelConfig, ModelKind};
use crate::pca::PcaElmConfig;
use crate::synthgen::{GeneratorSpec, Reading, Splits};

/// Axes of one model's grid. Axes a model does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGrid {
    pub model: ModelKind,
    pub gammas: Vec<f64>,
    pub l1: Vec<usize>,
    pub l2: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub cs: Vec<f64>,
    pub l_pca: Vec<usize>,
}

impl ModelGrid {
    /// Full hyperparameter grid.
    pub fn full(model: ModelKind) -> Self {
        ModelGrid {
            model,
            gammas: GAMMA_PRESETS.to_vec(),
            l1: vec![5, 10, 20, 40, 70, 100],
            l2: vec![20, 50, 100, 200, 400, 800],
            lambdas: vec![1e-5, 1e-3, 1e-2, 1e-1, 1.0],
            cs: vec![1e-5, 1e-3, 1e-2, 1e-1, 1.0],
            l_pca: vec![5, 10, 15],
        }
    }

    /// A single strong cell per model on the synthetic case,
    /// swept over the threshold presets.
    pub fn reference(model: ModelKind) -> Self {
        let (l1, l2, lambdas, l_pca) = match model {
            ModelKind::Helm => (vec![20], vec![100], vec![1e-2], vec![]),
            ModelKind::Elm => (vec![], vec![400], vec![], vec![]),
            ModelKind::PcaElm => (vec![], vec![100], vec![], vec![15]),
        };
        ModelGrid {
            model,
            gammas: GAMMA_PRESETS.to_vec(),
            l1,
            l2,
            lambdas,
            cs: vec![1e-5],
            l_pca,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = |name: &str, empty: bool| {
            if empty {
                Err(Error::invalid(format!(
                    "{} grid needs at least one {name} value",
                    self.model.name()
                )))
            } else {
                Ok(())
            }
        };
        need("gamma", self.gammas.is_empty())?;
        need("L2", self.l2.is_empty())?;
        need("C", self.cs.is_empty())?;
        match self.model {
            ModelKind::Helm => {
                need("L1", self.l1.is_empty())?;
                need("lambda", self.lambdas.is_empty())?;
            }
            ModelKind::PcaElm => need("L_PCA", self.l_pca.is_empty())?,
            ModelKind::Elm => {}
        }
        if self.gammas.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::invalid("gamma values must be > 0"));
        }
        Ok(())
    }

    /// Cells in lexicographic order over (gamma, L1, L2, lambda, C, L_PCA).
    pub fn cells(&self) -> Vec<Cell> {
        fn some<T: Copy>(v: &[T]) -> Vec<Option<T>> {
            v.iter().map(|&x| Some(x)).collect()
        }
        let (l1s, lambdas, l_pcas) = match self.model {
            ModelKind::Helm => (some(&self.l1), some(&self.lambdas), vec![None]),
            ModelKind::Elm => (vec![None], vec![None], vec![None]),
            ModelKind::PcaElm => (vec![None], vec![None], some(&self.l_pca)),
        };
        let mut out = Vec::new();
        for &gamma in &self.gammas {
            for &l1 in &l1s {
                for &l2 in &self.l2 {
                    for &lambda in &lambdas {
                        for &c in &self.cs {
                            for &l_pca in &l_pcas {
                                out.push(Cell {
                                    model: self.model,
                                    gamma,
                                    l1,
                                    l2,
                                    lambda,
                                    c,
                                    l_pca,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Model configuration of a cell's structure (everything except gamma).
pub fn model_config(cell: &Cell, ensemble_size: usize, seed: u64) -> ModelConfig {
    match cell.model {
        ModelKind::Helm => ModelConfig::Helm(HelmConfig {
            layer_sizes: vec![cell.l1.unwrap_or(20)],
            top_size: cell.l2,
            lambda: cell.lambda.unwrap_or(1e-2),
            c: cell.c,
            ensemble_size,
            seed,
        }),
        ModelKind::Elm => ModelConfig::Elm(ElmConfig {
            hidden: cell.l2,
            c: cell.c,
            ensemble_size,
            seed,
        }),
        ModelKind::PcaElm => ModelConfig::PcaElm(PcaElmConfig {
            components: cell.l_pca.unwrap_or(15),
            hidden: cell.l2,
            c: cell.c,
            ensemble_size,
            seed,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub base_signals: usize,
    pub reading: Reading,
    pub samples: usize,
    pub sensors: usize,
    pub reps: usize,
    pub seed: u64,
    pub percentile: f64,
    pub ensemble_size: usize,
    pub grids: Vec<ModelGrid>,
    /// Worker threads; `0` uses the global pool.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            base_signals: 5,
            reading: Reading::Identity,
            samples: 14_000,
            sensors: 200,
            reps: 20,
            seed: 0,
            percentile: crate::detector::DEFAULT_PERCENTILE,
            ensemble_size: 5,
            grids: ModelKind::ALL.iter().map(|&m| ModelGrid::reference(m)).collect(),
            jobs: 0,
        }
    }
}

/// Experiment seed of repetition `rep`: both the dataset and the models of
/// that repetition are drawn from it.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    splitmix64(seed ^ splitmix64(rep as u64 + 1))
}

impl BenchmarkConfig {
    pub fn cells(&self) -> Vec<Cell> {
        self.grids.iter().flat_map(|g| g.cells()).collect()
    }

    pub fn generator_spec(&self, rep: usize) -> GeneratorSpec {
        GeneratorSpec {
            samples: self.samples,
            sensors: self.sensors,
            base_signals: self.base_signals,
            reading: self.reading,
            seed: repetition_seed(self.seed, rep),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("need at least one repetition"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be >= 1"));
        }
        if self.grids.is_empty() {
            return Err(Error::invalid("no model grids"));
        }
        for g in &self.grids {
            g.validate()?;
        }
        self.generator_spec(0).validate()
    }
}

/// Ensemble outputs on every test split.
pub struct SplitOutputs {
    pub val: Vec<f64>,
    pub fp: Vec<f64>,
    pub faults: [Vec<f64>; FAULT_COUNT],
}

pub fn run_splits(ensemble: &Ensemble, splits: &Splits) -> Result<SplitOutputs> {
    let run = |x: &SensorMatrix| ensemble.run(x).map(|y| y.to_vec());
    Ok(SplitOutputs {
        val: run(&splits.val)?,
        fp: run(&splits.fp_test)?,
        faults: [
            run(&splits.fault_tests[0])?,
            run(&splits.fault_tests[1])?,
            run(&splits.fault_tests[2])?,
            run(&splits.fault_tests[3])?,
            run(&splits.fault_tests[4])?,
        ],
    })
}

/// Calibrates at `gamma` and scores the false-positive and fault splits.
pub fn score_outputs(
    out: &SplitOutputs,
    gamma: f64,
    p: f64,
) -> Result<(f64, [f64; FAULT_COUNT], [Option<f64>; FAULT_COUNT])> {
    let det = DetectorConfig::calibrate(&out.val, gamma, p)?;
    let labels = |y: &[f64]| -> Result<Vec<_>> { Ok(det.decide(y)?.into_iter().map(|d| d.label).collect()) };
    let fpr = flag_rate(&labels(&out.fp)?)?;
    let mut tpr = [0.0; FAULT_COUNT];
    let mut mag = [None; FAULT_COUNT];
    for f in 0..FAULT_COUNT {
        let d = det.decide(&out.faults[f])?;
        let hits: Vec<f64> = d
            .iter()
            .filter(|d| d.label.is_abnormal())
            .map(|d| d.magnification)
            .collect();
        tpr[f] = hits.len() as f64 / d.len() as f64;
        if !hits.is_empty() {
            mag[f] = Some(hits.iter().sum::<f64>() / hits.len() as f64);
        }
    }
    Ok((fpr, tpr, mag))
}

struct RepOutcome {
    results: Vec<RepResult>,
    timings: Vec<Timing>,
}

fn run_repetition(config: &BenchmarkConfig, cells: &[Cell], rep: usize) -> Result<RepOutcome> {
    let spec = config.generator_spec(rep);
    let dataset = spec.generate()?;
    let splits = dataset.render_splits()?;

    let mut results = Vec::new();
    let mut timings = Vec::new();
    // structures: first cell index of every distinct non-gamma configuration
    let mut structures: Vec<usize> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        if !structures.iter().any(|&s| cells[s].same_structure(c)) {
            structures.push(i);
        }
    }
    for (structure, &anchor) in structures.iter().enumerate() {
        let mc = model_config(&cells[anchor], config.ensemble_size, spec.seed);
        let start = Instant::now();
        let ensemble = Ensemble::train(&splits.train, &mc)?;
        timings.push(Timing {
            model: cells[anchor].model,
            structure,
            rep,
            seconds: start.elapsed().as_secs_f64(),
        });
        let outputs = run_splits(&ensemble, &splits)?;
        for (i, c) in cells.iter().enumerate() {
            if !c.same_structure(&cells[anchor]) {
                continue;
            }
            let (fpr, tpr, magnification) = score_outputs(&outputs, c.gamma, config.percentile)?;
            results.push(RepResult {
                cell: i,
                rep,
                fpr,
                tpr,
                magnification,
            });
        }
    }
    Ok(RepOutcome { results, timings })
}

/// Runs the sweep; `on_rep` sees each repetition's results as it finishes.
pub fn grid_sweep_with<F>(config: &BenchmarkConfig, on_rep: F) -> Result<ExperimentReport>
where
    F: Fn(usize, &[RepResult]) + Sync,
{
    config.validate()?;
    let cells = config.cells();
    let work = || -> Result<Vec<RepOutcome>> {
        (0..config.reps)
            .into_par_iter()
            .map(|rep| {
                let out = run_repetition(config, &cells, rep)?;
                on_rep(rep, &out.results);
                Ok(out)
            })
            .collect()
    };
    let outcomes = if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(work)?
    } else {
        work()?
    };

    let mut results = Vec::new();
    let mut timings = Vec::new();
    for o in outcomes {
        results.extend(o.results);
        timings.extend(o.timings);
    }
    results.sort_by_key(|r| (r.cell, r.rep));
    Ok(ExperimentReport {
        base_signals: config.base_signals,
        reading: config.reading,
        samples: config.samples,
        sensors: config.sensors,
        seed: config.seed,
        percentile: config.percentile,
        ensemble_size: config.ensemble_size,
        rep_seeds: (0..config.reps)
            .map(|r| repetition_seed(config.seed, r))
            .collect(),
        cells,
        results,
        timings,
    })
}

pub fn grid_sweep(config: &BenchmarkConfig) -> Result<ExperimentReport> {
    grid_sweep_with(config, |_, _| {})
}
