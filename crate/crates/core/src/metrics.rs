//! Detection rates per segment and their aggregation over repetitions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::detector::Label;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::synthgen::Reading;

pub const FAULT_COUNT: usize = 5;

/// Rates derived from the per-point true-positive and false-positive
/// proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
    pub tnr: f64,
    pub fnr: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Rates {
    pub fn from_tpr_fpr(tpr: f64, fpr: f64) -> Self {
        let precision = if tpr + fpr > 0.0 { tpr / (tpr + fpr) } else { 0.0 };
        Rates {
            tpr,
            fpr,
            tnr: 1.0 - fpr,
            fnr: 1.0 - tpr,
            accuracy: (tpr + 1.0 - fpr) / 2.0,
            precision,
            f1: 2.0 * tpr / (1.0 + fpr + tpr),
        }
    }
}

/// Fraction of labels flagged abnormal.
pub fn flag_rate(labels: &[Label]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let flagged = labels.iter().filter(|l| l.is_abnormal()).count();
    Ok(flagged as f64 / labels.len() as f64)
}

/// FPR from the healthy segment, TPR from the fault segment.
pub fn score_rates(healthy: &[Label], fault: &[Label]) -> Result<Rates> {
    Ok(Rates::from_tpr_fpr(flag_rate(fault)?, flag_rate(healthy)?))
}

/// One grid point. Axes that do not apply to a model are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: ModelKind,
    pub gamma: f64,
    pub l1: Option<usize>,
    pub l2: usize,
    pub lambda: Option<f64>,
    pub c: f64,
    pub l_pca: Option<usize>,
}

impl Cell {
    /// Same cell apart from the threshold multiplier.
    pub fn same_structure(&self, other: &Cell) -> bool {
        Cell { gamma: 0.0, ..*self } == Cell { gamma: 0.0, ..*other }
    }
}

/// Outcome of one cell on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub cell: usize,
    pub rep: usize,
    pub fpr: f64,
    pub tpr: [f64; FAULT_COUNT],
    /// Mean magnification over true positives; `None` without detections.
    pub magnification: [Option<f64>; FAULT_COUNT],
}

/// Wall-clock ensemble training time; kept apart from the rates so
/// reports stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub model: ModelKind,
    pub structure: usize,
    pub rep: usize,
    pub seconds: f64,
}

/// Means over repetitions of one cell on one fault.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSummary {
    pub fault: usize,
    pub rates: Rates,
    pub magnification: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub reps: usize,
    pub faults: Vec<FaultSummary>,
}

impl CellSummary {
    pub fn mean_accuracy(&self) -> f64 {
        self.faults.iter().map(|f| f.rates.accuracy).sum::<f64>() / self.faults.len() as f64
    }

    pub fn mean_tpr(&self) -> f64 {
        self.faults.iter().map(|f| f.rates.tpr).sum::<f64>() / self.faults.len() as f64
    }

    pub fn fpr(&self) -> f64 {
        self.faults[0].rates.fpr
    }
}

/// Point of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub model: ModelKind,
    pub gamma: f64,
    /// TPR averaged over faults and repetitions.
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub base_signals: usize,
    pub reading: Reading,
    pub samples: usize,
    pub sensors: usize,
    pub seed: u64,
    pub percentile: f64,
    pub ensemble_size: usize,
    /// Experiment seed of each repetition, by repetition index.
    pub rep_seeds: Vec<u64>,
    pub cells: Vec<Cell>,
    pub results: Vec<RepResult>,
    pub timings: Vec<Timing>,
}

impl ExperimentReport {
    pub fn reps(&self) -> usize {
        self.rep_seeds.len()
    }

    /// Union of two partial reports over the same grid; order-independent.
    pub fn merge(mut self, other: ExperimentReport) -> Result<ExperimentReport> {
        if self.cells != other.cells {
            return Err(Error::invalid("cannot merge reports over different grids"));
        }
        let mut results: BTreeMap<(usize, usize), RepResult> = BTreeMap::new();
        for r in self.results.drain(..).chain(other.results) {
            results.insert((r.cell, r.rep), r);
        }
        self.results = results.into_values().collect();
        let mut timings: BTreeMap<(ModelKind, usize, usize), Timing> = BTreeMap::new();
        for t in self.timings.drain(..).chain(other.timings) {
            timings.insert((t.model, t.structure, t.rep), t);
        }
        self.timings = timings.into_values().collect();
        let n = self.rep_seeds.len().max(other.rep_seeds.len());
        let mut seeds = vec![0; n];
        for (i, s) in self.rep_seeds.iter().enumerate() {
            seeds[i] = *s;
        }
        for (i, s) in other.rep_seeds.iter().enumerate() {
            seeds[i] = *s;
        }
        self.rep_seeds = seeds;
        Ok(self)
    }

    /// Results of one cell, ordered by repetition.
    pub fn cell_results(&self, cell: usize) -> Vec<&RepResult> {
        let mut v: Vec<&RepResult> = self.results.iter().filter(|r| r.cell == cell).collect();
        v.sort_by_key(|r| r.rep);
        v
    }

    /// Means over repetitions. TPR/FPR are averaged first; the other rates
    /// follow from the averaged pair.
    pub fn summarize(&self, cell: usize) -> Option<CellSummary> {
        let results = self.cell_results(cell);
        if results.is_empty() {
            return None;
        }
        let n = results.len() as f64;
        let fpr = results.iter().map(|r| r.fpr).sum::<f64>() / n;
        let faults = (0..FAULT_COUNT)
            .map(|f| {
                let tpr = results.iter().map(|r| r.tpr[f]).sum::<f64>() / n;
                let mags: Vec<f64> = results.iter().filter_map(|r| r.magnification[f]).collect();
                let magnification = if mags.is_empty() {
                    None
                } else {
                    Some(mags.iter().sum::<f64>() / mags.len() as f64)
                };
                FaultSummary {
                    fault: f + 1,
                    rates: Rates::from_tpr_fpr(tpr, fpr),
                    magnification,
                }
            })
            .collect();
        Some(CellSummary {
            cell,
            reps: results.len(),
            faults,
        })
    }

    pub fn summaries(&self) -> Vec<CellSummary> {
        (0..self.cells.len()).filter_map(|c| self.summarize(c)).collect()
    }

    /// Cell with the highest mean accuracy over the five faults; the first
    /// in grid order wins ties.
    pub fn best_average(&self, model: ModelKind) -> Option<CellSummary> {
        self.argmax(model, |s| s.mean_accuracy())
    }

    /// Cell with the highest accuracy on a single fault (1-based).
    pub fn best_for_fault(&self, model: ModelKind, fault: usize) -> Option<CellSummary> {
        self.argmax(model, |s| s.faults[fault - 1].rates.accuracy)
    }

    fn argmax(&self, model: ModelKind, key: impl Fn(&CellSummary) -> f64) -> Option<CellSummary> {
        let mut best: Option<(f64, CellSummary)> = None;
        for s in self.summaries() {
            if self.cells[s.cell].model != model {
                continue;
            }
            let k = key(&s);
            if best.as_ref().is_none_or(|(b, _)| k > *b) {
                best = Some((k, s));
            }
        }
        best.map(|(_, s)| s)
    }

    /// Threshold sweep for the non-threshold hyperparameters of `anchor`.
    pub fn sweep(&self, anchor: usize) -> Vec<SweepPoint> {
        let a = self.cells[anchor];
        let mut pts: Vec<SweepPoint> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.same_structure(&a))
            .filter_map(|(i, c)| {
                self.summarize(i).map(|s| SweepPoint {
                    model: c.model,
                    gamma: c.gamma,
                    tpr: s.mean_tpr(),
                    fpr: s.fpr(),
                })
            })
            .collect();
        pts.sort_by(|x, y| x.gamma.total_cmp(&y.gamma));
        pts
    }

    /// Sweeps anchored on each model's best-average cell.
    pub fn roc_points(&self) -> Vec<SweepPoint> {
        ModelKind::ALL
            .iter()
            .filter_map(|&m| self.best_average(m))
            .flat_map(|s| self.sweep(s.cell))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "model",
            "gamma",
            "l1",
            "l2",
            "lambda",
            "c",
            "l_pca",
            "n",
            "reading",
            "fault",
            "reps",
            "tpr",
            "fpr",
            "tnr",
            "fnr",
            "accuracy",
            "precision",
            "f1",
            "magnification",
        ])?;
        for s in self.summaries() {
            let c = &self.cells[s.cell];
            for f in &s.faults {
                let r = &f.rates;
                wtr.write_record([
                    c.model.name().to_string(),
                    c.gamma.to_string(),
                    opt(c.l1),
                    c.l2.to_string(),
                    opt(c.lambda),
                    c.c.to_string(),
                    opt(c.l_pca),
                    self.base_signals.to_string(),
                    self.reading.to_string(),
                    f.fault.to_string(),
                    s.reps.to_string(),
                    r.tpr.to_string(),
                    r.fpr.to_string(),
                    r.tnr.to_string(),
                    r.fnr.to_string(),
                    r.accuracy.to_string(),
                    r.precision.to_string(),
                    r.f1.to_string(),
                    opt(f.magnification),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_roc_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["model", "gamma", "tpr", "fpr"])?;
        for p in self.roc_points() {
            wtr.write_record([
                p.model.name().to_string(),
                p.gamma.to_string(),
                p.tpr.to_string(),
                p.fpr.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["model", "structure", "rep", "seconds"])?;
        for t in &self.timings {
            wtr.write_record([
                t.model.name().to_string(),
                t.structure.to_string(),
                t.rep.to_string(),
                t.seconds.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Mean training time of a model over all structures and repetitions.
    pub fn mean_train_seconds(&self, model: ModelKind) -> Option<f64> {
        let t: Vec<f64> = self
            .timings
            .iter()
            .filter(|t| t.model == model)
            .map(|t| t.seconds)
            .collect();
        (!t.is_empty()).then(|| t.iter().sum::<f64>() / t.len() as f64)
    }

    /// Table of each model's best-average cell in `Acc (TP/FP)` form,
    /// percentages rounded half-up.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "f = {}, n = {}, {} repetitions (best average accuracy per model)",
            self.reading,
            self.base_signals,
            self.reps()
        );
        let _ = write!(out, "{:<8} {:>5}", "model", "Acc^");
        for f in 1..=FAULT_COUNT {
            let _ = write!(out, " | {:>14} {:>6}", format!("fault {f}"), "Mag");
        }
        let _ = writeln!(out, " | hyperparameters");
        for model in ModelKind::ALL {
            let Some(s) = self.best_average(model) else {
                continue;
            };
            let c = &self.cells[s.cell];
            let _ = write!(out, "{:<8} {:>5}", model.name(), pct(s.mean_accuracy()));
            for f in &s.faults {
                let cell = format!(
                    "{} ({}/{})",
                    pct(f.rates.accuracy),
                    pct(f.rates.tpr),
                    pct(f.rates.fpr)
                );
                let mag = f.magnification.map_or("-".into(), |m| format!("{m:.3}"));
                let _ = write!(out, " | {cell:>14} {mag:>6}");
            }
            let _ = writeln!(out, " | {}", describe(c));
        }
        out
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pct(x: f64) -> i64 {
    (x * 100.0 + 0.5).floor() as i64
}

pub fn describe(c: &Cell) -> String {
    let mut parts = vec![format!("gamma={}", c.gamma)];
    if let Some(l1) = c.l1 {
        parts.push(format!("L1={l1}"));
    }
    parts.push(format!("L2={}", c.l2));
    if let Some(l) = c.lambda {
        parts.push(format!("lambda={l:e}"));
    }
    parts.push(format!("C={:e}", c.c));
    if let Some(p) = c.l_pca {
        parts.push(format!("L_PCA={p}"));
    }
    parts.join(" ")
}
