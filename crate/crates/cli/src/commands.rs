use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use helm::data::{read_csv, SensorMatrix};
use helm::detector::write_detections;
use helm::sweep::{grid_sweep_with, repetition_seed, BenchmarkConfig, ModelGrid};
use helm::{
    DetectorConfig, ElmConfig, Ensemble, Error, GeneratorSpec, HelmConfig, ModelConfig, ModelDocument,
    ModelKind, PcaElmConfig, Result,
};

use crate::config;
use crate::{BenchmarkArgs, CalibrateArgs, DetectArgs, GenerateArgs, TrainArgs};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Parses `start:end` against a table of `nrows` rows.
pub fn parse_rows(spec: Option<&str>, nrows: usize) -> Result<(usize, usize)> {
    let Some(spec) = spec else {
        return Ok((0, nrows));
    };
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("row range {spec:?} is not of the form start:end")))?;
    let bound = |s: &str, default: usize| -> Result<usize> {
        let s = s.trim();
        if s.is_empty() {
            Ok(default)
        } else {
            s.parse().map_err(|_| usage(format!("bad row bound {s:?}")))
        }
    };
    let (start, end) = (bound(a, 0)?, bound(b, nrows)?);
    if start >= end || end > nrows {
        return Err(usage(format!(
            "row range {start}:{end} is empty or exceeds {nrows} rows"
        )));
    }
    Ok((start, end))
}

fn load(path: &Path, rows: Option<&str>) -> Result<(Vec<String>, SensorMatrix)> {
    let table = read_csv(path)?;
    let (start, end) = parse_rows(rows, table.data.nrows())?;
    let data = if (start, end) == (0, table.data.nrows()) {
        table.data
    } else {
        table.data.rows(start, end)?
    };
    Ok((table.header, data))
}

fn check_n(n: usize, allow_any: bool) -> Result<()> {
    if allow_any || n == 5 || n == 10 {
        Ok(())
    } else {
        Err(usage(format!(
            "--n must be 5 or 10 (got {n}); pass --allow-any-n to override"
        )))
    }
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(usage(format!(
            "{} exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn model_path(model: &Option<PathBuf>, out: &Path) -> PathBuf {
    model.clone().unwrap_or_else(|| out.join("model.json"))
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    check_n(a.n, a.allow_any_n)?;
    let spec = GeneratorSpec {
        samples: a.samples,
        sensors: a.sensors,
        base_signals: a.n,
        reading: a.reading,
        seed: a.seed,
    };
    spec.validate()?;
    refuse_overwrite(&[a.out.join("data.csv"), a.out.join("provenance.json")], a.force)?;
    let ds = spec.generate()?;
    ds.export(&a.out)?;
    config::echo(&a.out, "generate", a)?;
    println!(
        "wrote {} ({} x {}) and provenance.json",
        a.out.join("data.csv").display(),
        ds.x.nrows(),
        ds.x.ncols()
    );
    for (segment, range) in spec.segments() {
        println!("  {:<7} rows {}:{}", segment.to_string(), range.start, range.end);
    }
    Ok(())
}

pub fn model_config(a: &TrainArgs) -> ModelConfig {
    match a.kind {
        ModelKind::Helm => ModelConfig::Helm(HelmConfig {
            layer_sizes: a.l1.clone(),
            top_size: a.l2.unwrap_or(100),
            lambda: a.lambda,
            c: a.c,
            ensemble_size: a.ensemble,
            seed: a.seed,
        }),
        ModelKind::Elm => ModelConfig::Elm(ElmConfig {
            hidden: a.l2.unwrap_or(400),
            c: a.c,
            ensemble_size: a.ensemble,
            seed: a.seed,
        }),
        ModelKind::PcaElm => ModelConfig::PcaElm(PcaElmConfig {
            components: a.l_pca,
            hidden: a.l2.unwrap_or(100),
            c: a.c,
            ensemble_size: a.ensemble,
            seed: a.seed,
        }),
    }
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (header, x) = load(&a.data, a.rows.as_deref())?;
    let cfg = model_config(a);
    let ensemble = Ensemble::train(&x, &cfg)?;
    let path = model_path(&a.model, &a.out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    ModelDocument::new(header, ensemble).save(&path)?;
    config::echo(&a.out, "train", a)?;
    println!(
        "trained {} ({} members) on {} x {}; wrote {}",
        a.kind.name(),
        a.ensemble,
        x.nrows(),
        x.ncols(),
        path.display()
    );
    Ok(())
}

pub fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let path = model_path(&a.model, &a.out);
    let mut doc = ModelDocument::load(&path)?;
    let (header, x) = load(&a.data, a.rows.as_deref())?;
    doc.check_columns(&header)?;
    let y = doc.ensemble.run(&x)?.to_vec();
    let det = DetectorConfig::calibrate(&y, a.gamma, a.p)?;
    doc.detector = Some(det);
    doc.save(&path)?;
    config::echo(&a.out, "calibrate", a)?;
    println!(
        "threshold {} (gamma {}, p {}) from {} rows; updated {}",
        det.threshold,
        det.gamma,
        det.p,
        y.len(),
        path.display()
    );
    Ok(())
}

pub fn detect(a: &DetectArgs) -> Result<()> {
    let doc = ModelDocument::load(model_path(&a.model, &a.out))?;
    let det = *doc.detector()?;
    let (header, x) = load(&a.data, a.rows.as_deref())?;
    doc.check_columns(&header)?;
    let y = doc.ensemble.run(&x)?.to_vec();
    let detections = det.decide(&y)?;
    let out = a
        .detections
        .clone()
        .unwrap_or_else(|| a.out.join("detections.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_detections(File::create(&out)?, &detections)?;
    config::echo(&a.out, "detect", a)?;
    let flagged = detections.iter().filter(|d| d.label.is_abnormal()).count();
    let mean_mag = detections.iter().map(|d| d.magnification).sum::<f64>() / detections.len() as f64;
    println!(
        "flagged {flagged} of {} rows ({:.2}%), mean magnification {mean_mag:.4}; wrote {}",
        detections.len(),
        100.0 * flagged as f64 / detections.len() as f64,
        out.display()
    );
    Ok(())
}

pub fn benchmark_config(a: &BenchmarkArgs) -> Result<BenchmarkConfig> {
    check_n(a.n, a.allow_any_n)?;
    let mut models = a.models.clone();
    models.sort();
    models.dedup();
    if models.is_empty() {
        return Err(usage("no models selected"));
    }
    let grids = models
        .iter()
        .map(|&m| {
            let mut g = match a.grid.as_str() {
                "reference" => ModelGrid::reference(m),
                "full" => ModelGrid::full(m),
                other => return Err(usage(format!("unknown grid {other:?} (reference or full)"))),
            };
            if let Some(v) = &a.gammas {
                g.gammas = v.clone();
            }
            if m == ModelKind::Helm {
                if let Some(v) = &a.l1 {
                    g.l1 = v.clone();
                }
                if let Some(v) = &a.lambdas {
                    g.lambdas = v.clone();
                }
            }
            if m == ModelKind::PcaElm {
                if let Some(v) = &a.l_pca {
                    g.l_pca = v.clone();
                }
            }
            if let Some(v) = &a.l2 {
                g.l2 = v.clone();
            }
            if let Some(v) = &a.cs {
                g.cs = v.clone();
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkConfig {
        base_signals: a.n,
        reading: a.reading,
        samples: a.samples,
        sensors: a.sensors,
        reps: a.reps,
        seed: a.seed,
        percentile: a.p,
        ensemble_size: a.ensemble,
        grids,
        jobs: a.jobs,
    })
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let cfg = benchmark_config(a)?;
    let out = &a.out;
    let names = [
        "report.csv",
        "roc.csv",
        "timing.csv",
        "report.json",
        "seeds.csv",
        "reps.jsonl",
    ];
    refuse_overwrite(&names.map(|n| out.join(n)), a.force)?;
    std::fs::create_dir_all(out)?;
    config::echo(out, "benchmark", a)?;

    let mut seeds = BufWriter::new(File::create(out.join("seeds.csv"))?);
    writeln!(seeds, "rep,seed")?;
    for r in 0..cfg.reps {
        writeln!(seeds, "{r},{}", repetition_seed(cfg.seed, r))?;
    }
    seeds.flush()?;

    let partial = Mutex::new(BufWriter::new(File::create(out.join("reps.jsonl"))?));
    let report = grid_sweep_with(&cfg, |rep, results| {
        let mut w = partial.lock().unwrap_or_else(|e| e.into_inner());
        for r in results {
            if let Ok(line) = serde_json::to_string(r) {
                let _ = writeln!(w, "{line}");
            }
        }
        let _ = w.flush();
        eprintln!("repetition {rep} done");
    })?;

    report.write_csv(File::create(out.join("report.csv"))?)?;
    report.write_roc_csv(File::create(out.join("roc.csv"))?)?;
    report.write_timing_csv(File::create(out.join("timing.csv"))?)?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;

    print!("{}", report.render_table());
    for m in ModelKind::ALL {
        if let Some(s) = report.mean_train_seconds(m) {
            println!("{} mean training time {s:.3} s", m.name());
        }
    }
    println!(
        "wrote report.csv, roc.csv, timing.csv, report.json to {}",
        out.display()
    );
    Ok(())
}
