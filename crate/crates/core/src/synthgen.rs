//! Synthetic condition-monitoring data: `n` latent base signals observed by
//! `D` noisy sensors, with five fault types injected into fixed windows.
//!
//! Layout for `K = 14 000` (every window scales with `K / 14`):
//!
//! | rows            | segment                     |
//! |-----------------|-----------------------------|
//! | `0..7000`       | training (healthy)          |
//! | `7000..8000`    | threshold calibration       |
//! | `8000..9000`    | false-positive test         |
//! | `9000..14000`   | faults 1..5, 1000 rows each |

use std::fmt;
use std::ops::Range;
use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{self, RngStream, SensorMatrix};
use crate::error::{Error, Result};

/// Floor applied before the logarithmic reading.
pub const LOG_FLOOR: f64 = 1e-3;
/// Noise standard deviation as a fraction of each sensor's reading range.
pub const NOISE_FRACTION: f64 = 0.01;
/// Number of sensors hit by fault 5.
pub const FAULT5_SENSORS: usize = 10;

/// Stream id of the dataset draws for a given seed.
pub const DATASET_STREAM: u64 = 0xDA7A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reading {
    Identity,
    Log,
}

impl Reading {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Reading::Identity => v,
            Reading::Log => v.max(LOG_FLOOR).ln(),
        }
    }
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reading::Identity => "identity",
            Reading::Log => "log",
        })
    }
}

impl std::str::FromStr for Reading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(Reading::Identity),
            "log" => Ok(Reading::Log),
            other => Err(Error::invalid(format!("unknown reading function {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Train,
    Validation,
    FalsePositive,
    Fault(u8),
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Train => f.write_str("train"),
            Segment::Validation => f.write_str("val"),
            Segment::FalsePositive => f.write_str("fp"),
            Segment::Fault(i) => write!(f, "fault{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Sample count `K`; a positive multiple of 14.
    pub samples: usize,
    /// Sensor count `D`.
    pub sensors: usize,
    /// Number of base signals `n`.
    pub base_signals: usize,
    pub reading: Reading,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            samples: 14_000,
            sensors: 200,
            base_signals: 5,
            reading: Reading::Identity,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || !self.samples.is_multiple_of(14) {
            return Err(Error::invalid(format!(
                "sample count must be a positive multiple of 14, got {}",
                self.samples
            )));
        }
        if self.samples / 14 < 2 {
            return Err(Error::invalid("each segment needs at least two samples"));
        }
        if self.sensors == 0 || self.base_signals == 0 {
            return Err(Error::invalid("sensor and base-signal counts must be >= 1"));
        }
        Ok(())
    }

    /// Rows per window (1000 at the reference size).
    pub fn window(&self) -> usize {
        self.samples / 14
    }

    /// All eight segments with their row ranges, in row order.
    pub fn segments(&self) -> Vec<(Segment, Range<usize>)> {
        let w = self.window();
        let mut out = vec![
            (Segment::Train, 0..7 * w),
            (Segment::Validation, 7 * w..8 * w),
            (Segment::FalsePositive, 8 * w..9 * w),
        ];
        for f in 1..=5u8 {
            let start = (8 + f as usize) * w;
            out.push((Segment::Fault(f), start..start + w));
        }
        out
    }

    pub fn range(&self, segment: Segment) -> Range<usize> {
        self.segments()
            .into_iter()
            .find(|(s, _)| *s == segment)
            .map(|(_, r)| r)
            .unwrap_or(0..0)
    }

    pub fn generate(&self) -> Result<SyntheticDataset> {
        generate(self, &mut RngStream::new(self.seed, DATASET_STREAM))
    }
}

/// Every random draw, so a dataset can be audited and re-rendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: GeneratorSpec,
    pub rng_stream: u64,
    pub base_gain: Vec<f64>,
    pub base_offset: Vec<f64>,
    pub fault4_gain: f64,
    pub fault4_offset: f64,
    pub sensor_gain: Vec<f64>,
    /// Base signal read by each sensor (0-based).
    pub sensor_source: Vec<usize>,
    pub noise_std: Vec<f64>,
    /// Sensors drawn for fault 5 (0-based, with replacement).
    pub fault5_sensors: Vec<usize>,
    pub windows: Vec<SegmentWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentWindow {
    pub segment: String,
    pub start: usize,
    pub end: usize,
}

impl Provenance {
    /// Distinct fault-5 sensors, sorted.
    pub fn fault5_unique(&self) -> Vec<usize> {
        let mut v = self.fault5_sensors.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub x: SensorMatrix,
    /// Base signals after fault injection, `K × n`.
    pub base: Array2<f64>,
    pub provenance: Provenance,
}

/// Fixed splits of a dataset.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: SensorMatrix,
    pub val: SensorMatrix,
    pub fp_test: SensorMatrix,
    pub fault_tests: [SensorMatrix; 5],
}

pub fn generate(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<SyntheticDataset> {
    render(spec, rng, true)
}

/// Renders the dataset; with `inject_faults = false` the same draws are
/// consumed but no fault is applied.
pub(crate) fn render(
    spec: &GeneratorSpec,
    rng: &mut RngStream,
    inject_faults: bool,
) -> Result<SyntheticDataset> {
    spec.validate()?;
    let (k, d, n) = (spec.samples, spec.sensors, spec.base_signals);
    let w = spec.window();
    let rng_stream = rng.stream();

    let base_gain: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let fault4_gain: f64 = rng.sample(StandardNormal);
    let base_offset: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let fault4_offset: f64 = rng.random_range(0.0..3.0);

    let mut base = Array2::<f64>::zeros((k, n));
    for i in 0..n {
        for r in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            base[[r, i]] = base_gain[i] * z + base_offset[i];
        }
    }
    let fault4_signal: Vec<f64> = (0..w).map(|_| rng.sample(StandardNormal)).collect();

    if inject_faults {
        let f = |fault: u8| spec.range(Segment::Fault(fault));
        base.slice_mut(s![f(1), 0]).mapv_inplace(|v| v * 1.2);
        base.slice_mut(s![f(2), 0]).mapv_inplace(|v| v * 1.5);
        let shift = 0.2 * base_gain[0];
        base.slice_mut(s![f(3), 0]).mapv_inplace(|v| v + shift);
        for (dst, z) in base.slice_mut(s![f(4), 0]).iter_mut().zip(&fault4_signal) {
            *dst = fault4_gain * z + fault4_offset;
        }
    }

    let sensor_gain: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    let sensor_source: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();

    let mut x = clean_readings(&base, &sensor_gain, &sensor_source, spec.reading);
    let train = spec.range(Segment::Train);
    let mut noise_std = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.slice(s![train.clone(), j]);
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let sd = NOISE_FRACTION * (hi - lo);
        noise_std.push(sd);
        let noise = Normal::new(0.0, sd).map_err(|e| Error::Numerical(e.to_string()))?;
        for r in 0..k {
            x[[r, j]] += rng.sample(noise);
        }
    }

    let fault5_sensors: Vec<usize> = (0..FAULT5_SENSORS).map(|_| rng.random_range(0..d)).collect();
    let provenance = Provenance {
        spec: *spec,
        rng_stream,
        base_gain,
        base_offset,
        fault4_gain,
        fault4_offset,
        sensor_gain,
        sensor_source,
        noise_std,
        fault5_sensors,
        windows: spec
            .segments()
            .into_iter()
            .map(|(seg, r)| SegmentWindow {
                segment: seg.to_string(),
                start: r.start,
                end: r.end,
            })
            .collect(),
    };
    if inject_faults {
        let rows = spec.range(Segment::Fault(5));
        for j in provenance.fault5_unique() {
            x.slice_mut(s![rows.clone(), j]).mapv_inplace(|v| v * 1.2);
        }
    }

    Ok(SyntheticDataset {
        x: SensorMatrix::new(x)?,
        base,
        provenance,
    })
}

fn clean_readings(base: &Array2<f64>, gain: &[f64], source: &[usize], reading: Reading) -> Array2<f64> {
    Array2::from_shape_fn((base.nrows(), gain.len()), |(r, j)| {
        reading.apply(gain[j] * base[[r, source[j]]])
    })
}

impl SyntheticDataset {
    pub fn spec(&self) -> &GeneratorSpec {
        &self.provenance.spec
    }

    /// Noise-free sensor readings implied by the base signals (fault 5 is a
    /// sensor-level fault and is not included).
    pub fn clean_readings(&self) -> Array2<f64> {
        let p = &self.provenance;
        clean_readings(&self.base, &p.sensor_gain, &p.sensor_source, p.spec.reading)
    }

    /// Segment label of every row.
    pub fn segment_labels(&self) -> Vec<Segment> {
        let mut labels = vec![Segment::Train; self.x.nrows()];
        for (seg, range) in self.spec().segments() {
            for l in &mut labels[range] {
                *l = seg;
            }
        }
        labels
    }

    pub fn segment(&self, segment: Segment) -> Result<SensorMatrix> {
        let r = self.spec().range(segment);
        self.x.rows(r.start, r.end)
    }

    pub fn render_splits(&self) -> Result<Splits> {
        Ok(Splits {
            train: self.segment(Segment::Train)?,
            val: self.segment(Segment::Validation)?,
            fp_test: self.segment(Segment::FalsePositive)?,
            fault_tests: [
                self.segment(Segment::Fault(1))?,
                self.segment(Segment::Fault(2))?,
                self.segment(Segment::Fault(3))?,
                self.segment(Segment::Fault(4))?,
                self.segment(Segment::Fault(5))?,
            ],
        })
    }

    /// Writes `data.csv` and the `provenance.json` sidecar into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        data::write_csv(
            dir.join("data.csv"),
            &data::sensor_header(self.x.ncols()),
            self.x.view(),
        )?;
        std::fs::write(dir.join("provenance.json"), self.provenance.to_json()?)?;
        Ok(())
    }
}
