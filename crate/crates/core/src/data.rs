//! Shared numeric containers: sensor matrices, input standardization,
//! deterministic random streams, and CSV ingestion.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix, rows are time samples and columns are sensors.
///
/// Always non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorMatrix(Array2<f64>);

impl SensorMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sensor matrix"));
        }
        Ok(SensorMatrix(data))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Copy of rows `start..end`.
    pub fn rows(&self, start: usize, end: usize) -> Result<SensorMatrix> {
        if start >= end || end > self.nrows() {
            return Err(Error::invalid(format!(
                "row range {start}..{end} outside 0..{}",
                self.nrows()
            )));
        }
        Ok(SensorMatrix(self.0.slice(ndarray::s![start..end, ..]).to_owned()))
    }
}

/// Per-column mean and standard deviation of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

/// Columns whose spread falls below this are treated as constant.
const CONSTANT_COLUMN_STD: f64 = 1e-12;

impl NormalizationStats {
    /// Population mean and standard deviation per column.
    /// Constant columns get `std = 1`.
    pub fn fit(x: &SensorMatrix) -> Result<Self> {
        let data = x.as_array();
        if data.nrows() < 2 {
            return Err(Error::invalid("normalization needs at least two samples"));
        }
        let k = data.nrows() as f64;
        let mean = data.sum_axis(Axis(0)) / k;
        let mut var = Array1::<f64>::zeros(data.ncols());
        for row in data.rows() {
            for ((v, &x), &m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var.mapv(|v| {
            let s = (v / k).sqrt();
            if s < CONSTANT_COLUMN_STD {
                1.0
            } else {
                s
            }
        });
        Ok(NormalizationStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &SensorMatrix) -> Result<SensorMatrix> {
        self.check_dim(x)?;
        let out = (x.as_array() - &self.mean) / &self.std;
        Ok(SensorMatrix(out))
    }

    /// Inverse of [`apply`](Self::apply).
    pub fn invert(&self, z: &SensorMatrix) -> Result<SensorMatrix> {
        self.check_dim(z)?;
        let out = z.as_array() * &self.std + &self.mean;
        Ok(SensorMatrix(out))
    }

    fn check_dim(&self, x: &SensorMatrix) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "normalization",
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }
}

/// Deterministic random stream identified by `(seed, stream)`.
///
/// Child streams are derived by mixing a label into the stream id, so every
/// component (dataset, ensemble member, repetition) owns an independent
/// sequence that replays bit-for-bit.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh stream with the same seed and a stream id derived from `label`.
    pub fn child(&self, label: u64) -> RngStream {
        RngStream::new(self.seed, splitmix64(self.stream ^ splitmix64(label)))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer, used to derive seeds and stream ids.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A CSV table: header names plus the numeric body.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub data: SensorMatrix,
}

/// Reads a headered CSV of decimal reals, one sample per row.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file)
}

pub fn read_csv_from<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ncols = header.len();
    let mut values = Vec::new();
    let mut nrows = 0;
    for (i, record) in rdr.records().enumerate() {
        // row 1 is the header
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != ncols {
            return Err(Error::Parse {
                row,
                column: record.len().min(ncols) + 1,
                message: format!("expected {ncols} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: "non-finite value".into(),
                });
            }
            values.push(v);
        }
        nrows += 1;
    }
    if nrows == 0 {
        return Err(Error::EmptyInput);
    }
    let data = Array2::from_shape_vec((nrows, ncols), values).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(Table {
        header,
        data: SensorMatrix::new(data)?,
    })
}

/// Writes a headered CSV. Values use the shortest representation that
/// parses back to the identical `f64`.
pub fn write_csv(path: impl AsRef<Path>, header: &[String], data: ArrayView2<f64>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv_to(std::io::BufWriter::new(file), header, data)
}

pub fn write_csv_to<W: std::io::Write>(writer: W, header: &[String], data: ArrayView2<f64>) -> Result<()> {
    if header.len() != data.ncols() {
        return Err(Error::DimensionMismatch {
            context: "csv header",
            expected: data.ncols(),
            got: header.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    let mut buf = Vec::with_capacity(data.ncols());
    for row in data.rows() {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        wtr.write_record(&buf)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Default header `s1, s2, ...` for unnamed sensor columns.
pub fn sensor_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("s{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn sm(a: Array2<f64>) -> SensorMatrix {
        SensorMatrix::new(a).unwrap()
    }

    #[test]
    fn two_point_column() {
        let s = NormalizationStats::fit(&sm(array![[0.0], [2.0]])).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.std[0], 1.0);
    }

    #[test]
    fn constant_column_guarded() {
        let s = NormalizationStats::fit(&sm(array![[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])).unwrap();
        assert_eq!(s.mean[0], 5.0);
        assert_eq!(s.std[0], 1.0);
    }

    #[test]
    fn matches_two_pass_oracle() {
        let mut rng = RngStream::new(3, 0);
        let x = Array2::from_shape_fn((3, 2), |_| rng.random::<f64>() * 10.0 - 5.0);
        let s = NormalizationStats::fit(&sm(x.clone())).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = x.column(j).to_vec();
            let m = col.iter().sum::<f64>() / 3.0;
            let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / 3.0;
            assert!((s.mean[j] - m).abs() < 1e-12);
            assert!((s.std[j] - v.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_short_inputs_rejected() {
        assert!(matches!(
            SensorMatrix::new(Array2::zeros((0, 3))),
            Err(Error::EmptyInput)
        ));
        assert!(NormalizationStats::fit(&sm(array![[1.0, 2.0]])).is_err());
        assert!(SensorMatrix::new(array![[f64::NAN]]).is_err());
    }

    #[test]
    fn mean_rows_map_to_zero() {
        let s = NormalizationStats {
            mean: array![1.0, -2.0],
            std: array![3.0, 0.5],
        };
        let x = sm(array![[1.0, -2.0], [1.0, -2.0]]);
        let z = s.apply(&x).unwrap();
        assert!(z.as_array().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_stats_are_identity() {
        let s = NormalizationStats {
            mean: array![0.0, 0.0],
            std: array![1.0, 1.0],
        };
        let x = sm(array![[1.5, -2.0], [0.25, 7.0]]);
        assert_eq!(s.apply(&x).unwrap(), x);
    }

    #[test]
    fn apply_then_invert_round_trips() {
        let mut rng = RngStream::new(11, 2);
        let x = sm(Array2::from_shape_fn((20, 4), |_| rng.random::<f64>() * 100.0));
        let s = NormalizationStats::fit(&x).unwrap();
        let back = s.invert(&s.apply(&x).unwrap()).unwrap();
        for (a, b) in back.as_array().iter().zip(x.as_array()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = NormalizationStats::fit(&sm(array![[0.0, 1.0], [2.0, 3.0]])).unwrap();
        let err = s.apply(&sm(array![[1.0]])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    fn draws(mut s: RngStream) -> Vec<u64> {
        (0..4).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn streams_replay_and_differ() {
        assert_eq!(draws(RngStream::new(9, 1)), draws(RngStream::new(9, 1)));
        assert_ne!(draws(RngStream::new(9, 1)), draws(RngStream::new(9, 2)));
        let root = RngStream::new(9, 0);
        assert_ne!(root.child(1).stream(), root.child(2).stream());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = array![[0.1, 1.0 / 3.0], [-2.5e-300, 1e17]];
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &sensor_header(2), x.view()).unwrap();
        let t = read_csv_from(buf.as_slice()).unwrap();
        assert_eq!(t.header, vec!["s1", "s2"]);
        assert_eq!(t.data.as_array(), &x);
    }

    #[test]
    fn csv_parse_error_reports_location() {
        let text = "a,b\n1,2\n3,x\n";
        match read_csv_from(text.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "a,b\n1\n";
        assert!(matches!(
            read_csv_from(ragged.as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
    }
}
