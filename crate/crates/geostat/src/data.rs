//! CSV ingestion, seeded train/val/test splits, synthetic Gaussian random
//! fields, and results output.
//!
//! All randomness flows through `ChaCha8Rng` seeded explicitly, so every
//! operation here is bit-reproducible across platforms. CSV files are UTF-8,
//! comma-separated, with a mandatory header row and `.` decimal separators.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{Point2, PointSet};
use crate::variogram::VariogramSpec;

/// Column names a dataset was read with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub x: String,
    pub y: String,
    pub value: String,
    pub features: Vec<String>,
}

/// A named feature column.
#[derive(Debug, Clone)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Point observations with optional feature columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub coords: Vec<Point2>,
    pub target: Vec<f64>,
    pub features: Vec<FeatureColumn>,
    pub source: String,
    pub columns: ColumnMap,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// The coordinates and target as a `PointSet`.
    pub fn point_set(&self) -> Result<PointSet> {
        PointSet::new(self.coords.clone(), self.target.clone())
    }

    /// Feature rows for the given indices: declared features first, then the
    /// two coordinates.
    pub fn feature_rows_with_coords(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices
            .iter()
            .map(|&i| {
                let mut row: Vec<f64> = self.features.iter().map(|f| f.values[i]).collect();
                row.push(self.coords[i].x);
                row.push(self.coords[i].y);
                row
            })
            .collect()
    }
}

/// The header row of a CSV file.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.headers()?.iter().map(|h| h.to_string()).collect())
}

/// Reads point observations from a headered CSV file.
///
/// Every declared column must exist; any missing or non-numeric declared
/// cell aborts the read with its 1-based data row number.
pub fn read_points_csv(
    path: &Path,
    x_col: &str,
    y_col: &str,
    value_col: &str,
    feature_cols: &[String],
) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let xi = find(x_col)?;
    let yi = find(y_col)?;
    let vi = find(value_col)?;
    let fis: Vec<usize> = feature_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut coords = Vec::new();
    let mut target = Vec::new();
    let mut features: Vec<FeatureColumn> = feature_cols
        .iter()
        .map(|name| FeatureColumn {
            name: name.clone(),
            values: Vec::new(),
        })
        .collect();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        let parse = |col_idx: usize, col_name: &str| -> Result<f64> {
            let cell = record.get(col_idx).unwrap_or("");
            let trimmed = cell.trim();
            if trimmed.is_empty() {
                return Err(Error::BadCell {
                    row,
                    column: col_name.to_string(),
                    reason: "empty cell".into(),
                });
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::BadCell {
                row,
                column: col_name.to_string(),
                reason: format!("not a number: {trimmed:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row,
                    column: col_name.to_string(),
                    reason: "non-finite value".into(),
                });
            }
            Ok(v)
        };
        let x = parse(xi, x_col)?;
        let y = parse(yi, y_col)?;
        coords.push(Point2::new(x, y)?);
        target.push(parse(vi, value_col)?);
        for (f, &fi) in features.iter_mut().zip(&fis) {
            let name = f.name.clone();
            f.values.push(parse(fi, &name)?);
        }
    }
    if coords.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no data rows in {}",
            path.display()
        )));
    }

    Ok(Dataset {
        coords,
        target,
        features,
        source: path.display().to_string(),
        columns: ColumnMap {
            x: x_col.to_string(),
            y: y_col.to_string(),
            value: value_col.to_string(),
            features: feature_cols.to_vec(),
        },
    })
}

/// Disjoint train/validation/test row indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Seeded 8:1:1 split: shuffle, then take the first 80% as train, the next
/// 10% as validation, and the remainder as test.
pub fn split_811(n: usize, seed: u64) -> Result<Split> {
    if n < 3 {
        return Err(Error::TooFewRows { got: n, need: 3 });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (0.8 * n as f64).floor() as usize;
    let n_val = (0.1 * n as f64).floor() as usize;
    Ok(Split {
        train: indices[..n_train].to_vec(),
        val: indices[n_train..n_train + n_val].to_vec(),
        test: indices[n_train + n_val..].to_vec(),
        seed,
    })
}

/// Axis-aligned sampling domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn unit() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn diameter(&self) -> f64 {
        let dx = self.x_max - self.x_min;
        let dy = self.y_max - self.y_min;
        (dx * dx + dy * dy).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::InvalidParameter(format!(
                "degenerate bounding box [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }
}

/// A generated Gaussian-field dataset plus factorization diagnostics.
#[derive(Debug, Clone)]
pub struct SynthField {
    pub dataset: Dataset,
    /// The covariance matrix needed a `1e-10` diagonal jitter to factor.
    pub jittered: bool,
}

/// Samples a zero-mean Gaussian random field at uniform random locations.
///
/// The covariance is `C(h) = sill - gamma(h)` off the diagonal with the full
/// sill on the diagonal (nugget included). Dense Cholesky limits `n` to
/// 2000; a non-PD matrix gets one `1e-10` jitter retry before failing.
pub fn synth_gaussian_field(
    n: usize,
    spec: &VariogramSpec,
    domain: BoundingBox,
    seed: u64,
) -> Result<SynthField> {
    if n == 0 || n > 2000 {
        return Err(Error::InvalidParameter(format!(
            "n must lie in [1, 2000], got {n}"
        )));
    }
    domain.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Point2> = (0..n)
        .map(|_| {
            let x = rng.gen_range(domain.x_min..domain.x_max);
            let y = rng.gen_range(domain.y_min..domain.y_max);
            Point2 { x, y }
        })
        .collect();

    let sill = spec.sill();
    let (values, jittered) = if sill == 0.0 {
        (vec![0.0; n], false)
    } else {
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            cov[(i, i)] = sill;
            for j in (i + 1)..n {
                let c = sill - spec.evaluate(coords[i].distance(&coords[j]));
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let (chol, jittered) = match Cholesky::new(cov.clone()) {
            Some(c) => (c, false),
            None => {
                let mut jcov = cov;
                for i in 0..n {
                    jcov[(i, i)] += 1e-10;
                }
                match Cholesky::new(jcov) {
                    Some(c) => (c, true),
                    None => return Err(Error::CovarianceNotPd),
                }
            }
        };
        let z = DVector::from_iterator(n, (0..n).map(|_| standard_normal(&mut rng)));
        let values = chol.l() * z;
        (values.iter().copied().collect(), jittered)
    };

    Ok(SynthField {
        dataset: Dataset {
            coords,
            target: values,
            features: Vec::new(),
            source: format!("synthetic(seed={seed})"),
            columns: ColumnMap {
                x: "x".into(),
                y: "y".into(),
                value: "value".into(),
                features: Vec::new(),
            },
        },
        jittered,
    })
}

/// Box-Muller standard normal draw from a uniform generator.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One output cell.
#[derive(Debug, Clone)]
pub enum Field {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

/// Round-trip-exact float formatting: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Float(v) => fmt_f64(*v),
            Field::Int(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

/// Writes a results CSV with the given header; floats are serialized with 17
/// significant digits so a re-read reproduces them bit-exactly.
pub fn write_results_csv(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(Field::render).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::sample_variance;
    use crate::variogram::{
        empirical_variogram_adaptive, AdaptiveBinning, VariogramKind,
    };

    fn tmp_dir() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn read_well_formed_file() {
        let dir = tmp_dir();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "x,y,value\n0,0,1.5\n1,0,2.5\n0,1,3.5\n").unwrap();
        let ds = read_points_csv(&path, "x", "y", "value", &[]).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.target, vec![1.5, 2.5, 3.5]);
        assert_eq!(ds.columns.value, "value");
    }

    #[test]
    fn missing_column_reported() {
        let dir = tmp_dir();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "x,y\n0,0\n").unwrap();
        let err = read_points_csv(&path, "x", "y", "value", &[]).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "value"));
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let dir = tmp_dir();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "x,y,value\n0,0,1.0\n1,0,oops\n2,0,3.0\n").unwrap();
        let err = read_points_csv(&path, "x", "y", "value", &[]).unwrap_err();
        match err {
            Error::BadCell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "value");
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn missing_file_reported() {
        let err = read_points_csv(Path::new("/nonexistent/nope.csv"), "x", "y", "v", &[])
            .unwrap_err();
        assert!(matches!(err, Error::FileNotFound(_)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = split_811(100, 9).unwrap();
        assert_eq!(s.train.len(), 80);
        assert_eq!(s.val.len(), 10);
        assert_eq!(s.test.len(), 10);

        let s = split_811(10, 9).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));

        let a = split_811(57, 123).unwrap();
        let b = split_811(57, 123).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);

        assert!(matches!(split_811(2, 0), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn split_partitions_all_rows() {
        for n in [3usize, 4, 10, 11, 99, 1000, 9999] {
            let s = split_811(n, n as u64).unwrap();
            let mut all: Vec<usize> = s
                .train
                .iter()
                .chain(&s.val)
                .chain(&s.test)
                .copied()
                .collect();
            all.sort_unstable();
            let expected: Vec<usize> = (0..n).collect();
            assert_eq!(all, expected, "n={n}");
            if n >= 10 {
                assert!(!s.train.is_empty() && !s.val.is_empty() && !s.test.is_empty());
            }
        }
    }

    #[test]
    fn synth_deterministic_and_degenerate_cases() {
        let spec = VariogramSpec::new(VariogramKind::Exponential, 0.1, 1.0, 0.3).unwrap();
        let a = synth_gaussian_field(50, &spec, BoundingBox::unit(), 5).unwrap();
        let b = synth_gaussian_field(50, &spec, BoundingBox::unit(), 5).unwrap();
        assert_eq!(a.dataset.target, b.dataset.target);
        assert_eq!(a.dataset.coords.len(), 50);

        let zero = VariogramSpec::new(VariogramKind::Exponential, 0.0, 0.0, 1.0).unwrap();
        let z = synth_gaussian_field(10, &zero, BoundingBox::unit(), 1).unwrap();
        assert!(z.dataset.target.iter().all(|&v| v == 0.0));

        assert!(synth_gaussian_field(5000, &spec, BoundingBox::unit(), 1).is_err());
    }

    #[test]
    fn synth_nugget_only_variance_tracks_nugget() {
        let theta0 = 0.8;
        let spec = VariogramSpec::new(VariogramKind::Exponential, theta0, 0.0, 1.0).unwrap();
        let mut ratio = 0.0;
        for seed in 0..10 {
            let f = synth_gaussian_field(1000, &spec, BoundingBox::unit(), seed).unwrap();
            ratio += sample_variance(&f.dataset.target) / theta0;
        }
        ratio /= 10.0;
        assert!((ratio - 1.0).abs() < 0.15, "variance ratio {ratio}");
    }

    #[test]
    fn synth_empirical_variogram_tracks_model() {
        let spec = VariogramSpec::new(VariogramKind::Exponential, 0.1, 1.0, 0.1).unwrap();
        let mut mean_rel_dev = 0.0;
        for seed in 0..10 {
            let f = synth_gaussian_field(1000, &spec, BoundingBox::unit(), 100 + seed).unwrap();
            let ps = f.dataset.point_set().unwrap();
            let emp =
                empirical_variogram_adaptive(&ps, AdaptiveBinning::Silverman, 0.1, 50).unwrap();
            let dev: f64 = emp
                .lag_centers()
                .iter()
                .zip(emp.gamma_hat())
                .map(|(&h, &g)| ((g - spec.evaluate(h)) / spec.evaluate(h)).abs())
                .sum::<f64>()
                / emp.len() as f64;
            mean_rel_dev += dev;
        }
        mean_rel_dev /= 10.0;
        assert!(mean_rel_dev <= 0.25, "mean relative deviation {mean_rel_dev}");
    }

    #[test]
    fn results_csv_roundtrip_is_bit_exact() {
        let dir = tmp_dir();
        let path = dir.path().join("out.csv");
        let values = [0.1, -1.0 / 3.0, 1e-300, 123456.789012345678, f64::MIN_POSITIVE];
        let rows: Vec<Vec<Field>> = values.iter().map(|&v| vec![Field::Float(v)]).collect();
        write_results_csv(&path, &["v"], &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("v"));
        for (&v, line) in values.iter().zip(lines) {
            let parsed: f64 = line.parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "line {line}");
        }
    }

    #[test]
    fn empty_rows_write_header_only() {
        let dir = tmp_dir();
        let path = dir.path().join("empty.csv");
        write_results_csv(&path, &["a", "b"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err =
            write_results_csv(Path::new("/nonexistent-dir/x/y.csv"), &["a"], &[]).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
