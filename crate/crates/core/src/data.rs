//! Synthetic streams, CSV ingestion, permutation and standardization.

use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::DataExample;
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }
}

/// Known dataset shapes `(name, T, d)`.
pub const KNOWN_SHAPES: [(&str, usize, usize); 6] = [
    ("toy", 10_000, 2),
    ("breast_cancer", 569, 30),
    ("pima", 768, 8),
    ("covertype", 581_012, 54),
    ("boston", 506, 13),
    ("california", 20_640, 9),
];

pub const COVERTYPE_DEFAULT_CAP: usize = 50_000;

fn normalize_name(name: &str) -> String {
    name.to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect()
}

/// Expected `(T, d)` for a recognised dataset name.
pub fn known_shape(name: &str) -> Option<(usize, usize)> {
    let key = normalize_name(name);
    let key = match key.as_str() {
        "breastcancer" | "wdbc" => "breastcancer",
        "pima" | "pimaindians" | "pimaindiansdiabetes" => "pima",
        "covertype" | "covtype" => "covertype",
        "boston" | "bostonhousing" => "boston",
        "california" | "californiahousing" => "california",
        other => other,
    };
    KNOWN_SHAPES
        .iter()
        .find(|(n, _, _)| normalize_name(n) == key)
        .map(|&(_, t, d)| (t, d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task: Task,
    pub name: String,
    pub note: String,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
        task: Task,
        name: impl Into<String>,
        note: impl Into<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyData);
        }
        if features.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: targets.len(),
            });
        }
        let d = features[0].len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) || !targets[i].is_finite() {
                return Err(Error::NonFinite(format!("row {i}")));
            }
        }
        if task == Task::Classification && targets.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Domain("classification targets must be +1 or -1".into()));
        }
        Ok(Self {
            features,
            targets,
            task,
            name: name.into(),
            note: note.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn examples(&self) -> Vec<DataExample> {
        self.features
            .iter()
            .zip(&self.targets)
            .map(|(x, &y)| DataExample::new(x.clone(), y))
            .collect()
    }

    /// Splits off the last `count` rows.
    pub fn split_tail(&self, count: usize) -> Result<(Dataset, Dataset)> {
        if count == 0 || count >= self.len() {
            return Err(Error::Config(format!(
                "holdout of {count} rows out of {}",
                self.len()
            )));
        }
        let cut = self.len() - count;
        let head = Dataset {
            features: self.features[..cut].to_vec(),
            targets: self.targets[..cut].to_vec(),
            ..self.clone()
        };
        let tail = Dataset {
            features: self.features[cut..].to_vec(),
            targets: self.targets[cut..].to_vec(),
            note: format!("{} (holdout)", self.note),
            ..self.clone()
        };
        Ok((head, tail))
    }
}

/// `y ~ Bernoulli(2/3)` mapped to `+1 / -1`;
/// `x | y=+1 ~ N((1,1), [[1,1],[1,3]])`, `x | y=-1 ~ N((-1,-1), I)`.
pub fn gen_toy_classification(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let mut rng = SeededStream::new(seed);
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let positive = rng.bernoulli(2.0 / 3.0);
        let z0 = rng.gaussian();
        let z1 = rng.gaussian();
        if positive {
            // Cholesky factor [[1, 0], [1, sqrt 2]].
            features.push(vec![1.0 + z0, 1.0 + z0 + sqrt2 * z1]);
            targets.push(1.0);
        } else {
            features.push(vec![-1.0 + z0, -1.0 + z1]);
            targets.push(-1.0);
        }
    }
    Dataset::new(
        features,
        targets,
        Task::Classification,
        "toy",
        format!("synthetic two-Gaussian mixture, seed {seed}"),
    )
}

/// `x ~ N(0, I)`, `y = theta_star^T x + eps`, `eps ~ N(0, noise_sd^2)`.
pub fn gen_iid_regression(n: usize, theta_star: &[f64], noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || theta_star.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::Domain(format!("noise_sd = {noise_sd}")));
    }
    let mut rng = SeededStream::new(seed);
    let d = theta_star.len();
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.gaussian_vec(d);
        let signal: f64 = x.iter().zip(theta_star).map(|(a, b)| a * b).sum();
        let eps = rng.gaussian();
        targets.push(signal + noise_sd * eps);
        features.push(x);
    }
    Dataset::new(
        features,
        targets,
        Task::Regression,
        "iid_regression",
        format!("synthetic linear-Gaussian regression, seed {seed}"),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub label: LabelColumn,
    /// Labels equal to this string map to `+1`, all others to `-1`.
    /// `None` loads the label as a regression target.
    pub positive_label: Option<String>,
    pub delimiter: u8,
    pub has_header: bool,
    pub name: String,
}

impl CsvSchema {
    pub fn new(label: LabelColumn, name: impl Into<String>) -> Self {
        Self {
            label,
            positive_label: None,
            delimiter: b',',
            has_header: true,
            name: name.into(),
        }
    }
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    let s = cell.trim();
    if s.is_empty() || s == "?" || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Err(Error::Parse {
            row,
            column,
            message: "missing value".into(),
        });
    }
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

/// Loads a delimited file. Row and column numbers in errors are 1-based and
/// count the header line.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .from_path(path)?;
    let label_idx = match &schema.label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !schema.has_header {
                return Err(Error::Config(format!(
                    "label column {name:?} given by name but the file has no header"
                )));
            }
            reader
                .headers()?
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("label column {name:?} not found")))?
        }
    };
    let first_row = if schema.has_header { 2 } else { 1 };
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = first_row + i;
        if label_idx >= record.len() {
            return Err(Error::Parse {
                row,
                column: label_idx + 1,
                message: "label column missing".into(),
            });
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(Error::Parse {
                    row,
                    column: record.len(),
                    message: format!("expected {w} fields"),
                });
            }
        }
        width = Some(record.len());
        let mut x = Vec::with_capacity(record.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            x.push(parse_cell(cell, row, j + 1)?);
        }
        let raw = record[label_idx].trim();
        let y = match &schema.positive_label {
            Some(pos) => {
                if raw.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: label_idx + 1,
                        message: "missing value".into(),
                    });
                }
                if raw == pos.trim() || matches!((raw.parse::<f64>(), pos.trim().parse::<f64>()), (Ok(a), Ok(b)) if a == b) {
                    1.0
                } else {
                    -1.0
                }
            }
            None => parse_cell(raw, row, label_idx + 1)?,
        };
        features.push(x);
        targets.push(y);
    }
    if features.is_empty() {
        return Err(Error::EmptyData);
    }
    let task = if schema.positive_label.is_some() {
        Task::Classification
    } else {
        Task::Regression
    };
    let ds = Dataset::new(
        features,
        targets,
        task,
        schema.name.clone(),
        format!("loaded from {}", path.display()),
    )?;
    if let Some((t, d)) = known_shape(&schema.name) {
        if ds.len() != t || ds.dim() != d {
            return Err(Error::Domain(format!(
                "{} has shape {}x{}, expected {t}x{d}",
                schema.name,
                ds.len(),
                ds.dim()
            )));
        }
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamConfig {
    pub seed: u64,
    pub permute: bool,
    pub standardize: bool,
    pub subsample: Option<usize>,
}

/// Per-feature `(mean, sd)` with the population sd.
pub fn feature_stats(features: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = features.len() as f64;
    let d = features.first().map_or(0, Vec::len);
    (0..d)
        .map(|j| {
            let mean = features.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// Permute, keep the first `subsample` rows, then z-score each feature with
/// statistics of the retained rows. Constant features are only centred.
/// Cover Type without an explicit cap is cut to `COVERTYPE_DEFAULT_CAP`.
pub fn prepare_stream(ds: &Dataset, cfg: &StreamConfig) -> Result<Dataset> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    if cfg.permute {
        SeededStream::new(cfg.seed).shuffle(&mut order);
    }
    let cap = match cfg.subsample {
        Some(0) => return Err(Error::Config("subsample must be positive".into())),
        Some(k) if k > ds.len() => {
            return Err(Error::Config(format!(
                "subsample {k} exceeds the {} available rows",
                ds.len()
            )))
        }
        Some(k) => k,
        None if known_shape(&ds.name).map(|s| s.0) == Some(581_012) => {
            COVERTYPE_DEFAULT_CAP.min(ds.len())
        }
        None => ds.len(),
    };
    order.truncate(cap);
    let mut features: Vec<Vec<f64>> = order.iter().map(|&i| ds.features[i].clone()).collect();
    let targets: Vec<f64> = order.iter().map(|&i| ds.targets[i]).collect();
    if cfg.standardize {
        let stats = feature_stats(&features);
        for row in &mut features {
            for (v, &(mean, sd)) in row.iter_mut().zip(&stats) {
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
    }
    Dataset::new(features, targets, ds.task, ds.name.clone(), ds.note.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_reproducible_and_labelled() {
        let a = gen_toy_classification(200, 9).unwrap();
        let b = gen_toy_classification(200, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
        assert!(a.targets.iter().all(|&y| y == 1.0 || y == -1.0));
        assert_ne!(a, gen_toy_classification(200, 10).unwrap());
    }

    #[test]
    fn toy_label_rate() {
        let ds = gen_toy_classification(10_000, 1).unwrap();
        let p = ds.targets.iter().filter(|&&y| y == 1.0).count() as f64 / 1e4;
        assert!((p - 2.0 / 3.0).abs() < 3.0 * (2.0f64 / 9.0 / 1e4).sqrt());
    }

    #[test]
    fn regression_noiseless() {
        let th = [1.0, -2.0, 0.5];
        let ds = gen_iid_regression(50, &th, 0.0, 3).unwrap();
        for (x, y) in ds.features.iter().zip(&ds.targets) {
            let s: f64 = x.iter().zip(&th).map(|(a, b)| a * b).sum();
            assert_eq!(*y, s);
        }
        assert!(gen_iid_regression(5, &th, -1.0, 3).is_err());
    }

    #[test]
    fn csv_small_file() {
        let f = write_tmp("a,b,label,c\n1.0,2,yes,3\n4,5,no,6\n");
        let mut schema = CsvSchema::new(LabelColumn::Name("label".into()), "tiny");
        schema.positive_label = Some("yes".into());
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 3));
        assert_eq!(ds.features[1], vec![4.0, 5.0, 6.0]);
        assert_eq!(ds.targets, vec![1.0, -1.0]);
        assert_eq!(ds.task, Task::Classification);
    }

    #[test]
    fn csv_errors_carry_position() {
        let f = write_tmp("a,y\n1,2\nx,3\n");
        let schema = CsvSchema::new(LabelColumn::Index(1), "tiny");
        match load_csv(f.path(), &schema) {
            Err(Error::Parse { row: 3, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let f = write_tmp("a,y\n1,2\n,3\n");
        assert!(matches!(
            load_csv(f.path(), &schema),
            Err(Error::Parse { row: 3, column: 1, .. })
        ));
    }

    #[test]
    fn csv_known_shape_checked() {
        let f = write_tmp("a,y\n1,2\n3,4\n");
        let schema = CsvSchema::new(LabelColumn::Index(1), "pima");
        assert!(matches!(load_csv(f.path(), &schema), Err(Error::Domain(_))));
        assert_eq!(known_shape("Breast Cancer"), Some((569, 30)));
        assert_eq!(known_shape("Pima Indians"), Some((768, 8)));
    }

    #[test]
    fn prepare_identity_and_standardize() {
        let ds = gen_toy_classification(500, 2).unwrap();
        assert_eq!(prepare_stream(&ds, &StreamConfig::default()).unwrap(), ds);
        let st = prepare_stream(
            &ds,
            &StreamConfig {
                standardize: true,
                ..Default::default()
            },
        )
        .unwrap();
        for (mean, sd) in feature_stats(&st.features) {
            assert!(mean.abs() <= 1e-10);
            assert!((sd - 1.0).abs() <= 1e-10);
        }
        assert_eq!(st.targets, ds.targets);
    }

    #[test]
    fn permutation_is_bijection() {
        let ds = gen_toy_classification(300, 4).unwrap();
        let p = prepare_stream(
            &ds,
            &StreamConfig {
                seed: 7,
                permute: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(p.features, ds.features);
        let key = |d: &Dataset| {
            let mut rows: Vec<(Vec<u64>, u64)> = d
                .features
                .iter()
                .zip(&d.targets)
                .map(|(x, y)| (x.iter().map(|v| v.to_bits()).collect(), y.to_bits()))
                .collect();
            rows.sort();
            rows
        };
        assert_eq!(key(&p), key(&ds));
    }

    #[test]
    fn constant_feature_centred() {
        let ds = Dataset::new(
            vec![vec![2.0, 1.0], vec![2.0, 3.0]],
            vec![1.0, -1.0],
            Task::Classification,
            "c",
            "",
        )
        .unwrap();
        let st = prepare_stream(
            &ds,
            &StreamConfig {
                standardize: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(st.features[0], vec![0.0, -1.0]);
    }
}
