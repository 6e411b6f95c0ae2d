//! Sample-matrix ingestion: sparse `label idx:val ...` text files (1-based
//! feature indices) and dense CSV, chosen by file extension.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use nsprox_core::applications::SparseSamples;
use nsprox_core::SampleMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}: no samples")]
    Empty(PathBuf),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Samples (one per row) with optional labels and feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: SampleMatrix,
    pub labels: Option<Vec<f64>>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.samples.n_samples()
    }

    pub fn dim(&self) -> usize {
        self.samples.dim()
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads at most `max_n` samples. Feature indices beyond `max_d` are dropped
/// and, when `max_d` is given, every sample has exactly `max_d` features.
pub fn read_sparse_dataset(path: &Path, max_n: Option<usize>, max_d: Option<usize>) -> Result<Dataset> {
    if is_csv(path) {
        return read_dense_csv(path, max_n, max_d);
    }
    let io_err = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let max_n = max_n.unwrap_or(usize::MAX);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut widest = 0;
    for (i, line) in reader.lines().enumerate() {
        if rows.len() >= max_n {
            break;
        }
        let line = line.map_err(io_err)?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |message: String| DatasetError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let mut tokens = content.split_whitespace();
        let label_token = tokens.next().unwrap_or_default();
        let label: f64 = label_token.parse().map_err(|_| parse_err(format!("invalid label {label_token:?}")))?;
        if !label.is_finite() {
            return Err(parse_err(format!("non-finite label {label_token:?}")));
        }
        let mut row = Vec::new();
        for token in tokens {
            if token.starts_with("qid:") {
                continue;
            }
            let (idx, val) =
                token.split_once(':').ok_or_else(|| parse_err(format!("expected index:value, got {token:?}")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err("feature indices are 1-based".to_string()));
            }
            let val: f64 = val.parse().map_err(|_| parse_err(format!("invalid value {val:?}")))?;
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite value {val}")));
            }
            if max_d.is_some_and(|d| idx > d) {
                continue;
            }
            widest = widest.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty(path.to_path_buf()));
    }
    let dim = max_d.unwrap_or(widest).max(1);
    let samples = SparseSamples::from_rows(dim, &rows).map_err(|e| DatasetError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(Dataset { samples: SampleMatrix::Sparse(samples), labels: Some(labels), feature_names: None })
}

/// Dense CSV, one sample per row. A header row is detected when its first
/// field is not numeric; a first column named `label` holds labels.
pub fn read_dense_csv(path: &Path, max_n: Option<usize>, max_d: Option<usize>) -> Result<Dataset> {
    let csv_err = |source| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut records = reader.records().enumerate().peekable();
    let mut names: Option<Vec<String>> = None;
    if let Some((_, Ok(first))) = records.peek() {
        if first.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            names = Some(first.iter().map(str::to_string).collect());
            records.next();
        }
    }
    let has_label = names.as_ref().is_some_and(|n| n.first().is_some_and(|f| f.eq_ignore_ascii_case("label")));
    let max_n = max_n.unwrap_or(usize::MAX);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in records.take(max_n) {
        let record = record.map_err(csv_err)?;
        let parse_err = |message: String| DatasetError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let mut fields = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| parse_err(format!("invalid number {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {field:?}")));
            }
            fields.push(v);
        }
        let features = if has_label {
            labels.push(fields[0]);
            &fields[1..]
        } else {
            &fields[..]
        };
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(parse_err(format!("expected {w} features, found {}", features.len())));
            }
            _ => {}
        }
        values.push(features.to_vec());
    }
    if values.is_empty() {
        return Err(DatasetError::Empty(path.to_path_buf()));
    }
    let raw_width = width.unwrap_or(0);
    let dim = max_d.unwrap_or(raw_width);
    let x = Array2::from_shape_fn((values.len(), dim), |(j, i)| values[j].get(i).copied().unwrap_or(0.0));
    let feature_names = names.map(|n| {
        let skip = usize::from(has_label);
        let mut f: Vec<String> = n.into_iter().skip(skip).take(dim).collect();
        while f.len() < dim {
            f.push(format!("x{}", f.len() + 1));
        }
        f
    });
    Ok(Dataset { samples: SampleMatrix::Dense(x), labels: has_label.then_some(labels), feature_names })
}

/// Writes the dataset densely with a header row; labels, when present, go in
/// a leading `label` column. Values use the shortest exact representation.
pub fn write_dense_csv(path: &Path, data: &Dataset) -> Result<()> {
    let io_err = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let x = data.samples.to_dense();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header: Vec<String> = Vec::new();
    if data.labels.is_some() {
        header.push("label".to_string());
    }
    match &data.feature_names {
        Some(names) => header.extend(names.iter().cloned()),
        None => header.extend((1..=x.ncols()).map(|i| format!("x{i}"))),
    }
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (j, row) in x.rows().into_iter().enumerate() {
        let mut fields: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some(labels) = &data.labels {
            fields.push(labels[j].to_string());
        }
        fields.extend(row.iter().map(|v| v.to_string()));
        writeln!(out, "{}", fields.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
