//! Univariate time-series ingestion and sliding training windows.
//!
//! Datasets are CSV files with a header row; the value column (and an
//! optional date column) are named explicitly because the source files come
//! from heterogeneous origins with different headers. Rows are used in file
//! order (no re-sorting), and blank or unparseable value cells are hard
//! errors rather than imputed, so a malformed file cannot silently alter a
//! benchmark run.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("column {column:?} not found in {path}")]
    MissingColumn { column: String, path: String },
    #[error("row {row}: cannot parse {cell:?} as a finite value")]
    UnparseableValue { row: usize, cell: String },
    #[error("series {name:?} has {len} rows; at least 2 are required")]
    EmptySeries { name: String, len: usize },
    #[error("row {row}: timestamp {cell:?} is not an ISO-8601 date")]
    BadTimestamp { row: usize, cell: String },
    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotonicTimestamps { row: usize },
    #[error("series of length {len} is too short for window {window_len}")]
    SeriesTooShort { len: usize, window_len: usize },
    #[error("dataset {name:?} not present in manifest {path}")]
    UnknownDataset { name: String, path: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("parsing manifest {path}: {source}")]
    Manifest {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// A calendar date parsed from `YYYY-MM-DD`; kept only for ordering checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct IsoDate(i32, u8, u8);

fn parse_iso_date(s: &str) -> Option<IsoDate> {
    // Accept a date or a date-time prefix ("2016-01-08 00:00:00").
    let date_part = s.split([' ', 'T']).next()?;
    let mut it = date_part.split('-');
    let y: i32 = it.next()?.parse().ok()?;
    let m: u8 = it.next()?.parse().ok()?;
    let d: u8 = it.next()?.parse().ok()?;
    if it.next().is_some() || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some(IsoDate(y, m, d))
}

/// An ordered sequence of finite real observations, optionally timestamped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnivariateSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
}

impl UnivariateSeries {
    /// Validates the invariants: finite values, length ≥ 2, and strictly
    /// increasing timestamps matching the value count when present.
    pub fn new(
        name: impl Into<String>,
        values: Vec<f64>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self, SeriesError> {
        let name = name.into();
        if values.len() < 2 {
            return Err(SeriesError::EmptySeries {
                name,
                len: values.len(),
            });
        }
        for (row, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SeriesError::UnparseableValue {
                    row,
                    cell: v.to_string(),
                });
            }
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.len() {
                return Err(SeriesError::EmptySeries {
                    name,
                    len: ts.len().min(values.len()),
                });
            }
            let mut prev: Option<IsoDate> = None;
            for (row, raw) in ts.iter().enumerate() {
                let date = parse_iso_date(raw).ok_or_else(|| SeriesError::BadTimestamp {
                    row,
                    cell: raw.clone(),
                })?;
                if let Some(p) = prev {
                    if date <= p {
                        return Err(SeriesError::NonMonotonicTimestamps { row });
                    }
                }
                prev = Some(date);
            }
        }
        Ok(Self {
            name,
            values,
            timestamps,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Loads a series from a headered CSV file, in file row order.
pub fn load_csv(
    path: impl AsRef<Path>,
    value_column: &str,
    date_column: Option<&str>,
) -> Result<UnivariateSeries, SeriesError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| SeriesError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|source| SeriesError::Csv {
            path: display.clone(),
            source,
        })?
        .clone();
    let col_index = |name: &str| -> Result<usize, SeriesError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SeriesError::MissingColumn {
                column: name.to_string(),
                path: display.clone(),
            })
    };
    let value_idx = col_index(value_column)?;
    let date_idx = date_column.map(col_index).transpose()?;

    let mut values = Vec::new();
    let mut timestamps = date_idx.map(|_| Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| SeriesError::Csv {
            path: display.clone(),
            source,
        })?;
        let cell = record.get(value_idx).unwrap_or("").trim();
        let parsed: f64 = cell
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| SeriesError::UnparseableValue {
                row,
                cell: cell.to_string(),
            })?;
        values.push(parsed);
        if let (Some(ts), Some(idx)) = (timestamps.as_mut(), date_idx) {
            ts.push(record.get(idx).unwrap_or("").trim().to_string());
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    UnivariateSeries::new(name, values, timestamps)
}

/// A read-only view of one training window plus its forecast target index.
///
/// The window spans `[cursor − window_len, cursor)`; the target at `cursor`
/// is never part of the window.
#[derive(Debug, Clone, Copy)]
pub struct SlidingWindowView<'a> {
    source: &'a UnivariateSeries,
    window_len: usize,
    pub cursor: usize,
}

impl<'a> SlidingWindowView<'a> {
    pub fn window(&self) -> &'a [f64] {
        &self.source.values[self.cursor - self.window_len..self.cursor]
    }

    /// The ground truth the window is asked to forecast.
    pub fn target(&self) -> f64 {
        self.source.values[self.cursor]
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }
}

/// Yields one view per forecastable index in `[window_len, len)`.
pub fn windows(
    series: &UnivariateSeries,
    window_len: usize,
) -> Result<impl Iterator<Item = SlidingWindowView<'_>>, SeriesError> {
    if window_len == 0 || series.len() <= window_len {
        return Err(SeriesError::SeriesTooShort {
            len: series.len(),
            window_len,
        });
    }
    Ok(
        (window_len..series.len()).map(move |cursor| SlidingWindowView {
            source: series,
            window_len,
            cursor,
        }),
    )
}

/// One dataset entry of the manifest: where the file lives and which
/// columns to read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub path: String,
    pub value_column: String,
    #[serde(default)]
    pub date_column: Option<String>,
}

/// Maps dataset names to files; relative paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    base_dir: PathBuf,
    path: String,
    entries: BTreeMap<String, DatasetEntry>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SeriesError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let raw = std::fs::read_to_string(path).map_err(|source| SeriesError::Io {
            path: display.clone(),
            source,
        })?;
        let entries: BTreeMap<String, DatasetEntry> =
            serde_json::from_str(&raw).map_err(|source| SeriesError::Manifest {
                path: display.clone(),
                source,
            })?;
        Ok(Self {
            base_dir: path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .to_path_buf(),
            path: display,
            entries,
        })
    }

    pub fn dataset_names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn entry(&self, name: &str) -> Result<&DatasetEntry, SeriesError> {
        self.entries
            .get(name)
            .ok_or_else(|| SeriesError::UnknownDataset {
                name: name.to_string(),
                path: self.path.clone(),
            })
    }

    /// Loads a dataset by manifest key; the series takes the manifest key
    /// as its name.
    pub fn load_dataset(&self, name: &str) -> Result<UnivariateSeries, SeriesError> {
        let entry = self.entry(name)?;
        let path = self.base_dir.join(&entry.path);
        let mut series = load_csv(&path, &entry.value_column, entry.date_column.as_deref())?;
        series.name = name.to_string();
        Ok(series)
    }
}
