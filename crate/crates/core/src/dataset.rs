//! Tabular datasets and their CSV codec.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FeatureDecl, FeatureKind, FeatureSpace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub values: Vec<S>,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    pub space: FeatureSpace,
    pub rows: Vec<Instance<S>>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(space: FeatureSpace, rows: Vec<Instance<S>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            space.check_vector(&row.values).map_err(|e| Error::Data {
                row: i + 1,
                message: e.to_string(),
            })?;
            if let Some(l) = row.label {
                if l >= space.n_classes() {
                    return Err(Error::Data {
                        row: i + 1,
                        message: format!("label index {l} out of range"),
                    });
                }
            }
        }
        Ok(Dataset { space, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.label.is_some())
    }

    pub fn labels(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        self.rows.iter().map(|r| r.label)
    }

    /// Observed (min, max) per feature; `None` for features with no rows.
    pub fn ranges(&self) -> Vec<Option<(S, S)>> {
        (0..self.space.n_features())
            .map(|f| {
                self.rows.iter().map(|r| r.values[f]).fold(None, |acc, v| match acc {
                    None => Some((v, v)),
                    Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
                })
            })
            .collect()
    }

    /// Copy without labels.
    pub fn unlabeled(&self) -> Self {
        Dataset {
            space: self.space.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| Instance {
                    values: r.values.clone(),
                    label: None,
                })
                .collect(),
        }
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            space: self.space.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Writes the dataset as CSV; the label column is appended when any row
    /// is labeled.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let labeled = self.rows.iter().any(|r| r.label.is_some());
        let mut header: Vec<&str> = self.space.features().iter().map(|f| f.name.as_str()).collect();
        if labeled {
            header.push(label_column);
        }
        out.write_record(&header).map_err(|e| Error::parse("csv output", e))?;
        for row in &self.rows {
            let mut record: Vec<String> = row
                .values
                .iter()
                .zip(self.space.features())
                .map(|(&v, f)| match f.kind {
                    FeatureKind::Numeric => v.to_string(),
                    FeatureKind::Nominal => f.categories[v.to_usize().unwrap_or(0)].clone(),
                })
                .collect();
            if labeled {
                record.push(row.label.map(|l| self.space.classes()[l].clone()).unwrap_or_default());
            }
            out.write_record(&record).map_err(|e| Error::parse("csv output", e))?;
        }
        out.flush().map_err(|e| Error::io("csv output", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), label_column)
    }
}

/// Parses CSV text against a known feature space.
///
/// Columns may appear in any order but every header entry must be a declared
/// feature or the label column. Labels are class names; a bare class index is
/// accepted when it is not itself a class name.
pub fn read_dataset<S: Scalar, R: Read>(
    reader: R,
    space: &FeatureSpace,
    label: Option<&str>,
) -> Result<Dataset<S>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv.headers().map_err(|e| Error::parse("csv header", e))?.clone();
    let mut column_of = vec![None; space.n_features()];
    let mut label_col = None;
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if Some(name) == label {
            label_col = Some(col);
        } else if let Some(f) = space.feature_index(name) {
            if column_of[f].replace(col).is_some() {
                return Err(Error::parse("csv header", format!("duplicate column {name:?}")));
            }
        } else {
            return Err(Error::parse("csv header", format!("unknown column {name:?}")));
        }
    }
    if let Some(missing) = column_of.iter().position(Option::is_none) {
        return Err(Error::parse(
            "csv header",
            format!("missing column {:?}", space.feature(missing).name),
        ));
    }
    if let (Some(name), None) = (label, label_col) {
        return Err(Error::parse("csv header", format!("missing label column {name:?}")));
    }

    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Data {
            row,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Data {
                row,
                message: format!("{} fields, expected {}", record.len(), header.len()),
            });
        }
        let mut values = Vec::with_capacity(space.n_features());
        for (f, decl) in space.features().iter().enumerate() {
            let token = record[column_of[f].expect("checked above")].trim();
            values.push(parse_value(token, decl).map_err(|message| Error::Data { row, message })?);
        }
        let label = match label_col {
            None => None,
            Some(col) => {
                let token = record[col].trim();
                let class = space
                    .class_index(token)
                    .or_else(|| token.parse::<usize>().ok().filter(|&c| c < space.n_classes()))
                    .ok_or_else(|| Error::Data {
                        row,
                        message: format!("unknown class label {token:?}"),
                    })?;
                Some(class)
            }
        };
        rows.push(Instance { values, label });
    }
    Ok(Dataset {
        space: space.clone(),
        rows,
    })
}

fn parse_value<S: Scalar>(token: &str, decl: &FeatureDecl) -> std::result::Result<S, String> {
    match decl.kind {
        FeatureKind::Numeric => token
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(S::from_f64)
            .ok_or_else(|| format!("non-numeric token {token:?} in column {:?}", decl.name)),
        FeatureKind::Nominal => decl
            .categories
            .iter()
            .position(|c| c == token)
            .and_then(S::from_usize)
            .ok_or_else(|| format!("value {token:?} not a category of {:?}", decl.name)),
    }
}

pub fn load_dataset<S: Scalar>(
    path: impl AsRef<Path>,
    space: &FeatureSpace,
    label: Option<&str>,
) -> Result<Dataset<S>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(std::io::BufReader::new(file), space, label)
}

/// Derives a feature space from a labeled CSV: columns whose every token
/// parses as a number are numeric, the rest nominal with sorted categories.
/// Classes are the sorted distinct labels.
pub fn infer_space<R: Read>(reader: R, label: &str) -> Result<FeatureSpace> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(|e| Error::parse("csv header", e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_col = header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| Error::parse("csv header", format!("missing label column {label:?}")))?;
    let mut numeric = vec![true; header.len()];
    let mut tokens: Vec<BTreeSet<String>> = vec![BTreeSet::new(); header.len()];
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Data {
            row: i + 1,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Data {
                row: i + 1,
                message: format!("{} fields, expected {}", record.len(), header.len()),
            });
        }
        for (col, token) in record.iter().enumerate() {
            let token = token.trim();
            if col == label_col || token.parse::<f64>().map_or(true, |v| !v.is_finite()) {
                numeric[col] = false;
            }
            if col == label_col || !numeric[col] {
                tokens[col].insert(token.to_string());
            }
        }
    }
    let features = header
        .iter()
        .enumerate()
        .filter(|&(col, _)| col != label_col)
        .map(|(col, name)| {
            if numeric[col] {
                FeatureDecl::numeric(name.clone())
            } else {
                FeatureDecl::nominal(name.clone(), tokens[col].iter().cloned())
            }
        })
        .collect();
    let classes = tokens[label_col].iter().cloned().collect();
    FeatureSpace::new(features, classes)
}

pub fn infer_space_from_path(path: impl AsRef<Path>, label: &str) -> Result<FeatureSpace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    infer_space(std::io::BufReader::new(file), label)
}

/// Seeded random partition into (train, test) with `round(len * fraction)`
/// test rows. Row order inside each part follows the original order.
pub fn split_dataset<S: Scalar>(
    data: &Dataset<S>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<S>, Dataset<S>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n_test = (data.len() as f64 * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}
