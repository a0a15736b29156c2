//! Dataset file loaders: svmlight/libsvm, CSV, and prediction-matrix import.

use super::{Dataset, VoterHalf, VoterOutputs};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Whitespace-separated `label idx:val` pairs, 1-based indices.
    Svmlight,
    /// Header row, features then label in the last column.
    Csv,
}

impl DataFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svmlight" | "libsvm" | "svm" => Ok(DataFormat::Svmlight),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::Config(format!("unknown dataset format '{other}'"))),
        }
    }
}

/// Load a dataset file, remapping labels to contiguous `0..k−1`.
///
/// Features are returned raw; min-max scaling to [0, 1] is applied as a
/// separate step once the split plan is known, so scaling parameters can be
/// fitted on the training split only.
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    match format {
        DataFormat::Svmlight => parse_svmlight(&name, &text),
        DataFormat::Csv => parse_csv(&name, &text),
    }
}

fn parse_svmlight(name: &str, text: &str) -> Result<Dataset> {
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("bad label token '{label_tok}'"),
        })?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("expected idx:val, got '{tok}'"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: line_no,
                reason: format!("bad feature index '{idx_s}'"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: line_no,
                reason: format!("non-numeric feature token '{val_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "svmlight indices are 1-based".into(),
                });
            }
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("non-finite feature value '{val_s}'"),
                });
            }
            d = d.max(idx);
            row.push((idx - 1, val));
        }
        raw_labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    let m = rows.len();
    let d = d.max(1);
    let mut features = vec![0.0; m * d];
    for (j, row) in rows.iter().enumerate() {
        for &(f, v) in row {
            features[j * d + f] = v;
        }
    }
    let labels = remap_labels(&raw_labels)?;
    Dataset::new(name, features, labels, d)
}

fn parse_csv(name: &str, text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    // Header row is required and skipped.
    let Some((_, _header)) = lines.next() else {
        return Err(Error::EmptyDataset(name.to_string()));
    };
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    let mut d: Option<usize> = None;
    for (line_no, line) in lines {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                reason: "need at least one feature and a label".into(),
            });
        }
        let width = cells.len() - 1;
        match d {
            None => d = Some(width),
            Some(w) if w != width => {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("row has {width} features, expected {w}"),
                })
            }
            _ => {}
        }
        for cell in &cells[..width] {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                reason: format!("non-numeric feature token '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("non-finite feature value '{cell}'"),
                });
            }
            features.push(v);
        }
        let label_tok = cells[width].trim();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("bad label token '{label_tok}'"),
        })?;
        raw_labels.push(label);
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    let labels = remap_labels(&raw_labels)?;
    let d = d.unwrap();
    Dataset::new(name, features, labels, d)
}

/// Map raw numeric labels onto `0..k−1` by sorted order.
fn remap_labels(raw: &[f64]) -> Result<Vec<usize>> {
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
    let mut ordered: Vec<f64> = raw.to_vec();
    ordered.sort_by(f64::total_cmp);
    ordered.dedup();
    for (i, &v) in ordered.iter().enumerate() {
        seen.insert(v.to_bits(), i);
    }
    raw.iter()
        .map(|v| {
            if !v.is_finite() {
                return Err(Error::Domain("non-finite label".into()));
            }
            Ok(seen[&v.to_bits()])
        })
        .collect()
}

/// Import an externally produced prediction matrix.
///
/// `pred_path`: CSV of `m` rows × `n` columns of class indices (no header).
/// `labels_path`: one class index per line. `half_path`, when given, carries
/// one `1`/`2` per voter line marking which training half produced it (the
/// data-dependent setting).
pub fn load_prediction_matrix(
    pred_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    half_path: Option<&Path>,
) -> Result<VoterOutputs> {
    let pred_text = fs::read_to_string(pred_path.as_ref())?;
    let mut predictions: Vec<u16> = Vec::new();
    let mut n: Option<usize> = None;
    for (line_no, line) in pred_text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<u16> = line
            .split(',')
            .map(|c| {
                c.trim().parse::<u16>().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("bad class index '{c}'"),
                })
            })
            .collect::<Result<_>>()?;
        match n {
            None => n = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("row has {} voters, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        predictions.extend(row);
    }
    let labels_text = fs::read_to_string(labels_path.as_ref())?;
    let labels: Vec<usize> = labels_text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(line_no, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: line_no + 1,
                reason: format!("bad label '{l}'"),
            })
        })
        .collect::<Result<_>>()?;
    if labels.is_empty() {
        return Err(Error::EmptyDataset("labels file".into()));
    }
    let half = match half_path {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let tags: Vec<VoterHalf> = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(line_no, l)| match l.trim() {
                    "1" => Ok(VoterHalf::One),
                    "2" => Ok(VoterHalf::Two),
                    other => Err(Error::Parse {
                        line: line_no + 1,
                        reason: format!("half tag must be 1 or 2, got '{other}'"),
                    }),
                })
                .collect::<Result<_>>()?;
            Some(tags)
        }
    };
    let k = predictions
        .iter()
        .map(|&p| p as usize)
        .chain(labels.iter().copied())
        .max()
        .unwrap_or(0)
        + 1;
    VoterOutputs::from_predictions(predictions, labels, k.max(2), half)
}
