use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{debug, warn};

use super::schema::{ColumnKind, DatasetSchema, MissingPolicy};
use super::{Dataset, FeatureInfo, FeatureKind, FeatureMatrix, Label, Provenance};
use crate::error::{Error, Result};

struct RawRow {
    source: usize,
    line: usize,
    tokens: Vec<String>,
    label: Label,
    protected: bool,
    has_missing: bool,
}

/// Loads a single delimited text file under `schema`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    load_files(&[path.as_ref().to_path_buf()], schema)
}

/// Loads and concatenates several files (e.g. a train and a test file) under
/// one schema. The categorical encoding is fitted on all loaded rows.
pub fn load_files(paths: &[PathBuf], schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no data files given".into()));
    }
    let label_col = schema.column_index(&schema.label.column).expect("validated");
    let prot_col = schema.column_index(&schema.protected.column).expect("validated");
    let rule = schema.protected_rule()?;
    let filters: Vec<(usize, &[String])> = schema
        .filter
        .iter()
        .map(|f| (schema.column_index(&f.column).expect("validated"), f.equals.as_slice()))
        .collect();
    let feature_cols: Vec<usize> = (0..schema.columns.len()).filter(|&j| schema.is_feature(j)).collect();
    let is_missing = |t: &str| schema.missing_tokens.iter().any(|m| m == t);

    let mut prov = Provenance {
        schema: schema.name.clone(),
        sources: paths.iter().map(|p| p.display().to_string()).collect(),
        ..Provenance::default()
    };
    let mut rows = Vec::new();
    let mut data_lines = 0usize;

    for (source, path) in paths.iter().enumerate() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(prefix) = &schema.comment_prefix {
                if trimmed.starts_with(prefix.as_str()) {
                    continue;
                }
            }
            data_lines += 1;
            prov.rows_read += 1;
            let tokens: Vec<String> = schema
                .delimiter
                .tokenize(trimmed)
                .into_iter()
                .map(str::to_owned)
                .collect();
            if tokens.len() != schema.columns.len() {
                return Err(Error::Parse {
                    path: path.clone(),
                    line: line_no,
                    message: format!(
                        "expected {} fields, found {}",
                        schema.columns.len(),
                        tokens.len()
                    ),
                });
            }
            if !filters
                .iter()
                .all(|(j, allowed)| allowed.iter().any(|a| a == &tokens[*j]))
            {
                prov.rows_filtered += 1;
                continue;
            }
            if is_missing(&tokens[label_col]) || is_missing(&tokens[prot_col]) {
                prov.rows_dropped_missing += 1;
                continue;
            }
            let has_missing = feature_cols.iter().any(|&j| is_missing(&tokens[j]));
            if has_missing && schema.missing_policy == MissingPolicy::Drop {
                prov.rows_dropped_missing += 1;
                continue;
            }
            let raw_label = tokens[label_col].as_str();
            let label = if schema.label.positive.iter().any(|v| v == raw_label) {
                1
            } else if schema
                .label
                .negative
                .as_ref()
                .is_none_or(|neg| neg.iter().any(|v| v == raw_label))
            {
                -1
            } else {
                return Err(Error::UnknownLabel {
                    path: path.clone(),
                    line: line_no,
                    value: raw_label.to_owned(),
                });
            };
            let protected = rule.matches(&tokens[prot_col]).map_err(|message| Error::Parse {
                path: path.clone(),
                line: line_no,
                message,
            })?;
            if has_missing {
                prov.rows_imputed += 1;
            }
            rows.push(RawRow {
                source,
                line: line_no,
                tokens,
                label,
                protected,
                has_missing,
            });
        }
    }

    if data_lines == 0 {
        return Err(Error::EmptyFile(paths[0].clone()));
    }
    if rows.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} rows were filtered or dropped for missing values",
            data_lines
        )));
    }
    if prov.rows_dropped_missing > 0 {
        debug!(
            "{}: dropped {} rows with missing values",
            schema.name, prov.rows_dropped_missing
        );
    }

    let parse_error = |row: &RawRow, message: String| Error::Parse {
        path: paths[row.source].clone(),
        line: row.line,
        message,
    };

    // Scan pass: admissible categorical values and imputation fills.
    let mut encoders: Vec<ColumnEncoder> = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let spec = &schema.columns[j];
        match spec.kind {
            ColumnKind::Numeric => {
                let mut sum = 0.0;
                let mut count = 0usize;
                for row in &rows {
                    let t = &row.tokens[j];
                    if is_missing(t) {
                        continue;
                    }
                    let v: f64 = t
                        .parse()
                        .map_err(|_| parse_error(row, format!("`{t}` in column `{}` is not numeric", spec.name)))?;
                    sum += v;
                    count += 1;
                }
                let fill = if count > 0 { sum / count as f64 } else { 0.0 };
                encoders.push(ColumnEncoder::Numeric { fill });
            }
            ColumnKind::Categorical => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for row in &rows {
                    let t = row.tokens[j].as_str();
                    if is_missing(t) {
                        continue;
                    }
                    if spec.frozen && !spec.values.as_ref().expect("validated").iter().any(|v| v == t) {
                        return Err(Error::UnknownCategory {
                            path: paths[row.source].clone(),
                            line: row.line,
                            column: spec.name.clone(),
                            value: t.to_owned(),
                        });
                    }
                    *counts.entry(t).or_default() += 1;
                }
                let mut values: Vec<String> = spec.values.clone().unwrap_or_default();
                let extra: BTreeSet<&str> = counts
                    .keys()
                    .copied()
                    .filter(|t| !values.iter().any(|v| v == t))
                    .collect();
                values.extend(extra.into_iter().map(str::to_owned));
                if values.is_empty() {
                    warn!("categorical column `{}` has no observed values", spec.name);
                }
                // Mode; BTreeMap order makes ties resolve to the smallest token.
                let fill = counts
                    .iter()
                    .fold(None::<(&str, usize)>, |best, (&t, &c)| match best {
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((t, c)),
                    })
                    .map(|(t, _)| t.to_owned());
                encoders.push(ColumnEncoder::Categorical { values, fill });
            }
            ColumnKind::Ignore => unreachable!("ignored columns are not features"),
        }
    }

    let mut info = Vec::new();
    for (&j, enc) in feature_cols.iter().zip(&encoders) {
        let name = &schema.columns[j].name;
        match enc {
            ColumnEncoder::Numeric { .. } => info.push(FeatureInfo {
                name: name.clone(),
                kind: FeatureKind::Numeric { column: name.clone() },
            }),
            ColumnEncoder::Categorical { values, .. } => {
                info.extend(values.iter().map(|v| FeatureInfo {
                    name: format!("{name}={v}"),
                    kind: FeatureKind::OneHot {
                        column: name.clone(),
                        value: v.clone(),
                    },
                }))
            }
        }
    }

    let d = info.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    for row in &rows {
        for (&j, enc) in feature_cols.iter().zip(&encoders) {
            let t = row.tokens[j].as_str();
            let missing = row.has_missing && is_missing(t);
            match enc {
                ColumnEncoder::Numeric { fill } => {
                    let v = if missing {
                        *fill
                    } else {
                        t.parse().map_err(|_| parse_error(row, format!("`{t}` is not numeric")))?
                    };
                    data.push(v);
                }
                ColumnEncoder::Categorical { values, fill } => {
                    let value = if missing { fill.as_deref() } else { Some(t) };
                    data.extend(values.iter().map(|v| if Some(v.as_str()) == value { 1.0 } else { 0.0 }));
                }
            }
        }
    }

    let features = FeatureMatrix::new(data, rows.len(), d)?;
    let labels = rows.iter().map(|r| r.label).collect();
    let protected = rows.iter().map(|r| r.protected).collect();
    Ok(Dataset::new(features, labels, protected, info)?.with_provenance(prov))
}

enum ColumnEncoder {
    Numeric { fill: f64 },
    Categorical { values: Vec<String>, fill: Option<String> },
}
