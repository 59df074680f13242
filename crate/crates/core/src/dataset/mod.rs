//! Labeled datasets with a protected group.

mod bias;
mod load;
pub mod schema;
mod split;

pub use bias::{inject_random_bias, BiasedDataset, SYNTHETIC_FEATURE};
pub use load::{load_dataset, load_files};
pub use schema::{DatasetSchema, MissingPolicy};
pub use split::{split, SplitRatios, SplitTriple, Standardizer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label, always `-1` or `+1`.
pub type Label = i8;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidArgument(format!(
                "feature buffer has {} values, expected {n_rows} x {n_cols}",
                data.len()
            )));
        }
        Ok(Self { data, n_rows, n_cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidArgument("ragged feature rows".into()));
        }
        Ok(Self {
            data: rows.concat(),
            n_rows: rows.len(),
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).map(move |i| self.get(i, j))
    }

    pub(crate) fn map_column(&mut self, j: usize, f: impl Fn(f64) -> f64) {
        for i in 0..self.n_rows {
            let v = &mut self.data[i * self.n_cols + j];
            *v = f(*v);
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }

    /// Appends one column; `values` must have one entry per row.
    pub fn with_column(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.n_rows {
            return Err(Error::InvalidArgument("appended column has wrong length".into()));
        }
        let n_cols = self.n_cols + 1;
        let mut data = Vec::with_capacity(self.n_rows * n_cols);
        for (row, &v) in self.rows().zip(values) {
            data.extend_from_slice(row);
            data.push(v);
        }
        Ok(Self {
            data,
            n_rows: self.n_rows,
            n_cols,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric { column: String },
    OneHot { column: String, value: String },
    /// The random group bit added for resilience runs.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureInfo {
    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric { .. })
    }
}

/// Where the rows came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema: String,
    pub sources: Vec<String>,
    pub rows_read: usize,
    pub rows_filtered: usize,
    pub rows_dropped_missing: usize,
    pub rows_imputed: usize,
}

/// Encoded examples, labels in {-1,+1}, and protected-group membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<Label>,
    protected: Vec<bool>,
    feature_info: Vec<FeatureInfo>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<Label>,
        protected: Vec<bool>,
        feature_info: Vec<FeatureInfo>,
    ) -> Result<Self> {
        if labels.len() != features.n_rows() || protected.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "length mismatch: {} feature rows, {} labels, {} protected flags",
                features.n_rows(),
                labels.len(),
                protected.len()
            )));
        }
        if feature_info.len() != features.n_cols() {
            return Err(Error::InvalidArgument(
                "feature descriptors do not match the column count".into(),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not -1 or +1")));
        }
        Ok(Self {
            features,
            labels,
            protected,
            feature_info,
            provenance: Provenance::default(),
        })
    }

    /// Builds a dataset of purely numeric features named `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>, protected: Vec<bool>) -> Result<Self> {
        let features = FeatureMatrix::from_rows(rows)?;
        let info = (0..features.n_cols())
            .map(|j| FeatureInfo {
                name: format!("x{j}"),
                kind: FeatureKind::Numeric {
                    column: format!("x{j}"),
                },
            })
            .collect();
        Self::new(features, labels, protected, info)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub(crate) fn features_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn protected(&self) -> &[bool] {
        &self.protected
    }

    pub fn feature_info(&self) -> &[FeatureInfo] {
        &self.feature_info
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.feature_info.iter().map(|f| f.name.clone()).collect()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn protected_count(&self) -> usize {
        self.protected.iter().filter(|&&p| p).count()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            protected: indices.iter().map(|&i| self.protected[i]).collect(),
            feature_info: self.feature_info.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        Self::new(
            self.features.clone(),
            labels,
            self.protected.clone(),
            self.feature_info.clone(),
        )
        .map(|d| d.with_provenance(self.provenance.clone()))
    }

    pub fn with_protected(&self, protected: Vec<bool>) -> Result<Self> {
        Self::new(
            self.features.clone(),
            self.labels.clone(),
            protected,
            self.feature_info.clone(),
        )
        .map(|d| d.with_provenance(self.provenance.clone()))
    }

    pub fn with_feature(&self, info: FeatureInfo, values: &[f64]) -> Result<Self> {
        let features = self.features.with_column(values)?;
        let mut feature_info = self.feature_info.clone();
        feature_info.push(info);
        Self::new(features, self.labels.clone(), self.protected.clone(), feature_info)
            .map(|d| d.with_provenance(self.provenance.clone()))
    }

    /// Recovers the categorical value of `column` in row `i` from its one-hot block.
    pub fn decode_categorical(&self, column: &str, i: usize) -> Option<&str> {
        let row = self.row(i);
        self.feature_info
            .iter()
            .zip(row)
            .find_map(|(info, &v)| match &info.kind {
                FeatureKind::OneHot { column: c, value } if c == column && v == 1.0 => {
                    Some(value.as_str())
                }
                _ => None,
            })
    }
}
