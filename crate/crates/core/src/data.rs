//! Tabular datasets, feature schemas and output scalarisation.
//!
//! Categorical features are one-hot expanded at load time, so everything
//! downstream of a [`Dataset`] only ever sees numeric columns and threshold
//! tests of the form `x[j] <= t`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
            categories: None,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            categories: Some(categories.into_iter().map(Into::into).collect()),
        }
    }

    /// Number of dataset columns this feature occupies after one-hot expansion.
    pub fn width(&self) -> usize {
        match self.kind {
            FeatureKind::Numeric => 1,
            FeatureKind::Categorical => self.categories.as_ref().map_or(0, Vec::len),
        }
    }
}

/// Ordered list of input features. Serialized as a bare JSON list of
/// `{name, kind, categories?}` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureSpec>", into = "Vec<FeatureSpec>")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl TryFrom<Vec<FeatureSpec>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<FeatureSpec>) -> Result<Self> {
        Self::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureSpec> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            match (f.kind, &f.categories) {
                (FeatureKind::Categorical, Some(c)) if !c.is_empty() => {
                    let distinct: BTreeSet<_> = c.iter().collect();
                    if distinct.len() != c.len() {
                        return Err(Error::Schema(format!(
                            "categorical feature `{}` lists a category twice",
                            f.name
                        )));
                    }
                }
                (FeatureKind::Categorical, _) => {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` needs at least one category",
                        f.name
                    )))
                }
                (FeatureKind::Numeric, Some(_)) => {
                    return Err(Error::Schema(format!(
                        "numeric feature `{}` cannot list categories",
                        f.name
                    )))
                }
                (FeatureKind::Numeric, None) => {}
            }
        }
        Ok(Self { features })
    }

    /// Schema with only numeric features.
    pub fn numeric<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(names.into_iter().map(FeatureSpec::numeric).collect())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Width of the expanded (one-hot) feature space.
    pub fn dimension(&self) -> usize {
        self.features.iter().map(FeatureSpec::width).sum()
    }

    /// Expanded column names: numeric features keep their name, categorical
    /// features become `name=category`.
    pub fn expanded_columns(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dimension());
        for f in &self.features {
            match f.kind {
                FeatureKind::Numeric => out.push(f.name.clone()),
                FeatureKind::Categorical => {
                    for c in f.categories.iter().flatten() {
                        out.push(format!("{}={}", f.name, c));
                    }
                }
            }
        }
        out
    }

    /// Range of expanded columns occupied by the named feature.
    pub fn column_range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for f in &self.features {
            let w = f.width();
            if f.name == name {
                return Some(start..start + w);
            }
            start += w;
        }
        None
    }

    fn without(&self, name: &str) -> Self {
        Self {
            features: self
                .features
                .iter()
                .filter(|f| f.name != name)
                .cloned()
                .collect(),
        }
    }
}

/// Immutable row-major table in the expanded feature space, with optional
/// model-output and label columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    columns: Vec<String>,
    values: Vec<f64>,
    n_rows: usize,
    predictions: Option<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from rows that are already in the expanded space.
    pub fn from_rows(schema: FeatureSchema, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        let d = schema.dimension();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i,
                    column: schema.expanded_columns()[j].clone(),
                    message: "non-finite value".into(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            columns: schema.expanded_columns(),
            schema,
            values,
            n_rows: rows.len(),
            predictions: None,
            labels: None,
        })
    }

    /// Convenience constructor for an all-numeric table.
    pub fn numeric<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        Self::from_rows(FeatureSchema::numeric(names)?, rows)
    }

    pub fn with_predictions(mut self, predictions: Vec<f64>) -> Result<Self> {
        if predictions.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: predictions.len(),
            });
        }
        if let Some(i) = predictions.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: i,
                column: "prediction".into(),
                message: "prediction must be finite".into(),
            });
        }
        self.predictions = Some(predictions);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Reads a CSV whose header contains every schema feature plus the
    /// optional prediction and label columns. Extra columns are ignored.
    pub fn load_csv(
        path: impl AsRef<Path>,
        schema: &FeatureSchema,
        prediction_column: Option<&str>,
        label_column: Option<&str>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Empty(format!("{} has no header", path.display())));
        }
        let index: HashMap<&str, usize> = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_str(), i))
            .collect();
        let find = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
        };
        let feature_cols = schema
            .features()
            .iter()
            .map(|f| find(&f.name))
            .collect::<Result<Vec<_>>>()?;
        let pred_col = prediction_column.map(find).transpose()?;
        let label_col = label_column.map(find).transpose()?;

        let d = schema.dimension();
        let mut values = Vec::new();
        let mut predictions = pred_col.map(|_| Vec::new());
        let mut labels = label_col.map(|_| Vec::new());
        let mut n_rows = 0;
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let start = values.len();
            values.resize(start + d, 0.0);
            let mut offset = start;
            for (spec, &col) in schema.features().iter().zip(&feature_cols) {
                let raw = record.get(col).unwrap_or("");
                match spec.kind {
                    FeatureKind::Numeric => {
                        values[offset] = parse_finite(raw, row, &spec.name)?;
                        offset += 1;
                    }
                    FeatureKind::Categorical => {
                        let cats = spec.categories.as_deref().unwrap_or_default();
                        let k = cats.iter().position(|c| c == raw).ok_or_else(|| Error::Parse {
                            row,
                            column: spec.name.clone(),
                            message: format!("unknown category `{raw}`"),
                        })?;
                        values[offset + k] = 1.0;
                        offset += cats.len();
                    }
                }
            }
            if let (Some(col), Some(p)) = (pred_col, predictions.as_mut()) {
                p.push(parse_finite(
                    record.get(col).unwrap_or(""),
                    row,
                    prediction_column.unwrap_or_default(),
                )?);
            }
            if let (Some(col), Some(l)) = (label_col, labels.as_mut()) {
                let raw = record.get(col).unwrap_or("");
                if raw.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: label_column.unwrap_or_default().to_owned(),
                        message: "missing label".into(),
                    });
                }
                l.push(raw.to_owned());
            }
            n_rows += 1;
        }
        if n_rows == 0 {
            return Err(Error::Empty(format!("{} has no data rows", path.display())));
        }
        Ok(Self {
            columns: schema.expanded_columns(),
            schema: schema.clone(),
            values,
            n_rows,
            predictions,
            labels,
        })
    }

    /// Writes the table back in its unexpanded form (categoricals as labels).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = self.schema.features().iter().map(|f| f.name.clone()).collect();
        if self.predictions.is_some() {
            header.push("prediction".into());
        }
        if self.labels.is_some() {
            header.push("label".into());
        }
        writer.write_record(&header)?;
        for i in 0..self.n_rows {
            let row = self.row(i);
            let mut out = Vec::with_capacity(header.len());
            let mut offset = 0;
            for spec in self.schema.features() {
                match spec.kind {
                    FeatureKind::Numeric => {
                        out.push(format!("{:?}", row[offset]));
                        offset += 1;
                    }
                    FeatureKind::Categorical => {
                        let cats = spec.categories.as_deref().unwrap_or_default();
                        let k = (0..cats.len()).find(|&k| row[offset + k] == 1.0).unwrap_or(0);
                        out.push(cats[k].clone());
                        offset += cats.len();
                    }
                }
            }
            if let Some(p) = &self.predictions {
                out.push(format!("{:?}", p[i]));
            }
            if let Some(l) = &self.labels {
                out.push(l[i].clone());
            }
            writer.write_record(&out)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.columns.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let d = self.columns.len().max(1);
        self.values.chunks_exact(d).take(self.n_rows)
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.columns.len() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn predictions(&self) -> Option<&[f64]> {
        self.predictions.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Copy of the selected rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("row selection is empty".into()));
        }
        let d = self.columns.len();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Ok(Self {
            schema: self.schema.clone(),
            columns: self.columns.clone(),
            values,
            n_rows: indices.len(),
            predictions: self
                .predictions
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        })
    }

    /// Row-wise concatenation. Optional columns survive only if both sides
    /// carry them.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.schema != other.schema {
            return Err(Error::Schema("cannot concatenate datasets with different schemas".into()));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let join = |a: Option<&Vec<f64>>, b: Option<&Vec<f64>>| match (a, b) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Ok(Self {
            schema: self.schema.clone(),
            columns: self.columns.clone(),
            values,
            n_rows: self.n_rows + other.n_rows,
            predictions: join(self.predictions.as_ref(), other.predictions.as_ref()),
            labels: match (&self.labels, &other.labels) {
                (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
                _ => None,
            },
        })
    }

    fn drop_column(&self, col: usize, schema: FeatureSchema) -> Self {
        let d = self.columns.len();
        let mut values = Vec::with_capacity(self.n_rows * (d - 1));
        for row in self.rows() {
            values.extend(row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v));
        }
        Self {
            columns: schema.expanded_columns(),
            schema,
            values,
            n_rows: self.n_rows,
            predictions: self.predictions.clone(),
            labels: self.labels.clone(),
        }
    }
}

fn parse_finite(raw: &str, row: usize, column: &str) -> Result<f64> {
    let err = |message: String| Error::Parse {
        row,
        column: column.to_owned(),
        message,
    };
    if raw.is_empty() {
        return Err(err("missing value".into()));
    }
    let v: f64 = raw.parse().map_err(|_| err(format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(err(format!("`{raw}` is not finite")));
    }
    Ok(v)
}

/// Splits a dataset into rows with `feature <= threshold` and rows with
/// `feature > threshold`, optionally dropping the partitioning column.
pub fn partition_by_threshold(
    data: &Dataset,
    feature: &str,
    threshold: f64,
    drop_feature: bool,
) -> Result<(Dataset, Dataset)> {
    let spec = data
        .schema()
        .feature(feature)
        .ok_or_else(|| Error::Schema(format!("missing column `{feature}`")))?;
    if spec.kind != FeatureKind::Numeric {
        return Err(Error::Type(format!("partition feature `{feature}` must be numeric")));
    }
    let col = data.schema().column_range(feature).map(|r| r.start).unwrap_or_default();
    let (low, high): (Vec<usize>, Vec<usize>) =
        (0..data.n_rows()).partition(|&i| data.value(i, col) <= threshold);
    if low.is_empty() || high.is_empty() {
        return Err(Error::EmptyPartition(format!(
            "threshold {threshold} on `{feature}` leaves one side with no rows"
        )));
    }
    let mut low = data.select(&low)?;
    let mut high = data.select(&high)?;
    if drop_feature {
        let schema = data.schema().without(feature);
        low = low.drop_column(col, schema.clone());
        high = high.drop_column(col, schema);
    }
    Ok((low, high))
}

/// Raw model outputs prior to scalarisation.
#[derive(Debug, Clone, PartialEq)]
pub enum RawOutputs {
    Labels(Vec<String>),
    Reals(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Scalariser {
    Identity,
    ClassIndicator { target_classes: BTreeSet<String> },
}

impl Scalariser {
    pub fn class_indicator<S: Into<String>>(classes: impl IntoIterator<Item = S>) -> Result<Self> {
        let target_classes: BTreeSet<String> = classes.into_iter().map(Into::into).collect();
        if target_classes.is_empty() {
            return Err(Error::Config("class indicator needs at least one target class".into()));
        }
        Ok(Self::ClassIndicator { target_classes })
    }
}

/// Maps raw outputs to reals: identity passes numbers through (parsing
/// numeric labels), class indicator yields 1.0 for members of the target set.
pub fn scalarise(raw: &RawOutputs, scalariser: &Scalariser) -> Result<Vec<f64>> {
    match (scalariser, raw) {
        (Scalariser::Identity, RawOutputs::Reals(v)) => Ok(v.clone()),
        (Scalariser::Identity, RawOutputs::Labels(labels)) => labels
            .iter()
            .enumerate()
            .map(|(i, s)| parse_finite(s, i, "label"))
            .collect(),
        (Scalariser::ClassIndicator { target_classes }, RawOutputs::Labels(labels)) => {
            if target_classes.is_empty() {
                return Err(Error::Config("class indicator needs at least one target class".into()));
            }
            Ok(labels
                .iter()
                .map(|l| if target_classes.contains(l) { 1.0 } else { 0.0 })
                .collect())
        }
        (Scalariser::ClassIndicator { .. }, RawOutputs::Reals(_)) => Err(Error::Type(
            "class indicator scalarisation requires label-valued outputs".into(),
        )),
    }
}
