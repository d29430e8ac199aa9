//! Audit datasets: covariates with a leading intercept column, a real-valued
//! outcome, a two-group membership column, and optional named score columns
//! (for externally supplied risk scores).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical group labels. `R` is the reference (majority) group and `B`
/// the comparison (minority) group; source files may use any two strings,
/// mapped at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    R,
    B,
}

impl Group {
    /// Fixed array index: R = 0, B = 1.
    pub fn index(self) -> usize {
        match self {
            Group::R => 0,
            Group::B => 1,
        }
    }

    pub const BOTH: [Group; 2] = [Group::R, Group::B];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::R => write!(f, "r"),
            Group::B => write!(f, "b"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("column {0} not found in the file header")]
    MissingColumn(String),
    #[error("column {column}, data row {row}: value does not parse as a number")]
    NonNumericFeature { column: String, row: usize },
    #[error("column {column}, data row {row}: value is not finite")]
    NonFiniteValue { column: String, row: usize },
    #[error("group column has a single distinct label; two groups are required")]
    SingleGroup,
    #[error("group column has labels beyond the expected two: {0}")]
    TooManyGroups(String),
    #[error("file has a header but no data rows")]
    EmptyFile,
    #[error("intercept column {column} is not constantly 1 (data row {row})")]
    BadIntercept { column: String, row: usize },
    #[error("inconsistent column lengths when assembling a dataset")]
    LengthMismatch,
    #[error("rule expects {expected} covariates, dataset has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("score column {0} not present in the dataset")]
    MissingScoreColumn(String),
    #[error("split leaves an empty train or test side (n = {n}, train = {train})")]
    DegenerateSplit { n: usize, train: usize },
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    BadSplitFraction(f64),
    #[error("schema file: {0}")]
    BadSchema(String),
    #[error("io: {0}")]
    Io(String),
}

/// Column names and group-label mapping carried by a dataset so it can be
/// written back out in its original vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetNames {
    pub group: String,
    pub outcome: String,
    /// One name per covariate column; index 0 is the intercept.
    pub features: Vec<String>,
    /// Source-file labels written for (R, B).
    pub group_labels: (String, String),
    /// True when the intercept column exists in the source file rather than
    /// being synthesized at load time.
    pub intercept_in_file: bool,
}

impl DatasetNames {
    /// Generic names for programmatically built datasets.
    pub fn generic(d: usize) -> Self {
        let mut features = vec!["_intercept".to_string()];
        for j in 1..d {
            features.push(format!("x{j}"));
        }
        DatasetNames {
            group: "g".into(),
            outcome: "y".into(),
            features,
            group_labels: ("r".into(), "b".into()),
            intercept_in_file: false,
        }
    }
}

/// An immutable sample of `n` rows and `d` covariate columns (the first
/// being the constant intercept), plus outcome, group, and score columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    covariates: Vec<f64>,
    outcomes: Vec<f64>,
    groups: Vec<Group>,
    scores: BTreeMap<String, Vec<f64>>,
    pub names: DatasetNames,
}

impl Dataset {
    /// Builds a dataset from per-row covariates, checking the structural
    /// invariants: at least one row, consistent lengths, finite values, a
    /// constant leading intercept, and both groups present.
    pub fn assemble(
        rows: Vec<Vec<f64>>,
        outcomes: Vec<f64>,
        groups: Vec<Group>,
        scores: BTreeMap<String, Vec<f64>>,
        names: DatasetNames,
    ) -> Result<Self, DataError> {
        let n = rows.len();
        if n == 0 {
            return Err(DataError::EmptyFile);
        }
        let d = rows[0].len();
        if d == 0
            || outcomes.len() != n
            || groups.len() != n
            || names.features.len() != d
            || rows.iter().any(|r| r.len() != d)
            || scores.values().any(|c| c.len() != n)
        {
            return Err(DataError::LengthMismatch);
        }
        let mut covariates = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row[0] != 1.0 {
                return Err(DataError::BadIntercept {
                    column: names.features[0].clone(),
                    row: i + 1,
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteValue {
                        column: names.features[j].clone(),
                        row: i + 1,
                    });
                }
                covariates.push(*v);
            }
        }
        for (i, v) in outcomes.iter().enumerate() {
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue {
                    column: names.outcome.clone(),
                    row: i + 1,
                });
            }
        }
        for (name, col) in &scores {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue {
                    column: name.clone(),
                    row: i + 1,
                });
            }
        }
        if !groups.contains(&Group::R) || !groups.contains(&Group::B) {
            return Err(DataError::SingleGroup);
        }
        Ok(Dataset {
            n,
            d,
            covariates,
            outcomes,
            groups,
            scores,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of covariate columns, intercept included.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.d..(i + 1) * self.d]
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_size(&self, g: Group) -> usize {
        self.groups.iter().filter(|&&x| x == g).count()
    }

    pub fn score(&self, name: &str) -> Option<&[f64]> {
        self.scores.get(name).map(|v| v.as_slice())
    }

    pub fn score_names(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(|s| s.as_str())
    }

    /// Rows at `indices`, in the order given. Unlike [`Dataset::assemble`],
    /// a subset may end up with a single group: downstream estimators treat
    /// empty group cells as degenerate rather than making subsetting fail.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut covariates = Vec::with_capacity(indices.len() * self.d);
        let mut outcomes = Vec::with_capacity(indices.len());
        let mut groups = Vec::with_capacity(indices.len());
        for &i in indices {
            covariates.extend_from_slice(self.row(i));
            outcomes.push(self.outcomes[i]);
            groups.push(self.groups[i]);
        }
        let scores = self
            .scores
            .iter()
            .map(|(k, col)| (k.clone(), indices.iter().map(|&i| col[i]).collect()))
            .collect();
        Dataset {
            n: indices.len(),
            d: self.d,
            covariates,
            outcomes,
            groups,
            scores,
            names: self.names.clone(),
        }
    }
}

/// Role assignment for the columns of a CSV file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Schema {
    pub outcome: String,
    pub group: String,
    pub features: Vec<String>,
    #[serde(default)]
    pub scores: Vec<String>,
    /// Explicit mapping from source labels to canonical groups. When absent,
    /// the two distinct labels are sorted and the first maps to `b`.
    #[serde(default)]
    pub group_labels: Option<GroupLabels>,
    /// Name of an existing constant-one column to use as the intercept.
    /// When absent, an intercept is synthesized.
    #[serde(default)]
    pub intercept: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroupLabels {
    pub r: String,
    pub b: String,
}

impl Schema {
    pub fn from_toml(text: &str) -> Result<Self, DataError> {
        toml::from_str(text).map_err(|e| DataError::BadSchema(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io(e.to_string()))?;
        Self::from_toml(&text)
    }
}

/// Loads a CSV file under a schema. Row order is preserved; numeric fields
/// must parse as finite numbers; the group column must carry exactly two
/// distinct labels (or the two labels the schema declares).
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Io(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let col = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };

    let outcome_idx = col(&schema.outcome)?;
    let group_idx = col(&schema.group)?;
    let feature_idx: Vec<usize> = schema
        .features
        .iter()
        .map(|f| col(f))
        .collect::<Result<_, _>>()?;
    let score_idx: Vec<usize> = schema
        .scores
        .iter()
        .map(|s| col(s))
        .collect::<Result<_, _>>()?;
    let intercept_idx = schema.intercept.as_deref().map(col).transpose()?;

    let parse = |field: &str, column: &str, row: usize| -> Result<f64, DataError> {
        let v: f64 = field.trim().parse().map_err(|_| DataError::NonNumericFeature {
            column: column.to_string(),
            row,
        })?;
        if !v.is_finite() {
            return Err(DataError::NonFiniteValue {
                column: column.to_string(),
                row,
            });
        }
        Ok(v)
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut outcomes = Vec::new();
    let mut raw_groups: Vec<String> = Vec::new();
    let mut score_cols: Vec<Vec<f64>> = vec![Vec::new(); score_idx.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Io(e.to_string()))?;
        let rownum = r + 1;
        let mut row = Vec::with_capacity(feature_idx.len() + 1);
        match intercept_idx {
            Some(idx) => {
                let name = schema.intercept.as_deref().unwrap();
                let v = parse(&record[idx], name, rownum)?;
                if v != 1.0 {
                    return Err(DataError::BadIntercept {
                        column: name.to_string(),
                        row: rownum,
                    });
                }
                row.push(1.0);
            }
            None => row.push(1.0),
        }
        for (f, &idx) in feature_idx.iter().enumerate() {
            row.push(parse(&record[idx], &schema.features[f], rownum)?);
        }
        rows.push(row);
        outcomes.push(parse(&record[outcome_idx], &schema.outcome, rownum)?);
        raw_groups.push(record[group_idx].trim().to_string());
        for (s, &idx) in score_idx.iter().enumerate() {
            score_cols[s].push(parse(&record[idx], &schema.scores[s], rownum)?);
        }
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile);
    }

    // Resolve the group mapping.
    let mut distinct: Vec<&str> = Vec::new();
    for g in &raw_groups {
        if !distinct.contains(&g.as_str()) {
            distinct.push(g);
        }
    }
    let (label_r, label_b) = match &schema.group_labels {
        Some(map) => {
            if let Some(stranger) = distinct
                .iter()
                .find(|&&g| g != map.r.as_str() && g != map.b.as_str())
            {
                return Err(DataError::TooManyGroups(format!(
                    "unmapped label {stranger:?}"
                )));
            }
            (map.r.clone(), map.b.clone())
        }
        None => match distinct.len() {
            0 | 1 => return Err(DataError::SingleGroup),
            2 => {
                let mut sorted = [distinct[0], distinct[1]];
                sorted.sort_unstable();
                // Sorted order maps the first label to b, so files that
                // already say "b"/"r" keep their meaning.
                (sorted[1].to_string(), sorted[0].to_string())
            }
            _ => {
                let mut sorted: Vec<&str> = distinct.clone();
                sorted.sort_unstable();
                return Err(DataError::TooManyGroups(sorted.join(", ")));
            }
        },
    };
    let groups: Vec<Group> = raw_groups
        .iter()
        .map(|g| if *g == label_r { Group::R } else { Group::B })
        .collect();
    if !groups.contains(&Group::R) || !groups.contains(&Group::B) {
        return Err(DataError::SingleGroup);
    }

    let mut features = vec![schema
        .intercept
        .clone()
        .unwrap_or_else(|| "_intercept".to_string())];
    features.extend(schema.features.iter().cloned());
    let names = DatasetNames {
        group: schema.group.clone(),
        outcome: schema.outcome.clone(),
        features,
        group_labels: (label_r, label_b),
        intercept_in_file: schema.intercept.is_some(),
    };
    let scores: BTreeMap<String, Vec<f64>> = schema
        .scores
        .iter()
        .cloned()
        .zip(score_cols)
        .collect();
    Dataset::assemble(rows, outcomes, groups, scores, names)
}

/// Writes a dataset as CSV. Floats use Rust's shortest round-trip
/// formatting, so `load_csv(write_csv(ds))` reproduces every value bit for
/// bit.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    let names = &data.names;
    out.push_str(&names.group);
    out.push(',');
    out.push_str(&names.outcome);
    let feature_start = if names.intercept_in_file { 0 } else { 1 };
    for name in &names.features[feature_start..] {
        out.push(',');
        out.push_str(name);
    }
    for name in data.scores.keys() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..data.n {
        let label = match data.groups[i] {
            Group::R => &names.group_labels.0,
            Group::B => &names.group_labels.1,
        };
        out.push_str(label);
        out.push_str(&format!(",{}", data.outcomes[i]));
        for v in &data.row(i)[feature_start..] {
            out.push_str(&format!(",{v}"));
        }
        for col in data.scores.values() {
            out.push_str(&format!(",{}", col[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| DataError::Io(e.to_string()))
}

/// Schema matching what [`write_csv`] emits for this dataset, so generated
/// data can be reloaded without hand-writing a schema.
pub fn schema_for(data: &Dataset) -> Schema {
    let names = &data.names;
    Schema {
        outcome: names.outcome.clone(),
        group: names.group.clone(),
        features: names.features[1..].to_vec(),
        scores: data.scores.keys().cloned().collect(),
        group_labels: Some(GroupLabels {
            r: names.group_labels.0.clone(),
            b: names.group_labels.1.clone(),
        }),
        intercept: names.intercept_in_file.then(|| names.features[0].clone()),
    }
}
