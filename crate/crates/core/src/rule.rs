//! Decision rules: deterministic maps from a covariate row to a binary
//! decision. Candidates produced by the selection rules and the status quo
//! under audit are both represented by this one type.

use crate::data::{DataError, Dataset};
use crate::stats::empirical_quantile;

/// How a score model's coefficients were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMethod {
    Ols,
    Lasso,
}

impl ScoreMethod {
    fn label(self) -> &'static str {
        match self {
            ScoreMethod::Ols => "ols",
            ScoreMethod::Lasso => "lasso",
        }
    }
}

/// A fitted linear score model `score(x) = coefficients . x` together with
/// the decision threshold attached when the model is turned into a rule
/// (zero until then).
#[derive(Debug, Clone, PartialEq)]
pub struct FittedScorer {
    pub coefficients: Vec<f64>,
    pub method: ScoreMethod,
    pub threshold: f64,
}

impl FittedScorer {
    pub fn score_row(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn score_all(&self, data: &Dataset) -> Result<Vec<f64>, DataError> {
        if self.coefficients.len() != data.dim() {
            return Err(DataError::DimensionMismatch {
                expected: self.coefficients.len(),
                got: data.dim(),
            });
        }
        Ok((0..data.n()).map(|i| self.score_row(data.row(i))).collect())
    }
}

/// A deterministic binary decision rule.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule {
    /// Decides 1 iff `beta . x >= 0` (ties at zero decide 1).
    LinearClassifier { beta: Vec<f64> },
    /// Decides 1 iff the fitted score is strictly above the threshold.
    ScoreThreshold { scorer: FittedScorer, threshold: f64 },
    /// Decides 1 iff a named score column is strictly above the threshold.
    ColumnThreshold { column: String, threshold: f64 },
    /// Ignores the row and always returns `decision` (0 or 1).
    Constant { decision: u8 },
}

impl DecisionRule {
    /// Evaluates the rule on every row, returning decisions as 0.0/1.0.
    pub fn evaluate(&self, data: &Dataset) -> Result<Vec<f64>, DataError> {
        match self {
            DecisionRule::LinearClassifier { beta } => {
                if beta.len() != data.dim() {
                    return Err(DataError::DimensionMismatch {
                        expected: beta.len(),
                        got: data.dim(),
                    });
                }
                Ok((0..data.n())
                    .map(|i| {
                        let s: f64 = beta.iter().zip(data.row(i)).map(|(b, v)| b * v).sum();
                        if s >= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            DecisionRule::ScoreThreshold { scorer, threshold } => {
                let scores = scorer.score_all(data)?;
                Ok(scores
                    .into_iter()
                    .map(|s| if s > *threshold { 1.0 } else { 0.0 })
                    .collect())
            }
            DecisionRule::ColumnThreshold { column, threshold } => {
                let col = data
                    .score(column)
                    .ok_or_else(|| DataError::MissingScoreColumn(column.clone()))?;
                Ok(col
                    .iter()
                    .map(|&s| if s > *threshold { 1.0 } else { 0.0 })
                    .collect())
            }
            DecisionRule::Constant { decision } => {
                Ok(vec![f64::from((*decision).min(1)); data.n()])
            }
        }
    }

    /// Short human-readable description for reports.
    pub fn describe(&self) -> String {
        match self {
            DecisionRule::LinearClassifier { beta } => {
                format!("linear classifier ({} coefficients)", beta.len())
            }
            DecisionRule::ScoreThreshold { scorer, threshold } => {
                format!("{} score > {:.6}", scorer.method.label(), threshold)
            }
            DecisionRule::ColumnThreshold { column, threshold } => {
                format!("column {column} > {threshold:.6}")
            }
            DecisionRule::Constant { decision } => format!("constant {}", (*decision).min(1)),
        }
    }
}

/// Builds the status-quo rule "select everyone whose `column` score is
/// strictly above its empirical `tau` quantile" (e.g. `tau = 0.97` keeps
/// roughly the top 3%).
pub fn column_threshold_at_quantile(
    data: &Dataset,
    column: &str,
    tau: f64,
) -> Result<DecisionRule, DataError> {
    let col = data
        .score(column)
        .ok_or_else(|| DataError::MissingScoreColumn(column.to_string()))?;
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DecisionRule::ColumnThreshold {
        column: column.to_string(),
        threshold: empirical_quantile(&sorted, tau),
    })
}
