//! Typed, validated containers for observations, predictive draws and
//! prediction tables, plus CSV / JSON ingestion.
//!
//! All tables are immutable once constructed. Validation happens in the
//! constructors, so holding a value of one of these types means its
//! invariants hold.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

/// Probability rows of a categorical table must sum to one within this.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Observed data: a nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSample {
    values: Vec<f64>,
    label: String,
}

impl ObservationSample {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        let label = label.into();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i + 1,
                column: label,
            });
        }
        Ok(Self { values, label })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An S x N matrix of predictive replicates, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    data: Vec<f64>,
    n_draws: usize,
    n_obs: usize,
    draw_ids: Vec<i64>,
}

impl PredictiveDraws {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (1..=rows.len() as i64).collect();
        Self::with_ids(rows, ids)
    }

    pub fn with_ids(rows: Vec<Vec<f64>>, draw_ids: Vec<i64>) -> Result<Self> {
        let n_draws = rows.len();
        if n_draws == 0 {
            return Err(Error::Empty);
        }
        if draw_ids.len() != n_draws {
            return Err(Error::InvalidArgument(format!(
                "{} draw ids for {} draws",
                draw_ids.len(),
                n_draws
            )));
        }
        let n_obs = rows[0].len();
        if n_obs == 0 {
            return Err(Error::Empty);
        }
        let mut data = Vec::with_capacity(n_draws * n_obs);
        for (s, row) in rows.into_iter().enumerate() {
            if row.len() != n_obs {
                return Err(Error::DimensionMismatch {
                    expected: n_obs,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: s + 1,
                    column: format!("#{}", j + 1),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            data,
            n_draws,
            n_obs,
            draw_ids,
        })
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn draw_ids(&self) -> &[i64] {
        &self.draw_ids
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.n_obs..(s + 1) * self.n_obs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_obs)
    }

    /// Interpret the draws as 0/1 outcomes.
    pub fn to_binary(&self) -> Result<Vec<Vec<u8>>> {
        self.rows()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .map(|&v| {
                        if v == 0.0 {
                            Ok(0)
                        } else if v == 1.0 {
                            Ok(1)
                        } else {
                            Err(Error::InvalidOutcome { row: s + 1, value: v })
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Check that draws and observations describe the same N.
pub fn validate_pairing(obs: &ObservationSample, draws: &PredictiveDraws) -> Result<()> {
    if draws.n_obs() != obs.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            found: draws.n_obs(),
        });
    }
    Ok(())
}

/// Predicted event probabilities and observed binary outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPredictionTable {
    predicted_prob: Vec<f64>,
    outcome: Vec<u8>,
    covariates: Vec<(String, Vec<f64>)>,
    predictive_outcome_draws: Option<Vec<Vec<u8>>>,
}

impl BinaryPredictionTable {
    pub fn new(predicted_prob: Vec<f64>, outcome: Vec<u8>) -> Result<Self> {
        if predicted_prob.is_empty() {
            return Err(Error::Empty);
        }
        if predicted_prob.len() != outcome.len() {
            return Err(Error::DimensionMismatch {
                expected: predicted_prob.len(),
                found: outcome.len(),
            });
        }
        for (i, &p) in predicted_prob.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: "predicted_prob".into(),
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange {
                    row: i + 1,
                    column: "predicted_prob".into(),
                    value: p,
                });
            }
        }
        if let Some(i) = outcome.iter().position(|&y| y > 1) {
            return Err(Error::InvalidOutcome {
                row: i + 1,
                value: outcome[i] as f64,
            });
        }
        Ok(Self {
            predicted_prob,
            outcome,
            covariates: Vec::new(),
            predictive_outcome_draws: None,
        })
    }

    pub fn with_covariate(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        self.covariates.push((name.into(), values));
        Ok(self)
    }

    /// Attach S x N simulated outcomes used for consistency bands.
    pub fn with_outcome_draws(mut self, draws: Vec<Vec<u8>>) -> Result<Self> {
        for row in &draws {
            if row.len() != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: row.len(),
                });
            }
            if let Some(&v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidOutcome {
                    row: 0,
                    value: v as f64,
                });
            }
        }
        self.predictive_outcome_draws = Some(draws);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.predicted_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted_prob.is_empty()
    }

    pub fn predicted_prob(&self) -> &[f64] {
        &self.predicted_prob
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn covariates(&self) -> &[(String, Vec<f64>)] {
        &self.covariates
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn outcome_draws(&self) -> Option<&[Vec<u8>]> {
        self.predictive_outcome_draws.as_deref()
    }
}

/// Predicted category probabilities (N x M) and observed categories 1..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalPredictionTable {
    prob_matrix: Vec<Vec<f64>>,
    outcome: Vec<usize>,
    ordered: bool,
    categories: Vec<String>,
}

impl CategoricalPredictionTable {
    pub fn new(prob_matrix: Vec<Vec<f64>>, outcome: Vec<usize>, ordered: bool) -> Result<Self> {
        let m = prob_matrix.first().map(Vec::len).unwrap_or(0);
        let categories = (1..=m).map(|k| k.to_string()).collect();
        Self::with_categories(prob_matrix, outcome, ordered, categories)
    }

    pub fn with_categories(
        prob_matrix: Vec<Vec<f64>>,
        outcome: Vec<usize>,
        ordered: bool,
        categories: Vec<String>,
    ) -> Result<Self> {
        if prob_matrix.is_empty() {
            return Err(Error::Empty);
        }
        if prob_matrix.len() != outcome.len() {
            return Err(Error::DimensionMismatch {
                expected: prob_matrix.len(),
                found: outcome.len(),
            });
        }
        let m = categories.len();
        for (i, row) in prob_matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: categories[j].clone(),
                    });
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ProbabilityOutOfRange {
                        row: i + 1,
                        column: categories[j].clone(),
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: i + 1, sum });
            }
        }
        if let Some(i) = outcome.iter().position(|&y| y == 0 || y > m) {
            return Err(Error::InvalidOutcome {
                row: i + 1,
                value: outcome[i] as f64,
            });
        }
        Ok(Self {
            prob_matrix,
            outcome,
            ordered,
            categories,
        })
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn prob_matrix(&self) -> &[Vec<f64>] {
        &self.prob_matrix
    }

    pub fn outcome(&self) -> &[usize] {
        &self.outcome
    }

    pub fn ordered(&self) -> bool {
        self.ordered
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }
}

/// Which columns to read from a file and how to type them.
#[derive(Debug, Clone, PartialEq)]
pub enum TableSchema {
    /// A single real column.
    Observations { column: String },
    /// Every column except an optional `draw` / `draw_id` / `.draw` column
    /// holds one observation index.
    Draws,
    Binary {
        pred: String,
        outcome: String,
        covariates: Vec<String>,
    },
    Categorical {
        prob_columns: Vec<String>,
        outcome: String,
        ordered: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Observations(ObservationSample),
    Draws(PredictiveDraws),
    Binary(BinaryPredictionTable),
    Categorical(CategoricalPredictionTable),
}

const DRAW_ID_COLUMNS: [&str; 3] = ["draw", "draw_id", ".draw"];

/// Header plus string cells; missing JSON fields and nulls become `None`.
#[derive(Debug)]
struct RawTable {
    headers: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| parse_cell(row[j].as_deref(), i + 1, name))
            .collect()
    }
}

fn parse_cell(cell: Option<&str>, row: usize, column: &str) -> Result<f64> {
    let text = match cell {
        Some(t) if !t.trim().is_empty() => t.trim(),
        _ => {
            return Err(Error::NonNumeric {
                row,
                column: column.to_string(),
                cell: String::new(),
            })
        }
    };
    let v: f64 = text.parse().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_string(),
        cell: text.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            row,
            column: column.to_string(),
        });
    }
    Ok(v)
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        raw_from_json(&bytes)
    } else {
        raw_from_csv(&bytes)
    }
}

fn raw_from_csv(bytes: &[u8]) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(|c| Some(c.to_string())).collect());
    }
    Ok(RawTable { headers, rows })
}

fn raw_from_json(bytes: &[u8]) -> Result<RawTable> {
    let value: Value = serde_json::from_slice(bytes)?;
    let records = value
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("JSON input must be an array of records".into()))?;
    let mut headers: Vec<String> = Vec::new();
    for rec in records {
        let obj = rec
            .as_object()
            .ok_or_else(|| Error::InvalidArgument("JSON records must be objects".into()))?;
        for key in obj.keys() {
            if !headers.contains(key) {
                headers.push(key.clone());
            }
        }
    }
    let rows = records
        .iter()
        .map(|rec| {
            let obj = rec.as_object().expect("checked above");
            headers
                .iter()
                .map(|h| match obj.get(h) {
                    None | Some(Value::Null) => None,
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(other) => Some(other.to_string()),
                })
                .collect()
        })
        .collect();
    Ok(RawTable { headers, rows })
}

/// Read and validate a table. CSV unless the extension is `.json`.
pub fn load_table(path: impl AsRef<Path>, schema: &TableSchema) -> Result<Table> {
    let raw = read_raw(path.as_ref())?;
    table_from_raw(&raw, schema)
}

fn table_from_raw(raw: &RawTable, schema: &TableSchema) -> Result<Table> {
    match schema {
        TableSchema::Observations { column } => {
            let values = raw.numeric_column(column)?;
            Ok(Table::Observations(ObservationSample::new(values, column.clone())?))
        }
        TableSchema::Draws => {
            let id_col = raw
                .headers
                .iter()
                .position(|h| DRAW_ID_COLUMNS.contains(&h.as_str()));
            let value_cols: Vec<&String> = raw
                .headers
                .iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != id_col)
                .map(|(_, h)| h)
                .collect();
            let columns: Vec<Vec<f64>> = value_cols
                .iter()
                .map(|h| raw.numeric_column(h))
                .collect::<Result<_>>()?;
            let n_draws = raw.rows.len();
            let rows = (0..n_draws)
                .map(|s| columns.iter().map(|c| c[s]).collect())
                .collect();
            let ids = match id_col {
                Some(j) => raw
                    .numeric_column(&raw.headers[j])?
                    .into_iter()
                    .map(|v| v as i64)
                    .collect(),
                None => (1..=n_draws as i64).collect(),
            };
            Ok(Table::Draws(PredictiveDraws::with_ids(rows, ids)?))
        }
        TableSchema::Binary {
            pred,
            outcome,
            covariates,
        } => {
            let p = raw.numeric_column(pred)?;
            for (i, &v) in p.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::ProbabilityOutOfRange {
                        row: i + 1,
                        column: pred.clone(),
                        value: v,
                    });
                }
            }
            let y = raw
                .numeric_column(outcome)?
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    if v == 0.0 {
                        Ok(0u8)
                    } else if v == 1.0 {
                        Ok(1u8)
                    } else {
                        Err(Error::InvalidOutcome { row: i + 1, value: v })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let mut table = BinaryPredictionTable::new(p, y)?;
            for c in covariates {
                table = table.with_covariate(c.clone(), raw.numeric_column(c)?)?;
            }
            Ok(Table::Binary(table))
        }
        TableSchema::Categorical {
            prob_columns,
            outcome,
            ordered,
        } => {
            let cols: Vec<Vec<f64>> = prob_columns
                .iter()
                .map(|c| raw.numeric_column(c))
                .collect::<Result<_>>()?;
            let n = raw.rows.len();
            let matrix = (0..n)
                .map(|i| cols.iter().map(|c| c[i]).collect())
                .collect();
            let y = raw
                .numeric_column(outcome)?
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(Error::InvalidOutcome { row: i + 1, value: v })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::Categorical(CategoricalPredictionTable::with_categories(
                matrix,
                y,
                *ordered,
                prob_columns.clone(),
            )?))
        }
    }
}

/// Shortest decimal representation that parses back to the same bits.
fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn write_csv(path: &Path, headers: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    crate::render::write_atomic(path, &bytes)
}

/// Write a table as CSV such that `load_table` with the matching schema
/// reproduces it exactly.
pub fn write_table(path: impl AsRef<Path>, table: &Table) -> Result<TableSchema> {
    let path = path.as_ref();
    match table {
        Table::Observations(obs) => {
            let label = if obs.label().is_empty() { "y" } else { obs.label() };
            let rows = obs.values().iter().map(|&v| vec![fmt_num(v)]).collect();
            write_csv(path, &[label.to_string()], rows)?;
            Ok(TableSchema::Observations {
                column: label.to_string(),
            })
        }
        Table::Draws(d) => {
            let mut headers = vec!["draw".to_string()];
            headers.extend((1..=d.n_obs()).map(|j| format!("y{j}")));
            let rows = d
                .rows()
                .zip(d.draw_ids())
                .map(|(row, id)| {
                    std::iter::once(id.to_string())
                        .chain(row.iter().map(|&v| fmt_num(v)))
                        .collect()
                })
                .collect();
            write_csv(path, &headers, rows)?;
            Ok(TableSchema::Draws)
        }
        Table::Binary(t) => {
            let mut headers = vec!["pred".to_string(), "outcome".to_string()];
            headers.extend(t.covariates().iter().map(|(n, _)| n.clone()));
            let rows = (0..t.len())
                .map(|i| {
                    let mut r = vec![fmt_num(t.predicted_prob()[i]), t.outcome()[i].to_string()];
                    r.extend(t.covariates().iter().map(|(_, v)| fmt_num(v[i])));
                    r
                })
                .collect();
            write_csv(path, &headers, rows)?;
            Ok(TableSchema::Binary {
                pred: "pred".into(),
                outcome: "outcome".into(),
                covariates: t.covariates().iter().map(|(n, _)| n.clone()).collect(),
            })
        }
        Table::Categorical(t) => {
            let mut headers = t.categories().to_vec();
            headers.push("outcome".into());
            let rows = t
                .prob_matrix()
                .iter()
                .zip(t.outcome())
                .map(|(row, y)| {
                    row.iter()
                        .map(|&v| fmt_num(v))
                        .chain(std::iter::once(y.to_string()))
                        .collect()
                })
                .collect();
            write_csv(path, &headers, rows)?;
            Ok(TableSchema::Categorical {
                prob_columns: t.categories().to_vec(),
                outcome: "outcome".into(),
                ordered: t.ordered(),
            })
        }
    }
}
