//! Count data from flags or files.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Raw data as given: a count vector or a table of counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Data {
    Counts(Vec<u64>),
    Table(Vec<Vec<u64>>),
}

/// Data plus a prior strength read from an input file, if it held one.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub data: Data,
    pub file_s: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInput {
    counts: Option<Vec<u64>>,
    table: Option<Vec<Vec<u64>>>,
    s: Option<f64>,
}

pub fn parse_counts(text: &str) -> Result<Vec<u64>, CliError> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<u64>().map_err(|_| {
                if part.starts_with('-') {
                    CliError::Input(format!("negative count `{part}`"))
                } else {
                    CliError::Input(format!("`{part}` is not a nonnegative integer count"))
                }
            })
        })
        .collect()
}

pub fn parse_table(text: &str) -> Result<Vec<Vec<u64>>, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("table must be a JSON array of rows of nonnegative integers: {e}")))
}

fn read_csv(path: &Path) -> Result<Vec<Vec<u64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .filter(|field| !field.is_empty())
            .map(|field| {
                field.parse::<u64>().map_err(|_| {
                    CliError::Input(format!(
                        "{}: row {}: `{field}` is not a nonnegative integer count",
                        path.display(),
                        line + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn read_file(path: &Path) -> Result<Loaded, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("csv") => Ok(Loaded { data: Data::Table(read_csv(path)?), file_s: None }),
        Some("json") => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let parsed: JsonInput =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let data = match (parsed.counts, parsed.table) {
                (Some(c), None) => Data::Counts(c),
                (None, Some(t)) => Data::Table(t),
                _ => {
                    return Err(CliError::Input(format!(
                        "{}: expected exactly one of \"counts\" or \"table\"",
                        path.display()
                    )))
                }
            };
            Ok(Loaded { data, file_s: parsed.s })
        }
        _ => Err(CliError::Input(format!("{}: unsupported input file, expected .csv or .json", path.display()))),
    }
}

impl Data {
    /// A count vector: either given as one, or a table with a single row or
    /// a single column.
    pub fn into_counts(self) -> Result<Vec<u64>, CliError> {
        match self {
            Data::Counts(c) => Ok(c),
            Data::Table(rows) if rows.len() == 1 => Ok(rows.into_iter().next().unwrap_or_default()),
            Data::Table(rows) if !rows.is_empty() && rows.iter().all(|r| r.len() == 1) => {
                Ok(rows.into_iter().flatten().collect())
            }
            Data::Table(_) => {
                Err(CliError::Input("expected a count vector (one row or one column), got a table".into()))
            }
        }
    }

    pub fn into_table(self) -> Result<Vec<Vec<u64>>, CliError> {
        match self {
            Data::Table(t) => Ok(t),
            Data::Counts(_) => Err(CliError::Input("expected a table of counts".into())),
        }
    }
}
