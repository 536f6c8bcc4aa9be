use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::data::Sample;
use crate::error::{ModalError, Result};

/// Which fields of each record become coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Columns {
    All,
    Indices(Vec<usize>),
}

impl Columns {
    /// Parses `"0,2"` style selectors; `"all"` or `"*"` selects every field.
    pub fn parse(spec: &str) -> Result<Columns> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("all") || spec == "*" {
            return Ok(Columns::All);
        }
        let idx = spec
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| ModalError::param(format!("bad column index '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if idx.is_empty() {
            return Err(ModalError::EmptySelection);
        }
        Ok(Columns::Indices(idx))
    }
}

/// Reads a comma-separated file of reals into a [`Sample`].
///
/// A first record whose selected fields do not all parse as numbers is taken
/// as a header and skipped. Every later record must be fully numeric and
/// finite; failures report the 1-based record number and 0-based field.
pub fn load_csv(path: impl AsRef<Path>, columns: &Columns) -> Result<Sample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ModalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_csv_reader(file, columns).map(|s| s.with_tag(path.display().to_string()))
}

pub fn load_csv_reader<R: Read>(reader: R, columns: &Columns) -> Result<Sample> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);

    let mut data = Vec::new();
    let mut dim = None;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ModalError::Csv {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let selected: Vec<usize> = match columns {
            Columns::All => (0..record.len()).collect(),
            Columns::Indices(v) => v.clone(),
        };
        if selected.is_empty() {
            return Err(ModalError::EmptySelection);
        }
        let mut values = Vec::with_capacity(selected.len());
        let mut failure = None;
        for &c in &selected {
            match record.get(c) {
                None => {
                    failure = Some((c, format!("missing field (record has {})", record.len())));
                    break;
                }
                Some(text) => match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    Ok(_) => {
                        failure = Some((c, format!("non-finite value '{text}'")));
                        break;
                    }
                    Err(_) => {
                        failure = Some((c, format!("non-numeric value '{text}'")));
                        break;
                    }
                },
            }
        }
        if let Some((column, message)) = failure {
            // header detection applies only to the first record with text in it
            let is_header_candidate = row == 1 && dim.is_none() && data.is_empty();
            let missing = message.starts_with("missing");
            if is_header_candidate && !missing {
                continue;
            }
            return Err(ModalError::Csv { row, column, message });
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(ModalError::Csv {
                    row,
                    column: values.len().min(d),
                    message: format!("expected {d} fields, found {}", values.len()),
                })
            }
            _ => {}
        }
        data.extend(values);
    }
    let dim = dim.ok_or(ModalError::EmptySample)?;
    Sample::from_flat(data, dim, "csv")
}
