use std::fs::File;
use std::path::Path;

use signcorr::DataMatrix;

use crate::error::{CliError, CliResult};

/// Numeric CSV, one observation per row. Returns the data and the header
/// names when `header` is set.
pub fn read_matrix(path: &Path, header: bool) -> CliResult<(DataMatrix, Option<Vec<String>>)> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let names = if header {
        let h = rd
            .headers()
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let first_row = if header { 2 } else { 1 };
    let mut values = Vec::new();
    let mut p = 0usize;
    let mut n = 0usize;
    for (i, rec) in rd.records().enumerate() {
        let line = first_row + i;
        let rec = rec.map_err(|e| CliError::Input(format!("{}: line {line}: {e}", path.display())))?;
        if n == 0 {
            p = rec.len();
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}, column {}: cannot parse {field:?} as a number",
                    path.display(),
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}, column {}: value is not finite",
                    path.display(),
                    j + 1
                )));
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    if p < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least two columns, found {p}",
            path.display()
        )));
    }
    if n < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least two rows, found {n}",
            path.display()
        )));
    }
    let data = DataMatrix::new(n, p, values).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((data, names))
}
