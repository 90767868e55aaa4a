use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

/// CSV with `x_1..x_d` header; floats use shortest round-trip formatting.
pub fn points_csv(x: &DMatrix<f64>) -> String {
    let mut out = (1..=x.ncols()).map(|j| format!("x_{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in x.row_iter() {
        out.push_str(&row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Parses `x_1..x_d,y` rows. A first row that is not numeric is taken as a header.
pub fn read_observations(reader: impl Read, dims: usize) -> CliResult<(DMatrix<f64>, DVector<f64>)> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut n = 0;
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        if record.len() != dims + 1 {
            return Err(CliError::Usage(format!(
                "row {} has {} columns, expected {} inputs and one output",
                line + 1,
                record.len(),
                dims
            )));
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                values.extend(row);
                n += 1;
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(CliError::Usage(format!("row {}: {e}", line + 1))),
        }
    }
    if n == 0 {
        return Err(CliError::Usage("no observations in input".into()));
    }
    let all = DMatrix::from_row_slice(n, dims + 1, &values);
    Ok((all.columns(0, dims).into_owned(), all.column(dims).into_owned()))
}
