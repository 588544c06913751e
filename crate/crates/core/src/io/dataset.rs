use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::likelihood::Observation;

/// Parsed current-status file. `z_names` and `w_names` keep the column
/// suffixes after `z_` / `w_`, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub z_names: Vec<String>,
    pub w_names: Vec<String>,
    pub observations: Vec<Observation>,
}

enum Column {
    V,
    Delta,
    Z(usize),
    W(usize),
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_dataset(file, &path.display().to_string())
}

/// Reads a headed CSV with columns `v`, `delta`, at least one `z_*` and any
/// number of `w_*`. The intercept is prepended to `z`.
pub fn parse_dataset<R: Read>(reader: R, source: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("{source}: line 1: {e}")))?
        .clone();

    let mut columns = Vec::with_capacity(headers.len());
    let (mut z_names, mut w_names) = (Vec::new(), Vec::new());
    let (mut has_v, mut has_delta) = (false, false);
    for (i, name) in headers.iter().enumerate() {
        let col = match name {
            "v" if !has_v => {
                has_v = true;
                Column::V
            }
            "delta" if !has_delta => {
                has_delta = true;
                Column::Delta
            }
            n if n.starts_with("z_") && n.len() > 2 => {
                z_names.push(n[2..].to_string());
                Column::Z(z_names.len() - 1)
            }
            n if n.starts_with("w_") && n.len() > 2 => {
                w_names.push(n[2..].to_string());
                Column::W(w_names.len() - 1)
            }
            n => {
                return Err(Error::Input(format!(
                    "{source}: line 1, column {}: unexpected column '{n}' \
                     (expected v, delta, z_<name> or w_<name>)",
                    i + 1
                )))
            }
        };
        columns.push(col);
    }
    for (ok, name) in [(has_v, "v"), (has_delta, "delta")] {
        if !ok {
            return Err(Error::Input(format!("{source}: line 1: missing column '{name}'")));
        }
    }
    if z_names.is_empty() {
        return Err(Error::Input(format!(
            "{source}: line 1: at least one z_<name> column is required"
        )));
    }

    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Input(format!("{source}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |col: usize, msg: String| {
            Error::Input(format!("{source}: line {line}, column {}: {msg}", col + 1))
        };
        let mut v = 0.0;
        let mut delta = false;
        let mut z = vec![0.0; z_names.len()];
        let mut w = vec![0.0; w_names.len()];
        for (i, (field, col)) in record.iter().zip(&columns).enumerate() {
            if field.is_empty() {
                return Err(at(i, "missing value".into()));
            }
            if let Column::Delta = col {
                delta = match field {
                    "0" => false,
                    "1" => true,
                    other => return Err(at(i, format!("delta must be 0 or 1, got '{other}'"))),
                };
                continue;
            }
            let x: f64 = field
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| at(i, format!("'{field}' is not a finite number")))?;
            match col {
                Column::V => v = x,
                Column::Z(k) => z[*k] = x,
                Column::W(k) => w[*k] = x,
                Column::Delta => unreachable!(),
            }
        }
        observations.push(Observation::new(v, delta, &z, w));
    }
    if observations.is_empty() {
        return Err(Error::Input(format!("{source}: no data rows")));
    }
    Ok(Dataset {
        z_names,
        w_names,
        observations,
    })
}

/// Writes `dataset` in the format accepted by [`parse_dataset`].
pub fn write_dataset<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["v".to_string(), "delta".to_string()];
    header.extend(dataset.z_names.iter().map(|n| format!("z_{n}")));
    header.extend(dataset.w_names.iter().map(|n| format!("w_{n}")));
    wtr.write_record(&header).map_err(csv_error)?;
    for o in &dataset.observations {
        let mut row = vec![super::num(o.v), if o.delta { "1" } else { "0" }.to_string()];
        row.extend(o.z[1..].iter().map(|&x| super::num(x)));
        row.extend(o.w.iter().map(|&x| super::num(x)));
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
