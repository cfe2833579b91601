//! Headered CSV files, one per data block.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use pcma_core::DataSet;

use crate::error::{CliError, Result};

/// A numeric table with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

pub const INTERCEPT: &str = "(intercept)";

/// Format with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| CliError::input(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::input(path, "missing header line"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => CliError::Parse {
                file: path.into(),
                row,
                column: "-".into(),
                message: format!("expected {} fields, found {len}", names.len()),
            },
            _ => CliError::input(path, format!("row {row}: {e}")),
        })?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                file: path.into(),
                row,
                column: names[j].clone(),
                message: format!("non-numeric value {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    file: path.into(),
                    row,
                    column: names[j].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::input(path, "no data rows"));
    }
    Ok(Table {
        values: DMatrix::from_row_slice(rows, names.len(), &data),
        names,
    })
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let err = |e: csv::Error| CliError::Write {
        file: path.into(),
        source: e.into(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(err)?;
    writer.write_record(&table.names).map_err(err)?;
    for row in table.values.row_iter() {
        writer.write_record(row.iter().map(|&v| format_value(v))).map_err(err)?;
    }
    writer.flush().map_err(|e| CliError::Write {
        file: path.into(),
        source: e,
    })
}

/// Paths of the block files; `covariates` is optional.
#[derive(Debug, Clone)]
pub struct DataPaths {
    pub exposures: PathBuf,
    pub mediators: PathBuf,
    pub covariates: Option<PathBuf>,
    pub outcome: PathBuf,
}

/// A data set together with the column names of each block.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: DataSet,
    pub exposure_names: Vec<String>,
    pub mediator_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub outcome_name: String,
}

/// Read the four blocks. An intercept column is prepended to `W` unless its
/// first column is already all ones; without a `W` file the intercept is the
/// only covariate.
pub fn load_dataset(paths: &DataPaths) -> Result<LoadedData> {
    let x = read_table(&paths.exposures)?;
    let m = read_table(&paths.mediators)?;
    let y = read_table(&paths.outcome)?;
    let n = x.values.nrows();
    if y.values.ncols() != 1 {
        return Err(CliError::input(
            &paths.outcome,
            format!("expected a single outcome column, found {}", y.values.ncols()),
        ));
    }
    let check_rows = |t: &Table, p: &Path| {
        if t.values.nrows() == n {
            Ok(())
        } else {
            Err(CliError::input(
                p,
                format!(
                    "{} data rows, but {} has {n}",
                    t.values.nrows(),
                    paths.exposures.display()
                ),
            ))
        }
    };
    check_rows(&m, &paths.mediators)?;
    check_rows(&y, &paths.outcome)?;
    let (w, covariate_names) = match &paths.covariates {
        None => (DMatrix::from_element(n, 1, 1.0), vec![INTERCEPT.to_owned()]),
        Some(p) => {
            let t = read_table(p)?;
            check_rows(&t, p)?;
            if t.values.column(0).iter().all(|&v| v == 1.0) {
                (t.values, t.names)
            } else {
                let w = t.values.clone().insert_column(0, 1.0);
                let mut names = vec![INTERCEPT.to_owned()];
                names.extend(t.names);
                (w, names)
            }
        }
    };
    let data = DataSet::new(x.values, m.values, w, DVector::from_column_slice(y.values.as_slice()))?;
    Ok(LoadedData {
        data,
        exposure_names: x.names,
        mediator_names: m.names,
        covariate_names,
        outcome_name: y.names[0].clone(),
    })
}

/// Write a data set as four block files `X.csv`, `M.csv`, `W.csv`, `Y.csv`
/// under `dir`, with generated column names.
pub fn write_dataset(dir: &Path, data: &DataSet) -> Result<DataPaths> {
    let named = |prefix: &str, k: usize| (1..=k).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>();
    let paths = DataPaths {
        exposures: dir.join("X.csv"),
        mediators: dir.join("M.csv"),
        covariates: Some(dir.join("W.csv")),
        outcome: dir.join("Y.csv"),
    };
    write_table(&paths.exposures, &Table { names: named("x", data.p()), values: data.x.clone() })?;
    write_table(&paths.mediators, &Table { names: named("m", data.q()), values: data.m.clone() })?;
    let mut w_names = vec![INTERCEPT.to_owned()];
    w_names.extend(named("w", data.s() - 1));
    write_table(
        paths.covariates.as_deref().unwrap(),
        &Table { names: w_names, values: data.w.clone() },
    )?;
    write_table(
        &paths.outcome,
        &Table {
            names: vec!["y".into()],
            values: DMatrix::from_column_slice(data.n(), 1, data.y.as_slice()),
        },
    )?;
    Ok(paths)
}

/// Write `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| CliError::Write {
            file: p.into(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Write {
                    file: "<stdout>".into(),
                    source: e,
                })
        }
    }
}
