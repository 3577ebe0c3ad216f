use std::path::Path;

use super::{SeriesDataset, SplitRatios};
use crate::array::Array;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub ratios: SplitRatios,
    pub lookback: usize,
    pub horizon: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            ratios: SplitRatios::STANDARD,
            lookback: 96,
            horizon: 24,
        }
    }
}

/// A parsed numeric table: the leading label column, when present, is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    /// `[rows, columns]`.
    pub values: Array,
    /// Whether a leading non-numeric column was detected and dropped.
    pub dropped_label: bool,
}

fn parse_cell(raw: &str, row: usize, column: usize) -> Result<f64> {
    let cell = raw.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse {
            row,
            column,
            message: format!("non-finite value `{cell}`"),
        }),
        Err(_) => Err(Error::Parse {
            row,
            column,
            message: format!("not a number: `{cell}`"),
        }),
    }
}

/// Parses CSV text. Rows are 1-based data rows (the header is row 0);
/// columns are 1-based file columns.
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let first = records
        .first()
        .ok_or_else(|| Error::Sizing("CSV has a header but no data rows".into()))?;
    let dropped_label = first.get(0).is_some_and(|c| c.trim().parse::<f64>().is_err());
    let skip = usize::from(dropped_label);
    let width = header.len() - skip;
    if width == 0 {
        return Err(Error::Config("CSV has no numeric columns".into()));
    }
    let mut data = Vec::with_capacity(records.len() * width);
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row: r + 1,
                column: rec.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for c in skip..header.len() {
            data.push(parse_cell(&rec[c], r + 1, c + 1)?);
        }
    }
    Ok(Table {
        names: header[skip..].to_vec(),
        values: Array::new([records.len(), width], data)?,
        dropped_label,
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn load_csv(path: &Path, options: LoadOptions) -> Result<SeriesDataset> {
    let table = read_table(path)?;
    SeriesDataset::new(
        table.values,
        table.names,
        options.ratios,
        options.lookback,
        options.horizon,
    )
}

/// Writes `[rows, columns]` values under `names`, optionally behind a leading
/// label column.
pub fn write_csv(
    path: &Path,
    names: &[String],
    values: &Array,
    labels: Option<(&str, &[String])>,
) -> Result<()> {
    let (rows, cols) = (values.shape()[0], values.shape()[1]);
    if names.len() != cols {
        return Err(Error::dim("write_csv names", values.shape(), &[names.len()]));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{other:?}")),
    })?;
    let mut header: Vec<&str> = Vec::with_capacity(cols + 1);
    if let Some((label, col)) = labels {
        if col.len() != rows {
            return Err(Error::dim("write_csv labels", values.shape(), &[col.len()]));
        }
        header.push(label);
    }
    header.extend(names.iter().map(String::as_str));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(cols + 1);
    for r in 0..rows {
        row.clear();
        if let Some((_, col)) = labels {
            row.push(col[r].clone());
        }
        row.extend(values.data()[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
