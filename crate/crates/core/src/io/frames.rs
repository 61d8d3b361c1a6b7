use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{
    frame_column_names, AttributeMatrix, AROUSAL_COLUMN, AU_COUNT, EXPR_COLUMNS, FRAME_DIM, VALENCE_COLUMN,
};

const EXPR_SUM_TOLERANCE: f64 = 1e-9;

/// Reads a frame CSV (`frame,au_01..au_12,expr_01..expr_08,arousal,valence`).
pub fn parse_frames(path: &Path) -> Result<AttributeMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_frames(file, path)
}

/// Like [`parse_frames`] for any reader; `path` labels error messages.
/// Rows are counted as file lines, the header being line 1.
pub fn read_frames<R: Read>(reader: R, path: &Path) -> Result<AttributeMatrix> {
    let err = |row: usize, column: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let expected: Vec<String> = std::iter::once("frame".to_string()).chain(frame_column_names()).collect();
    let header = rdr.headers().map_err(|e| err(1, "header", e.to_string()))?.clone();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        let col = header
            .iter()
            .zip(&expected)
            .find(|(h, e)| h != e)
            .map_or("header".to_string(), |(h, _)| h.to_string());
        return Err(err(
            1,
            &col,
            format!("malformed header; expected `{}`", expected.join(",")),
        ));
    }
    let names = &expected[1..];
    let mut matrix = AttributeMatrix::default();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| err(row, "record", e.to_string()))?;
        if record.len() != expected.len() {
            return Err(err(row, "record", format!("{} fields, expected {}", record.len(), expected.len())));
        }
        record[0]
            .parse::<u64>()
            .map_err(|_| err(row, "frame", format!("`{}` is not a frame index", &record[0])))?;
        let mut v = [0.0; FRAME_DIM];
        for (k, cell) in record.iter().skip(1).enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| err(row, &names[k], format!("`{cell}` is not a number")))?;
            if !value.is_finite() {
                return Err(err(row, &names[k], format!("non-finite value {cell}")));
            }
            let (lo, hi) = if k == AROUSAL_COLUMN || k == VALENCE_COLUMN { (-1.0, 1.0) } else { (0.0, 1.0) };
            if !(lo..=hi).contains(&value) {
                return Err(err(row, &names[k], format!("value {value} outside [{lo}, {hi}]")));
            }
            v[k] = value;
        }
        let total: f64 = v[EXPR_COLUMNS].iter().sum();
        if (total - 1.0).abs() > EXPR_SUM_TOLERANCE {
            return Err(err(
                row,
                &format!("{}..{}", names[AU_COUNT], names[EXPR_COLUMNS.end - 1]),
                format!("expression probabilities sum to {total}, not 1"),
            ));
        }
        matrix.push(v);
    }
    if matrix.is_empty() {
        return Err(err(2, "frame", "file contains no frames".into()));
    }
    Ok(matrix)
}

/// Writes a frame CSV with shortest round-trip number formatting.
pub fn write_frames(path: &Path, frames: &AttributeMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str("frame,");
    out.push_str(&frame_column_names().join(","));
    out.push('\n');
    for (i, row) in frames.rows().iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
