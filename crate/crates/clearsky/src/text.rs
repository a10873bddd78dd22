//! Whitespace or comma separated columns with `#` comments.

use crate::error::{AppError, AppResult};

/// A data line: its 1-based number and its fields.
pub struct Row<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

/// Non-empty, non-comment lines split on whitespace and commas.
pub fn rows(text: &str) -> impl Iterator<Item = Row<'_>> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            return None;
        }
        let fields = body.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
        Some(Row { line: i + 1, fields })
    })
}

/// Parses field `col` (0-based) of a row as a finite number.
pub fn number(source: &str, row: &Row, col: usize) -> AppResult<f64> {
    let f = row
        .fields
        .get(col)
        .ok_or_else(|| AppError::parse(source, row.line, format!("missing column {}", col + 1)))?;
    let v: f64 = f.parse().map_err(|_| AppError::parse(source, row.line, format!("column {}: '{f}' is not a number", col + 1)))?;
    if !v.is_finite() {
        return Err(AppError::parse(source, row.line, format!("column {}: non-finite value", col + 1)));
    }
    Ok(v)
}

/// Numeric table with exactly `cols` columns per row.
pub fn table(source: &str, text: &str, cols: usize) -> AppResult<Vec<Vec<f64>>> {
    rows(text)
        .map(|r| {
            if r.fields.len() != cols {
                return Err(AppError::parse(source, r.line, format!("expected {cols} columns, found {}", r.fields.len())));
            }
            (0..cols).map(|c| number(source, &r, c)).collect()
        })
        .collect()
}

/// Checks that the first column increases strictly.
pub fn increasing(source: &str, text: &str, xs: &[f64]) -> AppResult<()> {
    let lines: Vec<usize> = rows(text).map(|r| r.line).collect();
    for k in 1..xs.len() {
        if xs[k] <= xs[k - 1] {
            return Err(AppError::parse(source, lines[k], format!("wavelength {} does not increase", xs[k])));
        }
    }
    Ok(())
}
