//! JSON encoding of complex matrices: a row-major array of rows, each entry a
//! `[re, im]` pair.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn entry(v: &Value, i: usize, j: usize) -> Result<C64> {
    let bad = || Error::MalformedMatrix(format!("entry ({i}, {j}) is not a [re, im] pair of numbers"));
    let pair = v.as_array().ok_or_else(bad)?;
    if pair.len() != 2 {
        return Err(bad());
    }
    let re = pair[0].as_f64().ok_or_else(bad)?;
    let im = pair[1].as_f64().ok_or_else(bad)?;
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::MalformedMatrix("expected an array of rows".into()))?;
    if rows.is_empty() {
        return Err(Error::MalformedMatrix("matrix has no rows".into()));
    }
    let cols = rows[0]
        .as_array()
        .ok_or_else(|| Error::MalformedMatrix("row 0 is not an array".into()))?
        .len();
    let mut m = CMat::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::MalformedMatrix(format!("row {i} is not an array")))?;
        if row.len() != cols {
            return Err(Error::MalformedMatrix(format!(
                "row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = entry(x, i, j)?;
        }
    }
    Ok(m)
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::MalformedMatrix(e.to_string()))?;
    matrix_from_json(&v)
}

pub fn read_matrix(path: &Path) -> Result<CMat> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        Error::MalformedMatrix(msg) => Error::MalformedMatrix(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_matrix(path: &Path, m: &CMat) -> Result<()> {
    let text = serde_json::to_string(&matrix_to_json(m)).expect("matrix json is always serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = CMat::from_fn(3, 2, |i, j| C64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        let back = parse_matrix(&matrix_to_json(&m).to_string()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_malformed_input() {
        for text in ["{", "[]", "[[1, 2]]", "[[[1, 2]], [[1, 2], [3, 4]]]", "[[[1, \"x\"]]]", "[[[1]]]"] {
            assert!(matches!(parse_matrix(text), Err(Error::MalformedMatrix(_))), "{text}");
        }
    }
}
