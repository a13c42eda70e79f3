//! Point files: headerless CSV rows of Cartesian coordinates written with 17
//! significant digits, so values survive a round trip exactly.

use std::io::{Read, Write};

use crate::error::{config, Result};

/// Formats `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_rows<W: Write, R: AsRef<[f64]>>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header line followed by records; fields are written verbatim.
pub fn write_table<W: Write>(out: W, header: &[&str], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows of numbers; every row must have the same length.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| crate::Error::Parse(format!("row {}: {f:?}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return config(format!("row {} has {} columns, expected {}", i + 1, row.len(), first.len()));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![vec![0.1, -1.0 / 3.0, 1e-300], vec![f64::MAX, 2.0f64.sqrt(), -0.0]];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_rows("1,2\n3\n".as_bytes()).is_err());
        assert!(read_rows("1,x\n".as_bytes()).is_err());
    }
}
