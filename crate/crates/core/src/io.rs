//! CSV input and output. Floats are written with 17 significant digits.

use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::radial::{ProfileRow, ScalarSource};

/// `{:.16e}`: enough digits to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn numeric_record(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|s| s.trim().parse::<f64>().ok()).collect()
}

fn read_numeric_rows<R: Read>(reader: R, columns: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|s| s.is_empty()) {
            continue;
        }
        match numeric_record(&record) {
            Some(values) if values.len() == columns => rows.push(values),
            Some(values) => {
                return Err(Error::Parse(format!(
                    "{what}: row {} has {} column(s), expected {columns}",
                    line + 1,
                    values.len()
                )))
            }
            // a non-numeric first row is a header
            None if line == 0 && rows.is_empty() => continue,
            None => return Err(Error::Parse(format!("{what}: row {} is not numeric", line + 1))),
        }
    }
    Ok(rows)
}

/// One point per row, `n` columns; an optional header row is skipped.
pub fn read_points_csv<R: Read>(reader: R, n: usize) -> Result<Vec<DVector<f64>>> {
    Ok(read_numeric_rows(reader, n, "point set")?
        .into_iter()
        .map(DVector::from_vec)
        .collect())
}

/// Two columns `r, R(r)`, linearly interpolated.
pub fn read_scalar_table<R: Read>(reader: R) -> Result<ScalarSource> {
    let rows = read_numeric_rows(reader, 2, "scalar-curvature table")?;
    let (r, v) = rows.into_iter().map(|row| (row[0], row[1])).unzip();
    ScalarSource::table(r, v)
}

pub fn write_table<W: Write>(writer: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile_csv<W: Write>(writer: W, rows: &[ProfileRow]) -> Result<()> {
    write_table(
        writer,
        &["r", "h", "dh", "d2h", "y"],
        rows.iter().map(|p| vec![p.r, p.h, p.dh, p.d2h, p.y]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn points_with_header_and_comments() {
        let text = "x,y,z\n# note\n1, 2, 3\n4,5,6\n";
        let pts = read_points_csv(text.as_bytes(), 3).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1][2], 6.0);
        assert!(read_points_csv("1,2\n".as_bytes(), 3).is_err());
        assert!(read_points_csv("1,2,3\na,b,c\n".as_bytes(), 3).is_err());
    }

    #[test]
    fn scalar_table_interpolates() {
        let src = read_scalar_table("r,R\n1,0\n3,2\n".as_bytes()).unwrap();
        assert_eq!(src.eval(2.0), 1.0);
    }

    #[test]
    fn table_output() {
        let mut buf = Vec::new();
        write_table(&mut buf, &["a", "b"], vec![vec![1.0, 0.5]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }
}
