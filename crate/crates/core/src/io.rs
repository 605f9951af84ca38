//! CSV reading and writing. Numbers are printed with 17 significant digits so
//! every value round-trips exactly.

use std::io::{Read, Write};

use crate::analysis::{TableReference, TableRow};
use crate::error::{Result, RspError};

/// Header of curve files without and with a standard-error column.
pub const CURVE_HEADER: [&str; 2] = ["t", "value"];
pub const CURVE_HEADER_SE: [&str; 3] = ["t", "value", "stderr"];
pub const TABLE_HEADER: [&str; 4] = ["imperfection", "reference", "lo", "hi"];

fn io_err(e: impl std::fmt::Display) -> RspError {
    RspError::Io(e.to_string())
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| RspError::Io(format!("line {line}: cannot parse {s:?} as a number")))
}

/// A curve as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveData {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

pub fn write_curve_csv<W: Write>(out: W, data: &CurveData) -> Result<()> {
    let n = data.times.len();
    if data.values.len() != n || data.stderr.as_ref().is_some_and(|s| s.len() != n) {
        return Err(RspError::Io("curve columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    match &data.stderr {
        None => w.write_record(CURVE_HEADER).map_err(io_err)?,
        Some(_) => w.write_record(CURVE_HEADER_SE).map_err(io_err)?,
    }
    for i in 0..n {
        let mut rec = vec![format_f64(data.times[i]), format_f64(data.values[i])];
        if let Some(se) = &data.stderr {
            rec.push(format_f64(se[i]));
        }
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<CurveData> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(io_err)?.clone();
    let with_se = if header.iter().eq(CURVE_HEADER) {
        false
    } else if header.iter().eq(CURVE_HEADER_SE) {
        true
    } else {
        return Err(RspError::Io(format!("unexpected curve header {header:?}")));
    };
    let mut data = CurveData {
        times: Vec::new(),
        values: Vec::new(),
        stderr: with_se.then(Vec::new),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let line = i + 2;
        data.times.push(parse_f64(&rec[0], line)?);
        data.values.push(parse_f64(&rec[1], line)?);
        if let Some(se) = &mut data.stderr {
            se.push(parse_f64(&rec[2], line)?);
        }
    }
    Ok(data)
}

/// A table row as stored on disk; empty intervals have no bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRecord {
    pub imperfection: String,
    pub reference: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl From<&TableRow> for TableRecord {
    fn from(row: &TableRow) -> Self {
        let reference = match row.reference {
            TableReference::FixedTime(t) => format!("t={}", format_f64(t)),
            TableReference::FixedLength(x) => format!("x={}", format_f64(x)),
        };
        Self {
            imperfection: row.kind.key().to_string(),
            reference,
            lo: row.interval.map(|i| i.0),
            hi: row.interval.map(|i| i.1),
        }
    }
}

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER).map_err(io_err)?;
    for row in rows {
        let rec = TableRecord::from(row);
        let bound = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        w.write_record([
            rec.imperfection,
            rec.reference,
            bound(rec.lo),
            bound(rec.hi),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_table_csv<R: Read>(input: R) -> Result<Vec<TableRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(io_err)?.clone();
    if !header.iter().eq(TABLE_HEADER) {
        return Err(RspError::Io(format!("unexpected table header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let line = i + 2;
        let bound = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, line).map(Some)
            }
        };
        rows.push(TableRecord {
            imperfection: rec[0].to_string(),
            reference: rec[1].to_string(),
            lo: bound(&rec[2])?,
            hi: bound(&rec[3])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{reproduce_tables, Imperfection};
    use crate::model::BenchmarkConvention;

    #[test]
    fn curve_round_trip_is_exact() {
        let data = CurveData {
            times: vec![0.0, 0.1, 1.0 / 3.0],
            values: vec![0.0, std::f64::consts::PI, -1e-300],
            stderr: Some(vec![0.0, 1e-17, 0.123_456_789_012_345_68]),
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value,stderr\n"));
        assert_eq!(read_curve_csv(buf.as_slice()).unwrap(), data);

        let plain = CurveData {
            stderr: None,
            ..data
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &plain).unwrap();
        assert!(buf.starts_with(b"t,value\n"));
        assert_eq!(read_curve_csv(buf.as_slice()).unwrap(), plain);
    }

    #[test]
    fn rejects_malformed_curves() {
        assert!(read_curve_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_curve_csv("t,value\n1,x\n".as_bytes()).is_err());
        let ragged = CurveData {
            times: vec![0.0],
            values: vec![],
            stderr: None,
        };
        assert!(write_curve_csv(Vec::new(), &ragged).is_err());
    }

    #[test]
    fn table_round_trip() {
        let rows = reproduce_tables(BenchmarkConvention::LambdaMax).unwrap();
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &rows).unwrap();
        let back = read_table_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (rec, row) in back.iter().zip(&rows) {
            assert_eq!(rec, &TableRecord::from(row));
        }
        assert_eq!(back[0].imperfection, Imperfection::ConstantStrength.key());

        let empty = TableRow {
            kind: Imperfection::Calibration,
            reference: TableReference::FixedTime(0.1),
            interval: None,
        };
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &[empty]).unwrap();
        let back = read_table_csv(buf.as_slice()).unwrap();
        assert_eq!((back[0].lo, back[0].hi), (None, None));
    }
}
