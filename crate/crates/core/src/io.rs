//! CSV ingestion and emission of interval series.
//!
//! Row numbers in errors are 1-based file lines, the header being line 1.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::IntervalSeries;

/// Column layout of an input file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvSchema {
    /// `t,lower,upper`
    #[default]
    Bounds,
    /// `date,high,low` (extra columns such as open/close/volume are ignored)
    Ohlc,
}

impl std::str::FromStr for CsvSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounds" => Ok(CsvSchema::Bounds),
            "ohlc" => Ok(CsvSchema::Ohlc),
            other => Err(Error::InvalidArgument(format!("unknown csv schema: {other}"))),
        }
    }
}

impl CsvSchema {
    /// Header names of the (lower, upper) columns.
    fn bound_columns(self) -> (&'static str, &'static str) {
        match self {
            CsvSchema::Bounds => ("lower", "upper"),
            CsvSchema::Ohlc => ("low", "high"),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<IntervalSeries> {
    parse_csv(File::open(path)?, schema)
}

/// Parses an interval series from CSV text.
pub fn parse_csv<R: Read>(reader: R, schema: CsvSchema) -> Result<IntervalSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 1, reason: e.to_string() })?
        .clone();
    if headers.iter().all(str::is_empty) {
        return Err(Error::Parse { row: 1, reason: "missing header".into() });
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse { row: 1, reason: format!("missing column `{name}`") })
    };
    let (lower_name, upper_name) = schema.bound_columns();
    let (lo_col, hi_col) = (find(lower_name)?, find(upper_name)?);

    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, reason: e.to_string() })?;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record
                .get(col)
                .ok_or_else(|| Error::Parse { row, reason: format!("missing field `{name}`") })?;
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Parse { row, reason: format!("`{raw}` is not a number ({name})") })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, reason: format!("non-finite value in `{name}`") });
            }
            Ok(v)
        };
        let (l, u) = (field(lo_col, lower_name)?, field(hi_col, upper_name)?);
        if l > u {
            return Err(Error::BoundViolation { row, lower: l, upper: u });
        }
        lower.push(l);
        upper.push(u);
    }
    if lower.is_empty() {
        return Err(Error::Parse { row: 2, reason: "no data rows".into() });
    }
    IntervalSeries::new(lower, upper)
}

/// Formats a value with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,lower,upper` with `t` counting from 1.
pub fn write_csv<W: Write>(series: &IntervalSeries, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "t,lower,upper")?;
    for (t, (l, u)) in series.lower().iter().zip(series.upper()).enumerate() {
        writeln!(out, "{},{},{}", t + 1, format_f64(*l), format_f64(*u))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_csv(series: &IntervalSeries, path: impl AsRef<Path>) -> Result<()> {
    write_csv(series, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ohlc_row() {
        let s = parse_csv("date,high,low\n2012-01-03,1284.62,1258.86\n".as_bytes(), CsvSchema::Ohlc).unwrap();
        assert_eq!(s.lower(), &[1258.86]);
        assert_eq!(s.upper(), &[1284.62]);
    }

    #[test]
    fn yahoo_layout() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n\
                    2012-01-03,1258.86,1284.62,1258.86,1277.06,1277.06,3943710000\n\
                    2012-01-04,1277.03,1278.73,1268.10,1277.30,1277.30,3592580000\n";
        let s = parse_csv(text.as_bytes(), CsvSchema::Ohlc).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.lower()[1], 1268.10);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(parse_csv("".as_bytes(), CsvSchema::Ohlc), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("date,high,low\n".as_bytes(), CsvSchema::Ohlc), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_csv("t,lower,upper\n1,abc,2\n".as_bytes(), CsvSchema::Bounds),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            parse_csv("t,lower\n1,2\n".as_bytes(), CsvSchema::Bounds),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn low_above_high() {
        assert!(matches!(
            parse_csv("date,high,low\n2012-01-03,1.0,2.0\n".as_bytes(), CsvSchema::Ohlc),
            Err(Error::BoundViolation { row: 2, .. })
        ));
    }

    #[test]
    fn row_order_preserved() {
        let s = parse_csv("t,lower,upper\n1,3,4\n2,1,2\n3,5,6\n".as_bytes(), CsvSchema::Bounds).unwrap();
        assert_eq!(s.lower(), &[3.0, 1.0, 5.0]);
    }

    proptest! {
        #[test]
        fn write_then_parse_is_exact(pairs in prop::collection::vec((-1e9f64..1e9, 0f64..1e6), 1..50)) {
            let lower: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let upper: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
            let s = IntervalSeries::new(lower, upper).unwrap();
            let mut buf = Vec::new();
            write_csv(&s, &mut buf).unwrap();
            let back = parse_csv(&buf[..], CsvSchema::Bounds).unwrap();
            prop_assert_eq!(s, back);
        }
    }
}
