//! CSV helpers shared by tables written from the library.

use std::io::Write;

use crate::error::Result;

/// A row that can be written as one CSV record.
pub trait CsvRow {
    fn header() -> Vec<&'static str>;
    fn record(&self) -> Vec<String>;
}

/// Format a float so that it parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Write `rows` with a header line; `extra` columns are appended to every row
/// with a constant value.
pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W, extra: &[(&str, String)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = R::header();
    header.extend(extra.iter().map(|(k, _)| *k));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = r.record();
        rec.extend(extra.iter().map(|(_, v)| v.clone()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
