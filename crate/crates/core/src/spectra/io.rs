//! Spectrum CSV: header `x,signal`, one sample per row.

use std::io::{Read, Write};

use super::{AxisKind, Spectrum};
use crate::error::{Error, Result};

/// Reads a spectrum; the unit of `x` is supplied by the caller.
pub fn read_spectrum_csv<R: Read>(reader: R, axis: AxisKind) -> Result<Spectrum> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(xi), Some(si)) = (col("x"), col("signal")) else {
        return Err(Error::Format(format!(
            "spectrum CSV needs a header 'x,signal', found '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let mut x = Vec::new();
    let mut signal = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize, name: &str| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field.parse().map_err(|_| Error::Format(format!("row {}: cannot parse {name} value '{field}'", row + 2)))
        };
        x.push(parse(xi, "x")?);
        signal.push(parse(si, "signal")?);
    }
    if x.is_empty() {
        return Err(Error::Format("spectrum CSV has no data rows".into()));
    }
    Spectrum::new(axis, x, signal)
}

pub fn write_spectrum_csv<W: Write>(writer: W, spec: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "signal"])?;
    for (x, s) in spec.x().iter().zip(spec.signal()) {
        w.write_record([x.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
