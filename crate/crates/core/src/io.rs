//! Binary array format: one line of JSON header, then little-endian f64
//! pairs (re, im) for each complex sample.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{input, Result};
use crate::field::{Field, Layout};
use crate::grid::SpacetimeGrid;

pub fn write_binary<W: Write>(mut w: W, header: &Value, data: &[Complex64]) -> Result<()> {
    let line = serde_json::to_string(header)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * data.len());
    for v in data {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(r: R) -> Result<(Value, Vec<Complex64>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Value = serde_json::from_str(line.trim_end())?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return input("binary payload is not a whole number of complex f64 samples");
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((header, data))
}

pub fn field_header(f: &Field) -> Value {
    let mut h = serde_json::to_value(f.grid()).expect("grid serializes");
    let obj = h.as_object_mut().unwrap();
    match f.layout() {
        Layout::Spacetime => {
            obj.insert("layout".into(), "spacetime".into());
        }
        Layout::Slice { t } => {
            obj.insert("layout".into(), "slice".into());
            obj.insert("t".into(), t.into());
        }
    }
    h
}

pub fn save_field(path: &Path, f: &Field) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_binary(std::io::BufWriter::new(file), &field_header(f), f.values())
}

pub fn load_field(path: &Path) -> Result<Field> {
    let (h, data) = read_binary(std::fs::File::open(path)?)?;
    let grid: SpacetimeGrid = serde_json::from_value(h.clone())?;
    let layout = match h.get("layout").and_then(Value::as_str) {
        Some("slice") => Layout::Slice {
            t: h.get("t").and_then(Value::as_f64).unwrap_or(0.0),
        },
        _ => Layout::Spacetime,
    };
    Field::from_values(&grid, layout, data)
}
