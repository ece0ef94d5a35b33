//! Line-delimited JSON helpers shared by the file formats.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

pub fn write_file<T: Serialize>(path: &Path, values: &[T]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in values {
        write_line(&mut out, v)?;
    }
    out.flush()
}

/// Reads every non-blank line; a malformed line is an `InvalidData` error
/// naming the line number.
pub fn read_file<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    read_from(BufReader::new(File::open(path)?))
}

pub fn read_from<T: DeserializeOwned, R: BufRead>(reader: R) -> io::Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}
