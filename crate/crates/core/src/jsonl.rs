//! Line-delimited JSON helpers used by every file format in the crate.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Parses every non-blank line of `reader` as `T`, handing `(line_no, record)`
/// to `visit`. Line numbers are 1-based.
pub(crate) fn for_each_record<T, R, F>(reader: R, origin: &Path, mut visit: F) -> Result<()>
where
    T: DeserializeOwned,
    R: BufRead,
    F: FnMut(usize, T) -> Result<()>,
{
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        visit(line_no, record)?;
    }
    Ok(())
}

pub(crate) fn write_record<W: Write, T: Serialize>(out: &mut W, record: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}
