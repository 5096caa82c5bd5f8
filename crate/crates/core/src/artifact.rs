//! Schema line shared by the CSV artifacts.

use std::io::{self, BufRead, Write};

use crate::SCHEMA_VERSION;

pub(crate) fn write_schema_line<W: Write>(out: &mut W) -> io::Result<()> {
    writeln!(out, "#schema_version,{SCHEMA_VERSION}")
}

/// Consume the first line and return the version it declares, if any.
pub(crate) fn read_schema_line<R: BufRead>(input: &mut R) -> io::Result<Option<u32>> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    Ok(first
        .trim()
        .strip_prefix("#schema_version,")
        .and_then(|v| v.parse().ok()))
}
