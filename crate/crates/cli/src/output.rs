use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use dla_core::{Graph, VertexId};
use serde::Serialize;

use crate::error::CliError;

/// Writes `value` as pretty JSON to `path`.
pub fn write_json<T: Serialize>(path: &str, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Replaces `path` by `contents` through a temporary file and a rename.
pub fn write_atomic(path: &str, contents: &[u8]) -> Result<(), CliError> {
    let tmp = format!("{path}.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, Path::new(path))?;
    Ok(())
}

/// Parses `root` or comma-separated coordinates (letters of the reduced word
/// on trees).
pub fn parse_vertex(g: &Graph, s: &str) -> Result<VertexId, CliError> {
    let s = s.trim();
    let v = if s == "root" {
        g.root().clone()
    } else {
        let coords: Result<Vec<i32>, _> = s.split(',').map(|c| c.trim().parse::<i32>()).collect();
        VertexId::from(coords.map_err(|_| CliError::Config(format!("invalid vertex {s:?}")))?)
    };
    g.check(&v).map_err(|_| CliError::Config(format!("vertex {s:?} is not in {}", g.family())))?;
    Ok(v)
}

/// Parses a `;`-separated vertex list.
pub fn parse_set(g: &Graph, s: &str) -> Result<Vec<VertexId>, CliError> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(|p| parse_vertex(g, p)).collect()
}
