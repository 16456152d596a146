use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::graph::VertexId;

/// One attachment: the step index, the radius after it, and the vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub rad: u64,
    pub v: VertexId,
}

pub trait RecordSink {
    fn record(&mut self, rec: &StepRecord) -> io::Result<()>;
    fn flush(&mut self) -> io::Result<()>;
}

/// Writes one JSON object per line.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for JsonlSink<W> {
    fn record(&mut self, rec: &StepRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Keeps records in memory.
#[derive(Debug, Default)]
pub struct VecSink(pub Vec<StepRecord>);

impl RecordSink for VecSink {
    fn record(&mut self, rec: &StepRecord) -> io::Result<()> {
        self.0.push(rec.clone());
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Discards records.
#[derive(Debug, Default)]
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &StepRecord) -> io::Result<()> {
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
