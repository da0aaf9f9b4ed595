use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

/// One trace record. Field order is part of the export format: golden-file
/// tests depend on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: u64,
    pub actor: String,
    pub event: String,
    pub detail: String,
}

/// Ordered record of everything that happened in a simulation run, exported as
/// line-delimited JSON.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
    /// False when the run hit the time cap before quiescence.
    pub quiescent: bool,
    pub end_time: u64,
}

impl SimTrace {
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("trace records are utf-8")
    }

    pub fn read_from(r: impl BufRead) -> io::Result<Vec<TraceRecord>> {
        let mut out = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord = serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            out.push(rec);
        }
        Ok(out)
    }
}
