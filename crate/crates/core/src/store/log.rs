//! Event log: one `{"ts","kind","payload"}` JSON object per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{FeedbackRecord, TurnRecord};
use crate::document::DocOp;
use crate::domain::{DocumentId, FusionDocument, ModelId, ProviderResult, SessionId, TurnId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        id: SessionId,
        created_at: i64,
    },
    TurnStarted(Box<TurnRecord>),
    GenerationStarted {
        turn: TurnId,
        model: ModelId,
    },
    ResultRecorded {
        turn: TurnId,
        result: ProviderResult,
    },
    FeedbackRecorded(FeedbackRecord),
    DocumentStored {
        id: DocumentId,
        turn: TurnId,
        document: FusionDocument,
    },
    DocumentOp {
        id: DocumentId,
        op: DocOp,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub ts: i64,
    #[serde(flatten)]
    pub event: Event,
}

pub struct LogWriter {
    file: File,
}

impl LogWriter {
    /// Opens for appending. An unterminated last line is completed with a
    /// newline if it parses and cut off otherwise, so new lines start clean.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let bytes = std::fs::read(path)?;
        if !bytes.is_empty() && !bytes.ends_with(b"\n") {
            let start = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
            if serde_json::from_slice::<LogLine>(&bytes[start..]).is_ok() {
                file.write_all(b"\n")?;
            } else {
                file.set_len(start as u64)?;
            }
        }
        Ok(Self { file })
    }

    pub fn append(&mut self, line: &LogLine) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec(line).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.file.write_all(&bytes)?;
        self.file.flush()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("reading event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Reads every event. A final line without a newline that fails to parse is
/// treated as an interrupted write and dropped.
pub fn read_all(path: &Path) -> Result<Vec<LogLine>, ReadError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut lines = Vec::new();
    let mut buf = String::new();
    let mut number = 0;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        number += 1;
        let terminated = buf.ends_with('\n');
        let text = buf.trim_end();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str::<LogLine>(text) {
            Ok(line) => lines.push(line),
            Err(_) if !terminated => break,
            Err(e) => {
                return Err(ReadError::Corrupt {
                    line: number,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(lines)
}
