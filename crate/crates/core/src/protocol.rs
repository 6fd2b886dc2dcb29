//! Newline-delimited JSON protocol between a host and an external predictor
//! process.
//!
//! ```text
//! host → {"type":"hello","dims":D}            ← {"type":"ready"}
//! host → {"type":"predict","id":n,"points":[[…],…]}
//!                                             ← {"type":"result","id":n,"values":[…]}
//! host → {"type":"bye"}                       (process exits 0)
//! ```
//!
//! A malformed or out-of-order request gets
//! `{"type":"error","id":…,"message":…}` and the session continues.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{query, Predictor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        dims: usize,
    },
    Ready,
    Predict {
        id: u64,
        points: Vec<Vec<f64>>,
    },
    Result {
        id: u64,
        values: Vec<f64>,
    },
    Bye,
    Error {
        id: Option<u64>,
        message: String,
    },
}

impl Message {
    /// One JSON line, without the trailing newline.
    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line.trim_end())?)
    }
}

pub fn write_message<W: Write>(out: &mut W, message: &Message) -> Result<()> {
    let line = message.to_line()?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// How a served session ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionEnd {
    Bye,
    Eof,
}

/// Answers protocol requests from `input` with `predictor` until `bye` or
/// end of input.
pub fn serve<P, R, W>(predictor: &P, input: R, mut output: W) -> Result<SessionEnd>
where
    P: Predictor + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut greeted = false;
    let mut last_id: Option<u64> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match Message::from_line(&line) {
            Err(err) => Message::Error {
                id: salvage_id(&line),
                message: format!("malformed request: {err}"),
            },
            Ok(Message::Hello { dims }) => {
                if dims == predictor.dims() {
                    greeted = true;
                    Message::Ready
                } else {
                    Message::Error {
                        id: None,
                        message: format!(
                            "dimension mismatch: predictor takes {} inputs, hello declared {dims}",
                            predictor.dims()
                        ),
                    }
                }
            }
            Ok(Message::Bye) => return Ok(SessionEnd::Bye),
            Ok(Message::Predict { id, .. }) if !greeted => Message::Error {
                id: Some(id),
                message: "handshake required".into(),
            },
            Ok(Message::Predict { id, .. }) if last_id.is_some_and(|last| id <= last) => Message::Error {
                id: Some(id),
                message: format!("request ids must increase; last was {}", last_id.unwrap_or(0)),
            },
            Ok(Message::Predict { id, points }) => {
                last_id = Some(id);
                match answer(predictor, &points) {
                    Ok(values) => Message::Result { id, values },
                    Err(err) => Message::Error {
                        id: Some(id),
                        message: err.to_string(),
                    },
                }
            }
            Ok(other) => Message::Error {
                id: None,
                message: format!("unexpected message from host: {other:?}"),
            },
        };
        write_message(&mut output, &reply)?;
    }
    Ok(SessionEnd::Eof)
}

fn answer<P: Predictor + ?Sized>(predictor: &P, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let dims = predictor.dims();
    if let Some(bad) = points.iter().find(|p| p.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: bad.len(),
        });
    }
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let batch = Array2::from_shape_vec((points.len(), dims), flat)
        .map_err(|e| Error::Protocol(e.to_string()))?;
    query(predictor, batch.view())
}

fn salvage_id(line: &str) -> Option<u64> {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()?
        .get("id")?
        .as_u64()
}
