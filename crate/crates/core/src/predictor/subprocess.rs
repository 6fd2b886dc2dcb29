use std::io::{BufRead, BufReader};
use std::process::{Child, ChildStdin, ChildStdout, Command, ExitStatus, Stdio};
use std::sync::Mutex;

use ndarray::ArrayView2;

use super::Predictor;
use crate::error::{Error, Result};
use crate::protocol::{write_message, Message};

/// Points per `predict` message; larger batches are split.
pub const DEFAULT_BATCH_LIMIT: usize = 1024;

struct Session {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
    closed: bool,
}

/// A predictor living in another process, reached over the line protocol in
/// [`crate::protocol`]. The command line is run through `sh -c`.
pub struct SubprocessPredictor {
    command: String,
    dims: usize,
    batch_limit: usize,
    session: Mutex<Session>,
}

impl SubprocessPredictor {
    pub fn spawn(command: &str, dims: usize) -> Result<Self> {
        Self::spawn_with_limit(command, dims, DEFAULT_BATCH_LIMIT)
    }

    pub fn spawn_with_limit(command: &str, dims: usize, batch_limit: usize) -> Result<Self> {
        let fail = |message: String| Error::External {
            command: command.to_string(),
            message,
        };
        if batch_limit == 0 {
            return Err(Error::InvalidArgument("batch limit must be positive".into()));
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail(format!("failed to start: {e}")))?;
        let stdin = child.stdin.take().ok_or_else(|| fail("no stdin".into()))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| fail("no stdout".into()))?);
        let predictor = Self {
            command: command.to_string(),
            dims,
            batch_limit,
            session: Mutex::new(Session {
                child,
                stdin,
                stdout,
                next_id: 1,
                closed: false,
            }),
        };
        {
            let mut session = predictor.lock();
            predictor.send(&mut session, &Message::Hello { dims })?;
            match predictor.receive(&mut session)? {
                Message::Ready => {}
                Message::Error { message, .. } => return Err(fail(format!("handshake refused: {message}"))),
                other => return Err(fail(format!("expected ready, got {other:?}"))),
            }
        }
        Ok(predictor)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Sends `bye` and waits for the process to exit.
    pub fn shutdown(self) -> Result<ExitStatus> {
        let mut session = self.lock();
        self.close(&mut session)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn close(&self, session: &mut Session) -> Result<ExitStatus> {
        if !session.closed {
            session.closed = true;
            // The process may already be gone; its exit status is what matters.
            let _ = write_message(&mut session.stdin, &Message::Bye);
        }
        session.child.wait().map_err(|e| self.failure(format!("wait failed: {e}")))
    }

    fn failure(&self, message: String) -> Error {
        Error::External {
            command: self.command.clone(),
            message,
        }
    }

    fn send(&self, session: &mut Session, message: &Message) -> Result<()> {
        write_message(&mut session.stdin, message)
            .map_err(|e| self.failure(format!("write failed: {e}")))
    }

    fn receive(&self, session: &mut Session) -> Result<Message> {
        let mut line = String::new();
        let read = session
            .stdout
            .read_line(&mut line)
            .map_err(|e| self.failure(format!("read failed: {e}")))?;
        if read == 0 {
            let status = session
                .child
                .wait()
                .map(|s| s.to_string())
                .unwrap_or_else(|_| "unknown status".into());
            session.closed = true;
            return Err(self.failure(format!("process ended without replying ({status})")));
        }
        Message::from_line(&line).map_err(|e| self.failure(format!("unreadable reply: {e}")))
    }

    fn predict_chunk(&self, session: &mut Session, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let id = session.next_id;
        session.next_id += 1;
        let points: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
        let expected = points.len();
        self.send(session, &Message::Predict { id, points })?;
        match self.receive(session)? {
            Message::Result { id: got, values } if got == id => {
                if values.len() != expected {
                    return Err(Error::OutputLength {
                        expected,
                        actual: values.len(),
                    });
                }
                Ok(values)
            }
            Message::Result { id: got, .. } => Err(Error::Protocol(format!(
                "reply id {got} does not match request id {id}"
            ))),
            Message::Error { message, .. } => Err(self.failure(message)),
            other => Err(Error::Protocol(format!("unexpected reply {other:?}"))),
        }
    }
}

impl Predictor for SubprocessPredictor {
    fn dims(&self) -> usize {
        self.dims
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut session = self.lock();
        if session.closed {
            return Err(self.failure("session already closed".into()));
        }
        let mut values = Vec::with_capacity(points.nrows());
        for chunk in points.axis_chunks_iter(ndarray::Axis(0), self.batch_limit) {
            values.extend(self.predict_chunk(&mut session, chunk)?);
        }
        Ok(values)
    }
}

impl Drop for SubprocessPredictor {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|e| e.into_inner());
        if !session.closed {
            session.closed = true;
            let _ = write_message(&mut session.stdin, &Message::Bye);
            let _ = session.child.wait();
        }
    }
}
