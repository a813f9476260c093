use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::normalize_answer;
use crate::spanlabel::best_span;

/// One reader query: how likely is `answer` given `question` and `passage`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub passage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub score: f64,
}

/// Reader-side scorer; higher is more likely. Scores must be finite and
/// depend only on the request content.
pub trait ReaderScorer: Send + Sync {
    /// Scores in request order.
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<f64>>;
}

/// Best fixed-length-window Rouge-L of the answer inside the passage.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl LexicalScorer {
    pub fn score(&self, answer: &str, passage: &str) -> f64 {
        let a = normalize_answer(answer);
        let p = normalize_answer(passage);
        best_span(&p, &a).map_or(0.0, |s| s.score)
    }
}

impl ReaderScorer for LexicalScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<f64>> {
        Ok(requests.iter().map(|r| self.score(&r.answer, &r.passage)).collect())
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Scorer backed by a child process (`sh -c <command>`) speaking JSON lines:
/// one [`ScoreRequest`] per line in, one [`ScoreResponse`] per line out, in any
/// order. A failed batch kills the child and every later call fails.
pub struct ExternalScorer {
    command: String,
    timeout: Duration,
    process: Mutex<Option<Process>>,
}

impl ExternalScorer {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::ScorerProcess(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalScorer {
            command: command.to_string(),
            timeout,
            process: Mutex::new(Some(Process {
                child,
                stdin,
                lines: rx,
            })),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn exchange(&self, p: &mut Process, requests: &[ScoreRequest]) -> Result<Vec<f64>> {
        let mut buf = Vec::new();
        for r in requests {
            serde_json::to_writer(&mut buf, r).expect("request serializes");
            buf.push(b'\n');
        }
        p.stdin
            .write_all(&buf)
            .and_then(|_| p.stdin.flush())
            .map_err(|e| Error::ScorerProcess(format!("writing requests: {e}")))?;

        let mut scores: Vec<Option<f64>> = vec![None; requests.len()];
        let position: std::collections::HashMap<&str, usize> =
            requests.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        let mut received = 0;
        while received < requests.len() {
            let line = match p.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(Error::ScorerProcess(format!("reading responses: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::ScorerProcess(format!(
                        "no response within {:?} ({received} of {} received)",
                        self.timeout,
                        requests.len()
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let status = p.child.wait().map(|s| s.to_string()).unwrap_or_else(|e| e.to_string());
                    return Err(Error::ScorerProcess(format!(
                        "process exited ({status}) after {received} of {} responses",
                        requests.len()
                    )));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let resp: ScoreResponse = serde_json::from_str(&line).map_err(|e| Error::Protocol {
                message: format!("unparseable response: {e}"),
                line: line.clone(),
            })?;
            let Some(&i) = position.get(resp.id.as_str()) else {
                return Err(Error::Protocol {
                    message: format!("unknown request id {:?}", resp.id),
                    line,
                });
            };
            if scores[i].is_some() {
                return Err(Error::Protocol {
                    message: format!("second response for request id {:?}", resp.id),
                    line,
                });
            }
            if !resp.score.is_finite() {
                return Err(Error::Protocol {
                    message: "score is not finite".into(),
                    line,
                });
            }
            scores[i] = Some(resp.score);
            received += 1;
        }
        Ok(scores.into_iter().map(|s| s.expect("all received")).collect())
    }
}

impl ReaderScorer for ExternalScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<f64>> {
        let mut guard = self.process.lock().unwrap_or_else(|e| e.into_inner());
        let Some(p) = guard.as_mut() else {
            return Err(Error::ScorerProcess(format!("{:?} is no longer running", self.command)));
        };
        let result = self.exchange(p, requests);
        if result.is_err() {
            if let Some(mut p) = guard.take() {
                let _ = p.child.kill();
                let _ = p.child.wait();
            }
        }
        result
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        let guard = self.process.get_mut().unwrap_or_else(|e| e.into_inner());
        if let Some(mut p) = guard.take() {
            drop(p.stdin);
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
    }
}

/// Answer requests from `input` with `scorer`, one flushed response per line.
/// Returns the number of requests served.
pub fn serve_scorer<R: BufRead, W: Write>(input: R, mut output: W, scorer: &dyn ReaderScorer) -> Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line.map_err(|e| Error::ScorerProcess(format!("reading requests: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: ScoreRequest = serde_json::from_str(&line).map_err(|e| Error::Protocol {
            message: format!("unparseable request: {e}"),
            line: line.clone(),
        })?;
        let score = scorer.score_batch(std::slice::from_ref(&req))?[0];
        let resp = ScoreResponse { id: req.id, score };
        serde_json::to_writer(&mut output, &resp).expect("response serializes");
        output
            .write_all(b"\n")
            .and_then(|_| output.flush())
            .map_err(|e| Error::ScorerProcess(format!("writing response: {e}")))?;
        served += 1;
    }
    Ok(served)
}
