use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::protocol::{format_score, DistRequest, Request, RequestBody, Response, ResponseBody};
use super::{BridgeConfig, BridgeError, Transport, PROTOCOL_VERSION};
use crate::lm::{Distribution, LmError, NextTokenModel, Score};
use crate::vocab::{TokenId, Vocabulary};

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    child: Option<Child>,
}

/// A [`NextTokenModel`] backed by a bridge server.
///
/// One request is in flight at a time; concurrent codec runs should each
/// open their own client.
pub struct BridgeClient {
    conn: Mutex<Connection>,
    vocab_size: usize,
    min_score: String,
    max_candidates: usize,
    timeout: Duration,
    model_name: String,
}

impl BridgeClient {
    /// Opens the configured transport and performs the handshake.
    pub fn connect(config: &BridgeConfig, vocab: &Vocabulary) -> Result<Self, BridgeError> {
        let io_err = |e: std::io::Error| BridgeError::Io(e.to_string());
        match &config.transport {
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(io_err)?;
                stream.set_nodelay(true).map_err(io_err)?;
                let reader = stream.try_clone().map_err(io_err)?;
                Self::handshake(config, vocab, Box::new(reader), Box::new(stream), None)
            }
            Transport::Stdio { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(io_err)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Self::handshake(config, vocab, Box::new(stdout), Box::new(stdin), Some(child))
            }
        }
    }

    /// Handshake over caller-supplied streams; the transport field of
    /// `config` is ignored.
    pub fn from_streams(
        config: &BridgeConfig,
        vocab: &Vocabulary,
        reader: Box<dyn Read + Send>,
        writer: Box<dyn Write + Send>,
    ) -> Result<Self, BridgeError> {
        Self::handshake(config, vocab, reader, writer, None)
    }

    fn handshake(
        config: &BridgeConfig,
        vocab: &Vocabulary,
        reader: Box<dyn Read + Send>,
        writer: Box<dyn Write + Send>,
        child: Option<Child>,
    ) -> Result<Self, BridgeError> {
        if config.timeout.is_zero() {
            return Err(BridgeError::Config("timeout must be positive".into()));
        }
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut client = Self {
            conn: Mutex::new(Connection {
                writer,
                lines: rx,
                next_id: 1,
                child,
            }),
            vocab_size: vocab.len(),
            min_score: format_score(config.min_score),
            max_candidates: config.max_candidates,
            timeout: config.timeout,
            model_name: String::new(),
        };

        let reply = client.call(RequestBody::Hello {
            proto: PROTOCOL_VERSION,
        })?;
        let ResponseBody::Hello {
            vocab_size,
            fingerprint,
            model,
        } = reply
        else {
            return Err(BridgeError::Malformed("expected a hello reply".into()));
        };
        let local = vocab.fingerprint();
        if vocab_size != vocab.len() || fingerprint != local {
            return Err(BridgeError::VocabularyMismatch {
                server_size: vocab_size,
                server_fingerprint: fingerprint,
                local_size: vocab.len(),
                local_fingerprint: local,
            });
        }
        client.model_name = model;
        Ok(client)
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    fn call(&self, body: RequestBody) -> Result<ResponseBody, BridgeError> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let id = conn.next_id;
        conn.next_id += 1;

        let mut line = Request { id, body }.to_line();
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| BridgeError::Io(e.to_string()))?;

        let reply = match conn.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(BridgeError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => return Err(BridgeError::Timeout(id)),
            Err(RecvTimeoutError::Disconnected) => return Err(BridgeError::Closed),
        };
        let response: Response =
            serde_json::from_str(&reply).map_err(|e| BridgeError::Malformed(format!("{e}: {reply}")))?;
        if response.id != id {
            return Err(BridgeError::IdMismatch {
                expected: id,
                got: response.id,
            });
        }
        match response.body {
            ResponseBody::Error { error } => Err(BridgeError::Server(error)),
            body => Ok(body),
        }
    }

    /// Scores for every token at or above the configured `min_score`.
    pub fn bridge_distribution(&self, context: &[TokenId]) -> Result<Distribution, BridgeError> {
        let body = self.call(RequestBody::Dist(DistRequest {
            context: context.to_vec(),
            min_score: self.min_score.clone(),
            max_candidates: self.max_candidates,
        }))?;
        let ResponseBody::Dist { tokens } = body else {
            return Err(BridgeError::Malformed("expected a token list".into()));
        };
        if tokens.is_empty() {
            return Err(BridgeError::InsufficientCandidates);
        }
        let mut seen = std::collections::HashSet::with_capacity(tokens.len());
        let scores = tokens
            .into_iter()
            .map(|t| {
                if t.id as usize >= self.vocab_size {
                    return Err(BridgeError::Malformed(format!("token id {} out of range", t.id)));
                }
                if !seen.insert(t.id) {
                    return Err(BridgeError::Malformed(format!("token id {} repeated", t.id)));
                }
                let score = Score::from_decimal(&t.score)
                    .ok_or_else(|| BridgeError::Malformed(format!("bad score {:?}", t.score)))?;
                Ok((t.id, score))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Distribution::from_scores(scores)
            .map_err(|_| BridgeError::Malformed("scores exceed 128-bit precision".into()))
    }
}

impl NextTokenModel for BridgeClient {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(&self, context: &[TokenId]) -> Result<Distribution, LmError> {
        Ok(self.bridge_distribution(context)?)
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|e| e.into_inner());
        if let Some(child) = conn.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
