//! In-process bridge servers for tests and offline replays.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};

use super::protocol::{
    format_score, DistRequest, Request, RequestBody, Response, ResponseBody, TokenScore,
};
use super::PROTOCOL_VERSION;
use crate::lm::{NextTokenModel, Score};
use crate::vocab::Vocabulary;

/// Anything that answers one protocol line with one protocol line.
pub trait Responder: Send + Sync + 'static {
    fn respond(&self, line: &str) -> String;

    /// Answers requests until the reader hits EOF.
    fn serve(&self, reader: impl BufRead, mut writer: impl Write) -> io::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(writer, "{}", self.respond(&line))?;
            writer.flush()?;
        }
        Ok(())
    }

    /// Serves every connection on its own thread, on an ephemeral localhost port.
    fn spawn_tcp(self: Arc<Self>) -> io::Result<(SocketAddr, JoinHandle<()>)>
    where
        Self: Sized,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let _ = stream.set_nodelay(true);
                let server = Arc::clone(&self);
                thread::spawn(move || {
                    if let Ok(reader) = stream.try_clone() {
                        let _ = server.serve(BufReader::new(reader), stream);
                    }
                });
            }
        });
        Ok((addr, handle))
    }

    /// Serves over an anonymous pipe pair; returns the client's `(reader, writer)`.
    fn spawn_pipe(self: Arc<Self>) -> io::Result<(io::PipeReader, io::PipeWriter)>
    where
        Self: Sized,
    {
        let (client_reader, server_writer) = io::pipe()?;
        let (server_reader, client_writer) = io::pipe()?;
        thread::spawn(move || {
            let _ = self.serve(BufReader::new(server_reader), server_writer);
        });
        Ok((client_reader, client_writer))
    }
}

/// Serves an in-process model over the wire protocol, optionally recording
/// every distribution it hands out.
pub struct MockServer<M> {
    model: M,
    vocab_size: usize,
    fingerprint: String,
    name: String,
    max_context: Option<usize>,
    recording: Option<Mutex<Recording>>,
}

impl<M: NextTokenModel + Send + Sync + 'static> MockServer<M> {
    pub fn new(model: M, vocab: &Vocabulary, name: impl Into<String>) -> Self {
        Self {
            model,
            vocab_size: vocab.len(),
            fingerprint: vocab.fingerprint(),
            name: name.into(),
            max_context: None,
            recording: None,
        }
    }

    /// Rejects contexts longer than `n` with "context too long".
    pub fn with_max_context(mut self, n: usize) -> Self {
        self.max_context = Some(n);
        self
    }

    pub fn recording(mut self) -> Self {
        self.recording = Some(Mutex::new(Recording {
            vocab_size: self.vocab_size,
            fingerprint: self.fingerprint.clone(),
            model: self.name.clone(),
            entries: Vec::new(),
        }));
        self
    }

    /// Snapshot of everything served so far.
    pub fn take_recording(&self) -> Option<Recording> {
        self.recording
            .as_ref()
            .map(|r| r.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    fn dist(&self, req: &DistRequest) -> Result<Vec<TokenScore>, String> {
        if self.max_context.is_some_and(|n| req.context.len() > n) {
            return Err("context too long".into());
        }
        let min = Score::from_decimal(&req.min_score).ok_or("bad min_score")?;
        let dist = self.model.distribution(&req.context).map_err(|e| e.to_string())?;
        let denom = dist.denominator();
        let mut ranked: Vec<(u32, Score)> = dist
            .entries()
            .iter()
            .map(|&(id, n)| (id, Score::new(n, denom)))
            .filter(|(_, s)| *s > Score::ZERO)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        // every response carries at least the top token
        let above = ranked.iter().take_while(|(_, s)| *s >= min).count().max(1);
        let mut kept = ranked;
        kept.truncate(above.min(req.max_candidates.max(1)));
        Ok(kept
            .into_iter()
            .map(|(id, s)| TokenScore {
                id,
                score: format_score(s),
            })
            .collect())
    }
}

impl<M: NextTokenModel + Send + Sync + 'static> Responder for MockServer<M> {
    fn respond(&self, line: &str) -> String {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Response::error(request_id(line), format!("bad request: {e}")).to_line(),
        };
        let body = match req.body {
            RequestBody::Hello { proto } if proto == PROTOCOL_VERSION => ResponseBody::Hello {
                vocab_size: self.vocab_size,
                fingerprint: self.fingerprint.clone(),
                model: self.name.clone(),
            },
            RequestBody::Hello { proto } => ResponseBody::Error {
                error: format!("unsupported protocol {proto}"),
            },
            RequestBody::Dist(d) => match self.dist(&d) {
                Ok(tokens) => {
                    if let Some(rec) = &self.recording {
                        rec.lock()
                            .unwrap_or_else(|e| e.into_inner())
                            .entries
                            .push(RecordedDist {
                                request: d,
                                tokens: tokens.clone(),
                            });
                    }
                    ResponseBody::Dist { tokens }
                }
                Err(error) => ResponseBody::Error { error },
            },
        };
        Response { id: req.id, body }.to_line()
    }
}

fn request_id(line: &str) -> u64 {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id")?.as_u64())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedDist {
    pub request: DistRequest,
    pub tokens: Vec<TokenScore>,
}

/// Server identity plus every `dist` exchange, replayable by [`ReplayServer`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub vocab_size: usize,
    pub fingerprint: String,
    pub model: String,
    pub entries: Vec<RecordedDist>,
}

impl Recording {
    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Answers from a [`Recording`]; unrecorded requests get a server error.
pub struct ReplayServer {
    recording: Recording,
    index: HashMap<DistRequest, Vec<TokenScore>>,
}

impl ReplayServer {
    pub fn new(recording: Recording) -> Self {
        let index = recording
            .entries
            .iter()
            .map(|e| (e.request.clone(), e.tokens.clone()))
            .collect();
        Self { recording, index }
    }
}

impl Responder for ReplayServer {
    fn respond(&self, line: &str) -> String {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Response::error(request_id(line), format!("bad request: {e}")).to_line(),
        };
        let body = match req.body {
            RequestBody::Hello { .. } => ResponseBody::Hello {
                vocab_size: self.recording.vocab_size,
                fingerprint: self.recording.fingerprint.clone(),
                model: self.recording.model.clone(),
            },
            RequestBody::Dist(d) => match self.index.get(&d) {
                Some(tokens) => ResponseBody::Dist {
                    tokens: tokens.clone(),
                },
                None => ResponseBody::Error {
                    error: "request not in recording".into(),
                },
            },
        };
        Response { id: req.id, body }.to_line()
    }
}
