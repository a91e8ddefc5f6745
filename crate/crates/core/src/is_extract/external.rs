//! Client for an out-of-process sentence classifier speaking
//! newline-delimited JSON over TCP.
//!
//! Request: `{"request_id": 7, "sentences": ["...", ...]}` (1 to 64
//! sentences). Response: `{"request_id": 7, "labels": [...],
//! "token_counts": [...]}`, or `{"request_id": 7 | null, "error": "..."}`.
//! Responses may arrive in any order.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{IsError, Result, Segment};
use crate::ingest::Email;

pub const MAX_SENTENCES_PER_REQUEST: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalClient {
    /// `host:port`.
    pub endpoint: String,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalReply {
    pub labels: Vec<bool>,
    pub token_counts: Vec<usize>,
}

#[derive(Serialize)]
struct Request<'a> {
    request_id: u64,
    sentences: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    request_id: Option<u64>,
    #[serde(default)]
    labels: Option<Vec<bool>>,
    #[serde(default)]
    token_counts: Option<Vec<usize>>,
    #[serde(default)]
    error: Option<String>,
}

impl ExternalClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
        }
    }

    fn connect(&self) -> Result<TcpStream> {
        let mut last = None;
        for addr in self.endpoint.to_socket_addrs()? {
            match TcpStream::connect_timeout(&addr, self.timeout) {
                Ok(s) => {
                    s.set_read_timeout(Some(self.timeout))?;
                    s.set_write_timeout(Some(self.timeout))?;
                    return Ok(s);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(IsError::Transport(last.unwrap_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("{} resolved to no address", self.endpoint))
        })))
    }

    /// Send every batch, keeping at most `max_in_flight` requests
    /// outstanding, and return the replies in batch order.
    pub fn classify_batches(&self, batches: &[Vec<String>]) -> Result<Vec<ExternalReply>> {
        for (i, b) in batches.iter().enumerate() {
            if b.is_empty() || b.len() > MAX_SENTENCES_PER_REQUEST {
                return Err(IsError::Protocol(format!(
                    "batch {i} has {} sentences; allowed 1..={MAX_SENTENCES_PER_REQUEST}",
                    b.len()
                )));
            }
        }
        if batches.is_empty() {
            return Ok(Vec::new());
        }
        let stream = self.connect()?;
        let mut writer = stream.try_clone()?;
        let mut reader = BufReader::new(stream);
        let window = self.max_in_flight.max(1);
        let mut replies: Vec<Option<ExternalReply>> = vec![None; batches.len()];
        let (mut sent, mut received) = (0usize, 0usize);
        let mut line = String::new();
        while received < batches.len() {
            while sent < batches.len() && sent - received < window {
                let req = Request {
                    request_id: sent as u64,
                    sentences: &batches[sent],
                };
                let mut buf = serde_json::to_vec(&req).map_err(|e| IsError::Protocol(e.to_string()))?;
                buf.push(b'\n');
                writer.write_all(&buf)?;
                sent += 1;
            }
            writer.flush()?;
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(IsError::Transport(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "classifier closed the connection",
                )));
            }
            let resp: Response =
                serde_json::from_str(line.trim()).map_err(|e| IsError::Protocol(format!("bad response: {e}")))?;
            if let Some(err) = resp.error {
                return Err(IsError::Protocol(format!("request {:?}: {err}", resp.request_id)));
            }
            let id = resp
                .request_id
                .ok_or_else(|| IsError::Protocol("response without request_id".into()))?;
            let slot = replies
                .get_mut(id as usize)
                .filter(|s| s.is_none() && (id as usize) < sent)
                .ok_or_else(|| IsError::Protocol(format!("unexpected request_id {id}")))?;
            let expected = batches[id as usize].len();
            let labels = resp.labels.unwrap_or_default();
            let token_counts = resp.token_counts.unwrap_or_default();
            for got in [labels.len(), token_counts.len()] {
                if got != expected {
                    return Err(IsError::Mismatch {
                        request_id: id,
                        got,
                        expected,
                    });
                }
            }
            *slot = Some(ExternalReply { labels, token_counts });
            received += 1;
        }
        Ok(replies.into_iter().map(|r| r.expect("all replies received")).collect())
    }

    /// Predictions for each segment. Segments longer than the request limit
    /// are sent in consecutive chunks.
    pub fn classify_segments(&self, segments: &mut [Segment]) -> Result<()> {
        let mut batches = Vec::new();
        let mut owners = Vec::new();
        for (k, seg) in segments.iter().enumerate() {
            for chunk in seg.texts.chunks(MAX_SENTENCES_PER_REQUEST) {
                batches.push(chunk.to_vec());
                owners.push(k);
            }
        }
        let replies = self.classify_batches(&batches)?;
        for seg in segments.iter_mut() {
            seg.predicted = Some(Vec::with_capacity(seg.len()));
        }
        for (k, r) in owners.into_iter().zip(replies) {
            segments[k].predicted.as_mut().unwrap().extend(r.labels);
        }
        Ok(())
    }

    /// Replace sentence token counts with the service's own counts.
    pub fn retokenize(&self, emails: &mut [Email]) -> Result<()> {
        let mut batches = Vec::new();
        let mut owners = Vec::new();
        for (k, e) in emails.iter().enumerate() {
            for (c, chunk) in e.sentences.chunks(MAX_SENTENCES_PER_REQUEST).enumerate() {
                batches.push(chunk.iter().map(|s| s.text.clone()).collect());
                owners.push((k, c * MAX_SENTENCES_PER_REQUEST));
            }
        }
        let replies = self.classify_batches(&batches)?;
        for ((k, offset), r) in owners.into_iter().zip(replies) {
            for (s, n) in emails[k].sentences[offset..].iter_mut().zip(r.token_counts) {
                s.token_count = n;
            }
        }
        Ok(())
    }
}
