//! Append-only JSON-lines session logs.
//!
//! Each line is one [`StoreEvent`]: a sequence number starting at 1, the
//! session id, the session event and a SHA-256 checksum over the rest of the
//! line (the JSON value without the `checksum` key, keys sorted). A damaged
//! line in the middle of a log is a hard error; an unterminated damaged line
//! at the end is what a crash mid-write leaves behind, and is cut off.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use aiq_core::{Session, SessionError, SessionEvent};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("corrupt event at seq {seq}: {reason}")]
    Corrupt { seq: u64, reason: String },
    #[error("session {session_id}: {source}")]
    Replay {
        session_id: String,
        source: SessionError,
    },
    #[error("session {0} already exists")]
    Exists(String),
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("invalid session id {0:?}")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreEvent {
    pub seq: u64,
    pub session_id: String,
    #[serde(flatten)]
    pub event: SessionEvent,
}

fn checksum(value: &Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn encode(event: &StoreEvent) -> String {
    let mut value = serde_json::to_value(event).expect("store events serialize");
    let sum = checksum(&value);
    value
        .as_object_mut()
        .expect("store events are objects")
        .insert("checksum".into(), Value::String(sum));
    value.to_string()
}

fn decode(line: &str) -> Result<StoreEvent, String> {
    let mut value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object_mut().ok_or("not a JSON object")?;
    let Some(Value::String(stated)) = obj.remove("checksum") else {
        return Err("missing checksum".into());
    };
    if checksum(&value) != stated {
        return Err("checksum mismatch".into());
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

/// Result of reading a log from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogContents {
    pub events: Vec<StoreEvent>,
    /// Byte length of the valid prefix when a damaged tail was found.
    pub truncated_at: Option<u64>,
}

impl LogContents {
    pub fn session_events(&self) -> Vec<SessionEvent> {
        self.events.iter().map(|e| e.event.clone()).collect()
    }
}

/// Parses a log without modifying it.
pub fn read_log(path: &Path) -> Result<LogContents, StoreError> {
    let bytes = fs::read(path)?;
    let mut events: Vec<StoreEvent> = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let seq = events.len() as u64 + 1;
        let (line, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(n) => (&bytes[offset..offset + n], true),
            None => (&bytes[offset..], false),
        };
        let parsed = std::str::from_utf8(line)
            .map_err(|e| e.to_string())
            .and_then(decode)
            .and_then(|e| check_sequence(&events, e, seq));
        match parsed {
            Ok(event) => events.push(event),
            Err(reason) if !terminated => {
                log::warn!(
                    "{}: dropping damaged trailing line at seq {seq}: {reason}",
                    path.display()
                );
                return Ok(LogContents {
                    events,
                    truncated_at: Some(offset as u64),
                });
            }
            Err(reason) => return Err(StoreError::Corrupt { seq, reason }),
        }
        offset += line.len() + usize::from(terminated);
    }
    Ok(LogContents {
        events,
        truncated_at: None,
    })
}

fn check_sequence(prior: &[StoreEvent], event: StoreEvent, seq: u64) -> Result<StoreEvent, String> {
    if event.seq != seq {
        return Err(format!("expected seq {seq}, found {}", event.seq));
    }
    if let Some(first) = prior.first() {
        if first.session_id != event.session_id {
            return Err(format!("event belongs to session {}", event.session_id));
        }
    }
    Ok(event)
}

/// Reconstructs the session recorded in a log.
pub fn replay(contents: &LogContents) -> Result<Session, StoreError> {
    let session_id = contents
        .events
        .first()
        .map(|e| e.session_id.clone())
        .unwrap_or_default();
    Session::replay(contents.events.iter().map(|e| &e.event))
        .map_err(|source| StoreError::Replay { session_id, source })
}

/// Open append handle on one session's log.
#[derive(Debug)]
pub struct SessionLog {
    session_id: String,
    next_seq: u64,
    file: File,
}

impl SessionLog {
    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    /// Sequence number the next appended event will get.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Appends `events` in one write and flushes them to disk.
    pub fn append(&mut self, events: &[SessionEvent]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for (i, event) in events.iter().enumerate() {
            let record = StoreEvent {
                seq: self.next_seq + i as u64,
                session_id: self.session_id.clone(),
                event: event.clone(),
            };
            buf.push_str(&encode(&record));
            buf.push('\n');
        }
        self.file.write_all(buf.as_bytes())?;
        self.file.sync_data()?;
        self.next_seq += events.len() as u64;
        Ok(())
    }
}

/// Directory of session logs, one `<session_id>.jsonl` file per session.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.')
        && !id.starts_with('.')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(session_id) {
            return Err(StoreError::InvalidId(session_id.to_string()));
        }
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }

    /// Starts a new log with its `started` event.
    pub fn create(&self, started: &SessionEvent) -> Result<SessionLog, StoreError> {
        let SessionEvent::Started { session_id, .. } = started else {
            return Err(StoreError::Replay {
                session_id: String::new(),
                source: SessionError::MissingStart,
            });
        };
        let path = self.path_for(session_id)?;
        let file = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                io::ErrorKind::AlreadyExists => StoreError::Exists(session_id.clone()),
                _ => StoreError::Io(e),
            })?;
        let mut log = SessionLog {
            session_id: session_id.clone(),
            next_seq: 1,
            file,
        };
        log.append(std::slice::from_ref(started))?;
        Ok(log)
    }

    /// Replays a session without opening it for writing.
    pub fn load(&self, session_id: &str) -> Result<Session, StoreError> {
        replay(&self.read(session_id)?)
    }

    pub fn read(&self, session_id: &str) -> Result<LogContents, StoreError> {
        let path = self.path_for(session_id)?;
        if !path.exists() {
            return Err(StoreError::NotFound(session_id.to_string()));
        }
        read_log(&path)
    }

    /// Replays a session and opens its log for appending. A damaged tail is
    /// cut off the file first.
    pub fn open_session(&self, session_id: &str) -> Result<(Session, SessionLog), StoreError> {
        let path = self.path_for(session_id)?;
        if !path.exists() {
            return Err(StoreError::NotFound(session_id.to_string()));
        }
        let contents = read_log(&path)?;
        let session = replay(&contents)?;
        let file = OpenOptions::new().append(true).open(&path)?;
        if let Some(len) = contents.truncated_at {
            file.set_len(len)?;
        }
        let log = SessionLog {
            session_id: session_id.to_string(),
            next_seq: contents.events.len() as u64 + 1,
            file,
        };
        Ok((session, log))
    }

    /// Ids of all stored sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load_all(&self) -> Result<Vec<Session>, StoreError> {
        self.list()?.iter().map(|id| self.load(id)).collect()
    }
}
