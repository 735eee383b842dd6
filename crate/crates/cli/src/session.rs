//! Persisted ask/tell sessions.

use serde::{Deserialize, Serialize};
use shapesearch::search::Learner;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: u32,
    pub learner: Learner,
}

impl SessionState {
    pub fn new(learner: Learner) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            learner,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let state: SessionState = serde_json::from_str(text)?;
        if state.schema_version != SCHEMA_VERSION {
            return Err(CliError::data(format!(
                "session schema version {} is not supported (expected {SCHEMA_VERSION})",
                state.schema_version
            )));
        }
        state.learner.config().validate()?;
        Ok(state)
    }
}

/// A session file held under an exclusive lock until dropped.
pub struct LockedSession {
    file: File,
    pub state: SessionState,
}

impl LockedSession {
    pub fn open(path: &Path) -> CliResult<Self> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .open(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        file.lock()?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let state = SessionState::from_json(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok(Self { file, state })
    }

    /// Create or overwrite `path` with `state`.
    pub fn create(path: &Path, state: SessionState) -> CliResult<Self> {
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        file.lock()?;
        let mut s = Self { file, state };
        s.save()?;
        Ok(s)
    }

    pub fn save(&mut self) -> CliResult<()> {
        let text = self.state.to_json()?;
        self.file.set_len(0)?;
        self.file.seek(SeekFrom::Start(0))?;
        self.file.write_all(text.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}
