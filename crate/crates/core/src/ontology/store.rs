//! File-backed ontology store: a base snapshot, the current snapshot and an
//! append-only JSON-lines change log from which any version can be rebuilt.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{Mutation, Ontology, OntologyError};
use crate::io::{append_line, write_atomic};
use crate::Error;

const BASE_FILE: &str = "ontology.base.json";
const SNAPSHOT_FILE: &str = "ontology.json";
const LOG_FILE: &str = "changes.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    /// Version reached by applying this change.
    pub version: u64,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    pub mutation: Mutation,
}

#[derive(Debug)]
pub struct OntologyStore {
    dir: PathBuf,
    base: Ontology,
    current: Ontology,
    log: Vec<ChangeRecord>,
}

pub fn now_timestamp() -> String {
    let now: DateTime<Utc> = Utc::now();
    now.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl OntologyStore {
    /// Creates a store in `dir` seeded with `ontology` as its base version.
    pub fn create(dir: &Path, ontology: Ontology) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        ontology.validate()?;
        write_atomic(&dir.join(BASE_FILE), &ontology.to_json())?;
        write_atomic(&dir.join(SNAPSHOT_FILE), &ontology.to_json())?;
        write_atomic(&dir.join(LOG_FILE), "")?;
        Ok(OntologyStore {
            dir: dir.to_owned(),
            base: ontology.clone(),
            current: ontology,
            log: Vec::new(),
        })
    }

    /// Opens an existing store, replaying the log over the base snapshot.
    pub fn open(dir: &Path) -> Result<Self, Error> {
        let base = Ontology::load(&dir.join(BASE_FILE))?;
        let log_path = dir.join(LOG_FILE);
        let text = fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let mut log = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: ChangeRecord = serde_json::from_str(line)
                .map_err(|e| Error::format(&log_path, format!("line {}: {e}", i + 1)))?;
            log.push(rec);
        }
        let mut current = base.clone();
        for rec in &log {
            current.apply(&rec.mutation)?;
            if current.version != rec.version {
                return Err(Error::format(
                    &log_path,
                    format!("log version {} replays to {}", rec.version, current.version),
                ));
            }
        }
        Ok(OntologyStore {
            dir: dir.to_owned(),
            base,
            current,
            log,
        })
    }

    pub fn open_or_create(dir: &Path, seed: impl FnOnce() -> Result<Ontology, Error>) -> Result<Self, Error> {
        if dir.join(BASE_FILE).exists() {
            Self::open(dir)
        } else {
            Self::create(dir, seed()?)
        }
    }

    pub fn current(&self) -> &Ontology {
        &self.current
    }

    pub fn history(&self) -> &[ChangeRecord] {
        &self.log
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Applies and durably records one mutation; returns the new version.
    pub fn commit(&mut self, mutation: Mutation, actor: Option<&str>) -> Result<u64, Error> {
        let mut next = self.current.clone();
        next.apply(&mutation)?;
        let rec = ChangeRecord {
            version: next.version,
            timestamp: now_timestamp(),
            actor: actor.map(str::to_owned),
            mutation,
        };
        append_line(&self.dir.join(LOG_FILE), &serde_json::to_string(&rec)?)?;
        write_atomic(&self.dir.join(SNAPSHOT_FILE), &next.to_json())?;
        self.log.push(rec);
        self.current = next;
        Ok(self.current.version)
    }

    /// Commits mutations in order, stopping at the first failure.
    pub fn commit_all(&mut self, mutations: &[Mutation], actor: Option<&str>) -> Result<u64, Error> {
        for m in mutations {
            self.commit(m.clone(), actor)?;
        }
        Ok(self.current.version)
    }

    /// Rebuilds the ontology as it was at `version`.
    pub fn at_version(&self, version: u64) -> Result<Ontology, OntologyError> {
        if version < self.base.version || version > self.current.version {
            return Err(OntologyError::UnknownVersion(version));
        }
        let mut o = self.base.clone();
        for rec in self.log.iter().take_while(|r| r.version <= version) {
            o.apply(&rec.mutation)?;
        }
        Ok(o)
    }
}
