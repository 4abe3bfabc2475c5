use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::kb::KbError;
use crate::lexicon::LexiconError;
use crate::ontology::OntologyError;

/// Errors surfaced by the pipeline stages that combine several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("every class failed during the enrichment sweep; first error: {0}")]
    SweepFailed(Box<Error>),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn format(path: &Path, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_owned(),
            reason: reason.into(),
        }
    }
}
