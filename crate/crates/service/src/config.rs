//! Pipeline settings stored in the data directory as `pipeline.json`.

use std::fs;
use std::path::{Path, PathBuf};

use contron::corpus::{load_corpus, Document};
use contron::dke::DkeConfig;
use contron::eval::Gold;
use contron::ie::ExtractOptions;
use contron::kb::wikidata::{WikidataClient, WikidataConfig, DEFAULT_ENDPOINT};
use contron::kb::{FixtureKb, KnowledgeBase};
use contron::lexicon::Lexicon;
use contron::oe::OeConfig;
use contron::ontology::Ontology;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const CONFIG_FILE: &str = "pipeline.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KbSource {
    /// A JSON file of entities, searched by label and alias.
    Fixture { path: PathBuf },
    Wikidata {
        #[serde(default = "default_endpoint")]
        endpoint: String,
        #[serde(default)]
        cache_dir: Option<PathBuf>,
        #[serde(default)]
        offline: bool,
    },
}

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.into()
}

/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub lexicon: PathBuf,
    /// Ontology the store starts from when the data directory is new.
    pub seed_ontology: PathBuf,
    pub kb: KbSource,
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default)]
    pub dke: DkeConfig,
    #[serde(default)]
    pub oe: OeConfig,
    #[serde(default)]
    pub extract: ExtractOptions,
}

/// Everything a pipeline run needs, loaded once at startup.
pub struct Pipeline {
    pub docs: Vec<Document>,
    pub lexicon: Lexicon,
    pub kb: Box<dyn KnowledgeBase>,
    pub seed: Ontology,
    pub gold: Option<Gold>,
    pub dke: DkeConfig,
    pub oe: OeConfig,
    pub extract: ExtractOptions,
}

impl PipelineConfig {
    pub fn read(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.lexicon);
        fix(&mut self.seed_ontology);
        if let Some(g) = &mut self.gold {
            fix(g);
        }
        match &mut self.kb {
            KbSource::Fixture { path } => fix(path),
            KbSource::Wikidata {
                cache_dir: Some(d), ..
            } => fix(d),
            KbSource::Wikidata { .. } => {}
        }
    }

    pub fn load(&self) -> Result<Pipeline, ServiceError> {
        let kb: Box<dyn KnowledgeBase> = match &self.kb {
            KbSource::Fixture { path } => Box::new(FixtureKb::load(path).map_err(contron::Error::from)?),
            KbSource::Wikidata {
                endpoint,
                cache_dir,
                offline,
            } => Box::new(WikidataClient::new(WikidataConfig {
                endpoint: endpoint.clone(),
                cache_dir: cache_dir.clone(),
                offline: *offline,
                ..WikidataConfig::default()
            })),
        };
        Ok(Pipeline {
            docs: load_corpus(&self.manifest, None).map_err(contron::Error::from)?,
            lexicon: Lexicon::load(&self.lexicon).map_err(contron::Error::from)?,
            kb,
            seed: Ontology::load(&self.seed_ontology).map_err(contron::Error::from)?,
            gold: self
                .gold
                .as_deref()
                .map(Gold::load)
                .transpose()
                .map_err(|e| ServiceError::Config(e.to_string()))?,
            dke: self.dke.clone(),
            oe: self.oe.clone(),
            extract: self.extract,
        })
    }
}
