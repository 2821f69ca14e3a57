//! Wiring of knowledge source, embeddings, templates and learned rules.

use std::path::{Path, PathBuf};
use std::sync::{PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};

use thiserror::Error;

use crate::embeddings::{EmbeddingError, EmbeddingTable};
use crate::kbase::{KbError, KnowledgeBase};
use crate::knowledge::{
    default_registry, load_static_kb, KnowledgeError, KnowledgeSource, RelationRegistry, RemoteGenerator,
};
use crate::parser::{Command, ParseError};
use crate::prover::{CommandProofs, Prover, ProverError, ResolutionContext, SearchConfig, TemplateColor, TemplateSet};

/// Directory holding the bundled data files.
pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("loading embeddings: {0}")]
    Embedding(#[from] EmbeddingError),
}

impl EngineError {
    pub fn is_backend_unavailable(&self) -> bool {
        matches!(
            self,
            EngineError::Knowledge(KnowledgeError::BackendUnavailable { .. })
                | EngineError::Prover(ProverError::Knowledge(KnowledgeError::BackendUnavailable { .. }))
        )
    }
}

/// Where an engine gets its pieces from.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Static tuple file, or an `http(s)://` generation server.
    pub kb: String,
    pub embeddings: PathBuf,
    pub templates: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    /// Learned-rule journal; `None` keeps rules in memory.
    pub rules: Option<PathBuf>,
    pub search: SearchConfig,
}

impl Default for EngineOptions {
    fn default() -> Self {
        let data = data_dir();
        Self {
            kb: data.join("desk_store.tsv").display().to_string(),
            embeddings: data.join("embeddings.txt"),
            templates: None,
            relations: None,
            rules: None,
            search: SearchConfig::default(),
        }
    }
}

pub struct Engine {
    source: Box<dyn KnowledgeSource>,
    embeddings: EmbeddingTable,
    templates: TemplateSet,
    config: SearchConfig,
    kb: RwLock<KnowledgeBase>,
}

impl Engine {
    pub fn new(
        source: Box<dyn KnowledgeSource>,
        embeddings: EmbeddingTable,
        templates: TemplateSet,
        config: SearchConfig,
        kb: KnowledgeBase,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(Self {
            source,
            embeddings,
            templates,
            config,
            kb: RwLock::new(kb),
        })
    }

    pub fn open(options: &EngineOptions) -> Result<Self, EngineError> {
        let registry = match &options.relations {
            Some(path) => RelationRegistry::load(path)?,
            None => default_registry(),
        };
        let source: Box<dyn KnowledgeSource> = if is_url(&options.kb) {
            Box::new(RemoteGenerator::new(&options.kb, registry))
        } else {
            Box::new(load_static_kb(&options.kb, registry)?)
        };
        let templates = match &options.templates {
            Some(path) => TemplateSet::load(path)?,
            None => TemplateSet::default(),
        };
        let kb = match &options.rules {
            Some(path) => KnowledgeBase::load(path)?,
            None => KnowledgeBase::in_memory(),
        };
        Self::new(
            source,
            EmbeddingTable::load(&options.embeddings)?,
            templates,
            options.search,
            kb,
        )
    }

    pub fn source(&self) -> &dyn KnowledgeSource {
        self.source.as_ref()
    }

    pub fn embeddings(&self) -> &EmbeddingTable {
        &self.embeddings
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn config(&self) -> SearchConfig {
        self.config
    }

    pub fn prover(&self) -> Prover<'_> {
        Prover::new(self.source.as_ref(), &self.embeddings, self.config)
    }

    pub fn kb(&self) -> RwLockReadGuard<'_, KnowledgeBase> {
        self.kb.read().unwrap_or_else(PoisonError::into_inner)
    }

    pub fn kb_mut(&self) -> RwLockWriteGuard<'_, KnowledgeBase> {
        self.kb.write().unwrap_or_else(PoisonError::into_inner)
    }

    /// Swaps the learned rules, returning the previous set.
    pub fn replace_kb(&self, kb: KnowledgeBase) -> KnowledgeBase {
        std::mem::replace(&mut *self.kb_mut(), kb)
    }

    pub fn prove(&self, command: &Command, color: TemplateColor) -> Result<CommandProofs, EngineError> {
        let template = self.templates.get(color)?;
        let kb = self.kb();
        Ok(self
            .prover()
            .prove_command(template, command, &ResolutionContext::default(), &kb)?)
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}
