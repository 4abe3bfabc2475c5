//! Ontology enrichment and information extraction for technical-document
//! corpora.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`dke`] extracts domain concepts from a corpus by tf-idf topic selection
//!    and graph-based sense disambiguation over a WordNet-format [`lexicon`].
//! 2. [`oe`] enriches an [`ontology`] by matching each class against a
//!    knowledge base ([`kb`]) in a vector space built from domain documents.
//! 3. [`ie`] extracts (property, value) pairs from documents using the
//!    enriched class keywords.
//! 4. [`eval`] scores outcomes against gold annotations.

pub mod corpus;
pub mod dke;
pub mod error;
pub mod eval;
pub mod ie;
pub mod io;
pub mod kb;
pub mod lexicon;
pub mod oe;
pub mod ontology;

pub use error::Error;
