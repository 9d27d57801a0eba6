//! Context orchestration for notebook-style generative workflows.
//!
//! Pages live in a [`store::DocumentStore`]. An operation request is
//! resolved into a [`resolver::ContextBundle`], rendered into a
//! [`prompt::MetaPrompt`] from one of the stored templates, and run as an
//! asynchronous job by the [`engine::Engine`] against a
//! [`provider::CompletionProvider`]. Each job keeps a
//! [`provenance::ProvenanceRecord`] of what grounded it.

pub mod api;
pub mod archive;
pub mod config;
pub mod engine;
pub mod fixtures;
pub mod ids;
pub mod prompt;
pub mod provenance;
pub mod provider;
pub mod resolver;
pub mod sections;
pub mod store;
