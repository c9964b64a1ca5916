//! Cross-lingual sentiment classification with structural correspondence
//! learning over one-to-many pivot translations.

pub mod artifact;
pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod pivots;
pub mod scl;
pub mod sgd;
pub mod synth;
pub mod translation;

pub use error::{Error, Result};
