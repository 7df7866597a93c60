//! Aggression classification for social-media text.
//!
//! The crate is layered bottom-up: [`numerics`] (dense linear algebra and a
//! seeded RNG), [`preprocess`] (entity normalization, tokenization,
//! lemmatization), [`corpus`] (labels, datasets, vocabulary), [`model`] (the
//! attention LSTM with hand-written backpropagation), [`baseline`] (lexicon
//! features and a random forest), [`eval`] (weighted F1 and reports),
//! [`modelfile`] and [`pipeline`] (persistence and end-to-end training), and
//! [`cli`].

pub mod baseline;
pub mod cli;
pub mod corpus;
mod error;
pub mod eval;
pub mod model;
pub mod modelfile;
pub mod numerics;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};
