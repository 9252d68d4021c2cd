//! Named entity recognition over token embeddings with three interchangeable
//! heads: a linear-chain CRF, a BiLSTM feeding a CRF, and a two-layer softmax
//! classifier.

pub mod cli;
pub mod conll;
pub mod crf;
pub mod encoders;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod params;
pub mod synthetic;
pub mod tagscheme;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
