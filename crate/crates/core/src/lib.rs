//! Cause and effect span extraction: corpus tooling, BIO/IOBES tagging, a
//! from-scratch sequence tagger and span model, and exact/partial scoring.
//!
//! The guide in `book/` walks through each part; its code listings are
//! compiled as doctests of this crate.

pub mod corpus;
mod error;
pub mod eval;
pub mod hashing;
pub mod nnet;
pub mod pipeline;
pub mod spanmodel;
pub mod taggers;
pub mod tagging;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/tagging.md")]
    mod tagging {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
