//! Structural detection of parallel web pages.
//!
//! Two HTML documents that are translations of each other tend to share
//! almost all of their markup, and the text between that markup has
//! lengths that are linearly related. This crate turns documents into
//! token streams of markup boundaries and text chunks ([`linearize`]),
//! aligns the streams ([`align`]), and decides whether the aligned chunk
//! lengths are significantly correlated ([`evaluate`], [`stats`]).
//!
//! It also carries the language-independent pieces of candidate
//! generation ([`candidates`]), a character n-gram language identifier
//! ([`langid`]) and precision/recall scoring ([`score`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, HTTP and
//! the command line live in the `bitext` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod align;
pub mod candidates;
pub mod entities;
mod entities_table;
pub mod evaluate;
pub mod langid;
pub mod lexer;
pub mod linearize;
pub mod score;
pub mod stats;

pub use align::{align, chunk_pairs, AlignOp, Alignment, ChunkPair, ChunkPairSet};
pub use candidates::{build_query, CandidatePair, GeneratorConfig};
pub use evaluate::{evaluate_pair, EvaluationReport, EvaluatorConfig, RejectReason, Segment, Verdict};
pub use linearize::{chunk_texts, linearize, LinearDocument, Token};
pub use stats::{p_value, pearson_r, CorrelationResult, StatsError};
