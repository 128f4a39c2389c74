//! Mining parallel web pages: hub-based candidate generation, polite
//! retrieval into an on-disk cache, structural evaluation, optional
//! language filtering, and scoring against gold judgments.
//!
//! The algorithms live in `bitext-core`; this crate adds IO, file
//! formats and the `bitext` command.

pub mod cache;
pub mod decode;
pub mod fetch;
pub mod formats;
pub mod hubs;
pub mod pipeline;
pub mod render;
pub mod robots;

pub use bitext_core as core;
