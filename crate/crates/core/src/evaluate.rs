//! Accept/reject decision for a candidate document pair.
//!
//! The pair is aligned, rejected outright if too many tokens are
//! unmatched, and otherwise accepted when the lengths of the paired
//! chunks are positively and significantly correlated.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::align::{align, chunk_pairs, AlignOp, Alignment};
use crate::linearize::{LinearDocument, Token};
use crate::stats::{CorrelationResult, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluatorConfig {
    /// Largest tolerated share of unmatched tokens.
    pub max_mismatch_ratio: f64,
    /// Correlations must be significant below this level.
    pub p_threshold: f64,
    /// Fewest chunk pairs a correlation is computed on.
    pub min_pairs: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig { max_mismatch_ratio: 0.20, p_threshold: 0.05, min_pairs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    MismatchRatio(f64),
    PThreshold(f64),
    MinPairs(usize),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::MismatchRatio(k) => write!(f, "mismatch threshold {k} is outside [0, 1]"),
            ConfigError::PThreshold(p) => write!(f, "significance level {p} is outside (0, 1)"),
            ConfigError::MinPairs(n) => write!(f, "minimum pair count {n} is below 3"),
        }
    }
}

impl core::error::Error for ConfigError {}

impl EvaluatorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.max_mismatch_ratio) {
            return Err(ConfigError::MismatchRatio(self.max_mismatch_ratio));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(ConfigError::PThreshold(self.p_threshold));
        }
        if self.min_pairs < 3 {
            return Err(ConfigError::MinPairs(self.min_pairs));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RejectReason {
    /// Too many unmatched tokens.
    Mismatch,
    /// Fewer unequal-length chunk pairs than required.
    InsufficientPairs,
    ZeroVariance,
    /// Not significant, or not positively correlated.
    NotSignificant,
    /// Both documents have no tokens.
    Empty,
    /// Accepted structurally, but a side is not in its expected language.
    Language,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::Mismatch => "mismatch",
            RejectReason::InsufficientPairs => "insufficient_pairs",
            RejectReason::ZeroVariance => "zero_variance",
            RejectReason::NotSignificant => "not_significant",
            RejectReason::Empty => "empty",
            RejectReason::Language => "language",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two aligned text chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub left_offset: usize,
    pub right_offset: usize,
    pub left_text: String,
    pub right_text: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub verdict: Verdict,
    pub reject_reason: Option<RejectReason>,
    pub mismatch_ratio: f64,
    pub mismatch_count: usize,
    pub total_tokens: usize,
    /// Absent when the pair was rejected before correlation.
    pub correlation: Option<CorrelationResult>,
    /// Number of unequal-length chunk pairs; absent when not computed.
    pub chunk_pairs: Option<usize>,
    /// Every aligned chunk pair; filled only on Accept.
    pub segments: Vec<Segment>,
}

impl EvaluationReport {
    pub fn is_accept(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    /// Turns an accepted report into a rejection, keeping its statistics.
    pub fn reject_with(&mut self, reason: RejectReason) {
        self.verdict = Verdict::Reject;
        self.reject_reason = Some(reason);
    }

    fn rejected(alignment: &Alignment, reason: RejectReason) -> Self {
        EvaluationReport {
            verdict: Verdict::Reject,
            reject_reason: Some(reason),
            mismatch_ratio: alignment.mismatch_ratio(),
            mismatch_count: alignment.mismatch_count,
            total_tokens: alignment.total_tokens,
            correlation: None,
            chunk_pairs: None,
            segments: Vec::new(),
        }
    }
}

/// Runs alignment, the mismatch threshold and the correlation test.
pub fn evaluate_pair(left: &LinearDocument, right: &LinearDocument, cfg: &EvaluatorConfig) -> EvaluationReport {
    let alignment = align(left, right);
    evaluate_alignment(&alignment, left, right, cfg)
}

pub fn evaluate_alignment(
    alignment: &Alignment,
    left: &LinearDocument,
    right: &LinearDocument,
    cfg: &EvaluatorConfig,
) -> EvaluationReport {
    if alignment.total_tokens == 0 {
        return EvaluationReport::rejected(alignment, RejectReason::Empty);
    }
    if alignment.mismatch_ratio() > cfg.max_mismatch_ratio {
        return EvaluationReport::rejected(alignment, RejectReason::Mismatch);
    }

    let pairs = chunk_pairs(alignment, left, right);
    let n = pairs.n();
    let with_count =
        |reason| EvaluationReport { chunk_pairs: Some(n), ..EvaluationReport::rejected(alignment, reason) };
    if n < cfg.min_pairs.max(3) {
        return with_count(RejectReason::InsufficientPairs);
    }
    let correlation = match CorrelationResult::compute(&pairs.lengths()) {
        Ok(c) => c,
        Err(StatsError::ZeroVariance) => return with_count(RejectReason::ZeroVariance),
        Err(StatsError::InsufficientData { .. }) => return with_count(RejectReason::InsufficientPairs),
    };

    let accept = correlation.p < cfg.p_threshold && correlation.r > 0.0;
    EvaluationReport {
        verdict: if accept { Verdict::Accept } else { Verdict::Reject },
        reject_reason: (!accept).then_some(RejectReason::NotSignificant),
        correlation: Some(correlation),
        segments: if accept { segments(alignment, left, right) } else { Vec::new() },
        ..with_count(RejectReason::NotSignificant)
    }
}

/// All chunk-to-chunk alignments, equal length or not, in order.
pub fn segments(alignment: &Alignment, left: &LinearDocument, right: &LinearDocument) -> Vec<Segment> {
    alignment
        .ops
        .iter()
        .filter_map(|op| {
            let (li, ri) = match *op {
                AlignOp::Match { left, right } | AlignOp::Pair { left, right } => (left, right),
                _ => return None,
            };
            match (&left.tokens[li], &right.tokens[ri]) {
                (Token::Chunk { text: lt, offset: lo, .. }, Token::Chunk { text: rt, offset: ro, .. }) => {
                    Some(Segment { left_offset: *lo, right_offset: *ro, left_text: lt.clone(), right_text: rt.clone() })
                }
                _ => None,
            }
        })
        .collect()
}
