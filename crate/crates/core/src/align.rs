//! Minimum-difference alignment of two token sequences.
//!
//! Identical markup tokens and equal-length chunks match for free. Two
//! chunks of different length may be paired at cost
//! `1 - min(x, y) / max(x, y)`. Any token may be left unmatched at cost 1.
//! Markup tokens with different labels or kinds are never paired.
//!
//! Among alignments of equal cost, the one with fewer unmatched tokens
//! wins; remaining ties are broken scanning left to right, preferring
//! Match, then Pair, then GapLeft, then GapRight.

use alloc::vec;
use alloc::vec::Vec;

use crate::linearize::{LinearDocument, Token};

/// Costs closer than this are treated as equal.
pub const COST_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AlignOp {
    /// Identical tokens.
    Match { left: usize, right: usize },
    /// Chunks of unequal length.
    Pair { left: usize, right: usize },
    /// A left token with no counterpart on the right.
    GapLeft { left: usize },
    /// A right token with no counterpart on the left.
    GapRight { right: usize },
}

impl AlignOp {
    pub fn left(&self) -> Option<usize> {
        match *self {
            AlignOp::Match { left, .. } | AlignOp::Pair { left, .. } | AlignOp::GapLeft { left } => Some(left),
            AlignOp::GapRight { .. } => None,
        }
    }

    pub fn right(&self) -> Option<usize> {
        match *self {
            AlignOp::Match { right, .. } | AlignOp::Pair { right, .. } | AlignOp::GapRight { right } => Some(right),
            AlignOp::GapLeft { .. } => None,
        }
    }

    pub fn is_gap(&self) -> bool {
        matches!(self, AlignOp::GapLeft { .. } | AlignOp::GapRight { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    pub mismatch_count: usize,
    pub total_tokens: usize,
    pub cost: f64,
}

impl Alignment {
    /// Unmatched tokens over all tokens on both sides; 1.0 when there are
    /// no tokens at all.
    pub fn mismatch_ratio(&self) -> f64 {
        if self.total_tokens == 0 {
            1.0
        } else {
            self.mismatch_count as f64 / self.total_tokens as f64
        }
    }
}

/// Cost of substituting `a` by `b`: 0 for identical tokens, the length
/// ratio penalty for unequal chunks, `None` when they may not be aligned.
pub fn substitution_cost(a: &Token, b: &Token) -> Option<f64> {
    if a.same_shape(b) {
        return Some(0.0);
    }
    match (a.chunk_len(), b.chunk_len()) {
        (Some(x), Some(y)) => {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            Some(1.0 - lo as f64 / hi as f64)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
struct Score {
    cost: f64,
    gaps: u32,
}

impl Score {
    fn add(self, cost: f64, gaps: u32) -> Score {
        Score { cost: self.cost + cost, gaps: self.gaps + gaps }
    }

    fn better_than(&self, other: &Score) -> bool {
        if self.cost < other.cost - COST_EPSILON {
            true
        } else if self.cost > other.cost + COST_EPSILON {
            false
        } else {
            self.gaps < other.gaps
        }
    }

    fn ties(&self, other: &Score) -> bool {
        !self.better_than(other) && !other.better_than(self)
    }
}

pub fn align(left: &LinearDocument, right: &LinearDocument) -> Alignment {
    align_tokens(&left.tokens, &right.tokens)
}

pub fn align_tokens(left: &[Token], right: &[Token]) -> Alignment {
    let n = left.len();
    let m = right.len();
    let width = m + 1;
    // best[i * width + j]: optimal score aligning left[i..] with right[j..]
    let mut best = vec![Score { cost: 0.0, gaps: 0 }; (n + 1) * width];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let mut cand: Option<Score> = None;
            let mut offer = |s: Score| {
                if cand.is_none_or(|c| s.better_than(&c)) {
                    cand = Some(s);
                }
            };
            if i < n && j < m {
                if let Some(c) = substitution_cost(&left[i], &right[j]) {
                    offer(best[(i + 1) * width + j + 1].add(c, 0));
                }
            }
            if i < n {
                offer(best[(i + 1) * width + j].add(1.0, 1));
            }
            if j < m {
                offer(best[i * width + j + 1].add(1.0, 1));
            }
            best[i * width + j] = cand.expect("at least one move exists");
        }
    }

    let total = best[0];
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let target = best[i * width + j];
        if i < n && j < m {
            if let Some(c) = substitution_cost(&left[i], &right[j]) {
                if best[(i + 1) * width + j + 1].add(c, 0).ties(&target) {
                    ops.push(if c == 0.0 {
                        AlignOp::Match { left: i, right: j }
                    } else {
                        AlignOp::Pair { left: i, right: j }
                    });
                    i += 1;
                    j += 1;
                    continue;
                }
            }
        }
        if i < n && best[(i + 1) * width + j].add(1.0, 1).ties(&target) {
            ops.push(AlignOp::GapLeft { left: i });
            i += 1;
        } else {
            ops.push(AlignOp::GapRight { right: j });
            j += 1;
        }
    }

    Alignment {
        mismatch_count: ops.iter().filter(|op| op.is_gap()).count(),
        total_tokens: n + m,
        cost: total.cost,
        ops,
    }
}

/// Free-function form of [`Alignment::mismatch_ratio`].
pub fn mismatch_ratio(a: &Alignment) -> f64 {
    a.mismatch_ratio()
}

/// Lengths and positions of two chunks paired by the alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChunkPair {
    pub x: usize,
    pub y: usize,
    pub left_index: usize,
    pub right_index: usize,
    pub left_offset: usize,
    pub right_offset: usize,
}

/// The unequal-length chunk pairs of an alignment, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChunkPairSet {
    pub pairs: Vec<ChunkPair>,
}

impl ChunkPairSet {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn lengths(&self) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|p| (p.x as f64, p.y as f64)).collect()
    }
}

/// Collects the Pair ops of `alignment`. Equal-length chunks are Match
/// ops and are left out.
pub fn chunk_pairs(alignment: &Alignment, left: &LinearDocument, right: &LinearDocument) -> ChunkPairSet {
    let pairs = alignment
        .ops
        .iter()
        .filter_map(|op| match *op {
            AlignOp::Pair { left: li, right: ri } => {
                let (l, r) = (&left.tokens[li], &right.tokens[ri]);
                Some(ChunkPair {
                    x: l.chunk_len()?,
                    y: r.chunk_len()?,
                    left_index: li,
                    right_index: ri,
                    left_offset: l.offset(),
                    right_offset: r.offset(),
                })
            }
            _ => None,
        })
        .collect();
    ChunkPairSet { pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn s(label: &str) -> Token {
        Token::Start { label: label.into(), offset: 0 }
    }
    fn e(label: &str) -> Token {
        Token::End { label: label.into(), offset: 0 }
    }
    fn c(len: usize) -> Token {
        Token::Chunk { length: len, text: String::new(), offset: 0 }
    }

    #[test]
    fn empty_sequences() {
        let a = align_tokens(&[], &[]);
        assert!(a.ops.is_empty());
        assert_eq!(a.mismatch_count, 0);
        assert_eq!(a.mismatch_ratio(), 1.0);
    }

    #[test]
    fn one_side_empty() {
        let a = align_tokens(&[s("P"), c(3)], &[]);
        assert_eq!(a.ops, vec![AlignOp::GapLeft { left: 0 }, AlignOp::GapLeft { left: 1 }]);
        assert_eq!(a.mismatch_ratio(), 1.0);
        let a = align_tokens(&[], &[c(3)]);
        assert_eq!(a.ops, vec![AlignOp::GapRight { right: 0 }]);
    }

    #[test]
    fn equal_chunks_match() {
        let a = align_tokens(&[c(5)], &[c(5)]);
        assert_eq!(a.ops, vec![AlignOp::Match { left: 0, right: 0 }]);
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn unequal_chunks_pair() {
        let a = align_tokens(&[c(3)], &[c(4)]);
        assert_eq!(a.ops, vec![AlignOp::Pair { left: 0, right: 0 }]);
        assert!((a.cost - 0.25).abs() < 1e-12);
        assert_eq!(a.mismatch_count, 0);
    }

    #[test]
    fn different_tags_never_pair() {
        let a = align_tokens(&[s("B")], &[s("I")]);
        assert_eq!(a.ops, vec![AlignOp::GapLeft { left: 0 }, AlignOp::GapRight { right: 0 }]);
        let a = align_tokens(&[s("B")], &[e("B")]);
        assert_eq!(a.mismatch_count, 2);
        let a = align_tokens(&[s("B")], &[c(1)]);
        assert_eq!(a.mismatch_count, 2);
    }

    #[test]
    fn gap_tie_prefers_left() {
        // dropping either the H1 block on the left or nothing: gaps must come first
        let a = align_tokens(&[s("A"), s("A")], &[s("A")]);
        assert_eq!(a.ops, vec![AlignOp::Match { left: 0, right: 0 }, AlignOp::GapLeft { left: 1 }]);
    }

    #[test]
    fn ratio_with_two_gaps_of_ten() {
        let left = [s("P"), c(4), e("P"), s("B"), e("B"), s("I")];
        let right = [s("P"), c(5), e("P"), s("B"), e("B"), s("U")];
        let a = align_tokens(&left, &right);
        assert_eq!(a.total_tokens, 12);
        assert_eq!(a.mismatch_count, 2);
        let left = [s("P"), c(4), e("P"), s("B"), e("B"), s("I")];
        let right = [s("P"), c(5), e("P"), s("B")];
        let a = align_tokens(&left, &right);
        assert_eq!(a.total_tokens, 10);
        assert!((a.mismatch_ratio() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn pairs_collected_in_order() {
        let l = LinearDocument { source_id: "l".into(), tokens: vec![c(3), s("P"), c(10), c(7)] };
        let r = LinearDocument { source_id: "r".into(), tokens: vec![c(4), s("P"), c(12), c(7)] };
        let a = align(&l, &r);
        let set = chunk_pairs(&a, &l, &r);
        let xy: Vec<_> = set.pairs.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(xy, vec![(3, 4), (10, 12)]);
    }
}
