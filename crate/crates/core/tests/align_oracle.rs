//! The aligner checked against exhaustive enumeration of monotone
//! alignments on short random sequences.

use bitext_core::align::{align_tokens, AlignOp};
use bitext_core::Token;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Independent restatement of the cost model.
fn sub_cost(a: &Token, b: &Token) -> Option<f64> {
    match (a, b) {
        (Token::Start { label: x, .. }, Token::Start { label: y, .. })
        | (Token::End { label: x, .. }, Token::End { label: y, .. }) => (x == y).then_some(0.0),
        (Token::Chunk { length: x, .. }, Token::Chunk { length: y, .. }) => {
            let (x, y) = (*x as f64, *y as f64);
            Some(1.0 - x.min(y) / x.max(y))
        }
        _ => None,
    }
}

/// Minimum (cost, gaps) over every monotone full cover, by plain
/// recursion without memoization.
fn brute_force(l: &[Token], r: &[Token]) -> (f64, usize) {
    fn go(l: &[Token], r: &[Token], best: &mut (f64, usize), cost: f64, gaps: usize) {
        if l.is_empty() && r.is_empty() {
            let better = cost < best.0 - 1e-9 || ((cost - best.0).abs() <= 1e-9 && gaps < best.1);
            if better {
                *best = (cost, gaps);
            }
            return;
        }
        if !l.is_empty() && !r.is_empty() {
            if let Some(c) = sub_cost(&l[0], &r[0]) {
                go(&l[1..], &r[1..], best, cost + c, gaps);
            }
        }
        if !l.is_empty() {
            go(&l[1..], r, best, cost + 1.0, gaps + 1);
        }
        if !r.is_empty() {
            go(l, &r[1..], best, cost + 1.0, gaps + 1);
        }
    }
    let mut best = (f64::INFINITY, usize::MAX);
    go(l, r, &mut best, 0.0, 0);
    best
}

const LABELS: [&str; 3] = ["P", "B", "LI"];

fn random_tokens(rng: &mut StdRng, max_len: usize) -> Vec<Token> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|i| {
            let label = LABELS[rng.random_range(0..LABELS.len())].to_string();
            match rng.random_range(0..3) {
                0 => Token::Start { label, offset: i },
                1 => Token::End { label, offset: i },
                _ => Token::Chunk { length: rng.random_range(1..=6), text: String::new(), offset: i },
            }
        })
        .collect()
}

fn check_ops(ops: &[AlignOp], l: &[Token], r: &[Token]) {
    let (mut next_l, mut next_r) = (0, 0);
    for op in ops {
        if let Some(i) = op.left() {
            assert_eq!(i, next_l, "left indices must be consecutive");
            next_l += 1;
        }
        if let Some(j) = op.right() {
            assert_eq!(j, next_r, "right indices must be consecutive");
            next_r += 1;
        }
        match *op {
            AlignOp::Match { left, right } => assert!(l[left].same_shape(&r[right])),
            AlignOp::Pair { left, right } => {
                let (x, y) = (l[left].chunk_len().unwrap(), r[right].chunk_len().unwrap());
                assert_ne!(x, y, "equal-length chunks must Match, not Pair");
            }
            _ => {}
        }
    }
    assert_eq!((next_l, next_r), (l.len(), r.len()), "every token covered once");
}

#[test]
fn matches_exhaustive_minimum() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for case in 0..1000 {
        let l = random_tokens(&mut rng, 8);
        let r = random_tokens(&mut rng, 8);
        let a = align_tokens(&l, &r);
        let (cost, gaps) = brute_force(&l, &r);
        assert!((a.cost - cost).abs() < 1e-9, "case {case}: {} vs {cost}", a.cost);
        assert_eq!(a.mismatch_count, gaps, "case {case}");
        check_ops(&a.ops, &l, &r);
    }
}

fn token_strategy() -> impl Strategy<Value = Token> {
    prop_oneof![
        (0..3usize).prop_map(|i| Token::Start { label: LABELS[i].into(), offset: 0 }),
        (0..3usize).prop_map(|i| Token::End { label: LABELS[i].into(), offset: 0 }),
        (1..40usize).prop_map(|n| Token::Chunk { length: n, text: String::new(), offset: 0 }),
    ]
}

proptest! {
    #[test]
    fn identity_costs_nothing(s in prop::collection::vec(token_strategy(), 0..40)) {
        let a = align_tokens(&s, &s);
        prop_assert_eq!(a.cost, 0.0);
        prop_assert_eq!(a.mismatch_count, 0);
        let all_match = a.ops.iter().all(|op| matches!(op, AlignOp::Match { .. }));
        prop_assert!(all_match);
    }

    #[test]
    fn symmetric_and_bounded(
        l in prop::collection::vec(token_strategy(), 0..30),
        r in prop::collection::vec(token_strategy(), 0..30),
    ) {
        let ab = align_tokens(&l, &r);
        let ba = align_tokens(&r, &l);
        prop_assert_eq!(ab.mismatch_count, ba.mismatch_count);
        prop_assert!((ab.cost - ba.cost).abs() < 1e-9);
        prop_assert!(ab.mismatch_count <= ab.total_tokens);
        prop_assert_eq!(ab.total_tokens, l.len() + r.len());
        let ratio = ab.mismatch_ratio();
        prop_assert!((0.0..=1.0).contains(&ratio));
        let identical = l.len() == r.len() && l.iter().zip(&r).all(|(a, b)| a.same_shape(b));
        prop_assert_eq!(ab.cost == 0.0, identical);
        check_ops(&ab.ops, &l, &r);
    }
}

#[test]
fn disjoint_vocabularies_mismatch_heavily() {
    let l = vec![
        Token::Start { label: "P".into(), offset: 0 },
        Token::Chunk { length: 5, text: String::new(), offset: 1 },
        Token::End { label: "P".into(), offset: 2 },
        Token::Start { label: "HR".into(), offset: 3 },
    ];
    let r = vec![
        Token::Start { label: "TD".into(), offset: 0 },
        Token::Chunk { length: 9, text: String::new(), offset: 1 },
        Token::End { label: "TD".into(), offset: 2 },
        Token::Start { label: "BR".into(), offset: 3 },
    ];
    let a = align_tokens(&l, &r);
    assert_eq!(brute_force(&l, &r).1, a.mismatch_count);
    // only the two chunks can pair; the six tags are all gaps
    assert_eq!(a.mismatch_count, 6);
    assert!(a.mismatch_ratio() >= 0.5);
}
