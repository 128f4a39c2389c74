//! Side-by-side text rendering of alignments and reports.

use std::fmt::Write;

use bitext_core::{AlignOp, Alignment, EvaluationReport, LinearDocument, Token};

const COLUMN: usize = 34;

fn cell(token: &Token, with_text: bool) -> String {
    let mut s = token.to_string();
    if let (true, Token::Chunk { text, .. }) = (with_text, token) {
        s.push(' ');
        s.push_str(&text.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    if s.chars().count() > COLUMN {
        s = s.chars().take(COLUMN - 1).collect::<String>() + "~";
    }
    s
}

/// One line per alignment step in the style of `sdiff`: ` ` for equal
/// tokens, `|` for paired chunks of different length, `<` and `>` for
/// tokens present on one side only.
pub fn render_alignment(
    alignment: &Alignment,
    left: &LinearDocument,
    right: &LinearDocument,
    with_text: bool,
) -> String {
    let mut out = String::new();
    for op in &alignment.ops {
        let l = op.left().map_or(String::new(), |i| cell(&left.tokens[i], with_text));
        let r = op.right().map_or(String::new(), |i| cell(&right.tokens[i], with_text));
        let mark = match op {
            AlignOp::Match { .. } => ' ',
            AlignOp::Pair { .. } => '|',
            AlignOp::GapLeft { .. } => '<',
            AlignOp::GapRight { .. } => '>',
        };
        let line = format!("{l:<COLUMN$} {mark} {r}");
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn render_report(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let verdict = match report.reject_reason {
        None => "accept".to_string(),
        Some(reason) => format!("reject ({reason})"),
    };
    let _ = writeln!(out, "verdict: {verdict}");
    let _ = writeln!(out, "mismatch: {}/{} = {:.4}", report.mismatch_count, report.total_tokens, report.mismatch_ratio);
    if let Some(n) = report.chunk_pairs {
        let _ = writeln!(out, "chunk pairs: {n}");
    }
    if let Some(c) = &report.correlation {
        let _ = writeln!(out, "r: {:.6}", c.r);
        let _ = writeln!(out, "p: {:.3e}", c.p);
    }
    out
}
