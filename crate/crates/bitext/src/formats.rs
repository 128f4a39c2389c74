//! On-disk formats.
//!
//! Candidates: `url1 <TAB> url2 <TAB> source_hub <TAB> line_distance`,
//! one pair per line. Gold labels: `pair_id <TAB> 0|1`. Segments:
//! `url1 <TAB> url2 <TAB> left_offset <TAB> right_offset <TAB> left_text
//! <TAB> right_text`. In all three, blank lines and lines starting with
//! `#` are skipped on input, and text fields escape backslash, tab,
//! newline and carriage return as `\\`, `\t`, `\n`, `\r`.
//!
//! Language models use a line-oriented text format:
//!
//! ```text
//! bitext-ngram-model 1
//! language <TAB> en
//! order <TAB> 3
//! training_chars <TAB> 2096
//! alphabet <TAB> <escaped characters, concatenated>
//! counts <TAB> <number of rows>
//! <escaped context> <TAB> <escaped character> <TAB> <count>
//! ...
//! ```
//!
//! Other control characters are written as `\u{hex}`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use bitext_core::langid::NgramModel;
use bitext_core::score::GoldLabel;
use bitext_core::{CandidatePair, EvaluationReport};
use thiserror::Error;

pub const MODEL_MAGIC: &str = "bitext-ngram-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("segments are only written for accepted pairs")]
    NotAccepted,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('u') => {
                if chars.next() != Some('{') {
                    return Err(format!("bad escape in {s:?}"));
                }
                let hex: String = chars.by_ref().take_while(|&c| c != '}').collect();
                let c = u32::from_str_radix(&hex, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| format!("bad code point {hex:?}"))?;
                out.push(c);
            }
            other => return Err(format!("bad escape \\{} in {s:?}", other.map_or(String::new(), String::from))),
        }
    }
    Ok(out)
}

/// Data lines with their 1-based line numbers.
fn data_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    r.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() || l.starts_with('#') => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(e.into())),
    })
}

fn field(line: usize, raw: &str) -> Result<String, FormatError> {
    unescape(raw).map_err(|m| syntax(line, m))
}

pub fn write_candidates(mut w: impl Write, pairs: &[CandidatePair]) -> io::Result<()> {
    for p in pairs {
        writeln!(w, "{}\t{}\t{}\t{}", escape(&p.url1), escape(&p.url2), escape(&p.source_hub), p.line_distance)?;
    }
    Ok(())
}

pub fn read_candidates(r: impl BufRead) -> Result<Vec<CandidatePair>, FormatError> {
    let mut out = Vec::new();
    for item in data_lines(r) {
        let (n, line) = item?;
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            [u1, u2, hub, dist] => out.push(CandidatePair {
                url1: field(n, u1)?,
                url2: field(n, u2)?,
                source_hub: field(n, hub)?,
                line_distance: dist.trim().parse().map_err(|_| syntax(n, format!("bad line distance {dist:?}")))?,
            }),
            // source and distance are optional for hand-written lists
            [u1, u2] => out.push(CandidatePair {
                url1: field(n, u1)?,
                url2: field(n, u2)?,
                source_hub: String::new(),
                line_distance: 0,
            }),
            _ => return Err(syntax(n, format!("expected 4 tab-separated fields, found {}", f.len()))),
        }
    }
    Ok(out)
}

pub fn write_gold(mut w: impl Write, gold: &[GoldLabel]) -> io::Result<()> {
    for g in gold {
        writeln!(w, "{}\t{}", escape(&g.pair_id), u8::from(g.is_translation))?;
    }
    Ok(())
}

pub fn read_gold(r: impl BufRead) -> Result<Vec<GoldLabel>, FormatError> {
    let mut out = Vec::new();
    for item in data_lines(r) {
        let (n, line) = item?;
        let Some((id, judgment)) = line.split_once('\t') else {
            return Err(syntax(n, "expected pair id and judgment"));
        };
        let is_translation = match judgment.trim() {
            "1" => true,
            "0" => false,
            other => return Err(syntax(n, format!("judgment must be 0 or 1, found {other:?}"))),
        };
        out.push(GoldLabel { pair_id: field(n, id)?, is_translation });
    }
    Ok(out)
}

/// One record per aligned chunk pair of an accepted report.
pub fn write_segments(mut w: impl Write, url1: &str, url2: &str, report: &EvaluationReport) -> Result<(), FormatError> {
    if !report.is_accept() {
        return Err(FormatError::NotAccepted);
    }
    for s in &report.segments {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            escape(url1),
            escape(url2),
            s.left_offset,
            s.right_offset,
            escape(&s.left_text),
            escape(&s.right_text)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRecord {
    pub url1: String,
    pub url2: String,
    pub left_offset: usize,
    pub right_offset: usize,
    pub left_text: String,
    pub right_text: String,
}

pub fn read_segments(r: impl BufRead) -> Result<Vec<SegmentRecord>, FormatError> {
    let mut out = Vec::new();
    for item in data_lines(r) {
        let (n, line) = item?;
        let f: Vec<&str> = line.split('\t').collect();
        let [u1, u2, lo, ro, lt, rt] = f.as_slice() else {
            return Err(syntax(n, format!("expected 6 tab-separated fields, found {}", f.len())));
        };
        let offset = |s: &str| s.parse().map_err(|_| syntax(n, format!("bad offset {s:?}")));
        out.push(SegmentRecord {
            url1: field(n, u1)?,
            url2: field(n, u2)?,
            left_offset: offset(lo)?,
            right_offset: offset(ro)?,
            left_text: field(n, lt)?,
            right_text: field(n, rt)?,
        });
    }
    Ok(out)
}

pub fn write_model(mut w: impl Write, model: &NgramModel) -> io::Result<()> {
    writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
    writeln!(w, "language\t{}", escape(model.language()))?;
    writeln!(w, "order\t{}", model.order())?;
    writeln!(w, "training_chars\t{}", model.training_chars())?;
    let alphabet: String = model.alphabet().iter().collect();
    writeln!(w, "alphabet\t{}", escape(&alphabet))?;
    let rows: usize = model.counts().values().map(BTreeMap::len).sum();
    writeln!(w, "counts\t{rows}")?;
    for (context, nexts) in model.counts() {
        for (c, n) in nexts {
            writeln!(w, "{}\t{}\t{n}", escape(context), escape(&c.to_string()))?;
        }
    }
    Ok(())
}

pub fn read_model(r: impl BufRead) -> Result<NgramModel, FormatError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
    let mut next = |what: &str| -> Result<(usize, String), FormatError> {
        lines.next().transpose()?.ok_or_else(|| syntax(0, format!("missing {what}")))
    };
    let (n, header) = next("header")?;
    let version = header
        .strip_prefix(MODEL_MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| syntax(n, "not a language model file"))?;
    if version != MODEL_VERSION {
        return Err(syntax(n, format!("unsupported model version {version}")));
    }
    let mut keyed = |key: &str| -> Result<(usize, String), FormatError> {
        let (n, line) = next(key)?;
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok((n, v.to_string())),
            _ => Err(syntax(n, format!("expected {key}"))),
        }
    };
    let (n, language) = keyed("language")?;
    let language = field(n, &language)?;
    let (n, order) = keyed("order")?;
    let order: usize = order.parse().map_err(|_| syntax(n, "bad order"))?;
    let (n, training) = keyed("training_chars")?;
    let training_chars: usize = training.parse().map_err(|_| syntax(n, "bad training_chars"))?;
    let (n, alphabet) = keyed("alphabet")?;
    let alphabet: BTreeSet<char> = field(n, &alphabet)?.chars().collect();
    let (n, rows) = keyed("counts")?;
    let rows: usize = rows.parse().map_err(|_| syntax(n, "bad row count"))?;

    let mut counts: BTreeMap<String, BTreeMap<char, u64>> = BTreeMap::new();
    for _ in 0..rows {
        let (n, line) = next("count row")?;
        let f: Vec<&str> = line.split('\t').collect();
        let [ctx, c, count] = f.as_slice() else {
            return Err(syntax(n, "expected context, character and count"));
        };
        let c = field(n, c)?;
        let mut cs = c.chars();
        let (Some(c), None) = (cs.next(), cs.next()) else {
            return Err(syntax(n, "expected a single character"));
        };
        let count: u64 = count.parse().map_err(|_| syntax(n, "bad count"))?;
        counts.entry(field(n, ctx)?).or_default().insert(c, count);
    }
    NgramModel::from_parts(language, order, alphabet, counts, training_chars).map_err(|e| syntax(0, e.to_string()))
}
