//! Flattening HTML into markup-boundary and text-chunk tokens.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::entities;
use crate::lexer::{is_void, Event, Lexer};

/// One element of a linearized document.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind"))]
pub enum Token {
    Start {
        label: String,
        offset: usize,
    },
    End {
        label: String,
        offset: usize,
    },
    /// A maximal run of text between markup. `length` counts the
    /// non-whitespace characters of `text` after reference decoding.
    Chunk {
        length: usize,
        text: String,
        offset: usize,
    },
}

impl Token {
    pub fn chunk(text: impl Into<String>, offset: usize) -> Self {
        let text = text.into();
        Token::Chunk { length: non_whitespace_len(&text), text, offset }
    }

    pub fn offset(&self) -> usize {
        match self {
            Token::Start { offset, .. } | Token::End { offset, .. } | Token::Chunk { offset, .. } => *offset,
        }
    }

    pub fn chunk_len(&self) -> Option<usize> {
        match self {
            Token::Chunk { length, .. } => Some(*length),
            _ => None,
        }
    }

    /// Identity for alignment: same kind and label, or chunks of equal
    /// length. Offsets and chunk text are ignored.
    pub fn same_shape(&self, other: &Token) -> bool {
        match (self, other) {
            (Token::Start { label: a, .. }, Token::Start { label: b, .. }) => a == b,
            (Token::End { label: a, .. }, Token::End { label: b, .. }) => a == b,
            (Token::Chunk { length: a, .. }, Token::Chunk { length: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// Renders `[START:A]`, `[END:A]` or `[Chunk:174]`.
impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Start { label, .. } => write!(f, "[START:{label}]"),
            Token::End { label, .. } => write!(f, "[END:{label}]"),
            Token::Chunk { length, .. } => write!(f, "[Chunk:{length}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearDocument {
    pub source_id: String,
    pub tokens: Vec<Token>,
}

impl LinearDocument {
    pub fn from_html(source_id: impl Into<String>, html: &str) -> Self {
        LinearDocument { source_id: source_id.into(), tokens: linearize(html) }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// All chunk texts joined by a single space.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (_, t) in chunk_texts(self) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(t.trim());
        }
        out
    }
}

pub fn non_whitespace_len(s: &str) -> usize {
    s.chars().filter(|c| !c.is_whitespace()).count()
}

/// Linearizes an HTML document into Start/End/Chunk tokens.
///
/// Attributes are dropped and element names uppercased. Void elements
/// produce a Start token only, and stray end tags for them are ignored.
/// Text runs that are separated only by comments merge into one chunk;
/// whitespace-only runs produce nothing.
pub fn linearize(html: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    // pending text: decoded content and offset of its first byte
    let mut pending: Option<(String, usize)> = None;

    fn flush(tokens: &mut Vec<Token>, pending: &mut Option<(String, usize)>) {
        if let Some((text, offset)) = pending.take() {
            if non_whitespace_len(&text) > 0 {
                tokens.push(Token::chunk(text, offset));
            }
        }
    }

    for event in Lexer::new(html) {
        match event {
            Event::Text { start, end } => {
                let decoded = entities::decode(&html[start..end]);
                match &mut pending {
                    Some((text, _)) => text.push_str(&decoded),
                    None => pending = Some((decoded.into_owned(), start)),
                }
            }
            Event::StartTag(tag) => {
                flush(&mut tokens, &mut pending);
                tokens.push(Token::Start { label: tag.name, offset: tag.offset });
            }
            Event::EndTag { name, offset } => {
                if is_void(&name) {
                    continue;
                }
                flush(&mut tokens, &mut pending);
                tokens.push(Token::End { label: name, offset });
            }
        }
    }
    flush(&mut tokens, &mut pending);
    tokens
}

/// `(offset, text)` for every chunk, in document order.
pub fn chunk_texts(doc: &LinearDocument) -> Vec<(usize, &str)> {
    doc.tokens
        .iter()
        .filter_map(|t| match t {
            Token::Chunk { text, offset, .. } => Some((*offset, text.as_str())),
            _ => None,
        })
        .collect()
}
