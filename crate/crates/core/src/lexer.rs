//! A forgiving tag-soup lexer.
//!
//! Produces start tags, end tags and raw text spans in document order.
//! Comments, doctypes, CDATA sections and processing instructions are
//! consumed silently. The lexer never fails: an unterminated tag at end
//! of input is dropped, a `<` that cannot open markup is text, and a
//! stray `>` is text.
//!
//! The contents of `SCRIPT` and `STYLE` are skipped up to the matching
//! end tag and produce no text events.

use alloc::string::String;
use alloc::vec::Vec;

use crate::entities;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    StartTag(StartTag),
    EndTag {
        /// Uppercased element name.
        name: String,
        offset: usize,
    },
    /// Undecoded character data; `start..end` indexes the input.
    Text {
        start: usize,
        end: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartTag {
    /// Uppercased element name.
    pub name: String,
    /// Attribute names are lowercased, values have references decoded.
    pub attrs: Vec<(String, String)>,
    /// Written as `<name ... />`.
    pub self_closing: bool,
    /// Byte offset of the `<`.
    pub offset: usize,
}

impl StartTag {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }
}

const RAW_TEXT_ELEMENTS: [&str; 2] = ["SCRIPT", "STYLE"];

/// Elements that never have content or a closing tag.
pub const VOID_ELEMENTS: [&str; 20] = [
    "AREA", "BASE", "BASEFONT", "BGSOUND", "BR", "COL", "EMBED", "FRAME", "HR", "IMG", "INPUT", "ISINDEX", "KEYGEN",
    "LINK", "META", "PARAM", "SOURCE", "SPACER", "TRACK", "WBR",
];

pub fn is_void(name: &str) -> bool {
    VOID_ELEMENTS.contains(&name)
}

/// Lexes the whole input into a vector of events.
pub fn tokenize(input: &str) -> Vec<Event> {
    Lexer::new(input).collect()
}

pub struct Lexer<'a> {
    input: &'a str,
    pos: usize,
    /// Set after a SCRIPT/STYLE start tag; holds the name whose end tag
    /// terminates the raw text.
    raw_until: Option<&'static str>,
}

impl<'a> Lexer<'a> {
    pub fn new(input: &'a str) -> Self {
        Lexer { input, pos: 0, raw_until: None }
    }

    fn bytes(&self) -> &'a [u8] {
        self.input.as_bytes()
    }

    /// Skips raw text; leaves `pos` at the `<` of the closing tag or at EOF.
    fn skip_raw_text(&mut self, name: &str) {
        let bytes = self.bytes();
        let mut i = self.pos;
        while let Some(rel) = bytes[i..].iter().position(|b| *b == b'<') {
            let lt = i + rel;
            let after = lt + 2;
            if bytes.get(lt + 1) == Some(&b'/')
                && bytes.len() >= after + name.len()
                && bytes[after..after + name.len()].eq_ignore_ascii_case(name.as_bytes())
                && bytes.get(after + name.len()).is_none_or(|b| is_tag_delim(*b))
            {
                self.pos = lt;
                return;
            }
            i = lt + 1;
        }
        self.pos = bytes.len();
    }

    /// Tries to read markup at `pos` (which holds `<`). Returns `None` with
    /// `pos` unchanged if the `<` does not open markup.
    fn markup(&mut self) -> Option<Option<Event>> {
        let bytes = self.bytes();
        let start = self.pos;
        let next = *bytes.get(start + 1)?;
        if next.is_ascii_alphabetic() {
            return Some(self.start_tag(start));
        }
        match next {
            b'/' => {
                let first = *bytes.get(start + 2)?;
                if first.is_ascii_alphabetic() {
                    Some(self.end_tag(start))
                } else if first == b'>' {
                    self.pos = start + 3;
                    Some(None)
                } else {
                    // bogus comment
                    self.pos = find_from(bytes, start + 2, b">").map_or(bytes.len(), |i| i + 1);
                    Some(None)
                }
            }
            b'!' => {
                let rest = &bytes[start + 2..];
                let end = if rest.starts_with(b"--") {
                    find_from(bytes, start + 4, b"-->").map(|i| i + 3)
                } else if rest.starts_with(b"[CDATA[") {
                    find_from(bytes, start + 9, b"]]>").map(|i| i + 3)
                } else {
                    find_from(bytes, start + 2, b">").map(|i| i + 1)
                };
                self.pos = end.unwrap_or(bytes.len());
                Some(None)
            }
            b'?' => {
                self.pos = find_from(bytes, start + 2, b">").map_or(bytes.len(), |i| i + 1);
                Some(None)
            }
            _ => None,
        }
    }

    fn start_tag(&mut self, start: usize) -> Option<Event> {
        let bytes = self.bytes();
        let name_end = scan_while(bytes, start + 1, |b| !is_tag_delim(b));
        let name = self.input[start + 1..name_end].to_ascii_uppercase();
        let mut attrs = Vec::new();
        let mut self_closing = false;
        let mut i = name_end;
        loop {
            i = scan_while(bytes, i, |b| b.is_ascii_whitespace());
            match bytes.get(i) {
                None => {
                    // unterminated tag at EOF
                    self.pos = bytes.len();
                    return None;
                }
                Some(b'>') => {
                    i += 1;
                    break;
                }
                Some(b'/') => {
                    i += 1;
                    if bytes.get(i) == Some(&b'>') {
                        self_closing = true;
                        i += 1;
                        break;
                    }
                }
                Some(_) => {
                    let attr_start = i;
                    let attr_end =
                        scan_while(bytes, i, |b| !(b.is_ascii_whitespace() || b == b'>' || b == b'=' || b == b'/'));
                    // a lone '=' or similar: consume one byte to make progress
                    let attr_end = if attr_end == attr_start { attr_start + 1 } else { attr_end };
                    let attr_name = self.input[attr_start..attr_end].to_ascii_lowercase();
                    i = scan_while(bytes, attr_end, |b| b.is_ascii_whitespace());
                    let mut value = String::new();
                    if bytes.get(i) == Some(&b'=') {
                        i = scan_while(bytes, i + 1, |b| b.is_ascii_whitespace());
                        match bytes.get(i) {
                            Some(&q) if q == b'"' || q == b'\'' => match find_from(bytes, i + 1, &[q]) {
                                Some(close) => {
                                    value = entities::decode(&self.input[i + 1..close]).into_owned();
                                    i = close + 1;
                                }
                                None => {
                                    self.pos = bytes.len();
                                    return None;
                                }
                            },
                            Some(_) => {
                                let v_end = scan_while(bytes, i, |b| !(b.is_ascii_whitespace() || b == b'>'));
                                value = entities::decode(&self.input[i..v_end]).into_owned();
                                i = v_end;
                            }
                            None => {}
                        }
                    }
                    if attr_name != "=" && !attrs.iter().any(|(n, _): &(String, String)| *n == attr_name) {
                        attrs.push((attr_name, value));
                    }
                }
            }
        }
        self.pos = i;
        if !self_closing {
            self.raw_until = RAW_TEXT_ELEMENTS.iter().copied().find(|n| *n == name);
        }
        Some(Event::StartTag(StartTag { name, attrs, self_closing, offset: start }))
    }

    fn end_tag(&mut self, start: usize) -> Option<Event> {
        let bytes = self.bytes();
        let name_end = scan_while(bytes, start + 2, |b| !is_tag_delim(b));
        let name = self.input[start + 2..name_end].to_ascii_uppercase();
        match find_from(bytes, name_end, b">") {
            Some(gt) => {
                self.pos = gt + 1;
                Some(Event::EndTag { name, offset: start })
            }
            None => {
                self.pos = bytes.len();
                None
            }
        }
    }
}

impl Iterator for Lexer<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        loop {
            if let Some(name) = self.raw_until.take() {
                self.skip_raw_text(name);
            }
            let bytes = self.bytes();
            if self.pos >= bytes.len() {
                return None;
            }
            if bytes[self.pos] == b'<' {
                if let Some(ev) = self.markup() {
                    match ev {
                        Some(ev) => return Some(ev),
                        None => continue,
                    }
                }
            }
            // text up to the next '<' that opens markup
            let start = self.pos;
            let mut i = start + 1;
            loop {
                match find_from(bytes, i, b"<") {
                    None => {
                        i = bytes.len();
                        break;
                    }
                    Some(lt) => {
                        if opens_markup(bytes, lt) {
                            i = lt;
                            break;
                        }
                        i = lt + 1;
                    }
                }
            }
            self.pos = i;
            return Some(Event::Text { start, end: i });
        }
    }
}

fn opens_markup(bytes: &[u8], lt: usize) -> bool {
    match bytes.get(lt + 1) {
        Some(b) if b.is_ascii_alphabetic() => true,
        Some(b'/') | Some(b'!') | Some(b'?') => true,
        _ => false,
    }
}

fn is_tag_delim(b: u8) -> bool {
    b.is_ascii_whitespace() || b == b'>' || b == b'/'
}

fn scan_while(bytes: &[u8], from: usize, pred: impl Fn(u8) -> bool) -> usize {
    from + bytes[from.min(bytes.len())..].iter().take_while(|b| pred(**b)).count()
}

fn find_from(bytes: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from > bytes.len() {
        return None;
    }
    bytes[from..].windows(needle.len()).position(|w| w == needle).map(|i| i + from)
}

/// Maps byte offsets to 1-based line numbers.
pub struct LineIndex {
    line_starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut line_starts = alloc::vec![0];
        line_starts.extend(text.bytes().enumerate().filter(|(_, b)| *b == b'\n').map(|(i, _)| i + 1));
        LineIndex { line_starts }
    }

    pub fn line_of(&self, offset: usize) -> usize {
        match self.line_starts.binary_search(&offset) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }
}
