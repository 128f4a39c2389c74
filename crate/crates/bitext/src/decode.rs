//! Byte-to-text decoding for web pages.
//!
//! Order of precedence: byte order mark, the transport charset hint
//! (usually from `Content-Type`), a `<meta>` declaration in the first
//! 1024 bytes, UTF-8 when the bytes are valid UTF-8, and windows-1252
//! otherwise. Decoding never fails; malformed sequences become U+FFFD.

use std::borrow::Cow;

use bitext_core::LinearDocument;
use encoding_rs::{Encoding, UTF_8, WINDOWS_1252};

const PRESCAN_BYTES: usize = 1024;

pub fn decode_html<'a>(bytes: &'a [u8], hint: Option<&str>) -> Cow<'a, str> {
    if let Some((enc, bom_len)) = Encoding::for_bom(bytes) {
        return enc.decode_without_bom_handling(&bytes[bom_len..]).0;
    }
    let declared = hint
        .and_then(|h| Encoding::for_label(h.trim().as_bytes()))
        .or_else(|| meta_charset(&bytes[..bytes.len().min(PRESCAN_BYTES)]));
    if let Some(enc) = declared {
        return enc.decode_without_bom_handling(bytes).0;
    }
    match std::str::from_utf8(bytes) {
        Ok(s) => Cow::Borrowed(s),
        Err(_) => WINDOWS_1252.decode_without_bom_handling(bytes).0,
    }
}

/// Finds `charset=` inside a `<meta` tag.
fn meta_charset(head: &[u8]) -> Option<&'static Encoding> {
    let lower = head.to_ascii_lowercase();
    let mut from = 0;
    while let Some(rel) = find(&lower[from..], b"<meta") {
        let tag_start = from + rel;
        let tag_end = find(&lower[tag_start..], b">").map_or(lower.len(), |e| tag_start + e);
        let tag = &lower[tag_start..tag_end];
        if let Some(pos) = find(tag, b"charset") {
            let rest = &tag[pos + 7..];
            let rest = trim_start(rest);
            if let Some(rest) = rest.strip_prefix(b"=") {
                let rest = trim_start(rest);
                let rest = rest.strip_prefix(b"\"").or_else(|| rest.strip_prefix(b"'")).unwrap_or(rest);
                let end = rest
                    .iter()
                    .position(|b| matches!(b, b'"' | b'\'' | b';' | b'/') || b.is_ascii_whitespace())
                    .unwrap_or(rest.len());
                if let Some(enc) = Encoding::for_label(&rest[..end]) {
                    // a page that claims UTF-16 in ASCII-compatible bytes is not UTF-16
                    return Some(if enc.is_single_byte() || enc == UTF_8 { enc } else { enc.output_encoding() });
                }
            }
        }
        from = tag_end;
    }
    None
}

fn trim_start(s: &[u8]) -> &[u8] {
    let n = s.iter().take_while(|b| b.is_ascii_whitespace()).count();
    &s[n..]
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

/// Extracts `charset` from a `Content-Type` header value.
pub fn charset_from_content_type(content_type: &str) -> Option<&str> {
    content_type.split(';').skip(1).find_map(|param| {
        let (k, v) = param.split_once('=')?;
        k.trim().eq_ignore_ascii_case("charset").then(|| v.trim().trim_matches('"'))
    })
}

pub fn linearize_bytes(source_id: &str, bytes: &[u8], hint: Option<&str>) -> LinearDocument {
    LinearDocument::from_html(source_id, &decode_html(bytes, hint))
}
