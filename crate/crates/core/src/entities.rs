//! Character reference decoding.

use alloc::borrow::Cow;
use alloc::string::String;

use crate::entities_table::NAMED;

/// Looks up an HTML 4 named character reference, without `&` and `;`.
pub fn lookup(name: &str) -> Option<char> {
    NAMED.binary_search_by(|(n, _)| (*n).cmp(name)).ok().map(|i| NAMED[i].1)
}

/// Decodes `&name;`, `&#123;` and `&#x7b;` references in `text`.
///
/// Unknown or malformed references are kept verbatim. Numeric references
/// that do not name a valid scalar value decode to U+FFFD.
pub fn decode(text: &str) -> Cow<'_, str> {
    if !text.contains('&') {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        match decode_one(after) {
            Some((c, consumed)) => {
                out.push(c);
                rest = &after[consumed..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}

/// Decodes one reference at the start of `s` (just past the `&`).
/// Returns the character and the number of bytes consumed.
fn decode_one(s: &str) -> Option<(char, usize)> {
    let bytes = s.as_bytes();
    if bytes.first() == Some(&b'#') {
        let (radix, digits_start) = match bytes.get(1) {
            Some(b'x') | Some(b'X') => (16, 2),
            _ => (10, 1),
        };
        let digits_len = s[digits_start..].bytes().take_while(|b| (*b as char).is_digit(radix)).count();
        if digits_len == 0 {
            return None;
        }
        let digits = &s[digits_start..digits_start + digits_len];
        let mut consumed = digits_start + digits_len;
        if bytes.get(consumed) == Some(&b';') {
            consumed += 1;
        }
        let c = u32::from_str_radix(digits, radix)
            .ok()
            .and_then(char::from_u32)
            .filter(|c| *c != '\0')
            .unwrap_or('\u{FFFD}');
        return Some((c, consumed));
    }
    let name_len = s.bytes().take_while(|b| b.is_ascii_alphanumeric()).take(32).count();
    if name_len == 0 || bytes.get(name_len) != Some(&b';') {
        return None;
    }
    lookup(&s[..name_len]).map(|c| (c, name_len + 1))
}
