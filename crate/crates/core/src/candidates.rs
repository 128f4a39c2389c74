//! Candidate pair generation from hub pages and URL patterns.
//!
//! A hub page links to several language versions of the same content.
//! Anchors whose URL, text, image ALT text or image file name mention a
//! language name are collected, and every (language 1, language 2)
//! anchor pair whose opening tags are close together in the source
//! becomes a candidate. Locators are kept as written in the hub; the
//! caller resolves them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::entities;
use crate::lexer::{Event, Lexer, LineIndex};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidatePair {
    pub url1: String,
    pub url2: String,
    pub source_hub: String,
    /// Lines between the two anchors in the hub source.
    pub line_distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorConfig {
    pub lang1_names: Vec<String>,
    pub lang2_names: Vec<String>,
    pub max_line_distance: usize,
    /// Cap on the number of hub pages consumed.
    pub max_hits: Option<usize>,
}

impl GeneratorConfig {
    pub fn new(lang1: impl Into<String>, lang2: impl Into<String>) -> Self {
        GeneratorConfig {
            lang1_names: alloc::vec![lang1.into()],
            lang2_names: alloc::vec![lang2.into()],
            max_line_distance: 10,
            max_hits: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.lang1_names.is_empty()
            && !self.lang2_names.is_empty()
            && self.lang1_names.iter().chain(&self.lang2_names).all(|n| !n.is_empty())
    }
}

/// `anchor:"<lang1>" AND anchor:"<lang2>"`
pub fn build_query(lang1: &str, lang2: &str) -> String {
    format!("anchor:\"{lang1}\" AND anchor:\"{lang2}\"")
}

/// A hyperlink found in a hub page.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Anchor {
    pub href: String,
    /// Visible text with references decoded.
    pub text: String,
    /// ALT texts of images inside the anchor.
    pub alts: Vec<String>,
    /// SRC values of images inside the anchor.
    pub images: Vec<String>,
    /// 1-based line of the opening `<a`.
    pub line: usize,
}

/// True iff some name occurs, ignoring case, in the anchor's href, text,
/// image ALT texts or image file names.
pub fn anchor_matches<S: AsRef<str>>(anchor: &Anchor, names: &[S]) -> bool {
    let fields = || {
        core::iter::once(anchor.href.as_str())
            .chain(core::iter::once(anchor.text.as_str()))
            .chain(anchor.alts.iter().map(String::as_str))
            .chain(anchor.images.iter().map(String::as_str))
    };
    names.iter().any(|name| {
        let needle = name.as_ref().to_lowercase();
        !needle.is_empty() && fields().any(|f| f.to_lowercase().contains(&needle))
    })
}

/// Collects every `<A HREF=...>` in `html`. An anchor ends at `</A>`, at
/// the next `<A>`, or at end of input.
pub fn parse_anchors(html: &str) -> Vec<Anchor> {
    let lines = LineIndex::new(html);
    let mut anchors = Vec::new();
    let mut open: Option<Anchor> = None;
    for event in Lexer::new(html) {
        match event {
            Event::StartTag(tag) if tag.name == "A" => {
                anchors.extend(open.take());
                if let Some(href) = tag.attr("href") {
                    open = Some(Anchor {
                        href: String::from(href.trim()),
                        line: lines.line_of(tag.offset),
                        ..Anchor::default()
                    });
                }
            }
            Event::StartTag(tag) if tag.name == "IMG" => {
                if let Some(a) = open.as_mut() {
                    if let Some(alt) = tag.attr("alt") {
                        a.alts.push(String::from(alt));
                    }
                    if let Some(src) = tag.attr("src") {
                        a.images.push(String::from(src));
                    }
                }
            }
            Event::EndTag { name, .. } if name == "A" => {
                anchors.extend(open.take());
            }
            Event::Text { start, end } => {
                if let Some(a) = open.as_mut() {
                    a.text.push_str(&entities::decode(&html[start..end]));
                }
            }
            _ => {}
        }
    }
    anchors.extend(open);
    anchors
        .into_iter()
        .filter(|a| !a.href.is_empty())
        .map(|mut a| {
            a.text = collapse_whitespace(&a.text);
            a
        })
        .collect()
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Two anchors satisfying the language and distance criteria.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorPair {
    pub first: Anchor,
    pub second: Anchor,
    pub line_distance: usize,
}

/// Every ordered pair of distinct anchors where the first names language
/// 1, the second names language 2, and their lines differ by at most
/// `max_line_distance`. Pairs come out in order of the first anchor,
/// then the second.
pub fn anchor_pairs(anchors: &[Anchor], cfg: &GeneratorConfig) -> Vec<AnchorPair> {
    let firsts: Vec<usize> = (0..anchors.len()).filter(|&i| anchor_matches(&anchors[i], &cfg.lang1_names)).collect();
    let seconds: Vec<usize> = (0..anchors.len()).filter(|&j| anchor_matches(&anchors[j], &cfg.lang2_names)).collect();
    let mut out = Vec::new();
    for &i in &firsts {
        for &j in &seconds {
            if i == j {
                continue;
            }
            let distance = anchors[i].line.abs_diff(anchors[j].line);
            if distance <= cfg.max_line_distance {
                out.push(AnchorPair { first: anchors[i].clone(), second: anchors[j].clone(), line_distance: distance });
            }
        }
    }
    out
}

/// Candidates from one hub, with hrefs exactly as written. Duplicate
/// (href1, href2) pairs keep their smallest distance.
pub fn extract_raw_candidates(hub_html: &str, hub_locator: &str, cfg: &GeneratorConfig) -> Vec<CandidatePair> {
    let anchors = parse_anchors(hub_html);
    let mut out: Vec<CandidatePair> = Vec::new();
    for p in anchor_pairs(&anchors, cfg) {
        match out.iter_mut().find(|c| c.url1 == p.first.href && c.url2 == p.second.href) {
            Some(existing) => existing.line_distance = existing.line_distance.min(p.line_distance),
            None => out.push(CandidatePair {
                url1: p.first.href,
                url2: p.second.href,
                source_hub: String::from(hub_locator),
                line_distance: p.line_distance,
            }),
        }
    }
    out
}

/// Pairs `url` with each variant obtained by replacing a `from` fragment
/// in its path by `to`.
pub fn url_pattern_candidates<S: AsRef<str>>(url: &str, substitutions: &[(S, S)]) -> Vec<CandidatePair> {
    // path starts after "scheme://authority"
    let path_start = url.find("://").map(|i| i + 3).and_then(|i| url[i..].find('/').map(|j| i + j)).unwrap_or(0);
    let (head, path) = url.split_at(path_start);
    let mut out: Vec<CandidatePair> = Vec::new();
    for (from, to) in substitutions {
        let (from, to) = (from.as_ref(), to.as_ref());
        if from.is_empty() || !path.contains(from) {
            continue;
        }
        let other = format!("{head}{}", path.replace(from, to));
        if other != url && !out.iter().any(|c| c.url2 == other) {
            out.push(CandidatePair {
                url1: String::from(url),
                url2: other,
                source_hub: String::from(url),
                line_distance: 0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn anchor(href: &str, text: &str) -> Anchor {
        Anchor { href: href.into(), text: text.into(), ..Anchor::default() }
    }

    #[test]
    fn query_string() {
        assert_eq!(build_query("english", "french"), r#"anchor:"english" AND anchor:"french""#);
        assert_eq!(build_query("english", "english"), r#"anchor:"english" AND anchor:"english""#);
        assert_eq!(build_query("english", "spanish"), r#"anchor:"english" AND anchor:"spanish""#);
    }

    #[test]
    fn matching_fields() {
        assert!(anchor_matches(&anchor("/fr/index.html", "French"), &["french"]));
        assert!(anchor_matches(&anchor("french.gif", ""), &["french"]));
        assert!(!anchor_matches(&anchor("/about.html", "About"), &["french"]));
        let flag = Anchor { href: "/x.html".into(), alts: vec!["Version FRANÇAISE".into()], ..Anchor::default() };
        assert!(anchor_matches(&flag, &["française"]));
        let img = Anchor { href: "/x.html".into(), images: vec!["img/spanish.gif".into()], ..Anchor::default() };
        assert!(anchor_matches(&img, &["english", "Spanish"]));
    }

    #[test]
    fn anchors_parsed_with_lines() {
        let html = "<html>\n<a href='/en.html'>English</a>\n<p>x\n<A HREF=\"/es.html\"><img src=es.gif alt=\"Espa&ntilde;ol\"></A>";
        let a = parse_anchors(html);
        assert_eq!(a.len(), 2);
        assert_eq!((a[0].href.as_str(), a[0].text.as_str(), a[0].line), ("/en.html", "English", 2));
        assert_eq!(a[1].alts, vec!["Español"]);
        assert_eq!(a[1].images, vec!["es.gif"]);
        assert_eq!(a[1].line, 4);
    }

    #[test]
    fn anchors_without_href_or_unclosed() {
        let a = parse_anchors("<a name=top>English</a><a href=/x>one<a href=/y>two");
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].text, "one");
        assert_eq!(a[1].text, "two");
    }

    fn hub(gap_lines: usize) -> String {
        let mut s = String::from("<a href=\"/en.html\">English</a>\n");
        for _ in 1..gap_lines {
            s.push_str("<p>filler</p>\n");
        }
        s.push_str("<a href=\"/es.html\">Spanish</a>\n");
        s
    }

    #[test]
    fn distance_bound_is_inclusive() {
        let cfg = GeneratorConfig::new("english", "spanish");
        let c = extract_raw_candidates(&hub(3), "hub", &cfg);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].url1.as_str(), c[0].url2.as_str(), c[0].line_distance), ("/en.html", "/es.html", 3));
        assert_eq!(extract_raw_candidates(&hub(10), "hub", &cfg).len(), 1);
        assert!(extract_raw_candidates(&hub(11), "hub", &cfg).is_empty());
    }

    #[test]
    fn cross_product_of_matches() {
        let html = "<a href=/en1.html>English</a>\n<a href=/en2.html>English (UK)</a>\n<a href=/es.html>Spanish</a>";
        let cfg = GeneratorConfig::new("english", "spanish");
        let c = extract_raw_candidates(html, "hub", &cfg);
        let urls: Vec<_> = c.iter().map(|c| (c.url1.as_str(), c.url2.as_str())).collect();
        assert_eq!(urls, vec![("/en1.html", "/es.html"), ("/en2.html", "/es.html")]);
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let html = "<a href=/en.html>English</a> <a href=/es.html>Spanish</a>\n<a href=/en.html>English</a>";
        let cfg = GeneratorConfig::new("english", "spanish");
        let c = extract_raw_candidates(html, "hub", &cfg);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].line_distance, 0);
    }

    #[test]
    fn url_patterns() {
        let c = url_pattern_candidates("http://x.org/en/program.html", &[("/en/", "/fr/")]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].url2, "http://x.org/fr/program.html");
        assert!(url_pattern_candidates("http://x.org/program.html", &[("/en/", "/fr/")]).is_empty());
        let c = url_pattern_candidates("http://x.org/index-e.html", &[("-e.", "-s.")]);
        assert_eq!(c[0].url2, "http://x.org/index-s.html");
        // the authority is never rewritten
        assert!(url_pattern_candidates("http://en.org/a.html", &[("en.", "fr.")]).is_empty());
    }
}
