//! Character n-gram language identification.
//!
//! Text is lowercased and whitespace runs are collapsed to one space.
//! Each character is predicted from the `n - 1` characters before it,
//! with the start of text padded by a reserved symbol. Distributions are
//! add-one smoothed over the training alphabet plus one shared symbol
//! for characters never seen in training.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::log;

use crate::evaluate::EvaluationReport;

/// Start-of-text padding; stripped from input during normalization.
pub const PAD: char = '\u{2}';

pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LangIdError {
    /// The normalized training text is shorter than the model order.
    CorpusTooShort {
        chars: usize,
        order: usize,
    },
    ZeroOrder,
    EmptyText,
    NoModels,
    /// A count table references a character outside the alphabet.
    Inconsistent(String),
}

impl fmt::Display for LangIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangIdError::CorpusTooShort { chars, order } => {
                write!(f, "training text has {chars} characters, fewer than the order {order}")
            }
            LangIdError::ZeroOrder => f.write_str("n-gram order must be at least 1"),
            LangIdError::EmptyText => f.write_str("cannot classify empty text"),
            LangIdError::NoModels => f.write_str("no language models given"),
            LangIdError::Inconsistent(msg) => write!(f, "inconsistent model: {msg}"),
        }
    }
}

impl core::error::Error for LangIdError {}

/// Lowercases and collapses whitespace runs to a single space.
pub fn normalize(text: &str) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars().filter(|c| *c != PAD) {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.extend(c.to_lowercase());
            in_space = false;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    language: String,
    order: usize,
    alphabet: BTreeSet<char>,
    counts: BTreeMap<String, BTreeMap<char, u64>>,
    context_totals: BTreeMap<String, u64>,
    training_chars: usize,
}

impl NgramModel {
    pub fn train(text: &str, language: impl Into<String>, order: usize) -> Result<Self, LangIdError> {
        if order == 0 {
            return Err(LangIdError::ZeroOrder);
        }
        let chars = normalize(text);
        if chars.len() < order {
            return Err(LangIdError::CorpusTooShort { chars: chars.len(), order });
        }
        let mut counts: BTreeMap<String, BTreeMap<char, u64>> = BTreeMap::new();
        for (context, next) in windows(&[], &chars, order) {
            *counts.entry(context).or_default().entry(next).or_default() += 1;
        }
        Self::from_parts(language, order, chars.iter().copied().collect(), counts, chars.len())
    }

    /// Assembles a model from its stored parts, checking consistency.
    pub fn from_parts(
        language: impl Into<String>,
        order: usize,
        alphabet: BTreeSet<char>,
        counts: BTreeMap<String, BTreeMap<char, u64>>,
        training_chars: usize,
    ) -> Result<Self, LangIdError> {
        if order == 0 {
            return Err(LangIdError::ZeroOrder);
        }
        let mut context_totals = BTreeMap::new();
        for (context, nexts) in &counts {
            if context.chars().count() != order - 1 {
                return Err(LangIdError::Inconsistent(alloc::format!(
                    "context {context:?} does not have {} characters",
                    order - 1
                )));
            }
            if let Some(c) = nexts.keys().find(|c| !alphabet.contains(c)) {
                return Err(LangIdError::Inconsistent(alloc::format!("{c:?} is not in the alphabet")));
            }
            context_totals.insert(context.clone(), nexts.values().sum());
        }
        Ok(NgramModel { language: language.into(), order, alphabet, counts, context_totals, training_chars })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn counts(&self) -> &BTreeMap<String, BTreeMap<char, u64>> {
        &self.counts
    }

    pub fn training_chars(&self) -> usize {
        self.training_chars
    }

    /// `P(next | context)`. Characters outside the alphabet share the
    /// unseen-symbol mass.
    pub fn probability(&self, context: &str, next: char) -> f64 {
        let total = self.context_totals.get(context).copied().unwrap_or(0);
        let count = if self.alphabet.contains(&next) {
            self.counts.get(context).and_then(|m| m.get(&next)).copied().unwrap_or(0)
        } else {
            0
        };
        (count + 1) as f64 / (total + self.alphabet.len() as u64 + 1) as f64
    }

    /// Probability of the unseen symbol after `context`.
    pub fn unseen_probability(&self, context: &str) -> f64 {
        let total = self.context_totals.get(context).copied().unwrap_or(0);
        1.0 / (total + self.alphabet.len() as u64 + 1) as f64
    }

    /// Natural-log probability of each character of the normalized text.
    pub fn window_log_probs(&self, text: &str) -> Vec<f64> {
        self.scores_after(&[], &normalize(text))
    }

    pub fn log_likelihood(&self, text: &str) -> f64 {
        self.window_log_probs(text).iter().sum()
    }

    /// Log-likelihood of already-normalized `chars` following `history`.
    /// Only the last `n - 1` characters of history matter; shorter
    /// history is padded.
    pub fn log_likelihood_after(&self, history: &[char], chars: &[char]) -> f64 {
        self.scores_after(history, chars).iter().sum()
    }

    fn scores_after(&self, history: &[char], chars: &[char]) -> Vec<f64> {
        windows(history, chars, self.order).map(|(context, next)| log(self.probability(&context, next))).collect()
    }
}

/// (context, next) for each character of `chars`, where the context is
/// the preceding `order - 1` characters of `history ++ chars`, padded.
fn windows<'a>(history: &[char], chars: &'a [char], order: usize) -> impl Iterator<Item = (String, char)> + 'a {
    let k = order - 1;
    let mut padded: Vec<char> = Vec::with_capacity(k + chars.len());
    let tail = &history[history.len().saturating_sub(k)..];
    padded.extend(core::iter::repeat_n(PAD, k - tail.len()));
    padded.extend_from_slice(tail);
    padded.extend_from_slice(chars);
    (0..chars.len()).map(move |i| (padded[i..i + k].iter().collect(), chars[i]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Index into the model list of the winning model.
    pub best: usize,
    pub language: String,
    /// One (language, log-likelihood) per model, in model order.
    pub scores: Vec<(String, f64)>,
}

/// Picks the model under which `text` is most likely; ties go to the
/// earlier model.
pub fn classify(text: &str, models: &[NgramModel]) -> Result<Classification, LangIdError> {
    if models.is_empty() {
        return Err(LangIdError::NoModels);
    }
    if text.trim().is_empty() {
        return Err(LangIdError::EmptyText);
    }
    let scores: Vec<(String, f64)> =
        models.iter().map(|m| (String::from(m.language()), m.log_likelihood(text))).collect();
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate().skip(1) {
        if *s > scores[best].1 {
            best = i;
        }
    }
    Ok(Classification { best, language: scores[best].0.clone(), scores })
}

/// Passes an accepted report only if the left text classifies as
/// `expected.0` and the right as `expected.1`. A side without text, or
/// a report that was not accepted, fails.
pub fn language_filter(
    report: &EvaluationReport,
    left_text: &str,
    right_text: &str,
    expected: (&str, &str),
    models: &[NgramModel],
) -> bool {
    if !report.is_accept() {
        return false;
    }
    let is = |text: &str, lang: &str| classify(text, models).is_ok_and(|c| c.language == lang);
    is(left_text, expected.0) && is(right_text, expected.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        let n: String = normalize("  Hello\t\n WORLD ").into_iter().collect();
        assert_eq!(n, " hello world ");
    }

    #[test]
    fn single_symbol_corpus() {
        let m = NgramModel::train("aaaa", "x", 2).unwrap();
        let p_a = m.probability("a", 'a');
        assert!(p_a > m.probability("a", 'b'));
        assert!(p_a > m.unseen_probability("a"));
        // counts: pad->a once, a->a three times; alphabet {a}
        assert!((p_a - 4.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert_eq!(NgramModel::train("ab", "x", 3), Err(LangIdError::CorpusTooShort { chars: 2, order: 3 }));
        assert_eq!(NgramModel::train("abc", "x", 0), Err(LangIdError::ZeroOrder));
    }

    #[test]
    fn distributions_sum_to_one() {
        let m = NgramModel::train("the cat sat on the mat with the hat", "en", 3).unwrap();
        for context in m.counts().keys().map(String::as_str).chain(["zz", "\u{2}\u{2}"]) {
            let total: f64 =
                m.alphabet().iter().map(|c| m.probability(context, *c)).sum::<f64>() + m.unseen_probability(context);
            assert!((total - 1.0).abs() < 1e-9, "{context:?}: {total}");
        }
    }

    #[test]
    fn classify_errors() {
        let m = NgramModel::train("abcabc", "x", 3).unwrap();
        assert_eq!(classify("", core::slice::from_ref(&m)), Err(LangIdError::EmptyText));
        assert_eq!(classify("abc", &[]), Err(LangIdError::NoModels));
    }

    #[test]
    fn ties_go_to_first_model() {
        let a = NgramModel::train("abcabc", "a", 3).unwrap();
        let mut b = a.clone();
        b.language = "b".into();
        assert_eq!(classify("abc", &[a.clone(), b.clone()]).unwrap().language, "a");
        assert_eq!(classify("abc", &[b, a]).unwrap().language, "b");
    }

    #[test]
    fn inconsistent_parts_rejected() {
        let mut counts = BTreeMap::new();
        counts.insert(String::from("ab"), BTreeMap::from([('z', 1)]));
        let alphabet = BTreeSet::from(['a', 'b']);
        assert!(NgramModel::from_parts("x", 3, alphabet.clone(), counts, 3).is_err());
        let mut counts = BTreeMap::new();
        counts.insert(String::from("a"), BTreeMap::from([('b', 1)]));
        assert!(NgramModel::from_parts("x", 3, alphabet, counts, 3).is_err());
    }
}
