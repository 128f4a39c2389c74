//! Precision and recall of accept decisions against gold judgments.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoldLabel {
    pub pair_id: String,
    /// The two pages were meant to carry the same content.
    pub is_translation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreSummary {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub accepted_count: usize,
    pub gold_positive_count: usize,
    /// `tp / accepted`; `None` when nothing was accepted.
    pub precision: Option<f64>,
    /// `tp / gold positives`; `None` when there are no gold positives.
    pub recall: Option<f64>,
}

impl ScoreSummary {
    pub fn from_counts(true_positives: usize, accepted_count: usize, gold_positive_count: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        ScoreSummary {
            true_positives,
            false_positives: accepted_count.saturating_sub(true_positives),
            false_negatives: gold_positive_count.saturating_sub(true_positives),
            accepted_count,
            gold_positive_count,
            precision: ratio(true_positives, accepted_count),
            recall: ratio(true_positives, gold_positive_count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    MissingGold(String),
    DuplicateGold(String),
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::MissingGold(id) => write!(f, "no gold label for pair {id}"),
            ScoreError::DuplicateGold(id) => write!(f, "pair {id} has more than one gold label"),
        }
    }
}

impl core::error::Error for ScoreError {}

/// Scores `(pair_id, accepted)` decisions. Gold positives are counted
/// over the decided pairs only; labels for other pairs are ignored.
pub fn score<'a, I>(decisions: I, gold: &[GoldLabel]) -> Result<ScoreSummary, ScoreError>
where
    I: IntoIterator<Item = (&'a str, bool)>,
{
    let mut labels: BTreeMap<&str, bool> = BTreeMap::new();
    for g in gold {
        if labels.insert(g.pair_id.as_str(), g.is_translation).is_some() {
            return Err(ScoreError::DuplicateGold(g.pair_id.clone()));
        }
    }
    let (mut tp, mut accepted, mut positives) = (0, 0, 0);
    for (id, accept) in decisions {
        let truth = *labels.get(id).ok_or_else(|| ScoreError::MissingGold(String::from(id)))?;
        accepted += accept as usize;
        positives += truth as usize;
        tp += (accept && truth) as usize;
    }
    Ok(ScoreSummary::from_counts(tp, accepted, positives))
}
