//! Language identification on small English and Spanish samples.

use bitext_core::langid::{classify, language_filter, normalize, NgramModel, DEFAULT_ORDER};
use bitext_core::{evaluate_pair, EvaluatorConfig, LinearDocument};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EN: &str = include_str!("../../bitext/fixtures/langid/en.txt");
const ES: &str = include_str!("../../bitext/fixtures/langid/es.txt");
const EN_HELDOUT: &str = include_str!("../../bitext/fixtures/langid/en_heldout.txt");
const ES_HELDOUT: &str = include_str!("../../bitext/fixtures/langid/es_heldout.txt");

fn models() -> Vec<NgramModel> {
    vec![NgramModel::train(EN, "en", DEFAULT_ORDER).unwrap(), NgramModel::train(ES, "es", DEFAULT_ORDER).unwrap()]
}

fn snippets(text: &str, count: usize, len: usize, seed: u64) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let start = rng.random_range(0..chars.len() - len);
            chars[start..start + len].iter().collect()
        })
        .collect()
}

#[test]
fn own_model_scores_higher_per_character() {
    let [en, es] = <[NgramModel; 2]>::try_from(models()).unwrap();
    let chars = normalize(EN).len() as f64;
    assert!(en.log_likelihood(EN) / chars > es.log_likelihood(EN) / chars);
    assert!(es.log_likelihood(ES) > en.log_likelihood(ES));
}

#[test]
fn self_classification() {
    let m = models();
    assert_eq!(classify(EN, &m).unwrap().language, "en");
    assert_eq!(classify(ES, &m).unwrap().language, "es");
}

#[test]
fn held_out_snippets() {
    let m = models();
    let en_hits =
        snippets(EN_HELDOUT, 100, 200, 7).iter().filter(|s| classify(s, &m).unwrap().language == "en").count();
    assert!(en_hits >= 95, "{en_hits}/100 English snippets");
    let es_hits =
        snippets(ES_HELDOUT, 100, 200, 8).iter().filter(|s| classify(s, &m).unwrap().language == "es").count();
    assert!(es_hits >= 95, "{es_hits}/100 Spanish snippets");
}

#[test]
fn order_of_models_does_not_change_winner() {
    let m = models();
    let rev: Vec<_> = m.iter().rev().cloned().collect();
    for s in snippets(EN_HELDOUT, 20, 80, 3).iter().chain(&snippets(ES_HELDOUT, 20, 80, 4)) {
        assert_eq!(classify(s, &m).unwrap().language, classify(s, &rev).unwrap().language);
    }
}

fn sentences(text: &str) -> Vec<&str> {
    text.split_inclusive(". ").map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn page(paragraphs: &[&str]) -> String {
    let body: String = paragraphs.iter().map(|p| format!("<p>{p}</p>\n")).collect();
    format!("<html><body>\n{body}</body></html>")
}

#[test]
fn filter_on_accepted_pairs() {
    let m = models();
    let en_sentences = sentences(EN);
    let es_sentences = sentences(ES);
    assert_eq!(en_sentences.len(), es_sentences.len());
    let en = LinearDocument::from_html("en", &page(&en_sentences));
    let es = LinearDocument::from_html("es", &page(&es_sentences));
    let cfg = EvaluatorConfig::default();

    let report = evaluate_pair(&en, &es, &cfg);
    assert!(report.is_accept(), "{report:?}");
    assert!(language_filter(&report, &en.text(), &es.text(), ("en", "es"), &m));

    // English on both sides: structurally parallel, wrong language
    // each sentence padded with a clause, so lengths stay correlated
    let padded: Vec<String> = en_sentences.iter().map(|s| format!("{s} That is all.")).collect();
    let padded: Vec<&str> = padded.iter().map(String::as_str).collect();
    let en2 = LinearDocument::from_html("en2", &page(&padded));
    let report = evaluate_pair(&en, &en2, &cfg);
    assert!(report.is_accept(), "{report:?}");
    assert!(!language_filter(&report, &en.text(), &en2.text(), ("en", "es"), &m));

    // no text on the left
    let empty = LinearDocument::from_html("bare", "<html><body><img src=x.gif></body></html>");
    assert!(!language_filter(&report, &empty.text(), &es.text(), ("en", "es"), &m));
}

proptest! {
    #[test]
    fn scores_add_over_concatenation(a in "[a-z ñé]{1,40}", b in "[a-z ñé]{1,40}") {
        let m = &models()[0];
        let (na, nb) = (normalize(&a), normalize(&b));
        let whole: Vec<char> = na.iter().chain(&nb).copied().collect();
        let joined = m.log_likelihood_after(&[], &whole);
        let split = m.log_likelihood_after(&[], &na) + m.log_likelihood_after(&na, &nb);
        prop_assert!((joined - split).abs() < 1e-9);
        let text: String = whole.iter().collect();
        if !text.contains("  ") {
            let windows: f64 = m.window_log_probs(&text).iter().sum();
            prop_assert!((joined - windows).abs() < 1e-9);
        }
    }
}
