mod common;

use std::fs;
use std::path::Path;

use bitext::formats::{read_gold, read_model, read_segments};
use bitext::hubs::LocalFileHubs;
use bitext::pipeline::{
    read_records, run_pipeline, Disposition, LangIdSettings, PairInput, PipelineConfig, RunOutcome,
};
use bitext_core::langid::NgramModel;
use bitext_core::score::score;
use common::{corpus, corpus_key, fixtures, key_ids};

fn run(dir: &Path, langid: bool, jobs: usize) -> RunOutcome {
    let mut cfg = PipelineConfig::new(dir.join("cache"), dir.join("out"));
    cfg.generator.lang2_names = vec!["spanish".into(), "español".into()];
    cfg.jobs = jobs;
    if langid {
        cfg.langid = Some(LangIdSettings {
            model_paths: vec![fixtures().join("langid/en.model"), fixtures().join("langid/es.model")],
            expected: ("en".into(), "es".into()),
        });
    }
    let hubs = LocalFileHubs::new(vec![corpus().join("hubs")]);
    run_pipeline(&cfg, &PairInput::Hubs(Box::new(hubs))).unwrap()
}

#[test]
fn dispositions_match_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(dir.path(), false, 4);
    let key = corpus_key();
    assert_eq!(outcome.records.len(), key.len());
    for (rec, (id, kind)) in outcome.records.iter().zip(&key) {
        assert_eq!(&rec.pair_id, id);
        let expected = match kind.as_str() {
            "identical" | "duplicate" => Disposition::Identical,
            "missing" | "empty" => Disposition::Unretrievable,
            "non_html" => Disposition::NonHtml,
            _ => Disposition::Evaluated,
        };
        assert_eq!(rec.disposition, expected, "{id} ({kind})");
        assert_eq!(rec.accepted, matches!(kind.as_str(), "parallel" | "same_language"), "{id} ({kind})");
    }
    let m = &outcome.manifest;
    assert!(m.is_conserved());
    assert_eq!((m.generated, m.identical, m.duplicate_entries), (30, 3, 1));
    assert_eq!((m.unretrievable, m.non_html, m.evaluated), (4, 2, 21));
    assert_eq!(m.accepted_pairs, key_ids(&["parallel", "same_language"]));
    assert_eq!(outcome.exit_code(), 0);
}

#[test]
fn language_filter_removes_the_same_language_pair() {
    let dir = tempfile::tempdir().unwrap();
    let off = run(&dir.path().join("off"), false, 2);
    let on = run(&dir.path().join("on"), true, 2);
    assert_eq!(on.manifest.accepted + 1, off.manifest.accepted);
    assert_eq!(on.manifest.accepted_pairs, key_ids(&["parallel"]));
    assert_eq!(on.manifest.reject_reasons.get("language"), Some(&1));
    let same = key_ids(&["same_language"]);
    let rec = on.records.iter().find(|r| r.pair_id == same[0]).unwrap();
    let check = rec.language.as_ref().unwrap();
    assert_eq!((check.left.as_deref(), check.right.as_deref(), check.passed), (Some("en"), Some("en"), false));
    assert!(!dir.path().join("on/out/segments").join(format!("{}.tsv", same[0])).exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), false, 1);
    let manifest = fs::read(dir.path().join("out/manifest.json")).unwrap();
    let reports = fs::read(dir.path().join("out/reports.jsonl")).unwrap();
    let candidates = fs::read(dir.path().join("out/candidates.tsv")).unwrap();
    run(dir.path(), false, 8);
    assert_eq!(fs::read(dir.path().join("out/manifest.json")).unwrap(), manifest);
    assert_eq!(fs::read(dir.path().join("out/reports.jsonl")).unwrap(), reports);
    assert_eq!(fs::read(dir.path().join("out/candidates.tsv")).unwrap(), candidates);
    let info = fs::read_to_string(dir.path().join("out/run_info.json")).unwrap();
    assert!(info.contains("started_at"));
    assert!(!String::from_utf8(manifest).unwrap().contains("started_at"));
}

#[test]
fn score_matches_a_recount_of_the_files() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), false, 4);
    let records = read_records(&dir.path().join("out/reports.jsonl")).unwrap();
    let gold = read_gold(fs::File::open(corpus().join("gold.tsv")).map(std::io::BufReader::new).unwrap()).unwrap();
    let evaluated: Vec<_> = records.iter().filter(|r| r.disposition == Disposition::Evaluated).collect();
    let summary = score(evaluated.iter().map(|r| (r.pair_id.as_str(), r.accepted)), &gold).unwrap();

    let truth = |id: &str| gold.iter().find(|g| g.pair_id == id).unwrap().is_translation;
    let tp = evaluated.iter().filter(|r| r.accepted && truth(&r.pair_id)).count();
    let accepted = evaluated.iter().filter(|r| r.accepted).count();
    let positives = evaluated.iter().filter(|r| truth(&r.pair_id)).count();
    assert_eq!(
        (summary.true_positives, summary.accepted_count, summary.gold_positive_count),
        (tp, accepted, positives)
    );
    assert_eq!((tp, accepted, positives), (12, 13, 12));
    assert!((summary.precision.unwrap() - 12.0 / 13.0).abs() < 1e-15);
    assert_eq!(summary.recall, Some(1.0));
}

#[test]
fn segment_files_for_accepted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(dir.path(), false, 4);
    let seg_dir = dir.path().join("out/segments");
    let mut names: Vec<String> =
        fs::read_dir(&seg_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    let expected: Vec<String> = outcome.manifest.accepted_pairs.iter().map(|id| format!("{id}.tsv")).collect();
    assert_eq!(names, expected);

    let library = outcome.records.iter().find(|r| r.url1.ends_with("/en/library.html")).unwrap();
    let segs = read_segments(
        fs::File::open(seg_dir.join(format!("{}.tsv", library.pair_id))).map(std::io::BufReader::new).unwrap(),
    )
    .unwrap();
    assert_eq!(segs[0].left_text, "City Library Opening Hours");
    assert_eq!(segs[0].right_text, "Horario de la Biblioteca Municipal");
    assert!(segs.iter().all(|s| s.url1 == library.url1 && s.url2 == library.url2));
    let report = library.report.as_ref().unwrap();
    assert_eq!(segs.len(), report.segments.len());
}

#[test]
fn decoded_spanish_pages() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(dir.path(), false, 4);
    // one page is windows-1252, another spells accents as references
    for slug in ["water", "museum"] {
        let rec = outcome.records.iter().find(|r| r.url2.ends_with(&format!("/es/{slug}.html"))).unwrap();
        let text: String = rec.report.as_ref().unwrap().segments.iter().map(|s| s.right_text.as_str()).collect();
        assert!(text.contains('ó') && !text.contains('\u{fffd}') && !text.contains("&oacute;"), "{slug}");
    }
}

#[test]
fn bundled_models_match_their_training_text() {
    for lang in ["en", "es"] {
        let text = fs::read_to_string(fixtures().join(format!("langid/{lang}.txt"))).unwrap();
        let trained = NgramModel::train(&text, lang, 3).unwrap();
        let stored = read_model(std::io::BufReader::new(
            fs::File::open(fixtures().join(format!("langid/{lang}.model"))).unwrap(),
        ))
        .unwrap();
        assert_eq!(stored, trained);
    }
}

#[test]
fn candidate_input_skips_generation() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&dir.path().join("a"), false, 2);
    let text = fs::read(dir.path().join("a/out/candidates.tsv")).unwrap();
    let pairs = bitext::formats::read_candidates(&text[..]).unwrap();
    let cfg = PipelineConfig::new(dir.path().join("a/cache"), dir.path().join("b/out"));
    let second = run_pipeline(&cfg, &PairInput::Candidates(pairs)).unwrap();
    assert_eq!(second.manifest, first.manifest);
    assert_eq!(second.run_info.network_requests, 0);
}
