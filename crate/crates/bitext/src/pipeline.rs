//! generate → fetch → dedup → evaluate → optional language filter.
//!
//! Outputs in the run directory:
//!
//! - `candidates.tsv`: every generated pair, in generation order.
//!   Pair `i` (from 1) is identified as `c0001`, `c0002`, ...
//! - `reports.jsonl`: one [`PairRecord`] per pair, same order.
//! - `segments/<pair id>.tsv`: aligned chunks of each accepted pair.
//! - `manifest.json`: disposition counts. Deterministic for a given
//!   cache and configuration.
//! - `run_info.json`: timestamps and request counts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bitext_core::langid::{classify, language_filter, NgramModel};
use bitext_core::{
    evaluate_pair, CandidatePair, EvaluationReport, EvaluatorConfig, GeneratorConfig, LinearDocument, RejectReason,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{now_secs, write_atomic, Cache};
use crate::decode::{charset_from_content_type, linearize_bytes};
use crate::fetch::{dedup_identical, FetchPolicy, FetchResult, FetchStatus, Fetcher};
use crate::formats::{read_model, write_candidates, write_segments};
use crate::hubs::{generate, HubSource};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io(format!("{what} {}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangIdSettings {
    pub model_paths: Vec<PathBuf>,
    /// Language tags expected on the left and right sides.
    pub expected: (String, String),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    pub evaluator: EvaluatorConfig,
    pub fetch: FetchPolicy,
    pub langid: Option<LangIdSettings>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

impl PipelineConfig {
    pub fn new(cache_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            generator: GeneratorConfig::new("english", "spanish"),
            evaluator: EvaluatorConfig::default(),
            fetch: FetchPolicy::default(),
            langid: None,
            cache_dir: cache_dir.into(),
            output_dir: output_dir.into(),
            jobs: default_jobs(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.jobs == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if !self.generator.is_valid() {
            return bad("both languages need at least one non-empty name".into());
        }
        if let Err(e) = self.evaluator.validate() {
            return bad(e.to_string());
        }
        if let Some(l) = &self.langid {
            if l.model_paths.is_empty() {
                return bad("language filter enabled without models".into());
            }
            if let Some(p) = l.model_paths.iter().find(|p| !p.is_file()) {
                return bad(format!("language model {} does not exist", p.display()));
            }
        }
        Ok(())
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

pub enum PairInput {
    Hubs(Box<dyn HubSource + Sync>),
    Candidates(Vec<CandidatePair>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    /// A repeated entry, or both sides are the same page.
    Identical,
    Unretrievable,
    NonHtml,
    Evaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageCheck {
    pub left: Option<String>,
    pub right: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub url1: String,
    pub url2: String,
    pub source_hub: String,
    pub line_distance: usize,
    pub disposition: Disposition,
    pub accepted: bool,
    /// Earlier pair with the same two locators.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duplicate_of: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub left_fetch: Option<FetchStatus>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub right_fetch: Option<FetchStatus>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<EvaluationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub language: Option<LanguageCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub k: f64,
    pub p_threshold: f64,
    pub min_pairs: usize,
    pub max_line_distance: usize,
    pub langid_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generated: usize,
    /// Includes `duplicate_entries`.
    pub identical: usize,
    pub duplicate_entries: usize,
    pub unretrievable: usize,
    pub non_html: usize,
    pub evaluated: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Unretrievable pairs by the status of their first failing side.
    pub unretrievable_by_status: BTreeMap<String, usize>,
    pub reject_reasons: BTreeMap<String, usize>,
    /// Pairs that hit an internal error, such as an unreadable cache entry.
    pub errors: usize,
    pub accepted_pairs: Vec<String>,
    pub settings: RunSettings,
}

impl Manifest {
    /// generated = identical + unretrievable + non-HTML + evaluated, and
    /// evaluated = accepted + rejected.
    pub fn is_conserved(&self) -> bool {
        self.generated == self.identical + self.unretrievable + self.non_html + self.evaluated
            && self.evaluated == self.accepted + self.rejected
    }

    fn tally(records: &[PairRecord], settings: RunSettings) -> Self {
        let mut m = Manifest {
            generated: records.len(),
            identical: 0,
            duplicate_entries: 0,
            unretrievable: 0,
            non_html: 0,
            evaluated: 0,
            accepted: 0,
            rejected: 0,
            unretrievable_by_status: BTreeMap::new(),
            reject_reasons: BTreeMap::new(),
            errors: 0,
            accepted_pairs: Vec::new(),
            settings,
        };
        for r in records {
            m.errors += r.error.is_some() as usize;
            match r.disposition {
                Disposition::Identical => {
                    m.identical += 1;
                    m.duplicate_entries += r.duplicate_of.is_some() as usize;
                }
                Disposition::Unretrievable => {
                    m.unretrievable += 1;
                    let label = [&r.left_fetch, &r.right_fetch]
                        .into_iter()
                        .flatten()
                        .find(|s| !s.has_body())
                        .map_or("error", FetchStatus::label);
                    *m.unretrievable_by_status.entry(label.to_string()).or_default() += 1;
                }
                Disposition::NonHtml => m.non_html += 1,
                Disposition::Evaluated => {
                    m.evaluated += 1;
                    if r.accepted {
                        m.accepted += 1;
                        m.accepted_pairs.push(r.pair_id.clone());
                    } else {
                        m.rejected += 1;
                        let reason =
                            r.report.as_ref().and_then(|rep| rep.reject_reason).map_or("error", |x| x.as_str());
                        *m.reject_reasons.entry(reason.to_string()).or_default() += 1;
                    }
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub started_at: u64,
    pub finished_at: u64,
    pub elapsed_ms: u128,
    pub network_requests: usize,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub records: Vec<PairRecord>,
    pub run_info: RunInfo,
}

impl RunOutcome {
    /// 0 when every pair was processed, 1 when some pair hit an error.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.manifest.errors > 0)
    }
}

pub fn pair_id(index: usize) -> String {
    format!("c{:04}", index + 1)
}

pub fn load_models(paths: &[PathBuf]) -> Result<Vec<NgramModel>, PipelineError> {
    paths
        .iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(|e| io_err("opening model", p, e))?;
            read_model(std::io::BufReader::new(f))
                .map_err(|e| PipelineError::Config(format!("model {}: {e}", p.display())))
        })
        .collect()
}

/// Linearizes a fetched body, decoding with the charset the transport
/// declared.
pub fn load_document(fetcher: &Fetcher, result: &FetchResult) -> Result<LinearDocument, String> {
    let body = fetcher.body(result).ok_or_else(|| format!("cached body for {} is missing", result.locator))?;
    let hint = result.content_type.as_deref().and_then(charset_from_content_type);
    Ok(linearize_bytes(&result.locator, &body, hint))
}

struct Evaluation {
    report: EvaluationReport,
    language: Option<LanguageCheck>,
}

fn evaluate_one(
    left: &LinearDocument,
    right: &LinearDocument,
    cfg: &EvaluatorConfig,
    langid: Option<(&[NgramModel], &(String, String))>,
) -> Evaluation {
    let mut report = evaluate_pair(left, right, cfg);
    let mut language = None;
    if let (true, Some((models, expected))) = (report.is_accept(), langid) {
        let (lt, rt) = (left.text(), right.text());
        let passed = language_filter(&report, &lt, &rt, (&expected.0, &expected.1), models);
        let lang = |t: &str| classify(t, models).ok().map(|c| c.language);
        language = Some(LanguageCheck { left: lang(&lt), right: lang(&rt), passed });
        if !passed {
            report.reject_with(RejectReason::Language);
            report.segments.clear();
        }
    }
    Evaluation { report, language }
}

pub fn run_pipeline(cfg: &PipelineConfig, input: &PairInput) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let started = Instant::now();
    let started_at = now_secs();
    let models = match &cfg.langid {
        Some(l) => {
            let models = load_models(&l.model_paths)?;
            for tag in [&l.expected.0, &l.expected.1] {
                if !models.iter().any(|m| m.language() == tag) {
                    return Err(PipelineError::Config(format!("no language model for {tag}")));
                }
            }
            Some(models)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let cache = Cache::open(&cfg.cache_dir).map_err(|e| io_err("opening cache", &cfg.cache_dir, e))?;
    let fetcher = Fetcher::new(cfg.fetch.clone(), cache);
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| io_err("creating", out, e))?;

    let pairs = match input {
        PairInput::Candidates(p) => p.clone(),
        PairInput::Hubs(source) => {
            generate(source.as_ref(), &cfg.generator, &fetcher).map_err(|e| PipelineError::Io(format!("{e:#}")))?
        }
    };
    let mut buf = Vec::new();
    write_candidates(&mut buf, &pairs).expect("writing to memory");
    let path = out.join("candidates.tsv");
    write_atomic(&path, &buf).map_err(|e| io_err("writing", &path, e))?;

    // Repeated entries and self-pairs need no retrieval.
    let mut seen = HashSet::new();
    let mut locators: Vec<&str> = Vec::new();
    for p in &pairs {
        if seen.insert((&p.url1, &p.url2)) && p.url1 != p.url2 {
            locators.extend([p.url1.as_str(), p.url2.as_str()]);
        }
    }
    let mut unique = HashSet::new();
    locators.retain(|l| unique.insert(*l));
    let results: HashMap<String, FetchResult> =
        pool.install(|| locators.par_iter().map(|l| (l.to_string(), fetcher.fetch(l))).collect());

    let dedup = dedup_identical(&pairs, &results);
    let mut records: Vec<PairRecord> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| PairRecord {
            pair_id: pair_id(i),
            url1: p.url1.clone(),
            url2: p.url2.clone(),
            source_hub: p.source_hub.clone(),
            line_distance: p.line_distance,
            disposition: Disposition::Identical,
            accepted: false,
            duplicate_of: None,
            left_fetch: results.get(&p.url1).map(|r| r.status.clone()),
            right_fetch: results.get(&p.url2).map(|r| r.status.clone()),
            report: None,
            language: None,
            error: None,
        })
        .collect();
    let mut first: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        first.entry((&p.url1, &p.url2)).or_insert(i);
    }
    for &i in &dedup.duplicates {
        let p = &pairs[i];
        records[i].duplicate_of = Some(pair_id(first[&(p.url1.as_str(), p.url2.as_str())]));
        records[i].left_fetch = None;
        records[i].right_fetch = None;
    }

    let mut to_evaluate = Vec::new();
    for &i in &dedup.kept {
        let p = &pairs[i];
        let (l, r) = (&results[&p.url1].status, &results[&p.url2].status);
        let sides = [l, r];
        records[i].disposition = if sides.iter().any(|s| !s.has_body() && !matches!(s, FetchStatus::NonHtml { .. })) {
            Disposition::Unretrievable
        } else if sides.iter().any(|s| !s.has_body()) {
            Disposition::NonHtml
        } else {
            to_evaluate.push(i);
            Disposition::Evaluated
        };
    }

    let langid = models.as_deref().zip(cfg.langid.as_ref().map(|l| &l.expected));
    let evaluations: Vec<(usize, Result<Evaluation, String>)> = pool.install(|| {
        to_evaluate
            .par_iter()
            .map(|&i| {
                let p = &pairs[i];
                let docs = load_document(&fetcher, &results[&p.url1])
                    .and_then(|l| Ok((l, load_document(&fetcher, &results[&p.url2])?)));
                (i, docs.map(|(l, r)| evaluate_one(&l, &r, &cfg.evaluator, langid)))
            })
            .collect()
    });

    let seg_dir = out.join("segments");
    if seg_dir.exists() {
        fs::remove_dir_all(&seg_dir).map_err(|e| io_err("clearing", &seg_dir, e))?;
    }
    for (i, evaluation) in evaluations {
        let rec = &mut records[i];
        match evaluation {
            Err(e) => {
                rec.disposition = Disposition::Unretrievable;
                rec.error = Some(e);
            }
            Ok(Evaluation { report, language }) => {
                rec.accepted = report.is_accept();
                if rec.accepted {
                    let mut buf = Vec::new();
                    write_segments(&mut buf, &rec.url1, &rec.url2, &report).expect("accepted report");
                    let path = seg_dir.join(format!("{}.tsv", rec.pair_id));
                    if let Err(e) = write_atomic(&path, &buf) {
                        rec.error = Some(format!("writing {}: {e}", path.display()));
                    }
                }
                rec.report = Some(report);
                rec.language = language;
            }
        }
    }

    let mut jsonl = String::new();
    for r in &records {
        jsonl.push_str(&serde_json::to_string(r).expect("serializable record"));
        jsonl.push('\n');
    }
    let path = out.join("reports.jsonl");
    write_atomic(&path, jsonl.as_bytes()).map_err(|e| io_err("writing", &path, e))?;

    let settings = RunSettings {
        k: cfg.evaluator.max_mismatch_ratio,
        p_threshold: cfg.evaluator.p_threshold,
        min_pairs: cfg.evaluator.min_pairs,
        max_line_distance: cfg.generator.max_line_distance,
        langid_filter: cfg.langid.is_some(),
    };
    let manifest = Manifest::tally(&records, settings);
    debug_assert!(manifest.is_conserved());
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
    write_atomic(&path, text.as_bytes()).map_err(|e| io_err("writing", &path, e))?;

    let run_info = RunInfo {
        started_at,
        finished_at: now_secs(),
        elapsed_ms: started.elapsed().as_millis(),
        network_requests: fetcher.network_requests(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = out.join("run_info.json");
    let text = serde_json::to_string_pretty(&run_info).expect("serializable run info") + "\n";
    write_atomic(&path, text.as_bytes()).map_err(|e| io_err("writing", &path, e))?;

    Ok(RunOutcome { manifest, records, run_info })
}

pub fn read_records(path: &Path) -> Result<Vec<PairRecord>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err("reading", path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| io_err(&format!("line {} of", n + 1), path, e)))
        .collect()
}
