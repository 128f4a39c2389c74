use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bitext::cache::Cache;
use bitext::decode::linearize_bytes;
use bitext::fetch::{FetchPolicy, Fetcher};
use bitext::formats::{read_candidates, read_gold, read_model, write_candidates, write_model, write_segments};
use bitext::hubs::{generate, HttpSearchHubs, HubSource, LocalFileHubs};
use bitext::pipeline::{
    default_jobs, load_document, load_models, read_records, run_pipeline, Disposition, LangIdSettings, PairInput,
    PipelineConfig, PipelineError,
};
use bitext::render::{render_alignment, render_report};
use bitext_core::langid::{classify, NgramModel, DEFAULT_ORDER};
use bitext_core::score::score;
use bitext_core::{align, build_query, evaluate_pair, EvaluatorConfig, GeneratorConfig, LinearDocument};

#[derive(Parser)]
#[command(name = "bitext", version, about = "Find pages that are translations of each other")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Largest tolerated share of unmatched alignment tokens.
    #[arg(long, global = true, default_value_t = 0.20)]
    k: f64,
    /// Significance level for the length correlation.
    #[arg(long, global = true, default_value_t = 0.05)]
    p_threshold: f64,
    /// Largest line distance between paired hub anchors.
    #[arg(long, global = true, default_value_t = 10)]
    max_line_distance: usize,
    /// Fewest unequal-length chunk pairs to test.
    #[arg(long, global = true, default_value_t = 3)]
    min_pairs: usize,
    /// Reject accepted pairs whose sides are not in the expected languages.
    #[arg(long, global = true)]
    langid_filter: bool,
    /// Language models for the filter, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    langid_models: Vec<PathBuf>,
    /// Expected language tags of the two sides; defaults to the tags of
    /// the first two models.
    #[arg(long, global = true, value_delimiter = ',')]
    langid_tags: Vec<String>,
    /// Page cache directory.
    #[arg(long, global = true, default_value = "bitext-cache")]
    cache: PathBuf,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Minimum milliseconds between requests to one host.
    #[arg(long, global = true, default_value_t = 1000)]
    min_interval_ms: u64,
    /// User-Agent sent with requests and matched against robots.txt groups.
    #[arg(long, global = true)]
    user_agent: Option<String>,
}

#[derive(Args, Clone)]
struct Languages {
    /// Names of the first language as they appear in hub links.
    #[arg(long, value_delimiter = ',', default_value = "english")]
    lang1: Vec<String>,
    /// Names of the second language.
    #[arg(long, value_delimiter = ',', default_value = "spanish,español,espanol")]
    lang2: Vec<String>,
}

#[derive(Args, Clone)]
struct HubInput {
    /// Hub pages or directories of hub pages.
    #[arg(long, num_args = 1..)]
    hubs: Vec<PathBuf>,
    /// Search URL template containing `{query}`; result links are hubs.
    #[arg(long)]
    search: Option<String>,
    /// Most hubs to use.
    #[arg(long)]
    max_hits: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the hub search query for a language pair.
    Query {
        #[command(flatten)]
        langs: Languages,
    },
    /// Extract candidate pairs from hub pages.
    Generate {
        #[command(flatten)]
        langs: Languages,
        #[command(flatten)]
        input: HubInput,
        /// Output file; standard output by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieve both sides of every candidate pair into the cache.
    Fetch {
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Decide whether two pages are translations; exit 0 accept, 1 reject.
    Evaluate {
        left: String,
        right: String,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Write aligned segments of an accepted pair here.
        #[arg(long)]
        segments: Option<PathBuf>,
    },
    /// Show the token alignment of two pages side by side.
    Align {
        left: String,
        right: String,
        /// Include chunk text.
        #[arg(long)]
        text: bool,
    },
    /// Print the token sequence of a page.
    Linearize {
        page: String,
        #[arg(long)]
        json: bool,
    },
    /// Character n-gram language identification.
    Langid {
        #[command(subcommand)]
        command: LangidCommand,
    },
    /// Generate, fetch, deduplicate, evaluate and optionally filter.
    Run {
        #[command(flatten)]
        langs: Languages,
        #[command(flatten)]
        input: HubInput,
        /// Candidate file to use instead of hub pages.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision and recall of a run against gold judgments.
    Score {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum LangidCommand {
    Train {
        #[arg(long)]
        lang: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    Classify {
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<PathBuf>,
        /// Text file; standard input by default.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
}

/// Fatal errors, including bad configuration, exit with status 2.
fn config_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::msg(msg.into())
}

impl Global {
    fn evaluator(&self) -> Result<EvaluatorConfig> {
        let cfg =
            EvaluatorConfig { max_mismatch_ratio: self.k, p_threshold: self.p_threshold, min_pairs: self.min_pairs };
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(cfg)
    }

    fn policy(&self) -> FetchPolicy {
        let mut p = FetchPolicy { min_interval: Duration::from_millis(self.min_interval_ms), ..FetchPolicy::default() };
        if let Some(ua) = &self.user_agent {
            p.user_agent = ua.clone();
        }
        p
    }

    fn fetcher(&self) -> Result<Fetcher> {
        let cache = Cache::open(&self.cache).with_context(|| format!("opening cache {}", self.cache.display()))?;
        Ok(Fetcher::new(self.policy(), cache))
    }

    fn langid(&self) -> Result<Option<LangIdSettings>> {
        if !self.langid_filter {
            return Ok(None);
        }
        if self.langid_models.len() < 2 {
            return Err(config_error("--langid-filter needs --langid-models with at least two models"));
        }
        let expected = match self.langid_tags.as_slice() {
            [a, b] => (a.clone(), b.clone()),
            [] => {
                let models = load_models(&self.langid_models[..2]).map_err(|e| config_error(e.to_string()))?;
                (models[0].language().to_string(), models[1].language().to_string())
            }
            _ => return Err(config_error("--langid-tags takes exactly two tags")),
        };
        Ok(Some(LangIdSettings { model_paths: self.langid_models.clone(), expected }))
    }
}

impl Languages {
    fn generator(&self, g: &Global, max_hits: Option<usize>) -> Result<GeneratorConfig> {
        let cfg = GeneratorConfig {
            lang1_names: self.lang1.clone(),
            lang2_names: self.lang2.clone(),
            max_line_distance: g.max_line_distance,
            max_hits,
        };
        if !cfg.is_valid() {
            return Err(config_error("language names must be non-empty"));
        }
        Ok(cfg)
    }
}

impl HubInput {
    fn source(&self) -> Result<Box<dyn HubSource + Sync>> {
        match (&self.search, self.hubs.is_empty()) {
            (Some(_), false) => Err(config_error("give either --hubs or --search, not both")),
            (Some(t), true) => Ok(Box::new(HttpSearchHubs { template: t.clone(), max_hits: self.max_hits })),
            (None, _) => {
                if let Some(p) = self.hubs.iter().find(|p| !p.exists()) {
                    return Err(config_error(format!("hub path {} does not exist", p.display())));
                }
                Ok(Box::new(LocalFileHubs::new(self.hubs.clone())))
            }
        }
    }
}

fn is_locator(s: &str) -> bool {
    url::Url::parse(s).is_ok_and(|u| matches!(u.scheme(), "http" | "https" | "file"))
}

/// Reads a page from a local path directly, or from a locator through
/// the fetcher.
fn load_page(arg: &str, global: &Global) -> Result<LinearDocument> {
    if !is_locator(arg) {
        let bytes = fs::read(arg).with_context(|| format!("reading {arg}"))?;
        return Ok(linearize_bytes(arg, &bytes, None));
    }
    let fetcher = global.fetcher()?;
    let result = fetcher.fetch(arg);
    if !result.status.has_body() {
        bail!("{arg}: {}", result.status.label());
    }
    load_document(&fetcher, &result).map_err(anyhow::Error::msg)
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    if g.jobs == Some(0) {
        return Err(config_error("--jobs must be at least 1"));
    }
    let jobs = g.jobs.unwrap_or_else(default_jobs);
    let out = io::stdout();
    let mut out = out.lock();
    match cli.command {
        Command::Query { langs } => {
            writeln!(out, "{}", build_query(&langs.lang1[0], &langs.lang2[0]))?;
        }
        Command::Generate { langs, input, out: path } => {
            let cfg = langs.generator(g, input.max_hits)?;
            let source = input.source()?;
            let pairs = generate(source.as_ref(), &cfg, &g.fetcher()?)?;
            match path {
                Some(p) => {
                    let mut buf = Vec::new();
                    write_candidates(&mut buf, &pairs)?;
                    bitext::cache::write_atomic(&p, &buf)?;
                }
                None => write_candidates(&mut out, &pairs)?,
            }
        }
        Command::Fetch { pairs } => {
            let pairs = read_candidates(open(&pairs)?)?;
            let fetcher = g.fetcher()?;
            let mut locators: Vec<&str> = pairs.iter().flat_map(|p| [p.url1.as_str(), p.url2.as_str()]).collect();
            let mut seen = std::collections::HashSet::new();
            locators.retain(|l| seen.insert(*l));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
            use rayon::prelude::*;
            let results: Vec<_> = pool.install(|| locators.par_iter().map(|l| fetcher.fetch(l)).collect());
            for r in results {
                let extra = match &r.status {
                    bitext::fetch::FetchStatus::Moved { final_locator } => final_locator.clone(),
                    bitext::fetch::FetchStatus::NonHtml { content_type } => content_type.clone(),
                    bitext::fetch::FetchStatus::Unreachable { detail } => detail.clone(),
                    _ => String::new(),
                };
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    r.locator,
                    r.status.label(),
                    r.digest.as_deref().unwrap_or("-"),
                    extra
                )?;
            }
        }
        Command::Evaluate { left, right, json, segments } => {
            let cfg = g.evaluator()?;
            let (l, r) = (load_page(&left, g)?, load_page(&right, g)?);
            let mut report = evaluate_pair(&l, &r, &cfg);
            if let Some(settings) = g.langid()? {
                let models = load_models(&settings.model_paths)?;
                let expected = (settings.expected.0.as_str(), settings.expected.1.as_str());
                if report.is_accept()
                    && !bitext_core::langid::language_filter(&report, &l.text(), &r.text(), expected, &models)
                {
                    report.reject_with(bitext_core::RejectReason::Language);
                    report.segments.clear();
                }
            }
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                write!(out, "{}", render_report(&report))?;
            }
            if let (Some(path), true) = (segments, report.is_accept()) {
                let mut buf = Vec::new();
                write_segments(&mut buf, &left, &right, &report)?;
                bitext::cache::write_atomic(&path, &buf)?;
            }
            return Ok(if report.is_accept() { 0 } else { 1 });
        }
        Command::Align { left, right, text } => {
            let (l, r) = (load_page(&left, g)?, load_page(&right, g)?);
            let a = align(&l, &r);
            write!(out, "{}", render_alignment(&a, &l, &r, text))?;
            writeln!(out, "mismatch: {}/{} = {:.4}", a.mismatch_count, a.total_tokens, a.mismatch_ratio())?;
        }
        Command::Linearize { page, json } => {
            let doc = load_page(&page, g)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&doc.tokens)?)?;
            } else {
                for t in &doc.tokens {
                    writeln!(out, "{t}")?;
                }
            }
        }
        Command::Langid { command: LangidCommand::Train { lang, input, out: path, order } } => {
            let text = read_input(Some(&input))?;
            let model = NgramModel::train(&text, lang, order).map_err(|e| config_error(e.to_string()))?;
            let mut buf = Vec::new();
            write_model(&mut buf, &model)?;
            bitext::cache::write_atomic(&path, &buf)?;
        }
        Command::Langid { command: LangidCommand::Classify { models, input } } => {
            let models = models
                .iter()
                .map(|p| read_model(open(p)?).with_context(|| format!("model {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let text = read_input(input.as_deref())?;
            let c = classify(&text, &models)?;
            writeln!(out, "{}", c.language)?;
            for (lang, score) in &c.scores {
                writeln!(out, "{lang}\t{score:.4}")?;
            }
        }
        Command::Run { langs, input, pairs, out: dir } => {
            let mut cfg = PipelineConfig::new(&g.cache, &dir);
            cfg.generator = langs.generator(g, input.max_hits)?;
            cfg.evaluator = g.evaluator()?;
            cfg.fetch = g.policy();
            cfg.langid = g.langid()?;
            cfg.jobs = jobs;
            let source = match pairs {
                Some(p) if input.hubs.is_empty() && input.search.is_none() => {
                    PairInput::Candidates(read_candidates(open(&p).map_err(|e| config_error(format!("{e:#}")))?)?)
                }
                Some(_) => return Err(config_error("give either --pairs or a hub source, not both")),
                None => PairInput::Hubs(input.source()?),
            };
            let outcome = run_pipeline(&cfg, &source).map_err(|e| match e {
                PipelineError::Config(m) => config_error(m),
                other => other.into(),
            })?;
            let m = &outcome.manifest;
            writeln!(
                out,
                "generated {}  identical {}  unretrievable {}  non-html {}  evaluated {}  accepted {}  rejected {}",
                m.generated, m.identical, m.unretrievable, m.non_html, m.evaluated, m.accepted, m.rejected
            )?;
            return Ok(outcome.exit_code() as u8);
        }
        Command::Score { reports, gold, json } => {
            let records = read_records(&reports)?;
            let gold = read_gold(open(&gold)?)?;
            let decided = records
                .iter()
                .filter(|r| r.disposition == Disposition::Evaluated)
                .map(|r| (r.pair_id.as_str(), r.accepted));
            let s = score(decided, &gold)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
            } else {
                let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.1}%", v * 100.0));
                writeln!(
                    out,
                    "accepted {}  true positives {}  gold positives {}",
                    s.accepted_count, s.true_positives, s.gold_positive_count
                )?;
                writeln!(out, "precision {}  recall {}", pct(s.precision), pct(s.recall))?;
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bitext: {e:#}");
            ExitCode::from(2)
        }
    }
}
