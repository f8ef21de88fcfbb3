//! The `specdim` command line.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 for file
//! and format errors. Results go to stdout or the named output files; log
//! lines go to stderr only.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use crate::corpus::{
    chunk_text, mock_embed, read_chunks, read_embeddings, snippet_of, write_chunks, write_embeddings, ChunkRecord,
    ChunkingConfig, CorpusError, EmbeddingFormat, DEFAULT_MAX_TOKENS,
};
use crate::evalcmp::{
    bench_search, build_paired_dbs, comparison_from_results, label_from_doc_key, labels_from_index, topic_purity,
    ComparisonReport, EvalError, Latencies, PurityPair, ReportRow,
};
use crate::mds::{mds_project, pairwise_distances, MdsError, MdsOptions};
use crate::reducer::{ReduceError, ReductionSpec, SpectralReducer};
use crate::store::{build_index, load_index, save_index, EmbeddingRecord, IndexKind, Metric, StoreError};
use crate::synthetic::{CorpusConfig, SyntheticCorpus, STANDARD_SEED};

pub const THREADS_ENV: &str = "SPECDIM_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, inconsistent inputs, invalid parameters.
    Validation(String),
    /// Unreadable or malformed files.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } | CorpusError::Parse { .. } | CorpusError::Format(_) => CliError::Io(e.to_string()),
            CorpusError::InconsistentDimension { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(_) | StoreError::Format(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ReduceError> for CliError {
    fn from(e: ReduceError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MdsError> for CliError {
    fn from(e: MdsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Store(s) => s.into(),
            EvalError::Reduce(r) => r.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "specdim", version, about = "FFT amplitude reduction of embeddings with paired exact search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the seeded two-topic synthetic corpus as a chunks file.
    Synth(SynthArgs),
    /// Split a text file into chunks at splitter boundaries.
    Chunk(ChunkArgs),
    /// Embed a chunks file with the deterministic mock embedder.
    MockEmbed(MockEmbedArgs),
    /// Replace every embedding with its reduced amplitude spectrum.
    Transform(TransformArgs),
    /// Build and save an exact search index.
    Index(IndexArgs),
    /// Search an index with a vector or a mock-embedded text.
    Query(QueryArgs),
    /// Compare retrieval in original and reduced space for a query set.
    Compare(CompareArgs),
    /// Project embeddings to 2D with SMACOF MDS and write coordinates.
    Project(ProjectArgs),
    /// Time exact search in original and reduced space.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output chunks file (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Documents per topic.
    #[arg(long, default_value_t = 50)]
    pub docs_per_topic: usize,
    /// Whitespace tokens per document.
    #[arg(long, default_value_t = 20)]
    pub tokens: usize,
    /// Corpus seed.
    #[arg(long, default_value_t = STANDARD_SEED)]
    pub seed: u64,
    /// Also write this many in-topic queries.
    #[arg(long, default_value_t = 0)]
    pub queries: usize,
    /// Destination of the query file (JSONL with query_key, topic, text).
    #[arg(long, requires = "queries")]
    pub queries_out: Option<PathBuf>,
    /// Seed for query generation.
    #[arg(long, default_value_t = 7)]
    pub query_seed: u64,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    /// Source text file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Maximum whitespace tokens per chunk.
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    /// Unit separator: `nl` (newline), `blank` (empty line), or a literal string.
    #[arg(long, default_value = "nl")]
    pub splitter: String,
    /// Source id used in chunk keys; defaults to the file stem.
    #[arg(long)]
    pub source_id: Option<String>,
    /// Output chunks file (JSONL).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MockEmbedArgs {
    /// Chunks file (JSONL).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Embedding dimension.
    #[arg(long, default_value_t = 768)]
    pub dim: usize,
    /// Embedder seed.
    #[arg(long, default_value_t = STANDARD_SEED)]
    pub seed: u64,
    /// Output embeddings file.
    #[arg(long)]
    pub out: PathBuf,
    /// `jsonl` or `bin`; inferred from the output extension when omitted.
    #[arg(long)]
    pub format: Option<EmbeddingFormat>,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct ReductionArgs {
    /// Reduction factor f; keeps floor(N / f) components.
    #[arg(long)]
    pub factor: Option<f64>,
    /// Number of components M to keep.
    #[arg(long)]
    pub target_dim: Option<usize>,
}

impl ReductionArgs {
    fn spec(&self, source_dim: usize) -> Result<ReductionSpec, CliError> {
        Ok(match (self.factor, self.target_dim) {
            (Some(f), _) => ReductionSpec::from_factor(source_dim, f)?,
            (None, Some(m)) => ReductionSpec::with_target(source_dim, m)?,
            (None, None) => return Err(invalid("either --factor or --target-dim is required")),
        })
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Input embeddings file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub reduction: ReductionArgs,
    /// Output embeddings file.
    #[arg(long)]
    pub out: PathBuf,
    /// `jsonl` or `bin`; inferred from the output extension when omitted.
    #[arg(long)]
    pub format: Option<EmbeddingFormat>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Input embeddings file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Distance metric: l2 or cosine.
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// Transform the input with this factor and build a transformed index.
    #[arg(long, conflicts_with_all = ["target_dim", "source_dim"])]
    pub factor: Option<f64>,
    /// Transform the input to this many components and build a transformed index.
    #[arg(long, conflicts_with = "source_dim")]
    pub target_dim: Option<usize>,
    /// Mark already-reduced input as transformed from this source dimension.
    #[arg(long)]
    pub source_dim: Option<usize>,
    /// Output index file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("query_source").required(true).args(["query_vec", "query_text"]))]
pub struct QueryArgs {
    /// Index file.
    #[arg(long)]
    pub index: PathBuf,
    /// File holding the query vector: a JSON array or an object with a `vector` field.
    #[arg(long)]
    pub query_vec: Option<PathBuf>,
    /// Text embedded with the mock embedder.
    #[arg(long)]
    pub query_text: Option<String>,
    /// Mock embedder seed for --query-text.
    #[arg(long, default_value_t = STANDARD_SEED)]
    pub seed: u64,
    /// Number of hits.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Expected reduction factor of a transformed index; the query is transformed to match.
    #[arg(long)]
    pub transform_factor: Option<f64>,
    /// Print hits as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Embeddings file.
    #[arg(long)]
    pub emb: PathBuf,
    #[command(flatten)]
    pub reduction: ReductionArgs,
    /// Number of hits compared per query.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Queries (JSONL: query_key, vector or text, optional topic).
    #[arg(long)]
    pub queries: PathBuf,
    /// Distance metric: l2 or cosine.
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// Mock embedder seed for text queries.
    #[arg(long, default_value_t = STANDARD_SEED)]
    pub seed: u64,
    /// JSON report destination.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Embeddings file.
    #[arg(long)]
    pub emb: PathBuf,
    /// Distance metric: l2 or cosine.
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// MDS seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seeded MDS starts; the lowest stress wins.
    #[arg(long, default_value_t = MdsOptions::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = MdsOptions::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = MdsOptions::default().eps)]
    pub eps: f64,
    /// Project reduced spectra with this factor instead of the raw embeddings.
    #[arg(long)]
    pub factor: Option<f64>,
    /// Add a mock-embedded query point.
    #[arg(long)]
    pub query_text: Option<String>,
    /// Label of the query point.
    #[arg(long, default_value = "query")]
    pub query_label: String,
    /// Mock embedder seed for --query-text.
    #[arg(long, default_value_t = STANDARD_SEED)]
    pub embed_seed: u64,
    /// Coordinates CSV (doc_key,label,x,y).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG scatter plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Embeddings file.
    #[arg(long)]
    pub emb: PathBuf,
    #[command(flatten)]
    pub reduction: ReductionArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Timed repetitions (at least 3); one warm-up pass is discarded.
    #[arg(long, default_value_t = 30)]
    pub reps: usize,
    /// Number of queries, taken cyclically from the stored vectors.
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn configure_threads() {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => log::warn!("ignoring {THREADS_ENV}={raw:?}: not a non-negative integer"),
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Chunk(a) => chunk(a),
        Command::MockEmbed(a) => embed(a),
        Command::Transform(a) => transform(a),
        Command::Index(a) => index(a),
        Command::Query(a) => query(a),
        Command::Compare(a) => compare(a),
        Command::Project(a) => project(a),
        Command::Bench(a) => bench(a),
    }
}

fn load_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>, CliError> {
    Ok(read_embeddings(path, EmbeddingFormat::from_path(path))?)
}

fn load_nonempty(path: &Path) -> Result<(Vec<EmbeddingRecord>, usize), CliError> {
    let records = load_embeddings(path)?;
    let dim = records
        .first()
        .map(|r| r.vector.len())
        .ok_or_else(|| invalid(format!("{} holds no embeddings", path.display())))?;
    Ok((records, dim))
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    if a.docs_per_topic == 0 || a.tokens == 0 {
        return Err(invalid("--docs-per-topic and --tokens must be >= 1"));
    }
    let corpus = SyntheticCorpus::generate(CorpusConfig {
        docs_per_topic: a.docs_per_topic,
        tokens_per_doc: a.tokens,
        seed: a.seed,
        ..CorpusConfig::standard()
    });
    let chunks: Vec<ChunkRecord> = corpus
        .docs()
        .iter()
        .map(|d| ChunkRecord {
            id: d.id,
            chunk: crate::corpus::Chunk {
                doc_key: d.doc_key.clone(),
                text: d.text.clone(),
                token_count: a.tokens,
                oversized: false,
            },
        })
        .collect();
    write_chunks(&chunks, &a.out)?;
    info!("wrote {} synthetic chunks to {}", chunks.len(), a.out.display());
    if let Some(path) = a.queries_out {
        let mut out = String::new();
        for q in corpus.queries(a.queries, a.query_seed) {
            let line = serde_json::json!({ "query_key": q.key, "topic": q.topic, "text": q.text });
            let _ = writeln!(out, "{line}");
        }
        write_file(&path, out)?;
    }
    Ok(())
}

fn parse_splitter(raw: &str) -> String {
    match raw {
        "nl" => "\n".to_string(),
        "blank" => "\n\n".to_string(),
        other => other.replace("\\n", "\n").replace("\\t", "\t"),
    }
}

fn chunk(a: ChunkArgs) -> Result<(), CliError> {
    let config = ChunkingConfig::new(a.max_tokens, parse_splitter(&a.splitter))?;
    let text = read_file(&a.input)?;
    let source_id = a.source_id.unwrap_or_else(|| {
        a.input
            .file_stem()
            .map_or("doc".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let chunks: Vec<ChunkRecord> = chunk_text(&source_id, &text, &config)
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| ChunkRecord { id: i as u64, chunk })
        .collect();
    let oversized = chunks.iter().filter(|c| c.chunk.oversized).count();
    if oversized > 0 {
        log::warn!("{oversized} chunk(s) exceed {} tokens and were kept whole", a.max_tokens);
    }
    write_chunks(&chunks, &a.out)?;
    info!("wrote {} chunks to {}", chunks.len(), a.out.display());
    Ok(())
}

fn embed(a: MockEmbedArgs) -> Result<(), CliError> {
    let chunks = read_chunks(&a.input)?;
    let records = chunks
        .iter()
        .map(|c| {
            Ok(EmbeddingRecord {
                id: c.id,
                doc_key: c.chunk.doc_key.clone(),
                snippet: Some(snippet_of(&c.chunk.text)),
                vector: mock_embed(&c.chunk.text, a.dim, a.seed)?,
            })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    let format = a.format.unwrap_or_else(|| EmbeddingFormat::from_path(&a.out));
    write_embeddings(&records, &a.out, format)?;
    info!("embedded {} chunks at dim {}", records.len(), a.dim);
    Ok(())
}

fn transform(a: TransformArgs) -> Result<(), CliError> {
    let (records, dim) = load_nonempty(&a.input)?;
    let spec = a.reduction.spec(dim)?;
    let reducer = SpectralReducer::new(spec)?;
    let out = transform_records(&reducer, records)?;
    let format = a.format.unwrap_or_else(|| EmbeddingFormat::from_path(&a.out));
    write_embeddings(&out, &a.out, format)?;
    info!("reduced {} vectors from {} to {}", out.len(), spec.source_dim(), spec.target_dim());
    Ok(())
}

fn transform_records(reducer: &SpectralReducer, records: Vec<EmbeddingRecord>) -> Result<Vec<EmbeddingRecord>, CliError> {
    records
        .into_iter()
        .map(|r| {
            let vector = reducer.transform_f32(&r.vector)?;
            Ok(EmbeddingRecord { vector, ..r })
        })
        .collect()
}

fn index(a: IndexArgs) -> Result<(), CliError> {
    let (records, dim) = load_nonempty(&a.input)?;
    let (records, kind, reduction) = if a.factor.is_some() || a.target_dim.is_some() {
        let spec = ReductionArgs {
            factor: a.factor,
            target_dim: a.target_dim,
        }
        .spec(dim)?;
        let reducer = SpectralReducer::new(spec)?;
        (transform_records(&reducer, records)?, IndexKind::Transformed, Some(spec))
    } else if let Some(source) = a.source_dim {
        (records, IndexKind::Transformed, Some(ReductionSpec::with_target(source, dim)?))
    } else {
        (records, IndexKind::Original, None)
    };
    let idx = build_index(records, a.metric, kind, reduction)?;
    save_index(&idx, &a.out)?;
    info!("indexed {} records (dim {}, {})", idx.len(), idx.dim(), idx.metric());
    Ok(())
}

fn read_query_vector(path: &Path) -> Result<Vec<f32>, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum QueryFile {
        Bare(Vec<f32>),
        Object { vector: Vec<f32> },
    }
    let text = read_file(path)?;
    let parsed: QueryFile = serde_json::from_str(text.trim())
        .map_err(|e| CliError::Io(format!("{}: expected a JSON array or {{\"vector\": [...]}}: {e}", path.display())))?;
    Ok(match parsed {
        QueryFile::Bare(v) | QueryFile::Object { vector: v } => v,
    })
}

fn query(a: QueryArgs) -> Result<(), CliError> {
    let idx = load_index(&a.index)?;
    let source_dim = idx.reduction().map_or(idx.dim(), |s| s.source_dim());
    let raw = match (&a.query_vec, &a.query_text) {
        (Some(path), _) => read_query_vector(path)?,
        (None, Some(text)) => mock_embed(text, source_dim, a.seed)?,
        (None, None) => return Err(invalid("either --query-vec or --query-text is required")),
    };
    let q = match (idx.kind(), idx.reduction()) {
        (IndexKind::Transformed, Some(spec)) => {
            if let Some(f) = a.transform_factor {
                let expected = ReductionSpec::from_factor(spec.source_dim(), f)?;
                if expected.target_dim() != spec.target_dim() {
                    return Err(invalid(format!(
                        "--transform-factor {f} gives {} components but the index holds {}",
                        expected.target_dim(),
                        spec.target_dim()
                    )));
                }
            }
            if raw.len() == spec.source_dim() {
                SpectralReducer::new(*spec)?.transform_f32(&raw)?
            } else {
                raw
            }
        }
        _ => {
            if a.transform_factor.is_some() {
                return Err(invalid("--transform-factor needs a transformed index"));
            }
            raw
        }
    };
    let res = idx.search(&q, a.k)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&res).expect("hits serialize"));
    } else {
        println!("{:>4}  {:>8}  {:>14}  doc_key", "rank", "id", "distance");
        for (rank, h) in res.hits.iter().enumerate() {
            println!("{:>4}  {:>8}  {:>14.9}  {}", rank + 1, h.id, h.distance, h.doc_key);
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(alias = "key")]
    query_key: Option<String>,
    vector: Option<Vec<f32>>,
    text: Option<String>,
    topic: Option<String>,
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let (records, dim) = load_nonempty(&a.emb)?;
    let spec = a.reduction.spec(dim)?;
    let dbs = build_paired_dbs(records, spec, a.metric)?;
    let labels = labels_from_index(&dbs.original);
    let text = read_file(&a.queries)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryLine = serde_json::from_str(line)
            .map_err(|e| CliError::Io(format!("{} line {}: {e}", a.queries.display(), i + 1)))?;
        let key = q.query_key.unwrap_or_else(|| format!("q{}", rows.len()));
        let vector = match (q.vector, &q.text) {
            (Some(v), _) => v,
            (None, Some(t)) => mock_embed(t, dim, a.seed)?,
            (None, None) => {
                return Err(CliError::Io(format!(
                    "{} line {}: query needs a vector or a text",
                    a.queries.display(),
                    i + 1
                )))
            }
        };
        let t0 = Instant::now();
        let orig = dbs.original.search(&vector, a.k)?;
        let t1 = Instant::now();
        let red = dbs.reduced.search(&dbs.transform_query(&vector)?, a.k)?;
        let t2 = Instant::now();
        let cmp = comparison_from_results(&dbs, &key, a.k, &orig, &red);
        let purity = match &q.topic {
            Some(topic) => Some(PurityPair {
                original: topic_purity(&orig, &labels, topic)?.purity_at_k,
                reduced: topic_purity(&red, &labels, topic)?.purity_at_k,
            }),
            None => None,
        };
        rows.push(ReportRow {
            query_key: cmp.query_key,
            k: cmp.k,
            factor: cmp.factor,
            dims: cmp.dims,
            recall_at_k: cmp.recall_at_k,
            rank_correlation: cmp.rank_correlation,
            purity,
            latencies: Some(Latencies {
                original_ns: (t1 - t0).as_nanos() as f64,
                reduced_ns: (t2 - t1).as_nanos() as f64,
            }),
        });
    }
    if rows.is_empty() {
        return Err(invalid(format!("{} holds no queries", a.queries.display())));
    }
    let report = ComparisonReport::new(rows);
    write_file(&a.report, report.to_json())?;
    print!("{}", report.to_table());
    Ok(())
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn project(a: ProjectArgs) -> Result<(), CliError> {
    let (records, dim) = load_nonempty(&a.emb)?;
    let mut keys: Vec<String> = records.iter().map(|r| r.doc_key.clone()).collect();
    let mut labels: Vec<String> = keys.iter().map(|k| label_from_doc_key(k).to_string()).collect();
    let mut vectors: Vec<Vec<f32>> = records.into_iter().map(|r| r.vector).collect();
    if let Some(text) = &a.query_text {
        vectors.push(mock_embed(text, dim, a.embed_seed)?);
        keys.push("query".to_string());
        labels.push(a.query_label.clone());
    }
    if let Some(f) = a.factor {
        let reducer = SpectralReducer::new(ReductionSpec::from_factor(dim, f)?)?;
        vectors = vectors
            .iter()
            .map(|v| reducer.transform_f32(v))
            .collect::<Result<_, _>>()?;
    }
    let delta = pairwise_distances(&vectors, a.metric)?;
    let opts = MdsOptions {
        max_iter: a.max_iter,
        eps: a.eps,
        restarts: a.restarts,
    };
    let res = mds_project(&delta, a.seed, &opts)?;
    info!(
        "mds: stress {:.6e} after {} iterations (converged: {})",
        res.stress, res.iterations, res.converged
    );
    let mut csv = String::from("doc_key,label,x,y\n");
    for ((key, label), c) in keys.iter().zip(&labels).zip(&res.coordinates) {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            csv_field(key),
            csv_field(label),
            format_sig9(c[0]),
            format_sig9(c[1])
        );
    }
    write_file(&a.out, csv)?;
    if let Some(svg) = &a.svg {
        write_file(svg, render_svg(&labels, &res.coordinates))?;
    }
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static scatter of the coordinates, one color per label, with a legend.
pub fn render_svg(labels: &[String], coords: &[[f64; 2]]) -> String {
    let (w, h, pad, legend_w): (f64, f64, f64, f64) = (640.0, 480.0, 40.0, 160.0);
    let mut order: Vec<&str> = Vec::new();
    for l in labels {
        if !order.contains(&l.as_str()) {
            order.push(l);
        }
    }
    let color: HashMap<&str, &str> = order
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, PALETTE[i % PALETTE.len()]))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for c in coords {
        x0 = x0.min(c[0]);
        x1 = x1.max(c[0]);
        y0 = y0.min(c[1]);
        y1 = y1.max(c[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let plot = (w - legend_w - 2.0 * pad).min(h - 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (l, c) in labels.iter().zip(coords) {
        let px = pad + (c[0] - x0) / span * plot;
        let py = h - pad - (c[1] - y0) / span * plot;
        let _ = writeln!(
            svg,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"4\" fill=\"{}\"><title>{}</title></circle>",
            color[l.as_str()],
            xml_escape(l)
        );
    }
    let lx = w - legend_w;
    for (i, l) in order.iter().enumerate() {
        let ly = pad + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{ly:.2}\" r=\"5\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx,
            color[l],
            lx + 12.0,
            ly + 4.0,
            xml_escape(l)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    if a.queries == 0 {
        return Err(invalid("--queries must be >= 1"));
    }
    let (records, dim) = load_nonempty(&a.emb)?;
    let spec = a.reduction.spec(dim)?;
    let queries: Vec<Vec<f32>> = records.iter().cycle().take(a.queries).map(|r| r.vector.clone()).collect();
    let dbs = build_paired_dbs(records, spec, a.metric)?;
    let report = bench_search(&dbs, &queries, a.k, a.reps)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("bench report serializes"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.5), "1.5");
        assert_eq!(format_sig9(-0.123456789123), "-0.123456789");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1.0e-7), "1e-7");
        assert_eq!(format_sig9(2.5e12), "2.5e12");
    }

    #[test]
    fn splitters() {
        assert_eq!(parse_splitter("nl"), "\n");
        assert_eq!(parse_splitter("blank"), "\n\n");
        assert_eq!(parse_splitter(";"), ";");
        assert_eq!(parse_splitter("\\n--\\n"), "\n--\n");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a#1"), "a#1");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn svg_has_legend_per_label() {
        let labels = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        let svg = render_svg(&labels, &[[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]]);
        assert_eq!(svg.matches("<circle").count(), 5);
        assert_eq!(svg.matches("<text").count(), 2);
    }
}
