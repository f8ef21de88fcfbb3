//! Chunking, the deterministic mock embedder, and embedding file IO.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::codec::{FormatError, Reader, Writer};
use crate::store::EmbeddingRecord;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"SEMB";
pub const EMBEDDING_VERSION: u16 = 1;
pub const DEFAULT_MAX_TOKENS: usize = 128;
pub const SNIPPET_CHARS: usize = 120;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: vector has dimension {actual}, earlier records have {expected}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("record {id}: vector has dimension {actual}, expected {expected}")]
    RecordDimension { id: u64, expected: usize, actual: usize },
    #[error("record {0} contains a non-finite component")]
    NonFinite(u64),
    #[error("text has no tokens to embed")]
    EmptyText,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkingConfig {
    max_tokens: usize,
    splitter: String,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            splitter: "\n".to_string(),
        }
    }
}

impl ChunkingConfig {
    pub fn new(max_tokens: usize, splitter: impl Into<String>) -> Result<Self, CorpusError> {
        let splitter = splitter.into();
        if max_tokens == 0 {
            return Err(CorpusError::InvalidConfig("max_tokens must be >= 1".into()));
        }
        if splitter.is_empty() {
            return Err(CorpusError::InvalidConfig("splitter must not be empty".into()));
        }
        Ok(Self { max_tokens, splitter })
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn splitter(&self) -> &str {
        &self.splitter
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_key: String,
    pub text: String,
    pub token_count: usize,
    /// A single splitter unit longer than `max_tokens`, kept whole.
    #[serde(default)]
    pub oversized: bool,
}

pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Splits `text` on the configured splitter and greedily packs consecutive
/// units into chunks of at most `max_tokens` whitespace tokens. Units with
/// no tokens are dropped; a unit that alone exceeds the budget becomes its
/// own oversized chunk. Chunk keys are `{source_id}#{ordinal}`.
pub fn chunk_text(source_id: &str, text: &str, config: &ChunkingConfig) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut current_tokens = 0;

    let flush = |units: &mut Vec<&str>, tokens: &mut usize, oversized: bool, chunks: &mut Vec<Chunk>| {
        if units.is_empty() {
            return;
        }
        chunks.push(Chunk {
            doc_key: format!("{source_id}#{}", chunks.len()),
            text: units.join(&config.splitter),
            token_count: *tokens,
            oversized,
        });
        units.clear();
        *tokens = 0;
    };

    for unit in text.split(config.splitter.as_str()) {
        let n = count_tokens(unit);
        if n == 0 {
            continue;
        }
        if n > config.max_tokens {
            flush(&mut current, &mut current_tokens, false, &mut chunks);
            let mut single = vec![unit];
            let mut tokens = n;
            flush(&mut single, &mut tokens, true, &mut chunks);
            continue;
        }
        if current_tokens + n > config.max_tokens {
            flush(&mut current, &mut current_tokens, false, &mut chunks);
        }
        current.push(unit);
        current_tokens += n;
    }
    flush(&mut current, &mut current_tokens, false, &mut chunks);
    chunks
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit FNV-1a with a splitmix finalizer. Stable across platforms
/// and toolchains, unlike `std`'s default hasher.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325 ^ splitmix64(seed);
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

fn token_direction(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(token_hash(token, seed));
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Model-free text embedding: the normalized sum of one pseudo-random unit
/// direction per lowercase whitespace token.
pub fn mock_embed(text: &str, dim: usize, seed: u64) -> Result<Vec<f32>, CorpusError> {
    if dim == 0 {
        return Err(CorpusError::InvalidConfig("dim must be >= 1".into()));
    }
    let mut sum = vec![0.0f64; dim];
    let mut any = false;
    for token in text.split_whitespace() {
        any = true;
        let dir = token_direction(&token.to_lowercase(), dim, seed);
        sum.iter_mut().zip(&dir).for_each(|(s, d)| *s += d);
    }
    if !any {
        return Err(CorpusError::EmptyText);
    }
    let n = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        // only possible if token directions cancel exactly
        return Err(CorpusError::EmptyText);
    }
    Ok(sum.iter().map(|x| (x / n) as f32).collect())
}

/// First [`SNIPPET_CHARS`] characters of a chunk.
pub fn snippet_of(text: &str) -> String {
    text.chars().take(SNIPPET_CHARS).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Jsonl,
    Bin,
}

impl EmbeddingFormat {
    /// `.jsonl`/`.json` map to JSONL, everything else to the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => EmbeddingFormat::Jsonl,
            _ => EmbeddingFormat::Bin,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(EmbeddingFormat::Jsonl),
            "bin" => Ok(EmbeddingFormat::Bin),
            other => Err(format!("unknown embedding format {other:?} (expected jsonl or bin)")),
        }
    }
}

#[derive(Deserialize)]
struct JsonlIn<'a> {
    id: u64,
    doc_key: String,
    #[serde(default)]
    snippet: Option<String>,
    #[serde(borrow)]
    vector: Vec<&'a RawValue>,
}

#[derive(Serialize)]
struct JsonlOut<'a> {
    id: u64,
    doc_key: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    snippet: Option<&'a str>,
    vector: &'a [f32],
}

/// Parses embedding JSONL. Numbers are parsed straight to `f32` from their
/// decimal text so shortest-form output round-trips exactly.
pub fn parse_embeddings_jsonl(text: &str) -> Result<Vec<EmbeddingRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonlIn = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let vector = parsed
            .vector
            .iter()
            .map(|raw| raw.get().trim().parse::<f32>())
            .collect::<Result<Vec<f32>, _>>()
            .map_err(|e| CorpusError::Parse {
                line: line_no,
                message: format!("vector component: {e}"),
            })?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(CorpusError::InconsistentDimension {
                    line: line_no,
                    expected: d,
                    actual: vector.len(),
                })
            }
            _ => {}
        }
        out.push(EmbeddingRecord {
            id: parsed.id,
            doc_key: parsed.doc_key,
            snippet: parsed.snippet,
            vector,
        });
    }
    Ok(out)
}

fn check_uniform(records: &[EmbeddingRecord]) -> Result<usize, CorpusError> {
    let dim = records.first().map_or(0, |r| r.vector.len());
    for r in records {
        if r.vector.len() != dim {
            return Err(CorpusError::RecordDimension {
                id: r.id,
                expected: dim,
                actual: r.vector.len(),
            });
        }
        if r.vector.iter().any(|v| !v.is_finite()) {
            return Err(CorpusError::NonFinite(r.id));
        }
    }
    Ok(dim)
}

pub fn embeddings_to_jsonl(records: &[EmbeddingRecord]) -> Result<String, CorpusError> {
    check_uniform(records)?;
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(&JsonlOut {
            id: r.id,
            doc_key: &r.doc_key,
            snippet: r.snippet.as_deref(),
            vector: &r.vector,
        })
        .expect("finite records always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn embeddings_to_bin(records: &[EmbeddingRecord]) -> Result<Vec<u8>, CorpusError> {
    let dim = check_uniform(records)?;
    let mut w = Writer::new(EMBEDDING_MAGIC, EMBEDDING_VERSION);
    w.dim(dim)?;
    w.u64(records.len() as u64);
    for r in records {
        w.record(r.id, &r.doc_key, r.snippet.as_deref(), &r.vector)?;
    }
    Ok(w.finish())
}

pub fn embeddings_from_bin(bytes: &[u8]) -> Result<Vec<EmbeddingRecord>, CorpusError> {
    let mut r = Reader::open(bytes, EMBEDDING_MAGIC, EMBEDDING_VERSION)?;
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    let records = r.records(count, dim)?;
    r.finish()?;
    Ok(records)
}

pub fn read_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Vec<EmbeddingRecord>, CorpusError> {
    let path = path.as_ref();
    match format {
        EmbeddingFormat::Jsonl => parse_embeddings_jsonl(&fs::read_to_string(path).map_err(io_err(path))?),
        EmbeddingFormat::Bin => embeddings_from_bin(&fs::read(path).map_err(io_err(path))?),
    }
}

pub fn write_embeddings(
    records: &[EmbeddingRecord],
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let bytes = match format {
        EmbeddingFormat::Jsonl => embeddings_to_jsonl(records)?.into_bytes(),
        EmbeddingFormat::Bin => embeddings_to_bin(records)?,
    };
    fs::write(path, bytes).map_err(io_err(path))
}

/// One line of a chunks file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub id: u64,
    #[serde(flatten)]
    pub chunk: Chunk,
}

pub fn write_chunks(chunks: &[ChunkRecord], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for c in chunks {
        serde_json::to_writer(&mut w, c).map_err(|e| CorpusError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a chunks file. `token_count` and `oversized` are optional on input;
/// a missing count is recomputed from the text.
pub fn read_chunks(path: impl AsRef<Path>) -> Result<Vec<ChunkRecord>, CorpusError> {
    #[derive(Deserialize)]
    struct Line {
        id: u64,
        doc_key: String,
        text: String,
        #[serde(default)]
        token_count: Option<usize>,
        #[serde(default)]
        oversized: bool,
    }
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let token_count = l.token_count.unwrap_or_else(|| count_tokens(&l.text));
        out.push(ChunkRecord {
            id: l.id,
            chunk: Chunk {
                doc_key: l.doc_key,
                text: l.text,
                token_count,
                oversized: l.oversized,
            },
        });
    }
    Ok(out)
}
