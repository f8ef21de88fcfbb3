//! Exact flat vector index.
//!
//! Vectors are kept contiguously in single precision; distances accumulate
//! in double precision. An index never changes after [`build_index`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{FormatError, Reader, Writer};
use crate::reducer::ReductionSpec;

pub const INDEX_MAGIC: &[u8; 4] = b"SDIM";
pub const INDEX_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot build an index from zero records")]
    Empty,
    #[error("record {id}: expected dimension {expected}, got {actual}")]
    DimensionMismatch { id: u64, expected: usize, actual: usize },
    #[error("query has dimension {actual}, index has {expected}")]
    QueryDimension { expected: usize, actual: usize },
    #[error("duplicate record id {0}")]
    DuplicateId(u64),
    #[error("record {0} has a zero vector, which has no cosine direction")]
    ZeroVector(u64),
    #[error("zero query vector under cosine metric")]
    ZeroQuery,
    #[error("record {0} contains a non-finite component")]
    NonFinite(u64),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("inconsistent reduction metadata: {0}")]
    Reduction(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: u64,
    pub doc_key: String,
    pub snippet: Option<String>,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    Cosine,
}

impl Metric {
    fn code(self) -> u8 {
        match self {
            Metric::L2 => 0,
            Metric::Cosine => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self, FormatError> {
        match code {
            0 => Ok(Metric::L2),
            1 => Ok(Metric::Cosine),
            c => Err(FormatError::InvalidField(format!("unknown metric code {c}"))),
        }
    }

    /// Distance between two vectors. Cosine distance of a zero vector is
    /// reported as 1 (orthogonal); indexes reject zero vectors up front.
    pub fn distance(self, a: &[f32], b: &[f32]) -> f64 {
        match self {
            Metric::L2 => l2(a, b),
            Metric::Cosine => cosine_with_norms(a, b, norm(a), norm(b)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "cosine" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric {other:?} (expected l2 or cosine)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Original,
    Transformed,
}

impl IndexKind {
    fn code(self) -> u8 {
        match self {
            IndexKind::Original => 0,
            IndexKind::Transformed => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self, FormatError> {
        match code {
            0 => Ok(IndexKind::Original),
            1 => Ok(IndexKind::Transformed),
            c => Err(FormatError::InvalidField(format!("unknown index kind code {c}"))),
        }
    }
}

pub(crate) fn l2(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            let d = x[i] as f64 - y[i] as f64;
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = *x as f64 - *y as f64;
        tail += d * d;
    }
    (acc[0] + acc[1] + acc[2] + acc[3] + tail).sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            acc[i] += x[i] as f64 * y[i] as f64;
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| *x as f64 * *y as f64)
        .sum();
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

pub(crate) fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

fn cosine_with_norms(a: &[f32], b: &[f32], na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0)
}

/// Borrowed view of one stored record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRef<'a> {
    pub id: u64,
    pub doc_key: &'a str,
    pub snippet: Option<&'a str>,
    pub vector: &'a [f32],
}

impl RecordRef<'_> {
    pub fn to_owned(&self) -> EmbeddingRecord {
        EmbeddingRecord {
            id: self.id,
            doc_key: self.doc_key.to_string(),
            snippet: self.snippet.map(str::to_string),
            vector: self.vector.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    metric: Metric,
    kind: IndexKind,
    reduction: Option<ReductionSpec>,
    ids: Vec<u64>,
    doc_keys: Vec<String>,
    snippets: Vec<Option<String>>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub id: u64,
    pub doc_key: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub k: usize,
    pub hits: Vec<Hit>,
}

impl QueryResult {
    pub fn ids(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    distance: f64,
    pos: usize,
    id: u64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds an immutable index. Record order is preserved.
///
/// `reduction` must be present exactly when `kind` is
/// [`IndexKind::Transformed`], and its target dimension must equal the
/// record dimension.
pub fn build_index(
    records: Vec<EmbeddingRecord>,
    metric: Metric,
    kind: IndexKind,
    reduction: Option<ReductionSpec>,
) -> Result<VectorIndex, StoreError> {
    let first = records.first().ok_or(StoreError::Empty)?;
    let dim = first.vector.len();
    if dim == 0 {
        return Err(StoreError::DimensionMismatch {
            id: first.id,
            expected: 1,
            actual: 0,
        });
    }
    match (kind, reduction) {
        (IndexKind::Original, Some(_)) => {
            return Err(StoreError::Reduction("original index cannot carry a reduction".into()))
        }
        (IndexKind::Transformed, None) => {
            return Err(StoreError::Reduction("transformed index requires a reduction".into()))
        }
        (IndexKind::Transformed, Some(spec)) if spec.target_dim() != dim => {
            return Err(StoreError::Reduction(format!(
                "reduction target {} does not match vector dimension {dim}",
                spec.target_dim()
            )))
        }
        _ => {}
    }

    let mut seen = HashSet::with_capacity(records.len());
    let mut ids = Vec::with_capacity(records.len());
    let mut doc_keys = Vec::with_capacity(records.len());
    let mut snippets = Vec::with_capacity(records.len());
    let mut data = Vec::with_capacity(records.len() * dim);
    let mut norms = Vec::with_capacity(records.len());
    for rec in records {
        if rec.vector.len() != dim {
            return Err(StoreError::DimensionMismatch {
                id: rec.id,
                expected: dim,
                actual: rec.vector.len(),
            });
        }
        if !seen.insert(rec.id) {
            return Err(StoreError::DuplicateId(rec.id));
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite(rec.id));
        }
        let n = norm(&rec.vector);
        if metric == Metric::Cosine && n == 0.0 {
            return Err(StoreError::ZeroVector(rec.id));
        }
        ids.push(rec.id);
        doc_keys.push(rec.doc_key);
        snippets.push(rec.snippet);
        data.extend_from_slice(&rec.vector);
        norms.push(n);
    }
    Ok(VectorIndex {
        dim,
        metric,
        kind,
        reduction,
        ids,
        doc_keys,
        snippets,
        data,
        norms,
    })
}

impl VectorIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn reduction(&self) -> Option<&ReductionSpec> {
        self.reduction.as_ref()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn vector(&self, pos: usize) -> &[f32] {
        &self.data[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn record(&self, pos: usize) -> RecordRef<'_> {
        RecordRef {
            id: self.ids[pos],
            doc_key: &self.doc_keys[pos],
            snippet: self.snippets[pos].as_deref(),
            vector: self.vector(pos),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = RecordRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.record(i))
    }

    /// Size in bytes of the stored vector payload.
    pub fn payload_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f32>()
    }

    /// Exact top-`k` by ascending distance; ties go to the smaller id.
    pub fn search(&self, query: &[f32], k: usize) -> Result<QueryResult, StoreError> {
        if k == 0 {
            return Err(StoreError::ZeroK);
        }
        if query.len() != self.dim {
            return Err(StoreError::QueryDimension {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let query_norm = norm(query);
        if self.metric == Metric::Cosine && query_norm == 0.0 {
            return Err(StoreError::ZeroQuery);
        }
        let keep = k.min(self.len());
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(keep + 1);
        for (pos, row) in self.data.chunks_exact(self.dim).enumerate() {
            let distance = match self.metric {
                Metric::L2 => l2(query, row),
                Metric::Cosine => cosine_with_norms(query, row, query_norm, self.norms[pos]),
            };
            let cand = Candidate {
                distance,
                pos,
                id: self.ids[pos],
            };
            if heap.len() < keep {
                heap.push(cand);
            } else if let Some(worst) = heap.peek() {
                if cand < *worst {
                    heap.pop();
                    heap.push(cand);
                }
            }
        }
        let hits = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Hit {
                id: c.id,
                doc_key: self.doc_keys[c.pos].clone(),
                distance: c.distance,
            })
            .collect();
        Ok(QueryResult { k, hits })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, StoreError> {
        let mut w = Writer::new(INDEX_MAGIC, INDEX_VERSION);
        w.u8(self.kind.code());
        w.u8(self.metric.code());
        w.dim(self.dim)?;
        w.u64(self.len() as u64);
        if let Some(spec) = &self.reduction {
            w.dim(spec.source_dim())?;
            w.dim(spec.target_dim())?;
        }
        for rec in self.records() {
            w.record(rec.id, rec.doc_key, rec.snippet, rec.vector)?;
        }
        Ok(w.finish())
    }

    /// Parses a full index file. The record factor is not stored, so a
    /// loaded reduction carries only its source and target dimensions.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        let mut r = Reader::open(bytes, INDEX_MAGIC, INDEX_VERSION)?;
        let kind = IndexKind::from_code(r.u8()?)?;
        let metric = Metric::from_code(r.u8()?)?;
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let reduction = match kind {
            IndexKind::Original => None,
            IndexKind::Transformed => {
                let source = r.u32()? as usize;
                let target = r.u32()? as usize;
                Some(
                    ReductionSpec::with_target(source, target)
                        .map_err(|e| FormatError::InvalidField(e.to_string()))?,
                )
            }
        };
        let records = r.records(count, dim)?;
        r.finish()?;
        if records.is_empty() {
            return Err(FormatError::InvalidField("index holds zero records".into()).into());
        }
        build_index(records, metric, kind, reduction)
    }
}

pub fn save_index(index: &VectorIndex, path: impl AsRef<Path>) -> Result<(), StoreError> {
    std::fs::write(path, index.to_bytes()?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<VectorIndex, StoreError> {
    VectorIndex::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, v: Vec<f32>) -> EmbeddingRecord {
        EmbeddingRecord {
            id,
            doc_key: format!("doc#{id}"),
            snippet: None,
            vector: v,
        }
    }

    #[test]
    fn hand_checked_1d_search() {
        let idx = build_index(
            vec![rec(0, vec![0.0]), rec(1, vec![5.0]), rec(2, vec![9.0])],
            Metric::L2,
            IndexKind::Original,
            None,
        )
        .unwrap();
        let res = idx.search(&[6.0], 2).unwrap();
        assert_eq!(res.ids(), vec![1, 2]);
        assert_eq!(res.hits[0].distance, 1.0);
        assert_eq!(res.hits[1].distance, 3.0);
    }

    #[test]
    fn ties_break_by_id_and_k_clamps() {
        let idx = build_index(
            vec![rec(7, vec![1.0]), rec(3, vec![-1.0]), rec(5, vec![1.0])],
            Metric::L2,
            IndexKind::Original,
            None,
        )
        .unwrap();
        let res = idx.search(&[0.0], 10).unwrap();
        assert_eq!(res.ids(), vec![3, 5, 7]);
        assert_eq!(res.k, 10);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            build_index(vec![], Metric::L2, IndexKind::Original, None),
            Err(StoreError::Empty)
        ));
        assert!(matches!(
            build_index(vec![rec(1, vec![1.0]), rec(1, vec![2.0])], Metric::L2, IndexKind::Original, None),
            Err(StoreError::DuplicateId(1))
        ));
        assert!(matches!(
            build_index(vec![rec(1, vec![1.0]), rec(2, vec![2.0, 1.0])], Metric::L2, IndexKind::Original, None),
            Err(StoreError::DimensionMismatch { id: 2, expected: 1, actual: 2 })
        ));
        assert!(matches!(
            build_index(vec![rec(4, vec![0.0, 0.0])], Metric::Cosine, IndexKind::Original, None),
            Err(StoreError::ZeroVector(4))
        ));
        assert!(matches!(
            build_index(vec![rec(4, vec![f32::NAN])], Metric::L2, IndexKind::Original, None),
            Err(StoreError::NonFinite(4))
        ));
        assert!(matches!(
            build_index(vec![rec(1, vec![1.0])], Metric::L2, IndexKind::Transformed, None),
            Err(StoreError::Reduction(_))
        ));
        let spec = ReductionSpec::with_target(8, 2).unwrap();
        assert!(matches!(
            build_index(vec![rec(1, vec![1.0])], Metric::L2, IndexKind::Transformed, Some(spec)),
            Err(StoreError::Reduction(_))
        ));
    }

    #[test]
    fn search_errors() {
        let idx = build_index(vec![rec(1, vec![1.0, 0.0])], Metric::Cosine, IndexKind::Original, None).unwrap();
        assert!(matches!(idx.search(&[1.0], 1), Err(StoreError::QueryDimension { expected: 2, actual: 1 })));
        assert!(matches!(idx.search(&[1.0, 0.0], 0), Err(StoreError::ZeroK)));
        assert!(matches!(idx.search(&[0.0, 0.0], 1), Err(StoreError::ZeroQuery)));
    }

    #[test]
    fn cosine_range() {
        let a = [1.0f32, 0.0];
        assert!(Metric::Cosine.distance(&a, &a).abs() < 1e-12);
        assert!((Metric::Cosine.distance(&a, &[0.0, 3.0]) - 1.0).abs() < 1e-12);
        assert!((Metric::Cosine.distance(&a, &[-2.0, 0.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("L2".parse::<Metric>().unwrap(), Metric::L2);
        assert_eq!("cosine".parse::<Metric>().unwrap(), Metric::Cosine);
        assert!("dot".parse::<Metric>().is_err());
    }
}
