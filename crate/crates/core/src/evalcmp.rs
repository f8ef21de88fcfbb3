//! Paired original/reduced databases and the metrics that compare them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::reducer::{ReduceError, ReductionSpec, SpectralReducer};
use crate::store::{build_index, EmbeddingRecord, IndexKind, Metric, QueryResult, StoreError, VectorIndex};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("hit id {0} has no label")]
    Unlabeled(u64),
    #[error("{0}")]
    InvalidArgument(String),
}

/// `DB_orig` and `DB_trans` over the same records, with identical ids and order.
#[derive(Debug, Clone)]
pub struct PairedDbs {
    pub original: VectorIndex,
    pub reduced: VectorIndex,
    reducer: SpectralReducer,
}

impl PairedDbs {
    pub fn spec(&self) -> &ReductionSpec {
        self.reducer.spec()
    }

    /// Maps an original-space query into the reduced space.
    pub fn transform_query(&self, query: &[f32]) -> Result<Vec<f32>, EvalError> {
        Ok(self.reducer.transform_f32(query)?)
    }
}

pub fn build_paired_dbs(
    records: Vec<EmbeddingRecord>,
    spec: ReductionSpec,
    metric: Metric,
) -> Result<PairedDbs, EvalError> {
    let reducer = SpectralReducer::new(spec)?;
    let reduced_records = records
        .par_iter()
        .map(|r| {
            Ok(EmbeddingRecord {
                id: r.id,
                doc_key: r.doc_key.clone(),
                snippet: r.snippet.clone(),
                vector: reducer.transform_f32(&r.vector)?,
            })
        })
        .collect::<Result<Vec<_>, ReduceError>>()?;
    let original = build_index(records, metric, IndexKind::Original, None)?;
    let reduced = build_index(reduced_records, metric, IndexKind::Transformed, Some(spec))?;
    Ok(PairedDbs {
        original,
        reduced,
        reducer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalComparison {
    pub query_key: String,
    pub k: usize,
    pub original_hits: Vec<u64>,
    pub reduced_hits: Vec<u64>,
    pub recall_at_k: f64,
    pub rank_correlation: f64,
    pub factor: f64,
    pub dims: (usize, usize),
}

/// `|top-k(a) ∩ top-k(b)| / k`. When the database holds fewer than `k`
/// records the denominator is the number of original hits, so a corpus
/// smaller than `k` can still reach 1.
pub fn recall_at_k(original: &[u64], reduced: &[u64], k: usize) -> f64 {
    let denom = k.min(original.len());
    if denom == 0 {
        return 0.0;
    }
    let a: HashSet<u64> = original.iter().take(k).copied().collect();
    let hits = reduced.iter().take(k).filter(|id| a.contains(id)).count();
    hits as f64 / denom as f64
}

/// Spearman correlation over the union of two ranked lists; ids missing
/// from a list get rank `k + 1`. A union of one element correlates at 1.
pub fn rank_correlation(original: &[u64], reduced: &[u64], k: usize) -> f64 {
    let rank_map = |list: &[u64]| -> HashMap<u64, f64> {
        list.iter().take(k).enumerate().map(|(i, id)| (*id, (i + 1) as f64)).collect()
    };
    let (ra, rb) = (rank_map(original), rank_map(reduced));
    let mut union: Vec<u64> = ra.keys().chain(rb.keys()).copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.len() <= 1 {
        return 1.0;
    }
    let absent = (k + 1) as f64;
    let xs: Vec<f64> = union.iter().map(|id| *ra.get(id).unwrap_or(&absent)).collect();
    let ys: Vec<f64> = union.iter().map(|id| *rb.get(id).unwrap_or(&absent)).collect();
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if xs == ys { 1.0 } else { 0.0 };
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Searches `DB_orig` with the raw query and `DB_trans` with its transform.
pub fn compare_query(
    dbs: &PairedDbs,
    query_key: &str,
    query: &[f32],
    k: usize,
) -> Result<RetrievalComparison, EvalError> {
    let (orig, red) = search_both(dbs, query, k)?;
    Ok(comparison_from_results(dbs, query_key, k, &orig, &red))
}

/// Top-k from both databases for one original-space query.
pub fn search_both(dbs: &PairedDbs, query: &[f32], k: usize) -> Result<(QueryResult, QueryResult), EvalError> {
    let orig = dbs.original.search(query, k)?;
    let red = dbs.reduced.search(&dbs.transform_query(query)?, k)?;
    Ok((orig, red))
}

/// Builds the comparison metrics from two already computed result lists.
pub fn comparison_from_results(dbs: &PairedDbs, query_key: &str, k: usize, orig: &QueryResult, red: &QueryResult) -> RetrievalComparison {
    let (original_hits, reduced_hits) = (orig.ids(), red.ids());
    let spec = dbs.spec();
    RetrievalComparison {
        query_key: query_key.to_string(),
        k,
        recall_at_k: recall_at_k(&original_hits, &reduced_hits, k),
        rank_correlation: rank_correlation(&original_hits, &reduced_hits, k),
        original_hits,
        reduced_hits,
        factor: spec.effective_factor(),
        dims: (spec.source_dim(), spec.target_dim()),
    }
}

/// Runs [`compare_query`] for every `(key, vector)` pair, in parallel,
/// returning results in input order.
pub fn compare_all<K: AsRef<str> + Sync, V: AsRef<[f32]> + Sync>(
    dbs: &PairedDbs,
    queries: &[(K, V)],
    k: usize,
) -> Result<Vec<RetrievalComparison>, EvalError> {
    queries
        .par_iter()
        .map(|(key, v)| compare_query(dbs, key.as_ref(), v.as_ref(), k))
        .collect()
}

pub fn mean_recall(comparisons: &[RetrievalComparison]) -> f64 {
    if comparisons.is_empty() {
        return 0.0;
    }
    comparisons.iter().map(|c| c.recall_at_k).sum::<f64>() / comparisons.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicPurityReport {
    pub query_topic: String,
    pub retrieved_labels: Vec<String>,
    pub purity_at_k: f64,
}

/// Fraction of the returned hits labeled `query_topic`.
pub fn topic_purity(
    result: &QueryResult,
    labels: &HashMap<u64, String>,
    query_topic: &str,
) -> Result<TopicPurityReport, EvalError> {
    let retrieved_labels = result
        .hits
        .iter()
        .map(|h| labels.get(&h.id).cloned().ok_or(EvalError::Unlabeled(h.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let matching = retrieved_labels.iter().filter(|l| *l == query_topic).count();
    let purity_at_k = if retrieved_labels.is_empty() {
        0.0
    } else {
        matching as f64 / retrieved_labels.len() as f64
    };
    Ok(TopicPurityReport {
        query_topic: query_topic.to_string(),
        retrieved_labels,
        purity_at_k,
    })
}

/// Topic label carried by a `source#ordinal` document key.
pub fn label_from_doc_key(doc_key: &str) -> &str {
    doc_key.split_once('#').map_or(doc_key, |(source, _)| source)
}

pub fn labels_from_index(index: &VectorIndex) -> HashMap<u64, String> {
    index
        .records()
        .map(|r| (r.id, label_from_doc_key(r.doc_key).to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub queries: usize,
    pub records: usize,
    pub repetitions: usize,
    pub k: usize,
    pub dims: (usize, usize),
    pub original_ns_per_query: f64,
    pub reduced_ns_per_query: f64,
    /// original / reduced
    pub speedup: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn time_pass(index: &VectorIndex, queries: &[Vec<f32>], k: usize) -> Result<f64, EvalError> {
    let start = Instant::now();
    for q in queries {
        black_box(index.search(black_box(q), k)?);
    }
    Ok(start.elapsed().as_nanos() as f64 / queries.len() as f64)
}

/// Median per-query search latency on both databases. Queries are
/// transformed before timing, so the reduced figure is search cost only.
/// One warm-up pass per index is discarded; passes alternate between the
/// two indexes so drift affects both alike.
pub fn bench_search(
    dbs: &PairedDbs,
    queries: &[Vec<f32>],
    k: usize,
    repetitions: usize,
) -> Result<BenchReport, EvalError> {
    if queries.is_empty() {
        return Err(EvalError::InvalidArgument("bench needs at least one query".into()));
    }
    if repetitions < 3 {
        return Err(EvalError::InvalidArgument("bench needs at least 3 repetitions".into()));
    }
    let reduced_queries = queries
        .iter()
        .map(|q| dbs.transform_query(q))
        .collect::<Result<Vec<_>, _>>()?;
    time_pass(&dbs.original, queries, k)?;
    time_pass(&dbs.reduced, &reduced_queries, k)?;
    let mut orig = Vec::with_capacity(repetitions);
    let mut red = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        orig.push(time_pass(&dbs.original, queries, k)?);
        red.push(time_pass(&dbs.reduced, &reduced_queries, k)?);
    }
    let (o, r) = (median(orig), median(red));
    Ok(BenchReport {
        queries: queries.len(),
        records: dbs.original.len(),
        repetitions,
        k,
        dims: (dbs.spec().source_dim(), dbs.spec().target_dim()),
        original_ns_per_query: o,
        reduced_ns_per_query: r,
        speedup: o / r.max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Latencies {
    pub original_ns: f64,
    pub reduced_ns: f64,
}

/// One row of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub query_key: String,
    pub k: usize,
    pub factor: f64,
    pub dims: (usize, usize),
    pub recall_at_k: f64,
    pub rank_correlation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<PurityPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latencies: Option<Latencies>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityPair {
    pub original: f64,
    pub reduced: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub mean_recall_at_k: f64,
    pub mean_rank_correlation: f64,
}

impl ComparisonReport {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean_recall_at_k = rows.iter().map(|r| r.recall_at_k).sum::<f64>() / n;
        let mean_rank_correlation = rows.iter().map(|r| r.rank_correlation).sum::<f64>() / n;
        Self {
            rows,
            mean_recall_at_k,
            mean_rank_correlation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, one line per query plus a mean line.
    pub fn to_table(&self) -> String {
        let key_w = self
            .rows
            .iter()
            .map(|r| r.query_key.len())
            .max()
            .unwrap_or(0)
            .max("query".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<key_w$}  {:>4}  {:>7}  {:>9}  {:>9}  {:>8}  {:>8}",
            "query", "k", "factor", "dims", "recall@k", "spearman", "purity"
        );
        for r in &self.rows {
            let purity = r
                .purity
                .map_or("-".to_string(), |p| format!("{:.2}/{:.2}", p.original, p.reduced));
            let _ = writeln!(
                out,
                "{:<key_w$}  {:>4}  {:>7.3}  {:>9}  {:>9.3}  {:>8.3}  {:>8}",
                r.query_key,
                r.k,
                r.factor,
                format!("{}->{}", r.dims.0, r.dims.1),
                r.recall_at_k,
                r.rank_correlation,
                purity
            );
        }
        let _ = writeln!(
            out,
            "{:<key_w$}  {:>4}  {:>7}  {:>9}  {:>9.3}  {:>8.3}",
            "mean", "", "", "", self.mean_recall_at_k, self.mean_rank_correlation
        );
        out
    }
}
