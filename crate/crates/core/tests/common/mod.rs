#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use specdim::store::{EmbeddingRecord, Metric};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(n: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect()
}

pub fn random_real(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

pub fn as_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn random_records(count: usize, dim: usize, seed: u64) -> Vec<EmbeddingRecord> {
    let mut r = rng(seed);
    (0..count as u64)
        .map(|id| EmbeddingRecord {
            id,
            doc_key: format!("doc#{id}"),
            snippet: None,
            vector: (0..dim).map(|_| r.sample::<f32, _>(StandardNormal)).collect(),
        })
        .collect()
}

pub fn random_query(dim: usize, seed: u64) -> Vec<f32> {
    let mut r = rng(seed);
    (0..dim).map(|_| r.sample::<f32, _>(StandardNormal)).collect()
}

/// Naive distance written out independently of the store's kernels.
pub fn reference_distance(metric: Metric, a: &[f32], b: &[f32]) -> f64 {
    match metric {
        Metric::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
            let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
        }
    }
}

/// Full-sort reference search: every distance, sorted by (distance, id).
/// Uses the library's distance kernel so that only the selection logic is
/// under test; the kernel is checked against [`reference_distance`] apart.
pub fn full_sort_search(records: &[EmbeddingRecord], metric: Metric, q: &[f32], k: usize) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = records
        .iter()
        .map(|r| (r.id, metric.distance(q, &r.vector)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    1.0 - reference_distance(Metric::Cosine, a, b)
}
