mod common;

use common::*;
use rand::Rng;
use specdim::mds::*;
use specdim::store::Metric;
use specdim::synthetic::SyntheticCorpus;

fn planar_points(n: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| vec![r.random_range(-5.0f32..5.0), r.random_range(-5.0f32..5.0)])
        .collect()
}

fn max_deviation(res: &MdsResult, delta: &DistanceMatrix) -> f64 {
    res.distances()
        .iter()
        .zip(delta.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn planar_configurations_are_recovered() {
    for seed in 0..10 {
        let delta = pairwise_distances(&planar_points(10, seed), Metric::L2).unwrap();
        let res = mds_project(&delta, seed, &MdsOptions::default()).unwrap();
        let dev = max_deviation(&res, &delta);
        assert!(dev < 1e-3, "seed {seed}: deviation {dev:e}");
    }
}

#[test]
fn stress_trace_never_increases() {
    let corpus = SyntheticCorpus::generate(specdim::synthetic::CorpusConfig::small());
    let vectors: Vec<Vec<f32>> = corpus.embed().unwrap().into_iter().map(|r| r.vector).collect();
    let inputs = [
        pairwise_distances(&vectors, Metric::Cosine).unwrap(),
        pairwise_distances(&vectors, Metric::L2).unwrap(),
        pairwise_distances(&random_records(25, 8, 3).into_iter().map(|r| r.vector).collect::<Vec<_>>(), Metric::L2)
            .unwrap(),
    ];
    for delta in &inputs {
        for seed in 0..5 {
            let res = mds_project(delta, seed, &MdsOptions { restarts: 1, ..Default::default() }).unwrap();
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {:?}", res.trace);
            assert_eq!(*res.trace.last().unwrap(), res.stress);
            assert!((stress(delta, &res.coordinates) - res.stress).abs() <= 1e-9 * res.stress.max(1.0));
        }
    }
}

#[test]
fn restarts_never_worse_than_single() {
    let delta = pairwise_distances(&planar_points(12, 50), Metric::L2).unwrap();
    let one = mds_project(&delta, 4, &MdsOptions { restarts: 1, ..Default::default() }).unwrap();
    let many = mds_project(&delta, 4, &MdsOptions { restarts: 6, ..Default::default() }).unwrap();
    assert!(many.stress <= one.stress);
}

#[test]
fn two_topic_block_means() {
    let corpus = SyntheticCorpus::standard();
    let recs = corpus.embed().unwrap();
    let labels = corpus.labels();
    let vectors: Vec<Vec<f32>> = recs.iter().map(|r| r.vector.clone()).collect();
    let d = pairwise_distances(&vectors, Metric::Cosine).unwrap();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for i in 0..recs.len() {
        for j in 0..recs.len() {
            if i == j {
                continue;
            }
            if labels[&recs[i].id] == labels[&recs[j].id] {
                intra += d.get(i, j);
                ni += 1;
            } else {
                inter += d.get(i, j);
                nx += 1;
            }
        }
    }
    assert!(intra / (ni as f64) < inter / (nx as f64));
}

#[test]
fn seeded_runs_repeat() {
    let delta = pairwise_distances(&planar_points(15, 8), Metric::L2).unwrap();
    assert_eq!(
        mds_project(&delta, 1, &MdsOptions::default()).unwrap(),
        mds_project(&delta, 1, &MdsOptions::default()).unwrap()
    );
}
