//! Metric MDS to the plane by SMACOF stress majorization.
//!
//! Stress is the raw, unnormalized `sum_{i<j} (d_ij - delta_ij)^2`. Each
//! Guttman transform cannot increase it; an increase therefore only comes
//! from rounding at the noise floor, and iteration stops there without
//! accepting the worse configuration. The recorded trace is thus
//! non-increasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::store::Metric;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdsError {
    #[error("distance matrix must have n*n = {expected} entries, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("need at least 2 points, got {0}")]
    TooFew(usize),
    #[error("entry ({i}, {j}) = {value} is negative or non-finite")]
    InvalidEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry {i} is {value}, expected 0")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("matrix is asymmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("vector {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, actual: usize },
    #[error("no vectors given")]
    Empty,
    #[error("invalid options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a row-major `n x n` matrix: symmetric, zero diagonal,
    /// finite non-negative entries.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, MdsError> {
        if values.len() != n * n {
            return Err(MdsError::Shape {
                expected: n * n,
                actual: values.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(MdsError::InvalidEntry { i, j, value: v });
                }
            }
            if values[i * n + i] != 0.0 {
                return Err(MdsError::NonZeroDiagonal {
                    i,
                    value: values[i * n + i],
                });
            }
            for j in i + 1..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(MdsError::Asymmetric { i, j, a, b });
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `values[i][j] = metric(v_i, v_j)`, computed once per pair and mirrored.
pub fn pairwise_distances<V: AsRef<[f32]>>(vectors: &[V], metric: Metric) -> Result<DistanceMatrix, MdsError> {
    let first = vectors.first().ok_or(MdsError::Empty)?;
    let dim = first.as_ref().len();
    for (index, v) in vectors.iter().enumerate() {
        if v.as_ref().len() != dim {
            return Err(MdsError::DimensionMismatch {
                index,
                expected: dim,
                actual: v.as_ref().len(),
            });
        }
    }
    let n = vectors.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance(vectors[i].as_ref(), vectors[j].as_ref());
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdsOptions {
    pub max_iter: usize,
    pub eps: f64,
    /// Independent seeded starts; the lowest final stress wins.
    pub restarts: usize,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            eps: 1e-6,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    pub coordinates: Vec<[f64; 2]>,
    pub stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stress of the initial configuration followed by every accepted iterate.
    pub trace: Vec<f64>,
}

impl MdsResult {
    pub fn distances(&self) -> Vec<f64> {
        let n = self.coordinates.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = planar(&self.coordinates[i], &self.coordinates[j]);
            }
        }
        d
    }
}

fn planar(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Raw stress of a configuration against `delta`.
pub fn stress(delta: &DistanceMatrix, coords: &[[f64; 2]]) -> f64 {
    let n = delta.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = planar(&coords[i], &coords[j]) - delta.get(i, j);
            s += r * r;
        }
    }
    s
}

fn guttman(delta: &DistanceMatrix, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = delta.n;
    let mut out = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut diag = 0.0;
        let mut acc = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = planar(&x[i], &x[j]);
            let b = if d > 0.0 { -delta.get(i, j) / d } else { 0.0 };
            diag -= b;
            acc[0] += b * x[j][0];
            acc[1] += b * x[j][1];
        }
        out[i] = [
            (acc[0] + diag * x[i][0]) / n as f64,
            (acc[1] + diag * x[i][1]) / n as f64,
        ];
    }
    out
}

fn center(coords: &mut [[f64; 2]]) {
    let n = coords.len() as f64;
    let mean = coords
        .iter()
        .fold([0.0, 0.0], |m, c| [m[0] + c[0], m[1] + c[1]]);
    for c in coords {
        c[0] -= mean[0] / n;
        c[1] -= mean[1] / n;
    }
}

fn smacof_once(delta: &DistanceMatrix, mut x: Vec<[f64; 2]>, opts: &MdsOptions) -> MdsResult {
    center(&mut x);
    let mut current = stress(delta, &x);
    let mut trace = vec![current];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if current == 0.0 {
            converged = true;
            break;
        }
        let next = guttman(delta, &x);
        let s = stress(delta, &next);
        if s > current {
            converged = true;
            break;
        }
        iterations += 1;
        x = next;
        let decrease = (current - s) / current;
        current = s;
        trace.push(s);
        if decrease < opts.eps {
            converged = true;
            break;
        }
    }
    center(&mut x);
    MdsResult {
        coordinates: x,
        stress: current,
        iterations,
        converged,
        trace,
    }
}

/// SMACOF from seeded uniform random starts in the unit square. A single
/// start lands in a local minimum often enough on small inputs that the
/// default keeps the best of four.
pub fn mds_project(delta: &DistanceMatrix, seed: u64, opts: &MdsOptions) -> Result<MdsResult, MdsError> {
    if delta.n < 2 {
        return Err(MdsError::TooFew(delta.n));
    }
    if opts.restarts == 0 || opts.eps.is_nan() || opts.eps < 0.0 {
        return Err(MdsError::Options("restarts must be >= 1 and eps >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<MdsResult> = None;
    for _ in 0..opts.restarts {
        let init: Vec<[f64; 2]> = (0..delta.n).map(|_| [rng.random(), rng.random()]).collect();
        let run = smacof_once(delta, init, opts);
        if best.as_ref().is_none_or(|b| run.stress < b.stress) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
