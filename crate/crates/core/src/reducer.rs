//! Low-frequency amplitude reduction of embedding vectors.
//!
//! An embedding `u` of dimension `N` is mapped to the first `M` entries of
//! `|FFT(u)|`. The prefix keeps the lowest frequency indices in their
//! natural order; nothing is rescaled or re-ranked by magnitude. For real
//! inputs the entries above `N/2` mirror the lower half, and a prefix with
//! `M > N/2` simply carries those duplicates along.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{amplitude_spectrum, FftPlan, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("invalid reduction: {0}")]
    InvalidSpec(String),
    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Source dimension `N`, kept dimension `M`, and the factor that produced
/// `M` when one was given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionSpec {
    source_dim: usize,
    target_dim: usize,
    factor: Option<f64>,
}

impl ReductionSpec {
    /// `M = floor(N / factor)`.
    pub fn from_factor(source_dim: usize, factor: f64) -> Result<Self, ReduceError> {
        if source_dim == 0 {
            return Err(ReduceError::InvalidSpec("source dimension must be >= 1".into()));
        }
        if !factor.is_finite() || factor < 1.0 {
            return Err(ReduceError::InvalidSpec(format!(
                "factor must be a finite value >= 1, got {factor}"
            )));
        }
        let target_dim = (source_dim as f64 / factor).floor() as usize;
        if target_dim == 0 {
            return Err(ReduceError::InvalidSpec(format!(
                "factor {factor} leaves no dimensions of {source_dim}"
            )));
        }
        Ok(Self {
            source_dim,
            target_dim,
            factor: Some(factor),
        })
    }

    pub fn with_target(source_dim: usize, target_dim: usize) -> Result<Self, ReduceError> {
        if target_dim == 0 || target_dim > source_dim {
            return Err(ReduceError::InvalidSpec(format!(
                "target dimension must lie in 1..={source_dim}, got {target_dim}"
            )));
        }
        Ok(Self {
            source_dim,
            target_dim,
            factor: None,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn factor(&self) -> Option<f64> {
        self.factor
    }

    /// The requested factor, or `N / M` when the spec was built from a target.
    pub fn effective_factor(&self) -> f64 {
        self.factor
            .unwrap_or(self.source_dim as f64 / self.target_dim as f64)
    }
}

/// Shorthand for [`ReductionSpec::from_factor`].
pub fn make_spec(source_dim: usize, factor: f64) -> Result<ReductionSpec, ReduceError> {
    ReductionSpec::from_factor(source_dim, factor)
}

/// Reduced amplitude vector together with the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVector {
    pub amplitudes: Vec<f64>,
    pub spec: ReductionSpec,
}

impl SpectrumVector {
    pub fn source_dim(&self) -> usize {
        self.spec.source_dim
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.amplitudes.iter().map(|&a| a as f32).collect()
    }
}

/// Keeps the first `M` amplitudes.
pub fn reduce(amplitudes: &[f64], spec: &ReductionSpec) -> Result<SpectrumVector, ReduceError> {
    if amplitudes.len() != spec.source_dim {
        return Err(ReduceError::DimensionMismatch {
            expected: spec.source_dim,
            actual: amplitudes.len(),
        });
    }
    Ok(SpectrumVector {
        amplitudes: amplitudes[..spec.target_dim].to_vec(),
        spec: *spec,
    })
}

/// `reduce(amplitude_spectrum(fft_forward(u)), spec)`.
pub fn transform_embedding(u: &[f64], spec: &ReductionSpec) -> Result<SpectrumVector, ReduceError> {
    SpectralReducer::new(*spec)?.transform(u)
}

/// Applies one [`ReductionSpec`] to many vectors, reusing the FFT plan.
#[derive(Debug, Clone)]
pub struct SpectralReducer {
    spec: ReductionSpec,
    plan: FftPlan,
}

impl SpectralReducer {
    pub fn new(spec: ReductionSpec) -> Result<Self, ReduceError> {
        Ok(Self {
            plan: FftPlan::new(spec.source_dim)?,
            spec,
        })
    }

    pub fn spec(&self) -> &ReductionSpec {
        &self.spec
    }

    pub fn transform(&self, u: &[f64]) -> Result<SpectrumVector, ReduceError> {
        if u.len() != self.spec.source_dim {
            return Err(ReduceError::DimensionMismatch {
                expected: self.spec.source_dim,
                actual: u.len(),
            });
        }
        let spectrum = self.plan.forward_real(u)?;
        reduce(&amplitude_spectrum(&spectrum)?, &self.spec)
    }

    /// Single-precision convenience used for stored embeddings.
    pub fn transform_f32(&self, u: &[f32]) -> Result<Vec<f32>, ReduceError> {
        let wide: Vec<f64> = u.iter().map(|&x| x as f64).collect();
        Ok(self.transform(&wide)?.to_f32())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_sizes() {
        assert_eq!(make_spec(768, 5.0).unwrap().target_dim(), 153);
        assert_eq!(make_spec(768, 8.0).unwrap().target_dim(), 96);
        assert_eq!(make_spec(768, 10.0).unwrap().target_dim(), 76);
        assert_eq!(make_spec(768, 1.0).unwrap().target_dim(), 768);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(make_spec(768, 0.5), Err(ReduceError::InvalidSpec(_))));
        assert!(matches!(make_spec(768, f64::NAN), Err(ReduceError::InvalidSpec(_))));
        assert!(matches!(make_spec(4, 5.0), Err(ReduceError::InvalidSpec(_))));
        assert!(matches!(make_spec(0, 1.0), Err(ReduceError::InvalidSpec(_))));
        assert!(ReductionSpec::with_target(8, 9).is_err());
        assert!(ReductionSpec::with_target(8, 0).is_err());
        assert_eq!(ReductionSpec::with_target(8, 2).unwrap().effective_factor(), 4.0);
    }

    #[test]
    fn prefix_of_small_vector() {
        let spec = ReductionSpec::with_target(4, 2).unwrap();
        assert_eq!(reduce(&[5.0, 3.0, 2.0, 1.0], &spec).unwrap().amplitudes, vec![5.0, 3.0]);
    }

    #[test]
    fn identity_target_is_exact() {
        let a = [0.25, 1.5, 3.0];
        let spec = make_spec(3, 1.0).unwrap();
        assert_eq!(reduce(&a, &spec).unwrap().amplitudes, a.to_vec());
    }

    #[test]
    fn mismatch_names_both_lengths() {
        let spec = make_spec(4, 2.0).unwrap();
        let err = reduce(&[1.0; 3], &spec).unwrap_err();
        assert_eq!(err, ReduceError::DimensionMismatch { expected: 4, actual: 3 });
        assert!(err.to_string().contains('4') && err.to_string().contains('3'));
        assert!(transform_embedding(&[1.0; 5], &spec).is_err());
    }

    #[test]
    fn impulse_and_dc() {
        let spec = ReductionSpec::with_target(4, 2).unwrap();
        let out = transform_embedding(&[1.0, 0.0, 0.0, 0.0], &spec).unwrap();
        assert_eq!(out.amplitudes, vec![1.0, 1.0]);

        let spec = ReductionSpec::with_target(8, 3).unwrap();
        let out = transform_embedding(&[1.0; 8], &spec).unwrap();
        assert!((out.amplitudes[0] - 8.0).abs() < 1e-12);
        assert!(out.amplitudes[1].abs() < 1e-12 && out.amplitudes[2].abs() < 1e-12);
    }
}
