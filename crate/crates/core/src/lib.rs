//! FFT amplitude-spectrum reduction of dense embeddings.
//!
//! An embedding `u` of dimension `N` becomes the first `M` magnitudes of its
//! discrete Fourier transform. The crate provides the transform itself
//! ([`spectral`], [`reducer`]), an exact flat index to search original and
//! reduced vectors ([`store`]), text chunking with a model-free embedder
//! ([`corpus`], [`synthetic`]), SMACOF projection to 2D ([`mds`]) and the
//! harness that compares retrieval in both spaces ([`evalcmp`]).

mod codec;

pub mod cli;
pub mod corpus;
pub mod evalcmp;
pub mod mds;
pub mod reducer;
pub mod spectral;
pub mod store;
pub mod synthetic;

pub use codec::FormatError;
pub use reducer::{make_spec, transform_embedding, ReductionSpec, SpectrumVector};
pub use spectral::{amplitude_spectrum, dft_direct, fft_forward};
pub use store::{build_index, load_index, save_index, EmbeddingRecord, IndexKind, Metric, VectorIndex};
