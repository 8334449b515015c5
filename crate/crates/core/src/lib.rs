//! Rational L-function coefficient datasets and vanishing-order learners.
//!
//! Records carry the prime-indexed Dirichlet coefficients `a_p` for the 168
//! primes below 1000. On top of them sit normalizations, murmuration
//! statistics, PCA, LDA and small neural networks, plus generators for
//! elliptic-curve, Dirichlet-character and synthetic fixtures.

pub mod coeffgen;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod features;
pub mod io;
pub mod lda;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod pca;
pub mod record;

pub use dataset::{Dataset, Filter, Summary, Warning};
pub use error::{Error, Result};
pub use record::{LFunctionRecord, Origin, OriginSet, PrimeBasis, NUM_PRIMES};
