//! Exact construction and certification of product / genuinely entangled /
//! completely entangled decompositions of multipartite Hilbert spaces.
//!
//! Product bases are images of (Segre-)Veronese-type embeddings evaluated at
//! generic points. Their span is organised into uniform superpositions of
//! basis states (Dicke-like generator states); the orthocomplement of each
//! generator inside its support is completely entangled.

pub mod combinatorics;
pub mod decompose;
pub mod embeddings;
pub mod error;
pub mod io;
pub mod multirank;
pub mod number;
pub mod states;

pub use combinatorics::{BoundsVector, OccupationVector};
pub use decompose::{Decomposition, Scheme, VerificationReport};
pub use embeddings::{EmbedSpec, EvaluationPoint, Family, GenClass, Nupb};
pub use error::{Error, Result};
pub use io::{DecompositionFile, StateFile};
pub use multirank::{Bipartition, FlatMatrix, MultirankReport};
pub use number::{GaussianRational, Rational};
pub use states::{FloatKet, Ket, LocalDims, MultiIndex};
