use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("occupation total {actual} does not match n = {expected}")]
    TotalMismatch { expected: usize, actual: usize },

    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("out of range: {0}")]
    Range(String),

    #[error("local dimensions differ: {left:?} vs {right:?}")]
    DimsMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("site {site} expects {expected} coefficients, got {actual}")]
    ShapeMismatch {
        site: usize,
        expected: usize,
        actual: usize,
    },

    #[error("multi-index {index:?} is not valid for dims {dims:?}")]
    InvalidIndex { index: Vec<usize>, dims: Vec<usize> },

    #[error("bad bipartition: {0}")]
    BadPartition(String),

    #[error("state is zero")]
    ZeroState,

    #[error("evaluation point does not fit the embedding: {0}")]
    SpecMismatch(String),

    #[error(
        "product states are linearly dependent (points {colliding:?} add nothing to the span)"
    )]
    RankDeficient { colliding: Vec<usize> },

    #[error("no generic point set found after {attempts} attempts")]
    ExhaustedRetries { attempts: usize },

    #[error("generator has {0} terms, need at least 2")]
    TooFewTerms(usize),

    #[error("generator coefficients must all equal 1")]
    NotUniform,

    #[error("term order is not a permutation of the generator support")]
    BadTermOrder,

    #[error("nUPB span differs from generator span (ranks {nupb}, {generators}, union {union})")]
    SpanMismatch {
        nupb: usize,
        generators: usize,
        union: usize,
    },

    #[error("scheme not supported here: {0}")]
    SchemeUnsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
