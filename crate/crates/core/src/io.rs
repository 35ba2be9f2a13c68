//! Deterministic JSON files for states and decompositions. Exact numbers are
//! `p/q` strings; floating-point numbers carry 17 significant digits. Keys
//! are sorted.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decompose::{Decomposition, Scheme, Vectors, VerificationReport};
use crate::embeddings::{EmbedSpec, EvaluationPoint, Family};
use crate::error::{Error, Result};
use crate::number::{parse_rational, rational_to_string, GaussianRational, Rational};
use crate::states::{FloatKet, Ket, LocalDims, MultiIndex};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub index: Vec<usize>,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub terms: Vec<TermEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorEntry {
    pub squared_norm: String,
    pub terms: Vec<TermEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecEntry {
    pub dims: Vec<usize>,
    pub k_sub: Option<usize>,
    pub family: Family,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointEntry {
    pub x: String,
    pub free: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub spec: SpecEntry,
    pub scheme: Scheme,
    pub seed: u64,
    pub points: Vec<PointEntry>,
    pub product_part: Vec<VectorEntry>,
    pub ges_basis: Vec<VectorEntry>,
    pub ces_basis: Vec<VectorEntry>,
    pub ces_block_sizes: Vec<usize>,
    pub report: Option<VerificationReport>,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("number {s:?}: {e}")))
}

fn exact_terms(ket: &Ket) -> Vec<TermEntry> {
    ket.terms()
        .map(|(m, c)| TermEntry {
            index: m.0.clone(),
            re: rational_to_string(&c.re),
            im: rational_to_string(&c.im),
        })
        .collect()
}

fn float_terms(ket: &FloatKet) -> Vec<TermEntry> {
    ket.terms()
        .map(|(m, c)| TermEntry {
            index: m.0.clone(),
            re: format_float(c.re),
            im: format_float(c.im),
        })
        .collect()
}

fn ket_from_terms(dims: &LocalDims, terms: &[TermEntry]) -> Result<Ket> {
    let parsed = terms
        .iter()
        .map(|t| {
            let c = GaussianRational::new(parse_rational(&t.re)?, parse_rational(&t.im)?);
            Ok((MultiIndex(t.index.clone()), c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ket::from_terms(dims.clone(), parsed)
}

fn float_ket_from_terms(dims: &LocalDims, terms: &[TermEntry]) -> Result<FloatKet> {
    let parsed = terms
        .iter()
        .map(|t| {
            Ok((
                MultiIndex(t.index.clone()),
                Complex64::new(parse_float(&t.re)?, parse_float(&t.im)?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    FloatKet::from_terms(dims.clone(), parsed)
}

impl StateFile {
    pub fn from_ket(ket: &Ket) -> Self {
        Self {
            dims: ket.dims().as_slice().to_vec(),
            terms: exact_terms(ket),
        }
    }

    pub fn to_ket(&self) -> Result<Ket> {
        ket_from_terms(&LocalDims::new(self.dims.clone())?, &self.terms)
    }
}

fn exact_entry(ket: &Ket) -> VectorEntry {
    VectorEntry {
        squared_norm: rational_to_string(&ket.norm_sq()),
        terms: exact_terms(ket),
    }
}

impl DecompositionFile {
    pub fn from_decomposition(dec: &Decomposition, report: Option<VerificationReport>) -> Self {
        let ces_basis = match &dec.ces {
            Vectors::Exact(vectors) => vectors
                .iter()
                .enumerate()
                .map(|(i, v)| VectorEntry {
                    squared_norm: dec
                        .ces_squared_norms
                        .get(i)
                        .map_or_else(|| rational_to_string(&v.norm_sq()), rational_to_string),
                    terms: exact_terms(v),
                })
                .collect(),
            Vectors::Float(vectors) => vectors
                .iter()
                .map(|v| VectorEntry {
                    squared_norm: format_float(v.norm_sq()),
                    terms: float_terms(v),
                })
                .collect(),
        };
        Self {
            spec: SpecEntry {
                dims: dec.spec.dims().as_slice().to_vec(),
                k_sub: dec.spec.k_sub(),
                family: dec.spec.family(),
            },
            scheme: dec.scheme,
            seed: dec.seed,
            points: dec
                .points
                .iter()
                .map(|p| PointEntry {
                    x: rational_to_string(&p.x),
                    free: p.free.iter().map(rational_to_string).collect(),
                })
                .collect(),
            product_part: dec.product_part.iter().map(exact_entry).collect(),
            ges_basis: dec.ges_basis.iter().map(exact_entry).collect(),
            ces_basis,
            ces_block_sizes: dec.ces_blocks.clone(),
            report,
        }
    }

    pub fn to_decomposition(&self) -> Result<Decomposition> {
        let spec = EmbedSpec::new(LocalDims::new(self.spec.dims.clone())?, self.spec.k_sub)?;
        if spec.family() != self.spec.family {
            return Err(Error::Parse(format!(
                "family {} does not match dims {:?} with k_sub {:?}",
                self.spec.family, self.spec.dims, self.spec.k_sub
            )));
        }
        let dims = spec.dims().clone();
        let points = self
            .points
            .iter()
            .map(|p| {
                let free = p
                    .free
                    .iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EvaluationPoint::new(parse_rational(&p.x)?, free))
            })
            .collect::<Result<Vec<_>>>()?;
        let exact_list = |entries: &[VectorEntry]| {
            entries
                .iter()
                .map(|e| ket_from_terms(&dims, &e.terms))
                .collect::<Result<Vec<_>>>()
        };
        let product_part = exact_list(&self.product_part)?;
        let ges_basis = exact_list(&self.ges_basis)?;
        let (ces, ces_squared_norms) = match self.scheme {
            Scheme::Triangular => {
                let norms = self
                    .ces_basis
                    .iter()
                    .map(|e| parse_rational(&e.squared_norm))
                    .collect::<Result<Vec<Rational>>>()?;
                (Vectors::Exact(exact_list(&self.ces_basis)?), norms)
            }
            Scheme::Dft => {
                let vectors = self
                    .ces_basis
                    .iter()
                    .map(|e| float_ket_from_terms(&dims, &e.terms))
                    .collect::<Result<Vec<_>>>()?;
                (Vectors::Float(vectors), Vec::new())
            }
        };
        Ok(Decomposition {
            spec,
            scheme: self.scheme,
            seed: self.seed,
            points,
            product_part,
            ges_basis,
            ces,
            ces_squared_norms,
            ces_blocks: self.ces_block_sizes.clone(),
        })
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = serde_json::to_string_pretty(&tree).map_err(|e| Error::Parse(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
