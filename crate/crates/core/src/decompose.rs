//! Hilbert-space decompositions `span(product) + GES + CES`, the triangular
//! and DFT bases of the completely entangled part, GES layer extraction,
//! dimension bounds and the verification suite.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, count_distinct_monomials, to_usize};
use crate::embeddings::{
    build_nupb, choose_generic_points, fresh_points, generator_states, members_at, span_rank,
    EmbedSpec, EvaluationPoint, Family, GenClass,
};
use crate::error::{Error, Result};
use crate::multirank::{is_fully_product, is_gme, ComplexMatrix, DEFAULT_REL_THRESHOLD};
use crate::number::{rational, GaussianRational, Rational};
use crate::states::{dicke, FloatKet, Ket, LocalDims, MultiIndex};

/// Orthogonality tolerance for floating-point vectors.
pub const FLOAT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Triangular,
    Dft,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Triangular => "triangular",
            Scheme::Dft => "dft",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular" => Ok(Scheme::Triangular),
            "dft" => Ok(Scheme::Dft),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

/// A list of exact or floating-point vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum Vectors {
    Exact(Vec<Ket>),
    Float(Vec<FloatKet>),
}

impl Vectors {
    pub fn len(&self) -> usize {
        match self {
            Vectors::Exact(v) => v.len(),
            Vectors::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_float(&self) -> Vec<FloatKet> {
        match self {
            Vectors::Exact(v) => v.iter().map(Ket::to_float).collect(),
            Vectors::Float(v) => v.clone(),
        }
    }

    fn select(&self, picks: &[usize]) -> Vectors {
        match self {
            Vectors::Exact(v) => Vectors::Exact(picks.iter().map(|&i| v[i].clone()).collect()),
            Vectors::Float(v) => Vectors::Float(picks.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub spec: EmbedSpec,
    pub scheme: Scheme,
    pub seed: u64,
    pub points: Vec<EvaluationPoint>,
    pub product_part: Vec<Ket>,
    pub ges_basis: Vec<Ket>,
    pub ces: Vectors,
    /// Squared norms of the triangular CES vectors; empty for DFT.
    pub ces_squared_norms: Vec<Rational>,
    /// Number of CES vectors derived from each GES generator, in order.
    pub ces_blocks: Vec<usize>,
}

impl Decomposition {
    /// `(product, GES, CES)` dimensions.
    pub fn part_sizes(&self) -> (usize, usize, usize) {
        (
            self.product_part.len(),
            self.ges_basis.len(),
            self.ces.len(),
        )
    }
}

/// Exact Gram-Schmidt without normalization. Dependent inputs are dropped and
/// every output is rescaled to coprime Gaussian-integer coefficients.
pub fn gram_schmidt(kets: &[Ket]) -> Result<Vec<Ket>> {
    let mut out: Vec<(Ket, Rational)> = Vec::new();
    for k in kets {
        let mut v = k.clone();
        for (u, u_norm) in &out {
            let overlap = u.inner(k)?;
            if overlap.is_zero() {
                continue;
            }
            let factor = GaussianRational::new(-&overlap.re / u_norm, -&overlap.im / u_norm);
            v.add_scaled(&factor, u)?;
        }
        if v.is_zero() {
            continue;
        }
        let v = primitive(&v);
        let norm = v.norm_sq();
        out.push((v, norm));
    }
    Ok(out.into_iter().map(|(v, _)| v).collect())
}

/// Rescales to Gaussian-integer coefficients with no common integer factor.
pub fn primitive(ket: &Ket) -> Ket {
    let mut lcm = BigInt::one();
    for (_, c) in ket.terms() {
        lcm = lcm.lcm(c.re.denom()).lcm(c.im.denom());
    }
    let mut gcd = BigInt::zero();
    for (_, c) in ket.terms() {
        for part in [&c.re, &c.im] {
            let scaled = part.numer() * (&lcm / part.denom());
            gcd = gcd.gcd(&scaled);
        }
    }
    if gcd.is_zero() {
        return ket.clone();
    }
    ket.scale(&GaussianRational::real(Rational::new(lcm, gcd)))
}

fn check_generator(generator: &Ket, order: &[MultiIndex]) -> Result<()> {
    if generator.len() < 2 {
        return Err(Error::TooFewTerms(generator.len()));
    }
    if !generator.is_uniform() {
        return Err(Error::NotUniform);
    }
    let mut sorted = order.to_vec();
    sorted.sort();
    if sorted != generator.support() {
        return Err(Error::BadTermOrder);
    }
    Ok(())
}

/// Triangular orthocomplement of a uniform generator in its own support,
/// with terms taken in ascending lexicographic order.
pub fn triangular_ces(generator: &Ket) -> Result<Vec<(Ket, Rational)>> {
    triangular_ces_ordered(generator, &generator.support())
}

/// For `t = 2..=N`: ones on the first `t - 1` terms of `order` and `-(t - 1)`
/// on term `t`. Squared norm `t^2 - t`.
pub fn triangular_ces_ordered(
    generator: &Ket,
    order: &[MultiIndex],
) -> Result<Vec<(Ket, Rational)>> {
    check_generator(generator, order)?;
    let dims = generator.dims().clone();
    (2..=order.len())
        .map(|t| {
            let mut terms: Vec<(MultiIndex, GaussianRational)> = order[..t - 1]
                .iter()
                .map(|m| (m.clone(), GaussianRational::one()))
                .collect();
            terms.push((
                order[t - 1].clone(),
                GaussianRational::from_int(-(t as i64 - 1)),
            ));
            let ket = Ket::from_terms(dims.clone(), terms)?;
            Ok((ket, rational((t * t - t) as i64)))
        })
        .collect()
}

/// Rows `2..=N` of the `N`-point DFT matrix placed on the generator's terms
/// in ascending lexicographic order.
pub fn dft_ces(generator: &Ket) -> Result<Vec<FloatKet>> {
    dft_ces_ordered(generator, &generator.support())
}

pub fn dft_ces_ordered(generator: &Ket, order: &[MultiIndex]) -> Result<Vec<FloatKet>> {
    if generator.len() < 2 {
        return Err(Error::TooFewTerms(generator.len()));
    }
    check_generator(generator, order)?;
    let n = order.len();
    let scale = 1.0 / (n as f64).sqrt();
    (1..n)
        .map(|r| {
            let terms = order.iter().enumerate().map(|(j, m)| {
                let angle = 2.0 * PI * ((r * j) % n) as f64 / n as f64;
                (m.clone(), Complex64::from_polar(scale, angle))
            });
            FloatKet::from_terms(generator.dims().clone(), terms)
        })
        .collect()
}

/// Builds the decomposition with lexicographic term order.
pub fn decompose(spec: &EmbedSpec, scheme: Scheme, seed: u64) -> Result<Decomposition> {
    decompose_with_term_order(spec, scheme, seed, |ket| ket.support())
}

/// As [`decompose`], with the CES construction of each GES generator
/// following the term order returned by `order`.
pub fn decompose_with_term_order<F>(
    spec: &EmbedSpec,
    scheme: Scheme,
    seed: u64,
    order: F,
) -> Result<Decomposition>
where
    F: Fn(&Ket) -> Vec<MultiIndex>,
{
    let points = choose_generic_points(spec, seed)?;
    let nupb = build_nupb(spec, &points)?;
    let generators = generator_states(spec)?;
    let gen_kets: Vec<Ket> = generators.iter().map(|(k, _)| k.clone()).collect();
    let nupb_rank = span_rank(&nupb.members)?;
    let gen_rank = span_rank(&gen_kets)?;
    let mut union = nupb.members.clone();
    union.extend(gen_kets);
    let union_rank = span_rank(&union)?;
    if nupb_rank != union_rank || gen_rank != union_rank {
        return Err(Error::SpanMismatch {
            nupb: nupb_rank,
            generators: gen_rank,
            union: union_rank,
        });
    }

    let mut product_part = Vec::new();
    let mut ges_basis = Vec::new();
    for (ket, class) in generators {
        match class {
            GenClass::Product => product_part.push(ket),
            GenClass::Gme => ges_basis.push(ket),
        }
    }

    let mut ces_blocks = Vec::with_capacity(ges_basis.len());
    let mut ces_squared_norms = Vec::new();
    let ces = match scheme {
        Scheme::Triangular => {
            let mut vectors = Vec::new();
            for g in &ges_basis {
                let block = triangular_ces_ordered(g, &order(g))?;
                ces_blocks.push(block.len());
                for (v, norm) in block {
                    vectors.push(v);
                    ces_squared_norms.push(norm);
                }
            }
            Vectors::Exact(vectors)
        }
        Scheme::Dft => {
            let mut vectors = Vec::new();
            for g in &ges_basis {
                let block = dft_ces_ordered(g, &order(g))?;
                ces_blocks.push(block.len());
                vectors.extend(block);
            }
            Vectors::Float(vectors)
        }
    };

    Ok(Decomposition {
        spec: spec.clone(),
        scheme,
        seed,
        points,
        product_part,
        ges_basis,
        ces,
        ces_squared_norms,
        ces_blocks,
    })
}

/// GESs carved out of the CES, plus what remains of it.
#[derive(Clone, Debug, PartialEq)]
pub struct GesLayers {
    pub layers: Vec<Vectors>,
    pub residual: Vectors,
}

impl GesLayers {
    /// Dimensions `(product, GES, layer_1, ..., residual CES)`.
    pub fn sizes(&self, dec: &Decomposition) -> Vec<usize> {
        let mut out = vec![dec.product_part.len(), dec.ges_basis.len()];
        out.extend(self.layers.iter().map(Vectors::len));
        out.push(self.residual.len());
        out
    }
}

/// Triangular: one layer made of the last vector of every block. DFT: layer
/// `j` takes row `j + 1` of every block while all blocks still have it.
pub fn extract_ges_layers(dec: &Decomposition) -> Result<GesLayers> {
    let blocks = &dec.ces_blocks;
    if blocks.len() != dec.ges_basis.len() || blocks.iter().sum::<usize>() != dec.ces.len() {
        return Err(Error::SchemeUnsupported(format!(
            "CES blocks {blocks:?} do not match {} generators and {} CES vectors",
            dec.ges_basis.len(),
            dec.ces.len()
        )));
    }
    let kind_matches = matches!(
        (dec.scheme, &dec.ces),
        (Scheme::Triangular, Vectors::Exact(_)) | (Scheme::Dft, Vectors::Float(_))
    );
    if !kind_matches {
        return Err(Error::SchemeUnsupported(format!(
            "{} scheme with mismatched vector kind",
            dec.scheme
        )));
    }
    let starts: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, &len| {
            let start = *acc;
            *acc += len;
            Some(start)
        })
        .collect();
    let depth = match dec.scheme {
        Scheme::Triangular => usize::from(!blocks.is_empty()),
        Scheme::Dft => blocks.iter().copied().min().unwrap_or(0),
    };
    let mut taken = vec![false; dec.ces.len()];
    let mut layers = Vec::with_capacity(depth);
    for layer in 0..depth {
        let picks: Vec<usize> = starts
            .iter()
            .zip(blocks)
            .map(|(&start, &len)| match dec.scheme {
                Scheme::Triangular => start + len - 1,
                Scheme::Dft => start + layer,
            })
            .collect();
        for &p in &picks {
            taken[p] = true;
        }
        layers.push(dec.ces.select(&picks));
    }
    let rest: Vec<usize> = (0..dec.ces.len()).filter(|&i| !taken[i]).collect();
    Ok(GesLayers {
        layers,
        residual: dec.ces.select(&rest),
    })
}

/// Three mutually orthogonal GESs filling the three-qubit space:
/// `{D_3^1, D_3^2}`, `{GHZ+, chi_1^1, chi_2^2}`, `{GHZ-, chi_1^2, chi_2^1}`,
/// all normalized.
pub fn three_qubit_ges_partition() -> Vec<Vec<FloatKet>> {
    let dims = LocalDims::homogeneous(3, 2).expect("valid dims");
    let label = |s: &str| MultiIndex(s.bytes().map(|b| (b - b'0') as usize).collect());
    let state = |terms: &[(&str, Complex64)]| {
        FloatKet::from_terms(dims.clone(), terms.iter().map(|(s, c)| (label(s), *c)))
            .expect("valid labels")
    };
    let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let third = 1.0 / 3f64.sqrt();
    let half = 1.0 / 2f64.sqrt();
    let chi = |labels: [&str; 3], w: Complex64| {
        state(&[
            (labels[0], Complex64::new(third, 0.0)),
            (labels[1], w * third),
            (labels[2], w * w * third),
        ])
    };
    let dicke_normalized = |k: usize| {
        dicke(3, k)
            .expect("valid weight")
            .to_float()
            .scale(Complex64::new(third, 0.0))
    };
    let ghz = |sign: f64| {
        state(&[
            ("000", Complex64::new(half, 0.0)),
            ("111", Complex64::new(sign * half, 0.0)),
        ])
    };
    let low = ["001", "010", "100"];
    let high = ["011", "101", "110"];
    let w2 = omega * omega;
    vec![
        vec![dicke_normalized(1), dicke_normalized(2)],
        vec![ghz(1.0), chi(low, omega), chi(high, w2)],
        vec![ghz(-1.0), chi(low, w2), chi(high, omega)],
    ]
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Range("dimension product overflows".into()))
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    LocalDims::new(dims.to_vec()).map(|_| ())
}

/// Largest possible CES: `prod d_j - sum (d_j - 1) - 1`.
pub fn max_ces_dim(dims: &[usize]) -> Result<usize> {
    validate_dims(dims)?;
    let total = checked_product(dims)?;
    Ok(total - dims.iter().map(|d| d - 1).sum::<usize>() - 1)
}

/// Largest possible GES for ascending dims: `(d_1 - 1)(prod_{j>=2} d_j - 1)`.
pub fn max_ges_dim(dims: &[usize]) -> Result<usize> {
    validate_dims(dims)?;
    if dims.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Range(format!(
            "dims {dims:?} must be sorted ascending"
        )));
    }
    Ok((dims[0] - 1) * (checked_product(&dims[1..])? - 1))
}

/// Largest possible GES inside the symmetric subspace: `C(n+d-1, d-1) - d`.
pub fn max_sym_ges_dim(n: usize, d: usize) -> Result<usize> {
    if n < 2 || d < 2 {
        return Err(Error::Range(format!(
            "need n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    Ok(to_usize(&binomial((n + d - 1) as u64, (d - 1) as i64)) - d)
}

/// `(product, GES, CES)` dimensions from the closed-form decomposition
/// formulas of each family.
pub fn expected_part_sizes(spec: &EmbedSpec) -> (usize, usize, usize) {
    let dims = spec.dims().as_slice();
    let n = dims.len();
    let total: usize = dims.iter().product();
    match spec.family() {
        Family::QubitDicke => (2, n - 1, total - n - 1),
        Family::QuditVeronese => {
            let d = dims[0];
            let m = to_usize(&binomial((n + d - 1) as u64, (d - 1) as i64));
            (d, m - d, total - m)
        }
        Family::QuditGamma => {
            let span = n * (dims[0] - 1);
            (2, span - 1, total - span - 1)
        }
        Family::QuditKSub => {
            let d = dims[0];
            let k = spec.k_sub().unwrap_or(0);
            let m = to_usize(&count_distinct_monomials(n, d, k).expect("validated spec"));
            (d - k, m - d + k, total - m)
        }
        Family::Heterogeneous => {
            let s: usize = dims.iter().map(|d| d - 1).sum();
            (2, s - 1, total - s - 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
            witness: None,
        }
    }

    fn with_witness(mut self, witness: Option<String>) -> Self {
        if !self.passed {
            self.witness = witness;
        }
        self
    }

    fn equal<T: PartialEq + fmt::Debug>(name: &str, actual: T, expected: T) -> Self {
        let passed = actual == expected;
        Self::new(name, passed, format!("{actual:?} (expected {expected:?})"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledCheck {
    pub trials: usize,
    pub failures: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreshPointCheck {
    pub fresh_points: usize,
    pub ces_vectors: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

/// Outcome of [`verify`]. Failures are recorded, never thrown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub dimension_checks: Vec<Check>,
    pub orthogonality_checks: Vec<Check>,
    pub span_check: Check,
    pub gme_per_vector: Vec<Check>,
    pub product_part_checks: Vec<Check>,
    pub sampled_combination_gme: SampledCheck,
    pub ces_vs_fresh_points: FreshPointCheck,
    pub formula_checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failed_checks().is_empty()
    }

    /// Names of every failed check.
    pub fn failed_checks(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .dimension_checks
            .iter()
            .chain(&self.orthogonality_checks)
            .chain(std::iter::once(&self.span_check))
            .chain(&self.gme_per_vector)
            .chain(&self.product_part_checks)
            .chain(&self.formula_checks)
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect();
        if !self.sampled_combination_gme.passed {
            out.push("sampled-combination-gme".into());
        }
        if !self.ces_vs_fresh_points.passed {
            out.push("ces-vs-fresh-points".into());
        }
        out
    }
}

/// Runs the whole verification suite on a decomposition.
pub fn verify(dec: &Decomposition, trials: usize, fresh: usize, seed: u64) -> VerificationReport {
    VerificationReport {
        dimension_checks: dimension_checks(dec),
        orthogonality_checks: orthogonality_checks(dec),
        span_check: span_check(dec),
        gme_per_vector: dec
            .ges_basis
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let report = is_gme(g);
                let passed = report.as_ref().map(|r| r.gme).unwrap_or(false);
                let witness = match &report {
                    Ok(r) => r.witness().map(|p| format!("rank < 2 across {p}")),
                    Err(e) => Some(e.to_string()),
                };
                Check::new(format!("ges[{i}] gme"), passed, g.to_string()).with_witness(witness)
            })
            .collect(),
        product_part_checks: dec
            .product_part
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let passed = is_fully_product(p).unwrap_or(false);
                Check::new(format!("product[{i}] separable"), passed, p.to_string())
            })
            .collect(),
        sampled_combination_gme: sampled_gme(dec, trials, seed),
        ces_vs_fresh_points: fresh_point_check(dec, fresh, seed),
        formula_checks: formula_checks(dec),
    }
}

fn dimension_checks(dec: &Decomposition) -> Vec<Check> {
    let (p, g, c) = dec.part_sizes();
    let (ep, eg, ec) = expected_part_sizes(&dec.spec);
    let total = dec.spec.dims().total();
    vec![
        Check::equal("product-part-size", p, ep),
        Check::equal("ges-size", g, eg),
        Check::equal("ces-size", c, ec),
        Check::equal("total-size", p + g + c, total),
        Check::equal("nupb-size", p + g, dec.spec.nupb_size()),
        Check::equal("ces-blocks", dec.ces_blocks.iter().sum::<usize>(), c),
        squared_norm_check(dec),
    ]
}

fn squared_norm_check(dec: &Decomposition) -> Check {
    let Vectors::Exact(ces) = &dec.ces else {
        return Check::new("ces-squared-norms", true, "not stored for float vectors");
    };
    if dec.ces_squared_norms.len() != ces.len() {
        return Check::new(
            "ces-squared-norms",
            false,
            format!(
                "{} norms for {} vectors",
                dec.ces_squared_norms.len(),
                ces.len()
            ),
        );
    }
    let bad = ces
        .iter()
        .zip(&dec.ces_squared_norms)
        .position(|(v, norm)| &v.norm_sq() != norm);
    Check::new(
        "ces-squared-norms",
        bad.is_none(),
        format!("{} stored norms", ces.len()),
    )
    .with_witness(bad.map(|i| format!("ces[{i}] has squared norm {}", ces[i].norm_sq())))
}

/// All vectors as floats, tagged by part.
fn tagged_float_vectors(dec: &Decomposition) -> Vec<(String, FloatKet)> {
    let mut out: Vec<(String, FloatKet)> = Vec::new();
    out.extend(
        dec.product_part
            .iter()
            .enumerate()
            .map(|(i, k)| (format!("product[{i}]"), k.to_float())),
    );
    out.extend(
        dec.ges_basis
            .iter()
            .enumerate()
            .map(|(i, k)| (format!("ges[{i}]"), k.to_float())),
    );
    out.extend(
        dec.ces
            .to_float()
            .into_iter()
            .enumerate()
            .map(|(i, k)| (format!("ces[{i}]"), k)),
    );
    out
}

fn tagged_exact_vectors(dec: &Decomposition) -> Option<Vec<(String, Ket)>> {
    let Vectors::Exact(ces) = &dec.ces else {
        return None;
    };
    let mut out: Vec<(String, Ket)> = Vec::new();
    out.extend(
        dec.product_part
            .iter()
            .enumerate()
            .map(|(i, k)| (format!("product[{i}]"), k.clone())),
    );
    out.extend(
        dec.ges_basis
            .iter()
            .enumerate()
            .map(|(i, k)| (format!("ges[{i}]"), k.clone())),
    );
    out.extend(
        ces.iter()
            .enumerate()
            .map(|(i, k)| (format!("ces[{i}]"), k.clone())),
    );
    Some(out)
}

fn part_of(tag: &str) -> &str {
    tag.split('[').next().unwrap_or(tag)
}

fn orthogonality_checks(dec: &Decomposition) -> Vec<Check> {
    let parts = ["product", "ges", "ces"];
    let mut failures: Vec<Vec<Option<String>>> = vec![vec![None; 3]; 3];
    let mut pairs = vec![vec![0usize; 3]; 3];
    let mut record = |a: &str, b: &str, witness: Option<String>| {
        let i = parts
            .iter()
            .position(|p| *p == part_of(a))
            .expect("known part");
        let j = parts
            .iter()
            .position(|p| *p == part_of(b))
            .expect("known part");
        let (i, j) = (i.min(j), i.max(j));
        pairs[i][j] += 1;
        if failures[i][j].is_none() {
            failures[i][j] = witness;
        }
    };
    let mut extra = Vec::new();
    match tagged_exact_vectors(dec) {
        Some(vectors) => {
            for (i, (ta, a)) in vectors.iter().enumerate() {
                for (tb, b) in &vectors[i + 1..] {
                    let overlap = a.inner(b);
                    let witness = match overlap {
                        Ok(z) if z.is_zero() => None,
                        Ok(z) => Some(format!("<{ta}|{tb}> = {z}")),
                        Err(e) => Some(format!("<{ta}|{tb}>: {e}")),
                    };
                    record(ta, tb, witness);
                }
            }
        }
        None => {
            let vectors = tagged_float_vectors(dec);
            let norms: Vec<f64> = vectors.iter().map(|(_, v)| v.norm_sq().sqrt()).collect();
            for (i, (ta, a)) in vectors.iter().enumerate() {
                for (j, (tb, b)) in vectors.iter().enumerate().skip(i + 1) {
                    let overlap = a.inner(b).map(|z| z.norm() / (norms[i] * norms[j]));
                    let witness = match overlap {
                        Ok(v) if v <= FLOAT_TOLERANCE => None,
                        Ok(v) => Some(format!("|<{ta}|{tb}>| = {v:e}")),
                        Err(e) => Some(format!("<{ta}|{tb}>: {e}")),
                    };
                    record(ta, tb, witness);
                }
            }
            let worst = vectors
                .iter()
                .filter(|(t, _)| part_of(t) == "ces")
                .map(|(t, v)| (t, (v.norm_sq() - 1.0).abs()))
                .fold(None::<(&String, f64)>, |acc, (t, dev)| match acc {
                    Some((_, best)) if best >= dev => acc,
                    _ => Some((t, dev)),
                });
            let passed = worst.is_none_or(|(_, dev)| dev <= FLOAT_TOLERANCE);
            extra.push(
                Check::new("ces-normalized", passed, "unit norm within tolerance")
                    .with_witness(worst.map(|(t, dev)| format!("{t}: |norm^2 - 1| = {dev:e}"))),
            );
        }
    }
    let mut out = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let name = format!("{}-{}", parts[i], parts[j]);
            let witness = failures[i][j].clone();
            out.push(
                Check::new(name, witness.is_none(), format!("{} pairs", pairs[i][j]))
                    .with_witness(witness),
            );
        }
    }
    out.extend(extra);
    out
}

fn span_check(dec: &Decomposition) -> Check {
    let total = dec.spec.dims().total();
    let rank = match tagged_exact_vectors(dec) {
        Some(vectors) => {
            let kets: Vec<Ket> = vectors.into_iter().map(|(_, k)| k).collect();
            span_rank(&kets).unwrap_or(0)
        }
        None => {
            let dims = dec.spec.dims();
            let rows: Vec<Vec<Complex64>> = tagged_float_vectors(dec)
                .iter()
                .map(|(_, v)| {
                    let mut row = vec![Complex64::new(0.0, 0.0); total];
                    for (m, c) in v.terms() {
                        row[m.flat(dims)] = *c;
                    }
                    row
                })
                .collect();
            ComplexMatrix::from_rows(rows)
                .map(|m| m.rank_tolerant(DEFAULT_REL_THRESHOLD))
                .unwrap_or(0)
        }
    };
    Check::equal("total-span-rank", rank, total)
}

const COEFF_VALUES: [i64; 18] = [
    -9, -8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8, 9,
];

fn sampled_gme(dec: &Decomposition, trials: usize, seed: u64) -> SampledCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut witness = None;
    if dec.ges_basis.is_empty() {
        return SampledCheck {
            trials: 0,
            failures: 0,
            passed: true,
            witness: None,
        };
    }
    for trial in 0..trials {
        let mut combo = Ket::zero(dec.spec.dims().clone());
        let mut coeffs = Vec::with_capacity(dec.ges_basis.len());
        for g in &dec.ges_basis {
            let re = *COEFF_VALUES.choose(&mut rng).expect("nonempty");
            let im = *COEFF_VALUES.choose(&mut rng).expect("nonempty");
            let c = GaussianRational::from_ints(re, im);
            combo.add_scaled(&c, g).expect("common dims");
            coeffs.push(c);
        }
        let gme = is_gme(&combo).map(|r| r.gme).unwrap_or(false);
        if !gme {
            failures += 1;
            if witness.is_none() {
                let shown: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                witness = Some(format!(
                    "trial {trial}: coefficients [{}]",
                    shown.join(", ")
                ));
            }
        }
    }
    SampledCheck {
        trials,
        failures,
        passed: failures == 0,
        witness,
    }
}

fn fresh_point_check(dec: &Decomposition, count: usize, seed: u64) -> FreshPointCheck {
    let points = fresh_points(&dec.spec, &dec.points, count, seed);
    let members = match members_at(&dec.spec, &points) {
        Ok(m) => m,
        Err(e) => {
            return FreshPointCheck {
                fresh_points: count,
                ces_vectors: dec.ces.len(),
                passed: false,
                witness: Some(e.to_string()),
            }
        }
    };
    let mut witness = None;
    match &dec.ces {
        Vectors::Exact(ces) => {
            'outer: for (i, v) in ces.iter().enumerate() {
                for (l, m) in members.iter().enumerate() {
                    match m.inner(v) {
                        Ok(z) if z.is_zero() => {}
                        Ok(z) => {
                            witness = Some(format!("<fresh[{l}]|ces[{i}]> = {z}"));
                            break 'outer;
                        }
                        Err(e) => {
                            witness = Some(e.to_string());
                            break 'outer;
                        }
                    }
                }
            }
        }
        Vectors::Float(ces) => {
            let members: Vec<FloatKet> = members.iter().map(Ket::to_float).collect();
            'outer_f: for (i, v) in ces.iter().enumerate() {
                for (l, m) in members.iter().enumerate() {
                    let scale = (m.norm_sq() * v.norm_sq()).sqrt();
                    match m.inner(v) {
                        Ok(z) if z.norm() <= FLOAT_TOLERANCE * scale => {}
                        Ok(z) => {
                            witness =
                                Some(format!("|<fresh[{l}]|ces[{i}]>| = {:e}", z.norm() / scale));
                            break 'outer_f;
                        }
                        Err(e) => {
                            witness = Some(e.to_string());
                            break 'outer_f;
                        }
                    }
                }
            }
        }
    }
    FreshPointCheck {
        fresh_points: count,
        ces_vectors: dec.ces.len(),
        passed: witness.is_none(),
        witness,
    }
}

fn formula_checks(dec: &Decomposition) -> Vec<Check> {
    let dims = dec.spec.dims().as_slice();
    let mut sorted = dims.to_vec();
    sorted.sort_unstable();
    let (_, g, c) = dec.part_sizes();
    let mut out = Vec::new();
    match (max_ges_dim(&sorted), max_ces_dim(dims)) {
        (Ok(max_ges), Ok(max_ces)) => {
            out.push(Check::new(
                "ges-within-bound",
                g <= max_ges,
                format!("{g} <= {max_ges}"),
            ));
            out.push(Check::new(
                "ces-within-bound",
                c <= max_ces,
                format!("{c} <= {max_ces}"),
            ));
            if matches!(
                dec.spec.family(),
                Family::QubitDicke | Family::QuditGamma | Family::Heterogeneous
            ) {
                out.push(Check::equal("ces-attains-bound", c, max_ces));
            }
        }
        (ges, ces) => {
            let detail = format!("{:?} / {:?}", ges.err(), ces.err());
            out.push(Check::new("bounds-computable", false, detail));
        }
    }
    if dec.spec.family() == Family::QuditVeronese {
        let n = dims.len();
        match max_sym_ges_dim(n, dims[0]) {
            Ok(bound) => out.push(Check::equal("ges-attains-symmetric-bound", g, bound)),
            Err(e) => out.push(Check::new(
                "ges-attains-symmetric-bound",
                false,
                e.to_string(),
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::build_nupb;
    use crate::multirank::is_gme_tolerant;
    use crate::states::g_state;

    fn specs() -> Vec<EmbedSpec> {
        let mut out = Vec::new();
        for n in 2..=3 {
            for d in 2..=4 {
                for k in 0..=d - 2 {
                    out.push(EmbedSpec::homogeneous(n, d, k).unwrap());
                }
            }
        }
        for dims in [[2, 3].as_slice(), &[3, 4], &[2, 3, 4], &[4, 2, 3]] {
            out.push(EmbedSpec::from_dims(dims).unwrap());
        }
        out
    }

    fn ket(dims: &[usize], text: &str) -> Ket {
        Ket::parse(LocalDims::new(dims.to_vec()).unwrap(), text).unwrap()
    }

    #[test]
    fn scheme_names() {
        assert_eq!("dft".parse::<Scheme>().unwrap(), Scheme::Dft);
        assert_eq!(Scheme::Triangular.to_string(), "triangular");
        assert!("fft".parse::<Scheme>().is_err());
    }

    #[test]
    fn gram_schmidt_spans_generators() {
        let spec = EmbedSpec::from_dims(&[2; 3]).unwrap();
        let points: Vec<_> = (0..4).map(|x| EvaluationPoint::from_ints(x, &[])).collect();
        let members = build_nupb(&spec, &points).unwrap().members;
        let ortho = gram_schmidt(&members).unwrap();
        assert_eq!(ortho.len(), 4);
        for (i, a) in ortho.iter().enumerate() {
            for b in &ortho[i + 1..] {
                assert!(a.inner(b).unwrap().is_zero());
            }
        }
        let mut union = ortho.clone();
        union.extend((0..=3).map(|k| dicke(3, k).unwrap()));
        assert_eq!(span_rank(&union).unwrap(), 4);
    }

    #[test]
    fn gram_schmidt_edge_cases() {
        let a = ket(&[2, 2], "|00> + |11>");
        let b = ket(&[2, 2], "2|01>");
        let out = gram_schmidt(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(out, vec![a.clone(), ket(&[2, 2], "|01>")]);
        let out = gram_schmidt(&[a.clone(), a.scale(&GaussianRational::from_int(3)), b]).unwrap();
        assert_eq!(out.len(), 2);
        let c = ket(&[2, 2], "1/2|00> + 1/3|10>");
        assert_eq!(primitive(&c), ket(&[2, 2], "3|00> + 2|10>"));
    }

    #[test]
    fn triangular_examples() {
        let w = dicke(4, 1).unwrap();
        let ces = triangular_ces(&w).unwrap();
        let shown: Vec<String> = ces.iter().map(|(k, _)| k.to_string()).collect();
        assert_eq!(
            shown,
            [
                "|0001> - |0010>",
                "|0001> + |0010> - 2|0100>",
                "|0001> + |0010> + |0100> - 3|1000>"
            ]
        );
        let norms: Vec<Rational> = ces.iter().map(|(_, n)| n.clone()).collect();
        assert_eq!(norms, vec![rational(2), rational(6), rational(12)]);

        let pair = ket(&[2, 2], "|01> + |10>");
        let ces = triangular_ces(&pair).unwrap();
        assert_eq!(ces.len(), 1);
        assert_eq!(ces[0].0, ket(&[2, 2], "|01> - |10>"));

        let g33 = g_state(3, 3, 3).unwrap();
        let ces = triangular_ces(&g33).unwrap();
        assert_eq!(ces.len(), 6);
        let (last, norm) = ces.last().unwrap();
        assert_eq!(*norm, rational(42));
        assert_eq!(last.norm_sq(), rational(42));
        assert_eq!(
            last.coeff(&g33.support()[6]),
            GaussianRational::from_int(-6)
        );

        assert_eq!(
            triangular_ces(&ket(&[2, 2], "|01>")),
            Err(Error::TooFewTerms(1))
        );
        assert_eq!(
            triangular_ces(&ket(&[2, 2], "|01> + 2|10>")),
            Err(Error::NotUniform)
        );
        assert_eq!(
            triangular_ces_ordered(&pair, &pair.support()[..1]),
            Err(Error::BadTermOrder)
        );
    }

    #[test]
    fn triangular_block_is_orthogonal_basis_of_support() {
        for (g, _) in generator_states(&EmbedSpec::homogeneous(3, 4, 1).unwrap()).unwrap() {
            if g.len() < 2 {
                continue;
            }
            let ces = triangular_ces(&g).unwrap();
            let mut all: Vec<Ket> = ces.iter().map(|(k, _)| k.clone()).collect();
            for (k, norm) in &ces {
                assert!(k.inner(&g).unwrap().is_zero());
                assert_eq!(&k.norm_sq(), norm);
            }
            for (i, a) in all.iter().enumerate() {
                for b in &all[i + 1..] {
                    assert!(a.inner(b).unwrap().is_zero());
                }
            }
            all.push(g.clone());
            assert_eq!(span_rank(&all).unwrap(), g.len());
        }
    }

    #[test]
    fn triangular_span_is_order_invariant() {
        for spec in specs() {
            for (g, class) in generator_states(&spec).unwrap() {
                if class == GenClass::Product {
                    continue;
                }
                let forward: Vec<Ket> = triangular_ces(&g)
                    .unwrap()
                    .into_iter()
                    .map(|(k, _)| k)
                    .collect();
                let mut reversed_order = g.support();
                reversed_order.reverse();
                let backward: Vec<Ket> = triangular_ces_ordered(&g, &reversed_order)
                    .unwrap()
                    .into_iter()
                    .map(|(k, _)| k)
                    .collect();
                let mut union = forward.clone();
                union.extend(backward.iter().cloned());
                let r = span_rank(&forward).unwrap();
                assert_eq!(r, g.len() - 1);
                assert_eq!(span_rank(&backward).unwrap(), r);
                assert_eq!(span_rank(&union).unwrap(), r);
            }
        }
    }

    #[test]
    fn dft_examples() {
        let w = dicke(4, 1).unwrap();
        let phis = dft_ces(&w).unwrap();
        assert_eq!(phis.len(), 3);
        let omega = Complex64::new(0.0, 1.0);
        let labels = w.support();
        for (r, phi) in phis.iter().enumerate() {
            for (j, m) in labels.iter().enumerate() {
                let expected = omega.powu(((r + 1) * j) as u32) * 0.5;
                assert!((phi.coeff(m) - expected).norm() < 1e-12);
            }
        }
        let d42 = dicke(4, 2).unwrap();
        let phis = dft_ces(&d42).unwrap();
        assert_eq!(phis.len(), 5);
        let omega = Complex64::from_polar(1.0, PI / 3.0);
        let expected = omega.powu(2) / 6f64.sqrt();
        assert!((phis[0].coeff(&d42.support()[2]) - expected).norm() < 1e-12);

        let pair = ket(&[2, 2], "|01> + |10>");
        let phi = &dft_ces(&pair).unwrap()[0];
        let h = 1.0 / 2f64.sqrt();
        assert!((phi.coeff(&pair.support()[0]) - Complex64::new(h, 0.0)).norm() < 1e-12);
        assert!((phi.coeff(&pair.support()[1]) - Complex64::new(-h, 0.0)).norm() < 1e-12);
        assert!(dft_ces(&ket(&[2, 2], "|01>")).is_err());
    }

    #[test]
    fn dft_rows_orthonormal_and_span_triangular() {
        for spec in specs() {
            for (g, class) in generator_states(&spec).unwrap() {
                if class == GenClass::Product {
                    continue;
                }
                let phis = dft_ces(&g).unwrap();
                let gf = g.to_float();
                for (i, a) in phis.iter().enumerate() {
                    assert!(a.inner(&gf).unwrap().norm() <= FLOAT_TOLERANCE);
                    for (j, b) in phis.iter().enumerate() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((a.inner(b).unwrap() - target).norm() <= FLOAT_TOLERANCE);
                    }
                }
                let dims = g.dims().clone();
                let support = g.support();
                let row = |v: &FloatKet| support.iter().map(|m| v.coeff(m)).collect::<Vec<_>>();
                let mut rows: Vec<Vec<Complex64>> = phis.iter().map(row).collect();
                rows.extend(
                    triangular_ces(&g)
                        .unwrap()
                        .iter()
                        .map(|(k, _)| row(&k.to_float())),
                );
                let rank = ComplexMatrix::from_rows(rows)
                    .unwrap()
                    .rank_tolerant(DEFAULT_REL_THRESHOLD);
                assert_eq!(rank, g.len() - 1, "{dims:?}");
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let sizes = |dims: &[usize], k: Option<usize>| {
            let spec = EmbedSpec::new(LocalDims::new(dims.to_vec()).unwrap(), k).unwrap();
            decompose(&spec, Scheme::Triangular, 0)
                .unwrap()
                .part_sizes()
        };
        assert_eq!(sizes(&[2; 4], None), (2, 3, 11));
        assert_eq!(sizes(&[4; 3], Some(2)), (2, 8, 54));
        assert_eq!(sizes(&[2, 3, 4], None), (2, 5, 17));
    }

    #[test]
    fn decompositions_verify() {
        for spec in specs() {
            for scheme in [Scheme::Triangular, Scheme::Dft] {
                let dec = decompose(&spec, scheme, 3).unwrap();
                assert_eq!(dec.part_sizes(), expected_part_sizes(&spec));
                let report = verify(&dec, 20, 5, 3);
                assert!(
                    report.passed(),
                    "{spec:?} {scheme}: {:?}",
                    report.failed_checks()
                );
            }
        }
    }

    #[test]
    fn verification_catches_corruption() {
        let spec = EmbedSpec::homogeneous(3, 3, 1).unwrap();
        let mut dec = decompose(&spec, Scheme::Triangular, 0).unwrap();
        assert!(verify(&dec, 50, 20, 0).passed());
        if let Vectors::Exact(ces) = &mut dec.ces {
            let zero = Ket::basis(spec.dims().clone(), MultiIndex(vec![0; 3])).unwrap();
            ces[0] = ces[0].add(&zero).unwrap();
        }
        let report = verify(&dec, 50, 20, 0);
        assert!(!report.passed());
        assert!(!report.ces_vs_fresh_points.passed);
        assert!(report
            .ces_vs_fresh_points
            .witness
            .as_ref()
            .unwrap()
            .contains("ces[0]"));
    }

    #[test]
    fn qubit_combinations_are_gme() {
        let spec = EmbedSpec::from_dims(&[2; 4]).unwrap();
        let dec = decompose(&spec, Scheme::Triangular, 11).unwrap();
        let report = verify(&dec, 200, 20, 11);
        assert_eq!(report.sampled_combination_gme.trials, 200);
        assert_eq!(report.sampled_combination_gme.failures, 0);
    }

    #[test]
    fn layers() {
        let spec = EmbedSpec::from_dims(&[2, 3, 4]).unwrap();
        let dec = decompose(&spec, Scheme::Triangular, 0).unwrap();
        let layers = extract_ges_layers(&dec).unwrap();
        assert_eq!(layers.sizes(&dec), vec![2, 5, 5, 12]);
        let Vectors::Exact(first) = &layers.layers[0] else {
            panic!("exact layer")
        };
        assert!(first.iter().all(|v| is_gme(v).unwrap().gme));

        let qubits = EmbedSpec::from_dims(&[2; 4]).unwrap();
        let dec = decompose(&qubits, Scheme::Dft, 0).unwrap();
        let layers = extract_ges_layers(&dec).unwrap();
        assert_eq!(layers.sizes(&dec), vec![2, 3, 3, 3, 3, 2]);
        for layer in &layers.layers {
            for v in layer.to_float() {
                assert!(is_gme_tolerant(&v, DEFAULT_REL_THRESHOLD).unwrap().gme);
            }
        }

        let mut broken = dec.clone();
        broken.ces_blocks.pop();
        assert!(matches!(
            extract_ges_layers(&broken),
            Err(Error::SchemeUnsupported(_))
        ));
    }

    #[test]
    fn three_qubit_partition() {
        let layers = three_qubit_ges_partition();
        assert_eq!(
            layers.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![2, 3, 3]
        );
        let all: Vec<&FloatKet> = layers.iter().flatten().collect();
        for (i, a) in all.iter().enumerate() {
            assert!((a.norm_sq() - 1.0).abs() < FLOAT_TOLERANCE);
            assert!(is_gme_tolerant(a, DEFAULT_REL_THRESHOLD).unwrap().gme);
            for b in &all[i + 1..] {
                assert!(a.inner(b).unwrap().norm() < FLOAT_TOLERANCE);
            }
        }
    }

    #[test]
    fn bounds() {
        assert_eq!(max_ces_dim(&[2, 2, 2, 2]).unwrap(), 11);
        assert_eq!(max_ges_dim(&[2, 3, 4]).unwrap(), 11);
        assert_eq!(max_ces_dim(&[2, 3, 4]).unwrap(), 17);
        assert_eq!(max_sym_ges_dim(3, 3).unwrap(), 7);
        assert!(max_ges_dim(&[4, 3, 2]).is_err());
        assert!(max_ces_dim(&[2]).is_err());
        assert!(max_sym_ges_dim(1, 3).is_err());
    }

    /// `min over bipartitions of (d_I - 1)(d_complement - 1)`.
    fn ges_bound_by_bipartitions(dims: &[usize]) -> usize {
        let n = dims.len();
        (1..(1usize << n) - 1)
            .map(|mask| {
                let inside: usize = (0..n)
                    .filter(|j| mask >> j & 1 == 1)
                    .map(|j| dims[j])
                    .product();
                let outside: usize = (0..n)
                    .filter(|j| mask >> j & 1 == 0)
                    .map(|j| dims[j])
                    .product();
                (inside - 1) * (outside - 1)
            })
            .min()
            .unwrap()
    }

    #[test]
    fn ges_bound_matches_bipartition_minimum() {
        for dims in [
            vec![2, 2],
            vec![2, 3],
            vec![2, 3, 4],
            vec![3, 3, 3],
            vec![2, 2, 5],
            vec![3, 4, 4, 5],
            vec![2, 6],
        ] {
            assert_eq!(
                max_ges_dim(&dims).unwrap(),
                ges_bound_by_bipartitions(&dims),
                "{dims:?}"
            );
        }
    }
}
