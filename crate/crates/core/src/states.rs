//! Sparse pure states over `C^{d_1} x ... x C^{d_n}` and the generator-state
//! constructors (Dicke, generalized Dicke, fixed-sum superpositions).
//!
//! Kets are stored unnormalized; `norm_sq` gives the squared norm exactly.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{Signed, Zero};

use crate::combinatorics::{enumerate_bounded_compositions, BoundsVector, OccupationVector};
use crate::error::{Error, Result};
use crate::number::{parse_rational, GaussianRational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalDims(Vec<usize>);

impl LocalDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Range(format!(
                "need at least two sites, got {}",
                dims.len()
            )));
        }
        if let Some(bad) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Range(format!("local dimension {bad} < 2")));
        }
        Ok(Self(dims))
    }

    pub fn homogeneous(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// `prod d_j`
    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// The common local dimension, if all sites agree.
    pub fn uniform(&self) -> Option<usize> {
        let d = self.0[0];
        self.0.iter().all(|&x| x == d).then_some(d)
    }

    pub fn is_valid(&self, index: &MultiIndex) -> bool {
        index.0.len() == self.0.len() && index.0.iter().zip(&self.0).all(|(i, d)| i < d)
    }

    /// Every multi-index in ascending lexicographic order.
    pub fn all_indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.total()).map(|flat| MultiIndex::from_flat(flat, self))
    }
}

/// Basis label `(i_1, ..., i_n)`, ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Mixed-radix position with site 1 most significant.
    pub fn flat(&self, dims: &LocalDims) -> usize {
        self.0
            .iter()
            .zip(dims.as_slice())
            .fold(0, |acc, (i, d)| acc * d + i)
    }

    pub fn from_flat(mut flat: usize, dims: &LocalDims) -> Self {
        let mut out = vec![0; dims.n()];
        for (slot, d) in out.iter_mut().zip(dims.as_slice()).rev() {
            *slot = flat % d;
            flat /= d;
        }
        Self(out)
    }

    pub fn level_sum(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&i| i > 9);
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "|{}>", parts.join(if wide { "," } else { "" }))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ket {
    dims: LocalDims,
    coeffs: BTreeMap<MultiIndex, GaussianRational>,
}

impl Ket {
    pub fn zero(dims: LocalDims) -> Self {
        Self {
            dims,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a ket from `(index, coefficient)` pairs; repeated indices add up.
    pub fn from_terms<I>(dims: LocalDims, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, GaussianRational)>,
    {
        let mut ket = Self::zero(dims);
        for (index, c) in terms {
            ket.add_term(index, &c)?;
        }
        Ok(ket)
    }

    /// Uniform 0/1 superposition of the given labels.
    pub fn uniform<I>(dims: LocalDims, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = MultiIndex>,
    {
        Self::from_terms(
            dims,
            labels.into_iter().map(|m| (m, GaussianRational::one())),
        )
    }

    pub fn basis(dims: LocalDims, index: MultiIndex) -> Result<Self> {
        Self::uniform(dims, [index])
    }

    pub fn add_term(&mut self, index: MultiIndex, c: &GaussianRational) -> Result<()> {
        if !self.dims.is_valid(&index) {
            return Err(Error::InvalidIndex {
                index: index.0,
                dims: self.dims.as_slice().to_vec(),
            });
        }
        if c.is_zero() {
            return Ok(());
        }
        let slot = self
            .coeffs
            .entry(index)
            .or_insert_with(GaussianRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.retain(|_, v| !v.is_zero());
        }
        Ok(())
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    /// Terms in ascending lexicographic order of their labels.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &GaussianRational)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> Vec<MultiIndex> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn coeff(&self, index: &MultiIndex) -> GaussianRational {
        self.coeffs
            .get(index)
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// True when every stored coefficient equals 1.
    pub fn is_uniform(&self) -> bool {
        self.coeffs.values().all(GaussianRational::is_one)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                left: self.dims.as_slice().to_vec(),
                right: other.dims.as_slice().to_vec(),
            });
        }
        Ok(())
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<GaussianRational> {
        self.check_dims(other)?;
        let (small, large, swap) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = GaussianRational::zero();
        for (index, a) in &small.coeffs {
            if let Some(b) = large.coeffs.get(index) {
                let term = if swap { &b.conj() * a } else { &a.conj() * b };
                acc += &term;
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> Rational {
        self.coeffs
            .values()
            .fold(Rational::zero(), |acc, c| acc + c.norm_sq())
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dims.clone());
        }
        Self {
            dims: self.dims.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), v * c))
                .collect(),
        }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: &GaussianRational, other: &Self) -> Result<()> {
        self.check_dims(other)?;
        for (index, v) in &other.coeffs {
            let slot = self
                .coeffs
                .entry(index.clone())
                .or_insert_with(GaussianRational::zero);
            *slot += &(c * v);
        }
        self.coeffs.retain(|_, v| !v.is_zero());
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(&GaussianRational::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(&GaussianRational::from_int(-1), other)?;
        Ok(out)
    }

    pub fn to_float(&self) -> FloatKet {
        FloatKet {
            dims: self.dims.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| {
                    let (re, im) = v.to_f64_pair();
                    (k.clone(), Complex64::new(re, im))
                })
                .collect(),
        }
    }

    /// Parses text like `|001> + |010> - 2|100>` or `1/2|0,10> + 3i|1,2>`.
    /// Coefficients are rationals with an optional trailing `i`, or a
    /// parenthesised `(a+bi)`; labels use one digit per site unless commas
    /// separate them.
    pub fn parse(dims: LocalDims, text: &str) -> Result<Self> {
        let mut ket = Self::zero(dims);
        let mut rest = text.trim();
        if rest == "0" {
            return Ok(ket);
        }
        let mut first = true;
        while !rest.is_empty() {
            let (negative, after_sign) = match rest.chars().next() {
                Some('+') => (false, rest[1..].trim_start()),
                Some('-') => (true, rest[1..].trim_start()),
                _ if first => (false, rest),
                _ => return Err(Error::Parse(format!("expected + or - before {rest:?}"))),
            };
            first = false;
            let bar = after_sign
                .find('|')
                .ok_or_else(|| Error::Parse(format!("missing ket in {after_sign:?}")))?;
            let close = after_sign[bar..]
                .find('>')
                .map(|p| p + bar)
                .ok_or_else(|| Error::Parse(format!("unterminated ket in {after_sign:?}")))?;
            let mut coeff = parse_coefficient(after_sign[..bar].trim())?;
            if negative {
                coeff = -coeff;
            }
            let label = parse_label(&after_sign[bar + 1..close])?;
            ket.add_term(label, &coeff)?;
            rest = after_sign[close + 1..].trim_start();
        }
        Ok(ket)
    }
}

fn parse_coefficient(text: &str) -> Result<GaussianRational> {
    let text = text.trim().trim_end_matches('*').trim();
    if text.is_empty() {
        return Ok(GaussianRational::one());
    }
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let inner = inner.trim();
        let split = inner
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .last()
            .map(|(p, _)| p);
        return match split {
            Some(p) => {
                let re = parse_rational(&inner[..p])?;
                let im = parse_coefficient(&inner[p..])?;
                if !im.re.is_zero() {
                    return Err(Error::Parse(format!("bad complex coefficient {text:?}")));
                }
                Ok(GaussianRational::new(re, im.im))
            }
            None => parse_coefficient(inner),
        };
    }
    if let Some(im) = text.strip_suffix('i') {
        let im = im.trim();
        let value = match im {
            "" | "+" => Rational::from_integer(1.into()),
            "-" => Rational::from_integer((-1).into()),
            _ => parse_rational(im)?,
        };
        return Ok(GaussianRational::new(Rational::zero(), value));
    }
    Ok(GaussianRational::real(parse_rational(text)?))
}

fn parse_label(text: &str) -> Result<MultiIndex> {
    let text = text.trim();
    let parts: Result<Vec<usize>> = if text.contains(',') {
        text.split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad level {p:?}")))
            })
            .collect()
    } else {
        text.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|v| v as usize)
                    .ok_or_else(|| Error::Parse(format!("bad level {c:?}")))
            })
            .collect()
    };
    Ok(MultiIndex(parts?))
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (pos, (index, c)) in self.coeffs.iter().enumerate() {
            let negative_real = c.im.is_zero() && c.re.is_negative();
            let magnitude = if negative_real { -c.clone() } else { c.clone() };
            let sign = match (pos, negative_real) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            if magnitude.is_one() {
                write!(f, "{sign}{index}")?;
            } else {
                write!(f, "{sign}{magnitude}{index}")?;
            }
        }
        Ok(())
    }
}

/// Floating-point ket, used only by the DFT scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatKet {
    dims: LocalDims,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

impl FloatKet {
    pub fn from_terms<I>(dims: LocalDims, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (index, c) in terms {
            if !dims.is_valid(&index) {
                return Err(Error::InvalidIndex {
                    index: index.0,
                    dims: dims.as_slice().to_vec(),
                });
            }
            *coeffs.entry(index).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, v: &mut Complex64| *v != Complex64::new(0.0, 0.0));
        Ok(Self { dims, coeffs })
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, index: &MultiIndex) -> Complex64 {
        self.coeffs.get(index).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                left: self.dims.as_slice().to_vec(),
                right: other.dims.as_slice().to_vec(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .filter_map(|(k, a)| other.coeffs.get(k).map(|b| a.conj() * b))
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(Complex64::norm_sqr).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dims: self.dims.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), v * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                left: self.dims.as_slice().to_vec(),
                right: other.dims.as_slice().to_vec(),
            });
        }
        Self::from_terms(
            self.dims.clone(),
            self.coeffs
                .iter()
                .chain(other.coeffs.iter())
                .map(|(k, v)| (k.clone(), *v)),
        )
    }
}

/// `D_n^k`: all weight-`k` bitstrings of length `n`.
pub fn dicke(n: usize, k: usize) -> Result<Ket> {
    if k > n {
        return Err(Error::Range(format!("weight {k} exceeds n = {n}")));
    }
    g_state(n, 2, k)
}

/// Uniform superposition over the distinct arrangements of the multiset with
/// level multiplicities `occ`.
pub fn generalized_dicke(n: usize, d: usize, occ: &OccupationVector) -> Result<Ket> {
    if occ.len() != d {
        return Err(Error::Range(format!(
            "occupation has {} parts, expected d = {d}",
            occ.len()
        )));
    }
    if occ.total() != n {
        return Err(Error::TotalMismatch {
            expected: n,
            actual: occ.total(),
        });
    }
    let dims = LocalDims::homogeneous(n, d)?;
    let mut labels = Vec::new();
    let mut remaining = occ.parts().to_vec();
    let mut current = Vec::with_capacity(n);
    arrangements(&mut remaining, 0, &mut current, n, &mut labels);
    Ket::uniform(dims, labels)
}

/// Multiset permutations of `levels[j] + offset` with multiplicities
/// `remaining[j]`, in lexicographic order.
fn arrangements(
    remaining: &mut [usize],
    offset: usize,
    current: &mut Vec<usize>,
    len: usize,
    out: &mut Vec<MultiIndex>,
) {
    if current.len() == len {
        out.push(MultiIndex(current.clone()));
        return;
    }
    for level in 0..remaining.len() {
        if remaining[level] == 0 {
            continue;
        }
        remaining[level] -= 1;
        current.push(level + offset);
        arrangements(remaining, offset, current, len, out);
        current.pop();
        remaining[level] += 1;
    }
}

/// `G_n^k`: every label over `Z_d` whose entries sum to `k`.
pub fn g_state(n: usize, d: usize, k: usize) -> Result<Ket> {
    frak_g_state(&LocalDims::homogeneous(n, d)?, k)
}

/// Every label over `Z_{d_1} x ... x Z_{d_n}` whose entries sum to `k`.
pub fn frak_g_state(dims: &LocalDims, k: usize) -> Result<Ket> {
    let bounds = BoundsVector::from_dims(dims.as_slice())?;
    if k > bounds.max_total() {
        return Err(Error::Range(format!(
            "level sum {k} exceeds maximum {}",
            bounds.max_total()
        )));
    }
    let labels = enumerate_bounded_compositions(dims.n(), k as i64, &bounds)?;
    Ket::uniform(dims.clone(), labels.into_iter().map(MultiIndex))
}

/// Superposition over labels with exactly `big_k` entries in `0..=ksub+1`
/// summing to `s`, and the other `n - big_k` entries drawn from the levels
/// `ksub+2..d` with multiplicities `tail`.
pub fn script_g_state(
    n: usize,
    d: usize,
    ksub: usize,
    big_k: usize,
    s: usize,
    tail: &[usize],
) -> Result<Ket> {
    if d < 2 || ksub > d - 2 {
        return Err(Error::Range(format!(
            "substitution count {ksub} outside [0, {}]",
            d.saturating_sub(2)
        )));
    }
    if big_k > n {
        return Err(Error::Range(format!("K = {big_k} exceeds n = {n}")));
    }
    let low_cap = ksub + 1;
    if s > big_k * low_cap {
        return Err(Error::Range(format!(
            "s = {s} exceeds K(k+1) = {}",
            big_k * low_cap
        )));
    }
    if tail.len() != d - ksub - 2 {
        return Err(Error::Range(format!(
            "tail occupation has {} parts, expected {}",
            tail.len(),
            d - ksub - 2
        )));
    }
    let tail_total: usize = tail.iter().sum();
    if tail_total != n - big_k {
        return Err(Error::TotalMismatch {
            expected: n - big_k,
            actual: tail_total,
        });
    }
    let dims = LocalDims::homogeneous(n, d)?;
    let mut search = ScriptGSearch {
        n,
        low_cap,
        low_slots: big_k,
        low_sum: s,
        tail: tail.to_vec(),
        current: Vec::with_capacity(n),
        out: Vec::new(),
    };
    search.run();
    Ket::uniform(dims, search.out)
}

struct ScriptGSearch {
    n: usize,
    low_cap: usize,
    low_slots: usize,
    low_sum: usize,
    tail: Vec<usize>,
    current: Vec<usize>,
    out: Vec<MultiIndex>,
}

impl ScriptGSearch {
    /// Depth-first in increasing level order, so labels come out sorted.
    fn run(&mut self) {
        if self.current.len() == self.n {
            if self.low_slots == 0 && self.low_sum == 0 {
                self.out.push(MultiIndex(self.current.clone()));
            }
            return;
        }
        if self.low_slots > 0 {
            let remaining_slots = self.low_slots - 1;
            for v in 0..=self.low_cap.min(self.low_sum) {
                if self.low_sum - v > remaining_slots * self.low_cap {
                    continue;
                }
                self.low_slots -= 1;
                self.low_sum -= v;
                self.current.push(v);
                self.run();
                self.current.pop();
                self.low_sum += v;
                self.low_slots += 1;
            }
        }
        for t in 0..self.tail.len() {
            if self.tail[t] == 0 {
                continue;
            }
            self.tail[t] -= 1;
            self.current.push(self.low_cap + 1 + t);
            self.run();
            self.current.pop();
            self.tail[t] += 1;
        }
    }
}

/// Tensor product of per-site coefficient vectors.
pub fn product_state(dims: &LocalDims, site_coeffs: &[Vec<GaussianRational>]) -> Result<Ket> {
    if site_coeffs.len() != dims.n() {
        return Err(Error::LengthMismatch {
            expected: dims.n(),
            actual: site_coeffs.len(),
        });
    }
    for (site, (coeffs, &d)) in site_coeffs.iter().zip(dims.as_slice()).enumerate() {
        if coeffs.len() != d {
            return Err(Error::ShapeMismatch {
                site,
                expected: d,
                actual: coeffs.len(),
            });
        }
    }
    let mut partial: Vec<(Vec<usize>, GaussianRational)> =
        vec![(Vec::new(), GaussianRational::one())];
    for coeffs in site_coeffs {
        let mut next = Vec::with_capacity(partial.len() * coeffs.len());
        for (prefix, value) in &partial {
            for (level, c) in coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut label = prefix.clone();
                label.push(level);
                next.push((label, value * c));
            }
        }
        partial = next;
    }
    Ket::from_terms(
        dims.clone(),
        partial.into_iter().map(|(label, c)| (MultiIndex(label), c)),
    )
}
