//! Big-integer combinatorics behind the normalization factors and the
//! dimension counts: binomials, multinomials, bounded compositions and the
//! number of distinct monomials left after coordinate substitution.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Level multiplicities `(k_0, ..., k_{d-1})` of a basis label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector {
    parts: Vec<usize>,
}

impl OccupationVector {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Range(
                "occupation vector needs at least one part".into(),
            ));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Per-variable upper bounds; `caps[j]` allows values `0..=caps[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsVector {
    caps: Vec<usize>,
}

impl BoundsVector {
    pub fn new(caps: Vec<usize>) -> Result<Self> {
        if let Some(bad) = caps.iter().find(|&&c| c < 1) {
            return Err(Error::Range(format!("cap {bad} must be at least 1")));
        }
        Ok(Self { caps })
    }

    pub fn uniform(num_vars: usize, cap: usize) -> Result<Self> {
        Self::new(vec![cap; num_vars])
    }

    /// Caps `d_j - 1` for local dimensions `d_j`.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        if let Some(bad) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Range(format!("local dimension {bad} < 2")));
        }
        Self::new(dims.iter().map(|d| d - 1).collect())
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn max_total(&self) -> usize {
        self.caps.iter().sum()
    }
}

/// `n choose k`, zero outside `0 <= k <= n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// `n! / prod k_i!`
pub fn multinomial(n: usize, occ: &OccupationVector) -> Result<BigUint> {
    if occ.total() != n {
        return Err(Error::TotalMismatch {
            expected: n,
            actual: occ.total(),
        });
    }
    let denom = occ
        .parts()
        .iter()
        .fold(BigUint::one(), |acc, &k| acc * factorial(k));
    Ok(factorial(n) / denom)
}

/// Coefficient of `x^m` in `(1 - x)^{-n}`, i.e. weak compositions of `m`
/// into `n` unbounded parts.
fn unbounded_count(m: i64, n: usize) -> BigInt {
    if m < 0 {
        return BigInt::zero();
    }
    if n == 0 {
        return if m == 0 {
            BigInt::one()
        } else {
            BigInt::zero()
        };
    }
    BigInt::from(binomial(m as u64 + n as u64 - 1, n as i64 - 1))
}

/// Number of integer solutions of `x_1 + ... + x_n = k` with
/// `0 <= x_j <= caps[j]`, via inclusion-exclusion over the subsets of
/// variables that overflow their cap.
pub fn bounded_composition_count(
    num_vars: usize,
    k: i64,
    bounds: &BoundsVector,
) -> Result<BigUint> {
    if bounds.len() != num_vars {
        return Err(Error::LengthMismatch {
            expected: num_vars,
            actual: bounds.len(),
        });
    }
    if k < 0 || k as usize > bounds.max_total() {
        return Ok(BigUint::zero());
    }
    // Subset sums of (cap_j + 1), grouped by parity; 2^n terms.
    let mut subsets: Vec<(i64, bool)> = vec![(0, false)];
    for &cap in bounds.caps() {
        let step = cap as i64 + 1;
        let extended: Vec<(i64, bool)> = subsets
            .iter()
            .filter(|(sum, _)| sum + step <= k)
            .map(|&(sum, odd)| (sum + step, !odd))
            .collect();
        subsets.extend(extended);
    }
    let total: BigInt = subsets
        .iter()
        .map(|&(sum, odd)| {
            let term = unbounded_count(k - sum, num_vars);
            if odd {
                -term
            } else {
                term
            }
        })
        .sum();
    debug_assert!(!total.is_negative());
    Ok(total.to_biguint().unwrap_or_default())
}

/// The equal-caps specialization: `sum_l (-1)^l C(n,l) C(k - l d + n - 1, n - 1)`
/// counting solutions with every `x_j` in `0..d`.
pub fn homogeneous_bounded_count(n: usize, k: i64, d: usize) -> BigUint {
    if k < 0 || d == 0 {
        return BigUint::zero();
    }
    let upper = n.min(k as usize / d);
    let mut total = BigInt::zero();
    for l in 0..=upper {
        let term =
            BigInt::from(binomial(n as u64, l as i64)) * unbounded_count(k - (l * d) as i64, n);
        if l % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total.to_biguint().unwrap_or_default()
}

/// All solutions of the bounded equation in ascending lexicographic order.
pub fn enumerate_bounded_compositions(
    num_vars: usize,
    k: i64,
    bounds: &BoundsVector,
) -> Result<Vec<Vec<usize>>> {
    if bounds.len() != num_vars {
        return Err(Error::LengthMismatch {
            expected: num_vars,
            actual: bounds.len(),
        });
    }
    let mut out = Vec::new();
    if k < 0 || k as usize > bounds.max_total() {
        return Ok(out);
    }
    // suffix[j] = largest sum reachable by variables j..n
    let caps = bounds.caps();
    let mut suffix = vec![0usize; num_vars + 1];
    for j in (0..num_vars).rev() {
        suffix[j] = suffix[j + 1] + caps[j];
    }
    let mut current = Vec::with_capacity(num_vars);
    fill_compositions(caps, &suffix, k as usize, &mut current, &mut out);
    Ok(out)
}

fn fill_compositions(
    caps: &[usize],
    suffix: &[usize],
    remaining: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let j = current.len();
    if j == caps.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let low = remaining.saturating_sub(suffix[j + 1]);
    let high = caps[j].min(remaining);
    for v in low..=high {
        current.push(v);
        fill_compositions(caps, suffix, remaining - v, current, out);
        current.pop();
    }
}

/// Weak compositions of `total` into `parts` parts, ordered by descending
/// concatenated components: `(total, 0, ..., 0)` first, `(0, ..., 0, total)` last.
/// With zero parts the only composition of 0 is the empty one.
pub fn weak_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = Vec::with_capacity(parts);
    fill_weak(total, parts, &mut current, &mut out);
    out
}

fn fill_weak(remaining: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() + 1 == parts {
        current.push(remaining);
        out.push(current.clone());
        current.pop();
        return;
    }
    for v in (0..=remaining).rev() {
        current.push(v);
        fill_weak(remaining - v, parts, current, out);
        current.pop();
    }
}

/// Occupation vectors of `n` particles over `d` levels in descending
/// concatenated order.
pub fn enumerate_occupations(n: usize, d: usize) -> Result<Vec<OccupationVector>> {
    if n < 1 || d < 2 {
        return Err(Error::Range(format!(
            "need n >= 1 and d >= 2, got n={n}, d={d}"
        )));
    }
    weak_compositions(n, d)
        .into_iter()
        .map(OccupationVector::new)
        .collect()
}

/// Number of distinct monomials in
/// `(1 + x + ... + x^{ksub+1} + y_{ksub+2} + ... + y_{d-1})^n`.
///
/// A monomial is `x^s * prod y_i^{k_i}` with `K = n - sum k_i` factors drawn
/// from the substituted block, so `0 <= s <= K (ksub + 1)`.
pub fn count_distinct_monomials(n: usize, d: usize, ksub: usize) -> Result<BigUint> {
    if d < 2 || ksub > d - 2 {
        return Err(Error::Range(format!(
            "substitution count {ksub} outside [0, {}]",
            d.saturating_sub(2)
        )));
    }
    let tail_levels = d - ksub - 2;
    let mut total = BigInt::zero();
    for big_k in 0..=n {
        let exponents = BigInt::from(big_k * (ksub + 1) + 1);
        total += exponents * unbounded_count((n - big_k) as i64, tail_levels);
    }
    Ok(total.to_biguint().unwrap_or_default())
}

pub fn to_usize(v: &BigUint) -> usize {
    v.to_usize().expect("count exceeds usize")
}
