//! Flattenings (matricizations) of kets along a bipartition, exact and
//! tolerant rank, multiranks and the GME / full-product tests built on them.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::number::{clear_denominators, GaussianInteger, GaussianRational};
use crate::states::{FloatKet, Ket, LocalDims, MultiIndex};

pub const DEFAULT_REL_THRESHOLD: f64 = 1e-9;

/// A site subset `I` with `1 <= |I| <= floor(n/2)`. Sites are stored
/// 0-based and displayed 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    sites: Vec<usize>,
    n: usize,
}

impl Bipartition {
    pub fn new(sites: Vec<usize>, n: usize) -> Result<Self> {
        if sites.is_empty() || sites.len() > n / 2 {
            return Err(Error::BadPartition(format!(
                "|I| = {} must lie in 1..={}",
                sites.len(),
                n / 2
            )));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadPartition(format!(
                "sites {sites:?} not strictly increasing"
            )));
        }
        if sites.iter().any(|&s| s >= n) {
            return Err(Error::BadPartition(format!(
                "sites {sites:?} outside 0..{n}"
            )));
        }
        Ok(Self { sites, n })
    }

    /// Builds from 1-based site labels.
    pub fn from_labels(labels: &[usize], n: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::BadPartition("site labels start at 1".into()));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), n)
    }

    /// Every `I` of size `ell` in lexicographic order. When `2 ell = n` the
    /// complement of `I` is another candidate with the same flattening up to
    /// transpose, so only the sets containing site 1 are kept.
    pub fn all_of_size(n: usize, ell: usize) -> Result<Vec<Self>> {
        if ell < 1 || ell > n / 2 {
            return Err(Error::Range(format!("ell = {ell} outside 1..={}", n / 2)));
        }
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(ell);
        combinations(n, ell, 0, &mut current, &mut out);
        if 2 * ell == n {
            out.retain(|sites| sites[0] == 0);
        }
        Ok(out.into_iter().map(|sites| Self { sites, n }).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|s| !self.sites.contains(s)).collect()
    }
}

fn combinations(
    n: usize,
    k: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    for s in start..n {
        current.push(s);
        combinations(n, k, s + 1, current, out);
        current.pop();
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.sites.iter().map(|s| (s + 1).to_string()).collect();
        write!(f, "({})", labels.join(","))
    }
}

/// Dense matrix of exact complex rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<GaussianRational>,
}

impl FlatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![GaussianRational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &GaussianRational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: GaussianRational) {
        self.entries[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[GaussianRational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rank(&self) -> usize {
        rank_exact(self)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|z| {
                    let (re, im) = z.to_f64_pair();
                    Complex64::new(re, im)
                })
                .collect(),
        }
    }
}

/// Row and column positions of every label under the split `I | complement`.
fn split_positions(
    dims: &LocalDims,
    part: &Bipartition,
) -> Result<(usize, usize, Vec<usize>, Vec<usize>)> {
    if part.n != dims.n() {
        return Err(Error::BadPartition(format!(
            "partition is for {} sites, state has {}",
            part.n,
            dims.n()
        )));
    }
    let d = dims.as_slice();
    let row_sites = part.sites.clone();
    let col_sites = part.complement();
    let rows = row_sites.iter().map(|&s| d[s]).product();
    let cols = col_sites.iter().map(|&s| d[s]).product();
    Ok((rows, cols, row_sites, col_sites))
}

fn position(index: &MultiIndex, sites: &[usize], d: &[usize]) -> usize {
    sites.iter().fold(0, |acc, &s| acc * d[s] + index.0[s])
}

/// The matrix `M_I[psi]` with rows labelled by the `I` sites and columns by
/// the complement, both in lexicographic order.
pub fn flatten(psi: &Ket, part: &Bipartition) -> Result<FlatMatrix> {
    let (rows, cols, row_sites, col_sites) = split_positions(psi.dims(), part)?;
    let d = psi.dims().as_slice();
    let mut m = FlatMatrix::zeros(rows, cols);
    for (index, c) in psi.terms() {
        m.set(
            position(index, &row_sites, d),
            position(index, &col_sites, d),
            c.clone(),
        );
    }
    Ok(m)
}

/// Certified rank by fraction-free elimination over `Z[i]`.
pub fn rank_exact(m: &FlatMatrix) -> usize {
    let rows: Vec<Vec<GaussianInteger>> = (0..m.rows)
        .map(|r| m.row(r))
        .filter(|row| row.iter().any(|z| !z.is_zero()))
        .map(clear_denominators)
        .collect();
    bareiss_rank(rows, m.cols)
}

/// Rank of the matrix whose rows are the given vectors.
pub(crate) fn rank_of_rows(rows: Vec<Vec<GaussianRational>>, cols: usize) -> usize {
    let rows: Vec<Vec<GaussianInteger>> = rows
        .iter()
        .filter(|row| row.iter().any(|z| !z.is_zero()))
        .map(|row| clear_denominators(row))
        .collect();
    bareiss_rank(rows, cols)
}

/// Fraction-free row echelon reduction. Every intermediate entry is a minor of
/// the input, so each division by the previous pivot is exact.
fn bareiss_rank(mut a: Vec<Vec<GaussianInteger>>, cols: usize) -> usize {
    let rows = a.len();
    let mut prev = GaussianInteger::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, below) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in below.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let cross = pivot.mul(&row[j]).sub(&factor.mul(&pivot_row[j]));
                row[j] = cross.div_exact(&prev);
            }
            row[c] = GaussianInteger::zero();
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

/// Incrementally maintained echelon basis over the Gaussian rationals.
#[derive(Clone, Debug, Default)]
pub(crate) struct Echelon {
    rows: Vec<BTreeMap<usize, GaussianRational>>,
}

impl Echelon {
    /// Reduces `v` against the basis; keeps it and returns true when it adds
    /// a new direction.
    pub fn insert(&mut self, mut v: BTreeMap<usize, GaussianRational>) -> bool {
        v.retain(|_, z| !z.is_zero());
        for row in &self.rows {
            let (&lead, lead_value) = row.iter().next().expect("echelon rows are nonzero");
            let Some(c) = v.get(&lead) else { continue };
            let factor = c * &lead_value.inv().expect("nonzero lead");
            for (&col, value) in row {
                let slot = v.entry(col).or_insert_with(GaussianRational::zero);
                *slot -= &(&factor * value);
            }
            v.retain(|_, z| !z.is_zero());
        }
        if v.is_empty() {
            return false;
        }
        let lead = *v.keys().next().expect("nonempty");
        let at = self
            .rows
            .partition_point(|row| *row.keys().next().expect("nonempty") < lead);
        self.rows.insert(at, v);
        true
    }

    #[cfg(test)]
    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Ranks of `M_I[psi]` for every `I` of size `ell`, in lexicographic order.
pub fn multirank(psi: &Ket, ell: usize) -> Result<Vec<(Bipartition, usize)>> {
    Bipartition::all_of_size(psi.dims().n(), ell)?
        .into_iter()
        .map(|part| {
            let rank = rank_exact(&flatten(psi, &part)?);
            Ok((part, rank))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultirankReport {
    /// `per_ell[l - 1]` lists `(I, rank)` for every `|I| = l`.
    pub per_ell: Vec<Vec<(Bipartition, usize)>>,
    pub gme: bool,
}

impl MultirankReport {
    fn from_ranks(per_ell: Vec<Vec<(Bipartition, usize)>>) -> Self {
        let gme = per_ell.iter().flatten().all(|(_, r)| *r >= 2);
        Self { per_ell, gme }
    }

    /// Rank tuple for `|I| = ell`.
    pub fn ranks(&self, ell: usize) -> Vec<usize> {
        self.per_ell
            .get(ell.wrapping_sub(1))
            .map(|row| row.iter().map(|(_, r)| *r).collect())
            .unwrap_or_default()
    }

    /// A bipartition with rank below two, if any.
    pub fn witness(&self) -> Option<&Bipartition> {
        self.per_ell
            .iter()
            .flatten()
            .find(|(_, r)| *r < 2)
            .map(|(p, _)| p)
    }
}

pub fn format_tuple(ranks: &[usize]) -> String {
    let parts: Vec<String> = ranks.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

/// Genuine multipartite entanglement test: all multiranks at least two.
pub fn is_gme(psi: &Ket) -> Result<MultirankReport> {
    if psi.is_zero() {
        return Err(Error::ZeroState);
    }
    let n = psi.dims().n();
    let per_ell = (1..=n / 2)
        .map(|ell| multirank(psi, ell))
        .collect::<Result<_>>()?;
    Ok(MultirankReport::from_ranks(per_ell))
}

/// Every single-site flattening has rank one.
pub fn is_fully_product(psi: &Ket) -> Result<bool> {
    if psi.is_zero() {
        return Err(Error::ZeroState);
    }
    let n = psi.dims().n();
    for site in 0..n {
        let part = Bipartition::new(vec![site], n)?;
        if rank_exact(&flatten(psi, &part)?) != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hankel matrix `(z_{r+c})` of shape `(n - i + 1) x (i + 1)` for
/// `z = (z_0, ..., z_n)`.
pub fn catalecticant(z: &[GaussianRational], i: usize) -> Result<FlatMatrix> {
    let n = z.len().saturating_sub(1);
    if i < 1 || i + 1 > n {
        return Err(Error::Range(format!(
            "catalecticant index {i} outside 1..={}",
            n.saturating_sub(1)
        )));
    }
    let rows = (0..=n - i)
        .map(|r| (0..=i).map(|c| z[r + c].clone()).collect())
        .collect();
    FlatMatrix::from_rows(rows)
}

/// Dense matrix of floating complex numbers, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Complex64) {
        self.entries[r * self.cols + c] = value;
    }

    /// Number of full-pivoting elimination pivots larger than
    /// `rel_threshold` times the largest entry of the input.
    pub fn rank_tolerant(&self, rel_threshold: f64) -> usize {
        let scale = self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let cutoff = rel_threshold * scale;
        let mut a = self.clone();
        let mut rank = 0;
        while rank < a.rows.min(a.cols) {
            let mut best = (rank, rank, 0.0);
            for r in rank..a.rows {
                for c in rank..a.cols {
                    let v = a.get(r, c).norm();
                    if v > best.2 {
                        best = (r, c, v);
                    }
                }
            }
            if best.2 <= cutoff {
                break;
            }
            a.swap_rows(rank, best.0);
            a.swap_cols(rank, best.1);
            let pivot = a.get(rank, rank);
            for r in rank + 1..a.rows {
                let factor = a.get(r, rank) / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in rank..a.cols {
                    let updated = a.get(r, c) - factor * a.get(rank, c);
                    a.set(r, c, updated);
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + a, r * self.cols + b);
        }
    }
}

pub fn flatten_float(psi: &FloatKet, part: &Bipartition) -> Result<ComplexMatrix> {
    let (rows, cols, row_sites, col_sites) = split_positions(psi.dims(), part)?;
    let d = psi.dims().as_slice();
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (index, c) in psi.terms() {
        m.set(
            position(index, &row_sites, d),
            position(index, &col_sites, d),
            *c,
        );
    }
    Ok(m)
}

pub fn multirank_tolerant(
    psi: &FloatKet,
    ell: usize,
    rel_threshold: f64,
) -> Result<Vec<(Bipartition, usize)>> {
    Bipartition::all_of_size(psi.dims().n(), ell)?
        .into_iter()
        .map(|part| {
            let rank = flatten_float(psi, &part)?.rank_tolerant(rel_threshold);
            Ok((part, rank))
        })
        .collect()
}

/// Floating-point counterpart of [`is_gme`].
pub fn is_gme_tolerant(psi: &FloatKet, rel_threshold: f64) -> Result<MultirankReport> {
    if psi.is_empty() {
        return Err(Error::ZeroState);
    }
    let n = psi.dims().n();
    let per_ell = (1..=n / 2)
        .map(|ell| multirank_tolerant(psi, ell, rel_threshold))
        .collect::<Result<_>>()?;
    Ok(MultirankReport::from_ranks(per_ell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::enumerate_occupations;
    use crate::states::{dicke, generalized_dicke, product_state};
    use proptest::prelude::*;

    fn ket(dims: &[usize], text: &str) -> Ket {
        Ket::parse(LocalDims::new(dims.to_vec()).unwrap(), text).unwrap()
    }

    fn ghz4() -> Ket {
        ket(&[2; 4], "|0000> + |1111>")
    }

    fn w4() -> Ket {
        dicke(4, 1).unwrap()
    }

    /// Bell pair on sites (1,2) times Bell pair on sites (3,4).
    fn bb() -> Ket {
        ket(&[2; 4], "|0000> + |0011> + |1100> + |1111>")
    }

    fn int_matrix(rows: &[Vec<i64>]) -> FlatMatrix {
        FlatMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| GaussianRational::from_int(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bipartitions() {
        let parts = Bipartition::all_of_size(4, 2).unwrap();
        let shown: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, ["(1,2)", "(1,3)", "(1,4)"]);
        assert_eq!(Bipartition::all_of_size(5, 2).unwrap().len(), 10);
        assert_eq!(Bipartition::all_of_size(2, 1).unwrap().len(), 1);
        assert!(Bipartition::all_of_size(4, 3).is_err());
        assert!(Bipartition::new(vec![1, 0], 4).is_err());
        assert!(Bipartition::new(vec![4], 4).is_err());
        assert!(Bipartition::from_labels(&[0], 4).is_err());
        assert_eq!(
            Bipartition::from_labels(&[2, 4], 4).unwrap().complement(),
            vec![0, 2]
        );
    }

    #[test]
    fn flatten_shapes() {
        let ghz = ghz4();
        let m = flatten(&ghz, &Bipartition::new(vec![0], 4).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 8));
        assert_eq!(m.rank(), 2);
        let m = flatten(&bb(), &Bipartition::new(vec![0, 1], 4).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 4));
        assert_eq!(m.rank(), 1);
        let het = ket(&[2, 3, 4], "|123> + |000>");
        let m = flatten(&het, &Bipartition::new(vec![1], 3).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 8));
        assert!(m.get(2, 7).is_one());
        assert!(flatten(&het, &Bipartition::new(vec![0], 4).unwrap()).is_err());
    }

    #[test]
    fn exact_rank_basics() {
        assert_eq!(FlatMatrix::zeros(3, 4).rank(), 0);
        assert_eq!(
            int_matrix(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).rank(),
            3
        );
        assert_eq!(
            int_matrix(&[vec![0, 2, 4], vec![0, 1, 2], vec![0, 0, 3]]).rank(),
            2
        );
        assert_eq!(int_matrix(&[vec![0, 0], vec![0, 5]]).rank(), 1);
        let complex = FlatMatrix::from_rows(vec![
            vec![
                GaussianRational::from_ints(1, 1),
                GaussianRational::from_ints(0, 2),
            ],
            vec![
                GaussianRational::from_ints(1, -1),
                GaussianRational::from_int(2),
            ],
        ])
        .unwrap();
        assert_eq!(complex.rank(), 1);
    }

    #[test]
    fn example_multiranks() {
        let ghz = ghz4();
        assert_eq!(
            multirank(&ghz, 1)
                .unwrap()
                .iter()
                .map(|x| x.1)
                .collect::<Vec<_>>(),
            [2, 2, 2, 2]
        );
        assert_eq!(
            multirank(&ghz, 2)
                .unwrap()
                .iter()
                .map(|x| x.1)
                .collect::<Vec<_>>(),
            [2, 2, 2]
        );
        let report = is_gme(&w4()).unwrap();
        assert_eq!(report.ranks(1), [2, 2, 2, 2]);
        assert!(report.gme);
        let report = is_gme(&bb()).unwrap();
        assert_eq!(report.ranks(2), [1, 4, 4]);
        assert!(!report.gme);
        assert_eq!(report.witness().unwrap().to_string(), "(1,2)");
        assert!(multirank(&ghz, 3).is_err());
    }

    #[test]
    fn gme_and_product_verdicts() {
        assert!(is_gme(&dicke(4, 2).unwrap()).unwrap().gme);
        let zero = ket(&[2; 4], "|0000>");
        let report = is_gme(&zero).unwrap();
        assert!(!report.gme);
        assert!(report.per_ell.iter().flatten().all(|(_, r)| *r == 1));
        assert_eq!(
            is_gme(&Ket::zero(LocalDims::homogeneous(3, 2).unwrap())),
            Err(Error::ZeroState)
        );

        let dims = LocalDims::new(vec![2, 3, 4]).unwrap();
        let coeffs = vec![
            vec![GaussianRational::one(), GaussianRational::from_int(2)],
            vec![
                GaussianRational::from_int(3),
                GaussianRational::zero(),
                GaussianRational::from_ints(0, 1),
            ],
            vec![GaussianRational::one(); 4],
        ];
        assert!(is_fully_product(&product_state(&dims, &coeffs).unwrap()).unwrap());
        assert!(!is_fully_product(&dicke(3, 1).unwrap()).unwrap());
        assert!(!is_fully_product(&bb()).unwrap());
        // Product across (1|2,3) but entangled on (2|3).
        assert!(!is_fully_product(&ket(&[2, 2, 2], "|000> + |011>")).unwrap());
    }

    #[test]
    fn generalized_dicke_gme_iff_no_full_part() {
        for n in 2..=4 {
            for d in 2..=4 {
                for occ in enumerate_occupations(n, d).unwrap() {
                    let psi = generalized_dicke(n, d, &occ).unwrap();
                    let spread = occ.parts().iter().all(|&k| k < n);
                    assert_eq!(is_gme(&psi).unwrap().gme, spread, "{occ:?}");
                    let report = is_gme(&psi).unwrap();
                    for row in &report.per_ell {
                        assert!(row.iter().all(|(_, r)| *r == row[0].1));
                    }
                }
            }
        }
    }

    #[test]
    fn catalecticant_examples() {
        let g = |v: &[i64]| {
            v.iter()
                .map(|&x| GaussianRational::from_int(x))
                .collect::<Vec<_>>()
        };
        let powers = catalecticant(&g(&[1, 2, 4, 8, 16]), 2).unwrap();
        assert_eq!((powers.rows(), powers.cols()), (3, 3));
        assert_eq!(powers.rank(), 1);
        assert_eq!(catalecticant(&g(&[1, 0, 0, 0]), 1).unwrap().rank(), 1);
        assert!(catalecticant(&g(&[0, 3, -5, 7, 0]), 1).unwrap().rank() >= 2);
        assert!(catalecticant(&g(&[0, 3, -5, 7, 0]), 2).unwrap().rank() >= 2);
        assert!(catalecticant(&g(&[1, 2, 3]), 2).is_err());
        assert!(catalecticant(&g(&[1, 2, 3]), 0).is_err());
    }

    #[test]
    fn catalecticant_matches_symmetric_flattenings() {
        let zs: [&[i64]; 4] = [
            &[1, 2, 4, 8, 16, 32],
            &[0, 1, 0, 0, 0, 0],
            &[0, 3, -1, 2, 5, 0],
            &[1, 0, 0, 0, 0, 1],
        ];
        for n in 2..=5 {
            for z in zs {
                let z: Vec<GaussianRational> = z[..=n]
                    .iter()
                    .map(|&v| GaussianRational::from_int(v))
                    .collect();
                let mut psi = Ket::zero(LocalDims::homogeneous(n, 2).unwrap());
                for (k, zk) in z.iter().enumerate() {
                    psi.add_scaled(zk, &dicke(n, k).unwrap()).unwrap();
                }
                if psi.is_zero() {
                    continue;
                }
                for i in 1..=n / 2 {
                    let expected = catalecticant(&z, i).unwrap().rank();
                    for (_, rank) in multirank(&psi, i).unwrap() {
                        assert_eq!(rank, expected, "n={n} i={i} z={z:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn tolerant_rank_agrees_on_integer_matrices() {
        let m = int_matrix(&[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]);
        assert_eq!(
            m.to_complex().rank_tolerant(DEFAULT_REL_THRESHOLD),
            m.rank()
        );
        assert_eq!(
            ComplexMatrix::zeros(2, 3).rank_tolerant(DEFAULT_REL_THRESHOLD),
            0
        );
        let ghz = ghz4().to_float();
        assert!(is_gme_tolerant(&ghz, DEFAULT_REL_THRESHOLD).unwrap().gme);
        assert!(
            !is_gme_tolerant(&bb().to_float(), DEFAULT_REL_THRESHOLD)
                .unwrap()
                .gme
        );
    }

    #[test]
    fn echelon_tracks_rank() {
        let mut e = Echelon::default();
        let v = |pairs: &[(usize, i64)]| {
            pairs
                .iter()
                .map(|&(c, x)| (c, GaussianRational::from_int(x)))
                .collect::<BTreeMap<_, _>>()
        };
        assert!(e.insert(v(&[(1, 2), (3, 1)])));
        assert!(e.insert(v(&[(0, 1)])));
        assert!(!e.insert(v(&[(0, 2), (1, 4), (3, 2)])));
        assert!(e.insert(v(&[(3, 1)])));
        assert!(!e.insert(v(&[])));
        assert_eq!(e.rank(), 3);
    }

    /// Determinant by cofactor expansion along the first row.
    fn det(m: &[Vec<GaussianRational>]) -> GaussianRational {
        if m.is_empty() {
            return GaussianRational::one();
        }
        let mut acc = GaussianRational::zero();
        for c in 0..m.len() {
            if m[0][c].is_zero() {
                continue;
            }
            let minor: Vec<Vec<GaussianRational>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != c)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][c] * &det(&minor);
            if c % 2 == 0 {
                acc += &term;
            } else {
                acc -= &term;
            }
        }
        acc
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        combinations(n, k, 0, &mut Vec::new(), &mut out);
        out
    }

    /// Largest nonvanishing minor.
    fn rank_by_minors(m: &FlatMatrix) -> usize {
        for k in (1..=m.rows().min(m.cols())).rev() {
            for rs in subsets(m.rows(), k) {
                for cs in subsets(m.cols(), k) {
                    let sub: Vec<Vec<GaussianRational>> = rs
                        .iter()
                        .map(|&r| cs.iter().map(|&c| m.get(r, c).clone()).collect())
                        .collect();
                    if !det(&sub).is_zero() {
                        return k;
                    }
                }
            }
        }
        0
    }

    fn low_rank_matrix() -> impl Strategy<Value = FlatMatrix> {
        (1usize..=6, 1usize..=6, 1usize..=4).prop_flat_map(|(rows, cols, inner)| {
            let entry = (-3i64..=3, -2i64..=2);
            (
                prop::collection::vec(prop::collection::vec(entry.clone(), inner), rows),
                prop::collection::vec(prop::collection::vec(entry, cols), inner),
            )
                .prop_map(move |(left, right)| {
                    let mut m = FlatMatrix::zeros(rows, cols);
                    for (r, lrow) in left.iter().enumerate() {
                        for c in 0..cols {
                            let mut acc = GaussianRational::zero();
                            for (k, rrow) in right.iter().enumerate() {
                                let a = GaussianRational::from_ints(lrow[k].0, lrow[k].1);
                                let b = GaussianRational::from_ints(rrow[c].0, rrow[c].1);
                                acc += &(&a * &b);
                            }
                            m.set(r, c, acc);
                        }
                    }
                    m
                })
        })
    }

    fn random_ket() -> impl Strategy<Value = Ket> {
        prop::collection::vec(2usize..=4, 2..=4)
            .prop_flat_map(|dims| {
                let total: usize = dims.iter().product();
                (
                    Just(dims),
                    prop::collection::vec((0..total, -2i64..=2), 1..8),
                )
            })
            .prop_map(|(dims, terms)| {
                let dims = LocalDims::new(dims).unwrap();
                let terms: Vec<_> = terms
                    .into_iter()
                    .map(|(flat, v)| {
                        (
                            MultiIndex::from_flat(flat, &dims),
                            GaussianRational::from_int(v),
                        )
                    })
                    .collect();
                Ket::from_terms(dims, terms).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_rank_matches_minor_oracle(m in low_rank_matrix()) {
            prop_assert_eq!(rank_exact(&m), rank_by_minors(&m));
            prop_assert_eq!(m.to_complex().rank_tolerant(DEFAULT_REL_THRESHOLD), rank_exact(&m));
        }

        #[test]
        fn flattening_rank_matches_minor_oracle(psi in random_ket()) {
            let n = psi.dims().n();
            for ell in 1..=n / 2 {
                for part in Bipartition::all_of_size(n, ell).unwrap() {
                    let m = flatten(&psi, &part).unwrap();
                    if m.rows().min(m.cols()) <= 4 {
                        prop_assert_eq!(rank_exact(&m), rank_by_minors(&m));
                    }
                }
            }
        }
    }
}
