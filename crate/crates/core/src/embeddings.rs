//! Non-orthogonal unextendible product bases (nUPBs) as images of
//! Veronese-type embeddings, and the generator states spanning the same
//! subspace.
//!
//! A homogeneous spec `(n, d, k)` substitutes `x_i = x^i` for the first `k + 1`
//! affine coordinates of each site and leaves `d - k - 2` coordinates free.
//! `k = 0` is the plain Veronese embedding and `k = d - 2` the fully
//! substituted one. Heterogeneous dims always use full substitution.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial, count_distinct_monomials, enumerate_occupations, to_usize, weak_compositions,
};
use crate::error::{Error, Result};
use crate::multirank::{rank_of_rows, Echelon};
use crate::number::{rational, GaussianRational, Rational};
use crate::states::{
    dicke, frak_g_state, g_state, generalized_dicke, product_state, script_g_state, Ket, LocalDims,
    MultiIndex,
};

pub const MAX_POINT_ATTEMPTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    QubitDicke,
    QuditVeronese,
    QuditGamma,
    QuditKSub,
    Heterogeneous,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbedSpec {
    dims: LocalDims,
    k_sub: Option<usize>,
}

impl EmbedSpec {
    /// Homogeneous dims take `k_sub` (default `d - 2`); heterogeneous dims
    /// reject it.
    pub fn new(dims: LocalDims, k_sub: Option<usize>) -> Result<Self> {
        match dims.uniform() {
            Some(d) => {
                let k = k_sub.unwrap_or(d - 2);
                if k > d - 2 {
                    return Err(Error::Range(format!(
                        "substitution count {k} outside [0, {}]",
                        d - 2
                    )));
                }
                Ok(Self {
                    dims,
                    k_sub: Some(k),
                })
            }
            None => match k_sub {
                Some(k) => Err(Error::Range(format!(
                    "substitution count {k} given for heterogeneous dims {:?}",
                    dims.as_slice()
                ))),
                None => Ok(Self { dims, k_sub: None }),
            },
        }
    }

    pub fn homogeneous(n: usize, d: usize, k_sub: usize) -> Result<Self> {
        Self::new(LocalDims::homogeneous(n, d)?, Some(k_sub))
    }

    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Self::new(LocalDims::new(dims.to_vec())?, None)
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.n()
    }

    /// `None` for heterogeneous dims.
    pub fn k_sub(&self) -> Option<usize> {
        self.k_sub
    }

    pub fn family(&self) -> Family {
        match (self.dims.uniform(), self.k_sub) {
            (Some(2), _) => Family::QubitDicke,
            (Some(_), Some(0)) => Family::QuditVeronese,
            (Some(d), Some(k)) if k == d - 2 => Family::QuditGamma,
            (Some(_), Some(_)) => Family::QuditKSub,
            _ => Family::Heterogeneous,
        }
    }

    /// `sum_j (d_j - 1)`
    pub fn max_level_sum(&self) -> usize {
        self.dims.as_slice().iter().map(|d| d - 1).sum()
    }

    fn d(&self) -> usize {
        self.dims.as_slice()[0]
    }

    pub fn nupb_size(&self) -> usize {
        let n = self.n();
        match self.family() {
            Family::QubitDicke => n + 1,
            Family::QuditVeronese => {
                let d = self.d();
                to_usize(&binomial((n + d - 1) as u64, (d - 1) as i64))
            }
            Family::QuditGamma => n * (self.d() - 1) + 1,
            Family::QuditKSub => to_usize(
                &count_distinct_monomials(n, self.d(), self.k_sub.unwrap_or(0))
                    .expect("validated spec"),
            ),
            Family::Heterogeneous => self.max_level_sum() + 1,
        }
    }

    /// Labels of the fully separable generator states, in generator order.
    pub fn product_labels(&self) -> Vec<MultiIndex> {
        let n = self.n();
        let constant = |level: usize| MultiIndex(vec![level; n]);
        match self.family() {
            Family::QubitDicke | Family::QuditGamma => vec![constant(0), constant(self.d() - 1)],
            Family::QuditVeronese => (0..self.d()).map(constant).collect(),
            Family::QuditKSub => {
                let k = self.k_sub.unwrap_or(0);
                std::iter::once(0)
                    .chain(k + 1..self.d())
                    .map(constant)
                    .collect()
            }
            Family::Heterogeneous => vec![
                constant(0),
                MultiIndex(self.dims.as_slice().iter().map(|d| d - 1).collect()),
            ],
        }
    }

    /// Number of unsubstituted affine coordinates per point.
    pub fn num_free_coords(&self) -> usize {
        match self.k_sub {
            Some(k) => self.d() - k - 2,
            None => 0,
        }
    }

    pub fn ges_dim(&self) -> usize {
        self.nupb_size() - self.product_labels().len()
    }

    pub fn ces_dim(&self) -> usize {
        self.dims.total() - self.nupb_size()
    }
}

/// Affine point `[1 : x : x^2 : ... : x^{k+1} : free...]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationPoint {
    pub x: Rational,
    pub free: Vec<Rational>,
}

impl EvaluationPoint {
    pub fn new(x: Rational, free: Vec<Rational>) -> Self {
        Self { x, free }
    }

    pub fn from_ints(x: i64, free: &[i64]) -> Self {
        Self::new(rational(x), free.iter().map(|&v| rational(v)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nupb {
    pub spec: EmbedSpec,
    pub points: Vec<EvaluationPoint>,
    pub members: Vec<Ket>,
}

/// Local coefficient vector of site `j` at point `p`.
pub fn site_coefficients(
    spec: &EmbedSpec,
    j: usize,
    p: &EvaluationPoint,
) -> Result<Vec<GaussianRational>> {
    if j >= spec.n() {
        return Err(Error::SpecMismatch(format!(
            "site {j} outside 0..{}",
            spec.n()
        )));
    }
    if p.free.len() != spec.num_free_coords() {
        return Err(Error::SpecMismatch(format!(
            "point has {} free coordinates, spec needs {}",
            p.free.len(),
            spec.num_free_coords()
        )));
    }
    let d = spec.dims.as_slice()[j];
    let powers = match spec.k_sub {
        Some(k) => k + 2,
        None => d,
    };
    let x = GaussianRational::real(p.x.clone());
    let mut out = Vec::with_capacity(d);
    let mut power = GaussianRational::one();
    for _ in 0..powers {
        out.push(power.clone());
        power = &power * &x;
    }
    out.extend(p.free.iter().cloned().map(GaussianRational::real));
    Ok(out)
}

fn member(spec: &EmbedSpec, p: &EvaluationPoint) -> Result<Ket> {
    let sites = (0..spec.n())
        .map(|j| site_coefficients(spec, j, p))
        .collect::<Result<Vec<_>>>()?;
    product_state(spec.dims(), &sites)
}

/// Product states at the given points; fails if they do not span a space of
/// dimension `nupb_size`.
pub fn build_nupb(spec: &EmbedSpec, points: &[EvaluationPoint]) -> Result<Nupb> {
    let size = spec.nupb_size();
    if points.len() != size {
        return Err(Error::LengthMismatch {
            expected: size,
            actual: points.len(),
        });
    }
    let members = points
        .iter()
        .map(|p| member(spec, p))
        .collect::<Result<Vec<_>>>()?;
    let mut echelon = Echelon::default();
    let colliding: Vec<usize> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| !echelon.insert(dense_map(m)))
        .map(|(l, _)| l)
        .collect();
    if !colliding.is_empty() {
        return Err(Error::RankDeficient { colliding });
    }
    Ok(Nupb {
        spec: spec.clone(),
        points: points.to_vec(),
        members,
    })
}

fn dense_map(ket: &Ket) -> BTreeMap<usize, GaussianRational> {
    ket.terms()
        .map(|(m, c)| (m.flat(ket.dims()), c.clone()))
        .collect()
}

/// Primes greater than `above`, ascending.
fn primes_above(above: u64, count: usize) -> Vec<u64> {
    let is_prime = |p: u64| {
        p >= 2
            && (2..)
                .take_while(|q| q * q <= p)
                .all(|q| !p.is_multiple_of(q))
    };
    (above + 1..).filter(|&p| is_prime(p)).take(count).collect()
}

fn candidate_points(
    spec: &EmbedSpec,
    x_start: i64,
    prime_floor: u64,
    count: usize,
) -> Vec<EvaluationPoint> {
    let free = spec.num_free_coords();
    let primes = primes_above(prime_floor, count * free);
    (0..count)
        .map(|l| {
            let coords = primes[l * free..(l + 1) * free]
                .iter()
                .map(|&p| rational(p as i64))
                .collect();
            EvaluationPoint::new(rational(x_start + l as i64), coords)
        })
        .collect()
}

/// Deterministic generic points: `x = 0, 1, 2, ...` and, for every free
/// coordinate, a distinct prime. The seed and the attempt number shift the
/// primes; each candidate set is accepted only if [`build_nupb`] succeeds.
pub fn choose_generic_points(spec: &EmbedSpec, seed: u64) -> Result<Vec<EvaluationPoint>> {
    let size = spec.nupb_size();
    let stride = (size * spec.num_free_coords()) as u64;
    for attempt in 0..MAX_POINT_ATTEMPTS as u64 {
        let floor = seed % 1000 + attempt * (stride + 1);
        let points = candidate_points(spec, 0, floor, size);
        match build_nupb(spec, &points) {
            Ok(_) => return Ok(points),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExhaustedRetries {
        attempts: MAX_POINT_ATTEMPTS,
    })
}

/// `count` points disjoint from `used`: larger `x` values and free
/// coordinates that are primes beyond every used coordinate.
pub fn fresh_points(
    spec: &EmbedSpec,
    used: &[EvaluationPoint],
    count: usize,
    seed: u64,
) -> Vec<EvaluationPoint> {
    let max_x = used
        .iter()
        .map(|p| p.x.ceil().to_integer())
        .max()
        .unwrap_or_else(BigInt::zero);
    let max_free = used
        .iter()
        .flat_map(|p| p.free.iter())
        .map(|v| v.abs().ceil().to_integer())
        .max()
        .unwrap_or_else(BigInt::zero);
    let x_start = max_x.to_i64().unwrap_or(0) + 1 + (seed % 7) as i64;
    let floor = max_free.to_u64().unwrap_or(0) + seed % 50;
    candidate_points(spec, x_start, floor, count)
}

/// Product-basis members at the given points, without the rank check.
pub fn members_at(spec: &EmbedSpec, points: &[EvaluationPoint]) -> Result<Vec<Ket>> {
    points.iter().map(|p| member(spec, p)).collect()
}

/// Rank of the span of `kets`.
pub fn span_rank(kets: &[Ket]) -> Result<usize> {
    let Some(first) = kets.first() else {
        return Ok(0);
    };
    for k in kets {
        if k.dims() != first.dims() {
            return Err(Error::DimsMismatch {
                left: first.dims().as_slice().to_vec(),
                right: k.dims().as_slice().to_vec(),
            });
        }
    }
    let mut columns: BTreeMap<&MultiIndex, usize> = BTreeMap::new();
    for k in kets {
        for (m, _) in k.terms() {
            columns.insert(m, 0);
        }
    }
    for (pos, slot) in columns.values_mut().enumerate() {
        *slot = pos;
    }
    let rows = kets
        .iter()
        .map(|k| {
            let mut row = vec![GaussianRational::zero(); columns.len()];
            for (m, c) in k.terms() {
                row[columns[m]] = c.clone();
            }
            row
        })
        .collect();
    Ok(rank_of_rows(rows, columns.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenClass {
    Product,
    Gme,
}

/// Ordered generator family spanning the same space as the nUPB, each
/// tagged as fully separable or GME.
pub fn generator_states(spec: &EmbedSpec) -> Result<Vec<(Ket, GenClass)>> {
    let n = spec.n();
    let products = spec.product_labels();
    let classify = |ket: Ket| {
        let class = if ket.len() == 1 && products.contains(&ket.support()[0]) {
            GenClass::Product
        } else {
            GenClass::Gme
        };
        (ket, class)
    };
    let kets: Vec<Ket> = match spec.family() {
        Family::QubitDicke => (0..=n).map(|k| dicke(n, k)).collect::<Result<_>>()?,
        Family::QuditVeronese => {
            let d = spec.d();
            enumerate_occupations(n, d)?
                .iter()
                .map(|occ| generalized_dicke(n, d, occ))
                .collect::<Result<_>>()?
        }
        Family::QuditGamma => {
            let d = spec.d();
            (0..=n * (d - 1))
                .map(|k| g_state(n, d, k))
                .collect::<Result<_>>()?
        }
        Family::QuditKSub => {
            let d = spec.d();
            let k = spec.k_sub.unwrap_or(0);
            let mut out = Vec::new();
            for big_k in (0..=n).rev() {
                for s in 0..=big_k * (k + 1) {
                    for tail in weak_compositions(n - big_k, d - k - 2) {
                        out.push(script_g_state(n, d, k, big_k, s, &tail)?);
                    }
                }
            }
            out
        }
        Family::Heterogeneous => (0..=spec.max_level_sum())
            .map(|k| frak_g_state(spec.dims(), k))
            .collect::<Result<_>>()?,
    };
    Ok(kets.into_iter().map(classify).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multirank::{is_fully_product, is_gme};

    fn coeffs(v: &[i64]) -> Vec<GaussianRational> {
        v.iter().map(|&x| GaussianRational::from_int(x)).collect()
    }

    fn all_specs() -> Vec<EmbedSpec> {
        let mut out = Vec::new();
        for n in 2..=3 {
            for d in 2..=4 {
                for k in 0..=d - 2 {
                    out.push(EmbedSpec::homogeneous(n, d, k).unwrap());
                }
            }
        }
        for dims in [
            [2, 3].as_slice(),
            &[2, 4],
            &[3, 4],
            &[2, 3, 4],
            &[2, 2, 3],
            &[4, 3, 2],
            &[3, 3, 4],
        ] {
            out.push(EmbedSpec::from_dims(dims).unwrap());
        }
        out
    }

    #[test]
    fn spec_validation_and_families() {
        assert_eq!(
            EmbedSpec::from_dims(&[2, 2, 2]).unwrap().family(),
            Family::QubitDicke
        );
        assert_eq!(
            EmbedSpec::homogeneous(3, 3, 0).unwrap().family(),
            Family::QuditVeronese
        );
        assert_eq!(
            EmbedSpec::from_dims(&[3, 3, 3]).unwrap().family(),
            Family::QuditGamma
        );
        assert_eq!(
            EmbedSpec::homogeneous(3, 4, 1).unwrap().family(),
            Family::QuditKSub
        );
        assert_eq!(
            EmbedSpec::from_dims(&[2, 3, 4]).unwrap().family(),
            Family::Heterogeneous
        );
        assert_eq!(EmbedSpec::from_dims(&[3, 3]).unwrap().k_sub(), Some(1));
        assert!(EmbedSpec::homogeneous(3, 3, 2).is_err());
        assert!(EmbedSpec::new(LocalDims::new(vec![2, 3]).unwrap(), Some(0)).is_err());
    }

    #[test]
    fn site_coefficient_examples() {
        let het = EmbedSpec::from_dims(&[2, 3, 4]).unwrap();
        assert_eq!(
            site_coefficients(&het, 2, &EvaluationPoint::from_ints(2, &[])).unwrap(),
            coeffs(&[1, 2, 4, 8])
        );
        let ksub = EmbedSpec::homogeneous(3, 4, 1).unwrap();
        assert_eq!(
            site_coefficients(&ksub, 0, &EvaluationPoint::from_ints(3, &[5])).unwrap(),
            coeffs(&[1, 3, 9, 5])
        );
        let qubit = EmbedSpec::from_dims(&[2, 2]).unwrap();
        assert_eq!(
            site_coefficients(&qubit, 1, &EvaluationPoint::from_ints(0, &[])).unwrap(),
            coeffs(&[1, 0])
        );
        assert!(matches!(
            site_coefficients(&ksub, 0, &EvaluationPoint::from_ints(3, &[])),
            Err(Error::SpecMismatch(_))
        ));
        assert!(site_coefficients(&qubit, 2, &EvaluationPoint::from_ints(0, &[])).is_err());
    }

    #[test]
    fn nupb_sizes() {
        assert_eq!(EmbedSpec::from_dims(&[2; 4]).unwrap().nupb_size(), 5);
        assert_eq!(EmbedSpec::homogeneous(3, 3, 1).unwrap().nupb_size(), 7);
        assert_eq!(EmbedSpec::from_dims(&[2, 3, 4]).unwrap().nupb_size(), 7);
        for spec in all_specs() {
            if let (Some(d), Some(k)) = (spec.dims().uniform(), spec.k_sub()) {
                let m = count_distinct_monomials(spec.n(), d, k).unwrap();
                assert_eq!(spec.nupb_size(), to_usize(&m));
            }
        }
    }

    #[test]
    fn product_label_lists() {
        let shown = |spec: EmbedSpec| {
            spec.product_labels()
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(
            shown(EmbedSpec::homogeneous(3, 4, 1).unwrap()),
            ["|000>", "|222>", "|333>"]
        );
        assert_eq!(
            shown(EmbedSpec::homogeneous(3, 3, 0).unwrap()),
            ["|000>", "|111>", "|222>"]
        );
        assert_eq!(
            shown(EmbedSpec::from_dims(&[2, 3, 4]).unwrap()),
            ["|000>", "|123>"]
        );
        assert_eq!(
            shown(EmbedSpec::from_dims(&[2; 4]).unwrap()),
            ["|0000>", "|1111>"]
        );
    }

    #[test]
    fn build_examples() {
        let qubits = EmbedSpec::from_dims(&[2; 3]).unwrap();
        let points: Vec<_> = (0..4).map(|x| EvaluationPoint::from_ints(x, &[])).collect();
        let nupb = build_nupb(&qubits, &points).unwrap();
        assert_eq!(span_rank(&nupb.members).unwrap(), 4);
        assert!(nupb.members.iter().all(|m| is_fully_product(m).unwrap()));

        let repeated: Vec<_> = [0, 1, 1, 2]
            .iter()
            .map(|&x| EvaluationPoint::from_ints(x, &[]))
            .collect();
        assert_eq!(
            build_nupb(&qubits, &repeated),
            Err(Error::RankDeficient { colliding: vec![2] })
        );
        assert!(matches!(
            build_nupb(&qubits, &points[..3]),
            Err(Error::LengthMismatch { .. })
        ));

        let ex5 = EmbedSpec::homogeneous(3, 3, 1).unwrap();
        let points: Vec<_> = (0..7).map(|x| EvaluationPoint::from_ints(x, &[])).collect();
        assert_eq!(
            span_rank(&build_nupb(&ex5, &points).unwrap().members).unwrap(),
            7
        );
    }

    #[test]
    fn generic_point_choice() {
        let qubits = EmbedSpec::from_dims(&[2; 3]).unwrap();
        let points = choose_generic_points(&qubits, 0).unwrap();
        assert_eq!(
            points,
            (0..4)
                .map(|x| EvaluationPoint::from_ints(x, &[]))
                .collect::<Vec<_>>()
        );
        let veronese = EmbedSpec::homogeneous(3, 3, 0).unwrap();
        let points = choose_generic_points(&veronese, 0).unwrap();
        assert_eq!(points.len(), 10);
        assert_eq!(
            span_rank(&build_nupb(&veronese, &points).unwrap().members).unwrap(),
            10
        );
        assert_eq!(
            choose_generic_points(&veronese, 5).unwrap(),
            choose_generic_points(&veronese, 5).unwrap()
        );
        for spec in all_specs() {
            for seed in [0, 1, 99] {
                let points = choose_generic_points(&spec, seed).unwrap();
                assert!(build_nupb(&spec, &points).is_ok());
                for (l, p) in points.iter().enumerate() {
                    assert_eq!(p.x, rational(l as i64));
                }
                let fresh = fresh_points(&spec, &points, 5, seed);
                assert!(fresh.iter().all(|f| !points.contains(f)));
            }
        }
    }

    #[test]
    fn span_rank_examples() {
        let dims = LocalDims::homogeneous(2, 2).unwrap();
        let a = Ket::parse(dims.clone(), "|00>").unwrap();
        let b = Ket::parse(dims.clone(), "|00> + |11>").unwrap();
        assert_eq!(span_rank(&[a.clone(), b]).unwrap(), 2);
        assert_eq!(span_rank(&[]).unwrap(), 0);
        assert_eq!(
            span_rank(&[a.clone(), a.scale(&GaussianRational::from_int(3))]).unwrap(),
            1
        );
        let other = Ket::parse(LocalDims::homogeneous(3, 2).unwrap(), "|000>").unwrap();
        assert!(span_rank(&[a, other]).is_err());
    }

    #[test]
    fn generator_examples() {
        let count = |spec: &EmbedSpec, class| {
            generator_states(spec)
                .unwrap()
                .iter()
                .filter(|(_, c)| *c == class)
                .count()
        };
        let qubits = EmbedSpec::from_dims(&[2; 4]).unwrap();
        let gens = generator_states(&qubits).unwrap();
        assert_eq!(gens.len(), 5);
        assert_eq!(gens[0].0.to_string(), "|0000>");
        assert_eq!(gens[4].0.to_string(), "|1111>");
        assert_eq!(gens[0].1, GenClass::Product);
        assert!(gens[1..4].iter().all(|(_, c)| *c == GenClass::Gme));

        let veronese = EmbedSpec::homogeneous(3, 3, 0).unwrap();
        assert_eq!(
            (
                count(&veronese, GenClass::Product),
                count(&veronese, GenClass::Gme)
            ),
            (3, 7)
        );

        let ksub = EmbedSpec::homogeneous(3, 4, 1).unwrap();
        let gens = generator_states(&ksub).unwrap();
        let products: Vec<String> = gens
            .iter()
            .filter(|(_, c)| *c == GenClass::Product)
            .map(|(k, _)| k.to_string())
            .collect();
        assert_eq!(products, ["|000>", "|222>", "|333>"]);
        assert_eq!(count(&ksub, GenClass::Gme), 13);
        assert_eq!(gens.first().unwrap().0.to_string(), "|000>");
        assert_eq!(gens.last().unwrap().0.to_string(), "|333>");
    }

    #[test]
    fn generator_family_invariants() {
        for spec in all_specs() {
            let gens = generator_states(&spec).unwrap();
            assert_eq!(gens.len(), spec.nupb_size(), "{spec:?}");
            let kets: Vec<Ket> = gens.iter().map(|(k, _)| k.clone()).collect();
            let points = choose_generic_points(&spec, 0).unwrap();
            let members = build_nupb(&spec, &points).unwrap().members;
            let mut union = kets.clone();
            union.extend(members.iter().cloned());
            assert_eq!(span_rank(&kets).unwrap(), spec.nupb_size());
            assert_eq!(span_rank(&union).unwrap(), spec.nupb_size(), "{spec:?}");
            for (i, (ket, class)) in gens.iter().enumerate() {
                assert!(ket.is_uniform());
                match class {
                    GenClass::Gme => assert!(is_gme(ket).unwrap().gme, "{ket}"),
                    GenClass::Product => assert!(is_fully_product(ket).unwrap(), "{ket}"),
                }
                for (other, _) in &gens[i + 1..] {
                    assert!(ket.inner(other).unwrap().is_zero());
                }
            }
            assert_eq!(
                gens.iter().filter(|(_, c)| *c == GenClass::Product).count(),
                spec.product_labels().len()
            );
        }
    }
}
