//! Canonical indexing of degree-4 and degree-2 monomials.
//!
//! A degree-4 monomial in `n` variables is a non-decreasing 4-tuple of
//! variable indices; `x0^2 x1 x3` is `(0, 0, 1, 3)`. Tuples are ranked in
//! lexicographic order, which is also the order produced by four nested
//! loops `i <= j <= k <= l`. Degree-2 monomials use sorted pairs with the
//! same convention. Both orders are part of the file formats and must not
//! change.

use thiserror::Error;

/// Ordering tag written into coefficient files.
pub const QUARTIC_ORDERING: &str = "lex-sorted-tuples-v1";
/// Ordering tag written into certificate files.
pub const PAIR_ORDERING: &str = "lex-sorted-pairs-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonomialError {
    #[error("invalid monomial {vars:?} for n = {n}: indices must be sorted and < n")]
    InvalidMonomial { vars: [usize; 4], n: usize },
    #[error("monomial index {idx} out of range (count = {total})")]
    OutOfRange { idx: usize, total: usize },
}

/// Binomial coefficient; returns 0 when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of degree-4 monomials in `n` variables, `C(n+3, 4)`.
pub fn monomial_count(n: usize) -> usize {
    binomial(n + 3, 4)
}

/// Number of degree-2 monomials in `n` variables, `C(n+1, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Rank of the sorted pair `(i, j)`, `i <= j < n`.
#[inline]
pub fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * i.saturating_sub(1) / 2 - i + j
}

/// Rank of the unordered pair `{i, j}`.
#[inline]
pub fn sym_pair_index(i: usize, j: usize, n: usize) -> usize {
    if i <= j {
        pair_index(i, j, n)
    } else {
        pair_index(j, i, n)
    }
}

/// All sorted pairs in rank order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// A degree-4 monomial as a sorted tuple of variable indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial4([usize; 4]);

impl Monomial4 {
    pub fn new(vars: [usize; 4], n: usize) -> Result<Self, MonomialError> {
        let sorted = vars.windows(2).all(|w| w[0] <= w[1]);
        if !sorted || vars[3] >= n {
            return Err(MonomialError::InvalidMonomial { vars, n });
        }
        Ok(Monomial4(vars))
    }

    /// Builds a monomial from unsorted indices.
    pub fn from_unsorted(mut vars: [usize; 4], n: usize) -> Result<Self, MonomialError> {
        vars.sort_unstable();
        Self::new(vars, n)
    }

    pub(crate) fn new_unchecked(vars: [usize; 4]) -> Self {
        Monomial4(vars)
    }

    pub fn vars(&self) -> [usize; 4] {
        self.0
    }

    /// Exponent of variable `v`.
    pub fn degree_in(&self, v: usize) -> usize {
        self.0.iter().filter(|&&x| x == v).count()
    }
}

/// Bijection between degree-4 monomials in `n` variables and `0..total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonomialIndex {
    n: usize,
    total: usize,
}

impl MonomialIndex {
    pub fn new(n: usize) -> Self {
        MonomialIndex {
            n,
            total: monomial_count(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn index_of(&self, m: &Monomial4) -> Result<usize, MonomialError> {
        index_of(m, self.n)
    }

    pub fn multiset_of(&self, idx: usize) -> Result<Monomial4, MonomialError> {
        multiset_of(idx, self.n)
    }

    /// Monomials in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Monomial4> {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (i..n).flat_map(move |j| {
                (j..n).flat_map(move |k| (k..n).map(move |l| Monomial4([i, j, k, l])))
            })
        })
    }
}

/// Position of `m` in the lexicographic enumeration of sorted 4-tuples.
pub fn index_of(m: &Monomial4, n: usize) -> Result<usize, MonomialError> {
    let v = m.0;
    if !v.windows(2).all(|w| w[0] <= w[1]) || v[3] >= n {
        return Err(MonomialError::InvalidMonomial { vars: v, n });
    }
    Ok(rank_sorted(v, n))
}

/// Rank of a sorted tuple assumed valid.
///
/// Tuples placed before `t` at position `pos` are those agreeing on
/// `t[..pos]` and holding a value `w in [prev, t[pos])` there, with the
/// `r = 3 - pos` trailing entries free in `[w, n)`. Summing
/// `C(n - w + r - 1, r)` over `w` telescopes by the hockey-stick identity.
#[inline]
pub(crate) fn rank_sorted(t: [usize; 4], n: usize) -> usize {
    let mut rank = 0;
    let mut prev = 0;
    for (pos, &b) in t.iter().enumerate() {
        let r = 3 - pos;
        rank += binomial(n - prev + r, r + 1) - binomial(n - b + r, r + 1);
        prev = b;
    }
    rank
}

/// Inverse of [`index_of`].
pub fn multiset_of(idx: usize, n: usize) -> Result<Monomial4, MonomialError> {
    let total = monomial_count(n);
    if idx >= total {
        return Err(MonomialError::OutOfRange { idx, total });
    }
    let mut rest = idx;
    let mut out = [0usize; 4];
    let mut v = 0;
    for (pos, slot) in out.iter_mut().enumerate() {
        let r = 3 - pos;
        loop {
            let completions = binomial(n - v + r - 1, r);
            if rest < completions {
                break;
            }
            rest -= completions;
            v += 1;
        }
        *slot = v;
    }
    Ok(Monomial4(out))
}

/// Canonical index of the product of the degree-2 monomials `(a, b)` and `(c, d)`.
#[inline]
pub(crate) fn product_index(p: (usize, usize), q: (usize, usize), n: usize) -> usize {
    let mut t = [p.0, p.1, q.0, q.1];
    t.sort_unstable();
    rank_sorted(t, n)
}

/// Which coefficient formula governs a monomial.
///
/// Indices are variable indices; for the mixed classes the repeated
/// variable is `i` and the remaining ones are listed in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonomialClass {
    /// `x_i^4`
    Fourth { i: usize },
    /// `x_i^3 x_j`
    CubeLinear { i: usize, j: usize },
    /// `x_i^2 x_j^2`, `i < j`
    TwoSquares { i: usize, j: usize },
    /// `x_i^2 x_j x_k`, `j < k`
    SquareTwoLinear { i: usize, j: usize, k: usize },
    /// `x_i x_j x_k x_l`, all distinct and increasing
    Distinct { i: usize, j: usize, k: usize, l: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassKind {
    Fourth,
    CubeLinear,
    TwoSquares,
    SquareTwoLinear,
    Distinct,
}

impl MonomialClass {
    pub fn kind(&self) -> ClassKind {
        match self {
            MonomialClass::Fourth { .. } => ClassKind::Fourth,
            MonomialClass::CubeLinear { .. } => ClassKind::CubeLinear,
            MonomialClass::TwoSquares { .. } => ClassKind::TwoSquares,
            MonomialClass::SquareTwoLinear { .. } => ClassKind::SquareTwoLinear,
            MonomialClass::Distinct { .. } => ClassKind::Distinct,
        }
    }

    /// Distinct variables with their exponents.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        match *self {
            MonomialClass::Fourth { i } => vec![(i, 4)],
            MonomialClass::CubeLinear { i, j } => vec![(i, 3), (j, 1)],
            MonomialClass::TwoSquares { i, j } => vec![(i, 2), (j, 2)],
            MonomialClass::SquareTwoLinear { i, j, k } => vec![(i, 2), (j, 1), (k, 1)],
            MonomialClass::Distinct { i, j, k, l } => vec![(i, 1), (j, 1), (k, 1), (l, 1)],
        }
    }
}

/// Classifies a sorted tuple into one of the five coefficient formulas.
pub fn monomial_class(m: &Monomial4) -> MonomialClass {
    classify(m.0)
}

#[inline]
pub(crate) fn classify(t: [usize; 4]) -> MonomialClass {
    let [a, b, c, d] = t;
    match (a == b, b == c, c == d) {
        (true, true, true) => MonomialClass::Fourth { i: a },
        (true, true, false) => MonomialClass::CubeLinear { i: a, j: d },
        (false, true, true) => MonomialClass::CubeLinear { i: b, j: a },
        (true, false, true) => MonomialClass::TwoSquares { i: a, j: c },
        (true, false, false) => MonomialClass::SquareTwoLinear { i: a, j: c, k: d },
        (false, true, false) => MonomialClass::SquareTwoLinear { i: b, j: a, k: d },
        (false, false, true) => MonomialClass::SquareTwoLinear { i: c, j: a, k: b },
        (false, false, false) => MonomialClass::Distinct { i: a, j: b, k: c, l: d },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn brute_tuples(n: usize) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let t = [a, b, c, d];
                        if t.windows(2).all(|w| w[0] <= w[1]) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn first_and_last() {
        let m = Monomial4::new([0, 0, 0, 0], 2).unwrap();
        assert_eq!(index_of(&m, 2).unwrap(), 0);
        assert_eq!(multiset_of(0, 2).unwrap().vars(), [0, 0, 0, 0]);
        assert_eq!(monomial_count(2), 5);
        assert_eq!(multiset_of(4, 2).unwrap().vars(), [1, 1, 1, 1]);
    }

    #[test]
    fn counts_from_table() {
        assert_eq!(monomial_count(10), 715);
        assert_eq!(monomial_count(15), 3060);
        assert_eq!(monomial_count(20), 8855);
        assert_eq!(monomial_count(25), 20475);
        assert_eq!(monomial_count(30), 40920);
        assert_eq!(monomial_count(100), 4_421_275);
        assert_eq!(pair_count(100), 5050);
    }

    #[test]
    fn round_trip_n5_exhaustive() {
        let tuples = brute_tuples(5);
        assert_eq!(tuples.len(), 70);
        for (rank, t) in tuples.iter().enumerate() {
            let m = Monomial4::new(*t, 5).unwrap();
            assert_eq!(index_of(&m, 5).unwrap(), rank);
            assert_eq!(multiset_of(rank, 5).unwrap(), m);
        }
    }

    #[test]
    fn iter_matches_lex_enumeration() {
        for n in 1..7 {
            let idx = MonomialIndex::new(n);
            let got: Vec<_> = idx.iter().map(|m| m.vars()).collect();
            assert_eq!(got, brute_tuples(n));
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            Monomial4::new([1, 0, 0, 0], 3),
            Err(MonomialError::InvalidMonomial { .. })
        ));
        assert!(Monomial4::new([0, 0, 0, 3], 3).is_err());
        let bogus = Monomial4([2, 1, 0, 0]);
        assert!(index_of(&bogus, 3).is_err());
        assert_eq!(
            multiset_of(70, 5),
            Err(MonomialError::OutOfRange { idx: 70, total: 70 })
        );
    }

    #[test]
    fn pair_ranks() {
        for n in 1..9 {
            for (rank, (i, j)) in pairs(n).enumerate() {
                assert_eq!(pair_index(i, j, n), rank);
                assert_eq!(sym_pair_index(j, i, n), rank);
            }
        }
    }

    #[test]
    fn class_examples() {
        let c = |t| monomial_class(&Monomial4::new(t, 5).unwrap());
        assert_eq!(c([0, 0, 0, 0]), MonomialClass::Fourth { i: 0 });
        assert_eq!(c([0, 0, 1, 2]), MonomialClass::SquareTwoLinear { i: 0, j: 1, k: 2 });
        assert_eq!(c([0, 1, 2, 3]), MonomialClass::Distinct { i: 0, j: 1, k: 2, l: 3 });
        assert_eq!(c([0, 1, 1, 1]), MonomialClass::CubeLinear { i: 1, j: 0 });
        assert_eq!(c([0, 1, 1, 2]), MonomialClass::SquareTwoLinear { i: 1, j: 0, k: 2 });
        assert_eq!(c([0, 1, 2, 2]), MonomialClass::SquareTwoLinear { i: 2, j: 0, k: 1 });
        assert_eq!(c([1, 1, 3, 3]), MonomialClass::TwoSquares { i: 1, j: 3 });
    }

    #[test]
    fn classes_agree_with_multiplicities() {
        let idx = MonomialIndex::new(6);
        for m in idx.iter() {
            let mut got = monomial_class(&m).multiplicities();
            got.sort();
            let mut want: Vec<(usize, usize)> = (0..6)
                .filter_map(|v| {
                    let d = m.degree_in(v);
                    (d > 0).then_some((v, d))
                })
                .collect();
            want.sort();
            assert_eq!(got, want, "{m:?}");
        }
    }

    #[test]
    fn class_counts_exhaustive() {
        for n in 1..=8 {
            let mut counts: HashMap<ClassKind, usize> = HashMap::new();
            for m in MonomialIndex::new(n).iter() {
                *counts.entry(monomial_class(&m).kind()).or_default() += 1;
            }
            let get = |k| counts.get(&k).copied().unwrap_or(0);
            assert_eq!(get(ClassKind::Fourth), n);
            assert_eq!(get(ClassKind::CubeLinear), n * (n - 1));
            assert_eq!(get(ClassKind::TwoSquares), binomial(n, 2));
            assert_eq!(get(ClassKind::SquareTwoLinear), n * binomial(n - 1, 2));
            assert_eq!(get(ClassKind::Distinct), binomial(n, 4));
            assert_eq!(counts.values().sum::<usize>(), monomial_count(n));
        }
    }

    #[test]
    fn class_count_identity_up_to_30() {
        for n in 1..=30 {
            let sum = n + n * (n - 1) + binomial(n, 2) + n * binomial(n - 1, 2) + binomial(n, 4);
            assert_eq!(sum, monomial_count(n));
        }
    }

    #[test]
    fn product_index_is_sorted_rank() {
        let n = 4;
        let m = Monomial4::new([0, 1, 2, 3], n).unwrap();
        assert_eq!(product_index((1, 3), (0, 2), n), index_of(&m, n).unwrap());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rank_is_strictly_monotone(n in 1usize..40, a in 0usize..5000, b in 0usize..5000) {
                let total = monomial_count(n);
                let (a, b) = (a % total, b % total);
                let (ma, mb) = (multiset_of(a, n).unwrap(), multiset_of(b, n).unwrap());
                prop_assert_eq!(a.cmp(&b), ma.vars().cmp(&mb.vars()));
                prop_assert_eq!(index_of(&ma, n).unwrap(), a);
            }
        }
    }
}
