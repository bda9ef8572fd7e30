//! Top-t rankings, full permutations, the reciprocal inversion code and the
//! per-rank sufficient statistics used by every model in the crate.
//!
//! Items are dense indices in `0..n`. Ranks are 0-based in the API: rank `0`
//! is the first (best) position.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ItemId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("need at least two items, got n = {0}")]
    TooFewItems(usize),
    #[error("ranking is empty")]
    Empty,
    #[error("item {item} is out of range for n = {n}")]
    ItemOutOfRange { item: ItemId, n: usize },
    #[error("item {0} is listed more than once")]
    DuplicateItem(ItemId),
    #[error("ranking of length {len} is too long for n = {n}")]
    TooLong { len: usize, n: usize },
    #[error("order of length {len} is not a permutation of 0..{n}")]
    NotAPermutation { len: usize, n: usize },
    #[error("code entry at rank {rank} is {value}, maximum is {max}")]
    CodeOutOfRange {
        rank: usize,
        value: usize,
        max: usize,
    },
    #[error("item count mismatch: expected n = {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ranking of length {len} exceeds the statistics' t_max = {t_max}")]
    ExceedsMaxLength { len: usize, t_max: usize },
    #[error("removing this ranking would drive the statistics negative")]
    NegativeStatistic,
}

/// A full ordering of `n` items. Keeps both directions so that
/// `item_at(rank)` and `rank_of(item)` are O(1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Permutation {
    order: Vec<ItemId>,
    rank: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<ItemId>) -> Result<Self, RankingError> {
        let n = order.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &item) in order.iter().enumerate() {
            if item >= n || rank[item] != usize::MAX {
                return Err(RankingError::NotAPermutation { len: n, n });
            }
            rank[item] = r;
        }
        Ok(Self { order, rank })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            rank: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<ItemId> = (0..n).collect();
        order.shuffle(rng);
        Self::new(order).expect("shuffled identity is a permutation")
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[ItemId] {
        &self.order
    }

    #[inline]
    pub fn item_at(&self, rank: usize) -> ItemId {
        self.order[rank]
    }

    #[inline]
    pub fn rank_of(&self, item: ItemId) -> usize {
        self.rank[item]
    }

    /// The first `t` items as a top-t ranking.
    pub fn prefix(&self, t: usize) -> TopTRanking {
        TopTRanking::new(self.order[..t].to_vec(), self.n()).expect("prefix of a permutation")
    }
}

impl TryFrom<Vec<ItemId>> for Permutation {
    type Error = RankingError;

    fn try_from(order: Vec<ItemId>) -> Result<Self, Self::Error> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<ItemId> {
    fn from(p: Permutation) -> Self {
        p.order
    }
}

/// An observed ranking of the `t` best items out of `n`.
///
/// A ranking that lists all `n` items is stored with its last item dropped,
/// since that item is determined by the others.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopTRanking {
    items: Vec<ItemId>,
    n: usize,
}

impl TopTRanking {
    pub fn new(mut items: Vec<ItemId>, n: usize) -> Result<Self, RankingError> {
        if n < 2 {
            return Err(RankingError::TooFewItems(n));
        }
        if items.is_empty() {
            return Err(RankingError::Empty);
        }
        if items.len() > n {
            return Err(RankingError::TooLong {
                len: items.len(),
                n,
            });
        }
        let mut seen = vec![false; n];
        for &item in &items {
            if item >= n {
                return Err(RankingError::ItemOutOfRange { item, n });
            }
            if std::mem::replace(&mut seen[item], true) {
                return Err(RankingError::DuplicateItem(item));
            }
        }
        if items.len() == n {
            items.pop();
        }
        Ok(Self { items, n })
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// The reciprocal code `s_{1:t}` of a ranking relative to a reference
/// permutation. Entry `j` (0-based) lies in `0..=n-1-j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeVector {
    s: Vec<usize>,
    n: usize,
}

impl CodeVector {
    pub fn new(s: Vec<usize>, n: usize) -> Result<Self, RankingError> {
        if n < 2 {
            return Err(RankingError::TooFewItems(n));
        }
        if s.len() > n {
            return Err(RankingError::TooLong { len: s.len(), n });
        }
        for (rank, &value) in s.iter().enumerate() {
            let max = n - 1 - rank;
            if value > max {
                return Err(RankingError::CodeOutOfRange { rank, value, max });
            }
        }
        Ok(Self { s, n })
    }

    pub fn values(&self) -> &[usize] {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `s_j(pi | sigma)`: one less than the rank of the `j`-th item of `pi` in
/// `sigma` once the earlier items of `pi` are deleted from `sigma`.
///
/// Panics when `pi` and `sigma` disagree on `n`.
pub fn code(pi: &TopTRanking, sigma: &Permutation) -> CodeVector {
    assert_eq!(pi.n(), sigma.n(), "ranking and permutation must share n");
    let mut s = Vec::with_capacity(pi.len());
    fill_code(pi.items(), sigma, &mut s);
    CodeVector { s, n: pi.n() }
}

/// Writes the code of `items` into `out`. O(t^2), independent of `n`.
#[inline]
pub(crate) fn fill_code(items: &[ItemId], sigma: &Permutation, out: &mut Vec<usize>) {
    out.clear();
    for (j, &item) in items.iter().enumerate() {
        let r = sigma.rank_of(item);
        let earlier = items[..j]
            .iter()
            .filter(|&&prev| sigma.rank_of(prev) < r)
            .count();
        out.push(r - earlier);
    }
}

/// Inverse of [`code`]: item `j` of the result is the `(s_j + 1)`-th item of
/// `sigma` among those not yet used.
pub fn build_from_code(s: &CodeVector, sigma: &Permutation) -> TopTRanking {
    assert_eq!(s.n(), sigma.n(), "code and permutation must share n");
    let mut remaining = sigma.order().to_vec();
    let items = s.values().iter().map(|&k| remaining.remove(k)).collect();
    TopTRanking::new(items, s.n()).expect("a valid code always decodes")
}

/// One row of a sparse `R_j` matrix. The entry in column `i'` is
/// `count - preceded[i']` off the diagonal and zero on it: `count` is how
/// often the row item sat at rank `j`, `preceded[i']` how often `i'` was
/// ranked ahead of it on those occasions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RowStats {
    count: i64,
    preceded: BTreeMap<ItemId, i64>,
}

impl RowStats {
    pub fn count(&self) -> i64 {
        self.count
    }

    pub fn preceded(&self) -> &BTreeMap<ItemId, i64> {
        &self.preceded
    }
}

/// The sparse matrix `R_j` for one rank.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankMatrix {
    rows: BTreeMap<ItemId, RowStats>,
}

impl RankMatrix {
    pub fn rows(&self) -> &BTreeMap<ItemId, RowStats> {
        &self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn entry(&self, row: ItemId, col: ItemId) -> i64 {
        if row == col {
            return 0;
        }
        self.rows
            .get(&row)
            .map(|r| r.count - r.preceded.get(&col).copied().unwrap_or(0))
            .unwrap_or(0)
    }

    /// Lower-triangle sum after reordering rows and columns by `sigma`:
    /// the sum of `R[i][i']` over pairs where `sigma` puts `i'` ahead of `i`.
    /// Cost is linear in the stored entries, not in `n^2`.
    pub fn l_sigma(&self, sigma: &Permutation) -> i64 {
        self.rows
            .iter()
            .map(|(&item, row)| {
                let r = sigma.rank_of(item);
                let ahead: i64 = row
                    .preceded
                    .iter()
                    .filter(|(&other, _)| sigma.rank_of(other) < r)
                    .map(|(_, &c)| c)
                    .sum();
                row.count * r as i64 - ahead
            })
            .sum()
    }

    /// Number of nonzero entries in the dense matrix over `n` items.
    pub fn nonzero_count(&self, n: usize) -> usize {
        self.rows
            .values()
            .map(|row| {
                let saturated = row.preceded.values().filter(|&&c| c == row.count).count();
                n - 1 - saturated
            })
            .sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<Vec<i64>> {
        (0..n)
            .map(|i| (0..n).map(|k| self.entry(i, k)).collect())
            .collect()
    }

    fn add(&mut self, row: ItemId, ahead: &[ItemId]) {
        let r = self.rows.entry(row).or_default();
        r.count += 1;
        for &prev in ahead {
            *r.preceded.entry(prev).or_insert(0) += 1;
        }
    }

    fn can_remove(&self, row: ItemId, ahead: &[ItemId]) -> bool {
        match self.rows.get(&row) {
            None => false,
            Some(r) => {
                r.count >= 1
                    && ahead
                        .iter()
                        .all(|prev| r.preceded.get(prev).is_some_and(|&c| c >= 1))
            }
        }
    }

    fn remove(&mut self, row: ItemId, ahead: &[ItemId]) {
        let r = self.rows.get_mut(&row).expect("checked by can_remove");
        r.count -= 1;
        for prev in ahead {
            let c = r.preceded.get_mut(prev).expect("checked by can_remove");
            *c -= 1;
            if *c == 0 {
                r.preceded.remove(prev);
            }
        }
        if r.count == 0 {
            debug_assert!(r.preceded.is_empty());
            self.rows.remove(&row);
        }
    }
}

/// Sufficient statistics `R_1..R_tmax` and `N_1..N_tmax` of a set of
/// rankings. Behaves as an additive accumulator: order of insertion does not
/// matter and [`SuffStats::remove`] undoes [`SuffStats::add`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffStats {
    n: usize,
    ranks: Vec<RankMatrix>,
    at_least: Vec<usize>,
    total: usize,
}

impl SuffStats {
    pub fn new(n: usize, t_max: usize) -> Self {
        assert!(n >= 2, "need at least two items");
        assert!(
            (1..n).contains(&t_max),
            "t_max must lie in 1..n, got {t_max} for n = {n}"
        );
        Self {
            n,
            ranks: vec![RankMatrix::default(); t_max],
            at_least: vec![0; t_max],
            total: 0,
        }
    }

    /// Statistics of a single ranking with `t_max` equal to its length.
    pub fn of_ranking(pi: &TopTRanking) -> Self {
        let mut stats = Self::new(pi.n(), pi.len());
        stats.add(pi).expect("dimensions match by construction");
        stats
    }

    pub fn from_rankings<'a, I>(n: usize, t_max: usize, data: I) -> Result<Self, RankingError>
    where
        I: IntoIterator<Item = &'a TopTRanking>,
    {
        let mut stats = Self::new(n, t_max);
        for pi in data {
            stats.add(pi)?;
        }
        Ok(stats)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> usize {
        self.ranks.len()
    }

    /// Total number of rankings `N`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn rank(&self, j: usize) -> &RankMatrix {
        &self.ranks[j]
    }

    pub fn ranks(&self) -> &[RankMatrix] {
        &self.ranks
    }

    /// `N_j`: the number of rankings of length greater than `j` (0-based),
    /// i.e. those that list an item at rank `j`.
    pub fn count_at(&self, j: usize) -> usize {
        self.at_least[j]
    }

    pub fn counts(&self) -> &[usize] {
        &self.at_least
    }

    fn check(&self, pi: &TopTRanking) -> Result<(), RankingError> {
        if pi.n() != self.n {
            return Err(RankingError::DimensionMismatch {
                expected: self.n,
                found: pi.n(),
            });
        }
        if pi.len() > self.t_max() {
            return Err(RankingError::ExceedsMaxLength {
                len: pi.len(),
                t_max: self.t_max(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, pi: &TopTRanking) -> Result<(), RankingError> {
        self.check(pi)?;
        let items = pi.items();
        for (j, &item) in items.iter().enumerate() {
            self.ranks[j].add(item, &items[..j]);
            self.at_least[j] += 1;
        }
        self.total += 1;
        Ok(())
    }

    /// Removes a ranking previously added. Fails without modifying `self`
    /// if that would leave a negative entry.
    pub fn remove(&mut self, pi: &TopTRanking) -> Result<(), RankingError> {
        self.check(pi)?;
        let items = pi.items();
        let ok = self.total >= 1
            && items
                .iter()
                .enumerate()
                .all(|(j, &item)| self.ranks[j].can_remove(item, &items[..j]));
        if !ok {
            return Err(RankingError::NegativeStatistic);
        }
        for (j, &item) in items.iter().enumerate() {
            self.ranks[j].remove(item, &items[..j]);
            self.at_least[j] -= 1;
        }
        self.total -= 1;
        Ok(())
    }

    /// `L_sigma(R_j)` for rank `j`.
    pub fn l_sigma(&self, j: usize, sigma: &Permutation) -> i64 {
        self.ranks[j].l_sigma(sigma)
    }

    /// `S_j(sigma) = L_sigma(R_j)` for every rank.
    pub fn l_sigma_all(&self, sigma: &Permutation) -> Vec<i64> {
        self.ranks.iter().map(|r| r.l_sigma(sigma)).collect()
    }

    /// Every stored entry is nonnegative and never exceeds its row count.
    pub fn is_consistent(&self) -> bool {
        self.ranks.iter().all(|m| {
            m.rows
                .values()
                .all(|r| r.count > 0 && r.preceded.values().all(|&c| c > 0 && c <= r.count))
        }) && self.at_least.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Draws a uniformly random top-t ranking.
pub fn random_ranking<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> TopTRanking {
    Permutation::random(n, rng).prefix(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The code definition read literally: count the items `l` that `pi` does not rank
    /// ahead of its `j`-th item but that `sigma` ranks ahead of it.
    fn brute_code(pi: &[usize], sigma: &[usize]) -> Vec<usize> {
        let pos = |order: &[usize], x: usize| order.iter().position(|&y| y == x);
        (0..pi.len())
            .map(|j| {
                let target = pi[j];
                let st = pos(sigma, target).unwrap();
                sigma
                    .iter()
                    .filter(|&&l| {
                        l != target && pos(&pi[..j], l).is_none() && pos(sigma, l).unwrap() < st
                    })
                    .count()
            })
            .collect()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == used.len() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    fn rk(v: &[usize], n: usize) -> TopTRanking {
        TopTRanking::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn code_examples() {
        // items 1..4 written 0-based
        let sigma = Permutation::identity(4);
        let full = rk(&[2, 0, 3, 1], 4);
        assert_eq!(code(&full, &sigma).values(), &[2, 0, 1]);
        assert_eq!(brute_code(&[2, 0, 3], &[0, 1, 2, 3]), vec![2, 0, 1]);
        let top2 = rk(&[2, 0], 4);
        assert_eq!(code(&top2, &sigma).values(), &[2, 0]);
        let same = rk(&[3, 1, 0, 2], 4);
        assert_eq!(code(&same, &perm(&[3, 1, 0, 2])).values(), &[0, 0, 0]);
    }

    #[test]
    fn build_from_code_examples() {
        let sigma = Permutation::identity(4);
        let s = CodeVector::new(vec![2, 0, 1], 4).unwrap();
        assert_eq!(build_from_code(&s, &sigma).items(), &[2, 0, 3]);
        let sigma = perm(&[4, 2, 0, 1, 3]);
        let zero = CodeVector::new(vec![0, 0], 5).unwrap();
        assert_eq!(build_from_code(&zero, &sigma).items(), &[4, 2]);
    }

    #[test]
    fn code_out_of_range_rejected() {
        assert_eq!(
            CodeVector::new(vec![3, 3], 4),
            Err(RankingError::CodeOutOfRange {
                rank: 1,
                value: 3,
                max: 2
            })
        );
    }

    #[test]
    fn exhaustive_round_trip_and_range() {
        for n in 2..=5 {
            let perms = permutations(n);
            for p in &perms {
                for t in 1..n {
                    let pi = rk(&p[..t], n);
                    for q in &perms {
                        let sigma = perm(q);
                        let s = code(&pi, &sigma);
                        assert_eq!(s.values(), brute_code(pi.items(), q).as_slice());
                        for (j, &v) in s.values().iter().enumerate() {
                            assert!(v <= n - 1 - j);
                        }
                        assert_eq!(build_from_code(&s, &sigma), pi);
                    }
                }
            }
        }
    }

    #[test]
    fn single_ranking_matrix() {
        // n = 3, pi = (item 1), written 0-based
        let stats = SuffStats::of_ranking(&rk(&[1], 3));
        let dense = stats.rank(0).to_dense(3);
        assert_eq!(dense, vec![vec![0, 0, 0], vec![1, 0, 1], vec![0, 0, 0]]);
        assert_eq!(stats.counts(), &[1]);
    }

    #[test]
    fn one_row_per_rank_with_bounded_sparsity() {
        let pi = rk(&[3, 0, 4, 1], 6);
        let stats = SuffStats::of_ranking(&pi);
        for j in 0..pi.len() {
            let m = stats.rank(j);
            assert_eq!(m.rows().len(), 1);
            assert!(m.nonzero_count(6) <= 5);
            let dense = m.to_dense(6);
            for (i, row) in dense.iter().enumerate() {
                assert_eq!(row[i], 0);
                for (k, &v) in row.iter().enumerate() {
                    let expect = i == pi.items()[j] && k != i && !pi.items()[..j].contains(&k);
                    assert_eq!(v, expect as i64, "R_{j}[{i}][{k}]");
                }
            }
        }
    }

    #[test]
    fn l_sigma_matches_code_exhaustively() {
        for n in 2..=5 {
            let perms = permutations(n);
            for p in &perms {
                for t in 1..n {
                    let pi = rk(&p[..t], n);
                    let stats = SuffStats::of_ranking(&pi);
                    for q in &perms {
                        let sigma = perm(q);
                        let s = code(&pi, &sigma);
                        let l: Vec<i64> = stats.l_sigma_all(&sigma);
                        let expect: Vec<i64> = s.values().iter().map(|&v| v as i64).collect();
                        assert_eq!(l, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn l_sigma_of_zero_and_sum() {
        let sigma = perm(&[2, 0, 1, 4, 3]);
        assert_eq!(RankMatrix::default().l_sigma(&sigma), 0);
        let a = rk(&[1, 3, 0], 5);
        let b = rk(&[4, 0], 5);
        let stats = SuffStats::from_rankings(5, 3, [&a, &b]).unwrap();
        let (ca, cb) = (code(&a, &sigma), code(&b, &sigma));
        for j in 0..3 {
            let expect = ca.values()[j] + cb.values().get(j).copied().unwrap_or(0);
            assert_eq!(stats.l_sigma(j, &sigma), expect as i64);
        }
    }

    #[test]
    fn accumulation_matches_elementwise_sum() {
        let a = rk(&[1, 3, 0], 5);
        let b = rk(&[3, 1, 2], 5);
        let both = SuffStats::from_rankings(5, 3, [&a, &b]).unwrap();
        let sa = SuffStats::of_ranking(&a);
        let sb = SuffStats::of_ranking(&b);
        for j in 0..3 {
            let da = sa.rank(j).to_dense(5);
            let db = sb.rank(j).to_dense(5);
            let d = both.rank(j).to_dense(5);
            for i in 0..5 {
                for k in 0..5 {
                    assert_eq!(d[i][k], da[i][k] + db[i][k]);
                }
            }
        }
    }

    #[test]
    fn counts_by_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_ranking(8, 3, &mut rng);
        let b = random_ranking(8, 5, &mut rng);
        let stats = SuffStats::from_rankings(8, 5, [&a, &b]).unwrap();
        assert_eq!(stats.counts(), &[2, 2, 2, 1, 1]);
        assert_eq!(stats.total(), 2);
        assert!(stats.rank(4).rows().len() == 1);
    }

    #[test]
    fn remove_never_added_is_rejected() {
        let mut stats = SuffStats::new(5, 2);
        stats.add(&rk(&[0, 1], 5)).unwrap();
        let before = stats.clone();
        assert_eq!(
            stats.remove(&rk(&[1, 0], 5)),
            Err(RankingError::NegativeStatistic)
        );
        assert_eq!(stats, before);
        assert!(matches!(
            stats.add(&rk(&[0, 1, 2], 5)),
            Err(RankingError::ExceedsMaxLength { .. })
        ));
        assert!(matches!(
            stats.add(&rk(&[0], 6)),
            Err(RankingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ranking_validation() {
        assert_eq!(TopTRanking::new(vec![], 3), Err(RankingError::Empty));
        assert_eq!(
            TopTRanking::new(vec![0, 0], 3),
            Err(RankingError::DuplicateItem(0))
        );
        assert_eq!(
            TopTRanking::new(vec![3], 3),
            Err(RankingError::ItemOutOfRange { item: 3, n: 3 })
        );
        // full rankings drop their determined last item
        assert_eq!(rk(&[2, 0, 1], 3).items(), &[2, 0]);
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn add_remove_is_identity_and_order_free(
            seed in any::<u64>(),
            lens in proptest::collection::vec(1usize..7, 1..12),
        ) {
            let n = 7;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<TopTRanking> = lens.iter().map(|&t| random_ranking(n, t, &mut rng)).collect();
            let t_max = 6;
            let forward = SuffStats::from_rankings(n, t_max, data.iter()).unwrap();
            let backward = SuffStats::from_rankings(n, t_max, data.iter().rev()).unwrap();
            prop_assert_eq!(&forward, &backward);
            prop_assert!(forward.is_consistent());
            let mut stats = forward.clone();
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            for &k in &order {
                stats.remove(&data[k]).unwrap();
                prop_assert!(stats.is_consistent());
            }
            prop_assert_eq!(stats, SuffStats::new(n, t_max));
        }
    }
}
