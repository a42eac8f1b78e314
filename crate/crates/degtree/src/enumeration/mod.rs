//! Exact enumeration: height laws of uniform trees in `T_d`, stochastic
//! comparison, equivalence classes under relocation of the children of
//! labels 1 and 2, the eggs-in-one-basket oracle and plane trees.

mod eggs;
mod equiv;
mod plane;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::codec::{self, CodeIter, CodecError};
use crate::trees::{DegreeSequence, LabeledRootedTree};

pub use eggs::{eggs_oracle, EggsVariant, EggsVerdict};
pub use equiv::{
    class_height_tables, class_masses, class_probability_table, companion, equiv_class_key, ClassTable,
    EquivClassKey,
};
pub use plane::{
    binary_height_counts, bienayme_height_law, bienayme_labeled_law, catalan, enumerate_plane_trees, PlaneTree,
    PLANE_TREE_LIMIT,
};

pub const DEFAULT_BUDGET: u64 = 10_000_000;
const SHARD: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("{needed} objects exceed the enumeration budget {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("companion sequence needs d_2 >= 1")]
    InvalidCompanion,
    #[error("parameter order: {0}")]
    ParameterOrder(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Exact law of a height, as counts over a finite population.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeightDistribution {
    counts: BTreeMap<usize, BigUint>,
    total: BigUint,
}

impl HeightDistribution {
    pub fn from_heights(heights: impl IntoIterator<Item = usize>) -> Self {
        let mut h = Self::default();
        for x in heights {
            h.add(x, BigUint::from(1u32));
        }
        h
    }

    pub fn from_counts(counts: BTreeMap<usize, BigUint>) -> Self {
        let total = counts.values().sum();
        Self { counts, total }
    }

    pub fn add(&mut self, height: usize, count: BigUint) {
        self.total += &count;
        *self.counts.entry(height).or_default() += count;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for (&h, c) in &other.counts {
            self.add(h, c.clone());
        }
        self
    }

    pub fn counts(&self) -> &BTreeMap<usize, BigUint> {
        &self.counts
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn probability(&self, h: usize) -> BigRational {
        let c = self.counts.get(&h).cloned().unwrap_or_default();
        BigRational::new(c.into(), self.total.clone().into())
    }

    /// Count of outcomes at most `h`.
    pub fn cumulative(&self, h: usize) -> BigUint {
        self.counts.range(..=h).map(|(_, c)| c).sum()
    }

    pub fn cdf(&self, h: usize) -> BigRational {
        BigRational::new(self.cumulative(h).into(), self.total.clone().into())
    }

    pub fn mean(&self) -> f64 {
        let s: BigUint = self.counts.iter().map(|(&h, c)| c * h).sum();
        s.to_f64().unwrap_or(f64::NAN) / self.total.to_f64().unwrap_or(f64::NAN)
    }

    /// `{"height": "count"}` with counts as decimal strings.
    pub fn to_json(&self) -> Value {
        Value::Object(
            self.counts
                .iter()
                .map(|(h, c)| (h.to_string(), Value::String(c.to_string())))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// The first law is stochastically larger.
    ADominates,
    BDominates,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub relation: Relation,
    pub strict: bool,
}

/// Compares two laws by their CDFs in exact arithmetic.
pub fn stochastic_compare(a: &HeightDistribution, b: &HeightDistribution) -> Comparison {
    let mut a_below = false;
    let mut b_below = false;
    let mut points: Vec<usize> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    points.sort_unstable();
    points.dedup();
    for h in points {
        let fa = a.cumulative(h) * &b.total;
        let fb = b.cumulative(h) * &a.total;
        if fa < fb {
            a_below = true;
        } else if fb < fa {
            b_below = true;
        }
    }
    let relation = match (a_below, b_below) {
        (false, false) => Relation::Equal,
        (true, false) => Relation::ADominates,
        (false, true) => Relation::BDominates,
        (true, true) => Relation::Incomparable,
    };
    Comparison {
        relation,
        strict: matches!(relation, Relation::ADominates | Relation::BDominates),
    }
}

/// True when `small` is stochastically at most `large`.
pub fn is_dominated_by(small: &HeightDistribution, large: &HeightDistribution) -> bool {
    matches!(
        stochastic_compare(large, small).relation,
        Relation::ADominates | Relation::Equal
    )
}

fn check_budget(d: &DegreeSequence, budget: u64) -> Result<u64, EnumError> {
    let total = codec::count_trees(d);
    match total.to_u64() {
        Some(t) if t <= budget => Ok(t),
        _ => Err(EnumError::BudgetExceeded {
            needed: total.to_string(),
            budget,
        }),
    }
}

/// Folds over every tree of `T_d` (any `d`) in parallel rank shards.
pub fn fold_trees<T, F, M>(
    d: &DegreeSequence,
    budget: u64,
    init: impl Fn() -> T + Sync,
    visit: F,
    merge: M,
) -> Result<T, EnumError>
where
    T: Send,
    F: Fn(&mut T, LabeledRootedTree) + Sync,
    M: Fn(T, T) -> T + Sync,
{
    let total = check_budget(d, budget)?;
    let (dc, relabel) = codec::compress(d);
    let back = (!d.is_compressed()).then(|| codec::invert_permutation(&relabel));
    let shards = total.div_ceil(SHARD);
    let parts: Vec<T> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut acc = init();
            for code in CodeIter::range(&dc, s * SHARD, (s + 1) * SHARD).expect("compressed") {
                let t = codec::tree_from_sequence(&code);
                let t = match &back {
                    Some(b) => t.relabel(b),
                    None => t,
                };
                visit(&mut acc, t);
            }
            acc
        })
        .collect();
    Ok(parts.into_iter().fold(init(), merge))
}

/// Every tree of `T_d`, in lexicographic code order.
pub fn all_trees(d: &DegreeSequence, budget: u64) -> Result<Vec<LabeledRootedTree>, EnumError> {
    fold_trees(
        d,
        budget,
        Vec::new,
        |v, t| v.push(t),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

pub fn exact_height_distribution(d: &DegreeSequence) -> Result<HeightDistribution, EnumError> {
    exact_height_distribution_with_budget(d, DEFAULT_BUDGET)
}

pub fn exact_height_distribution_with_budget(
    d: &DegreeSequence,
    budget: u64,
) -> Result<HeightDistribution, EnumError> {
    // Heights depend only on the multiset, so count over the compressed form.
    let (dc, _) = codec::compress(d);
    let counts = fold_trees(
        &dc,
        budget,
        BTreeMap::<usize, u64>::new,
        |m, t| *m.entry(t.height()).or_default() += 1,
        |mut a, b| {
            for (h, c) in b {
                *a.entry(h).or_default() += c;
            }
            a
        },
    )?;
    Ok(HeightDistribution::from_counts(
        counts.into_iter().map(|(h, c)| (h, BigUint::from(c))).collect(),
    ))
}

/// Every degree sequence of length `n` with sum `n - 1`, in lexicographic order.
pub fn all_degree_sequences(n: usize) -> Vec<DegreeSequence> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<DegreeSequence>) {
        if cur.len() == n {
            if left == 0 {
                out.push(DegreeSequence::new(cur.clone()).expect("sum matches"));
            }
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(n, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n - 1, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Every compressed degree sequence of length `n`: compositions of `n - 1`
/// padded with zeros.
pub fn compressed_degree_sequences(n: usize) -> Vec<DegreeSequence> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<DegreeSequence>) {
        if left == 0 {
            let mut d = cur.clone();
            d.resize(n, 0);
            out.push(DegreeSequence::new(d).expect("sum matches"));
            return;
        }
        for x in 1..=left {
            cur.push(x);
            rec(n, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n - 1, &mut Vec::new(), &mut out);
    out
}

/// Partitions of `n - 1` as decreasing degree sequences of length `n`.
pub fn partition_degree_sequences(n: usize) -> Vec<DegreeSequence> {
    fn rec(n: usize, left: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<DegreeSequence>) {
        if left == 0 {
            let mut d = cur.clone();
            d.resize(n, 0);
            out.push(DegreeSequence::new(d).expect("sum matches"));
            return;
        }
        for x in (1..=left.min(cap)).rev() {
            cur.push(x);
            rec(n, left - x, x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n - 1, n - 1, &mut Vec::new(), &mut out);
    out
}

pub fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn is_zero(x: &BigRational) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    fn ds(v: &[usize]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    fn hd(pairs: &[(usize, u32)]) -> HeightDistribution {
        HeightDistribution::from_counts(pairs.iter().map(|&(h, c)| (h, BigUint::from(c))).collect())
    }

    // Independent oracle: every parent array on n labels, kept if it is a tree with degree sequence d.
    fn brute_force_trees(d: &DegreeSequence) -> HashSet<LabeledRootedTree> {
        let n = d.len();
        let mut out = HashSet::new();
        let mut parent = vec![0usize; n];
        fn rec(
            i: usize,
            n: usize,
            parent: &mut Vec<usize>,
            d: &DegreeSequence,
            out: &mut HashSet<LabeledRootedTree>,
        ) {
            if i == n {
                let roots: Vec<_> = (1..=n).filter(|&v| parent[v - 1] == 0).collect();
                if roots.len() == 1 {
                    if let Ok(t) = LabeledRootedTree::from_parents(roots[0], parent.clone()) {
                        if &t.degree_sequence() == d {
                            out.insert(t);
                        }
                    }
                }
                return;
            }
            for p in 0..=n {
                if p == i + 1 || (p > 0 && d.degree(p) == 0) {
                    continue;
                }
                parent[i] = p;
                rec(i + 1, n, parent, d, out);
            }
        }
        rec(0, n, &mut parent, d, &mut out);
        out
    }

    fn bfs_height(t: &LabeledRootedTree) -> usize {
        let ch = t.children();
        let mut q = VecDeque::from([(t.root(), 0)]);
        let mut best = 0;
        while let Some((v, h)) = q.pop_front() {
            best = best.max(h);
            for &c in &ch[v - 1] {
                q.push_back((c, h + 1));
            }
        }
        best
    }

    #[test]
    fn height_examples() {
        assert_eq!(exact_height_distribution(&ds(&[1, 0])).unwrap(), hd(&[(1, 1)]));
        assert_eq!(exact_height_distribution(&ds(&[2, 2, 0, 0, 0])).unwrap(), hd(&[(2, 6)]));
        assert_eq!(exact_height_distribution(&ds(&[1, 1, 0])).unwrap(), hd(&[(2, 2)]));
        assert_eq!(
            exact_height_distribution(&ds(&[2, 2, 0, 0, 0])).unwrap().to_json().to_string(),
            r#"{"2":"6"}"#
        );
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for n in 1..=5 {
            for d in all_degree_sequences(n) {
                let got: HashSet<_> = all_trees(&d, DEFAULT_BUDGET).unwrap().into_iter().collect();
                assert_eq!(got, brute_force_trees(&d), "d = {d}");
                let want = HeightDistribution::from_heights(got.iter().map(bfs_height));
                assert_eq!(exact_height_distribution(&d).unwrap(), want);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = ds(&[3, 3, 3, 0, 0, 0, 0, 0, 0, 0]);
        assert!(matches!(
            exact_height_distribution_with_budget(&d, 100),
            Err(EnumError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn compare_examples() {
        let a = hd(&[(1, 3), (2, 1)]);
        assert_eq!(stochastic_compare(&a, &a).relation, Relation::Equal);
        let c = stochastic_compare(&hd(&[(1, 1)]), &hd(&[(2, 1)]));
        assert_eq!(c.relation, Relation::BDominates);
        assert!(c.strict);
        let x = hd(&[(1, 1), (3, 1)]);
        let y = hd(&[(2, 1)]);
        assert_eq!(stochastic_compare(&x, &y).relation, Relation::Incomparable);
        let skewed = exact_height_distribution(&ds(&[3, 1, 0, 0, 0])).unwrap();
        let even = exact_height_distribution(&ds(&[2, 2, 0, 0, 0])).unwrap();
        assert!(is_dominated_by(&skewed, &even));
    }

    #[test]
    fn sequence_listings() {
        assert_eq!(all_degree_sequences(3).len(), 6);
        assert_eq!(compressed_degree_sequences(4).len(), 4);
        assert_eq!(partition_degree_sequences(7).len(), 11);
        let all5 = all_degree_sequences(5);
        let trees: u64 = all5.iter().map(|d| codec::count_trees(d).to_u64().unwrap()).sum();
        // Cayley: n^{n-1} rooted labeled trees.
        assert_eq!(trees, 625);
    }

    #[test]
    fn first_nonleaf_is_degree_biased() {
        // Over uniform codes, P(i(1) = i) = d_i / (n - 1).
        for d in [ds(&[1, 3, 2, 0, 0, 0, 0]), ds(&[2, 1, 1, 2, 0, 0, 0])] {
            let mut hits = vec![0u64; d.len()];
            let mut total = 0u64;
            for c in CodeIter::new(&d).unwrap() {
                hits[codec::construction_trace(&c).nonleaf_order[0] - 1] += 1;
                total += 1;
            }
            for v in 1..=d.len() {
                assert_eq!(hits[v - 1] * (d.len() as u64 - 1), d.degree(v) as u64 * total);
            }
        }
    }
}
