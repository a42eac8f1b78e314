//! Bijection between codes in `S_d` and trees in `T_d`.
//!
//! A code for a compressed degree sequence `d` is a sequence `v_1..v_{n-1}`
//! over `[n]` in which `i` occurs exactly `d_i` times. Position `k >= 2` is a
//! repeat when `v_k` already occurred earlier. Repeats split the code into
//! paths, each closed off by the next unused leaf label `m + 1, m + 2, ...`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::trees::{DegreeSequence, Label, LabeledRootedTree, PartialTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed code: {0}")]
    MalformedCode(String),
    #[error("degree sequence is not compressed")]
    NotCompressed,
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Moves the non-zero entries to the front, keeping relative order.
///
/// Returns the compressed sequence and `relabel`, where `relabel[old - 1]` is
/// the new label of `old`.
pub fn compress(d: &DegreeSequence) -> (DegreeSequence, Vec<Label>) {
    let n = d.len();
    let mut relabel = vec![0; n];
    let mut out = Vec::with_capacity(n);
    for (i, &x) in d.as_slice().iter().enumerate() {
        if x > 0 {
            out.push(x);
            relabel[i] = out.len();
        }
    }
    let m = out.len();
    let mut next = m;
    for (i, &x) in d.as_slice().iter().enumerate() {
        if x == 0 {
            next += 1;
            relabel[i] = next;
        }
    }
    out.resize(n, 0);
    (DegreeSequence::new(out).expect("permutation keeps the sum"), relabel)
}

pub fn invert_permutation(p: &[Label]) -> Vec<Label> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x - 1] = i + 1;
    }
    inv
}

/// An element of `S_d` for a compressed `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceCode {
    values: Vec<Label>,
    degree_seq: DegreeSequence,
}

impl SequenceCode {
    /// Reads the degree sequence off the multiplicities; `n = values.len() + 1`.
    pub fn new(values: Vec<Label>) -> Result<Self, CodecError> {
        let d = multiplicities(&values)?;
        if !d.is_compressed() {
            return Err(CodecError::NotCompressed);
        }
        Ok(Self {
            values,
            degree_seq: d,
        })
    }

    /// Checks that `values` lies in `S_d`.
    pub fn with_degrees(values: Vec<Label>, d: &DegreeSequence) -> Result<Self, CodecError> {
        if !d.is_compressed() {
            return Err(CodecError::NotCompressed);
        }
        if values.len() + 1 != d.len() {
            return Err(CodecError::MalformedCode(format!(
                "length {} does not match n - 1 = {}",
                values.len(),
                d.len() - 1
            )));
        }
        let got = multiplicities(&values)?;
        if &got != d {
            return Err(CodecError::MalformedCode(format!(
                "multiplicities {got} differ from {d}"
            )));
        }
        Ok(Self {
            values,
            degree_seq: got,
        })
    }

    pub(crate) fn from_parts_unchecked(values: Vec<Label>, degree_seq: DegreeSequence) -> Self {
        Self { values, degree_seq }
    }

    pub fn values(&self) -> &[Label] {
        &self.values
    }

    pub fn degree_seq(&self) -> &DegreeSequence {
        &self.degree_seq
    }

    pub fn n(&self) -> usize {
        self.degree_seq.len()
    }
}

fn multiplicities(values: &[Label]) -> Result<DegreeSequence, CodecError> {
    let n = values.len() + 1;
    let mut d = vec![0; n];
    for &v in values {
        if v == 0 || v > n {
            return Err(CodecError::MalformedCode(format!(
                "value {v} outside 1..={n}"
            )));
        }
        d[v - 1] += 1;
    }
    Ok(DegreeSequence::new(d)?)
}

/// Positions `k` (1-based) at which `v_k` repeats an earlier value.
fn repeat_flags(values: &[Label], n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    values
        .iter()
        .map(|&v| std::mem::replace(&mut seen[v - 1], true))
        .collect()
}

pub fn tree_from_sequence(code: &SequenceCode) -> LabeledRootedTree {
    let v = &code.values;
    let n = code.n();
    if n == 1 {
        return LabeledRootedTree::single();
    }
    let m = code.degree_seq.nonleaf_count();
    let repeat = repeat_flags(v, n);
    let mut parent = vec![0; n];
    let mut leaf = m;
    for k in 0..n - 1 {
        if k + 1 < n - 1 && !repeat[k + 1] {
            parent[v[k + 1] - 1] = v[k];
        } else {
            leaf += 1;
            parent[leaf - 1] = v[k];
        }
    }
    LabeledRootedTree::from_parents_unchecked(v[0], parent)
}

pub fn sequence_from_tree(t: &LabeledRootedTree) -> Result<SequenceCode, CodecError> {
    let d = t.degree_sequence();
    if !d.is_compressed() {
        return Err(CodecError::NotCompressed);
    }
    let n = t.n();
    let m = d.nonleaf_count();
    let mut in_tree = vec![false; n];
    in_tree[t.root() - 1] = true;
    let mut values = Vec::with_capacity(n.saturating_sub(1));
    let mut path = Vec::new();
    for leaf in m + 1..=n {
        path.clear();
        let mut u = leaf;
        while !in_tree[u - 1] {
            in_tree[u - 1] = true;
            path.push(u);
            u = t.parent(u).expect("the root is always in the tree");
        }
        path.push(u);
        // path runs leaf -> ... -> attachment point; drop the leaf.
        values.extend(path[1..].iter().rev());
    }
    Ok(SequenceCode {
        values,
        degree_seq: d,
    })
}

/// Decodes any sequence over `[n]`, compressing its degree sequence first and
/// mapping labels back afterwards.
pub fn decode_any(values: &[Label]) -> Result<LabeledRootedTree, CodecError> {
    let d = multiplicities(values)?;
    let (dc, relabel) = compress(&d);
    let code = SequenceCode {
        values: values.iter().map(|&x| relabel[x - 1]).collect(),
        degree_seq: dc,
    };
    Ok(tree_from_sequence(&code).relabel(&invert_permutation(&relabel)))
}

/// Inverse of [`decode_any`].
pub fn encode_any(t: &LabeledRootedTree) -> Vec<Label> {
    let (_, relabel) = compress(&t.degree_sequence());
    let code = sequence_from_tree(&t.relabel(&relabel)).expect("relabelled tree is compressed");
    let back = invert_permutation(&relabel);
    code.values.iter().map(|&x| back[x - 1]).collect()
}

/// First-appearance bookkeeping for a code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionTrace {
    /// `w[k - 1]` is the vertex added at step `k`.
    pub w: Vec<Label>,
    /// `pi[v - 1]` is the step at which `v` is added.
    pub pi: Vec<usize>,
    /// Non-leaf labels in order of first appearance.
    pub nonleaf_order: Vec<Label>,
    /// Repeat positions `j(1) < ... < j(n_0 - 1)`.
    pub repeat_locations: Vec<usize>,
    /// `prefix_sums[k - 1] = sum_{j <= k} (d_{i(j)} - 1)`.
    pub prefix_sums: Vec<usize>,
    pub leaf_count: usize,
}

pub fn construction_trace(code: &SequenceCode) -> ConstructionTrace {
    let n = code.n();
    let d = &code.degree_seq;
    let m = d.nonleaf_count();
    let repeat = repeat_flags(&code.values, n);
    let mut w = Vec::with_capacity(n);
    let mut repeat_locations = Vec::new();
    let mut nonleaf_order = Vec::with_capacity(m);
    let mut leaf = m;
    for (k, &v) in code.values.iter().enumerate() {
        if repeat[k] {
            leaf += 1;
            w.push(leaf);
            repeat_locations.push(k + 1);
        } else {
            w.push(v);
            nonleaf_order.push(v);
        }
    }
    w.push(leaf + 1);
    let pi = invert_permutation(&w);
    let mut acc = 0;
    let prefix_sums = nonleaf_order
        .iter()
        .map(|&i| {
            acc += d.degree(i) - 1;
            acc
        })
        .collect();
    ConstructionTrace {
        w,
        pi,
        nonleaf_order,
        repeat_locations,
        prefix_sums,
        leaf_count: n - m,
    }
}

impl ConstructionTrace {
    /// `k(x)`: the least `k >= 1` with `prefix_sums[k - 1] >= ceil(x)`.
    pub fn k_of(&self, x: f64) -> Result<usize, CodecError> {
        let top = self.leaf_count.saturating_sub(1) as f64;
        if self.nonleaf_order.is_empty() || !(0.0..=top).contains(&x) {
            return Err(CodecError::OutOfRange(format!("x = {x} outside [0, {top}]")));
        }
        let c = x.ceil() as usize;
        let k = self.prefix_sums.partition_point(|&s| s < c);
        Ok(k + 1)
    }

    /// `rho(x) = pi(i(k(x)))`.
    pub fn rho(&self, x: f64) -> Result<usize, CodecError> {
        let k = self.k_of(x)?;
        Ok(self.pi[self.nonleaf_order[k - 1] - 1])
    }
}

/// The subtree spanned by the first `k` vertices in construction order.
pub fn grow_prefix(code: &SequenceCode, k: usize) -> Result<PartialTree, CodecError> {
    let n = code.n();
    if k == 0 || k > n {
        return Err(CodecError::OutOfRange(format!("k = {k} outside 1..={n}")));
    }
    let trace = construction_trace(code);
    let t = tree_from_sequence(code);
    Ok(PartialTree::restrict(&t, &trace.w[..k])?)
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

/// `|T_d| = (n - 1)! / prod d_i!`.
pub fn count_trees(d: &DegreeSequence) -> BigUint {
    let denom = d
        .as_slice()
        .iter()
        .fold(BigUint::one(), |acc, &x| acc * factorial(x));
    factorial(d.len() - 1) / denom
}

/// Number of distinct arrangements of a multiset given by `counts[value - 1]`.
fn arrangements(counts: &[usize]) -> BigUint {
    let total: usize = counts.iter().sum();
    let denom = counts
        .iter()
        .fold(BigUint::one(), |acc, &x| acc * factorial(x));
    factorial(total) / denom
}

/// Lexicographic rank of a code within `S_d`.
pub fn rank(code: &SequenceCode) -> BigUint {
    let mut counts = code.degree_seq.as_slice().to_vec();
    let mut r = BigUint::zero();
    for &v in &code.values {
        for u in 1..v {
            if counts[u - 1] > 0 {
                counts[u - 1] -= 1;
                r += arrangements(&counts);
                counts[u - 1] += 1;
            }
        }
        counts[v - 1] -= 1;
    }
    r
}

/// The code of lexicographic rank `r` in `S_d`.
pub fn unrank(d: &DegreeSequence, r: &BigUint) -> Result<SequenceCode, CodecError> {
    if !d.is_compressed() {
        return Err(CodecError::NotCompressed);
    }
    if r >= &count_trees(d) {
        return Err(CodecError::OutOfRange(format!("rank {r} >= |S_d|")));
    }
    let mut counts = d.as_slice().to_vec();
    let mut r = r.clone();
    let mut values = Vec::with_capacity(d.len() - 1);
    for _ in 0..d.len() - 1 {
        for u in 1..=counts.len() {
            if counts[u - 1] == 0 {
                continue;
            }
            counts[u - 1] -= 1;
            let block = arrangements(&counts);
            if r < block {
                values.push(u);
                break;
            }
            r -= block;
            counts[u - 1] += 1;
        }
    }
    Ok(SequenceCode {
        values,
        degree_seq: d.clone(),
    })
}

/// Lexicographic iterator over a rank range of `S_d`.
#[derive(Debug, Clone)]
pub struct CodeIter {
    degree_seq: DegreeSequence,
    current: Vec<Label>,
    remaining: u64,
}

impl CodeIter {
    /// All of `S_d`.
    pub fn new(d: &DegreeSequence) -> Result<Self, CodecError> {
        let total = count_trees(d).to_u64().unwrap_or(u64::MAX);
        Self::range(d, 0, total)
    }

    /// Ranks `start..end`, clipped to `|S_d|`.
    pub fn range(d: &DegreeSequence, start: u64, end: u64) -> Result<Self, CodecError> {
        if !d.is_compressed() {
            return Err(CodecError::NotCompressed);
        }
        let total = count_trees(d).to_u64().unwrap_or(u64::MAX);
        let end = end.min(total);
        if start >= end {
            return Ok(Self {
                degree_seq: d.clone(),
                current: Vec::new(),
                remaining: 0,
            });
        }
        let first = unrank(d, &BigUint::from(start))?;
        Ok(Self {
            degree_seq: d.clone(),
            current: first.values,
            remaining: end - start,
        })
    }
}

impl Iterator for CodeIter {
    type Item = SequenceCode;

    fn next(&mut self) -> Option<SequenceCode> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = SequenceCode {
            values: self.current.clone(),
            degree_seq: self.degree_seq.clone(),
        };
        if self.remaining > 0 {
            next_permutation(&mut self.current);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

fn next_permutation(v: &mut [Label]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn ds(v: &[usize]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    fn code(v: &[usize]) -> SequenceCode {
        SequenceCode::new(v.to_vec()).unwrap()
    }

    // Root 4, then 3, a repeat of 3, then 1 and 2.
    fn sample_code() -> SequenceCode {
        SequenceCode::with_degrees(vec![4, 3, 3, 1, 2, 1], &ds(&[2, 1, 2, 1, 0, 0, 0])).unwrap()
    }

    #[test]
    fn compress_examples() {
        let (dc, map) = compress(&ds(&[1, 0, 3, 0, 0, 2, 0]));
        assert_eq!(dc, ds(&[1, 3, 2, 0, 0, 0, 0]));
        assert_eq!(map, vec![1, 4, 2, 5, 6, 3, 7]);
        let d = ds(&[2, 1, 0, 0]);
        assert_eq!(compress(&d), (d.clone(), vec![1, 2, 3, 4]));
        let (dc, map) = compress(&ds(&[0, 2, 0, 1]));
        assert_eq!(dc, ds(&[2, 1, 0, 0]));
        assert_eq!(map, vec![3, 1, 4, 2]);
    }

    #[test]
    fn decode_small() {
        let t = tree_from_sequence(&code(&[1]));
        assert_eq!(t.to_string(), "1;0,1");
        assert_eq!(t.height(), 1);
        assert_eq!(sequence_from_tree(&t).unwrap().values(), &[1]);
    }

    #[test]
    fn decode_rejects_malformed() {
        assert!(matches!(
            SequenceCode::new(vec![1, 4]),
            Err(CodecError::MalformedCode(_))
        ));
        assert_eq!(SequenceCode::new(vec![2]), Err(CodecError::NotCompressed));
        assert!(SequenceCode::with_degrees(vec![1, 1], &ds(&[1, 1, 0])).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(count_trees(&ds(&[1, 3, 2, 0, 0, 0, 0])), BigUint::from(60u32));
        assert_eq!(count_trees(&ds(&[2, 0, 0])), BigUint::from(1u32));
        assert_eq!(count_trees(&ds(&[2, 2, 0, 0, 0])), BigUint::from(6u32));
    }

    #[test]
    fn sixty_distinct_trees() {
        let d = ds(&[1, 3, 2, 0, 0, 0, 0]);
        let trees: HashSet<_> = CodeIter::new(&d)
            .unwrap()
            .map(|c| tree_from_sequence(&c))
            .collect();
        assert_eq!(trees.len(), 60);
        assert!(trees.iter().all(|t| t.degree_sequence() == d));
    }

    #[test]
    fn sample_trace() {
        let c = sample_code();
        let tr = construction_trace(&c);
        assert_eq!(tr.w, vec![4, 3, 5, 1, 2, 6, 7]);
        assert_eq!(tr.pi[2 - 1], 5);
        assert_eq!(tr.nonleaf_order, vec![4, 3, 1, 2]);
        assert_eq!(tr.repeat_locations, vec![3, 6]);
        assert_eq!(tr.k_of(2.0).unwrap(), 3);
        assert_eq!(tr.rho(2.0).unwrap(), 4);
        let t4 = grow_prefix(&c, 4).unwrap();
        assert_eq!(t4.vertices(), vec![1, 3, 4, 5]);
        let t5 = grow_prefix(&c, 5).unwrap();
        assert!(!t4.contains(2) && t5.contains(2));
        // The repeats of the recovered code sit at the same steps.
        let t = tree_from_sequence(&c);
        assert_eq!(t.to_string(), "4;3,1,4,0,3,2,1");
        assert_eq!(sequence_from_tree(&t).unwrap(), c);
    }

    #[test]
    fn trivial_trace() {
        let tr = construction_trace(&code(&[1]));
        assert_eq!(tr.w, vec![1, 2]);
        assert_eq!(tr.pi, vec![1, 2]);
        assert_eq!(tr.nonleaf_order, vec![1]);
        assert_eq!(tr.rho(0.0).unwrap(), 1);
        assert!(tr.rho(0.5).is_err());
    }

    #[test]
    fn prefix_extremes() {
        let c = sample_code();
        assert_eq!(grow_prefix(&c, 1).unwrap().vertices(), vec![4]);
        assert_eq!(grow_prefix(&c, 7).unwrap().size(), 7);
        assert!(grow_prefix(&c, 0).is_err());
        assert!(grow_prefix(&c, 8).is_err());
    }

    #[test]
    fn lexicographic_order_and_rank() {
        let d = ds(&[2, 1, 1, 0, 0]);
        let codes: Vec<_> = CodeIter::new(&d).unwrap().collect();
        assert_eq!(codes.len(), 12);
        for (i, c) in codes.iter().enumerate() {
            assert_eq!(rank(c), BigUint::from(i));
            assert_eq!(&unrank(&d, &BigUint::from(i)).unwrap(), c);
        }
        assert!(codes.windows(2).all(|w| w[0].values() < w[1].values()));
        let tail: Vec<_> = CodeIter::range(&d, 5, 100).unwrap().collect();
        assert_eq!(tail, codes[5..]);
    }

    #[test]
    fn general_round_trip() {
        let t: LabeledRootedTree = "3;3,1,0,2,2".parse().unwrap();
        let v = encode_any(&t);
        assert_eq!(decode_any(&v).unwrap(), t);
    }

    // Codes as shuffled multisets over a random compressed degree sequence.
    fn arb_code() -> impl Strategy<Value = SequenceCode> {
        (2usize..30)
            .prop_flat_map(|n| {
                // Parent choices of a random recursive tree give a valid degree sequence.
                let parents = (2..=n).map(|v| 1..v).collect::<Vec<_>>();
                parents.prop_map(move |ps| {
                    let mut d = vec![0; n];
                    for p in ps {
                        d[p - 1] += 1;
                    }
                    compress(&DegreeSequence::new(d).unwrap()).0
                })
            })
            .prop_flat_map(|d| {
                let mut vals = Vec::new();
                for (i, &x) in d.as_slice().iter().enumerate() {
                    vals.extend(std::iter::repeat_n(i + 1, x));
                }
                (Just(d), Just(vals).prop_shuffle())
            })
            .prop_map(|(d, vals)| SequenceCode::with_degrees(vals, &d).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip(c in arb_code()) {
            let t = tree_from_sequence(&c);
            prop_assert_eq!(t.root(), c.values()[0]);
            prop_assert_eq!(&t.degree_sequence(), c.degree_seq());
            prop_assert_eq!(sequence_from_tree(&t).unwrap(), c);
        }

        #[test]
        fn trace_invariants(c in arb_code(), x in 0.0f64..1.0) {
            let tr = construction_trace(&c);
            let n = c.n();
            for v in 1..=n {
                prop_assert_eq!(tr.w[tr.pi[v - 1] - 1], v);
            }
            for k in 1..n {
                if !tr.repeat_locations.contains(&k) {
                    prop_assert_eq!(tr.w[k - 1], c.values()[k - 1]);
                }
            }
            let steps: Vec<_> = tr.nonleaf_order.iter().map(|&i| tr.pi[i - 1]).collect();
            prop_assert!(steps.windows(2).all(|s| s[0] < s[1]));
            prop_assert!(tr.prefix_sums.windows(2).all(|s| s[0] <= s[1]));
            prop_assert_eq!(*tr.prefix_sums.last().unwrap(), tr.leaf_count - 1);
            if c.degree_seq().count(1) == 0 {
                prop_assert!(tr.prefix_sums.windows(2).all(|s| s[0] < s[1]));
            }
            // rho against a linear scan.
            let xr = x * (tr.leaf_count - 1) as f64;
            let c_x = xr.ceil() as usize;
            let k = (1..=tr.prefix_sums.len()).find(|&k| tr.prefix_sums[k - 1] >= c_x).unwrap();
            prop_assert_eq!(tr.rho(xr).unwrap(), tr.pi[tr.nonleaf_order[k - 1] - 1]);
        }

        #[test]
        fn prefix_trees_grow(c in arb_code()) {
            let t = tree_from_sequence(&c);
            let full = grow_prefix(&c, c.n()).unwrap();
            prop_assert_eq!(full.height(), t.height());
            for k in 1..=c.n() {
                prop_assert_eq!(grow_prefix(&c, k).unwrap().size(), k);
            }
        }

        #[test]
        fn prefix_leaf_property(c in arb_code()) {
            if c.degree_seq().count(1) == 0 {
                let tr = construction_trace(&c);
                let r = tr.rho((tr.leaf_count - 1) as f64).unwrap();
                let sub = grow_prefix(&c, r).unwrap();
                let m = c.degree_seq().nonleaf_count();
                prop_assert!((1..=m).all(|v| sub.contains(v)));
                prop_assert!(tree_from_sequence(&c).height() <= sub.height() + 1);
            }
        }

        #[test]
        fn rank_unrank(c in arb_code()) {
            let r = rank(&c);
            prop_assert_eq!(unrank(c.degree_seq(), &r).unwrap(), c);
        }

        #[test]
        fn general_codes_round_trip(c in arb_code(), seed in any::<u64>()) {
            // Scramble labels so the degree sequence is no longer compressed.
            let n = c.n();
            let mut perm: Vec<usize> = (1..=n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let t = tree_from_sequence(&c).relabel(&perm);
            let v = encode_any(&t);
            prop_assert_eq!(decode_any(&v).unwrap(), t);
        }
    }
}
