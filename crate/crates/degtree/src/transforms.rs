//! Degree-sequence surgery: covering moves, degree-one suppression and
//! stretching, and reductions to sub-binary sequences.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use thiserror::Error;

use crate::enumeration::partition_degree_sequences;
use crate::trees::{DegreeSequence, Label, LabeledRootedTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("every vertex has exactly one child")]
    AllUnary,
    #[error("label collision: {0}")]
    LabelCollision(String),
    #[error("enumeration of size {0} exceeds the budget")]
    BudgetExceeded(usize),
}

pub const COVERING_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    /// `(d_i, d_j) -> (d_i + 1, d_j - 1)` with `d_i >= d_j >= 1`.
    Skew,
    /// `(d_i, d_j) -> (d_i + d_j, 0)` with both positive.
    Merge,
}

impl std::str::FromStr for MoveKind {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skew" => Ok(Self::Skew),
            "merge" => Ok(Self::Merge),
            _ => Err(TransformError::PreconditionViolated(format!("unknown move {s:?}"))),
        }
    }
}

/// A covering move at 1-based positions `i` and `j`. With `relabel`, entry `k`
/// of the moved sequence lands at position `relabel[k - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverMove {
    pub kind: MoveKind,
    pub i: usize,
    pub j: usize,
    pub relabel: Option<Vec<usize>>,
}

impl CoverMove {
    pub fn skew(i: usize, j: usize) -> Self {
        Self { kind: MoveKind::Skew, i, j, relabel: None }
    }

    pub fn merge(i: usize, j: usize) -> Self {
        Self { kind: MoveKind::Merge, i, j, relabel: None }
    }
}

pub fn apply_cover(d: &DegreeSequence, mv: &CoverMove) -> Result<DegreeSequence, TransformError> {
    let n = d.len();
    let bad = |s: String| Err(TransformError::PreconditionViolated(s));
    if mv.i == mv.j || mv.i == 0 || mv.j == 0 || mv.i > n || mv.j > n {
        return bad(format!("positions ({}, {}) invalid for length {n}", mv.i, mv.j));
    }
    let (a, b) = (d.degree(mv.i), d.degree(mv.j));
    let mut v = d.as_slice().to_vec();
    match mv.kind {
        MoveKind::Skew => {
            if !(a >= b && b >= 1) {
                return bad(format!("skew needs d_i >= d_j >= 1, got ({a}, {b})"));
            }
            v[mv.i - 1] = a + 1;
            v[mv.j - 1] = b - 1;
        }
        MoveKind::Merge => {
            if a == 0 || b == 0 {
                return bad(format!("merge needs positive entries, got ({a}, {b})"));
            }
            v[mv.i - 1] = a + b;
            v[mv.j - 1] = 0;
        }
    }
    if let Some(perm) = &mv.relabel {
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p == 0 || p > n || std::mem::replace(&mut seen[p - 1], true)) {
            return bad("relabel is not a permutation".into());
        }
        let mut out = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            out[p - 1] = v[k];
        }
        v = out;
    }
    Ok(DegreeSequence::new(v).expect("moves preserve the sum"))
}

fn moves_up_to_multiset(n: usize, kind: MoveKind) -> Result<Vec<(DegreeSequence, DegreeSequence)>, TransformError> {
    if n > COVERING_LIMIT {
        return Err(TransformError::BudgetExceeded(n));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for d in partition_degree_sequences(n) {
        let nonzero = d.nonleaf_count();
        for i in 1..=nonzero {
            for j in 1..=nonzero {
                let Ok(e) = apply_cover(&d, &CoverMove { kind, i, j, relabel: None }) else {
                    continue;
                };
                let e = e.sorted_desc();
                if seen.insert((d.clone(), e.clone())) {
                    out.push((d.clone(), e));
                }
            }
        }
    }
    Ok(out)
}

/// Every pair `(d, d')` of decreasing sequences of length `n` where one skew
/// move takes the multiset of `d` to that of `d'`, each once.
pub fn covering_pairs(n: usize) -> Result<Vec<(DegreeSequence, DegreeSequence)>, TransformError> {
    moves_up_to_multiset(n, MoveKind::Skew)
}

/// Same as [`covering_pairs`] for merge moves.
pub fn merge_pairs(n: usize) -> Result<Vec<(DegreeSequence, DegreeSequence)>, TransformError> {
    moves_up_to_multiset(n, MoveKind::Merge)
}

/// A tree without degree-one vertices, on labels `1..=m`, together with the
/// original label of each vertex. The relabeling is increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuppressedTree {
    pub tree: LabeledRootedTree,
    pub labels: Vec<Label>,
}

impl SuppressedTree {
    /// Parent array in the original labels, with `0` for the root, indexed by
    /// position in `labels`.
    fn original_parent(&self, k: usize) -> Option<Label> {
        self.tree.parent(k + 1).map(|p| self.labels[p - 1])
    }
}

/// Removes all degree-one vertices, joining the edges around them. A chain of
/// degree-one vertices at the root is dropped and its lowest end becomes the root.
pub fn suppress_degree_ones(t: &LabeledRootedTree) -> Result<SuppressedTree, TransformError> {
    Ok(suppress_with_composition(t)?.0)
}

/// Suppression together with the labeled composition it removed: for each
/// surviving vertex in ascending label order, the degree-one vertices on its
/// ancestral edge from top to bottom.
pub fn suppress_with_composition(
    t: &LabeledRootedTree,
) -> Result<(SuppressedTree, Vec<Vec<Label>>), TransformError> {
    let deg = t.degrees();
    let keep: Vec<Label> = (1..=t.n()).filter(|&v| deg[v - 1] != 1).collect();
    if keep.is_empty() {
        return Err(TransformError::AllUnary);
    }
    let mut index = vec![0usize; t.n() + 1];
    for (k, &v) in keep.iter().enumerate() {
        index[v] = k + 1;
    }
    let mut parent = vec![0; keep.len()];
    let mut root = 0;
    let mut parts = Vec::with_capacity(keep.len());
    for (k, &v) in keep.iter().enumerate() {
        let mut part = Vec::new();
        let mut up = t.parent(v);
        while let Some(u) = up {
            if deg[u - 1] != 1 {
                break;
            }
            part.push(u);
            up = t.parent(u);
        }
        part.reverse();
        parts.push(part);
        match up {
            Some(u) => parent[k] = index[u],
            None => root = k + 1,
        }
    }
    let tree = LabeledRootedTree::from_parents(root, parent).expect("suppression keeps a tree");
    Ok((SuppressedTree { tree, labels: keep }, parts))
}

/// Inverse of [`suppress_with_composition`]: part `k` is inserted on the
/// ancestral edge of the `k`-th vertex of `base` in ascending label order,
/// from top to bottom. Together the labels must be exactly `1..=n`.
pub fn stretch_with_composition(
    base: &SuppressedTree,
    parts: &[Vec<Label>],
) -> Result<LabeledRootedTree, TransformError> {
    let m = base.labels.len();
    if parts.len() != m {
        return Err(TransformError::PreconditionViolated(format!(
            "{} parts for {m} vertices",
            parts.len()
        )));
    }
    if base.tree.n() != m || base.labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TransformError::PreconditionViolated("labels must increase".into()));
    }
    let n = m + parts.iter().map(Vec::len).sum::<usize>();
    let mut used = vec![false; n + 1];
    for &v in base.labels.iter().chain(parts.iter().flatten()) {
        if v == 0 || v > n || std::mem::replace(&mut used[v], true) {
            return Err(TransformError::LabelCollision(format!(
                "label {v} repeated or outside 1..={n}"
            )));
        }
    }
    let mut parent = vec![0; n];
    let mut root = 0;
    for (k, &v) in base.labels.iter().enumerate() {
        let mut above = base.original_parent(k);
        for &u in &parts[k] {
            match above {
                Some(p) => parent[u - 1] = p,
                None => root = u,
            }
            above = Some(u);
        }
        match above {
            Some(p) => parent[v - 1] = p,
            None => root = v,
        }
    }
    Ok(LabeledRootedTree::from_parents(root, parent).expect("stretching keeps a tree"))
}

/// Inserts `unary` as degree-one vertices along a uniformly random labeled
/// composition with one part per vertex of `base`.
pub fn stretch_with_degree_ones<R: Rng + ?Sized>(
    base: &SuppressedTree,
    unary: &[Label],
    rng: &mut R,
) -> Result<LabeledRootedTree, TransformError> {
    let parts = random_labeled_composition(unary, base.labels.len(), rng);
    stretch_with_composition(base, &parts)
}

/// Uniform over the `(m + k - 1)! / (k - 1)!` labeled compositions of `items` into `k` parts.
pub fn random_labeled_composition<R: Rng + ?Sized>(
    items: &[Label],
    k: usize,
    rng: &mut R,
) -> Vec<Vec<Label>> {
    assert!(k >= 1);
    let m = items.len();
    let mut order = items.to_vec();
    order.shuffle(rng);
    // Stars and bars: k - 1 bar positions among m + k - 1 slots.
    let mut bars: Vec<usize> = index::sample(rng, m + k - 1, k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = vec![Vec::new(); k];
    let (mut part, mut next) = (0, 0);
    let mut it = order.into_iter();
    for slot in 0..m + k - 1 {
        if next < bars.len() && bars[next] == slot {
            next += 1;
            part += 1;
        } else {
            parts[part].push(it.next().expect("m stars"));
        }
    }
    parts
}

/// Every labeled composition of `items` into `k` parts.
pub fn labeled_compositions(items: &[Label], k: usize) -> Vec<Vec<Vec<Label>>> {
    fn rec(left: &[Label], k: usize, cur: &mut Vec<Vec<Label>>, out: &mut Vec<Vec<Vec<Label>>>) {
        if cur.len() == k - 1 {
            // The final part takes every remaining ordering.
            for p in permutations(left) {
                let mut full = cur.clone();
                full.push(p);
                out.push(full);
            }
            return;
        }
        for size in 0..=left.len() {
            for chosen in subsets(left, size) {
                let rest: Vec<Label> = left.iter().copied().filter(|x| !chosen.contains(x)).collect();
                for p in permutations(&chosen) {
                    cur.push(p);
                    rec(&rest, k, cur, out);
                    cur.pop();
                }
            }
        }
    }
    fn subsets(xs: &[Label], size: usize) -> Vec<Vec<Label>> {
        (0u32..1 << xs.len())
            .filter(|m| m.count_ones() as usize == size)
            .map(|m| (0..xs.len()).filter(|i| m >> i & 1 == 1).map(|i| xs[i]).collect())
            .collect()
    }
    fn permutations(xs: &[Label]) -> Vec<Vec<Label>> {
        if xs.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for i in 0..xs.len() {
            let mut rest = xs.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }
    assert!(k >= 1);
    let mut out = Vec::new();
    rec(items, k, &mut Vec::new(), &mut out);
    out
}

/// Reduction chain from `d` to a sub-binary sequence with no more degree-one
/// entries. Entries of four or more are split first, then pairs of threes,
/// then a lone three is merged with a one or, failing that, a two is appended.
/// Each step picks the lowest eligible indices.
pub fn sub_binary_chain(d: &DegreeSequence) -> Vec<DegreeSequence> {
    let mut v = d.as_slice().to_vec();
    let mut chain = vec![d.clone()];
    let first = |v: &[usize], x: usize| v.iter().position(|&y| y == x);
    let push = |v: &Vec<usize>, chain: &mut Vec<DegreeSequence>| {
        chain.push(DegreeSequence::new(v.clone()).expect("steps preserve the sum"))
    };
    while let Some(k) = v.iter().position(|&x| x >= 4) {
        let j = first(&v, 0).expect("trees have leaves");
        v[k] -= 2;
        v[j] = 2;
        push(&v, &mut chain);
    }
    while v.iter().filter(|&&x| x == 3).count() >= 2 {
        let k = first(&v, 3).unwrap();
        let l = k + 1 + first(&v[k + 1..], 3).unwrap();
        let j = first(&v, 0).expect("trees have leaves");
        v[k] = 2;
        v[l] = 2;
        v[j] = 2;
        push(&v, &mut chain);
    }
    if let Some(k) = first(&v, 3) {
        match first(&v, 1) {
            Some(j) => {
                v[k] = 2;
                v[j] = 2;
            }
            None => {
                v[k] = 2;
                v.push(2);
            }
        }
        push(&v, &mut chain);
    }
    chain
}

pub fn to_sub_binary(d: &DegreeSequence) -> DegreeSequence {
    sub_binary_chain(d).pop().expect("chain starts at d")
}

/// The decreasing sub-binary sequence with the same numbers of zeros and ones as `d`.
pub fn companion_same_leaf_profile(d: &DegreeSequence) -> DegreeSequence {
    let (n0, n1) = (d.count(0), d.count(1));
    let mut v = vec![2; n0 - 1];
    v.extend(std::iter::repeat_n(1, n1));
    v.extend(std::iter::repeat_n(0, n0));
    DegreeSequence::new(v).expect("2(n0 - 1) + n1 = length - 1")
}
