//! Degree sequences and labeled rooted trees.
//!
//! Labels are 1-based throughout. A tree is stored as a parent array where
//! `parent[v - 1]` is the parent of `v` and the root's slot holds `0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub type Label = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("degree sum is {actual}, expected {expected}")]
    SumMismatch { actual: i64, expected: i64 },
    #[error("negative degree at label {0}")]
    NegativeEntry(Label),
    #[error("degree sequence must be non-empty")]
    Empty,
    #[error("every entry equals one")]
    DegenerateAllOnes,
    #[error("no ancestor of {0} lies in the target set")]
    NotAncestrallyConnected(Label),
    #[error("label {0} out of range 1..={1}")]
    LabelOutOfRange(Label, usize),
    #[error("parent array does not describe a single rooted tree: {0}")]
    InvalidTree(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A sequence `d_1..d_n` of child counts with `sum d_i = n - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeSequence {
    degrees: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStats {
    pub sigma_d: f64,
    pub sigma_prime: f64,
    pub delta: f64,
}

impl DegreeSequence {
    /// Validates signed input, reporting the first negative entry.
    pub fn validate(degrees: &[i64]) -> Result<Self, TreeError> {
        if degrees.is_empty() {
            return Err(TreeError::Empty);
        }
        if let Some(i) = degrees.iter().position(|&x| x < 0) {
            return Err(TreeError::NegativeEntry(i + 1));
        }
        Self::new(degrees.iter().map(|&x| x as usize).collect())
    }

    pub fn new(degrees: Vec<usize>) -> Result<Self, TreeError> {
        if degrees.is_empty() {
            return Err(TreeError::Empty);
        }
        let sum: usize = degrees.iter().sum();
        if sum + 1 != degrees.len() {
            return Err(TreeError::SumMismatch {
                actual: sum as i64,
                expected: degrees.len() as i64 - 1,
            });
        }
        Ok(Self { degrees })
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.degrees
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.degrees
    }

    /// Degree of label `v` (1-based).
    pub fn degree(&self, v: Label) -> usize {
        self.degrees[v - 1]
    }

    /// The map `i -> n_i(d)` over values that occur.
    pub fn degree_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for &x in &self.degrees {
            *counts.entry(x).or_insert(0) += 1;
        }
        counts
    }

    /// `n_i(d)`.
    pub fn count(&self, i: usize) -> usize {
        self.degrees.iter().filter(|&&x| x == i).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.count(0)
    }

    pub fn nonleaf_count(&self) -> usize {
        self.len() - self.leaf_count()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn is_sub_binary(&self) -> bool {
        self.degrees.iter().all(|&x| x <= 2)
    }

    /// True when all non-zero entries precede all zero entries.
    pub fn is_compressed(&self) -> bool {
        let m = self.nonleaf_count();
        self.degrees[..m].iter().all(|&x| x > 0)
    }

    pub fn sigma_stats(&self) -> Result<SigmaStats, TreeError> {
        let n = self.len();
        let n1 = self.count(1);
        if n1 == n {
            return Err(TreeError::DegenerateAllOnes);
        }
        let nf = n as f64;
        let s: f64 = self
            .degrees
            .iter()
            .map(|&x| (x as f64) * (x as f64 - 1.0))
            .sum();
        let var = s / nf;
        let ratio = nf / (n - n1) as f64;
        Ok(SigmaStats {
            sigma_d: var.sqrt(),
            sigma_prime: (ratio * var).sqrt(),
            delta: (n - n1) as f64 / nf,
        })
    }

    /// Entries sorted in decreasing order, the canonical representative of the multiset.
    pub fn sorted_desc(&self) -> DegreeSequence {
        let mut v = self.degrees.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        DegreeSequence { degrees: v }
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.degrees)
    }
}

impl FromStr for DegreeSequence {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = parse_int_list(s)?;
        Self::validate(&values)
    }
}

/// Parses comma- or whitespace-separated integers.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>, TreeError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| TreeError::Parse(format!("not an integer: {t:?}")))
        })
        .collect()
}

fn write_joined(f: &mut fmt::Formatter<'_>, xs: &[usize]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// A rooted tree on labels `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledRootedTree {
    root: Label,
    parent: Vec<Label>,
}

impl LabeledRootedTree {
    pub fn single() -> Self {
        Self {
            root: 1,
            parent: vec![0],
        }
    }

    /// Builds a tree from a parent array, checking that it spans all labels from `root`.
    pub fn from_parents(root: Label, parent: Vec<Label>) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if root == 0 || root > n {
            return Err(TreeError::LabelOutOfRange(root, n));
        }
        for (i, &p) in parent.iter().enumerate() {
            let v = i + 1;
            if v == root {
                if p != 0 {
                    return Err(TreeError::InvalidTree(format!("root {root} has a parent")));
                }
            } else if p == 0 {
                return Err(TreeError::InvalidTree(format!("label {v} has no parent")));
            } else if p > n {
                return Err(TreeError::LabelOutOfRange(p, n));
            }
        }
        let t = Self { root, parent };
        // Every vertex must reach the root; depths() would loop on a cycle.
        let mut state = vec![0u8; n];
        state[root - 1] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut v = start;
            while state[v - 1] == 0 {
                state[v - 1] = 1;
                path.push(v);
                v = t.parent[v - 1];
            }
            if state[v - 1] == 1 {
                return Err(TreeError::InvalidTree(format!("cycle through {v}")));
            }
            for u in path {
                state[u - 1] = 2;
            }
        }
        Ok(t)
    }

    pub(crate) fn from_parents_unchecked(root: Label, parent: Vec<Label>) -> Self {
        debug_assert!(Self::from_parents(root, parent.clone()).is_ok());
        Self { root, parent }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> Label {
        self.root
    }

    pub fn parent(&self, v: Label) -> Option<Label> {
        match self.parent[v - 1] {
            0 => None,
            p => Some(p),
        }
    }

    /// The raw parent array, with `0` in the root's slot.
    pub fn parents(&self) -> &[Label] {
        &self.parent
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n()];
        for &p in &self.parent {
            if p != 0 {
                d[p - 1] += 1;
            }
        }
        d
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence {
            degrees: self.degrees(),
        }
    }

    /// Children of each label in ascending order, indexed by `label - 1`.
    pub fn children(&self) -> Vec<Vec<Label>> {
        let mut ch = vec![Vec::new(); self.n()];
        for (i, &p) in self.parent.iter().enumerate() {
            if p != 0 {
                ch[p - 1].push(i + 1);
            }
        }
        ch
    }

    /// Distance from the root for every label, indexed by `label - 1`.
    pub fn depths(&self) -> Vec<usize> {
        let n = self.n();
        let mut depth = vec![usize::MAX; n];
        depth[self.root - 1] = 0;
        let mut stack = Vec::new();
        for start in 1..=n {
            let mut v = start;
            while depth[v - 1] == usize::MAX {
                stack.push(v);
                v = self.parent[v - 1];
            }
            let mut d = depth[v - 1];
            while let Some(u) = stack.pop() {
                d += 1;
                depth[u - 1] = d;
            }
        }
        depth
    }

    pub fn depth(&self, v: Label) -> usize {
        let mut d = 0;
        let mut u = v;
        while let Some(p) = self.parent(u) {
            u = p;
            d += 1;
        }
        d
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Parent steps from `v` to its first ancestor (or itself) inside `set`.
    pub fn dist_to_subtree(
        &self,
        v: Label,
        set: impl Fn(Label) -> bool,
    ) -> Result<usize, TreeError> {
        let mut u = v;
        let mut steps = 0;
        loop {
            if set(u) {
                return Ok(steps);
            }
            match self.parent(u) {
                Some(p) => {
                    u = p;
                    steps += 1;
                }
                None => return Err(TreeError::NotAncestrallyConnected(v)),
            }
        }
    }

    /// Applies `new = map[old - 1]` to every label.
    pub fn relabel(&self, map: &[Label]) -> Self {
        let n = self.n();
        let mut parent = vec![0; n];
        for (i, &p) in self.parent.iter().enumerate() {
            parent[map[i] - 1] = if p == 0 { 0 } else { map[p - 1] };
        }
        Self {
            root: map[self.root - 1],
            parent,
        }
    }

    /// The tree with labels `a` and `b` exchanged.
    pub fn swap_labels(&self, a: Label, b: Label) -> Self {
        let map: Vec<Label> = (1..=self.n())
            .map(|v| {
                if v == a {
                    b
                } else if v == b {
                    a
                } else {
                    v
                }
            })
            .collect();
        self.relabel(&map)
    }
}

impl fmt::Display for LabeledRootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.root)?;
        write_joined(f, &self.parent)
    }
}

impl FromStr for LabeledRootedTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (root, rest) = s
            .trim()
            .split_once(';')
            .ok_or_else(|| TreeError::Parse("expected \"root;p_1,...,p_n\"".into()))?;
        let root: Label = root
            .trim()
            .parse()
            .map_err(|_| TreeError::Parse(format!("bad root {root:?}")))?;
        let parent = parse_int_list(rest)?
            .into_iter()
            .map(|p| {
                usize::try_from(p).map_err(|_| TreeError::Parse(format!("bad parent {p}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parents(root, parent)
    }
}

/// A root-containing connected subset of a larger labeled tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTree {
    root: Label,
    parent: Vec<Label>,
    member: Vec<bool>,
}

impl PartialTree {
    /// Restricts `t` to `members`, which must contain the root and be closed under parents.
    pub fn restrict(t: &LabeledRootedTree, members: &[Label]) -> Result<Self, TreeError> {
        let n = t.n();
        let mut member = vec![false; n];
        for &v in members {
            if v == 0 || v > n {
                return Err(TreeError::LabelOutOfRange(v, n));
            }
            member[v - 1] = true;
        }
        if !member[t.root() - 1] {
            return Err(TreeError::InvalidTree("subset misses the root".into()));
        }
        for &v in members {
            if let Some(p) = t.parent(v) {
                if !member[p - 1] {
                    return Err(TreeError::InvalidTree(format!(
                        "parent {p} of {v} is outside the subset"
                    )));
                }
            }
        }
        let parent = t
            .parents()
            .iter()
            .zip(&member)
            .map(|(&p, &m)| if m { p } else { 0 })
            .collect();
        Ok(Self {
            root: t.root(),
            parent,
            member,
        })
    }

    pub fn root(&self) -> Label {
        self.root
    }

    pub fn contains(&self, v: Label) -> bool {
        self.member[v - 1]
    }

    pub fn size(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn vertices(&self) -> Vec<Label> {
        (1..=self.member.len()).filter(|&v| self.member[v - 1]).collect()
    }

    pub fn parent(&self, v: Label) -> Option<Label> {
        match self.parent[v - 1] {
            0 => None,
            p => Some(p),
        }
    }

    pub fn height(&self) -> usize {
        self.vertices()
            .into_iter()
            .map(|v| {
                let mut d = 0;
                let mut u = v;
                while let Some(p) = self.parent(u) {
                    u = p;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn bfs_depths(t: &LabeledRootedTree) -> Vec<usize> {
        let ch = t.children();
        let mut depth = vec![usize::MAX; t.n()];
        let mut queue = VecDeque::from([t.root()]);
        depth[t.root() - 1] = 0;
        while let Some(v) = queue.pop_front() {
            for &c in &ch[v - 1] {
                depth[c - 1] = depth[v - 1] + 1;
                queue.push_back(c);
            }
        }
        depth
    }

    // Random recursive trees: every label > 1 picks an earlier parent, then labels are shuffled.
    fn arb_tree() -> impl Strategy<Value = LabeledRootedTree> {
        (1usize..40).prop_flat_map(|n| {
            let parents = (2..=n).map(|v| 1..v).collect::<Vec<_>>();
            let perm = Just((1..=n).collect::<Vec<usize>>()).prop_shuffle();
            (parents, perm)
                .prop_map(move |(ps, perm)| {
                    let mut parent = vec![0];
                    parent.extend(ps);
                    LabeledRootedTree::from_parents(1, parent)
                        .unwrap()
                        .relabel(&perm)
                })
        })
    }

    #[test]
    fn validate_examples() {
        let d = DegreeSequence::validate(&[0]).unwrap();
        assert_eq!(d.len(), 1);
        assert!(DegreeSequence::validate(&[1, 3, 2, 0, 0, 0, 0]).is_ok());
        assert_eq!(
            DegreeSequence::validate(&[1, 1]),
            Err(TreeError::SumMismatch {
                actual: 2,
                expected: 1
            })
        );
        assert_eq!(
            DegreeSequence::validate(&[2, -1, 0]),
            Err(TreeError::NegativeEntry(2))
        );
    }

    #[test]
    fn degree_counts_examples() {
        let d: DegreeSequence = "1,3,2,0,0,0,0".parse().unwrap();
        let want: BTreeMap<_, _> = [(0, 4), (1, 1), (2, 1), (3, 1)].into();
        assert_eq!(d.degree_counts(), want);
        let d: DegreeSequence = "2 2 0 0 0".parse().unwrap();
        assert_eq!(d.degree_counts(), [(0, 3), (2, 2)].into());
        assert_eq!(DegreeSequence::new(vec![0]).unwrap().degree_counts(), [(0, 1)].into());
    }

    #[test]
    fn sigma_examples() {
        let s = DegreeSequence::new(vec![2, 2, 0, 0, 0]).unwrap().sigma_stats().unwrap();
        assert!((s.sigma_d - (0.8f64).sqrt()).abs() < 1e-15);
        assert!((s.sigma_prime - (0.8f64).sqrt()).abs() < 1e-15);
        assert_eq!(s.delta, 1.0);
        let s = DegreeSequence::new(vec![0]).unwrap().sigma_stats().unwrap();
        assert_eq!((s.sigma_d, s.delta), (0.0, 1.0));
        let s = DegreeSequence::new(vec![1, 0]).unwrap().sigma_stats().unwrap();
        assert_eq!((s.sigma_d, s.sigma_prime, s.delta), (0.0, 0.0, 0.5));
    }

    #[test]
    fn height_examples() {
        assert_eq!(LabeledRootedTree::single().height(), 0);
        let path: LabeledRootedTree = "1;0,1,2".parse().unwrap();
        assert_eq!(path.height(), 2);
        // Root with three children, one of which carries a two-level subtree.
        let t: LabeledRootedTree = "4;4,4,4,0,1,5,5,2".parse().unwrap();
        assert_eq!(t.height(), 3);
        assert_eq!(t.depths(), bfs_depths(&t));
    }

    #[test]
    fn dist_examples() {
        let t: LabeledRootedTree = "1;0,1,2".parse().unwrap();
        assert_eq!(t.dist_to_subtree(2, |v| v == 2).unwrap(), 0);
        assert_eq!(t.dist_to_subtree(3, |v| v == 2).unwrap(), 1);
        assert_eq!(t.dist_to_subtree(3, |v| v == 1).unwrap(), 2);
        assert_eq!(
            t.dist_to_subtree(1, |v| v == 3),
            Err(TreeError::NotAncestrallyConnected(1))
        );
    }

    #[test]
    fn parse_rejects_cycles_and_bad_roots() {
        assert!("1;0,3,2".parse::<LabeledRootedTree>().is_err());
        assert!("2;0,1".parse::<LabeledRootedTree>().is_err());
        assert!("1;0,5".parse::<LabeledRootedTree>().is_err());
        assert_eq!("1;0,1".parse::<LabeledRootedTree>().unwrap().to_string(), "1;0,1");
    }

    #[test]
    fn compressed_predicate() {
        assert!(DegreeSequence::new(vec![1, 3, 2, 0, 0, 0, 0]).unwrap().is_compressed());
        assert!(!DegreeSequence::new(vec![1, 0, 3, 0, 0, 2, 0]).unwrap().is_compressed());
    }

    proptest! {
        #[test]
        fn depths_match_bfs(t in arb_tree()) {
            prop_assert_eq!(t.depths(), bfs_depths(&t));
            let h = t.height();
            prop_assert!(h < t.n());
            let is_path = t.degrees().iter().all(|&d| d <= 1);
            prop_assert_eq!(h == t.n() - 1, is_path);
        }

        #[test]
        fn degree_identities(t in arb_tree()) {
            let d = t.degree_sequence();
            let counts = d.degree_counts();
            prop_assert_eq!(counts.values().sum::<usize>(), d.len());
            prop_assert_eq!(counts.iter().map(|(i, c)| i * c).sum::<usize>(), d.len() - 1);
            if d.count(1) == 0 && d.len() > 1 {
                let excess: usize = d.as_slice().iter().filter(|&&x| x > 0).map(|x| x - 1).sum();
                prop_assert_eq!(excess, d.leaf_count() - 1);
            }
        }

        #[test]
        fn display_parse_round_trip(t in arb_tree()) {
            let s = t.to_string();
            prop_assert_eq!(s.parse::<LabeledRootedTree>().unwrap(), t);
        }

        #[test]
        fn dist_matches_bfs(t in arb_tree(), seed in any::<u64>()) {
            // Take S as the vertices within some depth of the root.
            let depth = bfs_depths(&t);
            let cut = (seed as usize) % (t.height() + 1);
            for v in 1..=t.n() {
                let got = t.dist_to_subtree(v, |u| depth[u - 1] <= cut).unwrap();
                prop_assert_eq!(got, depth[v - 1].saturating_sub(cut));
            }
        }
    }
}
