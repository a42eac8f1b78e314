use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{EnumError, HeightDistribution};
use crate::trees::LabeledRootedTree;

pub const PLANE_TREE_LIMIT: usize = 12;

/// A plane tree stored by its child counts in depth-first preorder.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlaneTree {
    degrees: Vec<usize>,
}

impl PlaneTree {
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    /// Preorder index of each node's parent; `None` for the root.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(self.size());
        // Stack of (node, children still to attach).
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (i, &d) in self.degrees.iter().enumerate() {
            while matches!(stack.last(), Some(&(_, 0))) {
                stack.pop();
            }
            match stack.last_mut() {
                Some((p, left)) => {
                    out.push(Some(*p));
                    *left -= 1;
                }
                None => out.push(None),
            }
            stack.push((i, d));
        }
        out
    }

    pub fn height(&self) -> usize {
        let parents = self.parents();
        let mut depth = vec![0usize; self.size()];
        for i in 1..self.size() {
            depth[i] = depth[parents[i].expect("non-root")] + 1;
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Labels node `i` (preorder) with `labels[i]` and forgets the plane order.
    pub fn to_labeled(&self, labels: &[usize]) -> LabeledRootedTree {
        let mut parent = vec![0; self.size()];
        let mut root = 0;
        for (i, p) in self.parents().into_iter().enumerate() {
            match p {
                Some(p) => parent[labels[i] - 1] = labels[p],
                None => root = labels[i],
            }
        }
        LabeledRootedTree::from_parents(root, parent).expect("plane trees are trees")
    }
}

pub fn catalan(k: usize) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (2 * (2 * i + 1)) / (i + 2);
    }
    c
}

/// All plane trees with `n` nodes, each once.
pub fn enumerate_plane_trees(n: usize) -> Result<Vec<PlaneTree>, EnumError> {
    if n == 0 || n > PLANE_TREE_LIMIT {
        return Err(EnumError::BudgetExceeded {
            needed: format!("plane trees of size {n}"),
            budget: PLANE_TREE_LIMIT as u64,
        });
    }
    // Preorder degree words: open slots stay positive until the last node closes them.
    fn rec(n: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<PlaneTree>) {
        let placed = cur.len();
        if placed == n {
            if slots == 0 {
                out.push(PlaneTree {
                    degrees: cur.clone(),
                });
            }
            return;
        }
        let left = n - placed;
        // After this node, slots - 1 + d must not exceed the nodes still to come.
        for d in 0..left {
            let next = slots - 1 + d;
            if next == 0 && left > 1 {
                continue;
            }
            if next > left - 1 {
                break;
            }
            cur.push(d);
            rec(n, next, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 1, &mut Vec::with_capacity(n), &mut out);
    Ok(out)
}

/// Exact height counts over full binary plane trees with `internal` internal
/// nodes, from `B_{h+1}(z) = 1 + z B_h(z)^2` where `B_h` counts trees of
/// height at most `h` by internal nodes.
pub fn binary_height_counts(internal: usize) -> HeightDistribution {
    let m = internal;
    let mut y = vec![BigUint::zero(); m + 1];
    y[0] = BigUint::one();
    let total = catalan(m);
    let mut at_most = vec![y[m].clone()];
    while at_most.last() != Some(&total) {
        let mut next = vec![BigUint::zero(); m + 1];
        next[0] = BigUint::one();
        for k in 1..=m {
            next[k] = (0..k).map(|i| &y[i] * &y[k - 1 - i]).sum();
        }
        y = next;
        at_most.push(y[m].clone());
    }
    let mut counts = BTreeMap::new();
    let mut prev = BigUint::zero();
    for (h, c) in at_most.into_iter().enumerate() {
        if c > prev {
            counts.insert(h, &c - &prev);
        }
        prev = c;
    }
    HeightDistribution::from_counts(counts)
}

fn tree_weight(t: &PlaneTree, mu: &[BigRational]) -> BigRational {
    t.degrees()
        .iter()
        .map(|&d| mu.get(d).cloned().unwrap_or_else(BigRational::zero))
        .fold(BigRational::one(), |a, b| a * b)
}

/// Exact height law of a Bienaymé tree conditioned on `n` nodes, or `None`
/// when that size has probability zero.
pub fn bienayme_height_law(
    mu: &[BigRational],
    n: usize,
) -> Result<Option<BTreeMap<usize, BigRational>>, EnumError> {
    let mut law: BTreeMap<usize, BigRational> = BTreeMap::new();
    let mut z = BigRational::zero();
    for t in enumerate_plane_trees(n)? {
        let w = tree_weight(&t, mu);
        if w.is_zero() {
            continue;
        }
        z += &w;
        *law.entry(t.height()).or_insert_with(BigRational::zero) += w;
    }
    if z.is_zero() {
        return Ok(None);
    }
    Ok(Some(law.into_iter().map(|(h, w)| (h, w / &z)).collect()))
}

/// Exact law of the conditioned Bienaymé tree with uniformly random labels and
/// plane order forgotten. Limited to `n <= 8` since all labelings are visited.
pub fn bienayme_labeled_law(
    mu: &[BigRational],
    n: usize,
) -> Result<HashMap<LabeledRootedTree, BigRational>, EnumError> {
    if n > 8 {
        return Err(EnumError::BudgetExceeded {
            needed: format!("{n}! labelings"),
            budget: 8,
        });
    }
    let trees = enumerate_plane_trees(n)?;
    let mut law: HashMap<LabeledRootedTree, BigRational> = HashMap::new();
    let mut z = BigRational::zero();
    for t in &trees {
        let w = tree_weight(t, mu);
        if w.is_zero() {
            continue;
        }
        let mut labels: Vec<usize> = (1..=n).collect();
        loop {
            z += &w;
            *law.entry(t.to_labeled(&labels)).or_insert_with(BigRational::zero) += &w;
            if !next_permutation(&mut labels) {
                break;
            }
        }
    }
    Ok(law.into_iter().map(|(k, v)| (k, v / &z)).collect())
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::rational;
    use num_traits::ToPrimitive;
    use std::collections::HashSet;

    #[test]
    fn catalan_counts() {
        assert_eq!(enumerate_plane_trees(1).unwrap().len(), 1);
        assert_eq!(enumerate_plane_trees(3).unwrap().len(), 2);
        assert_eq!(enumerate_plane_trees(5).unwrap().len(), 14);
        // Recurrence C_{k+1} = sum C_i C_{k-i} as an independent check.
        let mut c = vec![1u64];
        for k in 0..11 {
            c.push((0..=k).map(|i| c[i] * c[k - i]).sum());
        }
        for n in 1..=10 {
            let trees = enumerate_plane_trees(n).unwrap();
            assert_eq!(trees.len() as u64, c[n - 1]);
            assert_eq!(catalan(n - 1).to_u64().unwrap(), c[n - 1]);
            let distinct: HashSet<_> = trees.iter().collect();
            assert_eq!(distinct.len(), trees.len());
        }
        assert!(enumerate_plane_trees(13).is_err());
    }

    #[test]
    fn binary_counts_match_plane_trees() {
        let nu = [rational(1, 2), rational(0, 1), rational(1, 2)];
        for m in 0..=5 {
            let law = bienayme_height_law(&nu, 2 * m + 1).unwrap().unwrap();
            let counts = binary_height_counts(m);
            assert_eq!(counts.total(), &catalan(m));
            for (h, p) in law {
                assert_eq!(counts.probability(h), p);
            }
        }
    }

    #[test]
    fn parents_and_height() {
        // Root with children a, b; a has one child.
        let t = PlaneTree {
            degrees: vec![2, 1, 0, 0],
        };
        assert_eq!(t.parents(), vec![None, Some(0), Some(1), Some(0)]);
        assert_eq!(t.height(), 2);
        assert_eq!(t.to_labeled(&[3, 1, 4, 2]).to_string(), "3;3,3,0,1");
    }

    #[test]
    fn binary_laws() {
        let nu = [rational(1, 2), rational(0, 1), rational(1, 2)];
        // Five plane trees with three internal nodes; only the balanced one has height 2.
        let law = bienayme_height_law(&nu, 7).unwrap().unwrap();
        assert_eq!(law[&2], rational(1, 5));
        assert_eq!(law[&3], rational(4, 5));
        assert_eq!(bienayme_height_law(&nu, 5).unwrap().unwrap()[&2], rational(1, 1));
        assert!(bienayme_height_law(&nu, 4).unwrap().is_none());
        let labeled = bienayme_labeled_law(&nu, 5).unwrap();
        assert_eq!(labeled.len(), 60);
        // All labeled trees with the same degree multiset are equally likely.
        let p = labeled.values().next().unwrap().clone();
        assert!(labeled.values().all(|x| *x == p));
    }
}
