use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;

use super::{fold_trees, EnumError, HeightDistribution, DEFAULT_BUDGET};
use crate::trees::{DegreeSequence, LabeledRootedTree};

/// Canonical form of a class: the root plus the forest left after cutting the
/// edges from labels 1 and 2 to their children, minimised over swapping 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EquivClassKey(Vec<usize>);

impl EquivClassKey {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

fn forest_encoding(t: &LabeledRootedTree) -> Vec<usize> {
    let mut out = Vec::with_capacity(t.n() + 1);
    out.push(t.root());
    out.extend(
        t.parents()
            .iter()
            .map(|&p| if p == 1 || p == 2 { 0 } else { p }),
    );
    out
}

pub fn equiv_class_key(t: &LabeledRootedTree) -> EquivClassKey {
    assert!(t.n() >= 2, "classes need labels 1 and 2");
    let a = forest_encoding(t);
    let b = forest_encoding(&t.swap_labels(1, 2));
    EquivClassKey(a.min(b))
}

/// `(d_1 + 1, d_2 - 1, d_3, ...)`.
pub fn companion(d: &DegreeSequence) -> Result<DegreeSequence, EnumError> {
    if d.len() < 2 || d.degree(2) == 0 {
        return Err(EnumError::InvalidCompanion);
    }
    let mut v = d.as_slice().to_vec();
    v[0] += 1;
    v[1] -= 1;
    Ok(DegreeSequence::new(v).expect("sum unchanged"))
}

pub type ClassTable = BTreeMap<EquivClassKey, BigRational>;

/// Exact probability that a uniform tree of `T_d` lies in each class.
pub fn class_probability_table(d: &DegreeSequence) -> Result<ClassTable, EnumError> {
    companion(d)?;
    class_masses(d)
}

/// Class probabilities without the companion precondition.
pub fn class_masses(d: &DegreeSequence) -> Result<ClassTable, EnumError> {
    let tables = class_height_tables(d, DEFAULT_BUDGET)?;
    let total: BigUint = tables.values().map(|h| h.total().clone()).sum();
    Ok(tables
        .into_iter()
        .map(|(k, h)| (k, BigRational::new(h.total().clone().into(), total.clone().into())))
        .collect())
}

/// Height law of the trees of `T_d` inside each class.
pub fn class_height_tables(
    d: &DegreeSequence,
    budget: u64,
) -> Result<BTreeMap<EquivClassKey, HeightDistribution>, EnumError> {
    fold_trees(
        d,
        budget,
        BTreeMap::<EquivClassKey, BTreeMap<usize, u64>>::new,
        |m, t| {
            *m.entry(equiv_class_key(&t))
                .or_default()
                .entry(t.height())
                .or_default() += 1
        },
        |mut a, b| {
            for (k, hs) in b {
                let e = a.entry(k).or_default();
                for (h, c) in hs {
                    *e.entry(h).or_default() += c;
                }
            }
            a
        },
    )
    .map(|m| {
        m.into_iter()
            .map(|(k, hs)| {
                let counts = hs.into_iter().map(|(h, c)| (h, BigUint::from(c))).collect();
                (k, HeightDistribution::from_counts(counts))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{all_degree_sequences, all_trees};
    use std::collections::HashSet;

    fn ds(v: &[usize]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    // Quadratic oracle from the definition: same root and the same edge set
    // once edges out of 1 and 2 are dropped, possibly after swapping 1 and 2.
    fn related(a: &LabeledRootedTree, b: &LabeledRootedTree) -> bool {
        let edges = |x: &LabeledRootedTree| -> HashSet<(usize, usize)> {
            (1..=x.n())
                .filter_map(|v| x.parent(v).map(|p| (p, v)))
                .filter(|&(p, _)| p > 2)
                .collect()
        };
        let same = |x: &LabeledRootedTree, y: &LabeledRootedTree| {
            x.root() == y.root() && edges(x) == edges(y)
        };
        same(a, b) || same(&a.swap_labels(1, 2), b)
    }

    #[test]
    fn key_matches_pairwise_relation() {
        for n in 2..=5 {
            let trees: Vec<_> = all_degree_sequences(n)
                .iter()
                .flat_map(|d| all_trees(d, DEFAULT_BUDGET).unwrap())
                .collect();
            let keys: Vec<_> = trees.iter().map(equiv_class_key).collect();
            for i in 0..trees.len() {
                for j in 0..trees.len() {
                    assert_eq!(keys[i] == keys[j], related(&trees[i], &trees[j]));
                }
            }
        }
    }

    #[test]
    fn swap_shares_key() {
        let t: LabeledRootedTree = "3;3,1,0,2,2".parse().unwrap();
        assert_eq!(equiv_class_key(&t), equiv_class_key(&t.swap_labels(1, 2)));
    }

    #[test]
    fn small_companion_tables_agree() {
        let d = ds(&[1, 1, 0]);
        let dp = companion(&d).unwrap();
        assert_eq!(dp, ds(&[2, 0, 0]));
        assert_eq!(class_probability_table(&d).unwrap(), class_masses(&dp).unwrap());
        assert_eq!(class_probability_table(&ds(&[2, 0, 0])), Err(EnumError::InvalidCompanion));
    }
}
