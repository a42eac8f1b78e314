use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;

use super::EnumError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EggsVariant {
    /// Random sets inside `[n]`.
    Full,
    /// Random sets inside `[n - 1]`, sizes still measured against `n`.
    DropLast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EggsVerdict {
    /// `(x, P(max <= x))` at every atom, starting with `x = 0`.
    pub cdf_k: Vec<(f64, BigRational)>,
    pub cdf_l: Vec<(f64, BigRational)>,
    /// The `l` maximum is stochastically at most the `k` maximum.
    pub holds: bool,
}

/// Exact law of `max(a_i : i in A)` for `A` uniform over the sets of size
/// `s` or `n - s`, with `max` of the empty set taken as zero.
fn max_law(a: &[f64], ground: usize, s: usize, points: &[f64]) -> Vec<(f64, BigRational)> {
    let n = a.len();
    let sizes: BTreeSet<usize> = [s, n - s].into_iter().filter(|&x| x <= ground).collect();
    let mut hits = vec![0u64; points.len()];
    let mut total = 0u64;
    for mask in 0u32..(1u32 << ground) {
        if !sizes.contains(&(mask.count_ones() as usize)) {
            continue;
        }
        total += 1;
        let top = (0..ground)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| a[i])
            .fold(0.0, f64::max);
        let idx = points.partition_point(|&p| p < top);
        hits[idx] += 1;
    }
    let mut acc = 0u64;
    points
        .iter()
        .zip(hits)
        .map(|(&x, h)| {
            acc += h;
            (x, BigRational::new(BigUint::from(acc).into(), BigUint::from(total).into()))
        })
        .collect()
}

pub fn eggs_oracle(
    a: &[f64],
    k: usize,
    l: usize,
    variant: EggsVariant,
) -> Result<EggsVerdict, EnumError> {
    let n = a.len();
    if n == 0 || n > 20 {
        return Err(EnumError::ParameterOrder(format!("n = {n} outside 1..=20")));
    }
    if !(2 * k >= n && k < l && l <= n) {
        return Err(EnumError::ParameterOrder(format!(
            "need n/2 <= k < l <= n, got n = {n}, k = {k}, l = {l}"
        )));
    }
    if a.iter().any(|&x| x.is_nan() || x <= 0.0) || a.windows(2).any(|w| w[0] > w[1]) {
        return Err(EnumError::ParameterOrder("a must be positive and sorted".into()));
    }
    let ground = match variant {
        EggsVariant::Full => n,
        EggsVariant::DropLast => n - 1,
    };
    let mut points = vec![0.0];
    points.extend_from_slice(a);
    points.dedup();
    let cdf_k = max_law(a, ground, k, &points);
    let cdf_l = max_law(a, ground, l, &points);
    let holds = cdf_k.iter().zip(&cdf_l).all(|((_, fk), (_, fl))| fl >= fk);
    Ok(EggsVerdict { cdf_k, cdf_l, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::rational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_example() {
        let v = eggs_oracle(&[1.0, 2.0], 1, 2, EggsVariant::Full).unwrap();
        // k = 1: max is 1 or 2, each with probability 1/2.
        assert_eq!(v.cdf_k, vec![(0.0, rational(0, 1)), (1.0, rational(1, 2)), (2.0, rational(1, 1))]);
        // l = 2: max is 0 or 2, each with probability 1/2.
        assert_eq!(v.cdf_l, vec![(0.0, rational(1, 2)), (1.0, rational(1, 2)), (2.0, rational(1, 1))]);
        assert!(v.holds);
    }

    #[test]
    fn equal_values_give_equal_laws_when_nonempty() {
        // With all a_i equal and no empty sets involved, both maxima are constant.
        let a = [3.0; 6];
        let v = eggs_oracle(&a, 3, 5, EggsVariant::Full).unwrap();
        assert_eq!(v.cdf_k, v.cdf_l);
        assert!(v.holds);
    }

    #[test]
    fn closed_form_cdf() {
        // P(max < a_{i+1}) = [C(i, k) + C(i, n - k)] / (2 C(n, k)) for distinct values and k != n - k.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let (n, k) = (7usize, 4usize);
        let v = eggs_oracle(&a, k, 5, EggsVariant::Full).unwrap();
        let c = |x: usize, y: usize| -> u64 {
            if y > x {
                0
            } else {
                (0..y).fold(1u64, |acc, i| acc * (x - i) as u64 / (i + 1) as u64)
            }
        };
        for i in 0..n {
            let want = rational(c(i, k) + c(i, n - k), 2 * c(n, k));
            assert_eq!(v.cdf_k[i].1, want, "i = {i}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(eggs_oracle(&[1.0, 2.0, 3.0], 1, 2, EggsVariant::Full).is_err());
        assert!(eggs_oracle(&[1.0, 2.0, 3.0], 2, 2, EggsVariant::Full).is_err());
        assert!(eggs_oracle(&[2.0, 1.0], 1, 2, EggsVariant::Full).is_err());
    }

    #[test]
    fn random_vectors_n6() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let mut a: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..10.0)).collect();
            a.sort_by(f64::total_cmp);
            for k in 3..6 {
                for l in k + 1..=6 {
                    for var in [EggsVariant::Full, EggsVariant::DropLast] {
                        assert!(eggs_oracle(&a, k, l, var).unwrap().holds);
                    }
                }
            }
        }
    }
}
