//! Uniform trees with a given degree sequence, conditioned Bienaymé trees,
//! simply generated trees and size-biased orders.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{self, CodecError, SequenceCode};
use crate::trees::{DegreeSequence, Label, LabeledRootedTree};
use crate::weights::{self, WeightError, WeightSequence};

pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("no acceptance after {0} attempts")]
    RejectionBudgetExceeded(u64),
    #[error("offspring law must be non-negative with mu_0 > 0")]
    InvalidOffspring,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// A ChaCha stream derived from a master seed and a stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f` once per sample in parallel, giving chunk `c` the stream `c`.
///
/// Output order and values depend only on `seed`, never on the thread count.
pub fn par_samples<T, F>(seed: u64, samples: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    const CHUNK: usize = 64;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// A uniformly random element of `S_d` for compressed `d`.
pub fn sample_uniform_code<R: Rng + ?Sized>(
    d: &DegreeSequence,
    rng: &mut R,
) -> Result<SequenceCode, CodecError> {
    if !d.is_compressed() {
        return Err(CodecError::NotCompressed);
    }
    let mut values = Vec::with_capacity(d.len() - 1);
    for (i, &x) in d.as_slice().iter().enumerate() {
        values.extend(std::iter::repeat_n(i + 1, x));
    }
    values.shuffle(rng);
    Ok(SequenceCode::from_parts_unchecked(values, d.clone()))
}

/// A uniformly random element of `T_d` for any `d`.
pub fn sample_uniform_tree<R: Rng + ?Sized>(d: &DegreeSequence, rng: &mut R) -> LabeledRootedTree {
    if d.is_compressed() {
        let code = sample_uniform_code(d, rng).expect("compressed");
        return codec::tree_from_sequence(&code);
    }
    let (dc, relabel) = codec::compress(d);
    let code = sample_uniform_code(&dc, rng).expect("compressed");
    codec::tree_from_sequence(&code).relabel(&codec::invert_permutation(&relabel))
}

/// Draws iid offspring counts conditioned on summing to `n - 1`.
///
/// Conditioning an iid vector on its sum is unchanged by exponential
/// reweighting `mu_k -> mu_k s^k / Phi(s)`, so draws use the reweighting whose
/// mean is `(n - 1) / n`. Values above `n - 1` can never be accepted and are
/// dropped up front.
#[derive(Debug, Clone)]
pub struct ConditionedSampler {
    n: usize,
    max_rejections: u64,
    /// Degrees below the split, largest first, with conditional probabilities.
    head: Vec<(usize, f64)>,
    /// Degrees at or above the split and their cumulative probabilities.
    tail_values: Vec<usize>,
    tail_cdf: Vec<f64>,
    tail_mass: f64,
    law: Vec<f64>,
}

const HEAD_SPLIT: usize = 24;

impl ConditionedSampler {
    pub fn new(mu: &[f64], n: usize, max_rejections: u64) -> Result<Self, SamplerError> {
        if n == 0
            || mu.is_empty()
            || mu[0] <= 0.0
            || mu.iter().any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(SamplerError::InvalidOffspring);
        }
        let cut: Vec<f64> = mu.iter().take(n).copied().collect();
        let target = (n - 1) as f64 / n as f64;
        let law = reweight_to_mean(&cut, target);

        let support: Vec<usize> = (0..law.len()).filter(|&k| law[k] > 0.0).collect();
        let tail_values: Vec<usize> = support.iter().copied().filter(|&k| k >= HEAD_SPLIT).collect();
        let tail_mass: f64 = tail_values.iter().map(|&k| law[k]).sum();
        let mut acc = 0.0;
        let tail_cdf = tail_values
            .iter()
            .map(|&k| {
                acc += law[k] / tail_mass;
                acc
            })
            .collect();
        // Sequential binomial splitting: P(k | not any larger head value).
        let head_vals: Vec<usize> = support.iter().copied().filter(|&k| k < HEAD_SPLIT).collect();
        let mut rest: f64 = head_vals.iter().map(|&k| law[k]).sum();
        let mut head = Vec::new();
        for &k in head_vals.iter().rev() {
            let p = if rest > 0.0 { (law[k] / rest).min(1.0) } else { 1.0 };
            head.push((k, p));
            rest -= law[k];
        }
        Ok(Self {
            n,
            max_rejections,
            head,
            tail_values,
            tail_cdf,
            tail_mass,
            law,
        })
    }

    pub fn from_weights(mu: &WeightSequence, n: usize, max_rejections: u64) -> Result<Self, SamplerError> {
        Self::new(mu.weights(), n, max_rejections)
    }

    /// The reweighted law actually used for proposals.
    pub fn proposal_law(&self) -> &[f64] {
        &self.law
    }

    /// One proposal; true when the offspring counts in `counts` sum to `n - 1`.
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R, counts: &mut Vec<(usize, usize)>) -> bool {
        counts.clear();
        let target = self.n - 1;
        let mut remaining = self.n as u64;
        let mut sum = 0usize;
        if self.tail_mass > 0.0 {
            let nt = Binomial::new(remaining, self.tail_mass.min(1.0))
                .expect("probability in [0, 1]")
                .sample(rng);
            for _ in 0..nt {
                let u: f64 = rng.random();
                let i = self.tail_cdf.partition_point(|&c| c < u).min(self.tail_values.len() - 1);
                let k = self.tail_values[i];
                sum += k;
                if sum > target {
                    return false;
                }
                counts.push((k, 1));
            }
            remaining -= nt;
        }
        for (idx, &(k, p)) in self.head.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let c = if idx + 1 == self.head.len() || p >= 1.0 {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, p).expect("probability in (0, 1)").sample(rng)
            };
            if c > 0 {
                sum += k * c as usize;
                if sum > target {
                    return false;
                }
                counts.push((k, c as usize));
                remaining -= c;
            }
        }
        remaining == 0 && sum == target
    }

    /// An exchangeable degree sequence with the conditioned iid law, plus the
    /// number of proposals used.
    pub fn sample_degrees<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(DegreeSequence, u64), SamplerError> {
        if self.n == 1 {
            return Ok((DegreeSequence::new(vec![0]).expect("valid"), 1));
        }
        let mut counts = Vec::new();
        for attempt in 1..=self.max_rejections {
            if self.propose(rng, &mut counts) {
                let mut d = Vec::with_capacity(self.n);
                for &(k, c) in &counts {
                    d.extend(std::iter::repeat_n(k, c));
                }
                d.shuffle(rng);
                return Ok((DegreeSequence::new(d).expect("sum checked"), attempt));
            }
        }
        Err(SamplerError::RejectionBudgetExceeded(self.max_rejections))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LabeledRootedTree, SamplerError> {
        let (d, _) = self.sample_degrees(rng)?;
        Ok(sample_uniform_tree(&d, rng))
    }
}

/// Finite-support exponential reweighting with mean `target`, or the input
/// normalised when no reweighting can reach it.
fn reweight_to_mean(w: &[f64], target: f64) -> Vec<f64> {
    let top = w.iter().rposition(|&x| x > 0.0).unwrap_or(0);
    let z: f64 = w.iter().sum();
    if top == 0 || target <= 0.0 || target >= top as f64 {
        return w.iter().map(|x| x / z).collect();
    }
    let seq = WeightSequence::finite_unchecked(w.to_vec());
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while seq.psi(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if seq.psi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    seq.tilted(0.5 * (lo + hi))
}

/// A conditioned Bienaymé tree with offspring law `mu`, labels randomised and
/// plane order forgotten.
pub fn sample_conditioned_bienayme<R: Rng + ?Sized>(
    mu: &WeightSequence,
    n: usize,
    rng: &mut R,
    max_rejections: u64,
) -> Result<LabeledRootedTree, SamplerError> {
    ConditionedSampler::from_weights(mu, n, max_rejections)?.sample(rng)
}

/// A simply generated tree: tilt, then condition.
pub fn sample_simply_generated<R: Rng + ?Sized>(
    w: &WeightSequence,
    n: usize,
    rng: &mut R,
) -> Result<LabeledRootedTree, SamplerError> {
    let t = weights::tilt(w, 1e-12)?;
    sample_conditioned_bienayme(&t.offspring(), n, rng, DEFAULT_MAX_REJECTIONS)
}

/// Non-leaf labels ordered by independent clocks `E_i ~ Exp(d_i)`.
pub fn size_biased_order<R: Rng + ?Sized>(d: &DegreeSequence, rng: &mut R) -> Vec<Label> {
    let mut clocks: Vec<(f64, Label)> = (1..=d.len())
        .filter(|&v| d.degree(v) > 0)
        .map(|v| {
            let e = Exp::new(d.degree(v) as f64).expect("positive rate").sample(rng);
            (e, v)
        })
        .collect();
    clocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    clocks.into_iter().map(|(_, v)| v).collect()
}
