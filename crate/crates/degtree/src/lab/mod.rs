//! Monte Carlo and exhaustive checks of height tail inequalities.

mod stats;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde_json::{json, Value};
use thiserror::Error;

pub use stats::{
    chi_square_p, ks_one_sided, mean_and_stderr, total_variation, wilson_interval, wilson_upper, z99,
};

use crate::codec::{self, construction_trace, CodeIter, CodecError, ConstructionTrace, SequenceCode};
use crate::samplers::{
    par_samples, sample_uniform_code, sample_uniform_tree, ConditionedSampler, SamplerError,
    DEFAULT_MAX_REJECTIONS,
};
use crate::trees::{DegreeSequence, LabeledRootedTree, TreeError};
use crate::weights::{tilt, WeightError, WeightSequence};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("sigma_d is zero")]
    SigmaZero,
    #[error("{0}")]
    Invalid(String),
}

/// Where random trees come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Uniform over `T_d`; the size is fixed by `d`.
    Degrees(DegreeSequence),
    /// Conditioned Bienaymé tree with this offspring law.
    Offspring(WeightSequence),
    /// Simply generated tree with these weights.
    Weights(WeightSequence),
}

impl Source {
    /// True when every tree the source can produce at size `n` is a path.
    pub fn forces_path(&self, n: usize) -> bool {
        match self {
            Source::Degrees(d) => d.len() == n && d.max_degree() <= 1,
            Source::Offspring(w) | Source::Weights(w) => w.weights().iter().skip(2).all(|&x| x == 0.0),
        }
    }
}

enum Prepared {
    Uniform(DegreeSequence),
    Conditioned(ConditionedSampler),
}

impl Prepared {
    fn new(source: &Source, n: usize) -> Result<Self, LabError> {
        match source {
            Source::Degrees(d) => {
                if d.len() != n {
                    return Err(LabError::Invalid(format!("degree sequence has length {}, not {n}", d.len())));
                }
                Ok(Self::Uniform(d.clone()))
            }
            Source::Offspring(mu) => Ok(Self::Conditioned(ConditionedSampler::from_weights(
                mu,
                n,
                DEFAULT_MAX_REJECTIONS,
            )?)),
            Source::Weights(w) => {
                let t = tilt(w, 1e-12)?;
                Ok(Self::Conditioned(ConditionedSampler::from_weights(
                    &t.offspring(),
                    n,
                    DEFAULT_MAX_REJECTIONS,
                )?))
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LabeledRootedTree, LabError> {
        match self {
            Self::Uniform(d) => Ok(sample_uniform_tree(d, rng)),
            Self::Conditioned(s) => Ok(s.sample(rng)?),
        }
    }
}

/// `samples` iid trees of size `n` from `source`, reduced by `f`.
pub fn sample_trees<T, F>(source: &Source, n: usize, samples: usize, seed: u64, f: F) -> Result<Vec<T>, LabError>
where
    T: Send,
    F: Fn(&LabeledRootedTree) -> T + Sync,
{
    let prepared = Prepared::new(source, n)?;
    par_samples(seed, samples, |rng| prepared.draw(rng).map(|t| f(&t)))
        .into_iter()
        .collect()
}

pub fn sample_heights(source: &Source, n: usize, samples: usize, seed: u64) -> Result<Vec<usize>, LabError> {
    sample_trees(source, n, samples, seed, LabeledRootedTree::height)
}

/// `x = 0.5, 1, ..., 8` in units of `sqrt(n)`.
pub fn default_grid() -> Vec<f64> {
    (1..=16).map(|i| i as f64 * 0.5).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    pub n: usize,
    pub samples: usize,
    pub grid: Vec<f64>,
    /// Number of samples with height above `x sqrt(n)`.
    pub exceed: Vec<u64>,
    pub survival: Vec<f64>,
    /// Wilson 99% upper confidence bound on each survival probability.
    pub upper: Vec<f64>,
    pub seed: u64,
}

impl EmpiricalTail {
    pub fn from_heights(n: usize, heights: &[usize], grid: &[f64], seed: u64) -> Self {
        let root = (n as f64).sqrt();
        let exceed: Vec<u64> = grid
            .iter()
            .map(|&x| heights.iter().filter(|&&h| h as f64 > x * root).count() as u64)
            .collect();
        let m = heights.len() as u64;
        Self {
            n,
            samples: heights.len(),
            grid: grid.to_vec(),
            survival: exceed.iter().map(|&k| k as f64 / m as f64).collect(),
            upper: exceed.iter().map(|&k| wilson_upper(k, m)).collect(),
            exceed,
            seed,
        }
    }
}

pub fn tail_experiment(
    source: &Source,
    n: usize,
    samples: usize,
    grid: &[f64],
    seed: u64,
) -> Result<EmpiricalTail, LabError> {
    let heights = sample_heights(source, n, samples, seed)?;
    Ok(EmpiricalTail::from_heights(n, &heights, grid, seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub x: f64,
    pub upper: f64,
    pub bound: f64,
    /// False when `x` lies outside the range where the inequality is claimed.
    pub applicable: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundVerdict {
    pub rows: Vec<BoundRow>,
    pub pass: bool,
}

impl BoundVerdict {
    fn from_rows(rows: Vec<BoundRow>) -> Self {
        let pass = rows.iter().all(|r| r.holds);
        Self { rows, pass }
    }

    /// Rows where the bound is below one and the inequality applies.
    pub fn informative(&self) -> usize {
        self.rows.iter().filter(|r| r.applicable && r.bound < 1.0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,upper_ci,bound,applicable,holds\n");
        for r in &self.rows {
            out += &format!("{},{},{},{},{}\n", r.x, r.upper, r.bound, r.applicable, r.holds);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass,
            "rows": self.rows.iter().map(|r| json!({
                "x": r.x, "upper_ci": r.upper, "bound": r.bound,
                "applicable": r.applicable, "holds": r.holds,
            })).collect::<Vec<_>>(),
        })
    }
}

fn holds(upper: f64, bound: f64) -> bool {
    bound >= 1.0 || upper <= bound
}

/// `P(ht > x sqrt(n)) < 5 exp(-delta x^2 / 2^13)` at each grid point.
pub fn check_gaussian_bound(tail: &EmpiricalTail, delta: f64) -> BoundVerdict {
    let rows = tail
        .grid
        .iter()
        .zip(&tail.upper)
        .map(|(&x, &upper)| {
            let bound = 5.0 * (-delta * x * x / 8192.0).exp();
            BoundRow { x, upper, bound, applicable: true, holds: holds(upper, bound) }
        })
        .collect();
    BoundVerdict::from_rows(rows)
}

/// The large-sigma bound. A grid value `g` (in `sqrt(n)` units) corresponds to
/// `x = g sigma_d / log(sigma' + 1)`, and the bound `4 exp(-x log(sigma' + 1) / 2^14)`
/// is claimed only for `x >= 2^14`.
pub fn check_logsigma_bound(tail: &EmpiricalTail, sigma_d: f64, sigma_prime: f64) -> BoundVerdict {
    let scale = (sigma_prime + 1.0).ln();
    let rows = tail
        .grid
        .iter()
        .zip(&tail.upper)
        .map(|(&g, &upper)| {
            let x = if scale > 0.0 { g * sigma_d / scale } else { 0.0 };
            let bound = 4.0 * (-x * scale / 16384.0).exp();
            let applicable = x >= 16384.0;
            BoundRow { x: g, upper, bound, applicable, holds: !applicable || holds(upper, bound) }
        })
        .collect();
    BoundVerdict::from_rows(rows)
}

/// Smallest grid value (in `sqrt(n)` units) at which the large-sigma bound applies.
pub fn logsigma_threshold(sigma_d: f64, sigma_prime: f64) -> f64 {
    16384.0 * (sigma_prime + 1.0).ln() / sigma_d
}

/// A Monte Carlo estimate against an inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloCheck {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub upper: f64,
    pub bound: f64,
    pub holds: bool,
}

impl MonteCarloCheck {
    fn new(hits: u64, samples: u64, bound: f64) -> Self {
        let upper = wilson_upper(hits, samples);
        Self {
            hits,
            samples,
            estimate: hits as f64 / samples as f64,
            upper,
            bound,
            holds: holds(upper, bound),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "hits": self.hits, "samples": self.samples, "estimate": self.estimate,
            "upper_ci": self.upper, "bound": self.bound, "holds": self.holds,
        })
    }
}

/// Everything needed to read off growing-prefix quantities for one code.
pub struct CodeView {
    pub tree: LabeledRootedTree,
    pub trace: ConstructionTrace,
    /// Step at which each label joins the growing tree, indexed by `label - 1`.
    pub joined: Vec<usize>,
    /// `prefix_height[k - 1]` is the height of the first `k` vertices.
    pub prefix_height: Vec<usize>,
}

impl CodeView {
    pub fn new(code: &SequenceCode) -> Self {
        let tree = codec::tree_from_sequence(code);
        let trace = construction_trace(code);
        let depths = tree.depths();
        let mut joined = vec![0; tree.n()];
        let mut prefix_height = Vec::with_capacity(tree.n());
        let mut best = 0;
        for (k, &v) in trace.w.iter().enumerate() {
            joined[v - 1] = k + 1;
            best = best.max(depths[v - 1]);
            prefix_height.push(best);
        }
        Self { tree, trace, joined, prefix_height }
    }

    /// Distance from `v_{rho(y)}` to the tree grown by step `rho(x)`.
    pub fn attachment_distance(&self, code: &SequenceCode, x: f64, y: f64) -> Result<usize, LabError> {
        let rx = self.trace.rho(x)?;
        let ry = self.trace.rho(y)?;
        let v = code.values()[ry - 1];
        Ok(self.tree.dist_to_subtree(v, |u| self.joined[u - 1] <= rx)?)
    }

    /// Height of the tree grown by step `rho(x)`.
    pub fn segment_height(&self, x: f64) -> Result<usize, LabError> {
        Ok(self.prefix_height[self.trace.rho(x)? - 1])
    }
}

fn compressed(d: &DegreeSequence) -> DegreeSequence {
    if d.is_compressed() {
        d.clone()
    } else {
        codec::compress(d).0
    }
}

fn pow_ratio(num: usize, den: usize, exp: usize) -> BigRational {
    let r = BigRational::new(BigInt::from(num), BigInt::from(den));
    (0..exp).fold(BigRational::from_integer(1.into()), |acc, _| acc * &r)
}

/// `(1 - x/(n-1))^b`.
pub fn attachment_bound(n: usize, x: usize, b: usize) -> BigRational {
    pow_ratio(n - 1 - x, n - 1, b)
}

/// Distance counts keyed by `(x, y)`, then by distance.
pub type AttachmentTables = BTreeMap<(usize, usize), BTreeMap<usize, u64>>;

/// Exact distribution of the attachment distance for every integer pair
/// `0 <= x <= y <= n_0 - 1`, as counts over all of `S_d`.
pub fn attachment_tables(d: &DegreeSequence) -> Result<AttachmentTables, LabError> {
    let d = compressed(d);
    let top = d.leaf_count() - 1;
    let mut out: BTreeMap<(usize, usize), BTreeMap<usize, u64>> = BTreeMap::new();
    for code in CodeIter::new(&d)? {
        let view = CodeView::new(&code);
        for x in 0..=top {
            for y in x..=top {
                let dist = view.attachment_distance(&code, x as f64, y as f64)?;
                *out.entry((x, y)).or_default().entry(dist).or_default() += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCheck {
    pub probability: BigRational,
    pub bound: BigRational,
    pub holds: bool,
}

fn tail_of(table: &BTreeMap<usize, u64>, above: usize) -> BigRational {
    let total: u64 = table.values().sum();
    let hits: u64 = table.range(above + 1..).map(|(_, c)| c).sum();
    BigRational::new(hits.into(), total.into())
}

/// Exact `P(dist(v_{rho(y)}, T_{rho(x)}) > b)` over all of `S_d`.
pub fn geometric_attachment_exact(d: &DegreeSequence, x: usize, y: usize, b: usize) -> Result<ExactCheck, LabError> {
    if !(x <= y && y < d.leaf_count()) || b == 0 {
        return Err(LabError::Invalid(format!("need 0 <= x <= y <= n0 - 1 and b >= 1, got ({x}, {y}, {b})")));
    }
    let tables = attachment_tables(d)?;
    let probability = tail_of(&tables[&(x, y)], b);
    let bound = attachment_bound(d.len(), x, b);
    Ok(ExactCheck { holds: probability <= bound, probability, bound })
}

pub fn geometric_attachment_experiment(
    d: &DegreeSequence,
    x: f64,
    y: f64,
    b: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloCheck, LabError> {
    let top = (d.leaf_count() - 1) as f64;
    if !(0.0 <= x && x <= y && y <= top) || b == 0 {
        return Err(LabError::Invalid(format!("need 0 <= x <= y <= {top} and b >= 1")));
    }
    let dc = compressed(d);
    let n = d.len();
    let flags: Result<Vec<bool>, LabError> = par_samples(seed, samples, |rng| {
        let code = sample_uniform_code(&dc, rng)?;
        Ok(CodeView::new(&code).attachment_distance(&code, x, y)? > b)
    })
    .into_iter()
    .collect();
    let hits = flags?.into_iter().filter(|&f| f).count() as u64;
    let bound = (1.0 - x / (n - 1) as f64).powi(b as i32);
    Ok(MonteCarloCheck::new(hits, samples as u64, bound))
}

/// `(y - x) / ((1 - p) b) (1 - x/(n-1))^floor(p b)` at `p = 1/2`.
pub fn maximal_bound(n: usize, x: usize, y: usize, b: usize) -> BigRational {
    let lead = BigRational::new(BigInt::from(2 * (y - x)), BigInt::from(b));
    lead * pow_ratio(n - 1 - x, n - 1, b / 2)
}

pub type MaximalChecks = Vec<((usize, usize, usize), ExactCheck)>;

/// Exact check of the maximal inequality at `p = 1/2` for every integer
/// `0 <= x <= y <= n_0 - 1` and `1 <= b <= max_b`. Requires no degree-one entries.
pub fn maximal_inequality_exact(d: &DegreeSequence, max_b: usize) -> Result<MaximalChecks, LabError> {
    if d.count(1) > 0 {
        return Err(LabError::Invalid("degree-one entries present".into()));
    }
    let dc = compressed(d);
    let top = dc.leaf_count() - 1;
    let mut increments: BTreeMap<(usize, usize), BTreeMap<usize, u64>> = BTreeMap::new();
    for code in CodeIter::new(&dc)? {
        let view = CodeView::new(&code);
        let hs: Vec<usize> = (0..=top).map(|x| view.segment_height(x as f64)).collect::<Result<_, _>>()?;
        for x in 0..=top {
            for y in x..=top {
                *increments.entry((x, y)).or_default().entry(hs[y] - hs[x]).or_default() += 1;
            }
        }
    }
    let mut out = Vec::new();
    for ((x, y), table) in &increments {
        for b in 1..=max_b {
            let probability = tail_of(table, b + 1);
            let bound = maximal_bound(d.len(), *x, *y, b);
            out.push(((*x, *y, b), ExactCheck { holds: probability <= bound, probability, bound }));
        }
    }
    Ok(out)
}

pub fn maximal_inequality_experiment(
    d: &DegreeSequence,
    x: usize,
    y: usize,
    b: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloCheck, LabError> {
    if d.count(1) > 0 || !(x <= y && y < d.leaf_count()) || b == 0 {
        return Err(LabError::Invalid("need n_1 = 0, 0 <= x <= y <= n0 - 1, b >= 1".into()));
    }
    let dc = compressed(d);
    let flags: Result<Vec<bool>, LabError> = par_samples(seed, samples, |rng| {
        let code = sample_uniform_code(&dc, rng)?;
        let view = CodeView::new(&code);
        Ok(view.segment_height(y as f64)? - view.segment_height(x as f64)? > b + 1)
    })
    .into_iter()
    .collect();
    let hits = flags?.into_iter().filter(|&f| f).count() as u64;
    let bound = num_traits::ToPrimitive::to_f64(&maximal_bound(d.len(), x, y, b)).unwrap_or(f64::INFINITY);
    Ok(MonteCarloCheck::new(hits, samples as u64, bound))
}

/// `(1 - e^-2) / 24`.
pub fn first_segment_alpha() -> f64 {
    (1.0 - (-2.0f64).exp()) / 24.0
}

/// Height of the tree grown by step `rho(alpha sigma sqrt n)` against
/// `b sqrt(n) / (2 sigma)`. The step argument is capped at `n_0 - 1`.
pub fn first_segment_experiment(d: &DegreeSequence, b: f64, samples: usize, seed: u64) -> Result<MonteCarloCheck, LabError> {
    if b < 1.0 {
        return Err(LabError::Invalid(format!("b = {b} below 1")));
    }
    let sigma = d.sigma_stats()?.sigma_d;
    if sigma <= 0.0 {
        return Err(LabError::SigmaZero);
    }
    let dc = compressed(d);
    let n = d.len() as f64;
    let alpha = first_segment_alpha();
    let x = (alpha * sigma * n.sqrt()).min((d.leaf_count() - 1) as f64);
    let level = b * n.sqrt() / (2.0 * sigma);
    let flags: Result<Vec<bool>, LabError> = par_samples(seed, samples, |rng| {
        let code = sample_uniform_code(&dc, rng)?;
        Ok(CodeView::new(&code).segment_height(x)? as f64 > level)
    })
    .into_iter()
    .collect();
    let hits = flags?.into_iter().filter(|&f| f).count() as u64;
    let bound = (-3.0 / 32.0 * b * n.sqrt() / sigma).exp() + (-alpha * b / 2.0).exp();
    Ok(MonteCarloCheck::new(hits, samples as u64, bound))
}

/// `E S = sum x_i (1 - exp(-x_i t))`.
pub fn exp_sum_mean(xs: &[f64], t: f64) -> f64 {
    xs.iter().map(|&x| x * (1.0 - (-x * t).exp())).sum()
}

/// `S = sum x_i 1{E_i <= t}` with `E_i ~ Exp(rate x_i)`; estimates `P(S < E S / 2)`
/// against `exp(-t E S / 4)`.
pub fn exp_sum_experiment(xs: &[f64], t: f64, samples: usize, seed: u64) -> Result<MonteCarloCheck, LabError> {
    if xs.is_empty() || xs.iter().any(|&x| !x.is_finite() || x <= 0.0) || t.is_nan() || t <= 0.0 {
        return Err(LabError::Invalid("need positive xs and t".into()));
    }
    let clocks: Vec<Exp<f64>> = xs.iter().map(|&x| Exp::new(x).expect("positive rate")).collect();
    let mean = exp_sum_mean(xs, t);
    let flags = par_samples(seed, samples, |rng| {
        let s: f64 = xs
            .iter()
            .zip(&clocks)
            .filter(|(_, e)| e.sample(rng) <= t)
            .map(|(&x, _)| x)
            .sum();
        s < mean / 2.0
    });
    let hits = flags.into_iter().filter(|&f| f).count() as u64;
    Ok(MonteCarloCheck::new(hits, samples as u64, (-t * mean / 4.0).exp()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub moment: f64,
    pub stderr: f64,
    /// `moment / n^(r/2)`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub r: f64,
    pub rows: Vec<MomentRow>,
    pub warnings: Vec<String>,
}

impl MomentTable {
    /// `max ratio / min ratio - 1`.
    pub fn spread(&self) -> f64 {
        let hi = self.rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
        let lo = self.rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
        hi / lo - 1.0
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ratio < w[0].ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,moment,stderr,ratio,ratio_stderr\n");
        for r in &self.rows {
            out += &format!("{},{},{},{},{}\n", r.n, r.moment, r.stderr, r.ratio, r.ratio_stderr);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "r": self.r,
            "warnings": self.warnings,
            "rows": self.rows.iter().map(|r| json!({
                "n": r.n, "moment": r.moment, "stderr": r.stderr,
                "ratio": r.ratio, "ratio_stderr": r.ratio_stderr,
            })).collect::<Vec<_>>(),
        })
    }
}

/// A seed for size `n` derived from the master seed.
pub fn seed_for_size(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Estimates `E[ht^r] / n^(r/2)` at each size; `family(n)` gives the source at size `n`.
pub fn moment_scaling(
    family: &dyn Fn(usize) -> Result<Source, LabError>,
    r: f64,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<MomentTable, LabError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &n in n_list {
        let source = family(n)?;
        if source.forces_path(n) {
            warnings.push(format!("n = {n}: every tree is a path, so the ratio grows with n"));
        }
        let heights = sample_heights(&source, n, samples, seed_for_size(seed, n))?;
        let powers: Vec<f64> = heights.iter().map(|&h| (h as f64).powf(r)).collect();
        let (moment, stderr) = mean_and_stderr(&powers);
        let scale = (n as f64).powf(r / 2.0);
        rows.push(MomentRow { n, moment, stderr, ratio: moment / scale, ratio_stderr: stderr / scale });
    }
    Ok(MomentTable { r, rows, warnings })
}

/// `E[ht] / sqrt(n)` across sizes.
pub fn vanishing_height_experiment(
    family: &dyn Fn(usize) -> Result<Source, LabError>,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<MomentTable, LabError> {
    moment_scaling(family, 1.0, n_list, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::compressed_degree_sequences;
    use crate::weights::binary;
    use num_traits::ToPrimitive;

    fn ds(v: &[usize]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    fn path(n: usize) -> DegreeSequence {
        let mut v = vec![1; n];
        v[n - 1] = 0;
        ds(&v)
    }

    #[test]
    fn path_tails_are_trivial() {
        let n = 25;
        let tail = tail_experiment(&Source::Degrees(path(n)), n, 50, &[1.0, 4.0, 4.9, 5.0, 6.0], 1).unwrap();
        // Height n - 1 = 24 exceeds x * 5 exactly when x < 4.8.
        assert_eq!(tail.survival, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(tail.survival.windows(2).all(|w| w[0] >= w[1]));
    }

    // Exact height law of full binary plane trees with m internal nodes:
    // trees of height at most h + 1 satisfy y_{h+1}(z) = 1 + z y_h(z)^2.
    fn binary_height_survival(m: usize, heights: &[usize]) -> Vec<f64> {
        let mut y = vec![0.0f64; m + 1];
        y[0] = 1.0;
        let mut at_most = vec![y[m]];
        while at_most.len() <= *heights.iter().max().unwrap() {
            let mut next = vec![0.0; m + 1];
            next[0] = 1.0;
            for k in 1..=m {
                next[k] = (0..k).map(|i| y[i] * y[k - 1 - i]).sum();
            }
            y = next;
            at_most.push(y[m]);
        }
        let total = *at_most.last().unwrap();
        let total = if heights.iter().max().unwrap() >= &m { total } else {
            // Catalan number by the same recursion without a height cap.
            let mut c = vec![1.0f64; m + 1];
            for k in 1..=m {
                c[k] = (0..k).map(|i| c[i] * c[k - 1 - i]).sum();
            }
            c[m]
        };
        heights.iter().map(|&h| 1.0 - at_most[h] / total).collect()
    }

    #[test]
    fn binary_tail_matches_exact_law() {
        let n = 401;
        let grid = default_grid();
        let tail = tail_experiment(&Source::Offspring(binary()), n, 10_000, &grid, 3).unwrap();
        let cut: Vec<usize> = grid.iter().map(|x| (x * (n as f64).sqrt()).floor() as usize).collect();
        let exact = binary_height_survival(200, &cut);
        for ((&k, p), x) in tail.exceed.iter().zip(&exact).zip(&grid) {
            let (lo, hi) = wilson_interval(k, 10_000, 4.0);
            assert!(lo <= *p && *p <= hi, "x = {x}: exact {p}, observed {k}");
        }
        assert!((exact[5] - 0.0591).abs() < 1e-3);
        assert!(tail.survival.windows(2).all(|w| w[0] >= w[1]));
        let v = check_gaussian_bound(&tail, 1.0);
        assert!(v.pass);
        // The constants make the bound exceed one on this grid.
        assert_eq!(v.informative(), 0);
    }

    #[test]
    fn logsigma_rows() {
        let thr = logsigma_threshold(10.0, 10.0);
        let tail = EmpiricalTail::from_heights(100, &[3; 1000], &[1.0, thr, 2.0 * thr], 0);
        let v = check_logsigma_bound(&tail, 10.0, 10.0);
        assert!(!v.rows[0].applicable);
        assert!(v.rows[1].applicable && v.rows[1].holds);
        // At the threshold the bound is 4 / (sigma' + 1).
        assert!((v.rows[1].bound - 4.0 / 11.0).abs() < 1e-9);
        assert!(v.informative() == 2 && v.pass);
    }

    #[test]
    fn attachment_exact_small_example() {
        let d = ds(&[2, 2, 2, 0, 0, 0, 0]);
        let c = geometric_attachment_exact(&d, 1, 2, 2).unwrap();
        assert!(c.holds);
        assert_eq!(c.bound, BigRational::new(25.into(), 36.into()));
        // x = 0 makes the bound one.
        assert_eq!(geometric_attachment_exact(&d, 0, 3, 1).unwrap().bound, BigRational::from_integer(1.into()));
    }

    // Attachment distance by brute force from the tree and the growth order alone.
    #[test]
    fn attachment_matches_direct_computation() {
        let code = SequenceCode::new(vec![4, 3, 3, 1, 2, 1]).unwrap();
        let view = CodeView::new(&code);
        // rho(2) = 4 so T_4 = {1, 3, 4, 5}.
        let rho1 = view.trace.rho(1.0).unwrap();
        let v = code.values()[3];
        let members = &view.trace.w[..rho1];
        let mut dist = 0;
        let mut u = v;
        while !members.contains(&u) {
            u = view.tree.parent(u).unwrap();
            dist += 1;
        }
        assert_eq!(view.attachment_distance(&code, 1.0, 2.0).unwrap(), dist);
        let t4 = crate::trees::PartialTree::restrict(&view.tree, &view.trace.w[..4]).unwrap();
        assert_eq!(view.segment_height(2.0).unwrap(), t4.height());
    }

    #[test]
    fn exhaustive_attachment_and_maximal_n6() {
        for d in compressed_degree_sequences(6) {
            for ((x, y), table) in attachment_tables(&d).unwrap() {
                for b in 1..=6 {
                    assert!(tail_of(&table, b) <= attachment_bound(6, x, b), "d = {d}, ({x}, {y}, {b})");
                }
            }
            if d.count(1) == 0 {
                assert!(maximal_inequality_exact(&d, 6).unwrap().iter().all(|(_, c)| c.holds));
            }
        }
    }

    #[test]
    fn monte_carlo_attachment_agrees_with_exact() {
        let d = ds(&[2, 2, 2, 0, 0, 0, 0]);
        let exact = geometric_attachment_exact(&d, 1, 2, 1).unwrap().probability.to_f64().unwrap();
        let mc = geometric_attachment_experiment(&d, 1.0, 2.0, 1, 20_000, 5).unwrap();
        let (lo, hi) = wilson_interval(mc.hits, mc.samples, 3.5);
        assert!(lo <= exact && exact <= hi, "{exact} vs {mc:?}");
        assert!(mc.holds);
        let big = geometric_attachment_experiment(&d, 1.0, 2.0, 7, 200, 5).unwrap();
        assert_eq!(big.hits, 0);
    }

    #[test]
    fn first_segment_runs() {
        let mut v = vec![0; 200];
        v[0] = 100;
        for x in v.iter_mut().skip(1).take(99) {
            *x = 1;
        }
        let d = ds(&v);
        let c = first_segment_experiment(&d, 1.0, 500, 2).unwrap();
        assert!(c.holds);
        assert!(matches!(first_segment_experiment(&path(5), 1.0, 10, 0), Err(LabError::SigmaZero)));
    }

    #[test]
    fn exp_sum_single_point_closed_form() {
        let (x, t) = (1.5, 0.7);
        let c = exp_sum_experiment(&[x], t, 40_000, 9).unwrap();
        let exact = (-x * t).exp();
        let (lo, hi) = wilson_interval(c.hits, c.samples, 3.5);
        assert!(lo <= exact && exact <= hi);
        assert!(exact <= (-t * x * (1.0 - exact) / 4.0).exp());
        assert!(c.holds);
        let tiny = exp_sum_experiment(&[1.0, 2.0], 1e-9, 100, 0).unwrap();
        assert!(tiny.bound > 0.999_999);
    }

    #[test]
    fn star_ratio_vanishes() {
        let star = |n: usize| {
            let mut v = vec![0; n];
            v[0] = n - 1;
            Ok(Source::Degrees(DegreeSequence::new(v).unwrap()))
        };
        let t = vanishing_height_experiment(&star, &[4, 16, 64], 10, 0).unwrap();
        assert!(t.rows.iter().all(|r| r.moment == 1.0));
        assert!(t.strictly_decreasing());
        let paths = |n: usize| Ok(Source::Degrees(path(n)));
        let t = moment_scaling(&paths, 1.0, &[4, 16], 5, 0).unwrap();
        assert_eq!(t.warnings.len(), 2);
        assert!(!t.strictly_decreasing());
    }
}
