//! The acceptance suite: one check per property, each returning a report.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{count_trees, encode_any, rank, tree_from_sequence, unrank, CodeIter};
use crate::enumeration::{
    all_degree_sequences, all_trees, bienayme_height_law, bienayme_labeled_law, binary_height_counts,
    class_height_tables, class_masses, class_probability_table, companion, compressed_degree_sequences,
    eggs_oracle, equiv_class_key, exact_height_distribution, is_dominated_by, rational, stochastic_compare,
    EggsVariant, HeightDistribution, DEFAULT_BUDGET,
};
use crate::lab::{
    attachment_bound, attachment_tables, check_gaussian_bound, check_logsigma_bound, default_grid,
    ks_one_sided, logsigma_threshold, moment_scaling, sample_heights, sample_trees, tail_experiment,
    total_variation, chi_square_p, LabError, MomentTable, Source,
};
use crate::samplers::{par_samples, ConditionedSampler, DEFAULT_MAX_REJECTIONS};
use crate::transforms::{covering_pairs, merge_pairs, suppress_degree_ones};
use crate::trees::{DegreeSequence, LabeledRootedTree};
use crate::weights::{binary, pq_family, power_law, stretched_exponential, tilt, WeightSequence};

/// Criteria that cannot hold as stated, with the reason. They still run and
/// report FAIL; callers may exclude them from the exit status.
pub const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[(
    18,
    "the exact binary height moments are still rising toward their limit on n <= 401; \
     E[ht]/sqrt(n) spreads 21% and E[ht^2]/n spreads 48% across the list",
)];

pub fn known_unattainable(id: u32) -> Option<&'static str> {
    KNOWN_UNATTAINABLE.iter().find(|(i, _)| *i == id).map(|(_, why)| *why)
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// Smaller sizes and sample counts.
    pub quick: bool,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self { quick: false, seed: 20_240_601 }
    }
}

impl Settings {
    fn scale(&self, full: usize) -> usize {
        if self.quick {
            (full / 10).max(1)
        } else {
            full
        }
    }

    fn max_n(&self, full: usize) -> usize {
        if self.quick {
            full - 1
        } else {
            full
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} [{:>2}] {}: {} ({:.1}s)", self.id, self.title, self.detail, self.seconds)
    }
}

pub const TITLES: [&str; 18] = [
    "bijection exactness",
    "count fixture",
    "uniform sampler chi-square",
    "sub-Gaussian height tails",
    "large-sigma height tails",
    "geometric attachment",
    "skew moves lower heights",
    "merge moves lower heights",
    "class probabilities under companion",
    "per-class dominance and class probability formula",
    "eggs-in-one-basket",
    "degree-one suppression fibers",
    "conditioned sampler total variation",
    "degree-one frequency under tilting",
    "tilt mean and variance",
    "binary trees are tallest",
    "vanishing height trend",
    "binary moment scaling",
];

pub fn run(id: u32, s: &Settings) -> CriterionReport {
    let start = Instant::now();
    let outcome = match id {
        1 => bijection(s),
        2 => count_fixture(),
        3 => uniformity(s),
        4 => gaussian_tails(s),
        5 => logsigma_tails(s),
        6 => attachment(s),
        7 => skew_dominance(s),
        8 => merge_dominance(s),
        9 => class_probabilities(s),
        10 => refined_dominance(s),
        11 => eggs(s),
        12 => fibers(s),
        13 => sampler_tv(s),
        14 => janson_degrees(s),
        15 => tilt_families(),
        16 => binary_tallest(s),
        17 => vanishing_trend(s),
        18 => moment_ratios(s),
        _ => Err(format!("no criterion {id}")),
    };
    let (pass, detail) = match outcome {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionReport {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(s: &Settings) -> Vec<CriterionReport> {
    (1..=18).map(|id| run(id, s)).collect()
}

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ds(v: &[usize]) -> DegreeSequence {
    DegreeSequence::new(v.to_vec()).expect("valid fixture")
}

fn bijection(s: &Settings) -> Outcome {
    let mut sequences = 0;
    let mut codes = 0u64;
    for n in 2..=s.max_n(8) {
        for d in compressed_degree_sequences(n) {
            let mut seen = HashSet::new();
            for (r, code) in CodeIter::new(&d).map_err(err)?.enumerate() {
                let t = tree_from_sequence(&code);
                if t.degree_sequence() != d || encode_any(&t) != code.values() {
                    return Ok((false, format!("round trip fails for d = {d}, code {:?}", code.values())));
                }
                if n <= 6 && rank(&code) != BigUint::from(r) {
                    return Ok((false, format!("rank mismatch for d = {d}")));
                }
                if n <= 6 && unrank(&d, &BigUint::from(r)).map_err(err)? != code {
                    return Ok((false, format!("unrank mismatch for d = {d}")));
                }
                seen.insert(t);
                codes += 1;
            }
            if BigUint::from(seen.len()) != count_trees(&d) {
                return Ok((false, format!("d = {d}: {} distinct trees", seen.len())));
            }
            sequences += 1;
        }
    }
    Ok((true, format!("{sequences} compressed sequences, {codes} codes, all distinct and round-tripping")))
}

fn count_fixture() -> Outcome {
    let d = ds(&[1, 3, 2, 0, 0, 0, 0]);
    let formula = count_trees(&d);
    let listed = CodeIter::new(&d).map_err(err)?.count();
    let pass = formula == BigUint::from(60u32) && listed == 60;
    Ok((pass, format!("formula {formula}, listed {listed}, expected 60")))
}

fn uniformity(s: &Settings) -> Outcome {
    let d = ds(&[2, 2, 0, 0, 0]);
    let trees = all_trees(&d, DEFAULT_BUDGET).map_err(err)?;
    let index: HashMap<_, _> = trees.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let samples = 6000;
    let drawn = sample_trees(&Source::Degrees(d), 5, samples, s.seed, |t| index[t]).map_err(err)?;
    let mut counts = vec![0u64; trees.len()];
    for i in drawn {
        counts[i] += 1;
    }
    let expected = vec![samples as f64 / trees.len() as f64; trees.len()];
    let p = chi_square_p(&counts, &expected);
    Ok((trees.len() == 6 && p >= 1e-3, format!("{} trees, counts {counts:?}, p = {p:.4}", trees.len())))
}

fn verdict_summary(v: &crate::lab::BoundVerdict) -> String {
    let worst = v.rows.iter().map(|r| r.upper).fold(0.0, f64::max);
    let min_bound = v.rows.iter().map(|r| r.bound).fold(f64::MAX, f64::min);
    format!(
        "{} points, {} with bound < 1 and applicable, largest upper CI {worst:.4}, smallest bound {min_bound:.4}",
        v.rows.len(),
        v.informative()
    )
}

fn gaussian_tails(s: &Settings) -> Outcome {
    let n = 401;
    let samples = s.scale(10_000);
    let mut balanced = vec![2; 200];
    balanced.resize(n, 0);
    let mut star = vec![200];
    star.extend(std::iter::repeat_n(2, 100));
    star.resize(n, 0);
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, v) in [("balanced binary", balanced), ("star-heavy", star)] {
        let d = ds(&v);
        let delta = d.sigma_stats().map_err(err)?.delta;
        let tail = tail_experiment(&Source::Degrees(d), n, samples, &default_grid(), s.seed).map_err(err)?;
        let verdict = check_gaussian_bound(&tail, delta);
        pass &= verdict.pass;
        parts.push(format!("{name}: {}", verdict_summary(&verdict)));
    }
    Ok((pass, parts.join("; ")))
}

/// A degree sequence of length `n` drawn from the truncated power law with exponent 5/2.
pub fn power_law_degrees(n: usize, seed: u64) -> Result<DegreeSequence, LabError> {
    let mu = power_law(2.5, n - 1);
    let sampler = ConditionedSampler::from_weights(&mu, n, DEFAULT_MAX_REJECTIONS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample_degrees(&mut rng)?.0)
}

fn logsigma_tails(s: &Settings) -> Outcome {
    let n = 2000;
    let samples = s.scale(10_000);
    let d = power_law_degrees(n, s.seed).map_err(err)?;
    let st = d.sigma_stats().map_err(err)?;
    let threshold = logsigma_threshold(st.sigma_d, st.sigma_prime);
    let mut grid = default_grid();
    grid.extend([threshold, 2.0 * threshold]);
    let tail = tail_experiment(&Source::Degrees(d.clone()), n, samples, &grid, s.seed).map_err(err)?;
    let verdict = check_logsigma_bound(&tail, st.sigma_d, st.sigma_prime);
    Ok((
        verdict.pass,
        format!(
            "max degree {}, sigma_d {:.3}, sigma' {:.3}, bound applies from {threshold:.0} sqrt(n); {}",
            d.max_degree(),
            st.sigma_d,
            st.sigma_prime,
            verdict_summary(&verdict)
        ),
    ))
}

fn attachment(s: &Settings) -> Outcome {
    let mut checks = 0;
    let mut tight = 0.0f64;
    for n in 2..=s.max_n(7) {
        for d in compressed_degree_sequences(n) {
            for ((x, y), table) in attachment_tables(&d).map_err(err)? {
                let total: u64 = table.values().sum();
                for b in 1..=6 {
                    let hits: u64 = table.range(b + 1..).map(|(_, c)| c).sum();
                    let p = BigRational::new(hits.into(), total.into());
                    let bound = attachment_bound(n, x, b);
                    if p > bound {
                        return Ok((false, format!("d = {d}, x = {x}, y = {y}, b = {b}: {p} > {bound}")));
                    }
                    if !bound.is_zero() {
                        tight = tight.max((p / bound).to_f64().unwrap_or(0.0));
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok((true, format!("{checks} exact (d, x, y, b) checks; largest probability/bound ratio {tight:.4}")))
}

fn dominance_over(pairs: Vec<(DegreeSequence, DegreeSequence)>, strict_rule: bool) -> Outcome {
    let mut cache: HashMap<DegreeSequence, HeightDistribution> = HashMap::new();
    let mut law = |d: &DegreeSequence| -> Result<HeightDistribution, String> {
        if let Some(h) = cache.get(d) {
            return Ok(h.clone());
        }
        let h = exact_height_distribution(d).map_err(err)?;
        cache.insert(d.clone(), h.clone());
        Ok(h)
    };
    let (mut checked, mut strict_needed) = (0, 0);
    for (d, e) in &pairs {
        let (hd, he) = (law(d)?, law(e)?);
        if !is_dominated_by(&he, &hd) {
            return Ok((false, format!("ht under {e} is not dominated by ht under {d}")));
        }
        if strict_rule && d.nonleaf_count() >= 3 {
            strict_needed += 1;
            if !stochastic_compare(&hd, &he).strict {
                return Ok((false, format!("{d} -> {e} has at least 3 non-leaves but equal laws")));
            }
        }
        checked += 1;
    }
    Ok((true, format!("{checked} pairs dominated exactly, {strict_needed} required strict and were")))
}

fn skew_dominance(s: &Settings) -> Outcome {
    let mut pairs = Vec::new();
    for n in 2..=s.max_n(7) {
        pairs.extend(covering_pairs(n).map_err(err)?);
    }
    dominance_over(pairs, true)
}

fn merge_dominance(s: &Settings) -> Outcome {
    let mut pairs = Vec::new();
    for n in 2..=s.max_n(7) {
        pairs.extend(merge_pairs(n).map_err(err)?);
    }
    dominance_over(pairs, false)
}

/// All trees on `[n]` in the class of `t`, found by enumerating every degree
/// sequence that agrees with `t` off labels 1 and 2.
pub fn class_members(t: &LabeledRootedTree) -> Result<Vec<LabeledRootedTree>, String> {
    let d = t.degree_sequence();
    let key = equiv_class_key(t);
    let pool = d.degree(1) + d.degree(2);
    let mut out = Vec::new();
    for a in 0..=pool {
        let mut v = d.as_slice().to_vec();
        v[0] = a;
        v[1] = pool - a;
        let e = DegreeSequence::new(v).map_err(err)?;
        out.extend(all_trees(&e, DEFAULT_BUDGET).map_err(err)?.into_iter().filter(|u| equiv_class_key(u) == key));
    }
    Ok(out)
}

fn class_probabilities(s: &Settings) -> Outcome {
    let mut checked = 0;
    for n in 2..=s.max_n(7) {
        for d in all_degree_sequences(n).into_iter().filter(|d| d.degree(2) >= 1) {
            let e = companion(&d).map_err(err)?;
            if class_probability_table(&d).map_err(err)? != class_masses(&e).map_err(err)? {
                return Ok((false, format!("class tables differ for {d} and {e}")));
            }
            checked += 1;
        }
    }
    let parallel: LabeledRootedTree = "3;3,4,0,3,4,1,5,1,2".parse().map_err(err)?;
    let series: LabeledRootedTree = "1;0,3,1,1,2,5".parse().map_err(err)?;
    let (a, b) = (class_members(&parallel)?.len(), class_members(&series)?.len());
    Ok((
        a == 16 && b == 8,
        format!("{checked} sequences with equal class tables; fixture classes of size {a} (expect 16) and {b} (expect 8)"),
    ))
}

fn refined_dominance(s: &Settings) -> Outcome {
    let (mut classes, mut outside) = (0, 0);
    for n in 2..=s.max_n(7) {
        for d in all_degree_sequences(n).into_iter().filter(|d| d.degree(2) >= 1) {
            let e = companion(&d).map_err(err)?;
            let (td, te) = (
                class_height_tables(&d, DEFAULT_BUDGET).map_err(err)?,
                class_height_tables(&e, DEFAULT_BUDGET).map_err(err)?,
            );
            let in_scope = d.degree(1) + 1 >= d.degree(2);
            let mut any_strict = false;
            for (key, hd) in &td {
                let Some(he) = te.get(key) else {
                    return Ok((false, format!("class missing under companion of {d}")));
                };
                let holds = is_dominated_by(he, hd);
                if in_scope && !holds {
                    return Ok((false, format!("per-class dominance fails for {d}")));
                }
                if !in_scope && !holds {
                    outside += 1;
                }
                any_strict |= stochastic_compare(hd, he).strict && holds;
                classes += 1;
            }
            if in_scope && d.degree(1) >= d.degree(2) && d.nonleaf_count() >= 3 && !any_strict {
                return Ok((false, format!("no strictly dominated class for {d}")));
            }
        }
    }
    let (formula_cases, formula_ok) = two_generation_class_formula()?;
    Ok((
        formula_ok,
        format!(
            "{classes} classes checked, dominance exact wherever d1 + 1 >= d2; \
             {outside} classes with d1 + 1 < d2 reverse it; probability formula matched in {formula_cases} configurations"
        ),
    ))
}

/// Root 1, child 2, grandchild 3 with `d3` leaf children, and the other
/// children of 1 and 2 leaves. Returns the number of configurations checked
/// and whether the height law matches `2 d1 d2 / ((d1 + d2 - 1)(d1 + d2))`.
fn two_generation_class_formula() -> Result<(usize, bool), String> {
    let mut cases = 0;
    for d1 in 1..=3usize {
        for d2 in 1..=d1 {
            for d3 in 1..=2usize {
                let n = 3 + (d1 - 1) + (d2 - 1) + d3;
                let mut parent = vec![0; n];
                parent[1] = 1;
                parent[2] = 2;
                let mut next = 4;
                for (p, extra) in [(1, d1 - 1), (2, d2 - 1), (3, d3)] {
                    for _ in 0..extra {
                        parent[next - 1] = p;
                        next += 1;
                    }
                }
                let t = LabeledRootedTree::from_parents(1, parent).map_err(err)?;
                let d = t.degree_sequence();
                let key = equiv_class_key(&t);
                let members: Vec<_> = all_trees(&d, DEFAULT_BUDGET)
                    .map_err(err)?
                    .into_iter()
                    .filter(|u| equiv_class_key(u) == key)
                    .collect();
                let tall = members.iter().filter(|u| u.height() == 3).count() as u64;
                let got = BigRational::new(tall.into(), (members.len() as u64).into());
                let (a, b) = (d1 as u64, d2 as u64);
                let want = rational(2 * a * b, (a + b - 1) * (a + b));
                if got != want || BigUint::from(members.len()) != crate::codec::factorial(d1 + d2) / (crate::codec::factorial(d1) * crate::codec::factorial(d2)) {
                    return Ok((cases, false));
                }
                cases += 1;
            }
        }
    }
    Ok((cases, true))
}

fn eggs(s: &Settings) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let vectors = s.scale(50);
    let mut checks = 0;
    for n in 1..=s.max_n(10) {
        for trial in 0..vectors {
            // Alternate between tie-heavy integer values and continuous values.
            let mut a: Vec<f64> = if trial % 2 == 0 {
                (0..n).map(|_| rng.random_range(1..=4) as f64).collect()
            } else {
                (0..n).map(|_| rng.random_range(0.01..10.0)).collect()
            };
            a.sort_by(f64::total_cmp);
            for k in n.div_ceil(2)..=n {
                for l in k + 1..=n {
                    for variant in [EggsVariant::Full, EggsVariant::DropLast] {
                        let v = eggs_oracle(&a, k, l, variant).map_err(err)?;
                        if !v.holds {
                            return Ok((false, format!("violated for a = {a:?}, k = {k}, l = {l}, {variant:?}")));
                        }
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok((true, format!("{checks} exact (a, k, l, variant) checks over n <= {}", s.max_n(10))))
}

fn fibers(s: &Settings) -> Outcome {
    let fact = |k: usize| -> u64 { (1..=k as u64).product() };
    let mut sequences = 0;
    for n in 1..=s.max_n(7) {
        for d in all_degree_sequences(n) {
            let n1 = d.count(1);
            let mut fiber: HashMap<LabeledRootedTree, u64> = HashMap::new();
            for t in all_trees(&d, DEFAULT_BUDGET).map_err(err)? {
                let sup = suppress_degree_ones(&t).map_err(err)?;
                *fiber.entry(sup.tree).or_default() += 1;
            }
            let want = fact(n - 1) / fact(n - n1 - 1);
            if let Some((t, c)) = fiber.iter().find(|(_, &c)| c != want) {
                return Ok((false, format!("d = {d}: fiber over {t} has {c}, expected {want}")));
            }
            if n <= 6 {
                let reduced = DegreeSequence::new(d.as_slice().iter().copied().filter(|&x| x != 1).collect())
                    .map_err(err)?;
                let targets: HashSet<_> = all_trees(&reduced, DEFAULT_BUDGET).map_err(err)?.into_iter().collect();
                if fiber.keys().cloned().collect::<HashSet<_>>() != targets {
                    return Ok((false, format!("d = {d}: suppression does not cover T_d'")));
                }
            }
            sequences += 1;
        }
    }
    Ok((true, format!("{sequences} sequences: equal fibers of size (n-1)!/(n-n1-1)!, onto T_d' for n <= 6")))
}

fn to_rationals(w: &[f64]) -> Vec<BigRational> {
    w.iter().map(|&x| BigRational::from_float(x).expect("finite")).collect()
}

fn sampler_tv(s: &Settings) -> Outcome {
    let n = 5;
    let draws = s.scale(100_000);
    let oracle = bienayme_labeled_law(&[rational(1, 2), rational(0, 1), rational(1, 2)], n).map_err(err)?;
    let trees: Vec<LabeledRootedTree> = oracle.keys().cloned().collect();
    let index: HashMap<_, _> = trees.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let sampler = ConditionedSampler::from_weights(&binary(), n, DEFAULT_MAX_REJECTIONS).map_err(err)?;
    let drawn = par_samples(s.seed, draws, |rng| sampler.sample(rng).map(|t| index.get(&t).copied()));
    let mut counts = vec![0u64; trees.len()];
    let mut outside = 0;
    for x in drawn {
        match x.map_err(err)? {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let p: Vec<f64> = trees.iter().map(|t| oracle[t].to_f64().unwrap()).collect();
    let mut q: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    let mut p = p;
    p.push(0.0);
    q.push(outside as f64 / draws as f64);
    let tv = total_variation(&p, &q);
    let limit = if s.quick { 0.06 } else { 0.02 };
    Ok((tv < limit, format!("{} labeled trees in the oracle, {draws} draws, TV = {tv:.4}", trees.len())))
}

fn janson_degrees(s: &Settings) -> Outcome {
    let (p, q) = (0.3f64, 0.3f64);
    let n = 2000;
    let trees = s.scale(200).max(20);
    let mu = pq_family(p, q);
    let fractions = sample_trees(&Source::Offspring(mu.clone()), n, trees, s.seed, |t| {
        t.degree_sequence().count(1) as f64 / n as f64
    })
    .map_err(err)?;
    let mean = fractions.iter().sum::<f64>() / trees as f64;
    let a = (1.0 - q) * (1.0 - p).sqrt();
    let target = a / (a + 2.0 * p.sqrt() * q.sqrt());
    let tilted = tilt(&mu, 1e-13).map_err(err)?.mu_hat[1];
    Ok((
        (mean - target).abs() < 0.02,
        format!("mean N1/n = {mean:.4}, predicted {target:.4} (tilted law gives {tilted:.4}), {trees} trees"),
    ))
}

fn tilt_families() -> Outcome {
    let families: Vec<(&str, WeightSequence)> = vec![
        ("critical binary", binary()),
        ("supercritical three-point", pq_family(0.3, 0.3)),
        ("subcritical stretched exponential", stretched_exponential(0.5, 400)),
        ("finite support", WeightSequence::finite(vec![1.0, 3.0, 0.0, 2.0]).map_err(err)?),
        ("truncated heavy tail", power_law(2.5, 400)),
    ];
    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for (_, w) in &families {
        let t = tilt(w, 1e-14).map_err(err)?;
        let total: f64 = t.mu_hat.iter().sum();
        let mean: f64 = t.mu_hat.iter().enumerate().map(|(k, x)| k as f64 * x).sum::<f64>() / total;
        let second: f64 = t.mu_hat.iter().enumerate().map(|(k, x)| (k * k) as f64 * x).sum::<f64>() / total;
        let var = second - mean * mean;
        // Raw moments of k under w_k s^k, straight from the weights.
        let moments = |s: f64| {
            let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for (k, &x) in w.weights().iter().enumerate() {
                let term = x * s.powi(k as i32);
                m0 += term;
                m1 += k as f64 * term;
                m2 += (k * k) as f64 * term;
            }
            (m0, m1, m2)
        };
        let psi = |s: f64| {
            let (m0, m1, _) = moments(s);
            m1 / m0
        };
        let finite_support = w.tail_mass().is_none();
        let nu = if finite_support { f64::INFINITY } else { psi(w.radius()) };
        worst_mean = worst_mean.max((mean - nu.min(1.0)).abs());
        // s Psi'(s) = E[k^2] - E[k]^2 under the same weights.
        let (m0, m1, m2) = moments(t.tau);
        let psi_prime_scaled = m2 / m0 - (m1 / m0).powi(2);
        worst_var = worst_var.max((var - psi_prime_scaled).abs());
    }
    Ok((
        worst_mean < 1e-9 && worst_var < 1e-6,
        format!("{} families; worst |mean - min(1, nu)| = {worst_mean:.2e}, worst |var - tau Psi'(tau)| = {worst_var:.2e}", families.len()),
    ))
}

fn rational_dominated(small: &BTreeMap<usize, BigRational>, large: &BTreeMap<usize, BigRational>) -> bool {
    let top = small.keys().chain(large.keys()).copied().max().unwrap_or(0);
    let (mut a, mut b) = (BigRational::zero(), BigRational::zero());
    for h in 0..=top {
        a += small.get(&h).cloned().unwrap_or_else(BigRational::zero);
        b += large.get(&h).cloned().unwrap_or_else(BigRational::zero);
        if a < b {
            return false;
        }
    }
    true
}

fn binary_tallest(s: &Settings) -> Outcome {
    let nu = to_rationals(&[0.5, 0.0, 0.5]);
    let laws: Vec<(&str, Vec<BigRational>)> = vec![
        ("ternary", vec![rational(2, 3), rational(0, 1), rational(0, 1), rational(1, 3)]),
        ("{0,2,3,4}", vec![rational(4, 10), rational(0, 1), rational(3, 10), rational(2, 10), rational(1, 10)]),
        ("{0,3,4}", vec![rational(1, 2), rational(0, 1), rational(0, 1), rational(1, 4), rational(1, 4)]),
    ];
    let mut exact = 0;
    for (name, mu) in &laws {
        for n in [4usize, 5, 6, 7] {
            let Some(law) = bienayme_height_law(mu, n).map_err(err)? else {
                continue;
            };
            let m = if n % 2 == 0 { n + 1 } else { n };
            let bin = bienayme_height_law(&nu, m).map_err(err)?.expect("odd sizes are possible");
            if !rational_dominated(&law, &bin) {
                return Ok((false, format!("{name} at n = {n} is not dominated by binary at {m}")));
            }
            exact += 1;
        }
    }
    // Ternary sizes are 1 mod 3, so the nearest sizes to 21 are 19 and 22.
    let samples = s.scale(100_000);
    let ternary = WeightSequence::offspring(vec![2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0]).map_err(err)?;
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [19usize, 22] {
        let m = if n % 2 == 0 { n + 1 } else { n };
        let ht = sample_heights(&Source::Offspring(ternary.clone()), n, samples, s.seed).map_err(err)?;
        let hb = sample_heights(&Source::Offspring(binary()), m, samples, s.seed.wrapping_add(1)).map_err(err)?;
        let (stat, crit) = ks_one_sided(&hb, &ht, 1e-3);
        pass &= stat <= crit;
        parts.push(format!("ternary {n} vs binary {m}: D+ = {stat:.4} (critical {crit:.4})"));
    }
    Ok((pass, format!("{exact} exact comparisons; {}", parts.join("; "))))
}

fn trend_table(
    family: &dyn Fn(usize) -> Result<Source, LabError>,
    ns: &[usize],
    samples: usize,
    seed: u64,
) -> Result<MomentTable, String> {
    moment_scaling(family, 1.0, ns, samples, seed).map_err(err)
}

fn ratios(t: &MomentTable) -> String {
    t.rows.iter().map(|r| format!("{}:{:.3}", r.n, r.ratio)).collect::<Vec<_>>().join(" ")
}

fn vanishing_trend(s: &Settings) -> Outcome {
    let ns = [200usize, 800, 3200];
    let samples = s.scale(1000).max(200);
    let heavy = trend_table(&|n| Ok(Source::Offspring(power_law(2.5, n - 1))), &ns, samples, s.seed)?;
    let sub = trend_table(&|n| Ok(Source::Offspring(stretched_exponential(0.5, n - 1))), &ns, samples, s.seed)?;
    let odd: Vec<usize> = ns.iter().map(|n| n + 1).collect();
    let control = trend_table(&|_| Ok(Source::Offspring(binary())), &odd, samples, s.seed)?;
    let pass = heavy.strictly_decreasing() && sub.strictly_decreasing() && control.spread() < 0.2;
    Ok((
        pass,
        format!(
            "E[ht]/sqrt(n): power law 5/2 [{}]; stretched exponential [{}]; binary [{}] spread {:.3}",
            ratios(&heavy),
            ratios(&sub),
            ratios(&control),
            control.spread()
        ),
    ))
}

fn moment_ratios(s: &Settings) -> Outcome {
    let ns = [51usize, 101, 201, 401];
    let samples = s.scale(20_000);
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [1.0, 2.0] {
        let table = moment_scaling(&|_| Ok(Source::Offspring(binary())), r, &ns, samples, s.seed).map_err(err)?;
        let exact: Vec<f64> = ns
            .iter()
            .map(|&n| exact_binary_moment(n, r) / (n as f64).powf(r / 2.0))
            .collect();
        let exact_spread = exact.iter().cloned().fold(f64::MIN, f64::max) / exact.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
        pass &= table.spread() < 0.2;
        parts.push(format!(
            "r = {r}: sampled [{}] spread {:.3}, exact spread {exact_spread:.3}",
            ratios(&table),
            table.spread()
        ));
    }
    Ok((pass, parts.join("; ")))
}

/// `E[ht^r]` for a uniform full binary plane tree with `n` vertices.
pub fn exact_binary_moment(n: usize, r: f64) -> f64 {
    let law = binary_height_counts((n - 1) / 2);
    law.counts()
        .keys()
        .map(|&h| (h as f64).powf(r) * law.probability(h).to_f64().unwrap_or(0.0))
        .sum()
}
