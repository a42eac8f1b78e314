use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided 99% normal quantile.
pub fn z99() -> f64 {
    Normal::standard().inverse_cdf(0.995)
}

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub fn wilson_upper(hits: u64, trials: u64) -> f64 {
    wilson_interval(hits, trials, z99()).1
}

/// Pearson chi-square goodness-of-fit p-value against expected counts.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    ChiSquared::new(dof).expect("dof >= 1").sf(stat)
}

/// One-sided two-sample Kolmogorov-Smirnov statistic `max_h (F_a(h) - F_b(h))`
/// on integer data, and the asymptotic critical value at level `alpha`.
/// A statistic above the critical value is evidence that `a` is not
/// stochastically at least `b`.
pub fn ks_one_sided(a: &[usize], b: &[usize], alpha: f64) -> (f64, f64) {
    let top = a.iter().chain(b).copied().max().unwrap_or(0);
    let cdf = |xs: &[usize]| {
        let mut c = vec![0u64; top + 1];
        for &x in xs {
            c[x] += 1;
        }
        let mut acc = 0u64;
        c.into_iter()
            .map(|k| {
                acc += k;
                acc as f64 / xs.len() as f64
            })
            .collect::<Vec<_>>()
    };
    let (fa, fb) = (cdf(a), cdf(b));
    let stat = fa.iter().zip(&fb).map(|(x, y)| x - y).fold(0.0, f64::max);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let crit = (-alpha.ln() * (n + m) / (2.0 * n * m)).sqrt();
    (stat, crit)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
