//! Weight sequences, their generating functions and exponential tilting.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("invalid weight sequence: {0}")]
    Invalid(String),
    #[error("radius of convergence is zero")]
    RadiusZero,
    #[error("tilt solver did not converge")]
    NonConvergent,
    #[error("bad weight file: {0}")]
    Parse(String),
}

/// Weights `w_0..w_K`.
///
/// Finite-support sequences have infinite radius. An infinite-support family
/// is stored as its truncation at `K` together with its true radius of
/// convergence and a bound on the discarded tail mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    weights: Vec<f64>,
    radius: Option<f64>,
    tail_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltResult {
    pub tau: f64,
    pub nu: f64,
    pub sigma_hat_sq: f64,
    pub mu_hat: Vec<f64>,
}

impl TiltResult {
    pub fn offspring(&self) -> WeightSequence {
        WeightSequence {
            weights: self.mu_hat.clone(),
            radius: None,
            tail_mass: None,
        }
    }
}

impl WeightSequence {
    pub fn finite(weights: Vec<f64>) -> Result<Self, WeightError> {
        let w = Self {
            weights,
            radius: None,
            tail_mass: None,
        };
        w.check()?;
        Ok(w)
    }

    /// A probability law on offspring counts that may lack the branching
    /// condition, such as one supported on `{0, 1}`. Only samplers accept it.
    pub fn offspring(weights: Vec<f64>) -> Result<Self, WeightError> {
        if weights.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(WeightError::Invalid("weights must be finite and >= 0".into()));
        }
        if weights.first().copied().unwrap_or(0.0) <= 0.0 {
            return Err(WeightError::Invalid("w_0 must be positive".into()));
        }
        let w = Self::finite_unchecked(weights);
        if !w.is_probability() {
            return Err(WeightError::Invalid("offspring law must sum to one".into()));
        }
        Ok(w)
    }

    pub(crate) fn finite_unchecked(weights: Vec<f64>) -> Self {
        Self {
            weights,
            radius: None,
            tail_mass: None,
        }
    }

    /// A truncation of an infinite-support family with radius `radius`.
    pub fn truncated(weights: Vec<f64>, radius: f64, tail_mass: f64) -> Result<Self, WeightError> {
        if radius.is_nan() || radius < 0.0 || tail_mass.is_nan() || tail_mass < 0.0 {
            return Err(WeightError::Invalid("radius and tail mass must be >= 0".into()));
        }
        let w = Self {
            weights,
            radius: Some(radius),
            tail_mass: Some(tail_mass),
        };
        w.check()?;
        Ok(w)
    }

    fn check(&self) -> Result<(), WeightError> {
        if self.weights.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(WeightError::Invalid("weights must be finite and >= 0".into()));
        }
        if self.weights.first().copied().unwrap_or(0.0) <= 0.0 {
            return Err(WeightError::Invalid("w_0 must be positive".into()));
        }
        if !self.weights.iter().skip(2).any(|&x| x > 0.0) {
            return Err(WeightError::Invalid("need w_k > 0 for some k >= 2".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(0.0)
    }

    pub fn horizon(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn tail_mass(&self) -> Option<f64> {
        self.tail_mass
    }

    /// Radius of convergence of `Phi`; infinite for finite support.
    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or(f64::INFINITY)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= 1e-9
    }

    pub fn mean(&self) -> f64 {
        moments(&self.weights).0 / self.total()
    }

    pub fn variance(&self) -> f64 {
        let (m1, m2) = moments(&self.weights);
        let z = self.total();
        m2 / z - (m1 / z).powi(2)
    }

    /// Scales weights to sum to one.
    pub fn normalized(&self) -> Self {
        let z = self.total();
        Self {
            weights: self.weights.iter().map(|x| x / z).collect(),
            radius: self.radius,
            tail_mass: self.tail_mass.map(|t| t / z),
        }
    }

    /// `a * b^k * w_k`, an equivalent sequence.
    pub fn rescaled(&self, a: f64, b: f64) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| a * b.powi(k as i32) * w)
                .collect(),
            radius: self.radius.map(|r| r / b),
            tail_mass: self.tail_mass,
        }
    }

    /// Log-scale terms `ln(w_k s^k)` shifted by their maximum.
    fn scaled_terms(&self, s: f64) -> Vec<(usize, f64)> {
        if s == 0.0 {
            return vec![(0, 1.0)];
        }
        let ls = s.ln();
        let logs: Vec<(usize, f64)> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| (k, w.ln() + k as f64 * ls))
            .collect();
        let top = logs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        logs.into_iter().map(|(k, l)| (k, (l - top).exp())).collect()
    }

    /// `Phi(s) = sum w_k s^k` over the stored weights.
    pub fn phi(&self, s: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * s.powi(k as i32))
            .sum()
    }

    /// `Psi(s) = s Phi'(s) / Phi(s)`, the mean of the tilted law.
    pub fn psi(&self, s: f64) -> f64 {
        let t = self.scaled_terms(s);
        let z: f64 = t.iter().map(|x| x.1).sum();
        t.iter().map(|&(k, x)| k as f64 * x).sum::<f64>() / z
    }

    /// `s Psi'(s)`, the variance of the tilted law.
    pub fn s_psi_prime(&self, s: f64) -> f64 {
        let t = self.scaled_terms(s);
        let z: f64 = t.iter().map(|x| x.1).sum();
        let m1 = t.iter().map(|&(k, x)| k as f64 * x).sum::<f64>() / z;
        let m2 = t.iter().map(|&(k, x)| (k * k) as f64 * x).sum::<f64>() / z;
        m2 - m1 * m1
    }

    /// `nu = Psi(rho)`, the supremum of `Psi` on the disc of convergence.
    pub fn nu(&self) -> f64 {
        match self.radius {
            Some(r) => self.psi(r),
            None => self
                .weights
                .iter()
                .rposition(|&w| w > 0.0)
                .map_or(0.0, |k| k as f64),
        }
    }

    /// The law `w_k s^k / Phi(s)`.
    pub fn tilted(&self, s: f64) -> Vec<f64> {
        let t = self.scaled_terms(s);
        let z: f64 = t.iter().map(|x| x.1).sum();
        let mut out = vec![0.0; self.weights.len()];
        for (k, x) in t {
            out[k] = x / z;
        }
        out
    }

    /// Parses `{"0": w0, "2": w2}` or an object with a `weights` map and
    /// optional `radius`, `tail_mass` and `truncation` fields.
    pub fn from_json(v: &Value) -> Result<Self, WeightError> {
        let obj = v
            .as_object()
            .ok_or_else(|| WeightError::Parse("expected a JSON object".into()))?;
        if let Some(inner) = obj.get("weights") {
            let mut weights = parse_weight_map(inner)?;
            if let Some(k) = obj.get("truncation") {
                let k = k
                    .as_u64()
                    .ok_or_else(|| WeightError::Parse("truncation must be an integer".into()))?;
                weights.resize(k as usize + 1, 0.0);
            }
            match (obj.get("radius"), obj.get("tail_mass")) {
                (None, None) => Self::finite(weights),
                (Some(r), Some(t)) => {
                    let r = r
                        .as_f64()
                        .ok_or_else(|| WeightError::Parse("radius must be a number".into()))?;
                    let t = t
                        .as_f64()
                        .ok_or_else(|| WeightError::Parse("tail_mass must be a number".into()))?;
                    Self::truncated(weights, r, t)
                }
                _ => Err(WeightError::Parse(
                    "infinite-support families need both radius and tail_mass".into(),
                )),
            }
        } else {
            Self::finite(parse_weight_map(v)?)
        }
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| (k.to_string(), Value::from(w)))
            .collect();
        match (self.radius, self.tail_mass) {
            (Some(r), Some(t)) => serde_json::json!({
                "weights": map,
                "truncation": self.horizon(),
                "radius": r,
                "tail_mass": t,
            }),
            _ => Value::Object(map),
        }
    }
}

fn parse_weight_map(v: &Value) -> Result<Vec<f64>, WeightError> {
    let obj = v
        .as_object()
        .ok_or_else(|| WeightError::Parse("expected a map from degree to weight".into()))?;
    let mut map = BTreeMap::new();
    for (k, w) in obj {
        let k: usize = k
            .parse()
            .map_err(|_| WeightError::Parse(format!("bad degree key {k:?}")))?;
        let w = w
            .as_f64()
            .ok_or_else(|| WeightError::Parse(format!("weight of {k} is not a number")))?;
        map.insert(k, w);
    }
    let top = map.keys().next_back().copied().unwrap_or(0);
    let mut weights = vec![0.0; top + 1];
    for (k, w) in map {
        weights[k] = w;
    }
    Ok(weights)
}

fn moments(w: &[f64]) -> (f64, f64) {
    w.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, &x)| {
        let k = k as f64;
        (a + k * x, b + k * k * x)
    })
}

/// Computes `tau`, `nu`, `sigma_hat^2` and the tilted law `mu_hat`.
///
/// `tol` is the relative width at which bisection for `Psi(tau) = 1` stops.
pub fn tilt(w: &WeightSequence, tol: f64) -> Result<TiltResult, WeightError> {
    w.check()?;
    let rho = w.radius();
    if rho <= 0.0 {
        return Err(WeightError::RadiusZero);
    }
    let nu = w.nu();
    let tau = if nu <= 1.0 {
        rho
    } else {
        solve_psi_one(w, rho, tol)?
    };
    Ok(TiltResult {
        tau,
        nu,
        sigma_hat_sq: w.s_psi_prime(tau),
        mu_hat: w.tilted(tau),
    })
}

fn solve_psi_one(w: &WeightSequence, rho: f64, tol: f64) -> Result<f64, WeightError> {
    let mut lo = 0.0;
    let mut hi = if rho.is_finite() { rho / 2.0 } else { 1.0 };
    let mut grow = 0;
    while w.psi(hi) < 1.0 {
        lo = hi;
        hi = if rho.is_finite() { (hi + rho) / 2.0 } else { hi * 2.0 };
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(WeightError::NonConvergent);
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi || mid == lo || mid == hi {
            return Ok(mid);
        }
        if w.psi(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(WeightError::NonConvergent)
}

/// The three-point family with `mu_0 = q(1-p)`, `mu_1 = (1-q)(1-p)`, `mu_2 = p`.
pub fn pq_family(p: f64, q: f64) -> WeightSequence {
    WeightSequence::finite(vec![q * (1.0 - p), (1.0 - q) * (1.0 - p), p])
        .expect("p, q in (0, 1)")
}

/// `nu(0) = nu(2) = 1/2`.
pub fn binary() -> WeightSequence {
    WeightSequence::finite(vec![0.5, 0.0, 0.5]).expect("valid")
}

/// Critical offspring law with `mu_k` proportional to `k^(-alpha)` for `k >= 1`,
/// truncated at `horizon`. The constant is fixed by the untruncated law having
/// mean one; the truncated mass is returned to `mu_0` so the result sums to one.
pub fn power_law(alpha: f64, horizon: usize) -> WeightSequence {
    assert!(alpha > 2.0, "need a finite mean");
    let c = 1.0 / zeta(alpha - 1.0);
    let mut w = vec![0.0; horizon + 1];
    for (k, x) in w.iter_mut().enumerate().skip(1) {
        *x = c * (k as f64).powf(-alpha);
    }
    let tail = c * zeta_tail(alpha, horizon + 1);
    w[0] = 1.0 - w[1..].iter().sum::<f64>();
    WeightSequence::truncated(w, 1.0, tail).expect("valid")
}

/// Subcritical law with `mu_k` proportional to `exp(-sqrt k)` for `k >= 1`
/// and untruncated mean `mean`, truncated at `horizon` with the cut mass moved
/// to `mu_0`. Every exponential moment of the untruncated law diverges.
pub fn stretched_exponential(mean: f64, horizon: usize) -> WeightSequence {
    // Sum far enough that the remaining terms are negligible in double precision.
    let far = 20_000usize.max(horizon);
    let g = |k: usize| (-(k as f64).sqrt()).exp();
    let first: f64 = (1..=far).map(|k| k as f64 * g(k)).sum();
    let c = mean / first;
    let mut w = vec![0.0; horizon + 1];
    for (k, x) in w.iter_mut().enumerate().skip(1) {
        *x = c * g(k);
    }
    let tail: f64 = (horizon + 1..=far).map(|k| c * g(k)).sum();
    w[0] = 1.0 - w[1..].iter().sum::<f64>();
    WeightSequence::truncated(w, 1.0, tail).expect("valid")
}

/// Riemann zeta for `s > 1` via a partial sum plus Euler-Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    let n = 1000usize;
    (1..n).map(|k| (k as f64).powf(-s)).sum::<f64>() + zeta_tail(s, n)
}

/// `sum_{k >= from} k^(-s)` by Euler-Maclaurin.
fn zeta_tail(s: f64, from: usize) -> f64 {
    let a = from as f64;
    a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}
