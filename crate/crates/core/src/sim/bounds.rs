use rand::Rng;
use rayon::prelude::*;

use super::{fmt_sig, mean_stderr, McEstimate};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::mech::{choose_epsilon, PriceMenu};
use crate::real::Real;
use crate::rng;

/// `(1 - 1/sqrt(2πk))(1 - 1/k)`, floored at 0.
pub fn sequential_bound(k: f64) -> f64 {
    let v = (1.0 - 1.0 / (2.0 * std::f64::consts::PI * k).sqrt()) * (1.0 - 1.0 / k);
    if k > 0.0 && v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `exp(-ε² (1 - ε) k / 12)`.
pub fn overflow_ceiling(k: f64, eps: f64) -> f64 {
    (-eps * eps * (1.0 - eps) * k / 12.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub k: f64,
    pub sequential: f64,
    /// `None` when the market is at most 4-large.
    pub best_epsilon: Option<f64>,
    pub oblivious: Option<f64>,
}

pub const BOUNDS_HEADER: [&str; 4] = ["k", "sequential", "best_epsilon", "oblivious"];

impl BoundsRow {
    /// Fields in [`BOUNDS_HEADER`] order; unavailable values are empty.
    pub fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        vec![
            fmt_sig(self.k),
            fmt_sig(self.sequential),
            opt(self.best_epsilon),
            opt(self.oblivious),
        ]
    }
}

pub fn bounds_table(ks: &[f64]) -> Vec<BoundsRow> {
    ks.iter()
        .map(|&k| {
            let best = choose_epsilon(k).ok();
            BoundsRow {
                k,
                sequential: sequential_bound(k),
                best_epsilon: best.map(|b| b.0),
                oblivious: best.map(|b| b.1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverflowEstimate {
    pub probability: f64,
    pub stderr: f64,
    /// `(1 - 1/k) B`.
    pub threshold: f64,
    pub trials: usize,
}

/// Estimates `Pr[Σ_{i in R} p_i > (1 - 1/k) B]`, where `R` is the set of
/// agents whose cost is at most their realized price.
pub fn overflow_probability<T: Real>(
    menu: &PriceMenu<T>,
    priors: &[AgentPrior<T>],
    budget: T,
    k: T,
    trials: usize,
    seed: u64,
) -> Result<OverflowEstimate> {
    if menu.n() != priors.len() {
        return Err(Error::Dimension("menu and priors differ in length".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(k > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "market size {k} not positive"
        )));
    }
    let threshold = (T::one() - T::one() / k) * budget;
    let hits: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let costs: Vec<T> = priors.iter().map(|p| p.dist().sample(&mut r)).collect();
            let prices = menu.realize(&mut r);
            let total: T = (0..prices.len())
                .filter(|&i| prices[i] > T::zero() && costs[i] <= prices[i])
                .map(|i| prices[i])
                .sum();
            if total > threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let (p, se) = mean_stderr(&hits);
    Ok(OverflowEstimate {
        probability: p,
        stderr: se.unwrap_or(0.0),
        threshold: threshold.to_f64_lossy(),
        trials,
    })
}

/// `E[min(X, k)] / k` for `X ~ Binomial(n, k/n)`: the independent value of
/// the k-highest-value function (unit values, prices `B/k`) over its
/// correlated value `k`.
pub fn correlation_gap_exact(k: usize, n: usize) -> Result<f64> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if n == k {
        return Ok(1.0);
    }
    let q = k as f64 / n as f64;
    let odds = q / (1.0 - q);
    // pmf recurrence from P[X = 0] = (1 - q)^n; only j < k is needed
    let mut pj = (n as f64 * (-q).ln_1p()).exp();
    let mut below = 0.0;
    let mut partial = 0.0;
    for j in 0..k {
        below += pj;
        partial += j as f64 * pj;
        pj *= (n - j) as f64 / (j + 1) as f64 * odds;
    }
    let expected = partial + k as f64 * (1.0 - below).max(0.0);
    Ok(expected / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub k: usize,
    pub n: usize,
    pub exact_ratio: f64,
    /// Simulated ratio; absent when no trials were requested.
    pub simulated: Option<McEstimate<f64>>,
    pub bound: f64,
}

pub const GAP_HEADER: [&str; 7] = [
    "k",
    "n",
    "exact_ratio",
    "simulated_ratio",
    "simulated_stderr",
    "bound",
    "trials",
];

impl GapResult {
    pub fn record(&self) -> Vec<String> {
        let sim = self.simulated;
        vec![
            self.k.to_string(),
            self.n.to_string(),
            fmt_sig(self.exact_ratio),
            sim.map(|s| fmt_sig(s.mean)).unwrap_or_default(),
            sim.and_then(|s| s.stderr).map(fmt_sig).unwrap_or_default(),
            fmt_sig(self.bound),
            sim.map_or(0, |s| s.trials).to_string(),
        ]
    }
}

pub fn correlation_gap_experiment(
    k: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<GapResult> {
    let exact_ratio = correlation_gap_exact(k, n)?;
    let simulated = (trials > 0).then(|| {
        let q = k as f64 / n as f64;
        let ratios: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, t as u64);
                let x = (0..n).filter(|_| r.gen::<f64>() < q).count();
                x.min(k) as f64 / k as f64
            })
            .collect();
        let (mean, stderr) = mean_stderr(&ratios);
        McEstimate {
            mean,
            stderr,
            max_spend: 0.0,
            trials,
        }
    });
    Ok(GapResult {
        k,
        n,
        exact_ratio,
        simulated,
        bound: 1.0 - 1.0 / (2.0 * std::f64::consts::PI * k as f64).sqrt(),
    })
}
