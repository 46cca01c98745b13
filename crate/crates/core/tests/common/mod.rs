//! Shared instance generators and brute-force oracles.
#![allow(dead_code)]

use budget_pricing::dist::{AgentPrior, CostDistribution};
use budget_pricing::exante::SmallAgentTable;
use budget_pricing::value::ValueFunction;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prior(d: CostDistribution<f64>) -> AgentPrior<f64> {
    AgentPrior::with_default_grid(d).unwrap()
}

pub fn uniform(lo: f64, hi: f64) -> CostDistribution<f64> {
    CostDistribution::uniform(lo, hi).unwrap()
}

/// Random piecewise-linear CDF with 2 to 4 interior breakpoints.
pub fn random_piecewise(r: &mut ChaCha8Rng) -> CostDistribution<f64> {
    let lo = r.gen_range(0.0..0.3);
    let hi = lo + r.gen_range(0.5..1.5);
    let k = r.gen_range(2..=4);
    let mut cs: Vec<f64> = (0..k).map(|_| r.gen_range(lo..hi)).collect();
    let mut fs: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..1.0)).collect();
    cs.sort_by(f64::total_cmp);
    fs.sort_by(f64::total_cmp);
    cs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut pts = vec![(lo, 0.0)];
    for (c, f) in cs.into_iter().zip(fs) {
        if c - pts.last().unwrap().0 > 1e-3 && hi - c > 1e-3 {
            pts.push((c, f));
        }
    }
    pts.push((hi, 1.0));
    CostDistribution::piecewise_cdf(pts).unwrap()
}

/// Bimodal CDF: mass near both ends of the support with a sparse middle.
pub fn random_irregular(r: &mut ChaCha8Rng) -> CostDistribution<f64> {
    loop {
        let hi = r.gen_range(0.8..2.0);
        let a = r.gen_range(0.05..0.3) * hi;
        let b = r.gen_range(0.6..0.9) * hi;
        let fa = r.gen_range(0.3..0.6);
        let fb = fa + r.gen_range(0.0..0.1);
        let d =
            CostDistribution::piecewise_cdf(vec![(0.0, 0.0), (a, fa), (b, fb), (hi, 1.0)]).unwrap();
        let p = AgentPrior::new(d.clone(), 1001).unwrap();
        if p.ironed().is_ironed() {
            return d;
        }
    }
}

pub fn random_dist(r: &mut ChaCha8Rng) -> CostDistribution<f64> {
    match r.gen_range(0..4) {
        0 => {
            let lo = r.gen_range(0.0..0.5);
            uniform(lo, lo + r.gen_range(0.2..1.5))
        }
        1 => {
            let lo = r.gen_range(0.0..0.3);
            CostDistribution::truncated_exponential(
                r.gen_range(0.5..3.0),
                lo,
                lo + r.gen_range(0.5..2.0),
            )
            .unwrap()
        }
        2 => random_piecewise(r),
        _ => random_irregular(r),
    }
}

/// True (un-ironed) spend `q F^{-1}(q)`.
pub fn spend(d: &CostDistribution<f64>, q: f64) -> f64 {
    q * d.inverse_cdf(q)
}

/// Largest `q` with `q F^{-1}(q) <= budget`, by bisection.
pub fn max_quantile_within(d: &CostDistribution<f64>, budget: f64) -> f64 {
    if spend(d, 1.0) <= budget {
        return 1.0;
    }
    if budget < 0.0 {
        return f64::NAN;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if spend(d, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grid search over deterministic-price quantiles for three additive
/// agents: `grid` points for the first two, the best feasible third.
pub fn grid_search_additive3(
    dists: &[CostDistribution<f64>],
    v: &[f64],
    budget: f64,
    grid: usize,
) -> f64 {
    assert_eq!(dists.len(), 3);
    let mut best = 0.0f64;
    for a in 0..=grid {
        let q1 = a as f64 / grid as f64;
        let s1 = spend(&dists[0], q1);
        if s1 > budget {
            break;
        }
        for b in 0..=grid {
            let q2 = b as f64 / grid as f64;
            let s2 = spend(&dists[1], q2);
            if s1 + s2 > budget {
                break;
            }
            let q3 = max_quantile_within(&dists[2], budget - s1 - s2);
            best = best.max(v[0] * q1 + v[1] * q2 + v[2] * q3);
        }
    }
    best
}

/// Best value over small-agent subsets of size at most `m`. A monotone
/// objective prefers the largest increments of each agent, so it suffices
/// to enumerate how many increments each agent takes.
pub fn reduced_optimum(table: &SmallAgentTable<f64>, v: &ValueFunction<f64>) -> f64 {
    let n = table.deltas.len();
    let mut counts = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        if counts.iter().sum::<usize>() <= table.m {
            let q: Vec<f64> = (0..n)
                .map(|i| table.deltas[i][..counts[i]].iter().sum())
                .collect();
            best = best.max(v.multilinear_exhaustive(&q).unwrap());
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            counts[i] += 1;
            if counts[i] <= table.deltas[i].len() {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Same optimum by enumerating every subset of small agents.
pub fn reduced_optimum_subsets(table: &SmallAgentTable<f64>, v: &ValueFunction<f64>) -> f64 {
    let items: Vec<(usize, f64)> = table
        .deltas
        .iter()
        .enumerate()
        .flat_map(|(i, ds)| ds.iter().map(move |&d| (i, d)))
        .collect();
    assert!(items.len() <= 20);
    let mut best = 0.0f64;
    for bits in 0u32..(1 << items.len()) {
        if bits.count_ones() as usize > table.m {
            continue;
        }
        let mut q = vec![0.0; table.deltas.len()];
        for (k, (i, d)) in items.iter().enumerate() {
            if bits >> k & 1 == 1 {
                q[*i] += d;
            }
        }
        for x in q.iter_mut() {
            *x = x.min(1.0);
        }
        best = best.max(v.multilinear_exhaustive(&q).unwrap());
    }
    best
}

/// Weighted coverage over `universe` elements, each agent covering a random
/// nonempty subset.
pub fn random_coverage(r: &mut ChaCha8Rng, n: usize, universe: usize) -> ValueFunction<f64> {
    let mut text = String::new();
    let weights: Vec<f64> = (0..universe).map(|_| r.gen_range(0.1..2.0)).collect();
    for _ in 0..n {
        let mut line = Vec::new();
        for (e, w) in weights.iter().enumerate() {
            if r.gen_bool(0.4) {
                line.push(format!("e{e}:{w}"));
            }
        }
        if line.is_empty() {
            let e = r.gen_range(0..universe);
            line.push(format!("e{e}:{}", weights[e]));
        }
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    ValueFunction::coverage(budget_pricing::value::Coverage::parse(&text).unwrap()).unwrap()
}
