//! Monte Carlo evaluation of posted-pricing menus, theoretical bound
//! tables, and the experiments that compare the two.
//!
//! Trials run in parallel; trial `t` draws everything from
//! `rng::stream(seed, t)` and results are reduced in trial order, so every
//! estimate is a deterministic function of its inputs and seed.

mod bounds;
mod report;

pub use bounds::{
    bounds_table, correlation_gap_exact, correlation_gap_experiment, overflow_ceiling,
    overflow_probability, sequential_bound, BoundsRow, GapResult, OverflowEstimate, BOUNDS_HEADER,
    GAP_HEADER,
};
pub use report::{
    approximation_report, ex_ante_bound, fmt_sig, Benchmark, ExperimentReport, Instance, Variant,
    REPORT_HEADER,
};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::mech::{check_permutation, realized_bang_per_buck, run_with_prices, PriceMenu};
use crate::real::Real;
use crate::rng;
use crate::value::ValueFunction;

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_PERMUTATIONS: usize = 20;

/// How the evaluator orders agents in each trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderEval {
    BangPerBuck,
    /// Per trial, the minimum value over `count` fixed random permutations
    /// plus descending-price and ascending bang-per-buck orders.
    WorstOfSampled {
        count: usize,
    },
    Fixed(Vec<usize>),
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    /// `None` for a single trial.
    pub stderr: Option<T>,
    /// Largest realized total payment over all runs.
    pub max_spend: T,
    pub trials: usize,
}

impl<T: Real> McEstimate<T> {
    /// Standard error relative to `scale`, 0 when unavailable.
    pub fn relative_stderr(&self, scale: T) -> T {
        match self.stderr {
            Some(s) if scale > T::zero() => s / scale,
            _ => T::zero(),
        }
    }
}

/// Sum by recursive halving; error grows with `log n` instead of `n`.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= 64 {
        return xs.iter().copied().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of the mean; `None` stderr for one sample.
pub fn mean_stderr<T: Real>(xs: &[T]) -> (T, Option<T>) {
    let n = T::of_usize(xs.len());
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let sq: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - T::one());
    (mean, Some((var / n).sqrt()))
}

fn check_instance<T: Real>(
    menu: &PriceMenu<T>,
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
) -> Result<()> {
    if menu.n() != priors.len() || value.n() != priors.len() {
        return Err(Error::Dimension(format!(
            "menu over {}, {} priors, value over {}",
            menu.n(),
            priors.len(),
            value.n()
        )));
    }
    Ok(())
}

/// Descending realized price, ties by index.
fn descending_price<T: Real>(prices: &[T]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..prices.len()).collect();
    o.sort_by(|&a, &b| {
        prices[b]
            .partial_cmp(&prices[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    o
}

/// Expected value of the mechanism under `policy`, with one independent
/// cost profile and lottery realization per trial.
pub fn monte_carlo_value<T: Real>(
    menu: &PriceMenu<T>,
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
    budget: T,
    policy: &OrderEval,
    trials: usize,
    seed: u64,
) -> Result<McEstimate<T>> {
    check_instance(menu, priors, value)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let n = menu.n();
    let singles: Vec<T> = match value.additive_values() {
        Some(v) => v.to_vec(),
        None => (0..n).map(|i| value.evaluate_set(&[i])).collect(),
    };
    let fixed_orders: Vec<Vec<usize>> = match policy {
        OrderEval::BangPerBuck => {
            if !value.is_additive() {
                return Err(Error::WrongVariant {
                    expected: "additive",
                });
            }
            Vec::new()
        }
        OrderEval::Fixed(o) => {
            check_permutation(o, n)?;
            vec![o.clone()]
        }
        OrderEval::WorstOfSampled { count } => {
            let mut r = rng::stream(seed, u64::MAX);
            (0..*count)
                .map(|_| {
                    let mut o: Vec<usize> = (0..n).collect();
                    o.shuffle(&mut r);
                    o
                })
                .collect()
        }
        OrderEval::UniformRandom => Vec::new(),
    };
    // deterministic prices give the same bang-per-buck order in every trial
    let static_bpb = (matches!(policy, OrderEval::BangPerBuck) && menu.is_deterministic())
        .then(|| realized_bang_per_buck(&singles, &menu.base_prices()));

    let results: Vec<(T, T)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let costs: Vec<T> = priors.iter().map(|p| p.dist().sample(&mut r)).collect();
            let prices = menu.realize(&mut r);
            let eval = |order: &[usize]| {
                let out = run_with_prices(value, &prices, &costs, budget, order);
                (out.value, out.total_spend)
            };
            match policy {
                OrderEval::BangPerBuck => match &static_bpb {
                    Some(o) => eval(o),
                    None => eval(&realized_bang_per_buck(&singles, &prices)),
                },
                OrderEval::Fixed(_) => eval(&fixed_orders[0]),
                OrderEval::UniformRandom => {
                    let mut o: Vec<usize> = (0..n).collect();
                    o.shuffle(&mut r);
                    eval(&o)
                }
                OrderEval::WorstOfSampled { .. } => {
                    let mut ascending = realized_bang_per_buck(&singles, &prices);
                    ascending.reverse();
                    let heuristics = [descending_price(&prices), ascending];
                    fixed_orders
                        .iter()
                        .chain(heuristics.iter())
                        .map(|o| eval(o))
                        .fold((T::infinity(), T::zero()), |(v, s), (v2, s2)| {
                            (v.min(v2), s.max(s2))
                        })
                }
            }
        })
        .collect();

    let values: Vec<T> = results.iter().map(|r| r.0).collect();
    let max_spend = results.iter().map(|r| r.1).fold(T::zero(), T::max);
    let (mean, stderr) = mean_stderr(&values);
    Ok(McEstimate {
        mean,
        stderr,
        max_spend,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CostDistribution, PriceLottery};
    use crate::mech::OrderPolicy;

    fn uniform(n: usize) -> Vec<AgentPrior<f64>> {
        AgentPrior::with_default_grid(CostDistribution::uniform(0.0, 1.0).unwrap())
            .unwrap()
            .replicate(n)
    }

    #[test]
    fn void_menu_is_worth_nothing() {
        let menu =
            PriceMenu::deterministic(&[0.0, 0.0], &[0.0, 0.0], OrderPolicy::BangPerBuck).unwrap();
        let v = ValueFunction::additive(vec![1.0, 1.0]).unwrap();
        let e = monte_carlo_value(&menu, &uniform(2), &v, 1.0, &OrderEval::BangPerBuck, 100, 1)
            .unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.stderr, Some(0.0));
    }

    #[test]
    fn single_bernoulli_agent() {
        let menu = PriceMenu::deterministic(&[0.5], &[0.5], OrderPolicy::BangPerBuck).unwrap();
        let v = ValueFunction::additive(vec![1.0]).unwrap();
        let e = monte_carlo_value(
            &menu,
            &uniform(1),
            &v,
            1.0,
            &OrderEval::BangPerBuck,
            20_000,
            9,
        )
        .unwrap();
        assert!((e.mean - 0.5).abs() <= 3.0 * e.stderr.unwrap());
        let one =
            monte_carlo_value(&menu, &uniform(1), &v, 1.0, &OrderEval::BangPerBuck, 1, 9).unwrap();
        assert_eq!(one.stderr, None);
    }

    #[test]
    fn three_agents_match_enumeration() {
        // prices (0.4, 0.5, 0.3), B = 0.8, fixed order: enumerate acceptance patterns
        let prices = [0.4, 0.5, 0.3];
        let vals = [1.0, 2.0, 0.5];
        let mut exact = 0.0;
        for bits in 0..8u32 {
            let acc: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let p: f64 = (0..3)
                .map(|i| if acc[i] { prices[i] } else { 1.0 - prices[i] })
                .product();
            let (mut left, mut got) = (0.8f64, 0.0);
            for i in 0..3 {
                if prices[i] <= left + 1e-12 && acc[i] {
                    left -= prices[i];
                    got += vals[i];
                }
            }
            exact += p * got;
        }
        let menu = PriceMenu::deterministic(&prices, &prices, OrderPolicy::External).unwrap();
        let v = ValueFunction::additive(vals.to_vec()).unwrap();
        let e = monte_carlo_value(
            &menu,
            &uniform(3),
            &v,
            0.8,
            &OrderEval::Fixed(vec![0, 1, 2]),
            50_000,
            4,
        )
        .unwrap();
        assert!(
            (e.mean - exact).abs() <= 4.0 * e.stderr.unwrap(),
            "{} vs {exact}",
            e.mean
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let offers = vec![
            PriceLottery {
                quantile: 0.5,
                price_lo: 0.3,
                price_hi: 0.7,
                prob_lo: 0.5,
            },
            PriceLottery::deterministic(0.4, 0.4),
        ];
        let menu = PriceMenu::new(offers, OrderPolicy::External).unwrap();
        let v = ValueFunction::symmetric(vec![0.0, 1.0, 1.5]).unwrap();
        let pol = OrderEval::WorstOfSampled { count: 5 };
        let a = monte_carlo_value(&menu, &uniform(2), &v, 0.9, &pol, 1000, 77).unwrap();
        let b = monte_carlo_value(&menu, &uniform(2), &v, 0.9, &pol, 1000, 77).unwrap();
        assert_eq!(a, b);
        assert!(a.max_spend <= 0.9);
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1f64; 100_000];
        assert!((pairwise_sum(&xs) - 10_000.0).abs() < 1e-9);
    }
}
