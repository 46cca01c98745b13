//! Ex post posted-pricing mechanisms.
//!
//! Agents are visited in some order. An agent is offered its (realized)
//! price only if that price fits the remaining budget; it is selected when
//! its cost is at most the price, and then paid exactly the price.

mod derandomize;
mod knapsack;
mod oblivious;

pub use derandomize::{derandomize_additive, pairwise_shift};
pub use knapsack::{fractional_knapsack_value, integral_knapsack_value};
pub use oblivious::{build_oblivious, choose_epsilon, oblivious_bound, EPSILON_GRID};

use rand::Rng;

use crate::dist::PriceLottery;
use crate::error::{Error, Result};
use crate::exante::ExAnteSolution;
use crate::real::Real;
use crate::rng;
use crate::value::ValueFunction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderPolicy {
    FixedSequence(Vec<usize>),
    /// Decreasing `v_i / p_i` over the realized prices; additive values only.
    BangPerBuck,
    /// The caller supplies the order at run time.
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceMenu<T> {
    pub offers: Vec<PriceLottery<T>>,
    pub policy: OrderPolicy,
    /// Set when the menu was built for a market too small for the
    /// contention-resolution guarantee to apply.
    pub market_warning: bool,
}

impl<T: Real> PriceMenu<T> {
    pub fn new(offers: Vec<PriceLottery<T>>, policy: OrderPolicy) -> Result<Self> {
        for (agent, o) in offers.iter().enumerate() {
            if !o.is_void() && !(o.max_price() > T::zero()) {
                return Err(Error::ZeroPrice { agent });
            }
        }
        if let OrderPolicy::FixedSequence(order) = &policy {
            check_permutation(order, offers.len())?;
        }
        Ok(Self {
            offers,
            policy,
            market_warning: false,
        })
    }

    pub fn from_solution(sol: &ExAnteSolution<T>, policy: OrderPolicy) -> Result<Self> {
        Self::new(sol.menu.clone(), policy)
    }

    /// Deterministic prices with the given acceptance quantiles.
    pub fn deterministic(prices: &[T], quantiles: &[T], policy: OrderPolicy) -> Result<Self> {
        let offers = prices
            .iter()
            .zip(quantiles)
            .map(|(&p, &q)| PriceLottery::deterministic(p, q))
            .collect();
        Self::new(offers, policy)
    }

    pub fn n(&self) -> usize {
        self.offers.len()
    }

    pub fn is_deterministic(&self) -> bool {
        !self.offers.iter().any(|o| o.is_randomized())
    }

    /// Realizes every lottery from one uniform draw per agent, in agent
    /// order. Void agents get price 0.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.offers
            .iter()
            .map(|o| {
                let u: f64 = rng.gen();
                if o.is_void() {
                    T::zero()
                } else {
                    o.realize(u)
                }
            })
            .collect()
    }

    /// Prices with lotteries resolved to their lower price; handy when the
    /// menu is known to be deterministic.
    pub fn base_prices(&self) -> Vec<T> {
        self.offers
            .iter()
            .map(|o| {
                if o.is_void() {
                    T::zero()
                } else {
                    o.realize(0.0)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    /// Selected agents in service order.
    pub selected: Vec<usize>,
    /// Per-agent payments; zero for agents not selected.
    pub payments: Vec<T>,
    pub total_spend: T,
    pub value: T,
    /// Agents whose price fit the remaining budget when they arrived.
    pub offers_made: Vec<usize>,
    /// Per-agent prices after lottery realization (0 for void agents).
    pub realized_prices: Vec<T>,
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidOrder(format!(
            "order has {} entries for {n} agents",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidOrder(format!(
                "agent {i} repeated or out of range"
            )));
        }
    }
    Ok(())
}

/// Core loop: visit `order`, offer `prices[i]` when it fits, select when
/// `accepts(i)`. The running total is the exact floating-point sum that was
/// checked against the budget, so `total_spend <= budget` always holds.
pub fn serve_sequence<T: Real>(
    prices: &[T],
    accepts: impl Fn(usize) -> bool,
    budget: T,
    order: &[usize],
    mut on_select: impl FnMut(usize),
    mut on_offer: impl FnMut(usize),
) -> T {
    let mut spent = T::zero();
    for &i in order {
        let p = prices[i];
        if !(p > T::zero()) {
            continue;
        }
        let after = spent + p;
        if after > budget {
            continue;
        }
        on_offer(i);
        if accepts(i) {
            spent = after;
            on_select(i);
        }
    }
    spent
}

/// Runs the menu on one cost profile with already-realized prices.
pub fn run_with_prices<T: Real>(
    value: &ValueFunction<T>,
    prices: &[T],
    costs: &[T],
    budget: T,
    order: &[usize],
) -> RunOutcome<T> {
    let n = prices.len();
    let mut selected = Vec::new();
    let mut offers_made = Vec::new();
    let total_spend = serve_sequence(
        prices,
        |i| costs[i] <= prices[i],
        budget,
        order,
        |i| selected.push(i),
        |i| offers_made.push(i),
    );
    let mut payments = vec![T::zero(); n];
    let mut mask = vec![false; n];
    for &i in &selected {
        payments[i] = prices[i];
        mask[i] = true;
    }
    RunOutcome {
        value: value.evaluate(&mask),
        selected,
        payments,
        total_spend,
        offers_made,
        realized_prices: prices.to_vec(),
    }
}

/// One run of the mechanism.
///
/// Lotteries are realized from `seed` with one uniform per agent drawn in
/// agent order; each realized price is only consulted when its agent
/// arrives. `order` is required for [`OrderPolicy::External`] and overrides
/// any other policy when given.
pub fn run<T: Real>(
    menu: &PriceMenu<T>,
    value: &ValueFunction<T>,
    costs: &[T],
    budget: T,
    order: Option<&[usize]>,
    seed: u64,
) -> Result<RunOutcome<T>> {
    let n = menu.n();
    if costs.len() != n || value.n() != n {
        return Err(Error::Dimension(format!(
            "menu over {n} agents, {} costs, value over {}",
            costs.len(),
            value.n()
        )));
    }
    let prices = menu.realize(&mut rng::stream(seed, 0));
    let order = match (order, &menu.policy) {
        (Some(o), _) => {
            check_permutation(o, n)?;
            o.to_vec()
        }
        (None, OrderPolicy::FixedSequence(o)) => o.clone(),
        (None, OrderPolicy::BangPerBuck) => {
            let v = value.additive_values().ok_or(Error::WrongVariant {
                expected: "additive",
            })?;
            realized_bang_per_buck(v, &prices)
        }
        (None, OrderPolicy::External) => {
            return Err(Error::InvalidOrder("menu needs an external order".into()))
        }
    };
    Ok(run_with_prices(value, &prices, costs, budget, &order))
}

/// Decreasing `v_i / p_i`, ties by agent index.
///
/// Errors on a zero price for an agent with positive quantile; void agents
/// go last.
pub fn bang_per_buck_order<T: Real>(values: &[T], menu: &PriceMenu<T>) -> Result<Vec<usize>> {
    if values.len() != menu.n() {
        return Err(Error::Dimension("values and menu differ in length".into()));
    }
    for (agent, o) in menu.offers.iter().enumerate() {
        if !o.is_void() && !(o.realize(0.0) > T::zero()) {
            return Err(Error::ZeroPrice { agent });
        }
    }
    Ok(realized_bang_per_buck(values, &menu.base_prices()))
}

/// Bang-per-buck order over realized prices; agents priced at 0 go last.
pub fn realized_bang_per_buck<T: Real>(values: &[T], prices: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let key = |i: usize| {
        if prices[i] > T::zero() {
            values[i] / prices[i]
        } else {
            T::neg_infinity()
        }
    };
    order.sort_by(|&a, &b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// `k = B / max price`, over every price a lottery can post.
pub fn market_size<T: Real>(offers: &[PriceLottery<T>], budget: T) -> T {
    let p = offers
        .iter()
        .filter(|o| !o.is_void())
        .map(|o| o.max_price())
        .fold(T::zero(), T::max);
    if p > T::zero() {
        budget / p
    } else {
        T::infinity()
    }
}
