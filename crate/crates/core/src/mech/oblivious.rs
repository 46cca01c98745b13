use super::{market_size, OrderPolicy, PriceMenu};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::exante::{solve_ex_ante, GreedyParams, SolverKind};
use crate::real::Real;
use crate::value::ValueFunction;

pub const EPSILON_GRID: usize = 10_000;

/// `(1 - ε)(1 - exp(-ε² (1 - ε) k / 12))`.
pub fn oblivious_bound(k: f64, eps: f64) -> f64 {
    (1.0 - eps) * (1.0 - (-eps * eps * (1.0 - eps) * k / 12.0).exp())
}

/// Maximizes [`oblivious_bound`] over an interior grid of `(2/k, 1/2)`.
/// Returns `(ε, bound)`.
pub fn choose_epsilon(k: f64) -> Result<(f64, f64)> {
    if !(k > 4.0) || !k.is_finite() {
        return Err(Error::MarketTooSmall { k });
    }
    let (a, b) = (2.0 / k, 0.5);
    let mut best = (0.5 * (a + b), f64::NEG_INFINITY);
    for j in 1..=EPSILON_GRID {
        let eps = a + (b - a) * j as f64 / (EPSILON_GRID + 1) as f64;
        let v = oblivious_bound(k, eps);
        if v > best.1 {
            best = (eps, v);
        }
    }
    Ok(best)
}

/// Menu for arbitrary (adversarial) orders: the ex ante solution at the
/// shrunken budget `(1 - ε) B`. Flags the menu when the market is not
/// `2/ε`-large, in which case the overflow bound does not apply.
pub fn build_oblivious<T: Real>(
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
    budget: T,
    eps: f64,
    kind: SolverKind,
    params: &GreedyParams,
) -> Result<PriceMenu<T>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let shrunk = budget * (T::one() - T::of(eps));
    let sol = solve_ex_ante(priors, value, shrunk, kind, params)?;
    let mut menu = PriceMenu::from_solution(&sol, OrderPolicy::External)?;
    let k = market_size(&menu.offers, budget).to_f64_lossy();
    menu.market_warning = !(k > 2.0 / eps);
    Ok(menu)
}
