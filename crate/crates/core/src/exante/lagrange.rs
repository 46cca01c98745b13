use super::{check_budget, expected_spend, ExAnteSolution, SolverMeta};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::real::Real;

const BISECTION_STEPS: usize = 200;
const MAX_DOUBLINGS: usize = 2048;

/// `q_i = sup { q : φ̄_i(q) <= v_i / λ }` over the hull vertices of each
/// agent's ironed curve. `λ = 0` buys everyone with certainty.
pub fn lagrangian_quantiles<T: Real>(priors: &[AgentPrior<T>], values: &[T], lambda: T) -> Vec<T> {
    priors
        .iter()
        .zip(values)
        .map(|(p, &v)| {
            if lambda <= T::zero() {
                T::one()
            } else {
                p.ironed().quantile_for_slope(v / lambda)
            }
        })
        .collect()
}

/// Optimal ex ante mechanism for additive values.
///
/// Bisects on `λ` until the bracket collapses, then mixes the feasible and
/// infeasible quantile vectors at the bracket ends so that the budget binds.
/// Every agent whose quantile differs between the two ends sits on a hull
/// segment with the same bang-per-buck `v_i / φ̄_i = λ`, so any mixture of
/// them is equally good; interior points of ironed intervals become
/// two-price lotteries in the menu.
pub fn solve_additive<T: Real>(
    priors: &[AgentPrior<T>],
    values: &[T],
    budget: T,
) -> Result<ExAnteSolution<T>> {
    check_budget(budget)?;
    if priors.len() != values.len() || priors.is_empty() {
        return Err(Error::Dimension(format!(
            "{} priors for {} values",
            priors.len(),
            values.len()
        )));
    }
    let objective = |q: &[T]| values.iter().zip(q).map(|(v, x)| *v * *x).sum::<T>();
    let spend_at =
        |lambda: T| expected_spend(priors, &lagrangian_quantiles(priors, values, lambda));

    let all = vec![T::one(); priors.len()];
    if expected_spend(priors, &all) <= budget {
        let obj = objective(&all);
        return Ok(ExAnteSolution::assemble(
            priors,
            all,
            obj,
            SolverMeta::Lagrangian { lambda: T::zero() },
        ));
    }

    let mut hi = T::one();
    let mut doublings = 0;
    while spend_at(hi) > budget {
        hi = hi + hi;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Numeric("no multiplier meets the budget".into()));
        }
    }
    let mut lo = T::zero();
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / (T::one() + T::one());
        if mid <= lo || mid >= hi {
            break;
        }
        if spend_at(mid) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let feasible = lagrangian_quantiles(priors, values, hi);
    let over = lagrangian_quantiles(priors, values, lo);
    let q = mix_to_budget(priors, &feasible, &over, budget);
    let obj = objective(&q);
    Ok(ExAnteSolution::assemble(
        priors,
        q,
        obj,
        SolverMeta::Lagrangian { lambda: hi },
    ))
}

/// Largest `t` in `[0, 1]` (by bisection) such that
/// `feasible + t (over - feasible)` still fits the budget.
pub(crate) fn mix_to_budget<T: Real>(
    priors: &[AgentPrior<T>],
    feasible: &[T],
    over: &[T],
    budget: T,
) -> Vec<T> {
    let at = |t: T| -> Vec<T> {
        feasible
            .iter()
            .zip(over)
            .map(|(&a, &b)| (a + t * (b - a)).min(T::one()))
            .collect()
    };
    if feasible == over {
        return feasible.to_vec();
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / (T::one() + T::one());
        if mid <= lo || mid >= hi {
            break;
        }
        if expected_spend(priors, &at(mid)) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CostDistribution;

    fn uniform_priors(n: usize) -> Vec<AgentPrior<f64>> {
        AgentPrior::with_default_grid(CostDistribution::uniform(0.0, 1.0).unwrap())
            .unwrap()
            .replicate(n)
    }

    #[test]
    fn uniform_sixteen() {
        let priors = uniform_priors(16);
        let sol = solve_additive(&priors, &[1.0; 16], 4.0).unwrap();
        for (q, offer) in sol.q.iter().zip(&sol.menu) {
            assert!((q - 0.5).abs() < 1e-6, "q = {q}");
            assert!((offer.price_lo - 0.5).abs() < 1e-6);
            assert!(!offer.is_randomized());
        }
        assert!((sol.expected_spend - 4.0).abs() < 1e-6);
        assert!(sol.expected_spend <= 4.0);
        assert!((sol.objective - 8.0).abs() < 1e-5);
    }

    #[test]
    fn lagrangian_quantile_limits() {
        let priors = uniform_priors(3);
        let v = [1.0, 2.0, 0.5];
        assert_eq!(lagrangian_quantiles(&priors, &v, 0.0), vec![1.0; 3]);
        assert_eq!(lagrangian_quantiles(&priors, &v, 1e12), vec![0.0; 3]);
        // φ̄(q) = 2q on uniform[0,1]; λ = 1, v = 1 gives q = 0.5
        let q = lagrangian_quantiles(&priors, &v, 1.0);
        assert!((q[0] - 0.5).abs() < 1e-3);
        assert!((q[1] - 1.0).abs() < 1e-3);
        assert!((q[2] - 0.25).abs() < 1e-3);
    }

    #[test]
    fn generous_budget_buys_everyone() {
        let priors = uniform_priors(4);
        let sol = solve_additive(&priors, &[1.0, 2.0, 3.0, 4.0], 4.0).unwrap();
        assert_eq!(sol.q, vec![1.0; 4]);
        assert_eq!(sol.meta, SolverMeta::Lagrangian { lambda: 0.0 });
        assert_eq!(sol.objective, 10.0);
    }

    #[test]
    fn rejects_nonpositive_budget() {
        let priors = uniform_priors(2);
        assert!(matches!(
            solve_additive(&priors, &[1.0, 1.0], 0.0),
            Err(Error::NonPositiveBudget(_))
        ));
    }

    #[test]
    fn budget_binds_and_objective_grows_with_budget() {
        let d =
            CostDistribution::piecewise_cdf(vec![(0.0, 0.0), (0.2, 0.45), (0.8, 0.55), (1.0, 1.0)])
                .unwrap();
        let irregular = AgentPrior::new(d, 2001).unwrap();
        let regular = AgentPrior::new(CostDistribution::uniform(0.1, 0.9).unwrap(), 2001).unwrap();
        let priors = vec![irregular.clone(), regular, irregular];
        let v = [1.0, 1.5, 0.7];
        let mut last = 0.0;
        for b in [0.05, 0.1, 0.2, 0.4, 0.8, 1.2] {
            let sol = solve_additive(&priors, &v, b).unwrap();
            assert!(sol.expected_spend <= b + 1e-9);
            assert!(
                sol.expected_spend >= b - 1e-6,
                "b = {b}: {}",
                sol.expected_spend
            );
            assert!(sol.objective >= last - 1e-12);
            last = sol.objective;
        }
    }
}
