use super::{ExAnteSolution, SolverMeta};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::value::ValueFunction;

/// Symmetric values over `n` agents sharing `prior`: the common quantile is
/// the largest `q` with `n P̄(q) <= B`, and the objective is the concave
/// closure `ḡ(n q)`.
pub fn solve_symmetric<T: Real>(
    prior: &AgentPrior<T>,
    n: usize,
    value: &ValueFunction<T>,
    budget: T,
) -> Result<ExAnteSolution<T>> {
    if !value.is_symmetric() {
        return Err(Error::WrongVariant {
            expected: "symmetric",
        });
    }
    if value.n() != n || n == 0 {
        return Err(Error::Dimension(format!(
            "symmetric table over {} agents, {n} priors",
            value.n()
        )));
    }
    if budget < T::zero() || !budget.is_finite() {
        return Err(Error::NonPositiveBudget(budget.to_f64_lossy()));
    }
    let q = prior.ironed().quantile_for_spend(budget / T::of_usize(n));
    let objective = value.concave_closure_symmetric(q)?;
    Ok(ExAnteSolution::assemble(
        &prior.replicate(n),
        vec![q; n],
        objective,
        SolverMeta::Symmetric { q },
    ))
}
