//! Ex ante relaxation: choose acceptance quantiles `q` maximizing the
//! multilinear extension `V(q)` subject to `Σ P̄_i(q_i) <= B`.
//!
//! Additive values are solved exactly by Lagrangian relaxation, symmetric
//! values by a scalar search, and general monotone submodular values by
//! greedy on a discretized instance of `m` small agents per agent.

mod greedy;
mod lagrange;
mod symmetric;

pub use greedy::{
    discretize, greedy_submodular, GreedyParams, MarginalMode, SampleSchedule, SmallAgentTable,
};
pub use lagrange::{lagrangian_quantiles, solve_additive};
pub use symmetric::solve_symmetric;

use crate::dist::{AgentPrior, PriceLottery};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::value::ValueFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverMeta<T> {
    /// Multiplier at which the budget binds; 0 when everyone is bought
    /// outright.
    Lagrangian {
        lambda: T,
    },
    Symmetric {
        q: T,
    },
    Greedy {
        m: usize,
        steps: usize,
        noisy_deltas: bool,
        sampled_marginals: bool,
    },
}

#[derive(Debug, Clone)]
pub struct ExAnteSolution<T> {
    pub q: Vec<T>,
    pub menu: Vec<PriceLottery<T>>,
    /// `Σ P̄_i(q_i)`.
    pub expected_spend: T,
    pub objective: T,
    pub meta: SolverMeta<T>,
}

impl<T: Real> ExAnteSolution<T> {
    pub(crate) fn assemble(
        priors: &[AgentPrior<T>],
        q: Vec<T>,
        objective: T,
        meta: SolverMeta<T>,
    ) -> Self {
        let menu = priors.iter().zip(&q).map(|(p, &qi)| p.offer(qi)).collect();
        let expected_spend = expected_spend(priors, &q);
        Self {
            q,
            menu,
            expected_spend,
            objective,
            meta,
        }
    }

    /// Largest price any offer can post.
    pub fn max_price(&self) -> T {
        self.menu
            .iter()
            .filter(|l| !l.is_void())
            .map(|l| l.max_price())
            .fold(T::zero(), T::max)
    }
}

pub fn expected_spend<T: Real>(priors: &[AgentPrior<T>], q: &[T]) -> T {
    priors
        .iter()
        .zip(q)
        .map(|(p, &qi)| p.ironed().value_at(qi))
        .sum()
}

pub(crate) fn check_budget<T: Real>(budget: T) -> Result<()> {
    if !(budget > T::zero()) || !budget.is_finite() {
        return Err(Error::NonPositiveBudget(budget.to_f64_lossy()));
    }
    Ok(())
}

pub(crate) fn check_agents<T: Real>(
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
) -> Result<()> {
    if priors.is_empty() {
        return Err(Error::Dimension("no agents".into()));
    }
    if priors.len() != value.n() {
        return Err(Error::Dimension(format!(
            "{} priors for a value function over {} agents",
            priors.len(),
            value.n()
        )));
    }
    Ok(())
}

/// Which solver [`solve_ex_ante`] picks, or forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Auto,
    Additive,
    Symmetric,
    Greedy,
}

/// Dispatches on the value function: Lagrangian for additive, scalar search
/// for symmetric values over identical priors, greedy otherwise.
pub fn solve_ex_ante<T: Real>(
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
    budget: T,
    kind: SolverKind,
    params: &GreedyParams,
) -> Result<ExAnteSolution<T>> {
    check_agents(priors, value)?;
    let identical = priors.iter().all(|p| p.same_prior(&priors[0]));
    let kind = match kind {
        SolverKind::Auto if value.is_additive() => SolverKind::Additive,
        SolverKind::Auto if value.is_symmetric() && identical => SolverKind::Symmetric,
        SolverKind::Auto => SolverKind::Greedy,
        k => k,
    };
    match kind {
        SolverKind::Additive => {
            let v = value.additive_values().ok_or(Error::WrongVariant {
                expected: "additive",
            })?;
            solve_additive(priors, v, budget)
        }
        SolverKind::Symmetric => {
            if !identical {
                return Err(Error::InvalidParameter(
                    "symmetric solver needs identical priors".into(),
                ));
            }
            solve_symmetric(&priors[0], priors.len(), value, budget)
        }
        _ => greedy_submodular(priors, value, budget, params),
    }
}
