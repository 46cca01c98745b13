use rand::Rng;
use rayon::prelude::*;

use super::{check_agents, ExAnteSolution, SolverMeta};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng;
use crate::value::{ValueFunction, DEFAULT_SAMPLES, EXHAUSTIVE_LIMIT};

/// How marginal contributions `V(q + δ e_i) - V(q)` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarginalMode {
    /// Closed form for additive and symmetric values, sampled otherwise.
    #[default]
    Auto,
    /// Closed form, or exhaustive enumeration for at most 16 agents.
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSchedule {
    Fixed(usize),
    /// `ceil(10 / a^4 * (1 + ln n))` samples for accuracy `a`.
    Accuracy {
        accuracy: f64,
    },
}

impl SampleSchedule {
    pub fn samples(&self, n: usize) -> Result<usize> {
        match *self {
            Self::Fixed(0) => Err(Error::ZeroSamples),
            Self::Fixed(s) => Ok(s),
            Self::Accuracy { accuracy } => {
                if !(accuracy > 0.0 && accuracy <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sampling accuracy must lie in (0, 1], got {accuracy}"
                    )));
                }
                let s = 10.0 / accuracy.powi(4) * (1.0 + (n as f64).ln());
                if s > usize::MAX as f64 / 2.0 {
                    return Err(Error::InvalidParameter("sample count overflows".into()));
                }
                Ok(s.ceil() as usize)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyParams {
    /// Increments of spend `B / m` the greedy may pick; `n²` when unset.
    pub m: Option<usize>,
    pub marginal: MarginalMode,
    pub schedule: SampleSchedule,
    /// Perturb each increment within `[(1 - 1/n³) δ, δ]`.
    pub noisy_deltas: bool,
    /// Reject non-submodular values up front (at most 16 agents).
    pub validate_submodular: bool,
    pub seed: u64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self {
            m: None,
            marginal: MarginalMode::Auto,
            schedule: SampleSchedule::Fixed(DEFAULT_SAMPLES),
            noisy_deltas: false,
            validate_submodular: false,
            seed: 0,
        }
    }
}

/// The reduced instance: agent `i` is split into small agents `i_1, i_2, ...`
/// where raising `q_i` by `δ_ij` costs `B / m` on the ironed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallAgentTable<T> {
    pub m: usize,
    pub deltas: Vec<Vec<T>>,
    /// Exact prefix quantiles `Σ_{k<=j} δ_ik` before any perturbation.
    pub cumulative: Vec<Vec<T>>,
    pub noisy: bool,
}

/// Splits every agent into at most `m` increments of spend `B / m`,
/// stopping once its quantile reaches 1. With `noise_seed`, each increment
/// is shrunk by a uniform factor in `[1 - 1/n³, 1]`.
pub fn discretize<T: Real>(
    priors: &[AgentPrior<T>],
    budget: T,
    m: usize,
    noise_seed: Option<u64>,
) -> Result<SmallAgentTable<T>> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "need at least one small agent".into(),
        ));
    }
    if budget < T::zero() || !budget.is_finite() {
        return Err(Error::NonPositiveBudget(budget.to_f64_lossy()));
    }
    let n = priors.len();
    let step = budget / T::of_usize(m);
    let mut deltas = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    for (i, p) in priors.iter().enumerate() {
        let mut cum = Vec::new();
        let mut ds = Vec::new();
        let mut prev = T::zero();
        for j in 1..=m {
            let qj = p
                .ironed()
                .quantile_for_spend(step * T::of_usize(j))
                .max(prev);
            ds.push(qj - prev);
            cum.push(qj);
            prev = qj;
            if qj >= T::one() {
                break;
            }
        }
        if let Some(seed) = noise_seed {
            let shrink = T::one() / T::of_usize(n).powi(3);
            let mut r = rng::stream(seed, i as u64);
            for d in ds.iter_mut() {
                *d = *d * (T::one() - shrink * T::of(r.gen::<f64>()));
            }
        }
        deltas.push(ds);
        cumulative.push(cum);
    }
    Ok(SmallAgentTable {
        m,
        deltas,
        cumulative,
        noisy: noise_seed.is_some(),
    })
}

/// Greedy with a cardinality constraint of `m` on the reduced instance.
///
/// The extension is linear in each coordinate, so small agent `i_j` adds
/// `δ_ij ∂V/∂q_i`; each agent's best remaining small agent is therefore the
/// one with the largest increment (lowest `j` on ties). Ties between agents
/// go to the lowest index; the loop stops early once no marginal is positive.
pub fn greedy_submodular<T: Real>(
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
    budget: T,
    params: &GreedyParams,
) -> Result<ExAnteSolution<T>> {
    check_agents(priors, value)?;
    let n = priors.len();
    let m = params.m.unwrap_or(n * n);
    if m < n {
        return Err(Error::InvalidParameter(format!(
            "need at least one small agent per agent (m = {m}, n = {n})"
        )));
    }
    if params.validate_submodular && !value.check_submodular()? {
        return Err(Error::NotSubmodular);
    }
    let sampled = match params.marginal {
        MarginalMode::Exact => false,
        MarginalMode::Sampled => !value.has_exact_extension(),
        MarginalMode::Auto => !value.has_exact_extension(),
    };
    if !sampled && !value.has_exact_extension() && n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let samples = if sampled {
        params.schedule.samples(n)?
    } else {
        0
    };
    let noise_seed = params
        .noisy_deltas
        .then(|| rng::derive_seed(params.seed, u64::MAX));
    let table = discretize(priors, budget, m, noise_seed)?;

    let mut taken: Vec<Vec<bool>> = table.deltas.iter().map(|d| vec![false; d.len()]).collect();
    let mut q = vec![T::zero(); n];
    let mut steps = 0;
    for step in 0..m {
        let candidates: Vec<Option<(usize, T)>> = (0..n)
            .map(|i| best_increment(&table.deltas[i], &taken[i]))
            .collect();
        let gains: Vec<Result<Option<T>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let Some((_, delta)) = candidates[i] else {
                    return Ok(None);
                };
                let seed = rng::derive_seed(params.seed, (step * n + i) as u64);
                let d = partial(value, &q, i, sampled, samples, seed)?;
                Ok(Some(d * delta))
            })
            .collect();
        let mut best: Option<(usize, T)> = None;
        for (i, g) in gains.into_iter().enumerate() {
            if let Some(g) = g? {
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((i, g));
                }
            }
        }
        match best {
            Some((i, g)) if g > T::zero() => {
                let (j, delta) = candidates[i].expect("candidate exists for best agent");
                taken[i][j] = true;
                q[i] = (q[i] + delta).min(T::one());
                steps += 1;
            }
            _ => break,
        }
    }

    let objective = extension_value(value, &q, sampled, samples, params.seed)?;
    Ok(ExAnteSolution::assemble(
        priors,
        q,
        objective,
        SolverMeta::Greedy {
            m,
            steps,
            noisy_deltas: table.noisy,
            sampled_marginals: sampled,
        },
    ))
}

fn best_increment<T: Real>(deltas: &[T], taken: &[bool]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (j, (&d, &t)) in deltas.iter().zip(taken).enumerate() {
        if !t && d > T::zero() && best.is_none_or(|(_, b)| d > b) {
            best = Some((j, d));
        }
    }
    best
}

fn partial<T: Real>(
    value: &ValueFunction<T>,
    q: &[T],
    i: usize,
    sampled: bool,
    samples: usize,
    seed: u64,
) -> Result<T> {
    if sampled || value.has_exact_extension() {
        Ok(value.partial(q, i, samples, seed)?.value)
    } else {
        value.partial_exhaustive(q, i)
    }
}

fn extension_value<T: Real>(
    value: &ValueFunction<T>,
    q: &[T],
    sampled: bool,
    samples: usize,
    seed: u64,
) -> Result<T> {
    if sampled || value.has_exact_extension() {
        Ok(value
            .multilinear(q, samples, rng::derive_seed(seed, u64::MAX - 1))?
            .value)
    } else {
        value.multilinear_exhaustive(q)
    }
}
