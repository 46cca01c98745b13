use super::{monte_carlo_value, sequential_bound, OrderEval};
use crate::dist::AgentPrior;
use crate::error::{Error, Result};
use crate::exante::{greedy_submodular, solve_additive, solve_symmetric, GreedyParams, SolverKind};
use crate::mech::{
    build_oblivious, choose_epsilon, derandomize_additive, market_size, oblivious_bound,
    OrderPolicy, PriceMenu,
};
use crate::real::Real;
use crate::value::ValueFunction;

const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Debug, Clone)]
pub struct Instance<T> {
    pub name: String,
    pub priors: Vec<AgentPrior<T>>,
    pub value: ValueFunction<T>,
    pub budget: T,
}

impl<T: Real> Instance<T> {
    fn identical_priors(&self) -> bool {
        self.priors.iter().all(|p| p.same_prior(&self.priors[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Full-budget Lagrangian prices, bang-per-buck order.
    AdditiveSequential,
    /// Sequential menu with every lottery replaced by a single price; the
    /// pricing choice uses `samples` cost draws. No guarantee is reported.
    AdditiveDerandomized { samples: usize },
    /// Uniform full-budget price, evaluated under adversarial-proxy orders.
    SymmetricOblivious { permutations: usize },
    /// Ex ante solution at `(1 - ε) B` under adversarial-proxy orders; `ε`
    /// is chosen from the full-budget market size when unset.
    SubmodularOblivious {
        eps: Option<f64>,
        permutations: usize,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AdditiveSequential => "additive-sequential",
            Self::AdditiveDerandomized { .. } => "additive-derandomized",
            Self::SymmetricOblivious { .. } => "symmetric-oblivious",
            Self::SubmodularOblivious { .. } => "submodular-oblivious",
        }
    }
}

/// Upper bound on the optimal mechanism used as the ratio denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark<T> {
    pub value: T,
    /// False when the bound is the greedy value inflated by `(1 - 1/e)^-2`.
    pub exact: bool,
}

pub fn ex_ante_bound<T: Real>(inst: &Instance<T>, params: &GreedyParams) -> Result<Benchmark<T>> {
    if inst.budget <= T::zero() {
        return Ok(Benchmark {
            value: T::zero(),
            exact: true,
        });
    }
    if let Some(v) = inst.value.additive_values() {
        let sol = solve_additive(&inst.priors, v, inst.budget)?;
        return Ok(Benchmark {
            value: sol.objective,
            exact: true,
        });
    }
    if inst.value.is_symmetric() && inst.identical_priors() {
        let sol = solve_symmetric(&inst.priors[0], inst.priors.len(), &inst.value, inst.budget)?;
        return Ok(Benchmark {
            value: sol.objective,
            exact: true,
        });
    }
    let sol = greedy_submodular(&inst.priors, &inst.value, inst.budget, params)?;
    Ok(Benchmark {
        value: sol.objective / T::of(ONE_MINUS_INV_E * ONE_MINUS_INV_E),
        exact: false,
    })
}

pub const REPORT_HEADER: [&str; 14] = [
    "instance",
    "variant",
    "k",
    "epsilon",
    "ex_ante_bound",
    "bound_exact",
    "mechanism_mean",
    "mechanism_stderr",
    "ratio",
    "theoretical_bound",
    "max_spend",
    "market_warning",
    "trials",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub instance: String,
    pub variant: String,
    pub k: f64,
    pub epsilon: Option<f64>,
    pub ex_ante_upper_bound: f64,
    pub bound_exact: bool,
    pub mechanism_mean: f64,
    pub mechanism_stderr: Option<f64>,
    pub ratio: f64,
    /// `None` when the market is too small for the guarantee to apply.
    pub theoretical_bound: Option<f64>,
    pub max_spend: f64,
    pub market_warning: bool,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn relative_stderr(&self) -> f64 {
        match self.mechanism_stderr {
            Some(s) if self.ex_ante_upper_bound > 0.0 => s / self.ex_ante_upper_bound,
            _ => 0.0,
        }
    }

    /// `ratio >= bound - 3 relative stderr`, when a bound applies.
    pub fn meets_bound(&self) -> Option<bool> {
        self.theoretical_bound
            .map(|b| self.ratio >= b - 3.0 * self.relative_stderr())
    }

    /// Fields in [`REPORT_HEADER`] order; unavailable values are empty.
    pub fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        vec![
            self.instance.clone(),
            self.variant.clone(),
            fmt_sig(self.k),
            opt(self.epsilon),
            fmt_sig(self.ex_ante_upper_bound),
            self.bound_exact.to_string(),
            fmt_sig(self.mechanism_mean),
            opt(self.mechanism_stderr),
            fmt_sig(self.ratio),
            opt(self.theoretical_bound),
            fmt_sig(self.max_spend),
            self.market_warning.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// `x` with 12 significant digits, trailing zeros trimmed, in the style of
/// C's `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exp) {
        trim(format!("{:.*}", (11 - exp).max(0) as usize, x))
    } else {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{}", trim(mant.to_string()), e)
    }
}

pub fn approximation_report<T: Real>(
    inst: &Instance<T>,
    variant: Variant,
    params: &GreedyParams,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if inst.priors.is_empty() || inst.priors.len() != inst.value.n() {
        return Err(Error::Dimension(
            "instance priors and value disagree".into(),
        ));
    }
    let budget = inst.budget;
    let (menu, policy, bench, eps): (PriceMenu<T>, OrderEval, Benchmark<T>, Option<f64>) =
        match variant {
            Variant::AdditiveSequential => {
                let v = inst.value.additive_values().ok_or_else(|| {
                    Error::InvalidParameter("additive-sequential needs an additive value".into())
                })?;
                let sol = solve_additive(&inst.priors, v, budget)?;
                let menu = PriceMenu::from_solution(&sol, OrderPolicy::BangPerBuck)?;
                let bench = Benchmark {
                    value: sol.objective,
                    exact: true,
                };
                (menu, OrderEval::BangPerBuck, bench, None)
            }
            Variant::AdditiveDerandomized { samples } => {
                let v = inst.value.additive_values().ok_or_else(|| {
                    Error::InvalidParameter("additive-derandomized needs an additive value".into())
                })?;
                let sol = solve_additive(&inst.priors, v, budget)?;
                let randomized = PriceMenu::from_solution(&sol, OrderPolicy::BangPerBuck)?;
                let menu = derandomize_additive(
                    &randomized,
                    &inst.priors,
                    &inst.value,
                    budget,
                    samples,
                    seed,
                )?;
                let bench = Benchmark {
                    value: sol.objective,
                    exact: true,
                };
                (menu, OrderEval::BangPerBuck, bench, None)
            }
            Variant::SymmetricOblivious { permutations } => {
                if !inst.value.is_symmetric() || !inst.identical_priors() {
                    return Err(Error::InvalidParameter(
                        "symmetric-oblivious needs a symmetric value and identical priors".into(),
                    ));
                }
                let sol = solve_symmetric(&inst.priors[0], inst.priors.len(), &inst.value, budget)?;
                let menu = PriceMenu::from_solution(&sol, OrderPolicy::External)?;
                let bench = Benchmark {
                    value: sol.objective,
                    exact: true,
                };
                let policy = OrderEval::WorstOfSampled {
                    count: permutations,
                };
                (menu, policy, bench, None)
            }
            Variant::SubmodularOblivious { eps, permutations } => {
                let bench = ex_ante_bound(inst, params)?;
                let eps = match eps {
                    Some(e) => e,
                    None => {
                        let full = crate::exante::solve_ex_ante(
                            &inst.priors,
                            &inst.value,
                            budget,
                            SolverKind::Auto,
                            params,
                        )?;
                        choose_epsilon(market_size(&full.menu, budget).to_f64_lossy())?.0
                    }
                };
                let menu = build_oblivious(
                    &inst.priors,
                    &inst.value,
                    budget,
                    eps,
                    SolverKind::Auto,
                    params,
                )?;
                let policy = OrderEval::WorstOfSampled {
                    count: permutations,
                };
                (menu, policy, bench, Some(eps))
            }
        };

    let k = market_size(&menu.offers, budget).to_f64_lossy();
    let est = monte_carlo_value(
        &menu,
        &inst.priors,
        &inst.value,
        budget,
        &policy,
        trials,
        seed,
    )?;
    let bench_v = bench.value.to_f64_lossy();
    let mean = est.mean.to_f64_lossy();
    let theoretical_bound = match variant {
        Variant::AdditiveSequential | Variant::SymmetricOblivious { .. } => {
            Some(sequential_bound(k))
        }
        Variant::AdditiveDerandomized { .. } => None,
        Variant::SubmodularOblivious { .. } => {
            let e = eps.expect("epsilon set");
            (k > 2.0 / e).then(|| ONE_MINUS_INV_E * oblivious_bound(k, e))
        }
    };
    Ok(ExperimentReport {
        instance: inst.name.clone(),
        variant: variant.name().to_string(),
        k,
        epsilon: eps,
        ex_ante_upper_bound: bench_v,
        bound_exact: bench.exact,
        mechanism_mean: mean,
        mechanism_stderr: est.stderr.map(|s| s.to_f64_lossy()),
        ratio: if bench_v > 0.0 { mean / bench_v } else { 0.0 },
        theoretical_bound,
        max_spend: est.max_spend.to_f64_lossy(),
        market_warning: menu.market_warning,
        trials,
        seed,
    })
}
