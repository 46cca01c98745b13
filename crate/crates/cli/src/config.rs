//! Experiment configuration, read from TOML with unknown keys rejected.
//!
//! Relative file paths (empirical samples, coverage tables) resolve against
//! the directory holding the config file and must exist at load time.

use std::fs;
use std::path::{Path, PathBuf};

use budget_pricing::dist::{AgentPrior, CostDistribution, DEFAULT_GRID_SIZE};
use budget_pricing::exante::{GreedyParams, MarginalMode, SampleSchedule, SolverKind};
use budget_pricing::sim::{Instance, Variant, DEFAULT_PERMUTATIONS, DEFAULT_TRIALS};
use budget_pricing::value::{Coverage, ValueFunction, DEFAULT_SAMPLES};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by `solve`, `simulate` and `report`.
    pub instance: Option<InstanceConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub harness: HarnessConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub gap: GapConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub budget: f64,
    /// With a single agent spec, build this many agents sharing its prior.
    pub replicate: Option<usize>,
    /// Quantile grid size for each cost curve.
    pub grid: Option<usize>,
    pub agents: Vec<DistSpec>,
    pub value: ValueSpec,
}

fn default_name() -> String {
    "instance".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    TruncatedExponential {
        rate: f64,
        lo: f64,
        hi: f64,
    },
    /// CDF breakpoints `[cost, F(cost)]`, linear in between.
    Piecewise {
        points: Vec<(f64, f64)>,
    },
    /// Exactly one of inline `samples` or a whitespace-separated `file`.
    Empirical {
        samples: Option<Vec<f64>>,
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ValueSpec {
    Additive {
        values: Vec<f64>,
    },
    /// `g[s]` is the value of any `s` agents; `g[0] = 0`.
    Symmetric {
        g: Vec<f64>,
    },
    /// Coverage table in the `element:weight` line format.
    Coverage {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Additive,
    Symmetric,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalChoice {
    #[default]
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub kind: SolverChoice,
    /// Greedy increments of spend `B / m`; `n²` when unset.
    pub m: Option<usize>,
    #[serde(default)]
    pub marginal: MarginalChoice,
    /// Fixed sample count for sampled marginals.
    pub samples: Option<usize>,
    /// Accuracy-driven sample count; overrides `samples`.
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub noisy_deltas: bool,
    #[serde(default)]
    pub validate_submodular: bool,
    /// Oblivious budget shrink; chosen from the market size when unset.
    pub epsilon: Option<f64>,
    #[serde(default = "default_samples")]
    pub derandomize_samples: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverChoice::Auto,
            m: None,
            marginal: MarginalChoice::Auto,
            samples: None,
            accuracy: None,
            noisy_deltas: false,
            validate_submodular: false,
            epsilon: None,
            derandomize_samples: DEFAULT_SAMPLES,
        }
    }
}

/// Each mechanism fixes its own arrival order: `sequential` and
/// `derandomized` serve by bang-per-buck, the oblivious variants are scored
/// on the worst of `permutations` random orders and two heuristic ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismChoice {
    Sequential,
    Derandomized,
    SymmetricOblivious,
    Oblivious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    /// Picked from the value kind when empty.
    #[serde(default)]
    pub variants: Vec<MechanismChoice>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
}

fn default_permutations() -> usize {
    DEFAULT_PERMUTATIONS
}

impl Default for MechanismConfig {
    fn default() -> Self {
        Self {
            variants: Vec::new(),
            permutations: DEFAULT_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            out: default_out(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_bounds_k")]
    pub k: Vec<f64>,
}

fn default_bounds_k() -> Vec<f64> {
    vec![5.0, 10.0, 100.0, 1000.0, 10_000.0]
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            k: default_bounds_k(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    #[serde(default = "default_gap_k")]
    pub k: Vec<usize>,
    /// Each row uses `n = k * multiple`.
    #[serde(default = "default_multiples")]
    pub multiples: Vec<usize>,
    /// Simulated trials per row; the harness trial count when unset.
    pub trials: Option<usize>,
}

fn default_gap_k() -> Vec<usize> {
    vec![1, 4, 16, 100]
}

fn default_multiples() -> Vec<usize> {
    vec![1, 2, 10, 100]
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            k: default_gap_k(),
            multiples: default_multiples(),
            trials: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    /// Parses and validates, resolving relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("reading {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(inst) = &mut self.instance {
            for a in &mut inst.agents {
                if let DistSpec::Empirical { file: Some(f), .. } = a {
                    fix(f);
                }
            }
            if let ValueSpec::Coverage { file } = &mut inst.value {
                fix(file);
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(inst) = &self.instance {
            inst.validate()?;
        }
        if self.harness.trials == 0 {
            return Err(invalid("harness.trials must be at least 1"));
        }
        if self.mechanism.permutations == 0 {
            return Err(invalid("mechanism.permutations must be at least 1"));
        }
        if let Some(e) = self.solver.epsilon {
            if !(e > 0.0 && e < 0.5) {
                return Err(invalid(format!("solver.epsilon {e} outside (0, 1/2)")));
            }
        }
        if let Some(a) = self.solver.accuracy {
            if !(a > 0.0 && a <= 1.0) {
                return Err(invalid(format!("solver.accuracy {a} outside (0, 1]")));
            }
        }
        if self.solver.samples == Some(0) || self.solver.derandomize_samples == 0 {
            return Err(invalid("sample counts must be at least 1"));
        }
        if self
            .gap
            .k
            .iter()
            .chain(&self.gap.multiples)
            .any(|&x| x == 0)
        {
            return Err(invalid("gap.k and gap.multiples must be positive"));
        }
        Ok(())
    }

    pub fn greedy_params(&self, seed: u64) -> GreedyParams {
        let s = &self.solver;
        GreedyParams {
            m: s.m,
            marginal: match s.marginal {
                MarginalChoice::Auto => MarginalMode::Auto,
                MarginalChoice::Exact => MarginalMode::Exact,
                MarginalChoice::Sampled => MarginalMode::Sampled,
            },
            schedule: match s.accuracy {
                Some(accuracy) => SampleSchedule::Accuracy { accuracy },
                None => SampleSchedule::Fixed(s.samples.unwrap_or(DEFAULT_SAMPLES)),
            },
            noisy_deltas: s.noisy_deltas,
            validate_submodular: s.validate_submodular,
            seed,
        }
    }

    pub fn solver_kind(&self) -> SolverKind {
        match self.solver.kind {
            SolverChoice::Auto => SolverKind::Auto,
            SolverChoice::Additive => SolverKind::Additive,
            SolverChoice::Symmetric => SolverKind::Symmetric,
            SolverChoice::Greedy => SolverKind::Greedy,
        }
    }

    pub fn variants(&self, value: &ValueFunction<f64>) -> Vec<Variant> {
        let perms = self.mechanism.permutations;
        let mut choices = self.mechanism.variants.clone();
        if choices.is_empty() {
            choices.push(if value.is_additive() {
                MechanismChoice::Sequential
            } else if value.is_symmetric() {
                MechanismChoice::SymmetricOblivious
            } else {
                MechanismChoice::Oblivious
            });
        }
        choices
            .into_iter()
            .map(|c| match c {
                MechanismChoice::Sequential => Variant::AdditiveSequential,
                MechanismChoice::Derandomized => Variant::AdditiveDerandomized {
                    samples: self.solver.derandomize_samples,
                },
                MechanismChoice::SymmetricOblivious => Variant::SymmetricOblivious {
                    permutations: perms,
                },
                MechanismChoice::Oblivious => Variant::SubmodularOblivious {
                    eps: self.solver.epsilon,
                    permutations: perms,
                },
            })
            .collect()
    }
}

impl InstanceConfig {
    pub fn n(&self) -> usize {
        self.replicate.unwrap_or(self.agents.len())
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(invalid(format!(
                "instance.budget must be positive, got {}",
                self.budget
            )));
        }
        if self.agents.is_empty() {
            return Err(invalid("instance.agents is empty"));
        }
        match self.replicate {
            Some(0) => return Err(invalid("instance.replicate must be at least 1")),
            Some(_) if self.agents.len() != 1 => {
                return Err(invalid("instance.replicate needs exactly one agent spec"))
            }
            _ => {}
        }
        if self.grid.is_some_and(|g| g < 2) {
            return Err(invalid("instance.grid must be at least 2"));
        }
        for a in &self.agents {
            if let DistSpec::Empirical { samples, file } = a {
                match (samples, file) {
                    (Some(_), None) => {}
                    (None, Some(f)) => exists(f)?,
                    _ => {
                        return Err(invalid(
                            "empirical agent needs exactly one of samples or file",
                        ))
                    }
                }
            }
        }
        let n = self.n();
        match &self.value {
            ValueSpec::Additive { values } if values.len() != n => Err(invalid(format!(
                "additive value has {} entries for {n} agents",
                values.len()
            ))),
            ValueSpec::Symmetric { g } if g.len() != n + 1 => Err(invalid(format!(
                "symmetric value needs {} entries, got {}",
                n + 1,
                g.len()
            ))),
            ValueSpec::Coverage { file } => exists(file),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Instance<f64>, CliError> {
        let grid = self.grid.unwrap_or(DEFAULT_GRID_SIZE);
        let prior = |spec: &DistSpec| -> Result<AgentPrior<f64>, CliError> {
            let d = build_dist(spec)?;
            AgentPrior::new(d, grid).map_err(|e| invalid(e.to_string()))
        };
        let priors = match self.replicate {
            Some(n) => prior(&self.agents[0])?.replicate(n),
            None => self.agents.iter().map(prior).collect::<Result<_, _>>()?,
        };
        let value = match &self.value {
            ValueSpec::Additive { values } => ValueFunction::additive(values.clone()),
            ValueSpec::Symmetric { g } => ValueFunction::symmetric(g.clone()),
            ValueSpec::Coverage { file } => {
                let text = read(file)?;
                let c = Coverage::parse(&text)
                    .map_err(|e| invalid(format!("{}: {e}", file.display())))?;
                ValueFunction::coverage(c)
            }
        }
        .map_err(|e| invalid(e.to_string()))?;
        if value.n() != priors.len() {
            return Err(invalid(format!(
                "value covers {} agents, instance has {}",
                value.n(),
                priors.len()
            )));
        }
        Ok(Instance {
            name: self.name.clone(),
            priors,
            value,
            budget: self.budget,
        })
    }
}

fn exists(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(invalid(format!(
            "referenced file {} does not exist",
            p.display()
        )))
    }
}

fn read(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| invalid(format!("reading {}: {e}", p.display())))
}

fn build_dist(spec: &DistSpec) -> Result<CostDistribution<f64>, CliError> {
    let d = match spec {
        DistSpec::Uniform { lo, hi } => CostDistribution::uniform(*lo, *hi),
        DistSpec::TruncatedExponential { rate, lo, hi } => {
            CostDistribution::truncated_exponential(*rate, *lo, *hi)
        }
        DistSpec::Piecewise { points } => CostDistribution::piecewise_cdf(points.clone()),
        DistSpec::Empirical {
            samples: Some(s), ..
        } => CostDistribution::empirical(s),
        DistSpec::Empirical { file: Some(f), .. } => {
            let text = read(f)?;
            let xs = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| invalid(format!("{}: {t:?}: {e}", f.display())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            CostDistribution::empirical(&xs)
        }
        DistSpec::Empirical { .. } => return Err(invalid("empirical agent needs samples or file")),
    };
    d.map_err(|e| invalid(e.to_string()))
}
