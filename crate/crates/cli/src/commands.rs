use std::fs;
use std::path::{Path, PathBuf};

use budget_pricing::exante::solve_ex_ante;
use budget_pricing::mech::market_size;
use budget_pricing::sim::{
    approximation_report, bounds_table, correlation_gap_experiment, fmt_sig, Instance,
    BOUNDS_HEADER, GAP_HEADER, REPORT_HEADER,
};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SOLUTION_HEADER: [&str; 6] = [
    "agent",
    "quantile",
    "price_lo",
    "price_hi",
    "prob_lo",
    "expected_spend",
];

/// Resolved run settings: config values with command-line overrides.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(
        config: ExperimentConfig,
        seed: Option<u64>,
        trials: Option<usize>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        if trials == Some(0) {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        Ok(Self {
            seed: seed.unwrap_or(config.harness.seed),
            trials: trials.unwrap_or(config.harness.trials),
            out: out.unwrap_or_else(|| config.harness.out.clone()),
            config,
        })
    }

    fn instance(&self) -> Result<Instance<f64>, CliError> {
        self.config
            .instance
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [instance] section".into()))?
            .build()
    }

    fn write_csv<R: AsRef<[String]>>(
        &self,
        file: &str,
        header: &[&str],
        rows: &[R],
    ) -> Result<PathBuf, CliError> {
        let err = |e: &dyn std::fmt::Display| {
            CliError::Output(format!("{}: {e}", self.out.join(file).display()))
        };
        fs::create_dir_all(&self.out).map_err(|e| err(&e))?;
        let path = self.out.join(file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| err(&e))?;
        w.write_record(header).map_err(|e| err(&e))?;
        for r in rows {
            w.write_record(r.as_ref()).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))?;
        Ok(path)
    }
}

/// Solves the ex ante relaxation and writes `solution.csv`.
pub fn solve(ctx: &RunContext) -> Result<String, CliError> {
    let inst = ctx.instance()?;
    let params = ctx.config.greedy_params(ctx.seed);
    let sol = solve_ex_ante(
        &inst.priors,
        &inst.value,
        inst.budget,
        ctx.config.solver_kind(),
        &params,
    )?;
    let rows: Vec<Vec<String>> = sol
        .menu
        .iter()
        .zip(&inst.priors)
        .enumerate()
        .map(|(i, (o, p))| {
            vec![
                i.to_string(),
                fmt_sig(o.quantile),
                fmt_sig(o.price_lo),
                fmt_sig(o.price_hi),
                fmt_sig(o.prob_lo),
                fmt_sig(p.ironed().value_at(o.quantile)),
            ]
        })
        .collect();
    let path = ctx.write_csv("solution.csv", &SOLUTION_HEADER, &rows)?;
    Ok(format!(
        "objective {} expected_spend {} k {} -> {}",
        fmt_sig(sol.objective),
        fmt_sig(sol.expected_spend),
        fmt_sig(market_size(&sol.menu, inst.budget)),
        path.display()
    ))
}

/// One Monte Carlo report row per configured mechanism, in `report.csv`.
pub fn simulate(ctx: &RunContext) -> Result<String, CliError> {
    let inst = ctx.instance()?;
    let params = ctx.config.greedy_params(ctx.seed);
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for variant in ctx.config.variants(&inst.value) {
        let rep = approximation_report(&inst, variant, &params, ctx.trials, ctx.seed)?;
        lines.push(format!(
            "{} ratio {} bound {}",
            rep.variant,
            fmt_sig(rep.ratio),
            rep.theoretical_bound
                .map(fmt_sig)
                .unwrap_or_else(|| "-".into())
        ));
        rows.push(rep.record());
    }
    let path = ctx.write_csv("report.csv", &REPORT_HEADER, &rows)?;
    lines.push(format!("-> {}", path.display()));
    Ok(lines.join("\n"))
}

pub fn bounds(ctx: &RunContext) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = bounds_table(&ctx.config.bounds.k)
        .iter()
        .map(|r| r.record())
        .collect();
    let path = ctx.write_csv("bounds.csv", &BOUNDS_HEADER, &rows)?;
    Ok(format!("{} rows -> {}", rows.len(), path.display()))
}

pub fn gap(ctx: &RunContext) -> Result<String, CliError> {
    let g = &ctx.config.gap;
    let trials = g.trials.unwrap_or(ctx.trials);
    let mut rows = Vec::new();
    for (row, &k) in g.k.iter().enumerate() {
        for (col, &mult) in g.multiples.iter().enumerate() {
            let seed =
                budget_pricing::rng::derive_seed(ctx.seed, (row * g.multiples.len() + col) as u64);
            rows.push(correlation_gap_experiment(k, k * mult, trials, seed)?.record());
        }
    }
    let path = ctx.write_csv("gap.csv", &GAP_HEADER, &rows)?;
    Ok(format!("{} rows -> {}", rows.len(), path.display()))
}

/// Every artifact: solution, simulation report, bounds and gap tables.
pub fn report(ctx: &RunContext) -> Result<String, CliError> {
    let parts = [solve(ctx)?, simulate(ctx)?, bounds(ctx)?, gap(ctx)?];
    Ok(parts.join("\n"))
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}
