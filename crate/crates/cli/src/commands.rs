use std::path::Path;

use rankrace::convergence::{head_count, partition_of, value_convergence_experiment_with};
use rankrace::nplayer::completion_variance;
use rankrace::nprincipal::OracleMethod;
use rankrace::{
    brute_force_oracle, eps_optimality_experiment, expected_completion, minimal_budget, optimal_reward,
    optimal_reward_n, principal_convergence_experiment, simulate, size_effect, solve_equilibrium, solve_recursion,
    Discretization, MFCost, MFEquilibrium, MFRewardScheme, NPlayerSpec,
    NPrincipalProblem, PrincipalProblem, RateFit, SizeMode,
};
use serde_json::json;

use crate::config::Resolver;
use crate::error::CliError;
use crate::output::{json_f64, Format, Report, Table};
use crate::row;
use crate::spec::{
    nplayer_costs, parse_cost, parse_list, parse_ns, parse_scheme, power_reward, staircase_reward,
    RewardKind,
};
use crate::{Command, PopulationArgs, RewardArgs};

const DEFAULT_GRID: usize = 1000;
const DEFAULT_PATHS: usize = 100_000;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn mf_reward(res: &mut Resolver, a: RewardArgs) -> Result<MFRewardScheme<f64>, CliError> {
    let kind = res.spec("reward", a.reward, Some("power"))?;
    match RewardKind::parse(&kind)? {
        RewardKind::Power => {
            let b = res.or("B", a.budget, 1.0)?;
            let alpha = res.or("alpha", a.alpha, 1.0)?;
            let q = res.or("q", a.q, 1.0)?;
            power_reward(b, alpha, q)
        }
        RewardKind::Cutoff => {
            let b = res.or("B", a.budget, 1.0)?;
            let alpha = res.or("alpha", a.alpha, 0.5)?;
            power_reward(b, alpha, 0.0)
        }
        RewardKind::Staircase => {
            let breaks = parse_list(&res.spec("breaks", a.breaks, None)?)?;
            let levels = parse_list(&res.spec("levels", a.levels, None)?)?;
            staircase_reward(&breaks, &levels)
        }
    }
}

fn mf_cost(res: &mut Resolver, flag: Option<String>) -> Result<MFCost<f64>, CliError> {
    parse_cost(&res.spec("cost", flag, Some("1"))?)
}

fn grid(res: &mut Resolver, flag: Option<usize>) -> Result<usize, CliError> {
    let g = res.or("grid", flag, DEFAULT_GRID)?;
    if g == 0 {
        return Err(invalid("grid must be positive"));
    }
    Ok(g)
}

fn ladder(res: &mut Resolver, flag: Option<String>, default: &str) -> Result<Vec<usize>, CliError> {
    let ns = parse_ns(&res.spec("Ns", flag, Some(default))?)?;
    if ns[0] < 2 {
        return Err(invalid("population sizes must be at least 2"));
    }
    Ok(ns)
}

fn trajectory_table(eq: &MFEquilibrium<f64>) -> Table {
    let mut t = Table::new("trajectory", &["t", "rho"]);
    for (time, state) in eq.trajectory.times().iter().zip(eq.trajectory.states()) {
        t.push(row![*time, *state]);
    }
    t
}

fn fit_summary(report: &mut Report, prefix: &'static str, fit: &RateFit<f64>) {
    let key_slope: &'static str = match prefix {
        "value" => "value_slope",
        "effort" => "effort_slope",
        "time" => "time_slope",
        "reward" => "reward_slope",
        _ => "slope",
    };
    let key_r2: &'static str = match prefix {
        "value" => "value_r2",
        "effort" => "effort_r2",
        "time" => "time_r2",
        "reward" => "reward_r2",
        _ => "r2",
    };
    report.summary_f64(key_slope, fit.slope.unwrap_or(f64::NAN));
    report.summary_f64(key_r2, fit.r_squared.unwrap_or(f64::NAN));
}

pub fn dispatch(cmd: Command, res: &mut Resolver) -> Result<Report, CliError> {
    match cmd {
        Command::MfEquilibrium { reward, cost, grid: g, .. } => {
            let scheme = mf_reward(res, reward)?;
            let alpha = res.echo().get("alpha").and_then(|v| v.as_f64());
            let cost = mf_cost(res, cost.cost)?;
            let g = grid(res, g)?;
            mf_equilibrium(&scheme, &cost, g, alpha)
        }
        Command::MfPrincipal { alpha, budget, cost, grid: g, .. } => {
            let alpha = res.or("alpha", alpha, 0.5)?;
            let budget = res.or("B", budget, 1.0)?;
            let cost = mf_cost(res, cost.cost)?;
            let g = grid(res, g)?;
            mf_principal(alpha, budget, &cost, g)
        }
        Command::MinimalBudget { time, alpha, cost, .. } => {
            let time = res.req("T", time)?;
            let alpha = res.or("alpha", alpha, 0.5)?;
            let cost = mf_cost(res, cost.cost)?;
            let b = minimal_budget(time, alpha, &cost)?;
            let mut report = Report::new("minimal-budget");
            report.summary_f64("B", b);
            let mut t = Table::new("main", &["T", "alpha", "B"]);
            t.push(row![time, alpha, b]);
            report.tables.push(t);
            Ok(report)
        }
        Command::NplayerSolve { population, reward, cost, n0, .. } => {
            let spec = nplayer_spec(res, population, reward, cost.cost)?;
            let n0 = res.opt("n0", n0)?;
            nplayer_solve(&spec, n0)
        }
        Command::NplayerSimulate { population, reward, cost, n0, paths, seed, samples, .. } => {
            let spec = nplayer_spec(res, population, reward, cost.cost)?;
            let n0 = res.req("n0", n0)?;
            let paths = res.or("paths", paths, DEFAULT_PATHS)?;
            let env_seed = std::env::var("RACE_SEED")
                .ok()
                .map(|s| s.trim().parse::<u64>().map_err(|_| invalid(format!("RACE_SEED `{}` is not an integer", s))))
                .transpose()?;
            let seed = match res.opt("seed", seed)? {
                Some(s) => s,
                None => res.or("seed", env_seed, 0)?,
            };
            let samples = res.or("samples", samples.then_some(true), false)?;
            nplayer_simulate(&spec, n0, paths, seed, samples)
        }
        Command::NplayerPrincipal { players, n0, budget, cost, costs, oracle, .. } => {
            let n = res.req("N", players)?;
            let n0 = res.req("n0", n0)?;
            let budget = res.or("B", budget, 1.0)?;
            let cost = mf_cost(res, cost.cost)?;
            let list = res.opt_spec("costs", costs)?;
            let c = nplayer_costs(list.as_deref(), &cost, n)?;
            let oracle = res.or("oracle", oracle.then_some(true), false)?;
            nplayer_principal(&NPrincipalProblem::new(n, n0, budget, c)?, oracle)
        }
        Command::OracleCheck { max_players, budget, .. } => {
            let max_n = res.or("max_N", max_players, 6)?;
            let budget = res.or("B", budget, 1.0)?;
            if !(2..=12).contains(&max_n) {
                return Err(invalid("max-N must lie in 2..=12"));
            }
            oracle_check(max_n, budget)
        }
        Command::Discretize { reward, players, scheme, .. } => {
            let scheme_r = mf_reward(res, reward)?;
            let n = res.req("N", players)?;
            let method = parse_scheme(&res.spec("scheme", scheme, Some("sampling"))?)?;
            discretize(&scheme_r, n, method)
        }
        Command::ConvergeValue { reward, cost, ns, scheme, .. } => {
            let r = mf_reward(res, reward)?;
            let cost = mf_cost(res, cost.cost)?;
            let ns = ladder(res, ns, "16:4096")?;
            let method = parse_scheme(&res.spec("scheme", scheme, Some("sampling"))?)?;
            converge_value(&r, &cost, &ns, method)
        }
        Command::ConvergePrincipal { alpha, budget, cost, ns, .. } => {
            let alpha = res.or("alpha", alpha, 0.5)?;
            let budget = res.or("B", budget, 1.0)?;
            let cost = mf_cost(res, cost.cost)?;
            let ns = ladder(res, ns, "16:4096")?;
            converge_principal(alpha, budget, &cost, &ns)
        }
        Command::EpsOptimal { alpha, budget, cost, ns, .. } => {
            let alpha = res.or("alpha", alpha, 0.5)?;
            let budget = res.or("B", budget, 1.0)?;
            let cost = mf_cost(res, cost.cost)?;
            let ns = ladder(res, ns, "16:4096")?;
            eps_optimal(alpha, budget, &cost, &ns)
        }
        Command::SizeEffect { mode, alpha, budget, n0, total, cost, ns, .. } => {
            let mode = res.spec("mode", mode, Some("fixed-proportion"))?;
            let mode = match mode.as_str() {
                "fixed-proportion" => SizeMode::FixedProportion {
                    alpha: res.or("alpha", alpha, 0.5)?,
                    budget: res.or("B", budget, 1.0)?,
                },
                "fixed-count" => SizeMode::FixedCount { n0: res.or("n0", n0, 3)?, total: res.or("K", total, 32.0)? },
                other => return Err(invalid(format!("unknown mode `{}` (fixed-proportion, fixed-count)", other))),
            };
            let c = res.or("cost", cost, 1.0)?;
            let default = match mode {
                SizeMode::FixedProportion { .. } => "2:1024",
                SizeMode::FixedCount { .. } => "4:4096",
            };
            let ns = ladder(res, ns, default)?;
            size_effect_report(mode, c, &ns)
        }
        Command::Figures { .. } => unreachable!("handled before dispatch"),
    }
}

pub fn mf_equilibrium(
    reward: &MFRewardScheme<f64>,
    cost: &MFCost<f64>,
    g: usize,
    alpha: Option<f64>,
) -> Result<Report, CliError> {
    let eq = solve_equilibrium(reward, cost, 0.0)?;
    let mut report = Report::new("mf-equilibrium");
    report.summary_f64("budget", reward.budget());
    report.summary_f64("v0", eq.value_at(0.0));
    if let Some(a) = alpha.filter(|a| *a < 1.0) {
        report.summary_f64("T_alpha", eq.quantile(a));
    }
    report.summary_f64("T_half", eq.quantile(0.5));
    let mut t = Table::new("main", &["r", "R", "v", "lambda"]);
    for i in 0..=g {
        let r = i as f64 / g as f64;
        t.push(row![r, reward.eval(r), eq.value_at(r), eq.effort_at(r)]);
    }
    report.tables.push(t);
    report.tables.push(trajectory_table(&eq));
    Ok(report)
}

pub fn mf_principal(alpha: f64, budget: f64, cost: &MFCost<f64>, g: usize) -> Result<Report, CliError> {
    let sol = optimal_reward(&PrincipalProblem::new(alpha, budget, cost.clone())?)?;
    let eq = solve_equilibrium(&sol.reward, cost, 0.0)?;
    let mut report = Report::new("mf-principal");
    report.summary_f64("T_star", sol.minimal_time);
    report.summary_f64("C", sol.constant_c);
    if let Some(cp) = sol.c_prime() {
        report.summary_f64("C_prime", cp);
    }
    report.summary_f64("R_at_0", sol.reward_at(0.0));
    report.summary_f64("R_before_alpha", sol.reward_at(alpha));
    let mut t = Table::new("main", &["r", "R", "lambda"]);
    for i in 0..=g {
        let r = i as f64 / g as f64;
        t.push(row![r, sol.reward_at(r), sol.effort_at(r)]);
    }
    report.tables.push(t);
    report.tables.push(trajectory_table(&eq));
    Ok(report)
}

fn nplayer_spec(
    res: &mut Resolver,
    pop: PopulationArgs,
    reward: RewardArgs,
    cost_flag: Option<String>,
) -> Result<NPlayerSpec<f64>, CliError> {
    let cost = mf_cost(res, cost_flag)?;
    let rewards = match res.opt_spec("rewards", pop.rewards)? {
        Some(text) => {
            let r = parse_list(&text)?;
            if let Some(n) = res.opt("N", pop.players)? {
                if n != r.len() {
                    return Err(invalid(format!("N = {} but {} rewards were given", n, r.len())));
                }
            }
            r
        }
        None => {
            let scheme = mf_reward(res, reward)?;
            let n = res.req("N", pop.players)?;
            let method = parse_scheme(&res.spec("scheme", pop.scheme, Some("sampling"))?)?;
            if n == 0 {
                return Err(invalid("N must be positive"));
            }
            method.apply(&scheme, n)
        }
    };
    let list = res.opt_spec("costs", pop.costs)?;
    let costs = nplayer_costs(list.as_deref(), &cost, rewards.len())?;
    Ok(NPlayerSpec::new(rewards, costs)?)
}

pub fn nplayer_solve(spec: &NPlayerSpec<f64>, n0: Option<usize>) -> Result<Report, CliError> {
    let eq = solve_recursion(spec);
    let n = spec.players();
    let mut report = Report::new("nplayer-solve");
    report.summary_f64("v0", eq.values[0]);
    report.summary_f64("vN", eq.values[n]);
    let residual = eq.residuals().iter().map(|r| r.abs()).fold(0.0, f64::max);
    report.summary_f64("max_residual", residual);
    if let Some(n0) = n0 {
        let et = expected_completion(&eq, n0)?.unwrap_or(f64::INFINITY);
        let var = completion_variance(&eq, n0)?.unwrap_or(f64::INFINITY);
        report.summary("n0", n0);
        report.summary_f64("ET", et);
        report.summary_f64("var_T", var);
    }
    let mut t = Table::new("main", &["n", "R_next", "v", "lambda", "rate"]);
    for k in 0..n {
        t.push(row![k, *spec.reward(k + 1), eq.values[k], eq.efforts[k], eq.rate(k)]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn nplayer_simulate(
    spec: &NPlayerSpec<f64>,
    n0: usize,
    paths: usize,
    seed: u64,
    samples: bool,
) -> Result<Report, CliError> {
    let eq = solve_recursion(spec);
    let et = expected_completion(&eq, n0)?.unwrap_or(f64::INFINITY);
    let sim = simulate(spec, n0, paths, seed)?;
    let z = (sim.mean - et) / sim.stderr;
    let mut report = Report::new("nplayer-simulate");
    report.summary_f64("mean", sim.mean);
    report.summary_f64("ET", et);
    report.summary_f64("z", z);
    let mut t = Table::new("main", &["n0", "paths", "seed", "mean", "stderr", "variance", "ET", "z"]);
    t.push(row![n0, sim.paths, sim.seed as usize, sim.mean, sim.stderr, sim.variance(), et, z]);
    report.tables.push(t);
    if samples {
        let mut s = Table::new("samples", &["path", "T"]);
        for (i, x) in sim.samples.iter().enumerate() {
            s.push(row![i, *x]);
        }
        report.tables.push(s);
    }
    Ok(report)
}

pub fn nplayer_principal(p: &NPrincipalProblem<f64>, oracle: bool) -> Result<Report, CliError> {
    let sol = optimal_reward_n(p)?;
    let mut report = Report::new("nplayer-principal");
    report.summary_f64("ET_star", sol.expected_time);
    report.summary_f64("C", sol.constant_c);
    report.summary_f64("theta", sol.theta);
    if oracle {
        let o = brute_force_oracle(p);
        report.summary_f64("ET_oracle", o.expected_time);
        report.summary_f64("rel_gap", (o.expected_time - sol.expected_time) / sol.expected_time);
        report.summary("oracle_method", method_name(o.method));
    }
    let mut t = Table::new("main", &["n", "R_next", "lambda", "cost"]);
    for k in 0..p.players {
        t.push(row![k, sol.rewards[k], sol.efforts[k], p.costs[k]]);
    }
    report.tables.push(t);
    Ok(report)
}

fn method_name(m: OracleMethod) -> &'static str {
    match m {
        OracleMethod::GapSpace => "gap-space",
        OracleMethod::ProjectedGradient => "projected-gradient",
        OracleMethod::Trivial => "trivial",
    }
}

type CostFamily = (&'static str, fn(usize, usize) -> f64);

pub fn oracle_check(max_n: usize, budget: f64) -> Result<Report, CliError> {
    let families: [CostFamily; 3] = [
        ("constant", |_, _| 1.0),
        ("linear-decreasing", |k, n| 2.0 - k as f64 / n as f64),
        ("geometric", |k, _| 0.8f64.powi(k as i32)),
    ];
    let mut report = Report::new("oracle-check");
    let mut t = Table::new("main", &["N", "n0", "family", "B", "ET_closed", "ET_oracle", "rel_diff", "method"]);
    let mut worst = 0.0f64;
    for n in 2..=max_n {
        for n0 in 1..n {
            for (name, family) in families {
                let costs = (0..n).map(|k| family(k, n)).collect();
                let p = NPrincipalProblem::new(n, n0, budget, costs)?;
                let closed = optimal_reward_n(&p)?.expected_time;
                let o = brute_force_oracle(&p);
                let rel = (closed - o.expected_time).abs() / closed;
                worst = worst.max(rel);
                t.push(row![n, n0, name, budget, closed, o.expected_time, rel, method_name(o.method)]);
            }
        }
    }
    report.summary_f64("max_rel_diff", worst);
    report.tables.push(t);
    Ok(report)
}

pub fn discretize(reward: &MFRewardScheme<f64>, n: usize, method: Discretization) -> Result<Report, CliError> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    let r = method.apply(reward, n);
    let mut report = Report::new("discretize");
    report.summary_f64("budget", reward.budget());
    report.summary_f64("budget_discrete", r.iter().sum::<f64>() / n as f64);
    let mut t = Table::new("main", &["n", "rank", "R_n", "R_at_rank"]);
    for (k, value) in r.iter().enumerate() {
        let rank = (k + 1) as f64 / n as f64;
        t.push(row![k + 1, rank, *value, reward.eval(rank)]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn converge_value(
    reward: &MFRewardScheme<f64>,
    cost: &MFCost<f64>,
    ns: &[usize],
    method: Discretization,
) -> Result<Report, CliError> {
    let exp = value_convergence_experiment_with(reward, cost, ns, method)?;
    let mut report = Report::new("converge-value");
    fit_summary(&mut report, "value", &exp.values);
    fit_summary(&mut report, "effort", &exp.efforts);
    report.summary("partition", json!(partition_of(reward.function())));
    let mut t = Table::new("main", &["N", "log2N", "value_error", "effort_error", "included"]);
    for g in &exp.gaps {
        t.push(row![g.players, (g.players as f64).log2(), g.value_error, g.effort_error, g.large_enough]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn converge_principal(alpha: f64, budget: f64, cost: &MFCost<f64>, ns: &[usize]) -> Result<Report, CliError> {
    let exp = principal_convergence_experiment(alpha, budget, cost, ns)?;
    let mut report = Report::new("converge-principal");
    report.summary_f64("T_star", exp.minimal_time);
    fit_summary(&mut report, "time", &exp.times);
    fit_summary(&mut report, "reward", &exp.rewards);
    let mut t = Table::new("main", &["N", "log2N", "n0", "ET", "signed_gap", "reward_error"]);
    for g in &exp.gaps {
        t.push(row![
            g.players,
            (g.players as f64).log2(),
            head_count(alpha, g.players),
            g.expected_time,
            g.signed_gap,
            g.reward_error
        ]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn eps_optimal(alpha: f64, budget: f64, cost: &MFCost<f64>, ns: &[usize]) -> Result<Report, CliError> {
    let exp = eps_optimality_experiment(alpha, budget, cost, ns)?;
    let mut report = Report::new("eps-optimal");
    fit_summary(&mut report, "eps", &exp.fit);
    let mut t = Table::new("main", &["N", "log2N", "n0", "sampled_time", "optimal_time", "gap"]);
    for g in &exp.gaps {
        t.push(row![g.players, (g.players as f64).log2(), g.n0, g.sampled_time, g.optimal_time, g.gap]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn size_effect_report(mode: SizeMode<f64>, c: f64, ns: &[usize]) -> Result<Report, CliError> {
    let points = size_effect(mode, c, ns)?;
    let mut report = Report::new("size-effect");
    if let SizeMode::FixedProportion { alpha, budget } = mode {
        let sol = optimal_reward(&PrincipalProblem::new(alpha, budget, MFCost::constant(c)?)?)?;
        report.summary_f64("T_star", sol.minimal_time);
    }
    report.summary_f64("last_ET", points.last().map(|p| p.expected_time).unwrap_or(f64::NAN));
    let mut t = Table::new("main", &["log2N", "N", "n0", "ET", "display"]);
    for p in &points {
        t.push(row![(p.players as f64).log2(), p.players, p.n0, p.expected_time, p.display.unwrap_or(f64::NAN)]);
    }
    report.tables.push(t);
    Ok(report)
}

/// Cut-off values shown in the optimal-reward figure.
pub const FIGURE_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
/// Exponents shown in the power-with-cut-off effort figure.
pub const FIGURE_EXPONENTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

pub fn figures(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let one = MFCost::constant(1.0)?;
    let mut rewards = Report::new("figures");
    rewards.config.insert("B".into(), json!(1.0));
    rewards.config.insert("cost".into(), json!("1"));
    rewards.config.insert("alphas".into(), json!(FIGURE_ALPHAS));
    let mut main = Table::new("main", &["alpha", "r", "R", "lambda"]);
    let mut states = Table::new("trajectory", &["alpha", "t", "rho"]);
    for (alpha, key) in FIGURE_ALPHAS.into_iter().zip(["T_star_0.25", "T_star_0.5", "T_star_0.75"]) {
        let sol = optimal_reward(&PrincipalProblem::new(alpha, 1.0, one.clone())?)?;
        rewards.summary.push((key, json_f64(sol.minimal_time)));
        for i in 0..=DEFAULT_GRID {
            let r = i as f64 / DEFAULT_GRID as f64;
            main.push(row![alpha, r, sol.reward_at(r), sol.effort_at(r)]);
        }
        let eq = solve_equilibrium(&sol.reward, &one, 0.0)?;
        for (time, state) in eq.trajectory.times().iter().zip(eq.trajectory.states()) {
            states.push(row![alpha, *time, *state]);
        }
    }
    rewards.tables = vec![main, states];
    rewards.write(Some(&dir.join("optimal_reward.csv")), Format::Csv)?;

    let mut effort = Report::new("figures");
    effort.config.insert("B".into(), json!(1.0));
    effort.config.insert("alpha".into(), json!(0.5));
    effort.config.insert("cost".into(), json!("1"));
    effort.config.insert("q".into(), json!(FIGURE_EXPONENTS));
    let mut t = Table::new("main", &["q", "r", "lambda"]);
    for q in FIGURE_EXPONENTS {
        let eq = solve_equilibrium(&power_reward(1.0, 0.5, q)?, &one, 0.0)?;
        for i in 0..=DEFAULT_GRID {
            let r = i as f64 / DEFAULT_GRID as f64;
            t.push(row![q, r, eq.effort_at(r)]);
        }
    }
    effort.tables.push(t);
    effort.write(Some(&dir.join("power_effort.csv")), Format::Csv)?;

    let mut left = size_effect_report(SizeMode::FixedProportion { alpha: 0.5, budget: 1.0 }, 1.0, &parse_ns("2:1024")?)?;
    left.config.insert("mode".into(), json!("fixed-proportion"));
    left.config.insert("alpha".into(), json!(0.5));
    left.config.insert("B".into(), json!(1.0));
    left.config.insert("cost".into(), json!(1.0));
    left.write(Some(&dir.join("size_effect_fixed_proportion.csv")), Format::Csv)?;

    let mut right = size_effect_report(SizeMode::FixedCount { n0: 3, total: 32.0 }, 1.0, &parse_ns("4:4096")?)?;
    right.config.insert("mode".into(), json!("fixed-count"));
    right.config.insert("n0".into(), json!(3));
    right.config.insert("K".into(), json!(32.0));
    right.config.insert("cost".into(), json!(1.0));
    right.write(Some(&dir.join("size_effect_fixed_count.csv")), Format::Csv)?;
    Ok(())
}
