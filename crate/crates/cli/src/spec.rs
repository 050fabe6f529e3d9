//! Textual descriptors for rewards, costs and population ladders.

use rankrace::convergence::discretize_cost;
use rankrace::{validate_reward, Discretization, MFCost, MFRewardScheme, Piece, PiecewiseFn};

use crate::error::CliError;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad(format!("`{}` is not a number", s))))
        .collect()
}

fn two_lists(body: &str, what: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (a, b) = body
        .split_once(';')
        .ok_or_else(|| bad(format!("{} expects `grid;values`", what)))?;
    Ok((parse_list(a)?, parse_list(b)?))
}

/// `c`, `affine:a,s`, `steps:g0,..,gk;c1,..,ck` or `table:g0,..,gk;c0,..,ck`.
pub fn parse_cost(text: &str) -> Result<MFCost<f64>, CliError> {
    let text = text.trim();
    if let Ok(c) = text.parse::<f64>() {
        return Ok(MFCost::constant(c)?);
    }
    let (kind, body) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("unrecognised cost `{}`", text)))?;
    match kind {
        "affine" => {
            let v = parse_list(body)?;
            if v.len() != 2 {
                return Err(bad("affine cost expects `intercept,slope`"));
            }
            Ok(MFCost::new(PiecewiseFn::single(Piece::affine(v[0], v[1]))?)?)
        }
        "steps" => {
            let (grid, values) = two_lists(body, "steps cost")?;
            Ok(MFCost::with_jumps(PiecewiseFn::steps(grid, values)?)?)
        }
        "table" => {
            let (grid, values) = two_lists(body, "table cost")?;
            Ok(MFCost::new(PiecewiseFn::single(Piece::Tabulated { grid, values })?)?)
        }
        _ => Err(bad(format!("unknown cost kind `{}`", kind))),
    }
}

pub enum RewardKind {
    Power,
    Cutoff,
    Staircase,
}

impl RewardKind {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "power" => Ok(RewardKind::Power),
            "cutoff" => Ok(RewardKind::Cutoff),
            "staircase" => Ok(RewardKind::Staircase),
            _ => Err(bad(format!("unknown reward `{}` (power, cutoff, staircase)", text))),
        }
    }
}

/// Power family `B (1+q) / α^{1+q} (α - r)^q` on `[0, α]`, zero after.
pub fn power_reward(budget: f64, alpha: f64, q: f64) -> Result<MFRewardScheme<f64>, CliError> {
    let valid = alpha > 0.0 && alpha <= 1.0 && budget > 0.0 && q >= 0.0;
    if !valid {
        return Err(bad("power reward needs 0 < alpha <= 1, B > 0 and q >= 0"));
    }
    Ok(rankrace::closed_form_power(budget, alpha, q, 1.0)?.reward)
}

pub fn staircase_reward(breaks: &[f64], levels: &[f64]) -> Result<MFRewardScheme<f64>, CliError> {
    Ok(validate_reward(PiecewiseFn::steps(breaks.to_vec(), levels.to_vec())?)?)
}

/// `a:b` is the dyadic ladder between two powers of two, otherwise a list.
pub fn parse_ns(text: &str) -> Result<Vec<usize>, CliError> {
    if let Some((a, b)) = text.split_once(':') {
        let lo: usize = a.trim().parse().map_err(|_| bad(format!("bad ladder start `{}`", a)))?;
        let hi: usize = b.trim().parse().map_err(|_| bad(format!("bad ladder end `{}`", b)))?;
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err(bad("ladder `a:b` needs powers of two with a <= b"));
        }
        return Ok(rankrace::convergence::dyadic(lo.trailing_zeros(), hi.trailing_zeros()));
    }
    let ns: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad(format!("`{}` is not a population size", s))))
        .collect::<Result<_, _>>()?;
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("population sizes must be strictly increasing"));
    }
    Ok(ns)
}

pub fn parse_scheme(text: &str) -> Result<Discretization, CliError> {
    match text {
        "sampling" => Ok(Discretization::Sampling),
        "average" => Ok(Discretization::Average),
        _ => Err(bad(format!("unknown discretization `{}` (sampling, average)", text))),
    }
}

/// Per-state costs: an explicit list of length `n`, or `c(k/N)`.
pub fn nplayer_costs(list: Option<&str>, cost: &MFCost<f64>, n: usize) -> Result<Vec<f64>, CliError> {
    match list {
        None => Ok(discretize_cost(cost, n)),
        Some(text) => {
            let v = parse_list(text)?;
            match v.len() {
                1 => Ok(vec![v[0]; n]),
                k if k == n => Ok(v),
                k => Err(bad(format!("expected {} costs, found {}", n, k))),
            }
        }
    }
}
