//! Finite-population approximations of mean-field data and empirical
//! convergence rates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mfg::{EquilibriumEvaluator, MFCost, MFRewardScheme};
use crate::nplayer::{solve_recursion, NPlayerSpec};
use crate::nprincipal::{optimal_reward_n, NPrincipalProblem};
use crate::piecewise::PiecewiseFn;
use crate::principal::{optimal_reward, PrincipalProblem, PrincipalSolution};
use crate::scalar::{count, lit, Real};

/// Smallest coefficient of determination for a fit to count as asymptotic.
pub const MIN_R_SQUARED: f64 = 0.98;

fn rank<F: Real>(k: usize, n: usize) -> F {
    count::<F>(k) / count::<F>(n)
}

/// Point sampling `R_n = R(n/N)`, `n = 1..N`.
pub fn discretize_sampling<F: Real>(reward: &MFRewardScheme<F>, n: usize) -> Vec<F> {
    (1..=n).map(|k| reward.eval(rank(k, n))).collect()
}

/// Cell averages `R_n = N ∫_{(n-1)/N}^{n/N} R`, `n = 1..N`.
pub fn discretize_average<F: Real>(reward: &MFRewardScheme<F>, n: usize) -> Vec<F> {
    let f = reward.function();
    (1..=n)
        .map(|k| {
            let (a, b) = (rank::<F>(k - 1, n), rank::<F>(k, n));
            f.integral(a, b) / (b - a)
        })
        .collect()
}

/// Costs `c_n = c(n/N)`, `n = 0..N-1`.
pub fn discretize_cost<F: Real>(cost: &MFCost<F>, n: usize) -> Vec<F> {
    (0..n).map(|k| cost.eval(rank(k, n))).collect()
}

/// Which finite-population reward to derive from a mean-field scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Discretization {
    Sampling,
    Average,
}

impl Discretization {
    pub fn apply<F: Real>(self, reward: &MFRewardScheme<F>, n: usize) -> Vec<F> {
        match self {
            Discretization::Sampling => discretize_sampling(reward, n),
            Discretization::Average => discretize_average(reward, n),
        }
    }
}

/// Interior sets `[r_{i-1} + 1/N, r_i - 1/N]` and `[r_m + 1/N, 1]`; empty ones are dropped.
pub fn interior_sets<F: Real>(partition: &[F], n: usize) -> Vec<(F, F)> {
    let d = F::one() / count::<F>(n);
    let last = partition.len() - 1;
    (1..=last)
        .map(|i| {
            let lo = partition[i - 1] + d;
            let hi = if i == last { F::one() } else { partition[i] - d };
            (lo, hi)
        })
        .filter(|(lo, hi)| lo <= hi)
        .collect()
}

/// Bins `[k/N, (k+1)/N) ∩ [lo, hi]` for the floor index, as `(k, a, b)`.
fn floor_bins<F: Real>(lo: F, hi: F, n: usize) -> Vec<(usize, F, F)> {
    let nn = count::<F>(n);
    let first = (lo * nn).floor().to_usize().unwrap_or(0).min(n);
    let mut out = Vec::new();
    for k in first..=n {
        let a = rank::<F>(k, n).max(lo);
        let b = rank::<F>(k + 1, n).min(hi);
        if a > hi {
            break;
        }
        out.push((k, a, b.max(a)));
    }
    out
}

/// Bins `((k-1)/N, k/N] ∩ [lo, hi]` for the ceiling index, as `(k, a, b)`.
fn ceil_bins<F: Real>(lo: F, hi: F, n: usize) -> Vec<(usize, F, F)> {
    let nn = count::<F>(n);
    let first = (lo * nn).ceil().to_usize().unwrap_or(0).max(1).min(n);
    let mut out = Vec::new();
    for k in first..=n {
        let left = rank::<F>(k - 1, n);
        if left >= hi && k > first {
            break;
        }
        let a = left.max(lo);
        let b = rank::<F>(k, n).min(hi);
        out.push((k, a, b.max(a)));
    }
    out
}

/// Result of checking a discretization against the `K/N` band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizationReport<F> {
    pub players: usize,
    /// `sup |R_{⌈rN⌉} - R(r)|` over the interior sets.
    pub max_deviation: F,
    pub partition: Vec<F>,
    pub constant: F,
    pub passes: bool,
}

/// Measures `sup_{r ∈ ∪ I_i} |R_{⌈rN⌉} - R(r)|` and compares it with `K/N`.
///
/// `R` is non-increasing and continuous inside each interior set, so the
/// supremum over a cell is attained at its ends.
pub fn check_discretization<F: Real>(
    rewards: &[F],
    reward: &MFRewardScheme<F>,
    partition: &[F],
    constant: F,
) -> DiscretizationReport<F> {
    let n = rewards.len();
    let mut worst = F::zero();
    for (lo, hi) in interior_sets(partition, n) {
        for (k, a, b) in ceil_bins(lo, hi, n) {
            let rk = rewards[k - 1];
            worst = worst.max((rk - reward.eval(a)).abs()).max((rk - reward.eval(b)).abs());
        }
    }
    DiscretizationReport {
        players: n,
        max_deviation: worst,
        partition: partition.to_vec(),
        constant,
        passes: worst <= constant / count::<F>(n),
    }
}

/// Least-squares fit of `log error` against `log N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit<F> {
    pub ns: Vec<usize>,
    pub errors: Vec<F>,
    /// Whether each point entered the fit.
    pub included: Vec<bool>,
    /// `None` when fewer than two included points have positive error.
    pub slope: Option<F>,
    pub intercept: Option<F>,
    pub r_squared: Option<F>,
    /// Set when the fit is below [`MIN_R_SQUARED`].
    pub contaminated: bool,
}

impl<F: Real> RateFit<F> {
    pub fn new(ns: Vec<usize>, errors: Vec<F>, included: Vec<bool>) -> Result<Self> {
        if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("need at least two strictly increasing population sizes".into()));
        }
        if errors.len() != ns.len() || included.len() != ns.len() {
            return Err(Error::InvalidParameter("one error and one flag per population size".into()));
        }
        let pts: Vec<(F, F)> = ns
            .iter()
            .zip(&errors)
            .zip(&included)
            .filter(|((_, e), inc)| **inc && **e > F::zero() && e.is_finite())
            .map(|((n, e), _)| (count::<F>(*n).ln(), e.ln()))
            .collect();
        let (mut slope, mut intercept, mut r_squared, mut contaminated) = (None, None, None, false);
        if pts.len() >= 2 {
            let m = count::<F>(pts.len());
            let mx = pts.iter().map(|p| p.0).sum::<F>() / m;
            let my = pts.iter().map(|p| p.1).sum::<F>() / m;
            let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<F>();
            let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<F>();
            let syy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<F>();
            let b = sxy / sxx;
            let r2 = if syy > F::zero() { b * sxy / syy } else { F::one() };
            slope = Some(b);
            intercept = Some(my - b * mx);
            r_squared = Some(r2);
            contaminated = r2 < lit(MIN_R_SQUARED);
        }
        Ok(Self { ns, errors, included, slope, intercept, r_squared, contaminated })
    }

    /// True when every error is exactly zero.
    pub fn vanishes(&self) -> bool {
        self.errors.iter().all(|e| *e == F::zero())
    }
}

/// Dyadic ladder `2^lo, …, 2^hi`.
pub fn dyadic(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// Whether `r_m < 1 - 1/√N - 1/N` for the last interior breakpoint `r_m`.
pub fn large_enough<F: Real>(partition: &[F], n: usize) -> bool {
    let r_m = partition[partition.len().saturating_sub(2)];
    let nn = count::<F>(n);
    r_m < F::one() - F::one() / nn.sqrt() - F::one() / nn
}

/// Equilibrium deviations at one population size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumGap<F> {
    pub players: usize,
    /// `sup_{[0,1]} |v_{⌊rN⌋} - v(r)|`.
    pub value_error: F,
    /// `sup_{∪ I_i} |λ_{⌊rN⌋} - λ*(r)|`.
    pub effort_error: F,
    pub large_enough: bool,
}

/// Value and effort rate fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueConvergence<F> {
    pub values: RateFit<F>,
    pub efforts: RateFit<F>,
    pub gaps: Vec<EquilibriumGap<F>>,
}

/// Sub-samples per floor cell when the effort is not known to be monotone.
const EFFORT_SAMPLES: usize = 8;

/// Deviation of the `N`-player equilibrium from the mean-field one.
pub fn equilibrium_gap<F: Real>(
    evaluator: &EquilibriumEvaluator<F>,
    reward: &MFRewardScheme<F>,
    cost: &MFCost<F>,
    n: usize,
    method: Discretization,
) -> Result<EquilibriumGap<F>> {
    let spec = NPlayerSpec::new(method.apply(reward, n), discretize_cost(cost, n))?;
    let eq = solve_recursion(&spec);
    let mut value_error = F::zero();
    for k in 0..n {
        let vk = eq.values[k];
        let a = evaluator.value(rank(k, n));
        let b = evaluator.value(rank(k + 1, n));
        value_error = value_error.max((vk - a).abs()).max((vk - b).abs());
    }
    value_error = value_error.max((eq.values[n] - reward.eval(F::one())).abs());

    let partition = reward.function().breakpoints().to_vec();
    let mut effort_error = F::zero();
    for (lo, hi) in interior_sets(&partition, n) {
        for (k, a, b) in floor_bins(lo, hi, n) {
            let lk = if k < n { eq.efforts[k] } else { F::zero() };
            for s in 0..=EFFORT_SAMPLES {
                let r = a + (b - a) * rank(s, EFFORT_SAMPLES);
                effort_error = effort_error.max((lk - evaluator.effort(r)).abs());
            }
        }
    }
    Ok(EquilibriumGap { players: n, value_error, effort_error, large_enough: large_enough(&partition, n) })
}

/// Rates of `v^N → v` and `λ^N → λ*` under sampling of `R` and `c`.
pub fn value_convergence_experiment<F: Real>(
    reward: &MFRewardScheme<F>,
    cost: &MFCost<F>,
    ns: &[usize],
) -> Result<ValueConvergence<F>> {
    value_convergence_experiment_with(reward, cost, ns, Discretization::Sampling)
}

pub fn value_convergence_experiment_with<F: Real>(
    reward: &MFRewardScheme<F>,
    cost: &MFCost<F>,
    ns: &[usize],
    method: Discretization,
) -> Result<ValueConvergence<F>> {
    let evaluator = EquilibriumEvaluator::new(reward, cost)?;
    let gaps = ns
        .par_iter()
        .map(|&n| equilibrium_gap(&evaluator, reward, cost, n, method))
        .collect::<Result<Vec<_>>>()?;
    let included: Vec<bool> = gaps.iter().map(|g| g.large_enough).collect();
    let values = RateFit::new(ns.to_vec(), gaps.iter().map(|g| g.value_error).collect(), included.clone())?;
    let efforts = RateFit::new(ns.to_vec(), gaps.iter().map(|g| g.effort_error).collect(), included)?;
    Ok(ValueConvergence { values, efforts, gaps })
}

/// `n0 = ⌈αN⌉`.
pub fn head_count<F: Real>(alpha: F, n: usize) -> usize {
    (alpha * count::<F>(n)).ceil().to_usize().unwrap_or(n)
}

/// Principal comparison at one population size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalGap<F> {
    pub players: usize,
    pub n0: usize,
    /// `ET^N_{n0}`.
    pub expected_time: F,
    /// `ET^N_{n0} - T*_α`.
    pub signed_gap: F,
    /// `sup_{(0,α]} |R^N_{⌈rN⌉} - R*(r)|`.
    pub reward_error: F,
    /// The finite-population constant `C^N`.
    pub constant_c: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalConvergence<F> {
    pub minimal_time: F,
    pub constant_c: F,
    pub times: RateFit<F>,
    pub rewards: RateFit<F>,
    pub gaps: Vec<PrincipalGap<F>>,
}

fn n_problem<F: Real>(alpha: F, budget: F, cost: &MFCost<F>, n: usize) -> Result<NPrincipalProblem<F>> {
    let n0 = head_count(alpha, n);
    NPrincipalProblem::new(n, n0, budget, discretize_cost(cost, n))
}

/// Gap between the `N`-player and mean-field optimal contracts.
pub fn principal_gap<F: Real>(sol: &PrincipalSolution<F>, n: usize) -> Result<PrincipalGap<F>> {
    let p = n_problem(sol.alpha, sol.budget, &sol.cost, n)?;
    let nsol = optimal_reward_n(&p)?;
    let mut reward_error = F::zero();
    for (k, a, b) in ceil_bins(F::zero(), sol.alpha, n) {
        let rk = nsol.rewards[k - 1];
        reward_error = reward_error.max((rk - sol.reward_at(a)).abs()).max((rk - sol.reward_at(b)).abs());
    }
    Ok(PrincipalGap {
        players: n,
        n0: p.n0,
        expected_time: nsol.expected_time,
        signed_gap: nsol.expected_time - sol.minimal_time,
        reward_error,
        constant_c: nsol.constant_c,
    })
}

/// Rates of `ET^N_{⌈αN⌉} → T*_α` and `R^N → R*` on `[0, α]`.
pub fn principal_convergence_experiment<F: Real>(
    alpha: F,
    budget: F,
    cost: &MFCost<F>,
    ns: &[usize],
) -> Result<PrincipalConvergence<F>> {
    let sol = optimal_reward(&PrincipalProblem::new(alpha, budget, cost.clone())?)?;
    let gaps = ns.par_iter().map(|&n| principal_gap(&sol, n)).collect::<Result<Vec<_>>>()?;
    let all = vec![true; ns.len()];
    let times = RateFit::new(ns.to_vec(), gaps.iter().map(|g| g.signed_gap.abs()).collect(), all.clone())?;
    let rewards = RateFit::new(ns.to_vec(), gaps.iter().map(|g| g.reward_error).collect(), all)?;
    Ok(PrincipalConvergence { minimal_time: sol.minimal_time, constant_c: sol.constant_c, times, rewards, gaps })
}

/// Sub-optimality of the sampled mean-field contract at one population size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsGap<F> {
    pub players: usize,
    pub n0: usize,
    /// `ET^{(N)}` under `R_n = R*(n/N)`.
    pub sampled_time: F,
    /// The exact optimum `ET^N`.
    pub optimal_time: F,
    pub gap: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsOptimality<F> {
    pub fit: RateFit<F>,
    pub gaps: Vec<EpsGap<F>>,
}

pub fn eps_gap<F: Real>(sol: &PrincipalSolution<F>, n: usize) -> Result<EpsGap<F>> {
    let p = n_problem(sol.alpha, sol.budget, &sol.cost, n)?;
    let optimal_time = optimal_reward_n(&p)?.expected_time;
    let rewards: Vec<F> = (1..=n).map(|k| sol.reward_at(rank(k, n))).collect();
    let sampled_time = p.expected_time(&rewards)?.unwrap_or_else(F::infinity);
    Ok(EpsGap { players: n, n0: p.n0, sampled_time, optimal_time, gap: sampled_time - optimal_time })
}

/// Rate at which the sampled mean-field optimum approaches the `N`-player optimum.
pub fn eps_optimality_experiment<F: Real>(
    alpha: F,
    budget: F,
    cost: &MFCost<F>,
    ns: &[usize],
) -> Result<EpsOptimality<F>> {
    let sol = optimal_reward(&PrincipalProblem::new(alpha, budget, cost.clone())?)?;
    let gaps = ns.par_iter().map(|&n| eps_gap(&sol, n)).collect::<Result<Vec<_>>>()?;
    let fit = RateFit::new(ns.to_vec(), gaps.iter().map(|g| g.gap.abs()).collect(), vec![true; ns.len()])?;
    Ok(EpsOptimality { fit, gaps })
}

/// How the principal's problem scales with the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SizeMode<F> {
    /// Target `⌈αN⌉` arrivals with per-capita budget `B`.
    FixedProportion { alpha: F, budget: F },
    /// Target `n0` arrivals with total budget `K`.
    FixedCount { n0: usize, total: F },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizePoint<F> {
    pub players: usize,
    pub n0: usize,
    /// Optimal `ET^N_{n0}`.
    pub expected_time: F,
    /// Constant-cost display for the fixed-count mode.
    pub display: Option<F>,
}

/// `(1/(N K)) (Σ_{n<n0} [c/(1 - n/N) (1 + 1/(1 - (n+1)/N))]^{1/2})^2`.
pub fn fixed_count_display<F: Real>(n: usize, n0: usize, total: F, c: F) -> F {
    let s: F = (0..n0)
        .map(|k| {
            let a = F::one() - rank::<F>(k, n);
            let b = F::one() - rank::<F>(k + 1, n);
            (c / a * (F::one() + F::one() / b)).sqrt()
        })
        .sum();
    s * s / (count::<F>(n) * total)
}

/// Optimal expected completion times across population sizes under constant cost `c`.
pub fn size_effect<F: Real>(mode: SizeMode<F>, c: F, ns: &[usize]) -> Result<Vec<SizePoint<F>>> {
    ns.par_iter()
        .map(|&n| {
            let (n0, budget, display) = match mode {
                SizeMode::FixedProportion { alpha, budget } => (head_count(alpha, n), budget, None),
                SizeMode::FixedCount { n0, total } => {
                    (n0, total / count::<F>(n), Some(fixed_count_display(n, n0, total, c)))
                }
            };
            let p = NPrincipalProblem::with_constant_cost(n, n0, budget, c)?;
            let sol = optimal_reward_n(&p)?;
            Ok(SizePoint { players: n, n0, expected_time: sol.expected_time, display })
        })
        .collect()
}

/// Partition of a scheme into Lipschitz pieces.
pub fn partition_of<F: Real>(f: &PiecewiseFn<F>) -> Vec<F> {
    f.breakpoints().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfg::validate_reward;
    use crate::piecewise::Piece;
    use approx::assert_relative_eq;

    fn cutoff(alpha: f64) -> MFRewardScheme<f64> {
        validate_reward(PiecewiseFn::steps(vec![0.0, alpha, 1.0], vec![1.0 / alpha, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(discretize_sampling(&cutoff(0.5), 4), vec![2.0, 2.0, 0.0, 0.0]);
        let lin = validate_reward(PiecewiseFn::single(Piece::power(2.0, 1.0)).unwrap()).unwrap();
        assert_eq!(discretize_sampling(&lin, 2), vec![1.0, 0.0]);
        let one = validate_reward(PiecewiseFn::constant(1.0)).unwrap();
        assert_eq!(discretize_sampling(&one, 7), vec![1.0; 7]);
        assert_eq!(discretize_average(&one, 7), vec![1.0; 7]);
    }

    #[test]
    fn averaging_examples() {
        assert_eq!(discretize_average(&cutoff(0.5), 4), vec![2.0, 2.0, 0.0, 0.0]);
        let r = discretize_average(&cutoff(0.5), 3);
        assert_relative_eq!(r[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(r[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn interior_sets_follow_partition() {
        let sets = interior_sets(&[0.0, 0.5, 1.0], 10);
        assert_eq!(sets.len(), 2);
        assert_relative_eq!(sets[0].0, 0.1);
        assert_relative_eq!(sets[0].1, 0.4);
        assert_relative_eq!(sets[1].0, 0.6);
        assert_eq!(sets[1].1, 1.0);
    }

    #[test]
    fn discretization_band() {
        let lin = validate_reward(PiecewiseFn::single(Piece::power(2.0, 1.0)).unwrap()).unwrap();
        for n in [4, 16, 64, 256] {
            let rep = check_discretization(&discretize_sampling(&lin, n), &lin, &[0.0, 1.0], 2.0);
            assert!(rep.passes, "{:?}", rep);
            let avg = check_discretization(&discretize_average(&lin, n), &lin, &[0.0, 1.0], 2.0);
            assert!(avg.passes);
        }
        let n = 4096;
        let shifted: Vec<f64> = discretize_sampling(&lin, n).iter().map(|v| v + 1.0 / (n as f64).sqrt()).collect();
        assert!(!check_discretization(&shifted, &lin, &[0.0, 1.0], 2.0).passes);
    }

    #[test]
    fn rate_fit_recovers_slope() {
        let ns = dyadic(2, 8);
        let errs: Vec<f64> = ns.iter().map(|n| 3.0 / *n as f64).collect();
        let fit = RateFit::new(ns.clone(), errs, vec![true; ns.len()]).unwrap();
        assert_relative_eq!(fit.slope.unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept.unwrap(), 3.0f64.ln(), epsilon = 1e-12);
        assert!(!fit.contaminated);
        let zero = RateFit::new(ns.clone(), vec![0.0; ns.len()], vec![true; ns.len()]).unwrap();
        assert!(zero.slope.is_none() && zero.vanishes());
        assert!(RateFit::<f64>::new(vec![4], vec![1.0], vec![true]).is_err());
    }

    #[test]
    fn constant_reward_has_no_error() {
        let one = validate_reward(PiecewiseFn::constant(1.0)).unwrap();
        let conv = value_convergence_experiment(&one, &MFCost::constant(1.0).unwrap(), &dyadic(2, 6)).unwrap();
        assert!(conv.values.vanishes());
        assert!(conv.efforts.vanishes());
    }

    #[test]
    fn fixed_count_display_matches_closed_form() {
        assert_relative_eq!(fixed_count_display(2, 1, 2.0, 1.0), 0.75, epsilon = 1e-15);
        let pts = size_effect(SizeMode::FixedCount { n0: 3, total: 32.0 }, 1.0, &dyadic(2, 10)).unwrap();
        for p in &pts {
            assert_relative_eq!(p.display.unwrap(), p.expected_time, max_relative = 1e-12);
        }
        assert!(pts.windows(2).all(|w| w[1].expected_time < w[0].expected_time));
    }

    #[test]
    fn two_player_principal_gap() {
        let sol = optimal_reward(&PrincipalProblem::new(0.5, 1.0, MFCost::constant(1.0).unwrap()).unwrap()).unwrap();
        let g = principal_gap(&sol, 2).unwrap();
        assert_eq!(g.n0, 1);
        assert_relative_eq!(g.expected_time, 0.75, epsilon = 1e-14);
        assert!(g.signed_gap < 0.0);
        let e = eps_gap(&sol, 2).unwrap();
        assert!(e.gap >= 0.0);
    }
}
