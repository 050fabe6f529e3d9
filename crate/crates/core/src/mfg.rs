//! The mean-field rank competition: equilibrium value, effort and state.
//!
//! For a reward scheme `R` the equilibrium value is
//! `v(r) = (1 / (2 sqrt(1 - r))) ∫_r^1 R(y) / sqrt(1 - y) dy`, the effort is
//! `λ*(r) = (R(r) - v(r)) / (2 c(r))` and the state solves `ρ' = λ*(ρ)(1 - ρ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{solve_state_ode, Ending, Horizon, Trajectory};
use crate::piecewise::{Piece, PiecewiseFn, RankFn, SqrtWeightTable};
use crate::quadrature::Quadrature;
use crate::scalar::{lit, to_f64, Real};

/// A validated reward scheme: non-negative, non-increasing, left-continuous at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MFRewardScheme<F> {
    reward: PiecewiseFn<F>,
    budget: F,
}

impl<F: Real> MFRewardScheme<F> {
    pub fn function(&self) -> &PiecewiseFn<F> {
        &self.reward
    }

    /// `∫_0^1 R(r) dr`.
    pub fn budget(&self) -> F {
        self.budget
    }

    pub fn eval(&self, r: F) -> F {
        self.reward.eval(r)
    }
}

/// Checks the standing assumptions on a reward scheme.
///
/// Monotonicity is decided from descriptor parameters on each piece and from
/// one-sided limits at every breakpoint.
pub fn validate_reward<F: Real>(reward: PiecewiseFn<F>) -> Result<MFRewardScheme<F>> {
    let bps = reward.breakpoints().to_vec();
    for (j, piece) in reward.pieces().iter().enumerate() {
        let (lo, hi) = (bps[j], bps[j + 1]);
        if piece.min_on(lo, hi) < F::zero() {
            let at = if piece.eval(hi) < F::zero() { hi } else { lo };
            return Err(Error::Negative { at: to_f64(at) });
        }
        if !piece.is_nonincreasing_on(lo, hi) {
            return Err(Error::NotDecreasing { at: to_f64(lo) });
        }
    }
    for &b in &bps[1..bps.len() - 1] {
        if reward.right_limit(b) > reward.left_limit(b) {
            return Err(Error::NotDecreasing { at: to_f64(b) });
        }
    }
    let left = reward.left_limit(F::one());
    let at_one = reward.eval(F::one());
    if at_one < F::zero() {
        return Err(Error::Negative { at: 1.0 });
    }
    if at_one > left {
        return Err(Error::NotDecreasing { at: 1.0 });
    }
    if at_one < left {
        return Err(Error::NotLeftContinuousAtOne { left: to_f64(left), value: to_f64(at_one) });
    }
    let budget = reward.integral(F::zero(), F::one());
    Ok(MFRewardScheme { reward, budget })
}

/// A validated cost coefficient: strictly positive and (by default) continuous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MFCost<F> {
    cost: PiecewiseFn<F>,
}

impl<F: Real> MFCost<F> {
    /// Requires `c > 0` and agreement of one-sided limits at every breakpoint.
    pub fn new(cost: PiecewiseFn<F>) -> Result<Self> {
        let c = Self::with_jumps(cost)?;
        for &b in &c.cost.breakpoints()[1..c.cost.breakpoints().len() - 1] {
            let (l, r) = (c.cost.left_limit(b), c.cost.right_limit(b));
            if (l - r).abs() > F::epsilon() * lit::<F>(64.0) * l.abs().max(r.abs()) {
                return Err(Error::CostNotContinuous { at: to_f64(b) });
            }
        }
        Ok(c)
    }

    /// Requires `c > 0` only; used for piecewise-constant staircase costs.
    pub fn with_jumps(cost: PiecewiseFn<F>) -> Result<Self> {
        let bps = cost.breakpoints().to_vec();
        for (j, piece) in cost.pieces().iter().enumerate() {
            let (lo, hi) = (bps[j], bps[j + 1]);
            let m = piece.min_on(lo, hi);
            if !(m > F::zero()) {
                let at = if piece.eval(hi) <= piece.eval(lo) { hi } else { lo };
                return Err(Error::CostNotPositive { at: to_f64(at), value: to_f64(m) });
            }
        }
        if let Some(v) = cost.value_at_one() {
            if !(v > F::zero()) {
                return Err(Error::CostNotPositive { at: 1.0, value: to_f64(v) });
            }
        }
        Ok(Self { cost })
    }

    pub fn constant(c: F) -> Result<Self> {
        Self::new(PiecewiseFn::constant(c))
    }

    pub fn function(&self) -> &PiecewiseFn<F> {
        &self.cost
    }

    pub fn eval(&self, r: F) -> F {
        self.cost.eval(r)
    }

    /// The same cost multiplied by `k > 0`.
    pub fn scaled(&self, k: F) -> Result<Self> {
        let pieces = self.cost.pieces().iter().map(|p| scale_piece(p, k)).collect();
        let f = PiecewiseFn::new_forced(self.cost.breakpoints().to_vec(), pieces)?;
        let f = match self.cost.value_at_one() {
            Some(v) => f.with_value_at_one(v * k),
            None => f,
        };
        Ok(Self { cost: f })
    }
}

fn scale_piece<F: Real>(p: &Piece<F>, k: F) -> Piece<F> {
    match p {
        Piece::Constant(a) => Piece::Constant(*a * k),
        Piece::Power { scale, exponent } => Piece::power(*scale * k, *exponent),
        Piece::Affine { intercept, slope } => Piece::affine(*intercept * k, *slope * k),
        Piece::Tabulated { grid, values } => {
            Piece::Tabulated { grid: grid.clone(), values: values.iter().map(|v| *v * k).collect() }
        }
        Piece::Sum(parts) => Piece::Sum(parts.iter().map(|q| scale_piece(q, k)).collect()),
    }
}

/// Exact pointwise evaluator of `v` and `λ*` backed by a cumulative quadrature table.
#[derive(Debug, Clone)]
pub struct EquilibriumEvaluator<F> {
    table: SqrtWeightTable<F>,
    reward: PiecewiseFn<F>,
    cost: PiecewiseFn<F>,
}

impl<F: Real> EquilibriumEvaluator<F> {
    pub fn new(reward: &MFRewardScheme<F>, cost: &MFCost<F>) -> Result<Self> {
        let table = SqrtWeightTable::new(reward.reward.clone(), Quadrature::default())?;
        Ok(Self { table, reward: reward.reward.clone(), cost: cost.cost.clone() })
    }

    /// `v(r)`.
    pub fn value(&self, r: F) -> F {
        if r >= F::one() {
            return self.reward.eval(F::one());
        }
        self.reward.left_limit(r) - self.gap(self.reward.left_limit(r), r)
    }

    fn gap(&self, level: F, r: F) -> F {
        if r >= F::one() {
            return F::zero();
        }
        self.table.deficit(level, r) / (lit::<F>(2.0) * (F::one() - r).sqrt())
    }

    /// `λ*(r)` under the right-closed convention.
    pub fn effort(&self, r: F) -> F {
        let level = self.reward.eval(r);
        (self.gap(level, r) / (lit::<F>(2.0) * self.cost.eval(r))).max(F::zero())
    }

    /// `λ*(r+)`.
    pub fn effort_right(&self, r: F) -> F {
        let level = self.reward.right_limit(r);
        (self.gap(level, r) / (lit::<F>(2.0) * self.cost.right_limit(r))).max(F::zero())
    }
}

impl<F: Real> RankFn<F> for EquilibriumEvaluator<F> {
    fn value(&self, r: F) -> F {
        self.effort(r)
    }
    fn value_right(&self, r: F) -> F {
        self.effort_right(r)
    }
    fn knots(&self) -> Vec<F> {
        let mut k = self.reward.knots();
        k.extend(self.cost.knots());
        k.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        k.dedup();
        k
    }
}

/// Closed-form quantile attached to the explicitly solvable families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AnalyticQuantile<F> {
    /// `T_β = s ((1 - β)^{-q} - 1)`.
    PowerFull { scale: F, q: F },
    /// `T_β = s (1 - sqrt(1 - β))` for `β ≤ α`, `+∞` beyond.
    UniformCutoff { scale: F, alpha: F },
    /// Staircase crossing times `t_j` of the grid ranks and slopes `A_j / (4 c_j)`.
    Staircase { grid: Vec<F>, times: Vec<F>, speeds: Vec<F> },
    /// No movement at all.
    Frozen,
}

impl<F: Real> AnalyticQuantile<F> {
    pub fn quantile(&self, beta: F) -> F {
        if beta <= F::zero() {
            return F::zero();
        }
        let one = F::one();
        match self {
            AnalyticQuantile::PowerFull { scale, q } => {
                if beta >= one {
                    F::infinity()
                } else {
                    *scale * ((one - beta).powf(-*q) - one)
                }
            }
            AnalyticQuantile::UniformCutoff { scale, alpha } => {
                if beta > *alpha {
                    F::infinity()
                } else {
                    *scale * (one - (one - beta).sqrt())
                }
            }
            AnalyticQuantile::Staircase { grid, times, speeds } => {
                let j = grid.partition_point(|r| *r < beta).clamp(1, grid.len() - 1);
                let (t0, s) = (times[j - 1], speeds[j - 1]);
                if !t0.is_finite() || s <= F::zero() {
                    return F::infinity();
                }
                t0 + ((one - grid[j - 1]).sqrt() - (one - beta).sqrt()) / s
            }
            AnalyticQuantile::Frozen => F::infinity(),
        }
    }
}

/// Solved mean-field equilibrium.
#[derive(Debug, Clone)]
pub struct MFEquilibrium<F> {
    pub reward: MFRewardScheme<F>,
    pub cost: MFCost<F>,
    /// `v`; tabulated for general schemes, analytic for closed forms.
    pub value: PiecewiseFn<F>,
    /// `λ*`; tabulated for general schemes, analytic for closed forms.
    pub effort: PiecewiseFn<F>,
    pub trajectory: Trajectory<F>,
    evaluator: Option<EquilibriumEvaluator<F>>,
    analytic: Option<AnalyticQuantile<F>>,
}

impl<F: Real> MFEquilibrium<F> {
    /// `v(r)` to quadrature accuracy (exact for closed forms).
    pub fn value_at(&self, r: F) -> F {
        match &self.evaluator {
            Some(e) => e.value(r),
            None => self.value.eval(r),
        }
    }

    /// `λ*(r)` to quadrature accuracy (exact for closed forms).
    pub fn effort_at(&self, r: F) -> F {
        match &self.evaluator {
            Some(e) => e.effort(r),
            None => self.effort.eval(r),
        }
    }

    /// `T_β`, analytic when a closed form is attached.
    pub fn quantile(&self, beta: F) -> F {
        match &self.analytic {
            Some(a) => a.quantile(beta),
            None => self.trajectory.quantile(beta),
        }
    }

    pub fn analytic_quantile(&self) -> Option<&AnalyticQuantile<F>> {
        self.analytic.as_ref()
    }

    /// Numerical quantile from the sampled trajectory, ignoring any closed form.
    pub fn trajectory_quantile(&self, beta: F) -> F {
        self.trajectory.quantile(beta)
    }
}

/// Rank grid for tabulating `v`: spacing `min(1e-3, 0.01 (1 - r))` down to `1 - 1e-6`.
pub fn value_grid<F: Real>(extra: &[F]) -> Vec<F> {
    let one = F::one();
    let stop = one - lit::<F>(1e-6).max(F::epsilon() * lit(64.0));
    let mut grid = vec![F::zero()];
    let mut r = F::zero();
    while r < stop {
        r = (r + lit::<F>(1e-3).min(lit::<F>(0.01) * (one - r))).min(stop);
        grid.push(r);
    }
    grid.push(one);
    grid.extend(extra.iter().copied());
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    grid
}

/// The equilibrium value `v`, tabulated. Takes no cost argument: `v` does not
/// depend on the cost coefficient.
pub fn equilibrium_value<F: Real>(reward: &MFRewardScheme<F>) -> Result<PiecewiseFn<F>> {
    let table = SqrtWeightTable::new(reward.reward.clone(), Quadrature::default())?;
    let f = &reward.reward;
    let grid = value_grid(&f.knots());
    PiecewiseFn::tabulate_like(f.breakpoints(), &grid, |_, r| {
        if r >= F::one() {
            f.eval(F::one())
        } else {
            let level = f.left_limit(r);
            level - table.deficit(level, r) / (lit::<F>(2.0) * (F::one() - r).sqrt())
        }
    })
}

fn merged_breakpoints<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out: Vec<F> = a.iter().chain(b.iter()).copied().collect();
    out.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    out.dedup();
    out
}

fn tabulate_effort<F: Real>(ev: &EquilibriumEvaluator<F>) -> Result<PiecewiseFn<F>> {
    let bps = merged_breakpoints(ev.reward.breakpoints(), ev.cost.breakpoints());
    let grid = value_grid(&ev.knots());
    PiecewiseFn::tabulate_like(&bps, &grid, |j, r| {
        // the left endpoint of a piece carries the right limit
        if j > 0 && r == bps[j] {
            ev.effort_right(r)
        } else if r >= F::one() {
            F::zero()
        } else {
            ev.effort(r)
        }
    })
}

/// The equilibrium effort `λ*`, tabulated.
pub fn equilibrium_effort<F: Real>(reward: &MFRewardScheme<F>, cost: &MFCost<F>) -> Result<PiecewiseFn<F>> {
    tabulate_effort(&EquilibriumEvaluator::new(reward, cost)?)
}

/// Solves the equilibrium from initial state `r0`, integrating the state
/// until it freezes or comes within `1e-9` of rank 1.
pub fn solve_equilibrium<F: Real>(reward: &MFRewardScheme<F>, cost: &MFCost<F>, r0: F) -> Result<MFEquilibrium<F>> {
    solve_equilibrium_with(reward, cost, r0, Horizon::near_one())
}

/// [`solve_equilibrium`] with an explicit horizon.
pub fn solve_equilibrium_with<F: Real>(
    reward: &MFRewardScheme<F>,
    cost: &MFCost<F>,
    r0: F,
    horizon: Horizon<F>,
) -> Result<MFEquilibrium<F>> {
    if !(r0 >= F::zero() && r0 < F::one()) {
        return Err(Error::InvalidParameter(format!("initial rank {} must lie in [0, 1)", to_f64(r0))));
    }
    let ev = EquilibriumEvaluator::new(reward, cost)?;
    let value = equilibrium_value(reward)?;
    let effort = tabulate_effort(&ev)?;
    let trajectory = match solve_state_ode(&ev, r0, horizon) {
        Ok(t) => t,
        Err(u) => u.trajectory,
    };
    Ok(MFEquilibrium {
        reward: reward.clone(),
        cost: cost.clone(),
        value,
        effort,
        trajectory,
        evaluator: Some(ev),
        analytic: None,
    })
}

/// `v(0) = E[R(1 - e^{-2τ})]` with `τ ~ Exp(1)`, computed as `∫_0^1 R(1 - u^2) du`.
pub fn value_probabilistic<F: Real>(reward: &MFRewardScheme<F>) -> Result<F> {
    let f = &reward.reward;
    let mut points: Vec<F> = f.knots().iter().map(|b| (F::one() - *b).max(F::zero()).sqrt()).collect();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    points.dedup();
    Quadrature::default().integrate_split(|u: F| f.eval(F::one() - u * u), &points)
}

/// Samples a trajectory from a closed-form quantile: rank nodes with spacing
/// `min(0.01, 0.02 (1 - ρ))` plus effort knots, up to `stop`.
fn analytic_trajectory<F: Real>(
    effort: &PiecewiseFn<F>,
    quantile: &AnalyticQuantile<F>,
    stop: F,
    ending: Ending,
) -> Trajectory<F> {
    let one = F::one();
    let knots: Vec<F> = effort.knots().into_iter().filter(|k| *k > F::zero() && *k < stop).collect();
    let mut ranks = vec![F::zero()];
    let mut r = F::zero();
    let mut next = 0;
    while r < stop {
        let mut step = lit::<F>(0.01).min(lit::<F>(0.02) * (one - r));
        while next < knots.len() && knots[next] <= r {
            next += 1;
        }
        if next < knots.len() {
            step = step.min(knots[next] - r);
        }
        r = (r + step).min(stop);
        ranks.push(r);
    }
    let times: Vec<F> = ranks.iter().map(|b| quantile.quantile(*b)).collect();
    let rate_in = ranks.iter().map(|b| effort.left_limit(*b) * (one - *b)).collect();
    let mut rate_out: Vec<F> = ranks.iter().map(|b| effort.right_limit(*b) * (one - *b)).collect();
    let frozen_after = match ending {
        Ending::Frozen => {
            if let Some(last) = rate_out.last_mut() {
                *last = F::zero();
            }
            times.last().copied()
        }
        _ => None,
    };
    Trajectory::from_samples(times, ranks, rate_in, rate_out, stop, frozen_after, ending)
}

/// The explicitly solvable power family with cut-off `α`:
/// `R(r) = κ (1 - r)^q 1_{r ≤ α}` with `κ = B (1 + q) / (1 - (1 - α)^{1+q})`.
pub fn closed_form_power<F: Real>(budget: F, alpha: F, q: F, cost: F) -> Result<MFEquilibrium<F>> {
    let (zero, one, two) = (F::zero(), F::one(), lit::<F>(2.0));
    if !(budget >= zero) || !budget.is_finite() {
        return Err(Error::InvalidParameter("budget must be finite and non-negative".into()));
    }
    if !(cost > zero) || !cost.is_finite() {
        return Err(Error::InvalidParameter("cost must be finite and positive".into()));
    }
    if !(alpha > zero && alpha <= one) {
        return Err(Error::InvalidParameter("cut-off must lie in (0, 1]".into()));
    }
    if !(q >= zero) || !q.is_finite() {
        return Err(Error::InvalidParameter("shape must be finite and non-negative".into()));
    }
    if q > zero && q < one && alpha == one {
        return Err(Error::InvalidParameter(
            "shape in (0, 1) without a cut-off gives an effort that is not Lipschitz at rank 1".into(),
        ));
    }
    let tail = one - alpha;
    let kappa = budget * (one + q) / (one - tail.powf(one + q));
    let d = one + two * q;
    let corner = tail.powf(q) * tail.sqrt();
    let half: F = lit(-0.5);

    let reward_piece = Piece::power(kappa, q);
    let value_piece = Piece::Sum(vec![Piece::power(kappa / d, q), Piece::power(-kappa * corner / d, half)]);
    let effort_piece = Piece::Sum(vec![
        Piece::power(kappa * two * q / (two * cost * d), q),
        Piece::power(kappa * corner / (two * cost * d), half),
    ]);
    let (bps, rp, vp, ep) = if alpha < one {
        (
            vec![zero, alpha, one],
            vec![reward_piece, Piece::Constant(zero)],
            vec![value_piece, Piece::Constant(zero)],
            vec![effort_piece, Piece::Constant(zero)],
        )
    } else {
        // the singular corner terms vanish without a cut-off
        (
            vec![zero, one],
            vec![reward_piece],
            vec![Piece::power(kappa / d, q)],
            vec![Piece::power(kappa * two * q / (two * cost * d), q)],
        )
    };
    let reward = validate_reward(PiecewiseFn::new(bps.clone(), rp)?)?;
    let value = PiecewiseFn::new(bps.clone(), vp)?;
    let effort = PiecewiseFn::new(bps, ep)?;
    let cost_fn = MFCost::constant(cost)?;

    let moving = budget > zero && (q > zero || alpha < one);
    let (trajectory, analytic) = if !moving {
        (Trajectory::constant(zero), Some(AnalyticQuantile::Frozen))
    } else if alpha == one {
        let scale = cost * d / (budget * q * q * (one + q));
        let a = AnalyticQuantile::PowerFull { scale, q };
        let stop = match Horizon::<F>::near_one() {
            Horizon::Rank(b) => b,
            Horizon::Time(_) => unreachable!(),
        };
        (analytic_trajectory(&effort, &a, stop, Ending::Horizon), Some(a))
    } else if q == zero {
        let scale = lit::<F>(4.0) * cost * alpha / (budget * tail.sqrt());
        let a = AnalyticQuantile::UniformCutoff { scale, alpha };
        (analytic_trajectory(&effort, &a, alpha, Ending::Frozen), Some(a))
    } else {
        let traj = match solve_state_ode(&effort, zero, Horizon::near_one()) {
            Ok(t) => t,
            Err(u) => u.trajectory,
        };
        (traj, None)
    };
    Ok(MFEquilibrium { reward, cost: cost_fn, value, effort, trajectory, evaluator: None, analytic })
}

/// Explicit solution for a staircase reward `R = R_j` on `(r_{j-1}, r_j]`
/// with piecewise-constant cost `c_j` on the same intervals.
pub fn closed_form_staircase<F: Real>(levels: &[F], costs: &[F], grid: &[F]) -> Result<MFEquilibrium<F>> {
    let n = levels.len();
    if n == 0 || costs.len() != n || grid.len() != n + 1 {
        return Err(Error::InvalidGrid(format!(
            "need n levels, n costs and n + 1 grid points (got {}, {}, {})",
            n,
            costs.len(),
            grid.len()
        )));
    }
    let (zero, one) = (F::zero(), F::one());
    if grid[0] != zero || grid[n] != one || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid must increase strictly from 0 to 1".into()));
    }
    let reward = validate_reward(PiecewiseFn::steps(grid.to_vec(), levels.to_vec())?)?;
    let cost = MFCost::with_jumps(PiecewiseFn::steps(grid.to_vec(), costs.to_vec())?)?;

    let root: Vec<F> = grid.iter().map(|r| (one - *r).sqrt()).collect();
    // A_j = Σ_{k>j} (R_j - R_k)(sqrt(1 - r_{k-1}) - sqrt(1 - r_k))
    let a: Vec<F> = (0..n)
        .map(|j| {
            (j + 1..n)
                .map(|k| (levels[j] - levels[k]) * (root[k] - root[k + 1]))
                .fold(zero, |s, x| s + x)
        })
        .collect();
    let half: F = lit(-0.5);
    let two: F = lit(2.0);
    let mut vp = Vec::with_capacity(n);
    let mut ep = Vec::with_capacity(n);
    for j in 0..n {
        if a[j] > zero {
            vp.push(Piece::Sum(vec![Piece::Constant(levels[j]), Piece::power(-a[j], half)]));
            ep.push(Piece::power(a[j] / (two * costs[j]), half));
        } else {
            vp.push(Piece::Constant(levels[j]));
            ep.push(Piece::Constant(zero));
        }
    }
    let value = PiecewiseFn::new(grid.to_vec(), vp)?;
    let effort = PiecewiseFn::new(grid.to_vec(), ep)?;

    let speeds: Vec<F> = (0..n).map(|j| a[j] / (lit::<F>(4.0) * costs[j])).collect();
    let mut times = vec![zero; n + 1];
    for j in 0..n {
        times[j + 1] = if speeds[j] > zero && times[j].is_finite() {
            times[j] + (root[j] - root[j + 1]) / speeds[j]
        } else {
            F::infinity()
        };
    }
    let analytic = AnalyticQuantile::Staircase { grid: grid.to_vec(), times: times.clone(), speeds };
    let freeze = (0..n).find(|&j| !(a[j] > zero)).map(|j| grid[j]);
    let trajectory = match freeze {
        Some(r) if r == zero => Trajectory::constant(zero),
        Some(r) => analytic_trajectory(&effort, &analytic, r, Ending::Frozen),
        None => unreachable!("the last step always has A = 0"),
    };
    Ok(MFEquilibrium { reward, cost, value, effort, trajectory, evaluator: None, analytic: Some(analytic) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform_cutoff(b: f64, alpha: f64) -> MFRewardScheme<f64> {
        validate_reward(PiecewiseFn::steps(vec![0.0, alpha, 1.0], vec![b / alpha, 0.0]).unwrap()).unwrap()
    }

    fn power_scheme(b: f64, q: f64) -> MFRewardScheme<f64> {
        validate_reward(PiecewiseFn::single(Piece::power(b * (1.0 + q), q)).unwrap()).unwrap()
    }

    #[test]
    fn validation_examples() {
        let r = validate_reward(PiecewiseFn::constant(1.0)).unwrap();
        assert_eq!(r.budget(), 1.0);
        let bad = PiecewiseFn::constant(1.0).with_value_at_one(0.0);
        assert!(matches!(validate_reward(bad), Err(Error::NotLeftContinuousAtOne { .. })));
        let up = PiecewiseFn::steps(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(validate_reward(up), Err(Error::NotDecreasing { .. })));
        let neg = PiecewiseFn::single(Piece::affine(0.5, -1.0)).unwrap();
        assert!(matches!(validate_reward(neg), Err(Error::Negative { .. })));
        let rising = PiecewiseFn::single(Piece::power(-1.0, 1.0)).unwrap();
        assert!(validate_reward(rising).is_err());
    }

    #[test]
    fn cost_validation() {
        assert!(matches!(MFCost::constant(0.0), Err(Error::CostNotPositive { .. })));
        let jump = PiecewiseFn::steps(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(MFCost::new(jump.clone()), Err(Error::CostNotContinuous { .. })));
        assert!(MFCost::with_jumps(jump).is_ok());
    }

    #[test]
    fn value_examples() {
        let v = equilibrium_value(&validate_reward(PiecewiseFn::constant(1.0)).unwrap()).unwrap();
        for &r in &[0.0, 0.3, 0.999, 1.0] {
            assert_relative_eq!(v.eval(r), 1.0, epsilon = 1e-12);
        }
        let v = equilibrium_value(&uniform_cutoff(1.0, 0.5)).unwrap();
        assert_relative_eq!(v.eval(0.0), 0.585786, epsilon = 1e-6);
        assert_relative_eq!(v.eval(0.25), 0.367007, epsilon = 1e-6);
        let v = equilibrium_value(&power_scheme(1.0, 1.0)).unwrap();
        assert_relative_eq!(v.eval(0.0), 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn effort_examples() {
        let c = MFCost::constant(1.0).unwrap();
        let e = equilibrium_effort(&validate_reward(PiecewiseFn::<f64>::constant(3.0)).unwrap(), &c).unwrap();
        assert!(e.knots().iter().all(|r| e.eval(*r).abs() < 1e-12));
        let e = equilibrium_effort(&uniform_cutoff(1.0, 0.5), &c).unwrap();
        assert_relative_eq!(e.eval(0.0), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(e.eval(0.25), 0.816497, epsilon = 1e-6);
        assert_eq!(e.eval(0.75), 0.0);
        let e = equilibrium_effort(&power_scheme(1.0, 1.0), &c).unwrap();
        assert_relative_eq!(e.eval(0.0), 2.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(e.eval(0.4), 0.4, epsilon = 1e-9);
    }

    #[test]
    fn solve_examples() {
        let c = MFCost::constant(1.0).unwrap();
        let eq = solve_equilibrium(&uniform_cutoff(1.0, 0.5), &c, 0.0).unwrap();
        assert_relative_eq!(eq.quantile(0.5), 0.828427, epsilon = 1e-6);
        assert_eq!(eq.trajectory.ending(), Ending::Frozen);
        let eq = solve_equilibrium(&power_scheme(1.0, 1.0), &c, 0.0).unwrap();
        assert_relative_eq!(eq.quantile(0.5), 1.5, epsilon = 1e-6);
        let eq = solve_equilibrium(&validate_reward(PiecewiseFn::constant(1.0)).unwrap(), &c, 0.2).unwrap();
        assert_eq!(eq.trajectory.frozen_after(), Some(0.0));
        assert!(eq.quantile(0.5).is_infinite());
    }

    #[test]
    fn probabilistic_examples() {
        assert_relative_eq!(
            value_probabilistic(&validate_reward(PiecewiseFn::constant(1.0)).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(value_probabilistic(&uniform_cutoff(1.0, 0.5)).unwrap(), 0.585786, epsilon = 1e-6);
        assert_relative_eq!(value_probabilistic(&power_scheme(1.0, 1.0)).unwrap(), 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn power_closed_form_examples() {
        let eq = closed_form_power(1.0, 0.5, 0.0, 1.0).unwrap();
        assert_relative_eq!(eq.effort.eval(0.5), 1.0, epsilon = 1e-12);
        assert_relative_eq!(eq.quantile(0.5), 0.828427, epsilon = 1e-6);
        for &t in &[0.2, 0.6] {
            let exact = 1.0 - (1.0 - 0.5f64.sqrt() / 2.0 * t).powi(2);
            assert_relative_eq!(eq.trajectory.state_at(t), exact, epsilon = 1e-8);
        }
        let eq = closed_form_power(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(eq.value.eval(0.3), 2.0 / 3.0 * 0.7, epsilon = 1e-12);
        for &t in &[0.5, 2.0] {
            assert_relative_eq!(eq.trajectory.state_at(t), 1.0 - 1.0 / (1.0 + 2.0 / 3.0 * t), epsilon = 1e-8);
        }
        let eq = closed_form_power(0.0f64, 0.7, 2.0, 1.0).unwrap();
        assert_eq!(eq.value.eval(0.2), 0.0);
        assert_eq!(eq.effort.eval(0.2), 0.0);
        assert!(eq.quantile(0.1).is_infinite());
        assert!(matches!(closed_form_power(1.0, 1.0, 0.5, 1.0), Err(Error::InvalidParameter(_))));
        assert!(closed_form_power(1.0, 0.9, 0.5, 1.0).is_ok());
    }

    #[test]
    fn staircase_examples() {
        let eq = closed_form_staircase(&[1.0f64, 0.0], &[1.0, 1.0], &[0.0, 0.5, 1.0]).unwrap();
        assert_relative_eq!(eq.effort.eval(0.0), 0.353553, epsilon = 1e-6);
        assert_relative_eq!(eq.quantile(0.5), 1.656854, epsilon = 1e-6);
        assert!(eq.quantile(0.6).is_infinite());
        let flat = closed_form_staircase(&[0.4f64, 0.4, 0.4], &[1.0; 3], &[0.0, 0.2, 0.7, 1.0]).unwrap();
        assert!(flat.quantile(0.1).is_infinite());
        assert_eq!(flat.effort.eval(0.1), 0.0);
        assert!(matches!(
            closed_form_staircase(&[1.0], &[1.0], &[0.0, 0.5, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn two_step_staircase_matches_numeric() {
        let grid = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let cf = closed_form_staircase(&[2.0, 1.0, 0.0], &[1.0; 3], &grid).unwrap();
        let num = solve_equilibrium(&cf.reward, &cf.cost, 0.0).unwrap();
        for i in 0..=200 {
            let r = i as f64 / 200.0 * 0.999;
            assert_relative_eq!(num.value_at(r), cf.value.eval(r), epsilon = 1e-9);
            assert_relative_eq!(num.effort_at(r), cf.effort.eval(r), epsilon = 1e-9);
            assert_relative_eq!(num.value.eval(r), cf.value.eval(r), epsilon = 1e-6);
        }
        for &b in &[0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0] {
            assert_relative_eq!(num.quantile(b), cf.quantile(b), max_relative = 1e-6);
        }
    }
}
