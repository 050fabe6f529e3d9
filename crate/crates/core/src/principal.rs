//! The mean-field principal problem: which reward scheme with budget `B`
//! brings a proportion `α` of agents home fastest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mfg::{validate_reward, EquilibriumEvaluator, MFCost, MFRewardScheme};
use crate::ode::{solve_state_ode, Horizon};
use crate::piecewise::{Piece, PiecewiseFn, SqrtWeightTable};
use crate::quadrature::Quadrature;
use crate::scalar::{lit, to_f64, Real};

/// Outcome of [`check_cost_assumption`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostCheck<F> {
    pub holds: bool,
    /// Ranks `r1 < r2` with `m(r1) < m(r2)` for `m(r) = c(r)(1 - r)/(2 - r)`.
    pub witness: Option<(F, F)>,
}

/// Checks that `r ↦ c(r)(1 - r)/(2 - r)` is non-increasing on a dense grid
/// and across every breakpoint of `c`.
pub fn check_cost_assumption<F: Real>(cost: &MFCost<F>) -> CostCheck<F> {
    let c = cost.function();
    let one = F::one();
    let two: F = lit(2.0);
    let m = |r: F, cr: F| cr * (one - r) / (two - r);
    let n = 4000;
    let mut pts: Vec<F> = (0..=n).map(|i| lit::<F>(i as f64 / n as f64)).collect();
    pts.extend(c.knots());
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    pts.dedup();
    let slack = F::epsilon() * lit(64.0);
    // walk the grid with one-sided values so that jumps are checked too
    let mut prev_r = pts[0];
    let mut prev = m(pts[0], c.right_limit(pts[0]));
    for &r in &pts[1..] {
        let left = m(r, c.left_limit(r));
        if left > prev + slack * prev.abs().max(F::one()) {
            return CostCheck { holds: false, witness: Some((prev_r, r)) };
        }
        let right = m(r, c.right_limit(r));
        if right > left + slack * left.abs().max(F::one()) {
            return CostCheck { holds: false, witness: Some((r, r)) };
        }
        prev_r = r;
        prev = right;
    }
    CostCheck { holds: true, witness: None }
}

/// Target proportion, budget and cost of the principal problem.
#[derive(Debug, Clone)]
pub struct PrincipalProblem<F> {
    pub alpha: F,
    pub budget: F,
    pub cost: MFCost<F>,
}

impl<F: Real> PrincipalProblem<F> {
    pub fn new(alpha: F, budget: F, cost: MFCost<F>) -> Result<Self> {
        if !(alpha > F::zero() && alpha < F::one()) {
            return Err(Error::InvalidParameter(format!(
                "target proportion {} must lie strictly inside (0, 1)",
                to_f64(alpha)
            )));
        }
        if !(budget > F::zero()) || !budget.is_finite() {
            return Err(Error::InvalidParameter("budget must be finite and positive".into()));
        }
        Ok(Self { alpha, budget, cost })
    }
}

/// The constant value of `c` if it has one.
fn constant_cost<F: Real>(cost: &MFCost<F>) -> Option<F> {
    let f = cost.function();
    let first = match f.pieces().first() {
        Some(Piece::Constant(a)) => *a,
        _ => return None,
    };
    let all = f.pieces().iter().all(|p| matches!(p, Piece::Constant(a) if *a == first));
    let at_one = f.value_at_one().is_none_or(|v| v == first);
    (all && at_one).then_some(first)
}

fn knots_within<F: Real>(f: &PiecewiseFn<F>, lo: F, hi: F) -> Vec<F> {
    let mut pts = vec![lo];
    pts.extend(f.knots().into_iter().filter(|k| *k > lo && *k < hi));
    pts.push(hi);
    pts
}

/// `½ ∫_0^α sqrt(2 - r)/(1 - r) dr` in closed form.
pub fn c_prime<F: Real>(alpha: F) -> F {
    let one = F::one();
    let w0 = lit::<F>(2.0).sqrt();
    let wa = (lit::<F>(2.0) - alpha).sqrt();
    (w0 - wa) + lit::<F>(0.5) * (((w0 - one) * (wa + one)) / ((w0 + one) * (wa - one))).ln()
}

/// The optimal scheme and its certificate data.
#[derive(Debug, Clone)]
pub struct PrincipalSolution<F> {
    pub alpha: F,
    pub budget: F,
    pub cost: MFCost<F>,
    /// `R*`, tabulated on `[0, α]` and zero afterwards.
    pub reward: MFRewardScheme<F>,
    /// `T*_α = 4 C^2 / B`.
    pub minimal_time: F,
    /// `C = ½ ∫_0^α sqrt(c(r)(2 - r))/(1 - r) dr`.
    pub constant_c: F,
    /// `λ*`, tabulated on `[0, α]` and zero afterwards.
    pub effort: PiecewiseFn<F>,
    const_cost: Option<F>,
    quad: Quadrature<F>,
}

impl<F: Real> PrincipalSolution<F> {
    /// `C / sqrt(c)` when the cost is constant.
    pub fn c_prime(&self) -> Option<F> {
        self.const_cost.map(|c| self.constant_c / c.sqrt())
    }

    /// `½ ∫_r^α sqrt(c(s)/(2 - s))/(1 - s) ds`.
    fn inner(&self, r: F) -> F {
        if r >= self.alpha {
            return F::zero();
        }
        let one = F::one();
        let two: F = lit(2.0);
        match self.const_cost {
            Some(c) => {
                let (wa, wr) = ((two - self.alpha).sqrt(), (two - r).sqrt());
                c.sqrt() * lit::<F>(0.5) * (((wa + one) * (wr - one)) / ((wa - one) * (wr + one))).ln()
            }
            None => {
                let cf = self.cost.function();
                let g = |s: F| (cf.eval(s) / (two - s)).sqrt() / (one - s);
                lit::<F>(0.5)
                    * self
                        .quad
                        .integrate_split(g, &knots_within(cf, r, self.alpha))
                        .expect("cost validated finite")
            }
        }
    }

    /// `R*(r)` evaluated directly.
    pub fn reward_at(&self, r: F) -> F {
        if r > self.alpha {
            return F::zero();
        }
        let c = self.cost.eval(r);
        self.budget / self.constant_c * ((c / (lit::<F>(2.0) - r)).sqrt() + self.inner(r))
    }

    /// `λ*(r)` evaluated directly.
    pub fn effort_at(&self, r: F) -> F {
        if r > self.alpha {
            return F::zero();
        }
        let c = self.cost.eval(r);
        self.budget / (lit::<F>(2.0) * self.constant_c) / ((lit::<F>(2.0) - r) * c).sqrt()
    }

    /// `f*(r) = (B/C) sqrt(c(r)(1 - r)/(2 - r))` on `[0, α]`.
    pub fn f_star_at(&self, r: F) -> F {
        if r > self.alpha {
            return F::zero();
        }
        let c = self.cost.eval(r);
        self.budget / self.constant_c * (c * (F::one() - r) / (lit::<F>(2.0) - r)).sqrt()
    }

    /// `f*` tabulated with step `1e-4` on `[0, α]`.
    pub fn f_star(&self) -> Result<PiecewiseFn<F>> {
        tabulate_on_alpha(self.alpha, self.cost.function(), |r| self.f_star_at(r))
    }
}

fn alpha_grid<F: Real>(alpha: F, extra: &PiecewiseFn<F>) -> Vec<F> {
    let n = (to_f64(alpha) / 1e-4).ceil().max(1.0) as usize;
    let mut grid: Vec<F> = (0..=n).map(|i| alpha * lit::<F>(i as f64 / n as f64)).collect();
    grid.extend(extra.knots().into_iter().filter(|k| *k > F::zero() && *k < alpha));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    grid
}

fn tabulate_on_alpha<F: Real, G: FnMut(F) -> F>(alpha: F, extra: &PiecewiseFn<F>, mut g: G) -> Result<PiecewiseFn<F>> {
    let grid = alpha_grid(alpha, extra);
    let values = grid.iter().map(|r| g(*r)).collect();
    PiecewiseFn::new(
        vec![F::zero(), alpha, F::one()],
        vec![Piece::Tabulated { grid, values }, Piece::Constant(F::zero())],
    )
}

/// Solves the principal problem in closed form.
pub fn optimal_reward<F: Real>(p: &PrincipalProblem<F>) -> Result<PrincipalSolution<F>> {
    let check = check_cost_assumption(&p.cost);
    if let Some((r1, r2)) = check.witness {
        return Err(Error::CostAssumptionViolated { r1: to_f64(r1), r2: to_f64(r2) });
    }
    let (one, two) = (F::one(), lit::<F>(2.0));
    let quad = Quadrature::default();
    let const_cost = constant_cost(&p.cost);
    let cf = p.cost.function();
    let constant_c = match const_cost {
        Some(c) => c.sqrt() * c_prime(p.alpha),
        None => {
            let g = |r: F| (cf.eval(r) * (two - r)).sqrt() / (one - r);
            lit::<F>(0.5) * quad.integrate_split(g, &knots_within(cf, F::zero(), p.alpha))?
        }
    };
    let mut sol = PrincipalSolution {
        alpha: p.alpha,
        budget: p.budget,
        cost: p.cost.clone(),
        reward: validate_reward(PiecewiseFn::constant(F::zero()))?,
        minimal_time: lit::<F>(4.0) * constant_c * constant_c / p.budget,
        constant_c,
        effort: PiecewiseFn::constant(F::zero()),
        const_cost,
        quad,
    };

    // inner integral accumulated from α downwards
    let grid = alpha_grid(p.alpha, cf);
    let mut inner = vec![F::zero(); grid.len()];
    if const_cost.is_some() {
        for (k, r) in grid.iter().enumerate() {
            inner[k] = sol.inner(*r);
        }
    } else {
        let g = |s: F| (cf.eval(s) / (two - s)).sqrt() / (one - s);
        for k in (0..grid.len() - 1).rev() {
            inner[k] = inner[k + 1] + lit::<F>(0.5) * quad.integrate(g, grid[k], grid[k + 1])?.value;
        }
    }
    let scale = p.budget / constant_c;
    let values: Vec<F> = grid
        .iter()
        .zip(&inner)
        .map(|(r, j)| scale * ((cf.eval(*r) / (two - *r)).sqrt() + *j))
        .collect();
    let reward = PiecewiseFn::new(
        vec![F::zero(), p.alpha, one],
        vec![Piece::Tabulated { grid: grid.clone(), values }, Piece::Constant(F::zero())],
    )?;
    sol.reward = validate_reward(reward)?;
    sol.effort = tabulate_on_alpha(p.alpha, cf, |r| sol.effort_at(r))?;
    Ok(sol)
}

/// `B* = 4 C^2 / T`: the smallest budget reaching proportion `α` by time `T`.
pub fn minimal_budget<F: Real>(time: F, alpha: F, cost: &MFCost<F>) -> Result<F> {
    if !(time > F::zero()) || !time.is_finite() {
        return Err(Error::InvalidParameter("time must be finite and positive".into()));
    }
    let sol = optimal_reward(&PrincipalProblem::new(alpha, F::one(), cost.clone())?)?;
    Ok(lit::<F>(4.0) * sol.constant_c * sol.constant_c / time)
}

/// True when `R` vanishes on `(α, 1]`.
fn supported_on<F: Real>(reward: &MFRewardScheme<F>, alpha: F) -> bool {
    let f = reward.function();
    f.right_limit(alpha) == F::zero() && f.eval(F::one()) == F::zero()
}

/// `T_α(R)`: the time at which a proportion `α` has arrived, `+∞` if never.
///
/// For schemes vanishing after `α` this is
/// `∫_0^α 2 c(r) / (sqrt(1 - r) f(r)) dr` with
/// `f(r) = R(r) sqrt(1 - r) - ∫_r^α R(s)/(2 sqrt(1 - s)) ds`; otherwise the
/// state equation is integrated up to rank `α`.
pub fn completion_time<F: Real>(reward: &MFRewardScheme<F>, alpha: F, cost: &MFCost<F>) -> Result<F> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidParameter("target proportion must lie strictly inside (0, 1)".into()));
    }
    if !supported_on(reward, alpha) {
        let ev = EquilibriumEvaluator::new(reward, cost)?;
        return Ok(match solve_state_ode(&ev, F::zero(), Horizon::Rank(alpha)) {
            Ok(t) => t.quantile(alpha),
            Err(_) => F::infinity(),
        });
    }
    let f = reward.function();
    if !(f.left_limit(alpha) > F::zero()) {
        return Ok(F::infinity());
    }
    let table = SqrtWeightTable::new(f.clone(), Quadrature::default())?;
    let cf = cost.function();
    let (one, two, half) = (F::one(), lit::<F>(2.0), lit::<F>(0.5));
    let integrand = |r: F| {
        let fr = half * table.deficit(f.eval(r), r);
        two * cf.eval(r) / ((one - r).sqrt() * fr)
    };
    let mut pts = knots_within(f, F::zero(), alpha);
    pts.extend(cf.knots().into_iter().filter(|k| *k > F::zero() && *k < alpha));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    pts.dedup();
    Quadrature::default().integrate_split(integrand, &pts)
}

/// `R · 1_{[0, α]}`.
pub fn truncate_after_alpha<F: Real>(reward: &MFRewardScheme<F>, alpha: F) -> Result<MFRewardScheme<F>> {
    let f = reward.function();
    if alpha >= F::one() {
        return Ok(reward.clone());
    }
    let mut bps: Vec<F> = f.breakpoints().iter().copied().filter(|b| *b < alpha).collect();
    let mut pieces: Vec<Piece<F>> = (0..bps.len()).map(|j| f.pieces()[j].clone()).collect();
    bps.push(alpha);
    bps.push(F::one());
    pieces.push(Piece::Constant(F::zero()));
    validate_reward(PiecewiseFn::new_forced(bps, pieces)?)
}

/// `Σ a_i (1 - r)^{q_i}` on one segment.
type Terms<F> = Vec<(F, F)>;

fn piece_terms<F: Real>(p: &Piece<F>, out: &mut Terms<F>) -> bool {
    match p {
        Piece::Constant(a) => out.push((*a, F::zero())),
        Piece::Power { scale, exponent } => out.push((*scale, *exponent)),
        Piece::Affine { intercept, slope } => {
            out.push((*intercept + *slope, F::zero()));
            out.push((-*slope, F::one()));
        }
        Piece::Tabulated { .. } => return false,
        Piece::Sum(parts) => {
            for q in parts {
                if !piece_terms(q, out) {
                    return false;
                }
            }
        }
    }
    true
}

/// Splits `f` on `[0, α]` into segments carrying power terms. Tabulated pieces
/// contribute one affine segment per node interval.
fn segments<F: Real>(f: &PiecewiseFn<F>, alpha: F) -> Option<Vec<(F, F, Terms<F>)>> {
    let one = F::one();
    let mut out = Vec::new();
    for (j, p) in f.pieces().iter().enumerate() {
        let (lo, hi) = f.interval(j);
        let (lo, hi) = (lo, hi.min(alpha));
        if hi <= lo {
            continue;
        }
        if let Piece::Tabulated { grid, .. } = p {
            let mut nodes = vec![lo];
            nodes.extend(grid.iter().copied().filter(|g| *g > lo && *g < hi));
            nodes.push(hi);
            for w in nodes.windows(2) {
                let (y0, y1) = (p.eval(w[0]), p.eval(w[1]));
                let s = (y1 - y0) / (w[1] - w[0]);
                out.push((w[0], w[1], vec![(y0 + s * (one - w[0]), F::zero()), (-s, one)]));
            }
        } else {
            let mut terms = Vec::new();
            if !piece_terms(p, &mut terms) {
                return None;
            }
            out.push((lo, hi, terms));
        }
    }
    Some(out)
}

/// Assembles per-segment output terms (plus a constant) into a function on
/// `[0, 1]` that vanishes after `α`.
fn assemble<F: Real>(alpha: F, segs: Vec<(F, F, F, Terms<F>)>) -> Result<PiecewiseFn<F>> {
    let mut bps = vec![F::zero()];
    let mut pieces = Vec::with_capacity(segs.len() + 1);
    for (_, hi, constant, terms) in segs {
        let mut parts = vec![Piece::Constant(constant)];
        parts.extend(terms.into_iter().filter(|(a, _)| *a != F::zero()).map(|(a, q)| Piece::power(a, q)));
        pieces.push(if parts.len() == 1 { parts.pop().expect("one part") } else { Piece::Sum(parts) });
        bps.push(hi);
    }
    if alpha < F::one() {
        bps.push(F::one());
        pieces.push(Piece::Constant(F::zero()));
    }
    PiecewiseFn::new_forced(bps, pieces)
}

/// `f(r) = R(r) sqrt(1 - r) - ∫_r^α R(s)/(2 sqrt(1 - s)) ds` on `[0, α]`, zero after.
///
/// Power, affine and tabulated pieces are transformed exactly; other inputs
/// are tabulated by quadrature.
pub fn f_transform<F: Real>(reward: &PiecewiseFn<F>, alpha: F) -> Result<PiecewiseFn<F>> {
    let (one, two, half) = (F::one(), lit::<F>(2.0), lit::<F>(0.5));
    let segs = segments(reward, alpha)
        .filter(|s| s.iter().all(|(_, _, t)| t.iter().all(|(_, q)| *q * two + one != F::zero())));
    let Some(segs) = segs else {
        let truncated = truncate_function(reward, alpha)?;
        let table = SqrtWeightTable::new(truncated.clone(), Quadrature::default())?;
        return tabulate_on_alpha(alpha, reward, |r| half * table.deficit(truncated.eval(r), r));
    };
    // K = ∫_hi^α R/sqrt(1 - s), accumulated from the right
    let mut k = F::zero();
    let mut out = Vec::with_capacity(segs.len());
    for (lo, hi, terms) in segs.into_iter().rev() {
        let (ul, uh) = (one - lo, one - hi);
        let mut constant = -half * k;
        let mut powers = Vec::with_capacity(terms.len());
        for (a, q) in terms {
            let e = q + half;
            constant = constant + a * uh.powf(e) / (two * q + one);
            powers.push((a * two * q / (two * q + one), e));
            k = k + a * (ul.powf(e) - uh.powf(e)) / e;
        }
        out.push((lo, hi, constant, powers));
    }
    out.reverse();
    assemble(alpha, out)
}

/// `R(r) = f(r)/sqrt(1 - r) + ∫_r^α f(s)/(2 (1 - s)^{3/2}) ds` on `[0, α]`, zero after.
pub fn f_inverse<F: Real>(f: &PiecewiseFn<F>, alpha: F) -> Result<PiecewiseFn<F>> {
    let (one, two, half) = (F::one(), lit::<F>(2.0), lit::<F>(0.5));
    let segs = segments(f, alpha).filter(|s| {
        s.iter().all(|(_, _, t)| t.iter().all(|(a, p)| *a == F::zero() || *p * two != one))
    });
    let Some(segs) = segs else {
        let quad = Quadrature::default();
        let grid = alpha_grid(alpha, f);
        let g = |s: F| f.eval(s) / (two * (one - s).powf(lit(1.5)));
        let mut tail = vec![F::zero(); grid.len()];
        for k in (0..grid.len() - 1).rev() {
            tail[k] = tail[k + 1] + quad.integrate(g, grid[k], grid[k + 1])?.value;
        }
        let values = grid.iter().zip(&tail).map(|(r, t)| f.eval(*r) / (one - *r).sqrt() + *t).collect();
        return PiecewiseFn::new_forced(
            vec![F::zero(), alpha, F::one()],
            vec![Piece::Tabulated { grid, values }, Piece::Constant(F::zero())],
        );
    };
    // K = ∫_hi^α f/(1 - s)^{3/2}
    let mut k = F::zero();
    let mut out = Vec::with_capacity(segs.len());
    for (lo, hi, terms) in segs.into_iter().rev() {
        let (ul, uh) = (one - lo, one - hi);
        let mut constant = half * k;
        let mut powers = Vec::with_capacity(terms.len());
        for (a, p) in terms {
            if a == F::zero() {
                continue;
            }
            let e = p - half;
            constant = constant - a * uh.powf(e) / (two * p - one);
            powers.push((a * two * p / (two * p - one), e));
            k = k + a * (ul.powf(e) - uh.powf(e)) / e;
        }
        out.push((lo, hi, constant, powers));
    }
    out.reverse();
    assemble(alpha, out)
}

fn truncate_function<F: Real>(f: &PiecewiseFn<F>, alpha: F) -> Result<PiecewiseFn<F>> {
    let mut bps: Vec<F> = f.breakpoints().iter().copied().filter(|b| *b < alpha).collect();
    let mut pieces: Vec<Piece<F>> = (0..bps.len()).map(|j| f.pieces()[j].clone()).collect();
    bps.push(alpha);
    if alpha < F::one() {
        bps.push(F::one());
        pieces.push(Piece::Constant(F::zero()));
    }
    PiecewiseFn::new_forced(bps, pieces)
}

/// Budget in `f` terms: `½ ∫_0^α (2 - r) f(r)/(1 - r)^{3/2} dr`.
pub fn budget_of_f<F: Real>(f: &PiecewiseFn<F>, alpha: F) -> Result<F> {
    let (one, two) = (F::one(), lit::<F>(2.0));
    let g = |r: F| (two - r) * f.eval(r) / (one - r).powf(lit(1.5));
    Ok(lit::<F>(0.5) * Quadrature::default().integrate_split(g, &knots_within(f, F::zero(), alpha))?)
}

/// Directional derivatives of the completion time at `f*` towards each challenger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrderReport<F> {
    pub derivatives: Vec<F>,
    pub min_derivative: F,
    /// True when every derivative is at least `-1e-8`.
    pub optimal: bool,
}

/// `φ'(0) = ∫_0^α -2 c(r)(f(r) - f*(r)) / (sqrt(1 - r) f*(r)^2) dr` for each
/// challenger `f`; challengers must respect the budget.
pub fn verify_first_order_optimality<F: Real>(
    sol: &PrincipalSolution<F>,
    challengers: &[PiecewiseFn<F>],
) -> Result<FirstOrderReport<F>> {
    let (one, two) = (F::one(), lit::<F>(2.0));
    let derivatives: Vec<F> = challengers
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let b = budget_of_f(f, sol.alpha)?;
            if !(b <= sol.budget * (one + lit(1e-8))) {
                return Err(Error::InfeasibleChallenger {
                    index: i,
                    reason: format!("budget {} exceeds {}", to_f64(b), to_f64(sol.budget)),
                });
            }
            let cf = sol.cost.function();
            let g = |r: F| {
                let fs = sol.f_star_at(r);
                -two * cf.eval(r) * (f.eval(r) - fs) / ((one - r).sqrt() * fs * fs)
            };
            let mut pts = knots_within(f, F::zero(), sol.alpha);
            pts.extend(cf.knots().into_iter().filter(|k| *k > F::zero() && *k < sol.alpha));
            pts.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
            pts.dedup();
            Quadrature::default().abs_tol(lit(1e-12)).integrate_split(g, &pts)
        })
        .collect::<Result<_>>()?;
    let min_derivative = derivatives.iter().copied().fold(F::infinity(), F::min);
    let optimal = derivatives.iter().all(|d| *d >= -lit::<F>(1e-8));
    Ok(FirstOrderReport { derivatives, min_derivative, optimal })
}

/// Random decreasing step schemes on `[0, α]` with strictly positive levels,
/// each scaled to spend exactly `budget`.
pub fn random_step_rewards<F: Real>(
    alpha: F,
    budget: F,
    count: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<MFRewardScheme<F>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = to_f64(alpha);
    (0..count)
        .map(|_| {
            let steps = rng.random_range(1..=max_steps.max(1));
            let mut cuts: Vec<f64> = (1..steps).map(|_| rng.random_range(0.02..0.98) * a).collect();
            cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            cuts.dedup();
            let mut levels: Vec<f64> = (0..=cuts.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            levels.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
            let mut grid = vec![0.0];
            grid.extend(cuts);
            grid.push(a);
            let spend: f64 = levels.iter().zip(grid.windows(2)).map(|(l, w)| l * (w[1] - w[0])).sum();
            let scale = to_f64(budget) / spend;
            let mut bps: Vec<F> = grid.iter().map(|x| lit::<F>(*x)).collect();
            *bps.last_mut().expect("non-empty") = alpha;
            bps.push(F::one());
            let mut lv: Vec<F> = levels.iter().map(|l| lit::<F>(l * scale)).collect();
            lv.push(F::zero());
            validate_reward(PiecewiseFn::steps(bps, lv)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_problem() -> PrincipalProblem<f64> {
        PrincipalProblem::new(0.5, 1.0, MFCost::constant(1.0).unwrap()).unwrap()
    }

    fn uniform_cutoff(b: f64, alpha: f64) -> MFRewardScheme<f64> {
        validate_reward(PiecewiseFn::steps(vec![0.0, alpha, 1.0], vec![b / alpha, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn cost_assumption_examples() {
        assert!(check_cost_assumption(&MFCost::constant(1.0f64).unwrap()).holds);
        let dec = MFCost::new(PiecewiseFn::single(Piece::affine(1.0f64, -0.5)).unwrap()).unwrap();
        assert!(check_cost_assumption(&dec).holds);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let values = grid.iter().map(|r| r.exp()).collect();
        let exp = MFCost::new(PiecewiseFn::single(Piece::Tabulated { grid, values }).unwrap()).unwrap();
        let check = check_cost_assumption(&exp);
        assert!(!check.holds);
        let (r1, r2) = check.witness.unwrap();
        assert!(r1 < r2);
        let m = |r: f64| r.exp() * (1.0 - r) / (2.0 - r);
        assert!(m(r2) > m(r1));
    }

    #[test]
    fn unit_optimum() {
        let sol = optimal_reward(&unit_problem()).unwrap();
        assert_relative_eq!(sol.c_prime().unwrap(), 0.4543109387425518, epsilon = 1e-12);
        assert_relative_eq!(sol.minimal_time, 0.825593716244554, epsilon = 1e-12);
        assert_relative_eq!(sol.reward_at(0.0), 2.13939165, epsilon = 1e-7);
        assert_relative_eq!(sol.reward_at(0.5), 1.79721973, epsilon = 1e-7);
        assert_eq!(sol.reward.eval(0.5000001), 0.0);
        assert_relative_eq!(sol.effort_at(0.0), 0.7782189695, epsilon = 1e-9);
        assert_relative_eq!(sol.effort_at(0.5), 0.8986098631, epsilon = 1e-9);
        assert_relative_eq!(sol.reward.budget(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn budget_scaling() {
        let sol1 = optimal_reward(&unit_problem()).unwrap();
        let p2 = PrincipalProblem::new(0.5, 2.0, MFCost::constant(1.0).unwrap()).unwrap();
        let sol2 = optimal_reward(&p2).unwrap();
        assert_relative_eq!(sol2.minimal_time, sol1.minimal_time / 2.0, max_relative = 1e-14);
        for &r in &[0.0, 0.2, 0.5] {
            assert_relative_eq!(sol2.reward_at(r), 2.0 * sol1.reward_at(r), max_relative = 1e-14);
        }
    }

    #[test]
    fn minimal_budget_inverts_time() {
        let c = MFCost::constant(1.0).unwrap();
        let t = 0.825593716244554;
        assert_relative_eq!(minimal_budget(t, 0.5, &c).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(minimal_budget(2.0 * t, 0.5, &c).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(minimal_budget(t / 2.0, 0.5, &c).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn completion_time_examples() {
        let c = MFCost::constant(1.0).unwrap();
        let t = completion_time(&uniform_cutoff(1.0, 0.5), 0.5, &c).unwrap();
        assert_relative_eq!(t, 0.828427, epsilon = 1e-6);
        let sol = optimal_reward(&unit_problem()).unwrap();
        let t_star = completion_time(&sol.reward, 0.5, &c).unwrap();
        assert_relative_eq!(t_star, sol.minimal_time, max_relative = 1e-6);
        assert!(t_star < t);
        let dead = validate_reward(PiecewiseFn::steps(vec![0.0, 0.3, 1.0], vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(completion_time(&dead, 0.4, &c).unwrap().is_infinite());
    }

    #[test]
    fn truncation_examples() {
        let c = MFCost::constant(1.0).unwrap();
        let flat = validate_reward(PiecewiseFn::<f64>::constant(1.0)).unwrap();
        assert!(completion_time(&flat, 0.5, &c).unwrap().is_infinite());
        let cut = truncate_after_alpha(&flat, 0.5).unwrap();
        assert!(completion_time(&cut, 0.5, &c).unwrap().is_finite());
        let again = truncate_after_alpha(&cut, 0.5).unwrap();
        assert_eq!(again, cut);
        let power = validate_reward(PiecewiseFn::single(Piece::power(2.0, 1.0)).unwrap()).unwrap();
        let full = completion_time(&power, 0.5, &c).unwrap();
        assert_relative_eq!(full, 1.5, max_relative = 1e-6);
        let short = completion_time(&truncate_after_alpha(&power, 0.5).unwrap(), 0.5, &c).unwrap();
        assert!(short < full);
    }

    #[test]
    fn f_round_trips() {
        let sol = optimal_reward(&unit_problem()).unwrap();
        let back = f_inverse(&sol.f_star().unwrap(), 0.5).unwrap();
        for i in 0..=100 {
            let r = i as f64 / 100.0 * 0.5;
            assert_relative_eq!(back.eval(r), sol.reward_at(r), epsilon = 1e-7);
        }
        let zero = PiecewiseFn::constant(0.0);
        let f = f_transform(&zero, 0.5).unwrap();
        assert_eq!(f.eval(0.2), 0.0);
        assert_eq!(f_inverse(&f, 0.5).unwrap().eval(0.2), 0.0);
        let stairs = random_step_rewards(0.5, 1.0, 5, 6, 7).unwrap();
        for s in &stairs {
            let f = f_transform(s.function(), 0.5).unwrap();
            let r = f_inverse(&f, 0.5).unwrap();
            let knots = s.function().knots();
            for i in 0..=400 {
                let x = i as f64 / 400.0 * 0.5;
                if knots.iter().any(|k| (k - x).abs() < 1e-9) {
                    continue;
                }
                assert_relative_eq!(r.eval(x), s.eval(x), epsilon = 1e-7);
            }
            assert_relative_eq!(budget_of_f(&f, 0.5).unwrap(), 1.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn first_order_certificate() {
        let sol = optimal_reward(&unit_problem()).unwrap();
        let mut fs = vec![sol.f_star().unwrap(), f_transform(uniform_cutoff(1.0, 0.5).function(), 0.5).unwrap()];
        for s in random_step_rewards(0.5, 1.0, 20, 8, 11).unwrap() {
            fs.push(f_transform(s.function(), 0.5).unwrap());
        }
        let report = verify_first_order_optimality(&sol, &fs).unwrap();
        assert!(report.derivatives[0].abs() < 1e-8);
        assert!(report.optimal, "{:?}", report.derivatives);
        let greedy = f_transform(uniform_cutoff(2.0, 0.5).function(), 0.5).unwrap();
        assert!(matches!(
            verify_first_order_optimality(&sol, &[greedy]),
            Err(Error::InfeasibleChallenger { index: 0, .. })
        ));
    }
}
