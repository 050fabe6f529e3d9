//! The N-player principal problem: the reward vector with total `N B` that
//! minimizes the expected time until `n0` players have arrived.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nplayer::{expected_completion, solve_recursion, NPlayerSpec};
use crate::scalar::{count, lit, to_f64, Real};

/// Players, target head count, per-capita budget and costs `c_0..c_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPrincipalProblem<F> {
    pub players: usize,
    pub n0: usize,
    pub budget: F,
    pub costs: Vec<F>,
}

impl<F: Real> NPrincipalProblem<F> {
    pub fn new(players: usize, n0: usize, budget: F, costs: Vec<F>) -> Result<Self> {
        if players < 2 {
            return Err(Error::InvalidSpec("need at least two players".into()));
        }
        if n0 == 0 || n0 >= players {
            return Err(Error::InvalidParameter(format!("head count {} must lie in 1..{}", n0, players)));
        }
        if !(budget >= F::zero()) || !budget.is_finite() {
            return Err(Error::InvalidParameter("budget must be finite and non-negative".into()));
        }
        if costs.len() != players {
            return Err(Error::InvalidSpec(format!("{} players but {} costs", players, costs.len())));
        }
        if let Some(i) = costs.iter().position(|c| !(*c > F::zero()) || !c.is_finite()) {
            return Err(Error::InvalidSpec(format!("cost c_{} must be finite and positive", i)));
        }
        Ok(Self { players, n0, budget, costs })
    }

    pub fn with_constant_cost(players: usize, n0: usize, budget: F, c: F) -> Result<Self> {
        Self::new(players, n0, budget, vec![c; players])
    }

    /// Expected completion time of an arbitrary reward vector (`None` = never).
    pub fn expected_time(&self, rewards: &[F]) -> Result<Option<F>> {
        let spec = NPlayerSpec::new(rewards.to_vec(), self.costs.clone())?;
        expected_completion(&solve_recursion(&spec), self.n0)
    }

    /// Admissibility bound on `c_n` given `c_{n-1}`.
    pub fn cost_bound(&self, n: usize) -> F {
        let big_n = self.players;
        let f = |x: usize| count::<F>(x);
        let num = f(2 * big_n - 2 * n + 1) * f(2 * big_n - 2 * n + 1) * f(2 * big_n - n - 1);
        let den = f(4) * f(big_n - n - 1) * f(big_n - n + 1) * f(2 * big_n - n);
        self.costs[n - 1] * num / den
    }

    /// Weights `w_n = (2N - n - 1)/(2(N - n - 1))` of the budget in gap variables.
    pub fn budget_weight(&self, n: usize) -> F {
        let big_n = self.players;
        count::<F>(2 * big_n - n - 1) / count::<F>(2 * (big_n - n - 1))
    }
}

/// Outcome of [`check_cost_assumption_n`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostCheckN {
    pub holds: bool,
    /// First index `n` with `c_n` above its bound.
    pub witness: Option<usize>,
}

/// Checks `c_n ≤ c_{n-1} (2N-2n+1)^2 (2N-n-1) / (4 (N-n-1)(N-n+1)(2N-n))` for `0 < n < n0`.
pub fn check_cost_assumption_n<F: Real>(p: &NPrincipalProblem<F>) -> CostCheckN {
    let witness = (1..p.n0).find(|&n| p.costs[n] > p.cost_bound(n));
    CostCheckN { holds: witness.is_none(), witness }
}

/// Closed-form optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPrincipalSolution<F> {
    /// `R*_1..R*_N`.
    pub rewards: Vec<F>,
    /// `ET* = 4 C^2 / B`.
    pub expected_time: F,
    pub constant_c: F,
    /// `y_0..y_{n0}`.
    pub y: Vec<F>,
    /// Gap variables `x_n = R*_{n+1} - v_n = B y_n / C`, `n < n0`.
    pub x: Vec<F>,
    /// Budget multiplier with `C = B sqrt(N θ) / 2`.
    pub theta: F,
    /// `λ*_0..λ*_{N-1}`.
    pub efforts: Vec<F>,
}

/// Evaluates the optimal reward vector in closed form.
pub fn optimal_reward_n<F: Real>(p: &NPrincipalProblem<F>) -> Result<NPrincipalSolution<F>> {
    if let Some(n) = check_cost_assumption_n(p).witness {
        return Err(Error::CostAssumptionViolatedN {
            index: n,
            cost: to_f64(p.costs[n]),
            bound: to_f64(p.cost_bound(n)),
        });
    }
    closed_form_n(p)
}

/// The closed-form expressions without the cost check; the rewards are
/// non-increasing only when the cost assumption holds.
pub fn closed_form_n<F: Real>(p: &NPrincipalProblem<F>) -> Result<NPrincipalSolution<F>> {
    if !(p.budget > F::zero()) {
        return Err(Error::InvalidParameter("the closed form needs a positive budget".into()));
    }
    let (big_n, n0) = (p.players, p.n0);
    let f = |x: usize| count::<F>(x);
    let y: Vec<F> = (0..=n0)
        .map(|n| {
            if n == n0 {
                F::zero()
            } else {
                (p.costs[n] * f(big_n) * f(big_n - n - 1) / (f(big_n - n) * f(2 * big_n - n - 1))).sqrt()
            }
        })
        .collect();
    let c: F = (0..n0)
        .map(|n| (p.costs[n] * f(2 * big_n - n - 1) / (f(big_n - n) * f(big_n - n - 1))).sqrt())
        .sum::<F>()
        / (lit::<F>(2.0) * f(big_n).sqrt());
    let scale = p.budget / c;
    let half: F = lit(0.5);
    let rewards: Vec<F> = (1..=big_n)
        .map(|n| {
            if n > n0 {
                return F::zero();
            }
            let tail: F = (n - 1..n0).map(|k| y[k] / f(big_n - k - 1)).sum();
            scale * (y[n - 1] + half * tail)
        })
        .collect();
    let efforts = (0..big_n)
        .map(|n| {
            if n >= n0 {
                return F::zero();
            }
            scale * half
                * (f(big_n) * f(big_n - n - 1) / (p.costs[n] * f(big_n - n) * f(2 * big_n - n - 1))).sqrt()
        })
        .collect();
    let x = (0..n0).map(|n| scale * y[n]).collect();
    let theta = (lit::<F>(2.0) * c / p.budget).powi(2) / f(big_n);
    Ok(NPrincipalSolution {
        rewards,
        expected_time: lit::<F>(4.0) * c * c / p.budget,
        constant_c: c,
        y,
        x,
        theta,
        efforts,
    })
}

/// Maps gap variables `x_0..x_{n0-1}` to rewards via
/// `R_{n+1} = R_{n+2} + (1 + 2(N-n-1))/(2(N-n-1)) x_n - x_{n+1}`, `x_{n0} = 0`.
pub fn rewards_from_gaps<F: Real>(players: usize, x: &[F]) -> Vec<F> {
    let n0 = x.len();
    let mut r = vec![F::zero(); players + 1];
    for n in (0..n0).rev() {
        let k = count::<F>(players - n - 1);
        let next = if n + 1 < n0 { x[n + 1] } else { F::zero() };
        r[n] = r[n + 1] + (F::one() + lit::<F>(2.0) * k) / (lit::<F>(2.0) * k) * x[n] - next;
    }
    r.truncate(players);
    r
}

/// How the oracle found its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleMethod {
    /// Multiplicative updates in gap variables; the mapped rewards were monotone.
    GapSpace,
    /// Projected gradient over monotone non-negative rewards.
    ProjectedGradient,
    /// No budget: nothing to optimize.
    Trivial,
}

/// Best reward vector found by direct minimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult<F> {
    pub rewards: Vec<F>,
    /// `+∞` when the best iterate never finishes.
    pub expected_time: F,
    pub method: OracleMethod,
    pub iterations: usize,
}

fn objective<F: Real>(p: &NPrincipalProblem<F>, rewards: &[F]) -> F {
    match p.expected_time(rewards) {
        Ok(Some(t)) => t,
        _ => F::infinity(),
    }
}

/// Minimizes the expected completion time numerically over
/// `{R_1 ≥ … ≥ R_{n0} ≥ 0 = R_{n0+1} = …, Σ R ≤ N B}`.
///
/// Gap variables are optimized on the budget simplex with damped
/// multiplicative updates driven by finite-difference gradients of the
/// black-box objective. If the mapped rewards are not monotone, projected
/// gradient descent on the rewards (isotonic projection) takes over.
pub fn brute_force_oracle<F: Real>(p: &NPrincipalProblem<F>) -> OracleResult<F> {
    let (big_n, n0) = (p.players, p.n0);
    let total = p.budget * count::<F>(big_n);
    if !(total > F::zero()) {
        return OracleResult {
            rewards: vec![F::zero(); big_n],
            expected_time: F::infinity(),
            method: OracleMethod::Trivial,
            iterations: 0,
        };
    }
    let w: Vec<F> = (0..n0).map(|n| p.budget_weight(n)).collect();
    // z_n = w_n x_n / (N B) lives on the simplex
    let to_rewards = |z: &[F]| {
        let x: Vec<F> = z.iter().zip(&w).map(|(zi, wi)| *zi * total / *wi).collect();
        rewards_from_gaps(big_n, &x)
    };
    let obj_z = |z: &[F]| objective(p, &to_rewards(z));
    let mut z = vec![F::one() / count::<F>(n0); n0];
    let mut iterations = 0;
    let h: F = lit(1e-7);
    for it in 0..2000 {
        iterations = it + 1;
        let base = obj_z(&z);
        let grad: Vec<F> = (0..n0)
            .map(|i| {
                let step = h * z[i];
                let mut up = z.clone();
                let mut dn = z.clone();
                up[i] = up[i] + step;
                dn[i] = dn[i] - step;
                (obj_z(&up) - obj_z(&dn)) / (lit::<F>(2.0) * step)
            })
            .collect();
        // at the optimum -∂J/∂z_n is the same for every n
        let mut next: Vec<F> = z.iter().zip(&grad).map(|(zi, g)| *zi * (-*g).max(F::min_positive_value()).sqrt()).collect();
        let s: F = next.iter().copied().sum();
        next.iter_mut().for_each(|v| *v = *v / s);
        let trial = obj_z(&next);
        let change = next.iter().zip(&z).map(|(a, b)| (*a - *b).abs()).fold(F::zero(), F::max);
        if trial <= base {
            z = next;
        } else {
            // damp: halfway step in log space
            z = z.iter().zip(&next).map(|(a, b)| (*a * *b).sqrt()).collect();
            let s: F = z.iter().copied().sum();
            z.iter_mut().for_each(|v| *v = *v / s);
        }
        if change < lit(1e-12) {
            break;
        }
    }
    let rewards = to_rewards(&z);
    let monotone = rewards.windows(2).all(|r| r[1] <= r[0] * (F::one() + lit(1e-12)) + lit(1e-15))
        && rewards.iter().all(|r| *r >= F::zero());
    if monotone {
        let expected_time = objective(p, &rewards);
        return OracleResult { rewards, expected_time, method: OracleMethod::GapSpace, iterations };
    }
    projected_gradient(p, iterations)
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
fn isotonic_decreasing<F: Real>(y: &[F]) -> Vec<F> {
    let mut blocks: Vec<(F, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b2, n2) = blocks[blocks.len() - 1];
            let (b1, n1) = blocks[blocks.len() - 2];
            if b2 <= b1 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            let last = blocks.len() - 1;
            blocks[last] = ((b1 * count::<F>(n1) + b2 * count::<F>(n2)) / count::<F>(n), n);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Euclidean projection onto `{R non-increasing, R ≥ 0, Σ R = total}`.
fn project<F: Real>(y: &[F], total: F) -> Vec<F> {
    let shifted = |mu: F| -> Vec<F> {
        let s: Vec<F> = y.iter().map(|v| *v - mu).collect();
        isotonic_decreasing(&s).into_iter().map(|v| v.max(F::zero())).collect()
    };
    let sum = |v: &[F]| v.iter().copied().sum::<F>();
    let spread = y.iter().map(|v| v.abs()).fold(F::zero(), F::max) + total;
    let (mut lo, mut hi) = (-spread, spread);
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if sum(&shifted(mid)) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shifted((lo + hi) * lit(0.5))
}

fn projected_gradient<F: Real>(p: &NPrincipalProblem<F>, start_iterations: usize) -> OracleResult<F> {
    let (big_n, n0) = (p.players, p.n0);
    let total = p.budget * count::<F>(big_n);
    let full = |head: &[F]| {
        let mut r = head.to_vec();
        r.resize(big_n, F::zero());
        r
    };
    let obj = |head: &[F]| objective(p, &full(head));
    // strictly decreasing start keeps every rate positive
    let weights: Vec<F> = (0..n0).map(|i| count::<F>(n0 - i)).collect();
    let ws: F = weights.iter().copied().sum();
    let mut r: Vec<F> = weights.iter().map(|v| *v * total / ws).collect();
    let mut val = obj(&r);
    let mut step = total;
    let mut iterations = start_iterations;
    let h: F = lit(1e-7);
    for _ in 0..20000 {
        iterations += 1;
        let grad: Vec<F> = (0..n0)
            .map(|i| {
                let d = h * total;
                let mut up = r.clone();
                let mut dn = r.clone();
                up[i] = up[i] + d;
                dn[i] = dn[i] - d;
                (obj(&up) - obj(&dn)) / (lit::<F>(2.0) * d)
            })
            .collect();
        let mut improved = false;
        while step > total * lit(1e-16) {
            let y: Vec<F> = r.iter().zip(&grad).map(|(a, g)| *a - step * *g).collect();
            let cand = project(&y, total);
            let v = obj(&cand);
            if v < val {
                let moved = cand.iter().zip(&r).map(|(a, b)| (*a - *b).abs()).fold(F::zero(), F::max);
                r = cand;
                val = v;
                improved = moved > total * lit(1e-14);
                step = step * lit(1.5);
                break;
            }
            step = step * lit(0.5);
        }
        if !improved {
            break;
        }
    }
    OracleResult { rewards: full(&r), expected_time: val, method: OracleMethod::ProjectedGradient, iterations }
}
