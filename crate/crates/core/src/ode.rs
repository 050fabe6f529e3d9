//! The state equation `ρ'(t) = λ(ρ)(1 - ρ)` and its sampled solution.
//!
//! The right-hand side depends on the state only, so the arrival time of a
//! rank is the integral `t(ρ) = ∫ dr / (λ(r)(1 - r))`. The solver marches in
//! rank with a fourth-order rule (the autonomous RK4 step reduces to
//! Simpson's rule), step doubling for error control and Richardson
//! extrapolation. Steps never cross a knot of the effort.

use serde::Serialize;

use crate::error::Error;
use crate::piecewise::RankFn;
use crate::scalar::{lit, to_f64, Real};

/// Where to stop integrating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon<F> {
    /// Integrate up to this time.
    Time(F),
    /// Integrate until the state reaches this rank.
    Rank(F),
}

impl<F: Real> Horizon<F> {
    /// Rank horizon just below 1, resolvable at the working precision.
    pub fn near_one() -> Self {
        let gap = lit::<F>(1e-9).max(F::epsilon() * lit(100.0));
        Horizon::Rank(F::one() - gap)
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Ending {
    /// Effort vanished at the terminal state; the state stays there forever.
    Frozen,
    /// Effort decays to zero continuously; the terminal state is approached but never hit.
    Asymptotic,
    /// The requested horizon was reached with positive effort.
    Horizon,
}

/// Sampled equilibrium state `ρ(t)`.
///
/// Besides the samples, the one-sided rates `ρ'` at each sample are stored so
/// that lookups use cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<F> {
    times: Vec<F>,
    states: Vec<F>,
    rate_in: Vec<F>,
    rate_out: Vec<F>,
    terminal_state: F,
    frozen_after: Option<F>,
    ending: Ending,
}

impl<F: Real> Trajectory<F> {
    /// A trajectory that never leaves `r0`.
    pub fn constant(r0: F) -> Self {
        Self {
            times: vec![F::zero()],
            states: vec![r0],
            rate_in: vec![F::zero()],
            rate_out: vec![F::zero()],
            terminal_state: r0,
            frozen_after: Some(F::zero()),
            ending: Ending::Frozen,
        }
    }

    /// Builds a trajectory from closed-form samples and rates.
    pub fn from_samples(
        times: Vec<F>,
        states: Vec<F>,
        rate_in: Vec<F>,
        rate_out: Vec<F>,
        terminal_state: F,
        frozen_after: Option<F>,
        ending: Ending,
    ) -> Self {
        Self { times, states, rate_in, rate_out, terminal_state, frozen_after, ending }
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn states(&self) -> &[F] {
        &self.states
    }

    /// One-sided rates `ρ'(t_i^-)`.
    pub fn rates_in(&self) -> &[F] {
        &self.rate_in
    }

    /// One-sided rates `ρ'(t_i^+)`.
    pub fn rates_out(&self) -> &[F] {
        &self.rate_out
    }

    pub fn initial_state(&self) -> F {
        self.states[0]
    }

    /// `ρ(∞)` when the trajectory froze or settled; otherwise the last sampled state.
    pub fn terminal_state(&self) -> F {
        self.terminal_state
    }

    pub fn frozen_after(&self) -> Option<F> {
        self.frozen_after
    }

    pub fn ending(&self) -> Ending {
        self.ending
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Multiplies every time (and divides every rate) by `kappa`.
    pub fn dilate(&self, kappa: F) -> Self {
        Self {
            times: self.times.iter().map(|t| *t * kappa).collect(),
            states: self.states.clone(),
            rate_in: self.rate_in.iter().map(|r| *r / kappa).collect(),
            rate_out: self.rate_out.iter().map(|r| *r / kappa).collect(),
            terminal_state: self.terminal_state,
            frozen_after: self.frozen_after.map(|t| t * kappa),
            ending: self.ending,
        }
    }

    fn hermite(&self, i: usize, t: F) -> F {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (self.states[i], self.states[i + 1]);
        let dt = t1 - t0;
        if dt <= F::zero() {
            return y1;
        }
        let (mut m0, mut m1) = (self.rate_out[i], self.rate_in[i + 1]);
        let delta = (y1 - y0) / dt;
        if delta <= F::zero() {
            return y0;
        }
        // Fritsch–Carlson limiter keeps the cubic monotone
        let (a, b) = (m0 / delta, m1 / delta);
        let norm = a * a + b * b;
        let nine: F = lit(9.0);
        if norm > nine {
            let tau = lit::<F>(3.0) / norm.sqrt();
            m0 = m0 * tau;
            m1 = m1 * tau;
        }
        let s = (t - t0) / dt;
        let s2 = s * s;
        let s3 = s2 * s;
        let two: F = lit(2.0);
        let three: F = lit(3.0);
        let h00 = two * s3 - three * s2 + F::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * dt * m0 + h01 * y1 + h11 * dt * m1).max(y0).min(y1)
    }

    /// Cubic Hermite interpolation of `t(ρ)` on `[states[i], states[i+1]]`
    /// with slopes `1 / ρ'`; `None` when a rate vanishes.
    fn inverse_hermite(&self, i: usize, beta: F) -> Option<F> {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (self.states[i], self.states[i + 1]);
        let (r0, r1) = (self.rate_out[i], self.rate_in[i + 1]);
        let h = y1 - y0;
        if h <= F::zero() || r0 <= F::zero() || r1 <= F::zero() || !(t1 - t0).is_finite() {
            return None;
        }
        let delta = (t1 - t0) / h;
        let (mut m0, mut m1) = (F::one() / r0, F::one() / r1);
        let (a, b) = (m0 / delta, m1 / delta);
        let norm = a * a + b * b;
        let nine: F = lit(9.0);
        if norm > nine {
            let tau = lit::<F>(3.0) / norm.sqrt();
            m0 = m0 * tau;
            m1 = m1 * tau;
        }
        let s = (beta - y0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two: F = lit(2.0);
        let three: F = lit(3.0);
        let h00 = two * s3 - three * s2 + F::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        let t = h00 * t0 + h10 * h * m0 + h01 * t1 + h11 * h * m1;
        t.is_finite().then(|| t.max(t0).min(t1))
    }

    /// `ρ(t)`. Beyond the last sample the last state is returned.
    pub fn state_at(&self, t: F) -> F {
        if t <= self.times[0] {
            return self.states[0];
        }
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return match self.ending {
                Ending::Frozen => self.terminal_state,
                _ => self.states[n - 1],
            };
        }
        let i = self.times.partition_point(|x| *x <= t) - 1;
        self.hermite(i, t)
    }

    /// `T_β = inf{t : ρ(t) ≥ β}`, or `+∞` if the trajectory never gets there.
    pub fn quantile(&self, beta: F) -> F {
        if beta <= self.states[0] {
            return F::zero();
        }
        let i = self.states.partition_point(|s| *s < beta);
        if i == self.states.len() {
            return F::infinity();
        }
        if self.states[i] == beta {
            return self.times[i];
        }
        if let Some(t) = self.inverse_hermite(i - 1, beta) {
            return t;
        }
        let (mut lo, mut hi) = (self.times[i - 1], self.times[i]);
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.hermite(i - 1, mid) < beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Integration stopped before the requested rank: the effort vanished or
/// decayed to zero first. Carries the trajectory that was computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Unreachable<F> {
    pub trajectory: Trajectory<F>,
    pub target: F,
}

impl<F: Real> From<Unreachable<F>> for Error {
    fn from(u: Unreachable<F>) -> Self {
        Error::HorizonUnreachable { terminal: to_f64(u.trajectory.terminal_state), target: to_f64(u.target) }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<F> {
    /// Relative local error per rank step.
    pub tol: F,
    /// Largest rank step.
    pub max_step: F,
    /// Largest rank step as a fraction of the remaining mass `1 - ρ`.
    pub max_step_fraction: F,
    /// Give up (as asymptotic) once the elapsed time exceeds this.
    pub max_time: F,
}

impl<F: Real> Default for OdeOptions<F> {
    fn default() -> Self {
        Self {
            tol: F::default_ode_tol(),
            max_step: lit(0.01),
            max_step_fraction: lit(0.02),
            max_time: F::max_value().sqrt(),
        }
    }
}

/// Solves `ρ' = λ(ρ)(1 - ρ)`, `ρ(0) = r0` with default options.
pub fn solve_state_ode<F: Real, E: RankFn<F> + ?Sized>(
    effort: &E,
    r0: F,
    horizon: Horizon<F>,
) -> std::result::Result<Trajectory<F>, Unreachable<F>> {
    solve_state_ode_with(effort, r0, horizon, &OdeOptions::default())
}

struct Step<F> {
    dt: F,
    err: F,
}

fn simpson_step<F: Real, G: Fn(F, u8) -> F>(g: &G, a: F, h: F) -> Option<Step<F>> {
    // endpoint flags: 0 = right limit at a, 1 = interior, 2 = left limit at b
    let quarter = h * lit(0.25);
    let g0 = g(a, 0);
    let g1 = g(a + quarter, 1);
    let g2 = g(a + quarter * lit(2.0), 1);
    let g3 = g(a + quarter * lit(3.0), 1);
    let g4 = g(a + h, 2);
    if [g0, g1, g2, g3, g4].iter().any(|v| !v.is_finite() || *v <= F::zero()) {
        return None;
    }
    let s1 = h / lit(6.0) * (g0 + lit::<F>(4.0) * g2 + g4);
    let s2 = h / lit(12.0) * (g0 + lit::<F>(4.0) * (g1 + g3) + lit::<F>(2.0) * g2 + g4);
    Some(Step { dt: s2 + (s2 - s1) / lit(15.0), err: (s2 - s1).abs() / lit(15.0) })
}

/// Solves the state equation with explicit options.
///
/// With a rank horizon the run fails with [`Unreachable`] if the effort
/// vanishes first; with a time horizon a frozen trajectory is extended as a
/// constant up to the horizon.
pub fn solve_state_ode_with<F: Real, E: RankFn<F> + ?Sized>(
    effort: &E,
    r0: F,
    horizon: Horizon<F>,
    opts: &OdeOptions<F>,
) -> std::result::Result<Trajectory<F>, Unreachable<F>> {
    let one = F::one();
    let lam = |r: F| effort.value(r).max(F::zero());
    let lam_right = |r: F| effort.value_right(r).max(F::zero());
    let g = |r: F, side: u8| {
        let l = match side {
            0 => lam_right(r),
            _ => lam(r),
        };
        one / (l * (one - r))
    };

    let stop_rank = match horizon {
        Horizon::Rank(b) => b.min(one),
        Horizon::Time(_) => one,
    };
    let stop_time = match horizon {
        Horizon::Time(t) => t,
        Horizon::Rank(_) => F::infinity(),
    };
    let mut knots: Vec<F> = effort.knots().into_iter().filter(|k| *k > r0 && *k < stop_rank).collect();
    knots.push(stop_rank);

    let mut traj = Trajectory {
        times: vec![F::zero()],
        states: vec![r0],
        rate_in: vec![lam(r0) * (one - r0)],
        rate_out: vec![lam_right(r0) * (one - r0)],
        terminal_state: r0,
        frozen_after: None,
        ending: Ending::Horizon,
    };
    if r0 >= stop_rank || stop_time <= F::zero() {
        return Ok(traj);
    }

    let mut rho = r0;
    let mut t = F::zero();
    let mut next = 0usize;
    let mut h = opts.max_step;
    let h_floor = F::epsilon() * lit(16.0);

    loop {
        while next < knots.len() && knots[next] <= rho {
            next += 1;
        }
        if lam_right(rho) <= F::zero() {
            let last = traj.rate_out.len() - 1;
            traj.rate_out[last] = F::zero();
            traj.terminal_state = rho;
            traj.frozen_after = Some(t);
            traj.ending = Ending::Frozen;
            if stop_time.is_finite() && stop_time > t {
                traj.times.push(stop_time);
                traj.states.push(rho);
                traj.rate_in.push(F::zero());
                traj.rate_out.push(F::zero());
                return Ok(traj);
            }
            return match horizon {
                Horizon::Rank(target) => Err(Unreachable { trajectory: traj, target }),
                Horizon::Time(_) => Ok(traj),
            };
        }
        if next >= knots.len() {
            // reached the rank horizon
            return Ok(traj);
        }
        let target = knots[next];
        let limit = opts.max_step.min(opts.max_step_fraction * (one - rho));
        h = h.min(limit);
        let mut hit_knot = false;
        if rho + h >= target {
            h = target - rho;
            hit_knot = true;
        }
        let min_h = h_floor.max((one - rho) * lit(1e-12));
        let step = simpson_step(&g, rho, h);
        let accepted = match step {
            Some(ref s) => s.err <= opts.tol * s.dt.abs(),
            None => false,
        };
        if !accepted {
            if h <= min_h {
                traj.terminal_state = rho;
                traj.ending = Ending::Asymptotic;
                return match horizon {
                    Horizon::Rank(target) => Err(Unreachable { trajectory: traj, target }),
                    Horizon::Time(_) => Ok(traj),
                };
            }
            h = h * lit(0.5);
            continue;
        }
        let step = step.expect("accepted step exists");
        let b = if hit_knot { target } else { rho + h };

        if t + step.dt >= stop_time {
            // locate the rank reached exactly at the time horizon
            let need = stop_time - t;
            let (mut lo, mut hi) = (rho, b);
            for _ in 0..200 {
                let mid = (lo + hi) * lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                let part = simpson_step(&g, rho, mid - rho).map(|s| s.dt).unwrap_or(F::infinity());
                if part < need {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r_end = (lo + hi) * lit(0.5);
            let rate = lam(r_end) * (one - r_end);
            traj.times.push(stop_time);
            traj.states.push(r_end);
            traj.rate_in.push(rate);
            traj.rate_out.push(rate);
            traj.terminal_state = r_end;
            return Ok(traj);
        }

        t = t + step.dt;
        rho = b;
        traj.times.push(t);
        traj.states.push(rho);
        traj.rate_in.push(lam(rho) * (one - rho));
        traj.rate_out.push(lam_right(rho) * (one - rho));
        traj.terminal_state = rho;
        if t > opts.max_time {
            traj.ending = Ending::Asymptotic;
            return match horizon {
                Horizon::Rank(target) => Err(Unreachable { trajectory: traj, target }),
                Horizon::Time(_) => Ok(traj),
            };
        }

        let ratio = match step.err > F::zero() {
            true => lit::<F>(0.9) * (opts.tol * step.dt / step.err).powf(lit(0.2)),
            false => lit(2.0),
        };
        h = h * ratio.min(lit(2.0)).max(lit(0.2));
        if hit_knot {
            h = h.max(opts.max_step * lit(0.05));
        }
    }
}
