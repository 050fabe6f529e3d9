//! The N-player rank competition and its arrival-process simulator.
//!
//! With `n` players already home, each remaining player exerts effort
//! `λ*_n`, so the next arrival comes after an exponential time with rate
//! `(N - n) λ*_n`.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Field, Real};

/// Rewards `R_1..R_N` (index `n - 1` holds `R_n`; `R_N` also goes to players
/// who never arrive) and costs `c_0..c_{N-1}` (index `n` holds the cost with
/// `n` players home).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPlayerSpec<S> {
    rewards: Vec<S>,
    costs: Vec<S>,
}

impl<S: Field> NPlayerSpec<S> {
    pub fn new(rewards: Vec<S>, costs: Vec<S>) -> Result<Self> {
        let n = rewards.len();
        if n == 0 {
            return Err(Error::InvalidSpec("need at least one player".into()));
        }
        if costs.len() != n {
            return Err(Error::InvalidSpec(format!("{} rewards but {} costs", n, costs.len())));
        }
        if let Some(i) = (1..n).find(|&i| rewards[i] > rewards[i - 1]) {
            return Err(Error::InvalidSpec(format!("rewards increase at rank {}", i + 1)));
        }
        if rewards[n - 1] < S::zero() {
            return Err(Error::InvalidSpec("rewards must be non-negative".into()));
        }
        if let Some(i) = costs.iter().position(|c| !(*c > S::zero())) {
            return Err(Error::InvalidSpec(format!("cost c_{} must be positive", i)));
        }
        Ok(Self { rewards, costs })
    }

    /// Constant cost `c` for every state.
    pub fn with_constant_cost(rewards: Vec<S>, c: S) -> Result<Self> {
        let n = rewards.len();
        Self::new(rewards, vec![c; n])
    }

    pub fn players(&self) -> usize {
        self.rewards.len()
    }

    /// `R_n` for `n` in `1..=N`.
    pub fn reward(&self, n: usize) -> &S {
        &self.rewards[n - 1]
    }

    pub fn rewards(&self) -> &[S] {
        &self.rewards
    }

    pub fn costs(&self) -> &[S] {
        &self.costs
    }
}

/// Values `v_0..v_N` and efforts `λ*_0..λ*_{N-1}` of the symmetric equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NEquilibrium<S> {
    pub spec: NPlayerSpec<S>,
    pub values: Vec<S>,
    pub efforts: Vec<S>,
}

/// Backward recursion
/// `v_n = (R_{n+1} + 2(N - n - 1) v_{n+1}) / (1 + 2(N - n - 1))`, `v_N = R_N`,
/// and `λ*_n = (R_{n+1} - v_n) / (2 c_n)`.
///
/// The recursion is run on the gaps `g_n = R_{n+1} - v_n`, which satisfy
/// `g_n = (R_{n+1} - R_{n+2} + g_{n+1}) w / (1 + w)` with `w = 2(N - n - 1)`.
/// All terms are non-negative, so flat reward segments give exactly zero effort.
pub fn solve_recursion<S: Field>(spec: &NPlayerSpec<S>) -> NEquilibrium<S> {
    let n = spec.players();
    let two: S = count(2);
    let mut values = vec![S::zero(); n + 1];
    let mut gaps = vec![S::zero(); n];
    values[n] = spec.reward(n).clone();
    // R_{k+1} - v_{k+1}
    let mut ahead = S::zero();
    for k in (0..n).rev() {
        let w: S = count(2 * (n - k - 1));
        gaps[k] = ahead.clone() * w.clone() / (S::one() + w);
        values[k] = spec.reward(k + 1).clone() - gaps[k].clone();
        if k > 0 {
            ahead = spec.reward(k).clone() - spec.reward(k + 1).clone() + gaps[k].clone();
        }
    }
    let efforts = (0..n).map(|k| gaps[k].clone() / (two.clone() * spec.costs[k].clone())).collect();
    NEquilibrium { spec: spec.clone(), values, efforts }
}

impl<S: Field> NEquilibrium<S> {
    /// `R_{n+1} - v_n + 2(N - n - 1)(v_{n+1} - v_n)` for `n = 0..N-1`.
    pub fn residuals(&self) -> Vec<S> {
        let n = self.spec.players();
        (0..n)
            .map(|k| {
                let w: S = count(2 * (n - k - 1));
                self.spec.reward(k + 1).clone() - self.values[k].clone()
                    + w * (self.values[k + 1].clone() - self.values[k].clone())
            })
            .collect()
    }

    /// Total arrival rate `(N - n) λ*_n` in state `n`.
    pub fn rate(&self, n: usize) -> S {
        count::<S>(self.spec.players() - n) * self.efforts[n].clone()
    }
}

fn check_head_count(players: usize, n0: usize) -> Result<()> {
    if n0 == 0 || n0 >= players {
        return Err(Error::InvalidParameter(format!(
            "head count {} must lie in 1..{} for {} players",
            n0, players, players
        )));
    }
    Ok(())
}

/// `E T_{n0} = Σ_{n < n0} 1 / ((N - n) λ*_n)`; `None` when some rate vanishes.
pub fn expected_completion<S: Field>(eq: &NEquilibrium<S>, n0: usize) -> Result<Option<S>> {
    check_head_count(eq.spec.players(), n0)?;
    let mut total = S::zero();
    for n in 0..n0 {
        let rate = eq.rate(n);
        if !(rate > S::zero()) {
            return Ok(None);
        }
        total = total + S::one() / rate;
    }
    Ok(Some(total))
}

/// `Var T_{n0} = Σ_{n < n0} 1 / ((N - n) λ*_n)^2`; `None` when some rate vanishes.
pub fn completion_variance<S: Field>(eq: &NEquilibrium<S>, n0: usize) -> Result<Option<S>> {
    check_head_count(eq.spec.players(), n0)?;
    let mut total = S::zero();
    for n in 0..n0 {
        let rate = eq.rate(n);
        if !(rate > S::zero()) {
            return Ok(None);
        }
        total = total + S::one() / (rate.clone() * rate);
    }
    Ok(Some(total))
}

/// Monte Carlo draws of the completion time `T_{n0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult<F> {
    pub samples: Vec<F>,
    pub mean: F,
    /// Sample standard deviation over `sqrt(paths)`; NaN for a single path.
    pub stderr: F,
    pub paths: usize,
    pub seed: u64,
}

impl<F: Real> SimResult<F> {
    /// Unbiased sample variance; NaN for a single path.
    pub fn variance(&self) -> F {
        let n = self.samples.len();
        if n < 2 {
            return F::nan();
        }
        let ss: F = self.samples.iter().map(|x| (*x - self.mean) * (*x - self.mean)).sum();
        ss / count::<F>(n - 1)
    }
}

/// Simulates `paths` arrival processes up to the `n0`-th arrival.
///
/// Path `i` draws from a ChaCha stream keyed by `(seed, i)`, so the samples do
/// not depend on how the work is split across threads.
pub fn simulate<F: Real>(spec: &NPlayerSpec<F>, n0: usize, paths: usize, seed: u64) -> Result<SimResult<F>> {
    check_head_count(spec.players(), n0)?;
    if paths == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    let eq = solve_recursion(spec);
    let rates: Vec<F> = (0..n0).map(|n| eq.rate(n)).collect();
    if let Some(state) = rates.iter().position(|r| !(*r > F::zero())) {
        return Err(Error::AbsorbedBeforeTarget { state, target: n0 });
    }
    let samples: Vec<F> = (0..paths)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rates.iter().fold(F::zero(), |t, rate| {
                let z: f64 = Exp1.sample(&mut rng);
                t + lit::<F>(z) / *rate
            })
        })
        .collect();
    let n = count::<F>(paths);
    let mean = samples.iter().copied().sum::<F>() / n;
    let mut res = SimResult { samples, mean, stderr: F::nan(), paths, seed };
    if paths > 1 {
        res.stderr = (res.variance() / n).sqrt();
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_rational::BigRational;
    use num_traits::FromPrimitive;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_i64(n).unwrap() / BigRational::from_i64(d).unwrap()
    }

    #[test]
    fn two_players_exact() {
        let spec = NPlayerSpec::with_constant_cost(vec![q(1, 1), q(0, 1)], q(1, 1)).unwrap();
        let eq = solve_recursion(&spec);
        assert_eq!(eq.values, vec![q(1, 3), q(0, 1), q(0, 1)]);
        assert_eq!(eq.efforts, vec![q(1, 3), q(0, 1)]);
        assert_eq!(expected_completion(&eq, 1).unwrap(), Some(q(3, 2)));
        assert!(eq.residuals().iter().all(|r| *r == q(0, 1)));
    }

    #[test]
    fn three_players_exact() {
        let spec = NPlayerSpec::with_constant_cost(vec![q(1, 1), q(0, 1), q(0, 1)], q(1, 1)).unwrap();
        let eq = solve_recursion(&spec);
        assert_eq!(eq.values[0], q(1, 5));
        assert_eq!(eq.efforts, vec![q(2, 5), q(0, 1), q(0, 1)]);
        assert_eq!(expected_completion(&eq, 1).unwrap(), Some(q(5, 6)));
    }

    #[test]
    fn constant_reward_never_finishes() {
        let spec = NPlayerSpec::with_constant_cost(vec![0.7; 6], 1.0).unwrap();
        let eq = solve_recursion(&spec);
        assert!(eq.values.iter().all(|v| (*v - 0.7f64).abs() < 1e-15));
        assert!(eq.efforts.iter().all(|l| *l == 0.0));
        assert_eq!(expected_completion(&eq, 3).unwrap(), None);
        assert!(matches!(simulate(&spec, 3, 10, 1), Err(Error::AbsorbedBeforeTarget { state: 0, target: 3 })));
    }

    #[test]
    fn spec_validation() {
        assert!(NPlayerSpec::<f64>::new(vec![], vec![]).is_err());
        assert!(NPlayerSpec::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(NPlayerSpec::new(vec![1.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(NPlayerSpec::new(vec![1.0, -1.0], vec![1.0, 1.0]).is_err());
        assert!(NPlayerSpec::new(vec![1.0], vec![1.0, 1.0]).is_err());
        let spec = NPlayerSpec::with_constant_cost(vec![1.0f64, 0.0], 1.0).unwrap();
        assert!(expected_completion(&solve_recursion(&spec), 2).is_err());
    }

    #[test]
    fn simulation_is_reproducible() {
        let spec = NPlayerSpec::with_constant_cost(vec![1.0f64, 0.0], 1.0).unwrap();
        let a = simulate(&spec, 1, 1, 42).unwrap();
        let b = simulate(&spec, 1, 1, 42).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.stderr.is_nan());
        let big = simulate(&spec, 1, 5000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| simulate(&spec, 1, 5000, 9).unwrap());
        assert_eq!(big.samples, single.samples);
    }

    #[test]
    fn simulation_mean_matches() {
        let spec = NPlayerSpec::with_constant_cost(vec![1.0f64, 0.0], 1.0).unwrap();
        let sim = simulate(&spec, 1, 200_000, 3).unwrap();
        assert!((sim.mean - 1.5).abs() < 3.0 * sim.stderr);
        assert_relative_eq!(sim.stderr, 1.5 / (200_000f64).sqrt(), max_relative = 0.02);
    }
}
