//! Equilibria and optimal rank-based rewards for arrival races.
//!
//! Agents exert effort `λ` at cost `c λ^2` to arrive early and are paid
//! `R(r)` according to their arrival rank `r`. The crate covers the
//! mean-field game ([`mfg`]), the mean-field principal's contract design
//! ([`principal`]), their finite-population counterparts ([`nplayer`],
//! [`nprincipal`]) and the experiments comparing the two ([`convergence`]).
//!
//! Everything numeric is generic over [`Real`] (`f32`, `f64`); the
//! N-player recursion is generic over [`Field`] and runs on exact rationals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod mfg;
pub mod nplayer;
pub mod nprincipal;
pub mod ode;
pub mod piecewise;
pub mod principal;
pub mod quadrature;
pub mod scalar;

pub use convergence::{
    check_discretization, discretize_average, discretize_sampling, eps_optimality_experiment,
    principal_convergence_experiment, size_effect, value_convergence_experiment, Discretization,
    RateFit, SizeMode,
};
pub use error::{Error, Result};
pub use mfg::{
    closed_form_power, closed_form_staircase, equilibrium_effort, equilibrium_value, solve_equilibrium,
    validate_reward, value_probabilistic, MFCost, MFEquilibrium, MFRewardScheme,
};
pub use nplayer::{expected_completion, simulate, solve_recursion, NEquilibrium, NPlayerSpec, SimResult};
pub use nprincipal::{
    brute_force_oracle, check_cost_assumption_n, optimal_reward_n, NPrincipalProblem, NPrincipalSolution,
};
pub use ode::{solve_state_ode, Horizon, Trajectory};
pub use piecewise::{integrate_sqrt_weight, Piece, PiecewiseFn};
pub use principal::{
    check_cost_assumption, completion_time, minimal_budget, optimal_reward, verify_first_order_optimality,
    PrincipalProblem, PrincipalSolution,
};
pub use scalar::{Field, Real};

pub type PiecewiseFn64 = PiecewiseFn<f64>;
pub type PiecewiseFn32 = PiecewiseFn<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type MFRewardScheme64 = MFRewardScheme<f64>;
pub type MFCost64 = MFCost<f64>;
pub type MFEquilibrium64 = MFEquilibrium<f64>;
pub type MFEquilibrium32 = MFEquilibrium<f32>;
pub type PrincipalSolution64 = PrincipalSolution<f64>;
pub type NPlayerSpec64 = NPlayerSpec<f64>;
pub type NEquilibrium64 = NEquilibrium<f64>;
/// Exact arithmetic for the N-player recursion.
pub type NPlayerSpecExact = NPlayerSpec<num_rational::BigRational>;
pub type NEquilibriumExact = NEquilibrium<num_rational::BigRational>;
pub type NPrincipalProblem64 = NPrincipalProblem<f64>;
pub type RateFit64 = RateFit<f64>;
