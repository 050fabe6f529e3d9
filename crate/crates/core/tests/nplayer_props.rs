use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use proptest::prelude::*;
use rankrace::nplayer::completion_variance;
use rankrace::nprincipal::{closed_form_n, rewards_from_gaps};
use rankrace::{
    check_cost_assumption_n, expected_completion, optimal_reward_n, simulate, solve_recursion, NPlayerSpec,
    NPrincipalProblem,
};

fn decreasing(incs: &[f64], zero_tail: usize) -> Vec<f64> {
    let n = incs.len();
    let mut r: Vec<f64> = (0..n).map(|j| incs[j..].iter().sum()).collect();
    for v in r.iter_mut().skip(n.saturating_sub(zero_tail)) {
        *v = 0.0;
    }
    r
}

fn spec() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..2.0, n), prop::collection::vec(0.1f64..3.0, n), 0..n)
            .prop_map(|(incs, costs, z)| (decreasing(&incs, z), costs))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn last_player_never_moves((rewards, costs) in spec()) {
        let n = rewards.len();
        let eq = solve_recursion(&NPlayerSpec::new(rewards.clone(), costs).unwrap());
        prop_assert_eq!(eq.values[n - 1], rewards[n - 1]);
        prop_assert_eq!(eq.efforts[n - 1], 0.0);
    }

    #[test]
    fn values_sit_below_next_reward((rewards, costs) in spec()) {
        let eq = solve_recursion(&NPlayerSpec::new(rewards.clone(), costs).unwrap());
        for k in 0..rewards.len() {
            prop_assert!(eq.values[k] >= 0.0);
            prop_assert!(eq.values[k] <= rewards[k]);
            if k > 0 {
                prop_assert!(rewards[k] <= rewards[k - 1]);
            }
        }
    }

    #[test]
    fn recursion_residual_is_rounding((rewards, costs) in spec()) {
        let eq = solve_recursion(&NPlayerSpec::new(rewards.clone(), costs).unwrap());
        let top = rewards.iter().copied().fold(0.0, f64::max);
        for r in eq.residuals() {
            prop_assert!(r.abs() <= 1e-14 * (1.0 + top) * rewards.len() as f64);
        }
    }

    #[test]
    fn exact_arithmetic_agrees((rewards, costs) in spec()) {
        let q = |x: f64| BigRational::from_f64(x).unwrap();
        let exact = NPlayerSpec::new(rewards.iter().map(|x| q(*x)).collect(), costs.iter().map(|x| q(*x)).collect()).unwrap();
        let eq = solve_recursion(&exact);
        prop_assert!(eq.residuals().iter().all(|r| r.is_zero()));
        let float = solve_recursion(&NPlayerSpec::new(rewards, costs).unwrap());
        for (a, b) in eq.values.iter().zip(&float.values) {
            let a: f64 = num_traits::ToPrimitive::to_f64(a).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

fn budget_costs() -> impl Strategy<Value = (usize, usize, f64, Vec<f64>)> {
    (3usize..12).prop_flat_map(|n| {
        (Just(n), 1..n, 0.2f64..3.0, prop::collection::vec(0.2f64..3.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gap_variables_carry_the_budget((n, n0, b, mut costs) in budget_costs()) {
        costs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let p = NPrincipalProblem::new(n, n0, b, costs).unwrap();
        let sol = optimal_reward_n(&p).unwrap();
        let eq = solve_recursion(&NPlayerSpec::new(sol.rewards.clone(), p.costs.clone()).unwrap());
        let paid: f64 = sol.rewards[..n0].iter().sum();
        let weighted: f64 = (0..n0).map(|k| p.budget_weight(k) * (sol.rewards[k] - eq.values[k])).sum();
        prop_assert!((paid - weighted).abs() <= 1e-10 * paid);
        prop_assert!((paid - n as f64 * b).abs() <= 1e-12 * paid);
        for k in 0..n0 {
            prop_assert!((sol.x[k] - b * sol.y[k] / sol.constant_c).abs() <= 1e-12 * sol.x[k]);
            prop_assert!((sol.x[k] - (sol.rewards[k] - eq.values[k])).abs() <= 1e-10 * sol.x[k]);
        }
        prop_assert!((sol.constant_c - b * (n as f64 * sol.theta).sqrt() / 2.0).abs() <= 1e-12 * sol.constant_c);
        let back = rewards_from_gaps(n, &sol.x);
        for (a, r) in back.iter().zip(&sol.rewards) {
            prop_assert!((a - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
        let et = expected_completion(&eq, n0).unwrap().unwrap();
        prop_assert!((et - sol.expected_time).abs() <= 1e-10 * et);
    }

    #[test]
    fn monotone_exactly_under_cost_assumption((n, n0, b, costs) in budget_costs()) {
        let p = NPrincipalProblem::new(n, n0, b, costs).unwrap();
        let raw = closed_form_n(&p).unwrap();
        for k in 1..n0 {
            let ordered = raw.rewards[k - 1] - raw.rewards[k] >= 0.0;
            prop_assert_eq!(ordered, p.costs[k] <= p.cost_bound(k));
        }
        prop_assert_eq!(check_cost_assumption_n(&p).holds, raw.rewards.windows(2).all(|w| w[1] <= w[0]));
    }
}

fn cutoff_spec() -> NPlayerSpec<f64> {
    NPlayerSpec::with_constant_cost(vec![2.0, 2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0).unwrap()
}

#[test]
fn simulated_intervals_cover_expectation() {
    let spec = cutoff_spec();
    let et = expected_completion(&solve_recursion(&spec), 5).unwrap().unwrap();
    let hits = (0..30u64)
        .filter(|seed| {
            let sim = simulate(&spec, 5, 100_000, 1000 + seed).unwrap();
            (sim.mean - et).abs() <= 2.0 * sim.stderr
        })
        .count();
    assert!(hits >= 24, "coverage {}/30", hits);
}

#[test]
fn simulated_variance_matches_sum_of_exponentials() {
    let spec = cutoff_spec();
    let eq = solve_recursion(&spec);
    let var = completion_variance(&eq, 5).unwrap().unwrap();
    let sim = simulate(&spec, 5, 1_000_000, 7).unwrap();
    assert!((sim.variance() - var).abs() <= 0.05 * var, "{} vs {}", sim.variance(), var);
}
