use proptest::prelude::*;
use rankrace::principal::random_step_rewards;
use rankrace::quadrature::Quadrature;
use rankrace::{
    check_cost_assumption, completion_time, optimal_reward, solve_equilibrium, validate_reward, MFCost, Piece,
    PiecewiseFn, PrincipalProblem,
};

fn cost(c0: f64, s: f64) -> MFCost<f64> {
    if s == 0.0 {
        MFCost::constant(c0).unwrap()
    } else {
        MFCost::new(PiecewiseFn::single(Piece::affine(c0, -c0 * s)).unwrap()).unwrap()
    }
}

fn problem() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.1f64..0.9, 0.5f64..3.0, 0.3f64..3.0, prop_oneof![Just(0.0), 0.0f64..0.9])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn no_feasible_challenger_is_faster((alpha, b, c0, s) in problem(), seed in any::<u64>(), q in 0.0f64..3.0) {
        let cost = cost(c0, s);
        prop_assume!(check_cost_assumption(&cost).holds);
        let sol = optimal_reward(&PrincipalProblem::new(alpha, b, cost.clone()).unwrap()).unwrap();
        let mut challengers = random_step_rewards(alpha, b, 12, 6, seed).unwrap();
        let kappa = b * (1.0 + q) / (1.0 - (1.0 - alpha).powf(1.0 + q));
        challengers.push(
            validate_reward(
                PiecewiseFn::new(vec![0.0, alpha, 1.0], vec![Piece::power(kappa, q), Piece::Constant(0.0)]).unwrap(),
            )
            .unwrap(),
        );
        for ch in &challengers {
            let t = completion_time(ch, alpha, &cost).unwrap();
            prop_assert!(t >= sol.minimal_time - 1e-6, "{} < {}", t, sol.minimal_time);
        }
    }

    #[test]
    fn optimal_scheme_spends_budget((alpha, b, c0, s) in problem()) {
        let cost = cost(c0, s);
        prop_assume!(check_cost_assumption(&cost).holds);
        let sol = optimal_reward(&PrincipalProblem::new(alpha, b, cost).unwrap()).unwrap();
        let exact = Quadrature::with_rel_tol(1e-12).integrate(|r| sol.reward_at(r), 0.0, alpha).unwrap().value;
        prop_assert!((exact - b).abs() <= 1e-8 * b, "{} vs {}", exact, b);
        prop_assert!((sol.reward.budget() - b).abs() <= 1e-8 * b);
    }

    #[test]
    fn optimal_scheme_shape((alpha, b, c0) in (0.1f64..0.9, 0.5f64..3.0, 0.3f64..3.0)) {
        let sol = optimal_reward(&PrincipalProblem::new(alpha, b, MFCost::constant(c0).unwrap()).unwrap()).unwrap();
        let n = 1000;
        let vals: Vec<f64> = (0..=n).map(|i| sol.reward_at(alpha * i as f64 / n as f64)).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for w in vals.windows(3) {
            prop_assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
        }
        prop_assert_eq!(sol.reward.eval(alpha + 1e-12), 0.0);
        prop_assert!(sol.reward.eval(alpha) > 0.0);
        let eff: Vec<f64> = (0..=n).map(|i| sol.effort_at(alpha * i as f64 / n as f64)).collect();
        prop_assert!(eff.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scaled_effort_increases((alpha, b, c0, s) in problem()) {
        let cost = cost(c0, s);
        prop_assume!(check_cost_assumption(&cost).holds);
        let sol = optimal_reward(&PrincipalProblem::new(alpha, b, cost.clone()).unwrap()).unwrap();
        let g: Vec<f64> = (0..=500).map(|i| alpha * i as f64 / 500.0).map(|r| cost.eval(r).sqrt() * sol.effort_at(r)).collect();
        prop_assert!(g.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn equilibrium_of_optimum_is_consistent((alpha, b, c0, s) in problem()) {
        let cost = cost(c0, s);
        prop_assume!(check_cost_assumption(&cost).holds);
        let sol = optimal_reward(&PrincipalProblem::new(alpha, b, cost.clone()).unwrap()).unwrap();
        let eq = solve_equilibrium(&sol.reward, &cost, 0.0).unwrap();
        let t = eq.quantile(alpha);
        prop_assert!((t - sol.minimal_time).abs() <= 1e-6 * sol.minimal_time, "{} vs {}", t, sol.minimal_time);
        for i in 0..=400 {
            let r = (alpha - 1e-3) * i as f64 / 400.0;
            prop_assert!((eq.effort_at(r) - sol.effort_at(r)).abs() <= 1e-6);
        }
    }
}
