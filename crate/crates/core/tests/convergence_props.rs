mod common;

use common::*;
use proptest::prelude::*;
use rankrace::convergence::{fixed_count_display, interior_sets};
use rankrace::{
    check_discretization, discretize_average, discretize_sampling, optimal_reward_n, NPrincipalProblem,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averaging_preserves_budget(steps in staircase(), n in 1usize..300) {
        let scheme = staircase_scheme(&steps);
        let r = discretize_average(&scheme, n);
        let mean = r.iter().sum::<f64>() / n as f64;
        prop_assert!((mean - scheme.budget()).abs() <= 1e-12 * (1.0 + scheme.budget()));
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn sampling_never_overspends(scheme in mixed_scheme(), n in 1usize..300) {
        let r = discretize_sampling(&scheme, n);
        prop_assert!(r.iter().sum::<f64>() / n as f64 <= scheme.budget() + 1e-12);
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0]));
        let avg = discretize_average(&scheme, n);
        let mean = avg.iter().sum::<f64>() / n as f64;
        prop_assert!((mean - scheme.budget()).abs() <= 1e-9 * (1.0 + scheme.budget()));
    }

    #[test]
    fn both_discretizations_stay_in_band(scheme in mixed_scheme(), n in 4usize..400) {
        // |R'| ≤ Σ a q on every piece
        let lip: f64 = scheme
            .function()
            .pieces()
            .iter()
            .map(|p| match p {
                rankrace::Piece::Sum(parts) => parts
                    .iter()
                    .map(|q| match q {
                        rankrace::Piece::Power { scale, exponent } => scale.abs() * exponent,
                        _ => 0.0,
                    })
                    .sum(),
                _ => 0.0,
            })
            .fold(0.0, f64::max);
        let part = scheme.function().breakpoints().to_vec();
        let k = lip + 1e-9;
        prop_assert!(check_discretization(&discretize_sampling(&scheme, n), &scheme, &part, k).passes);
        prop_assert!(check_discretization(&discretize_average(&scheme, n), &scheme, &part, k).passes);
        prop_assert!(interior_sets(&part, n).iter().all(|(a, b)| a <= b));
    }

    #[test]
    fn fixed_count_display_is_closed_form(n in 3usize..2000, frac in 0.0f64..1.0, k in 0.5f64..64.0, c in 0.2f64..3.0) {
        let n0 = 1 + ((n - 2) as f64 * frac) as usize;
        let p = NPrincipalProblem::with_constant_cost(n, n0, k / n as f64, c).unwrap();
        let et = optimal_reward_n(&p).unwrap().expected_time;
        let disp = fixed_count_display(n, n0, k, c);
        prop_assert!((et - disp).abs() <= 1e-12 * et, "{} vs {}", et, disp);
    }
}
