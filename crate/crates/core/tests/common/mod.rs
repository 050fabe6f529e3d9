#![allow(dead_code)]

use proptest::prelude::*;
use rankrace::{validate_reward, MFRewardScheme, Piece, PiecewiseFn};

/// Sorted interior cuts at least `gap` apart.
pub fn spread(mut cuts: Vec<f64>, gap: f64) -> Vec<f64> {
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for c in cuts {
        if c - out.last().copied().unwrap_or(0.0) >= gap && 1.0 - c >= gap {
            out.push(c);
        }
    }
    out
}

/// Decreasing non-negative step scheme as `(grid, levels)`.
pub fn staircase() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.0f64..1.0, 0..5), prop::collection::vec(0.0f64..2.0, 5), any::<bool>()).prop_map(
        |(cuts, incs, zero_tail)| {
            let cuts = spread(cuts, 0.02);
            let m = cuts.len() + 1;
            let mut levels: Vec<f64> = (0..m).map(|j| incs[j..m].iter().sum::<f64>() + 0.05).collect();
            if zero_tail && m > 1 {
                levels[m - 1] = 0.0;
            }
            let mut grid = vec![0.0];
            grid.extend(cuts);
            grid.push(1.0);
            (grid, levels)
        },
    )
}

pub fn staircase_scheme((grid, levels): &(Vec<f64>, Vec<f64>)) -> MFRewardScheme<f64> {
    validate_reward(PiecewiseFn::steps(grid.clone(), levels.clone()).unwrap()).unwrap()
}

/// Decreasing scheme whose pieces are `L_j + a_j (1 - r)^{q_j}` with jumps between them.
pub fn mixed_scheme() -> impl Strategy<Value = MFRewardScheme<f64>> {
    (
        prop::collection::vec(0.0f64..1.0, 0..4),
        prop::collection::vec((0.0f64..2.0, 1.0f64..3.0, 0.0f64..1.0), 4),
        0.0f64..0.5,
    )
        .prop_map(|(cuts, shapes, tail)| {
            let cuts = spread(cuts, 0.05);
            let mut grid = vec![0.0];
            grid.extend(cuts);
            grid.push(1.0);
            let m = grid.len() - 1;
            let mut pieces = vec![Piece::Constant(0.0); m];
            // built from the right so that every jump is downwards
            let mut right = tail;
            for j in (0..m).rev() {
                let (a, q, jump) = shapes[j];
                let b = grid[j + 1];
                let level = right + if j + 1 == m { 0.0 } else { jump } - a * (1.0 - b).powf(q);
                pieces[j] = Piece::Sum(vec![Piece::Constant(level), Piece::power(a, q)]);
                right = level + a * (1.0 - grid[j]).powf(q);
            }
            validate_reward(PiecewiseFn::new(grid, pieces).unwrap()).unwrap()
        })
}

/// Probe ranks covering `[0, top]`.
pub fn probes(top: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| top * i as f64 / n as f64).collect()
}
