//! Piecewise-defined functions of rank on `[0, 1]`.
//!
//! Piece `j` owns the half-open interval `(b_{j-1}, b_j]`; the first piece also
//! owns `r = 0`. This right-closed convention is used by every evaluation in the
//! crate, so step rewards pay the upper level at their right endpoint.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_3, Quadrature};
use crate::scalar::{lit, to_f64, Real};

/// Parametric description of one piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Piece<F> {
    /// `r -> a`
    Constant(F),
    /// `r -> scale * (1 - r)^exponent`
    Power { scale: F, exponent: F },
    /// `r -> intercept + slope * r`
    Affine { intercept: F, slope: F },
    /// Linear interpolation through `(grid[i], values[i])`, clamped outside the grid.
    Tabulated { grid: Vec<F>, values: Vec<F> },
    /// Pointwise sum of the component pieces.
    Sum(Vec<Piece<F>>),
}

impl<F: Real> Piece<F> {
    pub fn power(scale: F, exponent: F) -> Self {
        Piece::Power { scale, exponent }
    }

    pub fn affine(intercept: F, slope: F) -> Self {
        Piece::Affine { intercept, slope }
    }

    pub fn eval(&self, r: F) -> F {
        match self {
            Piece::Constant(a) => *a,
            Piece::Power { scale, exponent } => {
                if *scale == F::zero() {
                    F::zero()
                } else if *exponent == F::zero() {
                    *scale
                } else {
                    *scale * (F::one() - r).max(F::zero()).powf(*exponent)
                }
            }
            Piece::Affine { intercept, slope } => *intercept + *slope * r,
            Piece::Tabulated { grid, values } => interpolate(grid, values, r),
            Piece::Sum(parts) => parts.iter().map(|p| p.eval(r)).sum(),
        }
    }

    /// Value at rank `1 - w`, keeping full precision for small `w`.
    pub fn eval_tail(&self, w: F) -> F {
        match self {
            Piece::Power { scale, exponent } if *scale != F::zero() && *exponent != F::zero() => {
                *scale * w.max(F::zero()).powf(*exponent)
            }
            Piece::Affine { intercept, slope } => *intercept + *slope - *slope * w,
            Piece::Sum(parts) => parts.iter().map(|p| p.eval_tail(w)).sum(),
            _ => self.eval(F::one() - w),
        }
    }

    /// `p(1 - w0) - p(1 - w)` formed term by term, so constant parts cancel exactly.
    pub fn tail_difference(&self, w0: F, w: F) -> F {
        match self {
            Piece::Constant(_) => F::zero(),
            Piece::Power { scale, exponent } => {
                if *scale == F::zero() || *exponent == F::zero() {
                    F::zero()
                } else {
                    *scale * (w0.max(F::zero()).powf(*exponent) - w.max(F::zero()).powf(*exponent))
                }
            }
            Piece::Affine { slope, .. } => *slope * (w - w0),
            Piece::Tabulated { .. } => self.eval(F::one() - w0) - self.eval(F::one() - w),
            Piece::Sum(parts) => parts.iter().map(|p| p.tail_difference(w0, w)).sum(),
        }
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: F, hi: F) -> F {
        if hi <= lo {
            return F::zero();
        }
        match self {
            Piece::Constant(a) => *a * (hi - lo),
            Piece::Power { scale, exponent } => {
                if *scale == F::zero() {
                    return F::zero();
                }
                let k = *exponent + F::one();
                let (ul, uh) = (F::one() - lo, F::one() - hi);
                if k == F::zero() {
                    *scale * (ul / uh).ln()
                } else {
                    *scale * (ul.powf(k) - uh.max(F::zero()).powf(k)) / k
                }
            }
            Piece::Affine { intercept, slope } => {
                *intercept * (hi - lo) + *slope * (hi * hi - lo * lo) * lit(0.5)
            }
            Piece::Tabulated { grid, values } => {
                let nodes = segment_nodes(grid, lo, hi);
                nodes
                    .windows(2)
                    .map(|w| {
                        (interpolate(grid, values, w[0]) + interpolate(grid, values, w[1]))
                            * (w[1] - w[0])
                            * lit(0.5)
                    })
                    .sum()
            }
            Piece::Sum(parts) => parts.iter().map(|p| p.integral(lo, hi)).sum(),
        }
    }

    /// Nodes strictly inside `(lo, hi)` where the piece is not smooth.
    fn interior_nodes(&self, lo: F, hi: F, out: &mut Vec<F>) {
        match self {
            Piece::Tabulated { grid, .. } => {
                out.extend(grid.iter().copied().filter(|g| *g > lo && *g < hi));
            }
            Piece::Sum(parts) => parts.iter().for_each(|p| p.interior_nodes(lo, hi, out)),
            _ => {}
        }
    }

    fn is_smooth_polynomial(&self) -> bool {
        match self {
            Piece::Constant(_) | Piece::Affine { .. } | Piece::Tabulated { .. } => true,
            Piece::Power { scale, exponent } => {
                *scale == F::zero()
                    || (exponent.fract() == F::zero() && *exponent >= F::zero() && *exponent <= lit(2.0))
            }
            Piece::Sum(parts) => parts.iter().all(|p| p.is_smooth_polynomial()),
        }
    }

    fn validate(&self, index: usize, lo: F, hi: F, allow_non_lipschitz: bool) -> Result<()> {
        let bad = |reason: &str| Error::InvalidPiece { index, reason: reason.to_string() };
        match self {
            Piece::Constant(a) => {
                if !a.is_finite() {
                    return Err(bad("non-finite constant"));
                }
            }
            Piece::Power { scale, exponent } => {
                if !scale.is_finite() || !exponent.is_finite() {
                    return Err(bad("non-finite power parameters"));
                }
                let touches_one = hi >= F::one();
                if touches_one && *scale != F::zero() {
                    if *exponent < F::zero() {
                        return Err(bad("negative exponent is unbounded at rank 1"));
                    }
                    if *exponent > F::zero() && *exponent < F::one() && !allow_non_lipschitz {
                        return Err(Error::NonLipschitzPiece { index, exponent: to_f64(*exponent) });
                    }
                }
            }
            Piece::Affine { intercept, slope } => {
                if !intercept.is_finite() || !slope.is_finite() {
                    return Err(bad("non-finite affine parameters"));
                }
            }
            Piece::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(bad("tabulated piece needs at least two nodes and matching lengths"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(bad("tabulated grid must be strictly increasing"));
                }
                if grid[0] > lo || grid[grid.len() - 1] < hi {
                    return Err(bad("tabulated grid does not cover the piece interval"));
                }
                if values.iter().chain(grid.iter()).any(|v| !v.is_finite()) {
                    return Err(bad("non-finite tabulated data"));
                }
            }
            Piece::Sum(parts) => {
                if parts.is_empty() {
                    return Err(bad("empty sum"));
                }
                for p in parts {
                    p.validate(index, lo, hi, allow_non_lipschitz)?;
                }
            }
        }
        Ok(())
    }

    /// Structural check that the piece is non-increasing on `[lo, hi]`.
    ///
    /// Parametric pieces are decided from their parameters, tabulated pieces
    /// from their nodes. A sum whose components are not all non-increasing falls
    /// back to a dense sample.
    pub fn is_nonincreasing_on(&self, lo: F, hi: F) -> bool {
        match self {
            Piece::Constant(_) => true,
            Piece::Power { scale, exponent } => *scale * *exponent >= F::zero(),
            Piece::Affine { slope, .. } => *slope <= F::zero(),
            Piece::Tabulated { grid, values } => {
                let nodes = segment_nodes(grid, lo, hi);
                nodes
                    .windows(2)
                    .all(|w| interpolate(grid, values, w[1]) <= interpolate(grid, values, w[0]))
            }
            Piece::Sum(parts) => {
                if parts.iter().all(|p| p.is_nonincreasing_on(lo, hi)) {
                    return true;
                }
                let n = 4000;
                let step = (hi - lo) / lit(n as f64);
                let mut prev = self.eval(lo);
                (1..=n).all(|i| {
                    let v = self.eval(lo + step * lit(i as f64));
                    let ok = v <= prev + prev.abs() * F::epsilon() * lit(16.0);
                    prev = v;
                    ok
                })
            }
        }
    }

    /// Minimum over `[lo, hi]` (exact for monotone descriptors and tabulated data).
    pub fn min_on(&self, lo: F, hi: F) -> F {
        match self {
            Piece::Constant(a) => *a,
            Piece::Power { .. } | Piece::Affine { .. } => self.eval(lo).min(self.eval(hi)),
            Piece::Tabulated { grid, values } => segment_nodes(grid, lo, hi)
                .into_iter()
                .map(|x| interpolate(grid, values, x))
                .fold(F::infinity(), F::min),
            Piece::Sum(_) => {
                let n = 4000;
                let step = (hi - lo) / lit(n as f64);
                (0..=n).map(|i| self.eval(lo + step * lit(i as f64))).fold(F::infinity(), F::min)
            }
        }
    }
}

fn interpolate<F: Real>(grid: &[F], values: &[F], r: F) -> F {
    let n = grid.len();
    if r <= grid[0] {
        return values[0];
    }
    if r >= grid[n - 1] {
        return values[n - 1];
    }
    let i = grid.partition_point(|g| *g <= r);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let w = (r - x0) / (x1 - x0);
    values[i - 1] + (values[i] - values[i - 1]) * w
}

fn segment_nodes<F: Real>(grid: &[F], lo: F, hi: F) -> Vec<F> {
    let mut nodes = Vec::with_capacity(grid.len() + 2);
    nodes.push(lo);
    nodes.extend(grid.iter().copied().filter(|g| *g > lo && *g < hi));
    nodes.push(hi);
    nodes
}

/// A function on `[0, 1]` given by ordered breakpoints and one [`Piece`] per interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseFn<F> {
    breakpoints: Vec<F>,
    pieces: Vec<Piece<F>>,
    value_at_one: Option<F>,
}

impl<F: Real> PiecewiseFn<F> {
    /// Validated constructor. Power pieces with exponent in `(0, 1)` touching
    /// rank 1 are rejected as non-Lipschitz; see [`PiecewiseFn::new_forced`].
    pub fn new(breakpoints: Vec<F>, pieces: Vec<Piece<F>>) -> Result<Self> {
        Self::build(breakpoints, pieces, false)
    }

    /// Like [`PiecewiseFn::new`] but accepts non-Lipschitz power pieces at rank 1.
    pub fn new_forced(breakpoints: Vec<F>, pieces: Vec<Piece<F>>) -> Result<Self> {
        Self::build(breakpoints, pieces, true)
    }

    fn build(breakpoints: Vec<F>, pieces: Vec<Piece<F>>, force: bool) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidBreakpoints("need at least the endpoints 0 and 1".into()));
        }
        if breakpoints[0] != F::zero() || breakpoints[breakpoints.len() - 1] != F::one() {
            return Err(Error::InvalidBreakpoints("first breakpoint must be 0 and last 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidBreakpoints("breakpoints must be strictly increasing".into()));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidBreakpoints(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        for (j, p) in pieces.iter().enumerate() {
            p.validate(j, breakpoints[j], breakpoints[j + 1], force)?;
        }
        Ok(Self { breakpoints, pieces, value_at_one: None })
    }

    /// A single piece on all of `[0, 1]`.
    pub fn single(piece: Piece<F>) -> Result<Self> {
        Self::new(vec![F::zero(), F::one()], vec![piece])
    }

    pub fn constant(a: F) -> Self {
        Self { breakpoints: vec![F::zero(), F::one()], pieces: vec![Piece::Constant(a)], value_at_one: None }
    }

    /// Step function: `levels[j]` on `(grid[j], grid[j+1]]`.
    pub fn steps(grid: Vec<F>, levels: Vec<F>) -> Result<Self> {
        Self::new(grid, levels.into_iter().map(Piece::Constant).collect())
    }

    /// Overrides the value at exactly `r = 1`, leaving the left limit untouched.
    pub fn with_value_at_one(mut self, value: F) -> Self {
        self.value_at_one = Some(value);
        self
    }

    pub fn breakpoints(&self) -> &[F] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece<F>] {
        &self.pieces
    }

    pub fn value_at_one(&self) -> Option<F> {
        self.value_at_one
    }

    /// Interval `[b_{j-1}, b_j]` of piece `j`.
    pub fn interval(&self, j: usize) -> (F, F) {
        (self.breakpoints[j], self.breakpoints[j + 1])
    }

    /// Index of the piece owning `r` under the right-closed convention.
    pub fn piece_index(&self, r: F) -> usize {
        let i = self.breakpoints.partition_point(|b| *b < r);
        i.clamp(1, self.pieces.len()) - 1
    }

    /// Index of the piece owning `(r, r + eps)`.
    pub fn piece_index_right(&self, r: F) -> usize {
        let i = self.breakpoints.partition_point(|b| *b <= r);
        i.clamp(1, self.pieces.len()) - 1
    }

    pub fn eval(&self, r: F) -> F {
        if r >= F::one() {
            if let Some(v) = self.value_at_one {
                return v;
            }
        }
        self.pieces[self.piece_index(r)].eval(r)
    }

    /// Limit from the left (ignores any override at rank 1).
    pub fn left_limit(&self, r: F) -> F {
        self.pieces[self.piece_index(r)].eval(r)
    }

    /// Limit from the right.
    pub fn right_limit(&self, r: F) -> F {
        self.pieces[self.piece_index_right(r)].eval(r)
    }

    /// Exact integral over `[a, b]` (clamped to `[0, 1]`).
    pub fn integral(&self, a: F, b: F) -> F {
        let (a, b) = (a.max(F::zero()), b.min(F::one()));
        if b <= a {
            return F::zero();
        }
        (0..self.pieces.len())
            .map(|j| {
                let (lo, hi) = self.interval(j);
                self.pieces[j].integral(lo.max(a), hi.min(b))
            })
            .sum()
    }

    /// Breakpoints together with interior nodes of tabulated pieces, sorted.
    pub fn knots(&self) -> Vec<F> {
        let mut out = self.breakpoints.clone();
        for (j, p) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.interval(j);
            p.interior_nodes(lo, hi, &mut out);
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        out.dedup();
        out
    }

    /// Tabulates `g` piece by piece on the given rank grid, keeping the
    /// breakpoints of `self`. `g(j, r)` is called with the owning piece index so
    /// callers can use one-sided values at the breakpoints.
    pub fn tabulate_like<G: FnMut(usize, F) -> F>(
        breakpoints: &[F],
        grid: &[F],
        mut g: G,
    ) -> Result<Self> {
        let mut pieces = Vec::with_capacity(breakpoints.len() - 1);
        for j in 0..breakpoints.len() - 1 {
            let (lo, hi) = (breakpoints[j], breakpoints[j + 1]);
            let nodes = segment_nodes(grid, lo, hi);
            let values = nodes.iter().map(|&r| g(j, r)).collect();
            pieces.push(Piece::Tabulated { grid: nodes, values });
        }
        Self::new(breakpoints.to_vec(), pieces)
    }
}

/// A function of rank that the state ODE can integrate.
///
/// Implementors report the ranks at which they may fail to be smooth so that
/// integration steps never straddle them.
pub trait RankFn<F: Real>: Sync {
    /// Value under the right-closed convention.
    fn value(&self, r: F) -> F;
    /// Limit from the right at `r`.
    fn value_right(&self, r: F) -> F;
    /// Sorted ranks (including 0 and 1) where the function may be non-smooth.
    fn knots(&self) -> Vec<F>;
}

impl<F: Real> RankFn<F> for PiecewiseFn<F> {
    fn value(&self, r: F) -> F {
        self.left_limit(r)
    }
    fn value_right(&self, r: F) -> F {
        self.right_limit(r)
    }
    fn knots(&self) -> Vec<F> {
        PiecewiseFn::knots(self)
    }
}

/// `∫_lo^hi p(y) / sqrt(1 - y) dy` for one piece, via `y = 1 - u^2`.
///
/// After the substitution the integrand is `2 p(1 - u^2)` on
/// `[sqrt(1 - hi), sqrt(1 - lo)]`, which is bounded even when `hi = 1`.
pub(crate) fn piece_sqrt_weight<F: Real>(
    piece: &Piece<F>,
    lo: F,
    hi: F,
    quad: &Quadrature<F>,
) -> Result<F> {
    piece_sqrt_weight_shifted(piece, lo, hi, None, quad)
}

/// As [`piece_sqrt_weight`] but for `level - p(y)` when `level` is given.
fn piece_sqrt_weight_shifted<F: Real>(
    piece: &Piece<F>,
    lo: F,
    hi: F,
    level: Option<F>,
    quad: &Quadrature<F>,
) -> Result<F> {
    if hi <= lo {
        return Ok(F::zero());
    }
    let u = |y: F| (F::one() - y).max(F::zero()).sqrt();
    let two: F = lit(2.0);
    let w_lo = F::one() - lo;
    let offset = level.map(|l| l - piece.eval(lo));
    let integrand = |s: F| match offset {
        Some(d) => two * (d + piece.tail_difference(w_lo, s * s)),
        None => two * piece.eval_tail(s * s),
    };
    let mut nodes = vec![lo];
    piece.interior_nodes(lo, hi, &mut nodes);
    nodes.push(hi);
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    // cancellation between terms of a sum makes the integrand noisy at this level
    let noise = F::epsilon() * lit(64.0) * term_scale(piece, lo, hi);
    let quad = match level {
        None if noise.is_finite() => quad.abs_tol(quad.abs_tol.max(noise * two)),
        _ => *quad,
    };
    let mut total = F::zero();
    for w in nodes.windows(2) {
        let (ua, ub) = (u(w[1]), u(w[0]));
        if ub <= ua {
            continue;
        }
        let part = if piece.is_smooth_polynomial() {
            // polynomial of degree <= 4 in u between nodes
            gauss_legendre_3(integrand, ua, ub)
        } else {
            quad.abs_tol(quad.abs_tol * (ub - ua)).integrate(integrand, ua, ub)?.value
        };
        if !part.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: to_f64(w[0]) });
        }
        total = total + part;
    }
    Ok(total)
}

/// Largest magnitude among the terms of `piece` at the ends of `[lo, hi]`.
fn term_scale<F: Real>(piece: &Piece<F>, lo: F, hi: F) -> F {
    match piece {
        Piece::Sum(parts) => parts.iter().map(|p| term_scale(p, lo, hi)).fold(F::zero(), |a, b| a + b),
        _ => piece.eval(lo).abs().max(piece.eval(hi).abs()),
    }
}

/// `∫_r^1 f(y) / sqrt(1 - y) dy`, integrating each piece in the variable
/// `u = sqrt(1 - y)` to remove the endpoint singularity.
pub fn integrate_sqrt_weight<F: Real>(f: &PiecewiseFn<F>, r: F, quad: &Quadrature<F>) -> Result<F> {
    let r = r.max(F::zero());
    if r >= F::one() {
        return Ok(F::zero());
    }
    let mut total = F::zero();
    for j in f.piece_index_right(r)..f.pieces.len() {
        let (lo, hi) = f.interval(j);
        total = total + piece_sqrt_weight(&f.pieces[j], lo.max(r), hi, quad)?;
    }
    Ok(total)
}

/// Cumulative table of `I(r) = ∫_r^1 f(y) / sqrt(1 - y) dy` for fast repeated queries.
#[derive(Debug, Clone)]
pub struct SqrtWeightTable<F> {
    f: PiecewiseFn<F>,
    knots: Vec<F>,
    tail: Vec<F>,
    quad: Quadrature<F>,
}

impl<F: Real> SqrtWeightTable<F> {
    pub fn new(f: PiecewiseFn<F>, quad: Quadrature<F>) -> Result<Self> {
        let mut knots = f.knots();
        let extra = 64;
        knots.extend((1..extra).map(|i| lit::<F>(i as f64 / extra as f64)));
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        knots.dedup();
        let mut tail = vec![F::zero(); knots.len()];
        for k in (0..knots.len() - 1).rev() {
            let (lo, hi) = (knots[k], knots[k + 1]);
            let j = f.piece_index_right(lo);
            tail[k] = tail[k + 1] + piece_sqrt_weight(&f.pieces[j], lo, hi, &quad)?;
        }
        Ok(Self { f, knots, tail, quad })
    }

    pub fn function(&self) -> &PiecewiseFn<F> {
        &self.f
    }

    /// `I(r)`.
    pub fn tail_integral(&self, r: F) -> F {
        if r >= F::one() {
            return F::zero();
        }
        let r = r.max(F::zero());
        let k = self.knots.partition_point(|x| *x <= r);
        if k == 0 {
            return self.tail[0];
        }
        let (lo, hi) = (self.knots[k - 1], self.knots[k]);
        if r == lo {
            return self.tail[k - 1];
        }
        let j = self.f.piece_index_right(lo);
        let part = piece_sqrt_weight(&self.f.pieces[j], r, hi, &self.quad)
            .expect("table construction already validated finiteness");
        self.tail[k] + part
    }

    /// `∫_r^1 (level - f(y)) / sqrt(1 - y) dy`.
    ///
    /// The difference is formed inside the integrand on the segment holding
    /// `r`, so the result keeps its relative accuracy when `level` is close to
    /// the weighted mean of `f` (as happens near rank 1).
    pub fn deficit(&self, level: F, r: F) -> F {
        if r >= F::one() {
            return F::zero();
        }
        let r = r.max(F::zero());
        let k = self.knots.partition_point(|x| *x <= r).max(1);
        let (lo, hi) = (self.knots[k - 1], self.knots[k]);
        let j = self.f.piece_index_right(lo);
        let local = piece_sqrt_weight_shifted(&self.f.pieces[j], r, hi, Some(level), &self.quad)
            .expect("table construction already validated finiteness");
        let scale = level * lit(2.0) * (F::one() - hi).sqrt();
        let mut far = scale - self.tail[k];
        if far.abs() <= F::epsilon() * lit(16.0) * (scale.abs() + self.tail[k].abs()) {
            far = F::zero();
        }
        local + far
    }

    /// `I(r) / (2 sqrt(1 - r))`, with the limit `f(1)` at rank 1.
    pub fn weighted_mean(&self, r: F) -> F {
        if r >= F::one() {
            return self.f.eval(F::one());
        }
        let s = (F::one() - r).sqrt();
        self.tail_integral(r) / (lit::<F>(2.0) * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> Quadrature<f64> {
        Quadrature::with_rel_tol(1e-10)
    }

    #[test]
    fn right_closed_evaluation() {
        let f = PiecewiseFn::steps(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(0.0), 2.0);
        assert_eq!(f.eval(0.500001), 0.0);
        assert_eq!(f.right_limit(0.5), 0.0);
        assert_eq!(f.left_limit(0.5), 2.0);
    }

    #[test]
    fn power_and_tabulated_evaluation() {
        let p = PiecewiseFn::single(Piece::power(1.0, 1.0)).unwrap();
        assert_relative_eq!(p.eval(0.25), 0.75);
        let t = PiecewiseFn::single(Piece::Tabulated { grid: vec![0.0, 1.0], values: vec![3.0, 1.0] })
            .unwrap();
        assert_relative_eq!(t.eval(0.5), 2.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(matches!(
            PiecewiseFn::steps(vec![0.0, 0.6, 0.5, 1.0], vec![1.0, 1.0, 1.0]),
            Err(Error::InvalidBreakpoints(_))
        ));
        assert!(matches!(
            PiecewiseFn::steps(vec![0.1, 1.0], vec![1.0]),
            Err(Error::InvalidBreakpoints(_))
        ));
        assert!(matches!(
            PiecewiseFn::steps(vec![0.0, 1.0], vec![1.0, 2.0]),
            Err(Error::InvalidBreakpoints(_))
        ));
    }

    #[test]
    fn non_lipschitz_power_needs_force() {
        let piece = Piece::power(1.0, 0.5);
        assert!(matches!(
            PiecewiseFn::single(piece.clone()),
            Err(Error::NonLipschitzPiece { index: 0, .. })
        ));
        assert!(PiecewiseFn::new_forced(vec![0.0, 1.0], vec![piece.clone()]).is_ok());
        // away from rank 1 the same piece is fine
        assert!(PiecewiseFn::new(vec![0.0, 0.5, 1.0], vec![piece, Piece::Constant(0.0)]).is_ok());
    }

    #[test]
    fn tabulated_must_cover_interval() {
        let piece = Piece::Tabulated { grid: vec![0.2, 1.0], values: vec![1.0, 0.0] };
        assert!(matches!(PiecewiseFn::single(piece), Err(Error::InvalidPiece { .. })));
    }

    #[test]
    fn exact_integrals() {
        let f = PiecewiseFn::new(
            vec![0.0, 0.3, 0.6, 1.0],
            vec![
                Piece::Constant(2.0),
                Piece::affine(1.0, -0.5),
                Piece::power(3.0, 2.0),
            ],
        )
        .unwrap();
        let expected = 0.6 + (0.3 - 0.25 * (0.36 - 0.09)) + 3.0 * 0.4f64.powi(3) / 3.0;
        assert_relative_eq!(f.integral(0.0, 1.0), expected, max_relative = 1e-14);
        let tab = PiecewiseFn::single(Piece::Tabulated {
            grid: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 1.0, 0.0],
        })
        .unwrap();
        assert_relative_eq!(tab.integral(0.25, 1.0), 0.25 + 0.25, max_relative = 1e-14);
    }

    #[test]
    fn sqrt_weight_constant() {
        let f = PiecewiseFn::constant(1.0);
        assert_relative_eq!(integrate_sqrt_weight(&f, 0.0, &quad()).unwrap(), 2.0, max_relative = 1e-12);
        let b = 3.0;
        let f = PiecewiseFn::constant(b);
        let r = 0.37;
        assert_relative_eq!(
            integrate_sqrt_weight(&f, r, &quad()).unwrap(),
            2.0 * b * (1.0f64 - r).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sqrt_weight_uniform_cutoff() {
        let f = PiecewiseFn::steps(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap();
        let v = integrate_sqrt_weight(&f, 0.0, &quad()).unwrap();
        assert_relative_eq!(v, 1.171573, epsilon = 1e-6);
        assert_relative_eq!(v, 4.0 * (1.0 - 0.5f64.sqrt()), max_relative = 1e-12);
    }

    #[test]
    fn sqrt_weight_linear_power() {
        let f = PiecewiseFn::single(Piece::power(1.0, 1.0)).unwrap();
        assert_relative_eq!(integrate_sqrt_weight(&f, 0.0, &quad()).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn sqrt_weight_rejects_non_finite() {
        let f = PiecewiseFn::constant(f64::INFINITY);
        assert!(matches!(
            integrate_sqrt_weight(&f, 0.0, &quad()),
            Err(Error::NonFiniteIntegrand { .. })
        ));
    }

    #[test]
    fn table_matches_direct_integration() {
        let f = PiecewiseFn::new(
            vec![0.0, 0.3, 0.8, 1.0],
            vec![Piece::Constant(2.0), Piece::power(1.5, 1.5), Piece::affine(0.8, -0.5)],
        )
        .unwrap();
        let table = SqrtWeightTable::new(f.clone(), quad()).unwrap();
        for i in 0..=50 {
            let r = i as f64 / 50.0 * 0.999;
            let direct = integrate_sqrt_weight(&f, r, &quad()).unwrap();
            assert_relative_eq!(table.tail_integral(r), direct, max_relative = 1e-11, epsilon = 1e-14);
        }
        assert_eq!(table.weighted_mean(1.0), f.eval(1.0));
        for &r in &[0.0, 0.29, 0.5, 0.99, 1.0 - 1e-7] {
            let level = f.eval(r);
            let expected = level * 2.0 * (1.0f64 - r).sqrt() - table.tail_integral(r);
            assert_relative_eq!(table.deficit(level, r), expected, max_relative = 1e-6, epsilon = 1e-13);
        }
    }

    #[test]
    fn knots_include_tabulated_nodes() {
        let f = PiecewiseFn::new(
            vec![0.0, 0.5, 1.0],
            vec![
                Piece::Tabulated { grid: vec![0.0, 0.25, 0.5], values: vec![1.0, 0.5, 0.2] },
                Piece::Constant(0.0),
            ],
        )
        .unwrap();
        assert_eq!(f.knots(), vec![0.0, 0.25, 0.5, 1.0]);
    }
}
