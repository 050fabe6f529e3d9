//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<F> {
    pub value: F,
    pub error: F,
    pub intervals: usize,
}

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<F> {
    pub rel_tol: F,
    pub abs_tol: F,
    pub max_intervals: usize,
}

impl<F: Real> Default for Quadrature<F> {
    fn default() -> Self {
        Self::with_rel_tol(F::default_quad_tol())
    }
}

struct Panel<F> {
    a: F,
    b: F,
    value: F,
    error: F,
    magnitude: F,
}

impl<F: Real> Quadrature<F> {
    pub fn with_rel_tol(rel_tol: F) -> Self {
        Self {
            rel_tol,
            abs_tol: F::min_positive_value().sqrt() * lit(1e-30),
            max_intervals: 2000,
        }
    }

    pub fn abs_tol(mut self, abs_tol: F) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    fn panel<G: FnMut(F) -> F>(f: &mut G, a: F, b: F) -> Result<Panel<F>> {
        let half: F = lit(0.5);
        let centre = half * (a + b);
        let radius = half * (b - a);
        let fc = f(centre);
        if !fc.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: to_f64(centre) });
        }
        let mut kronrod = fc * lit(WGK[7]);
        let mut gauss = fc * lit(WG[3]);
        let mut abs = fc.abs() * lit(WGK[7]);
        for j in 0..7 {
            let dx = radius * lit(XGK[j]);
            let (xl, xr) = (centre - dx, centre + dx);
            let (fl, fr) = (f(xl), f(xr));
            if !fl.is_finite() {
                return Err(Error::NonFiniteIntegrand { at: to_f64(xl) });
            }
            if !fr.is_finite() {
                return Err(Error::NonFiniteIntegrand { at: to_f64(xr) });
            }
            kronrod = kronrod + (fl + fr) * lit(WGK[j]);
            abs = abs + (fl.abs() + fr.abs()) * lit(WGK[j]);
            if j % 2 == 1 {
                gauss = gauss + (fl + fr) * lit(WG[j / 2]);
            }
        }
        let value = kronrod * radius;
        let error = ((kronrod - gauss) * radius).abs();
        Ok(Panel { a, b, value, error, magnitude: abs * radius })
    }

    /// Integrates `f` over `[a, b]`. Reversed limits flip the sign.
    pub fn integrate<G: FnMut(F) -> F>(&self, mut f: G, a: F, b: F) -> Result<Estimate<F>> {
        if a == b {
            return Ok(Estimate { value: F::zero(), error: F::zero(), intervals: 0 });
        }
        if b < a {
            let est = self.integrate(f, b, a)?;
            return Ok(Estimate { value: -est.value, ..est });
        }
        let mut panels = vec![Self::panel(&mut f, a, b)?];
        let min_width = (b - a) * F::epsilon() * lit(64.0);
        loop {
            let total: F = panels.iter().map(|p| p.value).sum();
            let error: F = panels.iter().map(|p| p.error).sum();
            let magnitude: F = panels.iter().map(|p| p.magnitude).sum();
            // rounding floor: cancellation makes errors below this meaningless
            let floor = magnitude * F::epsilon() * lit(50.0);
            let target = self.abs_tol.max(self.rel_tol * total.abs()).max(floor);
            if error <= target || panels.len() >= self.max_intervals {
                return Ok(Estimate { value: total, error, intervals: panels.len() });
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .fold((0, F::neg_infinity()), |acc, (i, p)| {
                    if p.error > acc.1 {
                        (i, p.error)
                    } else {
                        acc
                    }
                });
            let p = panels.swap_remove(worst);
            if p.b - p.a <= min_width {
                // cannot refine further; keep the panel and stop
                panels.push(p);
                let total: F = panels.iter().map(|p| p.value).sum();
                let error: F = panels.iter().map(|p| p.error).sum();
                return Ok(Estimate { value: total, error, intervals: panels.len() });
            }
            let mid = lit::<F>(0.5) * (p.a + p.b);
            panels.push(Self::panel(&mut f, p.a, mid)?);
            panels.push(Self::panel(&mut f, mid, p.b)?);
        }
    }

    /// Integrates over `[points[0], points[last]]`, restarting the adaptive
    /// scheme on every sub-interval so that kinks and jumps at `points` are
    /// never straddled.
    pub fn integrate_split<G: FnMut(F) -> F>(&self, mut f: G, points: &[F]) -> Result<F> {
        let mut total = F::zero();
        for w in points.windows(2) {
            if w[1] > w[0] {
                total = total + self.integrate(&mut f, w[0], w[1])?.value;
            }
        }
        Ok(total)
    }
}

/// Three-point Gauss–Legendre rule on `[a, b]`; exact for quintics.
pub fn gauss_legendre_3<F: Real, G: FnMut(F) -> F>(mut f: G, a: F, b: F) -> F {
    let half: F = lit(0.5);
    let centre = half * (a + b);
    let radius = half * (b - a);
    let node: F = lit(0.774_596_669_241_483_4);
    let w_outer: F = lit(5.0 / 9.0);
    let w_centre: F = lit(8.0 / 9.0);
    radius * (w_outer * (f(centre - radius * node) + f(centre + radius * node)) + w_centre * f(centre))
}
