//! Lévy triplets `(γ, σ², Π)` with jumps bounded by one, and every integral
//! against `Π` that the rate-function layer consumes.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::measure::{EmptyMeasure, JumpMeasure, Side};
use crate::quadrature::{integrate_from_zero, integrate_log, QuadOptions};

/// Largest `|u| · ε` for which exponential tilts are evaluated.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// `e^z - 1 - z` without cancellation for small `z`.
pub fn exp_m1_minus_x(z: f64) -> f64 {
    if z.abs() < 0.05 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for n in 3..=10 {
            term *= z / n as f64;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

#[derive(Clone)]
pub struct LevyModel {
    gamma: f64,
    sigma2: f64,
    measure: Arc<dyn JumpMeasure>,
    closed_forms: bool,
    quad: QuadOptions,
}

impl fmt::Debug for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyModel")
            .field("gamma", &self.gamma)
            .field("sigma2", &self.sigma2)
            .field("family", &self.measure.family())
            .field("params", &self.measure.params())
            .finish()
    }
}

impl LevyModel {
    /// `sigma2` is the Gaussian variance on top of whatever the measure family
    /// implies itself (a subordinator drift).
    pub fn new(gamma: f64, sigma2: f64, measure: Arc<dyn JumpMeasure>) -> Result<Self> {
        if !gamma.is_finite() || !sigma2.is_finite() {
            return Err(Error::InvalidModel("gamma and sigma2 must be finite".into()));
        }
        if sigma2 < 0.0 {
            return Err(Error::InvalidModel(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        let sigma2 = sigma2 + measure.implied_gaussian_variance();
        Ok(Self {
            gamma,
            sigma2,
            measure,
            closed_forms: true,
            quad: QuadOptions::default(),
        })
    }

    pub fn brownian(gamma: f64, sigma2: f64) -> Result<Self> {
        Self::new(gamma, sigma2, Arc::new(EmptyMeasure))
    }

    /// Ignore the family's closed forms and integrate everything numerically.
    pub fn quadrature_only(mut self) -> Self {
        self.closed_forms = false;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn measure(&self) -> &Arc<dyn JumpMeasure> {
        &self.measure
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn has_jumps(&self) -> bool {
        !self.measure.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.gamma.abs() <= 1e-12 && self.measure.is_symmetric()
    }

    pub fn has_bounded_variation(&self) -> bool {
        self.sigma2 == 0.0 && self.measure.has_bounded_variation()
    }

    fn check_eps(eps: f64) -> Result<()> {
        if eps > 0.0 && eps <= 1.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("eps must lie in (0, 1], got {eps}")))
        }
    }

    fn check_guard(eps: f64, u: f64) -> Result<()> {
        let product = u.abs() * eps;
        if product.is_finite() && product <= OVERFLOW_GUARD {
            Ok(())
        } else {
            Err(Error::OverflowGuard {
                product,
                guard: OVERFLOW_GUARD,
            })
        }
    }

    /// `∫_lo^hi g(x) ν_side(x) dx` with `0 <= lo < hi <= 1`.
    fn side_integral<G: Fn(f64) -> f64>(&self, side: Side, lo: f64, hi: f64, g: G) -> f64 {
        if self.measure.side_is_empty(side) || hi <= lo {
            return 0.0;
        }
        let f = |x: f64| {
            let d = self.measure.density(side, x);
            if d == 0.0 {
                0.0
            } else {
                g(x) * d
            }
        };
        let mut cuts: Vec<f64> = self
            .measure
            .breakpoints()
            .into_iter()
            .filter(|&b| b > lo && b < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut start = lo;
        for end in cuts.into_iter().chain(std::iter::once(hi)) {
            total += if start == 0.0 {
                integrate_from_zero(f, end, self.quad).value
            } else {
                integrate_log(f, start, end, self.quad).value
            };
            start = end;
        }
        total
    }

    fn side_tail(&self, side: Side, eps: f64) -> f64 {
        if self.closed_forms {
            if let Some(v) = self.measure.side_tail_closed(side, eps) {
                return v;
            }
        }
        self.side_integral(side, eps, 1.0, |_| 1.0)
    }

    fn side_moment(&self, side: Side, eps: f64, k: i32) -> f64 {
        if self.closed_forms {
            if let Some(v) = self.measure.side_moment_closed(side, eps, k) {
                return v;
            }
        }
        self.side_integral(side, 0.0, eps, |x| x.powi(k))
    }

    /// `Π̄(ε) = Π([-ε, ε]^c)`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        if eps == 1.0 {
            return Ok(0.0);
        }
        Ok(Side::BOTH.iter().map(|&s| self.side_tail(s, eps)).sum())
    }

    /// `∫_{-ε}^{ε} x^k Π(dx)` for `k ∈ {1, 2}`.
    pub fn truncated_moment(&self, eps: f64, k: u32) -> Result<f64> {
        Self::check_eps(eps)?;
        match k {
            2 => Ok(Side::BOTH.iter().map(|&s| self.side_moment(s, eps, 2)).sum()),
            1 => {
                if self.measure.is_symmetric() {
                    return Ok(0.0);
                }
                if !self.measure.has_bounded_variation() {
                    return Err(Error::Divergent(
                        "first moment near zero of an asymmetric measure of unbounded variation"
                            .into(),
                    ));
                }
                Ok(self.side_moment(Side::Positive, eps, 1) - self.side_moment(Side::Negative, eps, 1))
            }
            _ => Err(Error::domain(format!("moment order must be 1 or 2, got {k}"))),
        }
    }

    /// `∫_{-ε}^{ε} |x| Π(dx)`, infinite for unbounded variation.
    pub fn truncated_abs_moment(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        if !self.measure.has_bounded_variation() {
            return Ok(f64::INFINITY);
        }
        Ok(Side::BOTH.iter().map(|&s| self.side_moment(s, eps, 1)).sum())
    }

    /// `∫_{ε < |x| <= 1} x Π(dx)`, the compensator of the jumps removed at level ε.
    pub fn compensator(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        if self.measure.is_symmetric() || eps == 1.0 {
            return Ok(0.0);
        }
        Ok(self.side_integral(Side::Positive, eps, 1.0, |x| x)
            - self.side_integral(Side::Negative, eps, 1.0, |x| x))
    }

    /// Effective drift `c = γ - ∫_{[-1,1]} x Π(dx)` when the jump part has
    /// bounded variation.
    pub fn effective_drift(&self) -> Option<f64> {
        if !self.measure.has_bounded_variation() {
            return None;
        }
        let mean = self.truncated_moment(1.0, 1).ok()?;
        Some(self.gamma - mean)
    }

    /// `∫_{-ε}^{ε} x² e^{-u x} Π(dx)`.
    pub fn tilted_second_moment(&self, eps: f64, u: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        Self::check_guard(eps, u)?;
        if u == 0.0 {
            return self.truncated_moment(eps, 2);
        }
        Ok(Side::BOTH
            .iter()
            .map(|&s| {
                let v = -u * s.sign();
                self.side_integral(s, 0.0, eps, move |x| x * x * (v * x).exp())
            })
            .sum())
    }

    /// `∫_{-ε}^{ε} (e^{u x} - 1 - u x) Π(dx)`.
    pub fn exp_compensated_integral(&self, eps: f64, u: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        Self::check_guard(eps, u)?;
        if u == 0.0 || !self.has_jumps() {
            return Ok(0.0);
        }
        Ok(Side::BOTH
            .iter()
            .map(|&s| {
                let v = u * s.sign();
                self.side_integral(s, 0.0, eps, move |x| exp_m1_minus_x(v * x))
            })
            .sum())
    }

    /// `∫_{-ε}^{ε} x (e^{u x} - 1) Π(dx)`, the jump part of `Λ'_ε(u)`.
    pub fn tilted_first_moment(&self, eps: f64, u: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        Self::check_guard(eps, u)?;
        if u == 0.0 || !self.has_jumps() {
            return Ok(0.0);
        }
        Ok(Side::BOTH
            .iter()
            .map(|&s| {
                let v = u * s.sign();
                s.sign() * self.side_integral(s, 0.0, eps, move |x| x * (v * x).exp_m1())
            })
            .sum())
    }

    /// Compound-Poisson sampler for the jumps with `delta < |x| <= 1`.
    pub fn jump_sampler(&self, delta: f64) -> Result<JumpSampler> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let sides = Side::BOTH
            .iter()
            .filter(|&&s| !self.measure.side_is_empty(s))
            .map(|&s| SideSampler::new(self, s, delta))
            .filter(|s| s.rate > 0.0)
            .collect();
        Ok(JumpSampler { delta, sides })
    }

    /// Jumps `(time, size)` on `[0, horizon]` with `|size| > delta`, sorted by time.
    pub fn sample_jumps<R: Rng + ?Sized>(
        &self,
        delta: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Result<Vec<Jump>> {
        self.jump_sampler(delta)?.sample(horizon, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

const INVERSE_TABLE_NODES: usize = 512;

#[derive(Debug, Clone)]
struct SideSampler {
    side: Side,
    rate: f64,
    measure: Arc<dyn JumpMeasure>,
    delta: f64,
    /// `(x_i, Π_side((x_i, 1]))`, x ascending, used when no closed quantile exists
    table: Vec<(f64, f64)>,
}

impl SideSampler {
    fn new(model: &LevyModel, side: Side, delta: f64) -> Self {
        let rate = model.side_tail(side, delta);
        let closed = model.closed_forms
            && model.measure.side_jump_quantile(side, delta, 0.5).is_some();
        let table = if closed || rate <= 0.0 {
            Vec::new()
        } else {
            let n = INVERSE_TABLE_NODES;
            let xs: Vec<f64> = (0..=n)
                .map(|i| delta * (1.0 / delta).powf(i as f64 / n as f64))
                .map(|x| x.min(1.0))
                .collect();
            let mut tails = vec![0.0; n + 1];
            for i in (0..n).rev() {
                tails[i] = tails[i + 1] + model.side_integral(side, xs[i], xs[i + 1], |_| 1.0);
            }
            xs.into_iter().zip(tails).collect()
        };
        Self {
            side,
            rate,
            measure: model.measure.clone(),
            delta,
            table,
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        if self.table.is_empty() {
            if let Some(x) = self.measure.side_jump_quantile(self.side, self.delta, q) {
                return x;
            }
        }
        let target = q * self.table[0].1;
        // tails decrease with x
        let i = self.table.partition_point(|n| n.1 > target).clamp(1, self.table.len() - 1);
        let (x0, t0) = self.table[i - 1];
        let (x1, t1) = self.table[i];
        if t0 == t1 {
            return x0;
        }
        let w = (t0 - target) / (t0 - t1);
        (x0.ln() + w * (x1 / x0).ln()).exp()
    }
}

/// Samples the compound-Poisson part `Π|_{δ<|x|≤1}` of a model.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    delta: f64,
    sides: Vec<SideSampler>,
}

impl JumpSampler {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total jump intensity `Π̄(δ)`.
    pub fn rate(&self) -> f64 {
        self.sides.iter().map(|s| s.rate).sum()
    }

    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.rate();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = &self.sides[self.sides.len() - 1];
        for s in &self.sides {
            if pick < s.rate {
                chosen = s;
                break;
            }
            pick -= s.rate;
        }
        let q: f64 = rng.random();
        chosen.side.sign() * chosen.quantile(q)
    }

    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<Vec<Jump>> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        let mean = horizon * self.rate();
        if mean <= 0.0 {
            return Ok(Vec::new());
        }
        let count = Poisson::new(mean)
            .map_err(|e| Error::domain(format!("poisson intensity {mean}: {e}")))?
            .sample(rng) as usize;
        let mut jumps: Vec<Jump> = (0..count)
            .map(|_| Jump {
                time: rng.random::<f64>() * horizon,
                size: self.sample_size(rng),
            })
            .collect();
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(jumps)
    }
}
