use super::{check_finite, JumpMeasure, Side};
use crate::error::{Error, Result};

/// Lévy measure of the Variance-Gamma process `σ B_{A_t} + μ A_t`, where `A`
/// is the Gamma subordinator with Lévy measure `a s^{-1} e^{-b s} ds`
/// (Laplace exponent `a ln(1 + u/b)`), hard-truncated to `[-1, 1]`.
///
/// Subordinating the Gaussian kernel gives
/// `ν(x) = a/|x| · exp(μ x / σ² − |x| √(μ² + 2 b σ²) / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaJumps {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl GammaJumps {
    pub fn new(a: f64, b: f64, mu: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("mu", mu), ("sigma", sigma)] {
            check_finite(name, v)?;
        }
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidModel("a and b must be positive".into()));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidModel("sigma must be positive".into()));
        }
        Ok(Self { a, b, mu, sigma })
    }

    /// Laplace exponent of the Gamma subordinator.
    pub fn laplace_exponent(&self, u: f64) -> f64 {
        self.a * (u / self.b).ln_1p()
    }

    /// `E A_1 = a / b`.
    pub fn subordinator_mean(&self) -> f64 {
        self.a / self.b
    }

    fn decay(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        (self.mu * self.mu + 2.0 * self.b * s2).sqrt() / s2
    }
}

impl JumpMeasure for GammaJumps {
    fn family(&self) -> &'static str {
        "gamma_jumps"
    }

    fn density(&self, side: Side, x: f64) -> f64 {
        if x <= 0.0 || x > 1.0 {
            return 0.0;
        }
        let tilt = side.sign() * self.mu / (self.sigma * self.sigma);
        self.a / x * ((tilt - self.decay()) * x).exp()
    }

    fn is_symmetric(&self) -> bool {
        self.mu == 0.0
    }

    fn has_bounded_variation(&self) -> bool {
        true
    }

    fn side_moment_closed(&self, side: Side, eps: f64, k: i32) -> Option<f64> {
        // ∫_0^ε a x^{k-1} e^{-r x} dx has a short closed form for k = 1
        if k != 1 {
            return None;
        }
        let r = self.decay() - side.sign() * self.mu / (self.sigma * self.sigma);
        let eps = eps.min(1.0);
        Some(self.a * (-(-r * eps).exp_m1()) / r)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.a), ("b", self.b), ("mu", self.mu), ("sigma", self.sigma)]
    }
}
