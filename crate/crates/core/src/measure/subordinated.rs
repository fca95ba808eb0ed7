use super::{check_finite, JumpMeasure, Side};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_from_zero, integrate_log, QuadOptions};

/// Lévy measure `Π_A` of a driftless subordinator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subordinator {
    /// `a s^{-1} e^{-b s} ds`
    Gamma { a: f64, b: f64 },
    /// `c s^{-1-β} ds`, `0 < β < 1`
    Stable { beta: f64, c: f64 },
}

impl Subordinator {
    pub fn gamma(a: f64, b: f64) -> Result<Self> {
        check_finite("sub_a", a)?;
        check_finite("sub_b", b)?;
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidModel("gamma subordinator needs a, b > 0".into()));
        }
        Ok(Subordinator::Gamma { a, b })
    }

    pub fn stable(beta: f64, c: f64) -> Result<Self> {
        check_finite("sub_beta", beta)?;
        check_finite("sub_c", c)?;
        if !(beta > 0.0 && beta < 1.0) || c <= 0.0 {
            return Err(Error::InvalidModel(
                "stable subordinator needs 0 < beta < 1 and c > 0".into(),
            ));
        }
        Ok(Subordinator::Stable { beta, c })
    }

    pub fn levy_density(&self, s: f64) -> f64 {
        match *self {
            Subordinator::Gamma { a, b } => a / s * (-b * s).exp(),
            Subordinator::Stable { beta, c } => c * s.powf(-1.0 - beta),
        }
    }

    /// `ln` of the Lévy density at `s = e^{ln_s}`.
    pub fn ln_levy_density(&self, ln_s: f64) -> f64 {
        match *self {
            Subordinator::Gamma { a, b } => a.ln() - ln_s - b * ln_s.exp(),
            Subordinator::Stable { beta, c } => c.ln() - (1.0 + beta) * ln_s,
        }
    }

    /// Laplace exponent without drift: `∫ (1 - e^{-u s}) Π_A(ds)`.
    pub fn laplace_exponent(&self, u: f64) -> f64 {
        match *self {
            Subordinator::Gamma { a, b } => a * (u / b).ln_1p(),
            Subordinator::Stable { beta, c } => {
                c * statrs::function::gamma::gamma(1.0 - beta) / beta * u.powf(beta)
            }
        }
    }
}

/// Lévy measure of `σ B_{A_t}` for a subordinator with Lévy measure `Π_A`
/// and drift `γ_A`, truncated to `[-1, 1]`. The drift contributes the
/// Gaussian variance `σ² γ_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatedBrownian {
    pub subordinator: Subordinator,
    pub drift: f64,
    pub sigma: f64,
}

impl SubordinatedBrownian {
    pub fn new(subordinator: Subordinator, drift: f64, sigma: f64) -> Result<Self> {
        check_finite("gamma_a", drift)?;
        check_finite("sigma", sigma)?;
        if drift < 0.0 {
            return Err(Error::InvalidModel("subordinator drift must be nonnegative".into()));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidModel("sigma must be positive".into()));
        }
        Ok(Self {
            subordinator,
            drift,
            sigma,
        })
    }

    /// `Φ(u) = γ_A u + ∫ (1 - e^{-u s}) Π_A(ds)`.
    pub fn laplace_exponent(&self, u: f64) -> f64 {
        self.drift * u + self.subordinator.laplace_exponent(u)
    }
}

impl JumpMeasure for SubordinatedBrownian {
    fn family(&self) -> &'static str {
        "subordinated_bm"
    }

    fn density(&self, _side: Side, x: f64) -> f64 {
        if x <= 0.0 || x > 1.0 {
            return 0.0;
        }
        let var = self.sigma * self.sigma;
        // s = s0 v with s0 = x²/σ², kept in logs so tiny x cannot underflow
        let ln_s0 = 2.0 * x.ln() - var.ln();
        let ln_norm = -0.5 * (2.0 * std::f64::consts::PI * var).ln();
        if let Subordinator::Stable { beta, c } = self.subordinator {
            // ∫_0^∞ e^{-1/(2v)} v^{-3/2-β} dv = 2^{β+1/2} Γ(β+1/2)
            let ln_int = (beta + 0.5) * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(beta + 0.5);
            return (c.ln() + ln_norm + ln_int - (beta + 0.5) * ln_s0).exp();
        }
        let kernel = |v: f64| {
            let ln_s = ln_s0 + v.ln();
            (-0.5 / v + ln_norm - 0.5 * ln_s + self.subordinator.ln_levy_density(ln_s) + ln_s0).exp()
        };
        let opts = QuadOptions {
            rel_tol: 1e-12,
            ..QuadOptions::default()
        };
        let below = integrate_log(kernel, (-8.0f64).exp(), 1.0, opts).value;
        let above = integrate_from_zero(|r: f64| kernel(1.0 / r) / (r * r), 1.0, opts).value;
        below + above
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn has_bounded_variation(&self) -> bool {
        match self.subordinator {
            Subordinator::Gamma { .. } => self.drift == 0.0,
            Subordinator::Stable { beta, .. } => self.drift == 0.0 && beta < 0.5,
        }
    }

    fn implied_gaussian_variance(&self) -> f64 {
        self.sigma * self.sigma * self.drift
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        let mut p = match self.subordinator {
            Subordinator::Gamma { a, b } => vec![("sub_a", a), ("sub_b", b)],
            Subordinator::Stable { beta, c } => vec![("sub_beta", beta), ("sub_c", c)],
        };
        p.push(("gamma_a", self.drift));
        p.push(("sigma", self.sigma));
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GammaJumps;

    #[test]
    fn gamma_subordination_reproduces_variance_gamma_density() {
        let sub = SubordinatedBrownian::new(Subordinator::gamma(1.5, 2.0).unwrap(), 0.0, 0.7).unwrap();
        let vg = GammaJumps::new(1.5, 2.0, 0.0, 0.7).unwrap();
        for x in [1e-5, 1e-3, 0.02, 0.3, 1.0] {
            let a = sub.density(Side::Positive, x);
            let b = vg.density(Side::Negative, x);
            assert!(((a - b) / b).abs() < 1e-9, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn stable_subordination_gives_symmetric_stable_density() {
        // ν(x) = c Γ(1/2 + β) (2πσ²)^{-1/2} (x²/(2σ²))^{-1/2-β}
        let (beta, c, sigma) = (0.6, 0.8, 1.3);
        let sub = SubordinatedBrownian::new(Subordinator::stable(beta, c).unwrap(), 0.0, sigma).unwrap();
        let var = sigma * sigma;
        for x in [1e-4, 0.01, 0.5] {
            let exact = c * statrs::function::gamma::gamma(0.5 + beta)
                / (2.0 * std::f64::consts::PI * var).sqrt()
                * (x * x / (2.0 * var)).powf(-0.5 - beta);
            let d = sub.density(Side::Positive, x);
            assert!(((d - exact) / exact).abs() < 1e-9, "x={x}: {d} vs {exact}");
        }
    }

    #[test]
    fn laplace_exponent_of_stable_subordinator() {
        // Φ(u) = ∫ (1 - e^{-us}) c s^{-1-β} ds by quadrature
        let sub = Subordinator::stable(0.4, 1.1).unwrap();
        let u = 3.0;
        let f = |s: f64| -(-u * s).exp_m1() * sub.levy_density(s);
        let q = integrate_from_zero(f, 1.0, QuadOptions::default()).value
            + integrate_from_zero(|r: f64| f(1.0 / r) / (r * r), 1.0, QuadOptions::default()).value;
        assert!(((q - sub.laplace_exponent(u)) / q).abs() < 1e-9);
    }
}
