use super::{check_finite, JumpMeasure, Side};
use crate::error::{Error, Result};

/// Symmetric measure with tail `Π̄(ε) = scale · ε^{-α} |ln ε|^{-γ}` below a
/// cutoff `ε_c`, continued to `Π̄(1) = 0` by `Π̄(ε_c) (1 - s)^p` with
/// `s = (ε - ε_c)/(1 - ε_c)`. The exponent `p` matches the logarithmic slope
/// at the cutoff, so the density is continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricLogPolynomial {
    pub alpha: f64,
    pub gamma_exp: f64,
    pub scale: f64,
    cutoff: f64,
    power: f64,
}

impl SymmetricLogPolynomial {
    pub fn new(alpha: f64, gamma_exp: f64, scale: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("gamma_exp", gamma_exp), ("scale", scale)] {
            check_finite(name, v)?;
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidModel(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if alpha == 2.0 && gamma_exp <= 1.0 {
            return Err(Error::InvalidModel(
                "alpha = 2 requires gamma_exp > 1 for a finite second moment".into(),
            ));
        }
        if scale <= 0.0 {
            return Err(Error::InvalidModel("scale must be positive".into()));
        }
        // the density stays positive below the cutoff when alpha > gamma/L
        let log_cut = if gamma_exp > 0.0 {
            (2.0 * gamma_exp / alpha).max(1.0)
        } else {
            1.0
        };
        let cutoff = (-log_cut).exp();
        let power = (1.0 - cutoff) * (alpha - gamma_exp / log_cut) / cutoff;
        Ok(Self {
            alpha,
            gamma_exp,
            scale,
            cutoff,
            power,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Two-sided tail `Π̄(ε)`.
    pub fn tail(&self, eps: f64) -> f64 {
        if eps >= 1.0 {
            return 0.0;
        }
        if eps <= self.cutoff {
            self.scale * eps.powf(-self.alpha) * (-eps.ln()).powf(-self.gamma_exp)
        } else {
            let s = (eps - self.cutoff) / (1.0 - self.cutoff);
            self.tail(self.cutoff) * (1.0 - s).powf(self.power)
        }
    }
}

impl JumpMeasure for SymmetricLogPolynomial {
    fn family(&self) -> &'static str {
        "symmetric_log_polynomial"
    }

    fn density(&self, _side: Side, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let two_sided = if x <= self.cutoff {
            let l = -x.ln();
            self.scale
                * x.powf(-self.alpha - 1.0)
                * l.powf(-self.gamma_exp)
                * (self.alpha - self.gamma_exp / l)
        } else {
            let s = (x - self.cutoff) / (1.0 - self.cutoff);
            self.tail(self.cutoff) * self.power * (1.0 - s).powf(self.power - 1.0)
                / (1.0 - self.cutoff)
        };
        0.5 * two_sided
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn has_bounded_variation(&self) -> bool {
        self.alpha < 1.0 || (self.alpha == 1.0 && self.gamma_exp > 1.0)
    }

    fn side_tail_closed(&self, _side: Side, eps: f64) -> Option<f64> {
        Some(0.5 * self.tail(eps))
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.cutoff]
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("alpha", self.alpha),
            ("gamma_exp", self.gamma_exp),
            ("scale", self.scale),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_log, QuadOptions};

    #[test]
    fn density_is_minus_half_tail_derivative() {
        let m = SymmetricLogPolynomial::new(1.2, 1.5, 0.7).unwrap();
        for x in [1e-4, 1e-2, 0.1, m.cutoff() * 0.999, 0.5, 0.9] {
            let h = x * 1e-6;
            let fd = -(m.tail(x + h) - m.tail(x - h)) / (2.0 * h);
            let d = 2.0 * m.density(Side::Positive, x);
            assert!(((fd - d) / d).abs() < 1e-6, "x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn density_integrates_to_tail() {
        let m = SymmetricLogPolynomial::new(0.8, -0.5, 1.0).unwrap();
        let eps = 1e-3;
        let q = integrate_log(|x| m.density(Side::Positive, x), eps, m.cutoff(), QuadOptions::default()).value
            + integrate_log(|x| m.density(Side::Positive, x), m.cutoff(), 1.0, QuadOptions::default()).value;
        let t = m.side_tail_closed(Side::Positive, eps).unwrap();
        assert!(((q - t) / t).abs() < 1e-9, "{q} vs {t}");
    }

    #[test]
    fn continuous_at_cutoff() {
        let m = SymmetricLogPolynomial::new(1.5, 2.0, 1.0).unwrap();
        let c = m.cutoff();
        let a = m.density(Side::Positive, c * (1.0 - 1e-10));
        let b = m.density(Side::Positive, c * (1.0 + 1e-10));
        assert!(((a - b) / a).abs() < 1e-6);
        assert!(m.density(Side::Positive, 1e-8) > 0.0);
    }

    #[test]
    fn alpha_two_requires_strong_log_correction() {
        assert!(SymmetricLogPolynomial::new(2.0, 1.0, 1.0).is_err());
        assert!(SymmetricLogPolynomial::new(2.0, 1.5, 1.0).is_ok());
    }
}
