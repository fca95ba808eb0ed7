use super::{check_finite, JumpMeasure, Side};
use crate::error::{Error, Result};

/// Density `c1 · x^{-(1+alpha1)}` on `(0, 1]` and `c2 · (-x)^{-(1+alpha2)}` on `[-1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSidedPolynomial {
    pub c1: f64,
    pub alpha1: f64,
    pub c2: f64,
    pub alpha2: f64,
}

impl TwoSidedPolynomial {
    pub fn new(c1: f64, alpha1: f64, c2: f64, alpha2: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("alpha1", alpha1), ("c2", c2), ("alpha2", alpha2)] {
            check_finite(name, v)?;
        }
        if c1 < 0.0 || c2 < 0.0 {
            return Err(Error::InvalidModel("c1 and c2 must be nonnegative".into()));
        }
        if c1 + c2 <= 0.0 {
            return Err(Error::InvalidModel(
                "c1 + c2 must be positive (use family 'none' for a Brownian model)".into(),
            ));
        }
        if !(alpha1 < 2.0 && alpha2 <= alpha1) {
            return Err(Error::InvalidModel(format!(
                "need 2 > alpha1 >= alpha2, got alpha1 = {alpha1}, alpha2 = {alpha2}"
            )));
        }
        Ok(Self {
            c1,
            alpha1,
            c2,
            alpha2,
        })
    }

    pub fn symmetric(c: f64, alpha: f64) -> Result<Self> {
        Self::new(c, alpha, c, alpha)
    }

    fn side(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Positive => (self.c1, self.alpha1),
            Side::Negative => (self.c2, self.alpha2),
        }
    }
}

impl JumpMeasure for TwoSidedPolynomial {
    fn family(&self) -> &'static str {
        "two_sided_polynomial"
    }

    fn density(&self, side: Side, x: f64) -> f64 {
        let (c, alpha) = self.side(side);
        if c == 0.0 || x <= 0.0 || x > 1.0 {
            return 0.0;
        }
        c * x.powf(-(1.0 + alpha))
    }

    fn is_symmetric(&self) -> bool {
        self.c1 == self.c2 && self.alpha1 == self.alpha2
    }

    fn has_bounded_variation(&self) -> bool {
        Side::BOTH.iter().all(|&s| {
            let (c, alpha) = self.side(s);
            c == 0.0 || alpha < 1.0
        })
    }

    fn side_is_empty(&self, side: Side) -> bool {
        self.side(side).0 == 0.0
    }

    fn side_tail_closed(&self, side: Side, eps: f64) -> Option<f64> {
        let (c, alpha) = self.side(side);
        if c == 0.0 || eps >= 1.0 {
            return Some(0.0);
        }
        Some(if alpha == 0.0 {
            -c * eps.ln()
        } else {
            c * (eps.powf(-alpha) - 1.0) / alpha
        })
    }

    fn side_moment_closed(&self, side: Side, eps: f64, k: i32) -> Option<f64> {
        let (c, alpha) = self.side(side);
        if c == 0.0 {
            return Some(0.0);
        }
        let p = k as f64 - alpha;
        if p <= 0.0 {
            return Some(f64::INFINITY);
        }
        Some(c * eps.min(1.0).powf(p) / p)
    }

    fn side_jump_quantile(&self, side: Side, delta: f64, q: f64) -> Option<f64> {
        let (c, alpha) = self.side(side);
        if c == 0.0 {
            return None;
        }
        Some(if alpha == 0.0 {
            delta.powf(q)
        } else {
            (1.0 + q * (delta.powf(-alpha) - 1.0)).powf(-1.0 / alpha)
        })
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("c1", self.c1),
            ("alpha1", self.alpha1),
            ("c2", self.c2),
            ("alpha2", self.alpha2),
        ]
    }
}
