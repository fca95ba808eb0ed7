//! Exact small-ball probabilities of Brownian motion,
//! `P(sup_{s≤t} |σ B_s| ≤ ε)`, which depend on `s = σ² t / ε²` only.

use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Below this value of `s` the reflection sum converges faster.
const SWITCH: f64 = 0.1;

/// `(4/π) Σ_k (-1)^k/(2k+1) exp(-(2k+1)² π² s / 8)`.
fn eigen_series(s: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..400 {
        let m = (2 * k + 1) as f64;
        let term = (-m * m * PI * PI * s / 8.0).exp() / m;
        sum += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 * sum.abs() {
            break;
        }
    }
    4.0 / PI * sum
}

/// `1 - 4 Σ_{k≥0} (-1)^k Φ̄((2k+1)/√s)`.
fn reflection_series(s: f64) -> f64 {
    let a = 1.0 / s.sqrt();
    let mut sum = 0.0;
    for k in 0..400 {
        let m = (2 * k + 1) as f64;
        let term = 0.5 * erfc(m * a * FRAC_1_SQRT_2);
        sum += if k % 2 == 0 { term } else { -term };
        if term < 1e-300 || term < 1e-18 * sum.abs() {
            break;
        }
    }
    1.0 - 4.0 * sum
}

/// `P(sup_{u≤1} |B_u| ≤ 1/√s)` for standard Brownian motion.
pub fn small_ball_probability_scaled(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    if s < SWITCH {
        reflection_series(s)
    } else {
        eigen_series(s)
    }
}

/// `P(sup_{u≤t} |σ B_u| ≤ ε)`.
pub fn brownian_small_ball(t: f64, eps: f64, sigma: f64) -> f64 {
    small_ball_probability_scaled(sigma * sigma * t / (eps * eps))
}

/// `-log P(sup_{u≤t} |σ B_u| ≤ ε)`, accurate far into the tail.
pub fn brownian_small_ball_neg_log(t: f64, eps: f64, sigma: f64) -> f64 {
    let s = sigma * sigma * t / (eps * eps);
    if s < SWITCH {
        return -small_ball_probability_scaled(s).ln();
    }
    // factor out the leading eigenvalue
    let lead = PI * PI * s / 8.0;
    let mut rest = 0.0;
    for k in 1..200 {
        let m = (2 * k + 1) as f64;
        let term = (-(m * m - 1.0) * PI * PI * s / 8.0).exp() / m;
        rest += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    lead - (4.0 / PI).ln() - rest.ln_1p()
}
