//! Diagnostics for the side conditions under which the rate function
//! governs the liminf behaviour.

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::norming::invert_rate_log;
use crate::rate::{evaluate_rate, truncated_variance, RateTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    /// Nonincreasing as ε decreases (or n grows).
    Decreasing,
    /// Neither monotone direction.
    Bounded,
    /// Nondecreasing and growing.
    Increasing,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Decreasing => "decreasing",
            Trend::Bounded => "bounded",
            Trend::Increasing => "increasing",
        }
    }
}

fn trend(values: &[f64]) -> Trend {
    let slack = |a: f64| 1e-12 * a.abs() + 1e-300;
    let non_increasing = values.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    let non_decreasing = values.windows(2).all(|w| w[1] >= w[0] - slack(w[0]));
    if non_increasing {
        Trend::Decreasing
    } else if non_decreasing {
        Trend::Increasing
    } else {
        Trend::Bounded
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsscherRatio {
    pub eps: f64,
    pub u_eps: f64,
    pub f: f64,
    /// `ε |u_ε| / log log F(ε)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsscherNegligibleReport {
    /// Rows in the order of the input grid (decreasing ε).
    pub rows: Vec<EsscherRatio>,
    /// Levels skipped because `F(ε) <= e` there.
    pub skipped: Vec<f64>,
    pub trend: Trend,
}

/// Tabulate `ε |u_ε| / log log F(ε)`, which should vanish as `ε → 0`.
pub fn check_esscher_negligible(model: &LevyModel, eps_grid: &[f64]) -> Result<EsscherNegligibleReport> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &eps in eps_grid {
        let r = evaluate_rate(model, eps)?;
        if r.f <= std::f64::consts::E {
            skipped.push(eps);
            continue;
        }
        rows.push(EsscherRatio {
            eps,
            u_eps: r.u_eps,
            f: r.f,
            ratio: eps * r.u_eps.abs() / r.f.ln().ln(),
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(EsscherNegligibleReport {
        trend: trend(&ratios),
        rows,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMSeries {
    pub beta: f64,
    /// `(n, ln r(n, β))`; `-inf` when the numerator vanishes.
    pub log_ratios: Vec<(u32, f64)>,
    pub tends_to_minus_infinity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMReport {
    pub series: Vec<ConditionMSeries>,
    pub pass: bool,
}

/// Below this level the compensator is extrapolated as a power law in the
/// truncation level instead of integrated.
const DIRECT_COMPENSATOR_FLOOR: f64 = 1e-150;

/// `ln |∫_{b<|x|≤1} x Π(dx) − γ|` at `b = e^{log_b}`.
fn log_centering(model: &LevyModel, log_b: f64) -> Result<f64> {
    let at = |b: f64| -> Result<f64> { Ok((model.compensator(b)? - model.gamma()).abs()) };
    if log_b >= 0.0 {
        return Ok(model.gamma().abs().ln());
    }
    if log_b >= DIRECT_COMPENSATOR_FLOOR.ln() {
        return Ok(at(log_b.exp())?.ln());
    }
    let (b1, b2) = (DIRECT_COMPENSATOR_FLOOR, 1e-100);
    let (v1, v2) = (at(b1)?, at(b2)?);
    if v1 == 0.0 && v2 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let slope = (v2.ln() - v1.ln()) / (b2.ln() - b1.ln());
    Ok(v1.ln() + slope * (log_b - b1.ln()))
}

/// Evaluate `r(n, β) = (n+1)^{-(n+1)^β} |∫_{|x|>b(a_n)} x Π(dx) − γ| / b(a_n)`
/// with `a_n = n^{-n^β}` and `b = F^{-1}(log|log t| / t)`, entirely in logs.
///
/// A series passes when its log-ratios fall strictly over the last five
/// usable `n` and end below `-50`.
pub fn check_condition_m(
    model: &LevyModel,
    table: &RateTable,
    beta_grid: &[f64],
    n_max: u32,
) -> Result<ConditionMReport> {
    if n_max > 60 {
        return Err(Error::Domain(format!("n_max must be at most 60, got {n_max}")));
    }
    if beta_grid.is_empty() {
        return Err(Error::Domain("empty beta grid".into()));
    }
    let log_t_max = -std::f64::consts::E;
    let mut series = Vec::new();
    for &beta in beta_grid {
        if !(beta > 1.0 && beta <= 3.0) {
            return Err(Error::Domain(format!("beta must lie in (1, 3], got {beta}")));
        }
        let mut log_ratios = Vec::new();
        for n in 2..=n_max {
            let nf = n as f64;
            let log_a = -nf.powf(beta) * nf.ln();
            if log_a > log_t_max {
                continue;
            }
            let log_loglog = (-log_a).ln().ln();
            let log_b = invert_rate_log(table, log_loglog - log_a)?;
            let log_num = log_centering(model, log_b)?;
            let m = nf + 1.0;
            let log_r = -m.powf(beta) * m.ln() + log_num - log_b;
            if log_r.is_nan() {
                continue;
            }
            log_ratios.push((n, log_r));
        }
        if log_ratios.len() < 5 {
            return Err(Error::UnderflowRange(log_ratios.len()));
        }
        let tail = &log_ratios[log_ratios.len() - 5..];
        let falling = tail.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == f64::NEG_INFINITY);
        let last = tail[tail.len() - 1].1;
        series.push(ConditionMSeries {
            beta,
            tends_to_minus_infinity: falling && last < -50.0,
            log_ratios,
        });
    }
    let pass = series.iter().all(|s| s.tends_to_minus_infinity);
    Ok(ConditionMReport { series, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlargeruReport {
    /// `(ε, ε^{-2} U(ε), F(ε), ε^{-2} U(ε) / (F(ε) + 1))`
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub max_ratio: f64,
    pub c_const: f64,
    pub pass: bool,
}

/// Check `ε^{-2} U(ε) <= c (F(ε) + 1)` on the table's grid.
pub fn check_flargeru(model: &LevyModel, table: &RateTable, c_const: f64) -> Result<FlargeruReport> {
    let rows = table
        .eps_grid()
        .iter()
        .zip(table.f_values())
        .map(|(&eps, &f)| {
            let lhs = truncated_variance(model, eps)? / (eps * eps);
            Ok((eps, lhs, f, lhs / (f + 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(FlargeruReport {
        rows,
        max_ratio,
        c_const,
        pass: max_ratio <= c_const,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_classification() {
        assert_eq!(trend(&[3.0, 2.0, 2.0, 1.0]), Trend::Decreasing);
        assert_eq!(trend(&[1.0, 2.0, 3.0]), Trend::Increasing);
        assert_eq!(trend(&[1.0, 2.0, 1.5]), Trend::Bounded);
        assert_eq!(trend(&[0.0, 0.0]), Trend::Decreasing);
    }
}
