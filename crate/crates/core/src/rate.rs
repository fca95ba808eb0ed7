//! Small-deviation rate functions.
//!
//! For a symmetric model the rate is `F(ε) = ε^{-2} U(ε)` with the truncated
//! variance `U(ε) = ε² Π̄(ε) + σ² + ∫_{-ε}^{ε} x² Π(dx)`. In general, jumps
//! above ε are removed, the remaining process is recentred by an Esscher
//! tilt `u_ε` (the minimiser of the log-Laplace transform `Λ_ε`), and
//! `F(ε) = ε^{-2} U_ε(ε) − Λ_ε(u_ε)` where `U_ε` uses the tilted measure.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LevyModel, OVERFLOW_GUARD};

/// Bisection stops once the bracket is this narrow relative to `1 + |u|`.
pub const BISECTION_TOL: f64 = 1e-12;
/// Maximum number of bracket doublings in the Esscher root search.
pub const MAX_DOUBLINGS: usize = 200;
/// Effective drifts below this magnitude count as vanishing.
pub const DRIFT_TOL: f64 = 1e-10;
/// Default root tolerance for `|Λ'_ε(u_ε)| <= tol (1 + |u_ε|)`.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

/// The model's jumps live in `[-1, 1]`, so every level above one sees the
/// whole measure.
fn clamp(eps: f64) -> f64 {
    eps.min(1.0)
}

/// `U(ε) = ε² Π̄(ε) + σ² + ∫_{-ε}^{ε} x² Π(dx)`.
pub fn truncated_variance(model: &LevyModel, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = clamp(eps);
    let u = eps * eps * model.tail_mass(e)? + model.sigma2() + model.truncated_moment(e, 2)?;
    if u <= 0.0 {
        return Err(Error::DegenerateModel);
    }
    Ok(u)
}

/// `γ − ∫_{[-1,1] \ [-ε,ε]} x Π(dx)`, the linear coefficient of `Λ_ε`.
fn linear_coefficient(model: &LevyModel, eps: f64) -> Result<f64> {
    Ok(model.gamma() - model.compensator(clamp(eps))?)
}

/// `Λ_ε(u) = σ²u²/2 + (γ − ∫_{ε<|x|≤1} xΠ) u + ∫_{-ε}^{ε} (e^{ux} − 1 − ux) Π(dx)`.
pub fn lambda_eps(model: &LevyModel, eps: f64, u: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = clamp(eps);
    Ok(0.5 * model.sigma2() * u * u
        + linear_coefficient(model, eps)? * u
        + model.exp_compensated_integral(e, u)?)
}

/// `Λ'_ε(u) = σ²u + (γ − ∫_{ε<|x|≤1} xΠ) + ∫_{-ε}^{ε} x (e^{ux} − 1) Π(dx)`.
pub fn lambda_eps_prime(model: &LevyModel, eps: f64, u: f64) -> Result<f64> {
    check_eps(eps)?;
    let e = clamp(eps);
    Ok(model.sigma2() * u + linear_coefficient(model, eps)? + model.tilted_first_moment(e, u)?)
}

/// `Λ''_ε(u) = σ² + ∫_{-ε}^{ε} x² e^{ux} Π(dx)`.
pub fn lambda_eps_second(model: &LevyModel, eps: f64, u: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(model.sigma2() + model.tilted_second_moment(clamp(eps), -u)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Root,
    DriftDominated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsscherSolution {
    pub eps: f64,
    /// Root of `Λ'_ε`; when no root exists, the last bracket end probed.
    pub u_eps: f64,
    pub lambda_at_root: f64,
    pub converged: bool,
    pub regime: Regime,
    /// `c = γ − ∫ x Π(dx)` for bounded-variation models.
    pub effective_drift: Option<f64>,
}

/// Solve `Λ'_ε(u) = 0` by bracket doubling, bisection and one Newton step.
///
/// `Λ_ε` is convex, so the root is unique when it exists. Bounded-variation
/// models with a nonvanishing effective drift are reported as
/// [`Regime::DriftDominated`] whether or not a root was found.
pub fn solve_esscher_drift(model: &LevyModel, eps: f64, tol_root: f64) -> Result<EsscherSolution> {
    check_eps(eps)?;
    if !(tol_root > 0.0) {
        return Err(Error::Domain(format!("tol_root must be positive, got {tol_root}")));
    }
    let e = clamp(eps);
    let drift = if model.has_bounded_variation() {
        model.effective_drift()
    } else {
        None
    };
    let dominated = drift.is_some_and(|c| c.abs() > DRIFT_TOL * model.gamma().abs().max(1.0));
    let regime = if dominated {
        Regime::DriftDominated
    } else {
        Regime::Root
    };
    let solution = |u: f64, lambda: f64, converged: bool| EsscherSolution {
        eps,
        u_eps: u,
        lambda_at_root: lambda,
        converged,
        regime,
        effective_drift: drift,
    };

    if model.is_symmetric() {
        return Ok(solution(0.0, 0.0, true));
    }
    let g = |u: f64| lambda_eps_prime(model, eps, u);
    let g0 = g(0.0)?;
    if g0 == 0.0 {
        return Ok(solution(0.0, 0.0, true));
    }

    // Λ' is nondecreasing; the root lies on the side where Λ' has the opposite sign.
    let direction = if g0 < 0.0 { 1.0 } else { -1.0 };
    let u_cap = OVERFLOW_GUARD / e;
    let mut inner: f64 = 0.0;
    // |u| ε is the natural scale
    let mut outer: f64 = direction / e;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        if outer.abs() > u_cap {
            outer = direction * u_cap;
        }
        let go = g(outer)?;
        if go == 0.0 {
            let lambda = lambda_eps(model, eps, outer)?;
            return Ok(solution(outer, lambda, true));
        }
        if go.signum() != g0.signum() {
            found = true;
            break;
        }
        inner = outer;
        if outer.abs() >= u_cap {
            break;
        }
        outer *= 2.0;
    }
    if !found {
        if dominated {
            let lambda = lambda_eps(model, eps, outer)?;
            return Ok(solution(outer, lambda, false));
        }
        return Err(Error::NoConvergence(format!(
            "Λ'_ε keeps the sign of {g0:e} up to |u| = {:e} (eps = {eps})",
            outer.abs()
        )));
    }

    // bisection on [lo, hi] with g(lo) < 0 < g(hi)
    let (mut lo, mut hi) = if direction > 0.0 {
        (inner, outer)
    } else {
        (outer, inner)
    };
    let mut mid = 0.5 * (lo + hi);
    while hi - lo > BISECTION_TOL * (1.0 + mid.abs()) {
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break;
        }
        mid = next;
    }
    let mut u = 0.5 * (lo + hi);
    let mut gu = g(u)?;
    if gu != 0.0 {
        let slope = lambda_eps_second(model, eps, u)?;
        if slope > 0.0 {
            let polished = u - gu / slope;
            if polished >= lo && polished <= hi {
                let gp = g(polished)?;
                if gp.abs() <= gu.abs() {
                    u = polished;
                    gu = gp;
                }
            }
        }
    }
    let lambda = lambda_eps(model, eps, u)?;
    let converged = gu.abs() <= tol_root * (1.0 + u.abs());
    Ok(solution(u, lambda.min(0.0), converged))
}

/// `F(ε) = ε^{-2} U(ε)` for symmetric models.
pub fn rate_symmetric(model: &LevyModel, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if model.gamma().abs() > 1e-12 {
        return Err(Error::NotSymmetric(format!("gamma = {} != 0", model.gamma())));
    }
    let first = model
        .truncated_moment(1.0, 1)
        .map_err(|e| Error::NotSymmetric(e.to_string()))?;
    if first.abs() > 1e-10 * model.truncated_abs_moment(1.0)?.max(1.0) || !model.is_symmetric() {
        return Err(Error::NotSymmetric(format!(
            "∫ x Π(dx) = {first:e} over [-1, 1]"
        )));
    }
    Ok(truncated_variance(model, eps)? / (eps * eps))
}

/// Components of the general rate at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEvaluation {
    pub eps: f64,
    pub f: f64,
    pub u_eps: f64,
    pub lambda_at_root: f64,
    /// `U_ε(ε) = ε² Π̄(ε) + σ² + ∫ x² e^{-u_ε x} Π(dx)`
    pub tilted_variance: f64,
}

/// `F(ε) = ε^{-2} U_ε(ε) − Λ_ε(u_ε)` together with its ingredients.
pub fn evaluate_general(model: &LevyModel, eps: f64) -> Result<RateEvaluation> {
    let sol = solve_esscher_drift(model, eps, DEFAULT_ROOT_TOL)?;
    if sol.regime == Regime::DriftDominated {
        return Err(Error::DriftDominated {
            drift: sol.effective_drift.unwrap_or(f64::NAN),
        });
    }
    if !sol.converged {
        return Err(Error::NoConvergence(format!(
            "residual above tolerance at eps = {eps}, u = {}",
            sol.u_eps
        )));
    }
    let e = clamp(eps);
    let tilted_variance =
        eps * eps * model.tail_mass(e)? + model.sigma2() + model.tilted_second_moment(e, sol.u_eps)?;
    if tilted_variance <= 0.0 {
        return Err(Error::DegenerateModel);
    }
    Ok(RateEvaluation {
        eps,
        f: tilted_variance / (eps * eps) - sol.lambda_at_root,
        u_eps: sol.u_eps,
        lambda_at_root: sol.lambda_at_root,
        tilted_variance,
    })
}

pub fn rate_general(model: &LevyModel, eps: f64) -> Result<f64> {
    Ok(evaluate_general(model, eps)?.f)
}

/// Symmetric formula when the model is symmetric, general otherwise.
pub fn evaluate_rate(model: &LevyModel, eps: f64) -> Result<RateEvaluation> {
    if model.is_symmetric() {
        let u = truncated_variance(model, eps)?;
        Ok(RateEvaluation {
            eps,
            f: rate_symmetric(model, eps)?,
            u_eps: 0.0,
            lambda_at_root: 0.0,
            tilted_variance: u,
        })
    } else {
        evaluate_general(model, eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdBounds {
    pub t: f64,
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided bounds on `−log P(‖X‖_t ≤ ε)`:
/// `t F(2ε)/12 − ε|u_{2ε}| − 1 ≤ −log P ≤ 10 t F(ε/3) + ε|u_{ε/3}| + 3`.
pub fn sd_bounds(model: &LevyModel, t: f64, eps: f64) -> Result<SdBounds> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    let wide = evaluate_rate(model, 2.0 * eps)?;
    let narrow = evaluate_rate(model, eps / 3.0)?;
    Ok(SdBounds {
        t,
        eps,
        lower: t * wide.f / 12.0 - eps * wide.u_eps.abs() - 1.0,
        upper: 10.0 * t * narrow.f + eps * narrow.u_eps.abs() + 3.0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RateKind {
    Symmetric,
    General,
    ClosedForm(String),
    /// Read back from a file.
    Loaded,
}

/// Tabulated rate function on a decreasing ε-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    eps_grid: Vec<f64>,
    f_values: Vec<f64>,
    u_values: Vec<f64>,
    kind: RateKind,
}

/// `n` log-spaced points from `eps_max` down to `eps_min`.
pub fn log_grid_decreasing(eps_min: f64, eps_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && eps_min > 0.0 && eps_max > eps_min);
    let (a, b) = (eps_max.ln(), eps_min.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = eps_max;
    grid[n - 1] = eps_min;
    grid
}

pub fn default_grid() -> Vec<f64> {
    log_grid_decreasing(1e-5, 0.5, 120)
}

impl RateTable {
    /// Validate and wrap a tabulated function.
    pub fn from_values(eps_grid: Vec<f64>, f_values: Vec<f64>, kind: RateKind) -> Result<Self> {
        let u_values = vec![0.0; eps_grid.len()];
        Self::assemble(eps_grid, f_values, u_values, kind)
    }

    fn assemble(
        eps_grid: Vec<f64>,
        f_values: Vec<f64>,
        u_values: Vec<f64>,
        kind: RateKind,
    ) -> Result<Self> {
        if eps_grid.len() != f_values.len() || eps_grid.len() < 2 {
            return Err(Error::InsufficientGrid(format!(
                "{} grid points and {} values",
                eps_grid.len(),
                f_values.len()
            )));
        }
        for w in eps_grid.windows(2) {
            if !(w[1] < w[0] && w[1] > 0.0) {
                return Err(Error::Domain("eps grid must be positive and decreasing".into()));
            }
        }
        for (i, (&e, &f)) in eps_grid.iter().zip(&f_values).enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::NotMonotone(format!("F({e}) = {f} is not finite and positive")));
            }
            if i > 0 && f <= f_values[i - 1] {
                return Err(Error::NotMonotone(format!(
                    "F({e}) = {f} <= F({}) = {}",
                    eps_grid[i - 1],
                    f_values[i - 1]
                )));
            }
        }
        Ok(Self {
            eps_grid,
            f_values,
            u_values,
            kind,
        })
    }

    /// Evaluate a closed-form rate on a grid.
    pub fn from_fn(name: &str, eps_grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = eps_grid.iter().map(|&e| f(e)).collect();
        Self::from_values(eps_grid, values, RateKind::ClosedForm(name.to_string()))
    }

    /// Tabulate a model's rate function; grid points are evaluated in
    /// parallel and collected in grid order.
    pub fn build(model: &LevyModel, eps_grid: Vec<f64>, kind: RateKind) -> Result<Self> {
        let evals: Vec<RateEvaluation> = match kind {
            RateKind::Symmetric => eps_grid
                .par_iter()
                .map(|&e| {
                    Ok(RateEvaluation {
                        eps: e,
                        f: rate_symmetric(model, e)?,
                        u_eps: 0.0,
                        lambda_at_root: 0.0,
                        tilted_variance: truncated_variance(model, e)?,
                    })
                })
                .collect::<Result<_>>()?,
            RateKind::General => eps_grid
                .par_iter()
                .map(|&e| evaluate_general(model, e))
                .collect::<Result<_>>()?,
            _ => {
                return Err(Error::Domain(
                    "RateTable::build needs RateKind::Symmetric or RateKind::General".into(),
                ))
            }
        };
        let f = evals.iter().map(|r| r.f).collect();
        let u = evals.iter().map(|r| r.u_eps).collect();
        Self::assemble(eps_grid, f, u, kind)
    }

    /// Symmetric formula for symmetric models, general otherwise.
    pub fn build_auto(model: &LevyModel, eps_grid: Vec<f64>) -> Result<Self> {
        let kind = if model.is_symmetric() {
            RateKind::Symmetric
        } else {
            RateKind::General
        };
        Self::build(model, eps_grid, kind)
    }

    pub fn eps_grid(&self) -> &[f64] {
        &self.eps_grid
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Esscher tilts recorded while building (zeros for symmetric and closed forms).
    pub fn u_values(&self) -> &[f64] {
        &self.u_values
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.eps_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_grid.is_empty()
    }

    /// Largest tabulated level; every value at or below it is finite and positive.
    pub fn eps0(&self) -> f64 {
        self.eps_grid[0]
    }

    pub fn f_min(&self) -> f64 {
        self.f_values[0]
    }

    pub fn f_max(&self) -> f64 {
        self.f_values[self.f_values.len() - 1]
    }

    /// `F(ε)` by log-log interpolation inside the grid.
    pub fn eval(&self, eps: f64) -> Result<f64> {
        let lo = self.eps_grid[self.len() - 1];
        let hi = self.eps_grid[0];
        if !(eps >= lo && eps <= hi) {
            return Err(Error::OutOfTableRange {
                value: eps,
                min: lo,
                max: hi,
            });
        }
        // grid is decreasing
        let i = self.eps_grid.partition_point(|&e| e > eps).clamp(1, self.len() - 1);
        let (e0, e1) = (self.eps_grid[i - 1], self.eps_grid[i]);
        let (f0, f1) = (self.f_values[i - 1], self.f_values[i]);
        let w = (eps / e0).ln() / (e1 / e0).ln();
        Ok((f0.ln() + w * (f1 / f0).ln()).exp())
    }
}

/// Least-squares slope of `ln F` against `ln ε` over the smallest decade of
/// the grid; for `F` regularly varying with index `−α` this is `−α̂`.
pub fn estimate_rv_exponent(table: &RateTable) -> Result<f64> {
    let grid = table.eps_grid();
    if grid.len() < 10 {
        return Err(Error::InsufficientGrid(format!("{} points, need 10", grid.len())));
    }
    let eps_min = grid[grid.len() - 1];
    if grid[0] / eps_min < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InsufficientGrid(format!(
            "grid spans {:.2} decades, need 3",
            (grid[0] / eps_min).log10()
        )));
    }
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(table.f_values())
        .filter(|(&e, _)| e <= 10.0 * eps_min * (1.0 + 1e-12))
        .map(|(&e, &f)| (e.ln(), f.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientGrid("fewer than two points in the smallest decade".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
