//! Monte Carlo checks of the analytic results: the two-sided small-deviation
//! bounds, the liminf behaviour along geometric times, and the drift limit
//! of bounded-variation processes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::norming::{stable_constant_bounds, NormingFunction, StableBounds};
use crate::rate::{sd_bounds, DRIFT_TOL};
use crate::simulate::{
    count_hits, simulate_on_times, simulate_path_with, sup_norm_refined_with, SimSettings,
    SimulationPlan, SmallDevEstimate,
};

/// Cells whose probability falls outside `[P_MIN, 1 - P_MIN]` are not estimable.
pub const P_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Pass,
    Fail,
    /// Skipped before simulation: the bounds place `p` outside the estimable band.
    SkippedByBounds,
    /// Skipped after simulation: the estimate fell outside the estimable band.
    SkippedByEstimate,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Pass => "pass",
            CellStatus::Fail => "fail",
            CellStatus::SkippedByBounds => "skipped_bounds",
            CellStatus::SkippedByEstimate => "skipped_estimate",
        }
    }

    pub fn is_skipped(self) -> bool {
        matches!(self, CellStatus::SkippedByBounds | CellStatus::SkippedByEstimate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCell {
    pub t: f64,
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: Option<SmallDevEstimate>,
    /// `[-log ci_high, -log ci_low]`
    pub band: Option<(f64, f64)>,
    pub status: CellStatus,
    /// The band lies inside `[lower, upper]` without slack.
    pub strictly_inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub cells: Vec<SandwichCell>,
}

impl SandwichReport {
    pub fn estimable(&self) -> impl Iterator<Item = &SandwichCell> {
        self.cells.iter().filter(|c| !c.status.is_skipped())
    }

    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Fail).count()
    }

    pub fn all_pass(&self) -> bool {
        self.n_failed() == 0
    }
}

/// Compare Monte Carlo estimates of `-log P(‖X‖_t <= ε)` with the two-sided
/// bounds on every cell of `t_grid × eps_grid`.
///
/// The small-jump cutoff of each cell is `min(settings.delta, ε/10)`. A cell
/// passes when its confidence band for `-log p` lies inside the bounds
/// widened by the band's half-width.
pub fn sandwich_check(
    model: &LevyModel,
    t_grid: &[f64],
    eps_grid: &[f64],
    n_paths: u64,
    settings: &SimSettings,
) -> Result<SandwichReport> {
    let (nl_min, nl_max) = (-(1.0 - P_MIN).ln(), -P_MIN.ln());
    let mut cells = Vec::new();
    for &t in t_grid {
        for &eps in eps_grid {
            let b = sd_bounds(model, t, eps)?;
            let mut cell = SandwichCell {
                t,
                eps,
                lower: b.lower,
                upper: b.upper,
                estimate: None,
                band: None,
                status: CellStatus::SkippedByBounds,
                strictly_inside: false,
            };
            if b.lower > nl_max || b.upper < nl_min {
                cells.push(cell);
                continue;
            }
            let cell_settings = SimSettings {
                delta: settings.delta.min(eps / 10.0),
                ..*settings
            };
            let plan = SimulationPlan::new(model, cell_settings.delta, cell_settings.small_jump_mode)?;
            let cfg = cell_settings.path_config(t)?;
            let hits = count_hits(&plan, &cfg, eps, n_paths, cell_settings.refine_levels)?;
            let est = SmallDevEstimate::from_counts(t, eps, n_paths, hits);
            cell.estimate = Some(est);
            if !(est.p_hat >= P_MIN && est.p_hat <= 1.0 - P_MIN) {
                cell.status = CellStatus::SkippedByEstimate;
                cells.push(cell);
                continue;
            }
            let (lo, hi) = est.neg_log_band();
            let slack = 0.5 * (hi - lo);
            cell.band = Some((lo, hi));
            cell.strictly_inside = lo >= b.lower && hi <= b.upper;
            cell.status = if lo >= b.lower - slack && hi <= b.upper + slack {
                CellStatus::Pass
            } else {
                CellStatus::Fail
            };
            cells.push(cell);
        }
    }
    let report = SandwichReport { cells };
    if report.estimable().next().is_none() {
        return Err(Error::NoEstimableCells);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiminfReport {
    pub r: f64,
    pub ks: Vec<u32>,
    pub times: Vec<f64>,
    /// `ratios[p][i] = ‖X‖_{t_i} / b(t_i)` for path `p`
    pub ratios: Vec<Vec<f64>>,
    pub minima: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl LiminfReport {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Across-path variance of the ratio at each time.
    pub fn variance_per_time(&self) -> Vec<f64> {
        let n = self.ratios.len() as f64;
        (0..self.times.len())
            .map(|i| {
                let mean = self.ratios.iter().map(|r| r[i]).sum::<f64>() / n;
                self.ratios.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .collect()
    }
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Evaluation grid for one path: `settings.n_steps` uniform steps inside each
/// block `[r^{k+1}, r^k]`, plus the block `[0, r^{k_max+1}]`.
fn geometric_path_grid(r: f64, k_min: u32, k_max: u32, per_block: usize) -> (Vec<f64>, Vec<usize>) {
    let mut times = vec![0.0];
    let mut marks = Vec::new();
    let mut edges: Vec<f64> = (k_min..=k_max + 1).rev().map(|k| r.powi(k as i32)).collect();
    edges.insert(0, 0.0);
    for w in edges.windows(2) {
        for s in 1..=per_block {
            times.push(w[0] + (w[1] - w[0]) * s as f64 / per_block as f64);
        }
        // right edge is exactly r^k
        *times.last_mut().expect("nonempty") = w[1];
        marks.push(times.len() - 1);
    }
    // marks[0] is r^{k_max+1}; keep r^{k_max} .. r^{k_min}
    marks.remove(0);
    marks.reverse();
    (times, marks)
}

/// `min_k ‖X‖_{r^k} / b(r^k)` over `k_range` for `n_paths` paths, each
/// simulated once and evaluated at all the nested times.
pub fn lil_liminf_estimate(
    model: &LevyModel,
    nf: &NormingFunction,
    r: f64,
    k_range: (u32, u32),
    n_paths: u64,
    settings: &SimSettings,
) -> Result<LiminfReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1), got {r}")));
    }
    let (k_min, k_max) = k_range;
    if k_min > k_max {
        return Err(Error::Domain(format!("empty k range {k_min}..={k_max}")));
    }
    if n_paths < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    let ks: Vec<u32> = (k_min..=k_max).collect();
    let t_k: Vec<f64> = ks.iter().map(|&k| r.powi(k as i32)).collect();
    let b_k = t_k.iter().map(|&t| nf.eval(t)).collect::<Result<Vec<_>>>()?;
    let plan = SimulationPlan::new(model, settings.delta, settings.small_jump_mode)?;
    let (times, marks) = geometric_path_grid(r, k_min, k_max, settings.n_steps);
    let ratios = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let values = simulate_on_times(&plan, &times, settings.seed, p)?;
            let mut running = Vec::with_capacity(values.len());
            let mut m = 0.0f64;
            for v in &values {
                m = m.max(v.abs());
                running.push(m);
            }
            // marks are ordered like ks: largest time first
            Ok(marks
                .iter()
                .zip(&b_k)
                .map(|(&i, &b)| running[i] / b)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let minima: Vec<f64> = ratios
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut sorted = minima.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(LiminfReport {
        r,
        ks,
        times: t_k,
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        ratios,
        minima,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftLimitRow {
    pub t: f64,
    /// mean of `|‖X‖_t / t − |c||`
    pub mean_abs_error: f64,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftLimitReport {
    pub drift: f64,
    pub rows: Vec<DriftLimitRow>,
}

/// `‖X‖_t / t → |c|` for bounded-variation models with effective drift `c ≠ 0`.
pub fn bv_drift_limit_check(
    model: &LevyModel,
    t_list: &[f64],
    n_paths: u64,
    settings: &SimSettings,
) -> Result<DriftLimitReport> {
    let c = match model.effective_drift() {
        Some(c) if model.has_bounded_variation() && c.abs() > DRIFT_TOL * model.gamma().abs().max(1.0) => c,
        _ => return Err(Error::NotDriftDominated),
    };
    let plan = SimulationPlan::new(model, settings.delta, settings.small_jump_mode)?;
    let mut rows = Vec::new();
    for &t in t_list {
        let cfg = settings.path_config(t)?;
        let ratios = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let sup = if settings.refine_levels == 0 {
                    simulate_path_with(&plan, &cfg, p)?.sup_norm
                } else {
                    sup_norm_refined_with(&plan, &cfg, p, settings.refine_levels)?
                };
                Ok(sup / t)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean_abs_error = ratios.iter().map(|x| (x - c.abs()).abs()).sum::<f64>() / n_paths as f64;
        let mut sorted = ratios;
        sorted.sort_by(f64::total_cmp);
        rows.push(DriftLimitRow {
            t,
            mean_abs_error,
            median_ratio: quantile_sorted(&sorted, 0.5),
        });
    }
    Ok(DriftLimitReport { drift: c, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableConstantCheck {
    pub bounds: StableBounds,
    pub estimate: SmallDevEstimate,
    /// `-log p̂ · ε^α / t`
    pub value: f64,
    /// The same scaling applied to the confidence band.
    pub band: (f64, f64),
    pub pass: bool,
}

/// Compare `-log P(‖X‖_t <= ε) ε^α / t` with the bracket for `c_α`; the
/// bracket is widened by the relative half-width of the Monte Carlo band.
pub fn stable_constant_check(
    model: &LevyModel,
    alpha: f64,
    c: f64,
    t: f64,
    eps: f64,
    n_paths: u64,
    settings: &SimSettings,
) -> Result<StableConstantCheck> {
    let bounds = stable_constant_bounds(alpha, c)?;
    let plan = SimulationPlan::new(model, settings.delta, settings.small_jump_mode)?;
    let est = crate::simulate::estimate_small_dev_with(&plan, t, eps, n_paths, settings)?;
    let scale = eps.powf(alpha) / t;
    let value = est.neg_log_p.unwrap_or(f64::INFINITY) * scale;
    let (lo, hi) = est.neg_log_band();
    let band = (lo * scale, hi * scale);
    let slack = 0.5 * (band.1 - band.0) / value;
    let pass = value >= bounds.low * (1.0 - slack) && value <= bounds.high * (1.0 + slack);
    Ok(StableConstantCheck {
        bounds,
        estimate: est,
        value,
        band,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_hits_every_power() {
        let (times, marks) = geometric_path_grid(0.5, 2, 5, 16);
        assert_eq!(times[0], 0.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        let got: Vec<f64> = marks.iter().map(|&i| times[i]).collect();
        assert_eq!(got, vec![0.25, 0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }
}
