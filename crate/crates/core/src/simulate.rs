//! Path simulation and Monte Carlo small-deviation estimates.
//!
//! A path is `drift · t + √v · W_t + Σ jumps`, where the jumps with
//! `|x| > δ` form a compound Poisson process and the jumps below `δ` are
//! either replaced by a Brownian motion of matching variance or dropped.
//! All randomness is keyed by `(seed, path, level)`: level 0 drives the
//! coarse Gaussian increments, level `ℓ ≥ 1` the Brownian-bridge midpoints
//! of refinement level `ℓ`, and [`JUMP_LEVEL`] the jumps. Refining a path
//! therefore never changes its values at coarser grid points.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Jump, JumpSampler, LevyModel};
use crate::rng::{PositionalNormals, StreamKey, CLOCK_LEVEL, JUMP_LEVEL};

/// The small-jump approximation is accepted when `σ(δ)/δ` reaches this value.
pub const SOUNDNESS_RATIO: f64 = 3.0;
/// A bridge segment is not refined when its crossing probability is below `e^{-72}`.
pub const PRUNE_EXPONENT: f64 = 72.0;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallJumpMode {
    GaussianApprox,
    Drop,
}

impl SmallJumpMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian_approx" => Ok(Self::GaussianApprox),
            "drop" => Ok(Self::Drop),
            other => Err(Error::Domain(format!("unknown small-jump mode '{other}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GaussianApprox => "gaussian",
            Self::Drop => "drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub horizon: f64,
    pub n_steps: usize,
    /// Jumps with `|x| <= delta` are approximated or dropped.
    pub delta: f64,
    pub small_jump_mode: SmallJumpMode,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(horizon: f64, n_steps: usize, delta: f64, mode: SmallJumpMode, seed: u64) -> Result<Self> {
        let cfg = Self {
            horizon,
            n_steps,
            delta,
            small_jump_mode: mode,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_steps < 16 || !self.n_steps.is_power_of_two() {
            return Err(Error::Domain(format!(
                "n_steps must be a power of two >= 16, got {}",
                self.n_steps
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(horizon, self.n_steps, self.delta, self.small_jump_mode, self.seed)
    }

    fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sup_norm: f64,
}

/// Drift, Gaussian variance rate and big-jump sampler of a model at cutoff `δ`.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    drift: f64,
    variance: f64,
    sampler: JumpSampler,
}

impl SimulationPlan {
    pub fn new(model: &LevyModel, delta: f64, mode: SmallJumpMode) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let small_var = model.truncated_moment(delta, 2)?;
        let (drift, variance) = match mode {
            SmallJumpMode::GaussianApprox => {
                if small_var > 0.0 {
                    let ratio = small_var.sqrt() / delta;
                    if ratio < SOUNDNESS_RATIO {
                        return Err(Error::ApproximationUnsound { ratio });
                    }
                }
                (model.gamma() - model.compensator(delta)?, model.sigma2() + small_var)
            }
            SmallJumpMode::Drop => {
                // the dropped jumps are uncompensated when the variation is bounded
                let drift = match model.effective_drift() {
                    Some(c) if model.has_bounded_variation() => c,
                    _ => model.gamma() - model.compensator(delta)?,
                };
                (drift, model.sigma2())
            }
        };
        Ok(Self {
            drift,
            variance,
            sampler: model.jump_sampler(delta)?,
        })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Variance rate of the continuous part.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn jump_rate(&self) -> f64 {
        self.sampler.rate()
    }

    fn jumps(&self, seed: u64, path: u64, horizon: f64) -> Result<Vec<Jump>> {
        let mut rng = StreamKey::new(seed, path, JUMP_LEVEL).stream();
        self.sampler.sample(horizon, &mut rng)
    }
}

/// Coarse grid values split into a continuous part and cumulative jumps.
#[derive(Debug, Default)]
struct Coarse {
    cont: Vec<f64>,
    jump_cum: Vec<f64>,
    jumps: Vec<Jump>,
    /// `bounds[i]` = number of jumps applied by grid point `i`
    bounds: Vec<usize>,
}

impl Coarse {
    fn value(&self, i: usize) -> f64 {
        self.cont[i] + self.jump_cum[i]
    }

    fn interval_jumps(&self, i: usize) -> &[Jump] {
        &self.jumps[self.bounds[i - 1]..self.bounds[i]]
    }
}

/// Fill `out` with the coarse path. With `stop_above = Some(ε)` generation
/// stops at the first grid value with `|X| > ε` and `false` is returned.
fn build_coarse(
    plan: &SimulationPlan,
    cfg: &PathConfig,
    path: u64,
    stop_above: Option<f64>,
    out: &mut Coarse,
) -> Result<bool> {
    let n = cfg.n_steps;
    let h = cfg.step();
    out.jumps = plan.jumps(cfg.seed, path, cfg.horizon)?;
    out.bounds.clear();
    out.bounds.push(0);
    out.jump_cum.clear();
    out.jump_cum.push(0.0);
    let mut k = 0;
    let mut cum = 0.0;
    for i in 1..=n {
        let t = cfg.horizon * i as f64 / n as f64;
        while k < out.jumps.len() && (out.jumps[k].time <= t || i == n) {
            cum += out.jumps[k].size;
            k += 1;
        }
        out.bounds.push(k);
        out.jump_cum.push(cum);
    }
    let mut rng = StreamKey::new(cfg.seed, path, 0).stream();
    let (mean, sd) = (plan.drift * h, (plan.variance * h).sqrt());
    out.cont.clear();
    out.cont.push(0.0);
    let mut c = 0.0;
    for i in 1..=n {
        c += mean;
        if sd > 0.0 {
            c += sd * rng.normal();
        }
        out.cont.push(c);
        if let Some(eps) = stop_above {
            if (c + out.jump_cum[i]).abs() > eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

struct Refiner<'a> {
    normals: &'a [PositionalNormals],
    variance: f64,
}

struct Segment<'a> {
    level: usize,
    index: u64,
    a: f64,
    b: f64,
    ca: f64,
    cb: f64,
    ja: f64,
    jumps: &'a [Jump],
}

impl Refiner<'_> {
    fn max_level(&self) -> usize {
        self.normals.len()
    }

    /// Midpoint of a segment and the two halves.
    fn split<'s>(&self, s: &Segment<'s>) -> (f64, Segment<'s>, Segment<'s>) {
        let m = 0.5 * (s.a + s.b);
        let mut cm = 0.5 * (s.ca + s.cb);
        if self.variance > 0.0 {
            cm += (0.25 * self.variance * (s.b - s.a)).sqrt() * self.normals[s.level - 1].at(s.index);
        }
        let k = s.jumps.partition_point(|j| j.time <= m);
        let jm = s.ja + s.jumps[..k].iter().map(|j| j.size).sum::<f64>();
        let left = Segment {
            level: s.level + 1,
            index: 2 * s.index,
            a: s.a,
            b: m,
            ca: s.ca,
            cb: cm,
            ja: s.ja,
            jumps: &s.jumps[..k],
        };
        let right = Segment {
            level: s.level + 1,
            index: 2 * s.index + 1,
            a: m,
            b: s.b,
            ca: cm,
            cb: s.cb,
            ja: jm,
            jumps: &s.jumps[k..],
        };
        (cm + jm, left, right)
    }

    fn sup(&self, s: &Segment) -> f64 {
        if s.level > self.max_level() {
            return 0.0;
        }
        let (x, left, right) = self.split(s);
        x.abs().max(self.sup(&left)).max(self.sup(&right))
    }

    /// Whether the continuous-time path on the segment provably stays in
    /// `[-ε, ε]` up to probability `e^{-72}`.
    fn contained(&self, s: &Segment, eps: f64) -> bool {
        let (mut lo, mut hi, mut run) = (0.0f64, 0.0f64, 0.0);
        for j in s.jumps {
            run += j.size;
            lo = lo.min(run);
            hi = hi.max(run);
        }
        let up_a = eps - (s.ca + s.ja + hi);
        let up_b = eps - (s.cb + s.ja + hi);
        let dn_a = eps + (s.ca + s.ja + lo);
        let dn_b = eps + (s.cb + s.ja + lo);
        if up_a <= 0.0 || up_b <= 0.0 || dn_a <= 0.0 || dn_b <= 0.0 {
            return false;
        }
        if self.variance == 0.0 {
            return true;
        }
        let scale = 0.5 * PRUNE_EXPONENT * self.variance * (s.b - s.a);
        up_a * up_b >= scale && dn_a * dn_b >= scale
    }

    fn exceeds(&self, s: &Segment, eps: f64) -> bool {
        if s.level > self.max_level() || self.contained(s, eps) {
            return false;
        }
        let (x, left, right) = self.split(s);
        x.abs() > eps || self.exceeds(&left, eps) || self.exceeds(&right, eps)
    }
}

fn level_normals(seed: u64, path: u64, levels: usize) -> Vec<PositionalNormals> {
    (1..=levels as u64)
        .map(|l| StreamKey::new(seed, path, l).positional())
        .collect()
}

fn coarse_segment<'a>(coarse: &'a Coarse, cfg: &PathConfig, i: usize) -> Segment<'a> {
    let n = cfg.n_steps as f64;
    Segment {
        level: 1,
        index: (i - 1) as u64,
        a: cfg.horizon * (i - 1) as f64 / n,
        b: cfg.horizon * i as f64 / n,
        ca: coarse.cont[i - 1],
        cb: coarse.cont[i],
        ja: coarse.jump_cum[i - 1],
        jumps: coarse.interval_jumps(i),
    }
}

/// Simulate path number `path` of the stream family `config.seed`.
pub fn simulate_path(model: &LevyModel, config: &PathConfig, path: u64) -> Result<PathSample> {
    config.validate()?;
    let plan = SimulationPlan::new(model, config.delta, config.small_jump_mode)?;
    simulate_path_with(&plan, config, path)
}

pub fn simulate_path_with(plan: &SimulationPlan, config: &PathConfig, path: u64) -> Result<PathSample> {
    let mut coarse = Coarse::default();
    build_coarse(plan, config, path, None, &mut coarse)?;
    let n = config.n_steps;
    let times = (0..=n).map(|i| config.horizon * i as f64 / n as f64).collect();
    let values: Vec<f64> = (0..=n).map(|i| coarse.value(i)).collect();
    let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PathSample {
        times,
        values,
        sup_norm,
    })
}

/// Sup-norm of the same path on the grid refined `refine_levels` times by
/// Brownian-bridge midpoints; nondecreasing in `refine_levels`.
pub fn sup_norm_refined(model: &LevyModel, config: &PathConfig, path: u64, refine_levels: usize) -> Result<f64> {
    config.validate()?;
    let plan = SimulationPlan::new(model, config.delta, config.small_jump_mode)?;
    sup_norm_refined_with(&plan, config, path, refine_levels)
}

pub fn sup_norm_refined_with(
    plan: &SimulationPlan,
    config: &PathConfig,
    path: u64,
    refine_levels: usize,
) -> Result<f64> {
    let mut coarse = Coarse::default();
    build_coarse(plan, config, path, None, &mut coarse)?;
    let normals = level_normals(config.seed, path, refine_levels);
    let refiner = Refiner {
        normals: &normals,
        variance: plan.variance,
    };
    let mut sup = 0.0f64;
    for i in 1..=config.n_steps {
        sup = sup.max(coarse.value(i).abs());
        sup = sup.max(refiner.sup(&coarse_segment(&coarse, config, i)));
    }
    Ok(sup)
}

/// Whether the refined path stays in `[-ε, ε]`. Segments whose bridge
/// crossing probability is below `e^{-72}` are not refined, and generation
/// stops at the first excursion.
fn path_stays_within(
    plan: &SimulationPlan,
    config: &PathConfig,
    path: u64,
    eps: f64,
    refine_levels: usize,
    coarse: &mut Coarse,
) -> Result<bool> {
    if !build_coarse(plan, config, path, Some(eps), coarse)? {
        return Ok(false);
    }
    if refine_levels == 0 {
        return Ok(true);
    }
    let normals = level_normals(config.seed, path, refine_levels);
    let refiner = Refiner {
        normals: &normals,
        variance: plan.variance,
    };
    for i in 1..=config.n_steps {
        if refiner.exceeds(&coarse_segment(coarse, config, i), eps) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of paths `0..n_paths` whose refined sup-norm on `[0, horizon]` is at most `ε`.
pub fn count_hits(
    plan: &SimulationPlan,
    config: &PathConfig,
    eps: f64,
    n_paths: u64,
    refine_levels: usize,
) -> Result<u64> {
    (0..n_paths)
        .into_par_iter()
        .map_init(Coarse::default, |coarse, p| {
            path_stays_within(plan, config, p, eps, refine_levels, coarse).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Monte Carlo settings shared by the estimators and the verification harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub n_steps: usize,
    pub refine_levels: usize,
    pub delta: f64,
    pub small_jump_mode: SmallJumpMode,
    pub seed: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            n_steps: 1024,
            refine_levels: 2,
            delta: 0.01,
            small_jump_mode: SmallJumpMode::GaussianApprox,
            seed: 1,
        }
    }
}

impl SimSettings {
    pub fn path_config(&self, horizon: f64) -> Result<PathConfig> {
        PathConfig::new(horizon, self.n_steps, self.delta, self.small_jump_mode, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallDevEstimate {
    pub t: f64,
    pub eps: f64,
    pub n_paths: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `-log p_hat`; `None` without hits.
    pub neg_log_p: Option<f64>,
}

impl SmallDevEstimate {
    pub fn from_counts(t: f64, eps: f64, n_paths: u64, hits: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, n_paths);
        let p_hat = hits as f64 / n_paths as f64;
        let neg_log_p = match hits {
            0 => None,
            h if h == n_paths => Some(0.0),
            _ => Some(-p_hat.ln()),
        };
        Self {
            t,
            eps,
            n_paths,
            hits,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            neg_log_p,
        }
    }

    /// `[-log ci_high, -log ci_low]`.
    pub fn neg_log_band(&self) -> (f64, f64) {
        let lo = if self.ci_high >= 1.0 { 0.0 } else { -self.ci_high.ln() };
        (lo, -self.ci_low.ln())
    }
}

/// 95% Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Estimate `P(‖X‖_t <= ε)` from `n_paths` refined paths.
pub fn estimate_small_dev(
    model: &LevyModel,
    t: f64,
    eps: f64,
    n_paths: u64,
    settings: &SimSettings,
) -> Result<SmallDevEstimate> {
    let plan = SimulationPlan::new(model, settings.delta, settings.small_jump_mode)?;
    estimate_small_dev_with(&plan, t, eps, n_paths, settings)
}

pub fn estimate_small_dev_with(
    plan: &SimulationPlan,
    t: f64,
    eps: f64,
    n_paths: u64,
    settings: &SimSettings,
) -> Result<SmallDevEstimate> {
    if n_paths < 100 {
        return Err(Error::Domain(format!("n_paths must be at least 100, got {n_paths}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let cfg = settings.path_config(t)?;
    let hits = count_hits(plan, &cfg, eps, n_paths, settings.refine_levels)?;
    let est = SmallDevEstimate::from_counts(t, eps, n_paths, hits);
    if hits == 0 {
        return Err(Error::ZeroHits { ci_high: est.ci_high });
    }
    Ok(est)
}

/// Values of path `path` at arbitrary increasing times starting at 0.
/// Jumps arriving in `(t_{i-1}, t_i]` are applied at `t_i`.
pub fn simulate_on_times(plan: &SimulationPlan, times: &[f64], seed: u64, path: u64) -> Result<Vec<f64>> {
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("times must start at 0 and increase".into()));
    }
    let horizon = times[times.len() - 1];
    let jumps = plan.jumps(seed, path, horizon)?;
    let mut rng = StreamKey::new(seed, path, 0).stream();
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let (mut x, mut k) = (0.0, 0);
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        x += plan.drift * dt;
        if plan.variance > 0.0 {
            x += (plan.variance * dt).sqrt() * rng.normal();
        }
        let last = i + 2 == times.len();
        while k < jumps.len() && (jumps[k].time <= w[1] || last) {
            x += jumps[k].size;
            k += 1;
        }
        values.push(x);
    }
    Ok(values)
}

/// `X_t = σ B_{A_t} + μ A_t` with `A` a Gamma subordinator of shape rate `a`
/// and scale `1/b`, simulated exactly on the grid.
pub fn simulate_variance_gamma(
    a: f64,
    b: f64,
    mu: f64,
    sigma: f64,
    config: &PathConfig,
    path: u64,
) -> Result<PathSample> {
    config.validate()?;
    if !(a > 0.0 && b > 0.0 && mu.is_finite() && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "need a, b > 0 and finite mu, sigma; got a = {a}, b = {b}, mu = {mu}, sigma = {sigma}"
        )));
    }
    let n = config.n_steps;
    let h = config.step();
    let clock = Gamma::new(a * h, 1.0 / b).map_err(|e| Error::Domain(e.to_string()))?;
    let mut clock_rng = StreamKey::new(config.seed, path, CLOCK_LEVEL).stream();
    let mut rng = StreamKey::new(config.seed, path, 0).stream();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut x = 0.0;
    for _ in 0..n {
        let da: f64 = clock.sample(&mut clock_rng);
        x += mu * da + sigma * da.sqrt() * rng.normal();
        values.push(x);
    }
    let times = (0..=n).map(|i| config.horizon * i as f64 / n as f64).collect();
    let sup_norm = values.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
    Ok(PathSample {
        times,
        values,
        sup_norm,
    })
}
