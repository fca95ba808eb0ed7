//! Norming functions `b_λ(t) = F^{-1}(log|log t| / (λ t))`.
//!
//! A norming function is either obtained by inverting a [`RateTable`] or
//! taken from a registry of closed forms for common families.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::Params;
use crate::rate::RateTable;

/// Largest admissible time, `e^{-e}`, where `log|log t| = 1`.
pub fn t_max() -> f64 {
    (-std::f64::consts::E).exp()
}

/// `log|log t|`.
pub fn loglog(t: f64) -> f64 {
    t.ln().abs().ln()
}

fn locate(table: &RateTable, y: f64) -> Result<usize> {
    let f = table.f_values();
    if !(y >= table.f_min() && y <= table.f_max()) {
        return Err(Error::OutOfTableRange {
            value: y,
            min: table.f_min(),
            max: table.f_max(),
        });
    }
    Ok(f.partition_point(|&v| v < y).clamp(1, f.len() - 1))
}

/// `ε` with `F(ε) = y`, interpolating linearly in `(ln F, ln ε)`.
pub fn invert_rate(table: &RateTable, y: f64) -> Result<f64> {
    let i = locate(table, y)?;
    let (e, f) = (table.eps_grid(), table.f_values());
    if y == f[i] {
        return Ok(e[i]);
    }
    if y == f[i - 1] {
        return Ok(e[i - 1]);
    }
    let w = (y / f[i - 1]).ln() / (f[i] / f[i - 1]).ln();
    Ok((e[i - 1].ln() + w * (e[i] / e[i - 1]).ln()).exp())
}

/// `ln F^{-1}(e^{log_y})`. Above the table the last segment is continued as
/// a power law, so arbitrarily large `y` can be handled in log space.
pub fn invert_rate_log(table: &RateTable, log_y: f64) -> Result<f64> {
    let (e, f) = (table.eps_grid(), table.f_values());
    let n = f.len();
    let log_max = table.f_max().ln();
    if log_y <= log_max {
        return Ok(invert_rate(table, log_y.exp())?.ln());
    }
    let slope = (e[n - 1] / e[n - 2]).ln() / (f[n - 1] / f[n - 2]).ln();
    Ok(e[n - 1].ln() + slope * (log_y - log_max))
}

/// A closed-form norming family.
pub trait ClosedFormNorming: Send + Sync + fmt::Debug {
    fn family(&self) -> &'static str;

    /// `ln b_λ(t)`.
    fn log_b(&self, t: f64, lambda: f64) -> f64;

    fn b(&self, t: f64, lambda: f64) -> f64 {
        self.log_b(t, lambda).exp()
    }

    /// Whether λ enters so strongly that a default value is meaningless.
    fn requires_explicit_lambda(&self) -> bool {
        false
    }

    fn params(&self) -> Vec<(&'static str, f64)>;
}

/// `π σ √(λ t / (8 log|log t|))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianNorming {
    pub sigma: f64,
}

impl ClosedFormNorming for BrownianNorming {
    fn family(&self) -> &'static str {
        "brownian"
    }

    fn log_b(&self, t: f64, lambda: f64) -> f64 {
        (std::f64::consts::PI * self.sigma).ln() + 0.5 * (lambda * t / (8.0 * loglog(t))).ln()
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("sigma", self.sigma)]
    }
}

/// `(c λ t / log|log t|)^{1/α}` for `F(ε) ~ c ε^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableNorming {
    pub alpha: f64,
    pub c: f64,
}

impl ClosedFormNorming for StableNorming {
    fn family(&self) -> &'static str {
        "stable"
    }

    fn log_b(&self, t: f64, lambda: f64) -> f64 {
        (self.c * lambda * t / loglog(t)).ln() / self.alpha
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("alpha", self.alpha), ("c", self.c)]
    }
}

/// `(c λ t |log t|^{-γ} / log|log t|)^{1/α}` for `α < 2`, and
/// `(c λ t |log t|^{1-γ} / log|log t|)^{1/2}` for `α = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCorrectedNorming {
    pub alpha: f64,
    pub gamma_exp: f64,
    pub c: f64,
}

impl ClosedFormNorming for LogCorrectedNorming {
    fn family(&self) -> &'static str {
        "log_corrected"
    }

    fn log_b(&self, t: f64, lambda: f64) -> f64 {
        let power = if self.alpha == 2.0 {
            1.0 - self.gamma_exp
        } else {
            -self.gamma_exp
        };
        ((self.c * lambda * t / loglog(t)).ln() + power * t.ln().abs().ln()) / self.alpha
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("alpha", self.alpha), ("gamma_exp", self.gamma_exp), ("c", self.c)]
    }
}

/// `exp(-λ log|log t| / t)`, for rate functions growing like `|log ε|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceGammaNorming;

impl ClosedFormNorming for VarianceGammaNorming {
    fn family(&self) -> &'static str {
        "variance_gamma"
    }

    fn log_b(&self, t: f64, lambda: f64) -> f64 {
        -lambda * loglog(t) / t
    }

    fn requires_explicit_lambda(&self) -> bool {
        true
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
}

/// `|c| t` for bounded-variation processes with effective drift `c ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftNorming {
    pub c: f64,
}

impl ClosedFormNorming for DriftNorming {
    fn family(&self) -> &'static str {
        "drift"
    }

    fn log_b(&self, t: f64, _lambda: f64) -> f64 {
        (self.c.abs() * t).ln()
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("c", self.c)]
    }
}

pub type NormingBuilder = fn(&Params) -> Result<Arc<dyn ClosedFormNorming>>;

#[derive(Clone)]
pub struct NormingEntry {
    pub name: &'static str,
    pub keys: &'static [&'static str],
    pub build: NormingBuilder,
}

impl fmt::Debug for NormingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormingEntry")
            .field("name", &self.name)
            .field("keys", &self.keys)
            .finish()
    }
}

fn positive(p: &Params, key: &str) -> Result<f64> {
    let v = p.f64(key)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{key} must be positive, got {v}")))
    }
}

/// Name → constructor table for closed-form norming families.
#[derive(Debug, Clone, Default)]
pub struct NormingRegistry {
    families: BTreeMap<&'static str, NormingEntry>,
}

impl NormingRegistry {
    pub fn with_builtin() -> Self {
        let mut reg = Self::default();
        reg.register(NormingEntry {
            name: "brownian",
            keys: &["sigma"],
            build: |p| Ok(Arc::new(BrownianNorming { sigma: positive(p, "sigma")? })),
        });
        reg.register(NormingEntry {
            name: "stable",
            keys: &["alpha", "c"],
            build: |p| {
                let alpha = positive(p, "alpha")?;
                if alpha > 2.0 {
                    return Err(Error::Domain(format!("alpha must lie in (0, 2], got {alpha}")));
                }
                Ok(Arc::new(StableNorming { alpha, c: positive(p, "c")? }))
            },
        });
        reg.register(NormingEntry {
            name: "log_corrected",
            keys: &["alpha", "gamma_exp", "c"],
            build: |p| {
                let alpha = positive(p, "alpha")?;
                let gamma_exp = p.f64_or("gamma_exp", 0.0)?;
                if alpha > 2.0 || (alpha == 2.0 && gamma_exp <= 1.0) {
                    return Err(Error::Domain(
                        "need 0 < alpha < 2, or alpha = 2 with gamma_exp > 1".into(),
                    ));
                }
                let c = if p.get_str("c").is_some() { positive(p, "c")? } else { 1.0 };
                Ok(Arc::new(LogCorrectedNorming { alpha, gamma_exp, c }))
            },
        });
        reg.register(NormingEntry {
            name: "variance_gamma",
            keys: &[],
            build: |_| Ok(Arc::new(VarianceGammaNorming)),
        });
        reg.register(NormingEntry {
            name: "drift",
            keys: &["c"],
            build: |p| {
                let c = p.f64("c")?;
                if c == 0.0 || !c.is_finite() {
                    return Err(Error::Domain("drift norming needs a finite nonzero c".into()));
                }
                Ok(Arc::new(DriftNorming { c }))
            },
        });
        reg
    }

    pub fn register(&mut self, entry: NormingEntry) {
        self.families.insert(entry.name, entry);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<Arc<dyn ClosedFormNorming>> {
        let entry = self
            .families
            .get(name)
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))?;
        if let Some(bad) = params.keys().find(|k| !entry.keys.contains(k)) {
            return Err(Error::Domain(format!(
                "norming family '{name}' does not accept parameter '{bad}'"
            )));
        }
        (entry.build)(params)
    }
}

/// Evaluate a registered closed form at `t`.
pub fn closed_form_norming(family: &str, params: &Params, lambda: f64, t: f64) -> Result<f64> {
    let nf = NormingFunction::closed_form(NormingRegistry::with_builtin().build(family, params)?, lambda)?;
    nf.eval(t)
}

#[derive(Debug, Clone)]
pub enum NormingSource {
    Table(RateTable),
    ClosedForm(Arc<dyn ClosedFormNorming>),
}

/// `t ↦ scale · b_λ(t)` on `(0, t_max]`.
#[derive(Debug, Clone)]
pub struct NormingFunction {
    source: NormingSource,
    lambda: f64,
    t_max: f64,
    scale: f64,
}

impl NormingFunction {
    fn new(source: NormingSource, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            source,
            lambda,
            t_max: t_max(),
            scale: 1.0,
        })
    }

    pub fn from_table(table: RateTable, lambda: f64) -> Result<Self> {
        Self::new(NormingSource::Table(table), lambda)
    }

    pub fn closed_form(form: Arc<dyn ClosedFormNorming>, lambda: f64) -> Result<Self> {
        Self::new(NormingSource::ClosedForm(form), lambda)
    }

    /// The same function multiplied by `k > 0`.
    pub fn scaled(mut self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive, got {k}")));
        }
        self.scale *= k;
        Ok(self)
    }

    /// Restrict the domain to `(0, t_max]`; values above `e^{-e}` are rejected.
    pub fn with_t_max(mut self, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max <= self::t_max()) {
            return Err(Error::Domain(format!("t_max must lie in (0, e^-e], got {t_max}")));
        }
        self.t_max = t_max;
        Ok(self)
    }

    pub fn source(&self) -> &NormingSource {
        &self.source
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t > 0.0 && t <= self.t_max {
            Ok(())
        } else {
            Err(Error::Domain(format!("t must lie in (0, {}], got {t}", self.t_max)))
        }
    }

    /// `b_λ(t)`; table sources fail outside the tabulated range.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        let b = match &self.source {
            NormingSource::Table(table) => invert_rate(table, loglog(t) / (self.lambda * t))?,
            NormingSource::ClosedForm(form) => form.b(t, self.lambda),
        };
        Ok(self.scale * b)
    }

    /// `ln b_λ(t)`, extrapolating table sources as power laws below the grid.
    pub fn log_eval(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        self.log_eval_at(t.ln())
    }

    /// `ln b_λ(e^{log_t})` for times too small to represent, `log_t <= ln t_max`.
    pub fn log_eval_at(&self, log_t: f64) -> Result<f64> {
        if !(log_t <= self.t_max.ln()) {
            return Err(Error::Domain(format!("log t = {log_t} is above ln t_max")));
        }
        let log_loglog = (-log_t).ln().ln();
        let lb = match &self.source {
            NormingSource::Table(table) => {
                invert_rate_log(table, log_loglog - self.lambda.ln() - log_t)?
            }
            NormingSource::ClosedForm(form) => {
                if log_t > -700.0 {
                    form.log_b(log_t.exp(), self.lambda)
                } else {
                    closed_form_log_b_at(form.as_ref(), log_t, self.lambda)?
                }
            }
        };
        Ok(self.scale.ln() + lb)
    }
}

fn closed_form_log_b_at(form: &dyn ClosedFormNorming, log_t: f64, lambda: f64) -> Result<f64> {
    let params: BTreeMap<_, _> = form.params().into_iter().collect();
    let get = |k: &str| params.get(k).copied().unwrap_or(1.0);
    let ll = (-log_t).ln();
    let log_loglog = ll.ln();
    Ok(match form.family() {
        "brownian" => {
            (std::f64::consts::PI * get("sigma")).ln()
                + 0.5 * (lambda.ln() + log_t - 8f64.ln() - log_loglog)
        }
        "stable" => (get("c").ln() + lambda.ln() + log_t - log_loglog) / get("alpha"),
        "log_corrected" => {
            let alpha = get("alpha");
            let g = params.get("gamma_exp").copied().unwrap_or(0.0);
            let power = if alpha == 2.0 { 1.0 - g } else { -g };
            (get("c").ln() + lambda.ln() + log_t - log_loglog + power * ll) / alpha
        }
        "drift" => get("c").abs().ln() + log_t,
        other => {
            return Err(Error::Domain(format!(
                "family '{other}' cannot be evaluated at ln t = {log_t}"
            )))
        }
    })
}

pub fn norming_b(nf: &NormingFunction, t: f64) -> Result<f64> {
    nf.eval(t)
}

/// `(t, b(t))` along a time grid.
pub fn norming_curve(nf: &NormingFunction, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    t_grid.iter().map(|&t| Ok((t, nf.eval(t)?))).collect()
}

/// `n` log-spaced times from `t_hi` down to `t_lo`.
pub fn geometric_times(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    crate::rate::log_grid_decreasing(t_lo, t_hi, n)
}

pub const DEFAULT_REGULARITY_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// `(t, b(t/2) / b(t))`
    pub ratios: Vec<(f64, f64)>,
    pub c_hat: f64,
    pub floor: f64,
    pub pass: bool,
}

/// `Ĉ = min_t b(t/2) / b(t)`; the doubling condition `C b(t) <= b(t/2)` is
/// accepted when `Ĉ >= floor`.
pub fn check_b_regularity(nf: &NormingFunction, t_grid: &[f64], floor: f64) -> Result<RegularityReport> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    let ratios = t_grid
        .iter()
        .map(|&t| {
            let r = (nf.log_eval(t / 2.0)? - nf.log_eval(t)?).exp();
            Ok((t, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_hat = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(RegularityReport {
        ratios,
        c_hat,
        floor,
        pass: c_hat >= floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableBounds {
    pub low: f64,
    pub high: f64,
    /// `2C/α`, the common behaviour of both bounds as `α → 0`.
    pub small_alpha_equivalent: f64,
}

/// Bracket for the small-deviation constant `c_α` of a symmetric α-stable
/// process with Lévy density `C|x|^{-1-α}`:
/// `(2C/2^α)(1/α + 1/(12(2-α))) <= c_α <= 3^α 2C (1/α + 10/(2-α))`.
pub fn stable_constant_bounds(alpha: f64, c: f64) -> Result<StableBounds> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("C must be positive, got {c}")));
    }
    Ok(StableBounds {
        low: 2.0 * c / 2f64.powf(alpha) * (1.0 / alpha + 1.0 / (12.0 * (2.0 - alpha))),
        high: 3f64.powf(alpha) * 2.0 * c * (1.0 / alpha + 10.0 / (2.0 - alpha)),
        small_alpha_equivalent: 2.0 * c / alpha,
    })
}
