//! Run configuration in flat `section.key = value` form.
//!
//! ```text
//! # Brownian motion with unit variance
//! model.family = none
//! model.sigma2 = 1
//! rate.eps_min = 1e-5
//! simulate.seed = 7
//! verify.t_grid = 0.25, 0.5, 1
//! ```
//!
//! Keys under `model.` other than `family`, `gamma` and `sigma2` are passed
//! to the measure family; keys under `norming.` other than the fixed ones are
//! passed to the closed-form norming family named by `norming.family`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::measure::{MeasureRegistry, Params};
use crate::model::LevyModel;
use crate::norming::{t_max, NormingFunction, NormingRegistry};
use crate::rate::{log_grid_decreasing, RateTable};
use crate::simulate::{SimSettings, SmallJumpMode};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub family: String,
    pub gamma: f64,
    pub sigma2: f64,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSection {
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormingSection {
    pub lambda: f64,
    /// `false` when `lambda` is the default rather than set in the file.
    pub lambda_explicit: bool,
    pub t_max: f64,
    pub t_min: f64,
    pub n_points: usize,
    /// Closed-form family; the rate table is inverted when absent.
    pub family: Option<String>,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSection {
    pub n_paths: u64,
    pub n_steps: usize,
    pub delta: f64,
    pub seed: u64,
    pub refine_levels: usize,
    pub small_jump_mode: SmallJumpMode,
    /// Cell for `estimate-sd`.
    pub t: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySection {
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub r: f64,
    pub k_range: (u32, u32),
    pub lil_paths: u64,
    pub beta_grid: Vec<f64>,
    pub n_max: u32,
    pub flargeru_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub rate: RateSection,
    pub norming: NormingSection,
    pub simulate: SimulateSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection {
                family: "none".into(),
                gamma: 0.0,
                sigma2: 0.0,
                params: Params::new(),
            },
            rate: RateSection {
                eps_min: 1e-5,
                eps_max: 0.5,
                n_points: 120,
            },
            norming: NormingSection {
                lambda: 1.0,
                lambda_explicit: false,
                t_max: t_max(),
                t_min: 1e-12,
                n_points: 50,
                family: None,
                params: Params::new(),
            },
            simulate: SimulateSection {
                n_paths: 100_000,
                n_steps: 1024,
                delta: 0.01,
                seed: 1,
                refine_levels: 2,
                small_jump_mode: SmallJumpMode::GaussianApprox,
                t: 1.0,
                eps: 1.0,
            },
            verify: VerifySection {
                t_grid: vec![0.25, 0.5, 1.0],
                eps_grid: vec![0.5, 0.75, 1.0],
                r: 0.5,
                k_range: (5, 40),
                lil_paths: 200,
                beta_grid: vec![1.5, 2.0],
                n_max: 40,
                flargeru_c: 10.0,
            },
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| err(line, format!("{key}: cannot parse '{raw}'")))
}

fn list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|s| num(line, key, s.trim())).collect()
}

/// Line on which each validated key was set; 0 for defaults.
#[derive(Default)]
struct Lines(std::collections::HashMap<String, usize>);

impl Lines {
    fn of(&self, key: &str) -> usize {
        self.0.get(key).copied().unwrap_or(0)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut lines = Lines::default();
        let mut family_line = 0;
        let mut norming_param_lines = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(n, "expected 'section.key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            let (section, name) = key
                .split_once('.')
                .ok_or_else(|| err(n, format!("key '{key}' has no section")))?;
            if lines.0.insert(key.to_string(), n).is_some() {
                return Err(err(n, format!("duplicate key '{key}'")));
            }
            match (section, name) {
                ("model", "family") => {
                    cfg.model.family = value.to_string();
                    family_line = n;
                }
                ("model", "gamma") => cfg.model.gamma = num(n, key, value)?,
                ("model", "sigma2") => cfg.model.sigma2 = num(n, key, value)?,
                ("model", p) => cfg.model.params.insert(p, value),
                ("rate", "eps_min") => cfg.rate.eps_min = num(n, key, value)?,
                ("rate", "eps_max") => cfg.rate.eps_max = num(n, key, value)?,
                ("rate", "n_points") => cfg.rate.n_points = num(n, key, value)?,
                ("norming", "lambda") => {
                    cfg.norming.lambda = num(n, key, value)?;
                    cfg.norming.lambda_explicit = true;
                }
                ("norming", "t_max") => cfg.norming.t_max = num(n, key, value)?,
                ("norming", "t_min") => cfg.norming.t_min = num(n, key, value)?,
                ("norming", "n_points") => cfg.norming.n_points = num(n, key, value)?,
                ("norming", "family") => cfg.norming.family = Some(value.to_string()),
                ("norming", p) => {
                    cfg.norming.params.insert(p, value);
                    norming_param_lines.push((p.to_string(), n));
                }
                ("simulate", "n_paths") => cfg.simulate.n_paths = num(n, key, value)?,
                ("simulate", "n_steps") => cfg.simulate.n_steps = num(n, key, value)?,
                ("simulate", "delta") => cfg.simulate.delta = num(n, key, value)?,
                ("simulate", "seed") => cfg.simulate.seed = num(n, key, value)?,
                ("simulate", "refine_levels") => cfg.simulate.refine_levels = num(n, key, value)?,
                ("simulate", "small_jump_mode") => {
                    cfg.simulate.small_jump_mode =
                        SmallJumpMode::parse(value).map_err(|e| err(n, e.to_string()))?
                }
                ("simulate", "t") => cfg.simulate.t = num(n, key, value)?,
                ("simulate", "eps") => cfg.simulate.eps = num(n, key, value)?,
                ("verify", "t_grid") => cfg.verify.t_grid = list(n, key, value)?,
                ("verify", "eps_grid") => cfg.verify.eps_grid = list(n, key, value)?,
                ("verify", "r") => cfg.verify.r = num(n, key, value)?,
                ("verify", "k_range") => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 2 {
                        return Err(err(n, "verify.k_range needs two integers 'k_min, k_max'"));
                    }
                    cfg.verify.k_range = (num(n, key, parts[0])?, num(n, key, parts[1])?);
                }
                ("verify", "lil_paths") => cfg.verify.lil_paths = num(n, key, value)?,
                ("verify", "beta_grid") => cfg.verify.beta_grid = list(n, key, value)?,
                ("verify", "n_max") => cfg.verify.n_max = num(n, key, value)?,
                ("verify", "flargeru_c") => cfg.verify.flargeru_c = num(n, key, value)?,
                _ => return Err(err(n, format!("unknown key '{key}'"))),
            }
        }

        let registry = MeasureRegistry::with_builtin();
        let entry = registry
            .entry(&cfg.model.family)
            .map_err(|e| err(family_line, e.to_string()))?;
        for k in cfg.model.params.keys() {
            if !entry.keys.contains(&k) {
                let key = format!("model.{k}");
                return Err(err(lines.of(&key), format!("unknown key '{key}' for family '{}'", entry.name)));
            }
        }
        match &cfg.norming.family {
            Some(f) => {
                let reg = NormingRegistry::with_builtin();
                reg.build(f, &cfg.norming.params)
                    .map_err(|e| err(lines.of("norming.family"), e.to_string()))?;
            }
            None => {
                if let Some((p, n)) = norming_param_lines.first() {
                    return Err(err(*n, format!("unknown key 'norming.{p}'")));
                }
            }
        }
        cfg.validate(&lines)?;
        Ok(cfg)
    }

    /// Read a file; a relative `model.density_file` is resolved against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(f) = cfg.model.params.get_str("density_file") {
            let p = Path::new(f);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    let joined = dir.join(p).to_string_lossy().into_owned();
                    cfg.model.params.insert("density_file", joined);
                }
            }
        }
        Ok(cfg)
    }

    fn validate(&self, lines: &Lines) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(err(lines.of(key), format!("{key} {msg}")))
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        check(self.model.gamma.is_finite(), "model.gamma", "must be finite")?;
        check(self.model.sigma2 >= 0.0 && self.model.sigma2.is_finite(), "model.sigma2", "must be nonnegative")?;
        check(pos(self.rate.eps_min), "rate.eps_min", "must be positive")?;
        check(self.rate.eps_max > self.rate.eps_min && self.rate.eps_max.is_finite(), "rate.eps_max", "must exceed rate.eps_min")?;
        check(self.rate.n_points >= 2, "rate.n_points", "must be at least 2")?;
        check(pos(self.norming.lambda), "norming.lambda", "must be positive")?;
        check(self.norming.t_max > 0.0 && self.norming.t_max <= t_max(), "norming.t_max", "must lie in (0, e^-e]")?;
        check(pos(self.norming.t_min) && self.norming.t_min < self.norming.t_max, "norming.t_min", "must lie in (0, norming.t_max)")?;
        check(self.norming.n_points >= 2, "norming.n_points", "must be at least 2")?;
        check(self.simulate.n_paths >= 100, "simulate.n_paths", "must be at least 100")?;
        check(
            self.simulate.n_steps >= 16 && self.simulate.n_steps.is_power_of_two(),
            "simulate.n_steps",
            "must be a power of two >= 16",
        )?;
        check(pos(self.simulate.delta) && self.simulate.delta < 1.0, "simulate.delta", "must lie in (0, 1)")?;
        check(self.simulate.refine_levels <= 20, "simulate.refine_levels", "must be at most 20")?;
        check(pos(self.simulate.t), "simulate.t", "must be positive")?;
        check(pos(self.simulate.eps), "simulate.eps", "must be positive")?;
        check(!self.verify.t_grid.is_empty() && self.verify.t_grid.iter().all(|&t| pos(t)), "verify.t_grid", "must be nonempty and positive")?;
        check(
            !self.verify.eps_grid.is_empty() && self.verify.eps_grid.iter().all(|&e| pos(e) && e <= 1.0),
            "verify.eps_grid",
            "must be nonempty with entries in (0, 1]",
        )?;
        check(self.verify.r > 0.0 && self.verify.r < 1.0, "verify.r", "must lie in (0, 1)")?;
        check(self.verify.k_range.0 <= self.verify.k_range.1, "verify.k_range", "must satisfy k_min <= k_max")?;
        check(self.verify.lil_paths >= 2, "verify.lil_paths", "must be at least 2")?;
        check(
            !self.verify.beta_grid.is_empty() && self.verify.beta_grid.iter().all(|&b| b > 1.0 && b <= 3.0),
            "verify.beta_grid",
            "must be nonempty with entries in (1, 3]",
        )?;
        check((5..=60).contains(&self.verify.n_max), "verify.n_max", "must lie in [5, 60]")?;
        check(pos(self.verify.flargeru_c), "verify.flargeru_c", "must be positive")?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<LevyModel> {
        let measure = MeasureRegistry::with_builtin().build(&self.model.family, &self.model.params)?;
        LevyModel::new(self.model.gamma, self.model.sigma2, measure)
    }

    pub fn eps_grid(&self) -> Vec<f64> {
        log_grid_decreasing(self.rate.eps_min, self.rate.eps_max, self.rate.n_points)
    }

    pub fn rate_table(&self, model: &LevyModel) -> Result<RateTable> {
        RateTable::build_auto(model, self.eps_grid())
    }

    /// Closed-form norming when `norming.family` is set, otherwise the
    /// inverted rate table.
    pub fn norming_function(&self, model: &LevyModel) -> Result<NormingFunction> {
        let nf = match &self.norming.family {
            Some(f) => {
                let form = NormingRegistry::with_builtin().build(f, &self.norming.params)?;
                if form.requires_explicit_lambda() && !self.norming.lambda_explicit {
                    return Err(Error::Domain(format!(
                        "norming family '{f}' needs norming.lambda set explicitly"
                    )));
                }
                NormingFunction::closed_form(form, self.norming.lambda)?
            }
            None => NormingFunction::from_table(self.rate_table(model)?, self.norming.lambda)?,
        };
        nf.with_t_max(self.norming.t_max)
    }

    pub fn sim_settings(&self) -> SimSettings {
        SimSettings {
            n_steps: self.simulate.n_steps,
            refine_levels: self.simulate.refine_levels,
            delta: self.simulate.delta,
            small_jump_mode: self.simulate.small_jump_mode,
            seed: self.simulate.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = RunConfig::parse(
            "# polynomial\nmodel.family = two_sided_polynomial\nmodel.c1 = 1\nmodel.alpha1 = 1\n\
             model.c2 = 1\nsimulate.seed = 9  # trailing comment\nverify.k_range = 3, 12\n",
        )
        .unwrap();
        assert_eq!(cfg.model.family, "two_sided_polynomial");
        assert_eq!(cfg.simulate.seed, 9);
        assert_eq!(cfg.verify.k_range, (3, 12));
        assert_eq!(cfg.rate.n_points, 120);
        assert!(cfg.build_model().unwrap().is_symmetric());
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let e = RunConfig::parse("model.sigma2 = 1\nrate.bogus = 3\n").unwrap_err();
        assert_eq!(e, Error::Config { line: 2, message: "unknown key 'rate.bogus'".into() });
        let e = RunConfig::parse("model.sigma2 = 1\n\nmodel.alpha9 = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
        let e = RunConfig::parse("norming.sigma = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }), "{e}");
    }

    #[test]
    fn ranges_are_validated() {
        for (text, line) in [
            ("model.sigma2 = 1\nrate.eps_min = -1\n", 2),
            ("model.sigma2 = 1\nverify.r = 1.5\n", 2),
            ("simulate.n_paths = 5\n", 1),
            ("simulate.n_steps = 100\n", 1),
            ("model.sigma2 = x\n", 1),
            ("model.sigma2 = 1\nmodel.sigma2 = 2\n", 2),
            ("just text\n", 1),
        ] {
            match RunConfig::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn closed_form_norming_needs_explicit_lambda_when_required() {
        let cfg = RunConfig::parse("model.sigma2 = 1\nnorming.family = variance_gamma\n").unwrap();
        let m = cfg.build_model().unwrap();
        assert!(cfg.norming_function(&m).is_err());
        let cfg = RunConfig::parse("model.sigma2 = 1\nnorming.family = brownian\nnorming.sigma = 1\n").unwrap();
        let b = cfg.norming_function(&m).unwrap().eval(t_max()).unwrap();
        assert!((b - 0.2853).abs() < 1e-4, "{b}");
    }
}
