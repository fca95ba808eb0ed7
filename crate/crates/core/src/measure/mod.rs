//! Lévy measures supported on `[-1, 1] \ {0}`.
//!
//! Each parametric family implements [`JumpMeasure`] and is registered by
//! name in a [`MeasureRegistry`], so configurations can select a family at
//! runtime (`model.family = two_sided_polynomial`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

mod empty;
mod log_polynomial;
mod polynomial;
mod subordinated;
mod tabulated;
mod variance_gamma;

pub use empty::EmptyMeasure;
pub use log_polynomial::SymmetricLogPolynomial;
pub use polynomial::TwoSidedPolynomial;
pub use subordinated::{Subordinator, SubordinatedBrownian};
pub use tabulated::TabulatedMeasure;
pub use variance_gamma::GammaJumps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Positive, Side::Negative];

    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// A Lévy measure with a density on `[-1, 1] \ {0}`.
///
/// Densities are queried per side with `x = |jump| ∈ (0, 1]`.
pub trait JumpMeasure: Send + Sync + fmt::Debug {
    /// Registry name of the family.
    fn family(&self) -> &'static str;

    /// Density of jumps of size `side.sign() * x`, for `x ∈ (0, 1]`.
    fn density(&self, side: Side, x: f64) -> f64;

    /// `Π(A) = Π(-A)` for all Borel `A`, known from the parameters.
    fn is_symmetric(&self) -> bool;

    /// `∫_{|x| ≤ 1} |x| Π(dx) < ∞`.
    fn has_bounded_variation(&self) -> bool;

    fn is_empty(&self) -> bool {
        false
    }

    /// Whether the given side carries any mass.
    fn side_is_empty(&self, _side: Side) -> bool {
        self.is_empty()
    }

    /// Closed form for `Π(side · (eps, 1])`.
    fn side_tail_closed(&self, _side: Side, _eps: f64) -> Option<f64> {
        None
    }

    /// Closed form for `∫_0^eps x^k density(side, x) dx`; `Some(inf)` if it diverges.
    fn side_moment_closed(&self, _side: Side, _eps: f64, _k: i32) -> Option<f64> {
        None
    }

    /// Closed-form quantile of jump sizes on one side restricted to `(delta, 1]`:
    /// returns `x` with `Π_side((x, 1]) = q · Π_side((delta, 1])`.
    fn side_jump_quantile(&self, _side: Side, _delta: f64, _q: f64) -> Option<f64> {
        None
    }

    /// Points in `(0, 1)` where the density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Gaussian variance implied by the family itself (a drifting subordinator).
    fn implied_gaussian_variance(&self) -> f64 {
        0.0
    }

    fn params(&self) -> Vec<(&'static str, f64)>;
}

/// String-valued parameters as read from a config section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.values.insert(key.to_string(), value.to_string());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .get_str(key)
            .ok_or_else(|| Error::InvalidModel(format!("missing parameter '{key}'")))?;
        raw.trim()
            .parse()
            .map_err(|_| Error::InvalidModel(format!("parameter '{key}' is not a number: {raw}")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get_str(key) {
            Some(_) => self.f64(key),
            None => Ok(default),
        }
    }
}

pub type MeasureBuilder = fn(&Params) -> Result<Arc<dyn JumpMeasure>>;

#[derive(Clone)]
pub struct FamilyEntry {
    pub name: &'static str,
    pub keys: &'static [&'static str],
    pub build: MeasureBuilder,
}

impl fmt::Debug for FamilyEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyEntry")
            .field("name", &self.name)
            .field("keys", &self.keys)
            .finish()
    }
}

/// Name → constructor table for Lévy measure families.
#[derive(Debug, Clone, Default)]
pub struct MeasureRegistry {
    families: BTreeMap<&'static str, FamilyEntry>,
}

impl MeasureRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(FamilyEntry {
            name: "none",
            keys: &[],
            build: |_| Ok(Arc::new(EmptyMeasure)),
        });
        reg.register(FamilyEntry {
            name: "two_sided_polynomial",
            keys: &["c1", "alpha1", "c2", "alpha2"],
            build: |p| {
                Ok(Arc::new(TwoSidedPolynomial::new(
                    p.f64_or("c1", 0.0)?,
                    p.f64_or("alpha1", 0.0)?,
                    p.f64_or("c2", 0.0)?,
                    p.f64_or("alpha2", p.f64_or("alpha1", 0.0)?)?,
                )?))
            },
        });
        reg.register(FamilyEntry {
            name: "symmetric_log_polynomial",
            keys: &["alpha", "gamma_exp", "scale"],
            build: |p| {
                Ok(Arc::new(SymmetricLogPolynomial::new(
                    p.f64("alpha")?,
                    p.f64_or("gamma_exp", 0.0)?,
                    p.f64_or("scale", 1.0)?,
                )?))
            },
        });
        reg.register(FamilyEntry {
            name: "gamma_jumps",
            keys: &["a", "b", "mu", "sigma"],
            build: |p| {
                Ok(Arc::new(GammaJumps::new(
                    p.f64("a")?,
                    p.f64("b")?,
                    p.f64_or("mu", 0.0)?,
                    p.f64("sigma")?,
                )?))
            },
        });
        reg.register(FamilyEntry {
            name: "subordinated_bm",
            keys: &["subordinator", "sub_a", "sub_b", "sub_beta", "sub_c", "gamma_a", "sigma"],
            build: |p| {
                let sub = match p.get_str("subordinator").unwrap_or("gamma") {
                    "gamma" => Subordinator::gamma(p.f64("sub_a")?, p.f64("sub_b")?)?,
                    "stable" => Subordinator::stable(p.f64("sub_beta")?, p.f64("sub_c")?)?,
                    other => return Err(Error::UnknownFamily(format!("subordinator {other}"))),
                };
                Ok(Arc::new(SubordinatedBrownian::new(
                    sub,
                    p.f64_or("gamma_a", 0.0)?,
                    p.f64("sigma")?,
                )?))
            },
        });
        reg.register(FamilyEntry {
            name: "tabulated",
            keys: &["density_file"],
            build: |p| {
                let path = p
                    .get_str("density_file")
                    .ok_or_else(|| Error::InvalidModel("missing parameter 'density_file'".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidModel(format!("cannot read {path}: {e}")))?;
                Ok(Arc::new(TabulatedMeasure::parse_csv(&text)?))
            },
        });
        reg
    }

    pub fn register(&mut self, entry: FamilyEntry) {
        self.families.insert(entry.name, entry);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn entry(&self, name: &str) -> Result<&FamilyEntry> {
        self.families
            .get(name)
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<Arc<dyn JumpMeasure>> {
        let entry = self.entry(name)?;
        if let Some(bad) = params.keys().find(|k| !entry.keys.contains(k)) {
            return Err(Error::InvalidModel(format!(
                "family '{name}' does not accept parameter '{bad}'"
            )));
        }
        (entry.build)(params)
    }
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite, got {v}")))
    }
}
