use super::{JumpMeasure, Side};
use crate::error::{Error, Result};

/// Density samples on each side, interpolated linearly in `(ln|x|, ln density)`.
///
/// Below the smallest node the first segment's power law is extended to the
/// origin; above the largest node the last segment is extended up to `|x| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMeasure {
    positive: Vec<(f64, f64)>,
    negative: Vec<(f64, f64)>,
}

fn validate_side(nodes: &mut Vec<(f64, f64)>, label: &str) -> Result<()> {
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in nodes.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidModel(format!("duplicate {label} node at {}", w[0].0)));
        }
    }
    for &(x, d) in nodes.iter() {
        if !(x > 0.0 && x <= 1.0) || !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidModel(format!(
                "bad {label} node ({x}, {d}): need 0 < |x| <= 1 and density >= 0"
            )));
        }
    }
    if nodes.iter().all(|n| n.1 == 0.0) {
        nodes.clear();
    }
    if nodes.len() == 1 {
        return Err(Error::InvalidModel(format!("{label} side needs at least two nodes")));
    }
    if let Some(p) = leading_exponent(nodes) {
        if p <= -3.0 + 1e-9 {
            return Err(Error::InvalidModel(format!(
                "{label} density ~ |x|^{p:.3} near zero has infinite second moment"
            )));
        }
    }
    Ok(())
}

fn leading_exponent(nodes: &[(f64, f64)]) -> Option<f64> {
    if nodes.len() < 2 || nodes[0].1 <= 0.0 || nodes[1].1 <= 0.0 {
        return None;
    }
    Some((nodes[1].1 / nodes[0].1).ln() / (nodes[1].0 / nodes[0].0).ln())
}

fn segment(a: (f64, f64), b: (f64, f64), x: f64) -> f64 {
    if a.1 > 0.0 && b.1 > 0.0 {
        let t = (x / a.0).ln() / (b.0 / a.0).ln();
        (a.1.ln() + t * (b.1 / a.1).ln()).exp()
    } else {
        let t = (x - a.0) / (b.0 - a.0);
        (a.1 + t * (b.1 - a.1)).max(0.0)
    }
}

impl TabulatedMeasure {
    /// Nodes are `(|x|, density)` pairs for each side.
    pub fn new(mut positive: Vec<(f64, f64)>, mut negative: Vec<(f64, f64)>) -> Result<Self> {
        validate_side(&mut positive, "positive")?;
        validate_side(&mut negative, "negative")?;
        if positive.is_empty() && negative.is_empty() {
            return Err(Error::InvalidModel("tabulated measure has no mass".into()));
        }
        Ok(Self { positive, negative })
    }

    /// Sample another measure on a log-spaced grid `[x_min, 1]` on both sides.
    pub fn sample_from(m: &dyn JumpMeasure, x_min: f64, per_decade: usize) -> Result<Self> {
        let decades = -x_min.log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(1);
        let grid: Vec<f64> = (0..=n)
            .map(|i| x_min * 10f64.powf(decades * i as f64 / n as f64))
            .map(|x| x.min(1.0))
            .collect();
        let side = |s: Side| grid.iter().map(|&x| (x, m.density(s, x))).collect::<Vec<_>>();
        Self::new(side(Side::Positive), side(Side::Negative))
    }

    /// Parse `x,density` rows; `x` is the signed jump size.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("line {}: expected 'x,density'", i + 1)));
            };
            let (Ok(x), Ok(d)) = (a.parse::<f64>(), b.parse::<f64>()) else {
                if i == 0 {
                    continue; // header
                }
                return Err(Error::Parse(format!("line {}: not numeric", i + 1)));
            };
            if x > 0.0 {
                pos.push((x, d));
            } else if x < 0.0 {
                neg.push((-x, d));
            } else {
                return Err(Error::Parse(format!("line {}: atom at zero", i + 1)));
            }
        }
        Self::new(pos, neg)
    }

    fn nodes(&self, side: Side) -> &[(f64, f64)] {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }
}

impl JumpMeasure for TabulatedMeasure {
    fn family(&self) -> &'static str {
        "tabulated"
    }

    fn density(&self, side: Side, x: f64) -> f64 {
        let nodes = self.nodes(side);
        if nodes.is_empty() || x <= 0.0 || x > 1.0 {
            return 0.0;
        }
        let i = nodes.partition_point(|n| n.0 < x);
        let (a, b) = if i == 0 {
            (nodes[0], nodes[1])
        } else if i >= nodes.len() {
            (nodes[nodes.len() - 2], nodes[nodes.len() - 1])
        } else {
            (nodes[i - 1], nodes[i])
        };
        segment(a, b, x)
    }

    fn is_symmetric(&self) -> bool {
        self.positive == self.negative
    }

    fn has_bounded_variation(&self) -> bool {
        Side::BOTH
            .iter()
            .all(|&s| leading_exponent(self.nodes(s)).is_none_or(|p| p > -2.0 + 1e-9))
    }

    fn side_is_empty(&self, side: Side) -> bool {
        self.nodes(side).is_empty()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .positive
            .iter()
            .chain(self.negative.iter())
            .map(|n| n.0)
            .filter(|&x| x < 1.0)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() > 64 {
            Vec::new()
        } else {
            pts
        }
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("positive_nodes", self.positive.len() as f64),
            ("negative_nodes", self.negative.len() as f64),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::TwoSidedPolynomial;

    #[test]
    fn exact_on_power_laws() {
        let p = TwoSidedPolynomial::new(1.0, 1.5, 0.3, 0.2).unwrap();
        let t = TabulatedMeasure::sample_from(&p, 1e-3, 4).unwrap();
        for side in Side::BOTH {
            for x in [1e-6, 3.3e-3, 0.07, 0.99] {
                let a = t.density(side, x);
                let b = p.density(side, x);
                assert!(((a - b) / b).abs() < 1e-10, "{side:?} {x}: {a} vs {b}");
            }
        }
        assert!(!t.is_symmetric());
        assert!(!t.has_bounded_variation());
    }

    #[test]
    fn parses_signed_csv() {
        let text = "x,density\n-0.5,2\n-0.1,50\n0.1,50\n0.5,2\n";
        let t = TabulatedMeasure::parse_csv(text).unwrap();
        assert!(t.is_symmetric());
        assert!(TabulatedMeasure::parse_csv("x,density\n0,1\n0.5,1\n").is_err());
    }

    #[test]
    fn rejects_infinite_second_moment() {
        let nodes = vec![(0.01, 1e6), (0.1, 1e3)]; // slope -3
        assert!(TabulatedMeasure::new(nodes, vec![]).is_err());
    }
}
