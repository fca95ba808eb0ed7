use super::{JumpMeasure, Side};

/// The zero measure: a Brownian motion with drift.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmptyMeasure;

impl JumpMeasure for EmptyMeasure {
    fn family(&self) -> &'static str {
        "none"
    }

    fn density(&self, _side: Side, _x: f64) -> f64 {
        0.0
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn has_bounded_variation(&self) -> bool {
        true
    }

    fn is_empty(&self) -> bool {
        true
    }

    fn side_tail_closed(&self, _side: Side, _eps: f64) -> Option<f64> {
        Some(0.0)
    }

    fn side_moment_closed(&self, _side: Side, _eps: f64, _k: i32) -> Option<f64> {
        Some(0.0)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
}
