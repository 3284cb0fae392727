//! Two-dimensional hypervolume and the geometric helpers used by refinement.

use crate::error::{MoleError, Result};
use crate::problem::{dominates, Dominance, ObjectiveVector};
use crate::vecops::distance;

/// Largest turn angle (degrees) used by [`max_expected_descent`].
pub const MAX_TURN_ANGLE: f64 = 179.0;

/// Area dominated by `points` and bounded by `reference`.
///
/// Points that do not strictly dominate the reference contribute nothing.
pub fn hypervolume_2d(points: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let mut inside: Vec<ObjectiveVector> = points
        .iter()
        .copied()
        .filter(|p| p.0[0] < reference.0[0] && p.0[1] < reference.0[1])
        .collect();
    inside.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let mut area = 0.0;
    let mut ceiling = reference.0[1];
    for p in inside {
        if p.0[1] < ceiling {
            area += (reference.0[0] - p.0[0]) * (ceiling - p.0[1]);
            ceiling = p.0[1];
        }
    }
    area
}

/// Area of the rectangle spanned by two mutually nondominating vectors.
pub fn hv_gap(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<f64> {
    match dominates(a, b) {
        Dominance::Dominates | Dominance::DominatedBy => {
            // a shared coordinate makes the rectangle degenerate, not invalid
            if a.0[0] == b.0[0] || a.0[1] == b.0[1] {
                Ok(0.0)
            } else {
                Err(MoleError::NotComparablePair)
            }
        }
        Dominance::Equal => Ok(0.0),
        Dominance::Incomparable => Ok((a.0[0] - b.0[0]).abs() * (a.0[1] - b.0[1]).abs()),
    }
}

/// Upper estimate of how far a descent from the midpoint of `x1` and `x2`
/// would travel, given the turn angles (degrees) of the set model at both
/// nodes.
pub fn max_expected_descent(x1: &[f64], x2: &[f64], phi1: f64, phi2: f64) -> f64 {
    let phi = phi1.max(phi2).clamp(0.0, MAX_TURN_ANGLE);
    if phi == 0.0 {
        return 0.0;
    }
    0.5 * distance(x1, x2) / ((180.0 - phi) / 2.0).to_radians().tan()
}
