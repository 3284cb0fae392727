//! Multi-objective gradients for two objectives.
//!
//! Three variants are provided: the minimum-norm element of the convex hull of
//! the two gradients, the average of the unit gradients, and the same average
//! rescaled by the geometric mean of the gradient lengths. The last one is the
//! direction used throughout the optimizer: it is continuous around single
//! objective optima and reduces to the ordinary gradient when both objectives
//! coincide.

use serde::{Deserialize, Serialize};

use crate::vecops::{dot, norm};

/// Gradient lengths below this count as vanishing.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogResult {
    pub direction: Vec<f64>,
    pub so_gradient_norms: [f64; 2],
    /// Convex weights of the combination that produced `direction`.
    pub weights: [f64; 2],
    pub degenerate: bool,
}

impl MogResult {
    pub fn norm(&self) -> f64 {
        norm(&self.direction)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MogVariant {
    ConvexHull,
    Normalized,
    #[default]
    GeometricMean,
}

impl MogVariant {
    pub fn compute(self, g1: &[f64], g2: &[f64]) -> MogResult {
        match self {
            Self::ConvexHull => mog_convex_hull(g1, g2),
            Self::Normalized => mog_normalized(g1, g2),
            Self::GeometricMean => mog_geometric_mean(g1, g2),
        }
    }
}

fn combine(g1: &[f64], w1: f64, g2: &[f64], w2: f64) -> Vec<f64> {
    g1.iter().zip(g2).map(|(a, b)| w1 * a + w2 * b).collect()
}

pub fn mog_convex_hull(g1: &[f64], g2: &[f64]) -> MogResult {
    let n1 = norm(g1);
    let n2 = norm(g2);
    let degenerate = n1 < DEGENERACY_TOL || n2 < DEGENERACY_TOL;
    let g11 = dot(g1, g1);
    let g22 = dot(g2, g2);
    let g12 = dot(g1, g2);
    let alpha = if g11 - g12 <= 0.0 {
        1.0
    } else if g22 - g12 <= 0.0 {
        0.0
    } else {
        ((g22 - g12) / (g11 - 2.0 * g12 + g22)).clamp(0.0, 1.0)
    };
    let direction = if alpha == 1.0 {
        g1.to_vec()
    } else if alpha == 0.0 {
        g2.to_vec()
    } else {
        combine(g1, alpha, g2, 1.0 - alpha)
    };
    MogResult {
        direction,
        so_gradient_norms: [n1, n2],
        weights: [alpha, 1.0 - alpha],
        degenerate,
    }
}

fn rescaled_weights(n1: f64, n2: f64) -> [f64; 2] {
    let w1 = n2 / (n1 + n2);
    [w1, 1.0 - w1]
}

pub fn mog_normalized(g1: &[f64], g2: &[f64]) -> MogResult {
    let n1 = norm(g1);
    let n2 = norm(g2);
    if n1 < DEGENERACY_TOL || n2 < DEGENERACY_TOL {
        return MogResult {
            direction: vec![0.0; g1.len()],
            so_gradient_norms: [n1, n2],
            weights: [0.5, 0.5],
            degenerate: true,
        };
    }
    MogResult {
        direction: combine(g1, 0.5 / n1, g2, 0.5 / n2),
        so_gradient_norms: [n1, n2],
        weights: rescaled_weights(n1, n2),
        degenerate: false,
    }
}

pub fn mog_geometric_mean(g1: &[f64], g2: &[f64]) -> MogResult {
    let n1 = norm(g1);
    let n2 = norm(g2);
    if n1 < DEGENERACY_TOL || n2 < DEGENERACY_TOL {
        return MogResult {
            direction: vec![0.0; g1.len()],
            so_gradient_norms: [n1, n2],
            weights: [0.5, 0.5],
            degenerate: true,
        };
    }
    MogResult {
        direction: combine(g1, 0.5 * (n2 / n1).sqrt(), g2, 0.5 * (n1 / n2).sqrt()),
        so_gradient_norms: [n1, n2],
        weights: rescaled_weights(n1, n2),
        degenerate: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    pub critical: bool,
    /// Fritz-John multipliers, only reported for critical points.
    pub weights: Option<[f64; 2]>,
}

/// First-order criticality: `‖∇F_GM‖ < crit_gamma`.
pub fn criticality(g1: &[f64], g2: &[f64], crit_gamma: f64) -> Criticality {
    let critical = mog_geometric_mean(g1, g2).norm() < crit_gamma;
    Criticality {
        critical,
        weights: critical.then(|| mog_convex_hull(g1, g2).weights),
    }
}
