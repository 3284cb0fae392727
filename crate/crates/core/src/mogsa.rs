//! Gradient sliding baseline.
//!
//! Alternates a fixed-step descent along the normalized multi-objective
//! gradient with fixed-step walks along the single-objective gradients. A
//! walk that reaches a point where the two gradients enclose less than 90°
//! hands over to the next descent; the run stops once both walks end at
//! single-objective optima.

use serde::{Deserialize, Serialize};

use crate::error::{MoleError, Result};
use crate::mog::{mog_normalized, DEGENERACY_TOL};
use crate::problem::{DecisionVector, Mop, ObjectiveVector};
use crate::vecops::{angle_deg, axpy, norm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogsaConfig {
    pub descent_step: f64,
    pub explore_step: f64,
    /// Descent stops once the normalized gradient is shorter than this.
    pub mog_eps: f64,
    pub max_descent_iter: usize,
    pub max_explore_iter: usize,
    /// Descent/explore rounds before the run is cut off.
    pub max_rounds: usize,
}

impl Default for MogsaConfig {
    fn default() -> Self {
        Self::for_diag(200f64.sqrt())
    }
}

impl MogsaConfig {
    pub fn for_diag(diag: f64) -> Self {
        Self {
            descent_step: diag / 100.0,
            explore_step: diag / 200.0,
            mog_eps: 1e-4,
            max_descent_iter: 10_000,
            max_explore_iter: 10_000,
            max_rounds: 100,
        }
    }

    pub fn for_problem(mop: &Mop) -> Self {
        Self::for_diag(mop.diag())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.descent_step, self.explore_step, self.mog_eps]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive
            || self.max_descent_iter == 0
            || self.max_explore_iter == 0
            || self.max_rounds == 0
        {
            return Err(MoleError::InvalidConfig(
                "MOGSA parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MogsaPhase {
    Descent,
    Explore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogsaPoint {
    pub x: DecisionVector,
    pub f: ObjectiveVector,
    pub phase: MogsaPhase,
    pub round: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MogsaDescentEnd {
    Converged,
    /// A vanishing single-objective gradient.
    Degenerate,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogsaDescent {
    pub point: DecisionVector,
    pub f: ObjectiveVector,
    pub path: Vec<(DecisionVector, ObjectiveVector)>,
    pub end: MogsaDescentEnd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkEnd {
    SoOptimum,
    SuperposedBasin,
    /// The box stopped the walk.
    Blocked,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogsaExplore {
    pub path: Vec<(DecisionVector, ObjectiveVector)>,
    pub walks: Vec<WalkEnd>,
    /// Start of the next descent, if a superposed basin was presumed.
    pub next: Option<DecisionVector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MogsaTermination {
    /// Both walks ended at single-objective optima.
    StrictSet,
    IterationCap,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogsaArchive {
    pub visited: Vec<MogsaPoint>,
    pub rounds: usize,
    /// Points handed from one exploration to the next descent.
    pub handoffs: Vec<DecisionVector>,
    pub termination: MogsaTermination,
}

/// Fixed-step descent along the normalized multi-objective gradient.
pub fn mogsa_descent(x: &[f64], mop: &mut Mop, config: &MogsaConfig) -> Result<MogsaDescent> {
    let mut x = mop.clamp(x);
    let mut f = mop.evaluate(&x)?;
    let mut path = vec![(x.clone(), f)];
    for _ in 0..config.max_descent_iter {
        let (g1, g2) = mop.gradients(&x)?;
        let n = mog_normalized(&g1, &g2);
        if n.degenerate || n.norm() < config.mog_eps {
            let end = if n.degenerate {
                MogsaDescentEnd::Degenerate
            } else {
                MogsaDescentEnd::Converged
            };
            return Ok(MogsaDescent {
                point: x,
                f,
                path,
                end,
            });
        }
        x = mop.clamp(&axpy(&x, -config.descent_step, &n.direction));
        f = mop.evaluate(&x)?;
        path.push((x.clone(), f));
    }
    Ok(MogsaDescent {
        point: x,
        f,
        path,
        end: MogsaDescentEnd::IterationCap,
    })
}

/// Walks along the negative gradient of `f1`, then of `f2` from where the
/// first walk ended.
pub fn mogsa_explore(x_star: &[f64], mop: &mut Mop, config: &MogsaConfig) -> Result<MogsaExplore> {
    let mut x = x_star.to_vec();
    let mut path = Vec::new();
    let mut walks = Vec::new();
    for obj in 0..2 {
        let mut prev: Option<Vec<f64>> = None;
        let mut end = WalkEnd::IterationCap;
        for _ in 0..config.max_explore_iter {
            let (g1, g2) = mop.gradients(&x)?;
            let g = if obj == 0 { g1.clone() } else { g2.clone() };
            let other = if obj == 0 { &g2 } else { &g1 };
            // the other optimum is where this walk usually starts
            let other_vanished = norm(other) < DEGENERACY_TOL;
            if norm(&g) < DEGENERACY_TOL || (other_vanished && prev.is_some()) {
                end = WalkEnd::SoOptimum;
                break;
            }
            if prev.as_ref().is_some_and(|p| angle_deg(p, &g) > 90.0) {
                end = WalkEnd::SoOptimum;
                break;
            }
            if !other_vanished && angle_deg(&g1, &g2) < 90.0 {
                walks.push(WalkEnd::SuperposedBasin);
                return Ok(MogsaExplore {
                    path,
                    walks,
                    next: Some(x),
                });
            }
            let next = mop.clamp(&axpy(&x, -config.explore_step / norm(&g), &g));
            if next == x {
                end = WalkEnd::Blocked;
                break;
            }
            x = next;
            let f = mop.evaluate(&x)?;
            path.push((x.clone(), f));
            prev = Some(g);
        }
        walks.push(end);
    }
    Ok(MogsaExplore {
        path,
        walks,
        next: None,
    })
}

/// Runs descent and exploration rounds until a strict set is presumed, the
/// round limit is hit or the budget runs out.
pub fn run_mogsa(x: &[f64], mop: &mut Mop, config: &MogsaConfig) -> Result<MogsaArchive> {
    config.validate()?;
    if let Some(b) = mop.bounds() {
        if let Some(k) = (0..x.len()).find(|&k| !(b.lower()[k]..=b.upper()[k]).contains(&x[k])) {
            return Err(MoleError::OutOfBounds {
                index: k,
                value: x[k],
                lower: b.lower()[k],
                upper: b.upper()[k],
            });
        }
    }
    let mut archive = MogsaArchive {
        visited: Vec::new(),
        rounds: 0,
        handoffs: Vec::new(),
        termination: MogsaTermination::IterationCap,
    };
    let mut next = x.to_vec();
    for round in 0..config.max_rounds {
        archive.rounds = round + 1;
        let tag = |phase| {
            move |(x, f): (DecisionVector, ObjectiveVector)| MogsaPoint { x, f, phase, round }
        };
        let d = match mogsa_descent(&next, mop, config) {
            Ok(d) => d,
            Err(MoleError::BudgetExhausted { .. }) => {
                archive.termination = MogsaTermination::BudgetExhausted;
                return Ok(archive);
            }
            Err(e) => return Err(e),
        };
        archive
            .visited
            .extend(d.path.into_iter().map(tag(MogsaPhase::Descent)));
        let e = match mogsa_explore(&d.point, mop, config) {
            Ok(e) => e,
            Err(MoleError::BudgetExhausted { .. }) => {
                archive.termination = MogsaTermination::BudgetExhausted;
                return Ok(archive);
            }
            Err(e) => return Err(e),
        };
        archive
            .visited
            .extend(e.path.into_iter().map(tag(MogsaPhase::Explore)));
        match e.next {
            Some(x) => {
                archive.handoffs.push(x.clone());
                next = x;
            }
            None => {
                archive.termination = MogsaTermination::StrictSet;
                return Ok(archive);
            }
        }
    }
    Ok(archive)
}
