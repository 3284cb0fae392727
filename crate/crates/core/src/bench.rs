//! Target-based bookkeeping for benchmark runs.
//!
//! A run's quality at evaluation `t` is the normalized hypervolume of every
//! objective vector evaluated so far, taken w.r.t. the nadir of a fixed
//! normalization. Before any point dominates the nadir it is the negative
//! normalized distance to the dominated region instead. A target with
//! offset `Δ` is hit once `reference - quality <= Δ`.

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::problem::{nondominated, ObjectiveVector};

/// Target offsets, sorted ascending (hardest first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetLadder {
    offsets: Vec<f64>,
}

impl Default for TargetLadder {
    fn default() -> Self {
        Self::standard()
    }
}

impl TargetLadder {
    /// `-10^-4, -10^-4.2, ..., -10^-5, 0, 10^-5, 10^-4.9, ..., 10^0`
    pub fn standard() -> Self {
        let mut offsets: Vec<f64> = (0..=5)
            .map(|k| -(10f64.powf(-(20 + k) as f64 / 5.0)))
            .collect();
        offsets.push(0.0);
        offsets.push(1e-5);
        offsets.extend((0..50).map(|k| 10f64.powf((k - 49) as f64 / 10.0)));
        Self::new(offsets)
    }

    pub fn new(mut offsets: Vec<f64>) -> Self {
        offsets.sort_by(f64::total_cmp);
        offsets.dedup();
        Self { offsets }
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Ideal and nadir used to map objectives onto the unit box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub ideal: ObjectiveVector,
    pub nadir: ObjectiveVector,
}

impl Normalization {
    /// Ideal and nadir of the nondominated subset; `None` for no points.
    pub fn from_points(points: &[ObjectiveVector]) -> Option<Self> {
        let front = nondominated(points);
        let first = front.first()?;
        let last = front.last()?;
        Some(Self {
            ideal: ObjectiveVector::new(first.f1(), last.f2()),
            nadir: ObjectiveVector::new(last.f1(), first.f2()),
        })
    }

    /// Coordinates with the ideal at 0 and the nadir at 1. A flat axis keeps
    /// unit width.
    pub fn apply(&self, f: &ObjectiveVector) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            let w = self.nadir[k] - self.ideal[k];
            let w = if w > 0.0 { w } else { 1.0 };
            out[k] = (f[k] - self.ideal[k]) / w;
        }
        out
    }
}

/// Incremental normalized hypervolume of a growing point set.
#[derive(Clone, Debug)]
pub struct QualityTracker {
    norm: Normalization,
    /// Normalized front inside the unit box, f1 -> f2.
    front: BTreeMap<OrderedFloat<f64>, f64>,
    hv: f64,
    distance: f64,
}

impl QualityTracker {
    pub fn new(norm: Normalization) -> Self {
        Self {
            norm,
            front: BTreeMap::new(),
            hv: 0.0,
            distance: f64::INFINITY,
        }
    }

    pub fn quality(&self) -> f64 {
        if self.front.is_empty() {
            -self.distance
        } else {
            self.hv
        }
    }

    pub fn hypervolume(&self) -> f64 {
        self.hv
    }

    /// Adds one objective vector; returns whether the quality improved.
    pub fn push(&mut self, f: &ObjectiveVector) -> bool {
        let [a, b] = self.norm.apply(f);
        if !(a < 1.0 && b < 1.0) {
            if !self.front.is_empty() {
                return false;
            }
            let d = (a - 1.0).max(0.0).hypot((b - 1.0).max(0.0));
            if d < self.distance {
                self.distance = d;
                return true;
            }
            return false;
        }
        // weakly dominated by the predecessor in f1 (which has the smallest f2 so far)
        if let Some((_, &f2)) = self.front.range(..=OrderedFloat(a)).next_back() {
            if f2 <= b {
                return false;
            }
        }
        let cap = self
            .front
            .range(..OrderedFloat(a))
            .next_back()
            .map_or(1.0, |(_, &f2)| f2);
        // sweep the strips between a and the first front point below b
        let mut added = 0.0;
        let (mut x, mut top) = (a, cap);
        let mut dominated = Vec::new();
        let mut bounded = false;
        for (&k, &f2) in self.front.range(OrderedFloat(a)..) {
            added += (k.0 - x) * (top - b);
            x = k.0;
            if f2 < b {
                bounded = true;
                break;
            }
            dominated.push(k);
            top = top.min(f2);
        }
        if !bounded {
            added += (1.0 - x) * (top - b);
        }
        for k in dominated {
            self.front.remove(&k);
        }
        self.front.insert(OrderedFloat(a), b);
        self.hv += added;
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Evaluations consumed when the quality was reached (1-based).
    pub evals: u64,
    pub quality: f64,
}

/// Quality after every improving evaluation.
pub fn quality_trajectory(log: &[ObjectiveVector], norm: &Normalization) -> Vec<TrajectoryPoint> {
    let mut tracker = QualityTracker::new(*norm);
    let mut out = Vec::new();
    for (t, f) in log.iter().enumerate() {
        if tracker.push(f) {
            out.push(TrajectoryPoint {
                evals: t as u64 + 1,
                quality: tracker.quality(),
            });
        }
    }
    out
}

/// Evaluations at which each target (in ladder order) was first reached.
pub fn first_hits(
    trajectory: &[TrajectoryPoint],
    reference: f64,
    ladder: &TargetLadder,
) -> Vec<Option<u64>> {
    ladder
        .offsets()
        .iter()
        .map(|&delta| {
            trajectory
                .iter()
                .find(|p| reference - p.quality <= delta)
                .map(|p| p.evals)
        })
        .collect()
}

/// Final quality of a trajectory, or `-inf` when it is empty.
pub fn final_quality(trajectory: &[TrajectoryPoint]) -> f64 {
    trajectory.last().map_or(f64::NEG_INFINITY, |p| p.quality)
}
