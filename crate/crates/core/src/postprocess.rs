//! Hypervolume-driven refinement of the archived set models.
//!
//! Consecutive node pairs whose ideal point is not dominated by the archive
//! front are refined largest-gap-first: the decision-space midpoint is
//! proposed, descended unless the set model is locally straight enough, and
//! inserted if it lands strictly inside the pair's ideal-nadir box.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::archive::{SetNode, SetsArchive, DUPLICATE_TOL};
use crate::descent::{descend_evaluated, DescentConfig};
use crate::error::{MoleError, Result};
use crate::hypervolume::{hv_gap, max_expected_descent};
use crate::problem::{DecisionVector, Mop, ObjectiveVector};
use crate::vecops::{angle_deg, distance, midpoint, sub};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostProcessConfig {
    /// Target for the summed gap relative to the front's bounding box.
    pub theta: f64,
    pub alpha_min: f64,
}

impl Default for PostProcessConfig {
    fn default() -> Self {
        Self {
            theta: 2e-5,
            alpha_min: DescentConfig::default().alpha_min,
        }
    }
}

impl PostProcessConfig {
    pub fn for_descent(descent: &DescentConfig) -> Self {
        Self {
            alpha_min: descent.alpha_min,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(MoleError::InvalidConfig("theta must lie in (0, 1]".into()));
        }
        if self.alpha_min.is_nan() || self.alpha_min <= 0.0 {
            return Err(MoleError::InvalidConfig(
                "alpha_min must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A refinable pair of consecutive nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvGapEntry {
    pub set_id: usize,
    /// Index of the left node; the right node follows it.
    pub index: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostProcessIteration {
    pub iteration: usize,
    /// Summed eligible gap before this iteration's proposal.
    pub total_gap: f64,
    pub max_hv: f64,
    pub inserted: bool,
    pub descent_skipped: bool,
}

/// A midpoint accepted without running the descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedDescent {
    pub set_id: usize,
    pub x: DecisionVector,
    pub expected_descent: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PostProcessReport {
    pub iterations: Vec<PostProcessIteration>,
    pub skipped: Vec<SkippedDescent>,
    pub inserted: usize,
    pub rejected: usize,
    pub evals_used: u64,
    pub max_hv: f64,
    pub normalized_gap: f64,
    pub budget_exhausted: bool,
}

type Key = OrderedFloat<f64>;

struct Pair {
    right: Key,
    right_f2: f64,
    gap: f64,
}

struct WorkingSet {
    set_id: usize,
    nodes: BTreeMap<Key, SetNode>,
    /// Eligible pairs keyed by the left node.
    pairs: BTreeMap<Key, Pair>,
}

impl WorkingSet {
    fn neighbors(&self, k: Key) -> (Option<&SetNode>, Option<&SetNode>) {
        let prev = self.nodes.range(..k).next_back().map(|(_, n)| n);
        let next = self
            .nodes
            .range((std::ops::Bound::Excluded(k), std::ops::Bound::Unbounded))
            .next()
            .map(|(_, n)| n);
        (prev, next)
    }

    fn turn_angle(&self, k: Key) -> f64 {
        match self.neighbors(k) {
            (Some(p), Some(n)) => {
                let x = &self.nodes[&k].x;
                angle_deg(&sub(x, &p.x), &sub(&n.x, x))
            }
            _ => 0.0,
        }
    }
}

/// Nondominated front keyed by `f1`, with `f2` strictly decreasing.
#[derive(Default)]
struct Front(BTreeMap<Key, f64>);

impl Front {
    fn weakly_dominated(&self, p: &ObjectiveVector) -> bool {
        self.0
            .range(..=OrderedFloat(p.0[0]))
            .next_back()
            .is_some_and(|(_, &f2)| f2 <= p.0[1])
    }

    /// Adds `p` if it is not weakly dominated; returns whether it was added.
    fn add(&mut self, p: &ObjectiveVector) -> bool {
        if self.weakly_dominated(p) {
            return false;
        }
        let beaten: Vec<Key> = self
            .0
            .range(OrderedFloat(p.0[0])..)
            .take_while(|(_, &f2)| f2 >= p.0[1])
            .map(|(k, _)| *k)
            .collect();
        for k in beaten {
            self.0.remove(&k);
        }
        self.0.insert(OrderedFloat(p.0[0]), p.0[1]);
        true
    }

    fn box_area(&self) -> f64 {
        match (self.0.iter().next(), self.0.iter().next_back()) {
            (Some((a, &a2)), Some((b, &b2))) => (b.0 - a.0) * (a2 - b2),
            _ => 0.0,
        }
    }
}

struct Refiner {
    sets: Vec<WorkingSet>,
    front: Front,
    heap: BinaryHeap<(OrderedFloat<f64>, Reverse<usize>, Reverse<Key>)>,
    total: f64,
}

impl Refiner {
    fn new(archive: &SetsArchive) -> Self {
        let mut front = Front::default();
        for (_, n) in archive.nodes() {
            front.add(&n.f);
        }
        let mut r = Self {
            sets: archive
                .sets()
                .iter()
                .map(|s| WorkingSet {
                    set_id: s.set_id,
                    nodes: s
                        .nodes()
                        .iter()
                        .map(|n| (OrderedFloat(n.f.0[0]), n.clone()))
                        .collect(),
                    pairs: BTreeMap::new(),
                })
                .collect(),
            front,
            heap: BinaryHeap::new(),
            total: 0.0,
        };
        for si in 0..r.sets.len() {
            let keys: Vec<Key> = r.sets[si].nodes.keys().copied().collect();
            for w in keys.windows(2) {
                r.add_pair(si, w[0], w[1]);
            }
        }
        r
    }

    fn add_pair(&mut self, si: usize, left: Key, right: Key) {
        let set = &mut self.sets[si];
        let (a, b) = (&set.nodes[&left].f, &set.nodes[&right].f);
        if self.front.weakly_dominated(&a.ideal(b)) {
            return;
        }
        let gap = hv_gap(a, b).unwrap_or(0.0);
        if gap <= 0.0 {
            return;
        }
        set.pairs.insert(
            left,
            Pair {
                right,
                right_f2: b.0[1],
                gap,
            },
        );
        self.heap
            .push((OrderedFloat(gap), Reverse(si), Reverse(left)));
        self.total += gap;
    }

    fn remove_pair(&mut self, si: usize, left: Key) {
        if let Some(p) = self.sets[si].pairs.remove(&left) {
            self.total -= p.gap;
        }
    }

    /// Drops every pair whose ideal point `q` weakly dominates.
    fn kill_dominated(&mut self, q: &ObjectiveVector) {
        for si in 0..self.sets.len() {
            let dead: Vec<Key> = self.sets[si]
                .pairs
                .range(OrderedFloat(q.0[0])..)
                .take_while(|(_, p)| p.right_f2 >= q.0[1])
                .map(|(k, _)| *k)
                .collect();
            for k in dead {
                self.remove_pair(si, k);
            }
        }
    }

    fn pop(&mut self) -> Option<(usize, Key)> {
        while let Some((gap, Reverse(si), Reverse(left))) = self.heap.pop() {
            if self.sets[si]
                .pairs
                .get(&left)
                .is_some_and(|p| p.gap == gap.0)
            {
                return Some((si, left));
            }
        }
        None
    }

    fn exact_total(&self) -> f64 {
        self.sets
            .iter()
            .flat_map(|s| s.pairs.values())
            .map(|p| p.gap)
            .sum()
    }
}

/// Refines the archive until the normalized eligible gap drops to `theta`,
/// the budget runs out, or no eligible pair remains.
pub fn post_process_hv(
    archive: &mut SetsArchive,
    mop: &mut Mop,
    config: &PostProcessConfig,
    descent_config: &DescentConfig,
) -> Result<PostProcessReport> {
    config.validate()?;
    let before = mop.evaluations();
    let mut report = PostProcessReport::default();
    if archive.is_empty() {
        return Ok(report);
    }
    let mut r = Refiner::new(archive);
    let max_hv = r.front.box_area();
    report.max_hv = max_hv;
    if max_hv <= 0.0 {
        return Ok(report);
    }
    let target = config.theta * max_hv;

    loop {
        if r.total <= target {
            r.total = r.exact_total();
            if r.total <= target {
                break;
            }
        }
        let Some((si, left)) = r.pop() else {
            r.total = r.exact_total();
            break;
        };
        let set = &r.sets[si];
        let right = set.pairs[&left].right;
        let (a, b) = (set.nodes[&left].clone(), set.nodes[&right].clone());
        let d = max_expected_descent(&a.x, &b.x, set.turn_angle(left), set.turn_angle(right));
        let m = midpoint(&a.x, &b.x);
        let skipped = d <= config.alpha_min;
        let mut log = PostProcessIteration {
            iteration: report.iterations.len(),
            total_gap: r.total,
            max_hv,
            inserted: false,
            descent_skipped: skipped,
        };

        let proposal = match mop.evaluate(&m) {
            Ok(fm) if skipped => Ok(SetNode::new(m.clone(), fm)),
            Ok(fm) => descend_evaluated(&m, fm, mop, descent_config, None).and_then(|res| {
                if res.budget_exhausted() {
                    Err(MoleError::BudgetExhausted {
                        budget: mop.budget().unwrap_or(0),
                    })
                } else {
                    Ok(SetNode::new(res.final_point, res.final_objectives))
                }
            }),
            Err(e) => Err(e),
        };
        let p = match proposal {
            Ok(p) => p,
            Err(MoleError::BudgetExhausted { .. }) => {
                report.budget_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if skipped {
            report.skipped.push(SkippedDescent {
                set_id: r.sets[si].set_id,
                x: m,
                expected_descent: d,
            });
        }

        let (ideal, nadir) = (a.f.ideal(&b.f), a.f.nadir(&b.f));
        let inside = (0..2).all(|k| ideal.0[k] < p.f.0[k] && p.f.0[k] < nadir.0[k])
            && distance(&p.x, &a.x) >= DUPLICATE_TOL
            && distance(&p.x, &b.x) >= DUPLICATE_TOL;
        r.remove_pair(si, left);
        if inside {
            let key = OrderedFloat(p.f.0[0]);
            let f = p.f;
            r.sets[si].nodes.insert(key, p);
            if r.front.add(&f) {
                r.kill_dominated(&f);
            }
            r.add_pair(si, left, key);
            r.add_pair(si, key, right);
            report.inserted += 1;
            log.inserted = true;
        } else {
            report.rejected += 1;
        }
        report.iterations.push(log);
    }

    for s in &r.sets {
        archive.replace_nodes(s.set_id, s.nodes.values().cloned().collect());
    }
    report.evals_used = mop.evaluations() - before;
    report.normalized_gap = r.total.max(0.0) / max_hv;
    Ok(report)
}

/// Eligible pairs of the archive with their gaps, in set order.
pub fn eligible_gaps(archive: &SetsArchive) -> Vec<HvGapEntry> {
    let r = Refiner::new(archive);
    r.sets
        .iter()
        .flat_map(|s| {
            s.nodes.keys().enumerate().filter_map(move |(index, k)| {
                s.pairs.get(k).map(|p| HvGapEntry {
                    set_id: s.set_id,
                    index,
                    gap: p.gap,
                })
            })
        })
        .collect()
}

/// Summed eligible gap divided by the area of the front's bounding box.
pub fn normalized_gap(archive: &SetsArchive) -> f64 {
    let r = Refiner::new(archive);
    let area = r.front.box_area();
    if area > 0.0 {
        r.exact_total() / area
    } else {
        0.0
    }
}
