//! The set-network exploration loop.
//!
//! Each starting point is descended to a locally efficient point and pushed
//! onto a stack. Popped points that already belong to an archived set are
//! inserted there; otherwise their set is explored and the superposed points
//! it reveals are pushed in turn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{find_containing_set, SetNode, SetOrigin, SetsArchive};
use crate::continuation::{explore_efficient_set, ExploreConfig};
use crate::descent::{descend_evaluated, multi_objective_descent, DescentConfig};
use crate::error::{MoleError, Result};
use crate::postprocess::{post_process_hv, PostProcessConfig, PostProcessReport};
use crate::problem::{BoxBounds, DecisionVector, Mop, DEFAULT_BOX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StartingPoints {
    /// `count` points drawn uniformly from the box bounds (or the default box).
    UniformRandom {
        seed: u64,
        count: usize,
    },
    ExplicitList(Vec<DecisionVector>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleConfig {
    pub max_starting_points: usize,
    pub max_sets: usize,
    pub descent: DescentConfig,
    pub explore: ExploreConfig,
    pub postprocess: PostProcessConfig,
    /// Successful starts before the first refinement pass.
    pub warmup_starts: usize,
    pub refine: bool,
}

impl Default for MoleConfig {
    fn default() -> Self {
        Self::for_diag(200f64.sqrt())
    }
}

impl MoleConfig {
    pub fn for_diag(diag: f64) -> Self {
        let descent = DescentConfig::for_diag(diag);
        Self {
            max_starting_points: 1000,
            max_sets: 1000,
            postprocess: PostProcessConfig::for_descent(&descent),
            descent,
            explore: ExploreConfig::for_diag(diag),
            warmup_starts: 10,
            refine: true,
        }
    }

    pub fn for_problem(mop: &Mop) -> Self {
        Self::for_diag(mop.diag())
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_starting_points == 0 || self.max_sets == 0 {
            return Err(MoleError::InvalidConfig(
                "start and set limits must be positive".into(),
            ));
        }
        self.descent.validate()?;
        self.explore.validate()?;
        self.postprocess.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StackOp {
    Push,
    Pop,
}

/// One stack operation; `entry` numbers pushed points in push order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackEvent {
    pub op: StackOp,
    pub entry: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    StartsExhausted,
    BudgetExhausted,
    MaxSets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetProvenance {
    pub set_id: usize,
    pub origin: SetOrigin,
    pub nodes: usize,
    pub contributes_to_front: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MoleRunReport {
    pub archive: SetsArchive,
    pub evals_used: u64,
    pub starting_points_consumed: usize,
    pub successful_starts: usize,
    pub explore_calls: usize,
    /// Popped points claimed by an archived set.
    pub membership_hits: usize,
    pub stack_trace: Vec<StackEvent>,
    pub postprocess: Vec<PostProcessReport>,
    pub stop: StopReason,
}

impl MoleRunReport {
    pub fn provenance(&self) -> Vec<SetProvenance> {
        self.archive
            .sets()
            .iter()
            .map(|s| SetProvenance {
                set_id: s.set_id,
                origin: self
                    .archive
                    .origin(s.set_id)
                    .expect("archived set has an origin"),
                nodes: s.len(),
                contributes_to_front: self.archive.contributes_to_front(s.set_id),
            })
            .collect()
    }

    pub fn budget_exhausted(&self) -> bool {
        self.stop == StopReason::BudgetExhausted
    }
}

/// Materializes the starting points, capped at `limit`.
pub fn starting_points(
    source: &StartingPoints,
    mop: &Mop,
    limit: usize,
) -> Result<Vec<DecisionVector>> {
    match source {
        StartingPoints::ExplicitList(xs) => {
            for x in xs {
                if x.len() != mop.dimension() {
                    return Err(MoleError::DimensionMismatch {
                        expected: mop.dimension(),
                        actual: x.len(),
                    });
                }
            }
            Ok(xs.iter().take(limit).cloned().collect())
        }
        StartingPoints::UniformRandom { seed, count } => {
            let fallback;
            let bounds = match mop.bounds() {
                Some(b) => b,
                None => {
                    fallback = BoxBounds::cube(mop.dimension(), -DEFAULT_BOX, DEFAULT_BOX)?;
                    &fallback
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..(*count).min(limit))
                .map(|_| {
                    bounds
                        .lower()
                        .iter()
                        .zip(bounds.upper())
                        .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
                        .collect()
                })
                .collect())
        }
    }
}

struct Pending {
    node: SetNode,
    origin: SetOrigin,
    entry: usize,
    superposed: bool,
}

enum Flow {
    Continue,
    Stop(StopReason),
}

struct Runner<'a> {
    mop: &'a mut Mop,
    config: &'a MoleConfig,
    archive: SetsArchive,
    stack: Vec<Pending>,
    pushed: usize,
    trace: Vec<StackEvent>,
    explore_calls: usize,
    hits: usize,
}

impl Runner<'_> {
    fn push(&mut self, node: SetNode, origin: SetOrigin, superposed: bool) {
        let entry = self.pushed;
        self.pushed += 1;
        self.trace.push(StackEvent {
            op: StackOp::Push,
            entry,
        });
        self.stack.push(Pending {
            node,
            origin,
            entry,
            superposed,
        });
    }

    /// Drains the stack; returns the ids of newly archived sets.
    fn drain(&mut self, new_sets: &mut Vec<usize>) -> Result<Flow> {
        while let Some(item) = self.stack.pop() {
            self.trace.push(StackEvent {
                op: StackOp::Pop,
                entry: item.entry,
            });
            let node = if item.superposed {
                // superposed points may stop short of criticality
                let d = descend_evaluated(
                    &item.node.x,
                    item.node.f,
                    self.mop,
                    &self.config.descent,
                    None,
                )?;
                if d.budget_exhausted() {
                    return Ok(Flow::Stop(StopReason::BudgetExhausted));
                }
                SetNode::new(d.final_point, d.final_objectives)
            } else {
                item.node
            };
            if let Some((set_id, _)) = find_containing_set(
                &node.x,
                &node.f,
                &self.archive,
                self.config.explore.sigma_min,
            ) {
                self.hits += 1;
                match self.archive.insert_node(set_id, node) {
                    Ok(_) | Err(MoleError::OrderingViolation) => {}
                    Err(e) => return Err(e),
                }
                continue;
            }
            if self.archive.len() >= self.config.max_sets {
                self.stack.clear();
                return Ok(Flow::Stop(StopReason::MaxSets));
            }
            let explored = explore_efficient_set(
                &node.x,
                self.mop,
                &self.config.explore,
                &self.config.descent,
            )?;
            self.explore_calls += 1;
            let exhausted = explored.budget_exhausted();
            let set_id = self.archive.add_set(explored.set, item.origin);
            new_sets.push(set_id);
            if exhausted {
                return Ok(Flow::Stop(StopReason::BudgetExhausted));
            }
            let start = match item.origin {
                SetOrigin::StartPoint(s) | SetOrigin::Superposed { start: s, .. } => s,
            };
            for sp in explored.superposed {
                self.push(
                    sp,
                    SetOrigin::Superposed {
                        parent: set_id,
                        start,
                    },
                    true,
                );
            }
        }
        if self.archive.len() >= self.config.max_sets {
            return Ok(Flow::Stop(StopReason::MaxSets));
        }
        Ok(Flow::Continue)
    }

    fn refine(&mut self, reports: &mut Vec<PostProcessReport>) -> Result<bool> {
        let rep = post_process_hv(
            &mut self.archive,
            self.mop,
            &self.config.postprocess,
            &self.config.descent,
        )?;
        let exhausted = rep.budget_exhausted;
        reports.push(rep);
        Ok(exhausted)
    }
}

/// Runs the exploration loop until the starting points, the budget or the
/// set limit run out. Budget exhaustion is not an error: the report holds
/// everything found so far.
pub fn run_mole(
    mop: &mut Mop,
    source: &StartingPoints,
    config: &MoleConfig,
) -> Result<MoleRunReport> {
    config.validate()?;
    let starts = starting_points(source, mop, config.max_starting_points)?;
    let before = mop.evaluations();
    let mut runner = Runner {
        mop,
        config,
        archive: SetsArchive::new(),
        stack: Vec::new(),
        pushed: 0,
        trace: Vec::new(),
        explore_calls: 0,
        hits: 0,
    };
    let mut reports = Vec::new();
    let mut consumed = 0;
    let mut successful = 0;
    let mut stop = StopReason::StartsExhausted;

    for (i, p) in starts.iter().enumerate() {
        if let Some(b) = runner.mop.bounds() {
            if let Some(k) = (0..p.len()).find(|&k| !(b.lower()[k]..=b.upper()[k]).contains(&p[k]))
            {
                return Err(MoleError::OutOfBounds {
                    index: k,
                    value: p[k],
                    lower: b.lower()[k],
                    upper: b.upper()[k],
                });
            }
        }
        consumed += 1;
        let d = match multi_objective_descent(p, runner.mop, &config.descent, None) {
            Ok(d) => d,
            Err(MoleError::BudgetExhausted { .. }) => {
                stop = StopReason::BudgetExhausted;
                break;
            }
            Err(e) => return Err(e),
        };
        if d.budget_exhausted() {
            stop = StopReason::BudgetExhausted;
            break;
        }
        runner.push(
            SetNode::new(d.final_point, d.final_objectives),
            SetOrigin::StartPoint(i),
            false,
        );
        let mut new_sets = Vec::new();
        match runner.drain(&mut new_sets)? {
            Flow::Stop(reason) => {
                stop = reason;
                break;
            }
            Flow::Continue => {}
        }
        successful += 1;
        if !config.refine || successful < config.warmup_starts {
            continue;
        }
        let due = successful == config.warmup_starts
            || new_sets
                .iter()
                .any(|&id| runner.archive.contributes_to_front(id));
        if due && runner.refine(&mut reports)? {
            stop = StopReason::BudgetExhausted;
            break;
        }
    }

    if config.refine
        && stop != StopReason::BudgetExhausted
        && !runner.archive.is_empty()
        && runner.refine(&mut reports)?
    {
        stop = StopReason::BudgetExhausted;
    }

    Ok(MoleRunReport {
        evals_used: runner.mop.evaluations() - before,
        archive: runner.archive,
        starting_points_consumed: consumed,
        successful_starts: successful,
        explore_calls: runner.explore_calls,
        membership_hits: runner.hits,
        stack_trace: runner.trace,
        postprocess: reports,
        stop,
    })
}
