//! Nonmonotone multi-objective descent with Barzilai-Borwein step sizes.
//!
//! The search direction is the negative geometric-mean MOG. A doubling line
//! search first finds a dominating point; afterwards BB steps are taken and
//! safeguarded by a per-objective Armijo test against the maximum of the last
//! `history` objective values.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{MoleError, Result};
use crate::mog::mog_geometric_mean;
use crate::problem::{DecisionVector, Mop, ObjectiveVector};
use crate::vecops::{axpy, distance, dot, norm, sub};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    /// Minimum MOG length; shorter counts as critical.
    pub crit_gamma: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub lambda: f64,
    pub beta: f64,
    pub history: usize,
    pub max_iter: usize,
    /// Keep every accepted iterate in [`DescentResult::trace`].
    pub record_trace: bool,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self::for_diag(200f64.sqrt())
    }
}

impl DescentConfig {
    /// Defaults with `alpha_max = diag / 100`.
    pub fn for_diag(diag: f64) -> Self {
        Self {
            crit_gamma: 1e-6,
            alpha_min: 1e-6,
            alpha_max: diag / 100.0,
            lambda: 2.0,
            beta: 1e-4,
            history: 100,
            max_iter: 1000,
            record_trace: false,
        }
    }

    pub fn for_problem(mop: &Mop) -> Self {
        Self::for_diag(mop.diag())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.crit_gamma, self.alpha_min, self.alpha_max, self.beta];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(MoleError::InvalidConfig(
                "descent parameters must be positive".into(),
            ));
        }
        if self.alpha_min >= self.alpha_max {
            return Err(MoleError::InvalidConfig(
                "alpha_min must be below alpha_max".into(),
            ));
        }
        if self.lambda.is_nan() || self.lambda <= 1.0 {
            return Err(MoleError::InvalidConfig(
                "descent lambda must exceed 1".into(),
            ));
        }
        if self.beta.is_nan() || self.beta >= 1.0 {
            return Err(MoleError::InvalidConfig("beta must lie in (0, 1)".into()));
        }
        if self.history == 0 || self.max_iter == 0 {
            return Err(MoleError::InvalidConfig(
                "history and max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescentTermination {
    CriticalPoint,
    MinStepNoImprovement,
    MaxIter,
    BudgetExhausted,
    EarlyEscape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescentPhase {
    Start,
    LineSearch,
    Bb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub phase: DescentPhase,
    pub x: DecisionVector,
    pub f: ObjectiveVector,
    /// Absolute step length that produced this iterate (0 for the start).
    pub step: f64,
    /// `‖∇F_GM‖` at this iterate; NaN if never computed.
    pub mog_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub final_point: DecisionVector,
    pub final_objectives: ObjectiveVector,
    pub termination: DescentTermination,
    pub trace: Vec<TraceStep>,
    pub evals_used: u64,
    pub iterations: usize,
}

impl DescentResult {
    pub fn budget_exhausted(&self) -> bool {
        self.termination == DescentTermination::BudgetExhausted
    }
}

struct Run<'a> {
    mop: &'a mut Mop,
    config: &'a DescentConfig,
    start: DecisionVector,
    escape_radius: Option<f64>,
    trace: Vec<TraceStep>,
    iterations: usize,
    // incumbent, returned as-is when the budget runs out
    x: DecisionVector,
    f: ObjectiveVector,
}

impl Run<'_> {
    fn record(&mut self, phase: DescentPhase, step: f64) {
        if self.config.record_trace {
            self.trace.push(TraceStep {
                phase,
                x: self.x.clone(),
                f: self.f,
                step,
                mog_norm: f64::NAN,
            });
        }
    }

    fn record_mog(&mut self, n: f64) {
        if let Some(last) = self.trace.last_mut() {
            last.mog_norm = n;
        }
    }

    fn escaped(&self) -> bool {
        self.escape_radius
            .is_some_and(|r| distance(&self.x, &self.start) > r)
    }

    /// `∇F_GM` at the incumbent and the slopes `∇F_GMᵀ∇fᵢ`.
    fn gm(&mut self) -> Result<(Vec<f64>, [f64; 2])> {
        let (g1, g2) = self.mop.gradients(&self.x)?;
        let mog = mog_geometric_mean(&g1, &g2);
        self.record_mog(mog.norm());
        let slopes = [dot(&mog.direction, &g1), dot(&mog.direction, &g2)];
        Ok((mog.direction, slopes))
    }
}

/// Descends from `x` to a locally efficient point.
///
/// With `escape_radius` set, the search stops with
/// [`DescentTermination::EarlyEscape`] as soon as an accepted iterate is
/// farther than that from `x`. Running out of budget is not an error: the
/// best point so far is returned with [`DescentTermination::BudgetExhausted`].
pub fn multi_objective_descent(
    x: &[f64],
    mop: &mut Mop,
    config: &DescentConfig,
    escape_radius: Option<f64>,
) -> Result<DescentResult> {
    let before = mop.evaluations();
    let f = match mop.evaluate(x) {
        Ok(f) => f,
        Err(MoleError::BudgetExhausted { .. }) => {
            return Ok(DescentResult {
                final_point: x.to_vec(),
                final_objectives: mop.peek(x),
                termination: DescentTermination::BudgetExhausted,
                trace: Vec::new(),
                evals_used: 0,
                iterations: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let mut result = descend_evaluated(x, f, mop, config, escape_radius)?;
    result.evals_used = mop.evaluations() - before;
    Ok(result)
}

/// As [`multi_objective_descent`] for a start point whose objectives are known.
pub fn descend_evaluated(
    x: &[f64],
    fx: ObjectiveVector,
    mop: &mut Mop,
    config: &DescentConfig,
    escape_radius: Option<f64>,
) -> Result<DescentResult> {
    let before = mop.evaluations();
    let mut run = Run {
        mop,
        config,
        start: x.to_vec(),
        escape_radius,
        trace: Vec::new(),
        iterations: 0,
        x: x.to_vec(),
        f: fx,
    };
    run.record(DescentPhase::Start, 0.0);
    let termination = match descend(&mut run) {
        Ok(t) => t,
        Err(MoleError::BudgetExhausted { .. }) => DescentTermination::BudgetExhausted,
        Err(e) => return Err(e),
    };
    Ok(DescentResult {
        final_point: run.x,
        final_objectives: run.f,
        termination,
        trace: run.trace,
        evals_used: run.mop.evaluations() - before,
        iterations: run.iterations,
    })
}

fn descend(run: &mut Run<'_>) -> Result<DescentTermination> {
    let cfg = run.config;
    let x0 = run.x.clone();
    let f0 = run.f;
    let (mog0, _) = run.gm()?;
    let n0 = norm(&mog0);
    if n0 < cfg.crit_gamma {
        return Ok(DescentTermination::CriticalPoint);
    }

    // doubling line search from x0 along -mog0
    let mut step = cfg.alpha_min;
    let mut exit_step = 0.0;
    while step <= cfg.alpha_max {
        let cand = run.mop.clamp(&axpy(&x0, -step / n0, &mog0));
        if cand == run.x {
            break;
        }
        let fc = run.mop.evaluate(&cand)?;
        if !fc.dominates(&run.f) {
            break;
        }
        run.x = cand;
        run.f = fc;
        exit_step = step;
        step *= cfg.lambda;
    }
    if run.x == x0 {
        return Ok(DescentTermination::MinStepNoImprovement);
    }
    run.record(DescentPhase::LineSearch, exit_step);
    if run.escaped() {
        return Ok(DescentTermination::EarlyEscape);
    }

    let mut history: VecDeque<ObjectiveVector> = VecDeque::with_capacity(cfg.history);
    history.push_back(f0);
    if history.len() == cfg.history {
        history.pop_front();
    }
    history.push_back(run.f);

    let mut prev_x = x0;
    let mut prev_mog = mog0;
    let mut last_step = exit_step;
    let (mut mog, mut slopes) = run.gm()?;

    for _ in 0..cfg.max_iter {
        let n = norm(&mog);
        if n < cfg.crit_gamma {
            return Ok(DescentTermination::CriticalPoint);
        }
        let mut reference = [f64::NEG_INFINITY; 2];
        for h in &history {
            reference[0] = reference[0].max(h.0[0]);
            reference[1] = reference[1].max(h.0[1]);
        }

        let s = sub(&run.x, &prev_x);
        let y = sub(&mog, &prev_mog);
        let sty = dot(&s, &y);
        let ny = norm(&y);
        let lo = cfg.alpha_min / n;
        let hi = cfg.alpha_max / n;
        let mut alpha = if sty > 0.0 && ny > 0.0 {
            (dot(&s, &s) / sty).max(norm(&s) / ny)
        } else {
            last_step / n
        };
        alpha = alpha.clamp(lo, hi);

        let accepted = loop {
            let at_min = alpha <= lo;
            let cand = run.mop.clamp(&axpy(&run.x, -alpha, &mog));
            if cand == run.x {
                break None;
            }
            let fc = run.mop.evaluate(&cand)?;
            let armijo = (0..2).all(|i| fc.0[i] < reference[i] - cfg.beta * alpha * slopes[i]);
            if at_min {
                if armijo && fc.dominates(&run.f) {
                    break Some((cand, fc));
                }
                break None;
            }
            if armijo {
                break Some((cand, fc));
            }
            alpha = (alpha / cfg.lambda).max(lo);
        };
        let Some((cand, fc)) = accepted else {
            return Ok(DescentTermination::MinStepNoImprovement);
        };

        prev_x = std::mem::replace(&mut run.x, cand);
        run.f = fc;
        run.iterations += 1;
        last_step = alpha * n;
        if history.len() == cfg.history {
            history.pop_front();
        }
        history.push_back(fc);
        run.record(DescentPhase::Bb, last_step);
        if run.escaped() {
            return Ok(DescentTermination::EarlyEscape);
        }
        let (next, next_slopes) = run.gm()?;
        prev_mog = std::mem::replace(&mut mog, next);
        slopes = next_slopes;
    }
    if norm(&mog) < cfg.crit_gamma {
        Ok(DescentTermination::CriticalPoint)
    } else {
        Ok(DescentTermination::MaxIter)
    }
}
