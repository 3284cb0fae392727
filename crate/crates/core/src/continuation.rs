//! Predictor-corrector exploration of a single locally efficient set.
//!
//! Starting from a locally efficient point the set is traced towards the
//! optimum of each objective in turn. Predictions follow the negative
//! gradient of the traced objective for the first step (or after a failed
//! step at minimal size) and the secant through the two most recent set
//! points otherwise; the multi-objective descent acts as corrector. Step
//! sizes double on success and halve on failure. A corrected point that
//! dominates its predecessor, or that lands farther than `sigma_max` away
//! after a gradient prediction, marks the crossing into a superposed basin.

use serde::{Deserialize, Serialize};

use crate::archive::{EfficientSetModel, Insertion, SetNode};
use crate::descent::{descend_evaluated, DescentConfig, DescentTermination};
use crate::error::{MoleError, Result};
use crate::mog::DEGENERACY_TOL;
use crate::problem::Mop;
use crate::vecops::{angle_deg, axpy, distance, norm, scale, sub};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Maximum turn angle per step, degrees.
    pub phi_max: f64,
    pub lambda: f64,
    /// Hard cap on predictor-corrector iterations per direction.
    pub max_steps: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self::for_diag(200f64.sqrt())
    }
}

impl ExploreConfig {
    pub fn for_diag(diag: f64) -> Self {
        Self {
            sigma_min: 1e-4,
            sigma_max: diag / 100.0,
            phi_max: 45.0,
            lambda: 2.0,
            max_steps: 100_000,
        }
    }

    pub fn for_problem(mop: &Mop) -> Self {
        Self::for_diag(mop.diag())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite())
        {
            return Err(MoleError::InvalidConfig(
                "need 0 < sigma_min < sigma_max".into(),
            ));
        }
        if !(self.phi_max > 0.0 && self.phi_max < 180.0) {
            return Err(MoleError::InvalidConfig(
                "phi_max must lie in (0, 180)".into(),
            ));
        }
        if self.lambda.is_nan() || self.lambda <= 1.0 {
            return Err(MoleError::InvalidConfig(
                "explore lambda must exceed 1".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(MoleError::InvalidConfig(
                "max_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionTermination {
    SoOptimum,
    BasinCrossed,
    Stalled,
    BudgetExhausted,
}

/// One accepted predictor-corrector step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedStep {
    /// Traced objective, 0 or 1.
    pub objective: usize,
    pub sigma: f64,
    pub used_gradient: bool,
    /// Turn angle against the previous step, degrees (0 for the first step).
    pub angle: f64,
    pub node: SetNode,
    pub corrector: DescentTermination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreResult {
    pub set: EfficientSetModel,
    /// Locally efficient points in superposed basins.
    pub superposed: Vec<SetNode>,
    pub terminations: [DirectionTermination; 2],
    pub steps: Vec<AcceptedStep>,
    pub evals_used: u64,
}

impl ExploreResult {
    pub fn budget_exhausted(&self) -> bool {
        self.terminations
            .contains(&DirectionTermination::BudgetExhausted)
    }
}

/// Explores the set through `x_star`, evaluating it first.
pub fn explore_efficient_set(
    x_star: &[f64],
    mop: &mut Mop,
    config: &ExploreConfig,
    descent_config: &DescentConfig,
) -> Result<ExploreResult> {
    let before = mop.evaluations();
    let f = match mop.evaluate(x_star) {
        Ok(f) => f,
        Err(MoleError::BudgetExhausted { .. }) => {
            let node = SetNode::new(x_star.to_vec(), mop.peek(x_star));
            return Ok(ExploreResult {
                set: EfficientSetModel::new(0, node),
                superposed: Vec::new(),
                terminations: [DirectionTermination::BudgetExhausted; 2],
                steps: Vec::new(),
                evals_used: 0,
            });
        }
        Err(e) => return Err(e),
    };
    let mut result = explore_from_node(
        SetNode::new(x_star.to_vec(), f),
        mop,
        config,
        descent_config,
    )?;
    result.evals_used = mop.evaluations() - before;
    Ok(result)
}

struct Tracer<'a> {
    mop: &'a mut Mop,
    config: &'a ExploreConfig,
    descent: &'a DescentConfig,
    set: EfficientSetModel,
    superposed: Vec<SetNode>,
    steps: Vec<AcceptedStep>,
}

struct StepSize {
    sigma: f64,
    use_gradient: bool,
}

impl StepSize {
    fn reject(&mut self, c: &ExploreConfig) {
        if self.sigma <= c.sigma_min {
            self.use_gradient = true;
        }
        self.sigma = (self.sigma / c.lambda).max(c.sigma_min);
    }

    fn accept(&mut self, c: &ExploreConfig) {
        self.sigma = (self.sigma * c.lambda).min(c.sigma_max);
        self.use_gradient = false;
    }
}

/// As [`explore_efficient_set`] for an already evaluated point.
pub fn explore_from_node(
    start: SetNode,
    mop: &mut Mop,
    config: &ExploreConfig,
    descent_config: &DescentConfig,
) -> Result<ExploreResult> {
    let before = mop.evaluations();
    let mut tracer = Tracer {
        mop,
        config,
        descent: descent_config,
        set: EfficientSetModel::new(0, start.clone()),
        superposed: Vec::new(),
        steps: Vec::new(),
    };
    let mut terminations = [DirectionTermination::Stalled; 2];
    for (obj, term) in terminations.iter_mut().enumerate() {
        *term = match tracer.trace_direction(obj, &start) {
            Ok(t) => t,
            Err(MoleError::BudgetExhausted { .. }) => DirectionTermination::BudgetExhausted,
            Err(e) => return Err(e),
        };
        if *term == DirectionTermination::BudgetExhausted {
            terminations[1] = DirectionTermination::BudgetExhausted;
            break;
        }
    }
    Ok(ExploreResult {
        set: tracer.set,
        superposed: tracer.superposed,
        terminations,
        steps: tracer.steps,
        evals_used: tracer.mop.evaluations() - before,
    })
}

impl Tracer<'_> {
    fn trace_direction(&mut self, obj: usize, start: &SetNode) -> Result<DirectionTermination> {
        let c = self.config;
        let mut path: Vec<SetNode> = vec![start.clone()];
        let mut size = StepSize {
            sigma: c.sigma_min,
            use_gradient: false,
        };
        for _ in 0..c.max_steps {
            let prev = path[path.len() - 1].clone();
            let prev2 = (path.len() >= 2).then(|| path[path.len() - 2].clone());
            let gradient_mode = size.use_gradient || prev2.is_none();
            let at_min = size.sigma <= c.sigma_min;

            let direction = match &prev2 {
                Some(p2) if !gradient_mode => sub(&prev.x, &p2.x),
                _ => {
                    let (g1, g2) = self.mop.gradients(&prev.x)?;
                    scale(if obj == 0 { &g1 } else { &g2 }, -1.0)
                }
            };
            let dn = norm(&direction);
            if dn < DEGENERACY_TOL {
                if gradient_mode {
                    return Ok(DirectionTermination::SoOptimum);
                }
                size.reject(c);
                continue;
            }
            let p = self.mop.clamp(&axpy(&prev.x, size.sigma / dn, &direction));
            let improves = if p == prev.x {
                None
            } else {
                let fp = self.mop.evaluate(&p)?;
                (fp.0[obj] < prev.f.0[obj]).then_some(fp)
            };
            let Some(fp) = improves else {
                if at_min && gradient_mode {
                    return Ok(DirectionTermination::SoOptimum);
                }
                size.reject(c);
                continue;
            };

            // the corrector may only be cut short while a rejection is still possible
            let can_reject = !at_min || !gradient_mode;
            let escape = can_reject.then_some(size.sigma);
            let corrected = descend_evaluated(&p, fp, self.mop, self.descent, escape)?;
            if corrected.budget_exhausted() {
                return Ok(DirectionTermination::BudgetExhausted);
            }
            let mut p_star = SetNode::new(corrected.final_point, corrected.final_objectives);
            if corrected.termination == DescentTermination::EarlyEscape {
                if p_star.f.dominates(&prev.f) {
                    let rest =
                        descend_evaluated(&p_star.x, p_star.f, self.mop, self.descent, None)?;
                    if rest.budget_exhausted() {
                        return Ok(DirectionTermination::BudgetExhausted);
                    }
                    p_star = SetNode::new(rest.final_point, rest.final_objectives);
                    self.superposed.push(p_star);
                    return Ok(DirectionTermination::BasinCrossed);
                }
                size.reject(c);
                continue;
            }

            let angle = prev2.as_ref().map_or(0.0, |p2| {
                angle_deg(&sub(&prev.x, &p2.x), &sub(&p_star.x, &prev.x))
            });
            if (distance(&p, &p_star.x) > size.sigma || angle > c.phi_max) && can_reject {
                size.reject(c);
                continue;
            }
            if (distance(&prev.x, &p_star.x) > c.sigma_max && gradient_mode)
                || p_star.f.dominates(&prev.f)
            {
                self.superposed.push(p_star);
                return Ok(DirectionTermination::BasinCrossed);
            }
            match self.set.insert(p_star.clone()) {
                Ok(Insertion::Inserted(_)) => {}
                Ok(Insertion::Duplicate) | Err(MoleError::OrderingViolation) => {
                    return Ok(DirectionTermination::Stalled)
                }
                Err(e) => return Err(e),
            }
            self.steps.push(AcceptedStep {
                objective: obj,
                sigma: size.sigma,
                used_gradient: gradient_mode,
                angle,
                node: p_star.clone(),
                corrector: corrected.termination,
            });
            path.push(p_star);
            size.accept(c);
        }
        Ok(DirectionTermination::Stalled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::multi_objective_descent;
    use crate::problem::{make_test_problem, ProblemParams, TestProblem};
    use crate::vecops::segment_distance;

    fn problem(kind: TestProblem) -> Mop {
        make_test_problem(kind, &ProblemParams::default()).unwrap()
    }

    #[test]
    fn bi_sphere_segment_is_traced() {
        let mut mop = problem(TestProblem::BiSphere);
        let cfg = ExploreConfig::for_problem(&mop);
        let dcfg = DescentConfig::for_problem(&mop);
        let r = explore_efficient_set(&[0.0, 0.0], &mut mop, &cfg, &dcfg).unwrap();
        assert!(r.superposed.is_empty());
        assert_eq!(r.terminations, [DirectionTermination::SoOptimum; 2]);
        let (a, b) = ([-1.0, -1.0], [1.0, 1.0]);
        for n in r.set.nodes() {
            assert!(segment_distance(&n.x, &a, &b) < 1e-3);
        }
        assert!(distance(&r.set.first().x, &a) < 2.0 * cfg.sigma_max);
        assert!(distance(&r.set.last().x, &b) < 2.0 * cfg.sigma_max);
        assert!(r.set.is_ordered());
        for s in &r.steps {
            assert!(s.sigma >= cfg.sigma_min && s.sigma <= cfg.sigma_max);
            if !s.used_gradient {
                assert!(s.angle <= cfg.phi_max);
            }
        }
    }

    #[test]
    fn traced_objective_decreases_monotonically() {
        let mut mop = problem(TestProblem::BiRosenbrock);
        let cfg = ExploreConfig::for_problem(&mop);
        let dcfg = DescentConfig::for_problem(&mop);
        let start = multi_objective_descent(&[0.0, 2.0], &mut mop, &dcfg, None).unwrap();
        let r = explore_efficient_set(&start.final_point, &mut mop, &cfg, &dcfg).unwrap();
        for obj in 0..2 {
            let vals: Vec<f64> = r
                .steps
                .iter()
                .filter(|s| s.objective == obj)
                .map(|s| s.node.f.0[obj])
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }
        assert!(r.set.is_ordered());
    }

    #[test]
    fn point_shaped_set() {
        let mut mop = Mop::new("same", 2, |x| {
            let v = x[0] * x[0] + x[1] * x[1];
            [v, v]
        })
        .with_gradients(|x| (vec![2.0 * x[0], 2.0 * x[1]], vec![2.0 * x[0], 2.0 * x[1]]));
        let r = explore_efficient_set(
            &[0.0, 0.0],
            &mut mop,
            &ExploreConfig::default(),
            &DescentConfig::default(),
        )
        .unwrap();
        assert_eq!(r.set.len(), 1);
        assert!(r.superposed.is_empty());
        assert_eq!(r.terminations, [DirectionTermination::SoOptimum; 2]);
    }

    #[test]
    fn aspar_right_set_has_superposed_basin() {
        let mut mop = problem(TestProblem::Aspar);
        let cfg = ExploreConfig::for_problem(&mop);
        let dcfg = DescentConfig::for_problem(&mop);
        // (a^3 - a)(b - 2) = b(a + 0.5) on the right set
        let a: f64 = 0.8;
        let b = 2.0 * (a.powi(3) - a) / (a.powi(3) - 2.0 * a - 0.5);
        let start = multi_objective_descent(&[a, b], &mut mop, &dcfg, None).unwrap();
        assert!(
            start.final_point[0] > 0.0,
            "descent should stay on the right: {:?}",
            start.final_point
        );
        let r = explore_efficient_set(&start.final_point, &mut mop, &cfg, &dcfg).unwrap();
        assert!(!r.superposed.is_empty());
        let sup = &r.superposed[0];
        assert!(sup.f.dominates(&r.set.last().f));
        // the superposed basin drains into the left set
        let left = multi_objective_descent(&sup.x, &mut mop, &dcfg, None).unwrap();
        assert!(
            left.final_point[0] < 0.0,
            "left descent {:?}",
            left.final_point
        );
        let other = explore_efficient_set(&left.final_point, &mut mop, &cfg, &dcfg).unwrap();
        let dominated = r
            .set
            .nodes()
            .iter()
            .filter(|n| other.set.nodes().iter().any(|m| m.f.dominates(&n.f)))
            .count();
        assert!(dominated > 0);
    }

    #[test]
    fn budget_exhaustion_returns_partial_set() {
        let mut mop = problem(TestProblem::BiSphere)
            .finite_differences_only()
            .with_budget(200);
        let r = explore_efficient_set(
            &[0.0, 0.0],
            &mut mop,
            &ExploreConfig::default(),
            &DescentConfig::default(),
        )
        .unwrap();
        assert!(r.budget_exhausted());
        assert!(r.set.is_ordered());
        assert_eq!(mop.evaluations(), 200);
    }
}
