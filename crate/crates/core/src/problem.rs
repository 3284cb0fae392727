//! Bi-objective problems, dominance, budget accounting and the analytic test functions.

use std::fmt;
use std::ops::Index;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MoleError, Result};

pub type DecisionVector = Vec<f64>;

/// Finite-difference step for gradient estimation.
pub const FD_STEP: f64 = 1e-8;

/// Default sampling box half-width used when a problem has no natural bounds.
pub const DEFAULT_BOX: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(pub [f64; 2]);

impl ObjectiveVector {
    pub fn new(f1: f64, f2: f64) -> Self {
        Self([f1, f2])
    }

    pub fn f1(&self) -> f64 {
        self.0[0]
    }

    pub fn f2(&self) -> f64 {
        self.0[1]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Componentwise minimum.
    pub fn ideal(&self, other: &Self) -> Self {
        Self([self.0[0].min(other.0[0]), self.0[1].min(other.0[1])])
    }

    /// Componentwise maximum.
    pub fn nadir(&self, other: &Self) -> Self {
        Self([self.0[0].max(other.0[0]), self.0[1].max(other.0[1])])
    }

    /// Pareto dominance: no component worse, at least one better.
    pub fn dominates(&self, other: &Self) -> bool {
        dominates(self, other) == Dominance::Dominates
    }

    pub fn strictly_dominates(&self, other: &Self) -> bool {
        self.0[0] < other.0[0] && self.0[1] < other.0[1]
    }
}

impl Index<usize> for ObjectiveVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dominance {
    Dominates,
    DominatedBy,
    Incomparable,
    Equal,
}

pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Dominance {
    let a_le = a.0[0] <= b.0[0] && a.0[1] <= b.0[1];
    let b_le = b.0[0] <= a.0[0] && b.0[1] <= a.0[1];
    match (a_le, b_le) {
        (true, true) => Dominance::Equal,
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::DominatedBy,
        (false, false) => Dominance::Incomparable,
    }
}

/// Nondominated subset, sorted by increasing `f1`. Duplicates are collapsed.
pub fn nondominated(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut sorted: Vec<ObjectiveVector> = points.to_vec();
    sorted.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let mut front: Vec<ObjectiveVector> = Vec::new();
    for p in sorted {
        match front.last() {
            Some(last) if last.0[1] <= p.0[1] => {}
            _ => front.push(p),
        }
    }
    front
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(MoleError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(MoleError::InvalidConfig("empty bounds".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(MoleError::InvalidConfig(format!(
                    "invalid bound pair [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clamp(&self, x: &[f64]) -> DecisionVector {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }
}

/// Length of the decision-space diagonal, from the bounds or a fallback box.
pub fn diag(bounds: Option<&BoxBounds>, fallback: Option<&BoxBounds>) -> Result<f64> {
    bounds
        .or(fallback)
        .map(BoxBounds::diagonal)
        .ok_or(MoleError::MissingBounds)
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> [f64; 2] + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// A bi-objective problem together with its evaluation counter.
///
/// Each objective evaluation increments the counter by one. Gradients come
/// from the analytic callback when one is attached (free), otherwise from
/// central differences costing `2d` evaluations.
#[derive(Clone)]
pub struct Mop {
    name: String,
    dimension: usize,
    evaluator: Evaluator,
    gradients: Option<GradientFn>,
    use_analytic: bool,
    bounds: Option<BoxBounds>,
    budget: Option<u64>,
    counter: u64,
    log: Option<Vec<ObjectiveVector>>,
}

impl fmt::Debug for Mop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mop")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("analytic_gradients", &self.has_analytic_gradients())
            .field("bounds", &self.bounds)
            .field("budget", &self.budget)
            .field("counter", &self.counter)
            .finish()
    }
}

impl Mop {
    pub fn new<F>(name: impl Into<String>, dimension: usize, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dimension,
            evaluator: Arc::new(evaluator),
            gradients: None,
            use_analytic: true,
            bounds: None,
            budget: None,
            counter: 0,
            log: None,
        }
    }

    pub fn with_gradients<G>(mut self, gradients: G) -> Self
    where
        G: Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    {
        self.gradients = Some(Arc::new(gradients));
        self
    }

    pub fn with_bounds(mut self, bounds: BoxBounds) -> Result<Self> {
        if bounds.dimension() != self.dimension {
            return Err(MoleError::DimensionMismatch {
                expected: self.dimension,
                actual: bounds.dimension(),
            });
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Ignore attached analytic gradients and fall back to finite differences.
    pub fn finite_differences_only(mut self) -> Self {
        self.use_analytic = false;
        self
    }

    /// Multiplies each objective (and its gradient) by a positive factor.
    pub fn scaled(mut self, scale: [f64; 2]) -> Result<Self> {
        let [s1, s2] = scale;
        if !(s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite()) {
            return Err(MoleError::InvalidConfig(
                "objective scales must be positive".into(),
            ));
        }
        if scale == [1.0, 1.0] {
            return Ok(self);
        }
        let f = self.evaluator.clone();
        self.evaluator = Arc::new(move |x| {
            let [a, b] = f(x);
            [s1 * a, s2 * b]
        });
        if let Some(g) = self.gradients.take() {
            self.gradients = Some(Arc::new(move |x| {
                let (g1, g2) = g(x);
                (
                    g1.iter().map(|v| s1 * v).collect(),
                    g2.iter().map(|v| s2 * v).collect(),
                )
            }));
        }
        Ok(self)
    }

    /// Keep every evaluated objective vector, in order.
    pub fn record_evaluations(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> Option<&BoxBounds> {
        self.bounds.as_ref()
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn evaluations(&self) -> u64 {
        self.counter
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.counter))
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == Some(0)
    }

    pub fn evaluation_log(&self) -> Option<&[ObjectiveVector]> {
        self.log.as_deref()
    }

    pub fn has_analytic_gradients(&self) -> bool {
        self.use_analytic && self.gradients.is_some()
    }

    /// Diagonal of the bounds, or of the default `[-5, 5]^d` box.
    pub fn diag(&self) -> f64 {
        let fallback = BoxBounds::cube(self.dimension, -DEFAULT_BOX, DEFAULT_BOX).ok();
        diag(self.bounds.as_ref(), fallback.as_ref()).unwrap_or(1.0)
    }

    /// Projects onto the box, identity when unbounded.
    pub fn clamp(&self, x: &[f64]) -> DecisionVector {
        match &self.bounds {
            Some(b) => b.clamp(x),
            None => x.to_vec(),
        }
    }

    /// Objective values without touching the counter (for verification only).
    pub fn peek(&self, x: &[f64]) -> ObjectiveVector {
        ObjectiveVector((self.evaluator)(x))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(MoleError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        if let Some(b) = &self.bounds {
            for (i, v) in x.iter().enumerate() {
                let (l, u) = (b.lower[i], b.upper[i]);
                if !(l <= *v && *v <= u) {
                    return Err(MoleError::OutOfBounds {
                        index: i,
                        value: *v,
                        lower: l,
                        upper: u,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<ObjectiveVector> {
        if let Some(budget) = self.budget {
            if self.counter >= budget {
                return Err(MoleError::BudgetExhausted { budget });
            }
        }
        self.check_point(x)?;
        self.counter += 1;
        let f = ObjectiveVector((self.evaluator)(x));
        if !f.is_finite() {
            return Err(MoleError::NonFiniteObjective { point: x.to_vec() });
        }
        if let Some(log) = &mut self.log {
            log.push(f);
        }
        Ok(f)
    }

    /// Gradients of both objectives at `x`.
    pub fn gradients(&mut self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.use_analytic {
            if let Some(g) = &self.gradients {
                self.check_point(x)?;
                return Ok(g(x));
            }
        }
        self.finite_difference_gradients(x)
    }

    /// Central differences with step [`FD_STEP`]. Near a bound the stencil is
    /// shifted inward so both samples stay feasible.
    pub fn finite_difference_gradients(&mut self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(x)?;
        let d = self.dimension;
        let mut g1 = vec![0.0; d];
        let mut g2 = vec![0.0; d];
        let mut probe = x.to_vec();
        for i in 0..d {
            let mut center = x[i];
            if let Some(b) = &self.bounds {
                let lo = b.lower[i] + FD_STEP;
                let hi = b.upper[i] - FD_STEP;
                if lo <= hi {
                    center = center.clamp(lo, hi);
                }
            }
            let plus = center + FD_STEP;
            let minus = center - FD_STEP;
            probe[i] = plus;
            let fp = self.evaluate(&probe)?;
            probe[i] = minus;
            let fm = self.evaluate(&probe)?;
            probe[i] = x[i];
            let h = plus - minus;
            g1[i] = (fp.0[0] - fm.0[0]) / h;
            g2[i] = (fp.0[1] - fm.0[1]) / h;
        }
        Ok((g1, g2))
    }
}

/// The analytic test problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestProblem {
    BiSphere,
    Aspar,
    BiRosenbrock,
}

impl TestProblem {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bisphere" => Ok(Self::BiSphere),
            "aspar" => Ok(Self::Aspar),
            "birosenbrock" => Ok(Self::BiRosenbrock),
            _ => Err(MoleError::UnknownProblem(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BiSphere => "bisphere",
            Self::Aspar => "aspar",
            Self::BiRosenbrock => "birosenbrock",
        }
    }

    /// Plotting window that frames the interesting structure.
    pub fn plot_bounds(&self) -> BoxBounds {
        let (lo, hi) = match self {
            Self::BiSphere => ([-2.0, -2.0], [2.0, 2.0]),
            Self::Aspar => ([-2.0, -1.0], [2.0, 3.0]),
            Self::BiRosenbrock => ([-2.0, -1.0], [2.0, 4.0]),
        };
        BoxBounds::new(lo.to_vec(), hi.to_vec()).expect("static bounds")
    }
}

/// Parameters for [`make_test_problem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Decision-space dimension (Bi-Sphere only; the others are 2-D).
    pub dimension: usize,
    /// Bi-Sphere centers; `None` means `(-1, ..., -1)` and `(1, ..., 1)`.
    pub centers: Option<(Vec<f64>, Vec<f64>)>,
    /// Multiplicative objective scaling.
    pub scale: [f64; 2],
    /// Box bounds; `None` means `[-5, 5]^d`.
    pub bounds: Option<BoxBounds>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            dimension: 2,
            centers: None,
            scale: [1.0, 1.0],
            bounds: None,
        }
    }
}

pub fn make_test_problem(kind: TestProblem, params: &ProblemParams) -> Result<Mop> {
    let mop = match kind {
        TestProblem::BiSphere => bi_sphere(params)?,
        TestProblem::Aspar => {
            require_2d(params)?;
            Mop::new("aspar", 2, |x| {
                let (a, b) = (x[0], x[1]);
                [
                    a.powi(4) - 2.0 * a * a + 2.0 * b * b + 1.0,
                    (a + 0.5).powi(2) + (b - 2.0).powi(2),
                ]
            })
            .with_gradients(|x| {
                let (a, b) = (x[0], x[1]);
                (
                    vec![4.0 * a.powi(3) - 4.0 * a, 4.0 * b],
                    vec![2.0 * (a + 0.5), 2.0 * (b - 2.0)],
                )
            })
        }
        TestProblem::BiRosenbrock => {
            require_2d(params)?;
            Mop::new("birosenbrock", 2, |x| {
                let (a, b) = (x[0], x[1]);
                [
                    (1.0 - a).powi(2) + (b - a * a).powi(2),
                    (1.0 + a).powi(2) + (-(b - 3.0) - a * a).powi(2),
                ]
            })
            .with_gradients(|x| {
                let (a, b) = (x[0], x[1]);
                let r1 = b - a * a;
                let r2 = 3.0 - b - a * a;
                (
                    vec![-2.0 * (1.0 - a) - 4.0 * a * r1, 2.0 * r1],
                    vec![2.0 * (1.0 + a) - 4.0 * a * r2, -2.0 * r2],
                )
            })
        }
    };
    let d = mop.dimension();
    let bounds = match &params.bounds {
        Some(b) => b.clone(),
        None => BoxBounds::cube(d, -DEFAULT_BOX, DEFAULT_BOX)?,
    };
    mop.scaled(params.scale)?.with_bounds(bounds)
}

pub fn make_test_problem_by_name(name: &str, params: &ProblemParams) -> Result<Mop> {
    make_test_problem(TestProblem::from_name(name)?, params)
}

fn require_2d(params: &ProblemParams) -> Result<()> {
    if params.dimension != 2 {
        return Err(MoleError::DimensionMismatch {
            expected: 2,
            actual: params.dimension,
        });
    }
    Ok(())
}

fn bi_sphere(params: &ProblemParams) -> Result<Mop> {
    let d = params.dimension;
    if d == 0 {
        return Err(MoleError::InvalidConfig(
            "dimension must be positive".into(),
        ));
    }
    let (c1, c2) = params
        .centers
        .clone()
        .unwrap_or_else(|| (vec![-1.0; d], vec![1.0; d]));
    for c in [&c1, &c2] {
        if c.len() != d {
            return Err(MoleError::DimensionMismatch {
                expected: d,
                actual: c.len(),
            });
        }
    }
    let (e1, e2) = (c1.clone(), c2.clone());
    Ok(Mop::new("bisphere", d, move |x| {
        let d1: f64 = x.iter().zip(&c1).map(|(v, c)| (v - c) * (v - c)).sum();
        let d2: f64 = x.iter().zip(&c2).map(|(v, c)| (v - c) * (v - c)).sum();
        [d1, d2]
    })
    .with_gradients(move |x| {
        (
            x.iter().zip(&e1).map(|(v, c)| 2.0 * (v - c)).collect(),
            x.iter().zip(&e2).map(|(v, c)| 2.0 * (v - c)).collect(),
        )
    }))
}
