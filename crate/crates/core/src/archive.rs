//! Piecewise-linear models of locally efficient sets and the archive holding them.

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use crate::error::{MoleError, Result};
use crate::problem::{nondominated, DecisionVector, ObjectiveVector};
use crate::vecops::{angle_deg, distance, sub};

/// Decision vectors closer than this are considered the same node.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetNode {
    pub x: DecisionVector,
    pub f: ObjectiveVector,
}

impl SetNode {
    pub fn new(x: DecisionVector, f: ObjectiveVector) -> Self {
        Self { x, f }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    Inserted(usize),
    Duplicate,
}

/// Nodes of one set, strictly increasing in `f1` and strictly decreasing in `f2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficientSetModel {
    pub set_id: usize,
    nodes: Vec<SetNode>,
}

impl EfficientSetModel {
    pub fn new(set_id: usize, first: SetNode) -> Self {
        Self {
            set_id,
            nodes: vec![first],
        }
    }

    /// Builds a model from nodes that are already ordered.
    pub fn from_nodes(set_id: usize, nodes: Vec<SetNode>) -> Result<Self> {
        let model = Self { set_id, nodes };
        if model.nodes.is_empty() || !model.is_ordered() {
            return Err(MoleError::OrderingViolation);
        }
        Ok(model)
    }

    pub fn nodes(&self) -> &[SetNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> &SetNode {
        &self.nodes[0]
    }

    pub fn last(&self) -> &SetNode {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn is_ordered(&self) -> bool {
        self.nodes
            .windows(2)
            .all(|w| w[0].f.0[0] < w[1].f.0[0] && w[0].f.0[1] > w[1].f.0[1])
    }

    /// Index at which `f` belongs by `f1` ordering.
    pub fn position_for(&self, f: &ObjectiveVector) -> usize {
        self.nodes.partition_point(|n| n.f.0[0] < f.0[0])
    }

    /// Inserts keeping the ordering; duplicates are ignored.
    pub fn insert(&mut self, node: SetNode) -> Result<Insertion> {
        let pos = self.position_for(&node.f);
        let neighbors = pos.saturating_sub(1)..(pos + 1).min(self.nodes.len());
        if self.nodes[neighbors]
            .iter()
            .any(|n| distance(&n.x, &node.x) < DUPLICATE_TOL)
        {
            return Ok(Insertion::Duplicate);
        }
        if pos > 0 {
            let left = &self.nodes[pos - 1].f;
            if !(left.0[0] < node.f.0[0] && left.0[1] > node.f.0[1]) {
                return Err(MoleError::OrderingViolation);
            }
        }
        if pos < self.nodes.len() {
            let right = &self.nodes[pos].f;
            if !(node.f.0[0] < right.0[0] && node.f.0[1] > right.0[1]) {
                return Err(MoleError::OrderingViolation);
            }
        }
        self.nodes.insert(pos, node);
        Ok(Insertion::Inserted(pos))
    }

    /// Turn angle in degrees at node `i`; 0 at the endpoints.
    pub fn turn_angle(&self, i: usize) -> f64 {
        if i == 0 || i + 1 >= self.nodes.len() {
            return 0.0;
        }
        let a = sub(&self.nodes[i].x, &self.nodes[i - 1].x);
        let b = sub(&self.nodes[i + 1].x, &self.nodes[i].x);
        angle_deg(&a, &b)
    }

    pub fn objectives(&self) -> impl Iterator<Item = &ObjectiveVector> {
        self.nodes.iter().map(|n| &n.f)
    }
}

/// Where a set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetOrigin {
    /// Descended from the starting point with this index.
    StartPoint(usize),
    /// Reached as a superposed point while exploring the given set.
    Superposed { parent: usize, start: usize },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SetsArchive {
    sets: Vec<EfficientSetModel>,
    origins: Vec<SetOrigin>,
    next_set_id: usize,
    /// Nodes rejected for breaking a set's ordering.
    quarantine: Vec<(usize, SetNode)>,
    #[serde(skip)]
    front: OnceCell<Vec<ObjectiveVector>>,
}

impl SetsArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a set under a fresh id and returns that id.
    pub fn add_set(&mut self, mut set: EfficientSetModel, origin: SetOrigin) -> usize {
        let id = self.next_set_id;
        self.next_set_id += 1;
        set.set_id = id;
        self.sets.push(set);
        self.origins.push(origin);
        self.front = OnceCell::new();
        id
    }

    pub fn sets(&self) -> &[EfficientSetModel] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn origin(&self, set_id: usize) -> Option<SetOrigin> {
        self.index_of(set_id).map(|i| self.origins[i])
    }

    pub fn quarantine(&self) -> &[(usize, SetNode)] {
        &self.quarantine
    }

    fn index_of(&self, set_id: usize) -> Option<usize> {
        self.sets.iter().position(|s| s.set_id == set_id)
    }

    pub fn get(&self, set_id: usize) -> Option<&EfficientSetModel> {
        self.index_of(set_id).map(|i| &self.sets[i])
    }

    /// Replaces the nodes of a set wholesale (used by refinement).
    pub(crate) fn replace_nodes(&mut self, set_id: usize, nodes: Vec<SetNode>) {
        if let Some(i) = self.index_of(set_id) {
            self.sets[i].nodes = nodes;
            self.front = OnceCell::new();
        }
    }

    /// Inserts a node into a set. Nodes that would break the ordering are
    /// quarantined and reported as [`MoleError::OrderingViolation`].
    pub fn insert_node(&mut self, set_id: usize, node: SetNode) -> Result<Insertion> {
        let i = self
            .index_of(set_id)
            .ok_or_else(|| MoleError::InvalidConfig(format!("no set with id {set_id}")))?;
        match self.sets[i].insert(node.clone()) {
            Ok(ins) => {
                if matches!(ins, Insertion::Inserted(_)) {
                    self.front = OnceCell::new();
                }
                Ok(ins)
            }
            Err(e) => {
                log::warn!("set {set_id}: quarantined node {:?} ({e})", node.x);
                self.quarantine.push((set_id, node));
                Err(e)
            }
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.sets.iter().map(EfficientSetModel::len).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, &SetNode)> {
        self.sets
            .iter()
            .flat_map(|s| s.nodes.iter().map(move |n| (s.set_id, n)))
    }

    /// Nondominated objective vectors over all set nodes, sorted by `f1`.
    pub fn nondominated(&self) -> &[ObjectiveVector] {
        self.front.get_or_init(|| {
            let all: Vec<ObjectiveVector> = self.nodes().map(|(_, n)| n.f).collect();
            nondominated(&all)
        })
    }

    /// Whether any node of the set is part of the global nondominated front.
    pub fn contributes_to_front(&self, set_id: usize) -> bool {
        let front = self.nondominated();
        self.get(set_id).is_some_and(|s| {
            s.objectives().any(|f| {
                let i = front.partition_point(|p| p.0[0] < f.0[0]);
                front.get(i) == Some(f)
            })
        })
    }
}

/// Membership query: returns the first set (and the insertion index) that
/// holds consecutive nodes bracketing `x`.
///
/// A pair brackets `x` if `f` lies strictly inside the pair's ideal-nadir
/// box and `x` is no farther from either node than the nodes are from each
/// other. Independently, any node within `sigma_min` of `x` claims it, and
/// then the objective values are ignored.
pub fn find_containing_set(
    x: &[f64],
    f: &ObjectiveVector,
    archive: &SetsArchive,
    sigma_min: f64,
) -> Option<(usize, usize)> {
    for set in archive.sets() {
        let nodes = set.nodes();
        if nodes.iter().any(|n| distance(&n.x, x) <= sigma_min) {
            return Some((set.set_id, set.position_for(f)));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            let ideal = a.f.ideal(&b.f);
            let nadir = a.f.nadir(&b.f);
            let inside = (0..2).all(|k| ideal.0[k] < f.0[k] && f.0[k] < nadir.0[k]);
            if !inside {
                continue;
            }
            let span = distance(&a.x, &b.x);
            if distance(x, &a.x) <= span && distance(x, &b.x) <= span {
                return Some((set.set_id, i + 1));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(x: [f64; 2]) -> SetNode {
        // Bi-Sphere objectives with centers (-1,-1) and (1,1)
        let d1 = (x[0] + 1.0).powi(2) + (x[1] + 1.0).powi(2);
        let d2 = (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2);
        SetNode::new(x.to_vec(), ObjectiveVector::new(d1, d2))
    }

    fn segment_set() -> EfficientSetModel {
        EfficientSetModel::from_nodes(
            0,
            vec![node([-0.5, -0.5]), node([0.0, 0.0]), node([0.5, 0.5])],
        )
        .unwrap()
    }

    #[test]
    fn insert_between_neighbors() {
        let mut s = segment_set();
        assert_eq!(
            s.insert(node([0.25, 0.25])).unwrap(),
            Insertion::Inserted(2)
        );
        assert_eq!(s.len(), 4);
        assert!(s.is_ordered());
        assert_eq!(
            s.insert(node([-0.75, -0.75])).unwrap(),
            Insertion::Inserted(0)
        );
        assert!(s.is_ordered());
    }

    #[test]
    fn insert_duplicate_is_noop() {
        let mut s = segment_set();
        assert_eq!(s.insert(node([0.0, 0.0])).unwrap(), Insertion::Duplicate);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn insert_tied_f1_is_ordering_violation() {
        let mut s = segment_set();
        let mut bad = node([0.1, -0.1]);
        bad.f = ObjectiveVector::new(s.nodes()[1].f.f1(), 1.0);
        assert_eq!(s.insert(bad.clone()), Err(MoleError::OrderingViolation));

        let mut archive = SetsArchive::new();
        let id = archive.add_set(segment_set(), SetOrigin::StartPoint(0));
        assert_eq!(
            archive.insert_node(id, bad),
            Err(MoleError::OrderingViolation)
        );
        assert_eq!(archive.quarantine().len(), 1);
        assert_eq!(archive.get(id).unwrap().len(), 3);
    }

    #[test]
    fn membership_queries() {
        let mut archive = SetsArchive::new();
        let set =
            EfficientSetModel::from_nodes(0, vec![node([0.0, 0.0]), node([1.0, 1.0])]).unwrap();
        let id = archive.add_set(set, SetOrigin::StartPoint(0));

        let existing = node([0.0, 0.0]);
        assert!(find_containing_set(&existing.x, &existing.f, &archive, 1e-4).is_some());

        let mid = node([0.5, 0.5]);
        assert_eq!(
            find_containing_set(&mid.x, &mid.f, &archive, 1e-4),
            Some((id, 1))
        );

        let span = 2f64.sqrt();
        let far = node([0.5 + 10.0 * span, 0.5 - 10.0 * span]);
        assert_eq!(find_containing_set(&far.x, &far.f, &archive, 1e-4), None);

        // near in decision space but outside the objective box
        let off = SetNode::new(vec![0.5, 0.5], ObjectiveVector::new(100.0, 100.0));
        assert_eq!(find_containing_set(&off.x, &off.f, &archive, 1e-4), None);
    }

    #[test]
    fn turn_angles() {
        let s = EfficientSetModel::from_nodes(
            0,
            vec![
                SetNode::new(vec![0.0, 0.0], ObjectiveVector::new(0.0, 3.0)),
                SetNode::new(vec![1.0, 0.0], ObjectiveVector::new(1.0, 2.0)),
                SetNode::new(vec![1.0, 1.0], ObjectiveVector::new(2.0, 1.0)),
            ],
        )
        .unwrap();
        assert_eq!(s.turn_angle(0), 0.0);
        assert!((s.turn_angle(1) - 90.0).abs() < 1e-12);
        assert_eq!(s.turn_angle(2), 0.0);
    }

    #[test]
    fn front_cache_invalidates() {
        let mut archive = SetsArchive::new();
        let id = archive.add_set(segment_set(), SetOrigin::StartPoint(0));
        assert_eq!(archive.nondominated().len(), 3);
        archive.insert_node(id, node([0.25, 0.25])).unwrap();
        assert_eq!(archive.nondominated().len(), 4);
        assert!(archive.contributes_to_front(id));

        let dominated = EfficientSetModel::new(0, node([3.0, 3.0]));
        let id2 = archive.add_set(
            dominated,
            SetOrigin::Superposed {
                parent: id,
                start: 0,
            },
        );
        assert_eq!(id2, 1);
        assert!(!archive.contributes_to_front(id2));
    }
}
