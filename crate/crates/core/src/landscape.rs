//! Gradient-field heatmap data for bi-objective problems in two variables.
//!
//! Every cell of a regular grid gets its multi-objective gradient. A descent
//! is simulated on the grid by stepping to the neighbour whose direction is
//! closest in angle to the negative gradient; the summed step lengths until
//! a locally efficient cell is reached form the cell's height. Locally
//! efficient cells are coloured by how many other such cells dominate them.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{MoleError, Result};
use crate::mog::MogVariant;
use crate::problem::{BoxBounds, Mop, ObjectiveVector};
use crate::vecops::{angle_deg, dot};

/// Default threshold on the gradient norm below which a cell is efficient.
pub const DEFAULT_GRID_EPS: f64 = 1e-4;

const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bounds: BoxBounds,
    pub resolution: (usize, usize),
}

impl GridSpec {
    pub fn new(bounds: BoxBounds, resolution: (usize, usize)) -> Result<Self> {
        if bounds.dimension() != 2 {
            return Err(MoleError::DimensionMismatch {
                expected: 2,
                actual: bounds.dimension(),
            });
        }
        if resolution.0 < 2 || resolution.1 < 2 {
            return Err(MoleError::InvalidConfig(
                "grid needs at least 2 cells per axis".into(),
            ));
        }
        Ok(Self { bounds, resolution })
    }

    pub fn spacing(&self) -> (f64, f64) {
        let (lo, hi) = (self.bounds.lower(), self.bounds.upper());
        (
            (hi[0] - lo[0]) / self.resolution.0 as f64,
            (hi[1] - lo[1]) / self.resolution.1 as f64,
        )
    }

    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        let (hx, hy) = self.spacing();
        let lo = self.bounds.lower();
        [
            lo[0] + (ix as f64 + 0.5) * hx,
            lo[1] + (iy as f64 + 0.5) * hy,
        ]
    }

    pub fn len(&self) -> usize {
        self.resolution.0 * self.resolution.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.resolution.0 + ix
    }

    fn neighbor(&self, cell: usize, (dx, dy): (isize, isize)) -> Option<usize> {
        let (ix, iy) = (
            (cell % self.resolution.0) as isize + dx,
            (cell / self.resolution.0) as isize + dy,
        );
        let inside = ix >= 0
            && iy >= 0
            && (ix as usize) < self.resolution.0
            && (iy as usize) < self.resolution.1;
        inside.then(|| self.index(ix as usize, iy as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCellRecord {
    pub ix: usize,
    pub iy: usize,
    pub x: [f64; 2],
    pub f: ObjectiveVector,
    pub mog: [f64; 2],
    /// Summed decision-space step lengths down to an efficient cell.
    pub height: f64,
    pub is_locally_efficient: bool,
    /// Index of the neighbour the simulated descent moves to.
    pub successor: Option<usize>,
    /// Part of a descent cycle that never reached an efficient cell.
    pub cycle_artifact: bool,
    /// Only meaningful for efficient cells.
    pub domination_count: usize,
    pub log_domination: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub grid: GridSpec,
    pub cells: Vec<GridCellRecord>,
    /// Number of times a height was finalized; equals the cell count.
    pub resolved: usize,
}

impl Landscape {
    pub fn cell(&self, ix: usize, iy: usize) -> &GridCellRecord {
        &self.cells[self.grid.index(ix, iy)]
    }

    pub fn efficient_cells(&self) -> impl Iterator<Item = &GridCellRecord> {
        self.cells.iter().filter(|c| c.is_locally_efficient)
    }

    /// Connected groups of efficient cells under 8-neighbourhood.
    pub fn efficient_components(&self) -> usize {
        let mut seen = vec![false; self.cells.len()];
        let mut components = 0;
        for start in 0..self.cells.len() {
            if seen[start] || !self.cells[start].is_locally_efficient {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for d in NEIGHBORS {
                    if let Some(n) = self.grid.neighbor(c, d) {
                        if !seen[n] && self.cells[n].is_locally_efficient {
                            seen[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        components
    }

    /// Cells that break `height = step + height(successor)`; efficient cells
    /// must have height 0.
    pub fn height_violations(&self) -> Vec<usize> {
        let (hx, hy) = self.grid.spacing();
        (0..self.cells.len())
            .filter(|&i| {
                let c = &self.cells[i];
                if c.is_locally_efficient || c.cycle_artifact {
                    return c.height != 0.0;
                }
                match c.successor {
                    Some(s) => {
                        let n = &self.cells[s];
                        let step = (((n.ix as f64 - c.ix as f64) * hx).powi(2)
                            + ((n.iy as f64 - c.iy as f64) * hy).powi(2))
                        .sqrt();
                        c.height != step + n.height
                    }
                    None => true,
                }
            })
            .collect()
    }
}

/// Evaluates the grid and simulates the cell descent.
pub fn compute_landscape(
    mop: &mut Mop,
    grid: &GridSpec,
    variant: MogVariant,
    eps: f64,
) -> Result<Landscape> {
    if mop.dimension() != 2 {
        return Err(MoleError::DimensionMismatch {
            expected: 2,
            actual: mop.dimension(),
        });
    }
    let (hx, hy) = grid.spacing();
    let mut cells = Vec::with_capacity(grid.len());
    for iy in 0..grid.resolution.1 {
        for ix in 0..grid.resolution.0 {
            let x = grid.center(ix, iy);
            let f = mop.evaluate(&x)?;
            let (g1, g2) = mop.gradients(&x)?;
            let m = variant.compute(&g1, &g2);
            cells.push(GridCellRecord {
                ix,
                iy,
                x,
                f,
                mog: [m.direction[0], m.direction[1]],
                height: 0.0,
                is_locally_efficient: false,
                successor: None,
                cycle_artifact: false,
                domination_count: 0,
                log_domination: 0.0,
            });
        }
    }

    for (i, cell) in cells.iter_mut().enumerate() {
        let m = cell.mog;
        if m[0].hypot(m[1]) < eps {
            cell.is_locally_efficient = true;
            continue;
        }
        let down = [-m[0], -m[1]];
        let succ = NEIGHBORS
            .iter()
            .filter_map(|&d| {
                grid.neighbor(i, d)
                    .map(|n| (n, angle_deg(&down, &[d.0 as f64 * hx, d.1 as f64 * hy])))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(n, _)| n);
        cell.successor = succ;
    }
    // the gradient turns back across the step: a set lies in between
    let mut flips = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        if let Some(s) = c.successor {
            // a vanished gradient has no usable direction
            if cells[s].successor.is_some() && dot(&c.mog, &cells[s].mog) < 0.0 {
                flips.push((i, s));
            }
        }
    }
    for (i, s) in flips {
        cells[i].is_locally_efficient = true;
        cells[s].is_locally_efficient = true;
    }

    let resolved = resolve_heights(&mut cells, hx, hy);
    let le: Vec<usize> = (0..cells.len())
        .filter(|&i| cells[i].is_locally_efficient)
        .collect();
    let objectives: Vec<ObjectiveVector> = le.iter().map(|&i| cells[i].f).collect();
    for (k, count) in domination_counts(&objectives).into_iter().enumerate() {
        let c = &mut cells[le[k]];
        c.domination_count = count;
        c.log_domination = (count as f64).ln_1p();
    }
    Ok(Landscape {
        grid: grid.clone(),
        cells,
        resolved,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Open,
    OnPath,
    Done,
}

fn resolve_heights(cells: &mut [GridCellRecord], hx: f64, hy: f64) -> usize {
    let mut mark = vec![Mark::Open; cells.len()];
    let mut resolved = 0;
    let step = |a: &GridCellRecord, b: &GridCellRecord| {
        (((b.ix as f64 - a.ix as f64) * hx).powi(2) + ((b.iy as f64 - a.iy as f64) * hy).powi(2))
            .sqrt()
    };
    for start in 0..cells.len() {
        let mut path: Vec<usize> = Vec::new();
        let mut c = start;
        // walk until a resolved cell, an efficient cell or a cycle
        loop {
            match mark[c] {
                Mark::Done => break,
                Mark::OnPath => {
                    let from = path
                        .iter()
                        .position(|&p| p == c)
                        .expect("cell on current path");
                    for &p in &path[from..] {
                        cells[p].cycle_artifact = true;
                        cells[p].height = 0.0;
                        mark[p] = Mark::Done;
                        resolved += 1;
                    }
                    path.truncate(from);
                    break;
                }
                Mark::Open => {
                    if cells[c].is_locally_efficient || cells[c].successor.is_none() {
                        cells[c].height = 0.0;
                        mark[c] = Mark::Done;
                        resolved += 1;
                        break;
                    }
                    mark[c] = Mark::OnPath;
                    path.push(c);
                    c = cells[c]
                        .successor
                        .expect("non-terminal cell has a successor");
                }
            }
        }
        for &p in path.iter().rev() {
            let s = cells[p].successor.expect("path cell has a successor");
            cells[p].height = step(&cells[p], &cells[s]) + cells[s].height;
            mark[p] = Mark::Done;
            resolved += 1;
        }
    }
    resolved
}

/// For each vector, how many of the others dominate it.
pub fn domination_counts(points: &[ObjectiveVector]) -> Vec<usize> {
    points
        .iter()
        .map(|p| points.iter().filter(|q| q.dominates(p)).count())
        .collect()
}
