//! The `plot-data` command and a replay check for grid CSVs.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mole_core::landscape::{compute_landscape, GridSpec, DEFAULT_GRID_EPS};
use mole_core::output::write_grid;
use mole_core::{MogVariant, TestProblem};
use serde::Serialize;

use crate::run::build_problem;
use crate::{ensure_dir, write_file, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// geometric-mean normalized
    Gm,
    /// unit normalized
    N,
    /// convex hull
    Ch,
}

impl From<VariantArg> for MogVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Gm => MogVariant::GeometricMean,
            VariantArg::N => MogVariant::Normalized,
            VariantArg::Ch => MogVariant::ConvexHull,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub problem: String,
    pub dimension: usize,
    pub resolution: (usize, usize),
    pub variant: MogVariant,
    pub eps: f64,
    pub output: PathBuf,
}

impl PlotSpec {
    pub fn new(problem: &str, resolution: (usize, usize), output: PathBuf) -> Self {
        Self {
            problem: problem.to_string(),
            dimension: 2,
            resolution,
            variant: MogVariant::GeometricMean,
            eps: DEFAULT_GRID_EPS,
            output,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlotSummary {
    pub path: PathBuf,
    pub cells: usize,
    pub efficient_cells: usize,
    pub components: usize,
    pub cycle_cells: usize,
}

pub fn execute(spec: &PlotSpec) -> Result<PlotSummary, CliError> {
    let mut mop = build_problem(&spec.problem, spec.dimension)?;
    let kind = TestProblem::from_name(&spec.problem)?;
    let grid = GridSpec::new(kind.plot_bounds(), spec.resolution)?;
    let landscape = compute_landscape(&mut mop, &grid, spec.variant, spec.eps)?;
    ensure_dir(&spec.output)?;
    let path = spec.output.join(format!(
        "{}-grid-{}x{}.csv",
        mop.name(),
        spec.resolution.0,
        spec.resolution.1
    ));
    write_file(&path, |w| write_grid(w, &landscape))?;
    Ok(PlotSummary {
        path,
        cells: landscape.cells.len(),
        efficient_cells: landscape.efficient_cells().count(),
        components: landscape.efficient_components(),
        cycle_cells: landscape.cells.iter().filter(|c| c.cycle_artifact).count(),
    })
}

struct Row {
    ix: usize,
    iy: usize,
    x: [f64; 2],
    mog: [f64; 2],
    height: f64,
    le: bool,
}

/// Re-reads a grid CSV, re-derives every non-efficient cell's successor
/// from its MOG and checks `height = step + height(successor)`. Returns the
/// number of checked cells.
pub fn verify_grid_csv(path: &Path) -> Result<usize, CliError> {
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad field {i} in {rec:?}")))
        };
        rows.push(Row {
            ix: num(0)? as usize,
            iy: num(1)? as usize,
            x: [num(2)?, num(3)?],
            mog: [num(6)?, num(7)?],
            height: num(8)?,
            le: rec.get(9) == Some("y"),
        });
    }
    let nx = rows
        .iter()
        .map(|r| r.ix)
        .max()
        .ok_or_else(|| bad("empty grid".into()))?
        + 1;
    let ny = rows.iter().map(|r| r.iy).max().unwrap_or(0) + 1;
    if rows.len() != nx * ny || nx < 2 || ny < 2 {
        return Err(bad(format!(
            "{} rows do not form a {nx}x{ny} grid",
            rows.len()
        )));
    }
    let at = |ix: usize, iy: usize| &rows[iy * nx + ix];
    let hx = at(1, 0).x[0] - at(0, 0).x[0];
    let hy = at(0, 1).x[1] - at(0, 0).x[1];
    let mut checked = 0;
    for r in &rows {
        if r.le {
            if r.height != 0.0 {
                return Err(bad(format!(
                    "efficient cell ({}, {}) has height {}",
                    r.ix, r.iy, r.height
                )));
            }
            continue;
        }
        if r.height == 0.0 {
            // cycle artifact
            continue;
        }
        let down = [-r.mog[0], -r.mog[1]];
        let mut candidates = Vec::new();
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (jx, jy) = (r.ix as i64 + dx, r.iy as i64 + dy);
                if (dx, dy) == (0, 0) || jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                let v = [dx as f64 * hx, dy as f64 * hy];
                let len = v[0].hypot(v[1]);
                let cos = (down[0] * v[0] + down[1] * v[1]) / (down[0].hypot(down[1]) * len);
                candidates.push((cos, len, at(jx as usize, jy as usize).height));
            }
        }
        let best = candidates
            .iter()
            .map(|c| c.0)
            .fold(f64::NEG_INFINITY, f64::max);
        // near-ties in angle may go either way
        let ok = candidates
            .iter()
            .filter(|c| c.0 >= best - 1e-9)
            .any(|&(_, len, h)| (r.height - (len + h)).abs() <= 1e-9 * r.height.max(1.0));
        if !ok {
            return Err(bad(format!(
                "cell ({}, {}) breaks the height recurrence",
                r.ix, r.iy
            )));
        }
        checked += 1;
    }
    Ok(checked)
}
