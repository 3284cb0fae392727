//! CSV exporters for traces, set models, archives, grids and benchmark data.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files.

use std::io::{self, Write};

use csv::Writer;

use crate::archive::SetsArchive;
use crate::bench::{TargetLadder, TrajectoryPoint};
use crate::descent::TraceStep;
use crate::landscape::Landscape;
use crate::mogsa::MogsaArchive;
use crate::postprocess::PostProcessReport;
use crate::vecops::distance;

fn yn(b: bool) -> String {
    if b { "y" } else { "n" }.to_string()
}

fn x_header(prefix: &[&str], d: usize, suffix: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|i| format!("x{i}")));
    h.extend(suffix.iter().map(|s| s.to_string()));
    h
}

fn row(fields: impl IntoIterator<Item = String>) -> Vec<String> {
    fields.into_iter().collect()
}

/// `t, x1..xd, f1, f2, alpha, mog_norm`
pub fn write_trace<W: Write>(w: W, d: usize, trace: &[TraceStep]) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record(x_header(&["t"], d, &["f1", "f2", "alpha", "mog_norm"]))?;
    for (t, s) in trace.iter().enumerate() {
        let mut r = vec![t.to_string()];
        r.extend(s.x.iter().map(f64::to_string));
        r.extend([s.f.f1(), s.f.f2(), s.step, s.mog_norm].map(|v| v.to_string()));
        out.write_record(r)?;
    }
    out.flush()
}

/// Same columns as [`write_trace`]; `alpha` is the distance moved since the
/// previous point and `mog_norm` is not recorded.
pub fn write_mogsa_archive<W: Write>(w: W, d: usize, archive: &MogsaArchive) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record(x_header(&["t"], d, &["f1", "f2", "alpha", "mog_norm"]))?;
    let mut prev: Option<&[f64]> = None;
    for (t, p) in archive.visited.iter().enumerate() {
        let step = prev.map_or(0.0, |q| distance(q, &p.x));
        let mut r = vec![t.to_string()];
        r.extend(p.x.iter().map(f64::to_string));
        r.extend([p.f.f1(), p.f.f2(), step, f64::NAN].map(|v| v.to_string()));
        out.write_record(r)?;
        prev = Some(&p.x);
    }
    out.flush()
}

/// `set_id, node_index, x1..xd, f1, f2`
pub fn write_sets<W: Write>(w: W, d: usize, archive: &SetsArchive) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record(x_header(&["set_id", "node_index"], d, &["f1", "f2"]))?;
    for set in archive.sets() {
        for (i, n) in set.nodes().iter().enumerate() {
            let mut r = vec![set.set_id.to_string(), i.to_string()];
            r.extend(n.x.iter().map(f64::to_string));
            r.extend([n.f.f1().to_string(), n.f.f2().to_string()]);
            out.write_record(r)?;
        }
    }
    out.flush()
}

/// One row per cell.
pub fn write_grid<W: Write>(w: W, landscape: &Landscape) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record([
        "ix",
        "iy",
        "x1",
        "x2",
        "f1",
        "f2",
        "mog_x",
        "mog_y",
        "height",
        "is_le",
        "dom_count",
        "log_dom",
    ])?;
    for c in &landscape.cells {
        out.write_record(row([
            c.ix.to_string(),
            c.iy.to_string(),
            c.x[0].to_string(),
            c.x[1].to_string(),
            c.f.f1().to_string(),
            c.f.f2().to_string(),
            c.mog[0].to_string(),
            c.mog[1].to_string(),
            c.height.to_string(),
            yn(c.is_locally_efficient),
            c.domination_count.to_string(),
            c.log_domination.to_string(),
        ]))?;
    }
    out.flush()
}

/// `pass, iteration, total_gap, max_hv, inserted, descent_skipped`
pub fn write_postprocess_log<W: Write>(w: W, passes: &[PostProcessReport]) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record([
        "pass",
        "iteration",
        "total_gap",
        "max_hv",
        "inserted",
        "descent_skipped",
    ])?;
    for (k, p) in passes.iter().enumerate() {
        for it in &p.iterations {
            out.write_record(row([
                k.to_string(),
                it.iteration.to_string(),
                it.total_gap.to_string(),
                it.max_hv.to_string(),
                yn(it.inserted),
                yn(it.descent_skipped),
            ]))?;
        }
    }
    out.flush()
}

/// `evals, quality`
pub fn write_trajectory<W: Write>(w: W, trajectory: &[TrajectoryPoint]) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record(["evals", "quality"])?;
    for p in trajectory {
        out.write_record([p.evals.to_string(), p.quality.to_string()])?;
    }
    out.flush()
}

/// `target, evals`; `evals` is empty for targets never reached.
pub fn write_targets<W: Write>(
    w: W,
    ladder: &TargetLadder,
    hits: &[Option<u64>],
) -> io::Result<()> {
    let mut out = Writer::from_writer(w);
    out.write_record(["target", "evals"])?;
    for (t, h) in ladder.offsets().iter().zip(hits) {
        out.write_record([t.to_string(), h.map(|e| e.to_string()).unwrap_or_default()])?;
    }
    out.flush()
}
