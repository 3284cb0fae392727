//! The `bench` command: suite runs, target first hits and ECDF tables.
//!
//! Runs execute in parallel and are merged back in suite order. Rows whose
//! reference is `self` are grouped by problem and dimension: the group shares
//! one normalization (ideal and nadir of the union of the group's
//! nondominated points) and its reference is the best final quality in the
//! group.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use csv::Writer;
use mole_core::bench::{
    final_quality, first_hits, quality_trajectory, Normalization, TargetLadder, TrajectoryPoint,
};
use mole_core::mogsa::MogsaConfig;
use mole_core::problem::nondominated;
use mole_core::{run_mole, MoleConfig, ObjectiveVector, StartingPoints};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_overrides, AlgoConfig};
use crate::run::build_problem;
use crate::{ensure_dir, write_file, write_json, CliError};

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub suite: PathBuf,
    pub repetitions: usize,
    /// `None` uses every core.
    pub jobs: Option<usize>,
    /// `None` means `10^5 * d` per run.
    pub budget: Option<u64>,
    pub overrides: Vec<(String, String)>,
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Reference {
    Value(f64),
    SelfRef,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub problem: String,
    pub dimension: usize,
    pub seed: u64,
    pub reference: Reference,
}

/// Reads a suite CSV with columns `problem, dimension, seed, reference_hv`.
pub fn read_suite(path: &Path) -> Result<Vec<SuiteEntry>, CliError> {
    let bad = |m: String| CliError::Usage(format!("suite {}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (cp, cd, cs, cr) = (
        col("problem")?,
        col("dimension")?,
        col("seed")?,
        col("reference_hv")?,
    );
    let mut entries = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let line = n + 2;
        let reference = match field(cr) {
            "self" => Reference::SelfRef,
            v => Reference::Value(v.parse().map_err(|_| {
                bad(format!(
                    "line {line}: reference_hv must be a number or 'self'"
                ))
            })?),
        };
        entries.push(SuiteEntry {
            problem: field(cp).to_string(),
            dimension: field(cd)
                .parse()
                .map_err(|_| bad(format!("line {line}: bad dimension '{}'", field(cd))))?,
            seed: field(cs)
                .parse()
                .map_err(|_| bad(format!("line {line}: bad seed '{}'", field(cs))))?,
            reference,
        });
    }
    if entries.is_empty() {
        return Err(bad("no runs listed".into()));
    }
    Ok(entries)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRow {
    pub problem: String,
    pub dimension: usize,
    pub seed: u64,
    pub repetition: usize,
    pub budget: u64,
    pub evals_used: u64,
    pub sets: usize,
    pub reference_hv: Option<f64>,
    pub final_quality: Option<f64>,
    pub targets_hit: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub hits: Vec<Option<u64>>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchOutcome {
    pub targets: Vec<f64>,
    pub runs: Vec<RunRow>,
}

impl BenchOutcome {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }
}

struct Finished {
    evals_used: u64,
    sets: usize,
    log: Vec<ObjectiveVector>,
}

fn run_one(
    entry: &SuiteEntry,
    seed: u64,
    budget: u64,
    overrides: &[(String, String)],
) -> Result<Finished, CliError> {
    let mut mop = build_problem(&entry.problem, entry.dimension)?
        .with_budget(budget)
        .record_evaluations();
    let config = apply_overrides(&AlgoConfig::for_problem(&mop), overrides)?;
    let source = StartingPoints::UniformRandom {
        seed,
        count: config.mole.max_starting_points,
    };
    let report = run_mole(&mut mop, &source, &config.mole)?;
    Ok(Finished {
        evals_used: mop.evaluations(),
        sets: report.archive.len(),
        log: mop.evaluation_log().unwrap_or(&[]).to_vec(),
    })
}

pub fn execute(spec: &BenchSpec) -> Result<BenchOutcome, CliError> {
    let entries = read_suite(&spec.suite)?;
    if spec.repetitions == 0 {
        return Err(CliError::Usage("repetitions must be positive".into()));
    }
    if spec.budget == Some(0) {
        return Err(CliError::Usage("budget must be positive".into()));
    }
    // reject bad keys before spending any evaluations
    let probe = AlgoConfig {
        mole: MoleConfig::default(),
        mogsa: MogsaConfig::default(),
    };
    apply_overrides(&probe, &spec.overrides)?;

    let tasks: Vec<(usize, usize)> = (0..entries.len())
        .flat_map(|i| (0..spec.repetitions).map(move |r| (i, r)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(i, r)| {
                let e = &entries[i];
                let seed = e.seed.wrapping_add(r as u64);
                let budget = spec.budget.unwrap_or(100_000 * e.dimension as u64);
                (seed, budget, run_one(e, seed, budget, &spec.overrides))
            })
            .collect::<Vec<_>>()
    };
    let results = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?
            .install(work),
        None => work(),
    };

    // shared normalization and reference per self-referenced group
    let group_key = |e: &SuiteEntry| {
        (
            e.problem.to_ascii_lowercase().replace(['-', '_'], ""),
            e.dimension,
        )
    };
    let mut union: BTreeMap<(String, usize), Vec<ObjectiveVector>> = BTreeMap::new();
    for (k, &(i, _)) in tasks.iter().enumerate() {
        if let (Reference::SelfRef, Ok(f)) = (entries[i].reference, &results[k].2) {
            union
                .entry(group_key(&entries[i]))
                .or_default()
                .extend(nondominated(&f.log));
        }
    }
    let norms: BTreeMap<_, Normalization> = union
        .iter()
        .filter_map(|(k, pts)| Normalization::from_points(pts).map(|n| (k.clone(), n)))
        .collect();

    let ladder = TargetLadder::standard();
    let mut rows = Vec::with_capacity(tasks.len());
    for (k, &(i, r)) in tasks.iter().enumerate() {
        let e = &entries[i];
        let (seed, budget, result) = &results[k];
        let mut row = RunRow {
            problem: e.problem.clone(),
            dimension: e.dimension,
            seed: *seed,
            repetition: r,
            budget: *budget,
            evals_used: 0,
            sets: 0,
            reference_hv: None,
            final_quality: None,
            targets_hit: 0,
            error: None,
            hits: vec![None; ladder.len()],
            trajectory: Vec::new(),
        };
        match result {
            Err(err) => row.error = Some(err.to_string()),
            Ok(f) => {
                row.evals_used = f.evals_used;
                row.sets = f.sets;
                let norm = match e.reference {
                    Reference::SelfRef => norms.get(&group_key(e)).copied(),
                    Reference::Value(_) => Normalization::from_points(&f.log),
                };
                if let Some(norm) = norm {
                    row.trajectory = quality_trajectory(&f.log, &norm);
                    row.final_quality = Some(final_quality(&row.trajectory));
                }
                if let Reference::Value(v) = e.reference {
                    row.reference_hv = Some(v);
                }
            }
        }
        rows.push(row);
    }
    // best final quality per self group
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (k, &(i, _)) in tasks.iter().enumerate() {
        if let (Reference::SelfRef, Some(q)) = (entries[i].reference, rows[k].final_quality) {
            let b = best.entry(group_key(&entries[i])).or_insert(q);
            *b = b.max(q);
        }
    }
    for (k, &(i, _)) in tasks.iter().enumerate() {
        if entries[i].reference == Reference::SelfRef && rows[k].error.is_none() {
            rows[k].reference_hv = best.get(&group_key(&entries[i])).copied();
        }
        let row = &mut rows[k];
        if let Some(reference) = row.reference_hv {
            row.hits = first_hits(&row.trajectory, reference, &ladder);
            row.targets_hit = row.hits.iter().flatten().count();
        }
    }

    let outcome = BenchOutcome {
        targets: ladder.offsets().to_vec(),
        runs: rows,
    };
    write_outputs(&spec.output, &outcome)?;
    Ok(outcome)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(dir: &Path, outcome: &BenchOutcome) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let key = |r: &RunRow| {
        vec![
            r.problem.clone(),
            r.dimension.to_string(),
            r.seed.to_string(),
            r.repetition.to_string(),
        ]
    };
    write_file(&dir.join("bench_runs.csv"), |w| {
        let mut out = Writer::from_writer(w);
        out.write_record([
            "problem",
            "dimension",
            "seed",
            "repetition",
            "status",
            "budget",
            "evals_used",
            "sets",
            "reference_hv",
            "final_quality",
            "targets_hit",
            "error",
        ])?;
        for r in &outcome.runs {
            let mut rec = key(r);
            rec.extend([
                if r.error.is_some() { "failed" } else { "ok" }.to_string(),
                r.budget.to_string(),
                r.evals_used.to_string(),
                r.sets.to_string(),
                opt(r.reference_hv),
                opt(r.final_quality),
                r.targets_hit.to_string(),
                r.error.clone().unwrap_or_default(),
            ]);
            out.write_record(rec)?;
        }
        out.flush()
    })?;
    write_file(&dir.join("bench_targets.csv"), |w| {
        let mut out = Writer::from_writer(w);
        out.write_record([
            "problem",
            "dimension",
            "seed",
            "repetition",
            "target",
            "evals",
        ])?;
        for r in outcome.runs.iter().filter(|r| r.error.is_none()) {
            for (t, h) in outcome.targets.iter().zip(&r.hits) {
                let mut rec = key(r);
                rec.extend([t.to_string(), opt(*h)]);
                out.write_record(rec)?;
            }
        }
        out.flush()
    })?;
    write_file(&dir.join("bench_trajectories.csv"), |w| {
        let mut out = Writer::from_writer(w);
        out.write_record([
            "problem",
            "dimension",
            "seed",
            "repetition",
            "evals",
            "quality",
        ])?;
        for r in &outcome.runs {
            for p in &r.trajectory {
                let mut rec = key(r);
                rec.extend([p.evals.to_string(), p.quality.to_string()]);
                out.write_record(rec)?;
            }
        }
        out.flush()
    })?;
    write_json(&dir.join("bench_summary.json"), outcome)
}
