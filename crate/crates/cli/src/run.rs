//! The `run` command: one MOLE or MOGSA run with its artifacts.

use std::path::PathBuf;

use clap::ValueEnum;
use mole_core::bench::{
    final_quality, first_hits, quality_trajectory, Normalization, TargetLadder,
};
use mole_core::mogsa::{run_mogsa, MogsaTermination};
use mole_core::mole::{starting_points, SetProvenance, StopReason};
use mole_core::output::{
    write_mogsa_archive, write_postprocess_log, write_sets, write_targets, write_trajectory,
};
use mole_core::postprocess::normalized_gap;
use mole_core::{make_test_problem_by_name, run_mole, Mop, ProblemParams, StartingPoints};
use serde::Serialize;

use crate::config::{apply_overrides, AlgoConfig};
use crate::{ensure_dir, write_file, write_json, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mole,
    Mogsa,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mole => "mole",
            Self::Mogsa => "mogsa",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub problem: String,
    pub algorithm: Algorithm,
    pub dimension: usize,
    pub seed: u64,
    /// `None` means `10^5 * d`.
    pub budget: Option<u64>,
    pub overrides: Vec<(String, String)>,
    pub start: Option<Vec<f64>>,
    pub reference_hv: Option<f64>,
    pub output: PathBuf,
}

impl RunSpec {
    pub fn new(problem: &str, algorithm: Algorithm, seed: u64, output: PathBuf) -> Self {
        Self {
            problem: problem.to_string(),
            algorithm,
            dimension: 2,
            seed,
            budget: None,
            overrides: Vec::new(),
            start: None,
            reference_hv: None,
            output,
        }
    }

    pub fn effective_budget(&self) -> u64 {
        self.budget.unwrap_or(100_000 * self.dimension as u64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PassSummary {
    pub iterations: usize,
    pub inserted: usize,
    pub rejected: usize,
    pub skipped_descents: usize,
    pub evals_used: u64,
    pub normalized_gap: f64,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MoleSummary {
    pub stop: StopReason,
    pub sets: usize,
    pub total_nodes: usize,
    pub front_size: usize,
    pub normalized_gap: f64,
    pub starting_points_consumed: usize,
    pub successful_starts: usize,
    pub explore_calls: usize,
    pub membership_hits: usize,
    pub quarantined_nodes: usize,
    pub provenance: Vec<SetProvenance>,
    pub postprocess: Vec<PassSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MogsaSummary {
    pub start: Vec<f64>,
    pub termination: MogsaTermination,
    pub rounds: usize,
    pub visited: usize,
    pub handoffs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QualitySummary {
    pub normalization: Normalization,
    pub final_quality: f64,
    pub reference_hv: Option<f64>,
    pub targets_hit: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub problem: String,
    pub algorithm: Algorithm,
    pub dimension: usize,
    pub seed: u64,
    pub budget: u64,
    pub evals_used: u64,
    pub config: AlgoConfig,
    pub mole: Option<MoleSummary>,
    pub mogsa: Option<MogsaSummary>,
    pub quality: Option<QualitySummary>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn set_count(&self) -> usize {
        self.mole.as_ref().map_or(0, |m| m.sets)
    }
}

pub fn build_problem(name: &str, dimension: usize) -> Result<Mop, CliError> {
    let params = ProblemParams {
        dimension,
        ..ProblemParams::default()
    };
    Ok(make_test_problem_by_name(name, &params)?)
}

/// Runs the spec and writes its artifacts into `spec.output`.
pub fn execute(spec: &RunSpec) -> Result<RunReport, CliError> {
    let budget = spec.effective_budget();
    if budget == 0 {
        return Err(CliError::Usage("budget must be positive".into()));
    }
    let mut mop = build_problem(&spec.problem, spec.dimension)?
        .with_budget(budget)
        .record_evaluations();
    let config = apply_overrides(&AlgoConfig::for_problem(&mop), &spec.overrides)?;
    if let Some(s) = &spec.start {
        if s.len() != mop.dimension() {
            return Err(CliError::Usage(format!(
                "start has {} coordinates, problem has {}",
                s.len(),
                mop.dimension()
            )));
        }
    }
    ensure_dir(&spec.output)?;
    let stem = format!(
        "{}-{}-d{}-s{}",
        mop.name(),
        spec.algorithm.name(),
        spec.dimension,
        spec.seed
    );
    let d = mop.dimension();
    let mut files = Vec::new();
    let mut file = |suffix: &str| {
        let name = format!("{stem}.{suffix}");
        files.push(name.clone());
        spec.output.join(name)
    };

    let (mole, mogsa) = match spec.algorithm {
        Algorithm::Mole => {
            let source = match &spec.start {
                Some(s) => StartingPoints::ExplicitList(vec![s.clone()]),
                None => StartingPoints::UniformRandom {
                    seed: spec.seed,
                    count: config.mole.max_starting_points,
                },
            };
            let r = run_mole(&mut mop, &source, &config.mole)?;
            write_file(&file("sets.csv"), |w| write_sets(w, d, &r.archive))?;
            write_file(&file("postprocess.csv"), |w| {
                write_postprocess_log(w, &r.postprocess)
            })?;
            let summary = MoleSummary {
                stop: r.stop,
                sets: r.archive.len(),
                total_nodes: r.archive.total_nodes(),
                front_size: r.archive.nondominated().len(),
                normalized_gap: normalized_gap(&r.archive),
                starting_points_consumed: r.starting_points_consumed,
                successful_starts: r.successful_starts,
                explore_calls: r.explore_calls,
                membership_hits: r.membership_hits,
                quarantined_nodes: r.archive.quarantine().len(),
                provenance: r.provenance(),
                postprocess: r
                    .postprocess
                    .iter()
                    .map(|p| PassSummary {
                        iterations: p.iterations.len(),
                        inserted: p.inserted,
                        rejected: p.rejected,
                        skipped_descents: p.skipped.len(),
                        evals_used: p.evals_used,
                        normalized_gap: p.normalized_gap,
                        budget_exhausted: p.budget_exhausted,
                    })
                    .collect(),
            };
            (Some(summary), None)
        }
        Algorithm::Mogsa => {
            let start = match &spec.start {
                Some(s) => s.clone(),
                None => starting_points(
                    &StartingPoints::UniformRandom {
                        seed: spec.seed,
                        count: 1,
                    },
                    &mop,
                    1,
                )?
                .remove(0),
            };
            let a = run_mogsa(&start, &mut mop, &config.mogsa)?;
            write_file(&file("archive.csv"), |w| write_mogsa_archive(w, d, &a))?;
            let summary = MogsaSummary {
                start,
                termination: a.termination,
                rounds: a.rounds,
                visited: a.visited.len(),
                handoffs: a.handoffs.clone(),
            };
            (None, Some(summary))
        }
    };

    let log = mop.evaluation_log().unwrap_or(&[]);
    let quality = match Normalization::from_points(log) {
        Some(norm) => {
            let traj = quality_trajectory(log, &norm);
            write_file(&file("trajectory.csv"), |w| write_trajectory(w, &traj))?;
            let targets_hit = match spec.reference_hv {
                Some(reference) => {
                    let ladder = TargetLadder::standard();
                    let hits = first_hits(&traj, reference, &ladder);
                    write_file(&file("targets.csv"), |w| write_targets(w, &ladder, &hits))?;
                    Some(hits.iter().flatten().count())
                }
                None => None,
            };
            Some(QualitySummary {
                normalization: norm,
                final_quality: final_quality(&traj),
                reference_hv: spec.reference_hv,
                targets_hit,
            })
        }
        None => None,
    };

    let report_path = file("report.json");
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION"),
        problem: mop.name().to_string(),
        algorithm: spec.algorithm,
        dimension: spec.dimension,
        seed: spec.seed,
        budget,
        evals_used: mop.evaluations(),
        config,
        mole,
        mogsa,
        quality,
        files,
    };
    write_json(&report_path, &report)?;
    Ok(report)
}
