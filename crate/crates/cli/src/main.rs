use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mole_cli::bench::{self, BenchSpec};
use mole_cli::config::{parse_assignment, read_config_file};
use mole_cli::plot::{self, PlotSpec, VariantArg};
use mole_cli::run::{self, Algorithm, RunSpec};
use mole_cli::{
    output_dir, parse_point, parse_resolution, CliError, EXIT_OK, EXIT_PARTIAL, OUTPUT_DIR_ENV,
};

/// Local search for bi-objective problems: runs, landscape data, benchmarks.
#[derive(Parser)]
#[command(name = "mole", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. --set descent.alpha_max=0.1
    #[arg(long = "set", value_parser = parse_assignment)]
    overrides: Vec<(String, String)>,
    /// Output directory
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn assignments(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut all = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Vec::new(),
        };
        all.extend(self.overrides.iter().cloned());
        Ok(all)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run MOLE or MOGSA on a test problem
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long, value_enum, default_value = "mole")]
        algo: Algorithm,
        #[arg(long = "dim", default_value_t = 2)]
        dimension: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Evaluation budget [default: 100000 * dim]
        #[arg(long)]
        budget: Option<u64>,
        /// Explicit start point, comma separated
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        /// Reference hypervolume; enables the targets CSV
        #[arg(long)]
        reference_hv: Option<f64>,
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Export landscape grid data
    PlotData {
        #[arg(long)]
        problem: String,
        #[arg(long = "dim", default_value_t = 2)]
        dimension: usize,
        /// Cells per axis, NxM or N
        #[arg(long, default_value = "100x100", value_parser = parse_resolution)]
        res: (usize, usize),
        #[arg(long, value_enum, default_value = "gm")]
        variant: VariantArg,
        #[arg(long, default_value_t = mole_core::landscape::DEFAULT_GRID_EPS)]
        eps: f64,
        /// Re-check the height recurrence on the written CSV
        #[arg(long)]
        verify: bool,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite
    Bench {
        /// CSV with columns problem,dimension,seed,reference_hv
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Worker threads [default: all cores]
        #[arg(long)]
        jobs: Option<usize>,
        /// Evaluation budget per run [default: 100000 * dim]
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        common: ConfigArgs,
    },
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            problem,
            algo,
            dimension,
            seed,
            budget,
            start,
            reference_hv,
            common,
        } => {
            let spec = RunSpec {
                dimension,
                budget,
                start: start
                    .as_deref()
                    .map(parse_point)
                    .transpose()
                    .map_err(CliError::Usage)?,
                reference_hv,
                overrides: common.assignments()?,
                ..RunSpec::new(&problem, algo, seed, output_dir(common.out.as_deref()))
            };
            let report = run::execute(&spec)?;
            println!(
                "{} {} seed {}: {} evaluations, {} sets, files in {}",
                report.problem,
                report.algorithm.name(),
                report.seed,
                report.evals_used,
                report.set_count(),
                spec.output.display()
            );
            Ok(EXIT_OK)
        }
        Command::PlotData {
            problem,
            dimension,
            res,
            variant,
            eps,
            verify,
            out,
        } => {
            let spec = PlotSpec {
                dimension,
                variant: variant.into(),
                eps,
                ..PlotSpec::new(&problem, res, output_dir(out.as_deref()))
            };
            let s = plot::execute(&spec)?;
            println!(
                "{} cells, {} efficient in {} components -> {}",
                s.cells,
                s.efficient_cells,
                s.components,
                s.path.display()
            );
            if verify {
                let n = plot::verify_grid_csv(&s.path)?;
                println!("height recurrence holds on {n} cells");
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            suite,
            repetitions,
            jobs,
            budget,
            common,
        } => {
            let spec = BenchSpec {
                suite,
                repetitions,
                jobs,
                budget,
                overrides: common.assignments()?,
                output: output_dir(common.out.as_deref()),
            };
            let outcome = bench::execute(&spec)?;
            println!(
                "{} runs, {} failed, results in {}",
                outcome.runs.len(),
                outcome.failures(),
                spec.output.display()
            );
            Ok(if outcome.failures() > 0 {
                EXIT_PARTIAL
            } else {
                EXIT_OK
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
