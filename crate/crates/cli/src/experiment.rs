//! Running the algorithm × fraction × seed cross product.

use std::path::{Path, PathBuf};

use alas_core::driver::{run, sgd_run, RunFailure, RunTrace};
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::problems::LoadedProblem;
use crate::summary::{failed_row, summarize, write_histogram_csv, write_summary_csv, RunSummary};
use crate::trace_io::{trace_to_string, write_atomic, TraceFile};
use crate::{CliError, Result};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const HISTOGRAM_FILE: &str = "ls_histogram.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub algorithm: Algorithm,
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub job: Job,
    pub path: PathBuf,
    pub file: TraceFile,
    pub summary: RunSummary,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub runs: Vec<RunOutput>,
    pub summary_path: PathBuf,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunOutput> {
        self.runs.iter().filter(|r| r.file.error.is_some())
    }
}

/// Jobs in algorithm-major, then fraction, then seed order.
pub fn jobs(config: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for algorithm in config.expanded_algorithms() {
        for &fraction in &config.fractions {
            for &seed in &config.seeds {
                out.push(Job {
                    algorithm,
                    fraction,
                    seed,
                });
            }
        }
    }
    out
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

pub fn trace_file_name(config: &ExperimentConfig, arch: &str, job: &Job) -> String {
    sanitize(&format!(
        "{}_{}_{}_frac{}_seed{}.csv",
        config.name, arch, job.algorithm, job.fraction, job.seed
    ))
}

/// Runs one job; failures come back as a partial trace with the error attached.
pub fn run_job(config: &ExperimentConfig, problem: &LoadedProblem, job: &Job) -> TraceFile {
    let rc = config.run_config(job.algorithm, job.fraction, job.seed);
    let x0 = problem.initial_point(job.seed);
    let p = problem.problem();
    let result: std::result::Result<RunTrace, RunFailure> = match job.algorithm {
        Algorithm::Alas(_) => run(p, x0, &rc),
        Algorithm::Sgd(lr) => sgd_run(p, lr, x0, &rc),
    };
    let (trace, error) = match result {
        Ok(t) => (t, None),
        Err(f) => (*f.partial, Some(f.error.to_string())),
    };
    TraceFile {
        arch: problem.label(),
        algorithm: job.algorithm.to_string(),
        trace,
        error,
    }
}

/// Loads the problem, runs every job (concurrently), writes one trace per run
/// plus the summary and line-search histogram tables.
///
/// Problems with the configuration or the data are reported before any run starts.
pub fn run_experiment(config: &ExperimentConfig, output_dir: &Path) -> Result<ExperimentOutcome> {
    config.validate()?;
    let problem = LoadedProblem::load(&config.problem, config.architecture.as_deref())?;
    std::fs::create_dir_all(output_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", output_dir.display())))?;
    let arch = problem.label();
    let runs = jobs(config)
        .into_par_iter()
        .map(|job| -> Result<RunOutput> {
            let file = run_job(config, &problem, &job);
            let path = output_dir.join(trace_file_name(config, &arch, &job));
            write_atomic(&path, trace_to_string(&file).as_bytes())?;
            let summary = match summarize(&file, config.summary_window) {
                Ok(s) => s,
                Err(CliError::EmptyTrace(_)) => RunSummary {
                    row: failed_row(&file),
                    step_counts: Default::default(),
                    ls_histogram: Default::default(),
                },
                Err(e) => return Err(e),
            };
            Ok(RunOutput {
                job,
                path,
                file,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let summary_path = output_dir.join(SUMMARY_FILE);
    let mut buf = Vec::new();
    write_summary_csv(&summaries, &mut buf)?;
    write_atomic(&summary_path, &buf)?;
    let mut buf = Vec::new();
    write_histogram_csv(&summaries, &mut buf)?;
    write_atomic(&output_dir.join(HISTOGRAM_FILE), &buf)?;
    Ok(ExperimentOutcome { runs, summary_path })
}
