//! Per-run summaries computed from traces alone.

use std::collections::BTreeMap;
use std::io::Write;

use alas_core::driver::RunTrace;
use alas_core::step::StepKind;
use serde::Serialize;

use crate::trace_io::TraceFile;
use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub arch: String,
    pub algorithm: String,
    pub fraction: f64,
    pub seed: u64,
    /// Smallest full loss observed over the run.
    pub min_loss: Option<f64>,
    /// Median full loss over the trailing window.
    pub median_loss: Option<f64>,
    pub iterations: usize,
    pub termination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub row: SummaryRow,
    /// Count of every step kind, zeros included.
    pub step_counts: BTreeMap<StepKind, usize>,
    /// Number of iterations with each backtracking count `j`.
    pub ls_histogram: BTreeMap<u32, usize>,
}

/// Full losses in the order they were observed: the recorded ones, then the
/// loss at the final point.
pub fn loss_series(trace: &RunTrace) -> Vec<f64> {
    trace
        .records
        .iter()
        .filter_map(|r| r.full_loss)
        .chain(trace.final_full_loss)
        .collect()
}

/// `(min over all, median over the last ⌈w·n⌉)`.
pub fn window_stats(losses: &[f64], window: f64) -> (Option<f64>, Option<f64>) {
    if losses.is_empty() {
        return (None, None);
    }
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let n = losses.len();
    let len = ((window * n as f64).ceil() as usize).clamp(1, n);
    let mut tail = losses[n - len..].to_vec();
    tail.sort_by(f64::total_cmp);
    let median = if len % 2 == 1 {
        tail[len / 2]
    } else {
        0.5 * (tail[len / 2 - 1] + tail[len / 2])
    };
    (Some(min), Some(median))
}

pub fn summarize(file: &TraceFile, window: f64) -> Result<RunSummary> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(CliError::Config(format!("window fraction {window} is outside (0,1]")));
    }
    let t = &file.trace;
    if t.records.is_empty() {
        return Err(CliError::EmptyTrace(format!("{} {}", file.arch, file.algorithm)));
    }
    let (min_loss, median_loss) = window_stats(&loss_series(t), window);
    let mut step_counts: BTreeMap<StepKind, usize> = StepKind::ALL.iter().map(|k| (*k, 0)).collect();
    let mut ls_histogram = BTreeMap::new();
    for r in &t.records {
        *step_counts.entry(r.step_kind).or_default() += 1;
        *ls_histogram.entry(r.ls_iters).or_default() += 1;
    }
    Ok(RunSummary {
        row: SummaryRow {
            arch: file.arch.clone(),
            algorithm: file.algorithm.clone(),
            fraction: t.config.sampling.fraction,
            seed: t.config.seed,
            min_loss,
            median_loss,
            iterations: t.records.len(),
            termination: t.termination.as_str().to_string(),
        },
        step_counts,
        ls_histogram,
    })
}

/// Row for a run that failed before recording an iteration.
pub fn failed_row(file: &TraceFile) -> SummaryRow {
    SummaryRow {
        arch: file.arch.clone(),
        algorithm: file.algorithm.clone(),
        fraction: file.trace.config.sampling.fraction,
        seed: file.trace.config.seed,
        min_loss: None,
        median_loss: None,
        iterations: 0,
        termination: file.trace.termination.as_str().to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Summary table with one column per step kind appended.
pub fn write_summary_csv<W: Write>(summaries: &[RunSummary], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut head: Vec<String> = [
        "arch",
        "algorithm",
        "fraction",
        "seed",
        "min_loss",
        "median_loss",
        "iterations",
        "termination",
    ]
    .map(String::from)
    .to_vec();
    head.extend(StepKind::ALL.iter().map(|k| format!("n_{k}")));
    csv.write_record(&head).map_err(to_io)?;
    for s in summaries {
        let r = &s.row;
        let mut rec = vec![
            r.arch.clone(),
            r.algorithm.clone(),
            r.fraction.to_string(),
            r.seed.to_string(),
            opt(r.min_loss),
            opt(r.median_loss),
            r.iterations.to_string(),
            r.termination.clone(),
        ];
        rec.extend(StepKind::ALL.iter().map(|k| s.step_counts.get(k).copied().unwrap_or(0).to_string()));
        csv.write_record(&rec).map_err(to_io)?;
    }
    csv.flush()?;
    Ok(())
}

/// Long-format line-search histogram: one line per run and `j`.
pub fn write_histogram_csv<W: Write>(summaries: &[RunSummary], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["arch", "algorithm", "fraction", "seed", "ls_iters", "count"])
        .map_err(to_io)?;
    for s in summaries {
        let r = &s.row;
        for (j, count) in &s.ls_histogram {
            csv.write_record([
                r.arch.clone(),
                r.algorithm.clone(),
                r.fraction.to_string(),
                r.seed.to_string(),
                j.to_string(),
                count.to_string(),
            ])
            .map_err(to_io)?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn to_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alas_core::driver::{IterationRecord, Method, RunConfig, Termination};
    use alas_core::step::Policy;
    use alas_core::DVector;

    fn file_with(losses: &[f64], kind: StepKind) -> TraceFile {
        let records = losses
            .iter()
            .enumerate()
            .map(|(k, &l)| IterationRecord {
                k: k as u64,
                sample_digest: 0,
                sample_fraction: 1.0,
                step_kind: kind,
                lambda_min: Some(1.0),
                rayleigh: None,
                grad_norm: 1.0,
                next_grad_norm: Some(1.0),
                direction_norm: 1.0,
                alpha: 1.0,
                ls_iters: (k % 3) as u32,
                ls_exhausted: false,
                sampled_loss: l,
                sampled_loss_next: Some(l),
                full_loss: Some(l),
                model_stationary: false,
                function_stationary: Some(false),
                elapsed_s: None,
            })
            .collect();
        TraceFile {
            arch: "2-1-1".into(),
            algorithm: "alas-theoretical".into(),
            trace: RunTrace {
                config: RunConfig::new(Policy::Theoretical),
                method: Method::Alas,
                records,
                termination: Termination::MaxIterations,
                final_point: DVector::zeros(1),
                final_full_loss: None,
            },
            error: None,
        }
    }

    #[test]
    fn window_example() {
        let s = summarize(&file_with(&[5.0, 4.0, 3.0, 2.0, 1.0], StepKind::Newton), 0.4).unwrap();
        assert_eq!(s.row.min_loss, Some(1.0));
        assert_eq!(s.row.median_loss, Some(1.5));
        assert_eq!(s.row.iterations, 5);
    }

    #[test]
    fn full_window_is_whole_run() {
        assert_eq!(window_stats(&[3.0, 1.0, 2.0], 1.0), (Some(1.0), Some(2.0)));
        assert_eq!(window_stats(&[], 0.5), (None, None));
    }

    #[test]
    fn counts_and_histogram() {
        let s = summarize(&file_with(&[1.0; 10], StepKind::Newton), 0.2).unwrap();
        assert_eq!(s.step_counts[&StepKind::Newton], 10);
        assert_eq!(s.step_counts.values().sum::<usize>(), 10);
        assert_eq!(s.ls_histogram, BTreeMap::from([(0, 4), (1, 3), (2, 3)]));
    }

    #[test]
    fn empty_trace_rejected() {
        assert!(matches!(
            summarize(&file_with(&[], StepKind::Newton), 0.2),
            Err(CliError::EmptyTrace(_))
        ));
    }

    #[test]
    fn final_loss_is_appended() {
        let mut f = file_with(&[5.0, 4.0], StepKind::Newton);
        f.trace.final_full_loss = Some(0.5);
        assert_eq!(loss_series(&f.trace), vec![5.0, 4.0, 0.5]);
    }
}
