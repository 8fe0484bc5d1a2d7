use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use alas_cli::config::ExperimentConfig;
use alas_cli::experiment::run_experiment;
use alas_cli::problems::derivative_check;
use alas_cli::summary::{summarize, write_histogram_csv, write_summary_csv};
use alas_cli::theory_report::{TheoryInputs, TheoryReport};
use alas_cli::trace_io::{read_trace, write_atomic};
use alas_core::objectives::{teacher_generate, MlpSpec, TeacherSpec, WeightScale};
use alas_core::theory::ProblemConstants;
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "alas", version, about = "Subsampled second-order line-search experiments")]
struct Cli {
    /// Worker threads for evaluation and concurrent runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm × fraction × seed combination of a config file.
    Run(RunArgs),
    /// Summarize trace files without re-running anything.
    Summarize(SummarizeArgs),
    /// Print constants and complexity bounds.
    Theory(TheoryArgs),
    /// Write a teacher-network dataset.
    GenData(GenDataArgs),
    /// Compare MLP derivatives with finite differences.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    config: PathBuf,
    /// Overrides `output_dir` from the file.
    #[arg(long, env = "ALAS_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Overrides the iteration budget.
    #[arg(long)]
    iterations: Option<u64>,
    /// Overrides the seed list, e.g. `--seeds 0,1,2`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Overrides the fraction list.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Trailing fraction of each run used for the median.
    #[arg(long, default_value_t = 0.2)]
    window: f64,
    /// Emit JSON (rows, step counts and histograms) instead of CSV.
    #[arg(long)]
    json: bool,
    /// Also write the line-search histogram CSV here.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    l_h: f64,
    #[arg(long, default_value_t = 1.0)]
    u_g: f64,
    #[arg(long, default_value_t = 1.0)]
    u_h: f64,
    #[arg(long, default_value_t = 1.0)]
    f_up: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    f_low: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    f0: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa_g: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa_h: f64,
    /// `J` of the consecutive-stationarity rule.
    #[arg(long = "j", default_value_t = 0)]
    j: u32,
    /// Number of components.
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 0.9)]
    theta: f64,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Nn1,
    Nn2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Libsvm,
    Cache,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    StdDev,
    Variance,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum, conflicts_with = "layers")]
    preset: Option<Preset>,
    /// Teacher widths, e.g. `2-4-2-1`.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    spread: f64,
    #[arg(long, value_enum, default_value = "std-dev")]
    scale: Scale,
    #[arg(long, value_enum, default_value = "cache")]
    format: Format,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Architectures to check; models are spread over them round-robin.
    #[arg(long, value_delimiter = ',', default_value = "22-4-1,4-4-1,2-1-1")]
    arch: Vec<String>,
    #[arg(long, default_value_t = 20)]
    models: usize,
    /// Data points per model.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 1e-5)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    hess_tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Theory(a) => cmd_theory(a),
        Command::GenData(a) => cmd_gen_data(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(dir) = a.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(it) = a.iterations {
        cfg.budget.iterations = it;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(f) = a.fractions {
        cfg.fractions = f;
    }
    let outcome = run_experiment(&cfg, &cfg.output_dir)?;
    for r in &outcome.runs {
        let row = &r.summary.row;
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:<18} frac={:<6} seed={:<4} iters={:<6} min={} median={} {}",
            row.arch,
            row.algorithm,
            row.fraction,
            row.seed,
            row.iterations,
            fmt(row.min_loss),
            fmt(row.median_loss),
            row.termination
        );
    }
    println!("summary: {}", outcome.summary_path.display());
    let failed: Vec<_> = outcome.failures().collect();
    for r in &failed {
        eprintln!(
            "run failed: {}: {}",
            r.path.display(),
            r.file.error.as_deref().unwrap_or_default()
        );
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_summarize(a: SummarizeArgs) -> anyhow::Result<ExitCode> {
    let mut summaries = Vec::new();
    for path in &a.traces {
        let file = read_trace(path)?;
        summaries.push(summarize(&file, a.window).with_context(|| path.display().to_string())?);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if a.json {
        serde_json::to_writer_pretty(&mut out, &summaries)?;
        writeln!(out)?;
    } else {
        write_summary_csv(&summaries, &mut out)?;
    }
    if let Some(path) = a.histogram {
        let mut buf = Vec::new();
        write_histogram_csv(&summaries, &mut buf)?;
        write_atomic(&path, &buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_theory(a: TheoryArgs) -> anyhow::Result<ExitCode> {
    let inputs = TheoryInputs {
        constants: ProblemConstants {
            l: a.l,
            l_h: a.l_h,
            u_g: a.u_g,
            u_h: a.u_h,
            f_up: a.f_up,
            f_low: a.f_low,
            f0: a.f0,
        },
        eps: a.eps,
        p: a.p,
        kappa_g: a.kappa_g,
        kappa_h: a.kappa_h,
        j: a.j,
        n: a.n,
        theta: a.theta,
        eta: a.eta,
    };
    let report = TheoryReport::compute(&inputs)?;
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_data(a: GenDataArgs) -> anyhow::Result<ExitCode> {
    let mut spec = match (a.preset, a.layers) {
        (_, Some(l)) => {
            let layers = l
                .split('-')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("invalid layers `{l}`"))?;
            TeacherSpec::new(layers, a.n, a.seed)
        }
        (Some(Preset::Nn1), None) => TeacherSpec::nn1(a.n, a.seed),
        (Some(Preset::Nn2), None) => TeacherSpec::nn2(a.n, a.seed, None),
        (None, None) => bail!("either --preset or --layers is required"),
    };
    spec.spread = a.spread;
    spec.scale = match a.scale {
        Scale::StdDev => WeightScale::StdDev,
        Scale::Variance => WeightScale::Variance,
    };
    let data = teacher_generate(&spec)?;
    let mut buf = Vec::new();
    match a.format {
        Format::Libsvm => {
            writeln!(buf, "# {}", spec.label())?;
            data.write_libsvm(&mut buf)?;
        }
        Format::Cache => data.write_cache(&mut buf)?,
    }
    write_atomic(&a.output, &buf)?;
    println!("wrote {} points of dimension {} to {}", data.len(), data.dim(), a.output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(a: CheckArgs) -> anyhow::Result<ExitCode> {
    let specs = a
        .arch
        .iter()
        .map(|s| s.parse::<MlpSpec>().with_context(|| format!("architecture `{s}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if specs.is_empty() {
        bail!("no architectures given");
    }
    let mut ok = true;
    let mut out = BufWriter::new(io::stdout().lock());
    for m in 0..a.models {
        let spec = &specs[m % specs.len()];
        let seed = a.seed + m as u64;
        let r = derivative_check(spec, a.n, seed, a.h)?;
        let pass = r.gradient_error <= a.grad_tol && r.hessian_error <= a.hess_tol;
        ok &= pass;
        writeln!(
            out,
            "{spec:<8} seed={seed:<4} gradient={:.3e} hessian={:.3e} {}",
            r.gradient_error,
            r.hessian_error,
            if pass { "ok" } else { "FAIL" }
        )?;
    }
    out.flush()?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
