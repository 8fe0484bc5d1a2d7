use std::fs;
use std::path::Path;
use std::process::Command;

use alas_cli::config::ExperimentConfig;
use alas_cli::experiment::{run_experiment, SUMMARY_FILE};
use alas_cli::problems::read_dataset;
use alas_cli::summary::summarize;
use alas_cli::theory_report::{parse_text_values, CLAMP_NOTE};
use alas_cli::trace_io::{read_trace, trace_to_string};
use alas_cli::CliError;

const SMALL: &str = r#"
name = "small"
architecture = "2-1-1"
fractions = [0.2, 0.5]
seeds = [3]
[problem]
kind = "teacher"
preset = "nn1"
n = 60
seed = 11
[[algorithms]]
kind = "alas"
policy = "practical"
[[algorithms]]
kind = "sgd"
learning_rates = [0.5]
[budget]
iterations = 25
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alas"))
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") && n != SUMMARY_FILE && n != "ls_histogram.csv")
        .collect();
    v.sort();
    v
}

#[test]
fn cross_product_writes_one_trace_and_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let out = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(out.runs.len(), 4);
    assert_eq!(csv_files(dir.path()).len(), 4);
    let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.lines().count(), 5);
    for r in &out.runs {
        let back = read_trace(&r.path).unwrap();
        assert_eq!(back, r.file);
        assert_eq!(summarize(&back, cfg.summary_window).unwrap(), r.summary);
        let row = &r.summary.row;
        assert!(row.min_loss.unwrap() <= row.median_loss.unwrap());
        assert!(r.file.trace.final_full_loss.is_some());
    }
}

#[test]
fn identical_configs_give_identical_outputs() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let names = csv_files(a.path());
    assert_eq!(names, csv_files(b.path()));
    for n in names.iter().map(String::as_str).chain([SUMMARY_FILE, "ls_histogram.csv"]) {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn invalid_architecture_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = ExperimentConfig::from_toml(&SMALL.replace("2-1-1", "3-1-1")).unwrap();
    assert!(matches!(run_experiment(&cfg, &out), Err(CliError::Config(_))));
    assert!(!out.exists());
    let cfg = ExperimentConfig::from_toml(&SMALL.replace("2-1-1", "2-x-1")).unwrap();
    assert!(matches!(run_experiment(&cfg, &out), Err(CliError::Config(_))));
    let missing = SMALL.replace(
        "kind = \"teacher\"\npreset = \"nn1\"\nn = 60\nseed = 11",
        "kind = \"dataset\"\npath = \"/nonexistent/data.txt\"",
    );
    let cfg = ExperimentConfig::from_toml(&missing).unwrap();
    assert!(matches!(run_experiment(&cfg, &out), Err(CliError::Config(_))));
    assert!(!out.exists());
}

/// Seeded five-iteration run compared against a checked-in file. Set
/// `ALAS_UPDATE_GOLDEN=1` to regenerate after an intentional format change.
#[test]
fn golden_five_iteration_trace() {
    let text = SMALL
        .replace("iterations = 25", "iterations = 5")
        .replace("fractions = [0.2, 0.5]", "fractions = [0.2]")
        .replace("[[algorithms]]\nkind = \"sgd\"\nlearning_rates = [0.5]\n", "");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(out.runs.len(), 1);
    let produced = trace_to_string(&out.runs[0].file);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_5iter.csv");
    if std::env::var_os("ALAS_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden.parent().unwrap()).unwrap();
        fs::write(&golden, &produced).unwrap();
    }
    let expected = fs::read_to_string(&golden).expect("golden file present");
    assert_eq!(produced, expected);
    let header = produced.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "iter,elapsed_s,step_kind,alpha,ls_iters,sampled_loss,full_loss,grad_norm,lambda_min,sample_fraction,\
         rayleigh,next_grad_norm,direction_norm,sampled_loss_next,ls_exhausted,model_stationary,\
         function_stationary,sample_digest"
    );
}

#[test]
fn run_subcommand_output_dir_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    let from_file = dir.path().join("from_file");
    let text = format!(
        "output_dir = {:?}\n{}",
        from_file.display().to_string(),
        SMALL.replace("iterations = 25", "iterations = 3")
    );
    fs::write(&cfg_path, text).unwrap();

    let status = bin().arg("run").arg(&cfg_path).env_remove("ALAS_OUTPUT_DIR").status().unwrap();
    assert!(status.success());
    assert_eq!(csv_files(&from_file).len(), 4);

    let from_env = dir.path().join("from_env");
    let status = bin().arg("run").arg(&cfg_path).env("ALAS_OUTPUT_DIR", &from_env).status().unwrap();
    assert!(status.success());
    assert_eq!(csv_files(&from_env).len(), 4);

    let from_flag = dir.path().join("from_flag");
    let status = bin()
        .args(["run", "--seeds", "1,2", "--output-dir"])
        .arg(&from_flag)
        .arg(&cfg_path)
        .env("ALAS_OUTPUT_DIR", &from_env)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(csv_files(&from_flag).len(), 8);
}

#[test]
fn summarize_subcommand_reads_traces_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let out = run_experiment(&cfg, dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let hist = dir.path().join("hist.csv");
    let output = bin()
        .arg("summarize")
        .args(out.runs.iter().map(|r| &r.path))
        .arg("--histogram")
        .arg(&hist)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert_eq!(String::from_utf8(output.stdout).unwrap(), table);
    assert_eq!(
        fs::read(&hist).unwrap(),
        fs::read(dir.path().join("ls_histogram.csv")).unwrap()
    );
    let json = bin().arg("summarize").arg("--json").arg(&out.runs[0].path).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v[0]["row"]["iterations"], 25);
}

#[test]
fn theory_subcommand_text_matches_json() {
    let text = bin().arg("theory").output().unwrap();
    let json = bin().args(["theory", "--json"]).output().unwrap();
    assert!(text.status.success() && json.status.success());
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let values = parse_text_values(&String::from_utf8(text.stdout).unwrap());
    assert!(values.len() > 30);
    for (path, x) in values {
        let got = v.pointer(&format!("/{}", path.replace('.', "/"))).and_then(|j| j.as_f64());
        assert_eq!(got, Some(x), "{path}");
    }
    assert!((v["step_constants"]["c"].as_f64().unwrap() - 0.44949).abs() < 1e-5);
}

#[test]
fn theory_subcommand_clamps_and_rejects() {
    let out = bin().args(["theory", "--p", "0.999", "--eps", "1e-9"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("pi_epsilon.value") && l.contains(CLAMP_NOTE)));
    let bad = bin().args(["theory", "--p", "1"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("configuration error"));
}

#[test]
fn gen_data_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("nn1.bin");
    let text = dir.path().join("nn1.txt");
    for (path, fmt) in [(&cache, "cache"), (&text, "libsvm")] {
        let s = bin()
            .args(["gen-data", "--preset", "nn1", "--n", "30", "--seed", "5", "--format", fmt, "-o"])
            .arg(path)
            .status()
            .unwrap();
        assert!(s.success());
    }
    let a = read_dataset(&cache, None).unwrap();
    let b = read_dataset(&text, Some(2)).unwrap();
    assert_eq!(a.features(), b.features());
    assert_eq!(a.labels(), b.labels());

    // The cache file drives an experiment like the generated teacher does.
    let cfg = SMALL.replace(
        "kind = \"teacher\"\npreset = \"nn1\"\nn = 60\nseed = 11",
        &format!("kind = \"dataset\"\npath = {:?}", cache.display().to_string()),
    );
    let out = run_experiment(&ExperimentConfig::from_toml(&cfg).unwrap(), &dir.path().join("o")).unwrap();
    assert_eq!(out.runs.len(), 4);
}

#[test]
fn check_subcommand_passes() {
    let out = bin().args(["check", "--models", "3", "--n", "10"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}
