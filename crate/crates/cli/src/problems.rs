//! Turning a [`ProblemSource`] into an objective and starting points.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use alas_core::objectives::{libsvm_parse, teacher_generate, CubicFamily, Dataset, MlpProblem, MlpSpec, TeacherSpec};
use alas_core::problem::{FiniteSumProblem, FnProblem, QuadraticComponents};
use alas_core::{DMatrix, DVector};

use crate::config::ProblemSource;
use crate::{CliError, Result};

pub const BUILTINS: [&str; 3] = ["quadratic", "saddle", "cubic"];

pub enum LoadedProblem {
    Mlp(MlpProblem),
    Builtin {
        name: String,
        problem: Box<dyn FiniteSumProblem + Send>,
        x0: DVector<f64>,
    },
}

impl LoadedProblem {
    pub fn load(source: &ProblemSource, architecture: Option<&str>) -> Result<Self> {
        match source {
            ProblemSource::Builtin { name, seed } => builtin(name, *seed),
            _ => {
                let arch = architecture.ok_or_else(|| CliError::Config("missing architecture".into()))?;
                let spec: MlpSpec = arch
                    .parse()
                    .map_err(|e| CliError::Config(format!("architecture `{arch}`: {e}")))?;
                let data = load_data(source)?;
                let problem = MlpProblem::new(spec, Arc::new(data))
                    .map_err(|e| CliError::Config(format!("architecture `{arch}` does not fit the data: {e}")))?;
                Ok(LoadedProblem::Mlp(problem))
            }
        }
    }

    pub fn problem(&self) -> &(dyn FiniteSumProblem + Send) {
        match self {
            LoadedProblem::Mlp(p) => p,
            LoadedProblem::Builtin { problem, .. } => problem.as_ref(),
        }
    }

    /// Architecture label for networks, the function name for builtins.
    pub fn label(&self) -> String {
        match self {
            LoadedProblem::Mlp(p) => p.spec().to_string(),
            LoadedProblem::Builtin { name, .. } => name.clone(),
        }
    }

    /// Seeded network initialization; builtins have a fixed start.
    pub fn initial_point(&self, seed: u64) -> DVector<f64> {
        match self {
            LoadedProblem::Mlp(p) => p.spec().initial_parameters(seed),
            LoadedProblem::Builtin { x0, .. } => x0.clone(),
        }
    }
}

/// Reads either the binary cache or the sparse text format, by magic bytes.
pub fn read_dataset(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let open = || File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())));
    let mut magic = [0u8; 8];
    let is_cache = open()?.read_exact(&mut magic).is_ok() && &magic == b"ALASDATA";
    let ds = if is_cache {
        Dataset::read_cache(BufReader::new(open()?))
    } else {
        libsvm_parse(BufReader::new(open()?), dim, &path.display().to_string())
    };
    ds.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn teacher_spec(source: &ProblemSource) -> Result<TeacherSpec> {
    let ProblemSource::Teacher {
        preset,
        layers,
        n,
        seed,
        spread,
        scale,
    } = source
    else {
        return Err(CliError::Config("not a teacher problem".into()));
    };
    let mut spec = match (layers, preset.as_deref()) {
        (Some(l), _) => TeacherSpec::new(l.clone(), *n, *seed),
        (None, Some("nn1")) => TeacherSpec::nn1(*n, *seed),
        (None, Some("nn2")) => TeacherSpec::nn2(*n, *seed, None),
        (None, Some(other)) => return Err(CliError::Config(format!("unknown teacher preset `{other}`"))),
        (None, None) => return Err(CliError::Config("teacher needs a preset or layers".into())),
    };
    spec.spread = *spread;
    spec.scale = *scale;
    Ok(spec)
}

fn load_data(source: &ProblemSource) -> Result<Dataset> {
    match source {
        ProblemSource::Dataset { path, dim, limit } => {
            let ds = read_dataset(path, *dim)?;
            match limit {
                Some(n) => Ok(ds.truncated(*n)?),
                None => Ok(ds),
            }
        }
        ProblemSource::Teacher { .. } => {
            teacher_generate(&teacher_spec(source)?).map_err(|e| CliError::Config(format!("teacher data: {e}")))
        }
        ProblemSource::Builtin { .. } => unreachable!("builtins carry no dataset"),
    }
}

fn builtin(name: &str, seed: u64) -> Result<LoadedProblem> {
    let (problem, x0): (Box<dyn FiniteSumProblem + Send>, DVector<f64>) = match name {
        // ½ xᵀ diag(4, 2) x
        "quadratic" => (
            Box::new(QuadraticComponents::diagonal(&[4.0, 2.0])),
            DVector::from_vec(vec![1.0, 1.0]),
        ),
        // ½ (x₁² − x₂²), started next to the saddle
        "saddle" => (
            Box::new(FnProblem::new(2).with_component(
                |x| 0.5 * (x[0] * x[0] - x[1] * x[1]),
                |x| DVector::from_vec(vec![x[0], -x[1]]),
                |_| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            )),
            DVector::from_vec(vec![0.0, 1e-4]),
        ),
        "cubic" => (Box::new(CubicFamily::random(seed, 50, 4)), DVector::zeros(4)),
        other => {
            return Err(CliError::Config(format!(
                "unknown builtin `{other}`, expected one of {}",
                BUILTINS.join(", ")
            )))
        }
    };
    Ok(LoadedProblem::Builtin {
        name: name.to_string(),
        problem,
        x0,
    })
}

/// Finite-difference check of an MLP on `n` teacher points with input width
/// taken from the architecture, at the seeded initial parameters.
pub fn derivative_check(arch: &MlpSpec, n: usize, seed: u64, h: f64) -> Result<alas_core::objectives::FdReport> {
    let teacher = TeacherSpec::new(vec![arch.input_dim(), 3, 1], n, seed);
    let data = teacher_generate(&teacher)?;
    let problem = MlpProblem::new(arch.clone(), Arc::new(data))?;
    let x = arch.initial_parameters(seed);
    Ok(alas_core::objectives::finite_difference_check(&problem, &x, h)?)
}
