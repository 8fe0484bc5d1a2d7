//! The outer optimization loop, stationarity tests and the SGD baseline.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};
use crate::linesearch::{backtrack, DecreaseCondition, LineSearchConfig};
use crate::objectives::sampler::{Sampler, SamplingMode};
use crate::problem::{evaluate_full, evaluate_model, full_value, model_value, model_value_gradient, FiniteSumProblem, SampleSet};
use crate::step::{min_eigenpair, select_step, Policy, StepKind, EIG_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceptance {
    /// Always move to `x_k + α_k d_k`.
    Plain,
    /// Stay at `x_k` whenever the iteration is model stationary.
    Step7Prime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub mode: SamplingMode,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stopping {
    /// Stop after `J + 1` consecutive model-stationary iterations. `None` disables the rule.
    pub consecutive: Option<u32>,
    pub max_iterations: u64,
    pub wall_clock_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy: Policy,
    pub eps: f64,
    pub line_search: LineSearchConfig,
    pub sampling: Sampling,
    pub acceptance: Acceptance,
    pub stopping: Stopping,
    pub seed: u64,
    /// Evaluate the full objective every this many iterations; 0 disables.
    pub full_metrics_every: u64,
    /// Iterates with norm above this are treated as divergence.
    pub divergence_threshold: f64,
}

impl RunConfig {
    /// Defaults for a policy: cubic decrease for the theoretical rule,
    /// quadratic for the practical one, full sampling, `ε = 1e-5`.
    pub fn new(policy: Policy) -> Self {
        let condition = match policy {
            Policy::Theoretical => DecreaseCondition::Cubic,
            Policy::Practical => DecreaseCondition::Quadratic,
        };
        Self {
            policy,
            eps: 1e-5,
            line_search: LineSearchConfig {
                condition,
                ..LineSearchConfig::default()
            },
            sampling: Sampling {
                mode: SamplingMode::WithReplacement,
                fraction: 1.0,
            },
            acceptance: Acceptance::Plain,
            stopping: Stopping {
                consecutive: Some(0),
                max_iterations: 1000,
                wall_clock_secs: None,
            },
            seed: 0,
            full_metrics_every: 1,
            divergence_threshold: 1e20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(AlasError::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.sampling.fraction > 0.0 && self.sampling.fraction <= 1.0) {
            return Err(AlasError::invalid(format!(
                "sample fraction must lie in (0,1], got {}",
                self.sampling.fraction
            )));
        }
        if self.stopping.max_iterations == 0 {
            return Err(AlasError::invalid("max_iterations must be positive"));
        }
        if let Some(w) = self.stopping.wall_clock_secs {
            if !(w > 0.0) {
                return Err(AlasError::invalid("wall-clock budget must be positive"));
            }
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(AlasError::invalid("divergence threshold must be positive"));
        }
        self.line_search.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Alas,
    Sgd { learning_rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    pub sample_digest: u64,
    pub sample_fraction: f64,
    pub step_kind: StepKind,
    pub lambda_min: Option<f64>,
    pub rayleigh: Option<f64>,
    pub grad_norm: f64,
    pub next_grad_norm: Option<f64>,
    /// `‖d_k‖`; for SGD the norm of the sampled gradient.
    pub direction_norm: f64,
    pub alpha: f64,
    pub ls_iters: u32,
    pub ls_exhausted: bool,
    /// `m_k(x_k)`
    pub sampled_loss: f64,
    /// `m_k(x_k + α_k d_k)`
    pub sampled_loss_next: Option<f64>,
    /// `f(x_k)` on iterations where the full-metrics cadence fires.
    pub full_loss: Option<f64>,
    pub model_stationary: bool,
    pub function_stationary: Option<bool>,
    /// Seconds since the run started; recorded only under a wall-clock budget.
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    JConsecutiveStationary,
    MaxIterations,
    WallClock,
    LineSearchExhaustion,
    /// Only on partial traces attached to a [`RunFailure`].
    NumericFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::JConsecutiveStationary => "JConsecutiveStationary",
            Termination::MaxIterations => "MaxIterations",
            Termination::WallClock => "WallClock",
            Termination::LineSearchExhaustion => "LineSearchExhaustion",
            Termination::NumericFailure => "NumericFailure",
        }
    }
}

impl std::str::FromStr for Termination {
    type Err = AlasError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Termination::JConsecutiveStationary,
            Termination::MaxIterations,
            Termination::WallClock,
            Termination::LineSearchExhaustion,
            Termination::NumericFailure,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| AlasError::invalid(format!("unknown termination reason `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub config: RunConfig,
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub final_point: DVector<f64>,
    pub final_full_loss: Option<f64>,
}

/// A run that stopped on an error, with everything recorded up to that point.
#[derive(Debug, Clone, thiserror::Error)]
#[error("run failed after {} iterations: {error}", partial.records.len())]
pub struct RunFailure {
    pub error: AlasError,
    pub partial: Box<RunTrace>,
}

/// `min{‖g‖, ‖g⁺‖} ≤ ε_g` and `λ ≥ −ε_H`.
pub fn model_stationarity_check(grad_norm: f64, next_grad_norm: f64, lambda: f64, eps_g: f64, eps_h: f64) -> bool {
    grad_norm.min(next_grad_norm) <= eps_g && lambda >= -eps_h
}

/// Stationarity of the full objective at `x_k`, with the gradient clause
/// also satisfied by `x_next`.
pub fn function_stationarity_check<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    x_next: &DVector<f64>,
    eps_g: f64,
    eps_h: f64,
) -> Result<bool> {
    let full = evaluate_full(problem, x)?;
    let (_, g_next) = model_value_gradient(problem, x_next, &full.sample)?;
    let (lambda, _) = min_eigenpair(&full.hessian, EIG_TOL)?;
    Ok(model_stationarity_check(full.gradient.norm(), g_next.norm(), lambda, eps_g, eps_h))
}

/// Mutable state of the outer loop.
#[derive(Debug, Clone)]
pub struct AlasState {
    pub k: u64,
    pub x: DVector<f64>,
    /// Current run of consecutive model-stationary iterations.
    pub streak: u32,
    pub sampler: Sampler,
    started: Instant,
}

impl AlasState {
    pub fn new<P: FiniteSumProblem + ?Sized>(problem: &P, x0: DVector<f64>, config: &RunConfig) -> Result<Self> {
        if x0.len() != problem.dim() {
            return Err(AlasError::DimensionMismatch {
                expected: problem.dim(),
                got: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(AlasError::invalid("initial point has non-finite entries"));
        }
        let sampler = Sampler::new(
            config.sampling.mode,
            problem.num_components(),
            config.sampling.fraction,
            config.seed,
        )?;
        Ok(Self {
            k: 0,
            x: x0,
            streak: 0,
            sampler,
            started: Instant::now(),
        })
    }

    fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    // A batch as large as the data set is replaced by the ascending full
    // set, so that the model coincides with f bit for bit.
    fn draw(&mut self) -> Result<SampleSet> {
        let s = self.sampler.next_sample();
        if self.sampler.batch_size() == s.num_components() {
            return SampleSet::full(s.num_components());
        }
        Ok(s)
    }
}

/// Outcome of a single iteration beyond its record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    /// Line search ran out of backtracks on the full ordered sample at a
    /// point that is not model stationary. Repeating the iteration cannot
    /// change anything, so [`run`] stops.
    pub stalled: bool,
}

/// One iteration: sample, model, step selection, line search, update.
pub fn alas_step<P: FiniteSumProblem + ?Sized>(
    state: &mut AlasState,
    problem: &P,
    config: &RunConfig,
) -> Result<(IterationRecord, StepOutcome)> {
    let sample = state.draw()?;
    let x = state.x.clone();
    let model = evaluate_model(problem, &x, &sample)?;
    let decision = select_step(config.policy, &model.gradient, &model.hessian, config.eps)?;
    let grad_norm = model.gradient.norm();

    let mut alpha = 0.0;
    let mut ls_iters = 0;
    let mut ls_exhausted = false;
    let mut x_trial = x.clone();
    let mut g_next = model.gradient.clone();
    let mut m_next = model.value;
    if decision.kind != StepKind::ZeroStep {
        let ls = backtrack(
            |y| model_value(problem, y, &sample),
            &x,
            &decision.direction,
            model.value,
            &config.line_search,
        )?;
        ls_iters = ls.j;
        if ls.satisfied {
            alpha = ls.alpha;
            x_trial = &x + &decision.direction * alpha;
            m_next = ls.model_value;
            g_next = model_value_gradient(problem, &x_trial, &sample)?.1;
        } else {
            ls_exhausted = true;
        }
    }
    let next_grad_norm = g_next.norm();

    let eps_h = config.eps.sqrt();
    let mut lambda = decision.lambda_min;
    if lambda.is_none() && grad_norm.min(next_grad_norm) <= config.eps {
        lambda = Some(min_eigenpair(&model.hessian, EIG_TOL)?.0);
    }
    let model_stationary = lambda.is_some_and(|l| model_stationarity_check(grad_norm, next_grad_norm, l, config.eps, eps_h));

    let cadence = config.full_metrics_every > 0 && state.k % config.full_metrics_every == 0;
    let (full_loss, function_stationary) = if cadence {
        (
            Some(full_value(problem, &x)?),
            Some(function_stationarity_check(problem, &x, &x_trial, config.eps, eps_h)?),
        )
    } else {
        (None, None)
    };

    let x_new = if config.acceptance == Acceptance::Step7Prime && model_stationary {
        x
    } else {
        x_trial
    };
    check_divergence(&x_new, config.divergence_threshold)?;

    let record = IterationRecord {
        k: state.k,
        sample_digest: sample.digest(config.seed),
        sample_fraction: sample.fraction(),
        step_kind: decision.kind,
        lambda_min: lambda,
        rayleigh: decision.rayleigh,
        grad_norm,
        next_grad_norm: Some(next_grad_norm),
        direction_norm: decision.direction.norm(),
        alpha,
        ls_iters,
        ls_exhausted,
        sampled_loss: model.value,
        sampled_loss_next: Some(m_next),
        full_loss,
        model_stationary,
        function_stationary,
        elapsed_s: config.stopping.wall_clock_secs.map(|_| state.elapsed()),
    };
    state.x = x_new;
    state.k += 1;
    state.streak = if model_stationary { state.streak + 1 } else { 0 };
    Ok((
        record,
        StepOutcome {
            stalled: ls_exhausted && sample.is_full_ordered() && !model_stationary,
        },
    ))
}

fn check_divergence(x: &DVector<f64>, threshold: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AlasError::numeric("iterate diverged to non-finite values"));
    }
    let norm = x.norm();
    if norm > threshold {
        return Err(AlasError::numeric(format!("iterate norm {norm:e} exceeds divergence threshold")));
    }
    Ok(())
}

fn finish<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &RunConfig,
    method: Method,
    records: Vec<IterationRecord>,
    termination: Termination,
    x: DVector<f64>,
) -> std::result::Result<RunTrace, RunFailure> {
    let mut trace = RunTrace {
        config: config.clone(),
        method,
        records,
        termination,
        final_point: x,
        final_full_loss: None,
    };
    match full_value(problem, &trace.final_point) {
        Ok(f) => {
            trace.final_full_loss = Some(f);
            Ok(trace)
        }
        Err(error) => {
            trace.termination = Termination::NumericFailure;
            Err(RunFailure {
                error,
                partial: Box::new(trace),
            })
        }
    }
}

fn fail(config: &RunConfig, method: Method, records: Vec<IterationRecord>, x: DVector<f64>, error: AlasError) -> RunFailure {
    RunFailure {
        error,
        partial: Box::new(RunTrace {
            config: config.clone(),
            method,
            records,
            termination: Termination::NumericFailure,
            final_point: x,
            final_full_loss: None,
        }),
    }
}

fn budget_reason(state: &AlasState, config: &RunConfig) -> Option<Termination> {
    if state.k >= config.stopping.max_iterations {
        return Some(Termination::MaxIterations);
    }
    if let Some(w) = config.stopping.wall_clock_secs {
        if state.elapsed() >= w {
            return Some(Termination::WallClock);
        }
    }
    None
}

fn bare_failure(config: &RunConfig, method: Method, x0: DVector<f64>, error: AlasError) -> RunFailure {
    fail(config, method, Vec::new(), x0, error)
}

/// Runs the method until the stationarity rule fires or a budget runs out.
pub fn run<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x0: DVector<f64>,
    config: &RunConfig,
) -> std::result::Result<RunTrace, RunFailure> {
    let method = Method::Alas;
    if let Err(e) = config.validate() {
        return Err(bare_failure(config, method, x0, e));
    }
    let mut state = match AlasState::new(problem, x0.clone(), config) {
        Ok(s) => s,
        Err(e) => return Err(bare_failure(config, method, x0, e)),
    };
    let mut records = Vec::new();
    loop {
        let (record, outcome) = match alas_step(&mut state, problem, config) {
            Ok(r) => r,
            Err(e) => return Err(fail(config, method, records, state.x, e)),
        };
        records.push(record);
        let reason = if config.stopping.consecutive.is_some_and(|j| state.streak > j) {
            Some(Termination::JConsecutiveStationary)
        } else if outcome.stalled {
            Some(Termination::LineSearchExhaustion)
        } else {
            budget_reason(&state, config)
        };
        if let Some(reason) = reason {
            return finish(problem, config, method, records, reason, state.x);
        }
    }
}

/// Constant-step minibatch gradient descent with the same sampling and
/// metrics as [`run`]. Records carry `ScaledGradient` with `α` equal to the
/// learning rate. The stationarity rule is not applied.
pub fn sgd_run<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    learning_rate: f64,
    x0: DVector<f64>,
    config: &RunConfig,
) -> std::result::Result<RunTrace, RunFailure> {
    let method = Method::Sgd { learning_rate };
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(bare_failure(
            config,
            method,
            x0,
            AlasError::invalid(format!("learning rate must be positive, got {learning_rate}")),
        ));
    }
    if let Err(e) = config.validate() {
        return Err(bare_failure(config, method, x0, e));
    }
    let mut state = match AlasState::new(problem, x0.clone(), config) {
        Ok(s) => s,
        Err(e) => return Err(bare_failure(config, method, x0, e)),
    };
    let mut records = Vec::new();
    loop {
        let step = |state: &mut AlasState| -> Result<IterationRecord> {
            let sample = state.draw()?;
            let (value, g) = model_value_gradient(problem, &state.x, &sample)?;
            let cadence = config.full_metrics_every > 0 && state.k % config.full_metrics_every == 0;
            let full_loss = if cadence { Some(full_value(problem, &state.x)?) } else { None };
            let x_new = &state.x - &g * learning_rate;
            check_divergence(&x_new, config.divergence_threshold)?;
            let record = IterationRecord {
                k: state.k,
                sample_digest: sample.digest(config.seed),
                sample_fraction: sample.fraction(),
                step_kind: StepKind::ScaledGradient,
                lambda_min: None,
                rayleigh: None,
                grad_norm: g.norm(),
                next_grad_norm: None,
                direction_norm: g.norm(),
                alpha: learning_rate,
                ls_iters: 0,
                ls_exhausted: false,
                sampled_loss: value,
                sampled_loss_next: None,
                full_loss,
                model_stationary: false,
                function_stationary: None,
                elapsed_s: config.stopping.wall_clock_secs.map(|_| state.elapsed()),
            };
            state.x = x_new;
            state.k += 1;
            Ok(record)
        };
        match step(&mut state) {
            Ok(r) => records.push(r),
            Err(e) => return Err(fail(config, method, records, state.x, e)),
        }
        if let Some(reason) = budget_reason(&state, config) {
            return finish(problem, config, method, records, reason, state.x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linesearch::decrease_condition;
    use crate::problem::{FnProblem, QuadraticComponents};
    use nalgebra::{dmatrix, dvector, DMatrix};

    fn full_theoretical(eps: f64) -> RunConfig {
        RunConfig {
            eps,
            ..RunConfig::new(Policy::Theoretical)
        }
    }

    fn saddle() -> QuadraticComponents {
        QuadraticComponents::new(vec![(dmatrix![1.0, 0.0; 0.0, -1.0], dvector![0.0, 0.0], 0.0)]).unwrap()
    }

    #[test]
    fn model_stationarity_examples() {
        assert!(model_stationarity_check(0.005, 1.0, 0.0, 0.01, 0.1));
        assert!(!model_stationarity_check(1.0, 1.0, 0.0, 0.01, 0.1));
        assert!(!model_stationarity_check(0.0, 0.0, -0.2, 0.01, 0.1));
    }

    #[test]
    fn function_stationarity_examples() {
        let bowl = QuadraticComponents::diagonal(&[1.0, 1.0]);
        let z = dvector![0.0, 0.0];
        assert!(function_stationarity_check(&bowl, &z, &z, 1e-8, 1e-8).unwrap());
        assert!(!function_stationarity_check(&saddle(), &z, &z, 0.1, 0.1).unwrap());
        assert!(function_stationarity_check(&bowl, &dvector![1.0, 0.0], &dvector![0.001, 0.0], 0.01, 0.1).unwrap());
    }

    #[test]
    fn quadratic_from_ones() {
        // λ_min = 2 is below ‖g‖^{1/2} ≈ 2.115, so the first step is regularized.
        let p = QuadraticComponents::diagonal(&[4.0, 2.0]);
        let t = run(&p, dvector![1.0, 1.0], &full_theoretical(1e-5)).unwrap();
        assert_eq!(t.records[0].step_kind, StepKind::RegularizedNewton);
        assert_eq!(t.termination, Termination::JConsecutiveStationary);
        assert!(t.records.len() <= 3);
        let g = evaluate_full(&p, &t.final_point).unwrap().gradient;
        assert!(g.norm() <= 1e-12);
    }

    #[test]
    fn newton_step_reaches_minimizer() {
        let p = QuadraticComponents::diagonal(&[4.0, 2.0]);
        let mut cfg = full_theoretical(1e-5);
        cfg.stopping.max_iterations = 1;
        let t = run(&p, dvector![0.1, 0.1], &cfg).unwrap();
        let r = &t.records[0];
        assert_eq!(r.step_kind, StepKind::Newton);
        assert_eq!(r.alpha, 1.0);
        assert!(t.final_point.norm() < 1e-15);
    }

    #[test]
    fn saddle_escape() {
        let p = saddle();
        let mut cfg = full_theoretical(1e-4);
        cfg.stopping.max_iterations = 1;
        let x0 = dvector![0.0, 1e-4];
        let t = run(&p, x0.clone(), &cfg).unwrap();
        assert_eq!(t.records[0].step_kind, StepKind::NegativeCurvature);
        assert!(full_value(&p, &t.final_point).unwrap() < full_value(&p, &x0).unwrap());
    }

    #[test]
    fn zero_step_advances_k() {
        let p = QuadraticComponents::diagonal(&[1.0, 3.0]);
        let mut cfg = full_theoretical(1e-5);
        cfg.stopping.consecutive = None;
        cfg.stopping.max_iterations = 2;
        let t = run(&p, dvector![0.0, 0.0], &cfg).unwrap();
        assert_eq!(t.records.len(), 2);
        assert!(t.records.iter().all(|r| r.step_kind == StepKind::ZeroStep && r.alpha == 0.0));
        assert_eq!(t.records[1].k, 1);
        assert_eq!(t.final_point, dvector![0.0, 0.0]);
    }

    #[test]
    fn exhausted_search_at_stationary_point_is_not_a_stall() {
        // Flat values with a tiny reported gradient: no step can satisfy the
        // decrease condition, but the point is model stationary.
        let p = FnProblem::new(1).with_component(|_| 0.0, |_| dvector![1e-9], |_| dmatrix![1.0]);
        let t = run(&p, dvector![0.0], &full_theoretical(1e-5)).unwrap();
        assert!(t.records.iter().all(|r| r.ls_exhausted && r.model_stationary));
        assert_eq!(t.termination, Termination::JConsecutiveStationary);

        // Same failure away from stationarity stops the run at once.
        let p = FnProblem::new(1).with_component(|_| 0.0, |_| dvector![1.0], |_| dmatrix![1.0]);
        let t = run(&p, dvector![0.0], &full_theoretical(1e-5)).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.termination, Termination::LineSearchExhaustion);
    }

    #[test]
    fn max_iterations_budget() {
        let p = saddle();
        let mut cfg = full_theoretical(1e-5);
        cfg.stopping.max_iterations = 5;
        cfg.divergence_threshold = f64::INFINITY;
        let t = run(&p, dvector![1.0, 1.0], &cfg).unwrap();
        assert_eq!(t.records.len(), 5);
        assert_eq!(t.termination, Termination::MaxIterations);
        assert!(t.records.iter().enumerate().all(|(i, r)| r.k == i as u64));
    }

    #[test]
    fn divergence_attaches_partial_trace() {
        let p = saddle();
        let mut cfg = full_theoretical(1e-5);
        cfg.divergence_threshold = 50.0;
        cfg.stopping.max_iterations = 10_000;
        let err = run(&p, dvector![0.0, 1.0], &cfg).unwrap_err();
        assert!(matches!(err.error, AlasError::NumericFailure { .. }));
        assert!(!err.partial.records.is_empty());
        assert_eq!(err.partial.termination, Termination::NumericFailure);
    }

    #[test]
    fn sgd_examples() {
        let p = QuadraticComponents::diagonal(&[1.0]);
        let mut cfg = full_theoretical(1e-5);
        cfg.stopping.max_iterations = 1;
        let t = sgd_run(&p, 0.1, dvector![1.0], &cfg).unwrap();
        assert!((t.final_point[0] - 0.9).abs() < 1e-15);
        assert_eq!(t.records[0].step_kind, StepKind::ScaledGradient);
        assert_eq!(t.records[0].alpha, 0.1);

        cfg.stopping.max_iterations = 200;
        let err = sgd_run(&p, 2.5, dvector![1.0], &cfg).unwrap_err();
        assert!(matches!(err.error, AlasError::NumericFailure { .. }));
        assert!(err.partial.records.len() < 200);

        assert!(sgd_run(&p, 0.0, dvector![1.0], &cfg).is_err());
    }

    #[test]
    fn sgd_single_component_step() {
        // f_1 = x², f_2 = (x − 2)²; sampling one of two with the sample forced to S = (1).
        let p = FnProblem::new(1)
            .with_component(|x| x[0] * x[0], |x| dvector![2.0 * x[0]], |_| DMatrix::from_element(1, 1, 2.0))
            .with_component(
                |x| (x[0] - 2.0).powi(2),
                |x| dvector![2.0 * (x[0] - 2.0)],
                |_| DMatrix::from_element(1, 1, 2.0),
            );
        let s = SampleSet::new(vec![0], 2).unwrap();
        let (_, g) = model_value_gradient(&p, &dvector![1.0], &s).unwrap();
        let x1 = dvector![1.0] - g * 0.1;
        assert!((x1[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn accepted_steps_satisfy_decrease() {
        let p = saddle();
        let mut cfg = full_theoretical(1e-5);
        cfg.stopping.max_iterations = 8;
        cfg.divergence_threshold = f64::INFINITY;
        let t = run(&p, dvector![0.5, 0.01], &cfg).unwrap();
        for r in &t.records {
            if r.step_kind != StepKind::ZeroStep && !r.ls_exhausted {
                assert!(decrease_condition(
                    cfg.line_search.condition,
                    r.sampled_loss_next.unwrap(),
                    r.sampled_loss,
                    r.alpha,
                    r.direction_norm,
                    cfg.line_search.eta
                ));
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let p = saddle();
        let mut cfg = full_theoretical(0.0);
        assert!(run(&p, dvector![0.0, 0.0], &cfg).is_err());
        cfg.eps = 1e-5;
        cfg.sampling.fraction = 0.0;
        assert!(run(&p, dvector![0.0, 0.0], &cfg).is_err());
        cfg.sampling.fraction = 1.0;
        assert!(run(&p, dvector![0.0], &cfg).is_err());
    }
}
