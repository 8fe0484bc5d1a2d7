//! Finite-sum problems and their subsampled models.
//!
//! Component indices are zero-based throughout the crate: a problem with `N`
//! components exposes indices `0..N`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};
use crate::step::spectral_norm;

/// Value, gradient and Hessian of a single component at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Oracle for `f(x) = (1/N) Σ_i f_i(x)`.
///
/// Implementations must be deterministic: repeated calls with the same `(i, x)`
/// return identical results. Hessians must be symmetric.
pub trait FiniteSumProblem: Sync {
    /// Dimension `n` of the optimization variable.
    fn dim(&self) -> usize;

    /// Number of components `N`.
    fn num_components(&self) -> usize;

    /// Value, gradient and Hessian of component `i`.
    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval;

    /// Value and gradient of component `i`. Override when cheaper than [`evaluate`](Self::evaluate).
    fn value_gradient(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let e = self.evaluate(i, x);
        (e.value, e.gradient)
    }

    /// Value of component `i`. Override when cheaper than [`evaluate`](Self::evaluate).
    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.value_gradient(i, x).0
    }
}

impl<P: FiniteSumProblem + ?Sized> FiniteSumProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
        (**self).evaluate(i, x)
    }
    fn value_gradient(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (**self).value_gradient(i, x)
    }
    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        (**self).value(i, x)
    }
}

/// Ordered sequence of component indices drawn for one iteration.
///
/// Repeats are allowed (sampling with replacement) and count with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    indices: Vec<usize>,
    num_components: usize,
}

impl SampleSet {
    pub fn new(indices: Vec<usize>, num_components: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(AlasError::invalid("sample set is empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= num_components) {
            return Err(AlasError::invalid(format!(
                "sample index {bad} out of range for {num_components} components"
            )));
        }
        Ok(Self {
            indices,
            num_components,
        })
    }

    /// Every index exactly once, in ascending order.
    pub fn full(num_components: usize) -> Result<Self> {
        Self::new((0..num_components).collect(), num_components)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    /// `|S| / N`. Exceeds one only for with-replacement samples larger than `N`.
    pub fn fraction(&self) -> f64 {
        self.indices.len() as f64 / self.num_components as f64
    }

    /// True when the sample is exactly `0..N` in ascending order.
    pub fn is_full_ordered(&self) -> bool {
        self.indices.len() == self.num_components
            && self.indices.iter().enumerate().all(|(p, &i)| p == i)
    }

    /// 64-bit FNV-1a digest of the index sequence, seeded.
    pub fn digest(&self, seed: u64) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
        for &i in &self.indices {
            for b in (i as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        }
        h
    }
}

/// `m(x;S)`, `g(x;S)` and `H(x;S)` together with the sample that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampledModel {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub sample: SampleSet,
}

// Components are evaluated in parallel in blocks of this size, then reduced
// sequentially in sample order. Results do not depend on the thread count.
const BLOCK: usize = 128;
const PAR_THRESHOLD: usize = 32;

fn map_ordered<T, F>(indices: &[usize], f: F, mut fold: impl FnMut(usize, T) -> Result<()>) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if indices.len() < PAR_THRESHOLD {
        for &i in indices {
            fold(i, f(i))?;
        }
        return Ok(());
    }
    for block in indices.chunks(BLOCK) {
        let evals: Vec<T> = block.par_iter().map(|&i| f(i)).collect();
        for (&i, e) in block.iter().zip(evals) {
            fold(i, e)?;
        }
    }
    Ok(())
}

fn check_point<P: FiniteSumProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(AlasError::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AlasError::invalid("point has non-finite entries"));
    }
    Ok(())
}

fn check_sample<P: FiniteSumProblem + ?Sized>(problem: &P, sample: &SampleSet) -> Result<()> {
    if sample.num_components() != problem.num_components() {
        return Err(AlasError::invalid(format!(
            "sample drawn for {} components, problem has {}",
            sample.num_components(),
            problem.num_components()
        )));
    }
    Ok(())
}

fn non_finite(index: usize, what: &str) -> AlasError {
    AlasError::NumericFailure {
        index: Some(index),
        what: format!("non-finite {what}"),
    }
}

/// Averages of component values, gradients and Hessians over `sample`.
///
/// Sums are accumulated in ascending sample position and divided by `|S|` at
/// the end, so the full ordered sample reproduces the objective bit for bit.
pub fn evaluate_model<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    sample: &SampleSet,
) -> Result<SubsampledModel> {
    check_point(problem, x)?;
    check_sample(problem, sample)?;
    let n = problem.dim();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(n);
    let mut hessian = DMatrix::zeros(n, n);
    map_ordered(
        sample.indices(),
        |i| problem.evaluate(i, x),
        |i, e| {
            if !e.value.is_finite() {
                return Err(non_finite(i, "value"));
            }
            if e.gradient.iter().any(|v| !v.is_finite()) {
                return Err(non_finite(i, "gradient"));
            }
            if e.hessian.iter().any(|v| !v.is_finite()) {
                return Err(non_finite(i, "Hessian"));
            }
            value += e.value;
            gradient += &e.gradient;
            hessian += &e.hessian;
            Ok(())
        },
    )?;
    let count = sample.len() as f64;
    Ok(SubsampledModel {
        value: value / count,
        gradient: gradient / count,
        hessian: hessian / count,
        sample: sample.clone(),
    })
}

/// `m(x;S)` only.
pub fn model_value<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    sample: &SampleSet,
) -> Result<f64> {
    check_point(problem, x)?;
    check_sample(problem, sample)?;
    let mut value = 0.0;
    map_ordered(
        sample.indices(),
        |i| problem.value(i, x),
        |i, v| {
            if !v.is_finite() {
                return Err(non_finite(i, "value"));
            }
            value += v;
            Ok(())
        },
    )?;
    Ok(value / sample.len() as f64)
}

/// `(m(x;S), g(x;S))`.
pub fn model_value_gradient<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    sample: &SampleSet,
) -> Result<(f64, DVector<f64>)> {
    check_point(problem, x)?;
    check_sample(problem, sample)?;
    let mut value = 0.0;
    let mut gradient = DVector::zeros(problem.dim());
    map_ordered(
        sample.indices(),
        |i| problem.value_gradient(i, x),
        |i, (v, g)| {
            if !v.is_finite() {
                return Err(non_finite(i, "value"));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(non_finite(i, "gradient"));
            }
            value += v;
            gradient += &g;
            Ok(())
        },
    )?;
    let count = sample.len() as f64;
    Ok((value / count, gradient / count))
}

/// Full objective `f`, `∇f`, `∇²f` (the model over `0..N`).
pub fn evaluate_full<P: FiniteSumProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> Result<SubsampledModel> {
    evaluate_model(problem, x, &SampleSet::full(problem.num_components())?)
}

/// Full objective value `f(x)`.
pub fn full_value<P: FiniteSumProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> Result<f64> {
    model_value(problem, x, &SampleSet::full(problem.num_components())?)
}

/// Accuracy thresholds `(δ_f, δ_g, δ_H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyThresholds {
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
}

/// Observed model errors at `x` and `x_next` against the full objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub value_error: f64,
    pub value_error_next: f64,
    pub gradient_error: f64,
    pub gradient_error_next: f64,
    /// Spectral norm of `∇²f(x) − H(x;S)`.
    pub hessian_error: f64,
    pub thresholds: AccuracyThresholds,
    pub accurate: bool,
}

/// Compares a model with the full objective at both ends of a step.
///
/// `model` must be evaluated at `x`; `next_gradient` is `g(x_next; S)` for the
/// same sample. Only the two endpoints are checked.
pub fn check_accuracy<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    x_next: &DVector<f64>,
    model: &SubsampledModel,
    next_gradient: &DVector<f64>,
    thresholds: AccuracyThresholds,
) -> Result<AccuracyReport> {
    let n = problem.dim();
    for len in [x_next.len(), model.gradient.len(), next_gradient.len()] {
        if len != n {
            return Err(AlasError::DimensionMismatch { expected: n, got: len });
        }
    }
    if model.hessian.nrows() != n || model.hessian.ncols() != n {
        return Err(AlasError::DimensionMismatch {
            expected: n,
            got: model.hessian.nrows(),
        });
    }
    let full = evaluate_full(problem, x)?;
    let (f_next, grad_next) = model_value_gradient(problem, x_next, &SampleSet::full(problem.num_components())?)?;
    let m_next = model_value(problem, x_next, &model.sample)?;

    let value_error = (full.value - model.value).abs();
    let value_error_next = (f_next - m_next).abs();
    let gradient_error = (&full.gradient - &model.gradient).norm();
    let gradient_error_next = (&grad_next - next_gradient).norm();
    let hessian_error = spectral_norm(&(&full.hessian - &model.hessian))?;

    let accurate = value_error <= thresholds.value
        && value_error_next <= thresholds.value
        && gradient_error <= thresholds.gradient
        && gradient_error_next <= thresholds.gradient
        && hessian_error <= thresholds.hessian;

    Ok(AccuracyReport {
        value_error,
        value_error_next,
        gradient_error,
        gradient_error_next,
        hessian_error,
        thresholds,
        accurate,
    })
}

/// Components `f_i(x) = ½ xᵀA_i x + b_iᵀx + c_i` with symmetric `A_i`.
#[derive(Debug, Clone)]
pub struct QuadraticComponents {
    dim: usize,
    components: Vec<(DMatrix<f64>, DVector<f64>, f64)>,
}

impl QuadraticComponents {
    pub fn new(components: Vec<(DMatrix<f64>, DVector<f64>, f64)>) -> Result<Self> {
        let dim = components
            .first()
            .map(|(a, _, _)| a.nrows())
            .ok_or_else(|| AlasError::invalid("no components"))?;
        for (a, b, _) in &components {
            if a.nrows() != dim || a.ncols() != dim || b.len() != dim {
                return Err(AlasError::invalid("inconsistent component dimensions"));
            }
            if (a - a.transpose()).amax() > 1e-12 {
                return Err(AlasError::invalid("component matrix is not symmetric"));
            }
        }
        Ok(Self { dim, components })
    }

    /// Single component `½ xᵀ diag(d) x`.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        Self {
            dim: n,
            components: vec![(a, DVector::zeros(n), 0.0)],
        }
    }
}

impl FiniteSumProblem for QuadraticComponents {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
        let (a, b, c) = &self.components[i];
        let ax = a * x;
        ComponentEval {
            value: 0.5 * x.dot(&ax) + b.dot(x) + c,
            gradient: ax + b,
            hessian: a.clone(),
        }
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Problem built from closures, one triple per component.
pub struct FnProblem {
    dim: usize,
    components: Vec<(Box<ValueFn>, Box<GradFn>, Box<HessFn>)>,
}

impl FnProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
        }
    }

    pub fn with_component(
        mut self,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        hessian: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.components
            .push((Box::new(value), Box::new(gradient), Box::new(hessian)));
        self
    }
}

impl FiniteSumProblem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
        let (v, g, h) = &self.components[i];
        ComponentEval {
            value: v(x),
            gradient: g(x),
            hessian: h(x),
        }
    }

    fn value_gradient(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (v, g, _) = &self.components[i];
        (v(x), g(x))
    }

    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        (self.components[i].0)(x)
    }
}
