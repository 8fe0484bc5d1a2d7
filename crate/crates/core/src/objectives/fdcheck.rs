//! Central-difference verification of gradients and Hessians.

use nalgebra::DVector;

use crate::error::{AlasError, Result};
use crate::problem::{evaluate_full, full_value, model_value_gradient, FiniteSumProblem, SampleSet};

/// Largest componentwise discrepancy, measured as `|a − fd| / max(1, |fd|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub gradient_error: f64,
    pub hessian_error: f64,
}

fn rel(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / fd.abs().max(1.0)
}

/// Compares the analytic gradient of `f` with central differences of `f`, and
/// the analytic Hessian with central differences of the analytic gradient.
pub fn finite_difference_check<P: FiniteSumProblem + ?Sized>(problem: &P, x: &DVector<f64>, h: f64) -> Result<FdReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(AlasError::invalid(format!("step must be positive, got {h}")));
    }
    let full = evaluate_full(problem, x)?;
    let all = SampleSet::full(problem.num_components())?;
    let mut gradient_error: f64 = 0.0;
    let mut hessian_error: f64 = 0.0;
    for j in 0..x.len() {
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        let fd = (full_value(problem, &xp)? - full_value(problem, &xm)?) / (2.0 * h);
        gradient_error = gradient_error.max(rel(full.gradient[j], fd));
        let gp = model_value_gradient(problem, &xp, &all)?.1;
        let gm = model_value_gradient(problem, &xm, &all)?.1;
        for i in 0..x.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            hessian_error = hessian_error.max(rel(full.hessian[(i, j)], fd));
        }
    }
    Ok(FdReport {
        gradient_error,
        hessian_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ComponentEval, FnProblem, QuadraticComponents};
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn quadratic_is_exact() {
        let p = QuadraticComponents::diagonal(&[1.0, 1.0, 1.0]);
        let r = finite_difference_check(&p, &dvector![0.3, -1.2, 2.0], 1e-5).unwrap();
        assert!(r.gradient_error <= 1e-9 && r.hessian_error <= 1e-9, "{r:?}");
    }

    #[test]
    fn quartic_error_is_second_order() {
        let p = FnProblem::new(1).with_component(
            |x| x[0].powi(4),
            |x| dvector![4.0 * x[0].powi(3)],
            |x| DMatrix::from_element(1, 1, 12.0 * x[0] * x[0]),
        );
        let e1 = finite_difference_check(&p, &dvector![1.0], 1e-2).unwrap().gradient_error;
        let e2 = finite_difference_check(&p, &dvector![1.0], 5e-3).unwrap().gradient_error;
        // Truncation error 4h² against a derivative of about 4.
        assert!((e1 - 1e-4).abs() < 1e-7);
        assert!((e1 / e2 - 4.0).abs() < 1e-3);
    }

    struct Doubled(QuadraticComponents);

    impl FiniteSumProblem for Doubled {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn num_components(&self) -> usize {
            self.0.num_components()
        }
        fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
            let mut e = self.0.evaluate(i, x);
            e.gradient *= 2.0;
            e
        }
    }

    #[test]
    fn injected_fault_detected() {
        let p = Doubled(QuadraticComponents::diagonal(&[1.0, 1.0]));
        let r = finite_difference_check(&p, &dvector![1.0, 0.5], 1e-5).unwrap();
        assert!((r.gradient_error - 1.0).abs() < 1e-6);
    }
}
