//! Search directions and the two step-selection policies.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};

/// Default eigensolver tolerance.
pub const EIG_TOL: f64 = 1e-10;

/// Sign-convention threshold: the first component above this magnitude is made positive.
const SIGN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StepKind {
    ZeroStep,
    NegativeCurvature,
    Newton,
    RegularizedNewton,
    /// Practical policy only.
    GradientNegativeCurvature,
    /// Practical policy only.
    ScaledGradient,
}

impl StepKind {
    pub const ALL: [StepKind; 6] = [
        StepKind::ZeroStep,
        StepKind::NegativeCurvature,
        StepKind::Newton,
        StepKind::RegularizedNewton,
        StepKind::GradientNegativeCurvature,
        StepKind::ScaledGradient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::ZeroStep => "ZeroStep",
            StepKind::NegativeCurvature => "NegativeCurvature",
            StepKind::Newton => "Newton",
            StepKind::RegularizedNewton => "RegularizedNewton",
            StepKind::GradientNegativeCurvature => "GradientNegativeCurvature",
            StepKind::ScaledGradient => "ScaledGradient",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepKind {
    type Err = AlasError;

    fn from_str(s: &str) -> Result<Self> {
        StepKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AlasError::invalid(format!("unknown step kind `{s}`")))
    }
}

/// Which step-selection rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Eigenvalue-driven rule with cubic decrease.
    Theoretical,
    /// Rayleigh-quotient first, eigenvalue fallback, quadratic decrease.
    Practical,
}

impl FromStr for Policy {
    type Err = AlasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(Policy::Theoretical),
            "practical" => Ok(Policy::Practical),
            _ => Err(AlasError::invalid(format!("unknown policy `{s}`"))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Theoretical => "theoretical",
            Policy::Practical => "practical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub kind: StepKind,
    pub direction: DVector<f64>,
    pub lambda_min: Option<f64>,
    pub eigvec: Option<DVector<f64>>,
    pub rayleigh: Option<f64>,
    pub eps: f64,
}

fn check_square(h: &DMatrix<f64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(AlasError::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    if h.nrows() == 0 {
        return Err(AlasError::invalid("empty matrix"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(AlasError::numeric("matrix has non-finite entries"));
    }
    Ok(())
}

fn symmetrized(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(h)?;
    let asym = (h - h.transpose()).amax();
    if asym > SIGN_EPS * h.amax().max(1.0) {
        return Err(AlasError::invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok((h + h.transpose()) * 0.5)
}

fn apply_sign_convention(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().copied().find(|c| c.abs() > SIGN_EPS) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Smallest eigenvalue and a unit eigenvector whose first non-negligible
/// component is positive.
pub fn min_eigenpair(h: &DMatrix<f64>, tol: f64) -> Result<(f64, DVector<f64>)> {
    let hs = symmetrized(h)?;
    let eig = SymmetricEigen::new(hs.clone());
    let idx = eig.eigenvalues.imin();
    let lambda = eig.eigenvalues[idx];
    let mut v = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    if !lambda.is_finite() || norm == 0.0 || !norm.is_finite() {
        return Err(AlasError::numeric("eigendecomposition failed"));
    }
    v /= norm;
    apply_sign_convention(&mut v);
    let scale = hs.norm().max(1.0);
    let residual = (&hs * &v - &v * lambda).norm();
    if residual > tol * scale {
        return Err(AlasError::numeric(format!(
            "eigenpair residual {residual:e} exceeds tolerance"
        )));
    }
    Ok((lambda, v))
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm(h: &DMatrix<f64>) -> Result<f64> {
    let hs = symmetrized(h)?;
    Ok(hs.symmetric_eigenvalues().amax())
}

/// `gᵀHg / ‖g‖²`.
pub fn rayleigh_quotient(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<f64> {
    check_square(h)?;
    if g.len() != h.nrows() {
        return Err(AlasError::DimensionMismatch {
            expected: h.nrows(),
            got: g.len(),
        });
    }
    let gg = g.norm_squared();
    if gg == 0.0 {
        return Err(AlasError::invalid("Rayleigh quotient of a zero vector"));
    }
    Ok(g.dot(&(h * g)) / gg)
}

/// Solves `(H + shift·I) d = −g` by Cholesky with one refinement step.
fn shifted_solve(h: &DMatrix<f64>, g: &DVector<f64>, shift: f64) -> Result<DVector<f64>> {
    let n = h.nrows();
    let a = h + DMatrix::identity(n, n) * shift;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| AlasError::numeric("Cholesky factorization failed"))?;
    let rhs = -g;
    let mut d = chol.solve(&rhs);
    let r = &rhs - &a * &d;
    d += chol.solve(&r);
    if d.iter().any(|v| !v.is_finite()) {
        return Err(AlasError::numeric("linear solve produced non-finite direction"));
    }
    Ok(d)
}

/// Direction for a given step kind.
///
/// `lambda` and `v` are required for [`StepKind::NegativeCurvature`];
/// `rayleigh` for [`StepKind::GradientNegativeCurvature`]. `v` is assumed to
/// follow the [`min_eigenpair`] sign convention.
pub fn compute_direction(
    kind: StepKind,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lambda: Option<f64>,
    v: Option<&DVector<f64>>,
    rayleigh: Option<f64>,
    eps: f64,
) -> Result<DVector<f64>> {
    check_square(h)?;
    if g.len() != h.nrows() {
        return Err(AlasError::DimensionMismatch {
            expected: h.nrows(),
            got: g.len(),
        });
    }
    let gnorm = g.norm();
    match kind {
        StepKind::ZeroStep => Ok(DVector::zeros(g.len())),
        StepKind::NegativeCurvature => {
            let lambda = lambda.ok_or_else(|| AlasError::invalid("negative curvature step needs λ"))?;
            let v = v.ok_or_else(|| AlasError::invalid("negative curvature step needs an eigenvector"))?;
            if lambda >= 0.0 {
                return Err(AlasError::invalid("negative curvature step needs λ < 0"));
            }
            let mut d = v * (-lambda / v.norm());
            if d.dot(g) > 0.0 {
                d.neg_mut();
            }
            Ok(d)
        }
        StepKind::Newton => shifted_solve(h, g, 0.0),
        StepKind::RegularizedNewton => shifted_solve(h, g, gnorm.sqrt() + eps.sqrt()),
        StepKind::GradientNegativeCurvature => {
            let r = rayleigh.ok_or_else(|| AlasError::invalid("gradient step needs the Rayleigh quotient"))?;
            if r >= 0.0 || gnorm == 0.0 {
                return Err(AlasError::invalid("gradient negative curvature step needs R < 0 and g ≠ 0"));
            }
            Ok(g * (r / gnorm))
        }
        StepKind::ScaledGradient => {
            if gnorm == 0.0 {
                return Err(AlasError::invalid("scaled gradient step needs g ≠ 0"));
            }
            Ok(g / -gnorm.sqrt())
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(AlasError::invalid(format!("tolerance must be positive, got {eps}")));
    }
    Ok(())
}

// Shared eigenvalue branch. `nc_threshold` is −ε^{1/2} for the theoretical
// rule and −‖g‖^{1/2} for the practical one.
fn eigen_branch(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    eps: f64,
    nc_threshold: f64,
    rayleigh: Option<f64>,
) -> Result<StepDecision> {
    let (lambda, v) = min_eigenpair(h, EIG_TOL)?;
    let gnorm = g.norm();
    let kind = if lambda >= -eps.sqrt() && gnorm == 0.0 {
        StepKind::ZeroStep
    } else if lambda < nc_threshold {
        StepKind::NegativeCurvature
    } else if lambda > gnorm.sqrt() {
        StepKind::Newton
    } else {
        StepKind::RegularizedNewton
    };
    let direction = compute_direction(kind, h, g, Some(lambda), Some(&v), rayleigh, eps)?;
    Ok(StepDecision {
        kind,
        direction,
        lambda_min: Some(lambda),
        eigvec: Some(v),
        rayleigh,
        eps,
    })
}

pub fn select_step_theoretical(g: &DVector<f64>, h: &DMatrix<f64>, eps: f64) -> Result<StepDecision> {
    check_eps(eps)?;
    eigen_branch(h, g, eps, -eps.sqrt(), None)
}

pub fn select_step_practical(g: &DVector<f64>, h: &DMatrix<f64>, eps: f64) -> Result<StepDecision> {
    check_eps(eps)?;
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return eigen_branch(h, g, eps, -gnorm.sqrt(), None);
    }
    let r = rayleigh_quotient(h, g)?;
    let root = gnorm.sqrt();
    let kind = if r < -root {
        StepKind::GradientNegativeCurvature
    } else if r < root && gnorm >= eps {
        StepKind::ScaledGradient
    } else {
        return eigen_branch(h, g, eps, -root, Some(r));
    };
    let direction = compute_direction(kind, h, g, None, None, Some(r), eps)?;
    Ok(StepDecision {
        kind,
        direction,
        lambda_min: None,
        eigvec: None,
        rayleigh: Some(r),
        eps,
    })
}

pub fn select_step(policy: Policy, g: &DVector<f64>, h: &DMatrix<f64>, eps: f64) -> Result<StepDecision> {
    match policy {
        Policy::Theoretical => select_step_theoretical(g, h, eps),
        Policy::Practical => select_step_practical(g, h, eps),
    }
}
