//! Closed-form constants, sample-size bounds and complexity bounds.
//!
//! Everything here is a pure function of its inputs. Values are returned
//! untruncated: sample fractions may exceed one and iteration bounds may be
//! astronomically large.

use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};

/// Problem-dependent constants supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Gradient Lipschitz constant `L`.
    pub l: f64,
    /// Hessian Lipschitz constant `L_H`.
    pub l_h: f64,
    /// Bound on gradient norms `U_g`.
    pub u_g: f64,
    /// Bound on Hessian norms `U_H`.
    pub u_h: f64,
    /// Bound on component values `f_up`.
    pub f_up: f64,
    /// Lower bound on the objective.
    pub f_low: f64,
    /// Objective value at the starting point.
    pub f0: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.l), ("L_H", self.l_h), ("U_g", self.u_g), ("U_H", self.u_h), ("f_up", self.f_up)] {
            positive(name, v)?;
        }
        if !(self.f0 >= self.f_low) {
            return Err(AlasError::invalid("f0 must be at least f_low"));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AlasError::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(AlasError::invalid(format!("{name} must lie in (0,1), got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Constants {
    pub c_nc: f64,
    pub c_n: f64,
    pub c_rn: f64,
    pub c: f64,
    pub j_nc: f64,
    pub j_n: f64,
    pub j_rn: f64,
    pub j_bar: f64,
}

fn log_base_plus(theta: f64, arg: f64) -> f64 {
    (arg.ln() / theta.ln()).max(0.0)
}

/// Step-length constants and backtracking bounds.
pub fn lemma3_constants(theta: f64, eta: f64, l_h: f64, u_g: f64, eps: f64) -> Result<Lemma3Constants> {
    open_unit("theta", theta)?;
    positive("eta", eta)?;
    positive("L_H", l_h)?;
    positive("U_g", u_g)?;
    positive("eps", eps)?;
    let s = l_h + eta;
    let c_nc = 3.0 * theta / s;
    let c_n = (2.0 / l_h).sqrt().min(3.0 * theta / s);
    let c_rn = (1.0 / (1.0 + (1.0 + l_h / 2.0).sqrt())).min(6.0 * theta / s);
    let j_nc = log_base_plus(theta, 3.0 / s);
    let j_n = log_base_plus(theta, (3.0 / s).sqrt() * eps.sqrt() / u_g.sqrt());
    let j_rn = log_base_plus(theta, 6.0 / s * eps / u_g);
    Ok(Lemma3Constants {
        c_nc,
        c_n,
        c_rn,
        c: c_nc.min(c_n).min(c_rn),
        j_nc,
        j_n,
        j_rn,
        j_bar: j_nc.max(j_n).max(j_rn),
    })
}

/// `ĉ = η c³ / 24`.
pub fn c_hat(eta: f64, c: f64) -> f64 {
    eta * c * c * c / 24.0
}

/// `U_L = U_g·max{U_H, U_g^{1/2}} + (L/2)·max{U_H², U_g}`.
pub fn u_l(u_g: f64, u_h: f64, l: f64) -> f64 {
    u_g * u_h.max(u_g.sqrt()) + 0.5 * l * (u_h * u_h).max(u_g)
}

/// `ρ(t,q) = (1−q)U_L / ((1−q)U_L + q η t³ / 24)`, with `ρ(0,1) = 0`.
pub fn rho(t: f64, q: f64, u_l: f64, eta: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(AlasError::invalid(format!("t must be nonnegative, got {t}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(AlasError::invalid(format!("q must lie in [0,1], got {q}")));
    }
    positive("U_L", u_l)?;
    positive("eta", eta)?;
    let num = (1.0 - q) * u_l;
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (num + q * eta * t * t * t / 24.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleBoundKind {
    Hessian,
    Function,
    Gradient,
}

/// Sample fraction sufficient for the requested accuracy with probability `p`
/// under uniform sampling with replacement.
///
/// Hessian: `16L²/δ_H · ln(2N/(1−p)) / N`.
/// Function: `16 f_up²/δ_f · ln(2/(1−p)) / N`.
/// Gradient: `U_g²/δ_g² · (1 + √(8 ln(1/(1−p))))² / N`.
pub fn sample_bound(kind: SampleBoundKind, n: u64, constants: &ProblemConstants, delta: f64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(AlasError::invalid("N must be at least 1"));
    }
    open_unit("p", p)?;
    if !(delta > 0.0) {
        return Err(AlasError::invalid(format!("delta must be positive, got {delta}")));
    }
    let nf = n as f64;
    Ok(match kind {
        SampleBoundKind::Hessian => 16.0 * constants.l * constants.l / delta * (2.0 * nf / (1.0 - p)).ln() / nf,
        SampleBoundKind::Function => 16.0 * constants.f_up * constants.f_up / delta * (2.0 / (1.0 - p)).ln() / nf,
        SampleBoundKind::Gradient => {
            let r = 1.0 + (8.0 * (1.0 / (1.0 - p)).ln()).sqrt();
            constants.u_g * constants.u_g / (delta * delta) * r * r / nf
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiEpsilon {
    pub p_hat: f64,
    /// `ρ(c ε^{1/2}, p̂)`
    pub rho_term: f64,
    pub function_term: f64,
    pub gradient_term: f64,
    pub hessian_term: f64,
    /// Maximum of the four terms.
    pub value: f64,
}

/// Uniform-sampling fraction that guarantees the expected-decrease condition.
///
/// Uses `p̂ = (p+3)/4`, `δ_g = κ_g ε` and `δ_H = κ_H ε^{1/2}`. The function
/// term carries the printed coefficient 344.
#[allow(clippy::too_many_arguments)]
pub fn pi_epsilon(
    eps: f64,
    p: f64,
    n: u64,
    constants: &ProblemConstants,
    kappa_g: f64,
    kappa_h: f64,
    theta: f64,
    eta: f64,
) -> Result<PiEpsilon> {
    open_unit("p", p)?;
    open_unit("kappa_g", kappa_g)?;
    open_unit("kappa_h", kappa_h)?;
    if n == 0 {
        return Err(AlasError::invalid("N must be at least 1"));
    }
    let l3 = lemma3_constants(theta, eta, constants.l_h, constants.u_g, eps)?;
    let c = l3.c;
    let p_hat = (p + 3.0) / 4.0;
    let nf = n as f64;
    let ul = u_l(constants.u_g, constants.u_h, constants.l);
    let rho_term = rho(c * eps.sqrt(), p_hat, ul, eta)?;
    let function_term =
        344.0 * constants.f_up * constants.f_up / (eta * c * c * c * eps.powf(1.5)) * (2.0 / (1.0 - p_hat)).ln() / nf;
    let gradient_term = sample_bound(SampleBoundKind::Gradient, n, constants, kappa_g * eps, p_hat)?;
    let hessian_term = sample_bound(SampleBoundKind::Hessian, n, constants, kappa_h * eps.sqrt(), p_hat)?;
    let value = rho_term.max(function_term).max(gradient_term).max(hessian_term);
    Ok(PiEpsilon {
        p_hat,
        rho_term,
        function_term,
        gradient_term,
        hessian_term,
        value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingRegime {
    Full,
    Subsampled,
}

/// Inputs of [`complexity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInputs {
    pub f0: f64,
    pub f_low: f64,
    pub eta: f64,
    pub c: f64,
    pub eps: f64,
    pub p: f64,
    pub regime: SamplingRegime,
    pub j: u32,
    pub kappa_g: f64,
    pub kappa_h: f64,
    pub j_bar: f64,
    /// `U_L`, needed only for the subsampled regime.
    pub u_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBounds {
    pub c_hat: f64,
    pub eps_hat: f64,
    /// Bound on `E[T_ε]`.
    pub t_eps: f64,
    /// Bound on `E[T^m_{ε,J}]`.
    pub t_eps_j: f64,
    /// Expected derivative evaluations; equals `t_eps`.
    pub derivative_evals: f64,
    /// Expected function evaluations, `(1 + j̄)·t_eps`.
    pub function_evals: f64,
}

/// `ε̂ = min{(1−κ_g)/(1+κ_g), (1−κ_H)²/(1+κ_H)²}·ε`.
pub fn eps_hat(eps: f64, kappa_g: f64, kappa_h: f64) -> f64 {
    let a = (1.0 - kappa_g) / (1.0 + kappa_g);
    let b = ((1.0 - kappa_h) / (1.0 + kappa_h)).powi(2);
    a.min(b) * eps
}

/// Expected iteration and evaluation bounds.
pub fn complexity_report(inp: &ComplexityInputs) -> Result<ComplexityBounds> {
    if !(inp.f0 >= inp.f_low) {
        return Err(AlasError::invalid("f0 must be at least f_low"));
    }
    positive("eta", inp.eta)?;
    positive("c", inp.c)?;
    positive("eps", inp.eps)?;
    if !(inp.j_bar >= 0.0) {
        return Err(AlasError::invalid("j_bar must be nonnegative"));
    }
    let ch = c_hat(inp.eta, inp.c);
    let gap = inp.f0 - inp.f_low;
    let jp1 = inp.j as f64 + 1.0;
    let eh = eps_hat(inp.eps, inp.kappa_g, inp.kappa_h);
    let (t_eps, t_eps_j) = match inp.regime {
        SamplingRegime::Full => {
            let base = gap / ch * inp.eps.powf(-1.5);
            (base + 1.0, base + jp1)
        }
        SamplingRegime::Subsampled => {
            open_unit("p", inp.p)?;
            open_unit("kappa_g", inp.kappa_g)?;
            open_unit("kappa_h", inp.kappa_h)?;
            let r = rho(inp.c * inp.eps.sqrt(), inp.p, inp.u_l, inp.eta)?;
            let t = gap / ch / r * inp.eps.powf(-1.5) + 1.0;
            let rh = rho(inp.c * eh.sqrt(), inp.p, inp.u_l, inp.eta)?;
            let tj = inp.p.powf(-jp1) * (gap / ch / rh * eh.powf(-1.5) + jp1);
            (t, tj)
        }
    };
    Ok(ComplexityBounds {
        c_hat: ch,
        eps_hat: eh,
        t_eps,
        t_eps_j,
        derivative_evals: t_eps,
        function_evals: (1.0 + inp.j_bar) * t_eps,
    })
}

/// Tolerances `((1+κ_g)ε, (1+κ_H)ε^{1/2})` at which model stationarity of an
/// accurate model implies function stationarity.
pub fn inflate_tolerances(eps: f64, kappa_g: f64, kappa_h: f64) -> Result<(f64, f64)> {
    if !(kappa_g >= 0.0 && kappa_h >= 0.0) {
        return Err(AlasError::invalid("kappa values must be nonnegative"));
    }
    Ok(((1.0 + kappa_g) * eps, (1.0 + kappa_h) * eps.sqrt()))
}

/// Probability that the `J+1`-consecutive rule stops at a stationary point:
/// `1 − (1−p)^{J+1}`.
pub fn stop_probability(p: f64, j: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AlasError::invalid(format!("p must lie in [0,1], got {p}")));
    }
    Ok(1.0 - (1.0 - p).powi(j as i32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_constants() -> ProblemConstants {
        ProblemConstants {
            l: 1.0,
            l_h: 1.0,
            u_g: 1.0,
            u_h: 1.0,
            f_up: 1.0,
            f_low: 0.0,
            f0: 1.0,
        }
    }

    #[test]
    fn step_constants_worked_values() {
        let k = lemma3_constants(0.9, 0.01, 1.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(k.c_nc, 2.7 / 1.01, max_relative = 1e-15);
        assert_relative_eq!(k.c_n, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(k.c_rn, 1.0 / (1.0 + 1.5f64.sqrt()), max_relative = 1e-15);
        assert_eq!(k.c, k.c_rn);
        assert_eq!(k.j_bar, k.j_nc.max(k.j_n).max(k.j_rn));
    }

    #[test]
    fn step_constants_clamp_to_zero() {
        // 3/(L_H+η) > 1 makes log_θ negative.
        let k = lemma3_constants(0.5, 0.01, 0.5, 1.0, 1e-4).unwrap();
        assert_eq!(k.j_nc, 0.0);
        assert!(k.j_rn > 0.0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(2.0, 1.0, 3.0, 0.1).unwrap(), 0.0);
        assert_eq!(rho(2.0, 0.0, 3.0, 0.1).unwrap(), 1.0);
        assert_eq!(rho(1.0, 0.5, 1.0, 24.0).unwrap(), 0.5);
        assert_eq!(rho(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(rho(-1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn u_l_formula() {
        assert_eq!(u_l(4.0, 1.0, 2.0), 4.0 * 2.0 + 4.0);
        assert_eq!(u_l(1.0, 3.0, 2.0), 3.0 + 9.0);
    }

    #[test]
    fn sample_bound_examples() {
        let c = unit_constants();
        let h = sample_bound(SampleBoundKind::Hessian, 10_000, &c, 0.1, 0.9).unwrap();
        assert_relative_eq!(h, 160.0 * 2e5f64.ln() / 1e4, max_relative = 1e-14);
        let g = sample_bound(SampleBoundKind::Gradient, 1_000_000, &c, 0.1, 0.9).unwrap();
        assert_relative_eq!(g, 100.0 * (1.0 + (8.0 * 10f64.ln()).sqrt()).powi(2) / 1e6, max_relative = 1e-14);
        let f = sample_bound(SampleBoundKind::Function, 100, &c, 1e300, 0.9).unwrap();
        assert!(f < 1e-290);
        assert!(sample_bound(SampleBoundKind::Function, 100, &c, 1.0, 1.0).is_err());
    }

    #[test]
    fn pi_epsilon_p_hat_and_dominance() {
        let c = unit_constants();
        let r = pi_epsilon(0.01, 0.9, 10_000, &c, 0.5, 0.5, 0.9, 0.01).unwrap();
        assert_relative_eq!(r.p_hat, 0.975, max_relative = 1e-15);
        assert!(r.value >= r.rho_term);
        assert_eq!(r.value, r.rho_term.max(r.function_term).max(r.gradient_term).max(r.hessian_term));
    }

    #[test]
    fn complexity_full_example() {
        let inp = ComplexityInputs {
            f0: 1.0,
            f_low: 0.0,
            eta: 0.01,
            c: 0.44949,
            eps: 0.01,
            p: 0.9,
            regime: SamplingRegime::Full,
            j: 0,
            kappa_g: 0.5,
            kappa_h: 0.5,
            j_bar: 2.0,
            u_l: 1.0,
        };
        let b = complexity_report(&inp).unwrap();
        assert_relative_eq!(b.c_hat, 0.01 * 0.44949f64.powi(3) / 24.0, max_relative = 1e-15);
        assert_relative_eq!(b.t_eps, 1000.0 / b.c_hat + 1.0, max_relative = 1e-14);
        assert_eq!(b.t_eps_j, b.t_eps);
        assert_eq!(b.derivative_evals, b.t_eps);
        assert_eq!(b.function_evals, 3.0 * b.t_eps);
    }

    #[test]
    fn eps_hat_example() {
        assert_relative_eq!(eps_hat(0.09, 0.5, 0.5), 0.01, max_relative = 1e-14);
    }

    #[test]
    fn tolerance_helpers() {
        assert_eq!(inflate_tolerances(0.01, 0.0, 0.0).unwrap(), (0.01, 0.1));
        let (g, h) = inflate_tolerances(0.01, 0.5, 0.5).unwrap();
        assert_relative_eq!(g, 0.015, max_relative = 1e-15);
        assert_relative_eq!(h, 0.15, max_relative = 1e-15);
        assert_relative_eq!(stop_probability(0.9, 1).unwrap(), 0.99, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn subsampled_dominates_full(
            gap in 0.0f64..10.0,
            eps in 1e-6f64..1.0,
            p in 0.05f64..0.99,
            kg in 0.01f64..0.99,
            kh in 0.01f64..0.99,
            j in 0u32..5,
            ul in 0.1f64..10.0,
        ) {
            let mut inp = ComplexityInputs {
                f0: gap, f_low: 0.0, eta: 0.01, c: 0.4, eps, p,
                regime: SamplingRegime::Full, j, kappa_g: kg, kappa_h: kh, j_bar: 1.0, u_l: ul,
            };
            let full = complexity_report(&inp).unwrap();
            inp.regime = SamplingRegime::Subsampled;
            let sub = complexity_report(&inp).unwrap();
            prop_assert!(sub.t_eps >= full.t_eps);
            prop_assert!(sub.t_eps_j >= full.t_eps_j);
        }

        #[test]
        fn step_constants_min_max(theta in 0.05f64..0.95, eta in 1e-3f64..1.0, lh in 1e-2f64..100.0, ug in 1e-3f64..100.0, eps in 1e-8f64..1.0) {
            let k = lemma3_constants(theta, eta, lh, ug, eps).unwrap();
            prop_assert_eq!(k.c, k.c_nc.min(k.c_n).min(k.c_rn));
            prop_assert_eq!(k.j_bar, k.j_nc.max(k.j_n).max(k.j_rn));
            prop_assert!(k.j_nc >= 0.0 && k.j_n >= 0.0 && k.j_rn >= 0.0);
        }
    }
}
