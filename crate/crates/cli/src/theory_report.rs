//! The `theory` report: every constant and bound for one set of inputs.
//!
//! Text and JSON renderings come from the same [`TheoryReport`]; the text form
//! prints `section.name = value` lines whose names are JSON paths.

use std::fmt::Write as _;

use alas_core::theory::{
    complexity_report, inflate_tolerances, lemma3_constants, pi_epsilon, sample_bound, stop_probability, u_l,
    ComplexityBounds, ComplexityInputs, Lemma3Constants, PiEpsilon, ProblemConstants, SampleBoundKind,
    SamplingRegime,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const CLAMP_NOTE: &str = "clamped to full sampling";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub constants: ProblemConstants,
    pub eps: f64,
    pub p: f64,
    pub kappa_g: f64,
    pub kappa_h: f64,
    /// `J` of the consecutive-stationarity rule.
    pub j: u32,
    /// Number of components `N`.
    pub n: u64,
    pub theta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBounds {
    /// `δ_H = κ_H ε^{1/2}`
    pub hessian: f64,
    /// `δ_g = κ_g ε`
    pub gradient: f64,
    /// `δ_f = η c³ ε^{3/2} / 24`
    pub function: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub gradient: f64,
    pub hessian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    #[serde(rename = "step_constants")]
    pub lemma3: Lemma3Constants,
    pub u_l: f64,
    /// Sample fractions at probability `p`.
    pub sample_bounds: SampleBounds,
    pub pi_epsilon: PiEpsilon,
    pub full: ComplexityBounds,
    pub subsampled: ComplexityBounds,
    pub inflated_tolerances: Tolerances,
    /// Probability that the stopping rule fires at a stationary point.
    pub stop_probability: f64,
    /// Paths of fractions above one.
    pub clamped: Vec<String>,
}

struct Entry {
    path: String,
    value: f64,
    fraction: bool,
}

impl TheoryReport {
    pub fn compute(inp: &TheoryInputs) -> Result<Self> {
        let cfg = |m: String| CliError::Config(m);
        if !(inp.p > 0.0 && inp.p < 1.0) {
            return Err(cfg(format!("p must lie in (0,1), got {}", inp.p)));
        }
        if !(inp.eps > 0.0 && inp.eps.is_finite()) {
            return Err(cfg(format!("eps must be positive, got {}", inp.eps)));
        }
        let map = |e: alas_core::AlasError| cfg(e.to_string());
        let k = &inp.constants;
        k.validate().map_err(map)?;
        let lemma3 = lemma3_constants(inp.theta, inp.eta, k.l_h, k.u_g, inp.eps).map_err(map)?;
        let c = lemma3.c;
        let ul = u_l(k.u_g, k.u_h, k.l);
        let delta_f = inp.eta * c.powi(3) * inp.eps.powf(1.5) / 24.0;
        let sample_bounds = SampleBounds {
            hessian: sample_bound(SampleBoundKind::Hessian, inp.n, k, inp.kappa_h * inp.eps.sqrt(), inp.p).map_err(map)?,
            gradient: sample_bound(SampleBoundKind::Gradient, inp.n, k, inp.kappa_g * inp.eps, inp.p).map_err(map)?,
            function: sample_bound(SampleBoundKind::Function, inp.n, k, delta_f, inp.p).map_err(map)?,
        };
        let pi = pi_epsilon(inp.eps, inp.p, inp.n, k, inp.kappa_g, inp.kappa_h, inp.theta, inp.eta).map_err(map)?;
        let complexity = |regime| {
            complexity_report(&ComplexityInputs {
                f0: k.f0,
                f_low: k.f_low,
                eta: inp.eta,
                c,
                eps: inp.eps,
                p: inp.p,
                regime,
                j: inp.j,
                kappa_g: inp.kappa_g,
                kappa_h: inp.kappa_h,
                j_bar: lemma3.j_bar,
                u_l: ul,
            })
            .map_err(map)
        };
        let (tg, th) = inflate_tolerances(inp.eps, inp.kappa_g, inp.kappa_h).map_err(map)?;
        let mut report = TheoryReport {
            inputs: *inp,
            lemma3,
            u_l: ul,
            sample_bounds,
            pi_epsilon: pi,
            full: complexity(SamplingRegime::Full)?,
            subsampled: complexity(SamplingRegime::Subsampled)?,
            inflated_tolerances: Tolerances {
                gradient: tg,
                hessian: th,
            },
            stop_probability: stop_probability(inp.p, inp.j).map_err(map)?,
            clamped: Vec::new(),
        };
        report.clamped = report
            .entries()
            .into_iter()
            .filter(|e| e.fraction && e.value > 1.0)
            .map(|e| e.path)
            .collect();
        Ok(report)
    }

    fn entries(&self) -> Vec<Entry> {
        let mut v = Vec::new();
        let mut push = |path: &str, value: f64, fraction: bool| {
            v.push(Entry {
                path: path.to_string(),
                value,
                fraction,
            })
        };
        let l = &self.lemma3;
        for (name, val) in [
            ("c_nc", l.c_nc),
            ("c_n", l.c_n),
            ("c_rn", l.c_rn),
            ("c", l.c),
            ("j_nc", l.j_nc),
            ("j_n", l.j_n),
            ("j_rn", l.j_rn),
            ("j_bar", l.j_bar),
        ] {
            push(&format!("step_constants.{name}"), val, false);
        }
        push("u_l", self.u_l, false);
        let s = &self.sample_bounds;
        push("sample_bounds.hessian", s.hessian, true);
        push("sample_bounds.gradient", s.gradient, true);
        push("sample_bounds.function", s.function, true);
        let p = &self.pi_epsilon;
        push("pi_epsilon.p_hat", p.p_hat, false);
        push("pi_epsilon.rho_term", p.rho_term, true);
        push("pi_epsilon.function_term", p.function_term, true);
        push("pi_epsilon.gradient_term", p.gradient_term, true);
        push("pi_epsilon.hessian_term", p.hessian_term, true);
        push("pi_epsilon.value", p.value, true);
        for (section, b) in [("full", &self.full), ("subsampled", &self.subsampled)] {
            push(&format!("{section}.c_hat"), b.c_hat, false);
            push(&format!("{section}.eps_hat"), b.eps_hat, false);
            push(&format!("{section}.t_eps"), b.t_eps, false);
            push(&format!("{section}.t_eps_j"), b.t_eps_j, false);
            push(&format!("{section}.derivative_evals"), b.derivative_evals, false);
            push(&format!("{section}.function_evals"), b.function_evals, false);
        }
        push("inflated_tolerances.gradient", self.inflated_tolerances.gradient, false);
        push("inflated_tolerances.hessian", self.inflated_tolerances.hessian, false);
        push("stop_probability", self.stop_probability, false);
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let i = &self.inputs;
        let k = &i.constants;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "inputs: L={} L_H={} U_g={} U_H={} f_up={} f_low={} f0={}",
            k.l, k.l_h, k.u_g, k.u_h, k.f_up, k.f_low, k.f0
        );
        let _ = writeln!(
            out,
            "        eps={} p={} kappa_g={} kappa_h={} J={} N={} theta={} eta={}",
            i.eps, i.p, i.kappa_g, i.kappa_h, i.j, i.n, i.theta, i.eta
        );
        let _ = writeln!(out, "note: U_L uses U_H^2; the Hessian sample bound divides by delta_H (not squared)");
        let mut section = String::new();
        for e in self.entries() {
            let head = e.path.split_once('.').map(|(s, _)| s).unwrap_or("");
            if head != section {
                out.push('\n');
                section = head.to_string();
            }
            let _ = write!(out, "{} = {}", e.path, e.value);
            if e.fraction && e.value > 1.0 {
                let _ = write!(out, "  ({CLAMP_NOTE})");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the `path = value` lines of [`TheoryReport::render_text`].
pub fn parse_text_values(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter_map(|line| {
            let (k, rest) = line.split_once(" = ")?;
            let v = rest.split_whitespace().next()?.parse().ok()?;
            Some((k.to_string(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_inputs() -> TheoryInputs {
        TheoryInputs {
            constants: ProblemConstants {
                l: 1.0,
                l_h: 1.0,
                u_g: 1.0,
                u_h: 1.0,
                f_up: 1.0,
                f_low: 0.0,
                f0: 1.0,
            },
            eps: 0.01,
            p: 0.9,
            kappa_g: 0.5,
            kappa_h: 0.5,
            j: 1,
            n: 10_000,
            theta: 0.9,
            eta: 0.01,
        }
    }

    #[test]
    fn text_and_json_agree() {
        let r = TheoryReport::compute(&example_inputs()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let values = parse_text_values(&r.render_text());
        assert_eq!(values.len(), r.entries().len());
        for (path, v) in values {
            let pointer = format!("/{}", path.replace('.', "/"));
            assert_eq!(json.pointer(&pointer).and_then(|j| j.as_f64()), Some(v), "{path}");
        }
    }

    #[test]
    fn worked_values_printed() {
        let r = TheoryReport::compute(&example_inputs()).unwrap();
        assert!((r.lemma3.c - 0.44949).abs() < 1e-5);
        assert!((r.stop_probability - 0.99).abs() < 1e-12);
        assert!((r.inflated_tolerances.gradient - 0.015).abs() < 1e-15);
        assert!((r.full.eps_hat - 0.01 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_eps_is_clamped() {
        let mut inp = example_inputs();
        inp.p = 0.999;
        inp.eps = 1e-8;
        let r = TheoryReport::compute(&inp).unwrap();
        assert!(r.pi_epsilon.value > 1.0);
        assert!(r.clamped.contains(&"pi_epsilon.value".to_string()));
        let text = r.render_text();
        assert!(text
            .lines()
            .any(|l| l.starts_with("pi_epsilon.value = ") && l.contains(CLAMP_NOTE)));
    }

    #[test]
    fn p_outside_open_interval_rejected() {
        for p in [0.0, 1.0, 1.5] {
            let mut inp = example_inputs();
            inp.p = p;
            assert!(matches!(TheoryReport::compute(&inp), Err(CliError::Config(_))));
        }
    }
}
