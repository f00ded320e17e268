// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::Resolved;

/// Conventions every number in the report depends on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub curvature_slots: &'static str,
    pub sectional_curvature: &'static str,
    pub ricci: &'static str,
    pub d_eta: &'static str,
    pub phi_term_coefficient: String,
}

impl Conventions {
    pub fn new(coefficient: &str) -> Self {
        Self {
            curvature_slots: "R(X,Y,Z,W) = g(R(Z,W)Y, X)",
            sectional_curvature: "K(x,y) = R(x,y,x,y) / (g(x,x)g(y,y) - g(x,y)^2)",
            ricci: "Ric(X,Y) = sum_i eps_i R(X,E_i,Y,E_i)",
            d_eta: "d eta(X,Y) = 1/2 {X eta(Y) - Y eta(X) - eta([X,Y])}",
            phi_term_coefficient: coefficient.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes iff `residual < tolerance` (NaN never passes).
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }

    /// Passes iff `residual >= threshold`; for expected violations.
    pub fn at_least(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance: threshold,
            pass: residual >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Resolved,
    pub conventions: Conventions,
    pub checks: Vec<Check>,
    /// Headline numbers (fitted h, k, c, ...).
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub verdict: &'static str,
}

impl VerificationReport {
    pub fn new(command: &str, config: Resolved, conventions: Conventions) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            conventions,
            checks: Vec::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
            verdict: "pass",
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Overall verdict is the conjunction of the checks.
    pub fn finish(mut self) -> Self {
        self.verdict = if !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) {
            "pass"
        } else {
            "fail"
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} — {}", self.tool, self.version, self.command);
        let _ = writeln!(
            out,
            "phi-term coefficient: {}",
            self.conventions.phi_term_coefficient
        );
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {}  {:<width$}  {:>10.3e}  (tol {:.1e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
            );
        }
        for (k, v) in &self.values {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "verdict: {}", self.verdict.to_uppercase());
        out
    }
}
