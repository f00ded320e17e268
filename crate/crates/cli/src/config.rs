// SPDX-License-Identifier: Apache-2.0

//! Run configuration: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gff_core::chart::builtin::parse_signs;
use gff_core::spaceform::PhiTermCoefficient;
use gff_core::tolerance;
use gff_core::Sign;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Coefficient {
    /// (c − ε)/4
    Corrected,
    /// (c + ε)/4, for reproducing the discrepancy
    Printed,
}

impl Coefficient {
    pub fn to_core(self) -> PhiTermCoefficient {
        match self {
            Coefficient::Corrected => PhiTermCoefficient::CMinusEps,
            Coefficient::Printed => PhiTermCoefficient::CPlusEps,
        }
    }
}

/// `eps` may be written as `"+-"` or as `[1, -1]` in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Text(String),
    List(Vec<i64>),
}

impl EpsSpec {
    fn signs(&self) -> Result<Vec<Sign>, CliError> {
        let bad = || {
            CliError::Config(format!(
                "cannot read eps {self:?}; use e.g. \"+-\" or [1, -1]"
            ))
        };
        match self {
            EpsSpec::Text(t) => parse_signs(t).ok_or_else(bad),
            EpsSpec::List(v) => v
                .iter()
                .map(|&e| Sign::from_i64(e).ok_or_else(bad))
                .collect(),
        }
    }
}

/// Everything a run can be parameterised by. Every field is optional so
/// that a config file and the flags can be merged field by field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub s: Option<usize>,
    pub eps: Option<EpsSpec>,
    pub c: Option<f64>,
    /// Number of timelike pairs `(E_i, φE_i)` at the canonical point.
    pub timelike_pairs: Option<usize>,
    pub sweep: Option<bool>,
    pub example: Option<String>,
    pub structure: Option<PathBuf>,
    pub points: Option<usize>,
    pub planes: Option<usize>,
    pub seed: Option<u64>,
    pub tol_alg: Option<f64>,
    pub tol_diff: Option<f64>,
    pub tol_schur: Option<f64>,
    pub tol_gate: Option<f64>,
    pub coefficient: Option<Coefficient>,
    pub ricci_perturbation: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            n: self.n.or(base.n),
            s: self.s.or(base.s),
            eps: self.eps.or(base.eps),
            c: self.c.or(base.c),
            timelike_pairs: self.timelike_pairs.or(base.timelike_pairs),
            sweep: self.sweep.or(base.sweep),
            example: self.example.or(base.example),
            structure: self.structure.or(base.structure),
            points: self.points.or(base.points),
            planes: self.planes.or(base.planes),
            seed: self.seed.or(base.seed),
            tol_alg: self.tol_alg.or(base.tol_alg),
            tol_diff: self.tol_diff.or(base.tol_diff),
            tol_schur: self.tol_schur.or(base.tol_schur),
            tol_gate: self.tol_gate.or(base.tol_gate),
            coefficient: self.coefficient.or(base.coefficient),
            ricci_perturbation: self.ricci_perturbation.or(base.ricci_perturbation),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let eps = match (&self.eps, self.s) {
            (Some(spec), s) => {
                let eps = spec.signs()?;
                if let Some(s) = s {
                    if s != eps.len() {
                        return Err(CliError::Config(format!(
                            "s = {s} but eps has {} entries",
                            eps.len()
                        )));
                    }
                }
                eps
            }
            (None, Some(s)) => vec![Sign::Plus; s],
            (None, None) => vec![Sign::Plus],
        };
        if eps.is_empty() {
            return Err(CliError::Config("s must be at least 1".into()));
        }
        let n = self.n.unwrap_or(2);
        if n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        let timelike_pairs = self.timelike_pairs.unwrap_or(0);
        if timelike_pairs > n {
            return Err(CliError::Config(format!(
                "timelike_pairs = {timelike_pairs} exceeds n = {n}"
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Config(format!(
                    "{name} must be a positive number, got {v}"
                )))
            }
        };
        let count = |name: &str, v: usize| {
            if v >= 1 {
                Ok(v)
            } else {
                Err(CliError::Config(format!("{name} must be at least 1")))
            }
        };
        if self.example.is_some() && self.structure.is_some() {
            return Err(CliError::Config(
                "give either an example or a structure file, not both".into(),
            ));
        }
        let c = self.c.unwrap_or(1.0);
        if !c.is_finite() {
            return Err(CliError::Config("c must be finite".into()));
        }
        let ricci_perturbation = self.ricci_perturbation.unwrap_or(0.0);
        if !ricci_perturbation.is_finite() {
            return Err(CliError::Config("ricci_perturbation must be finite".into()));
        }
        Ok(Resolved {
            n,
            s: eps.len(),
            eps: eps.iter().map(|e| e.as_i8()).collect(),
            c,
            timelike_pairs,
            sweep: self.sweep.unwrap_or(false),
            example: self.example.clone(),
            structure: self.structure.clone(),
            points: count("points", self.points.unwrap_or(10))?,
            planes: count("planes", self.planes.unwrap_or(100))?,
            seed: self.seed.unwrap_or(tolerance::DEFAULT_SEED),
            tolerances: ResolvedTolerances {
                algebraic: positive("tol_alg", self.tol_alg.unwrap_or(tolerance::ALGEBRAIC))?,
                differential: positive(
                    "tol_diff",
                    self.tol_diff.unwrap_or(tolerance::DIFFERENTIAL),
                )?,
                schur: positive("tol_schur", self.tol_schur.unwrap_or(tolerance::SCHUR))?,
                gate: positive("tol_gate", self.tol_gate.unwrap_or(tolerance::GATE))?,
            },
            coefficient: self.coefficient.unwrap_or(Coefficient::Corrected),
            ricci_perturbation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedTolerances {
    pub algebraic: f64,
    pub differential: f64,
    pub schur: f64,
    pub gate: f64,
}

/// A validated configuration with every default filled in; this is what
/// the report echoes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub n: usize,
    pub s: usize,
    pub eps: Vec<i8>,
    pub c: f64,
    pub timelike_pairs: usize,
    pub sweep: bool,
    pub example: Option<String>,
    pub structure: Option<PathBuf>,
    pub points: usize,
    pub planes: usize,
    pub seed: u64,
    pub tolerances: ResolvedTolerances,
    pub coefficient: Coefficient,
    pub ricci_perturbation: f64,
}

impl Resolved {
    pub fn signs(&self) -> Vec<Sign> {
        self.eps
            .iter()
            .map(|&e| Sign::from_i64(e as i64).expect("validated"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = toml::from_str("n = 3\ns = 2\neps = [1, -1]\nseed = 7").unwrap();
        let flags = RunConfig {
            seed: Some(9),
            ..RunConfig::default()
        };
        let r = flags.over(file).resolve().unwrap();
        assert_eq!((r.n, r.s, r.seed), (3, 2, 9));
        assert_eq!(r.eps, vec![1, -1]);
    }

    #[test]
    fn rejects_inconsistent_input() {
        let bad = |c: RunConfig| c.resolve().is_err();
        assert!(bad(RunConfig {
            s: Some(0),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            s: Some(2),
            eps: Some(EpsSpec::Text("+".into())),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            tol_alg: Some(0.0),
            ..Default::default()
        }));
        assert!(bad(RunConfig {
            points: Some(0),
            ..Default::default()
        }));
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn s_alone_defaults_to_spacelike() {
        let r = RunConfig {
            s: Some(3),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(r.eps, vec![1, 1, 1]);
    }
}
