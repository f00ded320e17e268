// SPDX-License-Identifier: Apache-2.0

//! Declarative chart files (TOML).
//!
//! ```toml
//! name = "sasaki3"
//! n = 1
//! s = 1
//! eps = [1]
//! coordinates = ["x", "y", "z"]
//! metric = [["0.25 + 0.25*y^2", "0", "-0.25*y"],
//!           ["0", "0.25", "0"],
//!           ["-0.25*y", "0", "0.25"]]
//! phi = [["0", "1", "0"], ["-1", "0", "0"], ["0", "y", "0"]]
//! xi = [["0", "0", "2"]]
//! eta = [["-0.5*y", "0", "0.5"]]
//!
//! [domain]
//! lower = [-1, -1, -1]
//! upper = [1, 1, 1]
//! ```
//!
//! `phi[a][b]` is the component `φ^a_b` (row = output index), `xi` rows are
//! vector fields and `eta` rows are 1-forms. Entries may be numbers or
//! expression strings in the grammar of [`super::expr`].

use serde::{Deserialize, Serialize};

use super::{ChartField, ChartStructure, Domain};
use crate::error::{GeomError, Result};
use crate::tensor::Sign;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Component {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    pub name: String,
    pub n: usize,
    pub s: usize,
    pub eps: Vec<i64>,
    pub coordinates: Vec<String>,
    pub metric: Vec<Vec<Component>>,
    pub phi: Vec<Vec<Component>>,
    pub xi: Vec<Vec<Component>>,
    pub eta: Vec<Vec<Component>>,
    pub domain: DomainSpec,
}

fn parse_rows(rows: &[Vec<Component>], coords: &[String]) -> Result<Vec<Vec<ChartField>>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|c| match c {
                    Component::Number(v) => ChartField::new(coords.len(), super::Expr::Const(*v)),
                    Component::Text(t) => ChartField::parse(t, coords),
                })
                .collect()
        })
        .collect()
}

fn render_rows(rows: &[Vec<ChartField>], coords: &[String]) -> Vec<Vec<Component>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|f| match f.expr() {
                    super::Expr::Const(v) => Component::Number(*v),
                    e => Component::Text(e.display(coords).to_string()),
                })
                .collect()
        })
        .collect()
}

impl ChartFile {
    pub fn into_structure(self) -> Result<ChartStructure> {
        let eps = self
            .eps
            .iter()
            .map(|&e| {
                Sign::from_i64(e)
                    .ok_or_else(|| GeomError::InvalidParameters(format!("eps entry {e} is not ±1")))
            })
            .collect::<Result<Vec<_>>>()?;
        let coords = self.coordinates;
        let cs = ChartStructure {
            name: self.name,
            n: self.n,
            s: self.s,
            eps,
            metric: parse_rows(&self.metric, &coords)?,
            phi: parse_rows(&self.phi, &coords)?,
            xi: parse_rows(&self.xi, &coords)?,
            eta: parse_rows(&self.eta, &coords)?,
            domain: Domain {
                lower: self.domain.lower,
                upper: self.domain.upper,
            },
            coords,
        };
        cs.validate_shape()?;
        Ok(cs)
    }

    pub fn from_structure(cs: &ChartStructure) -> Self {
        Self {
            name: cs.name.clone(),
            n: cs.n,
            s: cs.s,
            eps: cs.eps.iter().map(|e| e.as_i8() as i64).collect(),
            coordinates: cs.coords.clone(),
            metric: render_rows(&cs.metric, &cs.coords),
            phi: render_rows(&cs.phi, &cs.coords),
            xi: render_rows(&cs.xi, &cs.coords),
            eta: render_rows(&cs.eta, &cs.coords),
            domain: DomainSpec {
                lower: cs.domain.lower.clone(),
                upper: cs.domain.upper.clone(),
            },
        }
    }
}

pub fn parse_chart_toml(text: &str) -> Result<ChartStructure> {
    let file: ChartFile = toml::from_str(text)
        .map_err(|e| GeomError::InvalidParameters(format!("chart file: {e}")))?;
    file.into_structure()
}

pub fn chart_to_toml(cs: &ChartStructure) -> String {
    toml::to_string(&ChartFile::from_structure(cs)).expect("chart file serializes")
}

pub fn load_chart_file(path: &std::path::Path) -> Result<ChartStructure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        GeomError::InvalidParameters(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_chart_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SASAKI3: &str = r#"
name = "sasaki3"
n = 1
s = 1
eps = [1]
coordinates = ["x", "y", "z"]
metric = [["0.25 + 0.25*y^2", 0, "-0.25*y"],
          [0, 0.25, 0],
          ["-0.25*y", 0, 0.25]]
phi = [[0, 1, 0], [-1, 0, 0], [0, "y", 0]]
xi = [[0, 0, 2]]
eta = [["-0.5*y", 0, 0.5]]

[domain]
lower = [-1, -1, -1]
upper = [1, 1, 1]
"#;

    #[test]
    fn parses_documented_example() {
        let cs = parse_chart_toml(SASAKI3).unwrap();
        assert_eq!(cs.dim(), 3);
        let g = cs.metric_at(&[0.0, 0.5, 0.0]);
        assert_eq!(g[0][0], 0.25 + 0.25 * 0.25);
        assert_eq!(g[0][2], -0.125);
    }

    #[test]
    fn rejects_bad_shapes_and_names() {
        let bad = SASAKI3.replace("eps = [1]", "eps = [1, -1]");
        assert!(parse_chart_toml(&bad).is_err());
        let bad = SASAKI3.replace("\"y\", 0]]", "\"w\", 0]]");
        assert!(parse_chart_toml(&bad).is_err());
        let bad = SASAKI3.replace("eps = [1]", "eps = [2]");
        assert!(parse_chart_toml(&bad).is_err());
    }

    #[test]
    fn round_trips_through_text() {
        let cs = parse_chart_toml(SASAKI3).unwrap();
        let again = parse_chart_toml(&chart_to_toml(&cs)).unwrap();
        let p = [0.3, -0.4, 0.9];
        assert_eq!(cs.metric_at(&p), again.metric_at(&p));
        assert_eq!(cs.phi_at(&p), again.phi_at(&p));
        assert_eq!(cs.eta_at(&p), again.eta_at(&p));
    }
}
