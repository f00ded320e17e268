// SPDX-License-Identifier: Apache-2.0

//! Built-in chart structures.
//!
//! `s_r2ns` is the standard S-structure on `R^{2n+s}` with signs inserted.
//! Coordinates are `(x_1..x_n, y_1..y_n, z_1..z_s)` and, with `σ_i = ±1`
//! the sign of the i-th pair in `Im(φ)`,
//!
//! ```text
//! η^α = ½ (dz_α − Σ_i σ_i y_i dx_i)          ξ_α = 2 ∂/∂z_α
//! g   = ¼ Σ_i σ_i (dx_i² + dy_i²) + Σ_α ε_α η^α ⊗ η^α
//! φ(∂/∂y_i) = ∂/∂x_i + σ_i y_i Σ_α ∂/∂z_α,   φ(∂/∂x_i) = −∂/∂y_i,   φ ξ_α = 0
//! ```
//!
//! These components are not trusted: every built-in is certified by the
//! gate suite in [`super::geometry`], and the tests keep it that way.

use super::{ChartField, ChartStructure, Domain};
use crate::error::{GeomError, Result};
use crate::tensor::{sign_sum, Sign};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinExample {
    /// Constant canonical structure on `R^{2n+s}`; a valid g.f.f structure
    /// that is not almost-S.
    FlatGff { n: usize, s: usize, eps: Vec<Sign> },
    /// `s_r2ns(1, 2, [+1, −1])`, the Lorentzian S-structure on `R^4`.
    SR4Lorentz,
    SR2ns {
        n: usize,
        s: usize,
        eps: Vec<Sign>,
        phi_signs: Vec<Sign>,
    },
}

impl BuiltinExample {
    /// Parse ids of the form `flat_gff`, `flat_gff(n,s,eps)`, `s_r4_lorentz`,
    /// `s_r2ns(n,s,eps)` or `s_r2ns(n,s,eps,sigma)`, where sign lists are
    /// strings such as `+-` (or `+1,-1` style tokens separated by `;`).
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let unknown = || GeomError::UnknownExample(id.to_string());
        let (head, args) = match id.find('(') {
            Some(k) => {
                let inner = id[k + 1..].strip_suffix(')').ok_or_else(unknown)?;
                (
                    &id[..k],
                    inner.split(',').map(str::trim).collect::<Vec<_>>(),
                )
            }
            None => (id, Vec::new()),
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| unknown());
        match (head, args.len()) {
            ("flat_gff", 0) => Ok(Self::FlatGff {
                n: 2,
                s: 1,
                eps: vec![Sign::Plus],
            }),
            ("flat_gff", 3) => Ok(Self::FlatGff {
                n: num(args[0])?,
                s: num(args[1])?,
                eps: parse_signs(args[2]).ok_or_else(unknown)?,
            }),
            ("s_r4_lorentz", 0) => Ok(Self::SR4Lorentz),
            ("s_r2ns", 3) | ("s_r2ns", 4) => {
                let n = num(args[0])?;
                let phi_signs = match args.get(3) {
                    Some(a) => parse_signs(a).ok_or_else(unknown)?,
                    None => vec![Sign::Plus; n],
                };
                Ok(Self::SR2ns {
                    n,
                    s: num(args[1])?,
                    eps: parse_signs(args[2]).ok_or_else(unknown)?,
                    phi_signs,
                })
            }
            _ => Err(unknown()),
        }
    }

    /// φ-sectional curvature the example is expected to have, if it is an
    /// S-space form.
    pub fn expected_c(&self) -> Option<f64> {
        match self {
            Self::FlatGff { .. } => None,
            Self::SR4Lorentz => Some(0.0),
            Self::SR2ns { eps, .. } => Some(0.0 - 3.0 * sign_sum(eps)),
        }
    }
}

/// `+-+`, or `+1;-1;+1` with `;`, `,` or spaces between signs.
pub fn parse_signs(text: &str) -> Option<Vec<Sign>> {
    let text = text.trim();
    if text.contains([';', ',', ' ']) {
        return text
            .split([';', ',', ' '])
            .filter(|t| !t.is_empty())
            .map(Sign::parse)
            .collect();
    }
    text.chars()
        .map(|c| match c {
            '+' => Some(Sign::Plus),
            '-' | '−' => Some(Sign::Minus),
            _ => None,
        })
        .collect()
}

fn signs_label(signs: &[Sign]) -> String {
    signs
        .iter()
        .map(|s| if *s == Sign::Plus { '+' } else { '-' })
        .collect()
}

/// Format `k` as a literal; integers without a fractional part.
fn lit(k: f64) -> String {
    if k.fract() == 0.0 {
        format!("{}", k as i64)
    } else {
        format!("{k}")
    }
}

fn fields(rows: Vec<Vec<String>>, coords: &[String]) -> Result<Vec<Vec<ChartField>>> {
    rows.iter()
        .map(|r| r.iter().map(|t| ChartField::parse(t, coords)).collect())
        .collect()
}

pub fn builtin_example(example: &BuiltinExample) -> Result<ChartStructure> {
    match example {
        BuiltinExample::FlatGff { n, s, eps } => flat_gff(*n, *s, eps),
        BuiltinExample::SR4Lorentz => {
            let mut cs = s_r2ns(1, 2, &[Sign::Plus, Sign::Minus], &[Sign::Plus])?;
            cs.name = "s_r4_lorentz".into();
            Ok(cs)
        }
        BuiltinExample::SR2ns {
            n,
            s,
            eps,
            phi_signs,
        } => s_r2ns(*n, *s, eps, phi_signs),
    }
}

fn check_counts(n: usize, s: usize, eps: &[Sign]) -> Result<()> {
    if n == 0 || s == 0 {
        return Err(GeomError::InvalidParameters(
            "n and s must be at least 1".into(),
        ));
    }
    if eps.len() != s {
        return Err(GeomError::InvalidParameters(format!(
            "eps has {} entries but s = {s}",
            eps.len()
        )));
    }
    Ok(())
}

fn coordinates(n: usize, s: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=n).map(|i| format!("y{i}")))
        .chain((1..=s).map(|a| format!("z{a}")))
        .collect()
}

fn flat_gff(n: usize, s: usize, eps: &[Sign]) -> Result<ChartStructure> {
    check_counts(n, s, eps)?;
    let d = 2 * n + s;
    let coords = coordinates(n, s);
    let zero = || vec![vec!["0".to_string(); d]; d];
    let mut g = zero();
    let mut phi = zero();
    for i in 0..n {
        g[i][i] = "1".into();
        g[n + i][n + i] = "1".into();
        phi[n + i][i] = "1".into();
        phi[i][n + i] = "-1".into();
    }
    let mut xi = vec![vec!["0".to_string(); d]; s];
    let mut eta = xi.clone();
    for a in 0..s {
        g[2 * n + a][2 * n + a] = lit(eps[a].value());
        xi[a][2 * n + a] = "1".into();
        eta[a][2 * n + a] = "1".into();
    }
    Ok(ChartStructure {
        name: format!("flat_gff({n},{s},{})", signs_label(eps)),
        n,
        s,
        eps: eps.to_vec(),
        domain: Domain::cube(d, 1.0),
        metric: fields(g, &coords)?,
        phi: fields(phi, &coords)?,
        xi: fields(xi, &coords)?,
        eta: fields(eta, &coords)?,
        coords,
    })
}

fn s_r2ns(n: usize, s: usize, eps: &[Sign], phi_signs: &[Sign]) -> Result<ChartStructure> {
    check_counts(n, s, eps)?;
    if phi_signs.len() != n {
        return Err(GeomError::InvalidParameters(format!(
            "need n = {n} Im(φ) pair signs, got {}",
            phi_signs.len()
        )));
    }
    let d = 2 * n + s;
    let coords = coordinates(n, s);
    let (x, y, z) = (|i: usize| i, |i: usize| n + i, |a: usize| 2 * n + a);
    let sigma: Vec<f64> = phi_signs.iter().map(|s| s.value()).collect();
    let epsbar = sign_sum(eps);
    let yname = |i: usize| coords[y(i)].clone();

    let mut g = vec![vec!["0".to_string(); d]; d];
    for i in 0..n {
        for j in 0..n {
            // ¼σ_i δ_ij + ¼ ε σ_i σ_j y_i y_j
            let cross = epsbar * sigma[i] * sigma[j] / 4.0;
            let mut terms = Vec::new();
            if i == j {
                terms.push(lit(sigma[i] / 4.0));
            }
            if cross != 0.0 {
                terms.push(format!("{}*{}*{}", lit(cross), yname(i), yname(j)));
            }
            if !terms.is_empty() {
                g[x(i)][x(j)] = terms.join(" + ");
            }
        }
        g[y(i)][y(i)] = lit(sigma[i] / 4.0);
        for a in 0..s {
            let k = -eps[a].value() * sigma[i] / 4.0;
            g[x(i)][z(a)] = format!("{}*{}", lit(k), yname(i));
            g[z(a)][x(i)] = g[x(i)][z(a)].clone();
        }
    }
    for a in 0..s {
        g[z(a)][z(a)] = lit(eps[a].value() / 4.0);
    }

    let mut phi = vec![vec!["0".to_string(); d]; d];
    for i in 0..n {
        phi[x(i)][y(i)] = "1".into();
        phi[y(i)][x(i)] = "-1".into();
        for a in 0..s {
            phi[z(a)][y(i)] = if sigma[i] > 0.0 {
                yname(i)
            } else {
                format!("-{}", yname(i))
            };
        }
    }

    let mut xi = vec![vec!["0".to_string(); d]; s];
    let mut eta = vec![vec!["0".to_string(); d]; s];
    for a in 0..s {
        xi[a][z(a)] = "2".into();
        eta[a][z(a)] = "0.5".into();
        for i in 0..n {
            eta[a][x(i)] = format!("{}*{}", lit(-sigma[i] / 2.0), yname(i));
        }
    }

    Ok(ChartStructure {
        name: format!(
            "s_r2ns({n},{s},{},{})",
            signs_label(eps),
            signs_label(phi_signs)
        ),
        n,
        s,
        eps: eps.to_vec(),
        domain: Domain::cube(d, 1.0),
        metric: fields(g, &coords)?,
        phi: fields(phi, &coords)?,
        xi: fields(xi, &coords)?,
        eta: fields(eta, &coords)?,
        coords,
    })
}
