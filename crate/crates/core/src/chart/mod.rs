// SPDX-License-Identifier: Apache-2.0

//! Structure fields given by closed-form components on a coordinate box.

pub mod builtin;
pub mod expr;
pub mod file;
pub mod geometry;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::gff::GffPointStructure;
use crate::scalar::{Dual, Scalar};
use crate::tensor::{MetricAtPoint, Sign};

pub use builtin::{builtin_example, BuiltinExample};
pub use expr::Expr;

/// A component function of the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartField {
    arity: usize,
    expr: Expr,
}

impl ChartField {
    pub fn new(arity: usize, expr: Expr) -> Result<Self> {
        if let Some(k) = expr.max_var() {
            if k >= arity {
                return Err(GeomError::Expression(format!(
                    "expression references coordinate {k} but the chart has {arity}"
                )));
            }
        }
        Ok(Self { arity, expr })
    }

    pub fn parse(src: &str, coords: &[String]) -> Result<Self> {
        Self::new(coords.len(), expr::parse(src, coords)?)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval<S: Scalar>(&self, p: &[S]) -> S {
        self.expr.eval(p)
    }

    /// `max_{a,b} |∂_a∂_b f − ∂_b∂_a f|` with the two orders taken through
    /// different nesting levels of the dual numbers.
    pub fn mixed_partial_residual(&self, p: &[f64]) -> f64 {
        let d = self.arity;
        let hessian_entry = |inner: usize, outer: usize| {
            let q: Vec<Dual<Dual<f64>>> = (0..d)
                .map(|k| {
                    Dual::new(
                        Dual::new(p[k], (k == inner) as u8 as f64),
                        Dual::new((k == outer) as u8 as f64, 0.0),
                    )
                })
                .collect();
            self.eval(&q).du.du
        };
        let mut r: f64 = 0.0;
        for a in 0..d {
            for b in a + 1..d {
                r = r.max((hessian_entry(a, b) - hessian_entry(b, a)).abs());
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.lower.len()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

/// `(g, φ, ξ_α, η^α)` as component fields on a chart of dimension `2n+s`.
///
/// `phi[a][b]` is `φ^a_b`; `xi[α][a]` is `ξ_α^a`; `eta[α][a]` is `η^α_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartStructure {
    pub name: String,
    pub n: usize,
    pub s: usize,
    pub eps: Vec<Sign>,
    pub coords: Vec<String>,
    pub domain: Domain,
    pub metric: Vec<Vec<ChartField>>,
    pub phi: Vec<Vec<ChartField>>,
    pub xi: Vec<Vec<ChartField>>,
    pub eta: Vec<Vec<ChartField>>,
}

fn eval_rows<S: Scalar>(rows: &[Vec<ChartField>], p: &[S]) -> Vec<Vec<S>> {
    rows.iter()
        .map(|r| r.iter().map(|f| f.eval(p)).collect())
        .collect()
}

fn to_matrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m.len(), |i, j| m[i][j])
}

impl ChartStructure {
    /// Check shapes; field semantics are left to the gate suite.
    pub fn validate_shape(&self) -> Result<()> {
        let d = 2 * self.n + self.s;
        let bad = |what: &str| {
            Err(GeomError::DimensionMismatch(format!(
                "{what} (chart '{}')",
                self.name
            )))
        };
        if self.n == 0 || self.s == 0 {
            return Err(GeomError::InvalidParameters(
                "n and s must be at least 1".into(),
            ));
        }
        if self.coords.len() != d {
            return bad("need 2n+s coordinate names");
        }
        if self.eps.len() != self.s {
            return bad("eps must have s entries");
        }
        if self.domain.lower.len() != d || self.domain.upper.len() != d {
            return bad("domain bounds must have 2n+s entries");
        }
        if self
            .domain
            .lower
            .iter()
            .zip(&self.domain.upper)
            .any(|(l, u)| l > u)
        {
            return Err(GeomError::InvalidParameters(
                "domain lower bound exceeds upper bound".into(),
            ));
        }
        let square = |m: &Vec<Vec<ChartField>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !square(&self.metric) || !square(&self.phi) {
            return bad("metric and phi must be (2n+s)×(2n+s)");
        }
        let frame = |m: &Vec<Vec<ChartField>>| m.len() == self.s && m.iter().all(|r| r.len() == d);
        if !frame(&self.xi) || !frame(&self.eta) {
            return bad("xi and eta must be s rows of 2n+s components");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.s
    }

    pub fn metric_at<S: Scalar>(&self, p: &[S]) -> Vec<Vec<S>> {
        eval_rows(&self.metric, p)
    }

    pub fn phi_at<S: Scalar>(&self, p: &[S]) -> Vec<Vec<S>> {
        eval_rows(&self.phi, p)
    }

    pub fn xi_at<S: Scalar>(&self, p: &[S]) -> Vec<Vec<S>> {
        eval_rows(&self.xi, p)
    }

    pub fn eta_at<S: Scalar>(&self, p: &[S]) -> Vec<Vec<S>> {
        eval_rows(&self.eta, p)
    }

    /// All component fields, for blanket checks.
    pub fn fields(&self) -> impl Iterator<Item = &ChartField> {
        self.metric
            .iter()
            .chain(&self.phi)
            .chain(&self.xi)
            .chain(&self.eta)
            .flat_map(|r| r.iter())
    }

    /// Freeze the fields at `p` into a single-tangent-space structure.
    pub fn point_structure(&self, p: &[f64]) -> Result<GffPointStructure> {
        if !self.domain.contains(p) {
            return Err(GeomError::OutsideDomain);
        }
        let g = MetricAtPoint::new(to_matrix(&self.metric_at(p)))?;
        let phi = to_matrix(&self.phi_at(p));
        let xi = self.xi_at(p).into_iter().map(DVector::from_vec).collect();
        let eta = self.eta_at(p).into_iter().map(DVector::from_vec).collect();
        GffPointStructure::new(self.n, self.s, g, phi, xi, eta, self.eps.clone())
    }

    /// `npoints` points drawn uniformly from the domain with a fixed seed,
    /// redrawing any point where the metric is degenerate.
    pub fn sample_points(&self, npoints: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(npoints);
        let mut rejected = 0usize;
        while out.len() < npoints {
            let p: Vec<f64> = self
                .domain
                .lower
                .iter()
                .zip(&self.domain.upper)
                .map(|(&lo, &hi)| {
                    if lo == hi {
                        lo
                    } else {
                        rng.random_range(lo..=hi)
                    }
                })
                .collect();
            if MetricAtPoint::new(to_matrix(&self.metric_at(&p))).is_ok() {
                out.push(p);
            } else {
                rejected += 1;
                if rejected > 1000 * npoints.max(1) {
                    return Err(GeomError::DegenerateMetric {
                        smallest: 0.0,
                        largest: 0.0,
                    });
                }
            }
        }
        Ok(out)
    }
}
