// SPDX-License-Identifier: Apache-2.0

//! Levi-Civita connection, curvature and the field-level structure
//! identities of a chart structure.
//!
//! All derivatives come from nested dual numbers. The curvature routines
//! are generic over [`Scalar`], so evaluating them at a `Dual<f64>` point
//! differentiates the curvature itself (third order in the metric).
//!
//! Index conventions: `gamma[k][i][j] = Γ^k_ij`, Riemann components
//! `R_abcd = R(∂_a, ∂_b, ∂_c, ∂_d) = g(R(∂_c, ∂_d)∂_b, ∂_a)`.

use nalgebra::DMatrix;
use serde::Serialize;

use super::ChartStructure;
use crate::error::{GeomError, Result};
use crate::gff::{validate_structure, NamedResidual};
use crate::scalar::{seed_along, seed_axis, Dual, Scalar};
use crate::spaceform::{fit_two_basis, CurvatureTensor};
use crate::tensor::{MetricAtPoint, TensorAtPoint, Variance};
use crate::tolerance;

type Mat<S> = Vec<Vec<S>>;

/// Gauss–Jordan inverse with partial pivoting on the primal part.
pub fn invert<S: Scalar>(m: &[Vec<S>]) -> Result<Mat<S>> {
    let d = m.len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.value().abs()));
    let mut a: Mat<S> = m.to_vec();
    let mut inv: Mat<S> = (0..d)
        .map(|i| (0..d).map(|j| S::from_f64((i == j) as u8 as f64)).collect())
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .expect("nonempty range");
        let pv = a[pivot][col].value().abs();
        if pv <= tolerance::DEGENERACY * scale {
            return Err(GeomError::DegenerateMetric {
                smallest: pv,
                largest: scale,
            });
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..d {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f.value() == 0.0 {
                continue;
            }
            for j in 0..d {
                a[r][j] = a[r][j] - f * a[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Ok(inv)
}

/// Metric, its inverse and the Christoffel symbols at one point.
#[derive(Debug, Clone)]
pub struct Connection<S> {
    pub g: Mat<S>,
    pub g_inv: Mat<S>,
    pub gamma: Vec<Mat<S>>,
}

/// `Γ^k_ij = ½ g^{kl} (∂_i g_lj + ∂_j g_li − ∂_l g_ij)`
pub fn connection<S: Scalar>(cs: &ChartStructure, p: &[S]) -> Result<Connection<S>> {
    let d = cs.dim();
    let mut g: Mat<S> = Vec::new();
    let mut dg: Vec<Mat<S>> = Vec::with_capacity(d);
    for c in 0..d {
        let m = cs.metric_at(&seed_axis(p, c));
        if c == 0 {
            g = m.iter().map(|r| r.iter().map(|v| v.re).collect()).collect();
        }
        dg.push(m.iter().map(|r| r.iter().map(|v| v.du).collect()).collect());
    }
    let g_inv = invert(&g)?;
    // Christoffel symbols of the first kind: [ij, l]
    let mut first = vec![vec![vec![S::zero(); d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                first[l][i][j] = (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]).scale(0.5);
            }
        }
    }
    let mut gamma = vec![vec![vec![S::zero(); d]; d]; d];
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let mut acc = S::zero();
                for l in 0..d {
                    acc = acc + g_inv[k][l] * first[l][i][j];
                }
                gamma[k][i][j] = acc;
                gamma[k][j][i] = acc;
            }
        }
    }
    Ok(Connection { g, g_inv, gamma })
}

/// Connection plus the fully covariant Riemann tensor, `data[((a*d+b)*d+c)*d+e]`.
#[derive(Debug, Clone)]
pub struct CurvatureAt<S> {
    pub connection: Connection<S>,
    pub riemann: Vec<S>,
    pub dim: usize,
}

impl<S: Scalar> CurvatureAt<S> {
    pub fn r(&self, a: usize, b: usize, c: usize, e: usize) -> S {
        let d = self.dim;
        self.riemann[((a * d + b) * d + c) * d + e]
    }

    /// `Ric_ac = g^{bd} R_abcd`
    pub fn ricci(&self) -> Mat<S> {
        let d = self.dim;
        let gi = &self.connection.g_inv;
        let mut ric = vec![vec![S::zero(); d]; d];
        for a in 0..d {
            for c in a..d {
                let mut acc = S::zero();
                for b in 0..d {
                    for e in 0..d {
                        if gi[b][e].value() != 0.0 || gi[b][e].value().is_nan() {
                            acc = acc + gi[b][e] * self.r(a, b, c, e);
                        }
                    }
                }
                ric[a][c] = acc;
                ric[c][a] = acc;
            }
        }
        ric
    }
}

/// `R^e_bcd = ∂_cΓ^e_db − ∂_dΓ^e_cb + Γ^e_cf Γ^f_db − Γ^e_df Γ^f_cb`, lowered
/// on its first slot.
pub fn curvature<S: Scalar>(cs: &ChartStructure, p: &[S]) -> Result<CurvatureAt<S>> {
    let d = cs.dim();
    let conn = connection(cs, p)?;
    let mut dgamma: Vec<Vec<Mat<S>>> = Vec::with_capacity(d);
    for c in 0..d {
        let lifted: Connection<Dual<S>> = connection(cs, &seed_axis(p, c))?;
        dgamma.push(
            lifted
                .gamma
                .iter()
                .map(|m| m.iter().map(|r| r.iter().map(|v| v.du).collect()).collect())
                .collect(),
        );
    }
    let gm = &conn.gamma;
    let mut up = vec![S::zero(); d * d * d * d];
    for e in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut v = dgamma[c][e][dd][b] - dgamma[dd][e][c][b];
                    for f in 0..d {
                        v = v + gm[e][c][f] * gm[f][dd][b] - gm[e][dd][f] * gm[f][c][b];
                    }
                    up[((e * d + b) * d + c) * d + dd] = v;
                }
            }
        }
    }
    let mut riemann = vec![S::zero(); d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut acc = S::zero();
                    for e in 0..d {
                        acc = acc + conn.g[a][e] * up[((e * d + b) * d + c) * d + dd];
                    }
                    riemann[((a * d + b) * d + c) * d + dd] = acc;
                }
            }
        }
    }
    Ok(CurvatureAt {
        connection: conn,
        riemann,
        dim: d,
    })
}

/// Christoffel symbols at a real point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionAtPoint {
    dim: usize,
    gamma: Vec<f64>,
}

impl ConnectionAtPoint {
    /// `Γ^k_ij`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn torsion_residual(&self) -> f64 {
        let d = self.dim;
        let mut r: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    r = r.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        r
    }
}

fn check_point(cs: &ChartStructure, p: &[f64]) -> Result<()> {
    if p.len() != cs.dim() {
        return Err(GeomError::DimensionMismatch(format!(
            "point has {} coordinates, chart has {}",
            p.len(),
            cs.dim()
        )));
    }
    if !cs.domain.contains(p) {
        return Err(GeomError::OutsideDomain);
    }
    Ok(())
}

pub fn christoffels(cs: &ChartStructure, p: &[f64]) -> Result<ConnectionAtPoint> {
    check_point(cs, p)?;
    let conn = connection::<f64>(cs, p)?;
    Ok(ConnectionAtPoint {
        dim: cs.dim(),
        gamma: conn.gamma.into_iter().flatten().flatten().collect(),
    })
}

pub fn riemann_at_point(cs: &ChartStructure, p: &[f64]) -> Result<CurvatureTensor> {
    check_point(cs, p)?;
    let cur = curvature::<f64>(cs, p)?;
    let d = cs.dim();
    let g = MetricAtPoint::new(DMatrix::from_fn(d, d, |i, j| cur.connection.g[i][j]))?;
    let t = TensorAtPoint::from_data(d, [Variance::Co; 4], cur.riemann)?;
    CurvatureTensor::new(t, g)
}

/// Coordinate Ricci tensor `g^{bd} R_abcd` at a real point.
pub fn ricci_at_point(cs: &ChartStructure, p: &[f64]) -> Result<TensorAtPoint> {
    check_point(cs, p)?;
    let ric = curvature::<f64>(cs, p)?.ricci();
    Ok(TensorAtPoint::from_fn(cs.dim(), [Variance::Co; 2], |i| {
        ric[i[0]][i[1]]
    }))
}

/// Values and first partials of every structure field at a point.
/// `d*[c]` holds the derivative along coordinate `c`.
struct FieldJet {
    d: usize,
    g: Mat<f64>,
    dg: Vec<Mat<f64>>,
    phi: Mat<f64>,
    dphi: Vec<Mat<f64>>,
    xi: Mat<f64>,
    dxi: Vec<Mat<f64>>,
    eta: Mat<f64>,
    deta: Vec<Mat<f64>>,
    gamma: Vec<Mat<f64>>,
}

fn split(m: Mat<Dual<f64>>) -> (Mat<f64>, Mat<f64>) {
    let re = m.iter().map(|r| r.iter().map(|v| v.re).collect()).collect();
    let du = m.iter().map(|r| r.iter().map(|v| v.du).collect()).collect();
    (re, du)
}

fn field_jet(cs: &ChartStructure, p: &[f64]) -> Result<FieldJet> {
    check_point(cs, p)?;
    let d = cs.dim();
    let mut jet = FieldJet {
        d,
        g: vec![],
        dg: vec![],
        phi: vec![],
        dphi: vec![],
        xi: vec![],
        dxi: vec![],
        eta: vec![],
        deta: vec![],
        gamma: connection::<f64>(cs, p)?.gamma,
    };
    for c in 0..d {
        let q = seed_axis(p, c);
        let (g, dg) = split(cs.metric_at(&q));
        let (phi, dphi) = split(cs.phi_at(&q));
        let (xi, dxi) = split(cs.xi_at(&q));
        let (eta, deta) = split(cs.eta_at(&q));
        if c == 0 {
            jet.g = g;
            jet.phi = phi;
            jet.xi = xi;
            jet.eta = eta;
        }
        jet.dg.push(dg);
        jet.dphi.push(dphi);
        jet.dxi.push(dxi);
        jet.deta.push(deta);
    }
    Ok(jet)
}

/// `max |∇_k g_ij|` with `∂g` from AD and Γ from the connection.
pub fn metric_compatibility_residual(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    let j = field_jet(cs, p)?;
    let d = j.d;
    let mut r: f64 = 0.0;
    for k in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut v = j.dg[k][a][b];
                for l in 0..d {
                    v -= j.gamma[l][k][a] * j.g[l][b] + j.gamma[l][k][b] * j.g[a][l];
                }
                r = r.max(v.abs());
            }
        }
    }
    Ok(r)
}

/// `dη^α(X,Y) = ½{X(η(Y)) − Y(η(X)) − η([X,Y])}`
pub fn exterior_d_eta(cs: &ChartStructure, p: &[f64], alpha: usize) -> Result<TensorAtPoint> {
    if alpha >= cs.s {
        return Err(GeomError::InvalidParameters(format!(
            "α = {alpha} but s = {}",
            cs.s
        )));
    }
    let j = field_jet(cs, p)?;
    Ok(d_eta(&j, alpha))
}

fn d_eta(j: &FieldJet, alpha: usize) -> TensorAtPoint {
    TensorAtPoint::from_fn(j.d, [Variance::Co; 2], |i| {
        0.5 * (j.deta[i[0]][alpha][i[1]] - j.deta[i[1]][alpha][i[0]])
    })
}

/// `[φ,φ]^c_ij` on coordinate fields.
fn nijenhuis_torsion_jet(j: &FieldJet) -> TensorAtPoint {
    let d = j.d;
    let mut t = TensorAtPoint::zeros(d, [Variance::Contra, Variance::Co, Variance::Co]);
    for c in 0..d {
        for a in 0..d {
            for b in 0..d {
                // [φ∂_a, φ∂_b] − φ[φ∂_a, ∂_b] − φ[∂_a, φ∂_b]   (φ²[∂_a,∂_b] = 0)
                let mut v = 0.0;
                for e in 0..d {
                    v += j.phi[e][a] * j.dphi[e][c][b] - j.phi[e][b] * j.dphi[e][c][a];
                    v += j.phi[c][e] * (j.dphi[b][e][a] - j.dphi[a][e][b]);
                }
                t.set(&[c, a, b], v);
            }
        }
    }
    t
}

fn normality_jet(j: &FieldJet, s: usize) -> TensorAtPoint {
    let mut n = nijenhuis_torsion_jet(j);
    let d = j.d;
    for alpha in 0..s {
        let de = d_eta(j, alpha);
        for c in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let v = n.get(&[c, a, b]) + 2.0 * de.get(&[a, b]) * j.xi[alpha][c];
                    n.set(&[c, a, b], v);
                }
            }
        }
    }
    n
}

/// `N = [φ,φ] + 2 dη^α ⊗ ξ_α` as a (1,2) tensor.
pub fn nijenhuis_phi(cs: &ChartStructure, p: &[f64]) -> Result<TensorAtPoint> {
    let j = field_jet(cs, p)?;
    Ok(normality_jet(&j, cs.s))
}

/// The Nijenhuis torsion `[φ,φ]` alone.
pub fn nijenhuis_torsion(cs: &ChartStructure, p: &[f64]) -> Result<TensorAtPoint> {
    let j = field_jet(cs, p)?;
    Ok(nijenhuis_torsion_jet(&j))
}

fn fundamental_form_jet(j: &FieldJet) -> Mat<f64> {
    let d = j.d;
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..d).map(|e| j.g[a][e] * j.phi[e][b]).sum())
                .collect()
        })
        .collect()
}

fn almost_s_jet(j: &FieldJet, s: usize) -> f64 {
    let big_phi = fundamental_form_jet(j);
    let mut r: f64 = 0.0;
    for alpha in 0..s {
        let de = d_eta(j, alpha);
        for a in 0..j.d {
            for b in 0..j.d {
                r = r.max((big_phi[a][b] - de.get(&[a, b])).abs());
            }
        }
    }
    r
}

/// `max_α |Φ − dη^α|`
pub fn check_almost_s(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    let j = field_jet(cs, p)?;
    Ok(almost_s_jet(&j, cs.s))
}

fn nabla_phi_jet(j: &FieldJet, cs: &ChartStructure) -> f64 {
    let d = j.d;
    let eps: Vec<f64> = cs.eps.iter().map(|e| e.value()).collect();
    let xi_bar: Vec<f64> = (0..d)
        .map(|a| (0..cs.s).map(|al| j.xi[al][a]).sum())
        .collect();
    let eta_bar: Vec<f64> = (0..d)
        .map(|a| (0..cs.s).map(|al| eps[al] * j.eta[al][a]).sum())
        .collect();
    let phi2: Mat<f64> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..d).map(|e| j.phi[a][e] * j.phi[e][b]).sum())
                .collect()
        })
        .collect();
    let gphi: Mat<f64> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    let mut v = 0.0;
                    for e in 0..d {
                        for f in 0..d {
                            v += j.phi[e][a] * j.g[e][f] * j.phi[f][b];
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let mut r: f64 = 0.0;
    // (∇_i φ)^a_b vs g(φ∂_i, φ∂_b) ξ̄^a + η̄_b (φ²)^a_i
    for i in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut lhs = j.dphi[i][a][b];
                for e in 0..d {
                    lhs += j.gamma[a][i][e] * j.phi[e][b] - j.gamma[e][i][b] * j.phi[a][e];
                }
                let rhs = gphi[i][b] * xi_bar[a] + eta_bar[b] * phi2[a][i];
                r = r.max((lhs - rhs).abs());
            }
        }
    }
    r
}

/// Residual of `(∇_X φ)Y = g(φX,φY) ξ̄ + η̄(Y) φ²X` on coordinate fields.
pub fn check_nabla_phi(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    let j = field_jet(cs, p)?;
    Ok(nabla_phi_jet(&j, cs))
}

fn nabla_xi_jet(j: &FieldJet, cs: &ChartStructure) -> f64 {
    let d = j.d;
    let mut r: f64 = 0.0;
    // (∇_i ξ_α)^a
    let nabla = |alpha: usize, i: usize, a: usize| {
        let mut v = j.dxi[i][alpha][a];
        for e in 0..d {
            v += j.gamma[a][i][e] * j.xi[alpha][e];
        }
        v
    };
    for alpha in 0..cs.s {
        let e_a = cs.eps[alpha].value();
        for i in 0..d {
            for a in 0..d {
                r = r.max((nabla(alpha, i, a) + e_a * j.phi[a][i]).abs());
            }
        }
        for beta in 0..cs.s {
            for a in 0..d {
                let v: f64 = (0..d).map(|i| j.xi[alpha][i] * nabla(beta, i, a)).sum();
                r = r.max(v.abs());
            }
        }
    }
    r
}

/// Residual of `∇_X ξ_α = −ε_α φX` together with `∇_{ξ_α} ξ_β = 0`.
pub fn check_nabla_xi(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    let j = field_jet(cs, p)?;
    Ok(nabla_xi_jet(&j, cs))
}

fn killing_jet(j: &FieldJet, s: usize) -> f64 {
    let d = j.d;
    let mut r: f64 = 0.0;
    for alpha in 0..s {
        let xi = &j.xi[alpha];
        for a in 0..d {
            for b in 0..d {
                // (L_ξ g)_ab = ξ^k ∂_k g_ab + g_kb ∂_a ξ^k + g_ak ∂_b ξ^k
                let mut v = 0.0;
                for k in 0..d {
                    v += xi[k] * j.dg[k][a][b]
                        + j.g[k][b] * j.dxi[a][alpha][k]
                        + j.g[a][k] * j.dxi[b][alpha][k];
                }
                r = r.max(v.abs());
            }
        }
    }
    r
}

/// `max |L_{ξ_α} g|`; connection-free.
pub fn check_killing(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    let j = field_jet(cs, p)?;
    Ok(killing_jet(&j, cs.s))
}

/// Names of the per-point S-gates, in report order.
pub const S_GATE_NAMES: [&str; 8] = [
    "structure_axioms",
    "torsion_free",
    "metric_compatibility",
    "normality",
    "almost_s",
    "nabla_phi",
    "nabla_xi",
    "killing",
];

/// Every field-level gate at one point.
pub fn s_gates(cs: &ChartStructure, p: &[f64]) -> Result<Vec<NamedResidual>> {
    let j = field_jet(cs, p)?;
    let st = cs.point_structure(p)?;
    let axioms = validate_structure(&st).max();
    let conn = christoffels(cs, p)?;
    let mut compat: f64 = 0.0;
    for k in 0..j.d {
        for a in 0..j.d {
            for b in 0..j.d {
                let mut v = j.dg[k][a][b];
                for l in 0..j.d {
                    v -= j.gamma[l][k][a] * j.g[l][b] + j.gamma[l][k][b] * j.g[a][l];
                }
                compat = compat.max(v.abs());
            }
        }
    }
    let values = [
        axioms,
        conn.torsion_residual(),
        compat,
        normality_jet(&j, cs.s).max_abs(),
        almost_s_jet(&j, cs.s),
        nabla_phi_jet(&j, cs),
        nabla_xi_jet(&j, cs),
        killing_jet(&j, cs.s),
    ];
    Ok(S_GATE_NAMES
        .iter()
        .zip(values)
        .map(|(name, residual)| NamedResidual {
            name: name.to_string(),
            residual,
        })
        .collect())
}

/// Gate residuals maximised over a set of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSummary {
    pub gates: Vec<NamedResidual>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GateSummary {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.gates
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.residual)
    }

    pub fn failing(&self) -> Vec<&NamedResidual> {
        self.gates
            .iter()
            .filter(|g| g.residual >= self.tolerance)
            .collect()
    }
}

pub fn gate_summary(cs: &ChartStructure, points: &[Vec<f64>], tol: f64) -> Result<GateSummary> {
    let mut gates: Vec<NamedResidual> = S_GATE_NAMES
        .iter()
        .map(|n| NamedResidual {
            name: n.to_string(),
            residual: 0.0,
        })
        .collect();
    for p in points {
        for (acc, g) in gates.iter_mut().zip(s_gates(cs, p)?) {
            acc.residual = acc.residual.max(g.residual);
        }
    }
    let passed = gates.iter().all(|g| g.residual < tol);
    Ok(GateSummary {
        gates,
        tolerance: tol,
        passed,
    })
}

/// Error unless every S-gate passes at every point.
pub fn certify_s(cs: &ChartStructure, points: &[Vec<f64>], tol: f64) -> Result<GateSummary> {
    let summary = gate_summary(cs, points, tol)?;
    if !summary.passed {
        let failing: Vec<String> = summary
            .failing()
            .iter()
            .map(|g| format!("{} = {:.3e}", g.name, g.residual))
            .collect();
        return Err(GeomError::GateFailure(format!(
            "'{}' is not a certified S-structure: {}",
            cs.name,
            failing.join(", ")
        )));
    }
    Ok(summary)
}

/// `max_{α,X} |Ric(X, ξ_α) − 2n ε_α η̄(X)|` over coordinate fields X.
pub fn ricci_xi_residual(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    check_point(cs, p)?;
    let ric = curvature::<f64>(cs, p)?.ricci();
    let xi = cs.xi_at(p);
    let eta = cs.eta_at(p);
    let d = cs.dim();
    let two_n = 2.0 * cs.n as f64;
    let eta_bar: Vec<f64> = (0..d)
        .map(|a| (0..cs.s).map(|al| cs.eps[al].value() * eta[al][a]).sum())
        .collect();
    let mut r: f64 = 0.0;
    for alpha in 0..cs.s {
        for x in 0..d {
            let lhs: f64 = (0..d).map(|a| ric[x][a] * xi[alpha][a]).sum();
            r = r.max((lhs - two_n * cs.eps[alpha].value() * eta_bar[x]).abs());
        }
    }
    Ok(r)
}

/// η-Einstein fit of the coordinate Ricci tensor, generic so that `h` can be
/// differentiated by evaluating at a dual point.
pub struct ChartFit<S> {
    pub h: S,
    pub k: S,
    pub residual: f64,
    pub ricci: Mat<S>,
    pub connection: Connection<S>,
}

pub fn chart_eta_einstein_fit<S: Scalar>(cs: &ChartStructure, p: &[S]) -> Result<ChartFit<S>> {
    let d = cs.dim();
    let cur = curvature(cs, p)?;
    let ric = cur.ricci();
    let g = &cur.connection.g;
    let phi = cs.phi_at(p);
    let eta = cs.eta_at(p);
    let eta_bar: Vec<S> = (0..d)
        .map(|a| {
            (0..cs.s).fold(S::zero(), |acc, al| {
                acc + eta[al][a].scale(cs.eps[al].value())
            })
        })
        .collect();
    let mut target = Vec::with_capacity(d * d);
    let mut basis_g = Vec::with_capacity(d * d);
    let mut basis_eta = Vec::with_capacity(d * d);
    // g(φ∂_i, φ∂_j) = φ^a_i g_ab φ^b_j
    let mut gphi_cols: Mat<S> = vec![vec![S::zero(); d]; d];
    for a in 0..d {
        for j in 0..d {
            let mut acc = S::zero();
            for b in 0..d {
                acc = acc + g[a][b] * phi[b][j];
            }
            gphi_cols[a][j] = acc;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let mut gp = S::zero();
            for a in 0..d {
                gp = gp + phi[a][i] * gphi_cols[a][j];
            }
            target.push(ric[i][j]);
            basis_g.push(gp);
            basis_eta.push(eta_bar[i] * eta_bar[j]);
        }
    }
    let (h, k, residual) = fit_two_basis(&target, &basis_g, &basis_eta)?;
    Ok(ChartFit {
        h,
        k,
        residual,
        ricci: ric,
        connection: cur.connection,
    })
}

/// Directional derivative of the fitted `h` along a tangent vector.
pub fn h_directional_derivative(cs: &ChartStructure, p: &[f64], direction: &[f64]) -> Result<f64> {
    check_point(cs, p)?;
    let fit = chart_eta_einstein_fit::<Dual<f64>>(cs, &seed_along(p, direction))?;
    Ok(fit.h.du)
}

/// `max_m |2n ∂_m h − 2 g^{jk} (∇_j Ric)_{km}|`, the twice-contracted second
/// Bianchi identity with `τ = 2n(h + ε)`.
pub fn contracted_bianchi_at(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    check_point(cs, p)?;
    let d = cs.dim();
    let two_n = 2.0 * cs.n as f64;
    let base = chart_eta_einstein_fit::<f64>(cs, p)?;
    let mut dh = vec![0.0; d];
    let mut dric: Vec<Mat<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let lifted = chart_eta_einstein_fit::<Dual<f64>>(cs, &seed_axis(p, j))?;
        dh[j] = lifted.h.du;
        dric.push(
            lifted
                .ricci
                .iter()
                .map(|r| r.iter().map(|v| v.du).collect())
                .collect(),
        );
    }
    let gamma = &base.connection.gamma;
    let gi = &base.connection.g_inv;
    let ric = &base.ricci;
    let mut worst: f64 = 0.0;
    for m in 0..d {
        let mut div = 0.0;
        for j in 0..d {
            for k in 0..d {
                if gi[j][k] == 0.0 {
                    continue;
                }
                let mut nab = dric[j][k][m];
                for l in 0..d {
                    nab -= gamma[l][j][k] * ric[l][m] + gamma[l][j][m] * ric[k][l];
                }
                div += gi[j][k] * nab;
            }
        }
        worst = worst.max((two_n * dh[m] - 2.0 * div).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{builtin_example, BuiltinExample, ChartField, Domain};
    use crate::tensor::Sign;

    fn chart_2d(g: [[&str; 2]; 2]) -> ChartStructure {
        // a throwaway 2-coordinate "structure" used only for metric checks
        let coords = vec!["r".to_string(), "t".to_string()];
        let f = |s: &str| ChartField::parse(s, &coords).unwrap();
        ChartStructure {
            name: "test2d".into(),
            n: 0,
            s: 2,
            eps: vec![Sign::Plus, Sign::Plus],
            domain: Domain {
                lower: vec![0.5, -1.0],
                upper: vec![3.0, 1.0],
            },
            metric: g.iter().map(|r| r.iter().map(|s| f(s)).collect()).collect(),
            phi: vec![vec![f("0"), f("0")], vec![f("0"), f("0")]],
            xi: vec![vec![f("1"), f("0")], vec![f("0"), f("1")]],
            eta: vec![vec![f("1"), f("0")], vec![f("0"), f("1")]],
            coords,
        }
    }

    #[test]
    fn polar_christoffels() {
        let cs = chart_2d([["1", "0"], ["0", "r^2"]]);
        let c = christoffels(&cs, &[2.0, 0.3]).unwrap();
        assert!((c.get(0, 1, 1) + 2.0).abs() < 1e-14);
        assert!((c.get(1, 0, 1) - 0.5).abs() < 1e-14);
        assert!((c.get(1, 1, 0) - 0.5).abs() < 1e-14);
        // the polar metric is flat
        let r = riemann_at_point(&cs, &[2.0, 0.3]).unwrap();
        assert!(r.components().max_abs() < 1e-13);
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        // θ ∈ [0.5, 3], φ; g = dθ² + sin²θ dφ²
        let cs = chart_2d([["1", "0"], ["0", "sin(r)^2"]]);
        for p in [[0.7, 0.1], [1.3, -0.4], [2.5, 0.9]] {
            let r = riemann_at_point(&cs, &p).unwrap();
            let x = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
            let y = nalgebra::DVector::from_vec(vec![0.0, 1.0]);
            let k = crate::spaceform::sectional_curvature(&r, &x, &y).unwrap();
            assert!((k - 1.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn flat_structure_is_gff_but_not_almost_s() {
        let cs = builtin_example(&BuiltinExample::parse("flat_gff").unwrap()).unwrap();
        let p = vec![0.1, -0.2, 0.3, 0.4, -0.5];
        assert!(riemann_at_point(&cs, &p).unwrap().components().max_abs() == 0.0);
        assert_eq!(nijenhuis_phi(&cs, &p).unwrap().max_abs(), 0.0);
        assert_eq!(exterior_d_eta(&cs, &p, 0).unwrap().max_abs(), 0.0);
        assert_eq!(check_almost_s(&cs, &p).unwrap(), 1.0);
        assert!(validate_structure(&cs.point_structure(&p).unwrap()).is_valid(1e-14));
    }

    #[test]
    fn outside_domain_rejected() {
        let cs = builtin_example(&BuiltinExample::SR4Lorentz).unwrap();
        assert!(matches!(
            christoffels(&cs, &[2.0, 0.0, 0.0, 0.0]),
            Err(GeomError::OutsideDomain)
        ));
        assert!(matches!(
            riemann_at_point(&cs, &[0.0, 0.0]),
            Err(GeomError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn generic_inverse_matches_nalgebra() {
        let m = vec![
            vec![0.0, 2.0, 1.0],
            vec![2.0, -1.0, 0.5],
            vec![1.0, 0.5, 3.0],
        ];
        let inv = invert(&m).unwrap();
        let nm = DMatrix::from_fn(3, 3, |i, j| m[i][j])
            .try_inverse()
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((inv[i][j] - nm[(i, j)]).abs() < 1e-14);
            }
        }
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
    }
}
