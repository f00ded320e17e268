// SPDX-License-Identifier: Apache-2.0

//! Indefinite globally framed f-structures on a single tangent space.
//!
//! A structure is the tuple `(φ, ξ_α, η^α, g, ε_α)` in the coordinates of
//! some basis of `T_pM`, with `dim = 2n + s`. Covectors are stored as
//! column vectors of their components, so `η^α(X) = η^α · X`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::tensor::{sign_sum, MetricAtPoint, Sign, TensorAtPoint, Variance};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq)]
pub struct GffPointStructure {
    n: usize,
    s: usize,
    g: MetricAtPoint,
    phi: DMatrix<f64>,
    xi: Vec<DVector<f64>>,
    eta: Vec<DVector<f64>>,
    eps: Vec<Sign>,
}

impl GffPointStructure {
    /// Assemble a structure; only shapes are checked here. Use
    /// [`validate_structure`] for the axioms.
    pub fn new(
        n: usize,
        s: usize,
        g: MetricAtPoint,
        phi: DMatrix<f64>,
        xi: Vec<DVector<f64>>,
        eta: Vec<DVector<f64>>,
        eps: Vec<Sign>,
    ) -> Result<Self> {
        let dim = 2 * n + s;
        let mismatch = |what: String| Err(GeomError::DimensionMismatch(what));
        if g.dim() != dim {
            return mismatch(format!("metric dim {} but 2n+s = {dim}", g.dim()));
        }
        if phi.nrows() != dim || phi.ncols() != dim {
            return mismatch(format!(
                "φ is {}×{}, expected {dim}×{dim}",
                phi.nrows(),
                phi.ncols()
            ));
        }
        if xi.len() != s || eta.len() != s || eps.len() != s {
            return mismatch(format!(
                "need s = {s} of each of ξ, η, ε; got {}, {}, {}",
                xi.len(),
                eta.len(),
                eps.len()
            ));
        }
        if xi.iter().chain(&eta).any(|v| v.len() != dim) {
            return mismatch(format!("ξ and η must have {dim} components"));
        }
        Ok(Self {
            n,
            s,
            g,
            phi,
            xi,
            eta,
            eps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.s
    }

    pub fn metric(&self) -> &MetricAtPoint {
        &self.g
    }

    /// `φ` as a matrix acting on column vectors.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn xi(&self) -> &[DVector<f64>] {
        &self.xi
    }

    pub fn eta(&self) -> &[DVector<f64>] {
        &self.eta
    }

    pub fn eps(&self) -> &[Sign] {
        &self.eps
    }

    /// `ε = Σ ε_α`
    pub fn epsbar(&self) -> f64 {
        sign_sum(&self.eps)
    }

    pub fn apply_phi(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.phi * v
    }

    /// `−φ²`, the projector onto `Im(φ)` along `span(ξ)`.
    pub fn image_projector(&self) -> DMatrix<f64> {
        -(&self.phi * &self.phi)
    }

    /// `ξ̄ = Σ ξ_α`
    pub fn xi_bar(&self) -> DVector<f64> {
        self.xi
            .iter()
            .fold(DVector::zeros(self.dim()), |acc, x| acc + x)
    }

    /// `η̄ = Σ ε_α η^α`
    pub fn eta_bar(&self) -> DVector<f64> {
        self.eta
            .iter()
            .zip(&self.eps)
            .fold(DVector::zeros(self.dim()), |acc, (e, s)| {
                acc + e * s.value()
            })
    }

    /// Components of `g(φ·, φ·)`.
    pub fn phi_metric(&self) -> DMatrix<f64> {
        self.phi.transpose() * self.g.components() * &self.phi
    }

    /// The same structure expressed in a new basis whose vectors are the
    /// columns of `basis` (old components `v = basis · v'`).
    pub fn in_basis(&self, basis: &DMatrix<f64>) -> Result<Self> {
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::InvalidParameters("change of basis is singular".into()))?;
        let g = basis.transpose() * self.g.components() * basis;
        let g = MetricAtPoint::new((&g + g.transpose()) * 0.5)?;
        Self::new(
            self.n,
            self.s,
            g,
            &inv * &self.phi * basis,
            self.xi.iter().map(|x| &inv * x).collect(),
            self.eta.iter().map(|e| basis.transpose() * e).collect(),
            self.eps.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedResidual {
    pub name: String,
    pub residual: f64,
}

/// One residual per structure axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureResiduals {
    pub entries: Vec<NamedResidual>,
}

impl StructureResiduals {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.residual)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.residual))
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.residual < tol)
    }
}

/// Residual of every g.f.f axiom, evaluated on the standard basis.
///
/// Invalid structures produce large residuals, never errors.
pub fn validate_structure(st: &GffPointStructure) -> StructureResiduals {
    let d = st.dim();
    let g = st.g.components();
    let phi = &st.phi;
    let id = DMatrix::<f64>::identity(d, d);

    let mut frame_part = DMatrix::zeros(d, d);
    let mut eps_eta_eta = DMatrix::zeros(d, d);
    for a in 0..st.s {
        frame_part += &st.xi[a] * st.eta[a].transpose();
        eps_eta_eta += &st.eta[a] * st.eta[a].transpose() * st.eps[a].value();
    }
    let phi2 = phi * phi;

    let mut duality: f64 = 0.0;
    let mut norms: f64 = 0.0;
    let mut xi_dual: f64 = 0.0;
    let mut phi_xi: f64 = 0.0;
    let mut eta_phi: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for a in 0..st.s {
        for b in 0..st.s {
            let delta = (a == b) as u8 as f64;
            duality = duality.max((st.eta[a].dot(&st.xi[b]) - delta).abs());
        }
        norms = norms.max((st.g.norm_sq(&st.xi[a]) - st.eps[a].value()).abs());
        xi_dual = xi_dual.max((g * &st.xi[a] - &st.eta[a] * st.eps[a].value()).amax());
        phi_xi = phi_xi.max((phi * &st.xi[a]).amax());
        eta_phi = eta_phi.max((phi.transpose() * &st.eta[a]).amax());
        // g(φX, ξ_α) for X over the standard basis
        orth = orth.max((phi.transpose() * g * &st.xi[a]).amax());
    }

    let g_phi = g * phi;
    let rank = phi.clone().rank(1e-8 * phi.amax().max(1.0)) as f64;

    let entries = vec![
        ("phi_squared", (&phi2 + &id - &frame_part).amax()),
        ("eta_xi_duality", duality),
        (
            "metric_compatibility",
            (st.phi_metric() - g + &eps_eta_eta).amax(),
        ),
        ("xi_metric_dual", xi_dual),
        ("phi_skew", (&g_phi + g_phi.transpose()).amax()),
        ("phi_xi", phi_xi),
        ("eta_phi", eta_phi),
        ("xi_norms", norms),
        ("phi_rank", (rank - (2 * st.n) as f64).abs()),
        ("image_orthogonal", orth),
        ("phi_cubed", (&phi2 * phi + phi).amax()),
    ];
    StructureResiduals {
        entries: entries
            .into_iter()
            .map(|(name, residual)| NamedResidual {
                name: name.to_string(),
                residual,
            })
            .collect(),
    }
}

/// The model structure on `R^{2n+s}`: basis `(E_1..E_n, φE_1..φE_n, ξ_1..ξ_s)`
/// with `g = diag(σ, σ, ε)` where `σ` has `p` plus and `q` minus signs.
pub fn canonical_point_structure(
    n: usize,
    s: usize,
    eps: &[Sign],
    phi_signature: (usize, usize),
) -> Result<GffPointStructure> {
    if eps.len() != s {
        return Err(GeomError::InvalidParameters(format!(
            "eps has {} entries but s = {s}",
            eps.len()
        )));
    }
    if phi_signature.0 + phi_signature.1 != n {
        return Err(GeomError::InvalidParameters(format!(
            "φ-signature ({}, {}) must sum to n = {n}",
            phi_signature.0, phi_signature.1
        )));
    }
    let d = 2 * n + s;
    let sigma: Vec<f64> = (0..n)
        .map(|i| if i < phi_signature.0 { 1.0 } else { -1.0 })
        .collect();
    let mut diag = Vec::with_capacity(d);
    diag.extend(&sigma);
    diag.extend(&sigma);
    diag.extend(eps.iter().map(|e| e.value()));
    let g = MetricAtPoint::diagonal(&diag)?;

    let mut phi = DMatrix::zeros(d, d);
    for i in 0..n {
        phi[(n + i, i)] = 1.0;
        phi[(i, n + i)] = -1.0;
    }
    let unit = |k: usize| {
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        v
    };
    let xi: Vec<_> = (0..s).map(|a| unit(2 * n + a)).collect();
    let eta = xi.clone();
    GffPointStructure::new(n, s, g, phi, xi, eta, eps.to_vec())
}

/// Orthonormal φ-adapted frame `(E_i, φE_i, ξ_α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub e: Vec<DVector<f64>>,
    pub phi_e: Vec<DVector<f64>>,
    pub xi: Vec<DVector<f64>>,
    pub eps_i: Vec<Sign>,
    pub eps_xi: Vec<Sign>,
}

impl AdaptedFrame {
    /// All frame vectors in the order `E_1..E_n, φE_1..φE_n, ξ_1..ξ_s`.
    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.e
            .iter()
            .chain(&self.phi_e)
            .chain(&self.xi)
            .cloned()
            .collect()
    }

    /// Signs matching [`AdaptedFrame::vectors`].
    pub fn signs(&self) -> Vec<Sign> {
        self.eps_i
            .iter()
            .chain(&self.eps_i)
            .chain(&self.eps_xi)
            .copied()
            .collect()
    }

    /// `max |g(v_a, v_b) − ε_a δ_ab|`
    pub fn gram_residual(&self, g: &MetricAtPoint) -> f64 {
        let v = self.vectors();
        let signs = self.signs();
        let mut r: f64 = 0.0;
        for a in 0..v.len() {
            for b in 0..v.len() {
                let target = if a == b { signs[a].value() } else { 0.0 };
                r = r.max((g.inner(&v[a], &v[b]) - target).abs());
            }
        }
        r
    }
}

/// Minimum acceptable `|g(x,x)| / (|c|² |g|)` for a candidate `c` projected to `x`.
const FRAME_PIVOT_QUALITY: f64 = 1e-3;
const FRAME_RANDOM_BATCHES: usize = 64;

/// Adapted frame seeded first from the coordinate axes, then from the
/// default pseudo-random stream. For a canonical structure this returns the
/// canonical frame.
pub fn build_adapted_frame(st: &GffPointStructure) -> Result<AdaptedFrame> {
    build_frame_impl(st, true, tolerance::DEFAULT_SEED)
}

/// Adapted frame seeded only from the pseudo-random stream with `seed`.
pub fn build_adapted_frame_seeded(st: &GffPointStructure, seed: u64) -> Result<AdaptedFrame> {
    build_frame_impl(st, false, seed)
}

fn build_frame_impl(st: &GffPointStructure, axes_first: bool, seed: u64) -> Result<AdaptedFrame> {
    let d = st.dim();
    let g = &st.g;
    let gscale = g.components().amax();
    let proj = st.image_projector();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut e: Vec<DVector<f64>> = Vec::with_capacity(st.n);
    let mut phi_e: Vec<DVector<f64>> = Vec::with_capacity(st.n);
    let mut eps_i = Vec::with_capacity(st.n);

    let complement =
        |c: &DVector<f64>, e: &[DVector<f64>], phi_e: &[DVector<f64>], eps_i: &[Sign]| {
            let mut x = &proj * c;
            for _ in 0..2 {
                for j in 0..e.len() {
                    let sj = eps_i[j].value();
                    let a = g.inner(&x, &e[j]) * sj;
                    let b = g.inner(&x, &phi_e[j]) * sj;
                    x -= &e[j] * a + &phi_e[j] * b;
                }
            }
            // measured against the candidate, not the remainder, so that
            // round-off left over from a nearly spanned candidate scores ~0
            let q = g.norm_sq(&x).abs() / (c.norm_squared() * gscale);
            (x, q)
        };

    for _ in 0..st.n {
        let mut chosen: Option<DVector<f64>> = None;
        if axes_first {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for k in 0..d {
                let mut c = DVector::zeros(d);
                c[k] = 1.0;
                let (x, q) = complement(&c, &e, &phi_e, &eps_i);
                if best.as_ref().is_none_or(|b| q > b.0) {
                    best = Some((q, x));
                }
            }
            if let Some((q, x)) = best {
                if q >= FRAME_PIVOT_QUALITY {
                    chosen = Some(x);
                }
            }
        }
        let mut batch = 0;
        while chosen.is_none() && batch < FRAME_RANDOM_BATCHES {
            let c = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let (x, q) = complement(&c, &e, &phi_e, &eps_i);
            if q >= FRAME_PIVOT_QUALITY {
                chosen = Some(x);
            }
            batch += 1;
        }
        let x = chosen.ok_or(GeomError::DegenerateSpan {
            found: e.len(),
            wanted: st.n,
        })?;
        let nsq = g.norm_sq(&x);
        let x = x / nsq.abs().sqrt();
        phi_e.push(st.apply_phi(&x));
        e.push(x);
        eps_i.push(Sign::of(nsq));
    }

    Ok(AdaptedFrame {
        e,
        phi_e,
        xi: st.xi.clone(),
        eps_i,
        eps_xi: st.eps.clone(),
    })
}

/// `Φ(X, Y) = g(X, φY)`
pub fn fundamental_form(st: &GffPointStructure) -> TensorAtPoint {
    let m = st.g.components() * &st.phi;
    TensorAtPoint::from_matrix(&m, [Variance::Co, Variance::Co])
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Sign = Sign::Plus;
    const M: Sign = Sign::Minus;

    #[test]
    fn canonical_contact_like_point() {
        let st = canonical_point_structure(1, 1, &[P], (1, 0)).unwrap();
        assert_eq!(st.dim(), 3);
        assert_eq!(st.metric().components(), &DMatrix::identity(3, 3));
        assert!(validate_structure(&st).is_valid(1e-14));
    }

    #[test]
    fn lorentzian_model_point_has_signature_3_1() {
        let st = canonical_point_structure(1, 2, &[P, M], (1, 0)).unwrap();
        assert_eq!(st.metric().signature(), (3, 1));
        assert!(validate_structure(&st).is_valid(1e-14));
    }

    #[test]
    fn neutral_image_signature() {
        let st = canonical_point_structure(2, 1, &[P], (1, 1)).unwrap();
        assert_eq!(st.metric().signature(), (3, 2));
        assert!(validate_structure(&st).is_valid(1e-14));
    }

    #[test]
    fn scaled_eta_breaks_duality_by_one() {
        let st = canonical_point_structure(1, 1, &[P], (1, 0)).unwrap();
        let bad = GffPointStructure::new(
            1,
            1,
            st.metric().clone(),
            st.phi().clone(),
            st.xi().to_vec(),
            vec![&st.eta()[0] * 2.0],
            st.eps().to_vec(),
        )
        .unwrap();
        let r = validate_structure(&bad);
        assert_eq!(r.get("eta_xi_duality"), Some(1.0));
        assert!(!r.is_valid(1e-10));
    }

    #[test]
    fn shape_errors_are_dimension_mismatch() {
        let st = canonical_point_structure(1, 1, &[P], (1, 0)).unwrap();
        let err = GffPointStructure::new(
            1,
            2,
            st.metric().clone(),
            st.phi().clone(),
            vec![],
            vec![],
            vec![],
        );
        assert!(matches!(err, Err(GeomError::DimensionMismatch(_))));
    }

    #[test]
    fn canonical_frame_is_recovered() {
        let st = canonical_point_structure(2, 2, &[P, M], (1, 1)).unwrap();
        let fr = build_adapted_frame(&st).unwrap();
        let d = st.dim();
        for i in 0..2 {
            let mut ei = DVector::zeros(d);
            ei[i] = 1.0;
            let mut fi = DVector::zeros(d);
            fi[2 + i] = 1.0;
            assert_eq!(fr.e[i], ei);
            assert_eq!(fr.phi_e[i], fi);
        }
        assert_eq!(fr.eps_i, vec![P, M]);
        assert!(fr.gram_residual(st.metric()) < 1e-14);
    }

    #[test]
    fn fundamental_form_values() {
        let st = canonical_point_structure(1, 1, &[P], (1, 0)).unwrap();
        let f = fundamental_form(&st);
        // Φ(E_1, φE_1) = g(E_1, φ²E_1) = −ε_1
        assert_eq!(f.get(&[0, 1]), -1.0);
        for x in 0..3 {
            assert_eq!(f.get(&[2, x]), 0.0);
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(canonical_point_structure(2, 1, &[P, P], (2, 0)).is_err());
        assert!(canonical_point_structure(2, 1, &[P], (1, 0)).is_err());
    }
}
