// SPDX-License-Identifier: Apache-2.0

//! Pointwise curvature model of an indefinite S-space form, its Ricci and
//! scalar traces, and the η-Einstein least-squares fit.
//!
//! Curvature slot convention: `R(X,Y,Z,W) = g(R(Z,W)Y, X)`, so the
//! sectional curvature of `span(x,y)` is `R(x,y,x,y) / Δ`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::gff::{validate_structure, AdaptedFrame, GffPointStructure, NamedResidual};
use crate::scalar::Scalar;
use crate::tensor::{sign_sum, MetricAtPoint, Sign, TensorAtPoint, Variance};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceFormParams {
    pub n: usize,
    pub s: usize,
    pub eps: Vec<Sign>,
    pub c: f64,
    epsbar: f64,
}

impl SpaceFormParams {
    pub fn new(n: usize, s: usize, eps: Vec<Sign>, c: f64) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(GeomError::InvalidParameters(format!(
                "n and s must be at least 1 (got n = {n}, s = {s})"
            )));
        }
        if eps.len() != s {
            return Err(GeomError::InvalidParameters(format!(
                "eps has {} entries but s = {s}",
                eps.len()
            )));
        }
        let epsbar = sign_sum(&eps);
        Ok(Self {
            n,
            s,
            eps,
            c,
            epsbar,
        })
    }

    /// `ε = Σ ε_α`
    pub fn epsbar(&self) -> f64 {
        self.epsbar
    }
}

/// Which coefficient multiplies the Φ-block of the space-form tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhiTermCoefficient {
    /// `(c − ε)/4`: the only choice giving φ-sectional curvature `c`.
    CMinusEps,
    /// `(c + ε)/4`: kept for the regression guard; gives `c + 3ε/2`.
    CPlusEps,
}

impl PhiTermCoefficient {
    pub fn value(self, c: f64, epsbar: f64) -> f64 {
        match self {
            PhiTermCoefficient::CMinusEps => (c - epsbar) / 4.0,
            PhiTermCoefficient::CPlusEps => (c + epsbar) / 4.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhiTermCoefficient::CMinusEps => "(c-eps)/4",
            PhiTermCoefficient::CPlusEps => "(c+eps)/4",
        }
    }
}

/// A (0,4) tensor with the metric it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    components: TensorAtPoint,
    metric: MetricAtPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSymmetries {
    pub antisym_first_pair: f64,
    pub antisym_second_pair: f64,
    pub pair_exchange: f64,
    pub first_bianchi: f64,
}

impl CurvatureSymmetries {
    pub fn max(&self) -> f64 {
        self.antisym_first_pair
            .max(self.antisym_second_pair)
            .max(self.pair_exchange)
            .max(self.first_bianchi)
    }
}

impl CurvatureTensor {
    pub fn new(components: TensorAtPoint, metric: MetricAtPoint) -> Result<Self> {
        if components.rank() != 4 || components.valence() != (0, 4) {
            return Err(GeomError::DimensionMismatch(
                "curvature must be a (0,4) tensor".into(),
            ));
        }
        if components.dim() != metric.dim() {
            return Err(GeomError::DimensionMismatch(format!(
                "curvature dim {} vs metric dim {}",
                components.dim(),
                metric.dim()
            )));
        }
        Ok(Self { components, metric })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn components(&self) -> &TensorAtPoint {
        &self.components
    }

    pub fn metric(&self) -> &MetricAtPoint {
        &self.metric
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.components.get(&[a, b, c, d])
    }

    pub fn eval(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        self.components.eval(&[x, y, z, w])
    }

    /// Add another (0,4) tensor on the same metric.
    pub fn plus(&self, other: &TensorAtPoint) -> Result<Self> {
        Self::new(self.components.plus(other), self.metric.clone())
    }

    pub fn symmetries(&self) -> CurvatureSymmetries {
        let d = self.dim();
        let mut out = CurvatureSymmetries {
            antisym_first_pair: 0.0,
            antisym_second_pair: 0.0,
            pair_exchange: 0.0,
            first_bianchi: 0.0,
        };
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let r = self.get(a, b, c, e);
                        out.antisym_first_pair =
                            out.antisym_first_pair.max((r + self.get(b, a, c, e)).abs());
                        out.antisym_second_pair = out
                            .antisym_second_pair
                            .max((r + self.get(a, b, e, c)).abs());
                        out.pair_exchange = out.pair_exchange.max((r - self.get(c, e, a, b)).abs());
                        let cyc = r + self.get(a, c, e, b) + self.get(a, e, b, c);
                        out.first_bianchi = out.first_bianchi.max(cyc.abs());
                    }
                }
            }
        }
        out
    }
}

/// Space-form tensor built from `(φ, η̄, g)` at a point.
pub fn build_space_form_curvature(
    p: &SpaceFormParams,
    st: &GffPointStructure,
) -> Result<CurvatureTensor> {
    build_space_form_curvature_with(p, st, PhiTermCoefficient::CMinusEps)
}

pub fn build_space_form_curvature_with(
    p: &SpaceFormParams,
    st: &GffPointStructure,
    coefficient: PhiTermCoefficient,
) -> Result<CurvatureTensor> {
    if st.n() != p.n || st.s() != p.s || st.eps() != p.eps.as_slice() {
        return Err(GeomError::StructureMismatch(format!(
            "structure has (n, s) = ({}, {}), params ({}, {})",
            st.n(),
            st.s(),
            p.n,
            p.s
        )));
    }
    let axioms = validate_structure(st);
    if !axioms.is_valid(1e-8) {
        return Err(GeomError::StructureMismatch(format!(
            "structure violates its axioms (max residual {:.3e})",
            axioms.max()
        )));
    }
    let gphi = st.phi_metric();
    let big_phi = st.metric().components() * st.phi();
    let eb = st.eta_bar();
    let a = (p.c + 3.0 * p.epsbar) / 4.0;
    let b = coefficient.value(p.c, p.epsbar);
    let d = st.dim();
    let t = TensorAtPoint::from_fn(d, [Variance::Co; 4], |i| {
        let (x, y, z, w) = (i[0], i[1], i[2], i[3]);
        a * (gphi[(x, z)] * gphi[(y, w)] - gphi[(y, z)] * gphi[(x, w)])
            + b * (big_phi[(x, z)] * big_phi[(y, w)] - big_phi[(y, z)] * big_phi[(x, w)]
                + 2.0 * big_phi[(x, y)] * big_phi[(z, w)])
            + (eb[x] * eb[z] * gphi[(y, w)] - eb[y] * eb[z] * gphi[(x, w)]
                + eb[y] * eb[w] * gphi[(x, z)]
                - eb[x] * eb[w] * gphi[(y, z)])
    });
    CurvatureTensor::new(t, st.metric().clone())
}

/// Relative threshold on `|Δ(π)|` below which a plane counts as degenerate.
pub const PLANE_TOLERANCE: f64 = 1e-10;

/// `k(x, y) = R(x,y,x,y) / (g(x,x)g(y,y) − g(x,y)²)`
pub fn sectional_curvature(r: &CurvatureTensor, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let g = r.metric();
    let delta = g.norm_sq(x) * g.norm_sq(y) - g.inner(x, y).powi(2);
    let scale = x.norm_squared() * y.norm_squared() * g.components().amax().powi(2);
    if delta.abs() <= PLANE_TOLERANCE * scale {
        return Err(GeomError::DegeneratePlane { delta });
    }
    Ok(r.eval(x, y, x, y) / delta)
}

/// Sectional curvature of the φ-plane `span(x, φx)`.
pub fn phi_sectional_curvature(
    r: &CurvatureTensor,
    st: &GffPointStructure,
    x: &DVector<f64>,
) -> Result<f64> {
    let xn = x.norm();
    let residual = if xn == 0.0 {
        f64::INFINITY
    } else {
        (st.image_projector() * x - x).norm() / xn
    };
    if residual > 1e-8 {
        return Err(GeomError::NotInImagePhi { residual });
    }
    let norm = st.metric().norm_sq(x);
    if norm.abs() <= tolerance::DEGENERACY * xn * xn * st.metric().components().amax() {
        return Err(GeomError::LightlikeVector { norm });
    }
    sectional_curvature(r, x, &st.apply_phi(x))
}

/// Random unit non-lightlike vector in `Im(φ)`, optionally of a requested
/// causal character. Returns `None` if that character does not occur.
pub fn random_unit_in_image<R: Rng>(
    st: &GffPointStructure,
    rng: &mut R,
    want: Option<Sign>,
) -> Option<DVector<f64>> {
    let proj = st.image_projector();
    let g = st.metric();
    for _ in 0..256 {
        let c = DVector::from_fn(st.dim(), |_, _| rng.random_range(-1.0..1.0));
        let x = &proj * c;
        let nsq = g.norm_sq(&x);
        let quality = nsq.abs() / x.norm_squared().max(f64::MIN_POSITIVE);
        if quality < 1e-2 {
            continue;
        }
        if want.is_some_and(|w| w != Sign::of(nsq)) {
            continue;
        }
        return Some(x / nsq.abs().sqrt());
    }
    None
}

fn check_frame(r: &CurvatureTensor, frame: &AdaptedFrame) -> Result<()> {
    let residual = frame.gram_residual(r.metric());
    if residual > 1e-8 {
        return Err(GeomError::FrameMismatch { residual });
    }
    Ok(())
}

/// `Ric(X,Y) = Σ_i ε_i {R(X,E_i,Y,E_i) + R(X,φE_i,Y,φE_i)} + Σ_β ε_β R(X,ξ_β,Y,ξ_β)`
pub fn ricci_from_curvature(r: &CurvatureTensor, frame: &AdaptedFrame) -> Result<TensorAtPoint> {
    check_frame(r, frame)?;
    let d = r.dim();
    let vectors = frame.vectors();
    let signs = frame.signs();
    let mut weight = DMatrix::<f64>::zeros(d, d);
    for (v, s) in vectors.iter().zip(&signs) {
        weight += v * v.transpose() * s.value();
    }
    let mut ric = TensorAtPoint::from_fn(d, [Variance::Co; 2], |i| {
        let mut acc = 0.0;
        for c in 0..d {
            for e in 0..d {
                let w = weight[(c, e)];
                if w != 0.0 {
                    acc += w * r.get(i[0], c, i[1], e);
                }
            }
        }
        acc
    });
    // exact symmetry
    for a in 0..d {
        for b in a + 1..d {
            let m = 0.5 * (ric.get(&[a, b]) + ric.get(&[b, a]));
            ric.set(&[a, b], m);
            ric.set(&[b, a], m);
        }
    }
    Ok(ric)
}

/// `max_{α,i} |Ric(e_i, ξ_α) − 2n ε_α η̄(e_i)|` over the basis vectors.
pub fn ricci_xi_residual(ric: &TensorAtPoint, st: &GffPointStructure) -> f64 {
    let eb = st.eta_bar();
    let two_n = 2.0 * st.n() as f64;
    let mut r: f64 = 0.0;
    for (xi, e) in st.xi().iter().zip(st.eps()) {
        for i in 0..st.dim() {
            let lhs: f64 = (0..st.dim()).map(|a| ric.get(&[i, a]) * xi[a]).sum();
            r = r.max((lhs - two_n * e.value() * eb[i]).abs());
        }
    }
    r
}

/// ε-weighted trace of a (0,2) tensor over an orthonormal frame.
pub fn scalar_curvature(ric: &TensorAtPoint, frame: &AdaptedFrame) -> f64 {
    frame
        .vectors()
        .iter()
        .zip(frame.signs())
        .map(|(v, s)| s.value() * ric.eval(&[v, v]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicResiduals {
    pub entries: Vec<NamedResidual>,
}

impl CharacteristicResiduals {
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.residual))
    }
}

pub const CHARACTERISTIC_IDENTITY_NAMES: [&str; 5] = [
    "R(X,Y,xi_a,Z)",
    "R(xi_b,Y,xi_a,Z)",
    "R(xi_b,xi_c,xi_a,Z)",
    "R(phiX,phiY,xi_a,Z)",
    "R(U,Y,V,Z)",
];

fn random_vector<R: Rng>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

/// Residuals of the five curvature identities involving the characteristic
/// fields, each maximised over `samples` random argument tuples.
pub fn check_characteristic_identities(
    r: &CurvatureTensor,
    st: &GffPointStructure,
    samples: usize,
    seed: u64,
) -> CharacteristicResiduals {
    let d = st.dim();
    let s = st.s();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = st.metric();
    let eb = st.eta_bar();
    let gphi = |x: &DVector<f64>, y: &DVector<f64>| g.inner(&st.apply_phi(x), &st.apply_phi(y));
    // R(·,·,ξ_a,·) once per characteristic direction: the inner loops then
    // evaluate rank-3 tensors instead of the full curvature tensor
    let rc = r.components().data();
    let r_xi: Vec<TensorAtPoint> = st
        .xi()
        .iter()
        .map(|xa| {
            TensorAtPoint::from_fn(d, [Variance::Co; 3], |i| {
                (0..d)
                    .map(|k| rc[((i[0] * d + i[1]) * d + k) * d + i[2]] * xa[k])
                    .sum()
            })
        })
        .collect();
    let mut res = [0.0f64; 5];
    for _ in 0..samples {
        let x = random_vector(&mut rng, d);
        let y = random_vector(&mut rng, d);
        let z = random_vector(&mut rng, d);
        let coeffs_u: Vec<f64> = (0..s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coeffs_v: Vec<f64> = (0..s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let combo = |c: &[f64]| {
            st.xi()
                .iter()
                .zip(c)
                .fold(DVector::zeros(d), |acc, (xi, k)| acc + xi * *k)
        };
        let u = combo(&coeffs_u);
        let v = combo(&coeffs_v);
        let (ebx, eby) = (eb.dot(&x), eb.dot(&y));
        let (phix, phiy) = (st.apply_phi(&x), st.apply_phi(&y));
        for a in 0..s {
            let ea = st.eps()[a].value();
            let ra = &r_xi[a];
            let lhs = ra.eval(&[&x, &y, &z]);
            let rhs = ea * (ebx * gphi(&y, &z) - eby * gphi(&x, &z));
            res[0] = res[0].max((lhs - rhs).abs());
            res[3] = res[3].max(ra.eval(&[&phix, &phiy, &z]).abs());
            for b in 0..s {
                let xb = &st.xi()[b];
                let eps_b = st.eps()[b].value();
                let lhs = ra.eval(&[xb, &y, &z]);
                res[1] = res[1].max((lhs - eps_b * ea * gphi(&y, &z)).abs());
                for c in 0..s {
                    res[2] = res[2].max(ra.eval(&[xb, &st.xi()[c], &z]).abs());
                }
            }
        }
        let lhs = r.eval(&u, &y, &v, &z);
        let rhs = eb.dot(&u) * eb.dot(&v) * gphi(&y, &z);
        res[4] = res[4].max((lhs - rhs).abs());
    }
    CharacteristicResiduals {
        entries: CHARACTERISTIC_IDENTITY_NAMES
            .iter()
            .zip(res)
            .map(|(name, residual)| NamedResidual {
                name: name.to_string(),
                residual,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaEinsteinFit {
    pub h: f64,
    pub k: f64,
    /// Max-norm of `Ric − h·g(φ·,φ·) − k·η̄⊗η̄`.
    pub residual: f64,
}

impl EtaEinsteinFit {
    pub fn is_eta_einstein(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

/// Least-squares solution of `target ≈ h·a + k·b` with max-norm residual.
/// Generic so the chart layer can differentiate `h` through it.
pub fn fit_two_basis<S: Scalar>(target: &[S], a: &[S], b: &[S]) -> Result<(S, S, f64)> {
    let mut aa = S::zero();
    let mut ab = S::zero();
    let mut bb = S::zero();
    let mut at = S::zero();
    let mut bt = S::zero();
    for ((&t, &x), &y) in target.iter().zip(a).zip(b) {
        aa = aa + x * x;
        ab = ab + x * y;
        bb = bb + y * y;
        at = at + x * t;
        bt = bt + y * t;
    }
    let det = aa * bb - ab * ab;
    if det.value().abs() <= 1e-12 * aa.value() * bb.value()
        || aa.value() == 0.0
        || bb.value() == 0.0
    {
        return Err(GeomError::SingularDesign);
    }
    let h = (bb * at - ab * bt) / det;
    let k = (aa * bt - ab * at) / det;
    let residual = target
        .iter()
        .zip(a)
        .zip(b)
        .fold(0.0f64, |m, ((&t, &x), &y)| {
            m.max((t - h * x - k * y).value().abs())
        });
    Ok((h, k, residual))
}

/// Fit `Ric = h·g(φ·,φ·) + k·η̄⊗η̄` over all basis pairs.
pub fn eta_einstein_fit(ric: &TensorAtPoint, st: &GffPointStructure) -> Result<EtaEinsteinFit> {
    let d = st.dim();
    if ric.dim() != d || ric.rank() != 2 {
        return Err(GeomError::DimensionMismatch(
            "Ricci must be a (0,2) tensor on the structure's space".into(),
        ));
    }
    let gphi = st.phi_metric();
    let eb = st.eta_bar();
    let mut target = Vec::with_capacity(d * d);
    let mut a = Vec::with_capacity(d * d);
    let mut b = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            target.push(ric.get(&[i, j]));
            a.push(gphi[(i, j)]);
            b.push(eb[i] * eb[j]);
        }
    }
    let (h, k, residual) = fit_two_basis(&target, &a, &b)?;
    Ok(EtaEinsteinFit { h, k, residual })
}

/// `δ (u♭⊗v♭ + v♭⊗u♭)` for two frame vectors; a misfit that no
/// `h g(φ·,φ·) + k η̄⊗η̄` can absorb when `u ⊥ v` inside `Im(φ)`.
pub fn symmetric_perturbation(
    frame: &AdaptedFrame,
    g: &MetricAtPoint,
    delta: f64,
) -> TensorAtPoint {
    let u = g.flat(&frame.e[0]);
    let v = if frame.e.len() > 1 {
        g.flat(&frame.e[1])
    } else {
        g.flat(&frame.phi_e[0])
    };
    TensorAtPoint::from_fn(g.dim(), [Variance::Co; 2], |i| {
        delta * (u[i[0]] * v[i[1]] + v[i[0]] * u[i[1]])
    })
}

/// `h = ½{n(c + 3ε) + c − ε}`
pub fn h_closed_form(p: &SpaceFormParams) -> f64 {
    let n = p.n as f64;
    0.5 * (n * (p.c + 3.0 * p.epsbar) + p.c - p.epsbar)
}

/// `τ = 2n(h + ε)`
pub fn tau_closed_form(h: f64, n: usize, epsbar: f64) -> f64 {
    2.0 * n as f64 * (h + epsbar)
}

/// Inverse of [`h_closed_form`] in `c`.
pub fn c_from_h(h: f64, n: usize, epsbar: f64) -> f64 {
    let n = n as f64;
    (2.0 * h - 3.0 * n * epsbar + epsbar) / (n + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gff::{build_adapted_frame, canonical_point_structure};

    const P: Sign = Sign::Plus;
    const M: Sign = Sign::Minus;

    fn model(
        n: usize,
        eps: &[Sign],
        c: f64,
    ) -> (SpaceFormParams, GffPointStructure, CurvatureTensor) {
        let p = SpaceFormParams::new(n, eps.len(), eps.to_vec(), c).unwrap();
        let st = canonical_point_structure(n, eps.len(), eps, (n, 0)).unwrap();
        let r = build_space_form_curvature(&p, &st).unwrap();
        (p, st, r)
    }

    #[test]
    fn params_reject_zero_s() {
        assert!(SpaceFormParams::new(2, 0, vec![], 1.0).is_err());
        assert!(SpaceFormParams::new(2, 2, vec![P], 1.0).is_err());
    }

    #[test]
    fn mismatched_structure_rejected() {
        let p = SpaceFormParams::new(2, 1, vec![P], 1.0).unwrap();
        let st = canonical_point_structure(1, 1, &[P], (1, 0)).unwrap();
        assert!(matches!(
            build_space_form_curvature(&p, &st),
            Err(GeomError::StructureMismatch(_))
        ));
    }

    #[test]
    fn mixed_plane_sectional_curvature() {
        let (p, st, r) = model(2, &[P], 1.0);
        let fr = build_adapted_frame(&st).unwrap();
        let k = sectional_curvature(&r, &fr.e[0], &fr.e[1]).unwrap();
        assert!((k - (p.c + 3.0 * p.epsbar()) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn xi_plane_sectional_curvature_is_eps() {
        let (_, st, r) = model(2, &[P, M], 0.5);
        let fr = build_adapted_frame(&st).unwrap();
        for (xi, e) in st.xi().iter().zip(st.eps()) {
            let k = sectional_curvature(&r, &fr.e[0], xi).unwrap();
            assert!((k - e.value()).abs() < 1e-14, "{k}");
        }
    }

    #[test]
    fn null_plane_rejected() {
        let (_, st, r) = model(1, &[P, M], 0.0);
        // ℓ = φE_1 + ξ_2 is null and orthogonal to x = E_1, so Δ(x, x+ℓ) = 0
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let l = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]) + &st.xi()[1];
        assert!(matches!(
            sectional_curvature(&r, &x, &(&x + &l)),
            Err(GeomError::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn plane_basis_change_invariant() {
        let (_, _, r) = model(2, &[P, M], 4.0);
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]);
        let y = DVector::from_vec(vec![-0.1, 0.6, 0.2, -0.3, 0.2, 0.9]);
        let k1 = sectional_curvature(&r, &x, &y).unwrap();
        let k2 = sectional_curvature(&r, &(&x * 2.0), &(&x + &y)).unwrap();
        assert!((k1 - k2).abs() < 1e-10);
    }

    #[test]
    fn phi_sectional_errors() {
        let (_, st, r) = model(2, &[P], 1.0);
        assert!(matches!(
            phi_sectional_curvature(&r, &st, &st.xi()[0]),
            Err(GeomError::NotInImagePhi { .. })
        ));
        let st = canonical_point_structure(2, 1, &[P], (1, 1)).unwrap();
        let p = SpaceFormParams::new(2, 1, vec![P], 1.0).unwrap();
        let r = build_space_form_curvature(&p, &st).unwrap();
        // E_1 + E_2 with signs (+,−) is lightlike
        let x = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            phi_sectional_curvature(&r, &st, &x),
            Err(GeomError::LightlikeVector { .. })
        ));
    }

    #[test]
    fn ricci_on_characteristic_directions() {
        let (p, st, r) = model(2, &[P, M, M], -2.0);
        let fr = build_adapted_frame(&st).unwrap();
        let ric = ricci_from_curvature(&r, &fr).unwrap();
        for (a, xa) in st.xi().iter().enumerate() {
            for (b, xb) in st.xi().iter().enumerate() {
                let expected = 2.0 * p.n as f64 * st.eps()[a].value() * st.eps()[b].value();
                assert!((ric.eval(&[xb, xa]) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_mismatch_detected() {
        let (_, st, r) = model(1, &[P], 1.0);
        let mut fr = build_adapted_frame(&st).unwrap();
        fr.e[0] *= 2.0;
        assert!(matches!(
            ricci_from_curvature(&r, &fr),
            Err(GeomError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn zero_ricci_has_zero_trace() {
        let (_, st, _) = model(1, &[P], 1.0);
        let fr = build_adapted_frame(&st).unwrap();
        let zero = TensorAtPoint::zeros(3, [Variance::Co; 2]);
        assert_eq!(scalar_curvature(&zero, &fr), 0.0);
    }

    #[test]
    fn singular_design_guarded() {
        let t = [1.0, 2.0, 3.0];
        let a = [1.0, 1.0, 1.0];
        let b = [2.0, 2.0, 2.0];
        assert!(matches!(
            fit_two_basis(&t, &a, &b),
            Err(GeomError::SingularDesign)
        ));
    }

    #[test]
    fn closed_forms() {
        let u2 = SpaceFormParams::new(1, 2, vec![P, M], 4.0).unwrap();
        assert_eq!(h_closed_form(&u2), 4.0);
        let p = SpaceFormParams::new(2, 1, vec![P], 1.0).unwrap();
        assert_eq!(h_closed_form(&p), 4.0);
        assert_eq!(tau_closed_form(4.0, 2, 1.0), 20.0);
        let p = SpaceFormParams::new(2, 1, vec![P], -3.0).unwrap();
        assert_eq!(h_closed_form(&p), -2.0);
        assert_eq!(c_from_h(-2.0, 2, 1.0), -3.0);
    }
}
