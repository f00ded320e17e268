// SPDX-License-Identifier: Apache-2.0

//! Dense multilinear algebra on a single tangent space carrying an
//! indefinite, nondegenerate metric.
//!
//! Tensors are stored row-major with the last slot varying fastest. Each
//! slot carries its own [`Variance`], so lowering slot 1 of a (1,3) tensor
//! leaves the slot order untouched.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::tolerance;

/// A causal sign, `+1` or `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Parse `+`, `-`, `+1`, `-1`, `1` (and the Unicode minus).
    pub fn parse(token: &str) -> Option<Sign> {
        match token.trim() {
            "+" | "+1" | "1" => Some(Sign::Plus),
            "-" | "-1" | "−" | "−1" => Some(Sign::Minus),
            _ => None,
        }
    }

    /// All `2^s` sign patterns of length `s`, lexicographic with `+` first.
    pub fn patterns(s: usize) -> Vec<Vec<Sign>> {
        (0..1usize << s)
            .map(|mask| {
                (0..s)
                    .map(|k| {
                        if mask >> (s - 1 - k) & 1 == 1 {
                            Sign::Minus
                        } else {
                            Sign::Plus
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Sign::from_i64(v).ok_or_else(|| serde::de::Error::custom("sign must be 1 or -1"))
    }
}

/// Sum of the sign values.
pub fn sign_sum(signs: &[Sign]) -> f64 {
    signs.iter().map(|s| s.value()).sum()
}

/// Nondegenerate symmetric bilinear form on one tangent space.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAtPoint {
    components: DMatrix<f64>,
    signature: (usize, usize),
}

impl MetricAtPoint {
    pub fn new(components: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(components, tolerance::DEGENERACY)
    }

    pub fn with_tolerance(components: DMatrix<f64>, degeneracy: f64) -> Result<Self> {
        if !components.is_square() || components.nrows() == 0 {
            return Err(GeomError::DimensionMismatch(format!(
                "metric must be square and nonempty, got {}×{}",
                components.nrows(),
                components.ncols()
            )));
        }
        let scale = components.amax().max(1.0);
        let deviation = (&components - components.transpose()).amax();
        if deviation > 1e-12 * scale {
            return Err(GeomError::AsymmetricMetric { deviation });
        }
        check_nondegenerate(&components, degeneracy)?;
        let eig = nalgebra::SymmetricEigen::new(components.clone());
        let pos = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
        let neg = eig.eigenvalues.len() - pos;
        Ok(Self {
            components,
            signature: (pos, neg),
        })
    }

    /// Build a metric and insist that its eigenvalue signs match `declared`.
    pub fn with_signature(components: DMatrix<f64>, declared: (usize, usize)) -> Result<Self> {
        let m = Self::new(components)?;
        if m.signature != declared {
            return Err(GeomError::SignatureMismatch {
                declared_pos: declared.0,
                declared_neg: declared.1,
                pos: m.signature.0,
                neg: m.signature.1,
            });
        }
        Ok(m)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.components * y)[(0, 0)]
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x)
    }

    /// Covector `g(x, ·)`.
    pub fn flat(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.components * x
    }

    pub fn to_tensor(&self) -> TensorAtPoint {
        TensorAtPoint::from_matrix(&self.components, [Variance::Co, Variance::Co])
    }
}

fn check_nondegenerate(m: &DMatrix<f64>, degeneracy: f64) -> Result<()> {
    let sv = m.clone().singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    if largest == 0.0 || smallest <= degeneracy * largest {
        return Err(GeomError::DegenerateMetric { smallest, largest });
    }
    Ok(())
}

/// Inverse of the metric, `g^{ab}`.
pub fn metric_inverse(g: &MetricAtPoint) -> Result<DMatrix<f64>> {
    check_nondegenerate(&g.components, tolerance::DEGENERACY)?;
    let inv = g
        .components
        .clone()
        .lu()
        .try_inverse()
        .ok_or(GeomError::DegenerateMetric {
            smallest: 0.0,
            largest: g.components.amax(),
        })?;
    // symmetrize away roundoff
    Ok((&inv + inv.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variance {
    Contra,
    Co,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorAtPoint {
    dim: usize,
    slots: Vec<Variance>,
    data: Vec<f64>,
}

impl TensorAtPoint {
    pub fn zeros(dim: usize, slots: impl Into<Vec<Variance>>) -> Self {
        let slots = slots.into();
        let len = dim.pow(slots.len() as u32);
        Self {
            dim,
            slots,
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(
        dim: usize,
        slots: impl Into<Vec<Variance>>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Self {
        let mut t = Self::zeros(dim, slots);
        let mut idx = vec![0; t.rank()];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn from_data(dim: usize, slots: impl Into<Vec<Variance>>, data: Vec<f64>) -> Result<Self> {
        let slots = slots.into();
        let len = dim.pow(slots.len() as u32);
        if data.len() != len {
            return Err(GeomError::DimensionMismatch(format!(
                "expected {len} components, got {}",
                data.len()
            )));
        }
        Ok(Self { dim, slots, data })
    }

    pub fn from_matrix(m: &DMatrix<f64>, slots: [Variance; 2]) -> Self {
        Self::from_fn(m.nrows(), slots, |i| m[(i[0], i[1])])
    }

    pub fn from_vector(v: &DVector<f64>, variance: Variance) -> Self {
        Self::from_fn(v.len(), [variance], |i| v[i[0]])
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            dim: 0,
            slots: Vec::new(),
            data: vec![v],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    /// (contravariant count, covariant count)
    pub fn valence(&self) -> (usize, usize) {
        let up = self
            .slots
            .iter()
            .filter(|&&v| v == Variance::Contra)
            .count();
        (up, self.slots.len() - up)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in (0..idx.len()).rev() {
            idx[slot] = flat % self.dim;
            flat /= self.dim;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank());
        self.data[self.flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flatten(idx);
        self.data[k] = v;
    }

    /// Value of a rank-0 tensor.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.rank() == 0).then(|| self.data[0])
    }

    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        (self.rank() == 2).then(|| DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(&[i, j])))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &TensorAtPoint) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            slots: self.slots.clone(),
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn plus(&self, other: &TensorAtPoint) -> Self {
        assert_eq!(self.slots, other.slots, "tensor valence mismatch");
        Self {
            dim: self.dim,
            slots: self.slots.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Evaluate a fully covariant tensor on vector arguments.
    pub fn eval(&self, args: &[&DVector<f64>]) -> f64 {
        assert_eq!(args.len(), self.rank());
        let d = self.dim;
        let dot = |chunk: &[f64], v: &DVector<f64>| {
            chunk.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>()
        };
        // contract the fastest (last) slot first; every step is contiguous
        let Some((last, rest)) = args.split_last() else {
            return self.data[0];
        };
        let mut cur: Vec<f64> = self.data.chunks_exact(d).map(|c| dot(c, last)).collect();
        for v in rest.iter().rev() {
            cur = cur.chunks_exact(d).map(|c| dot(c, v)).collect();
        }
        cur[0]
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.rank() {
            return Err(GeomError::SlotOutOfRange {
                slot,
                rank: self.rank(),
            });
        }
        Ok(())
    }

    /// `out[.., a, ..] = Σ_b m[a][b] t[.., b, ..]` on the given slot.
    fn apply_on_slot(&self, slot: usize, m: &DMatrix<f64>, variance: Variance) -> Self {
        let mut slots = self.slots.clone();
        slots[slot] = variance;
        let mut idx = vec![0; self.rank()];
        let mut src = vec![0; self.rank()];
        let mut out = Self::zeros(self.dim, slots);
        for flat in 0..out.data.len() {
            out.unflatten(flat, &mut idx);
            src.copy_from_slice(&idx);
            let a = idx[slot];
            let mut acc = 0.0;
            for b in 0..self.dim {
                src[slot] = b;
                acc += m[(a, b)] * self.get(&src);
            }
            out.data[flat] = acc;
        }
        out
    }
}

fn check_dims(t: &TensorAtPoint, g: &MetricAtPoint) -> Result<()> {
    if t.dim() != g.dim() {
        return Err(GeomError::DimensionMismatch(format!(
            "tensor dim {} vs metric dim {}",
            t.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Lower a contravariant slot with `g`.
pub fn lower_index(t: &TensorAtPoint, slot: usize, g: &MetricAtPoint) -> Result<TensorAtPoint> {
    t.check_slot(slot)?;
    check_dims(t, g)?;
    if t.slots[slot] != Variance::Contra {
        return Err(GeomError::WrongVariance { slot });
    }
    Ok(t.apply_on_slot(slot, g.components(), Variance::Co))
}

/// Raise a covariant slot with `g⁻¹`.
pub fn raise_index(t: &TensorAtPoint, slot: usize, g: &MetricAtPoint) -> Result<TensorAtPoint> {
    t.check_slot(slot)?;
    check_dims(t, g)?;
    if t.slots[slot] != Variance::Co {
        return Err(GeomError::WrongVariance { slot });
    }
    let inv = metric_inverse(g)?;
    Ok(t.apply_on_slot(slot, &inv, Variance::Contra))
}

/// Metric trace over a pair of slots. Mixed pairs are traced directly; a
/// covariant pair is traced against `g⁻¹` and a contravariant pair against
/// `g`.
pub fn contract(
    t: &TensorAtPoint,
    slot_a: usize,
    slot_b: usize,
    g: &MetricAtPoint,
) -> Result<TensorAtPoint> {
    t.check_slot(slot_a)?;
    t.check_slot(slot_b)?;
    check_dims(t, g)?;
    if slot_a == slot_b {
        return Err(GeomError::SlotOutOfRange {
            slot: slot_b,
            rank: t.rank(),
        });
    }
    let d = t.dim();
    let weights: DMatrix<f64> = match (t.slots[slot_a], t.slots[slot_b]) {
        (Variance::Co, Variance::Co) => metric_inverse(g)?,
        (Variance::Contra, Variance::Contra) => g.components().clone(),
        _ => DMatrix::identity(d, d),
    };
    let kept: Vec<usize> = (0..t.rank())
        .filter(|&k| k != slot_a && k != slot_b)
        .collect();
    let slots: Vec<Variance> = kept.iter().map(|&k| t.slots[k]).collect();
    let out_dim = if kept.is_empty() { 0 } else { d };
    let mut out = TensorAtPoint {
        dim: out_dim,
        slots,
        data: vec![
            0.0;
            if kept.is_empty() {
                1
            } else {
                d.pow(kept.len() as u32)
            }
        ],
    };
    let mut full = vec![0; t.rank()];
    let mut part = vec![0; kept.len()];
    for flat in 0..out.data.len() {
        if !kept.is_empty() {
            out.unflatten(flat, &mut part);
        }
        for (k, &slot) in kept.iter().enumerate() {
            full[slot] = part[k];
        }
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                let w = weights[(a, b)];
                if w == 0.0 {
                    continue;
                }
                full[slot_a] = a;
                full[slot_b] = b;
                acc += w * t.get(&full);
            }
        }
        out.data[flat] = acc;
    }
    Ok(out)
}

/// Relative size of `g(v,v)` used when pivoting.
fn pivot_quality(v: &DVector<f64>, g: &MetricAtPoint, gscale: f64) -> f64 {
    let nn = v.norm_squared();
    if nn == 0.0 {
        return 0.0;
    }
    g.norm_sq(v).abs() / (nn * gscale)
}

/// Gram–Schmidt for an indefinite metric.
///
/// At every step the remaining (already projected) vectors and all pairwise
/// sums are scored by `|g(v,v)| / (|v|² |g|)`; the best candidate becomes the
/// next frame vector. When a sum `v_i + v_j` wins, `v_i` is dropped and `v_j`
/// kept, which preserves the span.
pub fn orthonormalize_indefinite(
    vectors: &[DVector<f64>],
    g: &MetricAtPoint,
) -> Result<(Vec<DVector<f64>>, Vec<Sign>)> {
    orthonormalize_indefinite_with_tolerance(vectors, g, tolerance::DEGENERACY)
}

pub fn orthonormalize_indefinite_with_tolerance(
    vectors: &[DVector<f64>],
    g: &MetricAtPoint,
    degeneracy: f64,
) -> Result<(Vec<DVector<f64>>, Vec<Sign>)> {
    let wanted = vectors.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != g.dim()) {
        return Err(GeomError::DimensionMismatch(format!(
            "vector of length {} for metric of dim {}",
            v.len(),
            g.dim()
        )));
    }
    let gscale = g.components().amax();
    let mut remaining: Vec<DVector<f64>> = vectors.to_vec();
    let mut frame = Vec::with_capacity(wanted);
    let mut signs = Vec::with_capacity(wanted);

    while !remaining.is_empty() {
        // (quality, i, Some(j) for a sum)
        let mut best: Option<(f64, usize, Option<usize>)> = None;
        for i in 0..remaining.len() {
            let q = pivot_quality(&remaining[i], g, gscale);
            if best.is_none_or(|b| q > b.0) {
                best = Some((q, i, None));
            }
        }
        for i in 0..remaining.len() {
            for j in i + 1..remaining.len() {
                let q = pivot_quality(&(&remaining[i] + &remaining[j]), g, gscale);
                if best.is_none_or(|b| q > b.0) {
                    best = Some((q, i, Some(j)));
                }
            }
        }
        let (quality, i, partner) = best.expect("remaining is nonempty");
        if quality <= degeneracy {
            return Err(GeomError::DegenerateSpan {
                found: frame.len(),
                wanted,
            });
        }
        let v = match partner {
            Some(j) => &remaining[i] + &remaining[j],
            None => remaining[i].clone(),
        };
        remaining.remove(i);
        let nsq = g.norm_sq(&v);
        let sign = Sign::of(nsq);
        let e = v / nsq.abs().sqrt();
        for r in remaining.iter_mut() {
            let coef = sign.value() * g.inner(r, &e);
            *r -= &e * coef;
        }
        // a second projection pass keeps accumulated roundoff at ~1e-15
        for r in remaining.iter_mut() {
            let coef = sign.value() * g.inner(r, &e);
            *r -= &e * coef;
        }
        frame.push(e);
        signs.push(sign);
    }
    Ok((frame, signs))
}

/// Gram matrix `[g(v_i, v_j)]`.
pub fn gram_matrix(vectors: &[DVector<f64>], g: &MetricAtPoint) -> DMatrix<f64> {
    let k = vectors.len();
    DMatrix::from_fn(k, k, |i, j| g.inner(&vectors[i], &vectors[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> MetricAtPoint {
        MetricAtPoint::diagonal(v).unwrap()
    }

    #[test]
    fn identity_and_involutive_inverses() {
        let g = diag(&[1.0, 1.0, 1.0]);
        assert_eq!(metric_inverse(&g).unwrap(), DMatrix::identity(3, 3));
        let g = diag(&[1.0, 1.0, -1.0]);
        assert_eq!(metric_inverse(&g).unwrap(), g.components().clone());
    }

    #[test]
    fn degenerate_metric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            MetricAtPoint::new(m),
            Err(GeomError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            MetricAtPoint::new(m),
            Err(GeomError::AsymmetricMetric { .. })
        ));
    }

    #[test]
    fn declared_signature_checked() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 1.0]));
        assert_eq!(
            MetricAtPoint::with_signature(m.clone(), (2, 1))
                .unwrap()
                .signature(),
            (2, 1)
        );
        assert!(matches!(
            MetricAtPoint::with_signature(m, (3, 0)),
            Err(GeomError::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn lowering_with_identity_copies_components() {
        let g = diag(&[1.0, 1.0, 1.0]);
        let v =
            TensorAtPoint::from_vector(&DVector::from_vec(vec![1.0, -2.0, 3.0]), Variance::Contra);
        let low = lower_index(&v, 0, &g).unwrap();
        assert_eq!(low.data(), v.data());
        assert_eq!(low.valence(), (0, 1));
    }

    #[test]
    fn variance_and_slot_errors() {
        let g = diag(&[1.0, -1.0]);
        let v = TensorAtPoint::from_vector(&DVector::from_vec(vec![1.0, 2.0]), Variance::Co);
        assert!(matches!(
            lower_index(&v, 0, &g),
            Err(GeomError::WrongVariance { slot: 0 })
        ));
        assert!(matches!(
            raise_index(&v, 3, &g),
            Err(GeomError::SlotOutOfRange { .. })
        ));
        assert!(matches!(
            contract(&v, 0, 1, &g),
            Err(GeomError::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_trace_is_dimension() {
        let g = diag(&[1.0, -1.0, 1.0, -1.0]);
        let id = TensorAtPoint::from_fn(4, [Variance::Contra, Variance::Co], |i| {
            (i[0] == i[1]) as u8 as f64
        });
        assert_eq!(contract(&id, 0, 1, &g).unwrap().as_scalar(), Some(4.0));
    }

    #[test]
    fn null_pair_needs_pivoted_recombination() {
        let g = diag(&[1.0, -1.0]);
        let vs = vec![
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
        ];
        let (frame, signs) = orthonormalize_indefinite(&vs, &g).unwrap();
        assert_eq!(signs, vec![Sign::Plus, Sign::Minus]);
        let gram = gram_matrix(&frame, &g);
        assert!(
            (gram - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).amax() < 1e-12
        );
    }

    #[test]
    fn totally_null_span_fails() {
        let g = diag(&[1.0, -1.0, 1.0]);
        let vs = vec![DVector::from_vec(vec![1.0, 1.0, 0.0])];
        assert!(matches!(
            orthonormalize_indefinite(&vs, &g),
            Err(GeomError::DegenerateSpan {
                found: 0,
                wanted: 1
            })
        ));
    }

    #[test]
    fn sign_patterns_enumerate() {
        let p = Sign::patterns(2);
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], vec![Sign::Plus, Sign::Plus]);
        assert_eq!(p[3], vec![Sign::Minus, Sign::Minus]);
        assert_eq!(Sign::parse("−"), Some(Sign::Minus));
    }
}
