// SPDX-License-Identifier: Apache-2.0

//! Schur-type checks: the model space-form tensor is η-Einstein with the
//! closed-form `(h, k)`, and on certified S charts `h` and the φ-sectional
//! curvature `c` are constant across sampled points.
//!
//! Constancy is only ever certified on the sampled chart box.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::geometry::{
    certify_s, chart_eta_einstein_fit, contracted_bianchi_at, h_directional_derivative,
    riemann_at_point, GateSummary,
};
use crate::chart::ChartStructure;
use crate::error::{GeomError, Result};
use crate::gff::{build_adapted_frame, canonical_point_structure, GffPointStructure};
use crate::spaceform::{
    build_space_form_curvature_with, c_from_h, check_characteristic_identities, eta_einstein_fit,
    h_closed_form, phi_sectional_curvature, random_unit_in_image, ricci_from_curvature,
    ricci_xi_residual, scalar_curvature, symmetric_perturbation, tau_closed_form,
    CharacteristicResiduals, CurvatureTensor, EtaEinsteinFit, PhiTermCoefficient, SpaceFormParams,
};
use crate::tensor::sign_sum;
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { reason: String, value: f64 },
    NotApplicable { reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }
}

fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Per-point η-Einstein data of a certified S chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub chart: String,
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub h_values: Vec<f64>,
    pub k_values: Vec<f64>,
    /// `c` recovered from `h` by inverting the closed form.
    pub c_values: Vec<f64>,
    pub fit_residuals: Vec<f64>,
    pub tau_residuals: Vec<f64>,
    pub spread_h: f64,
    pub spread_c: f64,
    /// Max over points of the contracted Bianchi residual.
    pub bianchi_residual: f64,
    /// Max over points and β of `|ξ_β(h)|`.
    pub xi_h_derivative: f64,
    pub gates: GateSummary,
}

impl ScanReport {
    /// Largest `|k − 2n|` over the scan.
    pub fn k_deviation(&self) -> f64 {
        let two_n = 2.0 * self.n as f64;
        self.k_values
            .iter()
            .fold(0.0, |m, k| m.max((k - two_n).abs()))
    }

    pub fn max_fit_residual(&self) -> f64 {
        self.fit_residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn max_tau_residual(&self) -> f64 {
        self.tau_residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

struct PointScan {
    h: f64,
    k: f64,
    residual: f64,
    tau_residual: f64,
    bianchi: f64,
    xi_h: f64,
}

fn scan_point(cs: &ChartStructure, p: &[f64]) -> Result<PointScan> {
    let fit = chart_eta_einstein_fit::<f64>(cs, p)?;
    let d = cs.dim();
    let gi = &fit.connection.g_inv;
    let mut tau = 0.0;
    for a in 0..d {
        for b in 0..d {
            tau += gi[a][b] * fit.ricci[a][b];
        }
    }
    let epsbar = sign_sum(&cs.eps);
    let xi_h = cs
        .xi_at(p)
        .iter()
        .map(|xi| h_directional_derivative(cs, p, xi).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(PointScan {
        h: fit.h,
        k: fit.k,
        residual: fit.residual,
        tau_residual: (tau - tau_closed_form(fit.h, cs.n, epsbar)).abs(),
        bianchi: contracted_bianchi_at(cs, p)?,
        xi_h,
    })
}

/// η-Einstein fit at `npoints` seeded points of a certified S chart.
pub fn scan_eta_einstein(cs: &ChartStructure, npoints: usize, seed: u64) -> Result<ScanReport> {
    let points = cs.sample_points(npoints, seed)?;
    scan_eta_einstein_at(cs, points, tolerance::GATE)
}

pub fn scan_eta_einstein_at(
    cs: &ChartStructure,
    points: Vec<Vec<f64>>,
    gate_tol: f64,
) -> Result<ScanReport> {
    let gates = certify_s(cs, &points, gate_tol)?;
    let per_point = points
        .par_iter()
        .map(|p| scan_point(cs, p))
        .collect::<Result<Vec<_>>>()?;
    let epsbar = sign_sum(&cs.eps);
    let h_values: Vec<f64> = per_point.iter().map(|s| s.h).collect();
    let c_values: Vec<f64> = h_values
        .iter()
        .map(|&h| c_from_h(h, cs.n, epsbar))
        .collect();
    Ok(ScanReport {
        chart: cs.name.clone(),
        n: cs.n,
        spread_h: spread(&h_values),
        spread_c: spread(&c_values),
        k_values: per_point.iter().map(|s| s.k).collect(),
        fit_residuals: per_point.iter().map(|s| s.residual).collect(),
        tau_residuals: per_point.iter().map(|s| s.tau_residual).collect(),
        bianchi_residual: per_point.iter().fold(0.0, |m, s| m.max(s.bianchi)),
        xi_h_derivative: per_point.iter().fold(0.0, |m, s| m.max(s.xi_h)),
        h_values,
        c_values,
        points,
        gates,
    })
}

/// Constancy of `h` across the scan; Schur-type constancy needs `n ≥ 2`.
pub fn schur_h_constancy(report: &ScanReport, n: usize, tol: f64) -> Verdict {
    if n < 2 {
        return Verdict::NotApplicable {
            reason: format!("h-constancy needs n >= 2, chart has n = {n}"),
        };
    }
    if report.spread_h < tol {
        Verdict::Pass
    } else {
        Verdict::Fail {
            reason: "h varies across sampled points".into(),
            value: report.spread_h,
        }
    }
}

/// Everything measured on the model tensor at the canonical point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceFormCheck {
    pub params: SpaceFormParams,
    pub coefficient: PhiTermCoefficient,
    pub fit: EtaEinsteinFit,
    pub h_expected: f64,
    pub k_expected: f64,
    pub tau: f64,
    pub tau_expected: f64,
    /// Extremes of the φ-sectional curvature over random φ-planes.
    pub phi_sectional_min: f64,
    pub phi_sectional_max: f64,
    pub phi_sectional_samples: usize,
    pub ricci_xi_residual: f64,
    pub identities: CharacteristicResiduals,
    pub symmetry_residual: f64,
}

impl SpaceFormCheck {
    pub fn h_error(&self) -> f64 {
        (self.fit.h - self.h_expected).abs()
    }

    pub fn k_error(&self) -> f64 {
        (self.fit.k - self.k_expected).abs()
    }

    /// Largest `|K_φ − target|` over the sampled planes.
    pub fn phi_sectional_error(&self, target: f64) -> f64 {
        (self.phi_sectional_max - target)
            .abs()
            .max((self.phi_sectional_min - target).abs())
    }

    /// η-Einstein with the closed-form coefficients (the corrected tensor's
    /// contract; the printed variant has a different `h`).
    pub fn verdict(&self, tol_fit: f64, tol_coeff: f64) -> Verdict {
        if self.fit.residual >= tol_fit {
            return Verdict::Fail {
                reason: "Ricci is not eta-Einstein".into(),
                value: self.fit.residual,
            };
        }
        if self.k_error() >= tol_coeff {
            return Verdict::Fail {
                reason: "k differs from 2n".into(),
                value: self.k_error(),
            };
        }
        if self.h_error() >= tol_coeff {
            return Verdict::Fail {
                reason: "h differs from the closed form".into(),
                value: self.h_error(),
            };
        }
        Verdict::Pass
    }
}

/// Phi-sectional curvatures at `samples` random unit vectors of `Im(φ)`.
pub fn sample_phi_sectional(
    r: &CurvatureTensor,
    st: &GffPointStructure,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let x = random_unit_in_image(st, &mut rng, None).ok_or_else(|| {
                GeomError::InvalidParameters("no non-lightlike vector found in Im(phi)".into())
            })?;
            phi_sectional_curvature(r, st, &x)
        })
        .collect()
}

/// How [`verify_spaceform_implies_eta_einstein`] builds and probes the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceFormOptions {
    pub coefficient: PhiTermCoefficient,
    /// `(p, q)` causal split of the pairs `(E_i, φE_i)`; `None` means all spacelike.
    pub phi_signature: Option<(usize, usize)>,
    /// Random φ-planes to probe.
    pub samples: usize,
    pub seed: u64,
    /// Scale of a symmetric misfit added to Ricci before fitting (negative control).
    pub ricci_perturbation: f64,
}

impl Default for SpaceFormOptions {
    fn default() -> Self {
        Self {
            coefficient: PhiTermCoefficient::CMinusEps,
            phi_signature: None,
            samples: 100,
            seed: tolerance::DEFAULT_SEED,
            ricci_perturbation: 0.0,
        }
    }
}

/// Build the space-form tensor at the canonical point and measure it.
pub fn verify_spaceform_implies_eta_einstein(
    p: &SpaceFormParams,
    opts: &SpaceFormOptions,
) -> Result<SpaceFormCheck> {
    let st = canonical_point_structure(p.n, p.s, &p.eps, opts.phi_signature.unwrap_or((p.n, 0)))?;
    let r = build_space_form_curvature_with(p, &st, opts.coefficient)?;
    let frame = build_adapted_frame(&st)?;
    let mut ric = ricci_from_curvature(&r, &frame)?;
    if opts.ricci_perturbation != 0.0 {
        ric = ric.plus(&symmetric_perturbation(
            &frame,
            st.metric(),
            opts.ricci_perturbation,
        ));
    }
    let fit = eta_einstein_fit(&ric, &st)?;
    let ks = sample_phi_sectional(&r, &st, opts.samples, opts.seed)?;
    Ok(SpaceFormCheck {
        params: p.clone(),
        coefficient: opts.coefficient,
        h_expected: h_closed_form(p),
        k_expected: 2.0 * p.n as f64,
        tau: scalar_curvature(&ric, &frame),
        tau_expected: tau_closed_form(fit.h, p.n, p.epsbar()),
        fit,
        phi_sectional_min: ks.iter().copied().fold(f64::INFINITY, f64::min),
        phi_sectional_max: ks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        phi_sectional_samples: ks.len(),
        ricci_xi_residual: ricci_xi_residual(&ric, &st),
        identities: check_characteristic_identities(
            &r,
            &st,
            tolerance::SAMPLES_PER_IDENTITY,
            opts.seed,
        ),
        symmetry_residual: r.symmetries().max(),
    })
}

/// The corrected and printed Φ-coefficients side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErratumGuard {
    pub corrected: SpaceFormCheck,
    pub printed: SpaceFormCheck,
    /// `|K_φ − c|` with `(c−ε)/4`.
    pub corrected_error: f64,
    /// `|K_φ − (c + 3ε/2)|` with `(c+ε)/4`.
    pub printed_shift_error: f64,
}

impl ErratumGuard {
    /// The corrected tensor reproduces `c`; the printed one is off by
    /// exactly `3ε/2`, which is a real discrepancy unless `ε = 0`.
    pub fn verdict(&self, tol: f64) -> Verdict {
        if self.corrected_error >= tol {
            return Verdict::Fail {
                reason: "corrected tensor does not reproduce c".into(),
                value: self.corrected_error,
            };
        }
        if self.printed_shift_error >= tol {
            return Verdict::Fail {
                reason: "printed coefficient does not shift c by 3eps/2".into(),
                value: self.printed_shift_error,
            };
        }
        Verdict::Pass
    }
}

pub fn erratum_guard(p: &SpaceFormParams, samples: usize, seed: u64) -> Result<ErratumGuard> {
    let opts = SpaceFormOptions {
        samples,
        seed,
        ..SpaceFormOptions::default()
    };
    let corrected = verify_spaceform_implies_eta_einstein(p, &opts)?;
    let printed = verify_spaceform_implies_eta_einstein(
        p,
        &SpaceFormOptions {
            coefficient: PhiTermCoefficient::CPlusEps,
            ..opts
        },
    )?;
    let corrected_error = corrected.phi_sectional_error(p.c);
    let printed_shift_error = printed.phi_sectional_error(p.c + 1.5 * p.epsbar());
    Ok(ErratumGuard {
        corrected,
        printed,
        corrected_error,
        printed_shift_error,
    })
}

/// Pointwise and across-point behaviour of the φ-sectional curvature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CConstancy {
    /// Mean φ-sectional curvature at each point.
    pub c_values: Vec<f64>,
    /// Max − min over the φ-planes sampled at each point.
    pub pointwise_spreads: Vec<f64>,
    pub spread_c: f64,
    pub verdict: Verdict,
}

/// Decide constancy of `c` from raw φ-sectional samples, one list per point.
/// Pointwise constancy is a precondition; failing it is reported as such.
pub fn c_constancy_from_samples(samples: &[Vec<f64>], tol_pointwise: f64, tol: f64) -> CConstancy {
    let pointwise_spreads: Vec<f64> = samples.iter().map(|s| spread(s)).collect();
    let c_values: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64)
        .collect();
    let spread_c = spread(&c_values);
    let worst_pointwise = pointwise_spreads.iter().fold(0.0, |m: f64, &s| m.max(s));
    let verdict = if worst_pointwise >= tol_pointwise {
        Verdict::Fail {
            reason: "not pointwise constant".into(),
            value: worst_pointwise,
        }
    } else if spread_c >= tol {
        Verdict::Fail {
            reason: "c varies across sampled points".into(),
            value: spread_c,
        }
    } else {
        Verdict::Pass
    };
    CConstancy {
        c_values,
        pointwise_spreads,
        spread_c,
        verdict,
    }
}

/// Per-point φ-sectional samples on a certified S chart, then
/// [`c_constancy_from_samples`].
pub fn verify_c_constancy(
    cs: &ChartStructure,
    npoints: usize,
    planes_per_point: usize,
    seed: u64,
    tol: f64,
) -> Result<CConstancy> {
    let points = cs.sample_points(npoints, seed)?;
    certify_s(cs, &points, tolerance::GATE)?;
    let samples = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let r = riemann_at_point(cs, p)?;
            let st = cs.point_structure(p)?;
            sample_phi_sectional(&r, &st, planes_per_point, seed.wrapping_add(i as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(c_constancy_from_samples(
        &samples,
        tolerance::DIFFERENTIAL,
        tol,
    ))
}

/// Contracted second Bianchi residual at `p`, after certifying the chart
/// there (without the S-gates `h` is meaningless).
pub fn contracted_bianchi_residual(cs: &ChartStructure, p: &[f64]) -> Result<f64> {
    certify_s(cs, &[p.to_vec()], tolerance::GATE)?;
    contracted_bianchi_at(cs, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Sign;

    #[test]
    fn verdict_for_small_n_is_not_applicable() {
        let report = ScanReport {
            chart: "x".into(),
            n: 1,
            points: vec![],
            h_values: vec![],
            k_values: vec![],
            c_values: vec![],
            fit_residuals: vec![],
            tau_residuals: vec![],
            spread_h: 0.0,
            spread_c: 0.0,
            bianchi_residual: 0.0,
            xi_h_derivative: 0.0,
            gates: GateSummary {
                gates: vec![],
                tolerance: 1e-7,
                passed: true,
            },
        };
        assert!(matches!(
            schur_h_constancy(&report, 1, 1e-6),
            Verdict::NotApplicable { .. }
        ));
        assert!(schur_h_constancy(
            &ScanReport {
                spread_h: 1e-9,
                ..report.clone()
            },
            2,
            1e-6
        )
        .is_pass());
        match schur_h_constancy(
            &ScanReport {
                spread_h: 0.3,
                ..report
            },
            2,
            1e-6,
        ) {
            Verdict::Fail { value, .. } => assert_eq!(value, 0.3),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn u2_values() {
        let p = SpaceFormParams::new(1, 2, vec![Sign::Plus, Sign::Minus], 4.0).unwrap();
        let chk = verify_spaceform_implies_eta_einstein(&p, &SpaceFormOptions::default()).unwrap();
        assert!((chk.fit.h - 4.0).abs() < 1e-9);
        assert!((chk.fit.k - 2.0).abs() < 1e-9);
        assert!(chk.verdict(1e-10, 1e-9).is_pass());
    }

    #[test]
    fn spread_of_constant_is_zero() {
        assert_eq!(spread(&[1.5; 4]), 0.0);
        assert_eq!(spread(&[]), 0.0);
        assert_eq!(spread(&[-1.0, 2.0, 0.5]), 3.0);
    }
}
