// SPDX-License-Identifier: Apache-2.0

use gff_core::gff::{
    build_adapted_frame, build_adapted_frame_seeded, canonical_point_structure, fundamental_form,
    validate_structure, GffPointStructure,
};
use gff_core::schur::{erratum_guard, verify_spaceform_implies_eta_einstein, SpaceFormOptions};
use gff_core::spaceform::*;
use gff_core::tensor::{contract, Sign};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_basis(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(d, d, |i, j| {
        rng.random_range(-0.4..0.4) + (i == j) as u8 as f64
    })
}

fn all_signatures(n: usize) -> Vec<(usize, usize)> {
    (0..=n).map(|q| (n - q, q)).collect()
}

#[test]
fn canonical_structures_satisfy_axioms() {
    for n in 1..=4 {
        for s in 1..=3 {
            for eps in Sign::patterns(s) {
                for sig in all_signatures(n) {
                    let st = canonical_point_structure(n, s, &eps, sig).unwrap();
                    let res = validate_structure(&st);
                    assert!(res.is_valid(1e-12), "n={n} s={s} {eps:?} {sig:?}: {res:?}");
                    let phi = st.phi();
                    let cubed = phi * phi * phi + phi;
                    assert!(cubed.amax() < 1e-14);
                    assert_eq!(
                        st.metric().signature().0 + st.metric().signature().1,
                        2 * n + s
                    );
                }
            }
        }
    }
}

#[test]
fn axioms_survive_change_of_basis() {
    let st = canonical_point_structure(2, 2, &[Sign::Plus, Sign::Minus], (1, 1)).unwrap();
    for seed in 0..5 {
        let moved = st.in_basis(&random_basis(6, seed)).unwrap();
        assert!(validate_structure(&moved).is_valid(1e-10));
        let frame = build_adapted_frame_seeded(&moved, seed).unwrap();
        assert!(frame.gram_residual(moved.metric()) < 1e-9);
    }
}

#[test]
fn broken_structure_is_detected() {
    let st = canonical_point_structure(2, 1, &[Sign::Plus], (2, 0)).unwrap();
    let mut phi = st.phi().clone();
    phi[(0, 0)] = 0.3;
    let bad = GffPointStructure::new(
        2,
        1,
        st.metric().clone(),
        phi,
        st.xi().to_vec(),
        st.eta().to_vec(),
        st.eps().to_vec(),
    )
    .unwrap();
    assert!(validate_structure(&bad).max() > 0.1);
}

fn model(
    n: usize,
    eps: &[Sign],
    sig: (usize, usize),
    c: f64,
    basis_seed: Option<u64>,
) -> (GffPointStructure, CurvatureTensor, SpaceFormParams) {
    let mut st = canonical_point_structure(n, eps.len(), eps, sig).unwrap();
    if let Some(seed) = basis_seed {
        st = st.in_basis(&random_basis(2 * n + eps.len(), seed)).unwrap();
    }
    let p = SpaceFormParams::new(n, eps.len(), eps.to_vec(), c).unwrap();
    let r = build_space_form_curvature(&p, &st).unwrap();
    (st, r, p)
}

#[test]
fn model_tensor_has_curvature_symmetries() {
    for n in 1..=3 {
        for s in 1..=3 {
            for eps in Sign::patterns(s) {
                for c in [-2.0, 0.0, 1.0, 4.0] {
                    let (_, r, _) = model(n, &eps, (n, 0), c, Some(7));
                    assert!(r.symmetries().max() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn phi_sectional_curvature_is_c_on_random_planes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n, eps, sig, c) in [
        (2, vec![Sign::Plus], (2, 0), 1.0),
        (2, vec![Sign::Minus, Sign::Plus], (1, 1), -2.0),
        (3, vec![Sign::Minus; 3], (0, 3), 4.0),
    ] {
        let (st, r, _) = model(n, &eps, sig, c, Some(11));
        for _ in 0..100 {
            let x = random_unit_in_image(&st, &mut rng, None).unwrap();
            let k = phi_sectional_curvature(&r, &st, &x).unwrap();
            assert!((k - c).abs() < 1e-9, "{k} vs {c}");
        }
    }
}

/// Ricci by `g^{bd} R_abcd` instead of the adapted-frame sum.
fn ricci_by_contraction(r: &CurvatureTensor) -> gff_core::TensorAtPoint {
    contract(r.components(), 1, 3, r.metric()).unwrap()
}

#[test]
fn eta_einstein_coefficients_match_closed_form_independently() {
    for n in 1..=3 {
        for s in 1..=3 {
            for eps in Sign::patterns(s) {
                for c in [-2.0, 0.0, 1.0, 4.0] {
                    let (st, r, p) = model(n, &eps, (n, 0), c, Some(5));
                    let ric = ricci_by_contraction(&r);
                    let fit = eta_einstein_fit(&ric, &st).unwrap();
                    assert!(fit.residual < 1e-9);
                    assert!((fit.k - 2.0 * n as f64).abs() < 1e-9);
                    assert!((fit.h - h_closed_form(&p)).abs() < 1e-9);
                    // frame route agrees
                    let frame = build_adapted_frame(&st).unwrap();
                    let ric2 = ricci_from_curvature(&r, &frame).unwrap();
                    assert!(ric.max_abs_diff(&ric2) < 1e-9);
                    let tau = contract(&ric, 0, 1, st.metric())
                        .unwrap()
                        .as_scalar()
                        .unwrap();
                    assert!((tau - tau_closed_form(fit.h, n, p.epsbar())).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn characteristic_identities_on_model() {
    for (n, eps) in [
        (1, vec![Sign::Plus, Sign::Minus]),
        (2, vec![Sign::Minus]),
        (3, vec![Sign::Plus; 3]),
    ] {
        let (st, r, _) = model(n, &eps, (n, 0), 1.5, Some(2));
        let res = check_characteristic_identities(&r, &st, 64, 42);
        assert_eq!(res.entries.len(), 5);
        assert!(res.max() < 1e-10, "{res:?}");
        let ric = ricci_by_contraction(&r);
        assert!(ricci_xi_residual(&ric, &st) < 1e-10);
    }
}

fn kulkarni_gg(st: &GffPointStructure, scale: f64) -> CurvatureTensor {
    let g = st.metric().components().clone();
    let t = gff_core::TensorAtPoint::from_fn(st.dim(), [gff_core::Variance::Co; 4], |i| {
        scale * (g[(i[0], i[2])] * g[(i[1], i[3])] - g[(i[1], i[2])] * g[(i[0], i[3])])
    });
    CurvatureTensor::new(t, st.metric().clone()).unwrap()
}

#[test]
fn round_sphere_is_the_c_equals_one_model() {
    // the unit sphere S^{2n+1} with its standard Sasakian structure
    for n in 1..=3 {
        let (st, r, _) = model(n, &[Sign::Plus], (n, 0), 1.0, Some(4));
        assert!(
            r.components()
                .max_abs_diff(kulkarni_gg(&st, 1.0).components())
                < 1e-12
        );
    }
}

#[test]
fn identities_catch_a_foreign_tensor() {
    let (st, _, _) = model(2, &[Sign::Plus], (2, 0), 1.0, None);
    let r = kulkarni_gg(&st, 2.0);
    assert!(r.symmetries().max() < 1e-14);
    assert!(check_characteristic_identities(&r, &st, 64, 42).max() > 1e-2);
}

#[test]
fn printed_coefficient_shifts_phi_sectional_curvature() {
    for eps in [
        vec![Sign::Plus],
        vec![Sign::Minus, Sign::Minus],
        vec![Sign::Plus, Sign::Minus],
    ] {
        let p = SpaceFormParams::new(2, eps.len(), eps, 1.0).unwrap();
        let guard = erratum_guard(&p, 100, 42).unwrap();
        assert!(guard.corrected_error < 1e-9);
        assert!(guard.printed_shift_error < 1e-9);
        let shift = guard.printed.phi_sectional_max - p.c;
        assert!((shift - 1.5 * p.epsbar()).abs() < 1e-9);
        // the printed tensor is still η-Einstein, just with another h
        assert!(guard.printed.fit.residual < 1e-10);
    }
}

#[test]
fn u2_and_r4_known_values() {
    let u2 = SpaceFormParams::new(1, 2, vec![Sign::Plus, Sign::Minus], 4.0).unwrap();
    assert_eq!(h_closed_form(&u2), 4.0);
    let r4 = SpaceFormParams::new(1, 2, vec![Sign::Plus, Sign::Minus], 0.0).unwrap();
    assert_eq!(h_closed_form(&r4), 0.0);
    // worked example: n = 2, one spacelike ξ, c = 1 → (h, k) = (4, 4)
    let p = SpaceFormParams::new(2, 1, vec![Sign::Plus], 1.0).unwrap();
    let chk = verify_spaceform_implies_eta_einstein(&p, &SpaceFormOptions::default()).unwrap();
    assert!((chk.fit.h - 4.0).abs() < 1e-12 && (chk.fit.k - 4.0).abs() < 1e-12);
}

#[test]
fn ricci_perturbation_breaks_the_fit() {
    let (st, r, _) = model(2, &[Sign::Plus], (2, 0), 1.0, None);
    let frame = build_adapted_frame(&st).unwrap();
    let ric = ricci_from_curvature(&r, &frame).unwrap();
    let bumped = ric.plus(&symmetric_perturbation(&frame, st.metric(), 0.1));
    let fit = eta_einstein_fit(&bumped, &st).unwrap();
    assert!(fit.residual >= 0.05, "{}", fit.residual);
}

#[test]
fn fundamental_form_is_skew() {
    let (st, _, _) = model(3, &[Sign::Minus, Sign::Plus], (2, 1), 0.0, Some(9));
    let f = fundamental_form(&st).to_matrix().unwrap();
    assert!((&f + f.transpose()).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn c_round_trips_through_h(n in 1usize..5, epsbar in -3i32..=3, c in -10.0f64..10.0) {
        let s = epsbar.unsigned_abs().max(1) as usize + 2;
        // any sign pattern with the requested sum
        let plus = ((s as i32 + epsbar) / 2) as usize;
        let mut eps = vec![Sign::Plus; plus];
        eps.resize(s, Sign::Minus);
        let eb: f64 = eps.iter().map(|e| e.value()).sum();
        let p = SpaceFormParams::new(n, s, eps, c).unwrap();
        let h = h_closed_form(&p);
        prop_assert!((c_from_h(h, n, eb) - c).abs() < 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn sectional_curvature_is_plane_invariant(seed in 0u64..1000, a in 0.3f64..2.0, b in -1.0f64..1.0) {
        let (st, r, _) = model(2, &[Sign::Plus, Sign::Minus], (1, 1), 0.7, Some(seed % 13));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        // same plane, different spanning pair
        let x2 = &x * a + &y * b;
        let y2 = y.clone() * 1.7;
        let g = st.metric();
        let delta = g.norm_sq(&x) * g.norm_sq(&y) - g.inner(&x, &y).powi(2);
        prop_assume!(delta.abs() > 1e-3);
        let k1 = sectional_curvature(&r, &x, &y).unwrap();
        let k2 = sectional_curvature(&r, &x2, &y2).unwrap();
        prop_assert!((k1 - k2).abs() < 1e-8 * (1.0 + k1.abs()));
    }
}
