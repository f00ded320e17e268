// SPDX-License-Identifier: Apache-2.0

use gff_core::chart::file::{chart_to_toml, parse_chart_toml};
use gff_core::chart::geometry::*;
use gff_core::chart::{builtin_example, BuiltinExample};
use gff_core::schur::contracted_bianchi_residual;
use gff_core::spaceform::{build_space_form_curvature, SpaceFormParams};
use gff_core::GeomError;

const BUILTINS: [&str; 5] = [
    "s_r4_lorentz",
    "s_r2ns(2,1,+)",
    "s_r2ns(2,2,+-)",
    "s_r2ns(2,1,-,+-)",
    "s_r2ns(3,1,+,-++)",
];

fn chart(id: &str) -> gff_core::chart::ChartStructure {
    builtin_example(&BuiltinExample::parse(id).unwrap()).unwrap()
}

#[test]
fn builtins_pass_every_gate() {
    for id in BUILTINS {
        let cs = chart(id);
        let pts = cs.sample_points(6, 42).unwrap();
        let summary = certify_s(&cs, &pts, 1e-7).unwrap();
        assert_eq!(summary.gates.len(), S_GATE_NAMES.len());
        assert!(summary.passed, "{id}: {summary:?}");
    }
}

#[test]
fn builtin_fields_are_smooth() {
    let cs = chart("s_r2ns(2,2,+-)");
    for p in cs.sample_points(3, 1).unwrap() {
        for f in cs.fields() {
            assert!(f.mixed_partial_residual(&p) < 1e-13);
        }
    }
}

#[test]
fn chart_curvature_matches_model_tensor() {
    for id in BUILTINS {
        let ex = BuiltinExample::parse(id).unwrap();
        let cs = builtin_example(&ex).unwrap();
        let c = ex.expected_c().unwrap();
        for p in cs.sample_points(10, 7).unwrap() {
            let r = riemann_at_point(&cs, &p).unwrap();
            let st = cs.point_structure(&p).unwrap();
            let params = SpaceFormParams::new(cs.n, cs.s, cs.eps.clone(), c).unwrap();
            let model = build_space_form_curvature(&params, &st).unwrap();
            let diff = r.components().max_abs_diff(model.components());
            assert!(diff < 1e-9, "{id} at {p:?}: {diff}");
            assert!(r.symmetries().max() < 1e-12);
        }
    }
}

#[test]
fn ricci_xi_identity_on_charts() {
    for id in BUILTINS {
        let cs = chart(id);
        for p in cs.sample_points(4, 3).unwrap() {
            assert!(ricci_xi_residual(&cs, &p).unwrap() < 1e-6);
        }
    }
}

#[test]
fn flat_structure_fails_almost_s() {
    let cs = chart("flat_gff(2,1,+)");
    let pts = cs.sample_points(3, 42).unwrap();
    let summary = gate_summary(&cs, &pts, 1e-7).unwrap();
    assert!(!summary.passed);
    assert!(summary.get("almost_s").unwrap() >= 0.1);
    assert!(summary.get("normality").unwrap() < 1e-12);
    assert!(matches!(
        certify_s(&cs, &pts, 1e-7),
        Err(GeomError::GateFailure(_))
    ));
    assert!(matches!(
        contracted_bianchi_residual(&cs, &pts[0]),
        Err(GeomError::GateFailure(_))
    ));
}

#[test]
fn bianchi_residual_small_on_builtins() {
    for id in ["s_r4_lorentz", "s_r2ns(2,1,+)"] {
        let cs = chart(id);
        let p = cs.sample_points(1, 99).unwrap().remove(0);
        assert!(contracted_bianchi_residual(&cs, &p).unwrap() < 1e-5);
    }
}

/// A Sasakian 3-chart read from a file, with its curvature checked against
/// the c = −3 model the same way as the built-ins.
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
fn file_chart_is_certified() {
    let cs = parse_chart_toml(SASAKI3).unwrap();
    let pts = cs.sample_points(5, 42).unwrap();
    certify_s(&cs, &pts, 1e-7).unwrap();
    let again = parse_chart_toml(&chart_to_toml(&cs)).unwrap();
    let params = SpaceFormParams::new(1, 1, cs.eps.clone(), -3.0).unwrap();
    for p in &pts {
        let a = riemann_at_point(&cs, p).unwrap();
        let b = riemann_at_point(&again, p).unwrap();
        assert!(a.components().max_abs_diff(b.components()) < 1e-14);
        let model = build_space_form_curvature(&params, &cs.point_structure(p).unwrap()).unwrap();
        assert!(a.components().max_abs_diff(model.components()) < 1e-12);
    }
}

#[test]
fn sign_flipped_phi_is_rejected_by_gates() {
    let text = SASAKI3.replace(
        "phi = [[0, 1, 0], [-1, 0, 0], [0, \"y\", 0]]",
        "phi = [[0, -1, 0], [1, 0, 0], [0, \"-y\", 0]]",
    );
    let cs = parse_chart_toml(&text).unwrap();
    let pts = cs.sample_points(3, 42).unwrap();
    let summary = gate_summary(&cs, &pts, 1e-7).unwrap();
    assert!(summary.get("almost_s").unwrap() > 0.1, "{summary:?}");
}
