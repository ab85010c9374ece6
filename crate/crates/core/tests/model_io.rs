//! Model files survive a save/load cycle bit for bit.

use ndarray::{array, Array2};
use noe_core::io::{load_model, parse_model, save_model, LoadedModel, ModelKind};
use noe_core::model::BosonQuadraticModel;
use noe_core::units::CM1_PER_EV;
use noe_core::verify::{random_fermion_model, two_mode_surface};

fn cycle(model: &LoadedModel) -> LoadedModel {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&path, model).unwrap();
    load_model(&path, Some(model.kind())).unwrap()
}

#[test]
fn complex_fermion_round_trip() {
    let m = LoadedModel::Fermion(random_fermion_model(3, 7, 3));
    assert_eq!(cycle(&m), m);
}

#[test]
fn surface_round_trip() {
    let m = LoadedModel::Surface(two_mode_surface());
    assert_eq!(cycle(&m), m);
}

#[test]
fn non_hermitian_boson_round_trip() {
    let model = BosonQuadraticModel {
        omega: array![0.1 + 0.2, 1.0 / 3.0],
        h0: std::f64::consts::E,
        h_up: array![1e-17, -2.5],
        h_dn: array![0.7, 1e300],
        h_ud: array![[0.1 + 0.2, 0.4], [0.5, 1.0 / 3.0]],
        h_uu: Array2::from_elem((2, 2), 0.125),
        h_dd: array![[1.0, -0.3], [-0.3, 2.0]],
    };
    let m = LoadedModel::Boson {
        model,
        allow_non_hermitian: true,
    };
    assert_eq!(cycle(&m), m);
}

#[test]
fn non_hermitian_boson_needs_opt_in() {
    let text = r#"{"kind": "boson", "omega": [1], "h0": 0, "h_up": [1], "h_dn": [2],
        "h_ud": [[1]], "h_uu": [[0]], "h_dd": [[0]]}"#;
    assert!(parse_model(text, None).is_err());
    let opted = text.replace("\"kind\"", "\"allow_non_hermitian\": true, \"kind\"");
    assert_eq!(parse_model(&opted, None).unwrap().kind(), ModelKind::Boson);
}

#[test]
fn electronvolt_boson_saved_in_wavenumbers() {
    let text = r#"{"kind": "boson", "units": "eV", "omega": [0.1], "h0": 0.05, "h_up": [0],
        "h_dn": [0], "h_ud": [[0.1]], "h_uu": [[0]], "h_dd": [[0]]}"#;
    let m = parse_model(text, None).unwrap();
    let again = cycle(&m);
    let LoadedModel::Boson { model, .. } = again else { panic!("kind changed") };
    assert!((model.omega[0] - 0.1 * CM1_PER_EV).abs() < 1e-9);
    assert!((model.h0 - 0.05 * CM1_PER_EV).abs() < 1e-9);
}
