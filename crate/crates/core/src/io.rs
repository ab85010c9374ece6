//! JSON model files.
//!
//! ```json
//! {"kind": "surface", "units": "cm-1", "N": 2,
//!  "omega": [300, 360], "E_vert": 0, "kappa": [-50, 30],
//!  "Phi": [[280, 15], [15, 350]]}
//! ```
//!
//! Fermion files carry `M`, `n_el`, `h` and optionally `h_imag` and `E0`.
//! Boson files carry `N`, `omega`, `h0`, `h_up`, `h_dn`, `h_ud`, `h_uu`,
//! `h_dd` and optionally `allow_non_hermitian`. Bosonic and surface models are
//! converted to cm⁻¹ on load and saved in cm⁻¹.

use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NoeError, Result};
use crate::model::{assemble_excited_surface, BosonQuadraticModel, OneBodyFermionModel, VerticalSurfaceSpec};
use crate::units::EnergyUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fermion,
    Boson,
    Surface,
}

/// A model as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Fermion(OneBodyFermionModel<Complex64>),
    Boson {
        model: BosonQuadraticModel<f64>,
        allow_non_hermitian: bool,
    },
    Surface(VerticalSurfaceSpec<f64>),
}

impl LoadedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            LoadedModel::Fermion(_) => ModelKind::Fermion,
            LoadedModel::Boson { .. } => ModelKind::Boson,
            LoadedModel::Surface(_) => ModelKind::Surface,
        }
    }

    /// Bosonic tensors; surfaces are assembled on the fly.
    pub fn into_boson(self) -> Result<BosonQuadraticModel<f64>> {
        match self {
            LoadedModel::Boson { model, .. } => Ok(model),
            LoadedModel::Surface(spec) => assemble_excited_surface(&spec),
            LoadedModel::Fermion(_) => Err(NoeError::InvalidArgument(
                "expected a boson or surface model, got a fermion model".into(),
            )),
        }
    }

    pub fn into_fermion(self) -> Result<OneBodyFermionModel<Complex64>> {
        match self {
            LoadedModel::Fermion(m) => Ok(m),
            other => Err(NoeError::InvalidArgument(format!(
                "expected a fermion model, got {:?}",
                other.kind()
            ))),
        }
    }
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    units: Option<EnergyUnit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_el: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_imag: Option<Matrix>,
    #[serde(rename = "E0", skip_serializing_if = "Option::is_none")]
    e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<Vec<f64>>,
    #[serde(rename = "Phi", skip_serializing_if = "Option::is_none")]
    phi: Option<Matrix>,
    #[serde(rename = "E_vert", skip_serializing_if = "Option::is_none")]
    e_vert: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_up: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_dn: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_ud: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_uu: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_dd: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    allow_non_hermitian: Option<bool>,
}

fn required<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| NoeError::validation(field, "missing required field"))
}

fn matrix(rows: Matrix, n: usize, field: &str, scale: f64) -> Result<Array2<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(NoeError::validation(field, format!("must be a {n}x{n} matrix")));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().map(|x| x * scale).collect();
    Ok(Array2::from_shape_vec((n, n), flat).expect("shape checked"))
}

fn vector(v: Vec<f64>, n: usize, field: &str, scale: f64) -> Result<Array1<f64>> {
    if v.len() != n {
        return Err(NoeError::validation(field, format!("length {}, expected {n}", v.len())));
    }
    Ok(Array1::from_iter(v.into_iter().map(|x| x * scale)))
}

fn rows(m: &Array2<f64>) -> Matrix {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

/// Parses a model from JSON text. When `kind` is given the file must match it.
pub fn parse_model(text: &str, kind: Option<ModelKind>) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| NoeError::Parse(e.to_string()))?;
    let file_kind = required(file.kind, "kind")?;
    if let Some(k) = kind {
        if k != file_kind {
            return Err(NoeError::validation(
                "kind",
                format!("expected {k:?}, file declares {file_kind:?}"),
            ));
        }
    }
    let units = file.units.unwrap_or(EnergyUnit::Wavenumber);
    match file_kind {
        ModelKind::Fermion => {
            let h_re = required(file.h, "h")?;
            let m = file.m.unwrap_or(h_re.len());
            let h_re = matrix(h_re, m, "h", 1.0)?;
            let h_im = match file.h_imag {
                Some(im) => matrix(im, m, "h_imag", 1.0)?,
                None => Array2::zeros((m, m)),
            };
            let h = Array2::from_shape_fn((m, m), |ij| Complex64::new(h_re[ij], h_im[ij]));
            let n_el = required(file.n_el, "n_el")?;
            let model = OneBodyFermionModel::new(h, n_el, file.e0.unwrap_or(0.0), units)?;
            Ok(LoadedModel::Fermion(model))
        }
        ModelKind::Boson => {
            let c = units.to_wavenumber();
            let omega = required(file.omega, "omega")?;
            let n = file.n.unwrap_or(omega.len());
            let model = BosonQuadraticModel {
                omega: vector(omega, n, "omega", c)?,
                h0: required(file.h0, "h0")? * c,
                h_up: vector(required(file.h_up, "h_up")?, n, "h_up", c)?,
                h_dn: vector(required(file.h_dn, "h_dn")?, n, "h_dn", c)?,
                h_ud: matrix(required(file.h_ud, "h_ud")?, n, "h_ud", c)?,
                h_uu: matrix(required(file.h_uu, "h_uu")?, n, "h_uu", c)?,
                h_dd: matrix(required(file.h_dd, "h_dd")?, n, "h_dd", c)?,
            };
            let allow_non_hermitian = file.allow_non_hermitian.unwrap_or(false);
            model.validate(allow_non_hermitian)?;
            Ok(LoadedModel::Boson {
                model,
                allow_non_hermitian,
            })
        }
        ModelKind::Surface => {
            let c = units.to_wavenumber();
            let omega = required(file.omega, "omega")?;
            let n = file.n.unwrap_or(omega.len());
            let spec = VerticalSurfaceSpec {
                omega: vector(omega, n, "omega", c)?,
                e_vert: file.e_vert.unwrap_or(0.0) * c,
                kappa: vector(required(file.kappa, "kappa")?, n, "kappa", c)?,
                phi: matrix(required(file.phi, "Phi")?, n, "Phi", c)?,
            };
            spec.validate()?;
            Ok(LoadedModel::Surface(spec))
        }
    }
}

pub fn load_model(path: &Path, kind: Option<ModelKind>) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).map_err(|source| NoeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text, kind)
}

pub fn model_to_json(model: &LoadedModel) -> String {
    let mut f = ModelFile {
        kind: Some(model.kind()),
        ..Default::default()
    };
    match model {
        LoadedModel::Fermion(m) => {
            f.units = Some(m.units());
            f.m = Some(m.m());
            f.n_el = Some(m.n_el());
            f.e0 = Some(m.e0());
            f.h = Some(rows(&m.h().map(|z| z.re)));
            if m.h().iter().any(|z| z.im != 0.0) {
                f.h_imag = Some(rows(&m.h().map(|z| z.im)));
            }
        }
        LoadedModel::Boson {
            model,
            allow_non_hermitian,
        } => {
            f.units = Some(EnergyUnit::Wavenumber);
            f.n = Some(model.n_modes());
            f.omega = Some(model.omega.to_vec());
            f.h0 = Some(model.h0);
            f.h_up = Some(model.h_up.to_vec());
            f.h_dn = Some(model.h_dn.to_vec());
            f.h_ud = Some(rows(&model.h_ud));
            f.h_uu = Some(rows(&model.h_uu));
            f.h_dd = Some(rows(&model.h_dd));
            f.allow_non_hermitian = allow_non_hermitian.then_some(true);
        }
        LoadedModel::Surface(s) => {
            f.units = Some(EnergyUnit::Wavenumber);
            f.n = Some(s.n_modes());
            f.omega = Some(s.omega.to_vec());
            f.e_vert = Some(s.e_vert);
            f.kappa = Some(s.kappa.to_vec());
            f.phi = Some(rows(&s.phi));
        }
    }
    serde_json::to_string_pretty(&f).expect("model serializes")
}

pub fn save_model(path: &Path, model: &LoadedModel) -> Result<()> {
    std::fs::write(path, model_to_json(model)).map_err(|source| NoeError::Io {
        path: path.to_path_buf(),
        source,
    })
}
