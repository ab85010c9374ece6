//! Hamiltonian models and normal-ordering bookkeeping.
//!
//! Bosonic tensors follow one convention throughout the crate:
//!
//! ```text
//! H = h0 + Σ h_up[i] a†_i + Σ h_dn[i] a_i + Σ h_ud[i][j] {a†_i a_j}
//!        + ½ Σ h_uu[i][j] a†_i a†_j + ½ Σ h_dd[i][j] a_i a_j
//! ```
//!
//! A [`BosonQuadraticModel`] stores the tensors normal-ordered with respect to
//! the true vacuum (contraction f = 0). Re-ordering against a uniform
//! contraction f only shifts the constant, see [`BosonQuadraticModel::h0_for`].

use ndarray::{Array1, Array2};

use crate::error::{NoeError, Result};
use num_traits::{Float, One, Zero};

use crate::scalar::{Real, Scalar};
use crate::units::EnergyUnit;

/// Tolerance used when checking symmetry and hermiticity of input tensors.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Particle statistics of a contraction scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    Fermion,
    Boson,
}

/// Contraction values f_p = ⟨p† p⟩ of the reference density.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionScheme<R: Real> {
    f: Vec<R>,
    particle: Particle,
}

impl<R: Real> ContractionScheme<R> {
    /// Per-orbital fermionic contractions, each in [0, 1].
    pub fn fermion(f: Vec<R>) -> Result<Self> {
        for (p, &fp) in f.iter().enumerate() {
            if !(fp >= R::zero() && fp <= R::one()) {
                return Err(NoeError::validation(
                    format!("f[{p}]"),
                    format!("fermionic contraction must lie in [0, 1], got {fp}"),
                ));
            }
        }
        Ok(Self {
            f,
            particle: Particle::Fermion,
        })
    }

    pub fn fermion_uniform(m: usize, f: R) -> Result<Self> {
        Self::fermion(vec![f; m])
    }

    /// Uniform filling f = n_el / M.
    pub fn fermion_default<S: Scalar<Real = R>>(model: &OneBodyFermionModel<S>) -> Self {
        let f = R::from_count(model.n_el()) / R::from_count(model.m());
        Self {
            f: vec![f; model.m()],
            particle: Particle::Fermion,
        }
    }

    /// Uniform bosonic contraction over `n` modes; f ≥ 0.
    pub fn boson(n: usize, f: R) -> Result<Self> {
        if !(f >= R::zero()) || !f.is_finite() {
            return Err(NoeError::validation(
                "f",
                format!("bosonic contraction must be finite and >= 0, got {f}"),
            ));
        }
        Ok(Self {
            f: vec![f; n],
            particle: Particle::Boson,
        })
    }

    pub fn particle(&self) -> Particle {
        self.particle
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    #[inline]
    pub fn f(&self, p: usize) -> R {
        self.f[p]
    }

    /// f̄_p = 1 − f_p for fermions, 1 + f_p for bosons.
    #[inline]
    pub fn fbar(&self, p: usize) -> R {
        match self.particle {
            Particle::Fermion => R::one() - self.f[p],
            Particle::Boson => R::one() + self.f[p],
        }
    }

    pub fn values(&self) -> &[R] {
        &self.f
    }

    /// The common value when all contractions are equal.
    pub fn uniform(&self) -> Option<R> {
        let first = *self.f.first()?;
        self.f.iter().all(|&x| x == first).then_some(first)
    }
}

/// One-body fermionic Hamiltonian H = E0 + Σ h_pq p† q.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyFermionModel<S: Scalar> {
    h: Array2<S>,
    n_el: usize,
    e0: S::Real,
    units: EnergyUnit,
}

impl<S: Scalar> OneBodyFermionModel<S> {
    pub fn new(h: Array2<S>, n_el: usize, e0: S::Real, units: EnergyUnit) -> Result<Self> {
        let m = h.nrows();
        if m == 0 || h.ncols() != m {
            return Err(NoeError::validation(
                "h",
                format!("must be a nonempty square matrix, got {}x{}", h.nrows(), h.ncols()),
            ));
        }
        if n_el == 0 || n_el >= m {
            return Err(NoeError::validation(
                "n_el",
                format!("must satisfy 0 < n_el < M = {m}, got {n_el}"),
            ));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(NoeError::validation("h", "entries must be finite"));
        }
        let dev = hermiticity_deviation(&h);
        let tol = S::Real::lit(SYMMETRY_TOL) * max_abs(&h).max(S::Real::one());
        if dev > tol {
            return Err(NoeError::validation(
                "h",
                format!("not Hermitian: max |h - h^H| = {dev:e}"),
            ));
        }
        Ok(Self { h, n_el, e0, units })
    }

    /// Orbital count M.
    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }

    pub fn h(&self) -> &Array2<S> {
        &self.h
    }

    pub fn e0(&self) -> S::Real {
        self.e0
    }

    pub fn units(&self) -> EnergyUnit {
        self.units
    }

    /// Converts to another scalar type; fails when a complex model with
    /// nonzero imaginary parts is cast to a real type.
    pub fn cast<T: Scalar>(&self) -> Result<OneBodyFermionModel<T>> {
        let mut h = Array2::<T>::zeros(self.h.dim());
        for ((i, j), &x) in self.h.indexed_iter() {
            h[(i, j)] = cast_scalar(x).ok_or_else(|| {
                NoeError::validation(format!("h[{i}][{j}]"), "imaginary part not representable")
            })?;
        }
        OneBodyFermionModel::new(
            h,
            self.n_el,
            T::Real::lit(self.e0.to_f64_lossy()),
            self.units,
        )
    }
}

/// Normal-ordered form of a one-body Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalOrderedFermion<S: Scalar> {
    /// Constant part, equal to Tr(ĥ D₀) including E0.
    pub h0: S::Real,
    pub h_dot: Array2<S>,
}

/// Normal-orders ĥ against the contractions f_p: h0 = E0 + Σ f_p h_pp.
pub fn normal_order_fermion<S: Scalar>(
    model: &OneBodyFermionModel<S>,
    scheme: &ContractionScheme<S::Real>,
) -> Result<NormalOrderedFermion<S>> {
    if scheme.len() != model.m() {
        return Err(NoeError::DimensionMismatch {
            context: "contraction scheme vs orbital count",
            expected: model.m(),
            found: scheme.len(),
        });
    }
    let h = model.h();
    let mut h0 = model.e0();
    for p in 0..model.m() {
        h0 += scheme.f(p) * h[(p, p)].re();
    }
    Ok(NormalOrderedFermion {
        h0,
        h_dot: h.clone(),
    })
}

/// Quadratic bosonic Hamiltonian, normal-ordered against the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonQuadraticModel<R: Real> {
    /// Reference frequencies ω_i (cm⁻¹).
    pub omega: Array1<R>,
    pub h0: R,
    pub h_up: Array1<R>,
    pub h_dn: Array1<R>,
    pub h_ud: Array2<R>,
    pub h_uu: Array2<R>,
    pub h_dd: Array2<R>,
}

impl<R: Real> BosonQuadraticModel<R> {
    /// Validates shapes, symmetry of the pair tensors, positive frequencies
    /// and, unless `allow_non_hermitian`, the Hermitian pairing
    /// h_up = h_dn, h_uu = h_dd, h_ud = h_udᵀ.
    pub fn validate(&self, allow_non_hermitian: bool) -> Result<()> {
        let n = self.omega.len();
        if n == 0 {
            return Err(NoeError::validation("omega", "at least one mode required"));
        }
        for (name, len) in [("h_up", self.h_up.len()), ("h_dn", self.h_dn.len())] {
            if len != n {
                return Err(NoeError::validation(name, format!("length {len}, expected {n}")));
            }
        }
        for (name, m) in [("h_ud", &self.h_ud), ("h_uu", &self.h_uu), ("h_dd", &self.h_dd)] {
            if m.dim() != (n, n) {
                return Err(NoeError::validation(
                    name,
                    format!("shape {:?}, expected ({n}, {n})", m.dim()),
                ));
            }
        }
        if let Some((i, w)) = self.omega.iter().enumerate().find(|(_, w)| !(**w > R::zero())) {
            return Err(NoeError::validation(
                format!("omega[{i}]"),
                format!("frequency must be positive, got {w}"),
            ));
        }
        let all_finite = std::iter::once(&self.h0)
            .chain(self.h_up.iter())
            .chain(self.h_dn.iter())
            .chain(self.h_ud.iter())
            .chain(self.h_uu.iter())
            .chain(self.h_dd.iter())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(NoeError::validation("h", "tensor entries must be finite"));
        }
        let tol = R::lit(SYMMETRY_TOL);
        for (name, m) in [("h_uu", &self.h_uu), ("h_dd", &self.h_dd)] {
            let dev = asymmetry(m);
            if dev > tol * max_abs_real(m).max(R::one()) {
                return Err(NoeError::validation(name, format!("not symmetric: {dev:e}")));
            }
        }
        if !allow_non_hermitian {
            let scale = max_abs_real(&self.h_ud).max(R::one());
            if max_diff(self.h_up.iter(), self.h_dn.iter()) > tol * scale {
                return Err(NoeError::validation("h_dn", "Hermitian model requires h_dn = h_up"));
            }
            if max_diff(self.h_uu.iter(), self.h_dd.iter()) > tol * scale {
                return Err(NoeError::validation("h_dd", "Hermitian model requires h_dd = h_uu"));
            }
            if asymmetry(&self.h_ud) > tol * scale {
                return Err(NoeError::validation("h_ud", "Hermitian model requires symmetric h_ud"));
            }
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    /// Constant term when normal-ordered against a uniform contraction f:
    /// a†_i a_j = {a†_i a_j} + f δ_ij.
    pub fn h0_for(&self, f: R) -> R {
        let tr: R = (0..self.n_modes()).map(|i| self.h_ud[(i, i)]).sum();
        self.h0 + f * tr
    }

    pub fn cast<T: Real>(&self) -> BosonQuadraticModel<T> {
        let c = |x: &R| T::lit(x.to_f64_lossy());
        BosonQuadraticModel {
            omega: self.omega.map(c),
            h0: c(&self.h0),
            h_up: self.h_up.map(c),
            h_dn: self.h_dn.map(c),
            h_ud: self.h_ud.map(c),
            h_uu: self.h_uu.map(c),
            h_dd: self.h_dd.map(c),
        }
    }

    /// Uncoupled oscillators H = Σ ω_i (a†_i a_i + ½) + e0.
    pub fn uncoupled(omega: Array1<R>, e0: R) -> Self {
        let n = omega.len();
        let half = R::lit(0.5);
        Self {
            h0: e0 + omega.sum() * half,
            h_ud: Array2::from_diag(&omega),
            omega,
            h_up: Array1::zeros(n),
            h_dn: Array1::zeros(n),
            h_uu: Array2::zeros((n, n)),
            h_dd: Array2::zeros((n, n)),
        }
    }
}

/// Excited-state harmonic surface in the ground-state dimensionless normal
/// coordinates: H = E_vert + Σ κ_i q_i + ½ Σ Φ_ij q_i q_j + ½ Σ ω_i p_i².
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalSurfaceSpec<R: Real> {
    pub omega: Array1<R>,
    pub e_vert: R,
    pub kappa: Array1<R>,
    pub phi: Array2<R>,
}

impl<R: Real> VerticalSurfaceSpec<R> {
    pub fn validate(&self) -> Result<()> {
        let n = self.omega.len();
        if n == 0 {
            return Err(NoeError::validation("omega", "at least one mode required"));
        }
        if self.kappa.len() != n {
            return Err(NoeError::validation(
                "kappa",
                format!("length {}, expected {n}", self.kappa.len()),
            ));
        }
        if self.phi.dim() != (n, n) {
            return Err(NoeError::validation(
                "Phi",
                format!("shape {:?}, expected ({n}, {n})", self.phi.dim()),
            ));
        }
        if let Some((i, w)) = self.omega.iter().enumerate().find(|(_, w)| !(**w > R::zero())) {
            return Err(NoeError::validation(
                format!("omega[{i}]"),
                format!("frequency must be positive, got {w}"),
            ));
        }
        let finite = self.e_vert.is_finite()
            && self.kappa.iter().all(|x| x.is_finite())
            && self.phi.iter().all(|x| x.is_finite());
        if !finite {
            return Err(NoeError::validation("Phi", "entries must be finite"));
        }
        let dev = asymmetry(&self.phi);
        if dev > R::lit(SYMMETRY_TOL) * max_abs_real(&self.phi).max(R::one()) {
            return Err(NoeError::validation("Phi", format!("not symmetric: {dev:e}")));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn cast<T: Real>(&self) -> VerticalSurfaceSpec<T> {
        let c = |x: &R| T::lit(x.to_f64_lossy());
        VerticalSurfaceSpec {
            omega: self.omega.map(c),
            e_vert: c(&self.e_vert),
            kappa: self.kappa.map(c),
            phi: self.phi.map(c),
        }
    }
}

/// Second-quantized tensors of a vertical surface, normal-ordered against
/// the ground-state vacuum.
///
/// With q = (a + a†)/√2 and p = i(a† − a)/√2:
///
/// ```text
/// h_up = h_dn = κ/√2
/// h_ud[i][j]  = ½ Φ_ij + ½ ω_i δ_ij
/// h_uu = h_dd = ½ (Φ_ij − ω_i δ_ij)
/// h0          = E_vert + ¼ Tr Φ + ¼ Σ ω_i
/// ```
pub fn assemble_excited_surface<R: Real>(spec: &VerticalSurfaceSpec<R>) -> Result<BosonQuadraticModel<R>> {
    spec.validate()?;
    let n = spec.n_modes();
    let half = R::lit(0.5);
    let quarter = R::lit(0.25);
    let lin = spec.kappa.mapv(|k| k / R::lit(2.0).sqrt());
    let mut h_ud = Array2::zeros((n, n));
    let mut h_pair = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let sym = half * (spec.phi[(i, j)] + spec.phi[(j, i)]);
            let diag = if i == j { spec.omega[i] } else { R::zero() };
            h_ud[(i, j)] = half * (sym + diag);
            h_pair[(i, j)] = half * (sym - diag);
        }
    }
    let tr_phi: R = (0..n).map(|i| spec.phi[(i, i)]).sum();
    let model = BosonQuadraticModel {
        omega: spec.omega.clone(),
        h0: spec.e_vert + quarter * (tr_phi + spec.omega.sum()),
        h_up: lin.clone(),
        h_dn: lin,
        h_ud,
        h_uu: h_pair.clone(),
        h_dd: h_pair,
    };
    model.validate(false)?;
    Ok(model)
}

pub(crate) fn cast_scalar<S: Scalar, T: Scalar>(x: S) -> Option<T> {
    T::from_parts(
        T::Real::lit(x.re().to_f64_lossy()),
        T::Real::lit(x.im().to_f64_lossy()),
    )
}

pub(crate) fn max_abs<S: Scalar>(m: &Array2<S>) -> S::Real {
    m.iter().fold(S::Real::zero(), |acc, x| acc.max(x.modulus()))
}

pub(crate) fn max_abs_real<R: Real>(m: &Array2<R>) -> R {
    m.iter().fold(R::zero(), |acc, x| acc.max(x.abs()))
}

pub(crate) fn hermiticity_deviation<S: Scalar>(m: &Array2<S>) -> S::Real {
    let n = m.nrows();
    let mut dev = S::Real::zero();
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    dev
}

fn asymmetry<R: Real>(m: &Array2<R>) -> R {
    let n = m.nrows();
    let mut dev = R::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

fn max_diff<'a, R: Real>(a: impl Iterator<Item = &'a R>, b: impl Iterator<Item = &'a R>) -> R {
    a.zip(b).fold(R::zero(), |acc, (x, y)| acc.max((*x - *y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_complex::Complex64;

    fn diag_model(eps: &[f64], n_el: usize) -> OneBodyFermionModel<f64> {
        OneBodyFermionModel::new(
            Array2::from_diag(&Array1::from(eps.to_vec())),
            n_el,
            0.0,
            EnergyUnit::Hartree,
        )
        .unwrap()
    }

    #[test]
    fn identity_half_filling_constant() {
        let m = diag_model(&[1.0; 4], 2);
        let s = ContractionScheme::fermion_uniform(4, 0.5).unwrap();
        assert_eq!(normal_order_fermion(&m, &s).unwrap().h0, 2.0);
    }

    #[test]
    fn quarter_filling_constant() {
        let m = diag_model(&[1.0, 2.0, 3.0, 4.0], 1);
        let s = ContractionScheme::fermion_default(&m);
        assert_eq!(s.uniform(), Some(0.25));
        assert_eq!(normal_order_fermion(&m, &s).unwrap().h0, 2.5);
    }

    #[test]
    fn occupied_set_constant() {
        let m = diag_model(&[1.0, 2.0, 3.0, 4.0], 2);
        let s = ContractionScheme::fermion(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(normal_order_fermion(&m, &s).unwrap().h0, 3.0);
    }

    #[test]
    fn true_vacuum_gives_offset() {
        let mut h = Array2::from_diag(&array![0.3, -1.0, 2.0]);
        h[(0, 1)] = 0.1;
        h[(1, 0)] = 0.1;
        let m = OneBodyFermionModel::new(h, 1, -7.25, EnergyUnit::ElectronVolt).unwrap();
        let s = ContractionScheme::fermion(vec![0.0; 3]).unwrap();
        assert_eq!(normal_order_fermion(&m, &s).unwrap().h0, -7.25);
    }

    #[test]
    fn scheme_dimension_mismatch() {
        let m = diag_model(&[1.0, 2.0], 1);
        let s = ContractionScheme::fermion_uniform(3, 0.5).unwrap();
        assert!(matches!(
            normal_order_fermion(&m, &s),
            Err(NoeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_fermion_models() {
        let h = Array2::<f64>::eye(3);
        let err = OneBodyFermionModel::new(h.clone(), 3, 0.0, EnergyUnit::Hartree).unwrap_err();
        assert!(matches!(err, NoeError::Validation { ref field, .. } if field == "n_el"));
        assert!(OneBodyFermionModel::new(h, 0, 0.0, EnergyUnit::Hartree).is_err());
        let mut h = Array2::<Complex64>::eye(2);
        h[(0, 1)] = Complex64::new(0.0, 1.0);
        h[(1, 0)] = Complex64::new(0.0, 1.0);
        let err = OneBodyFermionModel::new(h, 1, 0.0, EnergyUnit::Hartree).unwrap_err();
        assert!(matches!(err, NoeError::Validation { ref field, .. } if field == "h"));
    }

    #[test]
    fn contraction_bars() {
        let f = ContractionScheme::fermion_uniform(2, 0.3).unwrap();
        assert_eq!(f.fbar(0), 1.0 - 0.3);
        let b = ContractionScheme::boson(2, 0.3).unwrap();
        assert_eq!(b.fbar(1), 1.3);
        assert!(ContractionScheme::fermion(vec![1.2]).is_err());
        assert!(ContractionScheme::boson(1, -0.1).is_err());
    }

    #[test]
    fn identical_surfaces_are_number_conserving() {
        let spec = VerticalSurfaceSpec {
            omega: array![300.0, 360.0],
            e_vert: 0.0,
            kappa: array![0.0, 0.0],
            phi: array![[300.0, 0.0], [0.0, 360.0]],
        };
        let m = assemble_excited_surface(&spec).unwrap();
        assert!(m.h_uu.iter().all(|&x| x == 0.0));
        assert!(m.h_dd.iter().all(|&x| x == 0.0));
        assert!(m.h_up.iter().all(|&x| x == 0.0));
        assert_eq!(m.h_ud, array![[300.0, 0.0], [0.0, 360.0]]);
        assert_eq!(m.h0, 330.0);
    }

    #[test]
    fn displaced_oscillator_linear_terms() {
        let w = 1000.0;
        let spec = VerticalSurfaceSpec {
            omega: array![w],
            e_vert: 0.0,
            kappa: array![-w],
            phi: array![[w]],
        };
        let m = assemble_excited_surface(&spec).unwrap();
        let expect = -w / 2.0_f64.sqrt();
        assert!((m.h_up[0] - expect).abs() < 1e-12);
        assert_eq!(m.h_up, m.h_dn);
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let spec = VerticalSurfaceSpec {
            omega: array![1.0, 1.0],
            e_vert: 0.0,
            kappa: array![0.0, 0.0],
            phi: array![[1.0, 0.2], [0.1, 1.0]],
        };
        let err = assemble_excited_surface(&spec).unwrap_err();
        assert!(matches!(err, NoeError::Validation { ref field, .. } if field == "Phi"));
    }

    #[test]
    fn boson_h0_shift() {
        let m = BosonQuadraticModel::uncoupled(array![1.0, 2.0], 0.0);
        assert_eq!(m.h0_for(0.0), 1.5);
        assert_eq!(m.h0_for(0.5), 3.0);
    }
}
