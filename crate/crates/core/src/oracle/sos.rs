//! Sum-over-states thermodynamics of quadratic bosonic Hamiltonians in a
//! truncated Fock basis.

use ndarray::{Array1, Array2};

use super::eigen::{eigh_tridiagonal_ql, eigvalsh_tridiagonal_ql, Eigh};
use super::fock::{boson_hamiltonian_matrix, FockBasis, Ladder};
use crate::boson::ThermalDensitySet;
use crate::error::{NoeError, Result};
use crate::model::BosonQuadraticModel;
use crate::units::{beta_from_kelvin, K_B_CM1_PER_K};

/// Change of ln Z and relative change of U accepted when growing the basis.
pub const SOS_CONVERGENCE: f64 = 1e-10;
/// Largest basis dimension the automatic growth will build.
pub const MAX_DIM: usize = 2500;

/// Exact thermal values at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SosPoint {
    pub t: f64,
    pub beta: f64,
    pub ln_z: f64,
    pub z: f64,
    pub u: f64,
    /// S/k_B.
    pub entropy: f64,
}

/// Diagonalized Fock-space Hamiltonian. Eigenvectors are optional since
/// Z, U and S need only the spectrum.
#[derive(Debug, Clone)]
pub struct BosonSos {
    pub basis: FockBasis,
    pub values: Vec<f64>,
    pub vectors: Option<Array2<f64>>,
}

impl BosonSos {
    pub fn new(model: &BosonQuadraticModel<f64>, basis: FockBasis) -> Result<Self> {
        let h = boson_hamiltonian_matrix(model, &basis);
        let Eigh { values, vectors } = eigh_tridiagonal_ql(&h)?;
        Ok(Self {
            basis,
            values,
            vectors: Some(vectors),
        })
    }

    pub fn spectrum_only(model: &BosonQuadraticModel<f64>, basis: FockBasis) -> Result<Self> {
        let values = eigvalsh_tridiagonal_ql(&boson_hamiltonian_matrix(model, &basis))?;
        Ok(Self {
            basis,
            values,
            vectors: None,
        })
    }

    /// Grows a uniform per-mode cap until ln Z and U at `beta_min` (the
    /// hottest point) and the ground energy change by less than
    /// [`SOS_CONVERGENCE`]. Eigenvectors are not kept.
    pub fn converged(model: &BosonQuadraticModel<f64>, beta_min: f64) -> Result<Self> {
        Self::grow(model, beta_min, false)
    }

    /// As [`converged`](Self::converged) but with eigenvectors, for building
    /// density matrices at a low temperature where a small basis suffices.
    pub fn converged_states(model: &BosonQuadraticModel<f64>, beta: f64) -> Result<Self> {
        Self::grow(model, beta, true)
    }

    fn grow(model: &BosonQuadraticModel<f64>, beta: f64, vectors: bool) -> Result<Self> {
        let n = model.n_modes();
        let mut cap = 6;
        let mut prev: Option<(f64, f64, f64)> = None;
        loop {
            let basis = FockBasis::uniform(n, cap);
            if basis.dim() > MAX_DIM {
                return Err(NoeError::BasisCapExceeded { cap });
            }
            let sos = if vectors {
                Self::new(model, basis)?
            } else {
                Self::spectrum_only(model, basis)?
            };
            let cur = (sos.ln_z(beta, None), sos.energy(beta, None), sos.values[0]);
            if let Some(p) = prev {
                let scale = cur.1.abs().max(1.0);
                if (cur.0 - p.0).abs() <= SOS_CONVERGENCE
                    && (cur.1 - p.1).abs() <= SOS_CONVERGENCE * scale
                    && (cur.2 - p.2).abs() <= SOS_CONVERGENCE * scale
                {
                    return Ok(sos);
                }
            }
            prev = Some(cur);
            cap += 3;
        }
    }

    fn count(&self, n_states: Option<usize>) -> usize {
        n_states.map_or(self.values.len(), |k| k.min(self.values.len()))
    }

    /// Boltzmann weights relative to the lowest state, normalized to sum 1.
    fn weights(&self, beta: f64, n_states: Option<usize>) -> Vec<f64> {
        let e = &self.values[..self.count(n_states)];
        let w: Vec<f64> = e.iter().map(|&x| (-beta * (x - e[0])).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    pub fn ln_z(&self, beta: f64, n_states: Option<usize>) -> f64 {
        let e = &self.values[..self.count(n_states)];
        let s: f64 = e.iter().map(|&x| (-beta * (x - e[0])).exp()).sum();
        s.ln() - beta * e[0]
    }

    pub fn energy(&self, beta: f64, n_states: Option<usize>) -> f64 {
        let w = self.weights(beta, n_states);
        w.iter().zip(&self.values).map(|(w, e)| w * e).sum()
    }

    pub fn point(&self, t: f64, n_states: Option<usize>) -> SosPoint {
        let beta = beta_from_kelvin(t);
        let ln_z = self.ln_z(beta, n_states);
        let u = self.energy(beta, n_states);
        SosPoint {
            t,
            beta,
            ln_z,
            z: ln_z.exp(),
            u,
            entropy: beta * u + ln_z,
        }
    }

    /// Thermal density matrix Σ_ν w_ν |ν⟩⟨ν| over states with relevant weight.
    pub fn rho(&self, beta: f64, n_states: Option<usize>) -> Result<Array2<f64>> {
        let vectors = self
            .vectors
            .as_ref()
            .ok_or_else(|| NoeError::InvalidArgument("density matrix needs eigenvectors".into()))?;
        let w = self.weights(beta, n_states);
        let dim = self.basis.dim();
        let keep: Vec<usize> = (0..w.len()).filter(|&k| w[k] > 1e-20).collect();
        let mut vw = Array2::<f64>::zeros((dim, keep.len()));
        let mut v = Array2::<f64>::zeros((dim, keep.len()));
        for (c, &k) in keep.iter().enumerate() {
            for r in 0..dim {
                v[(r, c)] = vectors[(r, k)];
                vw[(r, c)] = vectors[(r, k)] * w[k];
            }
        }
        Ok(vw.dot(&v.t()))
    }

    /// d_λ = ⟨Ω_λ†⟩ together with the absolute partition function.
    pub fn densities(&self, t: f64, n_states: Option<usize>) -> Result<ThermalDensitySet<f64>> {
        let beta = beta_from_kelvin(t);
        let mut d = moments(&self.basis, &self.rho(beta, n_states)?);
        d.z = self.ln_z(beta, n_states).exp();
        Ok(d)
    }
}

/// First and second moments Tr(Ω ρ) of a density matrix with unit trace:
/// d^i = ⟨a_i⟩, d_i = ⟨a†_i⟩, d^i_j = ⟨a†_j a_i⟩, d^{ij} = ⟨a_i a_j⟩,
/// d_{ij} = ⟨a†_i a†_j⟩. `z` is set to Tr ρ.
pub fn moments(basis: &FockBasis, rho: &Array2<f64>) -> ThermalDensitySet<f64> {
    use Ladder::*;
    let n = basis.n_modes();
    let tr = |ops: &[Ladder]| basis.trace_with(ops, rho);
    ThermalDensitySet {
        z: rho.diag().sum(),
        d_up: Array1::from_shape_fn(n, |i| tr(&[Lower(i)])),
        d_dn: Array1::from_shape_fn(n, |i| tr(&[Raise(i)])),
        d_ud: Array2::from_shape_fn((n, n), |(i, j)| tr(&[Raise(j), Lower(i)])),
        d_uu: Array2::from_shape_fn((n, n), |(i, j)| tr(&[Lower(i), Lower(j)])),
        d_dd: Array2::from_shape_fn((n, n), |(i, j)| tr(&[Raise(i), Raise(j)])),
    }
}

/// Moments of ρ and their flow under −dD/dβ = H D:
/// −d⟨Ω⟩/dβ = ⟨Ω H⟩ − ⟨Ω⟩⟨H⟩. Returns (moments, flow, ⟨H⟩).
pub fn moment_flow(
    basis: &FockBasis,
    h: &Array2<f64>,
    rho: &Array2<f64>,
) -> (ThermalDensitySet<f64>, ThermalDensitySet<f64>, f64) {
    let tr = rho.diag().sum();
    let rho = rho / tr;
    let hrho = h.dot(&rho);
    let e = hrho.diag().sum();
    let d = moments(basis, &rho);
    let dh = moments(basis, &hrho);
    let flow = ThermalDensitySet {
        z: 0.0,
        d_up: &dh.d_up - &(&d.d_up * e),
        d_dn: &dh.d_dn - &(&d.d_dn * e),
        d_ud: &dh.d_ud - &(&d.d_ud * e),
        d_uu: &dh.d_uu - &(&d.d_uu * e),
        d_dd: &dh.d_dd - &(&d.d_dd * e),
    };
    (d, flow, e)
}

/// e^{−K} normalized to unit trace.
pub fn gibbs(k: &Array2<f64>) -> Result<Array2<f64>> {
    let e = eigh_tridiagonal_ql(k)?;
    let w: Vec<f64> = e.values.iter().map(|&x| (-(x - e.values[0])).exp()).collect();
    let s: f64 = w.iter().sum();
    let dim = k.nrows();
    let vw = Array2::from_shape_fn((dim, dim), |(r, c)| e.vectors[(r, c)] * w[c] / s);
    Ok(vw.dot(&e.vectors.t()))
}

/// Exact Z, U and S on a temperature grid with an automatically converged basis.
pub fn boson_sos(model: &BosonQuadraticModel<f64>, temps: &[f64], n_states: Option<usize>) -> Result<Vec<SosPoint>> {
    let t_max = temps.iter().cloned().fold(f64::NAN, f64::max);
    if !(t_max > 0.0) || temps.iter().any(|&t| !(t > 0.0)) {
        return Err(NoeError::NonPositiveTemperature(temps.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    let sos = BosonSos::converged(model, 1.0 / (K_B_CM1_PER_K * t_max))?;
    Ok(temps.iter().map(|&t| sos.point(t, n_states)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_oscillator_geometric_series() {
        let w = 300.0;
        let m = BosonQuadraticModel::uncoupled(array![w], 0.0);
        let pts = boson_sos(&m, &[60.0, 300.0, 500.0], None).unwrap();
        for p in pts {
            let x = p.beta * w;
            let z = (-x / 2.0).exp() / (1.0 - (-x).exp());
            assert!((p.z - z).abs() / z < 1e-9, "T={}", p.t);
            let u = w / 2.0 + w / (x.exp() - 1.0);
            assert!((p.u - u).abs() < 1e-6, "T={} {} {}", p.t, p.u, u);
        }
    }

    #[test]
    fn undisplaced_moments_vanish() {
        let m = BosonQuadraticModel::uncoupled(array![300.0, 360.0], 0.0);
        let sos = BosonSos::new(&m, FockBasis::uniform(2, 20)).unwrap();
        let d = sos.densities(400.0, None).unwrap();
        assert!(d.d_up.iter().chain(d.d_dn.iter()).all(|x| x.abs() < 1e-12));
        assert!(d.d_uu.iter().chain(d.d_dd.iter()).all(|x| x.abs() < 1e-12));
        assert!(d.d_ud[(0, 1)].abs() < 1e-12);
        let n0 = 1.0 / ((300.0 * beta_from_kelvin(400.0f64)).exp() - 1.0);
        assert!((d.d_ud[(0, 0)] - n0).abs() < 1e-8);
    }

    #[test]
    fn restricted_sum_uses_lowest_states() {
        let m = BosonQuadraticModel::uncoupled(array![300.0, 360.0], 0.0);
        let sos = BosonSos::new(&m, FockBasis::uniform(2, 6)).unwrap();
        let beta = beta_from_kelvin(60.0);
        let z3: f64 = [330.0, 630.0, 690.0].iter().map(|&e: &f64| (-beta * e).exp()).sum();
        assert!((sos.ln_z(beta, Some(3)) - z3.ln()).abs() < 1e-12);
    }

    #[test]
    fn stationary_flow_vanishes_for_gibbs_state() {
        let m = BosonQuadraticModel::uncoupled(array![1.0], 0.0);
        let basis = FockBasis::uniform(1, 60);
        let h = boson_hamiltonian_matrix(&m, &basis);
        let rho = gibbs(&(&h * 0.7)).unwrap();
        let (_, flow, _) = moment_flow(&basis, &h, &rho);
        let n = 1.0 / (0.7f64.exp() - 1.0);
        // −dn/dβ = ω n (n + 1) for a Gibbs state.
        assert!((flow.d_ud[(0, 0)] - n * (n + 1.0)).abs() < 1e-10, "{} {}", flow.d_ud[(0, 0)], n * (n + 1.0));
    }
}
