//! Exact vacuum autocorrelation ⟨0|e^{−iHτ}|0⟩ by eigen-decomposition.

use num_complex::Complex64;

use super::eigen::eigh_tridiagonal_ql;
use super::fock::{boson_hamiltonian_matrix, FockBasis};
use crate::error::{NoeError, Result};
use crate::model::BosonQuadraticModel;
use crate::units::TWO_PI_C;

/// Eigen-energies (cm⁻¹) and vacuum weights |⟨ν|0⟩|², i.e. Franck-Condon
/// factors out of the vibrational ground state.
#[derive(Debug, Clone)]
pub struct StickSpectrum {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl StickSpectrum {
    pub fn new(model: &BosonQuadraticModel<f64>, basis: &FockBasis) -> Result<Self> {
        let h = boson_hamiltonian_matrix(model, basis);
        let e = eigh_tridiagonal_ql(&h)?;
        let vac = basis.index_of(&vec![0; basis.n_modes()]).expect("vacuum in basis");
        let weights = (0..basis.dim()).map(|k| e.vectors[(vac, k)].powi(2)).collect();
        Ok(Self {
            energies: e.values,
            weights,
        })
    }

    /// ACF(τ) = Σ_ν w_ν e^{−i 2πc E_ν τ}, τ in fs.
    pub fn acf(&self, tau_fs: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| Complex64::from_polar(w, -TWO_PI_C * e * tau_fs))
            .sum()
    }
}

/// Exact ACF on `taus`, growing a uniform cap until two successive bases
/// agree pointwise within `tol`.
pub fn exact_time_acf(
    model: &BosonQuadraticModel<f64>,
    taus: &[f64],
    tol: f64,
    max_dim: usize,
) -> Result<(Vec<Complex64>, FockBasis)> {
    let n = model.n_modes();
    let mut cap = 4;
    let mut prev: Option<Vec<Complex64>> = None;
    loop {
        let basis = FockBasis::uniform(n, cap);
        if basis.dim() > max_dim {
            return Err(NoeError::BasisCapExceeded { cap });
        }
        let sticks = StickSpectrum::new(model, &basis)?;
        let acf: Vec<Complex64> = taus.iter().map(|&t| sticks.acf(t)).collect();
        if let Some(p) = prev {
            let dev = p.iter().zip(&acf).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if dev <= tol {
                return Ok((acf, basis));
            }
        }
        prev = Some(acf);
        cap += 2;
    }
}

/// Poisson Franck-Condon weights e^{−S} Sⁿ/n!.
pub fn poisson_weights(s: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut term = (-s).exp();
    for n in 0..=n_max {
        if n > 0 {
            term *= s / n as f64;
        }
        w.push(term);
    }
    w
}
