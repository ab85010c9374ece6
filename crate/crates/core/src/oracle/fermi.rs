//! Grand-canonical Fermi-Dirac reference for one-body Hamiltonians.
//!
//! The partition function is normalized like the propagated one: at β = 0 the
//! density is Π_p (f n_p + f̄ (1 − n_p)) with f = n_el/M, whose trace is 1.
//! With λ(β) fixed by Σ_p n_p = n_el,
//!
//! ```text
//! ln Z = −βE₀ + M ln(1 − n_el/M) + Σ_p ln(1 + e^{λ − βε_p})
//! n_p  = 1 / (1 + e^{βε_p − λ}),   μ_FD = λ/β
//! ```

use ndarray::Array2;
use num_complex::Complex64;

use super::eigen::{eigh, eigh_tridiagonal_ql};
use crate::error::{NoeError, Result};
use crate::model::OneBodyFermionModel;
use crate::scalar::Scalar;

const BISECTION_STEPS: usize = 200;

/// ln(1 + eˣ) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Exact thermal data at one β.
#[derive(Debug, Clone)]
pub struct FermiDiracPoint<S: Scalar> {
    pub beta: f64,
    /// βμ_FD, the multiplier of N in the grand-canonical exponent.
    pub lambda: f64,
    /// Occupations of the eigenorbitals, ascending orbital energy.
    pub occupations: Vec<f64>,
    /// V diag(n) V† in the original basis.
    pub density: Array2<S>,
    pub ln_z: f64,
    pub energy: f64,
    /// S/k_B.
    pub entropy: f64,
}

impl<S: Scalar> FermiDiracPoint<S> {
    /// Fermi-Dirac chemical potential λ/β; non-finite at β = 0.
    pub fn mu(&self) -> f64 {
        self.lambda / self.beta
    }
}

/// Diagonalized model reused across a β grid.
#[derive(Debug, Clone)]
pub struct FermiDiracReference<S: Scalar<Real = f64>> {
    pub energies: Vec<f64>,
    pub vectors: Array2<S>,
    n_el: usize,
    e0: f64,
}

impl<S: Scalar<Real = f64>> FermiDiracReference<S> {
    pub fn new(model: &OneBodyFermionModel<S>) -> Result<Self> {
        let e = eigh(model.h())?;
        Ok(Self {
            energies: e.values,
            vectors: e.vectors,
            n_el: model.n_el(),
            e0: model.e0(),
        })
    }

    /// Solves Σ n_p(λ) = n_el by bisection on μ ∈ [ε_min − 10/β, ε_max + 10/β]
    /// (in λ = βμ so that β = 0 is covered).
    pub fn lambda(&self, beta: f64) -> Result<f64> {
        let target = self.n_el as f64;
        let count = |lam: f64| -> f64 { self.energies.iter().map(|&e| logistic(lam - beta * e)).sum() };
        let emin = self.energies[0];
        let emax = *self.energies.last().unwrap();
        let (mut lo, mut hi) = (beta * emin - 10.0, beta * emax + 10.0);
        let (c_lo, c_hi) = (count(lo), count(hi));
        if !(c_lo < target && c_hi > target) {
            return Err(NoeError::BracketFailure(format!(
                "electron count {target} not bracketed: N(lo) = {c_lo}, N(hi) = {c_hi}"
            )));
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn at(&self, beta: f64) -> Result<FermiDiracPoint<S>> {
        let lambda = self.lambda(beta)?;
        let m = self.energies.len();
        let occupations: Vec<f64> = self.energies.iter().map(|&e| logistic(lambda - beta * e)).collect();
        let mut density = Array2::<S>::zeros((m, m));
        for p in 0..m {
            for q in 0..m {
                density[(p, q)] = (0..m)
                    .map(|k| self.vectors[(p, k)] * self.vectors[(q, k)].conj() * occupations[k])
                    .sum();
            }
        }
        let f = self.n_el as f64 / m as f64;
        let sum_sp: f64 = self.energies.iter().map(|&e| softplus(lambda - beta * e)).sum();
        let ln_z = -beta * self.e0 + m as f64 * (1.0 - f).ln() + sum_sp;
        let band: f64 = self.energies.iter().zip(&occupations).map(|(e, n)| e * n).sum();
        Ok(FermiDiracPoint {
            beta,
            lambda,
            occupations,
            density,
            ln_z,
            energy: self.e0 + band,
            entropy: sum_sp + beta * band - lambda * self.n_el as f64,
        })
    }
}

pub fn fermi_dirac_reference<S: Scalar<Real = f64>>(
    model: &OneBodyFermionModel<S>,
    betas: &[f64],
) -> Result<Vec<FermiDiracPoint<S>>> {
    let r = FermiDiracReference::new(model)?;
    betas.iter().map(|&b| r.at(b)).collect()
}

/// Normalized grand-canonical ln Z and λ from explicit enumeration of all
/// 2^M determinants. Intended for M ≤ 12.
pub fn fock_enumeration_ln_z<S: Scalar<Real = f64>>(model: &OneBodyFermionModel<S>, beta: f64) -> Result<(f64, f64)> {
    let m = model.m();
    if m > 16 {
        return Err(NoeError::InvalidArgument(format!("Fock enumeration limited to M <= 16, got {m}")));
    }
    let mut sectors: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for n in 0..=m {
        sectors.push(sector_energies(model, n)?);
    }
    // Shifted weights keep the exponentials finite.
    let emin = sectors.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let log_tr: Vec<f64> = sectors
        .iter()
        .map(|es| {
            let s: f64 = es.iter().map(|&e| (-beta * (e - emin)).exp()).sum();
            s.ln() - beta * emin
        })
        .collect();
    let ln_xi = |lam: f64| -> f64 {
        let terms: Vec<f64> = (0..=m).map(|n| lam * n as f64 + log_tr[n]).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    };
    let mean_n = |lam: f64| -> f64 {
        let l = ln_xi(lam);
        (0..=m).map(|n| n as f64 * (lam * n as f64 + log_tr[n] - l).exp()).sum()
    };
    let target = model.n_el() as f64;
    let spread = beta * (sectors.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max) - emin) + 40.0;
    let (mut lo, mut hi) = (-spread, spread);
    if !(mean_n(lo) < target && mean_n(hi) > target) {
        return Err(NoeError::BracketFailure("enumeration bracket".into()));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_n(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let f = target / m as f64;
    Ok((m as f64 * (1.0 - f).ln() + ln_xi(lam), lam))
}

/// Many-body energies of the n-electron sector, E₀ included.
fn sector_energies<S: Scalar<Real = f64>>(model: &OneBodyFermionModel<S>, n: usize) -> Result<Vec<f64>> {
    let m = model.m();
    let dets: Vec<u32> = (0u32..(1 << m)).filter(|b| b.count_ones() as usize == n).collect();
    let index: std::collections::HashMap<u32, usize> = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let dim = dets.len();
    let h = model.h();
    let mut hm = Array2::<Complex64>::zeros((dim, dim));
    for (col, &det) in dets.iter().enumerate() {
        hm[(col, col)] += Complex64::new(model.e0(), 0.0);
        for q in 0..m {
            if det & (1 << q) == 0 {
                continue;
            }
            let below_q = (det & ((1 << q) - 1)).count_ones();
            let removed = det & !(1 << q);
            for p in 0..m {
                if removed & (1 << p) != 0 {
                    continue;
                }
                let below_p = (removed & ((1 << p) - 1)).count_ones();
                let sign = if (below_q + below_p) % 2 == 0 { 1.0 } else { -1.0 };
                let row = index[&(removed | (1 << p))];
                let hpq = h[(p, q)];
                hm[(row, col)] += Complex64::new(hpq.re(), hpq.im()) * sign;
            }
        }
    }
    if hm.iter().all(|z| z.im == 0.0) {
        return Ok(eigh_tridiagonal_ql(&hm.mapv(|z| z.re))?.values);
    }
    // Real embedding [[A, −B], [B, A]] doubles every eigenvalue.
    let mut emb = Array2::<f64>::zeros((2 * dim, 2 * dim));
    for i in 0..dim {
        for j in 0..dim {
            let z = hm[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i + dim, j + dim)] = z.re;
            emb[(i, j + dim)] = -z.im;
            emb[(i + dim, j)] = z.im;
        }
    }
    let vals = eigh_tridiagonal_ql(&emb)?.values;
    Ok(vals.into_iter().step_by(2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::EnergyUnit;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_level() -> OneBodyFermionModel<f64> {
        OneBodyFermionModel::new(Array2::from_diag(&array![0.0, 1.0]), 1, 0.0, EnergyUnit::Hartree).unwrap()
    }

    fn random_complex(m: usize, n_el: usize, seed: u64) -> OneBodyFermionModel<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Array2::<Complex64>::zeros((m, m));
        for i in 0..m {
            h[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..m {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        OneBodyFermionModel::new(h, n_el, 0.3, EnergyUnit::Hartree).unwrap()
    }

    #[test]
    fn infinite_temperature_uniform() {
        let m = random_complex(6, 2, 1);
        let p = FermiDiracReference::new(&m).unwrap().at(0.0).unwrap();
        for n in &p.occupations {
            assert!((n - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(p.ln_z.abs() < 1e-12);
        let s_expect = -(2.0 * (1.0f64 / 3.0).ln() + 4.0 * (2.0f64 / 3.0).ln());
        assert!((p.entropy - s_expect).abs() < 1e-12);
    }

    #[test]
    fn two_level_midgap() {
        let p = FermiDiracReference::new(&two_level()).unwrap().at(1.0).unwrap();
        assert!((p.mu() - 0.5).abs() < 1e-12);
        assert!((p.occupations[0] - logistic(0.5)).abs() < 1e-14);
        assert!((p.occupations[1] - logistic(-0.5)).abs() < 1e-14);
        let expect = 2.0 * 0.5f64.ln() + softplus(0.5) + softplus(-0.5);
        assert!((p.ln_z - expect).abs() < 1e-12);
    }

    #[test]
    fn aufbau_at_low_temperature() {
        let m = random_complex(8, 3, 2);
        let p = FermiDiracReference::new(&m).unwrap().at(400.0).unwrap();
        let expect = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (n, e) in p.occupations.iter().zip(expect) {
            assert!((n - e).abs() < 1e-10);
        }
        assert!(p.entropy.abs() < 1e-8);
    }

    #[test]
    fn electron_count_exact() {
        let m = random_complex(10, 4, 3);
        let r = FermiDiracReference::new(&m).unwrap();
        for beta in [0.1, 1.0, 5.0, 20.0] {
            let p = r.at(beta).unwrap();
            assert!((p.occupations.iter().sum::<f64>() - 4.0).abs() <= 1e-12);
            let tr: f64 = (0..10).map(|i| p.density[(i, i)].re).sum();
            assert!((tr - 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_enumeration() {
        for (m, n_el, seed) in [(6, 3, 4), (8, 3, 5), (9, 5, 6)] {
            let model = random_complex(m, n_el, seed);
            let r = FermiDiracReference::new(&model).unwrap();
            for beta in [0.0, 0.5, 3.0, 12.0] {
                let (ln_z, lam) = fock_enumeration_ln_z(&model, beta).unwrap();
                let p = r.at(beta).unwrap();
                assert!((p.ln_z - ln_z).abs() < 1e-9, "M={m} beta={beta}: {} vs {ln_z}", p.ln_z);
                assert!((p.lambda - lam).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn twelve_orbital_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 12;
        let mut h = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            for j in i..m {
                let x = rng.random_range(-1.0..1.0);
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        let model = OneBodyFermionModel::new(h, 6, -1.0, EnergyUnit::ElectronVolt).unwrap();
        let (ln_z, _) = fock_enumeration_ln_z(&model, 2.0).unwrap();
        let p = FermiDiracReference::new(&model).unwrap().at(2.0).unwrap();
        assert!((p.ln_z - ln_z).abs() < 1e-9);
    }

    #[test]
    fn bracket_failure_when_unfillable() {
        let r = FermiDiracReference::<f64> {
            energies: vec![0.0, 1.0],
            vectors: Array2::eye(2),
            n_el: 2,
            e0: 0.0,
        };
        assert!(matches!(r.at(1.0), Err(NoeError::BracketFailure(_))));
    }
}
