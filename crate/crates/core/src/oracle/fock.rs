//! Truncated bosonic Fock spaces and sparse ladder-operator actions.

use std::collections::HashMap;

use ndarray::Array2;

use crate::model::{BosonQuadraticModel, VerticalSurfaceSpec};

/// A single ladder operator acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise(usize),
    Lower(usize),
}

/// Product basis with per-mode caps n_max, enumerated lexicographically
/// (first mode slowest).
#[derive(Debug, Clone)]
pub struct FockBasis {
    caps: Vec<usize>,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FockBasis {
    pub fn new(caps: Vec<usize>) -> Self {
        let mut states = vec![vec![]];
        for &cap in &caps {
            states = states
                .into_iter()
                .flat_map(|s| {
                    (0..=cap).map(move |n| {
                        let mut t = s.clone();
                        t.push(n);
                        t
                    })
                })
                .collect();
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { caps, states, index }
    }

    pub fn uniform(n_modes: usize, cap: usize) -> Self {
        Self::new(vec![cap; n_modes])
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.caps.len()
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn state(&self, i: usize) -> &[usize] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Applies `ops` right to left to basis state `i`; `None` when the result
    /// vanishes or leaves the truncated space.
    pub fn apply(&self, ops: &[Ladder], i: usize) -> Option<(f64, usize)> {
        let mut occ = self.states[i].clone();
        let mut coeff_sq: u64 = 1;
        for op in ops.iter().rev() {
            match *op {
                Ladder::Raise(m) => {
                    if occ[m] == self.caps[m] {
                        return None;
                    }
                    occ[m] += 1;
                    coeff_sq *= occ[m] as u64;
                }
                Ladder::Lower(m) => {
                    if occ[m] == 0 {
                        return None;
                    }
                    coeff_sq *= occ[m] as u64;
                    occ[m] -= 1;
                }
            }
        }
        Some(((coeff_sq as f64).sqrt(), self.index[&occ]))
    }

    /// Tr(O M) for the operator product `ops` and a dense matrix M.
    pub fn trace_with(&self, ops: &[Ladder], m: &Array2<f64>) -> f64 {
        (0..self.dim())
            .filter_map(|n| self.apply(ops, n).map(|(c, k)| c * m[(n, k)]))
            .sum()
    }
}

/// Matrix of the normal-ordered quadratic Hamiltonian, assembled from
/// ladder actions on occupation tuples.
pub fn boson_hamiltonian_matrix(model: &BosonQuadraticModel<f64>, basis: &FockBasis) -> Array2<f64> {
    use Ladder::*;
    let n = model.n_modes();
    let dim = basis.dim();
    let mut h = Array2::<f64>::zeros((dim, dim));
    for col in 0..dim {
        h[(col, col)] += model.h0;
        let mut add = |coef: f64, ops: &[Ladder]| {
            if coef != 0.0 {
                if let Some((c, row)) = basis.apply(ops, col) {
                    h[(row, col)] += coef * c;
                }
            }
        };
        for i in 0..n {
            add(model.h_up[i], &[Raise(i)]);
            add(model.h_dn[i], &[Lower(i)]);
            for j in 0..n {
                add(model.h_ud[(i, j)], &[Raise(i), Lower(j)]);
                add(0.5 * model.h_uu[(i, j)], &[Raise(i), Raise(j)]);
                add(0.5 * model.h_dd[(i, j)], &[Lower(i), Lower(j)]);
            }
        }
    }
    h
}

/// Single-mode position and momentum-squared matrices on 0..=cap, formed by
/// multiplying q and p on a basis two quanta larger and truncating.
fn single_mode_qp(cap: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let big = cap + 3;
    let mut q = Array2::<f64>::zeros((big, big));
    let mut p_re = Array2::<f64>::zeros((big, big));
    for n in 1..big {
        let s = (n as f64 / 2.0).sqrt();
        q[(n, n - 1)] = s;
        q[(n - 1, n)] = s;
        // p = i(a† − a)/√2 has imaginary entries; p² = −(a† − a)²/2 is real.
        p_re[(n, n - 1)] = s;
        p_re[(n - 1, n)] = -s;
    }
    let q2 = q.dot(&q);
    let p2 = -p_re.dot(&p_re);
    let cut = |m: &Array2<f64>| m.slice(ndarray::s![..=cap, ..=cap]).to_owned();
    (cut(&q), cut(&q2), cut(&p2))
}

/// Matrix of E_vert + Σκq + ½ΣΦqq + ½Σωp² built directly from position and
/// momentum matrices, independent of the ladder-tensor assembly.
pub fn surface_hamiltonian_matrix(spec: &VerticalSurfaceSpec<f64>, basis: &FockBasis) -> Array2<f64> {
    let n = spec.n_modes();
    let mats: Vec<_> = basis.caps().iter().map(|&c| single_mode_qp(c)).collect();
    let dim = basis.dim();
    let mut h = Array2::<f64>::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            let (sr, sc) = (basis.state(r), basis.state(c));
            let diff: Vec<usize> = (0..n).filter(|&k| sr[k] != sc[k]).collect();
            if diff.len() > 2 {
                continue;
            }
            let only = |k: usize| diff.iter().all(|&d| d == k);
            let mut v = 0.0;
            if diff.is_empty() {
                v += spec.e_vert;
            }
            for i in 0..n {
                let (q, q2, p2) = &mats[i];
                if only(i) {
                    v += spec.kappa[i] * q[(sr[i], sc[i])];
                    v += 0.5 * spec.phi[(i, i)] * q2[(sr[i], sc[i])];
                    v += 0.5 * spec.omega[i] * p2[(sr[i], sc[i])];
                }
                for j in 0..n {
                    if i != j && diff.iter().all(|&d| d == i || d == j) {
                        v += 0.5 * spec.phi[(i, j)] * mats[i].0[(sr[i], sc[i])] * mats[j].0[(sr[j], sc[j])];
                    }
                }
            }
            h[(r, c)] = v;
        }
    }
    h
}
