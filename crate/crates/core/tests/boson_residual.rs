//! The bosonic amplitude residual against the exact moment flow of Gaussian
//! density matrices built in a truncated Fock space.

use ndarray::{Array1, Array2};
use noe_core::boson::{init_from_states, residual_boson};
use noe_core::model::BosonQuadraticModel;
use noe_core::oracle::fock::{boson_hamiltonian_matrix, FockBasis};
use noe_core::oracle::sos::{gibbs, moment_flow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = 26;

fn random_model(rng: &mut ChaCha8Rng, n: usize, hermitian: bool) -> BosonQuadraticModel<f64> {
    let mut u = |a: f64| rng.random_range(-a..a);
    let mut h_ud = Array2::from_shape_fn((n, n), |_| 0.0);
    let mut h_uu = Array2::zeros((n, n));
    let mut h_dd = Array2::zeros((n, n));
    for i in 0..n {
        h_ud[(i, i)] = 1.0 + 0.5 * u(1.0).abs();
        for j in 0..i {
            let (a, b) = (u(0.1), u(0.1));
            h_ud[(i, j)] = a;
            h_ud[(j, i)] = if hermitian { a } else { u(0.1) };
            h_uu[(i, j)] = b;
            h_uu[(j, i)] = b;
        }
        h_uu[(i, i)] = u(0.15);
    }
    for i in 0..n {
        for j in 0..=i {
            let v = if hermitian { h_uu[(i, j)] } else { u(0.15) };
            h_dd[(i, j)] = v;
            h_dd[(j, i)] = v;
        }
    }
    let h_up = Array1::from_shape_fn(n, |_| u(0.3));
    let h_dn = if hermitian { h_up.clone() } else { Array1::from_shape_fn(n, |_| u(0.3)) };
    BosonQuadraticModel {
        omega: h_ud.diag().to_owned(),
        h0: u(1.0),
        h_up,
        h_dn,
        h_ud,
        h_uu,
        h_dd,
    }
}

fn max_abs<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    it.fold(0.0, |m, x| m.max(x.abs()))
}

/// Returns the worst deviation between the residual and the chain-ruled flow,
/// relative to the largest flow component.
fn compare(model: &BosonQuadraticModel<f64>, state: &BosonQuadraticModel<f64>, f: f64) -> f64 {
    let n = model.n_modes();
    let basis = FockBasis::uniform(n, CAP);
    let k = boson_hamiltonian_matrix(state, &basis) * 1.2;
    let rho = gibbs(&k).unwrap();
    let h = boson_hamiltonian_matrix(model, &basis);
    let (d, flow, e) = moment_flow(&basis, &h, &rho);
    let a = init_from_states(&d, f, 1.0).unwrap();
    let r = residual_boson(model, &a, f);

    let (tu, td) = (&a.t_up, &a.t_dn);
    let ud = Array2::from_shape_fn((n, n), |(i, j)| flow.d_ud[(i, j)] - flow.d_up[i] * td[j] - tu[i] * flow.d_dn[j]);
    let uu = Array2::from_shape_fn((n, n), |(i, j)| flow.d_uu[(i, j)] - flow.d_up[i] * tu[j] - tu[i] * flow.d_up[j]);
    let dd = Array2::from_shape_fn((n, n), |(i, j)| flow.d_dd[(i, j)] - flow.d_dn[i] * td[j] - td[i] * flow.d_dn[j]);

    let scale = max_abs(flow.d_up.iter().chain(flow.d_dn.iter()).chain(ud.iter()).chain(uu.iter()).chain(dd.iter()))
        .max(e.abs());
    let dev = [
        (r.r0 - e).abs(),
        max_abs((&r.r_up - &flow.d_up).iter()),
        max_abs((&r.r_dn - &flow.d_dn).iter()),
        max_abs((&r.r_ud - &ud).iter()),
        max_abs((&r.r_uu - &uu).iter()),
        max_abs((&r.r_dd - &dd).iter()),
    ];
    dev.iter().cloned().fold(0.0, f64::max) / scale
}

#[test]
fn residual_matches_gaussian_moment_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [1, 2] {
        for hermitian in [true, false] {
            for f in [0.0, 0.1, 0.5] {
                let model = random_model(&mut rng, n, hermitian);
                let state = random_model(&mut rng, n, true);
                let dev = compare(&model, &state, f);
                assert!(dev <= 1e-9, "n={n} hermitian={hermitian} f={f}: {dev:e}");
            }
        }
    }
}

#[test]
fn mutated_residual_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = random_model(&mut rng, 2, true);
    let state = random_model(&mut rng, 2, true);
    let mut wrong = model.clone();
    wrong.h_uu[(0, 1)] += 1e-3;
    wrong.h_uu[(1, 0)] += 1e-3;
    let n = model.n_modes();
    let basis = FockBasis::uniform(n, CAP);
    let rho = gibbs(&(boson_hamiltonian_matrix(&state, &basis) * 1.2)).unwrap();
    let (d, flow, _) = moment_flow(&basis, &boson_hamiltonian_matrix(&model, &basis), &rho);
    let a = init_from_states(&d, 0.1, 1.0).unwrap();
    let r = residual_boson(&wrong, &a, 0.1);
    assert!(max_abs((&r.r_up - &flow.d_up).iter()) > 1e-5);
}
