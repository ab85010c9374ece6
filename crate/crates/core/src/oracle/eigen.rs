//! Dense Hermitian eigensolvers.
//!
//! [`eigh`] is a cyclic Jacobi solver for real symmetric or complex Hermitian
//! input. [`eigh_tridiagonal_ql`] reduces a real symmetric matrix to
//! tridiagonal form with Householder reflections and finishes with implicit
//! QL; it is the workhorse for Fock-space matrices of dimension ~10³.

use ndarray::Array2;
use num_traits::{Float, One, Zero};

use crate::error::{NoeError, Result};
use crate::scalar::{Real, Scalar};

const MAX_SWEEPS: usize = 100;
const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues in ascending order with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh<S: Scalar> {
    pub values: Vec<S::Real>,
    pub vectors: Array2<S>,
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each rotation first rephases row/column q so that a_pq is real, then
/// applies a real Givens rotation annihilating it.
pub fn eigh<S: Scalar>(a: &Array2<S>) -> Result<Eigh<S>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(NoeError::DimensionMismatch {
            context: "eigh expects a square matrix",
            expected: n,
            found: a.ncols(),
        });
    }
    let mut a = a.clone();
    let mut v = Array2::<S>::eye(n);
    let norm: S::Real = a.iter().map(|x| x.modulus_sqr()).sum::<S::Real>().sqrt();
    let tol = S::Real::eps() * S::Real::eps() * norm * norm;

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let off: S::Real = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|ij| a[ij].modulus_sqr())
            .sum();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(NoeError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re().partial_cmp(&a[(j, j)].re()).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re()).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[(r, order[c])]);
    Ok(Eigh { values, vectors })
}

fn rotate<S: Scalar>(a: &mut Array2<S>, v: &mut Array2<S>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[(p, q)];
    let g = apq.modulus();
    if g == S::Real::zero() {
        return;
    }
    // Rephase q so that a_pq = |a_pq|.
    let phase = S::from_parts(apq.re() / g, apq.im() / g).unwrap_or(S::one());
    let phase_c = phase.conj();
    for k in 0..n {
        a[(k, q)] = a[(k, q)] * phase_c;
    }
    for k in 0..n {
        a[(q, k)] = a[(q, k)] * phase;
    }
    for k in 0..n {
        v[(k, q)] = v[(k, q)] * phase_c;
    }

    let app = a[(p, p)].re();
    let aqq = a[(q, q)].re();
    let theta = (aqq - app) / (g + g);
    let one = S::Real::one();
    let t = theta.signum() / (theta.abs() + (theta * theta + one).sqrt());
    let c = one / (t * t + one).sqrt();
    let s = t * c;
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * c - akq * s;
        a[(k, q)] = akp * s + akq * c;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk * c - aqk * s;
        a[(q, k)] = apk * s + aqk * c;
    }
    a[(p, q)] = S::zero();
    a[(q, p)] = S::zero();
    a[(p, p)] = S::from_real(a[(p, p)].re());
    a[(q, q)] = S::from_real(a[(q, q)].re());
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * c - vkq * s;
        v[(k, q)] = vkp * s + vkq * c;
    }
}

/// Householder tridiagonalization followed by implicit QL with shifts.
pub fn eigh_tridiagonal_ql<R: Real + Scalar<Real = R>>(a: &Array2<R>) -> Result<Eigh<R>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(NoeError::DimensionMismatch {
            context: "eigh_tridiagonal_ql expects a square matrix",
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(Eigh {
            values: vec![],
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v = a.clone();
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n];
    tred2(&mut v, &mut d, &mut e, true);
    // Column rotations of V become contiguous row rotations of Vᵀ.
    let mut w = v.t().as_standard_layout().into_owned();
    tql2(Some(&mut w), &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| w[(order[c], r)]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, ascending. Skips both transform accumulations.
pub fn eigvalsh_tridiagonal_ql<R: Real + Scalar<Real = R>>(a: &Array2<R>) -> Result<Vec<R>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(NoeError::DimensionMismatch {
            context: "eigvalsh_tridiagonal_ql expects a square matrix",
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut v = a.clone();
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n];
    tred2(&mut v, &mut d, &mut e, false);
    tql2(None, &mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

fn tred2<R: Real>(v: &mut Array2<R>, d: &mut [R], e: &mut [R], accumulate: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = R::zero();
        let mut h = R::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == R::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = R::zero();
                v[(j, i)] = R::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > R::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = R::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = R::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = R::zero();
            }
        }
        d[i] = h;
    }
    if !accumulate {
        for j in 0..n {
            d[j] = v[(j, j)];
        }
        e[0] = R::zero();
        return;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = R::one();
        let h = d[i + 1];
        if h != R::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = R::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = R::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = R::zero();
    }
    v[(n - 1, n - 1)] = R::one();
    e[0] = R::zero();
}

/// Implicit QL on the tridiagonal (d, e); `w` holds eigenvectors as rows.
fn tql2<R: Real>(mut w: Option<&mut Array2<R>>, d: &mut [R], e: &mut [R]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = R::zero();
    let mut f = R::zero();
    let mut tst1 = R::zero();
    let eps = R::eps();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(NoeError::NoConvergence(MAX_QL_ITERATIONS));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (e[l] + e[l]);
                let mut r = p.hypot(R::one());
                if p < R::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = R::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = R::zero();
                let mut s2 = R::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let Some(w) = w.as_deref_mut() else { continue };
                    let (lo, hi) = w.view_mut().split_at(ndarray::Axis(0), i + 1);
                    let mut row_i = lo.index_axis_move(ndarray::Axis(0), i);
                    let mut row_n = hi.index_axis_move(ndarray::Axis(0), 0);
                    ndarray::Zip::from(&mut row_i).and(&mut row_n).for_each(|wi, wn| {
                        let hk = *wn;
                        *wn = s * *wi + c * hk;
                        *wi = c * *wi - s * hk;
                    });
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = R::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check<S: Scalar<Real = f64>>(a: &Array2<S>, e: &Eigh<S>, tol: f64) {
        let n = a.nrows();
        let scale = a.iter().map(|x| x.modulus()).fold(1.0, f64::max);
        for k in 0..n {
            for i in 0..n {
                let av: S = (0..n).map(|j| a[(i, j)] * e.vectors[(j, k)]).sum();
                let lv = e.vectors[(i, k)] * e.values[k];
                assert!((av - lv).modulus() <= tol * scale, "residual");
            }
        }
        for p in 0..n {
            for q in 0..n {
                let dot: S = (0..n).map(|i| e.vectors[(i, p)].conj() * e.vectors[(i, q)]).sum();
                let expect = if p == q { 1.0 } else { 0.0 };
                assert!((dot - S::from_real(expect)).modulus() <= tol, "unitarity");
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_input_sorted() {
        let a = Array2::from_diag(&array![3.0, 1.0, 2.0]);
        let e = eigh(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);
        let q = eigh_tridiagonal_ql(&a).unwrap();
        assert_eq!(q.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let a: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0]];
        let e = eigh(&a).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        check(&a, &e, 1e-14);
    }

    #[test]
    fn random_complex_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let mut a = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            a[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        check(&a, &eigh(&a).unwrap(), 1e-10);
    }

    #[test]
    fn ql_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x = rng.random_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let q = eigh_tridiagonal_ql(&a).unwrap();
        check(&a, &q, 1e-10);
        let j = eigh(&a).unwrap();
        for (x, y) in q.values.iter().zip(&j.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let v = eigvalsh_tridiagonal_ql(&a).unwrap();
        for (x, y) in v.iter().zip(&j.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_jacobi() {
        let a = array![[2.0f32, 1.0], [1.0, 2.0]];
        let e = eigh(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-6 && (e.values[1] - 3.0).abs() < 1e-6);
    }
}
