//! Thermal propagation for quadratic bosonic Hamiltonians.
//!
//! Amplitudes are the cumulants of the thermal density against a uniform
//! contraction f:
//!
//! ```text
//! t^i   = ⟨a_i⟩            t_i   = ⟨a†_i⟩
//! t^i_j = ⟨a†_j a_i⟩_c − f δ_ij
//! t^{ij} = ⟨a_i a_j⟩_c     t_{ij} = ⟨a†_i a†_j⟩_c
//! ```
//!
//! and s₀ = ln Z. Singles and doubles close the flow exactly for quadratic H.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{NoeError, Result};
use crate::integrate::{run_fixed, step_euler, step_leapfrog_temperature, FlowState, Integrator, Layout};
use crate::model::BosonQuadraticModel;
use crate::scalar::RealScalar;
use crate::units::K_B_CM1_PER_K;

/// Thermal expectation values d_λ = ⟨Ω_λ†⟩ over a set of states, with the
/// (absolute) partition function of that set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDensitySet<R: RealScalar> {
    pub z: R,
    /// ⟨a_i⟩
    pub d_up: Array1<R>,
    /// ⟨a†_i⟩
    pub d_dn: Array1<R>,
    /// ⟨a†_j a_i⟩ at [i][j]
    pub d_ud: Array2<R>,
    /// ⟨a_i a_j⟩
    pub d_uu: Array2<R>,
    /// ⟨a†_i a†_j⟩
    pub d_dd: Array2<R>,
}

impl<R: RealScalar> ThermalDensitySet<R> {
    pub fn cast<T: RealScalar>(&self) -> ThermalDensitySet<T> {
        let c = |x: &R| T::lit(x.to_f64_lossy());
        ThermalDensitySet {
            z: c(&self.z),
            d_up: self.d_up.map(c),
            d_dn: self.d_dn.map(c),
            d_ud: self.d_ud.map(c),
            d_uu: self.d_uu.map(c),
            d_dd: self.d_dd.map(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosonAmplitudes<R: RealScalar> {
    pub beta: R,
    pub s0: R,
    pub t_up: Array1<R>,
    pub t_dn: Array1<R>,
    pub t_ud: Array2<R>,
    pub t_uu: Array2<R>,
    pub t_dd: Array2<R>,
}

impl<R: RealScalar> BosonAmplitudes<R> {
    pub fn zeros(n: usize, beta: R) -> Self {
        Self {
            beta,
            s0: R::zero(),
            t_up: Array1::zeros(n),
            t_dn: Array1::zeros(n),
            t_ud: Array2::zeros((n, n)),
            t_uu: Array2::zeros((n, n)),
            t_dd: Array2::zeros((n, n)),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.t_up.len()
    }

    pub fn layout(n: usize) -> Arc<Layout> {
        Layout::new(&[
            ("s0", 1),
            ("t_up", n),
            ("t_dn", n),
            ("t_ud", n * n),
            ("t_uu", n * n),
            ("t_dd", n * n),
        ])
    }

    pub fn to_flow(&self) -> FlowState<R> {
        let mut y = vec![self.s0];
        y.extend(self.t_up.iter());
        y.extend(self.t_dn.iter());
        y.extend(self.t_ud.iter());
        y.extend(self.t_uu.iter());
        y.extend(self.t_dd.iter());
        FlowState::new(self.beta, y, Self::layout(self.n_modes())).expect("layout matches")
    }

    pub fn from_flow(state: &FlowState<R>) -> Self {
        Self::from_slice(state.x, &state.y, state.layout.block("t_up").unwrap().len)
    }

    fn from_slice(beta: R, y: &[R], n: usize) -> Self {
        let v = |o: usize| Array1::from(y[o..o + n].to_vec());
        let m = |o: usize| Array2::from_shape_vec((n, n), y[o..o + n * n].to_vec()).unwrap();
        Self {
            beta,
            s0: y[0],
            t_up: v(1),
            t_dn: v(1 + n),
            t_ud: m(1 + 2 * n),
            t_uu: m(1 + 2 * n + n * n),
            t_dd: m(1 + 2 * n + 2 * n * n),
        }
    }

    /// Full occupations ⟨a†_i a_i⟩ = f + t^i_i + t_i t^i.
    pub fn occupations(&self, f: R) -> Vec<R> {
        (0..self.n_modes())
            .map(|i| f + self.t_ud[(i, i)] + self.t_dn[i] * self.t_up[i])
            .collect()
    }
}

/// The six blocks of −d/dβ of the amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonResidual<R: RealScalar> {
    pub r0: R,
    pub r_up: Array1<R>,
    pub r_dn: Array1<R>,
    pub r_ud: Array2<R>,
    pub r_uu: Array2<R>,
    pub r_dd: Array2<R>,
}

/// Evaluates the connected thermal residual.
///
/// Writing g^i = h^i + h^i_l t^l + h^{ik} t_k and g_i = h_i + h^k_i t_k + h_{ik} t^k
/// for the linear couplings seen by the fluctuations, A = t^i_k + f̄ δ and
/// B = t^l_j + f δ:
///
/// ```text
/// −ds₀/dβ    = h₀(f) + h^k_l t^l_k + t_k h^k_l t^l + h^k t_k + h_k t^k
///              + ½h_{kl}(t^{kl} + t^k t^l) + ½h^{kl}(t_{kl} + t_k t_l)
/// −dt^i/dβ   = f̄ g^i + t^i_k g^k + t^{ik} g_k
/// −dt_i/dβ   = f g_i + t^k_i g_k + t_{ik} g^k
/// −dt^i_j/dβ = (A h_ud B + t^{..} h_udᵀ t_{..} + A h^{..} t_{..} + t^{..} h_{..} B)[i][j]
/// −dt^{ij}/dβ = (A h_ud t^{..})[i][j] + (A h_ud t^{..})[j][i] + (A h^{..} Aᵀ + t^{..} h_{..} t^{..})[i][j]
/// −dt_{ij}/dβ = (t_{..} h_ud B)[i][j] + (t_{..} h_ud B)[j][i] + (t_{..} h^{..} t_{..} + Bᵀ h_{..} B)[i][j]
/// ```
pub fn residual_boson<R: RealScalar>(model: &BosonQuadraticModel<R>, amps: &BosonAmplitudes<R>, f: R) -> BosonResidual<R> {
    let half = R::lit(0.5);
    let fbar = R::one() + f;
    let n = amps.n_modes();
    let (hud, huu, hdd) = (&model.h_ud, &model.h_uu, &model.h_dd);
    let (tu, td) = (&amps.t_up, &amps.t_dn);
    let (tud, tuu, tdd) = (&amps.t_ud, &amps.t_uu, &amps.t_dd);

    let g_up = &model.h_up + &hud.dot(tu) + &huu.dot(td);
    let g_dn = &model.h_dn + &hud.t().dot(td) + &hdd.t().dot(tu);

    let r0 = model.h0_for(f)
        + (hud * &tud.t()).sum()
        + td.dot(&hud.dot(tu))
        + model.h_up.dot(td)
        + model.h_dn.dot(tu)
        + half * ((hdd * tuu).sum() + tu.dot(&hdd.dot(tu)))
        + half * ((huu * tdd).sum() + td.dot(&huu.dot(td)));

    let r_up = &g_up * fbar + &tud.dot(&g_up) + &tuu.dot(&g_dn);
    let r_dn = &g_dn * f + &tud.t().dot(&g_dn) + &tdd.dot(&g_up);

    let eye = Array2::<R>::eye(n);
    let a = tud + &(&eye * fbar);
    let b = tud + &(&eye * f);

    let r_ud = a.dot(hud).dot(&b) + tuu.dot(&hud.t()).dot(tdd) + a.dot(huu).dot(tdd) + tuu.dot(hdd).dot(&b);
    let x = a.dot(hud).dot(tuu);
    let r_uu = &x + &x.t() + a.dot(huu).dot(&a.t()) + tuu.dot(hdd).dot(tuu);
    let y = tdd.dot(hud).dot(&b);
    let r_dd = &y + &y.t() + tdd.dot(huu).dot(tdd) + b.t().dot(hdd).dot(&b);

    BosonResidual {
        r0,
        r_up,
        r_dn,
        r_ud,
        r_uu,
        r_dd,
    }
}

impl<R: RealScalar> BosonResidual<R> {
    fn write_negated(&self, out: &mut [R]) {
        let mut k = 0;
        let mut put = |v: R| {
            out[k] = -v;
            k += 1;
        };
        put(self.r0);
        self.r_up.iter().for_each(|&v| put(v));
        self.r_dn.iter().for_each(|&v| put(v));
        self.r_ud.iter().for_each(|&v| put(v));
        self.r_uu.iter().for_each(|&v| put(v));
        self.r_dd.iter().for_each(|&v| put(v));
    }
}

/// Maps densities to amplitudes: s₀ = ln Z, t^i = d^i, t_i = d_i,
/// t^i_j = d^i_j − t^i t_j − f δ_ij, t^{ij} = d^{ij} − t^i t^j,
/// t_{ij} = d_{ij} − t_i t_j.
pub fn init_from_states<R: RealScalar>(d: &ThermalDensitySet<R>, f: R, beta: R) -> Result<BosonAmplitudes<R>> {
    if !(d.z > R::zero()) {
        return Err(NoeError::NonPositiveZ(d.z.to_f64_lossy()));
    }
    let n = d.d_up.len();
    let tu = d.d_up.clone();
    let td = d.d_dn.clone();
    let t_ud = Array2::from_shape_fn((n, n), |(i, j)| {
        let delta = if i == j { f } else { R::zero() };
        d.d_ud[(i, j)] - tu[i] * td[j] - delta
    });
    let t_uu = Array2::from_shape_fn((n, n), |(i, j)| d.d_uu[(i, j)] - tu[i] * tu[j]);
    let t_dd = Array2::from_shape_fn((n, n), |(i, j)| d.d_dd[(i, j)] - td[i] * td[j]);
    Ok(BosonAmplitudes {
        beta,
        s0: d.z.ln(),
        t_up: tu,
        t_dn: td,
        t_ud,
        t_uu,
        t_dd,
    })
}

/// Inverse of [`init_from_states`].
pub fn densities_from_amplitudes<R: RealScalar>(a: &BosonAmplitudes<R>, f: R) -> ThermalDensitySet<R> {
    let n = a.n_modes();
    ThermalDensitySet {
        z: a.s0.exp(),
        d_up: a.t_up.clone(),
        d_dn: a.t_dn.clone(),
        d_ud: Array2::from_shape_fn((n, n), |(i, j)| {
            let delta = if i == j { f } else { R::zero() };
            a.t_ud[(i, j)] + a.t_up[i] * a.t_dn[j] + delta
        }),
        d_uu: Array2::from_shape_fn((n, n), |(i, j)| a.t_uu[(i, j)] + a.t_up[i] * a.t_up[j]),
        d_dd: Array2::from_shape_fn((n, n), |(i, j)| a.t_dd[(i, j)] + a.t_dn[i] * a.t_dn[j]),
    }
}

/// One recorded point of a bosonic trajectory (energies in cm⁻¹, T in K).
#[derive(Debug, Clone, PartialEq)]
pub struct BosonSample<R: RealScalar> {
    pub beta: R,
    pub t: R,
    pub ln_z: R,
    pub z: R,
    pub u: R,
    pub a: R,
    /// S/k_B.
    pub s: R,
    /// dU/dT in cm⁻¹ K⁻¹, filled by [`thermo_boson`].
    pub cv: Option<R>,
    pub occupations: Vec<R>,
    /// max |t^{ij} − t^{ji}|, |t_{ij} − t_{ji}|.
    pub asymmetry: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosonTrajectory<R: RealScalar> {
    pub f: R,
    pub samples: Vec<BosonSample<R>>,
    pub last: BosonAmplitudes<R>,
}

fn sample<R: RealScalar>(model: &BosonQuadraticModel<R>, amps: &BosonAmplitudes<R>, f: R) -> BosonSample<R> {
    let r = residual_boson(model, amps, f);
    let kb = R::lit(K_B_CM1_PER_K);
    let beta = amps.beta;
    let asym = |m: &Array2<R>| {
        let mut d = R::zero();
        for i in 0..m.nrows() {
            for j in 0..i {
                d = d.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        d
    };
    BosonSample {
        beta,
        t: R::one() / (kb * beta),
        ln_z: amps.s0,
        z: amps.s0.exp(),
        u: r.r0,
        a: -amps.s0 / beta,
        s: beta * r.r0 + amps.s0,
        cv: None,
        occupations: amps.occupations(f),
        asymmetry: asym(&amps.t_uu).max(asym(&amps.t_dd)),
    }
}

/// Options for [`propagate_boson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonPropagation<R: RealScalar> {
    /// Final inverse temperature (cm); smaller than the start to heat up.
    pub beta_end: R,
    /// Step magnitude; the sign follows the direction of travel.
    pub dbeta: R,
    pub integrator: Integrator,
    pub record_every: usize,
}

/// Integrates the amplitudes from `amps0.beta` to `beta_end` with −dA/dβ = R(A).
pub fn propagate_boson<R: RealScalar>(
    model: &BosonQuadraticModel<R>,
    amps0: &BosonAmplitudes<R>,
    f: R,
    opts: &BosonPropagation<R>,
) -> Result<BosonTrajectory<R>> {
    if !(opts.dbeta.abs() > R::zero()) {
        return Err(NoeError::InvalidArgument("dbeta must be nonzero".into()));
    }
    if !(opts.beta_end > R::zero()) {
        return Err(NoeError::NonPositiveTemperature(f64::INFINITY));
    }
    let n = model.n_modes();
    if amps0.n_modes() != n {
        return Err(NoeError::DimensionMismatch {
            context: "amplitudes vs model modes",
            expected: n,
            found: amps0.n_modes(),
        });
    }
    let span = opts.beta_end - amps0.beta;
    let n_steps = (span.abs() / opts.dbeta.abs()).ceil().to_usize().unwrap_or(0).max(1);
    let dx = span / R::from_count(n_steps);
    let every = opts.record_every.max(1);

    let mut rhs = |beta: R, y: &[R], out: &mut [R]| -> Result<()> {
        let a = BosonAmplitudes::from_slice(beta, y, n);
        residual_boson(model, &a, f).write_negated(out);
        Ok(())
    };
    let mut samples = Vec::new();
    let mut observe = |k: usize, s: &FlowState<R>| -> Result<()> {
        if k.is_multiple_of(every) || k == n_steps {
            samples.push(sample(model, &BosonAmplitudes::from_flow(s), f));
        }
        Ok(())
    };
    let last = run_fixed(amps0.to_flow(), dx, n_steps, opts.integrator, &mut rhs, &mut observe)?;
    Ok(BosonTrajectory {
        f,
        samples,
        last: BosonAmplitudes::from_flow(&last),
    })
}

/// Temperature-domain leap-frog from `t_start` to `t_end` with `n_steps`
/// equal temperature steps, seeded by one Euler step in β.
pub fn propagate_boson_temperature<R: RealScalar>(
    model: &BosonQuadraticModel<R>,
    amps0: &BosonAmplitudes<R>,
    f: R,
    t_end: R,
    n_steps: usize,
) -> Result<BosonTrajectory<R>> {
    let kb = R::lit(K_B_CM1_PER_K);
    let t_start = R::one() / (kb * amps0.beta);
    if !(t_end > R::zero()) {
        return Err(NoeError::NonPositiveTemperature(t_end.to_f64_lossy()));
    }
    let n = model.n_modes();
    let n_steps = n_steps.max(2);
    let tau = |k: usize| t_start + (t_end - t_start) * R::from_count(k) / R::from_count(n_steps);
    let mut rhs = |beta: R, y: &[R], out: &mut [R]| -> Result<()> {
        residual_boson(model, &BosonAmplitudes::from_slice(beta, y, n), f).write_negated(out);
        Ok(())
    };
    let beta_of = |t: R| R::one() / (kb * t);
    let to_sample = |tau_k: R, y: &[R]| sample(model, &BosonAmplitudes::from_slice(beta_of(tau_k), y, n), f);

    let start = amps0.to_flow();
    let mut first = step_euler(&start, beta_of(tau(1)) - amps0.beta, &mut rhs)?;
    let mut prev = FlowState::new(t_start, start.y.clone(), Arc::clone(&start.layout))?;
    first.x = tau(1);
    let mut samples = vec![to_sample(t_start, &prev.y), to_sample(tau(1), &first.y)];
    let mut curr = first;
    for k in 2..=n_steps {
        let next = step_leapfrog_temperature(&prev, &curr, tau(k), kb, &mut rhs)?;
        samples.push(to_sample(tau(k), &next.y));
        prev = curr;
        curr = next;
    }
    let last = BosonAmplitudes::from_slice(beta_of(curr.x), &curr.y, n);
    Ok(BosonTrajectory { f, samples, last })
}

/// Fills heat capacities dU/dT by centered differences (one-sided at the ends).
pub fn thermo_boson<R: RealScalar>(traj: &mut BosonTrajectory<R>) {
    let s = &mut traj.samples;
    let n = s.len();
    if n < 2 {
        return;
    }
    let cv: Vec<R> = (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (s[b].u - s[a].u) / (s[b].t - s[a].t)
        })
        .collect();
    for (smp, c) in s.iter_mut().zip(cv) {
        smp.cv = Some(c);
    }
}

/// max_k |U_k + d lnZ/dβ| / |U_k| using a five-point centered stencil at
/// every sample whose four neighbours are equally spaced in β.
pub fn energy_consistency<R: RealScalar>(samples: &[BosonSample<R>]) -> Option<f64> {
    five_point_check(samples.iter().map(|s| (s.beta.to_f64_lossy(), s.ln_z.to_f64_lossy(), s.u.to_f64_lossy())))
}

pub(crate) fn uniform_stencil(x: &[f64; 5]) -> bool {
    let h = (x[4] - x[0]) / 4.0;
    x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

pub(crate) fn five_point_check(pts: impl Iterator<Item = (f64, f64, f64)>) -> Option<f64> {
    let p: Vec<(f64, f64, f64)> = pts.collect();
    if p.len() < 5 {
        return None;
    }
    let mut worst: f64 = 0.0;
    for k in 2..p.len() - 2 {
        if !uniform_stencil(&[p[k - 2].0, p[k - 1].0, p[k].0, p[k + 1].0, p[k + 2].0]) {
            continue;
        }
        let h = (p[k + 1].0 - p[k - 1].0) / 2.0;
        let d = (-p[k + 2].1 + 8.0 * p[k + 1].1 - 8.0 * p[k - 1].1 + p[k - 2].1) / (12.0 * h);
        worst = worst.max((p[k].2 + d).abs() / p[k].2.abs().max(f64::MIN_POSITIVE));
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::beta_from_kelvin;
    use ndarray::array;

    #[test]
    fn vacuum_is_stationary_at_zero_contraction() {
        let m = BosonQuadraticModel::uncoupled(array![400.0], 0.0);
        let r = residual_boson(&m, &BosonAmplitudes::zeros(1, 1.0), 0.0);
        assert_eq!(r.r0, 200.0);
        assert_eq!(r.r_ud[(0, 0)], 0.0);
        assert_eq!(r.r_uu[(0, 0)], 0.0);
        assert_eq!(r.r_up[0], 0.0);
    }

    #[test]
    fn one_mode_factorized_form() {
        let w = 2.0f64;
        let m = BosonQuadraticModel::uncoupled(array![w], 0.0);
        for (f, t) in [(0.0, 0.3), (0.25, -0.1), (1.5, 0.7)] {
            let mut a = BosonAmplitudes::zeros(1, 1.0);
            a.t_ud[(0, 0)] = t;
            let r = residual_boson(&m, &a, f);
            let expect = w * (f * (1.0 + f) + (2.0 * f + 1.0) * t + t * t);
            assert!((r.r_ud[(0, 0)] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn init_round_trip() {
        let d = ThermalDensitySet {
            z: 0.37f64,
            d_up: array![0.1, -0.2],
            d_dn: array![0.1, -0.2],
            d_ud: array![[0.3, 0.05], [0.05, 0.2]],
            d_uu: array![[0.01, -0.02], [-0.02, 0.04]],
            d_dd: array![[0.01, -0.02], [-0.02, 0.04]],
        };
        let a = init_from_states(&d, 0.5, 1.0).unwrap();
        let back = densities_from_amplitudes(&a, 0.5);
        let dev = (&back.d_ud - &d.d_ud).iter().chain((&back.d_uu - &d.d_uu).iter()).fold(0.0f64, |m, x: &f64| m.max(x.abs()));
        assert!(dev <= 4.0 * f64::EPSILON);
        assert_eq!(back.d_up, d.d_up);
        assert!((back.z - d.z).abs() <= 2.0 * f64::EPSILON);
        let mut bad = d.clone();
        bad.z = 0.0;
        assert!(matches!(init_from_states(&bad, 0.0, 1.0), Err(NoeError::NonPositiveZ(_))));
    }

    #[test]
    fn single_mode_bose_einstein() {
        let w = 300.0f64;
        let m = BosonQuadraticModel::uncoupled(array![w], 0.0);
        let b0 = beta_from_kelvin(60.0f64);
        let n0 = 1.0 / (b0 * w).exp_m1();
        let mut a = BosonAmplitudes::zeros(1, b0);
        a.t_ud[(0, 0)] = n0;
        a.s0 = -b0 * w / 2.0 - (-(-b0 * w).exp()).ln_1p();
        let opts = BosonPropagation {
            beta_end: beta_from_kelvin(500.0f64),
            dbeta: 1e-5,
            integrator: Integrator::Rk4,
            record_every: 5,
        };
        let traj = propagate_boson(&m, &a, 0.0, &opts).unwrap();
        for s in &traj.samples {
            let n = 1.0 / (s.beta * w).exp_m1();
            assert!((s.occupations[0] - n).abs() <= 1e-8, "T={}", s.t);
            let u = w / 2.0 + w * n;
            assert!((s.u - u).abs() <= 1e-6 * u);
        }
        let ec = energy_consistency(&traj.samples).unwrap();
        assert!(ec <= 1e-6, "{ec}");
    }

    #[test]
    fn temperature_leapfrog_bose_einstein() {
        let w = 300.0f64;
        let m = BosonQuadraticModel::uncoupled(array![w], 0.0);
        let b0 = beta_from_kelvin(60.0f64);
        let mut a = BosonAmplitudes::zeros(1, b0);
        a.t_ud[(0, 0)] = 1.0 / (b0 * w).exp_m1();
        let traj = propagate_boson_temperature(&m, &a, 0.0, 500.0, 50000).unwrap();
        let worst = traj
            .samples
            .iter()
            .map(|s| (s.occupations[0] - 1.0 / (s.beta * w).exp_m1()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "worst {worst}");
        assert!((traj.samples.last().unwrap().t - 500.0).abs() < 1e-9);
    }

    #[test]
    fn heat_capacity_of_oscillator() {
        let w = 300.0f64;
        let m = BosonQuadraticModel::uncoupled(array![w], 0.0);
        let b0 = beta_from_kelvin(100.0f64);
        let mut a = BosonAmplitudes::zeros(1, b0);
        a.t_ud[(0, 0)] = 1.0 / (b0 * w).exp_m1();
        let opts = BosonPropagation {
            beta_end: beta_from_kelvin(300.0f64),
            dbeta: 1e-5,
            integrator: Integrator::Rk4,
            record_every: 10,
        };
        let mut traj = propagate_boson(&m, &a, 0.0, &opts).unwrap();
        thermo_boson(&mut traj);
        let s = &traj.samples[traj.samples.len() / 2];
        let x = w * s.beta;
        let cv = K_B_CM1_PER_K * x * x * x.exp() / x.exp_m1().powi(2);
        assert!((s.cv.unwrap() - cv).abs() < 1e-4 * cv);
    }
}
