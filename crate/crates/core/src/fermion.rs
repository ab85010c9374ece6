//! Grand-canonical propagation for one-body fermionic Hamiltonians.
//!
//! With per-orbital contractions f_p (F = diag f, F̄ = 1 − F) the one-body
//! density is D = F + F̄ S F and the amplitudes obey
//!
//! ```text
//! −dS/dβ = R_h − μ R_δ
//! R_h = h + h F̄ S − S F h − S F h F̄ S
//! R_δ = 1 + F̄ S − S F − S F F̄ S
//! ```
//!
//! μ(β) is chosen so that Tr D stays equal to n_el. The partition function is
//! normalized to one at β = 0, ln Z = −βE₀ + s₀.

use std::cell::Cell;
use std::sync::Arc;

use ndarray::Array2;
use num_traits::{Float, One, ToPrimitive, Zero};

use crate::error::{NoeError, Result};
use crate::integrate::{run_fixed, FlowState, Integrator, Layout};
use crate::model::{normal_order_fermion, ContractionScheme, OneBodyFermionModel};
use crate::oracle::eigen::eigh;
use crate::scalar::{Real, Scalar};

/// |Σ_p w_p R_δ,pp| below which μ is undetermined.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;
/// Natural occupations outside [−tol, 1 + tol] abort the propagation.
pub const OCCUPATION_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FermionAmplitudes<S: Scalar> {
    pub beta: S::Real,
    pub s0: S::Real,
    /// ∫₀^β μ dβ' + ln(f/f̄) with f = n_el/M; equals β μ_FD.
    pub lambda: S::Real,
    pub s: Array2<S>,
}

impl<S: Scalar> FermionAmplitudes<S> {
    /// β = 0 amplitudes reproducing D = (n_el/M)·1 for any scheme with
    /// 0 < f_p < 1: s_pp = (n_el/M − f_p)/(f_p f̄_p).
    pub fn infinite_temperature(model: &OneBodyFermionModel<S>, scheme: &ContractionScheme<S::Real>) -> Result<Self> {
        let m = model.m();
        if scheme.len() != m {
            return Err(NoeError::DimensionMismatch {
                context: "contraction scheme vs orbital count",
                expected: m,
                found: scheme.len(),
            });
        }
        let target = S::Real::from_count(model.n_el()) / S::Real::from_count(m);
        let mut s = Array2::<S>::zeros((m, m));
        for p in 0..m {
            let (f, fb) = (scheme.f(p), scheme.fbar(p));
            if f != target {
                if f * fb == S::Real::zero() {
                    return Err(NoeError::validation(
                        format!("f[{p}]"),
                        "extremal contraction cannot represent the infinite-temperature state",
                    ));
                }
                s[(p, p)] = S::from_real((target - f) / (f * fb));
            }
        }
        let lambda = (target / (S::Real::one() - target)).ln();
        Ok(Self {
            beta: S::Real::zero(),
            s0: S::Real::zero(),
            lambda,
            s,
        })
    }

    fn layout(m: usize) -> Arc<Layout> {
        Layout::new(&[("s0", 1), ("lambda", 1), ("s", m * m)])
    }

    fn to_flow(&self) -> FlowState<S> {
        let mut y = vec![S::from_real(self.s0), S::from_real(self.lambda)];
        y.extend(self.s.iter().cloned());
        FlowState::new(self.beta, y, Self::layout(self.s.nrows())).expect("layout matches")
    }

    fn from_slice(beta: S::Real, y: &[S], m: usize) -> Self {
        Self {
            beta,
            s0: y[0].re(),
            lambda: y[1].re(),
            s: Array2::from_shape_vec((m, m), y[2..].to_vec()).unwrap(),
        }
    }
}

fn scale_cols<S: Scalar>(a: &Array2<S>, w: impl Fn(usize) -> S::Real) -> Array2<S> {
    let mut out = a.clone();
    for ((_, j), x) in out.indexed_iter_mut() {
        *x = *x * w(j);
    }
    out
}

fn scale_rows<S: Scalar>(a: &Array2<S>, w: impl Fn(usize) -> S::Real) -> Array2<S> {
    let mut out = a.clone();
    for ((i, _), x) in out.indexed_iter_mut() {
        *x = *x * w(i);
    }
    out
}

/// Returns (R_h, R_δ).
pub fn residual_fermion<S: Scalar>(
    h_dot: &Array2<S>,
    s: &Array2<S>,
    scheme: &ContractionScheme<S::Real>,
) -> (Array2<S>, Array2<S>) {
    let x = scale_cols(s, |r| scheme.f(r));
    let y = scale_rows(s, |r| scheme.fbar(r));
    let hy = h_dot.dot(&y);
    let r_h = h_dot + &hy - &x.dot(h_dot) - &x.dot(&hy);
    let m = s.nrows();
    let r_d = Array2::<S>::eye(m) + &y - &x - &x.dot(&y);
    (r_h, r_d)
}

/// μ = Σ_p w_p R_h,pp / Σ_p w_p R_δ,pp with w_p ∝ f_p f̄_p, which keeps Tr D
/// fixed; for uniform f this is the plain ratio of traces.
pub fn chemical_potential<S: Scalar>(
    r_h: &Array2<S>,
    r_delta: &Array2<S>,
    scheme: &ContractionScheme<S::Real>,
) -> Result<S::Real> {
    let m = r_h.nrows();
    let w: Vec<S::Real> = (0..m).map(|p| scheme.f(p) * scheme.fbar(p)).collect();
    let wmax = w.iter().cloned().fold(S::Real::zero(), Float::max);
    if wmax == S::Real::zero() {
        return Err(NoeError::DegenerateConstraint(0.0));
    }
    let mut num = S::Real::zero();
    let mut den = S::Real::zero();
    for p in 0..m {
        let wp = w[p] / wmax;
        num += wp * r_h[(p, p)].re();
        den += wp * r_delta[(p, p)].re();
    }
    if den.abs() < S::Real::lit(DEGENERACY_THRESHOLD) {
        return Err(NoeError::DegenerateConstraint(den.abs().to_f64_lossy()));
    }
    Ok(num / den)
}

/// D_pq = f_p δ_pq + f̄_p f_q s_pq.
pub fn density_matrix_fermion<S: Scalar>(s: &Array2<S>, scheme: &ContractionScheme<S::Real>) -> Array2<S> {
    let mut d = Array2::<S>::zeros(s.dim());
    for ((p, q), v) in d.indexed_iter_mut() {
        *v = s[(p, q)] * (scheme.fbar(p) * scheme.f(q));
        if p == q {
            *v += S::from_real(scheme.f(p));
        }
    }
    d
}

/// Natural occupations: eigenvalues of the Hermitian part of D.
pub fn natural_occupations<S: Scalar>(d: &Array2<S>) -> Result<Vec<S::Real>> {
    let herm = Array2::from_shape_fn(d.dim(), |(i, j)| (d[(i, j)] + d[(j, i)].conj()) * S::Real::lit(0.5));
    Ok(eigh(&herm)?.values)
}

/// Thermodynamic record at one β.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionSample<S: Scalar> {
    pub beta: S::Real,
    /// k_B T = 1/β in model energy units; infinite at β = 0.
    pub t: S::Real,
    /// Normalized ln Z = −βE₀ + s₀.
    pub ln_z: S::Real,
    pub u: S::Real,
    /// Instantaneous Lagrange multiplier μ(β).
    pub mu: S::Real,
    /// Fermi-Dirac chemical potential λ/β.
    pub mu_fd: S::Real,
    /// Grand potential −ln Ξ/β.
    pub a: S::Real,
    /// S/k_B.
    pub s: S::Real,
    pub density: Array2<S>,
    pub occupations: Vec<S::Real>,
    /// ‖R_h − μ R_δ‖_∞
    pub residual_norm: S::Real,
}

/// Derives ln Z, U, A and S from amplitudes.
///
/// ```text
/// U     = E₀ + Tr(h D)
/// ln Ξ  = ln Z − M ln(1 − n_el/M)
/// S/k_B = ln Ξ + βU − λ n_el        (= (U − A − μ_FD n_el)/T)
/// ```
pub fn thermodynamics_fermion<S: Scalar>(
    model: &OneBodyFermionModel<S>,
    scheme: &ContractionScheme<S::Real>,
    amps: &FermionAmplitudes<S>,
    mu: S::Real,
) -> Result<FermionSample<S>> {
    let m = model.m();
    let r = S::Real::from_count;
    let d = density_matrix_fermion(&amps.s, scheme);
    let tr_hd: S = (0..m).flat_map(|p| (0..m).map(move |q| (p, q))).map(|(p, q)| model.h()[(p, q)] * d[(q, p)]).sum();
    let u = model.e0() + tr_hd.re();
    let beta = amps.beta;
    let ln_z = -beta * model.e0() + amps.s0;
    let ln_xi = ln_z - r(m) * (S::Real::one() - r(model.n_el()) / r(m)).ln();
    let (rh, rd) = residual_fermion(model.h(), &amps.s, scheme);
    let res = (&rh - &rd.mapv(|x| x * mu)).iter().fold(S::Real::zero(), |acc, x| acc.max(x.modulus()));
    Ok(FermionSample {
        beta,
        t: S::Real::one() / beta,
        ln_z,
        u,
        mu,
        mu_fd: amps.lambda / beta,
        a: -ln_xi / beta,
        s: ln_xi + beta * u - amps.lambda * r(model.n_el()),
        occupations: natural_occupations(&d)?,
        density: d,
        residual_norm: res,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermionPropagation<R: Real> {
    pub beta_max: R,
    pub dbeta: R,
    pub integrator: Integrator,
    /// Record (and bound-check) every k-th step; the last step is always kept.
    pub record_every: usize,
    /// Average −dS/dβ with its conjugate transpose.
    pub hermitize: bool,
}

impl<R: Real> FermionPropagation<R> {
    pub fn new(beta_max: R, dbeta: R) -> Self {
        Self {
            beta_max,
            dbeta,
            integrator: Integrator::Rk4,
            record_every: 1,
            hermitize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionTrajectory<S: Scalar> {
    pub samples: Vec<FermionSample<S>>,
    pub last: FermionAmplitudes<S>,
}

/// Integrates from β = 0 to `beta_max`. The step actually used is
/// beta_max / ceil(beta_max / dbeta); sample k sits at β = k·dβ.
pub fn propagate_fermion<S: Scalar>(
    model: &OneBodyFermionModel<S>,
    scheme: &ContractionScheme<S::Real>,
    opts: &FermionPropagation<S::Real>,
) -> Result<FermionTrajectory<S>> {
    if !(opts.dbeta > S::Real::zero()) {
        return Err(NoeError::InvalidArgument("dbeta must be positive".into()));
    }
    if !(opts.beta_max >= S::Real::zero()) {
        return Err(NoeError::InvalidArgument("beta_max must be non-negative".into()));
    }
    let m = model.m();
    let no = normal_order_fermion(model, scheme)?;
    let shift = no.h0 - model.e0();
    let n_el = S::Real::from_count(model.n_el());
    let n_steps = (opts.beta_max / opts.dbeta).ceil().to_usize().unwrap_or(0);
    let dx = if n_steps == 0 { opts.dbeta } else { opts.beta_max / S::Real::from_count(n_steps) };
    let half = S::Real::lit(0.5);
    let last_mu = Cell::new(S::Real::zero());

    let start = FermionAmplitudes::infinite_temperature(model, scheme)?;
    {
        let (rh, rd) = residual_fermion(&no.h_dot, &start.s, scheme);
        last_mu.set(chemical_potential(&rh, &rd, scheme)?);
    }

    let mu_of = |s: &Array2<S>| -> Result<(S::Real, Array2<S>, Array2<S>)> {
        let (rh, rd) = residual_fermion(&no.h_dot, s, scheme);
        let mu = match chemical_potential(&rh, &rd, scheme) {
            Ok(mu) => mu,
            Err(NoeError::DegenerateConstraint(_)) => last_mu.get(),
            Err(e) => return Err(e),
        };
        last_mu.set(mu);
        Ok((mu, rh, rd))
    };

    let mut rhs = |_: S::Real, y: &[S], out: &mut [S]| -> Result<()> {
        let a = FermionAmplitudes::from_slice(S::Real::zero(), y, m);
        let (mu, rh, rd) = mu_of(&a.s)?;
        let mut r = rh - &rd.mapv(|x| x * mu);
        if opts.hermitize {
            r = (&r + &r.t().mapv(|z| z.conj())).mapv(|x| x * half);
        }
        let t = density_matrix_fermion(&a.s, scheme) - Array2::from_diag(&ndarray::Array1::from_shape_fn(m, |p| S::from_real(scheme.f(p))));
        let tr_ht: S = (0..m).flat_map(|p| (0..m).map(move |q| (p, q))).map(|(p, q)| no.h_dot[(p, q)] * t[(q, p)]).sum();
        out[0] = -S::from_real(shift + tr_ht.re() - mu * n_el);
        out[1] = S::from_real(mu);
        for (o, v) in out[2..].iter_mut().zip(r.iter()) {
            *o = -*v;
        }
        Ok(())
    };

    let every = opts.record_every.max(1);
    let lo = -S::Real::lit(OCCUPATION_GUARD);
    let hi = S::Real::one() + S::Real::lit(OCCUPATION_GUARD);
    let mut samples = Vec::new();
    let mut observe = |k: usize, st: &FlowState<S>| -> Result<()> {
        if !k.is_multiple_of(every) && k != n_steps {
            return Ok(());
        }
        let a = FermionAmplitudes::from_slice(st.x, &st.y, m);
        let (mu, _, _) = mu_of(&a.s)?;
        let smp = thermodynamics_fermion(model, scheme, &a, mu)?;
        if let Some(bad) = smp.occupations.iter().find(|&&n| n < lo || n > hi) {
            return Err(NoeError::StepUnstable {
                at: st.x.to_f64_lossy(),
                block: "s".into(),
                detail: format!("natural occupation {bad} left [0, 1]"),
            });
        }
        samples.push(smp);
        Ok(())
    };
    let last = run_fixed(start.to_flow(), dx, n_steps, opts.integrator, &mut rhs, &mut observe)?;
    Ok(FermionTrajectory {
        samples,
        last: FermionAmplitudes::from_slice(last.x, &last.y, m),
    })
}

/// max_k |U_k − μ_k n_el + d lnZ/dβ| / (|U_k| + |μ_k n_el|) with a five-point
/// centered stencil at every sample whose neighbours are equally spaced in β.
pub fn energy_consistency<S: Scalar>(samples: &[FermionSample<S>], n_el: usize) -> Option<f64> {
    if samples.len() < 5 {
        return None;
    }
    let f = |x: S::Real| x.to_f64_lossy();
    let mut worst: f64 = 0.0;
    for k in 2..samples.len() - 2 {
        let b = |j: usize| f(samples[j].beta);
        if !crate::boson::uniform_stencil(&[b(k - 2), b(k - 1), b(k), b(k + 1), b(k + 2)]) {
            continue;
        }
        let h = (b(k + 1) - b(k - 1)) / 2.0;
        let l = |j: usize| f(samples[j].ln_z);
        let d = (-l(k + 2) + 8.0 * l(k + 1) - 8.0 * l(k - 1) + l(k - 2)) / (12.0 * h);
        let mun = f(samples[k].mu) * n_el as f64;
        let u = f(samples[k].u);
        worst = worst.max((u - mun + d).abs() / (u.abs() + mun.abs()).max(f64::MIN_POSITIVE));
    }
    Some(worst)
}

/// Comparison of the extremal-contraction residual with single-reference CC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcLimitReport {
    /// max |R_h[a,i] − r_CC[a,i]| over virtual a, occupied i.
    pub max_deviation: f64,
    /// max over μ ∈ {−10, 0, 10} of the change in (R_h − μR_δ)[a,i].
    pub mu_sensitivity: f64,
    /// max |R_δ[a,i]|.
    pub delta_block: f64,
    /// E₀ + Σ_i h_ii + Σ_ai h_ia t_ai.
    pub energy: f64,
}

/// Evaluates the per-orbital residual at f_i = 1 (occupied), f_a = 0 for
/// amplitudes `t` restricted to the virtual-occupied block and compares it with
/// r_ai = h_ai + Σ_c h_ac t_ci − Σ_k t_ak h_ki − Σ_kc t_ak h_kc t_ci.
pub fn cc_limit_check<S: Scalar<Real = f64>>(
    model: &OneBodyFermionModel<S>,
    occupied: &[usize],
    t: &Array2<S>,
) -> Result<CcLimitReport> {
    let m = model.m();
    let f: Vec<f64> = (0..m).map(|p| if occupied.contains(&p) { 1.0 } else { 0.0 }).collect();
    let scheme = ContractionScheme::fermion(f.clone())?;
    let occ: Vec<usize> = (0..m).filter(|&p| f[p] == 1.0).collect();
    let vir: Vec<usize> = (0..m).filter(|&p| f[p] == 0.0).collect();
    let mut s = Array2::<S>::zeros((m, m));
    for &a in &vir {
        for &i in &occ {
            s[(a, i)] = t[(a, i)];
        }
    }
    let h = model.h();
    let (rh, rd) = residual_fermion(h, &s, &scheme);
    let mut dev = 0.0f64;
    let mut sens = 0.0f64;
    let mut dblock = 0.0f64;
    for &a in &vir {
        for &i in &occ {
            let mut cc = h[(a, i)];
            for &c in &vir {
                cc += h[(a, c)] * s[(c, i)];
            }
            for &k in &occ {
                cc -= s[(a, k)] * h[(k, i)];
                for &c in &vir {
                    cc -= s[(a, k)] * h[(k, c)] * s[(c, i)];
                }
            }
            dev = dev.max((rh[(a, i)] - cc).modulus());
            dblock = dblock.max(rd[(a, i)].modulus());
            let base = rh[(a, i)];
            for mu in [-10.0, 0.0, 10.0] {
                sens = sens.max((rh[(a, i)] - rd[(a, i)] * mu - base).modulus());
            }
        }
    }
    let mut energy = model.e0();
    for &i in &occ {
        energy += h[(i, i)].re();
    }
    for &a in &vir {
        for &i in &occ {
            energy += (h[(i, a)] * s[(a, i)]).re();
        }
    }
    Ok(CcLimitReport {
        max_deviation: dev,
        mu_sensitivity: sens,
        delta_block: dblock,
        energy,
    })
}
