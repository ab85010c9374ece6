//! Real-time propagation of the vibrational vacuum on a quadratic surface.
//!
//! |Ψ(τ)⟩ = e^{t₀ + Σ t^i a†_i + ½ Σ t^{ij} a†_i a†_j}|0⟩ with
//!
//! ```text
//! i dt₀/dτ     = h₀ + h_k t^k + ½ h_{kl} (t^{kl} + t^k t^l)
//! i dt^i/dτ    = h^i + h^i_k t^k + h_{kl} t^k t^{li} + h_k t^{ki}
//! i dt^{ij}/dτ = h^{ij} + h^i_k t^{kj} + h^j_k t^{ki} + h_{kl} t^{ki} t^{lj}
//! ```
//!
//! (h^i = `h_up`, h_k = `h_dn`, h^i_k = `h_ud`, h^{ij} = `h_uu`, h_{kl} = `h_dd`),
//! energies in cm⁻¹, τ in fs, and ACF(τ) = ⟨0|Ψ(τ)⟩ = e^{t₀}.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rustfft::FftPlanner;

use crate::error::{NoeError, Result};
use crate::integrate::{run_fixed, FlowState, Integrator, Layout};
use crate::model::BosonQuadraticModel;
use crate::scalar::RealScalar;
use crate::units::{SPEED_OF_LIGHT_CM_PER_FS, TWO_PI_C};

/// |ACF| above 1 + this aborts a propagation.
pub const ACF_GUARD: f64 = 1e-4;
/// Largest admissible 2πc ω_max dτ.
pub const MAX_PHASE_STEP: f64 = 0.1;
/// Spectra are zero-padded to at least this time span.
pub const MIN_PADDED_SPAN_FS: f64 = 33_000.0;
pub const DEFAULT_DAMPING_CM1: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeAmplitudes<R: RealScalar> {
    pub tau: R,
    pub t0: Complex<R>,
    pub t_up: Array1<Complex<R>>,
    pub t_uu: Array2<Complex<R>>,
}

impl<R: RealScalar> TimeAmplitudes<R> {
    pub fn zeros(n: usize) -> Self {
        Self {
            tau: R::zero(),
            t0: Complex::zero(),
            t_up: Array1::zeros(n),
            t_uu: Array2::zeros((n, n)),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.t_up.len()
    }

    pub fn acf(&self) -> Complex<R> {
        self.t0.exp()
    }

    /// max_{i<j} |t^{ij} − t^{ji}|
    pub fn asymmetry(&self) -> R {
        let n = self.n_modes();
        let mut d = R::zero();
        for i in 0..n {
            for j in 0..i {
                d = d.max((self.t_uu[(i, j)] - self.t_uu[(j, i)]).norm());
            }
        }
        d
    }

    fn layout(n: usize) -> Arc<Layout> {
        Layout::new(&[("t0", 1), ("t_up", n), ("t_uu", n * n)])
    }

    fn to_flow(&self) -> FlowState<Complex<R>> {
        let mut y = vec![self.t0];
        y.extend(self.t_up.iter().cloned());
        y.extend(self.t_uu.iter().cloned());
        FlowState::new(self.tau, y, Self::layout(self.n_modes())).expect("layout matches")
    }

    fn from_slice(tau: R, y: &[Complex<R>], n: usize) -> Self {
        Self {
            tau,
            t0: y[0],
            t_up: Array1::from(y[1..1 + n].to_vec()),
            t_uu: Array2::from_shape_vec((n, n), y[1 + n..].to_vec()).unwrap(),
        }
    }
}

/// Right-hand sides r of i dt/dτ = r, in cm⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeResidual<R: RealScalar> {
    pub r0: Complex<R>,
    pub r_up: Array1<Complex<R>>,
    pub r_uu: Array2<Complex<R>>,
}

fn cplx<R: RealScalar>(a: &Array2<R>) -> Array2<Complex<R>> {
    a.mapv(|x| Complex::new(x, R::zero()))
}

pub fn residual_time<R: RealScalar>(model: &BosonQuadraticModel<R>, amps: &TimeAmplitudes<R>) -> TimeResidual<R> {
    let (t1, t2) = (&amps.t_up, &amps.t_uu);
    let h_ud = cplx(&model.h_ud);
    let h_dd = cplx(&model.h_dd);
    let h_up = model.h_up.mapv(|x| Complex::new(x, R::zero()));
    let h_dn = model.h_dn.mapv(|x| Complex::new(x, R::zero()));
    let half = R::lit(0.5);

    // g_l = h_l + Σ_k h_{kl} t^k
    let g = &h_dn + &h_dd.t().dot(t1);
    let pair: Complex<R> = h_dd.iter().zip(t2.iter()).map(|(&h, &t)| h * t).sum::<Complex<R>>() + t1.dot(&h_dd.dot(t1));
    let r0 = Complex::new(model.h0, R::zero()) + h_dn.dot(t1) + pair * half;
    let r_up = &h_up + &h_ud.dot(t1) + &t2.t().dot(&g);
    let ht = h_ud.dot(t2);
    let r_uu = &cplx(&model.h_uu) + &ht + ht.t() + &t2.t().dot(&h_dd.dot(t2));
    TimeResidual { r0, r_up, r_uu }
}

/// ACF on a uniform τ grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSeries<R: RealScalar> {
    pub dtau: R,
    pub tau: Vec<R>,
    pub acf: Vec<Complex<R>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimePropagation<R: RealScalar> {
    pub series: AcfSeries<R>,
    pub last: TimeAmplitudes<R>,
    /// Largest t^{ij} asymmetry seen at the recorded points.
    pub max_asymmetry: R,
}

/// Gershgorin bound on the excitation frequencies of the quadratic part.
pub fn frequency_bound<R: RealScalar>(model: &BosonQuadraticModel<R>) -> R {
    let n = model.n_modes();
    (0..n)
        .map(|i| (0..n).map(|j| model.h_ud[(i, j)].abs() + model.h_uu[(i, j)].abs().max(model.h_dd[(i, j)].abs())).sum::<R>())
        .chain(model.omega.iter().map(|w| w.abs()))
        .fold(R::zero(), |a, b| a.max(b))
}

/// RK4 from zero amplitudes to `tau_max`, recording every `record_every`-th step.
pub fn propagate_time<R: RealScalar>(
    model: &BosonQuadraticModel<R>,
    tau_max: R,
    dtau: R,
    record_every: usize,
) -> Result<TimePropagation<R>> {
    if !(dtau > R::zero()) || !(tau_max >= R::zero()) {
        return Err(NoeError::InvalidArgument("dtau must be positive and tau_max non-negative".into()));
    }
    let w_max = frequency_bound(model);
    let limit = R::lit(MAX_PHASE_STEP) / (R::lit(TWO_PI_C) * w_max);
    if w_max > R::zero() && dtau > limit {
        return Err(NoeError::InvalidArgument(format!(
            "dtau = {dtau} fs does not resolve ω_max = {w_max} cm⁻¹; use dtau ≤ {limit:e} fs"
        )));
    }
    let n = model.n_modes();
    let every = record_every.max(1);
    let n_steps = (tau_max / dtau).round().to_usize().unwrap_or(0);
    let minus_i_2pic = Complex::new(R::zero(), -R::lit(TWO_PI_C));
    let mut rhs = |tau: R, y: &[Complex<R>], out: &mut [Complex<R>]| -> Result<()> {
        let r = residual_time(model, &TimeAmplitudes::from_slice(tau, y, n));
        out[0] = r.r0 * minus_i_2pic;
        for (o, v) in out[1..].iter_mut().zip(r.r_up.iter().chain(r.r_uu.iter())) {
            *o = *v * minus_i_2pic;
        }
        Ok(())
    };
    let guard = R::one() + R::lit(ACF_GUARD);
    let mut tau = Vec::new();
    let mut acf = Vec::new();
    let mut asym = R::zero();
    let mut observe = |k: usize, s: &FlowState<Complex<R>>| -> Result<()> {
        if !k.is_multiple_of(every) {
            return Ok(());
        }
        let a = TimeAmplitudes::from_slice(s.x, &s.y, n);
        let c = a.acf();
        if c.norm() > guard {
            return Err(NoeError::StepUnstable {
                at: s.x.to_f64_lossy(),
                block: "t0".into(),
                detail: format!("|ACF| = {} exceeds 1", c.norm()),
            });
        }
        asym = asym.max(a.asymmetry());
        tau.push(s.x);
        acf.push(if k == 0 { Complex::one() } else { c });
        Ok(())
    };
    let last = run_fixed(TimeAmplitudes::zeros(n).to_flow(), dtau, n_steps, Integrator::Rk4, &mut rhs, &mut observe)?;
    Ok(TimePropagation {
        series: AcfSeries {
            dtau: dtau * R::from_count(every),
            tau,
            acf,
        },
        last: TimeAmplitudes::from_slice(last.x, &last.y, n),
        max_asymmetry: asym,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Lorentzian half width at half maximum, cm⁻¹.
    pub damping: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// Multiply by a half-cosine window over the recorded span.
    pub cosine_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energy: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Bins whose raw value fell below −1e-6 of the maximum before zeroing.
    pub clipped: usize,
}

impl Spectrum {
    /// Grid spacing in cm⁻¹.
    pub fn resolution(&self) -> f64 {
        if self.energy.len() < 2 {
            return 0.0;
        }
        self.energy[1] - self.energy[0]
    }

    /// Local maxima above `rel` × max, refined by a parabola through the
    /// three surrounding points.
    pub fn peaks(&self, rel: f64) -> Vec<(f64, f64)> {
        let top = self.intensity.iter().cloned().fold(0.0, f64::max);
        let y = &self.intensity;
        let h = self.resolution();
        let mut out = Vec::new();
        for k in 1..y.len().saturating_sub(1) {
            if y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] >= rel * top {
                let den = y[k - 1] - 2.0 * y[k] + y[k + 1];
                let (dx, peak) = if den < 0.0 {
                    let dx = 0.5 * (y[k - 1] - y[k + 1]) / den;
                    (dx, y[k] - 0.25 * (y[k - 1] - y[k + 1]) * dx)
                } else {
                    (0.0, y[k])
                };
                out.push((self.energy[k] + dx * h, peak));
            }
        }
        out
    }

    /// Full width at half maximum of the peak nearest `e`, by linear
    /// interpolation of the half-height crossings.
    pub fn fwhm_near(&self, e: f64) -> Option<f64> {
        let k = (0..self.energy.len()).min_by(|&a, &b| {
            (self.energy[a] - e).abs().partial_cmp(&(self.energy[b] - e).abs()).unwrap()
        })?;
        let y = &self.intensity;
        let half = 0.5 * y[k];
        let mut l = k;
        while l > 0 && y[l] > half {
            l -= 1;
        }
        let mut r = k;
        while r + 1 < y.len() && y[r] > half {
            r += 1;
        }
        if y[l] > half || y[r] > half {
            return None;
        }
        let cross = |a: usize, b: usize| self.energy[a] + (half - y[a]) / (y[b] - y[a]) * (self.energy[b] - self.energy[a]);
        Some(cross(r - 1, r) - cross(l, l + 1))
    }
}

/// I(E) = Re ∫₀^∞ ACF(τ) e^{−2πcγτ} e^{+i2πcEτ} dτ on the zero-padded FFT
/// grid, restricted to [e_min, e_max].
pub fn compute_spectrum(series: &AcfSeries<f64>, opts: &SpectrumOptions) -> Result<Spectrum> {
    if !(opts.damping > 0.0) {
        return Err(NoeError::validation("damping", "must be positive"));
    }
    if !(opts.e_max > opts.e_min) {
        return Err(NoeError::validation("e_max", "must exceed e_min"));
    }
    let n = series.acf.len();
    if n < 2 {
        return Err(NoeError::InvalidArgument("ACF needs at least two points".into()));
    }
    let dt = series.dtau;
    let nyquist = 1.0 / (2.0 * SPEED_OF_LIGHT_CM_PER_FS * dt);
    let e_abs = opts.e_min.abs().max(opts.e_max.abs());
    if e_abs >= nyquist {
        return Err(NoeError::GridTooCoarse {
            required_dtau_fs: 1.0 / (2.0 * SPEED_OF_LIGHT_CM_PER_FS * e_abs),
        });
    }
    let len = n.max((MIN_PADDED_SPAN_FS / dt).ceil() as usize).next_power_of_two();
    let span = dt * (n - 1) as f64;
    let mut buf: Vec<Complex64> = vec![Complex64::zero(); len];
    for (k, (&tau, &a)) in series.tau.iter().zip(&series.acf).enumerate() {
        let mut w = (-TWO_PI_C * opts.damping * tau).exp() * dt;
        if k == 0 {
            w *= 0.5;
        }
        if opts.cosine_window && span > 0.0 {
            w *= (0.5 * std::f64::consts::PI * tau / span).cos();
        }
        buf[k] = a * w;
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let de = 1.0 / (len as f64 * SPEED_OF_LIGHT_CM_PER_FS * dt);
    let mut pts: Vec<(f64, f64)> = (0..len)
        .map(|k| {
            let kk = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            (kk * de, buf[k].re)
        })
        .filter(|&(e, _)| e >= opts.e_min && e <= opts.e_max)
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let top = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut clipped = 0;
    let intensity = pts
        .iter()
        .map(|&(_, v)| {
            if v < -1e-6 * top {
                clipped += 1;
            }
            v.max(0.0)
        })
        .collect();
    Ok(Spectrum {
        energy: pts.iter().map(|p| p.0).collect(),
        intensity,
        clipped,
    })
}

/// A window covering the progression: h₀ − 2ω_max to h₀ + 8ω_max + 20γ.
pub fn default_window<R: RealScalar>(model: &BosonQuadraticModel<R>, damping: f64) -> (f64, f64) {
    let h0 = model.h0.to_f64_lossy();
    let w = frequency_bound(model).to_f64_lossy().max(1.0);
    let n = model.n_modes() as f64;
    (h0 - 2.0 * w - 20.0 * damping, h0 + 8.0 * n.sqrt() * w + 20.0 * damping)
}
