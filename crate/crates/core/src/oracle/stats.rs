//! One-level occupations from the three quadratic/linear temperature ODEs.
//!
//! | statistics | variable | dn/dτ | closed form |
//! |---|---|---|---|
//! | Bose-Einstein (α = +1) | n = t | ω/(k_Bτ²) (t + t²) | 1/(e^{ω/k_Bτ} − 1) |
//! | Fermi-Dirac (α = −1) | n = t | ω/(k_Bτ²) (t − t²) | 1/(e^{ω/k_Bτ} + 1) |
//! | Boltzmann (α = 0) | n = 1 + s | ω/(k_Bτ²) (1 + s) | e^{−ω/k_Bτ} |
//!
//! For fermions ω stands for ε − μ. The Boltzmann row is integrated for
//! 1 + s directly, since forming 1 + s from s ≈ −1 at low temperature would
//! cancel every significant digit. The Boltzmann row is what the bosonic
//! s-amplitude equation collapses to when f = 0 is set before substituting
//! t = f f̄ s; it is not a valid description of bosons.

use crate::error::{NoeError, Result};
use crate::units::K_B_CM1_PER_K;

pub const MAX_STIFF_STEP: f64 = 0.01;

/// Label attached to the Boltzmann curve.
pub const BOLTZMANN_WARNING: &str =
    "f = 0 s-amplitude limit: Boltzmann statistics, not a valid bosonic result";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Bose,
    Fermi,
    Boltzmann,
}

impl Statistics {
    pub fn alpha(self) -> i32 {
        match self {
            Statistics::Bose => 1,
            Statistics::Fermi => -1,
            Statistics::Boltzmann => 0,
        }
    }

    pub fn from_alpha(alpha: i32) -> Result<Self> {
        match alpha {
            1 => Ok(Statistics::Bose),
            -1 => Ok(Statistics::Fermi),
            0 => Ok(Statistics::Boltzmann),
            a => Err(NoeError::InvalidArgument(format!("alpha must be +1, 0 or -1, got {a}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Bose => "bose-einstein",
            Statistics::Fermi => "fermi-dirac",
            Statistics::Boltzmann => "boltzmann",
        }
    }

    pub fn warning(self) -> Option<&'static str> {
        (self == Statistics::Boltzmann).then_some(BOLTZMANN_WARNING)
    }

    /// n = 1/(e^{ω/k_Bτ} − α).
    pub fn closed_form(self, omega: f64, tau: f64) -> f64 {
        let y = omega / (K_B_CM1_PER_K * tau);
        match self {
            Statistics::Boltzmann => (-y).exp(),
            Statistics::Bose => 1.0 / y.exp_m1(),
            Statistics::Fermi => 1.0 / (y.exp() + 1.0),
        }
    }

    /// d(variable)/dτ for the ODE of this statistics.
    fn rate(self, omega: f64, tau: f64, v: f64) -> f64 {
        let pre = omega / (K_B_CM1_PER_K * tau * tau);
        match self {
            Statistics::Bose => pre * (v + v * v),
            Statistics::Fermi => pre * (v - v * v),
            Statistics::Boltzmann => pre * v,
        }
    }

    /// |∂rate/∂v|, the local stiffness.
    fn stiffness(self, omega: f64, tau: f64, v: f64) -> f64 {
        let pre = omega / (K_B_CM1_PER_K * tau * tau);
        match self {
            Statistics::Bose => pre * (1.0 + 2.0 * v).abs(),
            Statistics::Fermi => pre * (1.0 - 2.0 * v).abs(),
            Statistics::Boltzmann => pre,
        }
    }

}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationCurve {
    pub statistics: Statistics,
    pub temps: Vec<f64>,
    pub numeric: Vec<f64>,
    pub closed: Vec<f64>,
}

impl OccupationCurve {
    pub fn max_deviation(&self) -> f64 {
        self.numeric
            .iter()
            .zip(&self.closed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// RK4 in τ between successive grid temperatures, started from the closed
/// form at the first temperature. Each interval uses at least `substeps`
/// steps and enough that h·|∂rate/∂v| ≤ [`MAX_STIFF_STEP`].
pub fn statistics_1d(omega: f64, stats: Statistics, temps: &[f64], substeps: usize) -> Result<OccupationCurve> {
    if !(omega > 0.0) {
        return Err(NoeError::validation("omega", "must be positive"));
    }
    if temps.is_empty() || temps.iter().any(|&t| !(t > 0.0)) {
        return Err(NoeError::NonPositiveTemperature(
            temps.iter().cloned().fold(f64::INFINITY, f64::min),
        ));
    }
    if temps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NoeError::InvalidArgument("temperature grid must be ascending".into()));
    }
    let substeps = substeps.max(1);
    let mut v = stats.closed_form(omega, temps[0]);
    let mut numeric = vec![v];
    for w in temps.windows(2) {
        let span = w[1] - w[0];
        let need = (span * stats.stiffness(omega, w[0], v) / MAX_STIFF_STEP).ceil() as usize;
        let n = substeps.max(need);
        let h = span / n as f64;
        for k in 0..n {
            let t = w[0] + h * k as f64;
            let k1 = stats.rate(omega, t, v);
            let k2 = stats.rate(omega, t + 0.5 * h, v + 0.5 * h * k1);
            let k3 = stats.rate(omega, t + 0.5 * h, v + 0.5 * h * k2);
            let k4 = stats.rate(omega, t + h, v + h * k3);
            v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        numeric.push(v);
    }
    Ok(OccupationCurve {
        statistics: stats,
        temps: temps.to_vec(),
        closed: temps.iter().map(|&t| stats.closed_form(omega, t)).collect(),
        numeric,
    })
}
