//! Physical constants and unit conversions.
//!
//! | quantity | value | unit |
//! |---|---|---|
//! | `K_B_CM1_PER_K` | 0.695034800 | cm⁻¹ K⁻¹ |
//! | `SPEED_OF_LIGHT_CM_PER_FS` | 2.99792458e-5 | cm fs⁻¹ |
//! | `TWO_PI_C` | 2π × 2.99792458e-5 | rad fs⁻¹ per cm⁻¹ |
//! | `CM1_PER_EV` | 8065.543937 | cm⁻¹ eV⁻¹ |
//! | `CM1_PER_HARTREE` | 219474.6313632 | cm⁻¹ E_h⁻¹ |
//!
//! Bosonic and Franck-Condon work runs in cm⁻¹ with temperatures in Kelvin
//! and times in femtoseconds. Fermionic work is unit-agnostic: β carries the
//! inverse of whatever energy unit the model declares and k_B = 1.

use crate::scalar::Real;

pub const K_B_CM1_PER_K: f64 = 0.695_034_800;
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;
pub const TWO_PI_C: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_FS;
pub const CM1_PER_EV: f64 = 8_065.543_937;
pub const CM1_PER_HARTREE: f64 = 219_474.631_363_2;

/// β in cm for a temperature in Kelvin.
pub fn beta_from_kelvin<R: Real>(t: R) -> R {
    R::one() / (R::lit(K_B_CM1_PER_K) * t)
}

/// Temperature in Kelvin for β in cm.
pub fn kelvin_from_beta<R: Real>(beta: R) -> R {
    R::one() / (R::lit(K_B_CM1_PER_K) * beta)
}

/// Energy unit declared by a model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EnergyUnit {
    #[serde(rename = "cm-1")]
    Wavenumber,
    #[serde(rename = "eV")]
    ElectronVolt,
    #[serde(rename = "hartree")]
    Hartree,
}

impl EnergyUnit {
    /// Multiplier converting this unit to cm⁻¹.
    pub fn to_wavenumber(self) -> f64 {
        match self {
            EnergyUnit::Wavenumber => 1.0,
            EnergyUnit::ElectronVolt => CM1_PER_EV,
            EnergyUnit::Hartree => CM1_PER_HARTREE,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnergyUnit::Wavenumber => "cm-1",
            EnergyUnit::ElectronVolt => "eV",
            EnergyUnit::Hartree => "hartree",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_temperature_inverse() {
        let t = 60.0_f64;
        let b = beta_from_kelvin(t);
        assert!((kelvin_from_beta(b) - t).abs() < 1e-12);
        assert!((b - 1.0 / (0.6950348 * 60.0)).abs() < 1e-15);
    }

    #[test]
    fn oscillator_period_for_1000_wavenumbers() {
        let period = 2.0 * std::f64::consts::PI / (TWO_PI_C * 1000.0);
        assert!((period - 33.356).abs() < 1e-3);
    }
}
