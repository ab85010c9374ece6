//! Run configuration from flags and an optional JSON file. Flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FermionThermal,
    BosonThermal,
    FcSpectrum,
    StatisticsDemo,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::FermionThermal => "fermion-thermal",
            Mode::BosonThermal => "boson-thermal",
            Mode::FcSpectrum => "fc-spectrum",
            Mode::StatisticsDemo => "statistics-demo",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// rk4 or leapfrog.
    #[arg(long)]
    pub integrator: Option<String>,
    /// Inverse-temperature step (model units for fermions, cm for bosons).
    #[arg(long)]
    pub dbeta: Option<f64>,
    /// Final β for fermion-thermal.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Starting temperature in K (boson-thermal, statistics-demo).
    #[arg(long)]
    pub t0: Option<f64>,
    /// Final temperature in K.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Number of lowest states in the initial density.
    #[arg(long)]
    pub init_states: Option<usize>,
    /// Contraction occupations: one value, or one per orbital for fermions.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub f: Option<Vec<f64>>,
    /// Keep every k-th step.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Average the fermionic residual with its conjugate transpose.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hermitize: Option<bool>,
    /// Also write the sum-over-states reference next to a boson trajectory.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare_sos: Option<bool>,
    /// Length of the autocorrelation record in fs.
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Time step in fs.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Lorentzian half width in cm⁻¹.
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub e_min: Option<f64>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cosine_window: Option<bool>,
    /// Oscillator frequency for statistics-demo, cm⁻¹.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Temperature points for statistics-demo.
    #[arg(long)]
    pub points: Option<usize>,
    /// `all` or a comma-separated list of criterion numbers.
    #[arg(long)]
    pub suite: Option<String>,
    /// Output directory; defaults to $NOE_OUTPUT_DIR, then ./noe-out.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(mut self, flags: &RunConfig) -> Self {
        overlay!(
            self, flags, model, integrator, dbeta, beta_max, t0, tmax, init_states, f, record_every, hermitize,
            compare_sos, tau_max, dtau, damping, e_min, e_max, cosine_window, omega, points, suite, output
        );
        self
    }

    /// Fixes the mode, fills defaults and checks ranges.
    pub fn resolve(mut self, mode: Mode, env_output: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::Config(format!(
                    "config file declares mode {}, command is {}",
                    m.name(),
                    mode.name()
                )));
            }
        }
        self.mode = Some(mode);
        if self.output.is_none() {
            self.output = Some(env_output.unwrap_or_else(|| PathBuf::from("noe-out")));
        }
        let needs_model = matches!(mode, Mode::FermionThermal | Mode::BosonThermal | Mode::FcSpectrum);
        if needs_model && self.model.is_none() {
            return Err(CliError::Config(format!("{} requires --model", mode.name())));
        }
        match mode {
            Mode::FermionThermal => {
                self.beta_max.get_or_insert(20.0);
                self.dbeta.get_or_insert(1e-3);
                self.record_every.get_or_insert(10);
                self.hermitize.get_or_insert(false);
            }
            Mode::BosonThermal => {
                self.t0.get_or_insert(60.0);
                self.tmax.get_or_insert(500.0);
                self.init_states.get_or_insert(3);
                self.f.get_or_insert(vec![0.0]);
                self.dbeta.get_or_insert(1e-5);
                self.record_every.get_or_insert(10);
                self.compare_sos.get_or_insert(false);
            }
            Mode::FcSpectrum => {
                self.damping.get_or_insert(10.0);
                self.cosine_window.get_or_insert(false);
            }
            Mode::StatisticsDemo => {
                self.omega.get_or_insert(300.0);
                self.t0.get_or_insert(10.0);
                self.tmax.get_or_insert(1000.0);
                self.points.get_or_insert(100);
            }
            Mode::Verify => {
                self.suite.get_or_insert_with(|| "all".into());
            }
        }
        if matches!(mode, Mode::FermionThermal | Mode::BosonThermal) {
            self.integrator.get_or_insert_with(|| "rk4".into());
        }
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!("--{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("dbeta", self.dbeta)?;
        positive("beta-max", self.beta_max)?;
        positive("t0", self.t0)?;
        positive("tmax", self.tmax)?;
        positive("tau-max", self.tau_max)?;
        positive("dtau", self.dtau)?;
        positive("damping", self.damping)?;
        positive("omega", self.omega)?;
        if let (Some(a), Some(b)) = (self.t0, self.tmax) {
            if !(b > a) {
                return Err(CliError::Config(format!("--tmax ({b}) must exceed --t0 ({a})")));
            }
        }
        if let (Some(a), Some(b)) = (self.e_min, self.e_max) {
            if !(b > a) {
                return Err(CliError::Config(format!("--e-max ({b}) must exceed --e-min ({a})")));
            }
        }
        if self.record_every == Some(0) {
            return Err(CliError::Config("--record-every must be at least 1".into()));
        }
        if self.init_states == Some(0) {
            return Err(CliError::Config("--init-states must be at least 1".into()));
        }
        if self.points.is_some_and(|p| p < 2) {
            return Err(CliError::Config("--points must be at least 2".into()));
        }
        if let Some(f) = &self.f {
            if f.is_empty() {
                return Err(CliError::Config("--f needs at least one value".into()));
            }
        }
        if let Some(i) = &self.integrator {
            i.parse::<noe_core::integrate::Integrator>()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(s) = &self.suite {
            suite_ids(s)?;
        }
        Ok(())
    }
}

/// Criterion numbers named by a `--suite` value.
pub fn suite_ids(s: &str) -> Result<Vec<u8>, CliError> {
    let all: Vec<u8> = noe_core::verify::CRITERIA.iter().map(|c| c.0).collect();
    if s.trim() == "all" {
        return Ok(all);
    }
    s.split(',')
        .map(|p| {
            let id: u8 = p.trim().parse().map_err(|_| CliError::Config(format!("bad suite entry `{p}`")))?;
            if all.contains(&id) {
                Ok(id)
            } else {
                Err(CliError::Config(format!("no criterion {id}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"t0": 40, "tmax": 300, "model": "a.json"}"#).unwrap();
        let flags = RunConfig {
            tmax: Some(450.0),
            ..Default::default()
        };
        let c = file.overlay(&flags).resolve(Mode::BosonThermal, None).unwrap();
        assert_eq!(c.t0, Some(40.0));
        assert_eq!(c.tmax, Some(450.0));
        assert_eq!(c.init_states, Some(3));
    }

    #[test]
    fn output_precedence() {
        let c = RunConfig::default().resolve(Mode::Verify, Some("env".into())).unwrap();
        assert_eq!(c.output, Some(PathBuf::from("env")));
        let c = RunConfig {
            output: Some("flag".into()),
            ..Default::default()
        }
        .resolve(Mode::Verify, Some("env".into()))
        .unwrap();
        assert_eq!(c.output, Some(PathBuf::from("flag")));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig {
                dbeta: Some(-1.0),
                model: Some("m".into()),
                ..Default::default()
            },
            RunConfig {
                t0: Some(100.0),
                tmax: Some(50.0),
                model: Some("m".into()),
                ..Default::default()
            },
            RunConfig {
                integrator: Some("euler".into()),
                model: Some("m".into()),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.resolve(Mode::BosonThermal, None).is_err());
        }
        assert!(RunConfig::default().resolve(Mode::FcSpectrum, None).is_err());
    }

    #[test]
    fn mode_mismatch() {
        let c: RunConfig = serde_json::from_str(r#"{"mode": "verify"}"#).unwrap();
        assert!(c.resolve(Mode::StatisticsDemo, None).is_err());
    }

    #[test]
    fn suites() {
        assert_eq!(suite_ids("all").unwrap().len(), 9);
        assert_eq!(suite_ids("5, 7").unwrap(), vec![5, 7]);
        assert!(suite_ids("12").is_err());
        assert!(suite_ids("x").is_err());
    }
}
