//! CSV, manifest and verification report writers.
//!
//! Numbers are written as `{:.16e}` (17 significant digits) so identical runs
//! give byte-identical files. Wall time appears only in the manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
        Self {
            text: format!("{}\n", cols.join(",")),
            width: cols.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.width, "row width");
        let mut first = true;
        for v in values {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{}", num(*v));
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes files under the output directory, creating it when missing, and
/// remembers what was written for the manifest.
pub struct Artifacts {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(path)
    }
}

#[derive(Serialize)]
struct Constants {
    k_b_cm1_per_k: f64,
    speed_of_light_cm_per_fs: f64,
    two_pi_c: f64,
    cm1_per_ev: f64,
    cm1_per_hartree: f64,
}

#[derive(Serialize)]
struct Versions {
    noe: &'static str,
    noe_core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    constants: Constants,
    versions: Versions,
    outputs: &'a [String],
    wall_time_s: f64,
}

pub fn manifest_json(config: &RunConfig, outputs: &[String], wall_time_s: f64) -> String {
    use noe_core::units::*;
    let m = Manifest {
        config,
        constants: Constants {
            k_b_cm1_per_k: K_B_CM1_PER_K,
            speed_of_light_cm_per_fs: SPEED_OF_LIGHT_CM_PER_FS,
            two_pi_c: TWO_PI_C,
            cm1_per_ev: CM1_PER_EV,
            cm1_per_hartree: CM1_PER_HARTREE,
        },
        versions: Versions {
            noe: env!("CARGO_PKG_VERSION"),
            noe_core: noe_core::VERSION,
        },
        outputs,
        wall_time_s,
    };
    serde_json::to_string_pretty(&m).expect("manifest serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, 6.02214076e23, -0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[1.0, 0.5]);
        assert_eq!(c.as_str(), "a,b\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn creates_missing_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("x").join("y");
        let mut a = Artifacts::new(&dir).unwrap();
        a.write("f.csv", "z\n").unwrap();
        assert_eq!(std::fs::read_to_string(dir.join("f.csv")).unwrap(), "z\n");
    }
}
