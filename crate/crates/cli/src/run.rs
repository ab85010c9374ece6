//! One function per mode. Each returns the names of the files it wrote.

use std::path::Path;

use noe_core::boson::{init_from_states, propagate_boson, thermo_boson, BosonPropagation};
use noe_core::fctime::{compute_spectrum, default_window, frequency_bound, propagate_time, SpectrumOptions};
use noe_core::fermion::{propagate_fermion, FermionPropagation};
use noe_core::integrate::Integrator;
use noe_core::io::{load_model, ModelKind};
use noe_core::model::{BosonQuadraticModel, ContractionScheme, OneBodyFermionModel};
use noe_core::oracle::sos::BosonSos;
use noe_core::oracle::stats::{statistics_1d, Statistics};
use noe_core::units::{beta_from_kelvin, TWO_PI_C};
use noe_core::verify::{run_suite, Verdict};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{suite_ids, Mode, RunConfig};
use crate::report::{num, Artifacts, Csv};
use crate::CliError;

/// Steps of the ODE for each statistics-demo interval.
const STATISTICS_SUBSTEPS: usize = 400;
/// Damped ACF amplitude at which the default record ends.
const ACF_TAIL: f64 = 1e-7;

pub fn run(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    match cfg.mode.expect("resolved config has a mode") {
        Mode::FermionThermal => fermion_thermal(cfg, out),
        Mode::BosonThermal => boson_thermal(cfg, out),
        Mode::FcSpectrum => fc_spectrum(cfg, out),
        Mode::StatisticsDemo => statistics_demo(cfg, out),
        Mode::Verify => verify(cfg, out),
    }
}

fn integrator(cfg: &RunConfig) -> Result<Integrator, CliError> {
    cfg.integrator
        .as_deref()
        .unwrap_or("rk4")
        .parse()
        .map_err(|e: noe_core::NoeError| CliError::Config(e.to_string()))
}

fn model_path(cfg: &RunConfig) -> &Path {
    cfg.model.as_deref().expect("resolved config has a model")
}

fn load_fermion(cfg: &RunConfig) -> Result<OneBodyFermionModel<Complex64>, CliError> {
    load_model(model_path(cfg), Some(ModelKind::Fermion))
        .and_then(|m| m.into_fermion())
        .map_err(|e| CliError::Config(e.to_string()))
}

fn load_boson(cfg: &RunConfig) -> Result<BosonQuadraticModel<f64>, CliError> {
    let m = load_model(model_path(cfg), None).map_err(|e| CliError::Config(e.to_string()))?;
    if m.kind() == ModelKind::Fermion {
        return Err(CliError::Config("expected a boson or surface model, got a fermion model".into()));
    }
    m.into_boson().map_err(|e| CliError::Config(e.to_string()))
}

fn fermion_thermal(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = load_fermion(cfg)?;
    let m = model.m();
    let scheme = match cfg.f.as_deref() {
        None => ContractionScheme::fermion_default(&model),
        Some([f]) => ContractionScheme::fermion_uniform(m, *f)?,
        Some(f) if f.len() == m => ContractionScheme::fermion(f.to_vec())?,
        Some(f) => return Err(CliError::Config(format!("--f has {} values; give 1 or {m}", f.len()))),
    };
    let opts = FermionPropagation {
        beta_max: cfg.beta_max.expect("default set"),
        dbeta: cfg.dbeta.expect("default set"),
        integrator: integrator(cfg)?,
        record_every: cfg.record_every.expect("default set"),
        hermitize: cfg.hermitize.unwrap_or(false),
    };
    let traj = propagate_fermion(&model, &scheme, &opts)?;

    let complex = model.h().iter().any(|z| z.im != 0.0);
    let mut header: Vec<String> = ["beta", "T", "lnZ", "U", "mu", "A", "S"].map(String::from).to_vec();
    for p in 0..m {
        for q in 0..m {
            header.push(format!("D_{p}_{q}"));
        }
    }
    if complex {
        for p in 0..m {
            for q in 0..m {
                header.push(format!("D_{p}_{q}_im"));
            }
        }
    }
    let mut csv = Csv::new(&header);
    for s in &traj.samples {
        let mut row = vec![s.beta, s.t, s.ln_z, s.u, s.mu, s.a, s.s];
        row.extend(s.density.iter().map(|z| z.re));
        if complex {
            row.extend(s.density.iter().map(|z| z.im));
        }
        csv.row(&row);
    }
    out.write("fermion_thermal.csv", csv.as_str())?;
    let last = traj.samples.last().expect("trajectory has samples");
    println!(
        "fermion-thermal: {} samples, beta = {}, lnZ = {}, U = {}, mu = {}",
        traj.samples.len(),
        num(last.beta),
        num(last.ln_z),
        num(last.u),
        num(last.mu)
    );
    Ok(())
}

fn boson_thermal(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = load_boson(cfg)?;
    let f = match cfg.f.as_deref() {
        Some([f]) => *f,
        _ => return Err(CliError::Config("boson-thermal takes a single --f value".into())),
    };
    let (t0, tmax) = (cfg.t0.expect("default set"), cfg.tmax.expect("default set"));
    let states = BosonSos::converged_states(&model, beta_from_kelvin(t0))?;
    let d = states.densities(t0, cfg.init_states)?;
    let amps = init_from_states(&d, f, beta_from_kelvin(t0))?;
    let opts = BosonPropagation {
        beta_end: beta_from_kelvin(tmax),
        dbeta: cfg.dbeta.expect("default set"),
        integrator: integrator(cfg)?,
        record_every: cfg.record_every.expect("default set"),
    };
    let mut traj = propagate_boson(&model, &amps, f, &opts)?;
    thermo_boson(&mut traj);

    let n = model.n_modes();
    let mut header: Vec<String> = ["T", "beta", "lnZ", "Z", "U", "A", "S", "Cv"].map(String::from).to_vec();
    header.extend((0..n).map(|i| format!("n_{i}")));
    let mut csv = Csv::new(&header);
    for s in &traj.samples {
        let mut row = vec![s.t, s.beta, s.ln_z, s.z, s.u, s.a, s.s, s.cv.unwrap_or(f64::NAN)];
        row.extend(&s.occupations);
        csv.row(&row);
    }
    out.write("boson_thermal.csv", csv.as_str())?;

    let last = traj.samples.last().expect("trajectory has samples");
    println!(
        "boson-thermal: {} samples from {t0} K to {tmax} K, Z = {}, U = {} cm-1",
        traj.samples.len(),
        num(last.z),
        num(last.u)
    );
    if cfg.compare_sos == Some(true) {
        let sos = BosonSos::converged(&model, beta_from_kelvin(tmax))?;
        let mut csv = Csv::new(&["T", "lnZ_sos", "Z_sos", "U_sos", "S_sos", "rel_Z_err", "U_err"]);
        let (mut dz, mut du) = (0.0f64, 0.0f64);
        for s in &traj.samples {
            let p = sos.point(s.t, None);
            let rel = (s.ln_z - p.ln_z).exp_m1();
            dz = dz.max(rel.abs());
            du = du.max((s.u - p.u).abs());
            csv.row(&[s.t, p.ln_z, p.z, p.u, p.entropy, rel, s.u - p.u]);
        }
        out.write("boson_sos.csv", csv.as_str())?;
        println!("sum over states: max |Z/Z_sos - 1| = {dz:.3e}, max |U - U_sos| = {du:.3e} cm-1");
    }
    Ok(())
}

fn fc_spectrum(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = load_boson(cfg)?;
    let damping = cfg.damping.expect("default set");
    let w = frequency_bound(&model).max(1.0);
    let dtau = cfg.dtau.unwrap_or(0.05 / (TWO_PI_C * w));
    let tau_max = cfg.tau_max.unwrap_or(-ACF_TAIL.ln() / (TWO_PI_C * damping));
    let p = propagate_time(&model, tau_max, dtau, 1)?;

    let mut csv = Csv::new(&["tau_fs", "re_acf", "im_acf", "abs_acf"]);
    for (t, a) in p.series.tau.iter().zip(&p.series.acf) {
        csv.row(&[*t, a.re, a.im, a.norm()]);
    }
    out.write("fc_acf.csv", csv.as_str())?;

    let (lo, hi) = default_window(&model, damping);
    let spec = compute_spectrum(
        &p.series,
        &SpectrumOptions {
            damping,
            e_min: cfg.e_min.unwrap_or(lo),
            e_max: cfg.e_max.unwrap_or(hi),
            cosine_window: cfg.cosine_window.unwrap_or(false),
        },
    )?;
    let mut csv = Csv::new(&["energy_cm1", "intensity"]);
    for (e, i) in spec.energy.iter().zip(&spec.intensity) {
        csv.row(&[*e, *i]);
    }
    out.write("fc_spectrum.csv", csv.as_str())?;
    let peaks = spec.peaks(1e-3);
    println!(
        "fc-spectrum: {} ACF points over {tau_max:.1} fs, {} spectrum bins of {:.4} cm-1, {} peaks",
        p.series.acf.len(),
        spec.energy.len(),
        spec.resolution(),
        peaks.len()
    );
    for (e, i) in peaks.iter().take(12) {
        println!("  peak {e:12.3} cm-1  {i:.6e}");
    }
    Ok(())
}

fn statistics_demo(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (t0, tmax) = (cfg.t0.expect("default set"), cfg.tmax.expect("default set"));
    let points = cfg.points.expect("default set");
    let omega = cfg.omega.expect("default set");
    let temps: Vec<f64> = (0..points)
        .map(|k| t0 + (tmax - t0) * k as f64 / (points - 1) as f64)
        .collect();
    let kinds = [Statistics::Bose, Statistics::Fermi, Statistics::Boltzmann];
    let mut curves = Vec::new();
    for s in kinds {
        curves.push(statistics_1d(omega, s, &temps, STATISTICS_SUBSTEPS)?);
        if let Some(w) = s.warning() {
            eprintln!("note: {w}");
        }
    }
    let mut header = vec!["T".to_string()];
    for s in kinds {
        header.push(format!("{}_ode", s.name()));
        header.push(format!("{}_exact", s.name()));
    }
    let mut csv = Csv::new(&header);
    for (k, t) in temps.iter().enumerate() {
        let mut row = vec![*t];
        for c in &curves {
            row.push(c.numeric[k]);
            row.push(c.closed[k]);
        }
        csv.row(&row);
    }
    out.write("statistics.csv", csv.as_str())?;
    for c in &curves {
        println!("{}: max |ODE - closed form| = {:.3e}", c.statistics.name(), c.max_deviation());
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    criteria: &'a [noe_core::verify::CriterionOutcome],
    verdict: &'a Verdict,
}

fn verify(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ids = suite_ids(cfg.suite.as_deref().unwrap_or("all"))?;
    let outcomes = run_suite(&ids);
    for o in &outcomes {
        for line in o.lines() {
            println!("{line}");
        }
    }
    let verdict = Verdict::of(&outcomes);
    for name in &verdict.known {
        println!("known shortfall: {name}");
    }
    let report = VerifyReport {
        criteria: &outcomes,
        verdict: &verdict,
    };
    out.write(
        "verify_report.json",
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    if verdict.ok() {
        Ok(())
    } else {
        Err(CliError::Verification(verdict.unexpected.join("; ")))
    }
}
