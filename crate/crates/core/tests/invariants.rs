//! Randomized invariants of the three propagation modes.

use ndarray::{Array1, Array2};
use noe_core::fctime::propagate_time;
use noe_core::fermion::{propagate_fermion, FermionPropagation};
use noe_core::model::{assemble_excited_surface, ContractionScheme, VerticalSurfaceSpec};
use noe_core::oracle::fermi::FermiDiracReference;
use noe_core::oracle::time::exact_time_acf;
use noe_core::units::TWO_PI_C;
use noe_core::verify::{boson_from_states, random_fermion_model, two_mode_model};
use proptest::prelude::*;

fn surface(omega: Vec<f64>, kappa: Vec<f64>, scale: Vec<f64>, mix: f64) -> VerticalSurfaceSpec<f64> {
    let n = omega.len();
    let phi = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            omega[i] * scale[i]
        } else {
            mix * (omega[i] * omega[j]).sqrt()
        }
    });
    VerticalSurfaceSpec {
        omega: Array1::from(omega),
        e_vert: 0.0,
        kappa: Array1::from(kappa),
        phi,
    }
}

fn surface_strategy() -> impl Strategy<Value = VerticalSurfaceSpec<f64>> {
    (1usize..=2).prop_flat_map(|n| {
        (
            prop::collection::vec(200.0..1500.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(0.7..1.3f64, n),
            -0.1..0.1f64,
        )
            .prop_map(|(omega, k, scale, mix)| {
                let kappa = omega.iter().zip(&k).map(|(w, k)| w * k).collect();
                surface(omega, kappa, scale, mix)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fermion_density_is_fermi_dirac(seed in any::<u64>(), m in 2usize..=6, fill in 0.0..1.0f64) {
        let n_el = 1 + ((m - 1) as f64 * fill) as usize % (m - 1);
        let model = random_fermion_model(seed, m, n_el);
        let scheme = ContractionScheme::fermion_default(&model);
        let mut opts = FermionPropagation::new(3.0, 2e-3);
        opts.record_every = 100;
        let traj = propagate_fermion(&model, &scheme, &opts).unwrap();
        let fd = FermiDiracReference::new(&model).unwrap();
        for s in &traj.samples {
            let tr: f64 = s.density.diag().iter().map(|z| z.re).sum();
            prop_assert!((tr - n_el as f64).abs() <= 1e-8);
            let herm = (&s.density - &s.density.t().mapv(|z| z.conj())).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            prop_assert!(herm <= 1e-10, "hermiticity {herm}");
            prop_assert!(s.occupations.iter().all(|&n| (-1e-8..=1.0 + 1e-8).contains(&n)));
            let exact = fd.at(s.beta).unwrap();
            let dev = (&s.density - &exact.density).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            prop_assert!(dev <= 1e-6, "beta {}: {dev}", s.beta);
        }
    }

    #[test]
    fn boson_observables_do_not_depend_on_f(f in 0.0..0.6f64) {
        let model = two_mode_model();
        let a = boson_from_states(&model, 3, 0.0, 60.0, 150.0, 200).unwrap();
        let b = boson_from_states(&model, 3, f, 60.0, 150.0, 200).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            prop_assert!((x.ln_z - y.ln_z).abs() <= 1e-9);
            prop_assert!((x.u - y.u).abs() <= 1e-7 * x.u.abs());
            for (p, q) in x.occupations.iter().zip(&y.occupations) {
                prop_assert!((p - q).abs() <= 1e-7);
            }
            prop_assert!(y.asymmetry <= 1e-10);
        }
    }

    #[test]
    fn acf_is_unitary_and_exact(spec in surface_strategy()) {
        let model = assemble_excited_surface(&spec).unwrap();
        let p = propagate_time(&model, 200.0, 0.01, 20).unwrap();
        prop_assert_eq!(p.series.acf[0].re, 1.0);
        prop_assert_eq!(p.series.acf[0].im, 0.0);
        prop_assert!(p.series.acf.iter().all(|z| z.norm() <= 1.0 + 1e-6));
        prop_assert!(p.max_asymmetry <= 1e-10);
        let (exact, _) = exact_time_acf(&model, &p.series.tau, 1e-9, 3000).unwrap();
        let dev = p.series.acf.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-6, "deviation {dev}");
    }

    #[test]
    fn identical_surfaces_only_rotate_the_phase(omega in prop::collection::vec(200.0..3000.0f64, 1..=3)) {
        let n = omega.len();
        let spec = surface(omega, vec![0.0; n], vec![1.0; n], 0.0);
        let model = assemble_excited_surface(&spec).unwrap();
        let p = propagate_time(&model, 100.0, 0.005, 100).unwrap();
        for (t, z) in p.series.tau.iter().zip(&p.series.acf) {
            prop_assert!((z.norm() - 1.0).abs() <= 1e-10);
            let phase = num_complex::Complex64::from_polar(1.0, -TWO_PI_C * model.h0 * t);
            prop_assert!((z - phase).norm() <= 1e-8);
        }
    }
}
