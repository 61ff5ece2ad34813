use effham_core::integrators::{convergence_order, integrate, IntegratorConfig, Method, Monitored};
use effham_core::reservoir::{accumulate, effective_k, reservoir_increment};
use effham_core::trajectory::max_drift;
use effham_core::zoo::{self, Params};
use effham_core::{EffectiveInvariant, PhaseState, ReservoirSpec, ScalarField, Trajectory};

fn st(x: &[f64]) -> PhaseState {
    PhaseState::at(x.to_vec()).unwrap()
}

fn cfg(method: Method, h: f64) -> IntegratorConfig {
    IntegratorConfig::new(method, h).unwrap()
}

fn k_series(name: &str, x0: &[f64], h: f64, t: f64) -> Vec<f64> {
    let e = zoo::build(name, &Params::new()).unwrap();
    integrate(&e.system, &st(x0), &cfg(Method::Rk4, h), t, Some(&e.invariant))
        .unwrap()
        .series_k
        .unwrap()
}

#[test]
fn damped_oscillator_energy_plus_reservoir_tracks_fine_oracle() {
    let coarse = k_series("damped_oscillator", &[1.0, 0.0], 1e-3, 10.0);
    let fine = k_series("damped_oscillator", &[1.0, 0.0], 1e-5, 10.0);
    assert_eq!(coarse.len(), 10_001);
    let mut worst = 0.0f64;
    for (k, value) in coarse.iter().enumerate() {
        worst = worst.max((value - fine[100 * k]).abs());
    }
    assert!(worst <= 1e-5, "{worst:e}");
    assert!(max_drift(&coarse) <= 1e-5);
    assert!(max_drift(&fine) <= 1e-9);
}

#[test]
fn damped_oscillator_k_drift_at_small_step() {
    let k = k_series("damped_oscillator", &[1.0, 0.0], 1e-4, 10.0);
    assert_eq!(k[0], 0.5);
    assert!(max_drift(&k) <= 1e-6, "{:e}", max_drift(&k));
}

#[test]
fn van_der_pol_k_drift() {
    let k = k_series("vdp", &[2.0, 0.0], 1e-4, 20.0);
    assert!(max_drift(&k) <= 1e-5, "{:e}", max_drift(&k));
}

#[test]
fn k_drift_order_of_trapezoidal_accumulation() {
    for (name, x0) in [("damped_oscillator", [1.0, 0.0]), ("vdp", [2.0, 0.0])] {
        let e = zoo::build(name, &Params::new()).unwrap();
        let est = convergence_order(
            &e.system,
            &st(&x0),
            &cfg(Method::Rk4, 1e-2),
            Monitored::Effective(&e.invariant),
            &[1e-2, 5e-3, 2.5e-3],
            10.0,
        )
        .unwrap();
        let order = est.order().expect("measurable drift");
        assert!((1.7..=2.3).contains(&order), "{name}: {est:?}");
    }
}

#[test]
fn vdp_without_damping_has_idle_reservoir() {
    let mut p = Params::new();
    p.insert("eps".into(), 0.0);
    let e = zoo::build("vdp", &p).unwrap();
    let traj = integrate(&e.system, &st(&[2.0, 0.0]), &cfg(Method::Rk4, 1e-2), 5.0, Some(&e.invariant)).unwrap();
    assert!(traj.reservoirs[0].iter().all(|w| *w == 0.0));
}

#[test]
fn fixed_point_trajectory_has_zero_increments() {
    let spec = ReservoirSpec::new(0, |x| x[0] * x[1] + 3.0);
    let samples = (0..5).map(|k| PhaseState::new(k as f64, vec![0.2, 0.7]).unwrap()).collect();
    let traj = Trajectory::from_samples(samples).unwrap();
    let w = accumulate(&[spec.clone().with_initial_value(1.5)], &traj).unwrap();
    assert!(w[0].iter().all(|v| *v == 1.5));
    assert_eq!(reservoir_increment(&spec, &traj.samples[0], &traj.samples[1]).unwrap(), 0.0);
}

#[test]
fn exact_reservoir_is_path_independent() {
    // g = 2 x dx is exact with potential x^2.
    let spec = ReservoirSpec::new(0, |x| 2.0 * x[0]);
    for name in ["vdp", "damped_oscillator", "brusselator"] {
        let e = zoo::build(name, &Params::new()).unwrap();
        let traj = integrate(&e.system, &st(&e.default_state), &cfg(Method::Rk4, 1e-3), 3.0, None).unwrap();
        let w = accumulate(std::slice::from_ref(&spec), &traj).unwrap();
        let (a, b) = (&traj.samples[0].x, &traj.last().unwrap().x);
        let expect = b[0] * b[0] - a[0] * a[0];
        // Trapezoid in x is exact for a linear integrand.
        assert!((w[0].last().unwrap() - expect).abs() <= 1e-12, "{name}");
    }
}

#[test]
fn k_starts_at_potential_and_matches_recorded_series() {
    let e = zoo::build("brusselator", &Params::new()).unwrap();
    let traj = integrate(&e.system, &st(&[1.0, 1.0]), &cfg(Method::Rk4, 1e-3), 2.0, Some(&e.invariant)).unwrap();
    let ks = effective_k(&e.invariant, &traj).unwrap();
    assert_eq!(ks.initial, e.invariant.potential.eval(&[1.0, 1.0]));
    let recorded = traj.series_k.as_ref().unwrap();
    for (a, b) in ks.values.iter().zip(recorded) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(ks.max_drift, max_drift(recorded));
}

#[test]
fn pure_invariant_is_the_hamiltonian() {
    let sys = zoo::harmonic_oscillator();
    let inv = EffectiveInvariant::pure(2, ScalarField::new(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])));
    let traj = integrate(&sys, &st(&[1.0, 0.0]), &cfg(Method::Rk4, 1e-2), 10.0, Some(&inv)).unwrap();
    assert_eq!(traj.series_k, traj.series_h);
}
