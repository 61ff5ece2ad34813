use effham_core::diagnostics::{bernoulli_check, commutator_anomaly, density_factor, HydroReport};
use effham_core::integrators::{integrate, IntegratorConfig, Method};
use effham_core::zoo::{self, Params};
use effham_core::{EffectiveInvariant, PhaseState, ScalarField, Trajectory};

fn st(x: &[f64]) -> PhaseState {
    PhaseState::at(x.to_vec()).unwrap()
}

fn damped(b: f64, h: f64, t: f64) -> (zoo::ZooEntry, Trajectory) {
    let mut p = Params::new();
    p.insert("b".into(), b);
    let e = zoo::build("damped_oscillator", &p).unwrap();
    let traj = integrate(&e.system, &st(&[1.0, 0.0]), &IntegratorConfig::new(Method::Rk4, h).unwrap(), t, None).unwrap();
    (e, traj)
}

fn report(b: f64, ck: f64) -> HydroReport {
    let (_, traj) = damped(b, 1e-3, 20.0);
    bernoulli_check(b, ck, 1.0, &traj).unwrap()
}

#[test]
fn vdp_density_two_ways() {
    let e = zoo::build("vdp", &Params::new()).unwrap();
    let traj = integrate(&e.system, &st(&[2.0, 0.0]), &IntegratorConfig::new(Method::Rk4, 1e-3).unwrap(), 10.0, None)
        .unwrap();
    let rho = density_factor(&e.system, &traj).unwrap();
    // Direct quadrature of eps (1 - x^2) on the same samples.
    let mut acc = 0.0;
    let xs = traj.component(0);
    let ts = traj.times();
    for k in 1..traj.len() {
        let g = |x: f64| 0.5 * (1.0 - x * x);
        acc += 0.5 * (g(xs[k - 1]) + g(xs[k])) * (ts[k] - ts[k - 1]);
        assert!((rho[k] - (-acc).exp()).abs() <= 1e-6 * rho[k].max(1.0));
    }
    assert!(rho.iter().all(|r| *r > 0.0));
}

#[test]
fn log_density_is_linear_with_slope_b() {
    let (e, traj) = damped(0.1, 1e-3, 10.0);
    let rho = density_factor(&e.system, &traj).unwrap();
    let worst = traj
        .times()
        .iter()
        .zip(&rho)
        .map(|(t, r)| (r.ln() - 0.1 * t).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn hamiltonian_density_stays_one_over_ten_units() {
    let e = zoo::build("lv_canonical", &Params::new()).unwrap();
    let traj = integrate(&e.system, &st(&e.default_state), &IntegratorConfig::new(Method::Rk4, 1e-3).unwrap(), 10.0, None)
        .unwrap();
    let rho = density_factor(&e.system, &traj).unwrap();
    assert!(rho.iter().all(|r| (r - 1.0).abs() <= 1e-8));
}

#[test]
fn undamped_bernoulli_sum_is_constant() {
    let (_, traj) = damped(0.0, 1e-3, 20.0);
    let r = bernoulli_check(0.0, 0.1, 1.0, &traj).unwrap();
    assert!(r.pressure_series.iter().all(|p| *p == 1.0));
    let n = r.bernoulli_residual.len() as f64;
    let mean = r.bernoulli_residual.iter().sum::<f64>() / n;
    let var = r.bernoulli_residual.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let level = 1.0 + 0.5 * 0.1;
    assert!(var / (level * level) <= 1e-10, "{var:e}");
    assert!(r.positive && r.bound.as_ref().unwrap().holds());
}

#[test]
fn bernoulli_band_grows_with_damping() {
    let bands: Vec<f64> = [0.05, 0.1, 0.2].iter().map(|b| report(*b, 0.1).bernoulli_band).collect();
    assert!(bands[0] < bands[1] && bands[1] < bands[2], "{bands:?}");
    // The band stays proportional to b rather than growing with e^{bt}.
    for (b, band) in [0.05, 0.1, 0.2].iter().zip(&bands) {
        assert!(*band <= 0.1 * b, "{b}: {band}");
    }
}

#[test]
fn positivity_verdicts_agree() {
    for (b, ck, positive) in [(0.0, 0.1, true), (0.1, 0.1, true), (0.1, 1e3, false)] {
        let r = report(b, ck);
        let bound = r.bound.as_ref().unwrap();
        assert_eq!(r.positive, positive, "b={b} cK={ck} min P={}", r.min_pressure);
        assert_eq!(bound.holds(), positive, "b={b} cK={ck} {bound:?}");
        assert!(r.density_series.iter().all(|d| *d > 0.0));
    }
}

#[test]
fn positivity_threshold_by_bisection() {
    // min P is affine in cK, so the sign change sits at P0 / max(e^{bt}(bxp + b^2 p^2/2)).
    let (_, traj) = damped(0.1, 1e-3, 20.0);
    let t0 = traj.samples[0].t;
    let peak = traj
        .samples
        .iter()
        .map(|s| (0.1 * (s.t - t0)).exp() * (0.1 * s.x[0] * s.x[1] + 0.005 * s.x[1] * s.x[1]))
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (0.1, 1e3);
    for _ in 0..60 {
        let mid = (lo * hi as f64).sqrt();
        if bernoulli_check(0.1, mid, 1.0, &traj).unwrap().positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo / (1.0 / peak) - 1.0).abs() <= 1e-9, "{lo} vs {}", 1.0 / peak);
    // The phase-uniform bound is sufficient: it never certifies a violating cK.
    let bound_threshold = {
        let r = bernoulli_check(0.1, 1.0, 1.0, &traj).unwrap();
        let b = r.bound.unwrap();
        1.0 / (1.0 - b.worst_phase_margin)
    };
    assert!(bound_threshold <= lo, "{bound_threshold} > {lo}");
}

fn vdp_k() -> EffectiveInvariant {
    zoo::build("vdp", &Params::new()).unwrap().invariant
}

fn slope(hs: &[f64], ys: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn anomaly_with_linear_generator_is_exact_on_vdp() {
    // Every difference quotient acts on polynomials of degree <= 2 per variable,
    // so central differences carry no truncation error here.
    let f = ScalarField::new(|x| x[0]);
    let k = vdp_k();
    let s = st(&[0.3, 0.7]);
    for h in [1e-2, 5e-3, 2.5e-3] {
        let r = commutator_anomaly(&f, &k, &s, h).unwrap();
        assert!(r.residual_norm() <= 1e-12, "{h}: {:e}", r.residual_norm());
        assert!((r.divergence - 0.5 * (1.0 - 0.09)).abs() <= 1e-12);
    }
}

#[test]
fn anomaly_decays_at_second_order() {
    let f = ScalarField::new(|x| x[0].sin() * x[1].cos() + x[0].powi(4));
    let k = vdp_k();
    let s = st(&[0.3, 0.7]);
    let hs = [1e-2, 5e-3, 2.5e-3];
    let norms: Vec<f64> = hs
        .iter()
        .map(|h| commutator_anomaly(&f, &k, &s, *h).unwrap().residual_norm())
        .collect();
    let order = slope(&hs, &norms);
    assert!((1.7..=2.3).contains(&order), "{norms:?} slope {order}");
}

#[test]
fn anomaly_vanishes_in_exact_cases() {
    let energy = ScalarField::new(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + 0.1 * x[0].powi(3));
    let pure = EffectiveInvariant::pure(2, energy.clone());
    let s = st(&[0.4, -0.6]);
    let f = ScalarField::new(|x| x[0] * x[1].sin());
    assert!(commutator_anomaly(&f, &pure, &s, 1e-4).unwrap().residual_norm() <= 1e-6);
    assert!(commutator_anomaly(&energy, &pure, &s, 1e-4).unwrap().residual_norm() <= 1e-6);
    let lv = zoo::build("lv_canonical", &Params::new()).unwrap();
    let m = lv.system.hamiltonian.clone().unwrap();
    let r = commutator_anomaly(&m, &lv.invariant, &st(&[0.2, -0.1]), 1e-4).unwrap();
    assert!(r.residual_norm() <= 1e-6 && r.bracket.iter().all(|v| v.abs() <= 1e-6));
}
