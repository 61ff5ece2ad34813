//! Fixed-step integrators and reservoir-coupled trajectory generation.
//!
//! Three one-step maps are provided: classical RK4, the implicit midpoint
//! rule and a discrete-gradient scheme for skew-gradient systems. The
//! implicit maps are solved by damped Newton iteration with forward-difference
//! Jacobians of the vector field.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::phase::{divergence, dot, inf_norm, mat_vec, PhaseState, SystemDef};
use crate::reservoir::{trapezoid, EffectiveInvariant};
use crate::trajectory::{max_drift, Trajectory};

/// Finite-difference step used for divergence series when a system has no
/// analytic divergence.
pub const DIV_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk4,
    ImplicitMidpoint,
    DiscreteGradient,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rk4, Method::ImplicitMidpoint, Method::DiscreteGradient];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::ImplicitMidpoint => "implicit_midpoint",
            Method::DiscreteGradient => "discrete_gradient",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown integrator `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub h: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl IntegratorConfig {
    pub fn new(method: Method, h: f64) -> Result<Self> {
        Self {
            method,
            h,
            newton_tol: 1e-12,
            newton_max_iter: 50,
        }
        .validated()
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Result<Self> {
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!(
                "newton tolerance must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(self)
    }
}

fn check_step_input(sys: &SystemDef, s: &PhaseState, h: f64) -> Result<()> {
    sys.check_dim(s.dim())?;
    if !(h.is_finite() && h != 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be finite and non-zero, got {h}")));
    }
    if let Some(v) = sys.domain.violation(&s.x) {
        return Err(v.into());
    }
    Ok(())
}

fn finish_step(sys: &SystemDef, t: f64, y: Vec<f64>) -> Result<PhaseState> {
    if let Some(v) = sys.domain.violation(&y) {
        return Err(v.into());
    }
    Ok(PhaseState { t, x: y })
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

fn midpoint(s: &[f64], y: &[f64]) -> Vec<f64> {
    s.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// One classical fourth-order Runge–Kutta step.
///
/// Stages are evaluated without domain checks; only the result is guarded.
pub fn step_rk4(sys: &SystemDef, s: &PhaseState, h: f64) -> Result<PhaseState> {
    check_step_input(sys, s, h)?;
    let x = &s.x;
    let k1 = sys.eval(x);
    let k2 = sys.eval(&axpy(0.5 * h, &k1, x));
    let k3 = sys.eval(&axpy(0.5 * h, &k2, x));
    let k4 = sys.eval(&axpy(h, &k3, x));
    let y = (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    finish_step(sys, s.t + h, y)
}

/// Forward-difference Jacobian of the field with step `sqrt(eps) (1 + |x_j|)`.
fn fd_jacobian(sys: &SystemDef, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let f0 = sys.eval(x);
    let mut y = x.to_vec();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let delta = f64::EPSILON.sqrt() * (1.0 + x[j].abs());
        y[j] = x[j] + delta;
        let fj = sys.eval(&y);
        y[j] = x[j];
        for i in 0..d {
            jac[(i, j)] = (fj[i] - f0[i]) / delta;
        }
    }
    jac
}

/// Damped Newton iteration for `G(y) = 0` where `G(y) = y - s - h F(s, y)`
/// and `F` is approximated near the solution by `f((s + y) / 2)`.
fn solve_implicit(
    sys: &SystemDef,
    s: &[f64],
    h: f64,
    cfg: &IntegratorConfig,
    residual: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let d = s.len();
    let mut y = axpy(h, &sys.eval(s), s);
    let mut g = residual(&y);
    let mut gn = inf_norm(&g);
    if !gn.is_finite() {
        y = s.to_vec();
        g = residual(&y);
        gn = inf_norm(&g);
    }
    for _ in 0..cfg.newton_max_iter {
        if !gn.is_finite() {
            break;
        }
        if gn <= 4.0 * f64::EPSILON * (1.0 + inf_norm(&y)) {
            return Ok(y);
        }
        let a = DMatrix::identity(d, d) - fd_jacobian(sys, &midpoint(s, &y)) * (0.5 * h);
        let rhs = -DVector::from_vec(g.clone());
        let Some(delta) = a.lu().solve(&rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let (mut y_try, mut g_try, mut n_try);
        loop {
            y_try = axpy(lambda, delta.as_slice(), &y);
            g_try = residual(&y_try);
            n_try = inf_norm(&g_try);
            if (n_try.is_finite() && n_try < gn) || lambda < 1.0 / 1024.0 {
                break;
            }
            lambda *= 0.5;
        }
        let step = lambda * delta.amax();
        y = y_try;
        g = g_try;
        gn = n_try;
        if gn.is_finite() && step <= cfg.newton_tol * (1.0 + inf_norm(&y)) {
            return Ok(y);
        }
    }
    Err(Error::Convergence {
        iterations: cfg.newton_max_iter,
        residual: gn,
    })
}

/// One implicit midpoint step: `y = s + h f((s + y) / 2)`.
pub fn step_implicit_midpoint(
    sys: &SystemDef,
    s: &PhaseState,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<PhaseState> {
    check_step_input(sys, s, h)?;
    let x = &s.x;
    let y = solve_implicit(sys, x, h, cfg, |y| {
        let f = sys.eval(&midpoint(x, y));
        (0..x.len()).map(|i| y[i] - x[i] - h * f[i]).collect()
    })?;
    finish_step(sys, s.t + h, y)
}

/// Midpoint-secant discrete gradient of `H` between `s` and `y`:
/// `grad H(m) + ((H(y) - H(s) - grad H(m).(y - s)) / |y - s|^2) (y - s)`.
///
/// Satisfies `dg . (y - s) = H(y) - H(s)`; falls back to `grad H(s)` when
/// `|y - s| < 1e-14`.
pub fn discrete_gradient(h: &crate::phase::ScalarField, s: &[f64], y: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = y.iter().zip(s).map(|(a, b)| a - b).collect();
    let dd = dot(&diff, &diff);
    if dd.sqrt() < 1e-14 {
        return h.gradient(s);
    }
    let gm = h.gradient(&midpoint(s, y));
    let corr = (h.eval(y) - h.eval(s) - dot(&gm, &diff)) / dd;
    gm.iter().zip(&diff).map(|(g, d)| g + corr * d).collect()
}

/// One discrete-gradient step `y = s + h B((s + y) / 2) dg(s, y)`.
///
/// With a Hamiltonian attached, `dg` is [`discrete_gradient`] and
/// `H(y) = H(s)` up to the Newton tolerance. Systems generated by a
/// non-exact Pfaffian form instead use its components at the midpoint, which
/// keeps every Casimir of a constant `B` that is linear.
pub fn step_discrete_gradient(
    sys: &SystemDef,
    s: &PhaseState,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<PhaseState> {
    let b = sys
        .skew
        .as_ref()
        .ok_or_else(|| Error::Config("discrete gradient needs a skew structure B".into()))?;
    if sys.hamiltonian.is_none() && sys.pfaffian.is_none() {
        return Err(Error::Config(
            "discrete gradient needs a Hamiltonian or a Pfaffian generator".into(),
        ));
    }
    check_step_input(sys, s, h)?;
    let x = &s.x;
    let y = solve_implicit(sys, x, h, cfg, |y| {
        let m = midpoint(x, y);
        let grad = match (&sys.hamiltonian, &sys.pfaffian) {
            (Some(ham), _) => discrete_gradient(ham, x, y),
            (None, Some(form)) => form.components(&m),
            (None, None) => unreachable!(),
        };
        let v = mat_vec(&b.eval(&m), &grad);
        (0..x.len()).map(|i| y[i] - x[i] - h * v[i]).collect()
    })?;
    finish_step(sys, s.t + h, y)
}

/// Dispatches on `cfg.method` with step `cfg.h`.
pub fn step(sys: &SystemDef, s: &PhaseState, cfg: &IntegratorConfig) -> Result<PhaseState> {
    match cfg.method {
        Method::Rk4 => step_rk4(sys, s, cfg.h),
        Method::ImplicitMidpoint => step_implicit_midpoint(sys, s, cfg.h, cfg),
        Method::DiscreteGradient => step_discrete_gradient(sys, s, cfg.h, cfg),
    }
}

/// Number of steps covering `t_end` with step `h`: `ceil(t_end / h)`, with
/// ratios within `1e-9` of an integer snapped to it, and at least one.
pub fn step_count(t_end: f64, h: f64) -> usize {
    let ratio = t_end / h;
    let r = ratio.round();
    let n = if (ratio - r).abs() <= 1e-9 * r.max(1.0) { r } else { ratio.ceil() };
    (n as usize).max(1)
}

/// A failed integration with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct IntegrationFailure {
    pub partial: Trajectory,
    pub error: Error,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "integration stopped after {} samples: {}",
            self.partial.len(),
            self.error
        )
    }
}

impl std::error::Error for IntegrationFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

struct Recorder<'a> {
    sys: &'a SystemDef,
    invariant: Option<&'a EffectiveInvariant>,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(sys: &'a SystemDef, invariant: Option<&'a EffectiveInvariant>, capacity: usize) -> Self {
        let reservoirs = invariant
            .map(|inv| vec![Vec::with_capacity(capacity); inv.reservoirs.len()])
            .unwrap_or_default();
        Self {
            sys,
            invariant,
            traj: Trajectory {
                samples: Vec::with_capacity(capacity),
                reservoirs,
                series_h: sys.hamiltonian.as_ref().map(|_| Vec::with_capacity(capacity)),
                series_k: invariant.map(|_| Vec::with_capacity(capacity)),
                series_div: Some(Vec::with_capacity(capacity)),
            },
        }
    }

    fn push(&mut self, s: PhaseState) {
        let traj = &mut self.traj;
        if let Some(inv) = self.invariant {
            let prev = traj.samples.last();
            let mut w_sum = 0.0;
            for (spec, series) in inv.reservoirs.iter().zip(traj.reservoirs.iter_mut()) {
                let w = match (prev, series.last()) {
                    (Some(a), Some(w)) => w + trapezoid(spec, &a.x, &s.x),
                    _ => spec.initial_value,
                };
                series.push(w);
                w_sum += w;
            }
            if let Some(k) = traj.series_k.as_mut() {
                k.push(inv.potential.eval(&s.x) + w_sum);
            }
        }
        if let (Some(series), Some(h)) = (traj.series_h.as_mut(), &self.sys.hamiltonian) {
            series.push(h.eval(&s.x));
        }
        if let Some(series) = traj.series_div.as_mut() {
            series.push(divergence(self.sys, &s, DIV_FD_STEP).unwrap_or(f64::NAN));
        }
        traj.samples.push(s);
    }
}

/// Steps `s0` forward to `t0 + ceil(t_end / h) h`, co-accumulating the
/// invariant's reservoirs trapezoidally and recording `H`, `K` and the
/// divergence at every sample.
///
/// `t_end` is the duration measured from `s0.t`. Sample times are
/// `t0 + k h` exactly.
pub fn integrate(
    sys: &SystemDef,
    s0: &PhaseState,
    cfg: &IntegratorConfig,
    t_end: f64,
    invariant: Option<&EffectiveInvariant>,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let fail = |partial: Trajectory, error: Error| IntegrationFailure { partial, error };
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(fail(
            Trajectory::default(),
            Error::InvalidArgument(format!("integration horizon must be positive, got {t_end}")),
        ));
    }
    if let Err(e) = cfg.validated() {
        return Err(fail(Trajectory::default(), e));
    }
    if let Err(e) = sys.check_dim(s0.dim()) {
        return Err(fail(Trajectory::default(), e));
    }
    if let Some(inv) = invariant {
        if let Err(e) = sys.check_dim(inv.dim()) {
            return Err(fail(Trajectory::default(), e));
        }
    }
    if let Some(v) = sys.domain.violation(&s0.x) {
        return Err(fail(Trajectory::default(), v.into()));
    }

    let n = step_count(t_end, cfg.h);
    let mut rec = Recorder::new(sys, invariant, n + 1);
    rec.push(s0.clone());
    let mut current = s0.clone();
    for k in 1..=n {
        match step(sys, &current, cfg) {
            Ok(mut next) => {
                next.t = s0.t + k as f64 * cfg.h;
                rec.push(next.clone());
                current = next;
            }
            Err(e) => return Err(fail(rec.traj, e)),
        }
    }
    Ok(rec.traj)
}

/// Which conserved quantity a drift study monitors.
#[derive(Debug, Clone, Copy)]
pub enum Monitored<'a> {
    /// The system's attached Hamiltonian.
    Hamiltonian,
    /// `K` built from this invariant.
    Effective(&'a EffectiveInvariant),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderEstimate {
    Measured { order: f64, drifts: Vec<f64> },
    /// Drifts sit at round-off level; no order can be read off.
    Saturated { drifts: Vec<f64> },
}

impl OrderEstimate {
    pub fn order(&self) -> Option<f64> {
        match self {
            OrderEstimate::Measured { order, .. } => Some(*order),
            OrderEstimate::Saturated { .. } => None,
        }
    }

    pub fn drifts(&self) -> &[f64] {
        match self {
            OrderEstimate::Measured { drifts, .. } | OrderEstimate::Saturated { drifts } => drifts,
        }
    }
}

/// Least-squares slope of `log(max drift)` against `log(h)`.
///
/// `h_list` needs at least three entries, each half the previous. Drifts at
/// or below `100 eps max(1, |I_0|)` are treated as round-off; when fewer than
/// two remain the estimate is [`OrderEstimate::Saturated`].
pub fn convergence_order(
    sys: &SystemDef,
    s0: &PhaseState,
    template: &IntegratorConfig,
    monitored: Monitored<'_>,
    h_list: &[f64],
    t_end: f64,
) -> Result<OrderEstimate> {
    if h_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 step sizes, got {}",
            h_list.len()
        )));
    }
    if h_list
        .windows(2)
        .any(|w| (w[1] - 0.5 * w[0]).abs() > 1e-9 * w[0].abs())
    {
        return Err(Error::InvalidArgument(format!(
            "step sizes must halve successively: {h_list:?}"
        )));
    }
    if let Monitored::Hamiltonian = monitored {
        if sys.hamiltonian.is_none() {
            return Err(Error::Config("system has no Hamiltonian to monitor".into()));
        }
    }
    let invariant = match monitored {
        Monitored::Effective(inv) => Some(inv),
        Monitored::Hamiltonian => None,
    };
    let mut drifts = Vec::with_capacity(h_list.len());
    let mut scale = 1.0f64;
    for &h in h_list {
        let cfg = IntegratorConfig { h, ..*template }.validated()?;
        let traj = integrate(sys, s0, &cfg, t_end, invariant)?;
        let series = match monitored {
            Monitored::Hamiltonian => traj.series_h,
            Monitored::Effective(_) => traj.series_k,
        }
        .unwrap_or_default();
        scale = scale.max(series.first().map_or(0.0, |v| v.abs()));
        drifts.push(max_drift(&series));
    }
    let floor = 100.0 * f64::EPSILON * scale;
    let points: Vec<(f64, f64)> = h_list
        .iter()
        .zip(&drifts)
        .filter(|(_, d)| **d > floor)
        .map(|(h, d)| (h.ln(), d.ln()))
        .collect();
    if points.len() < 2 {
        return Ok(OrderEstimate::Saturated { drifts });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(OrderEstimate::Measured {
        order: sxy / sxx,
        drifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{Domain, ScalarField};
    use crate::zoo;
    use approx::assert_abs_diff_eq;

    fn st(x: &[f64]) -> PhaseState {
        PhaseState::at(x.to_vec()).unwrap()
    }

    fn cfg(method: Method, h: f64) -> IntegratorConfig {
        IntegratorConfig::new(method, h).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("euler".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(Method::Rk4, 0.0).is_err());
        assert!(IntegratorConfig::new(Method::Rk4, -1e-3).is_err());
        assert!(IntegratorConfig::new(Method::Rk4, f64::NAN).is_err());
        assert!(cfg(Method::Rk4, 0.1).with_newton(0.0, 10).is_err());
        assert!(cfg(Method::Rk4, 0.1).with_newton(1e-10, 0).is_err());
    }

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let sys = SystemDef::new(2, |_| vec![0.0, 0.0]);
        let s = st(&[0.7, -0.3]);
        let c = cfg(Method::ImplicitMidpoint, 0.1);
        assert_eq!(step_rk4(&sys, &s, 0.1).unwrap().x, s.x);
        assert_eq!(step_implicit_midpoint(&sys, &s, 0.1, &c).unwrap().x, s.x);
    }

    #[test]
    fn rk4_exponential_matches_taylor_truncation() {
        let sys = SystemDef::new(1, |x| vec![x[0]]);
        let y = step_rk4(&sys, &st(&[1.0]), 0.1).unwrap();
        let h: f64 = 0.1;
        let taylor = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert_abs_diff_eq!(y.x[0], taylor, epsilon = 1e-15);
        assert_abs_diff_eq!(y.x[0], 1.1051708333333333, epsilon = 1e-15);
        assert_abs_diff_eq!(y.t, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn rk4_harmonic_oscillator_returns_after_fifty_periods() {
        let sys = zoo::harmonic_oscillator();
        let h = 0.01;
        let steps = (100.0 * std::f64::consts::PI / h).round() as usize;
        let mut s = st(&[1.0, 0.0]);
        for _ in 0..steps {
            s = step_rk4(&sys, &s, h).unwrap();
        }
        // 31416 steps overshoot 100 pi by 7.3e-5; compare with the closed form.
        let t = steps as f64 * h;
        assert_abs_diff_eq!(s.x[0], t.cos(), epsilon = 1e-6);
        assert_abs_diff_eq!(s.x[1], -t.sin(), epsilon = 1e-6);
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rk4_domain_exit_reports_component() {
        let sys = SystemDef::new(2, |_| vec![1.0, -1.0]).with_domain(Domain::NonNegative);
        let err = step_rk4(&sys, &st(&[0.0, 0.05]), 0.1).unwrap_err();
        assert!(matches!(err, Error::Domain { component: 1, .. }), "{err}");
    }

    #[test]
    fn implicit_midpoint_is_cayley_transform_on_linear_systems() {
        let sys = SystemDef::new(2, |x| vec![x[1], -x[0]]);
        let h = 0.1;
        let y = step_implicit_midpoint(&sys, &st(&[1.0, 0.0]), h, &cfg(Method::ImplicitMidpoint, h))
            .unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let i = DMatrix::<f64>::identity(2, 2);
        let cayley = (&i - &a * (h / 2.0)).try_inverse().unwrap() * (&i + &a * (h / 2.0));
        let expect = cayley * DVector::from_vec(vec![1.0, 0.0]);
        assert_abs_diff_eq!(y.x[0], expect[0], epsilon = 1e-13);
        assert_abs_diff_eq!(y.x[1], expect[1], epsilon = 1e-13);
    }

    #[test]
    fn implicit_midpoint_preserves_quadratic_energy() {
        let sys = zoo::harmonic_oscillator();
        let c = cfg(Method::ImplicitMidpoint, 0.01);
        let traj = integrate(&sys, &st(&[1.0, 0.0]), &c, 100.0, None).unwrap();
        assert!(max_drift(traj.series_h.as_ref().unwrap()) <= 1e-10);
    }

    #[test]
    fn implicit_midpoint_is_time_symmetric() {
        let entry = zoo::build("vdp", &Default::default()).unwrap();
        let c = cfg(Method::ImplicitMidpoint, 0.05);
        for x in [[2.0, 0.0], [0.3, -1.1], [-1.5, 2.0]] {
            let s = st(&x);
            let y = step_implicit_midpoint(&entry.system, &s, 0.05, &c).unwrap();
            let back = step_implicit_midpoint(&entry.system, &y, -0.05, &c).unwrap();
            for i in 0..2 {
                assert!((back.x[i] - s.x[i]).abs() <= 10.0 * c.newton_tol, "{:?}", back.x);
            }
        }
    }

    #[test]
    fn newton_failure_is_reported() {
        let sys = SystemDef::new(1, |x| vec![x[0] * x[0] * x[0] * 50.0]);
        let c = cfg(Method::ImplicitMidpoint, 1.0).with_newton(1e-12, 3).unwrap();
        let err = step_implicit_midpoint(&sys, &st(&[3.0]), 1.0, &c).unwrap_err();
        assert!(matches!(err, Error::Convergence { iterations: 3, .. }), "{err}");
    }

    #[test]
    fn discrete_gradient_satisfies_secant_condition() {
        let h = ScalarField::new(|x| x[0].sin() * x[1] + x[1].powi(3));
        let (s, y) = ([0.3, 0.8], [0.35, 0.71]);
        let dg = discrete_gradient(&h, &s, &y);
        let lhs = dg[0] * (y[0] - s[0]) + dg[1] * (y[1] - s[1]);
        assert_abs_diff_eq!(lhs, h.eval(&y) - h.eval(&s), epsilon = 1e-15);
        assert_eq!(discrete_gradient(&h, &s, &s), h.gradient(&s));
    }

    #[test]
    fn discrete_gradient_energy_error_per_step() {
        let sys = zoo::harmonic_oscillator();
        let ham = sys.hamiltonian.clone().unwrap();
        for h in [0.1, 0.05, 0.01] {
            let c = cfg(Method::DiscreteGradient, h);
            let mut s = st(&[1.0, 0.3]);
            for _ in 0..50 {
                let y = step_discrete_gradient(&sys, &s, h, &c).unwrap();
                assert!((ham.eval(&y.x) - ham.eval(&s.x)).abs() <= 1e-12);
                s = y;
            }
        }
    }

    #[test]
    fn discrete_gradient_requires_structure() {
        let entry = zoo::build("vdp", &Default::default()).unwrap();
        let c = cfg(Method::DiscreteGradient, 0.01);
        assert!(matches!(
            step_discrete_gradient(&entry.system, &st(&[1.0, 0.0]), 0.01, &c),
            Err(Error::Config(_))
        ));
        let bare = SystemDef::new(2, |x| vec![x[1], -x[0]]).with_skew(crate::skew::SkewField::canonical(1));
        assert!(matches!(
            step_discrete_gradient(&bare, &st(&[1.0, 0.0]), 0.01, &c),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn step_count_snaps_to_integers() {
        assert_eq!(step_count(20.0, 1e-3), 20000);
        assert_eq!(step_count(1e-3, 1e-6), 1000);
        assert_eq!(step_count(0.05, 0.1), 1);
        assert_eq!(step_count(0.25, 0.1), 3);
        assert_eq!(step_count(10.0, 1e-4), 100000);
    }

    #[test]
    fn horizon_shorter_than_step_takes_one_step() {
        let sys = zoo::harmonic_oscillator();
        let traj = integrate(&sys, &st(&[1.0, 0.0]), &cfg(Method::Rk4, 0.1), 0.01, None).unwrap();
        assert_eq!(traj.len(), 2);
        assert_abs_diff_eq!(traj.samples[1].t, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn integrate_records_series_with_matching_lengths() {
        let entry = zoo::build("damped_oscillator", &Default::default()).unwrap();
        let traj = integrate(
            &entry.system,
            &st(&[1.0, 0.0]),
            &cfg(Method::Rk4, 0.01),
            1.0,
            Some(&entry.invariant),
        )
        .unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.is_uniform());
        assert_eq!(traj.reservoirs.len(), 1);
        for series in [&traj.reservoirs[0], traj.series_h.as_ref().unwrap(), traj.series_k.as_ref().unwrap()] {
            assert_eq!(series.len(), 101);
        }
        assert!(traj.series_div.as_ref().unwrap().iter().all(|d| (*d + 0.1).abs() < 1e-15));
        assert_eq!(traj.series_k.as_ref().unwrap()[0], 0.5);
    }

    #[test]
    fn integrate_keeps_partial_trajectory_on_failure() {
        let sys = SystemDef::new(1, |_| vec![-1.0]).with_domain(Domain::NonNegative);
        let failure = integrate(&sys, &st(&[0.35]), &cfg(Method::Rk4, 0.1), 1.0, None).unwrap_err();
        assert_eq!(failure.partial.len(), 4);
        assert!(matches!(failure.error, Error::Domain { component: 0, .. }));
    }

    #[test]
    fn integrate_validates_inputs() {
        let sys = zoo::harmonic_oscillator();
        let c = cfg(Method::Rk4, 0.1);
        assert!(integrate(&sys, &st(&[1.0, 0.0]), &c, 0.0, None).is_err());
        assert!(integrate(&sys, &st(&[1.0]), &c, 1.0, None).is_err());
    }

    #[test]
    fn convergence_order_input_checks_and_saturation() {
        let sys = zoo::harmonic_oscillator();
        let s = st(&[1.0, 0.0]);
        let c = cfg(Method::Rk4, 0.1);
        assert!(convergence_order(&sys, &s, &c, Monitored::Hamiltonian, &[0.1, 0.05], 1.0).is_err());
        assert!(convergence_order(&sys, &s, &c, Monitored::Hamiltonian, &[0.1, 0.06, 0.03], 1.0).is_err());

        let still = SystemDef::new(2, |_| vec![0.0, 0.0]).with_hamiltonian(ScalarField::linear(vec![1.0, 2.0]));
        let est = convergence_order(&still, &s, &c, Monitored::Hamiltonian, &[0.1, 0.05, 0.025], 1.0).unwrap();
        assert!(matches!(est, OrderEstimate::Saturated { .. }));
        assert_eq!(est.order(), None);
    }
}
