//! Phase-fluid diagnostics: density transport, Bernoulli pressure for the
//! damped oscillator, and the anomaly in the bracket of canonical fields.

use crate::error::{Error, Result};
use crate::integrators::DIV_FD_STEP;
use crate::phase::{divergence, PhaseState, ScalarField, SystemDef};
use crate::reservoir::EffectiveInvariant;
use crate::trajectory::Trajectory;

/// Cumulative trapezoid `int_0^t y dt` on the trajectory's time grid.
fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..y.len() {
        acc += 0.5 * (y[k - 1] + y[k]) * (t[k] - t[k - 1]);
        out.push(acc);
    }
    out
}

/// Density ratio `rho(t) / rho(t_0) = exp(-int div f dt)` transported by the
/// flow, integrated trapezoidally along `traj`.
///
/// Uses the trajectory's recorded divergence series when it is complete and
/// finite, otherwise evaluates the divergence of `sys` at every sample.
pub fn density_factor(sys: &SystemDef, traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory has no samples".into()));
    }
    let recorded = traj
        .series_div
        .as_ref()
        .filter(|d| d.len() == traj.len() && d.iter().all(|v| v.is_finite()));
    let div = match recorded {
        Some(d) => d.clone(),
        None => traj
            .samples
            .iter()
            .map(|s| divergence(sys, s, DIV_FD_STEP))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(cumulative_trapezoid(&traj.times(), &div)
        .into_iter()
        .map(|i| (-i).exp())
        .collect())
}

/// The closed-form phase-independent bound on the oscillating part of the
/// pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityBound {
    /// Initial amplitude `A_0` with `x_0 = A_0 cos d`, `p_0 = A_0 (cos d - w sin d)`.
    pub amplitude: f64,
    pub phase: f64,
    pub omega: f64,
    /// `P_0 - cK A_0^2 Q(phase)`, the bracket evaluated at the initial phase only.
    pub initial_phase_margin: f64,
    /// `P_0 - cK A_0^2 max_d Q(d)`; non-negative means the bound holds at every phase.
    pub worst_phase_margin: f64,
}

impl PositivityBound {
    pub fn holds(&self) -> bool {
        self.worst_phase_margin >= 0.0
    }
}

/// Bracket coefficients `(q_cc, q_cs, q_ss)` of
/// `Q(d) = q_cc cos^2 d + q_cs sin d cos d + q_ss sin^2 d`.
pub fn pressure_bracket(b: f64) -> (f64, f64, f64) {
    let omega = (1.0 - 0.25 * b * b).sqrt();
    (b + 0.5 * b * b, -(omega * b + b * b), 0.5 * b * b * omega * omega)
}

/// Evaluates the sufficient condition for `P > 0`; `None` when `b >= 2`
/// (no oscillation).
pub fn positivity_bound(b: f64, ck: f64, p0: f64, x0: f64, v0: f64) -> Option<PositivityBound> {
    if !(0.0..2.0).contains(&b) {
        return None;
    }
    let omega = (1.0 - 0.25 * b * b).sqrt();
    let (qcc, qcs, qss) = pressure_bracket(b);
    let sin_part = (x0 - v0) / omega;
    let amplitude = x0.hypot(sin_part);
    let phase = sin_part.atan2(x0);
    let q = |d: f64| qcc * d.cos().powi(2) + qcs * d.sin() * d.cos() + qss * d.sin().powi(2);
    // Largest eigenvalue of [[qcc, qcs/2], [qcs/2, qss]].
    let mean = 0.5 * (qcc + qss);
    let lambda_max = mean + (0.25 * (qcc - qss).powi(2) + 0.25 * qcs * qcs).sqrt();
    let a2 = amplitude * amplitude;
    Some(PositivityBound {
        amplitude,
        phase,
        omega,
        initial_phase_margin: p0 - ck * a2 * q(phase),
        worst_phase_margin: p0 - ck * a2 * lambda_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroReport {
    pub times: Vec<f64>,
    /// `rho(t) / rho(t_0) = e^{b (t - t_0)}`.
    pub density_series: Vec<f64>,
    pub pressure_series: Vec<f64>,
    /// `rho v^2 / 2 + P` minus its initial value.
    pub bernoulli_residual: Vec<f64>,
    /// `max - min` of the Bernoulli residual.
    pub bernoulli_band: f64,
    pub min_pressure: f64,
    /// `min P(t) >= 0` along the trajectory.
    pub positive: bool,
    pub bound: Option<PositivityBound>,
}

/// Finite-difference check that `traj` follows `x' = p, p' = -x - b p`.
///
/// Returns the largest central-difference residual relative to
/// `1 + max |state|`.
pub fn damped_oscillator_mismatch(b: f64, traj: &Trajectory) -> Result<f64> {
    if traj.dim() != Some(2) {
        return Err(Error::Config(format!(
            "expected a two-dimensional damped-oscillator trajectory, got dimension {:?}",
            traj.dim()
        )));
    }
    if traj.len() < 3 {
        return Err(Error::Config("need at least 3 samples to verify the trajectory".into()));
    }
    let scale = 1.0
        + traj
            .samples
            .iter()
            .flat_map(|s| s.x.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for w in traj.samples.windows(3) {
        let dt = w[2].t - w[0].t;
        let (x, p) = (w[1].x[0], w[1].x[1]);
        let dx = (w[2].x[0] - w[0].x[0]) / dt;
        let dp = (w[2].x[1] - w[0].x[1]) / dt;
        worst = worst.max((dx - p).abs()).max((dp + x + b * p).abs());
    }
    Ok(worst / scale)
}

/// Pressure `P = P_0 - cK e^{b t}(b x p + b^2 p^2 / 2)` and the Bernoulli sum
/// `rho v^2 / 2 + P` with `rho = cK e^{b t}` along a damped-oscillator
/// trajectory.
///
/// The sum is exactly constant only for `b = 0`; for `b > 0` its spread is
/// reported as `bernoulli_band`.
pub fn bernoulli_check(b: f64, ck: f64, p0: f64, traj: &Trajectory) -> Result<HydroReport> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping must be finite and >= 0, got {b}")));
    }
    if !(ck > 0.0 && ck.is_finite()) || !p0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need cK > 0 and finite P0, got cK = {ck}, P0 = {p0}"
        )));
    }
    let mismatch = damped_oscillator_mismatch(b, traj)?;
    let h = traj.step().unwrap_or(0.0);
    let tol = 1e-8 + 10.0 * h * h;
    if mismatch > tol {
        return Err(Error::Config(format!(
            "trajectory does not follow x' = p, p' = -x - {b} p (relative residual {mismatch:e} > {tol:e})"
        )));
    }
    let t0 = traj.samples[0].t;
    let times = traj.times();
    let mut density_series = Vec::with_capacity(traj.len());
    let mut pressure_series = Vec::with_capacity(traj.len());
    let mut bernoulli = Vec::with_capacity(traj.len());
    for s in &traj.samples {
        let (x, p) = (s.x[0], s.x[1]);
        let growth = (b * (s.t - t0)).exp();
        let rho = ck * growth;
        let pressure = p0 - rho * (b * x * p + 0.5 * b * b * p * p);
        let v2 = p * p + (x + b * p).powi(2);
        density_series.push(growth);
        pressure_series.push(pressure);
        bernoulli.push(0.5 * rho * v2 + pressure);
    }
    let b0 = bernoulli[0];
    let bernoulli_residual: Vec<f64> = bernoulli.iter().map(|v| v - b0).collect();
    let (lo, hi) = bernoulli_residual
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let min_pressure = pressure_series.iter().copied().fold(f64::INFINITY, f64::min);
    let s0 = &traj.samples[0].x;
    Ok(HydroReport {
        times,
        density_series,
        pressure_series,
        bernoulli_residual,
        bernoulli_band: hi - lo,
        min_pressure,
        positive: min_pressure >= 0.0,
        bound: positivity_bound(b, ck, p0, s0[0], s0[1]),
    })
}

/// Terms of `[X_f, X_K] = -X_{f,K} + div(X_K) X_f` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    /// Lie bracket `[X_f, X_K] = (X_f . grad) X_K - (X_K . grad) X_f`.
    pub bracket: Vec<f64>,
    /// `-X_{f,K}` with `{f, K} = f_x K_p - f_p K_x`.
    pub bracket_field: Vec<f64>,
    pub divergence: f64,
    /// Left side minus right side.
    pub residual: Vec<f64>,
}

impl AnomalyReport {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn canonical(g: [f64; 2]) -> [f64; 2] {
    [g[1], -g[0]]
}

fn central<const N: usize>(x: &[f64], h: f64, j: usize, f: &dyn Fn(&[f64]) -> [f64; N]) -> [f64; N] {
    let (mut a, mut b) = (x.to_vec(), x.to_vec());
    a[j] += h;
    b[j] -= h;
    let (fa, fb) = (f(&a), f(&b));
    std::array::from_fn(|i| (fa[i] - fb[i]) / (2.0 * h))
}

/// Evaluates the anomaly identity for the canonical fields of a generator
/// `f` and of `K` given by its Pfaffian components, with all derivatives
/// taken by second-order central differences of step `h_fd`.
pub fn commutator_anomaly(
    f: &ScalarField,
    k: &EffectiveInvariant,
    s: &PhaseState,
    h_fd: f64,
) -> Result<AnomalyReport> {
    if k.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: k.dim() });
    }
    if s.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: s.dim() });
    }
    if !(h_fd > 0.0 && h_fd.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h_fd}")));
    }
    let grad_f = |x: &[f64]| -> [f64; 2] {
        let g = |y: &[f64]| [f.eval(y)];
        [central(x, h_fd, 0, &g)[0], central(x, h_fd, 1, &g)[0]]
    };
    let kc = |x: &[f64]| -> [f64; 2] {
        let c = k.components(x);
        [c[0], c[1]]
    };
    let xf = |x: &[f64]| canonical(grad_f(x));
    let xk = |x: &[f64]| canonical(kc(x));
    let bracket_fk = |x: &[f64]| {
        let (g, c) = (grad_f(x), kc(x));
        [g[0] * c[1] - g[1] * c[0]]
    };
    let x = &s.x;
    let (vf, vk) = (xf(x), xk(x));
    let dir = |v: [f64; 2], field: &dyn Fn(&[f64]) -> [f64; 2]| -> [f64; 2] {
        let d0 = central(x, h_fd, 0, field);
        let d1 = central(x, h_fd, 1, field);
        [v[0] * d0[0] + v[1] * d1[0], v[0] * d0[1] + v[1] * d1[1]]
    };
    let a = dir(vf, &xk);
    let b = dir(vk, &xf);
    let bracket = vec![a[0] - b[0], a[1] - b[1]];
    let g = [central(x, h_fd, 0, &bracket_fk)[0], central(x, h_fd, 1, &bracket_fk)[0]];
    let xg = canonical(g);
    let bracket_field = vec![-xg[0], -xg[1]];
    let div = central(x, h_fd, 0, &xk)[0] + central(x, h_fd, 1, &xk)[1];
    let residual = (0..2)
        .map(|i| bracket[i] - (bracket_field[i] + div * vf[i]))
        .collect();
    Ok(AnomalyReport {
        bracket,
        bracket_field,
        divergence: div,
        residual,
    })
}
