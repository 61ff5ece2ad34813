//! Pfaffian forms, reservoir variables and the effectively conserved `K`.
//!
//! A reservoir `w = int g(x) dx_j` is a Riemann–Stieltjes integral taken
//! along one particular trajectory. `K = H + sum(w_i)` is constant along that
//! trajectory but is not a function of state, so it is only ever evaluated
//! as a series over samples.
//!
//! Decompositions follow the canonical sign convention: in 2D the
//! components of `dK` are `(-f_2, f_1)`, so that `x' = K_p`, `p' = -K_x`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::phase::{canonical_rotate, dot, PhaseState, ScalarField, ScalarFn, SystemDef, VectorFn};
use crate::trajectory::{max_drift, Trajectory};

/// `dK = sum_i K_i(x) dx^i`, exact when a potential is attached.
#[derive(Clone)]
pub struct PfaffianForm {
    dim: usize,
    components: VectorFn,
    potential: Option<ScalarField>,
}

impl fmt::Debug for PfaffianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PfaffianForm")
            .field("dim", &self.dim)
            .field("exact", &self.potential.is_some())
            .finish()
    }
}

impl PfaffianForm {
    pub fn new(dim: usize, components: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            components: Arc::new(components),
            potential: None,
        }
    }

    /// The differential of `potential`.
    pub fn exact(dim: usize, potential: ScalarField) -> Self {
        let p = potential.clone();
        Self {
            dim,
            components: Arc::new(move |x| p.gradient(x)),
            potential: Some(potential),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        self.potential.is_some()
    }

    pub fn potential(&self) -> Option<&ScalarField> {
        self.potential.as_ref()
    }

    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        (self.components)(x)
    }

    /// Largest gap between the components and the finite-difference gradient
    /// of the stored potential; `None` for non-exact forms.
    pub fn exactness_residual(&self, samples: &[Vec<f64>]) -> Option<f64> {
        let p = self.potential.as_ref()?;
        Some(samples.iter().fold(0.0f64, |m, x| {
            let c = self.components(x);
            let g = p.fd_gradient(x);
            c.iter()
                .zip(&g)
                .fold(m, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())))
        }))
    }
}

/// `w = initial_value + int integrand(x) dx_{against_index}`.
#[derive(Clone)]
pub struct ReservoirSpec {
    pub integrand: ScalarFn,
    pub against_index: usize,
    pub initial_value: f64,
}

impl fmt::Debug for ReservoirSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReservoirSpec")
            .field("against_index", &self.against_index)
            .field("initial_value", &self.initial_value)
            .finish()
    }
}

impl ReservoirSpec {
    pub fn new(against_index: usize, integrand: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            integrand: Arc::new(integrand),
            against_index,
            initial_value: 0.0,
        }
    }

    pub fn with_initial_value(mut self, w0: f64) -> Self {
        self.initial_value = w0;
        self
    }

    pub fn integrand(&self, x: &[f64]) -> f64 {
        (self.integrand)(x)
    }

    /// `dw/dt = g(x) f_j(x)` along the flow of `sys`.
    pub fn rate(&self, sys: &SystemDef, x: &[f64]) -> f64 {
        self.integrand(x) * sys.eval(x)[self.against_index]
    }

    /// The differential quotient `(dw/dt) / (dx_j/dt)`, undefined where the
    /// integration coordinate is momentarily at rest.
    pub fn differential_quotient(&self, sys: &SystemDef, x: &[f64]) -> Option<f64> {
        let xj_dot = sys.eval(x)[self.against_index];
        (xj_dot != 0.0).then(|| self.rate(sys, x) / xj_dot)
    }
}

/// Potential part plus reservoirs: `K = potential(x) + sum(w_i)`.
#[derive(Clone, Debug)]
pub struct EffectiveInvariant {
    dim: usize,
    pub potential: ScalarField,
    pub reservoirs: Vec<ReservoirSpec>,
}

impl EffectiveInvariant {
    pub fn new(dim: usize, potential: ScalarField, reservoirs: Vec<ReservoirSpec>) -> Result<Self> {
        if let Some(r) = reservoirs.iter().find(|r| r.against_index >= dim) {
            return Err(Error::InvalidArgument(format!(
                "reservoir integrates against coordinate {} but dimension is {dim}",
                r.against_index
            )));
        }
        Ok(Self {
            dim,
            potential,
            reservoirs,
        })
    }

    /// A genuine first integral with no reservoirs.
    pub fn pure(dim: usize, potential: ScalarField) -> Self {
        Self {
            dim,
            potential,
            reservoirs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Components of `dK = d(potential) + sum_i g_i dx_{j(i)}` at `x`.
    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.potential.gradient(x);
        for r in &self.reservoirs {
            c[r.against_index] += r.integrand(x);
        }
        c
    }

    pub fn pfaffian(&self) -> PfaffianForm {
        if self.reservoirs.is_empty() {
            return PfaffianForm::exact(self.dim, self.potential.clone());
        }
        let inv = self.clone();
        PfaffianForm::new(self.dim, move |x| inv.components(x))
    }
}

fn check_same_dim(a: &PhaseState, b: &PhaseState, spec: &ReservoirSpec) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if spec.against_index >= a.dim() {
        return Err(Error::Dimension {
            expected: spec.against_index + 1,
            got: a.dim(),
        });
    }
    Ok(())
}

/// Trapezoidal Stieltjes increment `(g(a) + g(b)) / 2 * (x_j(b) - x_j(a))`.
pub fn reservoir_increment(spec: &ReservoirSpec, a: &PhaseState, b: &PhaseState) -> Result<f64> {
    check_same_dim(a, b, spec)?;
    Ok(trapezoid(spec, &a.x, &b.x))
}

#[inline]
pub(crate) fn trapezoid(spec: &ReservoirSpec, a: &[f64], b: &[f64]) -> f64 {
    let j = spec.against_index;
    0.5 * (spec.integrand(a) + spec.integrand(b)) * (b[j] - a[j])
}

/// Cumulative reservoir series along `traj`, one per spec, each starting at
/// the spec's initial value.
pub fn accumulate(specs: &[ReservoirSpec], traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    let Some(first) = traj.samples.first() else {
        return Err(Error::EmptyInput("trajectory has no samples".into()));
    };
    specs
        .iter()
        .map(|spec| {
            check_same_dim(first, first, spec)?;
            let mut w = spec.initial_value;
            let mut out = Vec::with_capacity(traj.len());
            out.push(w);
            for pair in traj.samples.windows(2) {
                w += reservoir_increment(spec, &pair[0], &pair[1])?;
                out.push(w);
            }
            Ok(out)
        })
        .collect()
}

/// `K` along a trajectory with its drift from the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct KSeries {
    pub values: Vec<f64>,
    pub initial: f64,
    pub max_drift: f64,
}

/// `K(t_k) = potential(x(t_k)) + sum_i w_i(t_k)`, accumulating the
/// invariant's reservoirs along `traj`.
pub fn effective_k(inv: &EffectiveInvariant, traj: &Trajectory) -> Result<KSeries> {
    let w = accumulate(&inv.reservoirs, traj)?;
    let values: Vec<f64> = traj
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| inv.potential.eval(&s.x) + w.iter().map(|series| series[k]).sum::<f64>())
        .collect();
    Ok(KSeries {
        initial: values[0],
        max_drift: max_drift(&values),
        values,
    })
}

/// `dK(v) = sum_i K_i(s) v_i`.
pub fn pfaffian_contract(form: &PfaffianForm, s: &PhaseState, v: &[f64]) -> Result<f64> {
    if s.dim() != form.dim() || v.len() != form.dim() {
        return Err(Error::Dimension {
            expected: form.dim(),
            got: if s.dim() != form.dim() { s.dim() } else { v.len() },
        });
    }
    Ok(dot(&form.components(&s.x), v))
}

/// `X_K = J dK`, the canonical field generated by the Pfaffian of `K`.
pub fn k_field(inv: &EffectiveInvariant, s: &PhaseState) -> Result<Vec<f64>> {
    let d = s.dim();
    if d != inv.dim() {
        return Err(Error::Dimension {
            expected: inv.dim(),
            got: d,
        });
    }
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    Ok(canonical_rotate(&inv.components(&s.x), d / 2))
}
