//! Phase-space primitives.
//!
//! Canonical coordinates are stored as one contiguous vector, positions
//! first and momenta second: `(x^1..x^n, p_1..p_n)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::reservoir::PfaffianForm;
use crate::skew::SkewField;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ViolationFn = Arc<dyn Fn(&[f64]) -> Option<Violation> + Send + Sync>;

/// Slack below zero tolerated by [`Domain::NonNegative`] to absorb round-off.
pub const NON_NEGATIVE_SLACK: f64 = 1e-12;

/// A time-stamped point of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub x: Vec<f64>,
}

impl PhaseState {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidState("state has no coordinates".into()));
        }
        if !t.is_finite() {
            return Err(Error::InvalidState(format!("time is {t}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("coordinate {i} is {}", x[i])));
        }
        Ok(Self { t, x })
    }

    /// State at `t = 0`.
    pub fn at(x: Vec<f64>) -> Result<Self> {
        Self::new(0.0, x)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Real function on phase space with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    eval: ScalarFn,
    grad: Option<VectorFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            grad: None,
        }
    }

    pub fn with_gradient(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            grad: Some(Arc::new(grad)),
        }
    }

    /// The zero function.
    pub fn zero(dim: usize) -> Self {
        Self::with_gradient(|_| 0.0, move |_| vec![0.0; dim])
    }

    /// Linear function `c . x`.
    pub fn linear(coefficients: Vec<f64>) -> Self {
        let c = coefficients.clone();
        Self::with_gradient(
            move |x| c.iter().zip(x).map(|(a, b)| a * b).sum(),
            move |_| coefficients.clone(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when supplied, otherwise [`fd_gradient`](Self::fd_gradient).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    /// Fourth-order central differences with step `1e-5 (1 + |x_i|)`.
    pub fn fd_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = 1e-5 * (1.0 + x[i].abs());
                let mut at = |off: f64| {
                    y[i] = x[i] + off;
                    let v = self.eval(&y);
                    y[i] = x[i];
                    v
                };
                let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
                (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
            })
            .collect()
    }

    /// Second-order central-difference gradient with absolute step `h`.
    pub fn central_gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + h;
                let p = self.eval(&y);
                y[i] = x[i] - h;
                let m = self.eval(&y);
                y[i] = x[i];
                (p - m) / (2.0 * h)
            })
            .collect()
    }
}

/// A coordinate found outside the valid region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub component: usize,
    pub value: f64,
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Domain {
            component: v.component,
            value: v.value,
        }
    }
}

/// Valid region `D` of a system. Non-finite coordinates are always rejected.
#[derive(Clone, Default)]
pub enum Domain {
    #[default]
    Everywhere,
    /// `x_i >= 0` for every component (up to [`NON_NEGATIVE_SLACK`]).
    NonNegative,
    /// `x_i > 0` for every component.
    Positive,
    Custom(ViolationFn),
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Everywhere => write!(f, "Everywhere"),
            Domain::NonNegative => write!(f, "NonNegative"),
            Domain::Positive => write!(f, "Positive"),
            Domain::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Domain {
    pub fn violation(&self, x: &[f64]) -> Option<Violation> {
        let first = |bad: &dyn Fn(f64) -> bool| {
            x.iter().enumerate().find(|(_, v)| bad(**v)).map(|(i, v)| Violation {
                component: i,
                value: *v,
            })
        };
        if let Some(v) = first(&|v: f64| !v.is_finite()) {
            return Some(v);
        }
        match self {
            Domain::Everywhere => None,
            Domain::NonNegative => first(&|v| v < -NON_NEGATIVE_SLACK),
            Domain::Positive => first(&|v| v <= 0.0),
            Domain::Custom(check) => check(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.violation(x).is_none()
    }
}

/// An autonomous vector field together with whatever structure is known
/// about it.
#[derive(Clone)]
pub struct SystemDef {
    dim: usize,
    field: VectorFn,
    pub hamiltonian: Option<ScalarField>,
    pub skew: Option<SkewField>,
    pub pfaffian: Option<PfaffianForm>,
    pub domain: Domain,
    divergence: Option<ScalarFn>,
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("dim", &self.dim)
            .field("hamiltonian", &self.hamiltonian.is_some())
            .field("skew", &self.skew.is_some())
            .field("pfaffian", &self.pfaffian.is_some())
            .field("domain", &self.domain)
            .field("analytic_divergence", &self.divergence.is_some())
            .finish()
    }
}

impl SystemDef {
    pub fn new(dim: usize, field: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        assert!(dim >= 1, "system dimension must be positive");
        Self {
            dim,
            field: Arc::new(field),
            hamiltonian: None,
            skew: None,
            pfaffian: None,
            domain: Domain::Everywhere,
            divergence: None,
        }
    }

    pub fn with_hamiltonian(mut self, h: ScalarField) -> Self {
        self.hamiltonian = Some(h);
        self
    }

    pub fn with_skew(mut self, b: SkewField) -> Self {
        self.skew = Some(b);
        self
    }

    pub fn with_pfaffian(mut self, form: PfaffianForm) -> Self {
        self.pfaffian = Some(form);
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_divergence(mut self, div: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.divergence = Some(Arc::new(div));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw field evaluation; no dimension or domain checks.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.field)(x)
    }

    pub fn field_fn(&self) -> &VectorFn {
        &self.field
    }

    pub fn has_analytic_divergence(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn analytic_divergence(&self, x: &[f64]) -> Option<f64> {
        self.divergence.as_ref().map(|d| d(x))
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// Checked evaluation at a state: dimension, domain and finiteness.
    pub fn field_at(&self, s: &PhaseState) -> Result<Vec<f64>> {
        self.check_dim(s.dim())?;
        if let Some(v) = self.domain.violation(&s.x) {
            return Err(v.into());
        }
        let f = self.eval(&s.x);
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!(
                "field component {i} is {} at {:?}",
                f[i], s.x
            )));
        }
        Ok(f)
    }

    /// Largest relative residual of `f = B grad H` over `samples`.
    ///
    /// The residual at a sample is `|B grad H - f|_inf` divided by
    /// `max(|f|_inf, |B|_inf |grad H|_inf)`, or left absolute when both vanish.
    pub fn skew_gradient_residual(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let (Some(b), Some(h)) = (&self.skew, &self.hamiltonian) else {
            return Err(Error::Config(
                "skew-gradient check needs both B and H".into(),
            ));
        };
        let mut worst = 0.0f64;
        for x in samples {
            self.check_dim(x.len())?;
            let f = self.eval(x);
            let g = h.gradient(x);
            let bm = b.eval(x);
            let bg = mat_vec(&bm, &g);
            let diff = inf_norm_diff(&bg, &f);
            let scale = inf_norm(&f).max(bm.abs().max() * inf_norm(&g));
            worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
        }
        Ok(worst)
    }
}

pub(crate) fn mat_vec(m: &nalgebra::DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn half_dim(d: usize) -> Result<usize> {
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    Ok(d / 2)
}

/// Canonical bracket `{f, g} = sum_i (df/dx^i dg/dp_i - df/dp_i dg/dx^i)`.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField, s: &PhaseState) -> Result<f64> {
    let n = half_dim(s.dim())?;
    let df = f.gradient(&s.x);
    let dg = g.gradient(&s.x);
    Ok((0..n).map(|i| df[i] * dg[n + i] - df[n + i] * dg[i]).sum())
}

/// `X_H = (dH/dp, -dH/dx)`.
pub fn hamiltonian_field(h: &ScalarField, s: &PhaseState) -> Result<Vec<f64>> {
    let n = half_dim(s.dim())?;
    let g = h.gradient(&s.x);
    Ok(canonical_rotate(&g, n))
}

/// Applies the canonical matrix `J = [[0, I], [-I, 0]]` to a covector.
pub(crate) fn canonical_rotate(g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = g[n + i];
        out[n + i] = -g[i];
    }
    out
}

/// Divergence of the field at `s`.
///
/// Uses the analytic divergence when the system carries one, otherwise
/// second-order central differences with absolute step `h_fd`. Every stencil
/// point must lie inside the domain.
pub fn divergence(sys: &SystemDef, s: &PhaseState, h_fd: f64) -> Result<f64> {
    sys.check_dim(s.dim())?;
    if let Some(v) = sys.domain.violation(&s.x) {
        return Err(v.into());
    }
    if let Some(d) = sys.analytic_divergence(&s.x) {
        return Ok(d);
    }
    if !(h_fd > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h_fd}"
        )));
    }
    let mut y = s.x.clone();
    let mut total = 0.0;
    for i in 0..s.dim() {
        y[i] = s.x[i] + h_fd;
        if let Some(v) = sys.domain.violation(&y) {
            return Err(v.into());
        }
        let fp = sys.eval(&y)[i];
        y[i] = s.x[i] - h_fd;
        if let Some(v) = sys.domain.violation(&y) {
            return Err(v.into());
        }
        let fm = sys.eval(&y)[i];
        y[i] = s.x[i];
        total += (fp - fm) / (2.0 * h_fd);
    }
    Ok(total)
}
