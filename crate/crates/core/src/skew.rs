//! Skew-gradient representations `f = B(x) grad H` and Poisson structures.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phase::{dot, mat_vec, norm2, Domain, PhaseState, ScalarField, SystemDef, Violation};

/// Default threshold on `|grad H|` below which the Quispel–Capel matrix is
/// not formed.
pub const DEFAULT_TOL_GRAD: f64 = 1e-10;
/// Relative bound on `|grad H . f|` for `H` to count as a first integral.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-8;
/// Normalized Jacobi residual accepted as "obeys the identity".
pub const JACOBI_TOL: f64 = 1e-9;
/// `|B grad C|` accepted as "C is a Casimir".
pub const CASIMIR_TOL: f64 = 1e-10;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// State-dependent structure matrix `B(x)`.
#[derive(Clone)]
pub struct SkewField {
    dim: usize,
    eval: MatrixFn,
}

impl fmt::Debug for SkewField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewField").field("dim", &self.dim).finish()
    }
}

impl SkewField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "structure matrix must be square");
        let dim = m.nrows();
        Self::new(dim, move |_| m.clone())
    }

    /// Canonical `J = [[0, I_n], [-I_n, 0]]` in dimension `2n`.
    pub fn canonical(n: usize) -> Self {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        Self::constant(j)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }
}

/// Affine Casimir used to eliminate one coordinate: the leaf is
/// `casimir(x) = fixed_value`, solved for `x[eliminated_index]`.
#[derive(Clone, Debug)]
pub struct CasimirSpec {
    pub casimir: ScalarField,
    pub fixed_value: f64,
    pub eliminated_index: usize,
}

impl CasimirSpec {
    pub fn new(casimir: ScalarField, fixed_value: f64, eliminated_index: usize) -> Self {
        Self {
            casimir,
            fixed_value,
            eliminated_index,
        }
    }

    fn embed(&self, reduced: &[f64], value: f64) -> Vec<f64> {
        let mut full = Vec::with_capacity(reduced.len() + 1);
        full.extend_from_slice(&reduced[..self.eliminated_index]);
        full.push(value);
        full.extend_from_slice(&reduced[self.eliminated_index..]);
        full
    }

    /// Value of the eliminated coordinate on the leaf through `reduced`.
    pub fn solve(&self, reduced: &[f64]) -> f64 {
        let c0 = self.casimir.eval(&self.embed(reduced, 0.0));
        let c1 = self.casimir.eval(&self.embed(reduced, 1.0));
        (self.fixed_value - c0) / (c1 - c0)
    }

    /// Full-space point on the leaf.
    pub fn lift(&self, reduced: &[f64]) -> Vec<f64> {
        self.embed(reduced, self.solve(reduced))
    }

    /// Drops the eliminated coordinate.
    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        full.iter()
            .enumerate()
            .filter(|(i, _)| *i != self.eliminated_index)
            .map(|(_, v)| *v)
            .collect()
    }

    /// Probes the Casimir along the eliminated axis at a handful of base
    /// points and rejects anything that is not affine with non-zero slope.
    fn check_affine(&self, dim: usize) -> Result<()> {
        let bases: Vec<Vec<f64>> = [0.0, 1.0, 0.37, 1.9]
            .iter()
            .enumerate()
            .map(|(k, v)| (0..dim - 1).map(|i| v + 0.13 * (k * i) as f64).collect())
            .collect();
        for base in bases {
            let c = |t: f64| self.casimir.eval(&self.embed(&base, t));
            let (c0, c1) = (c(0.0), c(1.0));
            let slope = c1 - c0;
            if !slope.is_finite() || slope.abs() <= 1e-12 * (1.0 + c0.abs()) {
                return Err(Error::UnsupportedReduction(format!(
                    "casimir has zero slope in coordinate {} at {base:?}",
                    self.eliminated_index
                )));
            }
            for t in [-1.0, 0.5, 2.5] {
                let v = c(t);
                let expect = c0 + t * slope;
                if !v.is_finite() || (v - expect).abs() > 1e-9 * (1.0 + v.abs().max(expect.abs())) {
                    return Err(Error::UnsupportedReduction(format!(
                        "casimir is not affine in coordinate {}",
                        self.eliminated_index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Options for [`quispel_capel_with`].
#[derive(Debug, Clone, Copy)]
pub struct QuispelCapelOptions {
    pub tol_grad: f64,
    pub first_integral_tol: f64,
}

impl Default for QuispelCapelOptions {
    fn default() -> Self {
        Self {
            tol_grad: DEFAULT_TOL_GRAD,
            first_integral_tol: FIRST_INTEGRAL_TOL,
        }
    }
}

/// Particular skew solution `B_ij = (f_i dH_j - f_j dH_i) / |grad H|^2`.
pub fn quispel_capel(sys: &SystemDef, s: &PhaseState) -> Result<DMatrix<f64>> {
    quispel_capel_with(sys, s, QuispelCapelOptions::default())
}

/// [`quispel_capel`] with explicit thresholds.
///
/// `B grad H = f - grad H (f . grad H) / |grad H|^2`, so the construction
/// reproduces `f` only when `H` is a first integral; that is checked first.
pub fn quispel_capel_with(
    sys: &SystemDef,
    s: &PhaseState,
    opts: QuispelCapelOptions,
) -> Result<DMatrix<f64>> {
    let h = sys
        .hamiltonian
        .as_ref()
        .ok_or_else(|| Error::Config("Quispel-Capel needs a Hamiltonian".into()))?;
    let f = sys.field_at(s)?;
    let g = h.gradient(&s.x);
    let gnorm = norm2(&g);
    if gnorm <= opts.tol_grad {
        return Err(Error::DegenerateGradient {
            norm: gnorm,
            tol: opts.tol_grad,
        });
    }
    let fd = dot(&f, &g).abs();
    let bound = opts.first_integral_tol * norm2(&f) * gnorm;
    if fd > bound {
        return Err(Error::NotFirstIntegral { dot: fd, bound });
    }
    let d = s.dim();
    let inv = 1.0 / (gnorm * gnorm);
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            (f[i] * g[j] - f[j] * g[i]) * inv
        }
    }))
}

/// Result of [`check_skew`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewReport {
    /// Max of `|v . B v|` over random unit vectors.
    pub max_quadratic: f64,
    /// Max entry of `|B + B^T|`.
    pub max_asymmetry: f64,
}

impl SkewReport {
    pub fn residual(&self) -> f64 {
        self.max_quadratic.max(self.max_asymmetry)
    }

    pub fn is_skew(&self, tol: f64) -> bool {
        self.residual() <= tol
    }
}

pub fn check_skew(b: &SkewField, samples: &[Vec<f64>], rng: &mut impl Rng) -> SkewReport {
    let mut report = SkewReport {
        max_quadratic: 0.0,
        max_asymmetry: 0.0,
    };
    let d = b.dim();
    for x in samples {
        let m = b.eval(x);
        let asym = (&m + m.transpose()).abs().max();
        report.max_asymmetry = report.max_asymmetry.max(asym);
        for _ in 0..10 {
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = norm2(&v);
            if n == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|c| *c /= n);
            let q = dot(&v, &mat_vec(&m, &v)).abs();
            report.max_quadratic = report.max_quadratic.max(q);
        }
    }
    report
}

/// Result of [`check_jacobi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiReport {
    /// Max over `(i, j, k)` of the cyclic sum.
    pub residual: f64,
    /// Max `|B_ij|` at the state.
    pub b_scale: f64,
    /// Max `|dB_ij / dx_l|` at the state.
    pub db_scale: f64,
    /// `residual / (b_scale * db_scale)`, or the raw residual when the
    /// product vanishes.
    pub normalized: f64,
}

impl JacobiReport {
    pub fn obeys_jacobi(&self) -> bool {
        self.normalized <= JACOBI_TOL
    }
}

/// Jacobi residual `sum_l (B_li d_l B_jk + B_lj d_l B_ki + B_lk d_l B_ij)`
/// with central-difference derivatives of step `h_fd`.
pub fn check_jacobi(b: &SkewField, s: &PhaseState, h_fd: f64) -> Result<JacobiReport> {
    if !(h_fd > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h_fd}"
        )));
    }
    let d = b.dim();
    if s.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: s.dim(),
        });
    }
    let m = b.eval(&s.x);
    let mut y = s.x.clone();
    let db: Vec<DMatrix<f64>> = (0..d)
        .map(|l| {
            y[l] = s.x[l] + h_fd;
            let p = b.eval(&y);
            y[l] = s.x[l] - h_fd;
            let q = b.eval(&y);
            y[l] = s.x[l];
            (p - q) / (2.0 * h_fd)
        })
        .collect();
    let mut residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let sum: f64 = (0..d)
                    .map(|l| {
                        m[(l, i)] * db[l][(j, k)] + m[(l, j)] * db[l][(k, i)] + m[(l, k)] * db[l][(i, j)]
                    })
                    .sum();
                residual = residual.max(sum.abs());
            }
        }
    }
    let b_scale = m.abs().max();
    let db_scale = db.iter().fold(0.0f64, |acc, g| acc.max(g.abs().max()));
    let scale = b_scale * db_scale;
    Ok(JacobiReport {
        residual,
        b_scale,
        db_scale,
        normalized: if scale > 0.0 { residual / scale } else { residual },
    })
}

/// Result of [`verify_casimir`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CasimirReport {
    pub max_residual: f64,
    pub is_casimir: bool,
}

/// Max of `|B grad C|` (Euclidean) over `samples`.
pub fn verify_casimir(b: &SkewField, c: &ScalarField, samples: &[Vec<f64>]) -> CasimirReport {
    let max_residual = samples
        .iter()
        .map(|x| norm2(&mat_vec(&b.eval(x), &c.gradient(x))))
        .fold(0.0f64, f64::max);
    CasimirReport {
        max_residual,
        is_casimir: max_residual <= CASIMIR_TOL,
    }
}

/// Restricts `sys` to the leaf `spec.casimir = spec.fixed_value` by solving
/// the affine Casimir for the eliminated coordinate.
///
/// The reduced domain reports a violation of the eliminated coordinate with
/// component index `dim - 1` of the full system.
pub fn casimir_reduce(sys: &SystemDef, spec: &CasimirSpec) -> Result<SystemDef> {
    let d = sys.dim();
    if d < 3 {
        return Err(Error::UnsupportedReduction(format!(
            "reduction needs dimension >= 3, got {d}"
        )));
    }
    if spec.eliminated_index >= d {
        return Err(Error::InvalidArgument(format!(
            "eliminated index {} out of range for dimension {d}",
            spec.eliminated_index
        )));
    }
    spec.check_affine(d)?;

    let e = spec.eliminated_index;
    let (field_spec, full) = (spec.clone(), sys.clone());
    let field = move |y: &[f64]| {
        let x = field_spec.lift(y);
        let mut f = full.eval(&x);
        f.remove(e);
        f
    };
    let (dom_spec, full_domain) = (spec.clone(), sys.domain.clone());
    let domain = Domain::Custom(Arc::new(move |y: &[f64]| {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Some(Violation {
                component: i,
                value: y[i],
            });
        }
        let x = dom_spec.lift(y);
        full_domain.violation(&x).map(|v| Violation {
            component: match v.component {
                c if c == e => d - 1,
                c if c > e => c - 1,
                c => c,
            },
            value: v.value,
        })
    }));
    Ok(SystemDef::new(d - 1, field).with_domain(domain))
}
