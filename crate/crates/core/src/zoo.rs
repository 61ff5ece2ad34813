//! Built-in example systems with their generator decompositions.
//!
//! Every entry carries the vector field, an [`EffectiveInvariant`] whose
//! Pfaffian form satisfies `dK(f) = 0` pointwise, and, where one exists, a
//! skew-gradient pair `(B, H)` with `f = B grad H`. Two-dimensional
//! decompositions follow the canonical convention `x' = K_p`, `p' = -K_x`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::phase::{Domain, PhaseState, ScalarField, SystemDef, Violation, NON_NEGATIVE_SLACK};
use crate::reservoir::{EffectiveInvariant, PfaffianForm, ReservoirSpec};
use crate::skew::{CasimirSpec, SkewField};

pub type Params = BTreeMap<String, f64>;

pub const NAMES: [&str; 9] = [
    "damped_oscillator",
    "two_reservoir",
    "vdp",
    "brusselator",
    "lv",
    "lv_canonical",
    "robertson",
    "robertson_reduced",
    "rosenzweig",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    /// Lower bound; `-inf` when unbounded.
    pub min: f64,
    pub min_open: bool,
    /// Upper bound, inclusive; `inf` is itself admissible only when
    /// `allow_infinite` is set.
    pub max: f64,
    pub allow_infinite: bool,
    pub integer: bool,
}

impl ParamSpec {
    const fn new(name: &'static str, default: f64) -> Self {
        Self {
            name,
            default,
            min: f64::NEG_INFINITY,
            min_open: false,
            max: f64::INFINITY,
            allow_infinite: false,
            integer: false,
        }
    }

    const fn non_negative(name: &'static str, default: f64) -> Self {
        Self {
            min: 0.0,
            ..Self::new(name, default)
        }
    }

    const fn positive(name: &'static str, default: f64) -> Self {
        Self {
            min: 0.0,
            min_open: true,
            ..Self::new(name, default)
        }
    }

    pub fn range(&self) -> String {
        if self.integer {
            return format!("integers {}..={}", self.min, self.max);
        }
        let lo = if self.min == f64::NEG_INFINITY {
            "(-inf".to_string()
        } else if self.min_open {
            format!("({}", self.min)
        } else {
            format!("[{}", self.min)
        };
        let hi = if self.max == f64::INFINITY {
            if self.allow_infinite { "inf]" } else { "inf)" }.to_string()
        } else {
            format!("{}]", self.max)
        };
        format!("{lo}, {hi}")
    }

    pub fn check(&self, value: f64) -> Result<()> {
        let ok = if value.is_nan() {
            false
        } else if value.is_infinite() {
            self.allow_infinite && value > 0.0
        } else {
            let above = if self.min_open { value > self.min } else { value >= self.min };
            above && value <= self.max && (!self.integer || value.fract() == 0.0)
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParamRange {
                name: self.name.to_string(),
                value,
                range: self.range(),
            })
        }
    }
}

const DAMPED: &[ParamSpec] = &[ParamSpec::non_negative("b", 0.1)];
const TWO_RESERVOIR: &[ParamSpec] = &[ParamSpec::new("d", 0.1), ParamSpec::new("e", 0.1)];
const VDP: &[ParamSpec] = &[ParamSpec::non_negative("eps", 0.5)];
const BRUSSELATOR: &[ParamSpec] = &[ParamSpec::positive("a", 1.0), ParamSpec::positive("b", 3.0)];
const LV: &[ParamSpec] = &[ParamSpec::positive("alpha", 1.0), ParamSpec::positive("beta", 1.0)];
const ROBERTSON: &[ParamSpec] = &[
    ParamSpec::positive("a", 1.0),
    ParamSpec::positive("b", 1.0),
    ParamSpec::positive("c", 1.0),
];
const ROBERTSON_REDUCED: &[ParamSpec] = &[
    ParamSpec::positive("a", 1.0),
    ParamSpec::positive("b", 1.0),
    ParamSpec::positive("c", 1.0),
    ParamSpec::positive("m0", 1.0),
];
const ROSENZWEIG: &[ParamSpec] = &[
    ParamSpec::positive("r", 1.0),
    ParamSpec {
        allow_infinite: true,
        ..ParamSpec::positive("k", 10.0)
    },
    ParamSpec::positive("alpha", 1.0),
    ParamSpec::positive("beta", 0.5),
    ParamSpec {
        name: "holling",
        default: 2.0,
        min: 1.0,
        min_open: false,
        max: 3.0,
        allow_infinite: false,
        integer: true,
    },
];

/// Parameter schema of a zoo entry.
pub fn schema(name: &str) -> Result<&'static [ParamSpec]> {
    Ok(match name {
        "damped_oscillator" => DAMPED,
        "two_reservoir" => TWO_RESERVOIR,
        "vdp" => VDP,
        "brusselator" => BRUSSELATOR,
        "lv" | "lv_canonical" => LV,
        "robertson" => ROBERTSON,
        "robertson_reduced" => ROBERTSON_REDUCED,
        "rosenzweig" => ROSENZWEIG,
        _ => return Err(Error::UnknownSystem(name.to_string())),
    })
}

/// Defaults overlaid with `params`, validated against the schema.
pub fn resolve_params(name: &str, params: &Params) -> Result<Params> {
    let spec = schema(name)?;
    for key in params.keys() {
        if !spec.iter().any(|p| p.name == key) {
            let known: Vec<&str> = spec.iter().map(|p| p.name).collect();
            return Err(Error::Config(format!(
                "unknown parameter `{key}` for `{name}` (expected one of {known:?})"
            )));
        }
    }
    let mut out = Params::new();
    for p in spec {
        let v = params.get(p.name).copied().unwrap_or(p.default);
        p.check(v)?;
        out.insert(p.name.to_string(), v);
    }
    Ok(out)
}

/// A skew-gradient pair reproducing the field: `f = B grad H`.
#[derive(Debug, Clone)]
pub struct Structure {
    pub skew: SkewField,
    pub generator: ScalarField,
}

type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub params: Params,
    pub system: SystemDef,
    pub invariant: EffectiveInvariant,
    pub structure: Option<Structure>,
    /// Affine Casimir of the system's own skew structure.
    pub casimir: Option<CasimirSpec>,
    /// Whether `structure.skew` satisfies the Jacobi identity.
    pub jacobi_expected: bool,
    pub description: &'static str,
    pub default_state: Vec<f64>,
    sampler: Sampler,
}

impl fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZooEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("system", &self.system)
            .field("structure", &self.structure.is_some())
            .field("casimir", &self.casimir.is_some())
            .finish_non_exhaustive()
    }
}

impl ZooEntry {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// A random state inside the entry's sampling box.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(rng)
    }

    pub fn samples(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// The system with `structure` installed as its skew field and
    /// Hamiltonian, ready for the discrete-gradient integrator.
    pub fn structured_system(&self) -> Option<SystemDef> {
        self.structure.as_ref().map(|st| {
            let mut sys = self.system.clone().with_skew(st.skew.clone()).with_hamiltonian(st.generator.clone());
            sys.pfaffian = None;
            sys
        })
    }
}

fn get(p: &Params, k: &str) -> f64 {
    p[k]
}

fn box_sampler(bounds: Vec<(f64, f64)>) -> Sampler {
    Arc::new(move |rng: &mut dyn RngCore| bounds.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect())
}

fn energy() -> ScalarField {
    ScalarField::with_gradient(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x| vec![x[0], x[1]])
}

/// `x' = p, p' = -x` with `H = (x^2 + p^2) / 2` and `B = J`.
pub fn harmonic_oscillator() -> SystemDef {
    SystemDef::new(2, |x| vec![x[1], -x[0]])
        .with_hamiltonian(energy())
        .with_skew(SkewField::canonical(1))
        .with_divergence(|_| 0.0)
}

/// Dispatches on the entry name.
pub fn build(name: &str, params: &Params) -> Result<ZooEntry> {
    let p = resolve_params(name, params)?;
    match name {
        "damped_oscillator" => Ok(damped_oscillator(p)),
        "two_reservoir" => Ok(two_reservoir(p)),
        "vdp" => Ok(vdp(p)),
        "brusselator" => Ok(brusselator(p)),
        "lv" => Ok(lotka_volterra(p)),
        "lv_canonical" => Ok(lv_canonical(p)),
        "robertson" => Ok(robertson(p)),
        "robertson_reduced" => Ok(robertson_reduced(p)),
        "rosenzweig" => {
            let holling = Holling::from_type(get(&p, "holling") as u32)?;
            let rp = RosenzweigParams {
                r: get(&p, "r"),
                k: get(&p, "k"),
                alpha: get(&p, "alpha"),
                beta: get(&p, "beta"),
            };
            let mut entry = rosenzweig(rp, holling)?;
            entry.params = p;
            Ok(entry)
        }
        _ => Err(Error::UnknownSystem(name.to_string())),
    }
}

fn damped_oscillator(p: Params) -> ZooEntry {
    let b = get(&p, "b");
    let system = SystemDef::new(2, move |x| vec![x[1], -x[0] - b * x[1]])
        .with_hamiltonian(energy())
        .with_divergence(move |_| -b);
    let invariant = EffectiveInvariant::new(2, energy(), vec![ReservoirSpec::new(0, move |x| b * x[1])])
        .expect("valid reservoir index");
    ZooEntry {
        name: "damped_oscillator",
        params: p,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "linearly damped oscillator x' = p, p' = -x - b p",
        default_state: vec![1.0, 0.0],
        sampler: box_sampler(vec![(-3.0, 3.0); 2]),
    }
}

fn two_reservoir(p: Params) -> ZooEntry {
    let (d, e) = (get(&p, "d"), get(&p, "e"));
    // V = x^2 / 2, D = d p, E = e x.
    let system = SystemDef::new(2, move |x| vec![x[1] + e * x[0], -x[0] - d * x[1]])
        .with_hamiltonian(energy())
        .with_divergence(move |_| e - d);
    let invariant = EffectiveInvariant::new(
        2,
        energy(),
        vec![
            ReservoirSpec::new(0, move |x| d * x[1]),
            ReservoirSpec::new(1, move |x| e * x[0]),
        ],
    )
    .expect("valid reservoir indices");
    ZooEntry {
        name: "two_reservoir",
        params: p,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "oscillator with reservoirs in both coordinates: x' = p + e x, p' = -x - d p",
        default_state: vec![1.0, 0.0],
        sampler: box_sampler(vec![(-3.0, 3.0); 2]),
    }
}

fn vdp(p: Params) -> ZooEntry {
    let eps = get(&p, "eps");
    let system = SystemDef::new(2, move |x| vec![x[1], -x[0] + eps * (1.0 - x[0] * x[0]) * x[1]])
        .with_hamiltonian(energy())
        .with_divergence(move |x| eps * (1.0 - x[0] * x[0]));
    let invariant = EffectiveInvariant::new(
        2,
        energy(),
        vec![ReservoirSpec::new(0, move |x| -eps * (1.0 - x[0] * x[0]) * x[1])],
    )
    .expect("valid reservoir index");
    ZooEntry {
        name: "vdp",
        params: p,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "Van der Pol oscillator x' = p, p' = -x + eps (1 - x^2) p",
        default_state: vec![2.0, 0.0],
        sampler: box_sampler(vec![(-3.0, 3.0); 2]),
    }
}

fn brusselator(p: Params) -> ZooEntry {
    let (a, b) = (get(&p, "a"), get(&p, "b"));
    let system = SystemDef::new(2, move |x| {
        let x2y = x[0] * x[0] * x[1];
        vec![a + x2y - b * x[0] - x[0], b * x[0] - x2y]
    })
    .with_divergence(move |x| 2.0 * x[0] * x[1] - b - 1.0 - x[0] * x[0]);
    let potential = ScalarField::with_gradient(
        move |x| a * x[1] - 0.5 * b * x[0] * x[0],
        move |x| vec![-b * x[0], a],
    );
    let invariant = EffectiveInvariant::new(
        2,
        potential,
        vec![
            ReservoirSpec::new(0, |x| x[0] * x[0] * x[1]),
            ReservoirSpec::new(1, move |x| x[0] * x[0] * x[1] - b * x[0] - x[0]),
        ],
    )
    .expect("valid reservoir indices");
    ZooEntry {
        name: "brusselator",
        params: p,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "Brusselator x' = a + x^2 y - b x - x, y' = b x - x^2 y",
        default_state: vec![1.0, 1.0],
        sampler: box_sampler(vec![(0.05, 4.0); 2]),
    }
}

fn lv_field(alpha: f64, beta: f64) -> impl Fn(&[f64]) -> Vec<f64> + Send + Sync + Clone + 'static {
    move |x: &[f64]| vec![x[0] * (1.0 - alpha * x[1]), x[1] * (x[0] - beta)]
}

/// `M = beta ln u + ln v - u - alpha v`.
pub fn lv_resource(alpha: f64, beta: f64) -> ScalarField {
    ScalarField::with_gradient(
        move |x| beta * x[0].ln() + x[1].ln() - x[0] - alpha * x[1],
        move |x| vec![beta / x[0] - 1.0, 1.0 / x[1] - alpha],
    )
}

/// `B = [[0, uv], [-uv, 0]]`.
pub fn lv_poisson_structure() -> SkewField {
    SkewField::new(2, |x| {
        let uv = x[0] * x[1];
        DMatrix::from_row_slice(2, 2, &[0.0, uv, -uv, 0.0])
    })
}

/// `dK = v (beta - u) du + u (1 - alpha v) dv`.
pub fn lv_pfaffian_k(alpha: f64, beta: f64) -> PfaffianForm {
    PfaffianForm::new(2, move |x| vec![x[1] * (beta - x[0]), x[0] * (1.0 - alpha * x[1])])
}

fn lotka_volterra(p: Params) -> ZooEntry {
    let (alpha, beta) = (get(&p, "alpha"), get(&p, "beta"));
    let system = SystemDef::new(2, lv_field(alpha, beta))
        .with_hamiltonian(lv_resource(alpha, beta))
        .with_skew(lv_poisson_structure())
        .with_domain(Domain::Positive)
        .with_divergence(move |x| 1.0 - beta - alpha * x[1] + x[0]);
    let invariant = EffectiveInvariant::new(
        2,
        ScalarField::zero(2),
        vec![
            ReservoirSpec::new(0, move |x| x[1] * (beta - x[0])),
            ReservoirSpec::new(1, move |x| x[0] * (1.0 - alpha * x[1])),
        ],
    )
    .expect("valid reservoir indices");
    ZooEntry {
        name: "lv",
        params: p,
        system,
        invariant,
        structure: Some(Structure {
            skew: lv_poisson_structure(),
            generator: lv_resource(alpha, beta),
        }),
        casimir: None,
        jacobi_expected: true,
        description: "Lotka-Volterra u' = u (1 - alpha v), v' = v (u - beta) in Poisson form",
        default_state: vec![2.0, 1.0],
        sampler: box_sampler(vec![(0.1, 5.0); 2]),
    }
}

fn lv_canonical(p: Params) -> ZooEntry {
    let (alpha, beta) = (get(&p, "alpha"), get(&p, "beta"));
    // M = p - alpha e^p + beta q - e^q in q = ln u, p = ln v.
    let resource = move || {
        ScalarField::with_gradient(
            move |x| x[1] - alpha * x[1].exp() + beta * x[0] - x[0].exp(),
            move |x| vec![beta - x[0].exp(), 1.0 - alpha * x[1].exp()],
        )
    };
    let system = SystemDef::new(2, move |x| vec![1.0 - alpha * x[1].exp(), x[0].exp() - beta])
        .with_hamiltonian(resource())
        .with_skew(SkewField::canonical(1))
        .with_divergence(|_| 0.0);
    ZooEntry {
        name: "lv_canonical",
        params: p,
        system,
        invariant: EffectiveInvariant::pure(2, resource()),
        structure: Some(Structure {
            skew: SkewField::canonical(1),
            generator: resource(),
        }),
        casimir: None,
        jacobi_expected: true,
        description: "Lotka-Volterra in logarithmic coordinates q = ln u, p = ln v",
        default_state: vec![2f64.ln(), 0.0],
        sampler: box_sampler(vec![(-2.0, 2.0); 2]),
    }
}

/// `(u, v) -> (ln u, ln v)`; both concentrations must be positive.
pub fn lv_log_transform(s: &PhaseState) -> Result<PhaseState> {
    if s.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: s.dim() });
    }
    if let Some((component, value)) = s.x.iter().copied().enumerate().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain { component, value });
    }
    PhaseState::new(s.t, s.x.iter().map(|v| v.ln()).collect())
}

/// `(q, p) -> (e^q, e^p)`.
pub fn lv_log_inverse(s: &PhaseState) -> Result<PhaseState> {
    if s.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: s.dim() });
    }
    PhaseState::new(s.t, s.x.iter().map(|v| v.exp()).collect())
}

/// Constant structure `E` with Casimir `x + y + z`.
pub fn robertson_structure_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0])
}

/// State-dependent `B(x)` with `B grad(x + y + z) = f`: the cross-product
/// matrix of `(a x, a x + b y^2, c y z + b y^2)`.
pub fn robertson_mass_action_skew(a: f64, b: f64, c: f64) -> SkewField {
    SkewField::new(3, move |x| {
        let by2 = b * x[1] * x[1];
        let w = [a * x[0], a * x[0] + by2, c * x[1] * x[2] + by2];
        DMatrix::from_row_slice(3, 3, &[0.0, w[2], -w[1], -w[2], 0.0, w[0], w[1], -w[0], 0.0])
    })
}

/// `x' = -a x + c y z, y' = a x - b y^2 - c y z, z' = b y^2`.
pub fn robertson_field(a: f64, b: f64, c: f64) -> impl Fn(&[f64]) -> Vec<f64> + Send + Sync + Clone + 'static {
    move |x: &[f64]| {
        let (ax, by2, cyz) = (a * x[0], b * x[1] * x[1], c * x[1] * x[2]);
        vec![-ax + cyz, ax - by2 - cyz, by2]
    }
}

fn robertson(p: Params) -> ZooEntry {
    let (a, b, c) = (get(&p, "a"), get(&p, "b"), get(&p, "c"));
    let potential = ScalarField::with_gradient(
        move |x| -0.5 * a * x[0] * x[0] - b * x[1].powi(3) / 3.0,
        move |x| vec![-a * x[0], -b * x[1] * x[1], 0.0],
    );
    let invariant = EffectiveInvariant::new(
        3,
        potential,
        vec![
            ReservoirSpec::new(1, move |x| -a * x[0]),
            ReservoirSpec::new(2, move |x| -(b * x[1] * x[1] + c * x[1] * x[2])),
        ],
    )
    .expect("valid reservoir indices");
    let system = SystemDef::new(3, robertson_field(a, b, c))
        .with_skew(SkewField::constant(robertson_structure_matrix()))
        .with_pfaffian(invariant.pfaffian())
        .with_domain(Domain::NonNegative)
        .with_divergence(move |x| -a - 2.0 * b * x[1] - c * x[2]);
    ZooEntry {
        name: "robertson",
        params: p,
        system,
        invariant,
        structure: Some(Structure {
            skew: robertson_mass_action_skew(a, b, c),
            generator: ScalarField::linear(vec![1.0, 1.0, 1.0]),
        }),
        casimir: Some(CasimirSpec::new(ScalarField::linear(vec![1.0, 1.0, 1.0]), 1.0, 0)),
        jacobi_expected: false,
        description: "Robertson autocatalytic kinetics x -> y, 2y -> y + z, y + z -> x + z",
        default_state: vec![1.0, 0.0, 0.0],
        sampler: box_sampler(vec![(0.0, 2.0); 3]),
    }
}

fn robertson_reduced(p: Params) -> ZooEntry {
    let (a, b, c, m0) = (get(&p, "a"), get(&p, "b"), get(&p, "c"), get(&p, "m0"));
    let mu = a * m0;
    // Coordinates (y, z) on the leaf x + y + z = m0.
    let system = SystemDef::new(2, move |x| {
        let (y, z) = (x[0], x[1]);
        vec![mu - a * y - a * z - b * y * y - c * y * z, b * y * y]
    })
    .with_domain(Domain::Custom(Arc::new(move |x: &[f64]| {
        if let Some((component, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Some(Violation { component, value });
        }
        if let Some((component, &value)) = x.iter().enumerate().find(|(_, v)| **v < -NON_NEGATIVE_SLACK) {
            return Some(Violation { component, value });
        }
        let eliminated = m0 - x[0] - x[1];
        (eliminated < -NON_NEGATIVE_SLACK).then_some(Violation {
            component: 2,
            value: eliminated,
        })
    })))
    .with_divergence(move |x| -a - 2.0 * b * x[0] - c * x[1]);
    let potential = ScalarField::with_gradient(
        move |x| mu * x[1] - 0.5 * a * x[1] * x[1] - b * x[0].powi(3) / 3.0,
        move |x| vec![-b * x[0] * x[0], mu - a * x[1]],
    );
    let invariant = EffectiveInvariant::new(
        2,
        potential,
        vec![ReservoirSpec::new(1, move |x| -(a * x[0] + b * x[0] * x[0] + c * x[0] * x[1]))],
    )
    .expect("valid reservoir index");
    ZooEntry {
        name: "robertson_reduced",
        params: p,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "Robertson kinetics on the mass leaf x = m0 - y - z, coordinates (y, z)",
        default_state: vec![0.0, 0.0],
        sampler: Arc::new(move |rng: &mut dyn RngCore| {
            let y = m0 * rng.random_range(0.0..=1.0);
            let z = (m0 - y) * rng.random_range(0.0..=1.0);
            vec![y, z]
        }),
    }
}

/// Functional response of the predator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Holling {
    /// `h(u) = u`.
    Linear,
    /// `h(u) = u / (1 + u)`.
    Hyperbolic,
    /// `h(u) = u^2 / (1 + u^2)`.
    Sigmoid,
}

impl Holling {
    pub fn from_type(t: u32) -> Result<Self> {
        match t {
            1 => Ok(Holling::Linear),
            2 => Ok(Holling::Hyperbolic),
            3 => Ok(Holling::Sigmoid),
            _ => Err(Error::ParamRange {
                name: "holling".into(),
                value: f64::from(t),
                range: "integers 1..=3".into(),
            }),
        }
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Holling::Linear => u,
            Holling::Hyperbolic => u / (1.0 + u),
            Holling::Sigmoid => u * u / (1.0 + u * u),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Holling::Linear => 1.0,
            Holling::Hyperbolic => 1.0 / ((1.0 + u) * (1.0 + u)),
            Holling::Sigmoid => 2.0 * u / ((1.0 + u * u) * (1.0 + u * u)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenzweigParams {
    pub r: f64,
    /// Carrying capacity; `f64::INFINITY` removes the logistic term.
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for RosenzweigParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            k: 10.0,
            alpha: 1.0,
            beta: 0.5,
        }
    }
}

impl RosenzweigParams {
    /// Interior equilibrium for a linear response: `u* = beta / alpha`,
    /// `v* = r u* (1 - u*/K) / u*`.
    pub fn linear_fixed_point(&self) -> [f64; 2] {
        let u = self.beta / self.alpha;
        [u, self.r * u * (1.0 - u / self.k) / Holling::Linear.eval(u)]
    }
}

/// `u' = r u (1 - u/K) - v h(u)`, `v' = v (-beta + alpha h(u))`.
pub fn rosenzweig(rp: RosenzweigParams, holling: Holling) -> Result<ZooEntry> {
    let RosenzweigParams { r, k, alpha, beta } = rp;
    for (name, v) in [("r", r), ("alpha", alpha), ("beta", beta)] {
        ParamSpec::positive(name, 1.0).check(v)?;
    }
    ROSENZWEIG[1].check(k)?;
    let growth = move |u: f64| r * u * (1.0 - u / k);
    let system = SystemDef::new(2, move |x| {
        let h = holling.eval(x[0]);
        vec![growth(x[0]) - x[1] * h, x[1] * (-beta + alpha * h)]
    })
    .with_domain(Domain::NonNegative)
    .with_divergence(move |x| {
        r - 2.0 * r * x[0] / k - x[1] * holling.derivative(x[0]) - beta + alpha * holling.eval(x[0])
    });
    let invariant = EffectiveInvariant::new(
        2,
        ScalarField::zero(2),
        vec![
            ReservoirSpec::new(0, move |x| x[1] * (beta - alpha * holling.eval(x[0]))),
            ReservoirSpec::new(1, move |x| growth(x[0]) - x[1] * holling.eval(x[0])),
        ],
    )
    .expect("valid reservoir indices");
    let mut params = Params::new();
    for (name, v) in [("r", r), ("k", k), ("alpha", alpha), ("beta", beta)] {
        params.insert(name.into(), v);
    }
    params.insert(
        "holling".into(),
        match holling {
            Holling::Linear => 1.0,
            Holling::Hyperbolic => 2.0,
            Holling::Sigmoid => 3.0,
        },
    );
    Ok(ZooEntry {
        name: "rosenzweig",
        params,
        system,
        invariant,
        structure: None,
        casimir: None,
        jacobi_expected: true,
        description: "Rosenzweig-MacArthur predator-prey model with Holling response",
        default_state: vec![1.0, 0.5],
        sampler: box_sampler(vec![(0.05, 5.0); 2]),
    })
}
