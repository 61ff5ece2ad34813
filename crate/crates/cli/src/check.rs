//! `check`: invariant suites over a zoo entry or a compiled network.

use effham_core::integrators::{convergence_order, Monitored, OrderEstimate};
use effham_core::network::{linear_invariants, ReactionNetwork};
use effham_core::reservoir::{k_field, pfaffian_contract};
use effham_core::skew::{check_jacobi, check_skew, quispel_capel, verify_casimir, DEFAULT_TOL_GRAD, JACOBI_TOL};
use effham_core::zoo::ZooEntry;
use effham_core::{EffectiveInvariant, Error, PhaseState, SystemDef};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{CheckOptions, RunConfig};
use crate::{prepare, CliError, EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failure that the model predicts, e.g. a non-Poisson skew structure.
    ExpectedFail,
    Skipped,
}

impl Status {
    pub fn is_ok(self) -> bool {
        self != Status::Fail
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Suite {
    fn measured(name: &'static str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Suite { name, status, residual: Some(residual), tolerance: Some(tolerance), detail: detail.into() }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Suite { name, status: Status::Skipped, residual: None, tolerance: None, detail: why.into() }
    }

    fn failed(name: &'static str, why: String) -> Self {
        Suite { name, status: Status::Fail, residual: None, tolerance: None, detail: why }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub system: String,
    pub passed: bool,
    pub suites: Vec<Suite>,
}

impl CheckReport {
    fn new(system: String, suites: Vec<Suite>) -> Self {
        let passed = suites.iter().all(|s| s.status.is_ok());
        CheckReport { system, passed, suites }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }

    pub fn suite(&self, name: &str) -> Option<&Suite> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn st(x: &[f64]) -> PhaseState {
    PhaseState::at(x.to_vec()).expect("sampled states are finite")
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs() / (1.0 + v.abs())).fold(0.0, f64::max)
}

fn pfaffian_suite(sys: &SystemDef, inv: &EffectiveInvariant, samples: &[Vec<f64>], tol: f64) -> Result<Suite, Error> {
    let form = inv.pfaffian();
    let mut worst = 0.0f64;
    for x in samples {
        worst = worst.max(pfaffian_contract(&form, &st(x), &sys.eval(x))?.abs());
    }
    Ok(Suite::measured("pfaffian_identity", worst, tol, format!("max |dK(f)| over {} states", samples.len())))
}

fn k_field_suite(sys: &SystemDef, inv: &EffectiveInvariant, samples: &[Vec<f64>], tol: f64) -> Result<Suite, Error> {
    if inv.dim() != 2 {
        return Ok(Suite::skipped("k_field", "canonical form needs dimension 2"));
    }
    let mut worst = 0.0f64;
    for x in samples {
        worst = worst.max(rel_gap(&k_field(inv, &st(x))?, &sys.eval(x)));
    }
    Ok(Suite::measured("k_field", worst, tol, "max relative |X_K - f|"))
}

/// Order of the K drift under step halving; saturation counts as a pass.
fn order_suite(
    sys: &SystemDef,
    inv: &EffectiveInvariant,
    cfg: &RunConfig,
    s0: &PhaseState,
) -> Result<Suite, CliError> {
    let icfg = cfg.integrator()?;
    let t_end = cfg.check.order_t_end.unwrap_or(cfg.t_end.min(10.0));
    let hs = [icfg.h, icfg.h / 2.0, icfg.h / 4.0];
    if hs[0] > t_end {
        return Ok(Suite::skipped("drift_order", "step exceeds the order horizon"));
    }
    let est = convergence_order(sys, s0, &icfg, Monitored::Effective(inv), &hs, t_end)?;
    Ok(match est {
        OrderEstimate::Measured { order, drifts } => Suite {
            name: "drift_order",
            status: if order >= cfg.check.min_order { Status::Pass } else { Status::Fail },
            residual: Some(order),
            tolerance: Some(cfg.check.min_order),
            detail: format!("order {order:.3} from drifts {drifts:?}"),
        },
        OrderEstimate::Saturated { drifts } => Suite {
            name: "drift_order",
            status: Status::Pass,
            residual: None,
            tolerance: Some(cfg.check.min_order),
            detail: format!("drift at round-off level {drifts:?}"),
        },
    })
}

fn structure_suites(entry: &ZooEntry, samples: &[Vec<f64>], opts: &CheckOptions, rng: &mut ChaCha8Rng) -> Vec<Suite> {
    let Some(structure) = &entry.structure else {
        return vec![Suite::skipped("structure", "no skew-gradient structure")];
    };
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for x in samples {
        let bg = structure.skew.eval(x) * DVector::from_vec(structure.generator.gradient(x));
        worst = worst.max(rel_gap(bg.as_slice(), &entry.system.eval(x)));
    }
    out.push(Suite::measured("structure", worst, opts.structure_tol, "max relative |B grad H - f|"));

    let skew = check_skew(&structure.skew, samples, rng);
    out.push(Suite::measured("skew", skew.residual(), opts.skew_tol, "max |v.Bv| and |B + B^T|"));

    if opts.jacobi {
        let mut worst = 0.0f64;
        let mut raw = 0.0f64;
        for x in samples.iter().take(100) {
            match check_jacobi(&structure.skew, &st(x), opts.jacobi_h_fd) {
                Ok(r) => {
                    worst = worst.max(r.normalized);
                    raw = raw.max(r.residual);
                }
                Err(e) => {
                    out.push(Suite::failed("jacobi", e.to_string()));
                    return out;
                }
            }
        }
        let holds = worst <= JACOBI_TOL;
        let (status, detail) = match (entry.jacobi_expected, holds) {
            (true, true) => (Status::Pass, "Jacobi identity holds".to_string()),
            (true, false) => (Status::Fail, "Jacobi identity violated".to_string()),
            (false, false) => (Status::ExpectedFail, format!("not a Poisson structure (raw residual {raw:e})")),
            (false, true) => (Status::Fail, "expected a Jacobi violation but none was found".to_string()),
        };
        out.push(Suite { name: "jacobi", status, residual: Some(worst), tolerance: Some(JACOBI_TOL), detail });
    }

    let sys = entry.system.clone().with_hamiltonian(structure.generator.clone());
    let mut worst = 0.0f64;
    let mut used = 0;
    for x in samples {
        let grad = structure.generator.gradient(x);
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= DEFAULT_TOL_GRAD {
            continue;
        }
        match quispel_capel(&sys, &st(x)) {
            Ok(b) => {
                let f = sys.eval(x);
                let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                let bg = b * DVector::from_vec(grad);
                let gap = bg.iter().zip(&f).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / scale;
                worst = worst.max(gap);
                used += 1;
            }
            Err(e) => {
                out.push(Suite::failed("quispel_capel", format!("at {x:?}: {e}")));
                return out;
            }
        }
    }
    out.push(Suite::measured(
        "quispel_capel",
        worst,
        opts.quispel_capel_tol,
        format!("max relative |B grad H - f| over {used} states"),
    ));
    out
}

/// Runs every suite for `entry`. Public so fixtures can hand in a modified
/// entry.
pub fn check_entry(entry: &ZooEntry, cfg: &RunConfig, s0: &PhaseState) -> Result<CheckReport, CliError> {
    let opts = &cfg.check;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples = entry.samples(opts.samples, &mut rng);
    let mut suites = vec![
        pfaffian_suite(&entry.system, &entry.invariant, &samples, opts.identity_tol)?,
        k_field_suite(&entry.system, &entry.invariant, &samples, opts.identity_tol)?,
    ];
    suites.extend(structure_suites(entry, &samples, opts, &mut rng));
    match (&entry.casimir, &entry.system.skew) {
        (Some(c), Some(b)) => {
            let r = verify_casimir(b, &c.casimir, &samples);
            suites.push(Suite::measured("casimir", r.max_residual, opts.casimir_tol, "max |B grad C|"));
        }
        _ => suites.push(Suite::skipped("casimir", "no Casimir declared")),
    }
    suites.push(order_suite(&entry.system, &entry.invariant, cfg, s0)?);
    Ok(CheckReport::new(entry.name.to_string(), suites))
}

pub fn check_network(
    label: &str,
    net: &ReactionNetwork,
    sys: &SystemDef,
    inv: Option<&EffectiveInvariant>,
    cfg: &RunConfig,
    s0: &PhaseState,
) -> Result<CheckReport, CliError> {
    let opts = &cfg.check;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d = net.species_count();
    let samples: Vec<Vec<f64>> = (0..opts.samples).map(|_| (0..d).map(|_| rng.random_range(0.0..2.0)).collect()).collect();
    let basis = linear_invariants(net);
    let mut suites = Vec::new();
    if basis.is_empty() {
        suites.push(Suite::skipped("linear_invariants", "no conservation laws"));
    } else {
        let mut worst = 0.0f64;
        for x in &samples {
            let f = sys.eval(x);
            let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for c in &basis {
                let r: f64 = c.iter().zip(&f).map(|(ci, fi)| *ci as f64 * fi).sum();
                worst = worst.max(r.abs() / scale);
            }
        }
        suites.push(Suite::measured("linear_invariants", worst, opts.identity_tol, format!("{} laws", basis.len())));
    }
    match inv {
        Some(inv) => suites.push(order_suite(sys, inv, cfg, s0)?),
        None => suites.push(Suite::skipped("drift_order", "nothing to monitor")),
    }
    Ok(CheckReport::new(label.to_string(), suites))
}

pub fn check(cfg: &RunConfig) -> Result<CheckReport, CliError> {
    let p = prepare(cfg)?;
    match (&p.entry, &p.network) {
        (Some(entry), _) => check_entry(entry, cfg, &p.initial),
        (None, Some(net)) => check_network(&p.label, net, &p.system, p.invariant.as_ref(), cfg, &p.initial),
        (None, None) => unreachable!("prepare yields a zoo entry or a network"),
    }
}
