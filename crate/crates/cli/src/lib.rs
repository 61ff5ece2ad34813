//! Batch front end over `effham-core`: `simulate`, `check` and `compile`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 failed check suite.

pub mod check;
pub mod compile;
pub mod config;
pub mod csv;
pub mod simulate;

use std::path::Path;

use effham_core::network::{linear_invariants, mass_action_odes, parse_network_with, ReactionNetwork};
use effham_core::zoo::{self, ZooEntry};
use effham_core::{EffectiveInvariant, PhaseState, ScalarField, SystemDef};

use config::{ReservoirMode, RunConfig, SystemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

impl From<effham_core::Error> for CliError {
    fn from(e: effham_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// A system ready to integrate, with the K it is monitored by.
pub struct Prepared {
    pub label: String,
    pub system: SystemDef,
    pub invariant: Option<EffectiveInvariant>,
    pub entry: Option<ZooEntry>,
    pub network: Option<ReactionNetwork>,
    pub initial: PhaseState,
}

impl Prepared {
    pub fn reservoir_count(&self) -> usize {
        self.invariant.as_ref().map_or(0, |k| k.reservoirs.len())
    }
}

pub fn load_network(path: &Path, overrides: &std::collections::BTreeMap<String, f64>) -> Result<ReactionNetwork, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_network_with(&text, overrides)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.network)
}

fn select_reservoirs(inv: &EffectiveInvariant, mode: &ReservoirMode) -> Result<EffectiveInvariant, CliError> {
    match mode {
        ReservoirMode::Auto => Ok(inv.clone()),
        ReservoirMode::None => Ok(EffectiveInvariant::pure(inv.dim(), inv.potential.clone())),
        ReservoirMode::Explicit(idx) => {
            let mut picked = Vec::with_capacity(idx.len());
            for &i in idx {
                let r = inv.reservoirs.get(i).ok_or_else(|| {
                    CliError::Config(format!("reservoir index {i} out of range (system has {})", inv.reservoirs.len()))
                })?;
                picked.push(r.clone());
            }
            Ok(EffectiveInvariant::new(inv.dim(), inv.potential.clone(), picked)?)
        }
    }
}

/// Builds the system and validates the initial state. Performs no I/O
/// besides reading a network file.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    cfg.validate_times()?;
    let (label, system, invariant, entry, network, default) = match &cfg.system {
        SystemSpec::Zoo { name, params } => {
            let entry = zoo::build(name, params).map_err(|e| CliError::Config(e.to_string()))?;
            let inv = select_reservoirs(&entry.invariant, &cfg.reservoirs)?;
            let default = entry.default_state.clone();
            (name.clone(), entry.system.clone(), Some(inv), Some(entry), None, Some(default))
        }
        SystemSpec::Network { path, params } => {
            let net = load_network(path, params)?;
            if cfg.reservoirs != ReservoirMode::Auto && cfg.reservoirs != ReservoirMode::None {
                return Err(CliError::Config("networks carry no reservoirs to select".into()));
            }
            let mut sys = mass_action_odes(&net);
            // The first conservation law plays the role of H.
            let inv = linear_invariants(&net).into_iter().next().map(|c| {
                let h = ScalarField::linear(c.iter().map(|v| *v as f64).collect());
                sys = sys.clone().with_hamiltonian(h.clone());
                EffectiveInvariant::pure(net.species_count(), h)
            });
            (cfg.system.label(), sys, inv, None, Some(net), None)
        }
    };
    let x0 = match (&cfg.initial_state, default) {
        (Some(x), _) => x.clone(),
        (None, Some(d)) => d,
        (None, None) => return Err(CliError::Config("initial_state is required for network systems".into())),
    };
    if x0.len() != system.dim() {
        return Err(CliError::Config(format!(
            "initial state has {} components, system `{label}` has dimension {}",
            x0.len(),
            system.dim()
        )));
    }
    let initial = PhaseState::new(cfg.t0, x0).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(v) = system.domain.violation(&initial.x) {
        return Err(CliError::Config(format!("initial state outside the domain: {}", effham_core::Error::from(v))));
    }
    Ok(Prepared {
        label,
        system,
        invariant,
        entry,
        network,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn unknown_system_is_config_error() {
        let c = cfg(r#"{"system": {"zoo": {"name": "pendulum"}}, "T": 1, "h": 0.1}"#);
        assert_eq!(prepare(&c).err().unwrap().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn default_state_and_dimension_check() {
        let c = cfg(r#"{"system": {"zoo": {"name": "lv"}}, "T": 1, "h": 0.1}"#);
        let p = prepare(&c).unwrap();
        assert_eq!(p.initial.x.len(), 2);
        let c = cfg(r#"{"system": {"zoo": {"name": "lv"}}, "initial_state": [1, 2, 3], "T": 1, "h": 0.1}"#);
        assert!(matches!(prepare(&c), Err(CliError::Config(_))));
        let c = cfg(r#"{"system": {"zoo": {"name": "lv"}}, "initial_state": [-1, 2], "T": 1, "h": 0.1}"#);
        assert!(matches!(prepare(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn reservoir_selection() {
        let base = r#"{"system": {"zoo": {"name": "brusselator"}}, "T": 1, "h": 0.1, "reservoirs": MODE}"#;
        let n = |mode: &str| prepare(&cfg(&base.replace("MODE", mode))).map(|p| p.reservoir_count());
        assert_eq!(n("\"auto\"").unwrap(), 2);
        assert_eq!(n("\"none\"").unwrap(), 0);
        assert_eq!(n("{\"explicit\": [1]}").unwrap(), 1);
        assert!(n("{\"explicit\": [2]}").is_err());
    }

    #[test]
    fn error_classes() {
        let e: CliError = effham_core::Error::Domain { component: 0, value: -1.0 }.into();
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let e: CliError = effham_core::Error::UnknownSystem("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }
}
