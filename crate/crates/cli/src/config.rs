//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use effham_core::{IntegratorConfig, Method};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    /// Defaults to the zoo entry's reference state.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T", alias = "t_end")]
    pub t_end: f64,
    pub h: f64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub newton_tol: Option<f64>,
    #[serde(default)]
    pub newton_max_iter: Option<usize>,
    #[serde(default)]
    pub reservoirs: ReservoirMode,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub check: CheckOptions,
}

fn default_method() -> String {
    "rk4".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum SystemSpec {
    Zoo {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Path to a network DSL file, relative to the config file.
    Network {
        path: PathBuf,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl SystemSpec {
    pub fn params_mut(&mut self) -> &mut BTreeMap<String, f64> {
        match self {
            SystemSpec::Zoo { params, .. } | SystemSpec::Network { params, .. } => params,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemSpec::Zoo { name, .. } => name.clone(),
            SystemSpec::Network { path, .. } => path.display().to_string(),
        }
    }
}

/// Which reservoirs enter K.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirMode {
    /// All reservoirs of the zoo decomposition.
    #[default]
    Auto,
    /// A subset, by position in the zoo decomposition.
    Explicit(Vec<usize>),
    /// K reduces to the potential.
    None,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub identity_tol: f64,
    pub structure_tol: f64,
    pub skew_tol: f64,
    pub casimir_tol: f64,
    pub jacobi: bool,
    pub jacobi_h_fd: f64,
    pub quispel_capel_tol: f64,
    pub min_order: f64,
    /// Horizon for the drift-order study; defaults to `min(T, 10)`.
    pub order_t_end: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: 1000,
            seed: 0x5eed,
            identity_tol: 1e-10,
            structure_tol: 1e-10,
            skew_tol: 1e-12,
            casimir_tol: 1e-10,
            jacobi: true,
            jacobi_h_fd: 1e-5,
            quispel_capel_tol: 1e-8,
            min_order: 1.7,
            order_t_end: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let SystemSpec::Network { path: p, .. } = &mut cfg.system {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides to the system parameters.
    pub fn apply_overrides(&mut self, overrides: &[(String, f64)]) {
        let params = self.system.params_mut();
        for (k, v) in overrides {
            params.insert(k.clone(), *v);
        }
    }

    pub fn method(&self) -> Result<Method, CliError> {
        self.method.parse().map_err(|e: effham_core::Error| CliError::Config(e.to_string()))
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = IntegratorConfig::new(self.method()?, self.h).map_err(|e| CliError::Config(e.to_string()))?;
        let (tol, iters) = (self.newton_tol.unwrap_or(cfg.newton_tol), self.newton_max_iter.unwrap_or(cfg.newton_max_iter));
        cfg.with_newton(tol, iters).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Horizon checks: `T > 0`, `h > 0`, `h <= T`, finite `t0`.
    pub fn validate_times(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !self.t0.is_finite() {
            return bad(format!("t0 must be finite, got {}", self.t0));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("T must be positive and finite, got {}", self.t_end));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive and finite, got {}", self.h));
        }
        if self.h > self.t_end {
            return bad(format!("h = {} exceeds T = {}", self.h, self.t_end));
        }
        Ok(())
    }

    /// Output paths: explicit entries, else `<stem>.csv` / `<stem>.report.json`,
    /// placed under `out_dir` when given.
    pub fn output_paths(&self, stem: &str, out_dir: Option<&Path>) -> (PathBuf, PathBuf) {
        let place = |p: PathBuf| match out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };
        let traj = self.outputs.trajectory.clone().unwrap_or_else(|| format!("{stem}.csv").into());
        let report = self.outputs.report.clone().unwrap_or_else(|| format!("{stem}.report.json").into());
        (place(traj), place(report))
    }
}

/// Parses `key=value` with a finite numeric value.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    let v: f64 = v.trim().parse().map_err(|_| format!("`{}` is not a number", v.trim()))?;
    Ok((k.to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VDP: &str = r#"{
        "system": {"zoo": {"name": "vdp", "params": {"eps": 0.5}}},
        "initial_state": [2.0, 0.0],
        "T": 20.0, "h": 0.001, "method": "rk4"
    }"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_json(VDP).unwrap();
        assert_eq!(c.t_end, 20.0);
        assert_eq!(c.reservoirs, ReservoirMode::Auto);
        assert_eq!(c.check.samples, 1000);
        c.validate_times().unwrap();
        assert_eq!(c.integrator().unwrap().method, Method::Rk4);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_times() {
        assert!(RunConfig::from_json(&VDP.replace("\"method\"", "\"methd\"")).is_err());
        let mut c = RunConfig::from_json(VDP).unwrap();
        c.h = 30.0;
        assert!(c.validate_times().is_err());
        c.h = -1.0;
        assert!(c.validate_times().is_err());
        c.h = 1e-3;
        c.method = "euler".into();
        assert!(c.integrator().is_err());
    }

    #[test]
    fn reservoir_modes() {
        let c = RunConfig::from_json(&VDP.replace("\"method\": \"rk4\"", "\"reservoirs\": {\"explicit\": [0]}")).unwrap();
        assert_eq!(c.reservoirs, ReservoirMode::Explicit(vec![0]));
        let c = RunConfig::from_json(&VDP.replace("\"method\": \"rk4\"", "\"reservoirs\": \"none\"")).unwrap();
        assert_eq!(c.reservoirs, ReservoirMode::None);
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("eps=0.25").unwrap(), ("eps".into(), 0.25));
        assert!(parse_override("eps").is_err());
        assert!(parse_override("=1").is_err());
        assert!(parse_override("eps=abc").is_err());
        let mut c = RunConfig::from_json(VDP).unwrap();
        c.apply_overrides(&[("eps".into(), 0.1)]);
        assert_eq!(c.system.params_mut()["eps"], 0.1);
    }

    #[test]
    fn output_paths_follow_out_dir() {
        let c = RunConfig::from_json(VDP).unwrap();
        let (a, b) = c.output_paths("vdp", Some(Path::new("out")));
        assert_eq!(a, Path::new("out/vdp.csv"));
        assert_eq!(b, Path::new("out/vdp.report.json"));
    }
}
