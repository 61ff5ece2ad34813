//! `compile`: network DSL to a human-readable listing.

use std::collections::BTreeMap;
use std::fmt::Write;

use effham_core::network::{format_linear_form, linear_invariants, parse_network_with, rhs_strings, ReactionNetwork};

use crate::CliError;

#[derive(Debug)]
pub struct Compiled {
    pub listing: String,
    pub warnings: Vec<String>,
}

pub fn listing(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species: {}", net.species.join(", "));
    if !net.params.is_empty() {
        let ps: Vec<String> = net.params.iter().map(|(k, v)| format!("{k} = {v:?}")).collect();
        let _ = writeln!(out, "params: {}", ps.join(", "));
    }
    out.push_str("odes:\n");
    for (name, rhs) in net.species.iter().zip(rhs_strings(net)) {
        let _ = writeln!(out, "  d{name}/dt = {rhs}");
    }
    out.push_str("stoichiometry:\n");
    let n = net.stoichiometric_matrix();
    let width = n.iter().map(|v| v.to_string().len()).max().unwrap_or(1);
    for (i, name) in net.species.iter().enumerate() {
        let row: Vec<String> = (0..n.ncols()).map(|k| format!("{:>width$}", n[(i, k)])).collect();
        let _ = writeln!(out, "  {name}: [{}]", row.join(" "));
    }
    let laws = linear_invariants(net);
    if laws.is_empty() {
        out.push_str("conserved: none\n");
    }
    for c in laws {
        let _ = writeln!(out, "conserved: {}", format_linear_form(&c, &net.species));
    }
    out
}

pub fn compile_text(text: &str, overrides: &BTreeMap<String, f64>) -> Result<Compiled, CliError> {
    match parse_network_with(text, overrides) {
        Ok(p) => Ok(Compiled { listing: listing(&p.network), warnings: p.warnings }),
        Err(e) if e.is_empty_network() => Ok(Compiled {
            listing: "species: none\n".into(),
            warnings: vec!["empty network: no reactions".into()],
        }),
        Err(e) => Err(CliError::Config(format!("parse error at {e}"))),
    }
}
