//! Reaction networks: DSL, mass-action compilation, stoichiometry and exact
//! linear conservation laws.

mod parser;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use parser::{parse_network, parse_network_with, serialize, ParseError, ParsedNetwork};

use crate::phase::{Domain, SystemDef};

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// Dense reactant coefficients, indexed like `ReactionNetwork::species`.
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    pub rate: f64,
    /// Parameter name the rate was bound through, if any.
    pub rate_symbol: Option<String>,
}

impl Reaction {
    /// Net change `products - reactants`.
    pub fn net(&self) -> Vec<i64> {
        self.products
            .iter()
            .zip(&self.reactants)
            .map(|(p, r)| i64::from(*p) - i64::from(*r))
            .collect()
    }

    /// Mass-action flux `rate * prod x_i^{m_i}`.
    pub fn flux(&self, x: &[f64]) -> f64 {
        self.reactants
            .iter()
            .zip(x)
            .filter(|(m, _)| **m > 0)
            .fold(self.rate, |acc, (m, xi)| acc * xi.powi(*m as i32))
    }

    /// `d flux / d x_i`.
    pub fn flux_derivative(&self, x: &[f64], i: usize) -> f64 {
        let mi = self.reactants[i];
        if mi == 0 {
            return 0.0;
        }
        self.reactants
            .iter()
            .zip(x)
            .enumerate()
            .filter(|(_, (m, _))| **m > 0)
            .fold(self.rate, |acc, (j, (m, xj))| {
                if j == i {
                    acc * f64::from(mi) * xj.powi(mi as i32 - 1)
                } else {
                    acc * xj.powi(*m as i32)
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    /// Species in order of first appearance.
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
    /// `param` bindings, in declaration order.
    pub params: Vec<(String, f64)>,
}

impl ReactionNetwork {
    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    /// `N = products - reactants`, species by reactions.
    pub fn stoichiometric_matrix(&self) -> DMatrix<i64> {
        let (n, m) = (self.species.len(), self.reactions.len());
        let mut out = DMatrix::zeros(n, m);
        for (k, r) in self.reactions.iter().enumerate() {
            for (i, v) in r.net().into_iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        out
    }

    pub fn fluxes(&self, x: &[f64]) -> Vec<f64> {
        self.reactions.iter().map(|r| r.flux(x)).collect()
    }

    /// `N r(x)`.
    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.species.len()];
        for r in &self.reactions {
            let flux = r.flux(x);
            for (i, (p, q)) in r.products.iter().zip(&r.reactants).enumerate() {
                if p != q {
                    out[i] += (f64::from(*p) - f64::from(*q)) * flux;
                }
            }
        }
        out
    }

    /// Trace of the Jacobian of [`Self::field`].
    pub fn divergence(&self, x: &[f64]) -> f64 {
        let mut div = 0.0;
        for r in &self.reactions {
            for (i, (p, q)) in r.products.iter().zip(&r.reactants).enumerate() {
                if p != q && *q > 0 {
                    div += (f64::from(*p) - f64::from(*q)) * r.flux_derivative(x, i);
                }
            }
        }
        div
    }
}

/// Compiles `x' = N r(x)` with mass-action fluxes. The domain is the
/// non-negative orthant.
pub fn mass_action_odes(net: &ReactionNetwork) -> SystemDef {
    let net = Arc::new(net.clone());
    let for_div = Arc::clone(&net);
    SystemDef::new(net.species.len(), move |x| net.field(x))
        .with_domain(Domain::NonNegative)
        .with_divergence(move |x| for_div.divergence(x))
}

fn primitive(v: &[BigRational]) -> Vec<i64> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| (q * &lcm).to_integer()).collect();
    let gcd = ints
        .iter()
        .fold(BigInt::zero(), |acc, z| acc.gcd(z));
    let sign = match ints.iter().find(|z| !z.is_zero()) {
        Some(z) if z.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.iter()
        .map(|z| {
            (z / &gcd * &sign)
                .to_i64()
                .expect("conservation vector entry exceeds i64")
        })
        .collect()
}

/// Basis of `{c : c^T N = 0}` from exact rational row reduction of `N^T`,
/// each vector scaled to primitive integers with a positive leading entry.
///
/// # Panics
///
/// If a primitive basis entry does not fit in `i64`.
pub fn linear_invariants(net: &ReactionNetwork) -> Vec<Vec<i64>> {
    let n_mat = net.stoichiometric_matrix();
    let (species, reactions) = n_mat.shape();
    // Rows of N^T are reactions.
    let mut a: Vec<Vec<BigRational>> = (0..reactions)
        .map(|k| {
            (0..species)
                .map(|i| BigRational::from_integer(BigInt::from(n_mat[(i, k)])))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..species {
        let Some(p) = (row..reactions).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for v in a[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..reactions {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..species {
                    let sub = &factor * &a[row][c];
                    a[r][c] = &a[r][c] - sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == reactions {
            break;
        }
    }
    (0..species)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![BigRational::zero(); species];
            v[free] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][free].clone();
            }
            primitive(&v)
        })
        .collect()
}

/// `x + y + z`, `2*x - y`, ...
pub fn format_linear_form(coeffs: &[i64], species: &[String]) -> String {
    let mut out = String::new();
    for (c, name) in coeffs.iter().zip(species) {
        if *c == 0 {
            continue;
        }
        let mag = c.unsigned_abs();
        if out.is_empty() {
            if *c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0 { " - " } else { " + " });
        }
        if mag != 1 {
            let _ = write!(out, "{mag}*");
        }
        out.push_str(name);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct TermKey {
    rate: String,
    monomial: Vec<u32>,
}

/// Human-readable right-hand sides, one per species. Production terms come
/// before consumption terms, each group in reaction order; terms with the
/// same rate and monomial are merged.
pub fn rhs_strings(net: &ReactionNetwork) -> Vec<String> {
    (0..net.species.len())
        .map(|i| {
            let mut terms: Vec<(TermKey, i64)> = Vec::new();
            for r in &net.reactions {
                let c = i64::from(r.products[i]) - i64::from(r.reactants[i]);
                if c == 0 {
                    continue;
                }
                let rate = match &r.rate_symbol {
                    Some(s) => s.clone(),
                    None if r.rate == 1.0 => String::new(),
                    None => format!("{}", r.rate),
                };
                let key = TermKey {
                    rate,
                    monomial: r.reactants.clone(),
                };
                match terms.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, acc)) => *acc += c,
                    None => terms.push((key, c)),
                }
            }
            terms.retain(|(_, c)| *c != 0);
            terms.sort_by_key(|(_, c)| *c < 0);
            let mut out = String::new();
            for (key, c) in terms {
                let mut factors = Vec::new();
                let mag = c.unsigned_abs();
                let numeric = key.rate.starts_with(|ch: char| ch.is_ascii_digit());
                match key.rate.parse::<f64>().ok().filter(|_| numeric) {
                    Some(v) => {
                        let v = mag as f64 * v;
                        if v != 1.0 {
                            factors.push(format!("{v}"));
                        }
                    }
                    None => {
                        if mag != 1 {
                            factors.push(mag.to_string());
                        }
                        if !key.rate.is_empty() {
                            factors.push(key.rate.clone());
                        }
                    }
                }
                for (j, m) in key.monomial.iter().enumerate() {
                    match m {
                        0 => {}
                        1 => factors.push(net.species[j].clone()),
                        m => factors.push(format!("{}^{m}", net.species[j])),
                    }
                }
                if factors.is_empty() {
                    factors.push("1".into());
                }
                if out.is_empty() {
                    if c < 0 {
                        out.push('-');
                    }
                } else {
                    out.push_str(if c < 0 { " - " } else { " + " });
                }
                out.push_str(&factors.join("*"));
            }
            if out.is_empty() {
                out.push('0');
            }
            out
        })
        .collect()
}

/// Species name to value map helper for parameter overrides.
pub fn params_map(net: &ReactionNetwork) -> BTreeMap<String, f64> {
    net.params.iter().cloned().collect()
}
