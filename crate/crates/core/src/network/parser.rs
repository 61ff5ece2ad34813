//! Line-oriented lexer and parser for the reaction DSL.
//!
//! ```text
//! # Brusselator with external species folded into rates
//! param a = 1
//! param b = 3
//! 0 -> x [a]
//! 2 x + y -> 3 x [1]
//! x -> y [b]
//! x -> 0 [1]
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::{Reaction, ReactionNetwork};

/// Syntax or binding error, located by 1-based line, column and token index
/// within the line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column} (token {token}): {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: usize,
    pub message: String,
}

const EMPTY_NETWORK: &str = "network has no reactions";

impl ParseError {
    /// The input held no reactions (only blanks, comments or parameters).
    pub fn is_empty_network(&self) -> bool {
        self.message == EMPTY_NETWORK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub network: ReactionNetwork,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Plus,
    Arrow,
    Open,
    Close,
    Equals,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => f.write_str(s),
            Tok::Plus => f.write_str("+"),
            Tok::Arrow => f.write_str("->"),
            Tok::Open => f.write_str("["),
            Tok::Close => f.write_str("]"),
            Tok::Equals => f.write_str("="),
        }
    }
}

struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex(line_no: usize, line: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' => Tok::Plus,
                '[' => Tok::Open,
                ']' => Tok::Close,
                '=' => Tok::Equals,
                '-' if chars.get(i) == Some(&'>') => {
                    i += 1;
                    Tok::Arrow
                }
                _ => {
                    return Err(ParseError {
                        line: line_no,
                        column,
                        token: out.len() + 1,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Spanned { tok, column });
    }
    Ok(out)
}

struct LineParser<'a> {
    line: usize,
    width: usize,
    toks: &'a [Spanned],
    pos: usize,
}

impl LineParser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        let column = self.toks.get(self.pos).map_or(self.width + 1, |t| t.column);
        ParseError {
            line: self.line,
            column,
            token: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn found(&self) -> String {
        self.peek().map_or("end of line".to_string(), |t| format!("`{t}`"))
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{want}`, found {}", self.found())))
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error(format!("expected end of line, found {}", self.found()))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v = s.parse::<f64>().map_err(|_| self.error(format!("bad number `{s}`")))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(format!("expected a number, found {}", self.found()))),
        }
    }

    /// `0` or `term (+ term)*`, with `term = [int] ident`.
    fn side(&mut self) -> Result<Vec<(String, u32, usize)>, ParseError> {
        if let Some(Tok::Number(s)) = self.peek() {
            let next_is_species = matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Ident(_)));
            if !next_is_species && s.parse::<f64>().ok() == Some(0.0) {
                self.pos += 1;
                return Ok(Vec::new());
            }
        }
        let mut terms = Vec::new();
        loop {
            let coeff_pos = self.pos;
            let coeff = match self.peek() {
                Some(Tok::Number(s)) => {
                    let c = s
                        .parse::<u32>()
                        .ok()
                        .filter(|c| *c > 0)
                        .ok_or_else(|| self.error(format!("stoichiometric coefficient must be a positive integer, found `{s}`")))?;
                    self.pos += 1;
                    c
                }
                _ => 1,
            };
            match self.peek() {
                Some(Tok::Ident(name)) => {
                    let name = name.clone();
                    self.pos += 1;
                    terms.push((name, coeff, coeff_pos));
                }
                _ => return Err(self.error(format!("expected a species, found {}", self.found()))),
            }
            if self.peek() == Some(&Tok::Plus) {
                self.pos += 1;
            } else {
                return Ok(terms);
            }
        }
    }
}

enum RateToken {
    Value(f64),
    Symbol(String),
}

const KEYWORD_PARAM: &str = "param";

/// Parses DSL text; rate symbols must be bound by `param` lines.
pub fn parse_network(text: &str) -> Result<ParsedNetwork, ParseError> {
    parse_network_with(text, &BTreeMap::new())
}

/// Parses DSL text with extra symbol bindings that override `param` lines.
pub fn parse_network_with(text: &str, overrides: &BTreeMap<String, f64>) -> Result<ParsedNetwork, ParseError> {
    let mut species: Vec<String> = Vec::new();
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut pending: Vec<(Vec<(usize, u32)>, Vec<(usize, u32)>, RateToken, usize, usize)> = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line_no, raw)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: line_no,
            width: raw.chars().count(),
            toks: &toks,
            pos: 0,
        };
        if matches!(p.peek(), Some(Tok::Ident(k)) if k == KEYWORD_PARAM)
            && matches!(toks.get(1).map(|t| &t.tok), Some(Tok::Ident(_)))
        {
            p.pos = 1;
            let Some(Tok::Ident(name)) = p.peek().cloned() else { unreachable!() };
            p.pos += 1;
            p.expect(Tok::Equals)?;
            let value = p.number()?;
            p.end()?;
            if !(value.is_finite() && value > 0.0) {
                p.pos = 3;
                return Err(p.error(format!("parameter `{name}` must be positive, got {value}")));
            }
            if params.iter().any(|(n, _)| *n == name) {
                p.pos = 1;
                return Err(p.error(format!("parameter `{name}` bound twice")));
            }
            params.push((name, value));
            continue;
        }

        let mut sides = [Vec::new(), Vec::new()];
        for (k, side) in sides.iter_mut().enumerate() {
            if k == 1 {
                p.expect(Tok::Arrow)?;
            }
            for (name, coeff, _) in p.side()? {
                if name == KEYWORD_PARAM {
                    return Err(p.error("`param` is reserved"));
                }
                let sp = match species.iter().position(|s| *s == name) {
                    Some(i) => i,
                    None => {
                        species.push(name.clone());
                        species.len() - 1
                    }
                };
                match side.iter_mut().find(|(i, _)| *i == sp) {
                    Some((_, c)) => {
                        *c += coeff;
                        warnings.push(format!(
                            "line {line_no}: species `{name}` repeated on one side; coefficients summed"
                        ));
                    }
                    None => side.push((sp, coeff)),
                }
            }
        }
        p.expect(Tok::Open)?;
        let rate_pos = p.pos;
        let rate = match p.peek().cloned() {
            Some(Tok::Number(_)) => {
                let v = p.number()?;
                if !(v.is_finite() && v > 0.0) {
                    p.pos = rate_pos;
                    return Err(p.error(format!("rate constant must be positive, got {v}")));
                }
                RateToken::Value(v)
            }
            Some(Tok::Ident(name)) => {
                p.pos += 1;
                RateToken::Symbol(name)
            }
            _ => return Err(p.error(format!("expected a rate constant, found {}", p.found()))),
        };
        p.expect(Tok::Close)?;
        p.end()?;
        let [reactants, products] = sides;
        pending.push((reactants, products, rate, line_no, toks[rate_pos].column));
    }

    for (name, value) in overrides {
        if !(value.is_finite() && *value > 0.0) {
            return Err(ParseError {
                line: 0,
                column: 0,
                token: 0,
                message: format!("parameter `{name}` must be positive, got {value}"),
            });
        }
        match params.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = *value,
            None => params.push((name.clone(), *value)),
        }
    }

    let n = species.len();
    let dense = |side: &[(usize, u32)]| {
        let mut v = vec![0u32; n];
        for (i, c) in side {
            v[*i] = *c;
        }
        v
    };
    let mut reactions = Vec::with_capacity(pending.len());
    for (reactants, products, rate, line, column) in pending {
        let (rate, rate_symbol) = match rate {
            RateToken::Value(v) => (v, None),
            RateToken::Symbol(name) => match params.iter().find(|(n, _)| *n == name) {
                Some((_, v)) => (*v, Some(name)),
                None => {
                    let token = 0;
                    return Err(ParseError {
                        line,
                        column,
                        token,
                        message: format!("rate symbol `{name}` is not bound by a param line"),
                    }
                    .with_token_of(text, line, column));
                }
            },
        };
        reactions.push(Reaction {
            reactants: dense(&reactants),
            products: dense(&products),
            rate,
            rate_symbol,
        });
    }
    if reactions.is_empty() {
        return Err(ParseError {
            line: text.lines().count().max(1),
            column: 1,
            token: 1,
            message: EMPTY_NETWORK.into(),
        });
    }
    Ok(ParsedNetwork {
        network: ReactionNetwork {
            species,
            reactions,
            params,
        },
        warnings,
    })
}

impl ParseError {
    fn with_token_of(mut self, text: &str, line: usize, column: usize) -> Self {
        if let Some(raw) = text.lines().nth(line - 1) {
            if let Ok(toks) = lex(line, raw) {
                if let Some(i) = toks.iter().position(|t| t.column == column) {
                    self.token = i + 1;
                }
            }
        }
        self
    }
}

fn write_side(out: &mut String, species: &[String], side: &[u32]) {
    let mut first = true;
    for (i, c) in side.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if *c != 1 {
            let _ = write!(out, "{c} ");
        }
        out.push_str(&species[i]);
    }
    if first {
        out.push('0');
    }
}

/// Canonical text form; `parse_network(serialize(n))` reproduces `n`.
pub fn serialize(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    for (name, value) in &net.params {
        let _ = writeln!(out, "param {name} = {value:?}");
    }
    for r in &net.reactions {
        write_side(&mut out, &net.species, &r.reactants);
        out.push_str(" -> ");
        write_side(&mut out, &net.species, &r.products);
        match &r.rate_symbol {
            Some(s) => {
                let _ = writeln!(out, " [{s}]");
            }
            None => {
                let _ = writeln!(out, " [{:?}]", r.rate);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_conversion() {
        let net = parse_network("X -> Y [0.04]").unwrap().network;
        assert_eq!(net.species, ["X", "Y"]);
        assert_eq!(net.reactions.len(), 1);
        assert_eq!(net.reactions[0].reactants, [1, 0]);
        assert_eq!(net.reactions[0].products, [0, 1]);
        assert_eq!(net.reactions[0].rate, 0.04);
    }

    #[test]
    fn dangling_plus_fails_at_third_token() {
        let err = parse_network("X + -> Y [1]").unwrap_err();
        assert_eq!((err.line, err.token, err.column), (1, 3, 5));
    }

    #[test]
    fn error_locations() {
        let err = parse_network("# header\nX -> Y [1]\nX -> Y 1]").unwrap_err();
        assert_eq!((err.line, err.token, err.column), (3, 4, 8));
        let err = parse_network("X -> Y [0]").unwrap_err();
        assert_eq!(err.token, 5);
        assert!(err.message.contains("positive"));
        let err = parse_network("X -> Y [-1]").unwrap_err();
        assert_eq!(err.column, 9);
        let err = parse_network("X -> Y [1] junk").unwrap_err();
        assert_eq!(err.token, 7);
        let err = parse_network("1.5 X -> Y [1]").unwrap_err();
        assert!(err.message.contains("positive integer"));
        let err = parse_network("X -> Y [1").unwrap_err();
        assert_eq!((err.token, err.column), (6, 10));
        let err = parse_network("X => Y [1]").unwrap_err();
        assert_eq!(err.column, 4);
    }

    #[test]
    fn unbound_symbol_is_an_error_unless_supplied() {
        let err = parse_network("X -> Y [k]").unwrap_err();
        assert_eq!(err.token, 5);
        let mut p = BTreeMap::new();
        p.insert("k".to_string(), 2.0);
        let net = parse_network_with("X -> Y [k]", &p).unwrap().network;
        assert_eq!(net.reactions[0].rate, 2.0);
        assert_eq!(net.reactions[0].rate_symbol.as_deref(), Some("k"));
    }

    #[test]
    fn overrides_replace_param_lines() {
        let mut p = BTreeMap::new();
        p.insert("k".to_string(), 5.0);
        let net = parse_network_with("param k = 1\nX -> Y [k]", &p).unwrap().network;
        assert_eq!(net.reactions[0].rate, 5.0);
        p.insert("k".to_string(), -5.0);
        assert!(parse_network_with("param k = 1\nX -> Y [k]", &p).is_err());
    }

    #[test]
    fn param_lines_are_validated() {
        assert!(parse_network("param k = 0\nX -> Y [k]").is_err());
        assert!(parse_network("param k = 1\nparam k = 2\nX -> Y [k]").is_err());
        assert!(parse_network("param k 1\nX -> Y [k]").is_err());
    }

    #[test]
    fn duplicate_species_merge_with_warning() {
        let parsed = parse_network("Y + Y -> Y + Z [1]").unwrap();
        assert_eq!(parsed.network.reactions[0].reactants, [2, 0]);
        assert_eq!(parsed.network.reactions[0].products, [1, 1]);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn empty_sides_and_comments() {
        let net = parse_network("0 -> X [1] # inflow\n\n  # nothing\nX -> 0 [2.5e-1]").unwrap().network;
        assert_eq!(net.species, ["X"]);
        assert_eq!(net.reactions[0].reactants, [0]);
        assert_eq!(net.reactions[1].rate, 0.25);
        assert!(parse_network("# only comments\n").is_err());
    }

    #[test]
    fn serialize_round_trips() {
        let text = "param a = 1\nparam b = 3\n0 -> x [a]\n2 x + y -> 3 x [1]\nx -> y [b]\nx -> 0 [1]\n";
        let net = parse_network(text).unwrap().network;
        let again = parse_network(&serialize(&net)).unwrap().network;
        assert_eq!(net, again);
        assert_eq!(net.species, ["x", "y"]);
        assert_eq!(net.reactions.len(), 4);
    }
}
