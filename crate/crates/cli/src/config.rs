//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use qfrac_core::expr::ParseEnv;
use qfrac_core::{FracOrder, QParams};

use crate::CliError;

pub const KEYS: [&str; 16] = [
    "command",
    "q",
    "p",
    "alpha",
    "a",
    "b",
    "zeta",
    "rhs",
    "r",
    "lipschitz_a",
    "lattice_depth",
    "tol",
    "max_iter",
    "operator",
    "function",
    "m_terms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Solve,
    Verify,
    Ml,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Ml => "ml",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eval" => Ok(Command::Eval),
            "solve" => Ok(Command::Solve),
            "verify" => Ok(Command::Verify),
            "ml" => Ok(Command::Ml),
            _ => Err(format!("expected one of eval, solve, verify, ml, got '{s}'")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    J,
    D,
    Caputo,
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "J" => Ok(Operator::J),
            "D" => Ok(Operator::D),
            "caputo" => Ok(Operator::Caputo),
            _ => Err(format!("expected one of J, D, caputo, got '{s}'")),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::J => "J",
            Operator::D => "D",
            Operator::Caputo => "caputo",
        })
    }
}

/// Values as given in the file; unset keys fall back to the defaults below.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub zeta: Option<f64>,
    pub rhs: Option<String>,
    pub r: Option<f64>,
    pub lipschitz_a: Option<f64>,
    pub lattice_depth: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub operator: Option<Operator>,
    pub function: Option<String>,
    pub m_terms: Option<usize>,
}

fn field<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse '{value}': {e}")))
}

fn set<T>(slot: &mut Option<T>, value: T) {
    *slot = Some(value);
}

impl RunConfig {
    /// Parses a config file. Unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut seen = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = index + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected 'key = value'")))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {lineno}: unknown key '{key}' (allowed: {})",
                    KEYS.join(", ")
                )));
            }
            if value.is_empty() {
                return Err(CliError::Config(format!("line {lineno}: {key}: empty value")));
            }
            if seen.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
        }
        Self::from_pairs(&seen)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        for (key, value) in pairs {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "command" => set(&mut c.command, field(k, v)?),
                "q" => set(&mut c.q, field(k, v)?),
                "p" => set(&mut c.p, field(k, v)?),
                "alpha" => set(&mut c.alpha, field(k, v)?),
                "a" => set(&mut c.a, field(k, v)?),
                "b" => set(&mut c.b, field(k, v)?),
                "zeta" => set(&mut c.zeta, field(k, v)?),
                "rhs" => set(&mut c.rhs, v.to_string()),
                "r" => set(&mut c.r, field(k, v)?),
                "lipschitz_a" => set(&mut c.lipschitz_a, field(k, v)?),
                "lattice_depth" => set(&mut c.lattice_depth, field(k, v)?),
                "tol" => set(&mut c.tol, field(k, v)?),
                "max_iter" => set(&mut c.max_iter, field(k, v)?),
                "operator" => set(&mut c.operator, field(k, v)?),
                "function" => set(&mut c.function, v.to_string()),
                "m_terms" => set(&mut c.m_terms, field(k, v)?),
                _ => return Err(CliError::Config(format!("unknown key '{k}'"))),
            }
        }
        Ok(c)
    }

    pub fn q(&self) -> f64 {
        self.q.unwrap_or(0.5)
    }
    pub fn p(&self) -> f64 {
        self.p.unwrap_or(1.0)
    }
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.5)
    }
    pub fn a(&self) -> f64 {
        self.a.unwrap_or(0.0)
    }
    pub fn b(&self) -> f64 {
        self.b.unwrap_or(1.0)
    }
    pub fn zeta(&self) -> f64 {
        self.zeta.unwrap_or(1.0)
    }
    pub fn r(&self) -> f64 {
        self.r.unwrap_or(10.0)
    }
    pub fn lattice_depth(&self) -> usize {
        self.lattice_depth.unwrap_or(12)
    }
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }
    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(50)
    }
    pub fn operator(&self) -> Operator {
        self.operator.unwrap_or(Operator::J)
    }
    pub fn function(&self) -> &str {
        self.function.as_deref().unwrap_or("1")
    }
    pub fn m_terms(&self) -> usize {
        self.m_terms.unwrap_or(10)
    }

    pub fn params(&self) -> Result<QParams, CliError> {
        if !(self.q() > 0.0 && self.q() < 1.0) {
            return Err(CliError::Config(format!("q: must lie in (0, 1), got {}", self.q())));
        }
        if !(self.p() > 0.0 && self.p().is_finite()) {
            return Err(CliError::Config(format!("p: must be positive, got {}", self.p())));
        }
        QParams::new(self.q(), self.p()).map_err(|e| CliError::Config(format!("q/p: {e}")))
    }

    pub fn order(&self) -> Result<FracOrder, CliError> {
        FracOrder::new(self.alpha()).map_err(|_| CliError::Config(format!("alpha: must lie in (0, 1), got {}", self.alpha())))
    }

    /// Environment for expressions: the given variables plus `q`, `p`, `alpha`.
    pub fn parse_env(&self, vars: &[&str]) -> ParseEnv {
        ParseEnv::new(vars)
            .with_constant("q", self.q())
            .with_constant("p", self.p())
            .with_constant("alpha", self.alpha())
    }

    /// Checks every field the command uses; messages name the field.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!("command: config says '{c}' but '{command}' was invoked")));
            }
        }
        self.params()?;
        if command != Command::Verify {
            if !(self.b() > 0.0 && self.b().is_finite()) {
                return Err(CliError::Config(format!("b: must be positive, got {}", self.b())));
            }
            if self.lattice_depth() == 0 {
                return Err(CliError::Config("lattice_depth: must be at least 1".into()));
            }
        }
        match command {
            Command::Eval | Command::Solve => {
                self.order()?;
                if !(self.a() >= 0.0 && self.a() < self.b()) {
                    return Err(CliError::Config(format!(
                        "a: must satisfy 0 <= a < b, got a={}, b={}",
                        self.a(),
                        self.b()
                    )));
                }
            }
            Command::Ml => {
                if !(self.alpha() > 0.0 && self.alpha() <= 1.0) {
                    return Err(CliError::Config(format!("alpha: must lie in (0, 1], got {}", self.alpha())));
                }
            }
            Command::Verify => {
                if self.alpha.is_some() {
                    self.order()?;
                }
            }
        }
        if command == Command::Eval {
            self.parse_env(&["x"])
                .parse(self.function())
                .map_err(|e| CliError::Config(format!("function: {e}")))?;
        }
        if command == Command::Solve {
            let rhs = self.rhs.as_deref().ok_or_else(|| CliError::Config("rhs: required for solve".into()))?;
            self.parse_env(&["t", "u"])
                .parse(rhs)
                .map_err(|e| CliError::Config(format!("rhs: {e}")))?;
            if !self.zeta().is_finite() {
                return Err(CliError::Config(format!("zeta: must be finite, got {}", self.zeta())));
            }
            if !(self.r() > 0.0 && self.r().is_finite()) {
                return Err(CliError::Config(format!("r: must be positive, got {}", self.r())));
            }
            if let Some(l) = self.lipschitz_a {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(CliError::Config(format!("lipschitz_a: must be positive, got {l}")));
                }
            }
            if !(self.tol() > 0.0) {
                return Err(CliError::Config(format!("tol: must be positive, got {}", self.tol())));
            }
            if self.max_iter() == 0 {
                return Err(CliError::Config("max_iter: must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// The keys `command` actually reads, with defaults filled in. For
    /// `verify` only the grid restrictions that were set are listed.
    pub fn resolved(&self, command: Command) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("command", command.to_string());
        match command {
            Command::Eval => {
                put("q", self.q().to_string());
                put("p", self.p().to_string());
                put("alpha", self.alpha().to_string());
                put("a", self.a().to_string());
                put("b", self.b().to_string());
                put("lattice_depth", self.lattice_depth().to_string());
                put("operator", self.operator().to_string());
                put("function", self.function().to_string());
            }
            Command::Solve => {
                put("q", self.q().to_string());
                put("p", self.p().to_string());
                put("alpha", self.alpha().to_string());
                put("a", self.a().to_string());
                put("b", self.b().to_string());
                put("zeta", self.zeta().to_string());
                put("rhs", self.rhs.clone().unwrap_or_default());
                put("r", self.r().to_string());
                if let Some(l) = self.lipschitz_a {
                    put("lipschitz_a", l.to_string());
                }
                put("lattice_depth", self.lattice_depth().to_string());
                put("tol", self.tol().to_string());
                put("max_iter", self.max_iter().to_string());
            }
            Command::Ml => {
                put("q", self.q().to_string());
                put("p", self.p().to_string());
                put("alpha", self.alpha().to_string());
                put("b", self.b().to_string());
                put("lattice_depth", self.lattice_depth().to_string());
                put("m_terms", self.m_terms().to_string());
            }
            Command::Verify => {
                for (k, v) in [("q", self.q), ("p", self.p), ("alpha", self.alpha)] {
                    if let Some(v) = v {
                        put(k, v.to_string());
                    }
                }
            }
        }
        out
    }
}

/// Renders pairs back into config-file syntax.
pub fn to_config_text(pairs: &BTreeMap<String, String>) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_defaults() {
        let c = RunConfig::parse("# example\nq = 0.3  # base\n\nrhs = t^2 + u\n").unwrap();
        assert_eq!(c.q, Some(0.3));
        assert_eq!(c.rhs.as_deref(), Some("t^2 + u"));
        assert_eq!(c.p(), 1.0);
        assert_eq!(c.lattice_depth(), 12);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["qq = 1", "q = 0.5\nq = 0.6", "q 0.5", "q =", "q = abc", "operator = K", "max_iter = -1"] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn field_level_validation() {
        let msg = |text: &str, cmd| match RunConfig::parse(text).unwrap().validate(cmd) {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg("q = 1.5", Command::Eval).starts_with("q:"));
        assert!(msg("alpha = 1", Command::Eval).starts_with("alpha:"));
        assert!(msg("rhs = u\na = 2", Command::Solve).starts_with("a:"));
        assert_eq!(msg("function = x +", Command::Eval), "function: 1:4: expected expression");
        assert!(msg("rhs = u\nr = 0", Command::Solve).starts_with("r:"));
        assert!(msg("command = ml", Command::Solve).starts_with("command:"));
        assert!(RunConfig::parse("alpha = 1").unwrap().validate(Command::Ml).is_ok());
    }

    #[test]
    fn resolved_round_trip() {
        let c = RunConfig::parse("rhs = u\nq = 0.1\nlipschitz_a = 1").unwrap();
        let pairs = c.resolved(Command::Solve);
        let again = RunConfig::parse(&to_config_text(&pairs)).unwrap();
        assert_eq!(again.resolved(Command::Solve), pairs);
    }
}
