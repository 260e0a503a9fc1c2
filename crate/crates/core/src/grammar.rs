//! Operator alphabet and grammar configuration.
//!
//! A [`GrammarSpec`] fixes the production set from which program
//! architectures are derived: an ordered set of unary operators, an ordered
//! set of binary operators, the input-variable terminals, and an optional
//! constant terminal. Architectures replicate every production at every
//! internal node, so the spec alone determines the parameter count at a
//! given depth.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The fixed operator vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Sin,
    Exp,
    Log,
    Pow2,
    Pow3,
    Add,
    Multiply,
}

impl OperatorKind {
    pub fn arity(self) -> usize {
        match self {
            OperatorKind::Add | OperatorKind::Multiply => 2,
            _ => 1,
        }
    }

    pub fn is_unary(self) -> bool {
        self.arity() == 1
    }

    pub fn is_binary(self) -> bool {
        self.arity() == 2
    }

    /// Canonical lowercase name used in configs and model files.
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Sin => "sin",
            OperatorKind::Exp => "exp",
            OperatorKind::Log => "log",
            OperatorKind::Pow2 => "pow2",
            OperatorKind::Pow3 => "pow3",
            OperatorKind::Add => "add",
            OperatorKind::Multiply => "multiply",
        }
    }

    /// Case-insensitive token lookup. `"+"`/`"add"` and `"*"`/`"mul"`/
    /// `"multiply"` are accepted aliases.
    pub fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_lowercase().as_str() {
            "sin" => Some(OperatorKind::Sin),
            "exp" => Some(OperatorKind::Exp),
            "log" => Some(OperatorKind::Log),
            "pow2" => Some(OperatorKind::Pow2),
            "pow3" => Some(OperatorKind::Pow3),
            "add" | "+" => Some(OperatorKind::Add),
            "multiply" | "mul" | "*" => Some(OperatorKind::Multiply),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrammarError {
    UnknownOperator(String),
    /// Operator listed under the wrong arity section, e.g. `add` as unary.
    WrongArity { token: String, expected: usize },
    DuplicateOperator(String),
    DuplicateTerminal(String),
    EmptyTerminals,
    InvalidTerminal(String),
    Parse(String),
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarError::UnknownOperator(t) => write!(f, "unknown operator `{t}`"),
            GrammarError::WrongArity { token, expected } => {
                write!(f, "operator `{token}` does not have arity {expected}")
            }
            GrammarError::DuplicateOperator(t) => write!(f, "duplicate operator `{t}`"),
            GrammarError::DuplicateTerminal(t) => write!(f, "duplicate terminal `{t}`"),
            GrammarError::EmptyTerminals => write!(f, "terminal list is empty"),
            GrammarError::InvalidTerminal(t) => write!(f, "invalid terminal name `{t}`"),
            GrammarError::Parse(msg) => write!(f, "grammar parse error: {msg}"),
        }
    }
}

impl std::error::Error for GrammarError {}

/// Raw, unvalidated grammar section as it appears in config documents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrammarConfig {
    pub unary: Vec<String>,
    pub binary: Vec<String>,
    pub terminals: Vec<String>,
    #[serde(default)]
    pub constant: bool,
}

/// Validated operator alphabet. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GrammarConfig", into = "GrammarConfig")]
pub struct GrammarSpec {
    unary: Vec<OperatorKind>,
    binary: Vec<OperatorKind>,
    terminals: Vec<String>,
    include_constant: bool,
}

impl GrammarSpec {
    pub fn new(
        unary: Vec<OperatorKind>,
        binary: Vec<OperatorKind>,
        terminals: Vec<String>,
        include_constant: bool,
    ) -> Result<Self, GrammarError> {
        let mut seen = Vec::new();
        for &op in unary.iter() {
            if !op.is_unary() {
                return Err(GrammarError::WrongArity { token: op.name().into(), expected: 1 });
            }
            if seen.contains(&op) {
                return Err(GrammarError::DuplicateOperator(op.name().into()));
            }
            seen.push(op);
        }
        for &op in binary.iter() {
            if !op.is_binary() {
                return Err(GrammarError::WrongArity { token: op.name().into(), expected: 2 });
            }
            if seen.contains(&op) {
                return Err(GrammarError::DuplicateOperator(op.name().into()));
            }
            seen.push(op);
        }
        if terminals.is_empty() {
            return Err(GrammarError::EmptyTerminals);
        }
        for (i, name) in terminals.iter().enumerate() {
            validate_terminal_name(name)?;
            if terminals[..i].contains(name) {
                return Err(GrammarError::DuplicateTerminal(name.clone()));
            }
        }
        Ok(GrammarSpec { unary, binary, terminals, include_constant })
    }

    pub fn unary(&self) -> &[OperatorKind] {
        &self.unary
    }

    pub fn binary(&self) -> &[OperatorKind] {
        &self.binary
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn include_constant(&self) -> bool {
        self.include_constant
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    /// Number of weighted summands at every internal node:
    /// `|unary| + |binary| + |terminals| + (1 if constant)`.
    pub fn summands_per_node(&self) -> usize {
        self.unary.len() + self.binary.len() + self.terminals.len() + usize::from(self.include_constant)
    }

    /// Summand count of a leaf node (terminals and constant only).
    pub fn leaf_summands(&self) -> usize {
        self.terminals.len() + usize::from(self.include_constant)
    }
}

/// Terminal names must be usable as bare symbols in rendered and
/// machine-readable expressions, so anything that could be read as a number,
/// an operator, or structural syntax is rejected.
fn validate_terminal_name(name: &str) -> Result<(), GrammarError> {
    let reject = name.is_empty()
        || name.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"'))
        || name.parse::<f64>().is_ok()
        || OperatorKind::from_token(name).is_some()
        || matches!(name.to_ascii_lowercase().as_str(), "sum" | "product" | "scale");
    if reject {
        Err(GrammarError::InvalidTerminal(name.to_string()))
    } else {
        Ok(())
    }
}

impl TryFrom<GrammarConfig> for GrammarSpec {
    type Error = GrammarError;

    fn try_from(cfg: GrammarConfig) -> Result<Self, GrammarError> {
        let mut unary = Vec::new();
        for token in &cfg.unary {
            let op = OperatorKind::from_token(token)
                .ok_or_else(|| GrammarError::UnknownOperator(token.clone()))?;
            if !op.is_unary() {
                return Err(GrammarError::WrongArity { token: token.clone(), expected: 1 });
            }
            unary.push(op);
        }
        let mut binary = Vec::new();
        for token in &cfg.binary {
            let op = OperatorKind::from_token(token)
                .ok_or_else(|| GrammarError::UnknownOperator(token.clone()))?;
            if !op.is_binary() {
                return Err(GrammarError::WrongArity { token: token.clone(), expected: 2 });
            }
            binary.push(op);
        }
        GrammarSpec::new(unary, binary, cfg.terminals, cfg.constant)
    }
}

impl From<GrammarSpec> for GrammarConfig {
    fn from(spec: GrammarSpec) -> GrammarConfig {
        GrammarConfig {
            unary: spec.unary.iter().map(|op| op.name().to_string()).collect(),
            binary: spec.binary.iter().map(|op| op.name().to_string()).collect(),
            terminals: spec.terminals,
            constant: spec.include_constant,
        }
    }
}

/// Parses a JSON grammar document into a validated spec.
pub fn parse_grammar(text: &str) -> Result<GrammarSpec, GrammarError> {
    serde_json::from_str::<GrammarSpec>(text).map_err(|e| GrammarError::Parse(e.to_string()))
}
