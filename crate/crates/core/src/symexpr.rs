//! Symbolic expression trees extracted from trained architectures.
//!
//! [`extract`] converts a graph plus weights into a [`SymExpr`]: each node
//! becomes the sum of its surviving summands, with zero-weight and pruned
//! edges omitted. Evaluation uses the same protected log/exp as the forward
//! pass, so an extracted expression reproduces the network it came from.
//! [`simplify`] applies mechanical rewrites only — constant folding,
//! flattening of nested sums and products, merging of scale factors, and
//! identity removal — no algebraic identities.

use std::collections::HashMap;
use std::fmt;

use crate::grammar::OperatorKind;
use crate::graph::{ProgramGraph, SummandKind, WeightStore};
use crate::ops;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Exp,
    Log,
    Pow2,
    Pow3,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Pow2 => "pow2",
            UnaryFn::Pow3 => "pow3",
        }
    }

    fn from_operator(op: OperatorKind) -> Self {
        match op {
            OperatorKind::Sin => UnaryFn::Sin,
            OperatorKind::Exp => UnaryFn::Exp,
            OperatorKind::Log => UnaryFn::Log,
            OperatorKind::Pow2 => UnaryFn::Pow2,
            OperatorKind::Pow3 => UnaryFn::Pow3,
            _ => panic!("{op:?} is not unary"),
        }
    }

    pub fn apply(self, a: f64) -> f64 {
        match self {
            UnaryFn::Sin => a.sin(),
            UnaryFn::Exp => ops::protected_exp(a),
            UnaryFn::Log => ops::protected_log(a),
            UnaryFn::Pow2 => a * a,
            UnaryFn::Pow3 => a * a * a,
        }
    }
}

/// Operator expression tree: constants, variables, protected unary
/// functions, n-ary sums and products, and scalar coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum SymExpr {
    Constant(f64),
    Variable(String),
    Unary(UnaryFn, Box<SymExpr>),
    Sum(Vec<SymExpr>),
    Product(Vec<SymExpr>),
    Scale(f64, Box<SymExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymExprError {
    UnknownVariable(String),
    ParseError(String),
}

impl fmt::Display for SymExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymExprError::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            SymExprError::ParseError(msg) => write!(f, "expression parse error: {msg}"),
        }
    }
}

impl std::error::Error for SymExprError {}

impl SymExpr {
    pub fn eval(&self, vars: &HashMap<String, f64>) -> Result<f64, SymExprError> {
        match self {
            SymExpr::Constant(c) => Ok(*c),
            SymExpr::Variable(name) => vars
                .get(name)
                .copied()
                .ok_or_else(|| SymExprError::UnknownVariable(name.clone())),
            SymExpr::Unary(f, a) => Ok(f.apply(a.eval(vars)?)),
            SymExpr::Sum(items) => {
                let mut acc = 0.0;
                for item in items {
                    acc += item.eval(vars)?;
                }
                Ok(acc)
            }
            SymExpr::Product(items) => {
                let mut acc = 1.0;
                for item in items {
                    acc *= item.eval(vars)?;
                }
                Ok(acc)
            }
            SymExpr::Scale(c, a) => Ok(c * a.eval(vars)?),
        }
    }

    /// Total number of nodes, a rough complexity measure.
    pub fn size(&self) -> usize {
        match self {
            SymExpr::Constant(_) | SymExpr::Variable(_) => 1,
            SymExpr::Unary(_, a) | SymExpr::Scale(_, a) => 1 + a.size(),
            SymExpr::Sum(items) | SymExpr::Product(items) => {
                1 + items.iter().map(SymExpr::size).sum::<usize>()
            }
        }
    }
}

/// Builds the expression of the surviving network: the weighted sum over
/// unpruned, nonzero-weight summands at each node. Coefficients keep full
/// double precision. An entirely pruned graph extracts to the constant 0.
pub fn extract(graph: &ProgramGraph, weights: &WeightStore) -> SymExpr {
    extract_node(graph, weights, 0)
}

fn extract_node(graph: &ProgramGraph, weights: &WeightStore, node_id: usize) -> SymExpr {
    let mut terms = Vec::new();
    for s in &graph.node(node_id).summands {
        let w = weights.effective(s.weight_index);
        if w == 0.0 {
            continue;
        }
        let term = match s.kind {
            SummandKind::Constant => SymExpr::Constant(w),
            SummandKind::Terminal(t) => SymExpr::Scale(
                w,
                Box::new(SymExpr::Variable(graph.spec().terminals()[t].clone())),
            ),
            SummandKind::Unary(op) => {
                let child = extract_node(graph, weights, s.children[0]);
                SymExpr::Scale(w, Box::new(SymExpr::Unary(UnaryFn::from_operator(op), Box::new(child))))
            }
            SummandKind::Binary(op) => {
                let a = extract_node(graph, weights, s.children[0]);
                let b = extract_node(graph, weights, s.children[1]);
                let inner = match op {
                    OperatorKind::Add => SymExpr::Sum(vec![a, b]),
                    OperatorKind::Multiply => SymExpr::Product(vec![a, b]),
                    _ => unreachable!(),
                };
                SymExpr::Scale(w, Box::new(inner))
            }
        };
        terms.push(term);
    }
    match terms.len() {
        0 => SymExpr::Constant(0.0),
        1 => terms.pop().unwrap(),
        _ => SymExpr::Sum(terms),
    }
}

/// Value-preserving mechanical simplification, iterated to a fixed point
/// (so the result is idempotent).
pub fn simplify(expr: &SymExpr) -> SymExpr {
    let mut current = expr.clone();
    for _ in 0..100 {
        let next = simplify_pass(&current);
        if next == current {
            return next;
        }
        current = next;
    }
    current
}

fn simplify_pass(expr: &SymExpr) -> SymExpr {
    match expr {
        SymExpr::Constant(_) | SymExpr::Variable(_) => expr.clone(),
        SymExpr::Unary(f, a) => {
            let a = simplify_pass(a);
            if let SymExpr::Constant(c) = a {
                SymExpr::Constant(f.apply(c))
            } else {
                SymExpr::Unary(*f, Box::new(a))
            }
        }
        SymExpr::Scale(c, a) => {
            if *c == 0.0 {
                return SymExpr::Constant(0.0);
            }
            let a = simplify_pass(a);
            match a {
                SymExpr::Constant(v) => SymExpr::Constant(c * v),
                SymExpr::Scale(inner_c, inner) => SymExpr::Scale(c * inner_c, inner),
                other if *c == 1.0 => other,
                other => SymExpr::Scale(*c, Box::new(other)),
            }
        }
        SymExpr::Sum(items) => {
            let mut terms = Vec::new();
            let mut constant = 0.0;
            for item in items {
                match simplify_pass(item) {
                    SymExpr::Sum(nested) => {
                        for n in nested {
                            match n {
                                SymExpr::Constant(c) => constant += c,
                                other => terms.push(other),
                            }
                        }
                    }
                    SymExpr::Constant(c) => constant += c,
                    other => terms.push(other),
                }
            }
            if constant != 0.0 {
                terms.push(SymExpr::Constant(constant));
            }
            match terms.len() {
                0 => SymExpr::Constant(0.0),
                1 => terms.pop().unwrap(),
                _ => SymExpr::Sum(terms),
            }
        }
        SymExpr::Product(items) => {
            let mut factors = Vec::new();
            let mut coeff = 1.0;
            for item in items {
                match simplify_pass(item) {
                    SymExpr::Product(nested) => {
                        for n in nested {
                            match n {
                                SymExpr::Constant(c) => coeff *= c,
                                SymExpr::Scale(c, inner) => {
                                    coeff *= c;
                                    factors.push(*inner);
                                }
                                other => factors.push(other),
                            }
                        }
                    }
                    SymExpr::Constant(c) => coeff *= c,
                    SymExpr::Scale(c, inner) => {
                        coeff *= c;
                        factors.push(*inner);
                    }
                    other => factors.push(other),
                }
            }
            if coeff == 0.0 {
                return SymExpr::Constant(0.0);
            }
            match factors.len() {
                0 => SymExpr::Constant(coeff),
                1 => {
                    let f = factors.pop().unwrap();
                    if coeff == 1.0 {
                        f
                    } else {
                        SymExpr::Scale(coeff, Box::new(f))
                    }
                }
                _ => {
                    let p = SymExpr::Product(factors);
                    if coeff == 1.0 {
                        p
                    } else {
                        SymExpr::Scale(coeff, Box::new(p))
                    }
                }
            }
        }
    }
}

/// Formats a coefficient to `precision` significant digits, trimming
/// trailing zeros.
fn fmt_coeff(v: f64, precision: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i64;
    let decimals = (precision as i64 - 1 - exponent).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Infix rendering with display-rounded coefficients (the stored expression
/// keeps full precision). Unambiguous: sums inside products are
/// parenthesized, `pow2`/`pow3` render as `(...)^2` / `(...)^3`.
pub fn render(expr: &SymExpr, precision: usize) -> String {
    render_term(expr, precision)
}

fn render_term(expr: &SymExpr, p: usize) -> String {
    match expr {
        SymExpr::Constant(c) => fmt_coeff(*c, p),
        SymExpr::Variable(name) => name.clone(),
        SymExpr::Unary(f, a) => render_unary(*f, a, p),
        SymExpr::Sum(items) => render_sum(items, p),
        SymExpr::Product(items) => render_product(items, p),
        SymExpr::Scale(c, a) => {
            if *c == -1.0 {
                format!("-{}", render_factor(a, p))
            } else {
                format!("{}*{}", fmt_coeff(*c, p), render_factor(a, p))
            }
        }
    }
}

fn render_unary(f: UnaryFn, a: &SymExpr, p: usize) -> String {
    match f {
        UnaryFn::Pow2 | UnaryFn::Pow3 => {
            let power = if f == UnaryFn::Pow2 { 2 } else { 3 };
            match a {
                SymExpr::Variable(name) => format!("{name}^{power}"),
                _ => format!("({})^{power}", render_term(a, p)),
            }
        }
        _ => format!("{}({})", f.name(), render_term(a, p)),
    }
}

fn render_sum(items: &[SymExpr], p: usize) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i == 0 {
            out.push_str(&render_term(item, p));
            continue;
        }
        match negated_if_negative(item) {
            Some(positive) => {
                out.push_str(" - ");
                out.push_str(&render_term(&positive, p));
            }
            None => {
                out.push_str(" + ");
                out.push_str(&render_term(item, p));
            }
        }
    }
    out
}

/// For display: a term with a negative leading coefficient, returned with
/// the sign stripped so the sum can join it with " - ".
fn negated_if_negative(expr: &SymExpr) -> Option<SymExpr> {
    match expr {
        SymExpr::Constant(c) if *c < 0.0 => Some(SymExpr::Constant(-c)),
        SymExpr::Scale(c, a) if *c < 0.0 => Some(SymExpr::Scale(-c, a.clone())),
        _ => None,
    }
}

fn render_product(items: &[SymExpr], p: usize) -> String {
    items.iter().map(|i| render_factor(i, p)).collect::<Vec<_>>().join("*")
}

/// Renders with parentheses when the expression binds looser than
/// multiplication.
fn render_factor(expr: &SymExpr, p: usize) -> String {
    match expr {
        SymExpr::Sum(_) | SymExpr::Scale(..) => format!("({})", render_term(expr, p)),
        SymExpr::Constant(c) if *c < 0.0 => format!("({})", fmt_coeff(*c, p)),
        _ => render_term(expr, p),
    }
}

/// Machine-readable prefix form with full-precision coefficients
/// (shortest-round-trip decimals, so parsing reproduces the exact f64).
pub fn to_prefix(expr: &SymExpr) -> String {
    match expr {
        SymExpr::Constant(c) => format!("{c}"),
        SymExpr::Variable(name) => name.clone(),
        SymExpr::Unary(f, a) => format!("({} {})", f.name(), to_prefix(a)),
        SymExpr::Sum(items) => {
            let inner: Vec<String> = items.iter().map(to_prefix).collect();
            format!("(sum {})", inner.join(" "))
        }
        SymExpr::Product(items) => {
            let inner: Vec<String> = items.iter().map(to_prefix).collect();
            format!("(product {})", inner.join(" "))
        }
        SymExpr::Scale(c, a) => format!("(scale {c} {})", to_prefix(a)),
    }
}

/// Parses the prefix form produced by [`to_prefix`].
pub fn from_prefix(text: &str) -> Result<SymExpr, SymExprError> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let expr = parse_expr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(SymExprError::ParseError(format!(
            "trailing tokens after expression: {:?}",
            &tokens[pos..]
        )));
    }
    Ok(expr)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Result<Vec<Token>, SymExprError> {
    let mut tokens = Vec::new();
    let mut atom = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
                tokens.push(if ch == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
            }
            c => atom.push(c),
        }
    }
    if !atom.is_empty() {
        tokens.push(Token::Atom(atom));
    }
    if tokens.is_empty() {
        return Err(SymExprError::ParseError("empty input".into()));
    }
    Ok(tokens)
}

fn parse_expr(tokens: &[Token], pos: &mut usize) -> Result<SymExpr, SymExprError> {
    match tokens.get(*pos) {
        None => Err(SymExprError::ParseError("unexpected end of input".into())),
        Some(Token::Close) => Err(SymExprError::ParseError("unexpected `)`".into())),
        Some(Token::Atom(a)) => {
            *pos += 1;
            if let Ok(v) = a.parse::<f64>() {
                Ok(SymExpr::Constant(v))
            } else {
                Ok(SymExpr::Variable(a.clone()))
            }
        }
        Some(Token::Open) => {
            *pos += 1;
            let head = match tokens.get(*pos) {
                Some(Token::Atom(a)) => a.clone(),
                other => {
                    return Err(SymExprError::ParseError(format!(
                        "expected operator after `(`, found {other:?}"
                    )))
                }
            };
            *pos += 1;
            let expr = match head.as_str() {
                "sin" | "exp" | "log" | "pow2" | "pow3" => {
                    let f = match head.as_str() {
                        "sin" => UnaryFn::Sin,
                        "exp" => UnaryFn::Exp,
                        "log" => UnaryFn::Log,
                        "pow2" => UnaryFn::Pow2,
                        _ => UnaryFn::Pow3,
                    };
                    let arg = parse_expr(tokens, pos)?;
                    SymExpr::Unary(f, Box::new(arg))
                }
                "sum" | "product" => {
                    let mut items = Vec::new();
                    while !matches!(tokens.get(*pos), Some(Token::Close) | None) {
                        items.push(parse_expr(tokens, pos)?);
                    }
                    if head == "sum" {
                        SymExpr::Sum(items)
                    } else {
                        SymExpr::Product(items)
                    }
                }
                "scale" => {
                    let c = match tokens.get(*pos) {
                        Some(Token::Atom(a)) => a.parse::<f64>().map_err(|_| {
                            SymExprError::ParseError(format!("scale expects a number, found `{a}`"))
                        })?,
                        other => {
                            return Err(SymExprError::ParseError(format!(
                                "scale expects a number, found {other:?}"
                            )))
                        }
                    };
                    *pos += 1;
                    let arg = parse_expr(tokens, pos)?;
                    SymExpr::Scale(c, Box::new(arg))
                }
                other => {
                    return Err(SymExprError::ParseError(format!("unknown operator `{other}`")))
                }
            };
            match tokens.get(*pos) {
                Some(Token::Close) => {
                    *pos += 1;
                    Ok(expr)
                }
                other => Err(SymExprError::ParseError(format!("expected `)`, found {other:?}"))),
            }
        }
    }
}
