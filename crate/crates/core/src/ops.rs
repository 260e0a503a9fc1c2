//! Scalar semantics of the primitive operators.
//!
//! The forward evaluator, the gradient computation, and symbolic-expression
//! evaluation all share these definitions, so an extracted expression is
//! guaranteed to reproduce the network it came from, guards included.

use crate::grammar::OperatorKind;

/// Additive guard inside the protected logarithm: `log(a)` is evaluated as
/// `ln(|a| + LOG_EPSILON)` so negative and zero arguments stay finite.
pub const LOG_EPSILON: f64 = 1e-12;

/// The argument of `exp` is clamped to `[-EXP_CLAMP, EXP_CLAMP]`.
pub const EXP_CLAMP: f64 = 30.0;

pub fn protected_log(a: f64) -> f64 {
    (a.abs() + LOG_EPSILON).ln()
}

pub fn protected_exp(a: f64) -> f64 {
    a.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// Sign with `sign(0) = 0`, used both for the derivative of `|a|` inside the
/// protected log and for the L1 subgradient.
pub fn sign0(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Value of a unary operator. Panics on binary kinds.
pub fn unary_value(op: OperatorKind, a: f64) -> f64 {
    match op {
        OperatorKind::Sin => a.sin(),
        OperatorKind::Exp => protected_exp(a),
        OperatorKind::Log => protected_log(a),
        OperatorKind::Pow2 => a * a,
        OperatorKind::Pow3 => a * a * a,
        _ => panic!("{op:?} is not unary"),
    }
}

/// Derivative of a unary operator with respect to its argument.
///
/// `exp` differentiates to its clamped value inside the clamp and to 0
/// outside; `log` to `sign(a) / (|a| + eps)`.
pub fn unary_derivative(op: OperatorKind, a: f64) -> f64 {
    match op {
        OperatorKind::Sin => a.cos(),
        OperatorKind::Exp => {
            if a.abs() <= EXP_CLAMP {
                a.exp()
            } else {
                0.0
            }
        }
        OperatorKind::Log => sign0(a) / (a.abs() + LOG_EPSILON),
        OperatorKind::Pow2 => 2.0 * a,
        OperatorKind::Pow3 => 3.0 * a * a,
        _ => panic!("{op:?} is not unary"),
    }
}

/// Value of a binary operator. Panics on unary kinds.
pub fn binary_value(op: OperatorKind, a: f64, b: f64) -> f64 {
    match op {
        OperatorKind::Add => a + b,
        OperatorKind::Multiply => a * b,
        _ => panic!("{op:?} is not binary"),
    }
}

/// Partial derivatives `(d/da, d/db)` of a binary operator.
pub fn binary_partials(op: OperatorKind, a: f64, b: f64) -> (f64, f64) {
    match op {
        OperatorKind::Add => (1.0, 1.0),
        OperatorKind::Multiply => (b, a),
        _ => panic!("{op:?} is not binary"),
    }
}
