//! Symbolic regression for PDE solutions via differentiable program
//! architectures.
//!
//! A context-free grammar of unary/binary operators and terminals is
//! expanded into a depth-bounded derivation tree in which every production
//! carries a trainable weight ([`graph::ProgramGraph`]). Fitting the tree to
//! samples of a PDE's solution ([`optimizer`]), pruning it depth-first by
//! weight magnitude ([`pruner`]), and reading off the surviving weighted
//! productions ([`symexpr`]) yields a compact closed-form approximation of
//! the solution, scored by the metrics in [`metrics`].
//!
//! [`datasets`] generates ground truth for the benchmark systems: analytic
//! diffusion, Kovasznay flow, Taylor-Green vortex, and diffusion-reaction
//! solutions, plus a finite-difference air-preheater reference solver.

pub mod autodiff;
pub mod datasets;
pub mod grammar;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod optimizer;
pub mod pruner;
pub mod symexpr;

pub use grammar::{parse_grammar, GrammarConfig, GrammarSpec, OperatorKind};
pub use graph::{count_parameters, EvalStats, ProgramGraph, Summand, SummandKind, WeightStore};
pub use matrix::Matrix;
pub use model::ModelFile;
