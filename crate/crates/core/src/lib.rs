//! Core engine of `relic`: a satisfiability solver for the quantifier-free
//! theory of regular-expression membership constraints combined with linear
//! integer arithmetic over string length.
//!
//! The pipeline, bottom to top:
//!
//! - [`alphabet`] — configurable finite alphabets and interval character sets
//! - [`syntax`] / [`parser`] — the input language and its SMT-LIB-flavored
//!   concrete syntax
//! - [`nnf`] / [`cubes`] — Boolean normalization and lazy DNF cube
//!   enumeration
//! - [`semantics`] — reference membership evaluator, independent of the
//!   automata engine, used for model validation and oracles
//! - [`automata`] — regex compilation, complement, intersection, emptiness,
//!   fixed-length path queries, witness extraction, syntactic cost estimates
//! - [`semilinear`] — length abstractions as finite unions of arithmetic
//!   progressions, plus bound refinement against automata
//! - [`lia`] — an exact rational simplex with branch-and-bound for conjunctive
//!   linear integer arithmetic, supporting blocking clauses
//! - [`prefix_suffix`] — one-character first/last over-approximation used to
//!   refute joint constraints without building automata
//! - [`solver`] — the length-aware decision procedure, orchestrating the
//!   phases per cube
//! - [`harness`] — instance generation, a brute-force oracle, and the
//!   differential ablation runner

pub mod alphabet;
pub mod automata;
pub mod cubes;
pub mod harness;
pub mod lia;
pub mod nnf;
pub mod parser;
pub mod prefix_suffix;
pub mod semantics;
pub mod semilinear;
pub mod solver;
pub mod syntax;

pub use alphabet::Alphabet;
pub use parser::{parse_script, ParseError};
pub use solver::{Budgets, HeuristicConfig, Mode, Solver, SolverResult, Verdict};
pub use syntax::{Formula, RegexTerm, Script};
