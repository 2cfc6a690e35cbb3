//! Python bindings: solve scripts, generate instances, run the brute-force
//! oracle, and validate models from Python.
//!
//! The module mirrors the command-line surface: scripts are SMT-LIB text in
//! the supported fragment, heuristics and budgets are keyword arguments, and
//! unsupported terms yield an `unknown` outcome rather than an exception.

// The pyfunction macro expansion trips this lint on its own glue code.
#![allow(clippy::useless_conversion)]

use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use relic_core::alphabet::Alphabet;
use relic_core::harness::{self, GenSpec, OracleOutcome};
use relic_core::parser::parse_script;
use relic_core::solver::{Budgets, HeuristicConfig, Mode, Model, Solver, Verdict};
use std::collections::BTreeMap;
use std::time::Duration;

fn alphabet_from(spec: Option<&str>) -> PyResult<Alphabet> {
    match spec {
        None | Some("ascii-printable") => Ok(Alphabet::ascii_printable()),
        Some(s) => match s.strip_prefix("custom:") {
            Some(chars) => Alphabet::from_chars(chars.chars())
                .map_err(|e| PyValueError::new_err(e.to_string())),
            None => Err(PyValueError::new_err(format!(
                "unrecognized alphabet `{s}` (expected `ascii-printable` or `custom:<chars>`)"
            ))),
        },
    }
}

/// Outcome of one solver run.
#[pyclass(frozen)]
pub struct SolveOutcome {
    /// `"sat"`, `"unsat"`, or `"unknown"`.
    #[pyo3(get)]
    pub verdict: String,
    /// String-variable assignments when sat.
    #[pyo3(get)]
    pub strings: Option<BTreeMap<String, String>>,
    /// Integer-variable assignments when sat.
    #[pyo3(get)]
    pub ints: Option<BTreeMap<String, BigInt>>,
    /// Search counters (automata built, intersections, length models, ...).
    #[pyo3(get)]
    pub stats: BTreeMap<String, u64>,
    /// Why the solver answered unknown, when it did.
    #[pyo3(get)]
    pub unknown_reason: Option<String>,
}

#[pymethods]
impl SolveOutcome {
    fn __repr__(&self) -> String {
        match &self.strings {
            Some(strings) => format!(
                "SolveOutcome(verdict='{}', strings={:?})",
                self.verdict, strings
            ),
            None => format!("SolveOutcome(verdict='{}')", self.verdict),
        }
    }
}

fn outcome_from(result: relic_core::solver::SolverResult) -> SolveOutcome {
    let mut stats = BTreeMap::new();
    stats.insert("automata_built".to_string(), result.stats.automata_built);
    stats.insert("intersections".to_string(), result.stats.intersections);
    stats.insert("length_models".to_string(), result.stats.length_models);
    stats.insert("cubes".to_string(), result.stats.cubes_explored);
    stats.insert(
        "heuristic_fired".to_string(),
        result.stats.heuristic_fired(),
    );
    stats.insert("ps_refutations".to_string(), result.stats.ps_refutations);
    stats.insert("refinements".to_string(), result.stats.refinements);
    let (strings, ints) = match result.model {
        Some(Model { strings, ints }) => (Some(strings), Some(ints)),
        None => (None, None),
    };
    SolveOutcome {
        verdict: result.verdict.to_string(),
        strings,
        ints,
        stats,
        unknown_reason: result.stats.unknown_reason,
    }
}

/// Decides a script in the supported fragment.
#[pyfunction]
#[pyo3(signature = (script, *, mode = "lazy", length_syntax = true,
       lazy_intersection = true, prefix_suffix = true, length_refine = true,
       arith_integration = true, max_cubes = 4096, max_states = 1_000_000,
       max_lia_nodes = 100_000, max_length_models = 10_000,
       timeout_secs = 20.0, alphabet = None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    script: &str,
    mode: &str,
    length_syntax: bool,
    lazy_intersection: bool,
    prefix_suffix: bool,
    length_refine: bool,
    arith_integration: bool,
    max_cubes: usize,
    max_states: usize,
    max_lia_nodes: u64,
    max_length_models: u64,
    timeout_secs: f64,
    alphabet: Option<&str>,
) -> PyResult<SolveOutcome> {
    let alphabet = alphabet_from(alphabet)?;
    let parsed = match parse_script(script, &alphabet) {
        Ok(s) => s,
        Err(e) if e.is_unsupported() => {
            return Ok(SolveOutcome {
                verdict: Verdict::Unknown.to_string(),
                strings: None,
                ints: None,
                stats: BTreeMap::new(),
                unknown_reason: Some(e.to_string()),
            })
        }
        Err(e) => return Err(PyValueError::new_err(e.to_string())),
    };
    let cfg = HeuristicConfig {
        length_abstraction_from_syntax: length_syntax,
        lazy_cost_ordered_intersection: lazy_intersection,
        prefix_suffix,
        automata_length_refinement: length_refine,
        arithmetic_integration: arith_integration,
    };
    let mode = match mode {
        "lazy" => Mode::Lazy,
        "eager" => Mode::Eager,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be 'lazy' or 'eager', got '{other}'"
            )))
        }
    };
    if timeout_secs <= 0.0 {
        return Err(PyValueError::new_err("timeout_secs must be positive"));
    }
    let budgets = Budgets {
        max_cubes,
        max_states,
        max_lia_nodes,
        max_length_models,
        timeout: Some(Duration::from_secs_f64(timeout_secs)),
    };
    let solver = Solver::new(&parsed.decls, &alphabet)
        .with_config(cfg)
        .with_mode(mode)
        .with_budgets(budgets);
    Ok(outcome_from(solver.solve_script(&parsed)))
}

/// Evaluates a script under explicit assignments with the reference
/// semantics, independently of the solving engine.
#[pyfunction]
#[pyo3(signature = (script, strings, ints = None, alphabet = None))]
fn validate(
    script: &str,
    strings: BTreeMap<String, String>,
    ints: Option<BTreeMap<String, BigInt>>,
    alphabet: Option<&str>,
) -> PyResult<bool> {
    let alphabet = alphabet_from(alphabet)?;
    let parsed =
        parse_script(script, &alphabet).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let model = Model {
        strings,
        ints: ints.unwrap_or_default(),
    };
    Ok(relic_core::solver::validate_model(
        &parsed.formula(),
        &model,
        &parsed.decls,
    ))
}

/// Brute-force oracle verdict up to a word-length bound: `"sat"` with a
/// witness (string and integer assignments), or `"unsat-up-to-bound"`.
#[pyfunction]
#[pyo3(signature = (script, max_len = 8, alphabet = None))]
#[allow(clippy::type_complexity)]
fn oracle_check(
    script: &str,
    max_len: usize,
    alphabet: Option<&str>,
) -> PyResult<(
    String,
    Option<BTreeMap<String, String>>,
    Option<BTreeMap<String, BigInt>>,
)> {
    let alphabet = alphabet_from(alphabet)?;
    let parsed =
        parse_script(script, &alphabet).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let verdict = harness::oracle(&parsed, max_len, &alphabet)
        .map_err(|_| PyValueError::new_err("oracle enumeration budget exceeded"))?;
    Ok(match verdict.outcome {
        OracleOutcome::Sat => match verdict.witness {
            Some(m) => ("sat".to_string(), Some(m.strings), Some(m.ints)),
            None => ("sat".to_string(), None, None),
        },
        OracleOutcome::UnsatUpToBound => ("unsat-up-to-bound".to_string(), None, None),
    })
}

/// Generates random scripts in the supported fragment, deterministically
/// from the seed.
#[pyfunction]
#[pyo3(signature = (seed, count, *, alphabet_size = 3, max_regex_size = 8,
       max_regexes_per_var = 3, max_string_vars = 2,
       complement_probability = 0.25, max_arith_atoms = 2, coeff_bound = 5))]
#[allow(clippy::too_many_arguments)]
fn generate(
    seed: u64,
    count: usize,
    alphabet_size: u8,
    max_regex_size: usize,
    max_regexes_per_var: usize,
    max_string_vars: usize,
    complement_probability: f64,
    max_arith_atoms: usize,
    coeff_bound: i64,
) -> PyResult<Vec<String>> {
    let spec = GenSpec {
        seed,
        alphabet_size: alphabet_size.clamp(1, 4),
        max_regex_size: max_regex_size.max(1),
        max_regexes_per_var: max_regexes_per_var.clamp(1, 5),
        max_string_vars: max_string_vars.clamp(1, 3),
        complement_probability: complement_probability.clamp(0.0, 1.0),
        max_arith_atoms,
        coeff_bound: coeff_bound.max(1),
    };
    Ok(harness::generate(&spec, count))
}

/// The alphabet the generator uses for a given size, as a string.
#[pyfunction]
#[pyo3(signature = (alphabet_size = 3))]
fn generator_alphabet(alphabet_size: u8) -> String {
    let size = alphabet_size.clamp(1, 4);
    format!(
        "custom:{}",
        (0..size).map(|i| char::from(b'a' + i)).collect::<String>()
    )
}

#[pymodule]
fn relic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SolveOutcome>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(generator_alphabet, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
