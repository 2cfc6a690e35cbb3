//! Instance generation, a brute-force oracle, and the differential runner.
//!
//! The generator produces random scripts in the supported fragment,
//! deterministically from a seed, evenly split between "simple" instances
//! (one membership predicate per variable) and "complex" ones (several,
//! possibly negated). The oracle enumerates all words up to a bound using the
//! reference membership evaluator (never the automata engine) and decides
//! residual arithmetic with the arithmetic core. The differential runner
//! solves every instance under several heuristic configurations, counts
//! disagreements with the oracle and model-validation failures, and renders
//! an ablation table plus a machine-readable CSV.

use crate::alphabet::Alphabet;
use crate::lia::{self, LiaLimits, LiaResult};
use crate::nnf;
use crate::parser::parse_script;
use crate::semantics::{self, words_up_to};
use crate::solver::{validate_model, Budgets, HeuristicConfig, Mode, Model, Solver, Verdict};
use crate::syntax::{ArithAtom, Atom, Formula, IntTerm, RegexTerm, Script, ScriptPrinter, StrVar};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Bounds for random instance generation.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub seed: u64,
    /// Alphabet size, 1..=4 (characters 'a', 'b', ...).
    pub alphabet_size: u8,
    /// Regex AST node bound.
    pub max_regex_size: usize,
    /// Regex membership predicates per variable in complex instances, 1..=5.
    pub max_regexes_per_var: usize,
    /// String variables per instance, 1..=3.
    pub max_string_vars: usize,
    /// Probability of a complement node while generating a regex.
    pub complement_probability: f64,
    /// Arithmetic atoms per instance.
    pub max_arith_atoms: usize,
    /// Coefficient magnitude bound in arithmetic atoms.
    pub coeff_bound: i64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            alphabet_size: 3,
            max_regex_size: 8,
            max_regexes_per_var: 3,
            max_string_vars: 2,
            complement_probability: 0.25,
            max_arith_atoms: 2,
            coeff_bound: 5,
        }
    }
}

impl GenSpec {
    pub fn alphabet(&self) -> Alphabet {
        let chars = (0..self.alphabet_size).map(|i| char::from(b'a' + i));
        Alphabet::from_chars(chars).expect("alphabet size is at least 1")
    }
}

fn random_regex(rng: &mut ChaCha8Rng, spec: &GenSpec, size: usize) -> RegexTerm {
    if size <= 1 {
        let len = rng.gen_range(0..=3usize);
        let w: String = (0..len)
            .map(|_| char::from(b'a' + rng.gen_range(0..spec.alphabet_size)))
            .collect();
        return RegexTerm::Literal(w);
    }
    if rng.gen_bool(spec.complement_probability) {
        return RegexTerm::complement(random_regex(rng, spec, size - 1));
    }
    match rng.gen_range(0..3) {
        0 => {
            let left = rng.gen_range(1..size);
            RegexTerm::concat(
                random_regex(rng, spec, left),
                random_regex(rng, spec, size - left),
            )
        }
        1 => {
            let left = rng.gen_range(1..size);
            RegexTerm::union(
                random_regex(rng, spec, left),
                random_regex(rng, spec, size - left),
            )
        }
        _ => RegexTerm::star(random_regex(rng, spec, size - 1)),
    }
}

fn random_len_term(rng: &mut ChaCha8Rng, spec: &GenSpec, nvars: usize, use_int: bool) -> IntTerm {
    let mut terms: Vec<IntTerm> = Vec::new();
    for v in 0..nvars {
        if rng.gen_bool(0.6) {
            let coeff = rng.gen_range(1..=spec.coeff_bound);
            let len = IntTerm::Len(StrVar(v as u32));
            terms.push(if coeff == 1 {
                len
            } else {
                IntTerm::scalar_mul(coeff, len)
            });
        }
    }
    if use_int && rng.gen_bool(0.5) {
        let coeff = rng.gen_range(-spec.coeff_bound..=spec.coeff_bound);
        if coeff != 0 {
            terms.push(IntTerm::scalar_mul(
                coeff,
                IntTerm::Var(crate::syntax::IntVar(0)),
            ));
        }
    }
    if terms.is_empty() {
        terms.push(IntTerm::Len(StrVar(rng.gen_range(0..nvars as u32))));
    }
    let mut acc = terms.remove(0);
    for t in terms {
        acc = IntTerm::sum(acc, t);
    }
    acc
}

/// Generates `count` scripts, deterministically from the seed. Instances
/// alternate between the simple shape (one positive membership predicate per
/// variable) and the complex shape (2..=max predicates, possibly negated),
/// with a sprinkling of arithmetic atoms and occasional disjunctions.
pub fn generate(spec: &GenSpec, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(count);
    for instance in 0..count {
        let nvars = rng.gen_range(1..=spec.max_string_vars.max(1));
        let use_int = rng.gen_bool(0.3);
        let complex = instance % 2 == 1;
        let mut lines = Vec::new();
        for v in 0..nvars {
            lines.push(format!("(declare-const X{v} String)"));
        }
        if use_int {
            lines.push("(declare-const n Int)".to_string());
        }
        let names: Vec<String> = (0..nvars).map(|v| format!("X{v}")).collect();

        let mut membership: Vec<(usize, String)> = Vec::new();
        for (v, _) in names.iter().enumerate() {
            let predicates = if complex {
                rng.gen_range(2..=spec.max_regexes_per_var.max(2))
            } else {
                1
            };
            for _ in 0..predicates {
                let size = rng.gen_range(1..=spec.max_regex_size);
                let re = random_regex(&mut rng, spec, size);
                let negate = complex && rng.gen_bool(0.3);
                let atom = format!("(str.in_re {} {})", names[v], re);
                membership.push((
                    v,
                    if negate {
                        format!("(not {atom})")
                    } else {
                        atom
                    },
                ));
            }
        }
        // Occasionally wrap two predicates in a disjunction to exercise the
        // Boolean layer.
        let mut asserts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < membership.len() {
            if membership.len() - i >= 2 && rng.gen_bool(0.2) {
                asserts.push(format!("(or {} {})", membership[i].1, membership[i + 1].1));
                i += 2;
            } else {
                asserts.push(membership[i].1.clone());
                i += 1;
            }
        }
        let n_arith = rng.gen_range(0..=spec.max_arith_atoms);
        for _ in 0..n_arith {
            let lhs = random_len_term(&mut rng, spec, nvars, use_int);
            let constant = rng.gen_range(-2 * spec.coeff_bound..=4 * spec.coeff_bound);
            let op = match rng.gen_range(0..3) {
                0 => "=",
                1 => "<",
                _ => "<=",
            };
            let decls = fake_decls(nvars, use_int);
            let printer = ScriptPrinter::new(&decls);
            asserts.push(format!(
                "({op} {} {})",
                printer.int_term(&lhs),
                format_int(constant)
            ));
        }
        for a in &asserts {
            lines.push(format!("(assert {a})"));
        }
        lines.push("(check-sat)".to_string());
        out.push(lines.join("\n") + "\n");
    }
    out
}

/// Intersection-heavy unsat instances: per variable, two cheap regexes with
/// an empty pairwise intersection that the prefix/suffix check cannot see
/// (shared first and last characters, disjoint lengths by parity), plus one
/// syntactically expensive regex listed first. Cost ordering finds the empty
/// cheap pair without ever compiling the expensive one.
pub fn generate_intersection_heavy(seed: u64, count: usize, mixed: bool) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GenSpec::default();
    let mut out = Vec::with_capacity(count);
    for instance in 0..count {
        if mixed && instance % 10 >= 7 {
            // A slice of ordinary random instances keeps the corpus honest.
            let sub = GenSpec {
                seed: rng.gen(),
                ..GenSpec::default()
            };
            out.push(generate(&sub, 1).pop().unwrap());
            continue;
        }
        let c = char::from(b'a' + rng.gen_range(0..3u8));
        // cheap pair: c(xc)* has odd lengths, (cc)+ even nonzero lengths;
        // both start and end with c, neither is nullable.
        let x = char::from(b'a' + rng.gen_range(0..3u8));
        let cheap_a = format!("(re.++ (str.to_re \"{c}\") (re.* (str.to_re \"{x}{c}\")))");
        let cheap_b = format!("(re.++ (str.to_re \"{c}{c}\") (re.* (str.to_re \"{c}{c}\")))");
        // expensive: complement of a union of longer literals.
        let lit = |rng: &mut ChaCha8Rng| -> String {
            (0..6)
                .map(|_| char::from(b'a' + rng.gen_range(0..3u8)))
                .collect()
        };
        let (l1, l2, l3) = (lit(&mut rng), lit(&mut rng), lit(&mut rng));
        let expensive = format!(
            "(re.comp (re.union (str.to_re \"{l1}\") (re.union (str.to_re \"{l2}\") (re.++ (str.to_re \"{l3}\") (re.* (str.to_re \"{l1}\"))))))"
        );
        let mut lines = vec!["(declare-const X0 String)".to_string()];
        lines.push(format!("(assert (str.in_re X0 {expensive}))"));
        lines.push(format!("(assert (str.in_re X0 {cheap_a}))"));
        lines.push(format!("(assert (str.in_re X0 {cheap_b}))"));
        if rng.gen_bool(0.5) {
            lines.push(format!("(assert (< {} (str.len X0)))", rng.gen_range(0..3)));
        }
        lines.push("(check-sat)".to_string());
        out.push(lines.join("\n") + "\n");
        let _ = &spec;
    }
    out
}

fn fake_decls(nvars: usize, use_int: bool) -> crate::syntax::Declarations {
    let mut decls = crate::syntax::Declarations::default();
    for v in 0..nvars {
        decls
            .declare(&format!("X{v}"), crate::syntax::Sort::Str)
            .unwrap();
    }
    if use_int {
        decls.declare("n", crate::syntax::Sort::Int).unwrap();
    }
    decls
}

fn format_int(v: i64) -> String {
    if v < 0 {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Sat,
    UnsatUpToBound,
}

#[derive(Debug, Clone)]
pub struct OracleVerdict {
    pub outcome: OracleOutcome,
    pub witness: Option<Model>,
    pub bound: usize,
}

/// Enumeration would exceed the budget; the instance is excluded from
/// differential scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudgetExceeded;

/// Brute-force ground truth: enumerates assignments of words of length at
/// most `max_len` to the string variables and decides residual arithmetic
/// with the arithmetic core. Membership is decided by the reference
/// structural evaluator only.
///
/// Words with the same membership pattern across the formula's regex atoms
/// and the same length are interchangeable, so only one representative per
/// equivalence class is enumerated; the witness is the lexicographically
/// least representative.
pub fn oracle(
    script: &Script,
    max_len: usize,
    alphabet: &Alphabet,
) -> Result<OracleVerdict, OracleBudgetExceeded> {
    let f = script.formula();
    let chars: Vec<char> = alphabet.chars();
    let words = words_up_to(&chars, max_len);

    // Distinct regex atoms per variable, in first-appearance order.
    let mut atoms_of: BTreeMap<StrVar, Vec<RegexTerm>> = BTreeMap::new();
    f.visit_atoms(&mut |a| {
        if let Atom::InRe(v, re) = a {
            let entry = atoms_of.entry(*v).or_default();
            if !entry.contains(re) {
                entry.push(re.clone());
            }
        }
    });
    let str_vars: Vec<StrVar> = script.decls.str_vars().collect();
    if words.len().saturating_mul(str_vars.len().max(1)) > 2_000_000 {
        return Err(OracleBudgetExceeded);
    }

    // Equivalence classes per variable: (membership bits, length) -> least word.
    let mut classes_of: BTreeMap<StrVar, Vec<String>> = BTreeMap::new();
    for v in &str_vars {
        let atoms = atoms_of.get(v).cloned().unwrap_or_default();
        let mut seen: BTreeMap<(Vec<bool>, usize), usize> = BTreeMap::new();
        let mut classes: Vec<String> = Vec::new();
        for w in &words {
            let bits: Vec<bool> = atoms
                .iter()
                .map(|re| semantics::word_matches(re, w))
                .collect();
            let key = (bits, w.chars().count());
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                e.insert(classes.len());
                classes.push(w.clone());
            }
        }
        classes_of.insert(*v, classes);
    }

    // Cartesian walk over class representatives, shortest-first by
    // construction order of `words_up_to`.
    let lia_limits = LiaLimits::default();
    let nvars = str_vars.len();
    let mut selection = vec![0usize; nvars];
    loop {
        // Assemble the candidate word assignment.
        let mut strings: BTreeMap<StrVar, String> = BTreeMap::new();
        for (i, v) in str_vars.iter().enumerate() {
            strings.insert(*v, classes_of[v][selection[i]].clone());
        }
        // Evaluate the formula with regex atoms fixed and arithmetic residual.
        if let Some(model) = residual_sat(&f, script, &strings, &lia_limits) {
            return Ok(OracleVerdict {
                outcome: OracleOutcome::Sat,
                witness: Some(model),
                bound: max_len,
            });
        }
        // Advance.
        let mut pos = 0;
        loop {
            if pos >= nvars {
                return Ok(OracleVerdict {
                    outcome: OracleOutcome::UnsatUpToBound,
                    witness: None,
                    bound: max_len,
                });
            }
            selection[pos] += 1;
            if selection[pos] < classes_of[&str_vars[pos]].len() {
                break;
            }
            selection[pos] = 0;
            pos += 1;
        }
        if nvars == 0 {
            // No string variables: single iteration.
            return Ok(OracleVerdict {
                outcome: OracleOutcome::UnsatUpToBound,
                witness: None,
                bound: max_len,
            });
        }
    }
}

/// With the string variables fixed, decides whether the residual formula
/// (regex atoms evaluated, lengths substituted, integer variables symbolic)
/// is satisfiable; returns the completed model when it is.
fn residual_sat(
    f: &Formula,
    script: &Script,
    strings: &BTreeMap<StrVar, String>,
    limits: &LiaLimits,
) -> Option<Model> {
    let residual = partial_eval(f, strings);
    // DNF over the remaining arithmetic atoms.
    let g = nnf::nnf(&residual);
    for cube in crate::cubes::cubes(&g, 1024) {
        let Ok(cube) = cube else { break };
        debug_assert!(cube.regex_constraints.is_empty());
        // Linearize over integer variables only; lengths are constants now.
        let mut constraints = Vec::new();
        let mut ok = true;
        for atom in &cube.arith_constraints {
            match linearize_ground(atom, strings) {
                Some(c) => constraints.push(c),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        match lia::check_sat(&constraints, &[], &Default::default(), limits) {
            LiaResult::Sat(asg) => {
                let mut model = Model::default();
                for (v, w) in strings {
                    model
                        .strings
                        .insert(script.decls.str_name(*v).to_string(), w.clone());
                }
                for v in script.decls.int_vars() {
                    model
                        .ints
                        .insert(script.decls.int_name(v).to_string(), asg.get(v.0 as usize));
                }
                return Some(model);
            }
            LiaResult::Unsat | LiaResult::Unknown => {}
        }
    }
    None
}

/// Replaces regex atoms by their truth value under the fixed words; keeps
/// arithmetic atoms intact.
fn partial_eval(f: &Formula, strings: &BTreeMap<StrVar, String>) -> Formula {
    match f {
        Formula::Atom(Atom::InRe(v, re)) => {
            let w = strings.get(v).map(|s| s.as_str()).unwrap_or("");
            if semantics::word_matches(re, w) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Atom(_) => f.clone(),
        Formula::And(fs) => Formula::and(fs.iter().map(|g| partial_eval(g, strings)).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(|g| partial_eval(g, strings)).collect()),
        Formula::Not(inner) => Formula::not(partial_eval(inner, strings)),
        Formula::True | Formula::False => f.clone(),
    }
}

/// Linearizes an arithmetic atom with all lengths ground; integer variables
/// keep ids `0..num_int_vars`.
fn linearize_ground(
    atom: &ArithAtom,
    strings: &BTreeMap<StrVar, String>,
) -> Option<lia::LinearConstraint> {
    fn walk(
        t: &IntTerm,
        strings: &BTreeMap<StrVar, String>,
        coeff: &BigInt,
        out: &mut BTreeMap<usize, BigInt>,
        constant: &mut BigInt,
    ) {
        match t {
            IntTerm::Const(v) => *constant += coeff * v,
            IntTerm::Var(v) => *out.entry(v.0 as usize).or_default() += coeff,
            IntTerm::Len(s) => {
                let len = strings.get(s).map(|w| w.chars().count()).unwrap_or(0);
                *constant += coeff * BigInt::from(len);
            }
            IntTerm::Sum(l, r) => {
                walk(l, strings, coeff, out, constant);
                walk(r, strings, coeff, out, constant);
            }
            IntTerm::ScalarMul(c, inner) => walk(inner, strings, &(coeff * c), out, constant),
        }
    }
    let (l, r, rel, shift) = match atom {
        ArithAtom::Eq(l, r) => (l, r, lia::Relation::Eq, 0),
        ArithAtom::Lt(l, r) => (l, r, lia::Relation::Le, -1),
    };
    let mut coeffs = BTreeMap::new();
    let mut constant = BigInt::from(0);
    walk(l, strings, &BigInt::from(1), &mut coeffs, &mut constant);
    walk(r, strings, &BigInt::from(-1), &mut coeffs, &mut constant);
    Some(lia::LinearConstraint::new(coeffs, rel, -constant + shift))
}

// ---------------------------------------------------------------------------
// Differential runner
// ---------------------------------------------------------------------------

/// One labeled solver configuration to run.
#[derive(Debug, Clone)]
pub struct DiffConfig {
    pub label: String,
    pub cfg: HeuristicConfig,
    pub mode: Mode,
}

impl DiffConfig {
    pub fn new(label: impl Into<String>, cfg: HeuristicConfig) -> Self {
        DiffConfig {
            label: label.into(),
            cfg,
            mode: Mode::Lazy,
        }
    }
}

/// Per-(instance, config) outcome.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: usize,
    pub seed: u64,
    pub config: String,
    pub verdict: Verdict,
    pub timed_out: bool,
    pub time_ms: u128,
    pub automata_built: u64,
    pub intersections: u64,
    pub length_models: u64,
    pub cubes: u64,
    pub heuristic_fired: u64,
    pub soundness_error: bool,
    pub model_failure: bool,
}

/// Aggregated column of the ablation table.
#[derive(Debug, Clone, Default)]
pub struct ConfigSummary {
    pub label: String,
    pub sat: usize,
    pub unsat: usize,
    pub unknown: usize,
    pub timeout: usize,
    pub soundness_errors: usize,
    pub model_failures: usize,
    pub total_correct: usize,
    pub time_ms: u128,
    pub time_ms_without_timeouts: u128,
    pub intersections: u64,
    pub automata_built: u64,
}

#[derive(Debug, Clone)]
pub struct DiffReport {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<ConfigSummary>,
    /// Instances the oracle could not enumerate within budget.
    pub oracle_excluded: usize,
    /// Oracle verdict per instance (`None` when excluded).
    pub oracle_sat: Vec<Option<bool>>,
}

impl DiffReport {
    pub fn has_failures(&self) -> bool {
        self.summaries
            .iter()
            .any(|s| s.soundness_errors > 0 || s.model_failures > 0)
    }

    /// CSV with one row per (instance, config).
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "instance,seed,config,verdict,time_ms,automata_built,intersections,length_models,cubes,heuristic_fired\n",
        );
        for r in &self.records {
            let verdict = if r.timed_out {
                "timeout".to_string()
            } else {
                r.verdict.to_string()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.instance,
                r.seed,
                r.config,
                verdict,
                r.time_ms,
                r.automata_built,
                r.intersections,
                r.length_models,
                r.cubes,
                r.heuristic_fired
            ));
        }
        out
    }

    /// Plain-text ablation table, one column per configuration.
    pub fn table(&self) -> String {
        let labels: Vec<&str> = self.summaries.iter().map(|s| s.label.as_str()).collect();
        let width = labels.iter().map(|l| l.len()).max().unwrap_or(8).max(12);
        let mut out = String::new();
        let mut header = format!("{:<22}", "");
        for l in &labels {
            header.push_str(&format!("{l:>width$}  "));
        }
        out.push_str(header.trim_end());
        out.push('\n');
        let mut row = |name: &str, values: Vec<String>| {
            let mut line = format!("{name:<22}");
            for v in values {
                line.push_str(&format!("{v:>width$}  "));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        };
        row(
            "sat",
            self.summaries.iter().map(|s| s.sat.to_string()).collect(),
        );
        row(
            "unsat",
            self.summaries.iter().map(|s| s.unsat.to_string()).collect(),
        );
        row(
            "unknown",
            self.summaries
                .iter()
                .map(|s| s.unknown.to_string())
                .collect(),
        );
        row(
            "timeout",
            self.summaries
                .iter()
                .map(|s| s.timeout.to_string())
                .collect(),
        );
        row(
            "soundness error",
            self.summaries
                .iter()
                .map(|s| s.soundness_errors.to_string())
                .collect(),
        );
        row(
            "total correct",
            self.summaries
                .iter()
                .map(|s| s.total_correct.to_string())
                .collect(),
        );
        row(
            "time (s)",
            self.summaries
                .iter()
                .map(|s| format!("{:.3}", s.time_ms as f64 / 1000.0))
                .collect(),
        );
        row(
            "time w/o timeouts (s)",
            self.summaries
                .iter()
                .map(|s| format!("{:.3}", s.time_ms_without_timeouts as f64 / 1000.0))
                .collect(),
        );
        out
    }
}

/// Runs every script under every configuration, cross-checking against the
/// oracle, with `jobs` worker threads.
pub fn differential_run(
    scripts: &[String],
    configs: &[DiffConfig],
    oracle_bound: usize,
    budgets: &Budgets,
    alphabet: &Alphabet,
    seed: u64,
    jobs: usize,
) -> DiffReport {
    let jobs = jobs.max(1);
    let records: Mutex<Vec<RunRecord>> = Mutex::new(Vec::new());
    let oracle_results: Mutex<Vec<(usize, Option<bool>)>> = Mutex::new(Vec::new());
    let next: Mutex<usize> = Mutex::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let instance = {
                    let mut guard = next.lock().unwrap();
                    let i = *guard;
                    if i >= scripts.len() {
                        break;
                    }
                    *guard += 1;
                    i
                };
                let script = match parse_script(&scripts[instance], alphabet) {
                    Ok(s) => s,
                    Err(_) => {
                        oracle_results.lock().unwrap().push((instance, None));
                        continue;
                    }
                };
                let oracle_verdict = oracle(&script, oracle_bound, alphabet).ok();
                let oracle_is_sat = oracle_verdict
                    .as_ref()
                    .map(|v| v.outcome == OracleOutcome::Sat);
                if let Some(v) = &oracle_verdict {
                    if let Some(w) = &v.witness {
                        debug_assert!(
                            validate_model(&script.formula(), w, &script.decls),
                            "oracle witness failed validation on instance {instance}"
                        );
                    }
                }
                oracle_results
                    .lock()
                    .unwrap()
                    .push((instance, oracle_is_sat));

                for dc in configs {
                    let solver = Solver::new(&script.decls, alphabet)
                        .with_config(dc.cfg)
                        .with_mode(dc.mode)
                        .with_budgets(budgets.clone());
                    let start = Instant::now();
                    let result = solver.solve_script(&script);
                    let elapsed = start.elapsed().as_millis();
                    let timed_out = result.verdict == Verdict::Unknown
                        && result.stats.unknown_reason.as_deref() == Some("timeout");
                    let soundness_error =
                        result.verdict == Verdict::Unsat && oracle_is_sat == Some(true);
                    let model_failure = result.verdict == Verdict::Sat
                        && !result
                            .model
                            .as_ref()
                            .map(|m| validate_model(&script.formula(), m, &script.decls))
                            .unwrap_or(false);
                    records.lock().unwrap().push(RunRecord {
                        instance,
                        seed,
                        config: dc.label.clone(),
                        verdict: result.verdict,
                        timed_out,
                        time_ms: elapsed,
                        automata_built: result.stats.automata_built,
                        intersections: result.stats.intersections,
                        length_models: result.stats.length_models,
                        cubes: result.stats.cubes_explored,
                        heuristic_fired: result.stats.heuristic_fired(),
                        soundness_error,
                        model_failure,
                    });
                }
            });
        }
    });

    let mut records = records.into_inner().unwrap();
    let config_index: BTreeMap<&str, usize> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.label.as_str(), i))
        .collect();
    records.sort_by_key(|r| (r.instance, config_index[r.config.as_str()]));

    let mut oracle_sat = vec![None; scripts.len()];
    for (i, v) in oracle_results.into_inner().unwrap() {
        oracle_sat[i] = v;
    }
    let oracle_excluded = oracle_sat.iter().filter(|v| v.is_none()).count();

    let mut summaries: Vec<ConfigSummary> = configs
        .iter()
        .map(|c| ConfigSummary {
            label: c.label.clone(),
            ..ConfigSummary::default()
        })
        .collect();
    for r in &records {
        let s = &mut summaries[config_index[r.config.as_str()]];
        if r.timed_out {
            s.timeout += 1;
        } else {
            match r.verdict {
                Verdict::Sat => s.sat += 1,
                Verdict::Unsat => s.unsat += 1,
                Verdict::Unknown => s.unknown += 1,
            }
        }
        if r.soundness_error {
            s.soundness_errors += 1;
        }
        if r.model_failure {
            s.model_failures += 1;
        }
        s.time_ms += r.time_ms;
        if !r.timed_out {
            s.time_ms_without_timeouts += r.time_ms;
        }
        s.intersections += r.intersections;
        s.automata_built += r.automata_built;
    }
    for s in &mut summaries {
        s.total_correct = s.sat + s.unsat - s.soundness_errors - s.model_failures;
    }

    DiffReport {
        records,
        summaries,
        oracle_excluded,
        oracle_sat,
    }
}

/// The standard ablation columns: everything on, each heuristic off in turn,
/// everything off.
pub fn ablation_configs() -> Vec<DiffConfig> {
    let all = HeuristicConfig::all_on();
    vec![
        DiffConfig::new("all_on", all),
        DiffConfig::new(
            "no_length_syntax",
            HeuristicConfig {
                length_abstraction_from_syntax: false,
                ..all
            },
        ),
        DiffConfig::new(
            "no_lazy_intersection",
            HeuristicConfig {
                lazy_cost_ordered_intersection: false,
                ..all
            },
        ),
        DiffConfig::new(
            "no_prefix_suffix",
            HeuristicConfig {
                prefix_suffix: false,
                ..all
            },
        ),
        DiffConfig::new(
            "no_length_refine",
            HeuristicConfig {
                automata_length_refinement: false,
                ..all
            },
        ),
        DiffConfig::new(
            "no_arith_integration",
            HeuristicConfig {
                arithmetic_integration: false,
                ..all
            },
        ),
        DiffConfig::new("all_off", HeuristicConfig::all_off()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::from_chars("abc".chars()).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec {
            seed: 1,
            ..GenSpec::default()
        };
        let a = generate(&spec, 3);
        let b = generate(&spec, 3);
        assert_eq!(a, b);
        let c = generate(
            &GenSpec {
                seed: 2,
                ..GenSpec::default()
            },
            3,
        );
        assert_ne!(a, c);
    }

    #[test]
    fn generated_scripts_parse() {
        let spec = GenSpec {
            seed: 42,
            ..GenSpec::default()
        };
        for script in generate(&spec, 50) {
            parse_script(&script, &spec.alphabet())
                .unwrap_or_else(|e| panic!("generated script failed to parse: {e}\n{script}"));
        }
    }

    #[test]
    fn zero_complement_probability_emits_no_comp() {
        let spec = GenSpec {
            seed: 3,
            complement_probability: 0.0,
            ..GenSpec::default()
        };
        for script in generate(&spec, 30) {
            assert!(
                !script.contains("re.comp"),
                "unexpected complement:\n{script}"
            );
        }
    }

    #[test]
    fn complex_instances_have_multiple_predicates() {
        let spec = GenSpec {
            seed: 4,
            max_string_vars: 1,
            ..GenSpec::default()
        };
        let scripts = generate(&spec, 10);
        // Odd indices are complex: at least two membership predicates.
        for (i, script) in scripts.iter().enumerate() {
            let count = script.matches("str.in_re").count();
            if i % 2 == 1 {
                assert!(count >= 2, "instance {i} should be complex:\n{script}");
            } else {
                assert_eq!(count, 1, "instance {i} should be simple:\n{script}");
            }
        }
    }

    #[test]
    fn oracle_finds_modular_witness() {
        let alphabet = abc();
        let script = parse_script(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (< 4 (str.len X)))
               (check-sat)"#,
            &alphabet,
        )
        .unwrap();
        let v = oracle(&script, 8, &alphabet).unwrap();
        assert_eq!(v.outcome, OracleOutcome::Sat);
        let w = v.witness.unwrap();
        assert_eq!(w.strings["X"], "abcabc");
        assert!(validate_model(&script.formula(), &w, &script.decls));
    }

    #[test]
    fn oracle_refutes_the_joint_example() {
        let alphabet = abc();
        let script = parse_script(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (str.in_re X (re.union (re.++ (str.to_re "a") (re.* (str.to_re "a")))
                                              (re.++ (str.to_re "b") (re.* (str.to_re "b"))))))
               (check-sat)"#,
            &alphabet,
        )
        .unwrap();
        let v = oracle(&script, 8, &alphabet).unwrap();
        assert_eq!(v.outcome, OracleOutcome::UnsatUpToBound);
    }

    #[test]
    fn oracle_no_constraints_sat_with_empty_words() {
        let alphabet = abc();
        let script = parse_script("(declare-const X String)(check-sat)", &alphabet).unwrap();
        let v = oracle(&script, 0, &alphabet).unwrap();
        assert_eq!(v.outcome, OracleOutcome::Sat);
        assert_eq!(v.witness.unwrap().strings["X"], "");
    }

    #[test]
    fn oracle_handles_integer_variables() {
        let alphabet = abc();
        let script = parse_script(
            r#"(declare-const X String)
               (declare-const n Int)
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (= (str.len X) (* 2 n)))
               (assert (< 0 n))
               (check-sat)"#,
            &alphabet,
        )
        .unwrap();
        let v = oracle(&script, 6, &alphabet).unwrap();
        assert_eq!(v.outcome, OracleOutcome::Sat);
        let w = v.witness.unwrap();
        assert!(validate_model(&script.formula(), &w, &script.decls));
    }

    #[test]
    fn differential_run_small_corpus_is_clean_and_reproducible() {
        let alphabet = abc();
        let spec = GenSpec {
            seed: 7,
            ..GenSpec::default()
        };
        let scripts = generate(&spec, 40);
        let configs = vec![
            DiffConfig::new("all_on", HeuristicConfig::all_on()),
            DiffConfig::new("all_off", HeuristicConfig::all_off()),
        ];
        let budgets = Budgets {
            max_length_models: 200,
            timeout: Some(std::time::Duration::from_secs(5)),
            ..Budgets::default()
        };
        let run = || differential_run(&scripts, &configs, 6, &budgets, &alphabet, spec.seed, 2);
        let a = run();
        assert!(!a.has_failures(), "differential failures: {}", a.table());
        let b = run();
        let strip = |csv: &str| -> String {
            csv.lines()
                .map(|l| {
                    let cols: Vec<&str> = l.split(',').collect();
                    if cols.len() > 4 {
                        let mut cols = cols;
                        cols[4] = "_";
                        cols.join(",")
                    } else {
                        l.to_string()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a.csv()), strip(&b.csv()), "CSV not reproducible");
        assert!(a.table().contains("soundness error"));
    }

    #[test]
    fn intersection_heavy_instances_are_unsat_and_ordering_saves_work() {
        let alphabet = abc();
        let scripts = generate_intersection_heavy(11, 20, false);
        let configs = vec![
            DiffConfig::new("ordered", HeuristicConfig::all_on()),
            DiffConfig::new(
                "unordered",
                HeuristicConfig {
                    lazy_cost_ordered_intersection: false,
                    ..HeuristicConfig::all_on()
                },
            ),
        ];
        let budgets = Budgets::default();
        let report = differential_run(&scripts, &configs, 6, &budgets, &alphabet, 11, 1);
        assert!(!report.has_failures());
        let ordered = &report.summaries[0];
        let unordered = &report.summaries[1];
        assert_eq!(ordered.sat, 0);
        assert_eq!(ordered.unsat, scripts.len());
        assert_eq!(unordered.unsat, scripts.len());
        assert!(
            ordered.intersections < unordered.intersections,
            "ordering should save intersections: {} vs {}",
            ordered.intersections,
            unordered.intersections
        );
    }
}
