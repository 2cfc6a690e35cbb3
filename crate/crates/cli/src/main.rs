//! Command-line frontend: read a script, run the solver, print the verdict,
//! model, and statistics.
//!
//! Exit status: 0 for any verdict (including `unknown`), 1 on input errors,
//! 2 on internal errors.

use clap::Parser;
use num_bigint::BigInt;
use relic_core::alphabet::Alphabet;
use relic_core::automata;
use relic_core::parser::parse_script;
use relic_core::solver::{Budgets, HeuristicConfig, Mode, Model, Solver, Verdict};
use relic_core::syntax::{escape_string, print_int, Command, Formula, Script, Sort};
use std::io::Read;
use std::path::PathBuf;
use std::time::Duration;

#[derive(Parser, Debug)]
#[command(
    name = "relic",
    about = "Satisfiability solver for regex membership and linear arithmetic over string length",
    version
)]
struct Args {
    /// Input script; reads standard input when omitted or `-`.
    file: Option<PathBuf>,

    /// Witness construction route: the lazy character-consistency search or
    /// eager extraction from the materialized intersection.
    #[arg(long, value_parser = ["lazy", "eager"], default_value = "lazy")]
    mode: String,

    /// Disable the syntactic length-abstraction heuristic.
    #[arg(long)]
    no_length_syntax: bool,

    /// Disable cost-ordered lazy intersection.
    #[arg(long)]
    no_lazy_intersection: bool,

    /// Disable the prefix/suffix over-approximation.
    #[arg(long)]
    no_prefix_suffix: bool,

    /// Disable length-bound refinement against automata.
    #[arg(long)]
    no_length_refine: bool,

    /// Disable arithmetic-solver integration (smallest-model search).
    #[arg(long)]
    no_arith_integration: bool,

    /// Boolean cube cap.
    #[arg(long, default_value_t = 4096)]
    max_cubes: usize,

    /// Automaton state budget.
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,

    /// Arithmetic branch-and-bound node budget.
    #[arg(long, default_value_t = 100_000)]
    max_lia_nodes: u64,

    /// Length-model budget per cube.
    #[arg(long, default_value_t = 10_000)]
    max_length_models: u64,

    /// Timeout per check-sat, in seconds.
    #[arg(long, default_value_t = 20.0)]
    timeout: f64,

    /// Alphabet: `ascii-printable` or `custom:<chars>`.
    #[arg(long, default_value = "ascii-printable")]
    alphabet: String,

    /// Print solver statistics to standard error.
    #[arg(long)]
    stats: bool,

    /// Export compiled automata for the asserted regexes as GraphViz dot.
    #[arg(long)]
    dot: Option<PathBuf>,
}

fn parse_alphabet(spec: &str) -> Result<Alphabet, String> {
    if spec == "ascii-printable" {
        return Ok(Alphabet::ascii_printable());
    }
    if let Some(custom) = spec.strip_prefix("custom:") {
        return Alphabet::from_chars(custom.chars()).map_err(|e| e.to_string());
    }
    Err(format!(
        "unrecognized alphabet `{spec}` (expected `ascii-printable` or `custom:<chars>`)"
    ))
}

fn print_model(script: &Script, model: &Model) {
    println!("(model");
    for (sort, _, name) in script.decls.in_order() {
        match sort {
            Sort::Str => {
                let w = model.strings.get(name).map(String::as_str).unwrap_or("");
                println!("  (define-fun {name} () String \"{}\")", escape_string(w));
            }
            Sort::Int => {
                let zero = BigInt::from(0);
                let v = model.ints.get(name).unwrap_or(&zero);
                println!("  (define-fun {name} () Int {})", print_int(v));
            }
        }
    }
    println!(")");
}

fn print_stats(stats: &relic_core::solver::SolverStats) {
    eprintln!("automata_built={}", stats.automata_built);
    eprintln!("intersections={}", stats.intersections);
    eprintln!("length_models={}", stats.length_models);
    eprintln!("cubes={}", stats.cubes_explored);
    eprintln!("exact_abstractions={}", stats.exact_abstractions);
    eprintln!("refinements={}", stats.refinements);
    eprintln!("ps_refutations={}", stats.ps_refutations);
    eprintln!("ps_empty_string_facts={}", stats.ps_empty_string_facts);
    eprintln!("heuristic_fired={}", stats.heuristic_fired());
    for (var, lo) in &stats.refined_lower {
        eprintln!("refined_lower_{var}={lo}");
    }
    for (var, hi) in &stats.refined_upper {
        eprintln!("refined_upper_{var}={hi}");
    }
    for (var, len) in &stats.first_length_model {
        eprintln!("first_length_model_{var}={len}");
    }
    if let Some(reason) = &stats.unknown_reason {
        eprintln!("unknown_reason={reason}");
    }
}

/// Dumps each distinct asserted regex compiled to an automaton.
fn export_dot(script: &Script, alphabet: &Alphabet, max_states: usize, path: &PathBuf) {
    let mut regexes = Vec::new();
    for f in &script.asserts {
        f.visit_atoms(&mut |a| {
            if let relic_core::syntax::Atom::InRe(_, re) = a {
                if !regexes.contains(re) {
                    regexes.push(re.clone());
                }
            }
        });
    }
    let mut out = String::new();
    for (i, re) in regexes.iter().enumerate() {
        out.push_str(&format!("// re{i}: {re}\n"));
        match automata::compile(re, alphabet, &automata::AutomataLimits::states(max_states)) {
            Ok(auto) => out.push_str(&auto.to_dot(&format!("re{i}"))),
            Err(e) => out.push_str(&format!("// re{i} not compiled: {e}\n")),
        }
        out.push('\n');
    }
    if let Err(e) = std::fs::write(path, out) {
        eprintln!("relic: cannot write dot file {}: {e}", path.display());
    }
}

fn main() {
    let code = run();
    std::process::exit(code);
}

fn run() -> i32 {
    let args = Args::parse();
    if args.timeout <= 0.0 {
        eprintln!("relic: timeout must be positive");
        return 1;
    }

    let alphabet = match parse_alphabet(&args.alphabet) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("relic: {e}");
            return 1;
        }
    };

    let text = match &args.file {
        Some(path) if path.as_os_str() != "-" => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("relic: cannot read {}: {e}", path.display());
                return 1;
            }
        },
        _ => {
            let mut buf = String::new();
            if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
                eprintln!("relic: cannot read standard input: {e}");
                return 1;
            }
            buf
        }
    };

    let script = match parse_script(&text, &alphabet) {
        Ok(s) => s,
        Err(e) if e.is_unsupported() => {
            // Outside the supported fragment: an honest unknown.
            println!("unknown");
            eprintln!("relic: {e}");
            return 0;
        }
        Err(e) => {
            eprintln!("relic: {e}");
            return 1;
        }
    };

    let cfg = HeuristicConfig {
        length_abstraction_from_syntax: !args.no_length_syntax,
        lazy_cost_ordered_intersection: !args.no_lazy_intersection,
        prefix_suffix: !args.no_prefix_suffix,
        automata_length_refinement: !args.no_length_refine,
        arithmetic_integration: !args.no_arith_integration,
    };
    let mode = if args.mode == "eager" {
        Mode::Eager
    } else {
        Mode::Lazy
    };
    let budgets = Budgets {
        max_cubes: args.max_cubes,
        max_states: args.max_states,
        max_lia_nodes: args.max_lia_nodes,
        max_length_models: args.max_length_models,
        timeout: Some(Duration::from_secs_f64(args.timeout)),
    };
    for cap in [args.max_cubes, args.max_states] {
        if cap == 0 {
            eprintln!("relic: budgets must be positive");
            return 1;
        }
    }

    let formula: Formula = script.formula();
    let mut last_model: Option<Model> = None;
    let mut last_verdict: Option<Verdict> = None;
    for command in &script.commands {
        match command {
            Command::CheckSat => {
                let solver = Solver::new(&script.decls, &alphabet)
                    .with_config(cfg)
                    .with_mode(mode)
                    .with_budgets(budgets.clone());
                let result = solver.solve(&formula);
                println!("{}", result.verdict);
                if args.stats {
                    print_stats(&result.stats);
                }
                last_model = result.model;
                last_verdict = Some(result.verdict);
            }
            Command::GetModel => match (&last_verdict, &last_model) {
                (Some(Verdict::Sat), Some(model)) => print_model(&script, model),
                _ => eprintln!("relic: model is not available"),
            },
        }
    }
    if script.commands.is_empty() {
        eprintln!("relic: script has no (check-sat) command");
    }

    if let Some(path) = &args.dot {
        export_dot(&script, &alphabet, args.max_states, path);
    }

    0
}
