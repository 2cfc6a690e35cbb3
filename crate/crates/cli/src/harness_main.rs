//! Differential harness: generate (or load) instances, run the solver under
//! several heuristic configurations, cross-check against the brute-force
//! oracle, and emit an ablation table plus CSV.
//!
//! Exits nonzero when any configuration produced a soundness error or a
//! model-validation failure.

use clap::Parser;
use relic_core::alphabet::Alphabet;
use relic_core::harness::{
    ablation_configs, differential_run, generate, generate_intersection_heavy, DiffConfig, GenSpec,
};
use relic_core::solver::{Budgets, HeuristicConfig};
use std::path::PathBuf;
use std::time::Duration;

#[derive(Parser, Debug)]
#[command(
    name = "relic-harness",
    about = "Differential and ablation testing for the relic solver",
    version
)]
struct Args {
    /// External script files to run instead of generated instances.
    files: Vec<PathBuf>,

    /// Generation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of generated instances.
    #[arg(long, default_value_t = 200)]
    count: usize,

    /// Alphabet size for generation (1..=4).
    #[arg(long, default_value_t = 3)]
    alphabet_size: u8,

    /// Regex AST node bound.
    #[arg(long, default_value_t = 8)]
    max_regex_size: usize,

    /// Regex predicates per variable in complex instances.
    #[arg(long, default_value_t = 3)]
    max_regexes_per_var: usize,

    /// String variables per instance (1..=3).
    #[arg(long, default_value_t = 2)]
    max_string_vars: usize,

    /// Probability of complement nodes in generated regexes.
    #[arg(long, default_value_t = 0.25)]
    complement_prob: f64,

    /// Arithmetic atoms per instance.
    #[arg(long, default_value_t = 2)]
    max_arith_atoms: usize,

    /// Coefficient bound in arithmetic atoms.
    #[arg(long, default_value_t = 5)]
    coeff_bound: i64,

    /// Generate the intersection-heavy unsat corpus instead.
    #[arg(long)]
    intersection_heavy: bool,

    /// Word-length bound for the brute-force oracle.
    #[arg(long, default_value_t = 8)]
    oracle_bound: usize,

    /// Configuration set: `standard` (ablation columns), `onoff`, or `all32`.
    #[arg(long, default_value = "standard", value_parser = ["standard", "onoff", "all32"])]
    configs: String,

    /// Timeout per solve, in seconds.
    #[arg(long, default_value_t = 5.0)]
    timeout: f64,

    /// Length-model budget per cube.
    #[arg(long, default_value_t = 1000)]
    max_length_models: u64,

    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Write the per-run CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() {
    let args = Args::parse();
    let spec = GenSpec {
        seed: args.seed,
        alphabet_size: args.alphabet_size.clamp(1, 4),
        max_regex_size: args.max_regex_size.max(1),
        max_regexes_per_var: args.max_regexes_per_var.clamp(1, 5),
        max_string_vars: args.max_string_vars.clamp(1, 3),
        complement_probability: args.complement_prob.clamp(0.0, 1.0),
        max_arith_atoms: args.max_arith_atoms,
        coeff_bound: args.coeff_bound.max(1),
    };
    let alphabet: Alphabet = spec.alphabet();

    let scripts: Vec<String> = if !args.files.is_empty() {
        let mut out = Vec::new();
        for path in &args.files {
            match std::fs::read_to_string(path) {
                Ok(text) => out.push(text),
                Err(e) => {
                    eprintln!("relic-harness: cannot read {}: {e}", path.display());
                    std::process::exit(1);
                }
            }
        }
        out
    } else if args.intersection_heavy {
        generate_intersection_heavy(args.seed, args.count, true)
    } else {
        generate(&spec, args.count)
    };

    let configs: Vec<DiffConfig> = match args.configs.as_str() {
        "onoff" => vec![
            DiffConfig::new("all_on", HeuristicConfig::all_on()),
            DiffConfig::new("all_off", HeuristicConfig::all_off()),
        ],
        "all32" => (0..32u8)
            .map(|bits| DiffConfig::new(format!("cfg{bits:02}"), HeuristicConfig::from_bits(bits)))
            .collect(),
        _ => ablation_configs(),
    };

    let budgets = Budgets {
        timeout: Some(Duration::from_secs_f64(args.timeout.max(0.001))),
        max_length_models: args.max_length_models,
        ..Budgets::default()
    };

    let report = differential_run(
        &scripts,
        &configs,
        args.oracle_bound,
        &budgets,
        &alphabet,
        args.seed,
        args.jobs,
    );

    println!(
        "{} instances, {} configurations, oracle bound {} ({} excluded)",
        scripts.len(),
        configs.len(),
        args.oracle_bound,
        report.oracle_excluded
    );
    println!();
    print!("{}", report.table());

    if let Some(path) = &args.csv {
        if let Err(e) = std::fs::write(path, report.csv()) {
            eprintln!("relic-harness: cannot write {}: {e}", path.display());
            std::process::exit(1);
        }
        println!("\ncsv written to {}", path.display());
    }

    if report.has_failures() {
        eprintln!("relic-harness: soundness errors or model failures detected");
        std::process::exit(3);
    }
}
