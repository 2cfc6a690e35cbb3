//! The length-aware decision procedure.
//!
//! Each cube is solved in phases:
//!
//! 1. Per-constraint length abstraction and arithmetic consistency, with
//!    bound refinement against single-regex automata compiled on demand.
//! 2. Prefix/suffix screening per variable: refute the conjunction or pin the
//!    variable to the empty string, without building automata.
//! 3. Intersection emptiness per variable, cost-ordered cheapest-first when
//!    the lazy-intersection heuristic is on, stopping at the first empty
//!    intermediate product.
//! 4. The length-model loop: the arithmetic core proposes a smallest model,
//!    character-consistency is checked by a joint path search over the
//!    variable's automata (or the materialized intersection in eager mode),
//!    and failures feed blocking clauses back into the arithmetic core.
//!
//! Every budget (cubes, states, arithmetic nodes, length models, deadline)
//! folds into an `unknown` verdict rather than nontermination, and sat
//! verdicts are re-validated against the reference evaluator before being
//! reported.

use crate::alphabet::Alphabet;
use crate::automata::{self, Automaton};
use crate::cubes::{self, DEFAULT_CUBE_CAP};
use crate::lia::{
    self, BlockingClause, IntAssignment, LiaLimits, LiaResult, LinearConstraint, Relation, VarId,
    DEFAULT_NODE_BUDGET,
};
use crate::nnf;
use crate::prefix_suffix::{edge_profile, joint_check, JointVerdict};
use crate::semantics::{self, Assignment};
use crate::semilinear::{
    abstract_lengths, refine_bounds, to_linear_constraints, LengthAbstraction,
};
use crate::syntax::{ArithAtom, Cube, Declarations, Formula, IntTerm, RegexTerm, Script, StrVar};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use std::time::{Duration, Instant};

pub const DEFAULT_LENGTH_MODEL_BUDGET: u64 = 10_000;

/// Longest witness the solver will materialize for a variable without regex
/// constraints.
const MAX_FREE_WITNESS: u64 = 10_000_000;

/// Heuristic toggles mirroring the ablation columns of the differential
/// harness. Any combination is valid; heuristics affect cost, not verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicConfig {
    pub length_abstraction_from_syntax: bool,
    pub lazy_cost_ordered_intersection: bool,
    pub prefix_suffix: bool,
    pub automata_length_refinement: bool,
    pub arithmetic_integration: bool,
}

impl HeuristicConfig {
    pub fn all_on() -> Self {
        HeuristicConfig {
            length_abstraction_from_syntax: true,
            lazy_cost_ordered_intersection: true,
            prefix_suffix: true,
            automata_length_refinement: true,
            arithmetic_integration: true,
        }
    }

    pub fn all_off() -> Self {
        HeuristicConfig {
            length_abstraction_from_syntax: false,
            lazy_cost_ordered_intersection: false,
            prefix_suffix: false,
            automata_length_refinement: false,
            arithmetic_integration: false,
        }
    }

    /// One configuration per bit pattern, for exhaustive ablation.
    pub fn from_bits(bits: u8) -> Self {
        HeuristicConfig {
            length_abstraction_from_syntax: bits & 1 != 0,
            lazy_cost_ordered_intersection: bits & 2 != 0,
            prefix_suffix: bits & 4 != 0,
            automata_length_refinement: bits & 8 != 0,
            arithmetic_integration: bits & 16 != 0,
        }
    }

    pub fn bits(&self) -> u8 {
        (self.length_abstraction_from_syntax as u8)
            | (self.lazy_cost_ordered_intersection as u8) << 1
            | (self.prefix_suffix as u8) << 2
            | (self.automata_length_refinement as u8) << 3
            | (self.arithmetic_integration as u8) << 4
    }
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self::all_on()
    }
}

/// Witness construction route: `Lazy` runs the character-consistency search
/// over the per-regex automata; `Eager` extracts directly from the
/// materialized intersection when it is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Lazy,
    Eager,
}

#[derive(Debug, Clone)]
pub struct Budgets {
    pub max_cubes: usize,
    pub max_states: usize,
    pub max_lia_nodes: u64,
    pub max_length_models: u64,
    pub timeout: Option<Duration>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_cubes: DEFAULT_CUBE_CAP,
            max_states: automata::DEFAULT_STATE_BUDGET,
            max_lia_nodes: DEFAULT_NODE_BUDGET,
            max_length_models: DEFAULT_LENGTH_MODEL_BUDGET,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Sat => write!(f, "sat"),
            Verdict::Unsat => write!(f, "unsat"),
            Verdict::Unknown => write!(f, "unknown"),
        }
    }
}

/// A model keyed by declared names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub strings: BTreeMap<String, String>,
    pub ints: BTreeMap<String, BigInt>,
}

impl Model {
    pub fn to_assignment(&self, decls: &Declarations) -> Assignment {
        let mut asg = Assignment::default();
        for v in decls.str_vars() {
            if let Some(w) = self.strings.get(decls.str_name(v)) {
                asg.strings.insert(v, w.clone());
            }
        }
        for v in decls.int_vars() {
            if let Some(x) = self.ints.get(decls.int_name(v)) {
                asg.ints.insert(v, x.clone());
            }
        }
        asg
    }
}

/// Counters and diagnostics accumulated over one solve.
#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub automata_built: u64,
    pub intersections: u64,
    pub length_models: u64,
    pub cubes_explored: u64,
    pub exact_abstractions: u64,
    pub refinements: u64,
    pub ps_refutations: u64,
    pub ps_empty_string_facts: u64,
    /// Tightest refined lower/upper bound recorded per string variable.
    pub refined_lower: BTreeMap<String, u64>,
    pub refined_upper: BTreeMap<String, u64>,
    /// Length of the first model proposed for each variable.
    pub first_length_model: BTreeMap<String, u64>,
    pub unknown_reason: Option<String>,
}

impl SolverStats {
    /// Total count of heuristic events across the solve.
    pub fn heuristic_fired(&self) -> u64 {
        self.exact_abstractions
            + self.refinements
            + self.ps_refutations
            + self.ps_empty_string_facts
    }

    fn note_unknown(&mut self, reason: &str) {
        if self.unknown_reason.is_none() {
            self.unknown_reason = Some(reason.to_string());
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub verdict: Verdict,
    pub model: Option<Model>,
    pub stats: SolverStats,
}

/// Evaluates a formula under a model with the reference evaluator; this is
/// the cross-validation path, independent of the automata engine.
pub fn validate_model(f: &Formula, model: &Model, decls: &Declarations) -> bool {
    let asg = model.to_assignment(decls);
    semantics::eval_formula(f, &asg)
}

enum CubeOutcome {
    Sat(Model),
    Unsat,
    Unknown(String),
}

pub struct Solver<'a> {
    decls: &'a Declarations,
    alphabet: &'a Alphabet,
    pub cfg: HeuristicConfig,
    pub mode: Mode,
    pub budgets: Budgets,
}

impl<'a> Solver<'a> {
    pub fn new(decls: &'a Declarations, alphabet: &'a Alphabet) -> Self {
        Solver {
            decls,
            alphabet,
            cfg: HeuristicConfig::default(),
            mode: Mode::default(),
            budgets: Budgets::default(),
        }
    }

    pub fn with_config(mut self, cfg: HeuristicConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_budgets(mut self, budgets: Budgets) -> Self {
        self.budgets = budgets;
        self
    }

    /// Variable layout of the arithmetic space: one length variable per
    /// string variable, then the declared integer variables, then fresh ones.
    fn len_var(&self, v: StrVar) -> VarId {
        v.0 as usize
    }

    fn int_var(&self, v: crate::syntax::IntVar) -> VarId {
        self.decls.num_str_vars() + v.0 as usize
    }

    fn first_fresh(&self) -> VarId {
        self.decls.num_str_vars() + self.decls.num_int_vars()
    }

    /// Decides the conjunction of the script's assertions.
    pub fn solve_script(&self, script: &Script) -> SolverResult {
        self.solve(&script.formula())
    }

    pub fn solve(&self, f: &Formula) -> SolverResult {
        let mut stats = SolverStats::default();
        let deadline = self.budgets.timeout.map(|t| Instant::now() + t);
        let g = nnf::nnf(f);
        let mut any_unknown = false;
        for item in cubes::cubes(&g, self.budgets.max_cubes) {
            if deadline.map(|d| Instant::now() >= d).unwrap_or(false) {
                stats.note_unknown("timeout");
                any_unknown = true;
                break;
            }
            let cube = match item {
                Ok(cube) => cube,
                Err(e) => {
                    stats.note_unknown(&e.to_string());
                    any_unknown = true;
                    break;
                }
            };
            stats.cubes_explored += 1;
            match self.solve_cube_inner(&cube, deadline, &mut stats) {
                CubeOutcome::Sat(model) => {
                    // Cross-validate against the reference semantics before
                    // reporting sat.
                    if validate_model(f, &model, self.decls) {
                        return SolverResult {
                            verdict: Verdict::Sat,
                            model: Some(model),
                            stats,
                        };
                    }
                    debug_assert!(false, "model failed reference validation");
                    stats.note_unknown("model failed validation");
                    any_unknown = true;
                }
                CubeOutcome::Unsat => {}
                CubeOutcome::Unknown(reason) => {
                    stats.note_unknown(&reason);
                    any_unknown = true;
                }
            }
        }
        SolverResult {
            verdict: if any_unknown {
                Verdict::Unknown
            } else {
                Verdict::Unsat
            },
            model: None,
            stats,
        }
    }

    /// Decides a single cube; exposed for the harness and tests.
    pub fn solve_cube(&self, cube: &Cube) -> SolverResult {
        let mut stats = SolverStats::default();
        let deadline = self.budgets.timeout.map(|t| Instant::now() + t);
        stats.cubes_explored = 1;
        match self.solve_cube_inner(cube, deadline, &mut stats) {
            CubeOutcome::Sat(model) => SolverResult {
                verdict: Verdict::Sat,
                model: Some(model),
                stats,
            },
            CubeOutcome::Unsat => SolverResult {
                verdict: Verdict::Unsat,
                model: None,
                stats,
            },
            CubeOutcome::Unknown(reason) => {
                stats.note_unknown(&reason);
                SolverResult {
                    verdict: Verdict::Unknown,
                    model: None,
                    stats,
                }
            }
        }
    }

    fn lia_limits(&self, deadline: Option<Instant>) -> LiaLimits {
        LiaLimits {
            max_nodes: self.budgets.max_lia_nodes,
            deadline,
        }
    }

    fn solve_cube_inner(
        &self,
        cube: &Cube,
        deadline: Option<Instant>,
        stats: &mut SolverStats,
    ) -> CubeOutcome {
        let limits = self.lia_limits(deadline);
        let nonneg_base: BTreeSet<VarId> =
            (0..self.decls.num_str_vars()).map(|i| i as VarId).collect();
        let mut next_fresh = self.first_fresh();
        let mut nonneg = nonneg_base;

        // psi: the cube's arithmetic constraints, plus len >= 0 for every
        // string variable (the initial L_S).
        let mut base: Vec<LinearConstraint> = Vec::new();
        for atom in &cube.arith_constraints {
            base.push(self.linearize_atom(atom));
        }
        for v in self.decls.str_vars() {
            base.push(LinearConstraint::lower(self.len_var(v), 0));
        }

        // Initial arithmetic consistency of psi and L_S alone.
        match lia::check_sat(&base, &[], &nonneg, &limits) {
            LiaResult::Unsat => return CubeOutcome::Unsat,
            LiaResult::Unknown => return CubeOutcome::Unknown("arithmetic budget".to_string()),
            LiaResult::Sat(_) => {}
        }

        // Group constraints per variable, deduplicated, preserving order.
        let mut per_var: BTreeMap<StrVar, Vec<RegexTerm>> = BTreeMap::new();
        for (v, re) in &cube.regex_constraints {
            let entry = per_var.entry(*v).or_default();
            if !entry.contains(re) {
                entry.push(re.clone());
            }
        }

        // Syntactic bounds on each length variable implied by psi alone.
        let mut var_bounds: BTreeMap<StrVar, (u64, Option<u64>)> =
            self.decls.str_vars().map(|v| (v, (0u64, None))).collect();
        for c in &base {
            self.absorb_simple_bound(c, &mut var_bounds);
        }

        let auto_limits =
            automata::AutomataLimits::with_deadline(self.budgets.max_states, deadline);
        let mut compiled: HashMap<RegexTerm, Rc<Automaton>> = HashMap::new();
        let mut compile_cached = |re: &RegexTerm,
                                  stats: &mut SolverStats|
         -> Result<Rc<Automaton>, automata::StateBudgetExceeded> {
            if let Some(a) = compiled.get(re) {
                return Ok(a.clone());
            }
            let auto = automata::compile(re, self.alphabet, &auto_limits)?;
            stats.automata_built += 1;
            let rc = Rc::new(auto);
            compiled.insert(re.clone(), rc.clone());
            Ok(rc)
        };

        // --- Phase 1: per-constraint length abstraction and consistency.
        // Refinement against automata happens where automata get built
        // (phase 4); building them just to refine would defeat the point of
        // the syntactic abstraction.
        let mut refinement_extras: Vec<LinearConstraint> = Vec::new();
        let mut branch_lists: Vec<Vec<Vec<LinearConstraint>>> = Vec::new();
        let mut abstraction_of: BTreeMap<(StrVar, RegexTerm), LengthAbstraction> = BTreeMap::new();
        for (v, re) in &cube.regex_constraints {
            if deadline.map(|d| Instant::now() >= d).unwrap_or(false) {
                return CubeOutcome::Unknown("timeout".to_string());
            }
            let len_var = self.len_var(*v);
            let la = if self.cfg.length_abstraction_from_syntax {
                match abstract_lengths(re) {
                    Ok(la) => la,
                    // The regex denotes the empty language: immediate conflict.
                    Err(_) => return CubeOutcome::Unsat,
                }
            } else {
                LengthAbstraction::Bounds {
                    lower: 0,
                    upper: None,
                }
            };
            if la.is_exact() {
                stats.exact_abstractions += 1;
            }
            let mut fresh = || {
                let id = next_fresh;
                next_fresh += 1;
                nonneg.insert(id);
                id
            };
            let branches = to_linear_constraints(&la, len_var, &mut fresh);

            // Consistency of psi + L_S + this constraint's abstraction:
            // feasible when some branch is not refuted.
            let mut feasible = false;
            for branch in &branches {
                let mut system = base.clone();
                system.extend_from_slice(&refinement_extras);
                system.extend_from_slice(branch);
                match lia::check_sat(&system, &[], &nonneg, &limits) {
                    LiaResult::Unsat => {}
                    _ => {
                        feasible = true;
                        break;
                    }
                }
            }
            if !feasible {
                return CubeOutcome::Unsat;
            }
            abstraction_of.insert((*v, re.clone()), la);
            branch_lists.push(branches);
        }

        // --- Phase 3: prefix/suffix screening per variable.
        let mut eps_pinned: BTreeSet<StrVar> = BTreeSet::new();
        if self.cfg.prefix_suffix {
            for (v, res) in &per_var {
                let profiles: Vec<_> = res
                    .iter()
                    .map(|re| edge_profile(re, self.alphabet))
                    .collect();
                match joint_check(&profiles) {
                    JointVerdict::EmptyIntersection => {
                        stats.ps_refutations += 1;
                        return CubeOutcome::Unsat;
                    }
                    JointVerdict::OnlyEmptyString => {
                        stats.ps_empty_string_facts += 1;
                        eps_pinned.insert(*v);
                        refinement_extras.push(LinearConstraint::eq(self.len_var(*v), 0));
                    }
                    JointVerdict::Consistent => {}
                }
            }
        }

        // --- Phase 4: intersection emptiness per variable.
        let mut var_automata: BTreeMap<StrVar, VarAutomata> = BTreeMap::new();
        for (v, res) in &per_var {
            if eps_pinned.contains(v) {
                continue;
            }
            if deadline.map(|d| Instant::now() >= d).unwrap_or(false) {
                return CubeOutcome::Unknown("timeout".to_string());
            }
            let mut ordered: Vec<&RegexTerm> = res.iter().collect();
            if self.cfg.lazy_cost_ordered_intersection {
                ordered.sort_by_key(|re| automata::estimate_cost(re));
            }
            let mut autos: Vec<Rc<Automaton>> = Vec::with_capacity(ordered.len());
            let mut current: Option<Rc<Automaton>> = None;
            let mut complete = true;
            for re in ordered {
                let auto = match compile_cached(re, stats) {
                    Ok(a) => a,
                    Err(e) => return CubeOutcome::Unknown(e.to_string()),
                };
                if auto.is_empty() {
                    return CubeOutcome::Unsat;
                }
                // Refine the bounds of non-exact abstractions against the
                // freshly compiled automaton (line 7 of the core loop, run
                // lazily now that the automaton exists anyway).
                if self.cfg.automata_length_refinement {
                    let la = abstraction_of.get(&(*v, re.clone()));
                    if la.map(|la| !la.is_exact()).unwrap_or(false) {
                        let la = la.unwrap();
                        let existing = var_bounds[v];
                        let (lo, hi) = refine_bounds(la, &auto, existing);
                        if (lo, hi) != existing {
                            stats.refinements += 1;
                            self.record_refined(stats, *v, lo, hi);
                            var_bounds.insert(*v, (lo, hi));
                            let len_var = self.len_var(*v);
                            refinement_extras
                                .push(LinearConstraint::lower(len_var, BigInt::from(lo)));
                            if let Some(hi) = hi {
                                refinement_extras
                                    .push(LinearConstraint::upper(len_var, BigInt::from(hi)));
                            }
                            let mut system = base.clone();
                            system.extend_from_slice(&refinement_extras);
                            if lia::check_sat(&system, &[], &nonneg, &limits) == LiaResult::Unsat {
                                return CubeOutcome::Unsat;
                            }
                        }
                    }
                }
                autos.push(auto.clone());
                if complete {
                    current = match current {
                        None => Some(auto),
                        Some(acc) => {
                            stats.intersections += 1;
                            match automata::intersect(&acc, &auto, &auto_limits) {
                                Ok(product) => {
                                    if product.is_empty() {
                                        return CubeOutcome::Unsat;
                                    }
                                    Some(Rc::new(product))
                                }
                                Err(_) => {
                                    // Too big to materialize; the joint
                                    // search over the individual automata
                                    // takes over in phase 5.
                                    complete = false;
                                    None
                                }
                            }
                        }
                    };
                }
            }
            let intersection = if complete { current } else { None };
            // Bound refinement against the materialized intersection keeps
            // the length-model loop finite when component abstractions are
            // looser than the product.
            if self.cfg.automata_length_refinement {
                if let Some(inter) = &intersection {
                    let la = LengthAbstraction::Bounds {
                        lower: 0,
                        upper: None,
                    };
                    let existing = var_bounds[v];
                    let (lo, hi) = refine_bounds(&la, inter, existing);
                    if (lo, hi) != existing {
                        stats.refinements += 1;
                        self.record_refined(stats, *v, lo, hi);
                        var_bounds.insert(*v, (lo, hi));
                        let len_var = self.len_var(*v);
                        refinement_extras.push(LinearConstraint::lower(len_var, BigInt::from(lo)));
                        if let Some(hi) = hi {
                            refinement_extras
                                .push(LinearConstraint::upper(len_var, BigInt::from(hi)));
                        }
                    }
                }
            }
            var_automata.insert(
                *v,
                VarAutomata {
                    autos,
                    intersection,
                },
            );
        }

        // --- Phase 5: length-model enumeration over branch combinations.
        let len_vars: Vec<VarId> = self.decls.str_vars().map(|v| self.len_var(v)).collect();
        let sum_var = next_fresh;
        nonneg.insert(sum_var);
        let sum_constraint = {
            let mut coeffs: BTreeMap<VarId, BigInt> =
                len_vars.iter().map(|v| (*v, BigInt::from(1))).collect();
            coeffs.insert(sum_var, BigInt::from(-1));
            LinearConstraint::new(coeffs, Relation::Eq, BigInt::zero())
        };

        let mut blocks: Vec<BlockingClause> = Vec::new();
        let mut models_used = 0u64;
        let mut saw_unknown: Option<String> = None;

        // Odometer over one branch per constraint; a single empty selection
        // when there are no regex constraints.
        let mut selection = vec![0usize; branch_lists.len()];
        let mut combos_explored = 0usize;
        'combos: loop {
            combos_explored += 1;
            if combos_explored > self.budgets.max_cubes {
                saw_unknown = Some("cube budget".to_string());
                break;
            }
            let mut system = base.clone();
            system.extend_from_slice(&refinement_extras);
            for (list, pick) in branch_lists.iter().zip(&selection) {
                system.extend_from_slice(&list[*pick]);
            }
            system.push(sum_constraint.clone());

            // Model loop for this branch combination.
            loop {
                if deadline.map(|d| Instant::now() >= d).unwrap_or(false) {
                    saw_unknown = Some("timeout".to_string());
                    break 'combos;
                }
                if models_used >= self.budgets.max_length_models {
                    saw_unknown = Some("length-model budget".to_string());
                    break 'combos;
                }
                let proposal = if self.cfg.arithmetic_integration {
                    self.minimal_model(&system, &blocks, &nonneg, &len_vars, sum_var, &limits)
                } else {
                    lia::check_sat(&system, &blocks, &nonneg, &limits)
                };
                let asg = match proposal {
                    LiaResult::Unsat => break,
                    LiaResult::Unknown => {
                        saw_unknown = Some("arithmetic budget".to_string());
                        break;
                    }
                    LiaResult::Sat(asg) => asg,
                };
                models_used += 1;
                stats.length_models += 1;
                for v in self.decls.str_vars() {
                    let len = asg.get(self.len_var(v)).to_u64().unwrap_or(0);
                    stats
                        .first_length_model
                        .entry(self.decls.str_name(v).to_string())
                        .or_insert(len);
                }

                match self.witnesses_for(&asg, &per_var, &eps_pinned, &var_automata, &auto_limits) {
                    WitnessOutcome::Complete(words) => {
                        return CubeOutcome::Sat(self.build_model(words, &asg));
                    }
                    WitnessOutcome::Failed(v, len) => {
                        blocks.push(BlockingClause::new(BTreeMap::from([(
                            self.len_var(v),
                            BigInt::from(len),
                        )])));
                    }
                    WitnessOutcome::Budget(reason) => {
                        saw_unknown = Some(reason);
                        break;
                    }
                }
            }

            // Advance the odometer.
            let mut pos = 0;
            loop {
                if pos >= selection.len() {
                    break 'combos;
                }
                selection[pos] += 1;
                if selection[pos] < branch_lists[pos].len() {
                    break;
                }
                selection[pos] = 0;
                pos += 1;
            }
        }

        match saw_unknown {
            Some(reason) => CubeOutcome::Unknown(reason),
            None => CubeOutcome::Unsat,
        }
    }

    /// Builds one witness word per string variable at the lengths the
    /// arithmetic model fixes, or reports the first variable whose length
    /// admits no character-consistent word.
    fn witnesses_for(
        &self,
        asg: &IntAssignment,
        per_var: &BTreeMap<StrVar, Vec<RegexTerm>>,
        eps_pinned: &BTreeSet<StrVar>,
        var_automata: &BTreeMap<StrVar, VarAutomata>,
        auto_limits: &automata::AutomataLimits,
    ) -> WitnessOutcome {
        let mut words: BTreeMap<StrVar, String> = BTreeMap::new();
        for v in self.decls.str_vars() {
            let len_big = asg.get(self.len_var(v));
            debug_assert!(!len_big.is_negative());
            let Some(len) = len_big.to_u64() else {
                return WitnessOutcome::Budget("witness too long".to_string());
            };
            if eps_pinned.contains(&v) {
                words.insert(v, String::new());
                continue;
            }
            if !per_var.contains_key(&v) {
                if len > MAX_FREE_WITNESS {
                    return WitnessOutcome::Budget("witness too long".to_string());
                }
                let c = self.alphabet.first_char();
                words.insert(v, std::iter::repeat_n(c, len as usize).collect());
                continue;
            }
            let va = var_automata.get(&v).expect("automata built in phase 4");
            // Eager mode extracts from the materialized intersection; the
            // lazy (default) mode runs the character-consistency search over
            // the per-regex automata.
            let autos: Vec<&Automaton> = match (self.mode, va.intersection.as_deref()) {
                (Mode::Eager, Some(inter)) => vec![inter],
                _ if va.autos.len() == 1 => vec![&*va.autos[0]],
                (Mode::Lazy, _) => va.autos.iter().map(|a| &**a).collect(),
                (Mode::Eager, None) => va.autos.iter().map(|a| &**a).collect(),
            };
            match automata::joint_path_of_length(&autos, len, auto_limits) {
                Ok(Some(w)) => {
                    words.insert(v, w);
                }
                Ok(None) => return WitnessOutcome::Failed(v, len),
                Err(e) => return WitnessOutcome::Budget(e.to_string()),
            }
        }
        WitnessOutcome::Complete(words)
    }

    fn build_model(&self, words: BTreeMap<StrVar, String>, asg: &IntAssignment) -> Model {
        let mut model = Model::default();
        for (v, w) in words {
            model.strings.insert(self.decls.str_name(v).to_string(), w);
        }
        for v in self.decls.int_vars() {
            model
                .ints
                .insert(self.decls.int_name(v).to_string(), asg.get(self.int_var(v)));
        }
        model
    }

    /// Smallest-model proposal: minimize the total length, then fix it and
    /// minimize each length variable in order for a canonical witness.
    fn minimal_model(
        &self,
        system: &[LinearConstraint],
        blocks: &[BlockingClause],
        nonneg: &BTreeSet<VarId>,
        len_vars: &[VarId],
        sum_var: VarId,
        limits: &LiaLimits,
    ) -> LiaResult {
        let mut current = match lia::minimize(sum_var, system, blocks, nonneg, limits) {
            LiaResult::Sat(m) => m,
            other => return other,
        };
        let mut pinned = system.to_vec();
        pinned.push(LinearConstraint::eq(sum_var, current.get(sum_var)));
        for lv in len_vars {
            match lia::minimize(*lv, &pinned, blocks, nonneg, limits) {
                LiaResult::Sat(m) => {
                    pinned.push(LinearConstraint::eq(*lv, m.get(*lv)));
                    current = m;
                }
                LiaResult::Unsat => return LiaResult::Unsat,
                LiaResult::Unknown => return LiaResult::Unknown,
            }
        }
        LiaResult::Sat(current)
    }

    fn record_refined(&self, stats: &mut SolverStats, v: StrVar, lo: u64, hi: Option<u64>) {
        let name = self.decls.str_name(v).to_string();
        stats
            .refined_lower
            .entry(name.clone())
            .and_modify(|x| *x = (*x).max(lo))
            .or_insert(lo);
        if let Some(hi) = hi {
            stats
                .refined_upper
                .entry(name)
                .and_modify(|x| *x = (*x).min(hi))
                .or_insert(hi);
        }
    }

    /// Converts an arithmetic atom into a normalized linear constraint over
    /// the solver's variable space (strict `<` becomes `<=` with -1).
    fn linearize_atom(&self, atom: &ArithAtom) -> LinearConstraint {
        let (l, r, rel, shift) = match atom {
            ArithAtom::Eq(l, r) => (l, r, Relation::Eq, 0),
            ArithAtom::Lt(l, r) => (l, r, Relation::Le, -1),
        };
        let mut coeffs: BTreeMap<VarId, BigInt> = BTreeMap::new();
        let mut constant = BigInt::zero();
        self.linearize_term(l, &BigInt::from(1), &mut coeffs, &mut constant);
        self.linearize_term(r, &BigInt::from(-1), &mut coeffs, &mut constant);
        // sum + constant REL 0  ~>  sum REL -constant (+ shift for strict).
        LinearConstraint::new(coeffs, rel, -constant + shift)
    }

    fn linearize_term(
        &self,
        t: &IntTerm,
        coeff: &BigInt,
        out: &mut BTreeMap<VarId, BigInt>,
        constant: &mut BigInt,
    ) {
        match t {
            IntTerm::Const(v) => *constant += coeff * v,
            IntTerm::Var(v) => {
                *out.entry(self.int_var(*v)).or_default() += coeff;
            }
            IntTerm::Len(s) => {
                *out.entry(self.len_var(*s)).or_default() += coeff;
            }
            IntTerm::Sum(l, r) => {
                self.linearize_term(l, coeff, out, constant);
                self.linearize_term(r, coeff, out, constant);
            }
            IntTerm::ScalarMul(c, inner) => {
                self.linearize_term(inner, &(coeff * c), out, constant);
            }
        }
    }

    /// Extracts `len(v) >= c` / `len(v) <= c` facts from single-variable
    /// constraints, seeding the bounds the refinement phase starts from.
    fn absorb_simple_bound(
        &self,
        c: &LinearConstraint,
        bounds: &mut BTreeMap<StrVar, (u64, Option<u64>)>,
    ) {
        if c.coeffs.len() != 1 {
            return;
        }
        let (&var, coeff) = c.coeffs.iter().next().unwrap();
        let Some(v) = self.decls.str_vars().find(|s| self.len_var(*s) == var) else {
            return;
        };
        let entry = bounds.get_mut(&v).unwrap();
        // a * len REL k
        let a = coeff.clone();
        let k = c.constant.clone();
        let apply_le = |entry: &mut (u64, Option<u64>), value: &BigInt| {
            // len <= value
            let hi = value.to_u64().unwrap_or(0);
            entry.1 = Some(entry.1.map_or(hi, |h| h.min(hi)));
        };
        let apply_ge = |entry: &mut (u64, Option<u64>), value: &BigInt| {
            // len >= value
            if value.is_positive() {
                let lo = value.to_u64().unwrap_or(u64::MAX);
                entry.0 = entry.0.max(lo);
            }
        };
        match c.rel {
            Relation::Eq => {
                // len = k / a when divisible; bounds both ways otherwise the
                // constraint itself will refute.
                let (q, r) = num_integer::div_rem(k.clone(), a.clone());
                if r.is_zero() {
                    apply_le(entry, &q);
                    apply_ge(entry, &q);
                }
            }
            Relation::Le => {
                if a.is_positive() {
                    // len <= floor(k / a)
                    let q = num_integer::Integer::div_floor(&k, &a);
                    apply_le(entry, &q);
                } else {
                    // len >= ceil(k / a) with a negative
                    let q = num_integer::Integer::div_ceil(&k, &a);
                    apply_ge(entry, &q);
                }
            }
        }
    }
}

enum WitnessOutcome {
    Complete(BTreeMap<StrVar, String>),
    Failed(StrVar, u64),
    Budget(String),
}

/// A variable's compiled per-regex automata and, when it fit in the state
/// budget, their materialized intersection.
struct VarAutomata {
    autos: Vec<Rc<Automaton>>,
    intersection: Option<Rc<Automaton>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_script;

    fn alphabet() -> Alphabet {
        Alphabet::from_chars("abc".chars()).unwrap()
    }

    fn solve(text: &str) -> SolverResult {
        solve_with(text, HeuristicConfig::all_on(), Mode::Lazy)
    }

    fn solve_with(text: &str, cfg: HeuristicConfig, mode: Mode) -> SolverResult {
        let alphabet = alphabet();
        let script = parse_script(text, &alphabet).expect("script parses");
        let solver = Solver::new(&script.decls, &alphabet)
            .with_config(cfg)
            .with_mode(mode);
        let result = solver.solve_script(&script);
        if result.verdict == Verdict::Sat {
            assert!(
                validate_model(
                    &script.formula(),
                    result.model.as_ref().unwrap(),
                    &script.decls
                ),
                "sat model must validate"
            );
        }
        result
    }

    const JOINT_EXAMPLE: &str = r#"
        (declare-const X String)
        (assert (str.in_re X (re.* (str.to_re "abc"))))
        (assert (str.in_re X (re.union (re.++ (str.to_re "a") (re.* (str.to_re "a")))
                                       (re.++ (str.to_re "b") (re.* (str.to_re "b"))))))
        (check-sat)
    "#;

    #[test]
    fn joint_example_is_unsat() {
        let r = solve(JOINT_EXAMPLE);
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn joint_example_refuted_without_automata_when_ps_on() {
        let before = automata::constructions();
        let r = solve(JOINT_EXAMPLE);
        assert_eq!(r.verdict, Verdict::Unsat);
        assert_eq!(r.stats.automata_built, 0);
        assert_eq!(automata::constructions(), before);
        assert!(r.stats.ps_refutations > 0);
    }

    #[test]
    fn joint_example_unsat_without_prefix_suffix_too() {
        let mut cfg = HeuristicConfig::all_on();
        cfg.prefix_suffix = false;
        let r = solve_with(JOINT_EXAMPLE, cfg, Mode::Lazy);
        assert_eq!(r.verdict, Verdict::Unsat);
        assert!(r.stats.automata_built > 0);
    }

    #[test]
    fn length_multiple_constraint_sat() {
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (< 4 (str.len X)))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        let model = r.model.unwrap();
        assert_eq!(model.strings["X"], "abcabc");
    }

    #[test]
    fn length_abstraction_conflict_without_automata() {
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (= (str.len X) 4))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Unsat);
        assert_eq!(r.stats.automata_built, 0);
    }

    #[test]
    fn arithmetic_conflict_alone() {
        let r = solve(
            r#"(declare-const X String)
               (assert (< 6 (str.len X)))
               (assert (< (str.len X) 6))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Unsat);
        assert_eq!(r.stats.automata_built, 0);
        assert_eq!(r.stats.length_models, 0);
    }

    #[test]
    fn empty_formula_is_sat() {
        let r = solve("(declare-const X String)(check-sat)");
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().strings["X"], "");
    }

    #[test]
    fn complement_constraint_refined_and_solved() {
        // X not in a*: minimal witness has length 1 but "a" is excluded, so
        // the least model is "b".
        let r = solve(
            r#"(declare-const X String)
               (assert (not (str.in_re X (re.* (str.to_re "a")))))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        let w = r.model.unwrap().strings["X"].clone();
        assert!(!w.chars().all(|c| c == 'a') || w.is_empty());
    }

    #[test]
    fn refinement_raises_lower_bound_and_first_model() {
        // Shortest accepting path of the complemented automaton is 7.
        let text = r#"
            (declare-const X String)
            (assert (str.in_re X (re.comp (re.union (re.union (str.to_re "") (str.to_re "a"))
                (re.union (re.++ (str.to_re "a") (str.to_re "a"))
                (re.union (re.++ (str.to_re "a") (re.++ (str.to_re "a") (str.to_re "a")))
                (re.union (re.++ (str.to_re "aa") (re.++ (str.to_re "a") (str.to_re "a")))
                (re.union (re.++ (str.to_re "aaa") (re.++ (str.to_re "a") (str.to_re "a")))
                          (re.++ (str.to_re "aaaa") (re.++ (str.to_re "a") (str.to_re "a")))))))))))
            (assert (str.in_re X (re.* (str.to_re "a"))))
            (assert (< 4 (str.len X)))
            (check-sat)
        "#;
        // The complement excludes a-words of length < 7; combined with a*,
        // the shortest witness is aaaaaaa.
        let r = solve(text);
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().strings["X"], "aaaaaaa");
        assert!(r.stats.refinements > 0);
        assert!(r.stats.refined_lower["X"] >= 7);
        assert!(r.stats.first_length_model["X"] >= 7);
    }

    #[test]
    fn eager_and_lazy_agree() {
        let texts = [
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (str.in_re X (re.* (re.union (str.to_re "a") (str.to_re "b")))))
               (assert (< 2 (str.len X)))
               (check-sat)"#,
            JOINT_EXAMPLE,
        ];
        for text in texts {
            let lazy = solve_with(text, HeuristicConfig::all_on(), Mode::Lazy);
            let eager = solve_with(text, HeuristicConfig::all_on(), Mode::Eager);
            assert_eq!(lazy.verdict, eager.verdict);
            assert_eq!(lazy.model.is_some(), eager.model.is_some());
        }
    }

    #[test]
    fn multiple_variables_and_integers() {
        let r = solve(
            r#"(declare-const X String)
               (declare-const Y String)
               (declare-const n Int)
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (str.in_re Y (re.++ (str.to_re "c") (re.* (str.to_re "c")))))
               (assert (= (+ (str.len X) (str.len Y)) (* 2 n)))
               (assert (< 3 (str.len X)))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        let m = r.model.unwrap();
        assert!(m.strings["X"].len() >= 4);
        assert!(!m.strings["Y"].is_empty());
        let total = m.strings["X"].len() + m.strings["Y"].len();
        assert_eq!(BigInt::from(total), 2 * m.ints["n"].clone());
    }

    #[test]
    fn two_vars_unsat_propagates() {
        let r = solve(
            r#"(declare-const X String)
               (declare-const Y String)
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (= (str.len X) (+ (str.len Y) 1)))
               (assert (str.in_re Y (re.* (str.to_re "cc"))))
               (check-sat)"#,
        );
        // len(X) even, len(Y) even, len(X) = len(Y) + 1: parity conflict.
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn disjunction_splits_into_cubes() {
        let r = solve(
            r#"(declare-const X String)
               (assert (or (str.in_re X (str.to_re "ab"))
                           (str.in_re X (str.to_re "c"))))
               (assert (= (str.len X) 1))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().strings["X"], "c");
        assert!(r.stats.cubes_explored >= 2);
    }

    #[test]
    fn empty_string_fact_from_prefix_suffix() {
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().strings["X"], "");
        assert!(r.stats.ps_empty_string_facts > 0);
        assert_eq!(r.stats.automata_built, 0);
    }

    #[test]
    fn empty_string_fact_conflicts_with_length() {
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (< 0 (str.len X)))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn blocking_loop_advances_past_gaps() {
        // Lengths multiple of 2 from one side, the joint language only has
        // multiples of 4 beyond the abstraction: blocking must advance.
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "ab"))))
               (assert (str.in_re X (re.* (re.++ (str.to_re "ab") (str.to_re "ab")))))
               (assert (< 1 (str.len X)))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().strings["X"], "abab");
    }

    #[test]
    fn re_none_is_unsat() {
        let r = solve(
            r#"(declare-const X String)
               (assert (str.in_re X re.none))
               (check-sat)"#,
        );
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn verdicts_invariant_under_heuristics() {
        let texts = [
            JOINT_EXAMPLE,
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (= (str.len X) 4))
               (check-sat)"#,
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (assert (< 4 (str.len X)))
               (check-sat)"#,
            r#"(declare-const X String)
               (assert (not (str.in_re X (re.* (str.to_re "a")))))
               (assert (< (str.len X) 2))
               (check-sat)"#,
        ];
        for text in texts {
            let mut verdicts = Vec::new();
            for bits in 0..32u8 {
                let r = solve_with(text, HeuristicConfig::from_bits(bits), Mode::Lazy);
                verdicts.push(r.verdict);
            }
            let decided: Vec<_> = verdicts
                .iter()
                .filter(|v| **v != Verdict::Unknown)
                .collect();
            assert!(!decided.is_empty());
            assert!(
                decided.windows(2).all(|w| w[0] == w[1]),
                "heuristics changed the verdict on {text}: {verdicts:?}"
            );
        }
    }

    #[test]
    fn timeout_reports_unknown() {
        let alphabet = alphabet();
        let script = parse_script(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (check-sat)"#,
            &alphabet,
        )
        .unwrap();
        let solver = Solver::new(&script.decls, &alphabet).with_budgets(Budgets {
            timeout: Some(Duration::from_secs(0)),
            ..Budgets::default()
        });
        let r = solver.solve_script(&script);
        assert_eq!(r.verdict, Verdict::Unknown);
        assert_eq!(r.stats.unknown_reason.as_deref(), Some("timeout"));
    }

    #[test]
    fn cube_budget_reports_unknown() {
        // Force a huge DNF with a tiny cube cap and an unsatisfiable core so
        // no cube answers sat before the budget trips.
        let mut clauses = String::new();
        for _ in 0..13 {
            clauses.push_str(r#"(assert (or (< (str.len X) 9) (< (str.len X) 8)))"#);
        }
        let text = format!(
            r#"(declare-const X String)
               {clauses}
               (assert (< 20 (str.len X)))
               (assert (< (str.len X) 3))
               (check-sat)"#
        );
        let alphabet = alphabet();
        let script = parse_script(&text, &alphabet).unwrap();
        let solver = Solver::new(&script.decls, &alphabet).with_budgets(Budgets {
            max_cubes: 16,
            ..Budgets::default()
        });
        let r = solver.solve_script(&script);
        assert_eq!(r.verdict, Verdict::Unknown);
    }
}
