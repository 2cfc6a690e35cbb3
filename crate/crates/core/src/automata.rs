//! Finite automata over character intervals: regex compilation, complement
//! via subset construction, product intersection, emptiness, fixed-length
//! path queries, and witness extraction.
//!
//! Automata are immutable after construction. Every automaton handed out by
//! [`compile`] or [`intersect`] is epsilon-free and trimmed to its reachable
//! states. Complement determinizes the inner automaton, completes it with a
//! sink over the alphabet, and flips the accepting states; a state budget
//! turns determinization blowup into an error instead of nontermination.
//!
//! The module keeps a thread-local count of automaton constructions so that
//! callers (and tests) can verify that purely syntactic reasoning really
//! constructed nothing.

use crate::alphabet::{Alphabet, CharRange, CharSet};
use crate::syntax::RegexTerm;
use std::cell::Cell;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::time::Instant;

pub type StateId = u32;

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

/// Distinct reachable-set cap when searching for the eventual period of the
/// accepted-length sequence.
const LENGTH_PATTERN_CAP: usize = 1 << 15;

thread_local! {
    static CONSTRUCTIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of automata constructed on this thread so far.
pub fn constructions() -> u64 {
    CONSTRUCTIONS.with(|c| c.get())
}

fn record_construction() {
    CONSTRUCTIONS.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateBudgetExceeded {
    /// The state (or visited-tuple) budget ran out.
    States(usize),
    /// The cooperative deadline passed mid-construction.
    Deadline,
}

impl fmt::Display for StateBudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateBudgetExceeded::States(budget) => {
                write!(f, "automaton state budget of {budget} exceeded")
            }
            StateBudgetExceeded::Deadline => write!(f, "timeout"),
        }
    }
}

impl std::error::Error for StateBudgetExceeded {}

/// Budgets for automaton construction and search: a state cap plus an
/// optional cooperative deadline checked during long loops.
#[derive(Debug, Clone, Copy)]
pub struct AutomataLimits {
    pub max_states: usize,
    pub deadline: Option<Instant>,
}

impl AutomataLimits {
    pub fn states(max_states: usize) -> Self {
        AutomataLimits {
            max_states,
            deadline: None,
        }
    }

    pub fn with_deadline(max_states: usize, deadline: Option<Instant>) -> Self {
        AutomataLimits {
            max_states,
            deadline,
        }
    }

    fn check_deadline(&self) -> Result<(), StateBudgetExceeded> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(StateBudgetExceeded::Deadline),
            _ => Ok(()),
        }
    }
}

impl Default for AutomataLimits {
    fn default() -> Self {
        AutomataLimits::states(DEFAULT_STATE_BUDGET)
    }
}

/// Syntactic cost estimate of compiling a regex, used to order intersections
/// cheapest-first without constructing anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CostEstimate {
    pub value: u64,
}

/// Recursive cost estimate: a literal costs its length (at least 1), concat
/// and union cost the sum of their parts, star doubles, and complement costs
/// the product of the estimates of the complemented term's immediate
/// subterms. Arithmetic saturates.
pub fn estimate_cost(re: &RegexTerm) -> CostEstimate {
    let value = match re {
        RegexTerm::Literal(w) => (w.chars().count() as u64).max(1),
        RegexTerm::Empty => 1,
        RegexTerm::Concat(l, r) | RegexTerm::Union(l, r) => estimate_cost(l)
            .value
            .saturating_add(estimate_cost(r).value),
        RegexTerm::Star(inner) => estimate_cost(inner).value.saturating_mul(2),
        RegexTerm::Complement(inner) => {
            let children = inner.children();
            if children.is_empty() {
                estimate_cost(inner).value
            } else {
                children
                    .iter()
                    .map(|c| estimate_cost(c).value)
                    .fold(1u64, |acc, v| acc.saturating_mul(v))
            }
        }
    };
    CostEstimate {
        value: value.max(1),
    }
}

// ---------------------------------------------------------------------------
// Bit sets over states
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Hash)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(len: usize) -> Self {
        BitSet {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn or_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

// ---------------------------------------------------------------------------
// Automaton
// ---------------------------------------------------------------------------

/// A nondeterministic finite automaton with character-interval transition
/// labels. States are contiguous ids `0..n`.
#[derive(Debug, Clone)]
pub struct Automaton {
    initial: StateId,
    accepting: Vec<bool>,
    transitions: Vec<Vec<(CharRange, StateId)>>,
    epsilon: Vec<Vec<StateId>>,
    deterministic: bool,
}

impl Automaton {
    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s as usize]
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn transitions(&self, s: StateId) -> &[(CharRange, StateId)] {
        &self.transitions[s as usize]
    }

    fn is_epsilon_free(&self) -> bool {
        self.epsilon.iter().all(|e| e.is_empty())
    }

    /// Runs the automaton on a word.
    pub fn accepts(&self, word: &str) -> bool {
        debug_assert!(self.is_epsilon_free());
        let mut live = BitSet::new(self.num_states());
        live.insert(self.initial as usize);
        for c in word.chars() {
            let v = c as u32;
            let mut next = BitSet::new(self.num_states());
            for s in live.iter() {
                for (range, target) in &self.transitions[s] {
                    if range.contains(v) {
                        next.insert(*target as usize);
                    }
                }
            }
            live = next;
            if live.is_empty() {
                return false;
            }
        }
        let accepted = live.iter().any(|s| self.accepting[s]);
        accepted
    }

    /// True iff some accepting state is reachable from the initial state.
    pub fn is_empty(&self) -> bool {
        let mut seen = BitSet::new(self.num_states());
        let mut queue = VecDeque::from([self.initial as usize]);
        seen.insert(self.initial as usize);
        while let Some(s) = queue.pop_front() {
            if self.accepting[s] {
                return false;
            }
            for (_, t) in &self.transitions[s] {
                if !seen.contains(*t as usize) {
                    seen.insert(*t as usize);
                    queue.push_back(*t as usize);
                }
            }
            for t in &self.epsilon[s] {
                if !seen.contains(*t as usize) {
                    seen.insert(*t as usize);
                    queue.push_back(*t as usize);
                }
            }
        }
        true
    }

    /// Length of the shortest accepting path, absent when the language is
    /// empty.
    pub fn shortest_accepting_length(&self) -> Option<u64> {
        let mut live = BitSet::new(self.num_states());
        live.insert(self.initial as usize);
        self.close_epsilon(&mut live);
        let succ = self.successor_sets();
        let mut depth = 0u64;
        let mut seen_sets: HashMap<BitSet, u64> = HashMap::new();
        loop {
            if live.iter().any(|s| self.accepting[s]) {
                return Some(depth);
            }
            if live.is_empty() || seen_sets.insert(live.clone(), depth).is_some() {
                return None;
            }
            let mut next = BitSet::new(self.num_states());
            for s in live.iter() {
                next.or_with(&succ[s]);
            }
            self.close_epsilon(&mut next);
            live = next;
            depth += 1;
        }
    }

    fn close_epsilon(&self, set: &mut BitSet) {
        let mut queue: VecDeque<usize> = set.iter().collect();
        while let Some(s) = queue.pop_front() {
            for t in &self.epsilon[s] {
                if !set.contains(*t as usize) {
                    set.insert(*t as usize);
                    queue.push_back(*t as usize);
                }
            }
        }
    }

    /// Per-state successor sets ignoring labels (all labels are nonempty).
    fn successor_sets(&self) -> Vec<BitSet> {
        let n = self.num_states();
        let mut out = vec![BitSet::new(n); n];
        for (s, ts) in self.transitions.iter().enumerate() {
            for (_, t) in ts {
                out[s].insert(*t as usize);
            }
        }
        out
    }

    /// Per-state predecessor sets ignoring labels.
    fn predecessor_sets(&self) -> Vec<BitSet> {
        let n = self.num_states();
        let mut out = vec![BitSet::new(n); n];
        for (s, ts) in self.transitions.iter().enumerate() {
            for (_, t) in ts {
                out[*t as usize].insert(s);
            }
        }
        out
    }

    fn step(&self, live: &BitSet, succ: &[BitSet]) -> BitSet {
        let mut next = BitSet::new(self.num_states());
        for s in live.iter() {
            next.or_with(&succ[s]);
        }
        next
    }

    /// True iff some word of length exactly `n` is accepted. Computed by
    /// iterating the reachable-state set; the set sequence is eventually
    /// periodic, so large `n` resolve through the detected cycle.
    pub fn has_accepting_path_of_length(&self, n: u64) -> bool {
        debug_assert!(self.is_epsilon_free());
        match self.length_pattern() {
            Some(pattern) => pattern.contains(n),
            None => {
                // Pattern too large to detect; walk directly.
                let succ = self.successor_sets();
                let mut live = BitSet::new(self.num_states());
                live.insert(self.initial as usize);
                for _ in 0..n {
                    live = self.step(&live, &succ);
                    if live.is_empty() {
                        return false;
                    }
                }
                let accepted = live.iter().any(|s| self.accepting[s]);
                accepted
            }
        }
    }

    /// The set of accepted word lengths as an eventually periodic pattern,
    /// or `None` when the reachable-set sequence does not cycle within the
    /// detection cap.
    pub fn length_pattern(&self) -> Option<LengthPattern> {
        debug_assert!(self.is_epsilon_free());
        let succ = self.successor_sets();
        let mut live = BitSet::new(self.num_states());
        live.insert(self.initial as usize);
        let mut hits = Vec::new();
        let mut seen: HashMap<BitSet, usize> = HashMap::new();
        loop {
            if let Some(&start) = seen.get(&live) {
                let period = hits.len() - start;
                return Some(LengthPattern {
                    hits,
                    cycle_start: start as u64,
                    period: period as u64,
                });
            }
            if seen.len() >= LENGTH_PATTERN_CAP {
                return None;
            }
            seen.insert(live.clone(), hits.len());
            hits.push(live.iter().any(|s| self.accepting[s]));
            live = self.step(&live, &succ);
        }
    }

    /// Extracts the word of length `n` the automaton accepts that follows the
    /// least feasible character at every position, or `None` when no word of
    /// that length is accepted.
    pub fn extract_word_of_length(&self, n: u64) -> Option<String> {
        debug_assert!(self.is_epsilon_free());
        let back = BackwardSeq::new(self)?;
        let mut current = BitSet::new(self.num_states());
        current.insert(self.initial as usize);
        if !current.intersects(back.get(n)) {
            return None;
        }
        let mut word = String::new();
        for pos in 0..n {
            let remaining = n - pos - 1;
            let target = back.get(remaining);
            // Elementary intervals over the outgoing labels of live states.
            let mut bounds: Vec<u32> = Vec::new();
            for s in current.iter() {
                for (range, _) in &self.transitions[s] {
                    bounds.push(range.lo);
                    bounds.push(range.hi.saturating_add(1));
                }
            }
            bounds.sort_unstable();
            bounds.dedup();
            let mut advanced = false;
            for w in bounds.windows(2) {
                let probe = w[0];
                let mut next = BitSet::new(self.num_states());
                for s in current.iter() {
                    for (range, t) in &self.transitions[s] {
                        if range.contains(probe) && target.contains(*t as usize) {
                            next.insert(*t as usize);
                        }
                    }
                }
                if !next.is_empty() {
                    let c = char::from_u32(probe).expect("labels are valid scalars");
                    word.push(c);
                    current = next;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                return None;
            }
        }
        if !current.iter().any(|s| self.accepting[s]) {
            return None;
        }
        debug_assert!(self.accepts(&word), "extracted word failed membership");
        Some(word)
    }

    /// Classifies the language as empty, finite (with its longest word
    /// length), or infinite, by checking for a cycle among useful states.
    pub fn finite_language_bound(&self) -> FiniteLanguage {
        let n = self.num_states();
        let succ = self.successor_sets();
        let pred = self.predecessor_sets();
        let mut fwd = BitSet::new(n);
        fwd.insert(self.initial as usize);
        let mut queue = VecDeque::from([self.initial as usize]);
        while let Some(s) = queue.pop_front() {
            for t in succ[s].iter() {
                if !fwd.contains(t) {
                    fwd.insert(t);
                    queue.push_back(t);
                }
            }
        }
        let mut bwd = BitSet::new(n);
        let mut queue = VecDeque::new();
        for s in 0..n {
            if self.accepting[s] {
                bwd.insert(s);
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for t in pred[s].iter() {
                if !bwd.contains(t) {
                    bwd.insert(t);
                    queue.push_back(t);
                }
            }
        }
        let useful: Vec<usize> = (0..n)
            .filter(|s| fwd.contains(*s) && bwd.contains(*s))
            .collect();
        if useful.is_empty() {
            return FiniteLanguage::Empty;
        }
        let index: HashMap<usize, usize> =
            useful.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        // Cycle detection over the useful subgraph by iterative DFS.
        let mut state = vec![0u8; useful.len()]; // 0 unvisited, 1 on stack, 2 done
        for root in 0..useful.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
            let succs_of = |i: usize| -> Vec<usize> {
                succ[useful[i]]
                    .iter()
                    .filter_map(|t| index.get(&t).copied())
                    .collect()
            };
            stack.push((root, succs_of(root), 0));
            state[root] = 1;
            while let Some((s, succs, child)) = stack.last_mut() {
                if *child < succs.len() {
                    let t = succs[*child];
                    *child += 1;
                    match state[t] {
                        0 => {
                            state[t] = 1;
                            let next = succs_of(t);
                            stack.push((t, next, 0));
                        }
                        1 => return FiniteLanguage::Infinite,
                        _ => {}
                    }
                } else {
                    state[*s] = 2;
                    stack.pop();
                }
            }
        }
        // Acyclic: longest path from the initial state to an accepting state,
        // by relaxation (terminates because the subgraph is a DAG).
        let mut dist = vec![None::<u64>; useful.len()];
        if let Some(&i0) = index.get(&(self.initial as usize)) {
            dist[i0] = Some(0);
        } else {
            return FiniteLanguage::Empty;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for (i, &s) in useful.iter().enumerate() {
                if let Some(d) = dist[i] {
                    for t in succ[s].iter() {
                        if let Some(&j) = index.get(&t) {
                            if dist[j].map(|cur| d + 1 > cur).unwrap_or(true) {
                                dist[j] = Some(d + 1);
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        let max = useful
            .iter()
            .enumerate()
            .filter(|(_, s)| self.accepting[**s])
            .filter_map(|(i, _)| dist[i])
            .max();
        match max {
            Some(m) => FiniteLanguage::Finite(m),
            None => FiniteLanguage::Empty,
        }
    }

    /// GraphViz dot rendering for debugging.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("digraph \"{name}\" {{\n"));
        out.push_str("  rankdir = LR;\n");
        out.push_str("  __start [shape = point];\n");
        for s in 0..self.num_states() {
            let shape = if self.accepting[s] {
                "doublecircle"
            } else {
                "circle"
            };
            out.push_str(&format!("  {s} [shape = {shape}];\n"));
        }
        out.push_str(&format!("  __start -> {};\n", self.initial));
        for (s, ts) in self.transitions.iter().enumerate() {
            for (range, t) in ts {
                let label = format!("{range}")
                    .replace('\\', "\\\\")
                    .replace('"', "\\\"");
                out.push_str(&format!("  {s} -> {t} [label = \"{label}\"];\n"));
            }
        }
        for (s, ts) in self.epsilon.iter().enumerate() {
            for t in ts {
                out.push_str(&format!("  {s} -> {t} [label = \"eps\"];\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiniteLanguage {
    Empty,
    Finite(u64),
    Infinite,
}

/// Accepted word lengths as a finite prefix plus a repeating cycle.
#[derive(Debug, Clone)]
pub struct LengthPattern {
    hits: Vec<bool>,
    cycle_start: u64,
    period: u64,
}

impl LengthPattern {
    pub fn contains(&self, n: u64) -> bool {
        if n < self.hits.len() as u64 {
            self.hits[n as usize]
        } else {
            let e = self.cycle_start + (n - self.cycle_start) % self.period;
            self.hits[e as usize]
        }
    }

    /// Smallest accepted length `>= from`, if any.
    pub fn next_at_or_above(&self, from: u64) -> Option<u64> {
        let horizon = self.cycle_start + self.period;
        let hi = from.max(horizon).saturating_add(self.period);
        (from..hi).find(|&n| self.contains(n))
    }

    /// Largest accepted length `<= upto`, if any.
    pub fn prev_at_or_below(&self, upto: u64) -> Option<u64> {
        let horizon = self.cycle_start + self.period;
        if upto < horizon {
            return (0..=upto).rev().find(|&n| self.contains(n));
        }
        let window_lo = upto + 1 - self.period;
        (window_lo..=upto)
            .rev()
            .find(|&n| self.contains(n))
            .or_else(|| {
                (0..horizon.min(window_lo))
                    .rev()
                    .find(|&n| self.contains(n))
            })
    }
}

/// Backward reachability sets `B_j` = states that reach an accepting state in
/// exactly `j` steps, compressed through the eventual cycle of the sequence.
struct BackwardSeq {
    sets: Vec<BitSet>,
    cycle_start: usize,
    period: usize,
}

impl BackwardSeq {
    fn new(auto: &Automaton) -> Option<Self> {
        let pred = auto.predecessor_sets();
        let n = auto.num_states();
        let mut current = BitSet::new(n);
        for s in 0..n {
            if auto.accepting[s] {
                current.insert(s);
            }
        }
        let mut sets: Vec<BitSet> = Vec::new();
        let mut seen: HashMap<BitSet, usize> = HashMap::new();
        loop {
            if let Some(&start) = seen.get(&current) {
                return Some(BackwardSeq {
                    period: sets.len() - start,
                    sets,
                    cycle_start: start,
                });
            }
            if seen.len() >= LENGTH_PATTERN_CAP {
                return None;
            }
            seen.insert(current.clone(), sets.len());
            sets.push(current.clone());
            let mut next = BitSet::new(n);
            for s in current.iter() {
                next.or_with(&pred[s]);
            }
            current = next;
        }
    }

    fn get(&self, j: u64) -> &BitSet {
        if j < self.sets.len() as u64 {
            &self.sets[j as usize]
        } else {
            let e = self.cycle_start as u64 + (j - self.cycle_start as u64) % self.period as u64;
            &self.sets[e as usize]
        }
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

struct Builder {
    transitions: Vec<Vec<(CharRange, StateId)>>,
    epsilon: Vec<Vec<StateId>>,
    limits: AutomataLimits,
}

struct Fragment {
    start: StateId,
    accepts: Vec<StateId>,
}

impl Builder {
    fn new(limits: AutomataLimits) -> Self {
        Builder {
            transitions: Vec::new(),
            epsilon: Vec::new(),
            limits,
        }
    }

    fn state(&mut self) -> Result<StateId, StateBudgetExceeded> {
        if self.transitions.len() >= self.limits.max_states {
            return Err(StateBudgetExceeded::States(self.limits.max_states));
        }
        if self.transitions.len().is_multiple_of(1024) {
            self.limits.check_deadline()?;
        }
        self.transitions.push(Vec::new());
        self.epsilon.push(Vec::new());
        Ok((self.transitions.len() - 1) as StateId)
    }

    fn edge(&mut self, from: StateId, range: CharRange, to: StateId) {
        self.transitions[from as usize].push((range, to));
    }

    fn eps(&mut self, from: StateId, to: StateId) {
        self.epsilon[from as usize].push(to);
    }

    fn fragment(
        &mut self,
        re: &RegexTerm,
        alphabet: &Alphabet,
    ) -> Result<Fragment, StateBudgetExceeded> {
        match re {
            RegexTerm::Literal(w) => {
                let start = self.state()?;
                let mut cur = start;
                for c in w.chars() {
                    debug_assert!(alphabet.contains(c), "literal outside alphabet");
                    let next = self.state()?;
                    self.edge(cur, CharRange::singleton(c), next);
                    cur = next;
                }
                Ok(Fragment {
                    start,
                    accepts: vec![cur],
                })
            }
            RegexTerm::Empty => {
                let start = self.state()?;
                Ok(Fragment {
                    start,
                    accepts: Vec::new(),
                })
            }
            RegexTerm::Concat(l, r) => {
                let lf = self.fragment(l, alphabet)?;
                let rf = self.fragment(r, alphabet)?;
                for a in &lf.accepts {
                    self.eps(*a, rf.start);
                }
                Ok(Fragment {
                    start: lf.start,
                    accepts: rf.accepts,
                })
            }
            RegexTerm::Union(l, r) => {
                let start = self.state()?;
                let lf = self.fragment(l, alphabet)?;
                let rf = self.fragment(r, alphabet)?;
                self.eps(start, lf.start);
                self.eps(start, rf.start);
                let mut accepts = lf.accepts;
                accepts.extend(rf.accepts);
                Ok(Fragment { start, accepts })
            }
            RegexTerm::Star(inner) => {
                let hub = self.state()?;
                let f = self.fragment(inner, alphabet)?;
                self.eps(hub, f.start);
                for a in &f.accepts {
                    self.eps(*a, hub);
                }
                Ok(Fragment {
                    start: hub,
                    accepts: vec![hub],
                })
            }
            RegexTerm::Complement(inner) => {
                // The complement is built as a standalone automaton and
                // embedded as a fragment.
                let auto = compile_with_budget(inner, alphabet, self.limits)?;
                let auto = complement_automaton(&auto, alphabet, self.limits)?;
                let offset = self.transitions.len() as StateId;
                for _ in 0..auto.num_states() {
                    self.state()?;
                }
                let mut accepts = Vec::new();
                for s in 0..auto.num_states() {
                    for (range, t) in &auto.transitions[s] {
                        self.edge(offset + s as StateId, *range, offset + *t);
                    }
                    if auto.accepting[s] {
                        accepts.push(offset + s as StateId);
                    }
                }
                Ok(Fragment {
                    start: offset + auto.initial,
                    accepts,
                })
            }
        }
    }
}

/// Compiles a grounded regex into an epsilon-free automaton whose language
/// matches the membership semantics of the regex.
pub fn compile(
    re: &RegexTerm,
    alphabet: &Alphabet,
    limits: &AutomataLimits,
) -> Result<Automaton, StateBudgetExceeded> {
    let auto = compile_with_budget(re, alphabet, *limits)?;
    record_construction();
    Ok(auto)
}

fn compile_with_budget(
    re: &RegexTerm,
    alphabet: &Alphabet,
    limits: AutomataLimits,
) -> Result<Automaton, StateBudgetExceeded> {
    let mut builder = Builder::new(limits);
    let fragment = builder.fragment(re, alphabet)?;
    let mut accepting = vec![false; builder.transitions.len()];
    for a in &fragment.accepts {
        accepting[*a as usize] = true;
    }
    let raw = Automaton {
        initial: fragment.start,
        accepting,
        transitions: builder.transitions,
        epsilon: builder.epsilon,
        deterministic: false,
    };
    Ok(finalize(eliminate_epsilon(&raw)))
}

/// Replaces epsilon transitions by copying the transitions and acceptance of
/// each state's epsilon closure.
fn eliminate_epsilon(auto: &Automaton) -> Automaton {
    let n = auto.num_states();
    let mut transitions = vec![Vec::new(); n];
    let mut accepting = vec![false; n];
    for s in 0..n {
        let mut closure = BitSet::new(n);
        closure.insert(s);
        auto.close_epsilon(&mut closure);
        for t in closure.iter() {
            accepting[s] = accepting[s] || auto.accepting[t];
            transitions[s].extend(auto.transitions[t].iter().copied());
        }
        transitions[s].sort_unstable_by_key(|(r, t)| (r.lo, r.hi, *t));
        transitions[s].dedup();
    }
    Automaton {
        initial: auto.initial,
        accepting,
        transitions,
        epsilon: vec![Vec::new(); n],
        deterministic: false,
    }
}

/// Trims to reachable states and recomputes the deterministic flag.
fn finalize(auto: Automaton) -> Automaton {
    let n = auto.num_states();
    let mut order: Vec<usize> = Vec::new();
    let mut remap = vec![usize::MAX; n];
    let mut queue = VecDeque::from([auto.initial as usize]);
    remap[auto.initial as usize] = 0;
    order.push(auto.initial as usize);
    while let Some(s) = queue.pop_front() {
        for (_, t) in &auto.transitions[s] {
            let t = *t as usize;
            if remap[t] == usize::MAX {
                remap[t] = order.len();
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    let mut transitions = Vec::with_capacity(order.len());
    let mut accepting = Vec::with_capacity(order.len());
    for &s in &order {
        let mut ts: Vec<(CharRange, StateId)> = auto.transitions[s]
            .iter()
            .map(|(r, t)| (*r, remap[*t as usize] as StateId))
            .collect();
        ts.sort_unstable_by_key(|(r, t)| (r.lo, r.hi, *t));
        ts.dedup();
        transitions.push(ts);
        accepting.push(auto.accepting[s]);
    }
    let deterministic = transitions
        .iter()
        .all(|ts| ts.windows(2).all(|w| w[0].0.hi < w[1].0.lo));
    Automaton {
        initial: 0,
        accepting,
        transitions,
        epsilon: vec![Vec::new(); order.len()],
        deterministic,
    }
}

/// Subset construction. Input must be epsilon-free.
fn determinize(auto: &Automaton, limits: AutomataLimits) -> Result<Automaton, StateBudgetExceeded> {
    debug_assert!(auto.is_epsilon_free());
    let mut subsets: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut worklist: VecDeque<Vec<StateId>> = VecDeque::new();
    let mut transitions: Vec<Vec<(CharRange, StateId)>> = Vec::new();
    let mut accepting: Vec<bool> = Vec::new();

    let initial = vec![auto.initial];
    subsets.insert(initial.clone(), 0);
    transitions.push(Vec::new());
    accepting.push(auto.accepting[auto.initial as usize]);
    worklist.push_back(initial);

    while let Some(subset) = worklist.pop_front() {
        let id = subsets[&subset];
        if id.is_multiple_of(256) {
            limits.check_deadline()?;
        }
        // Elementary intervals over all outgoing labels of the subset.
        let mut bounds: Vec<u32> = Vec::new();
        for s in &subset {
            for (range, _) in &auto.transitions[*s as usize] {
                bounds.push(range.lo);
                bounds.push(range.hi.saturating_add(1));
            }
        }
        bounds.sort_unstable();
        bounds.dedup();
        let mut out = Vec::new();
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1] - 1);
            let mut targets: Vec<StateId> = Vec::new();
            for s in &subset {
                for (range, t) in &auto.transitions[*s as usize] {
                    if range.contains(lo) {
                        targets.push(*t);
                    }
                }
            }
            if targets.is_empty() {
                continue;
            }
            targets.sort_unstable();
            targets.dedup();
            let next_id = match subsets.get(&targets) {
                Some(id) => *id,
                None => {
                    if subsets.len() >= limits.max_states {
                        return Err(StateBudgetExceeded::States(limits.max_states));
                    }
                    let id = subsets.len() as StateId;
                    subsets.insert(targets.clone(), id);
                    transitions.push(Vec::new());
                    accepting.push(targets.iter().any(|s| auto.accepting[*s as usize]));
                    worklist.push_back(targets);
                    id
                }
            };
            out.push((CharRange::new(lo, hi), next_id));
        }
        transitions[id as usize] = out;
    }

    let total = transitions.len();
    Ok(Automaton {
        initial: 0,
        accepting,
        transitions,
        epsilon: vec![Vec::new(); total],
        deterministic: true,
    })
}

/// Complement relative to the alphabet: determinize, complete with a sink,
/// flip accepting states.
fn complement_automaton(
    auto: &Automaton,
    alphabet: &Alphabet,
    limits: AutomataLimits,
) -> Result<Automaton, StateBudgetExceeded> {
    let dfa = determinize(auto, limits)?;
    record_construction();
    let n = dfa.num_states();
    let mut transitions = dfa.transitions.clone();
    let mut accepting: Vec<bool> = dfa.accepting.iter().map(|a| !a).collect();
    // Complete: route uncovered characters to an accepting sink.
    let sink = n as StateId;
    let mut sink_needed = false;
    for ts in transitions.iter_mut() {
        let covered = CharSet::from_ranges(ts.iter().map(|(r, _)| *r).collect());
        let uncovered = covered.complement_within(alphabet.char_set());
        for r in uncovered.ranges() {
            ts.push((*r, sink));
            sink_needed = true;
        }
        ts.sort_unstable_by_key(|(r, t)| (r.lo, r.hi, *t));
    }
    if sink_needed {
        let loops = alphabet
            .char_set()
            .ranges()
            .iter()
            .map(|r| (*r, sink))
            .collect();
        transitions.push(loops);
        accepting.push(true);
    }
    let total = transitions.len();
    Ok(finalize(Automaton {
        initial: dfa.initial,
        accepting,
        transitions,
        epsilon: vec![Vec::new(); total],
        deterministic: true,
    }))
}

/// Product automaton accepting the intersection of the two languages; only
/// the reachable part is materialized.
pub fn intersect(
    a: &Automaton,
    b: &Automaton,
    limits: &AutomataLimits,
) -> Result<Automaton, StateBudgetExceeded> {
    let owned_a;
    let a = if a.is_epsilon_free() {
        a
    } else {
        owned_a = eliminate_epsilon(a);
        &owned_a
    };
    let owned_b;
    let b = if b.is_epsilon_free() {
        b
    } else {
        owned_b = eliminate_epsilon(b);
        &owned_b
    };
    let mut pairs: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut worklist: VecDeque<(StateId, StateId)> = VecDeque::new();
    let mut transitions: Vec<Vec<(CharRange, StateId)>> = Vec::new();
    let mut accepting: Vec<bool> = Vec::new();

    let start = (a.initial, b.initial);
    pairs.insert(start, 0);
    transitions.push(Vec::new());
    accepting.push(a.accepting[start.0 as usize] && b.accepting[start.1 as usize]);
    worklist.push_back(start);

    while let Some((sa, sb)) = worklist.pop_front() {
        let id = pairs[&(sa, sb)];
        if id.is_multiple_of(1024) {
            limits.check_deadline()?;
        }
        let mut out = Vec::new();
        for (ra, ta) in &a.transitions[sa as usize] {
            for (rb, tb) in &b.transitions[sb as usize] {
                let Some(r) = ra.intersect(rb) else { continue };
                let key = (*ta, *tb);
                let next_id = match pairs.get(&key) {
                    Some(id) => *id,
                    None => {
                        if pairs.len() >= limits.max_states {
                            return Err(StateBudgetExceeded::States(limits.max_states));
                        }
                        let id = pairs.len() as StateId;
                        pairs.insert(key, id);
                        transitions.push(Vec::new());
                        accepting.push(a.accepting[*ta as usize] && b.accepting[*tb as usize]);
                        worklist.push_back(key);
                        id
                    }
                };
                out.push((r, next_id));
            }
        }
        out.sort_unstable_by_key(|(r, t)| (r.lo, r.hi, *t));
        out.dedup();
        transitions[id as usize] = out;
    }

    record_construction();
    let total = transitions.len();
    Ok(finalize(Automaton {
        initial: 0,
        accepting,
        transitions,
        epsilon: vec![Vec::new(); total],
        deterministic: a.deterministic && b.deterministic,
    }))
}

/// Searches for a single word of length `n` accepted by every automaton in
/// the list, without materializing the full product: a breadth-first search
/// over (state tuple, position) pruned by per-automaton backward
/// reachability. The visited-tuple budget bounds the work.
pub fn joint_path_of_length(
    autos: &[&Automaton],
    n: u64,
    limits: &AutomataLimits,
) -> Result<Option<String>, StateBudgetExceeded> {
    assert!(!autos.is_empty(), "joint path needs at least one automaton");
    let max_visited = limits.max_states;
    if autos.len() == 1 {
        // A single automaton reduces to greedy least-character extraction,
        // budgeted by position count.
        if n as u128 > max_visited as u128 {
            return Err(StateBudgetExceeded::States(max_visited));
        }
        return Ok(autos[0].extract_word_of_length(n));
    }
    let backs: Vec<BackwardSeq> = autos
        .iter()
        .map(|a| BackwardSeq::new(a).ok_or(StateBudgetExceeded::States(max_visited)))
        .collect::<Result<_, _>>()?;

    let start: Vec<StateId> = autos.iter().map(|a| a.initial).collect();
    let feasible = |tuple: &[StateId], remaining: u64| {
        tuple
            .iter()
            .zip(&backs)
            .all(|(s, b)| b.get(remaining).contains(*s as usize))
    };
    if !feasible(&start, n) {
        return Ok(None);
    }
    // Level-by-level BFS over state tuples; each level keeps discovery order
    // for determinism and records (parent index, character) for rebuilding.
    let mut levels: Vec<Vec<(Vec<StateId>, usize, char)>> = Vec::new();
    let mut frontier: Vec<Vec<StateId>> = vec![start];
    let mut visited = 1usize;
    for pos in 0..n {
        let remaining = n - pos - 1;
        let mut next_index: HashMap<Vec<StateId>, usize> = HashMap::new();
        let mut next_level: Vec<(Vec<StateId>, usize, char)> = Vec::new();
        for (parent_idx, tuple) in frontier.iter().enumerate() {
            // Elementary intervals over the labels jointly available.
            let mut bounds: Vec<u32> = Vec::new();
            for (auto, s) in autos.iter().zip(tuple.iter()) {
                for (range, _) in auto.transitions(*s) {
                    bounds.push(range.lo);
                    bounds.push(range.hi.saturating_add(1));
                }
            }
            bounds.sort_unstable();
            bounds.dedup();
            for w in bounds.windows(2) {
                let probe = w[0];
                // The least character of the interval drives every automaton.
                let mut targets: Vec<Vec<StateId>> = Vec::with_capacity(autos.len());
                let mut stuck = false;
                for (auto, s) in autos.iter().zip(tuple.iter()) {
                    let ts: Vec<StateId> = auto
                        .transitions(*s)
                        .iter()
                        .filter(|(r, _)| r.contains(probe))
                        .map(|(_, t)| *t)
                        .collect();
                    if ts.is_empty() {
                        stuck = true;
                        break;
                    }
                    targets.push(ts);
                }
                if stuck {
                    continue;
                }
                let c = char::from_u32(probe).expect("labels are valid scalars");
                // Cartesian expansion of the per-automaton targets.
                let mut combos: Vec<Vec<StateId>> = vec![Vec::new()];
                for ts in &targets {
                    let mut grown = Vec::with_capacity(combos.len() * ts.len());
                    for combo in &combos {
                        for t in ts {
                            let mut c2 = combo.clone();
                            c2.push(*t);
                            grown.push(c2);
                        }
                    }
                    combos = grown;
                }
                for combo in combos {
                    if !feasible(&combo, remaining) || next_index.contains_key(&combo) {
                        continue;
                    }
                    visited += 1;
                    if visited > max_visited {
                        return Err(StateBudgetExceeded::States(max_visited));
                    }
                    if visited.is_multiple_of(1024) {
                        limits.check_deadline()?;
                    }
                    next_index.insert(combo.clone(), next_level.len());
                    next_level.push((combo, parent_idx, c));
                }
            }
        }
        if next_level.is_empty() {
            return Ok(None);
        }
        frontier = next_level.iter().map(|(t, _, _)| t.clone()).collect();
        levels.push(next_level);
    }
    // First accepting tuple in discovery order.
    let accept_at = frontier.iter().position(|tuple| {
        tuple
            .iter()
            .zip(autos.iter())
            .all(|(s, a)| a.is_accepting(*s))
    });
    let Some(mut idx) = accept_at else {
        return Ok(None);
    };
    let mut chars = Vec::with_capacity(n as usize);
    for level in levels.iter().rev() {
        let (_, parent, c) = &level[idx];
        chars.push(*c);
        idx = *parent;
    }
    chars.reverse();
    let word: String = chars.into_iter().collect();
    debug_assert!(
        autos.iter().all(|a| a.accepts(&word)),
        "joint path failed membership re-check"
    );
    Ok(Some(word))
}
