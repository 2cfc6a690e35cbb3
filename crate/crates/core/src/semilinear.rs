//! Length abstractions: semilinear sets of word lengths computed from regex
//! syntax, bound refinement against automata, and the translation into linear
//! constraints for the arithmetic core.
//!
//! A semilinear set is a finite union of arithmetic progressions
//! `{offset + period * k : k >= 0}` (period 0 denotes the singleton).
//! Complement-free regexes get an exact abstraction by structural recursion;
//! any complement degrades to bounds, recovered later by refining against the
//! compiled automaton.

use crate::automata::{Automaton, FiniteLanguage};
use crate::lia::{LinearConstraint, Relation, VarId};
use crate::syntax::RegexTerm;
use num_bigint::BigInt;
use std::collections::BTreeMap;

pub const DEFAULT_PROGRESSION_CAP: usize = 64;

/// Sporadic-element bound when summing or starring progressions; beyond it
/// the abstraction degrades to bounds instead.
const SPORADIC_CAP: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgressionCapExceeded;

impl std::fmt::Display for ProgressionCapExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "progression cap exceeded")
    }
}

impl std::error::Error for ProgressionCapExceeded {}

/// A normalized, nonempty finite union of arithmetic progressions
/// `(offset, period)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearSet {
    progressions: Vec<(u64, u64)>,
}

impl SemilinearSet {
    pub fn singleton(n: u64) -> Self {
        SemilinearSet {
            progressions: vec![(n, 0)],
        }
    }

    pub fn from_progressions(
        progressions: Vec<(u64, u64)>,
    ) -> Result<Self, ProgressionCapExceeded> {
        debug_assert!(!progressions.is_empty());
        let progressions = normalize(progressions);
        if progressions.len() > DEFAULT_PROGRESSION_CAP {
            return Err(ProgressionCapExceeded);
        }
        Ok(SemilinearSet { progressions })
    }

    pub fn progressions(&self) -> &[(u64, u64)] {
        &self.progressions
    }

    pub fn contains(&self, n: u64) -> bool {
        self.progressions.iter().any(|&(o, p)| {
            if p == 0 {
                n == o
            } else {
                n >= o && (n - o).is_multiple_of(p)
            }
        })
    }

    /// Smallest member.
    pub fn min_value(&self) -> u64 {
        self.progressions.iter().map(|(o, _)| *o).min().unwrap_or(0)
    }

    /// Largest member when the set is finite.
    pub fn max_value(&self) -> Option<u64> {
        if self.progressions.iter().any(|(_, p)| *p != 0) {
            None
        } else {
            self.progressions.iter().map(|(o, _)| *o).max()
        }
    }
}

/// Drops progressions subsumed by another: `(o2, p2)` is redundant under
/// `(o1, p1)` when `o2 >= o1`, `o2 - o1` is a multiple of `p1`, and `p2` is a
/// multiple of `p1` (singletons count as period 0).
fn normalize(mut progs: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    progs.sort_unstable();
    progs.dedup();
    let subsumes = |a: (u64, u64), b: (u64, u64)| -> bool {
        let ((o1, p1), (o2, p2)) = (a, b);
        if p1 == 0 {
            return p2 == 0 && o1 == o2;
        }
        o2 >= o1 && (o2 - o1) % p1 == 0 && p2 % p1 == 0
    };
    let mut keep = vec![true; progs.len()];
    for i in 0..progs.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..progs.len() {
            if i != j && keep[j] && subsumes(progs[i], progs[j]) {
                keep[j] = false;
            }
        }
    }
    progs
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

pub fn semilinear_union(
    a: &SemilinearSet,
    b: &SemilinearSet,
) -> Result<SemilinearSet, ProgressionCapExceeded> {
    let mut progs = a.progressions.clone();
    progs.extend_from_slice(&b.progressions);
    SemilinearSet::from_progressions(progs)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minkowski sum `{x + y : x in a, y in b}`, exact.
///
/// For a pair of progressions with periods p and q, the sums of the period
/// parts form the numerical semigroup generated by p and q: sporadic elements
/// below the conductor, then every multiple of gcd(p, q). The sporadic part
/// is enumerated exactly by dynamic programming.
pub fn semilinear_sum(
    a: &SemilinearSet,
    b: &SemilinearSet,
) -> Result<SemilinearSet, ProgressionCapExceeded> {
    let mut progs: Vec<(u64, u64)> = Vec::new();
    for &(o1, p1) in &a.progressions {
        for &(o2, p2) in &b.progressions {
            let o = o1.checked_add(o2).ok_or(ProgressionCapExceeded)?;
            match (p1, p2) {
                (0, 0) => progs.push((o, 0)),
                (0, p) | (p, 0) => progs.push((o, p)),
                (p, q) => {
                    let g = gcd(p, q);
                    let a_u = p / g;
                    let b_u = q / g;
                    // Conductor of the semigroup generated by coprime a_u, b_u.
                    let conductor = (a_u - 1)
                        .checked_mul(b_u - 1)
                        .ok_or(ProgressionCapExceeded)?;
                    if conductor > SPORADIC_CAP {
                        return Err(ProgressionCapExceeded);
                    }
                    let c = conductor as usize;
                    let mut rep = vec![false; c.max(1)];
                    rep[0] = true;
                    for k in 1..c {
                        rep[k] = (k >= a_u as usize && rep[k - a_u as usize])
                            || (k >= b_u as usize && rep[k - b_u as usize]);
                    }
                    for (k, r) in rep.iter().enumerate().take(c.max(1)) {
                        if *r {
                            progs.push((o + k as u64 * g, 0));
                        }
                    }
                    progs.push((o + conductor * g, g));
                }
            }
        }
    }
    SemilinearSet::from_progressions(progs)
}

/// Additive closure of the set, including 0: all finite sums of members.
///
/// With g the gcd of all offsets and periods of the nonzero progressions,
/// the closure consists of sporadic multiples of g enumerated exactly by
/// dynamic programming, then all multiples of g from the first full window
/// onward.
pub fn semilinear_star(a: &SemilinearSet) -> Result<SemilinearSet, ProgressionCapExceeded> {
    let gens: Vec<(u64, u64)> = a
        .progressions
        .iter()
        .copied()
        .filter(|&(o, p)| o != 0 || p != 0)
        .collect();
    if gens.is_empty() {
        return Ok(SemilinearSet::singleton(0));
    }
    let g = gens.iter().fold(0u64, |acc, &(o, p)| gcd(acc, gcd(o, p)));
    debug_assert!(g > 0);
    // Generator values in units of g; the progression (o, p) contributes
    // o, o + p, o + 2p, ... (skipping the value 0).
    let units: Vec<(u64, u64)> = gens.iter().map(|&(o, p)| (o / g, p / g)).collect();
    let min_gen = units
        .iter()
        .map(|&(o, p)| if o > 0 { o } else { p })
        .min()
        .expect("nonzero generator exists");

    let mut bound = 128usize.max((min_gen as usize).saturating_mul(2));
    loop {
        if bound as u64 > SPORADIC_CAP * 4 {
            return Err(ProgressionCapExceeded);
        }
        let mut closure = vec![false; bound];
        closure[0] = true;
        for x in 1..bound {
            'gens: for &(o, p) in &units {
                if p == 0 {
                    if o > 0 && o <= x as u64 && closure[x - o as usize] {
                        closure[x] = true;
                        break 'gens;
                    }
                } else {
                    let mut v = if o == 0 { p } else { o };
                    while v <= x as u64 {
                        if closure[x - v as usize] {
                            closure[x] = true;
                            break 'gens;
                        }
                        v += p;
                    }
                }
            }
        }
        // First window of min_gen consecutive members: everything beyond is
        // reachable by repeatedly adding the smallest generator.
        let window = min_gen as usize;
        let start =
            (0..bound.saturating_sub(window)).find(|&t| (t..t + window).all(|x| closure[x]));
        match start {
            Some(t) => {
                let mut progs: Vec<(u64, u64)> = closure[..t]
                    .iter()
                    .enumerate()
                    .filter_map(|(x, c)| c.then_some((x as u64 * g, 0)))
                    .collect();
                progs.push((t as u64 * g, g));
                return SemilinearSet::from_progressions(progs);
            }
            None => bound *= 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Length abstraction
// ---------------------------------------------------------------------------

/// Sound abstraction of the word lengths of a regex language: either the
/// exact semilinear set, or lower/upper bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthAbstraction {
    Exact(SemilinearSet),
    Bounds { lower: u64, upper: Option<u64> },
}

impl LengthAbstraction {
    pub fn is_exact(&self) -> bool {
        matches!(self, LengthAbstraction::Exact(_))
    }

    /// Membership in the denoted set (exact for `Exact`, the interval for
    /// `Bounds`).
    pub fn contains(&self, n: u64) -> bool {
        match self {
            LengthAbstraction::Exact(set) => set.contains(n),
            LengthAbstraction::Bounds { lower, upper } => {
                n >= *lower && upper.map(|u| n <= u).unwrap_or(true)
            }
        }
    }
}

/// The regex denotes the empty language, so there is no length to abstract;
/// the constraint is an immediate conflict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyLanguage;

/// Computes the length abstraction of a regex from its syntax alone.
///
/// Complement-free regexes yield an exact semilinear set. Any complement
/// node degrades the whole abstraction to `Bounds(0, none)`, to be refined
/// against the automaton later. A blowup in progressions degrades to the
/// syntactic min/max length bounds, which stay sound.
pub fn abstract_lengths(re: &RegexTerm) -> Result<LengthAbstraction, EmptyLanguage> {
    if re.contains_complement() {
        return Ok(LengthAbstraction::Bounds {
            lower: 0,
            upper: None,
        });
    }
    match exact_lengths(re) {
        Ok(Some(set)) => Ok(LengthAbstraction::Exact(set)),
        Ok(None) => Err(EmptyLanguage),
        Err(ProgressionCapExceeded) => match length_bounds(re) {
            Some((lower, upper)) => Ok(LengthAbstraction::Bounds { lower, upper }),
            None => Err(EmptyLanguage),
        },
    }
}

/// Exact length set of a complement-free regex; `None` denotes the empty
/// language.
fn exact_lengths(re: &RegexTerm) -> Result<Option<SemilinearSet>, ProgressionCapExceeded> {
    match re {
        RegexTerm::Literal(w) => Ok(Some(SemilinearSet::singleton(w.chars().count() as u64))),
        RegexTerm::Empty => Ok(None),
        RegexTerm::Concat(l, r) => match (exact_lengths(l)?, exact_lengths(r)?) {
            (Some(a), Some(b)) => Ok(Some(semilinear_sum(&a, &b)?)),
            _ => Ok(None),
        },
        RegexTerm::Union(l, r) => match (exact_lengths(l)?, exact_lengths(r)?) {
            (Some(a), Some(b)) => Ok(Some(semilinear_union(&a, &b)?)),
            (Some(a), None) | (None, Some(a)) => Ok(Some(a)),
            (None, None) => Ok(None),
        },
        RegexTerm::Star(inner) => match exact_lengths(inner)? {
            Some(a) => Ok(Some(semilinear_star(&a)?)),
            // Star of the empty language accepts exactly the empty word.
            None => Ok(Some(SemilinearSet::singleton(0))),
        },
        RegexTerm::Complement(_) => {
            unreachable!("exact abstraction is only computed for complement-free regexes")
        }
    }
}

/// Syntactic min/max word lengths; `None` denotes the empty language, an
/// absent upper bound an infinite language. Complements fall back to
/// `(0, unbounded)`.
pub fn length_bounds(re: &RegexTerm) -> Option<(u64, Option<u64>)> {
    match re {
        RegexTerm::Literal(w) => {
            let n = w.chars().count() as u64;
            Some((n, Some(n)))
        }
        RegexTerm::Empty => None,
        RegexTerm::Concat(l, r) => {
            let (ll, lh) = length_bounds(l)?;
            let (rl, rh) = length_bounds(r)?;
            Some((ll + rl, lh.zip(rh).map(|(a, b)| a + b)))
        }
        RegexTerm::Union(l, r) => match (length_bounds(l), length_bounds(r)) {
            (Some((ll, lh)), Some((rl, rh))) => {
                let upper = match (lh, rh) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
                Some((ll.min(rl), upper))
            }
            (Some(b), None) | (None, Some(b)) => Some(b),
            (None, None) => None,
        },
        RegexTerm::Star(inner) => match length_bounds(inner) {
            None => Some((0, Some(0))),
            Some((_, Some(0))) => Some((0, Some(0))),
            Some(_) => Some((0, None)),
        },
        RegexTerm::Complement(_) => Some((0, None)),
    }
}

/// Tightens length bounds against the compiled automaton for the same regex:
/// the lower bound rises to the next length with an accepting path, the upper
/// bound drops to the longest accepting path when the language is finite (or
/// to the last accepting length below it). Never loosens; exact abstractions
/// are returned unchanged since they cannot be improved.
pub fn refine_bounds(
    la: &LengthAbstraction,
    auto: &Automaton,
    existing: (u64, Option<u64>),
) -> (u64, Option<u64>) {
    if la.is_exact() {
        return existing;
    }
    let (mut lo, mut hi) = existing;
    if let Some(pattern) = auto.length_pattern() {
        match pattern.next_at_or_above(lo) {
            Some(n) => lo = n,
            None => {
                // No accepting path at or above lo: every accepted word is
                // shorter, which the upper bound can express.
                if let Some(prev) = pattern.prev_at_or_below(lo.saturating_sub(1)) {
                    hi = Some(hi.map_or(prev, |h| h.min(prev)));
                }
            }
        }
        if let Some(h) = hi {
            match pattern.prev_at_or_below(h) {
                Some(p) => hi = Some(p),
                // Nothing accepted at or below the upper bound; the window
                // collapses and the arithmetic core reports the conflict.
                None => lo = lo.max(h.saturating_add(1)),
            }
        }
    }
    if let FiniteLanguage::Finite(m) = auto.finite_language_bound() {
        hi = Some(hi.map_or(m, |h| h.min(m)));
    }
    (lo, hi)
}

/// Encodes the abstraction as linear constraints on `len_var`. Each element
/// of the returned list is one branch of a guarded disjunction: a single
/// branch for bounds or one-progression sets, one branch per progression
/// otherwise (the caller splits its search per branch). Fresh variables for
/// progression counters come from `fresh`.
pub fn to_linear_constraints(
    la: &LengthAbstraction,
    len_var: VarId,
    fresh: &mut dyn FnMut() -> VarId,
) -> Vec<Vec<LinearConstraint>> {
    match la {
        LengthAbstraction::Exact(set) => set
            .progressions()
            .iter()
            .map(|&(offset, period)| {
                let mut branch = vec![LinearConstraint::lower(len_var, 0)];
                if period == 0 {
                    branch.push(LinearConstraint::eq(len_var, BigInt::from(offset)));
                } else {
                    let k = fresh();
                    // len - period * k = offset, with k >= 0
                    branch.push(LinearConstraint::new(
                        BTreeMap::from([(len_var, BigInt::from(1)), (k, -BigInt::from(period))]),
                        Relation::Eq,
                        BigInt::from(offset),
                    ));
                    branch.push(LinearConstraint::lower(k, 0));
                }
                branch
            })
            .collect(),
        LengthAbstraction::Bounds { lower, upper } => {
            let mut branch = vec![LinearConstraint::lower(len_var, 0)];
            branch.push(LinearConstraint::lower(len_var, BigInt::from(*lower)));
            if let Some(upper) = upper {
                branch.push(LinearConstraint::upper(len_var, BigInt::from(*upper)));
            }
            vec![branch]
        }
    }
}
