//! Reference semantics: direct structural-recursion evaluation of regex
//! membership and formulas.
//!
//! This evaluator is deliberately independent of the automata engine. It is
//! the ground truth used for validating models, for the brute-force oracle in
//! the differential harness, and for the property tests of the automata
//! module itself.

use crate::syntax::{Atom, Formula, IntTerm, IntVar, RegexTerm, StrVar};
use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Flattened regex indexed by node id, so membership spans can be memoized.
struct RegexArena<'a> {
    nodes: Vec<&'a RegexTerm>,
}

impl<'a> RegexArena<'a> {
    fn new(root: &'a RegexTerm) -> (Self, usize) {
        let mut arena = RegexArena { nodes: Vec::new() };
        let root_id = arena.add(root);
        (arena, root_id)
    }

    fn add(&mut self, node: &'a RegexTerm) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        for child in node.children() {
            self.add(child);
        }
        id
    }

    /// Child ids follow the parent contiguously in preorder.
    fn child_ids(&self, id: usize) -> (usize, usize) {
        let first = id + 1;
        let second = first + self.nodes[first].size();
        (first, second)
    }
}

/// Memoized membership evaluator for one word against one regex.
struct Matcher<'a> {
    arena: RegexArena<'a>,
    word: Vec<char>,
    /// memo[(node, start, end)] -> membership of word[start..end).
    memo: Vec<Option<bool>>,
    spans: usize,
}

impl<'a> Matcher<'a> {
    fn new(re: &'a RegexTerm, word: &str) -> Self {
        let (arena, _) = RegexArena::new(re);
        let word: Vec<char> = word.chars().collect();
        let n = word.len();
        let spans = (n + 1) * (n + 2) / 2;
        let memo = vec![None; arena.nodes.len() * spans];
        Matcher {
            arena,
            word,
            memo,
            spans,
        }
    }

    fn span_index(&self, start: usize, end: usize) -> usize {
        // Triangular index over 0 <= start <= end <= n.
        let n = self.word.len();
        start * (2 * n + 3 - start) / 2 + (end - start)
    }

    fn matches(&mut self, node: usize, start: usize, end: usize) -> bool {
        let key = node * self.spans + self.span_index(start, end);
        if let Some(v) = self.memo[key] {
            return v;
        }
        let result = match self.arena.nodes[node] {
            RegexTerm::Literal(w) => {
                let mut chars = w.chars();
                end - start == w.chars().count()
                    && self.word[start..end]
                        .iter()
                        .all(|&c| chars.next() == Some(c))
            }
            RegexTerm::Concat(_, _) => {
                let (l, r) = self.arena.child_ids(node);
                (start..=end).any(|k| self.matches(l, start, k) && self.matches(r, k, end))
            }
            RegexTerm::Union(_, _) => {
                let (l, r) = self.arena.child_ids(node);
                self.matches(l, start, end) || self.matches(r, start, end)
            }
            RegexTerm::Star(_) => {
                let inner = node + 1;
                // Either the empty word, or a first nonempty factor in the
                // inner language followed by the rest of the star.
                start == end
                    || (start + 1..=end)
                        .any(|k| self.matches(inner, start, k) && self.matches(node, k, end))
            }
            RegexTerm::Complement(_) => !self.matches(node + 1, start, end),
            RegexTerm::Empty => false,
        };
        self.memo[key] = Some(result);
        result
    }
}

/// Decides `word in L(re)` by structural recursion on the regex, directly
/// following the membership semantics.
pub fn word_matches(re: &RegexTerm, word: &str) -> bool {
    let mut m = Matcher::new(re, word);
    let end = m.word.len();
    m.matches(0, 0, end)
}

/// A total assignment of words to string variables and integers to integer
/// variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub strings: BTreeMap<StrVar, String>,
    pub ints: BTreeMap<IntVar, BigInt>,
}

impl Assignment {
    pub fn string(&self, v: StrVar) -> &str {
        self.strings.get(&v).map(|s| s.as_str()).unwrap_or("")
    }

    pub fn int(&self, v: IntVar) -> BigInt {
        self.ints.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }
}

pub fn eval_int_term(t: &IntTerm, asg: &Assignment) -> BigInt {
    match t {
        IntTerm::Const(v) => v.clone(),
        IntTerm::Var(v) => asg.int(*v),
        IntTerm::Len(s) => BigInt::from(asg.string(*s).chars().count()),
        IntTerm::Sum(l, r) => eval_int_term(l, asg) + eval_int_term(r, asg),
        IntTerm::ScalarMul(c, inner) => c * eval_int_term(inner, asg),
    }
}

pub fn eval_atom(a: &Atom, asg: &Assignment) -> bool {
    match a {
        Atom::InRe(s, re) => word_matches(re, asg.string(*s)),
        Atom::IntEq(l, r) => eval_int_term(l, asg) == eval_int_term(r, asg),
        Atom::IntLt(l, r) => eval_int_term(l, asg) < eval_int_term(r, asg),
    }
}

/// Evaluates a formula under a total assignment.
pub fn eval_formula(f: &Formula, asg: &Assignment) -> bool {
    match f {
        Formula::Atom(a) => eval_atom(a, asg),
        Formula::And(fs) => fs.iter().all(|g| eval_formula(g, asg)),
        Formula::Or(fs) => fs.iter().any(|g| eval_formula(g, asg)),
        Formula::Not(inner) => !eval_formula(inner, asg),
        Formula::True => true,
        Formula::False => false,
    }
}

/// Enumerates all words over `alphabet_chars` of length at most `max_len`,
/// shortest first and lexicographic within a length.
pub fn words_up_to(alphabet_chars: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet_chars.len());
        for w in &layer {
            for &c in alphabet_chars {
                let mut w2 = w.clone();
                w2.push(c);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::RegexTerm as Re;

    #[test]
    fn literal_membership() {
        let re = Re::literal("abc");
        assert!(word_matches(&re, "abc"));
        assert!(!word_matches(&re, "ab"));
        assert!(!word_matches(&re, ""));
    }

    #[test]
    fn star_semantics() {
        let re = Re::star(Re::literal("abc"));
        assert!(word_matches(&re, ""));
        assert!(word_matches(&re, "abc"));
        assert!(word_matches(&re, "abcabc"));
        assert!(!word_matches(&re, "ab"));
        assert!(!word_matches(&re, "abca"));
    }

    #[test]
    fn star_of_nullable_inner_terminates() {
        let re = Re::star(Re::union(Re::literal(""), Re::literal("a")));
        assert!(word_matches(&re, ""));
        assert!(word_matches(&re, "aaa"));
        assert!(!word_matches(&re, "b"));
    }

    #[test]
    fn complement_is_negation() {
        let re = Re::complement(Re::union(Re::literal("a"), Re::literal("b")));
        assert!(!word_matches(&re, "a"));
        assert!(!word_matches(&re, "b"));
        assert!(word_matches(&re, ""));
        assert!(word_matches(&re, "aa"));
        assert!(word_matches(&re, "ba"));
    }

    #[test]
    fn empty_language_accepts_nothing() {
        assert!(!word_matches(&Re::Empty, ""));
        assert!(!word_matches(&Re::Empty, "a"));
        // Star of the empty language accepts exactly the empty word.
        let re = Re::star(Re::Empty);
        assert!(word_matches(&re, ""));
        assert!(!word_matches(&re, "a"));
    }

    #[test]
    fn words_up_to_counts() {
        let ws = words_up_to(&['a', 'b'], 3);
        assert_eq!(ws.len(), 1 + 2 + 4 + 8);
        assert_eq!(ws[0], "");
        assert!(ws.contains(&"bab".to_string()));
    }

    #[test]
    fn formula_evaluation() {
        let mut asg = Assignment::default();
        asg.strings.insert(StrVar(0), "abcabc".to_string());
        let f = Formula::And(vec![
            Formula::Atom(Atom::InRe(StrVar(0), Re::star(Re::literal("abc")))),
            Formula::Atom(Atom::IntLt(IntTerm::constant(5), IntTerm::Len(StrVar(0)))),
        ]);
        assert!(eval_formula(&f, &asg));
        asg.strings.insert(StrVar(0), "abc".to_string());
        assert!(!eval_formula(&f, &asg));
    }
}
