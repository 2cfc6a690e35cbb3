//! One-character prefix/suffix over-approximation.
//!
//! From the syntax of a regex alone it is easy to over-approximate the set of
//! first and last characters of accepted words, plus whether the empty word
//! is accepted. Intersecting these profiles across all constraints on one
//! variable can refute the conjunction, or pin the variable to the empty
//! string, without constructing a single automaton.

use crate::alphabet::{Alphabet, CharSet};
use crate::syntax::RegexTerm;

/// Three-valued nullability: `Yes` and `No` are definite, `Unknown` keeps
/// complemented regexes sound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullable {
    Yes,
    No,
    Unknown,
}

impl Nullable {
    fn or(self, other: Nullable) -> Nullable {
        use Nullable::*;
        match (self, other) {
            (Yes, _) | (_, Yes) => Yes,
            (No, No) => No,
            _ => Unknown,
        }
    }

    fn and(self, other: Nullable) -> Nullable {
        use Nullable::*;
        match (self, other) {
            (No, _) | (_, No) => No,
            (Yes, Yes) => Yes,
            _ => Unknown,
        }
    }
}

/// Over-approximation of the first and last characters of nonempty accepted
/// words, with the regex's nullability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeProfile {
    pub first: CharSet,
    pub last: CharSet,
    pub nullable: Nullable,
}

/// Computes the edge profile by structural recursion. Complement falls back
/// to the full alphabet with unknown nullability.
pub fn edge_profile(re: &RegexTerm, alphabet: &Alphabet) -> EdgeProfile {
    match re {
        RegexTerm::Literal(w) => match (w.chars().next(), w.chars().last()) {
            (Some(first), Some(last)) => EdgeProfile {
                first: CharSet::singleton(first),
                last: CharSet::singleton(last),
                nullable: Nullable::No,
            },
            _ => EdgeProfile {
                first: CharSet::empty(),
                last: CharSet::empty(),
                nullable: Nullable::Yes,
            },
        },
        RegexTerm::Empty => EdgeProfile {
            first: CharSet::empty(),
            last: CharSet::empty(),
            nullable: Nullable::No,
        },
        RegexTerm::Union(l, r) => {
            let lp = edge_profile(l, alphabet);
            let rp = edge_profile(r, alphabet);
            EdgeProfile {
                first: lp.first.union(&rp.first),
                last: lp.last.union(&rp.last),
                nullable: lp.nullable.or(rp.nullable),
            }
        }
        RegexTerm::Concat(l, r) => {
            let lp = edge_profile(l, alphabet);
            let rp = edge_profile(r, alphabet);
            let first = if lp.nullable != Nullable::No {
                lp.first.union(&rp.first)
            } else {
                lp.first.clone()
            };
            let last = if rp.nullable != Nullable::No {
                rp.last.union(&lp.last)
            } else {
                rp.last.clone()
            };
            EdgeProfile {
                first,
                last,
                nullable: lp.nullable.and(rp.nullable),
            }
        }
        RegexTerm::Star(inner) => {
            let p = edge_profile(inner, alphabet);
            EdgeProfile {
                first: p.first,
                last: p.last,
                nullable: Nullable::Yes,
            }
        }
        RegexTerm::Complement(_) => EdgeProfile {
            first: alphabet.char_set().clone(),
            last: alphabet.char_set().clone(),
            nullable: Nullable::Unknown,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointVerdict {
    /// No conclusion; the constraints may or may not be jointly satisfiable.
    Consistent,
    /// The joint language is exactly the empty string: a new fact, the
    /// variable has length 0.
    OnlyEmptyString,
    /// The joint language is empty: a conflict.
    EmptyIntersection,
}

/// Checks whether several profiles on the same variable can share a first and
/// last character. If either intersection is empty, the joint language holds
/// at most the empty string; nullability then separates the empty-string fact
/// from an outright conflict.
pub fn joint_check(profiles: &[EdgeProfile]) -> JointVerdict {
    if profiles.len() < 2 {
        return JointVerdict::Consistent;
    }
    let mut first = profiles[0].first.clone();
    let mut last = profiles[0].last.clone();
    for p in &profiles[1..] {
        first = first.intersect(&p.first);
        last = last.intersect(&p.last);
    }
    if !first.is_empty() && !last.is_empty() {
        return JointVerdict::Consistent;
    }
    if profiles.iter().all(|p| p.nullable == Nullable::Yes) {
        return JointVerdict::OnlyEmptyString;
    }
    if profiles.iter().any(|p| p.nullable == Nullable::No) {
        return JointVerdict::EmptyIntersection;
    }
    // Some profile has unknown nullability: no sound conclusion.
    JointVerdict::Consistent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{compile, intersect, AutomataLimits};
    use crate::semantics::{word_matches, words_up_to};
    use crate::syntax::RegexTerm as Re;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn abc() -> Alphabet {
        Alphabet::from_chars("abc".chars()).unwrap()
    }

    #[test]
    fn star_profile() {
        let p = edge_profile(&Re::star(Re::literal("abc")), &abc());
        assert!(p.first.contains('a') && p.first.len() == 1);
        assert!(p.last.contains('c') && p.last.len() == 1);
        assert_eq!(p.nullable, Nullable::Yes);
    }

    #[test]
    fn union_of_plusses() {
        let re = Re::union(Re::plus(Re::literal("a")), Re::plus(Re::literal("b")));
        let p = edge_profile(&re, &abc());
        assert!(p.first.contains('a') && p.first.contains('b') && !p.first.contains('c'));
        assert!(p.last.contains('a') && p.last.contains('b') && !p.last.contains('c'));
        assert_eq!(p.nullable, Nullable::No);
    }

    #[test]
    fn complement_profile_is_full_alphabet() {
        let p = edge_profile(&Re::complement(Re::literal("x")), &Alphabet::default());
        assert_eq!(p.first, Alphabet::default().char_set().clone());
        assert_eq!(p.last, Alphabet::default().char_set().clone());
        assert_eq!(p.nullable, Nullable::Unknown);
    }

    #[test]
    fn joint_example_refuted_by_suffix() {
        // (abc)* and a+|b+ share prefix {a} but no suffix; the second is not
        // nullable, so the joint language is empty.
        let p1 = edge_profile(&Re::star(Re::literal("abc")), &abc());
        let p2 = edge_profile(
            &Re::union(Re::plus(Re::literal("a")), Re::plus(Re::literal("b"))),
            &abc(),
        );
        assert_eq!(joint_check(&[p1, p2]), JointVerdict::EmptyIntersection);
    }

    #[test]
    fn nullable_pair_pins_empty_string() {
        // (abc)* and (ab)*: first sets intersect, last sets do not, both
        // nullable: the joint language is exactly the empty string.
        let p1 = edge_profile(&Re::star(Re::literal("abc")), &abc());
        let p2 = edge_profile(&Re::star(Re::literal("ab")), &abc());
        assert_eq!(joint_check(&[p1, p2]), JointVerdict::OnlyEmptyString);
    }

    #[test]
    fn single_profile_is_consistent() {
        let p = edge_profile(&Re::literal(""), &abc());
        assert_eq!(joint_check(&[p]), JointVerdict::Consistent);
        assert_eq!(joint_check(&[]), JointVerdict::Consistent);
    }

    #[test]
    fn unknown_nullability_blocks_conclusions() {
        let p1 = edge_profile(&Re::star(Re::literal("a")), &abc());
        // Complemented regex: full alphabet sets, unknown nullability; even
        // with empty character intersections no refutation may fire.
        let p2 = EdgeProfile {
            first: CharSet::empty(),
            last: CharSet::empty(),
            nullable: Nullable::Unknown,
        };
        assert_eq!(joint_check(&[p1, p2]), JointVerdict::Consistent);
    }

    fn random_regex(rng: &mut ChaCha8Rng, size: usize, complement_ok: bool) -> Re {
        if size <= 1 {
            let len = rng.gen_range(0..=2);
            let w: String = (0..len)
                .map(|_| char::from(b'a' + rng.gen_range(0..3u8)))
                .collect();
            return Re::Literal(w);
        }
        match rng.gen_range(0..if complement_ok { 4 } else { 3 }) {
            0 => {
                let l = rng.gen_range(1..size);
                Re::concat(
                    random_regex(rng, l, complement_ok),
                    random_regex(rng, size - l, complement_ok),
                )
            }
            1 => {
                let l = rng.gen_range(1..size);
                Re::union(
                    random_regex(rng, l, complement_ok),
                    random_regex(rng, size - l, complement_ok),
                )
            }
            2 => Re::star(random_regex(rng, size - 1, complement_ok)),
            _ => Re::complement(random_regex(rng, size - 1, complement_ok)),
        }
    }

    /// First/last characters of accepted nonempty words always lie in the
    /// profile sets, and nullability is never wrong when definite.
    #[test]
    fn profiles_over_approximate() {
        let alphabet = abc();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let words = words_up_to(&['a', 'b', 'c'], 6);
        for round in 0..300 {
            let size = rng.gen_range(1..=8);
            let re = random_regex(&mut rng, size, true);
            let p = edge_profile(&re, &alphabet);
            for w in &words {
                if !word_matches(&re, w) {
                    continue;
                }
                match w.chars().next() {
                    None => assert_ne!(
                        p.nullable,
                        Nullable::No,
                        "round {round}: {re} accepts empty word"
                    ),
                    Some(first) => {
                        let last = w.chars().last().unwrap();
                        assert!(
                            p.first.contains(first),
                            "round {round}: first of {w:?} escapes profile of {re}"
                        );
                        assert!(
                            p.last.contains(last),
                            "round {round}: last of {w:?} escapes profile of {re}"
                        );
                    }
                }
            }
            if p.nullable == Nullable::Yes {
                assert!(word_matches(&re, ""), "round {round}: {re}");
            }
        }
    }

    /// A refutation or empty-string fact from the profiles is always backed
    /// by the brute-force joint language, and no automata get built.
    #[test]
    fn joint_conclusions_are_sound_and_construction_free() {
        let alphabet = abc();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let words = words_up_to(&['a', 'b', 'c'], 6);
        let mut refuted = 0;
        let mut pinned = 0;
        for _ in 0..400 {
            let k = rng.gen_range(2..=3);
            let res: Vec<Re> = (0..k)
                .map(|_| {
                    let size = rng.gen_range(1..=6);
                    random_regex(&mut rng, size, false)
                })
                .collect();
            let before = crate::automata::constructions();
            let profiles: Vec<EdgeProfile> =
                res.iter().map(|re| edge_profile(re, &alphabet)).collect();
            let verdict = joint_check(&profiles);
            assert_eq!(
                crate::automata::constructions(),
                before,
                "profile computation must not build automata"
            );
            match verdict {
                JointVerdict::EmptyIntersection => {
                    refuted += 1;
                    for w in &words {
                        assert!(
                            !res.iter().all(|re| word_matches(re, w)),
                            "refuted constraints accept {w:?}"
                        );
                    }
                    // The automaton route agrees.
                    let autos: Vec<_> = res
                        .iter()
                        .map(|re| compile(re, &alphabet, &AutomataLimits::default()).unwrap())
                        .collect();
                    let mut joint = autos[0].clone();
                    for a in &autos[1..] {
                        joint = intersect(&joint, a, &AutomataLimits::default()).unwrap();
                    }
                    assert!(joint.is_empty());
                }
                JointVerdict::OnlyEmptyString => {
                    pinned += 1;
                    assert!(res.iter().all(|re| word_matches(re, "")));
                    for w in &words {
                        if !w.is_empty() {
                            assert!(
                                !res.iter().all(|re| word_matches(re, w)),
                                "pinned constraints accept {w:?}"
                            );
                        }
                    }
                }
                JointVerdict::Consistent => {}
            }
        }
        // The corpus should actually exercise both conclusions.
        assert!(refuted > 0, "no refutations fired");
        assert!(pinned > 0, "no empty-string facts fired");
    }
}
