//! Full-scale randomized properties tying the engines to the reference
//! semantics: membership soundness of compiled automata, intersection
//! agreement, language-level complement involution, and witness re-checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relic_core::alphabet::Alphabet;
use relic_core::automata::{self, AutomataLimits};
use relic_core::semantics::{word_matches, words_up_to};
use relic_core::syntax::RegexTerm;

fn abc() -> Alphabet {
    Alphabet::from_chars("abc".chars()).unwrap()
}

fn random_regex(rng: &mut ChaCha8Rng, size: usize, complement: bool) -> RegexTerm {
    if size <= 1 {
        let len = rng.gen_range(0..=2);
        let w: String = (0..len)
            .map(|_| char::from(b'a' + rng.gen_range(0..3u8)))
            .collect();
        return RegexTerm::Literal(w);
    }
    let top = if complement { 4 } else { 3 };
    match rng.gen_range(0..top) {
        0 => {
            let l = rng.gen_range(1..size);
            RegexTerm::concat(
                random_regex(rng, l, complement),
                random_regex(rng, size - l, complement),
            )
        }
        1 => {
            let l = rng.gen_range(1..size);
            RegexTerm::union(
                random_regex(rng, l, complement),
                random_regex(rng, size - l, complement),
            )
        }
        2 => RegexTerm::star(random_regex(rng, size - 1, complement)),
        _ => RegexTerm::complement(random_regex(rng, size - 1, complement)),
    }
}

/// Compiled automata accept exactly the words the reference evaluator
/// accepts, across 1000 random regexes (complements included) and all words
/// of length at most 6.
#[test]
fn membership_soundness_at_scale() {
    let alphabet = abc();
    let words = words_up_to(&['a', 'b', 'c'], 6);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..1000 {
        let size = rng.gen_range(1..=8);
        let re = random_regex(&mut rng, size, true);
        let auto = automata::compile(&re, &alphabet, &AutomataLimits::default()).unwrap();
        for w in &words {
            assert_eq!(
                auto.accepts(w),
                word_matches(&re, w),
                "round {round}: {re} disagrees on {w:?}"
            );
        }
    }
}

/// Membership in an intersection equals the conjunction of memberships.
#[test]
fn intersection_agreement_at_scale() {
    let alphabet = abc();
    let words = words_up_to(&['a', 'b', 'c'], 5);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for round in 0..300 {
        let size_a = rng.gen_range(1..=7);
        let size_b = rng.gen_range(1..=7);
        let ra = random_regex(&mut rng, size_a, true);
        let rb = random_regex(&mut rng, size_b, true);
        let a = automata::compile(&ra, &alphabet, &AutomataLimits::default()).unwrap();
        let b = automata::compile(&rb, &alphabet, &AutomataLimits::default()).unwrap();
        let i = automata::intersect(&a, &b, &AutomataLimits::default()).unwrap();
        for w in &words {
            assert_eq!(
                i.accepts(w),
                a.accepts(w) && b.accepts(w),
                "round {round}: intersection of {ra} and {rb} disagrees on {w:?}"
            );
        }
    }
}

/// Double complement preserves the language of complement-free regexes.
#[test]
fn complement_involution_at_scale() {
    let alphabet = abc();
    let words = words_up_to(&['a', 'b', 'c'], 5);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for round in 0..200 {
        let size = rng.gen_range(1..=7);
        let re = random_regex(&mut rng, size, false);
        let direct = automata::compile(&re, &alphabet, &AutomataLimits::default()).unwrap();
        let doubled = automata::compile(
            &RegexTerm::complement(RegexTerm::complement(re.clone())),
            &alphabet,
            &AutomataLimits::default(),
        )
        .unwrap();
        for w in &words {
            assert_eq!(
                direct.accepts(w),
                doubled.accepts(w),
                "round {round}: double complement of {re} disagrees on {w:?}"
            );
        }
    }
}

/// Extracted witnesses always pass an independent membership re-check, and
/// extraction succeeds exactly when a path of that length exists.
#[test]
fn witnesses_pass_membership_recheck() {
    let alphabet = abc();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for round in 0..300 {
        let size = rng.gen_range(1..=8);
        let re = random_regex(&mut rng, size, true);
        let auto = automata::compile(&re, &alphabet, &AutomataLimits::default()).unwrap();
        for n in 0..=8u64 {
            let word = auto.extract_word_of_length(n);
            assert_eq!(
                word.is_some(),
                auto.has_accepting_path_of_length(n),
                "round {round}: extraction disagrees with path existence for {re} at {n}"
            );
            if let Some(w) = word {
                assert_eq!(w.chars().count() as u64, n);
                assert!(
                    word_matches(&re, &w),
                    "round {round}: witness {w:?} fails membership for {re}"
                );
            }
        }
    }
}

/// Joint paths satisfy every automaton and exist iff the materialized
/// intersection has a path of that length.
#[test]
fn joint_paths_match_materialized_intersection() {
    let alphabet = abc();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for round in 0..200 {
        let size_a = rng.gen_range(1..=6);
        let size_b = rng.gen_range(1..=6);
        let ra = random_regex(&mut rng, size_a, false);
        let rb = random_regex(&mut rng, size_b, false);
        let a = automata::compile(&ra, &alphabet, &AutomataLimits::default()).unwrap();
        let b = automata::compile(&rb, &alphabet, &AutomataLimits::default()).unwrap();
        let product = automata::intersect(&a, &b, &AutomataLimits::default()).unwrap();
        for n in 0..=6u64 {
            let joint =
                automata::joint_path_of_length(&[&a, &b], n, &AutomataLimits::default()).unwrap();
            assert_eq!(
                joint.is_some(),
                product.has_accepting_path_of_length(n),
                "round {round}: joint search disagrees with product for {ra}, {rb} at {n}"
            );
            if let Some(w) = joint {
                assert!(word_matches(&ra, &w) && word_matches(&rb, &w));
            }
        }
    }
}
