//! Property tests for the Boolean frontend: parse/print round-trips, model
//! preservation of negation normal form, and equivalence of the lazy cube
//! expansion, over randomly generated formulas.

use num_bigint::BigInt;
use proptest::prelude::*;
use relic_core::alphabet::Alphabet;
use relic_core::cubes::cubes;
use relic_core::nnf::{is_nnf, nnf};
use relic_core::parser::parse_script;
use relic_core::semantics::{eval_formula, eval_int_term, words_up_to, Assignment};
use relic_core::syntax::{
    ArithAtom, Atom, Declarations, Formula, IntTerm, IntVar, RegexTerm, ScriptPrinter, Sort, StrVar,
};

fn regex_strategy() -> impl Strategy<Value = RegexTerm> {
    let literal = proptest::string::string_regex("[ab]{0,3}")
        .unwrap()
        .prop_map(RegexTerm::Literal);
    literal.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RegexTerm::concat(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RegexTerm::union(l, r)),
            inner.clone().prop_map(RegexTerm::star),
            inner.prop_map(RegexTerm::complement),
        ]
    })
}

fn int_term_strategy() -> impl Strategy<Value = IntTerm> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(IntTerm::constant),
        Just(IntTerm::Var(IntVar(0))),
        Just(IntTerm::Len(StrVar(0))),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| IntTerm::sum(l, r)),
            ((-4i64..=4), inner).prop_map(|(c, t)| IntTerm::scalar_mul(c, t)),
        ]
    })
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let atom = prop_oneof![
        regex_strategy().prop_map(|re| Formula::Atom(Atom::InRe(StrVar(0), re))),
        (int_term_strategy(), int_term_strategy())
            .prop_map(|(l, r)| Formula::Atom(Atom::IntEq(l, r))),
        (int_term_strategy(), int_term_strategy())
            .prop_map(|(l, r)| Formula::Atom(Atom::IntLt(l, r))),
        Just(Formula::True),
        Just(Formula::False),
    ];
    atom.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 1..3).prop_map(Formula::And),
            proptest::collection::vec(inner.clone(), 1..3).prop_map(Formula::Or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn assignments() -> Vec<Assignment> {
    let mut out = Vec::new();
    for w in words_up_to(&['a', 'b'], 4) {
        for v in [-8i64, -3, 0, 1, 2, 5, 8] {
            let mut asg = Assignment::default();
            asg.strings.insert(StrVar(0), w.clone());
            asg.ints.insert(IntVar(0), BigInt::from(v));
            out.push(asg);
        }
    }
    out
}

fn decls() -> Declarations {
    let mut d = Declarations::default();
    d.declare("X", Sort::Str).unwrap();
    d.declare("n", Sort::Int).unwrap();
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// After one parse (which normalizes degenerate connectives and folds
    /// constants), printing and re-parsing is the identity.
    #[test]
    fn print_parse_round_trip(f in formula_strategy()) {
        let d = decls();
        let printer = ScriptPrinter::new(&d);
        let alphabet = Alphabet::from_chars("ab".chars()).unwrap();
        let script_text = |f: &Formula| {
            format!(
                "(declare-const X String)(declare-const n Int)(assert {})",
                printer.formula(f)
            )
        };
        let once = parse_script(&script_text(&f), &alphabet)
            .expect("printed formula parses")
            .asserts
            .remove(0);
        let twice = parse_script(&script_text(&once), &alphabet)
            .expect("re-printed formula parses")
            .asserts
            .remove(0);
        prop_assert_eq!(&twice, &once);
        // Normalization must not change the meaning.
        for asg in assignments() {
            prop_assert_eq!(eval_formula(&once, &asg), eval_formula(&f, &asg));
        }
    }

    /// NNF rewriting never changes the truth value under any assignment.
    #[test]
    fn nnf_preserves_models(f in formula_strategy()) {
        let g = nnf(&f);
        prop_assert!(is_nnf(&g));
        for asg in assignments() {
            prop_assert_eq!(eval_formula(&f, &asg), eval_formula(&g, &asg));
        }
    }

    /// The disjunction of all lazily enumerated cubes is equivalent to the
    /// NNF formula.
    #[test]
    fn cube_disjunction_equivalent(f in formula_strategy()) {
        let g = nnf(&f);
        let cube_list: Result<Vec<_>, _> = cubes(&g, 4096).collect();
        let cube_list = cube_list.expect("small formulas stay within the cube cap");
        for asg in assignments() {
            let direct = eval_formula(&g, &asg);
            let via_cubes = cube_list.iter().any(|cube| {
                cube.regex_constraints.iter().all(|(s, re)| {
                    relic_core::semantics::word_matches(re, asg.string(*s))
                }) && cube.arith_constraints.iter().all(|a| match a {
                    ArithAtom::Eq(l, r) => eval_int_term(l, &asg) == eval_int_term(r, &asg),
                    ArithAtom::Lt(l, r) => eval_int_term(l, &asg) < eval_int_term(r, &asg),
                })
            });
            prop_assert_eq!(direct, via_cubes);
        }
    }
}
