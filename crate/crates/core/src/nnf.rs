//! Negation normal form.
//!
//! Boolean negation is eliminated by De Morgan; negated membership atoms
//! become positive membership in the complement regex; negated arithmetic
//! atoms are rewritten by integer order trichotomy.

use crate::syntax::{Atom, Formula, RegexTerm};

/// Rewrites a formula into negation normal form. The result contains no
/// `Not` nodes and every membership atom is positive.
pub fn nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::True | Formula::False => f.clone(),
        Formula::And(fs) => Formula::and(fs.iter().map(nnf).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(nnf).collect()),
        Formula::Not(inner) => negate(inner),
    }
}

/// NNF of the negation of `f`.
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Atom(Atom::InRe(s, re)) => {
            Formula::Atom(Atom::InRe(*s, RegexTerm::complement(re.clone())))
        }
        // not (l = r)  ~>  l < r or r < l
        Formula::Atom(Atom::IntEq(l, r)) => Formula::Or(vec![
            Formula::Atom(Atom::IntLt(l.clone(), r.clone())),
            Formula::Atom(Atom::IntLt(r.clone(), l.clone())),
        ]),
        // not (l < r)  ~>  r < l or r = l
        Formula::Atom(Atom::IntLt(l, r)) => Formula::Or(vec![
            Formula::Atom(Atom::IntLt(r.clone(), l.clone())),
            Formula::Atom(Atom::IntEq(r.clone(), l.clone())),
        ]),
        Formula::And(fs) => Formula::or(fs.iter().map(negate).collect()),
        Formula::Or(fs) => Formula::and(fs.iter().map(negate).collect()),
        Formula::Not(inner) => nnf(inner),
        Formula::True => Formula::False,
        Formula::False => Formula::True,
    }
}

/// True when the formula contains no `Not` node.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Not(_) => false,
        Formula::And(fs) | Formula::Or(fs) => fs.iter().all(is_nnf),
        Formula::Atom(_) | Formula::True | Formula::False => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_formula, words_up_to, Assignment};
    use crate::syntax::{IntTerm, IntVar, StrVar};
    use num_bigint::BigInt;

    fn in_re(v: u32, re: RegexTerm) -> Formula {
        Formula::Atom(Atom::InRe(StrVar(v), re))
    }

    #[test]
    fn negated_membership_becomes_complement() {
        let f = Formula::not(in_re(0, RegexTerm::literal("a")));
        assert_eq!(
            nnf(&f),
            in_re(0, RegexTerm::complement(RegexTerm::literal("a")))
        );
    }

    #[test]
    fn de_morgan_over_and() {
        let a = in_re(0, RegexTerm::literal("a"));
        let b = in_re(0, RegexTerm::literal("b"));
        let f = Formula::not(Formula::And(vec![a.clone(), b.clone()]));
        match nnf(&f) {
            Formula::Or(fs) => assert_eq!(fs.len(), 2),
            other => panic!("expected Or, got {other:?}"),
        }
    }

    #[test]
    fn negated_lt_uses_trichotomy() {
        let x = IntTerm::Var(IntVar(0));
        let y = IntTerm::Var(IntVar(1));
        let f = Formula::not(Formula::Atom(Atom::IntLt(x.clone(), y.clone())));
        assert_eq!(
            nnf(&f),
            Formula::Or(vec![
                Formula::Atom(Atom::IntLt(y.clone(), x.clone())),
                Formula::Atom(Atom::IntEq(y, x)),
            ])
        );
    }

    /// Brute-force model preservation over one string variable (words up to
    /// length 4 over {a,b}) and one integer variable in [-8, 8].
    fn assert_preserves_models(f: &Formula) {
        let g = nnf(f);
        assert!(is_nnf(&g));
        for w in words_up_to(&['a', 'b'], 4) {
            for v in -8i32..=8 {
                let mut asg = Assignment::default();
                asg.strings.insert(StrVar(0), w.clone());
                asg.ints.insert(IntVar(0), BigInt::from(v));
                assert_eq!(
                    eval_formula(f, &asg),
                    eval_formula(&g, &asg),
                    "model {w:?}, {v} distinguishes nnf for {f:?}"
                );
            }
        }
    }

    #[test]
    fn nnf_preserves_models_on_sample_formulas() {
        let re_a = RegexTerm::star(RegexTerm::literal("ab"));
        let re_b = RegexTerm::complement(RegexTerm::literal("a"));
        let len = IntTerm::Len(StrVar(0));
        let var = IntTerm::Var(IntVar(0));
        let samples = vec![
            Formula::not(Formula::And(vec![
                in_re(0, re_a.clone()),
                Formula::Atom(Atom::IntLt(len.clone(), var.clone())),
            ])),
            Formula::not(Formula::Or(vec![
                Formula::not(in_re(0, re_b.clone())),
                Formula::Atom(Atom::IntEq(len.clone(), IntTerm::constant(2))),
            ])),
            Formula::not(Formula::not(Formula::And(vec![
                in_re(0, re_a),
                Formula::not(in_re(0, re_b)),
            ]))),
            Formula::not(Formula::True),
            Formula::And(vec![
                Formula::not(Formula::Atom(Atom::IntEq(var, len))),
                Formula::not(Formula::False),
            ]),
        ];
        for f in &samples {
            assert_preserves_models(f);
        }
    }
}
