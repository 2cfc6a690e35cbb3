//! Lazy enumeration of DNF cubes from an NNF formula.
//!
//! The disjunction of all yielded cubes is equivalent to the input. Cubes are
//! produced one at a time so the solver only expands the Boolean structure as
//! far as refutations force it to. A configurable cap bounds the worst-case
//! exponential blowup; hitting it makes the solver answer `unknown` rather
//! than loop.

use crate::nnf;
use crate::syntax::{ArithAtom, Atom, Cube, Formula, IntTerm};

pub const DEFAULT_CUBE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeBudgetExceeded {
    pub cap: usize,
}

impl std::fmt::Display for CubeBudgetExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cube budget of {} exceeded", self.cap)
    }
}

impl std::error::Error for CubeBudgetExceeded {}

/// One partially expanded conjunction on the worklist.
struct Partial {
    /// Conjuncts still to expand; the next one sits at the end.
    pending: Vec<Formula>,
    cube: Cube,
    /// A conjunct folded to `false`, making this cube trivially unsat.
    falsified: bool,
}

/// Iterator over the cubes of an NNF formula, depth-first and left-to-right,
/// so the first cube follows the first disjunct of every disjunction.
pub struct CubeIter {
    work: Vec<Partial>,
    yielded: usize,
    cap: usize,
    done: bool,
}

impl CubeIter {
    pub fn new(f: &Formula, cap: usize) -> Self {
        debug_assert!(nnf::is_nnf(f), "cube enumeration expects NNF input");
        CubeIter {
            work: vec![Partial {
                pending: vec![f.clone()],
                cube: Cube::default(),
                falsified: false,
            }],
            yielded: 0,
            cap,
            done: false,
        }
    }
}

impl Iterator for CubeIter {
    type Item = Result<Cube, CubeBudgetExceeded>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        while let Some(mut partial) = self.work.pop() {
            loop {
                let next = match partial.pending.pop() {
                    Some(f) => f,
                    None => {
                        if self.yielded >= self.cap {
                            self.done = true;
                            return Some(Err(CubeBudgetExceeded { cap: self.cap }));
                        }
                        self.yielded += 1;
                        if partial.falsified {
                            // An always-false conjunct; keep the cube but mark
                            // it with an unsatisfiable arithmetic atom so the
                            // normal pipeline refutes it.
                            partial
                                .cube
                                .arith_constraints
                                .push(ArithAtom::Lt(IntTerm::constant(0), IntTerm::constant(0)));
                        }
                        return Some(Ok(partial.cube));
                    }
                };
                match next {
                    Formula::Atom(Atom::InRe(s, re)) => {
                        partial.cube.regex_constraints.push((s, re));
                    }
                    Formula::Atom(Atom::IntEq(l, r)) => {
                        partial.cube.arith_constraints.push(ArithAtom::Eq(l, r));
                    }
                    Formula::Atom(Atom::IntLt(l, r)) => {
                        partial.cube.arith_constraints.push(ArithAtom::Lt(l, r));
                    }
                    Formula::True => {}
                    Formula::False => partial.falsified = true,
                    Formula::And(fs) => {
                        partial.pending.extend(fs.into_iter().rev());
                    }
                    Formula::Or(fs) => {
                        // One branch per disjunct; push in reverse so the
                        // first disjunct is explored first.
                        for f in fs.into_iter().rev() {
                            let mut branch_pending = partial.pending.clone();
                            branch_pending.push(f);
                            self.work.push(Partial {
                                pending: branch_pending,
                                cube: partial.cube.clone(),
                                falsified: partial.falsified,
                            });
                        }
                        break;
                    }
                    Formula::Not(_) => {
                        unreachable!("cube enumeration expects NNF input");
                    }
                }
            }
        }
        None
    }
}

/// Convenience wrapper constructing the iterator.
pub fn cubes(f: &Formula, cap: usize) -> CubeIter {
    CubeIter::new(f, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_formula, words_up_to, Assignment};
    use crate::syntax::{RegexTerm, StrVar};

    fn atom(w: &str) -> Formula {
        Formula::Atom(Atom::InRe(StrVar(0), RegexTerm::literal(w)))
    }

    fn collect(f: &Formula, cap: usize) -> Result<Vec<Cube>, CubeBudgetExceeded> {
        cubes(&nnf::nnf(f), cap).collect()
    }

    #[test]
    fn single_atom_yields_one_cube() {
        let cs = collect(&atom("a"), 16).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].regex_constraints.len(), 1);
    }

    #[test]
    fn and_over_or_distributes() {
        let f = Formula::And(vec![atom("a"), Formula::Or(vec![atom("b"), atom("c")])]);
        let cs = collect(&f, 16).unwrap();
        assert_eq!(cs.len(), 2);
        // First cube follows the first disjunct.
        assert_eq!(cs[0].regex_constraints[1].1, RegexTerm::literal("b"));
        assert_eq!(cs[1].regex_constraints[1].1, RegexTerm::literal("c"));
        for c in &cs {
            assert_eq!(c.regex_constraints[0].1, RegexTerm::literal("a"));
        }
    }

    #[test]
    fn budget_exceeded_after_cap_cubes() {
        // 13 binary disjunctions make 8192 cubes; with cap 4096 the iterator
        // yields exactly 4096 cubes and then the budget error.
        let f = Formula::And(
            (0..13)
                .map(|_| Formula::Or(vec![atom("a"), atom("b")]))
                .collect(),
        );
        let mut iter = cubes(&f, 4096);
        let mut ok = 0;
        let mut err = None;
        for item in &mut iter {
            match item {
                Ok(_) => ok += 1,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert_eq!(ok, 4096);
        assert_eq!(err, Some(CubeBudgetExceeded { cap: 4096 }));
        assert!(iter.next().is_none());
    }

    #[test]
    fn small_formula_fits_in_budget() {
        let f = Formula::And(
            (0..13)
                .map(|_| Formula::Or(vec![atom("a"), atom("b")]))
                .collect(),
        );
        let cs = collect(&f, 10_000).unwrap();
        assert_eq!(cs.len(), 8192);
    }

    /// The disjunction of all cubes is equivalent to the formula, brute-forced
    /// over words of length at most 4 on {a, b}.
    #[test]
    fn cube_disjunction_is_equivalent() {
        let samples = vec![
            Formula::Or(vec![
                Formula::And(vec![atom("a"), atom("b")]),
                Formula::not(atom("ab")),
            ]),
            Formula::And(vec![
                Formula::Or(vec![atom("a"), Formula::not(atom("b"))]),
                Formula::Or(vec![Formula::True, atom("ab")]),
                Formula::not(Formula::And(vec![atom("a"), atom("ba")])),
            ]),
            Formula::False,
            Formula::Or(vec![Formula::False, atom("bb")]),
        ];
        for f in &samples {
            let g = nnf::nnf(f);
            let cube_list = collect(f, 1024).unwrap();
            for w in words_up_to(&['a', 'b'], 4) {
                let mut asg = Assignment::default();
                asg.strings.insert(StrVar(0), w.clone());
                let direct = eval_formula(&g, &asg);
                let via_cubes = cube_list.iter().any(|c| {
                    c.regex_constraints
                        .iter()
                        .all(|(s, re)| crate::semantics::word_matches(re, asg.string(*s)))
                        && c.arith_constraints.iter().all(|a| match a {
                            ArithAtom::Eq(l, r) => {
                                crate::semantics::eval_int_term(l, &asg)
                                    == crate::semantics::eval_int_term(r, &asg)
                            }
                            ArithAtom::Lt(l, r) => {
                                crate::semantics::eval_int_term(l, &asg)
                                    < crate::semantics::eval_int_term(r, &asg)
                            }
                        })
                });
                assert_eq!(direct, via_cubes, "word {w:?} distinguishes {f:?}");
            }
        }
    }
}
