//! Abstract syntax for the input language: grounded regexes, linear integer
//! terms over string length, atoms, and Boolean formulas.
//!
//! The concrete syntax follows the SMT-LIB 2.6 strings theory spelling
//! (`str.in_re`, `re.++`, `re.union`, `re.*`, `re.comp`, `str.to_re`,
//! `str.len`), restricted to regex membership and linear arithmetic over
//! string length.

use num_bigint::BigInt;
use std::fmt;

/// A grounded regular expression.
///
/// `Empty` denotes the empty language; it is the primitive behind `re.none`.
/// The empty *word* is `Literal("")`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegexTerm {
    Literal(String),
    Concat(Box<RegexTerm>, Box<RegexTerm>),
    Union(Box<RegexTerm>, Box<RegexTerm>),
    Star(Box<RegexTerm>),
    Complement(Box<RegexTerm>),
    Empty,
}

impl RegexTerm {
    pub fn literal(w: impl Into<String>) -> Self {
        RegexTerm::Literal(w.into())
    }

    pub fn concat(l: RegexTerm, r: RegexTerm) -> Self {
        RegexTerm::Concat(Box::new(l), Box::new(r))
    }

    pub fn union(l: RegexTerm, r: RegexTerm) -> Self {
        RegexTerm::Union(Box::new(l), Box::new(r))
    }

    pub fn star(inner: RegexTerm) -> Self {
        RegexTerm::Star(Box::new(inner))
    }

    pub fn complement(inner: RegexTerm) -> Self {
        RegexTerm::Complement(Box::new(inner))
    }

    /// `R+` as `R · R*`.
    pub fn plus(inner: RegexTerm) -> Self {
        RegexTerm::concat(inner.clone(), RegexTerm::star(inner))
    }

    pub fn children(&self) -> Vec<&RegexTerm> {
        match self {
            RegexTerm::Literal(_) | RegexTerm::Empty => Vec::new(),
            RegexTerm::Concat(l, r) | RegexTerm::Union(l, r) => vec![l, r],
            RegexTerm::Star(inner) | RegexTerm::Complement(inner) => vec![inner],
        }
    }

    pub fn contains_complement(&self) -> bool {
        match self {
            RegexTerm::Complement(_) => true,
            _ => self.children().iter().any(|c| c.contains_complement()),
        }
    }

    /// Peephole rewrite of `comp(comp(R))` to `R`, applied bottom-up. Not
    /// wired into the solving pipeline: nested complements are kept as-is so
    /// cost estimation sees the true syntactic structure.
    pub fn simplify_double_complement(&self) -> RegexTerm {
        match self {
            RegexTerm::Literal(_) | RegexTerm::Empty => self.clone(),
            RegexTerm::Concat(l, r) => RegexTerm::concat(
                l.simplify_double_complement(),
                r.simplify_double_complement(),
            ),
            RegexTerm::Union(l, r) => RegexTerm::union(
                l.simplify_double_complement(),
                r.simplify_double_complement(),
            ),
            RegexTerm::Star(inner) => RegexTerm::star(inner.simplify_double_complement()),
            RegexTerm::Complement(inner) => match inner.simplify_double_complement() {
                RegexTerm::Complement(body) => *body,
                simplified => RegexTerm::complement(simplified),
            },
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

/// Identifier of a declared string variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrVar(pub u32);

/// Identifier of a declared integer variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntVar(pub u32);

/// A linear integer term. `ScalarMul` keeps multiplication linear: one factor
/// is always a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntTerm {
    Const(BigInt),
    Var(IntVar),
    Len(StrVar),
    Sum(Box<IntTerm>, Box<IntTerm>),
    ScalarMul(BigInt, Box<IntTerm>),
}

impl IntTerm {
    pub fn constant(v: impl Into<BigInt>) -> Self {
        IntTerm::Const(v.into())
    }

    pub fn sum(l: IntTerm, r: IntTerm) -> Self {
        IntTerm::Sum(Box::new(l), Box::new(r))
    }

    pub fn scalar_mul(c: impl Into<BigInt>, t: IntTerm) -> Self {
        IntTerm::ScalarMul(c.into(), Box::new(t))
    }
}

/// An atomic formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    /// `S in RE` for a string variable S.
    InRe(StrVar, RegexTerm),
    IntEq(IntTerm, IntTerm),
    IntLt(IntTerm, IntTerm),
}

/// A Boolean combination of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    True,
    False,
}

impl Formula {
    pub fn and(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::And(fs),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::False,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::Or(fs),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// String variables mentioned anywhere in the formula.
    pub fn string_vars(&self) -> Vec<StrVar> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| match a {
            Atom::InRe(s, _) => out.push(*s),
            Atom::IntEq(l, r) | Atom::IntLt(l, r) => {
                collect_len_vars(l, &mut out);
                collect_len_vars(r, &mut out);
            }
        });
        out.sort();
        out.dedup();
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::And(fs) | Formula::Or(fs) => {
                for sub in fs {
                    sub.visit_atoms(f);
                }
            }
            Formula::Not(inner) => inner.visit_atoms(f),
            Formula::True | Formula::False => {}
        }
    }
}

fn collect_len_vars(t: &IntTerm, out: &mut Vec<StrVar>) {
    match t {
        IntTerm::Len(s) => out.push(*s),
        IntTerm::Sum(l, r) => {
            collect_len_vars(l, out);
            collect_len_vars(r, out);
        }
        IntTerm::ScalarMul(_, inner) => collect_len_vars(inner, out),
        IntTerm::Const(_) | IntTerm::Var(_) => {}
    }
}

/// An arithmetic atom as it appears in a cube: equality or strict inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithAtom {
    Eq(IntTerm, IntTerm),
    Lt(IntTerm, IntTerm),
}

/// A conjunction of positive regex constraints and arithmetic constraints,
/// the unit the core solving algorithm operates on.
#[derive(Debug, Clone, Default)]
pub struct Cube {
    pub regex_constraints: Vec<(StrVar, RegexTerm)>,
    pub arith_constraints: Vec<ArithAtom>,
}

/// Sort of a declared constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Str,
    Int,
}

/// Declared variables of a script, interning names to `StrVar`/`IntVar` ids.
#[derive(Debug, Clone, Default)]
pub struct Declarations {
    str_names: Vec<String>,
    int_names: Vec<String>,
    /// Declaration order, for model printing.
    order: Vec<(Sort, u32)>,
}

impl Declarations {
    pub fn declare(&mut self, name: &str, sort: Sort) -> Result<(), String> {
        if self.lookup(name).is_some() {
            return Err(format!("constant `{name}` is already declared"));
        }
        match sort {
            Sort::Str => {
                self.str_names.push(name.to_string());
                self.order
                    .push((Sort::Str, self.str_names.len() as u32 - 1));
            }
            Sort::Int => {
                self.int_names.push(name.to_string());
                self.order
                    .push((Sort::Int, self.int_names.len() as u32 - 1));
            }
        }
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<(Sort, u32)> {
        if let Some(i) = self.str_names.iter().position(|n| n == name) {
            return Some((Sort::Str, i as u32));
        }
        if let Some(i) = self.int_names.iter().position(|n| n == name) {
            return Some((Sort::Int, i as u32));
        }
        None
    }

    pub fn str_name(&self, v: StrVar) -> &str {
        &self.str_names[v.0 as usize]
    }

    pub fn int_name(&self, v: IntVar) -> &str {
        &self.int_names[v.0 as usize]
    }

    pub fn str_vars(&self) -> impl Iterator<Item = StrVar> + '_ {
        (0..self.str_names.len() as u32).map(StrVar)
    }

    pub fn int_vars(&self) -> impl Iterator<Item = IntVar> + '_ {
        (0..self.int_names.len() as u32).map(IntVar)
    }

    pub fn num_str_vars(&self) -> usize {
        self.str_names.len()
    }

    pub fn num_int_vars(&self) -> usize {
        self.int_names.len()
    }

    /// Declarations in source order.
    pub fn in_order(&self) -> impl Iterator<Item = (Sort, u32, &str)> + '_ {
        self.order.iter().map(|&(sort, idx)| {
            let name = match sort {
                Sort::Str => self.str_names[idx as usize].as_str(),
                Sort::Int => self.int_names[idx as usize].as_str(),
            };
            (sort, idx, name)
        })
    }
}

/// Script commands that drive the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    CheckSat,
    GetModel,
}

/// A parsed script: declarations, the conjunction of all assertions, and the
/// commands in source order.
#[derive(Debug, Clone)]
pub struct Script {
    pub decls: Declarations,
    pub asserts: Vec<Formula>,
    pub commands: Vec<Command>,
}

impl Script {
    /// The conjunction of all assertions.
    pub fn formula(&self) -> Formula {
        Formula::and(self.asserts.clone())
    }
}

// ---------------------------------------------------------------------------
// Printing (SMT-LIB concrete syntax)
// ---------------------------------------------------------------------------

/// Escapes a string constant for SMT-LIB output. Quotes are doubled and
/// characters outside printable ASCII are emitted as `\u{XX}`.
pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\"\""),
            c if (' '..='~').contains(&c) => out.push(c),
            c => out.push_str(&format!("\\u{{{:X}}}", c as u32)),
        }
    }
    out
}

impl fmt::Display for RegexTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexTerm::Literal(w) => write!(f, "(str.to_re \"{}\")", escape_string(w)),
            RegexTerm::Concat(l, r) => write!(f, "(re.++ {l} {r})"),
            RegexTerm::Union(l, r) => write!(f, "(re.union {l} {r})"),
            RegexTerm::Star(inner) => write!(f, "(re.* {inner})"),
            RegexTerm::Complement(inner) => write!(f, "(re.comp {inner})"),
            RegexTerm::Empty => write!(f, "re.none"),
        }
    }
}

/// Prints an integer constant in SMT-LIB syntax, wrapping negatives as `(- n)`.
pub fn print_int(v: &BigInt) -> String {
    if v.sign() == num_bigint::Sign::Minus {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

/// Pretty-printer for terms and formulas that needs access to variable names.
pub struct ScriptPrinter<'a> {
    pub decls: &'a Declarations,
}

impl<'a> ScriptPrinter<'a> {
    pub fn new(decls: &'a Declarations) -> Self {
        ScriptPrinter { decls }
    }

    pub fn int_term(&self, t: &IntTerm) -> String {
        match t {
            IntTerm::Const(v) => print_int(v),
            IntTerm::Var(v) => self.decls.int_name(*v).to_string(),
            IntTerm::Len(s) => format!("(str.len {})", self.decls.str_name(*s)),
            IntTerm::Sum(l, r) => format!("(+ {} {})", self.int_term(l), self.int_term(r)),
            IntTerm::ScalarMul(c, inner) => {
                format!("(* {} {})", print_int(c), self.int_term(inner))
            }
        }
    }

    pub fn atom(&self, a: &Atom) -> String {
        match a {
            Atom::InRe(s, re) => format!("(str.in_re {} {})", self.decls.str_name(*s), re),
            Atom::IntEq(l, r) => format!("(= {} {})", self.int_term(l), self.int_term(r)),
            Atom::IntLt(l, r) => format!("(< {} {})", self.int_term(l), self.int_term(r)),
        }
    }

    pub fn formula(&self, f: &Formula) -> String {
        match f {
            Formula::Atom(a) => self.atom(a),
            Formula::And(fs) => format!(
                "(and {})",
                fs.iter()
                    .map(|g| self.formula(g))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            Formula::Or(fs) => format!(
                "(or {})",
                fs.iter()
                    .map(|g| self.formula(g))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            Formula::Not(inner) => format!("(not {})", self.formula(inner)),
            Formula::True => "true".to_string(),
            Formula::False => "false".to_string(),
        }
    }

    pub fn script(&self, script: &Script) -> String {
        let mut out = String::new();
        for (sort, _, name) in script.decls.in_order() {
            let sort = match sort {
                Sort::Str => "String",
                Sort::Int => "Int",
            };
            out.push_str(&format!("(declare-const {name} {sort})\n"));
        }
        for a in &script.asserts {
            out.push_str(&format!("(assert {})\n", self.formula(a)));
        }
        for c in &script.commands {
            match c {
                Command::CheckSat => out.push_str("(check-sat)\n"),
                Command::GetModel => out.push_str("(get-model)\n"),
            }
        }
        out
    }
}
