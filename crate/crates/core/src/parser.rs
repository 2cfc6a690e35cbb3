//! Parser for the SMT-LIB-flavored concrete input syntax.
//!
//! Accepted commands: `declare-const`, `assert`, `check-sat`, `get-model`
//! (plus `declare-fun` with no arguments as an alias, and `set-logic` /
//! `set-info` / `set-option` / `exit`, which are ignored). Formula operators:
//! `and or not = < <= str.in_re str.len + - * re.++ re.union re.* re.comp
//! str.to_re re.allchar re.none`.
//!
//! Anything outside this fragment (for example `str.++` or `str.substr`) is
//! reported as an unsupported term, which the CLI maps to an `unknown`
//! verdict rather than an error.

use crate::alphabet::Alphabet;
use crate::semantics::word_matches;
use crate::syntax::{
    Atom, Command, Declarations, Formula, IntTerm, RegexTerm, Script, Sort, StrVar,
};
use num_bigint::BigInt;
use num_traits::Zero;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Malformed input: lexical or structural problems, undeclared names,
    /// sort mismatches.
    Syntax(String),
    /// Well-formed SMT-LIB that uses a term outside the supported fragment.
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn is_unsupported(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Unsupported(_))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "{}:{}: syntax error: {}", self.line, self.col, msg)
            }
            ParseErrorKind::Unsupported(term) => {
                write!(f, "{}:{}: unsupported term: {}", self.line, self.col, term)
            }
        }
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    LParen,
    RParen,
    Symbol(String),
    Numeral(BigInt),
    StringLit(String),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                ';' => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '(' => {
                    self.bump();
                    out.push(Token {
                        kind: TokenKind::LParen,
                        line,
                        col,
                    });
                }
                ')' => {
                    self.bump();
                    out.push(Token {
                        kind: TokenKind::RParen,
                        line,
                        col,
                    });
                }
                '"' => {
                    let s = self.string_literal()?;
                    out.push(Token {
                        kind: TokenKind::StringLit(s),
                        line,
                        col,
                    });
                }
                c if c.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_digit() {
                            digits.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let value: BigInt = digits.parse().expect("digits form a valid integer");
                    out.push(Token {
                        kind: TokenKind::Numeral(value),
                        line,
                        col,
                    });
                }
                _ => {
                    let mut sym = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                            break;
                        }
                        sym.push(c);
                        self.bump();
                    }
                    out.push(Token {
                        kind: TokenKind::Symbol(sym),
                        line,
                        col,
                    });
                }
            }
        }
        Ok(out)
    }

    /// SMT-LIB 2.6 string literal: `""` doubles a quote; `\u{H+}` and
    /// `\uHHHH` escape code points; any other backslash is literal.
    fn string_literal(&mut self) -> Result<String, ParseError> {
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            let c = match self.bump() {
                Some(c) => c,
                None => return Err(self.error("unterminated string literal")),
            };
            match c {
                '"' => {
                    if self.chars.peek() == Some(&'"') {
                        self.bump();
                        out.push('"');
                    } else {
                        return Ok(out);
                    }
                }
                '\\' if self.chars.peek() == Some(&'u') => {
                    self.bump(); // 'u'
                    let mut hex = String::new();
                    if self.chars.peek() == Some(&'{') {
                        self.bump();
                        loop {
                            match self.bump() {
                                Some('}') => break,
                                Some(c) if c.is_ascii_hexdigit() => hex.push(c),
                                _ => return Err(self.error("malformed \\u{...} escape")),
                            }
                        }
                    } else {
                        for _ in 0..4 {
                            match self.bump() {
                                Some(c) if c.is_ascii_hexdigit() => hex.push(c),
                                _ => return Err(self.error("malformed \\uHHHH escape")),
                            }
                        }
                    }
                    let value = u32::from_str_radix(&hex, 16)
                        .map_err(|_| self.error("escape out of range"))?;
                    match char::from_u32(value) {
                        Some(c) => out.push(c),
                        None => return Err(self.error("escape is not a valid code point")),
                    }
                }
                c => out.push(c),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Sexp {
    Sym(String, usize, usize),
    Num(BigInt, usize, usize),
    Str(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Sym(_, l, c) | Sexp::Num(_, l, c) | Sexp::Str(_, l, c) | Sexp::List(_, l, c) => {
                (*l, *c)
            }
        }
    }
}

fn parse_sexps(tokens: &[Token]) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    for t in tokens {
        match &t.kind {
            TokenKind::LParen => stack.push((std::mem::take(&mut top), t.line, t.col)),
            TokenKind::RParen => match stack.pop() {
                Some((parent, line, col)) => {
                    let list = Sexp::List(std::mem::replace(&mut top, parent), line, col);
                    top.push(list);
                }
                None => {
                    return Err(ParseError {
                        line: t.line,
                        col: t.col,
                        kind: ParseErrorKind::Syntax("unbalanced `)`".into()),
                    })
                }
            },
            TokenKind::Symbol(s) => top.push(Sexp::Sym(s.clone(), t.line, t.col)),
            TokenKind::Numeral(v) => top.push(Sexp::Num(v.clone(), t.line, t.col)),
            TokenKind::StringLit(s) => top.push(Sexp::Str(s.clone(), t.line, t.col)),
        }
    }
    if let Some((_, line, col)) = stack.pop() {
        return Err(ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax("unclosed `(`".into()),
        });
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// Command and term parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    alphabet: &'a Alphabet,
    decls: Declarations,
}

fn err_at(sexp: &Sexp, kind: ParseErrorKind) -> ParseError {
    let (line, col) = sexp.pos();
    ParseError { line, col, kind }
}

fn syntax_err(sexp: &Sexp, msg: impl Into<String>) -> ParseError {
    err_at(sexp, ParseErrorKind::Syntax(msg.into()))
}

fn unsupported(sexp: &Sexp, term: impl Into<String>) -> ParseError {
    err_at(sexp, ParseErrorKind::Unsupported(term.into()))
}

/// Operator names reserved by the broader SMT-LIB strings theory; using one
/// gets a precise "unsupported term" diagnostic instead of "unknown symbol".
const KNOWN_UNSUPPORTED: &[&str] = &[
    "str.++",
    "str.substr",
    "str.at",
    "str.indexof",
    "str.replace",
    "str.replace_all",
    "str.prefixof",
    "str.suffixof",
    "str.contains",
    "str.to_int",
    "str.from_int",
    "str.<=",
    "str.<",
    "str.is_digit",
    "str.to_code",
    "str.from_code",
    "re.inter",
    "re.diff",
    "re.opt",
    "re.+",
    "re.range",
    "re.loop",
    "re.all",
    "ite",
    "=>",
    "div",
    "mod",
    "abs",
    "exists",
    "forall",
    "let",
];

impl<'a> Parser<'a> {
    fn head<'s>(
        &self,
        list: &'s [Sexp],
        whole: &Sexp,
    ) -> Result<(&'s str, &'s [Sexp]), ParseError> {
        match list.first() {
            Some(Sexp::Sym(s, _, _)) => Ok((s.as_str(), &list[1..])),
            _ => Err(syntax_err(whole, "expected an operator symbol")),
        }
    }

    fn parse_command(
        &mut self,
        sexp: &Sexp,
        asserts: &mut Vec<Formula>,
        commands: &mut Vec<Command>,
    ) -> Result<(), ParseError> {
        let list = match sexp {
            Sexp::List(items, _, _) => items,
            _ => return Err(syntax_err(sexp, "expected a command `(...)`")),
        };
        let (head, args) = self.head(list, sexp)?;
        match head {
            "declare-const" => {
                let (name, sort) = match args {
                    [Sexp::Sym(name, _, _), sort] => (name, sort),
                    _ => return Err(syntax_err(sexp, "expected `(declare-const <name> <sort>)`")),
                };
                self.declare(sexp, name, sort)
            }
            "declare-fun" => match args {
                [Sexp::Sym(name, _, _), Sexp::List(params, _, _), sort] if params.is_empty() => {
                    self.declare(sexp, name, sort)
                }
                [Sexp::Sym(_, _, _), Sexp::List(_, _, _), _] => {
                    Err(unsupported(sexp, "declare-fun with parameters"))
                }
                _ => Err(syntax_err(
                    sexp,
                    "expected `(declare-fun <name> () <sort>)`",
                )),
            },
            "assert" => match args {
                [f] => {
                    let formula = self.parse_formula(f)?;
                    asserts.push(formula);
                    Ok(())
                }
                _ => Err(syntax_err(sexp, "expected `(assert <formula>)`")),
            },
            "check-sat" => {
                commands.push(Command::CheckSat);
                Ok(())
            }
            "get-model" => {
                commands.push(Command::GetModel);
                Ok(())
            }
            "set-logic" | "set-info" | "set-option" | "exit" => Ok(()),
            other => Err(unsupported(sexp, format!("command {other}"))),
        }
    }

    fn declare(&mut self, at: &Sexp, name: &str, sort: &Sexp) -> Result<(), ParseError> {
        let sort = match sort {
            Sexp::Sym(s, _, _) if s == "String" => Sort::Str,
            Sexp::Sym(s, _, _) if s == "Int" => Sort::Int,
            Sexp::Sym(s, _, _) => return Err(unsupported(at, format!("sort {s}"))),
            _ => return Err(syntax_err(at, "expected a sort symbol")),
        };
        self.decls
            .declare(name, sort)
            .map_err(|msg| syntax_err(at, msg))
    }

    fn parse_formula(&mut self, sexp: &Sexp) -> Result<Formula, ParseError> {
        match sexp {
            Sexp::Sym(s, _, _) if s == "true" => Ok(Formula::True),
            Sexp::Sym(s, _, _) if s == "false" => Ok(Formula::False),
            Sexp::Sym(s, _, _) => Err(syntax_err(
                sexp,
                format!("expected a formula, found symbol `{s}`"),
            )),
            Sexp::List(items, _, _) => {
                let (head, args) = self.head(items, sexp)?;
                match head {
                    "and" => Ok(Formula::and(
                        args.iter()
                            .map(|a| self.parse_formula(a))
                            .collect::<Result<_, _>>()?,
                    )),
                    "or" => Ok(Formula::or(
                        args.iter()
                            .map(|a| self.parse_formula(a))
                            .collect::<Result<_, _>>()?,
                    )),
                    "not" => match args {
                        [f] => Ok(Formula::not(self.parse_formula(f)?)),
                        _ => Err(syntax_err(sexp, "`not` takes one argument")),
                    },
                    "str.in_re" => self.parse_in_re(sexp, args),
                    "=" | "<" | "<=" => self.parse_relation(sexp, head, args),
                    other if KNOWN_UNSUPPORTED.contains(&other) => Err(unsupported(sexp, other)),
                    other => Err(syntax_err(sexp, format!("unknown operator `{other}`"))),
                }
            }
            _ => Err(syntax_err(sexp, "expected a formula")),
        }
    }

    fn parse_in_re(&mut self, whole: &Sexp, args: &[Sexp]) -> Result<Formula, ParseError> {
        let (subject, re) = match args {
            [s, r] => (s, r),
            _ => return Err(syntax_err(whole, "`str.in_re` takes two arguments")),
        };
        let re = self.parse_regex(re)?;
        match subject {
            Sexp::Sym(name, _, _) => match self.decls.lookup(name) {
                Some((Sort::Str, idx)) => Ok(Formula::Atom(Atom::InRe(StrVar(idx), re))),
                Some((Sort::Int, _)) => Err(syntax_err(
                    subject,
                    format!("`{name}` is an Int, expected a String"),
                )),
                None => Err(syntax_err(subject, format!("undeclared constant `{name}`"))),
            },
            // A constant subject is decided right here, keeping cubes free of
            // constant membership atoms.
            Sexp::Str(w, _, _) => {
                self.check_word_in_alphabet(subject, w)?;
                if word_matches(&re, w) {
                    Ok(Formula::True)
                } else {
                    Ok(Formula::False)
                }
            }
            Sexp::List(items, _, _) => match self.head(items, subject)? {
                (op, _) if KNOWN_UNSUPPORTED.contains(&op) => Err(unsupported(subject, op)),
                _ => Err(syntax_err(
                    subject,
                    "expected a string variable or constant",
                )),
            },
            _ => Err(syntax_err(
                subject,
                "expected a string variable or constant",
            )),
        }
    }

    fn parse_relation(
        &mut self,
        whole: &Sexp,
        op: &str,
        args: &[Sexp],
    ) -> Result<Formula, ParseError> {
        let (l, r) = match args {
            [l, r] => (l, r),
            _ => return Err(syntax_err(whole, format!("`{op}` takes two arguments"))),
        };
        if op == "=" && (self.is_string_term(l) || self.is_string_term(r)) {
            return Err(unsupported(whole, "word equation"));
        }
        let l = self.parse_int_term(l)?;
        let r = self.parse_int_term(r)?;
        Ok(match op {
            "=" => Formula::Atom(Atom::IntEq(l, r)),
            "<" => Formula::Atom(Atom::IntLt(l, r)),
            // `<=` desugars into the Fig-1 fragment.
            "<=" => Formula::Or(vec![
                Formula::Atom(Atom::IntLt(l.clone(), r.clone())),
                Formula::Atom(Atom::IntEq(l, r)),
            ]),
            _ => unreachable!(),
        })
    }

    fn is_string_term(&self, sexp: &Sexp) -> bool {
        match sexp {
            Sexp::Str(_, _, _) => true,
            Sexp::Sym(name, _, _) => matches!(self.decls.lookup(name), Some((Sort::Str, _))),
            _ => false,
        }
    }

    fn parse_int_term(&mut self, sexp: &Sexp) -> Result<IntTerm, ParseError> {
        match sexp {
            Sexp::Num(v, _, _) => Ok(IntTerm::Const(v.clone())),
            Sexp::Sym(name, _, _) => match self.decls.lookup(name) {
                Some((Sort::Int, idx)) => Ok(IntTerm::Var(crate::syntax::IntVar(idx))),
                Some((Sort::Str, _)) => Err(syntax_err(
                    sexp,
                    format!("`{name}` is a String, expected an Int"),
                )),
                None => Err(syntax_err(sexp, format!("undeclared constant `{name}`"))),
            },
            Sexp::List(items, _, _) => {
                let (head, args) = self.head(items, sexp)?;
                match head {
                    "+" => {
                        if args.is_empty() {
                            return Err(syntax_err(sexp, "`+` needs at least one argument"));
                        }
                        let mut terms = args.iter().map(|a| self.parse_int_term(a));
                        let first = terms.next().unwrap()?;
                        terms.try_fold(first, |acc, t| Ok(IntTerm::sum(acc, t?)))
                    }
                    "-" => {
                        let negate = |t: IntTerm| match const_value(&t) {
                            Some(v) => IntTerm::Const(-v),
                            None => IntTerm::scalar_mul(-1, t),
                        };
                        match args {
                            [t] => Ok(negate(self.parse_int_term(t)?)),
                            [l, r] => {
                                let l = self.parse_int_term(l)?;
                                let r = negate(self.parse_int_term(r)?);
                                Ok(IntTerm::sum(l, r))
                            }
                            _ => Err(syntax_err(sexp, "`-` takes one or two arguments")),
                        }
                    }
                    "*" => self.parse_mul(sexp, args),
                    "str.len" => match args {
                        [Sexp::Sym(name, _, _)] => match self.decls.lookup(name) {
                            Some((Sort::Str, idx)) => Ok(IntTerm::Len(StrVar(idx))),
                            Some((Sort::Int, _)) => Err(syntax_err(
                                sexp,
                                format!("`{name}` is an Int, expected a String"),
                            )),
                            None => Err(syntax_err(sexp, format!("undeclared constant `{name}`"))),
                        },
                        [Sexp::Str(w, _, _)] => Ok(IntTerm::Const(BigInt::from(w.chars().count()))),
                        _ => Err(syntax_err(sexp, "`str.len` takes one string argument")),
                    },
                    other if KNOWN_UNSUPPORTED.contains(&other) => Err(unsupported(sexp, other)),
                    other => Err(syntax_err(sexp, format!("unknown operator `{other}`"))),
                }
            }
            Sexp::Str(_, _, _) => Err(syntax_err(sexp, "expected an Int term, found a string")),
        }
    }

    /// Multiplication must be linear: at most one non-constant factor.
    fn parse_mul(&mut self, whole: &Sexp, args: &[Sexp]) -> Result<IntTerm, ParseError> {
        if args.is_empty() {
            return Err(syntax_err(whole, "`*` needs at least one argument"));
        }
        let mut coeff = BigInt::from(1);
        let mut non_const: Option<IntTerm> = None;
        for a in args {
            let t = self.parse_int_term(a)?;
            match const_value(&t) {
                Some(v) => coeff *= v,
                None => {
                    if non_const.is_some() {
                        return Err(unsupported(whole, "nonlinear multiplication"));
                    }
                    non_const = Some(t);
                }
            }
        }
        Ok(match non_const {
            None => IntTerm::Const(coeff),
            Some(t) if coeff == BigInt::from(1) => t,
            Some(_) if coeff.is_zero() => IntTerm::Const(BigInt::zero()),
            Some(t) => IntTerm::ScalarMul(coeff, Box::new(t)),
        })
    }

    fn parse_regex(&mut self, sexp: &Sexp) -> Result<RegexTerm, ParseError> {
        match sexp {
            Sexp::Sym(s, _, _) if s == "re.none" => Ok(RegexTerm::Empty),
            Sexp::Sym(s, _, _) if s == "re.allchar" => Ok(self.allchar()),
            Sexp::Sym(s, _, _) if s == "re.all" => Err(unsupported(sexp, "re.all")),
            Sexp::Sym(s, _, _) => Err(syntax_err(sexp, format!("expected a regex, found `{s}`"))),
            Sexp::List(items, _, _) => {
                let (head, args) = self.head(items, sexp)?;
                match head {
                    "str.to_re" => match args {
                        [Sexp::Str(w, _, _)] => {
                            self.check_word_in_alphabet(sexp, w)?;
                            Ok(RegexTerm::Literal(w.clone()))
                        }
                        [Sexp::Sym(_, _, _)] => {
                            Err(unsupported(sexp, "str.to_re of a non-constant"))
                        }
                        _ => Err(syntax_err(sexp, "`str.to_re` takes one string literal")),
                    },
                    "re.++" => self.parse_variadic(sexp, args, RegexTerm::concat),
                    "re.union" => self.parse_variadic(sexp, args, RegexTerm::union),
                    "re.*" => match args {
                        [r] => Ok(RegexTerm::star(self.parse_regex(r)?)),
                        _ => Err(syntax_err(sexp, "`re.*` takes one argument")),
                    },
                    "re.comp" => match args {
                        [r] => Ok(RegexTerm::complement(self.parse_regex(r)?)),
                        _ => Err(syntax_err(sexp, "`re.comp` takes one argument")),
                    },
                    other if KNOWN_UNSUPPORTED.contains(&other) => Err(unsupported(sexp, other)),
                    other => Err(syntax_err(
                        sexp,
                        format!("unknown regex operator `{other}`"),
                    )),
                }
            }
            _ => Err(syntax_err(sexp, "expected a regex term")),
        }
    }

    fn parse_variadic(
        &mut self,
        whole: &Sexp,
        args: &[Sexp],
        combine: fn(RegexTerm, RegexTerm) -> RegexTerm,
    ) -> Result<RegexTerm, ParseError> {
        if args.is_empty() {
            return Err(syntax_err(whole, "operator needs at least one argument"));
        }
        let mut parsed: Vec<RegexTerm> = args
            .iter()
            .map(|a| self.parse_regex(a))
            .collect::<Result<_, _>>()?;
        let mut acc = parsed.pop().unwrap();
        while let Some(r) = parsed.pop() {
            acc = combine(r, acc);
        }
        Ok(acc)
    }

    /// `re.allchar` desugars to a balanced union of single-character literals
    /// over the configured alphabet.
    fn allchar(&self) -> RegexTerm {
        fn build(chars: &[char]) -> RegexTerm {
            match chars {
                [] => RegexTerm::Empty,
                [c] => RegexTerm::Literal(c.to_string()),
                _ => {
                    let mid = chars.len() / 2;
                    RegexTerm::union(build(&chars[..mid]), build(&chars[mid..]))
                }
            }
        }
        build(&self.alphabet.chars())
    }

    fn check_word_in_alphabet(&self, at: &Sexp, w: &str) -> Result<(), ParseError> {
        for c in w.chars() {
            if !self.alphabet.contains(c) {
                return Err(syntax_err(
                    at,
                    format!(
                        "character U+{:04X} is not in the configured alphabet",
                        c as u32
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Ground integer value of a term built only from constants.
fn const_value(t: &IntTerm) -> Option<BigInt> {
    match t {
        IntTerm::Const(v) => Some(v.clone()),
        IntTerm::Sum(l, r) => Some(const_value(l)? + const_value(r)?),
        IntTerm::ScalarMul(c, inner) => Some(c * const_value(inner)?),
        IntTerm::Var(_) | IntTerm::Len(_) => None,
    }
}

/// Parses a full script against the given alphabet.
pub fn parse_script(text: &str, alphabet: &Alphabet) -> Result<Script, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let sexps = parse_sexps(&tokens)?;
    let mut parser = Parser {
        alphabet,
        decls: Declarations::default(),
    };
    let mut asserts = Vec::new();
    let mut commands = Vec::new();
    for sexp in &sexps {
        parser.parse_command(sexp, &mut asserts, &mut commands)?;
    }
    Ok(Script {
        decls: parser.decls,
        asserts,
        commands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ScriptPrinter;

    fn parse(text: &str) -> Script {
        parse_script(text, &Alphabet::default()).expect("script should parse")
    }

    #[test]
    fn parses_membership_assertion() {
        let s = parse(
            r#"(declare-const X String)
               (assert (str.in_re X (re.* (str.to_re "abc"))))
               (check-sat)"#,
        );
        assert_eq!(s.asserts.len(), 1);
        assert_eq!(
            s.asserts[0],
            Formula::Atom(Atom::InRe(
                StrVar(0),
                RegexTerm::star(RegexTerm::literal("abc"))
            ))
        );
        assert_eq!(s.commands, vec![Command::CheckSat]);
    }

    #[test]
    fn parses_length_inequality() {
        let s = parse(
            r#"(declare-const X String)
               (assert (< (str.len X) 5))"#,
        );
        assert_eq!(
            s.asserts[0],
            Formula::Atom(Atom::IntLt(IntTerm::Len(StrVar(0)), IntTerm::constant(5)))
        );
    }

    #[test]
    fn negated_membership_stays_negated_until_nnf() {
        let s = parse(
            r#"(declare-const X String)
               (assert (not (str.in_re X (str.to_re "a"))))"#,
        );
        assert!(matches!(s.asserts[0], Formula::Not(_)));
    }

    #[test]
    fn le_desugars_to_lt_or_eq() {
        let s = parse(
            r#"(declare-const n Int)
               (assert (<= n 3))"#,
        );
        match &s.asserts[0] {
            Formula::Or(fs) => {
                assert!(matches!(fs[0], Formula::Atom(Atom::IntLt(_, _))));
                assert!(matches!(fs[1], Formula::Atom(Atom::IntEq(_, _))));
            }
            other => panic!("expected a disjunction, got {other:?}"),
        }
    }

    #[test]
    fn constant_subject_is_folded() {
        let s = parse(r#"(assert (str.in_re "abcabc" (re.* (str.to_re "abc"))))"#);
        assert_eq!(s.asserts[0], Formula::True);
        let s = parse(r#"(assert (str.in_re "ab" (re.* (str.to_re "abc"))))"#);
        assert_eq!(s.asserts[0], Formula::False);
    }

    #[test]
    fn unsupported_operator_is_flagged() {
        let err = parse_script(
            r#"(declare-const X String)
               (declare-const Y String)
               (assert (= (str.++ X Y) X))"#,
            &Alphabet::default(),
        )
        .unwrap_err();
        assert!(err.is_unsupported(), "got {err}");
    }

    #[test]
    fn word_equation_is_unsupported() {
        let err = parse_script(
            r#"(declare-const X String)
               (assert (= X "abc"))"#,
            &Alphabet::default(),
        )
        .unwrap_err();
        assert!(err.is_unsupported());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_script("(assert (and true", &Alphabet::default()).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn undeclared_variable_is_syntax_error() {
        let err = parse_script(r#"(assert (< (str.len X) 5))"#, &Alphabet::default()).unwrap_err();
        assert!(!err.is_unsupported());
    }

    #[test]
    fn allchar_over_small_alphabet() {
        let alphabet = Alphabet::from_chars("ab".chars()).unwrap();
        let s = parse_script(
            r#"(declare-const X String)
               (assert (str.in_re X re.allchar))"#,
            &alphabet,
        )
        .unwrap();
        match &s.asserts[0] {
            Formula::Atom(Atom::InRe(_, re)) => {
                assert!(crate::semantics::word_matches(re, "a"));
                assert!(crate::semantics::word_matches(re, "b"));
                assert!(!crate::semantics::word_matches(re, ""));
                assert!(!crate::semantics::word_matches(re, "ab"));
            }
            other => panic!("unexpected formula {other:?}"),
        }
    }

    #[test]
    fn re_none_is_primitive_empty() {
        let s = parse(
            r#"(declare-const X String)
               (assert (str.in_re X re.none))"#,
        );
        assert_eq!(
            s.asserts[0],
            Formula::Atom(Atom::InRe(StrVar(0), RegexTerm::Empty))
        );
    }

    #[test]
    fn print_parse_round_trip() {
        let text = r#"(declare-const X String)
(declare-const n Int)
(assert (str.in_re X (re.union (re.* (str.to_re "ab")) (re.comp (str.to_re "c")))))
(assert (< (+ (str.len X) (* 2 n)) 7))
(check-sat)
(get-model)
"#;
        let s = parse(text);
        let printed = ScriptPrinter::new(&s.decls).script(&s);
        let s2 = parse(&printed);
        assert_eq!(s.asserts, s2.asserts);
        assert_eq!(s.commands, s2.commands);
    }

    #[test]
    fn string_literal_escapes() {
        let s = parse(r#"(assert (str.in_re "a""b" (str.to_re "a""b")))"#);
        assert_eq!(s.asserts[0], Formula::True);
        let s = parse(r#"(assert (str.in_re "\u{61}" (str.to_re "a")))"#);
        assert_eq!(s.asserts[0], Formula::True);
    }
}
