//! A small text language for isometry claims, so theorem suites are data.
//!
//! ```text
//! # Generalized Mumford relation, quantified over n
//! ctx q=2 N=2 rules=adjunction;
//! forall n in 1..5:
//!   check lambda_n(n)^12 ==
//!         Delta0^(6*n^2-6*n+1) * Delta1 * Delta2^(10-12*n) * e^{a(q)};
//! ```
//!
//! Multiplicative syntax mirrors tensor notation; `D` is the single built-in
//! symbol for `P1 + .. + PN`. Exponents are rationals or parenthesized
//! integer-polynomial expressions in quantifier variables, evaluated per
//! instantiation. Comments run from `#` to end of line. Script files use
//! the `.chk` extension.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::line::{deligne_constant, rat, ConstExpr, CurveContext, MetrizedLineExpr, Rat};
use crate::pairing::{eval_formal, normalize, FormalExpr, RuleSet, Value};

// ---------------------------------------------------------------------------
// Tokens

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str), // one of ; : ^ * / ( ) { } , = == .. + -
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Lexer<'_> {
    fn bump(&mut self) -> char {
        let c = self.chars.next().unwrap();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(&c) = lx.chars.peek() {
        let (tl, tc) = (lx.line, lx.col);
        match c {
            '#' => {
                while let Some(&c) = lx.chars.peek() {
                    lx.bump();
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                lx.bump();
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = lx.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(lx.bump());
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = lx.chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(lx.bump());
                    } else {
                        break;
                    }
                }
                let v = s.parse::<i64>().map_err(|_| Error::Parse {
                    line: tl,
                    col: tc,
                    msg: format!("integer literal {s} out of range"),
                })?;
                out.push(Token {
                    tok: Tok::Int(v),
                    line: tl,
                    col: tc,
                });
            }
            '=' => {
                lx.bump();
                if lx.chars.peek() == Some(&'=') {
                    lx.bump();
                    out.push(Token {
                        tok: Tok::Sym("=="),
                        line: tl,
                        col: tc,
                    });
                } else {
                    out.push(Token {
                        tok: Tok::Sym("="),
                        line: tl,
                        col: tc,
                    });
                }
            }
            '.' => {
                lx.bump();
                if lx.chars.peek() == Some(&'.') {
                    lx.bump();
                    out.push(Token {
                        tok: Tok::Sym(".."),
                        line: tl,
                        col: tc,
                    });
                } else {
                    return Err(Error::Parse {
                        line: tl,
                        col: tc,
                        msg: "expected `..`".to_owned(),
                    });
                }
            }
            ';' | ':' | '^' | '*' | '/' | '(' | ')' | '{' | '}' | ',' | '+' | '-' => {
                lx.bump();
                let s = match c {
                    ';' => ";",
                    ':' => ":",
                    '^' => "^",
                    '*' => "*",
                    '/' => "/",
                    '(' => "(",
                    ')' => ")",
                    '{' => "{",
                    '}' => "}",
                    ',' => ",",
                    '+' => "+",
                    _ => "-",
                };
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    col: tc,
                });
            }
            other => {
                return Err(Error::Parse {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character {other:?}"),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// AST

/// Integer/rational arithmetic over quantifier variables.
#[derive(Clone, PartialEq, Debug)]
pub enum NumAst {
    Int(i64),
    Var(String),
    Neg(Box<NumAst>),
    Add(Box<NumAst>, Box<NumAst>),
    Sub(Box<NumAst>, Box<NumAst>),
    Mul(Box<NumAst>, Box<NumAst>),
    Div(Box<NumAst>, Box<NumAst>),
    Pow(Box<NumAst>, u32),
}

impl NumAst {
    pub fn eval(&self, vars: &BTreeMap<String, i64>) -> Result<Rat> {
        Ok(match self {
            NumAst::Int(v) => rat(*v),
            NumAst::Var(name) => rat(*vars.get(name).ok_or_else(|| {
                Error::MalformedClaim(format!("unbound quantifier variable {name}"))
            })?),
            NumAst::Neg(a) => -a.eval(vars)?,
            NumAst::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            NumAst::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            NumAst::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            NumAst::Div(a, b) => {
                let d = b.eval(vars)?;
                if d.is_zero() {
                    return Err(Error::MalformedClaim("division by zero in exponent".into()));
                }
                a.eval(vars)? / d
            }
            NumAst::Pow(a, k) => {
                let base = a.eval(vars)?;
                let mut acc = rat(1);
                for _ in 0..*k {
                    acc *= &base;
                }
                acc
            }
        })
    }
}

/// A constant symbol inside `e^{..}`.
#[derive(Clone, PartialEq, Debug)]
pub enum CSym {
    /// `a(q)`: the Deligne constant of the active context.
    DeligneAQ,
    Named(String),
}

/// One additive term of a constant expression: `coeff * sym`, either part
/// optional.
#[derive(Clone, PartialEq, Debug)]
pub struct ConstTerm {
    pub negated: bool,
    pub coeff: Option<NumAst>,
    pub sym: Option<CSym>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ConstAst {
    pub terms: Vec<ConstTerm>,
}

impl ConstAst {
    fn eval(&self, q: i64, vars: &BTreeMap<String, i64>) -> Result<ConstExpr> {
        let mut acc = ConstExpr::zero();
        for t in &self.terms {
            let coeff = match &t.coeff {
                Some(c) => c.eval(vars)?,
                None => rat(1),
            };
            let coeff = if t.negated { -coeff } else { coeff };
            let base = match &t.sym {
                Some(CSym::DeligneAQ) => deligne_constant(q),
                Some(CSym::Named(name)) => ConstExpr::named(name),
                None => ConstExpr::rational(rat(1)),
            };
            acc = acc.add(&base.scale(&coeff));
        }
        Ok(acc)
    }
}

/// Expression AST. Positions live on script items, not on nodes, so that
/// parse-print round trips compare with plain equality.
#[derive(Clone, PartialEq, Debug)]
pub enum Ast {
    K,
    O,
    D,
    Mark(u32), // 1-based
    Name(String),
    Lambda(Box<Ast>),
    LambdaN(NumAst),
    Delta(u8),
    Pair(Box<Ast>, Box<Ast>),
    EConst(ConstAst),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, NumAst),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum RulesChoice {
    Adjunction,
    Cuspidal,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Quantifier {
    pub var: String,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct CheckItem {
    pub quantifiers: Vec<Quantifier>,
    pub lhs: Ast,
    pub rhs: Ast,
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Item {
    Ctx {
        q: u32,
        n_marks: u32,
        rules: RulesChoice,
        line: u32,
        col: u32,
    },
    Let {
        name: String,
        expr: Ast,
        line: u32,
        col: u32,
    },
    Check(CheckItem),
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Script {
    pub items: Vec<Item>,
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Quantifier variables in scope, so `e^{..}` and exponents can tell
    /// variables from constant symbols.
    vars: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .or_else(|| self.toks.last().map(|t| (t.line, t.col + 1)))
            .unwrap_or((1, 1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Parse {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Sym(t)) if *t == s => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{s}`")),
        }
    }

    fn expect_int(&mut self) -> Result<i64> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == kw {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if let Some(Tok::Sym(t)) = self.peek() {
            if *t == s {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn is_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v == name)
    }

    fn script(&mut self) -> Result<Script> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            items.push(self.item()?);
        }
        Ok(Script { items })
    }

    fn item(&mut self) -> Result<Item> {
        let (line, col) = self.here();
        if self.eat_kw("ctx") {
            if !self.eat_kw("q") {
                return self.err("expected `q=` in ctx declaration");
            }
            self.expect_sym("=")?;
            let q = self.expect_int()?;
            if !self.eat_kw("N") {
                return self.err("expected `N=` in ctx declaration");
            }
            self.expect_sym("=")?;
            let n = self.expect_int()?;
            if !self.eat_kw("rules") {
                return self.err("expected `rules=` in ctx declaration");
            }
            self.expect_sym("=")?;
            let rules = match self.expect_ident()?.as_str() {
                "adjunction" => RulesChoice::Adjunction,
                "cuspidal" => RulesChoice::Cuspidal,
                other => return self.err(format!("unknown rule set `{other}`")),
            };
            self.expect_sym(";")?;
            if q < 0 || n < 0 {
                return self.err("q and N must be non-negative");
            }
            Ok(Item::Ctx {
                q: q as u32,
                n_marks: n as u32,
                rules,
                line,
                col,
            })
        } else if self.eat_kw("let") {
            let name = self.expect_ident()?;
            self.expect_sym("=")?;
            let expr = self.expr()?;
            self.expect_sym(";")?;
            Ok(Item::Let {
                name,
                expr,
                line,
                col,
            })
        } else {
            Ok(Item::Check(self.check()?))
        }
    }

    fn check(&mut self) -> Result<CheckItem> {
        let (line, col) = self.here();
        if self.eat_kw("forall") {
            let var = self.expect_ident()?;
            if !self.eat_kw("in") {
                return self.err("expected `in`");
            }
            let neg_lo = self.eat_sym("-");
            let lo = self.expect_int()? * if neg_lo { -1 } else { 1 };
            self.expect_sym("..")?;
            let neg_hi = self.eat_sym("-");
            let hi = self.expect_int()? * if neg_hi { -1 } else { 1 };
            if lo > hi {
                return Err(Error::InvalidRange { lo, hi, line, col });
            }
            self.expect_sym(":")?;
            self.vars.push(var.clone());
            let mut inner = self.check()?;
            self.vars.pop();
            inner.quantifiers.insert(0, Quantifier { var, lo, hi });
            inner.line = line;
            inner.col = col;
            Ok(inner)
        } else if self.eat_kw("check") {
            let lhs = self.expr()?;
            self.expect_sym("==")?;
            let rhs = self.expr()?;
            self.expect_sym(";")?;
            Ok(CheckItem {
                quantifiers: Vec::new(),
                lhs,
                rhs,
                line,
                col,
            })
        } else {
            self.err("expected `ctx`, `let`, `check` or `forall`")
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut acc = self.term()?;
        loop {
            if self.eat_sym("*") {
                let rhs = self.term()?;
                acc = Ast::Mul(Box::new(acc), Box::new(rhs));
            } else if self.eat_sym("/") {
                let rhs = self.term()?;
                acc = Ast::Div(Box::new(acc), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Ast> {
        let atom = self.atom()?;
        if self.eat_sym("^") {
            let e = self.exponent()?;
            Ok(Ast::Pow(Box::new(atom), e))
        } else {
            Ok(atom)
        }
    }

    /// `^` argument: a signed integer, an immediate fraction `a/b`, or a
    /// parenthesized arithmetic expression in quantifier variables.
    fn exponent(&mut self) -> Result<NumAst> {
        match self.peek() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.numexpr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Sym("-")) => {
                self.pos += 1;
                let e = self.exponent()?;
                Ok(NumAst::Neg(Box::new(e)))
            }
            Some(Tok::Int(_)) => {
                let v = self.expect_int()?;
                if matches!(self.peek(), Some(Tok::Sym("/")))
                    && matches!(self.peek2(), Some(Tok::Int(_)))
                {
                    self.pos += 1;
                    let d = self.expect_int()?;
                    Ok(NumAst::Div(
                        Box::new(NumAst::Int(v)),
                        Box::new(NumAst::Int(d)),
                    ))
                } else {
                    Ok(NumAst::Int(v))
                }
            }
            Some(Tok::Ident(name)) if self.is_var(name) => {
                let name = self.expect_ident()?;
                Ok(NumAst::Var(name))
            }
            _ => self.err("expected an exponent"),
        }
    }

    fn numexpr(&mut self) -> Result<NumAst> {
        let mut acc = self.nterm()?;
        loop {
            if self.eat_sym("+") {
                acc = NumAst::Add(Box::new(acc), Box::new(self.nterm()?));
            } else if self.eat_sym("-") {
                acc = NumAst::Sub(Box::new(acc), Box::new(self.nterm()?));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn nterm(&mut self) -> Result<NumAst> {
        let mut acc = self.nfactor()?;
        loop {
            match self.peek() {
                // Stop at `* ident` when the ident is not a quantifier
                // variable: that multiplication belongs to an enclosing
                // constant term (e.g. `2*a(q)`).
                Some(Tok::Sym("*")) => {
                    if let Some(Tok::Ident(name)) = self.peek2() {
                        if !self.is_var(name) {
                            break;
                        }
                    }
                    self.pos += 1;
                    acc = NumAst::Mul(Box::new(acc), Box::new(self.nfactor()?));
                }
                Some(Tok::Sym("/")) => {
                    self.pos += 1;
                    acc = NumAst::Div(Box::new(acc), Box::new(self.nfactor()?));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn nfactor(&mut self) -> Result<NumAst> {
        if self.eat_sym("-") {
            return Ok(NumAst::Neg(Box::new(self.nfactor()?)));
        }
        let base = match self.peek() {
            Some(Tok::Int(_)) => NumAst::Int(self.expect_int()?),
            Some(Tok::Ident(name)) if self.is_var(name) => NumAst::Var(self.expect_ident()?),
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.numexpr()?;
                self.expect_sym(")")?;
                e
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                let (line, col) = self.here();
                return Err(Error::UnknownIdentifier { name, line, col });
            }
            _ => return self.err("expected a number, variable or parenthesis"),
        };
        if self.eat_sym("^") {
            let k = self.expect_int()?;
            if !(0..=64).contains(&k) {
                return self.err("integer power out of range 0..=64");
            }
            Ok(NumAst::Pow(Box::new(base), k as u32))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "K" => Ok(Ast::K),
                    "O" => Ok(Ast::O),
                    "D" => Ok(Ast::D),
                    "Delta0" => Ok(Ast::Delta(0)),
                    "Delta1" => Ok(Ast::Delta(1)),
                    "Delta2" => Ok(Ast::Delta(2)),
                    "lambda" => {
                        self.expect_sym("(")?;
                        let inner = self.expr()?;
                        self.expect_sym(")")?;
                        Ok(Ast::Lambda(Box::new(inner)))
                    }
                    "lambda_n" => {
                        self.expect_sym("(")?;
                        let n = self.numexpr()?;
                        self.expect_sym(")")?;
                        Ok(Ast::LambdaN(n))
                    }
                    "pair" => {
                        self.expect_sym("(")?;
                        let a = self.expr()?;
                        self.expect_sym(",")?;
                        let b = self.expr()?;
                        self.expect_sym(")")?;
                        Ok(Ast::Pair(Box::new(a), Box::new(b)))
                    }
                    "e" => {
                        self.expect_sym("^")?;
                        self.expect_sym("{")?;
                        let c = self.constexpr()?;
                        self.expect_sym("}")?;
                        Ok(Ast::EConst(c))
                    }
                    _ => {
                        if let Some(idx) = name
                            .strip_prefix('P')
                            .and_then(|digits| digits.parse::<u32>().ok())
                        {
                            Ok(Ast::Mark(idx))
                        } else {
                            Ok(Ast::Name(name))
                        }
                    }
                }
            }
            _ => self.err("expected an expression"),
        }
    }

    fn constexpr(&mut self) -> Result<ConstAst> {
        let mut terms = Vec::new();
        let mut negated = self.eat_sym("-");
        loop {
            terms.push(self.cterm(negated)?);
            if self.eat_sym("+") {
                negated = false;
            } else if self.eat_sym("-") {
                negated = true;
            } else {
                break;
            }
        }
        Ok(ConstAst { terms })
    }

    fn csym(&mut self) -> Result<CSym> {
        let name = self.expect_ident()?;
        if name == "a" && matches!(self.peek(), Some(Tok::Sym("("))) {
            self.pos += 1;
            let arg = self.expect_ident()?;
            if arg != "q" {
                return self.err("only `a(q)` is a built-in constant");
            }
            self.expect_sym(")")?;
            Ok(CSym::DeligneAQ)
        } else {
            Ok(CSym::Named(name))
        }
    }

    fn cterm(&mut self, negated: bool) -> Result<ConstTerm> {
        // Symbol-first term: `alpha` or `a(q)` without a coefficient.
        if let Some(Tok::Ident(name)) = self.peek() {
            if !self.is_var(name) {
                let sym = self.csym()?;
                return Ok(ConstTerm {
                    negated,
                    coeff: None,
                    sym: Some(sym),
                });
            }
        }
        let coeff = self.numexpr()?;
        if self.eat_sym("*") {
            // nterm stopped in front of `* csym`
            let sym = self.csym()?;
            Ok(ConstTerm {
                negated,
                coeff: Some(coeff),
                sym: Some(sym),
            })
        } else {
            Ok(ConstTerm {
                negated,
                coeff: Some(coeff),
                sym: None,
            })
        }
    }
}

/// Parse a script. Errors carry line/column positions.
pub fn parse(src: &str) -> Result<Script> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars: Vec::new(),
    };
    p.script()
}

// ---------------------------------------------------------------------------
// Printer (canonical form; parse . print is the identity on ASTs)

fn print_num(n: &NumAst, out: &mut String) {
    match n {
        NumAst::Int(v) => {
            let _ = write!(out, "{v}");
        }
        NumAst::Var(v) => out.push_str(v),
        NumAst::Neg(a) => {
            out.push_str("-(");
            print_num(a, out);
            out.push(')');
        }
        NumAst::Add(a, b) => {
            print_num(a, out);
            out.push('+');
            print_num_tight(b, out);
        }
        NumAst::Sub(a, b) => {
            print_num(a, out);
            out.push('-');
            print_num_tight(b, out);
        }
        NumAst::Mul(a, b) => {
            print_num_tight(a, out);
            out.push('*');
            print_num_tight(b, out);
        }
        NumAst::Div(a, b) => {
            print_num_tight(a, out);
            out.push('/');
            print_num_tight(b, out);
        }
        NumAst::Pow(a, k) => {
            print_num_tight(a, out);
            let _ = write!(out, "^{k}");
        }
    }
}

// Parenthesize compound operands so the canonical text reparses to the
// same tree regardless of precedence.
fn print_num_tight(n: &NumAst, out: &mut String) {
    match n {
        NumAst::Int(_) | NumAst::Var(_) => print_num(n, out),
        _ => {
            out.push('(');
            print_num(n, out);
            out.push(')');
        }
    }
}

fn print_const(c: &ConstAst, out: &mut String) {
    for (i, t) in c.terms.iter().enumerate() {
        if t.negated {
            out.push('-');
        } else if i > 0 {
            out.push('+');
        }
        match (&t.coeff, &t.sym) {
            (Some(coeff), Some(sym)) => {
                out.push('(');
                print_num(coeff, out);
                out.push(')');
                out.push('*');
                print_csym(sym, out);
            }
            (Some(coeff), None) => {
                out.push('(');
                print_num(coeff, out);
                out.push(')');
            }
            (None, Some(sym)) => print_csym(sym, out),
            (None, None) => out.push('0'),
        }
    }
}

fn print_csym(s: &CSym, out: &mut String) {
    match s {
        CSym::DeligneAQ => out.push_str("a(q)"),
        CSym::Named(n) => out.push_str(n),
    }
}

fn print_ast(a: &Ast, out: &mut String) {
    match a {
        Ast::K => out.push('K'),
        Ast::O => out.push('O'),
        Ast::D => out.push('D'),
        Ast::Mark(i) => {
            let _ = write!(out, "P{i}");
        }
        Ast::Name(n) => out.push_str(n),
        Ast::Lambda(inner) => {
            out.push_str("lambda(");
            print_ast(inner, out);
            out.push(')');
        }
        Ast::LambdaN(n) => {
            out.push_str("lambda_n(");
            print_num(n, out);
            out.push(')');
        }
        Ast::Delta(k) => {
            let _ = write!(out, "Delta{k}");
        }
        Ast::Pair(x, y) => {
            out.push_str("pair(");
            print_ast(x, out);
            out.push_str(", ");
            print_ast(y, out);
            out.push(')');
        }
        Ast::EConst(c) => {
            out.push_str("e^{");
            print_const(c, out);
            out.push('}');
        }
        Ast::Mul(x, y) => {
            print_ast(x, out);
            out.push_str(" * ");
            print_factor(y, out);
        }
        Ast::Div(x, y) => {
            print_ast(x, out);
            out.push_str(" / ");
            print_factor(y, out);
        }
        Ast::Pow(x, e) => {
            print_factor(x, out);
            out.push_str("^(");
            print_num(e, out);
            out.push(')');
        }
    }
}

// Wrap nested products on the right so precedence survives reparsing.
fn print_factor(a: &Ast, out: &mut String) {
    match a {
        Ast::Mul(..) | Ast::Div(..) | Ast::Pow(..) => {
            out.push('(');
            print_ast(a, out);
            out.push(')');
        }
        _ => print_ast(a, out),
    }
}

/// Canonical text of a script; `parse(print_script(s)) == s`.
pub fn print_script(script: &Script) -> String {
    let mut out = String::new();
    for item in &script.items {
        match item {
            Item::Ctx {
                q, n_marks, rules, ..
            } => {
                let r = match rules {
                    RulesChoice::Adjunction => "adjunction",
                    RulesChoice::Cuspidal => "cuspidal",
                };
                let _ = writeln!(out, "ctx q={q} N={n_marks} rules={r};");
            }
            Item::Let { name, expr, .. } => {
                let mut e = String::new();
                print_ast(expr, &mut e);
                let _ = writeln!(out, "let {name} = {e};");
            }
            Item::Check(chk) => {
                for q in &chk.quantifiers {
                    let _ = write!(out, "forall {} in {}..{}: ", q.var, q.lo, q.hi);
                }
                let mut l = String::new();
                print_ast(&chk.lhs, &mut l);
                let mut r = String::new();
                print_ast(&chk.rhs, &mut r);
                let _ = writeln!(out, "check {l} == {r};");
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum StatusKind {
    Pass,
    Fail,
    Flagged,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    pub label: String,
    pub status: StatusKind,
    /// Diff vector, flag note or error message.
    pub detail: Option<String>,
}

/// Line-oriented verification report; renders as `PASS/FAIL label` text or
/// as JSON.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn pass(&mut self, label: impl Into<String>) {
        self.entries.push(ReportEntry {
            label: label.into(),
            status: StatusKind::Pass,
            detail: None,
        });
    }

    pub fn fail(&mut self, label: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(ReportEntry {
            label: label.into(),
            status: StatusKind::Fail,
            detail: Some(detail.into()),
        });
    }

    pub fn flag(&mut self, label: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(ReportEntry {
            label: label.into(),
            status: StatusKind::Flagged,
            detail: Some(detail.into()),
        });
    }

    pub fn error(&mut self, label: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(ReportEntry {
            label: label.into(),
            status: StatusKind::Error,
            detail: Some(detail.into()),
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn merge(&mut self, other: Report) {
        self.entries.extend(other.entries);
        self.notes.extend(other.notes);
    }

    /// Failures and evaluation errors make the run unsuccessful; flagged
    /// entries do not.
    pub fn is_success(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(e.status, StatusKind::Pass | StatusKind::Flagged))
    }

    pub fn count(&self, status: StatusKind) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let tag = match e.status {
                StatusKind::Pass => "PASS",
                StatusKind::Fail => "FAIL",
                StatusKind::Flagged => "FLAG",
                StatusKind::Error => "ERROR",
            };
            let _ = writeln!(out, "{tag} {}", e.label);
            if e.status != StatusKind::Pass {
                if let Some(d) = &e.detail {
                    let _ = writeln!(out, "  {d}");
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "NOTE {n}");
        }
        let _ = writeln!(
            out,
            "{} checks: {} passed, {} failed, {} flagged, {} errors",
            self.entries.len(),
            self.count(StatusKind::Pass),
            self.count(StatusKind::Fail),
            self.count(StatusKind::Flagged),
            self.count(StatusKind::Error),
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// Runner

struct Env {
    ctx: CurveContext,
    lets: BTreeMap<String, Ast>,
    vars: BTreeMap<String, i64>,
    q: i64,
    lets_in_flight: Vec<String>,
}

impl Env {
    fn to_formal(&mut self, ast: &Ast) -> Result<FormalExpr> {
        Ok(match ast {
            Ast::K => FormalExpr::Line(MetrizedLineExpr::canonical()),
            Ast::O => FormalExpr::Line(MetrizedLineExpr::trivial()),
            Ast::D => FormalExpr::Line(self.ctx.cusp_divisor()),
            Ast::Mark(i) => FormalExpr::Line(self.ctx.mark_line(*i)?),
            Ast::Name(name) => {
                let inner =
                    self.lets
                        .get(name)
                        .cloned()
                        .ok_or_else(|| Error::UnknownIdentifier {
                            name: name.clone(),
                            line: 0,
                            col: 0,
                        })?;
                if self.lets_in_flight.contains(name) {
                    return Err(Error::MalformedClaim(format!(
                        "let binding {name} refers to itself"
                    )));
                }
                self.lets_in_flight.push(name.clone());
                let out = self.to_formal(&inner)?;
                self.lets_in_flight.pop();
                out
            }
            Ast::Lambda(inner) => FormalExpr::lambda(self.to_formal(inner)?),
            Ast::LambdaN(n) => {
                let v = n.eval(&self.vars)?;
                if !v.is_integer() {
                    return Err(Error::MalformedClaim(format!(
                        "lambda_n takes an integer, got {v}"
                    )));
                }
                let n = v
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::MalformedClaim("lambda_n index overflows".into()))?;
                FormalExpr::LambdaN(n)
            }
            Ast::Delta(k) => FormalExpr::Delta(*k),
            Ast::Pair(a, b) => FormalExpr::pair(self.to_formal(a)?, self.to_formal(b)?),
            Ast::EConst(c) => {
                FormalExpr::Line(MetrizedLineExpr::twist_line(c.eval(self.q, &self.vars)?))
            }
            Ast::Mul(a, b) => FormalExpr::Tensor(vec![self.to_formal(a)?, self.to_formal(b)?]),
            Ast::Div(a, b) => FormalExpr::Tensor(vec![
                self.to_formal(a)?,
                FormalExpr::power(self.to_formal(b)?, rat(-1)),
            ]),
            Ast::Pow(a, e) => FormalExpr::power(self.to_formal(a)?, e.eval(&self.vars)?),
        })
    }
}

/// Run a parsed script and aggregate a report. `defaults` supplies the
/// context and rules for scripts that do not declare their own `ctx`.
/// Evaluation errors surface per check without aborting the suite.
pub fn run(script: &Script, defaults: Option<(CurveContext, RuleSet)>) -> Report {
    let mut report = Report::default();
    let (mut ctx, mut rules) = match defaults {
        Some((c, r)) => (Some(c), Some(r)),
        None => (None, None),
    };
    let mut lets: BTreeMap<String, Ast> = BTreeMap::new();

    for item in &script.items {
        match item {
            Item::Ctx {
                q,
                n_marks,
                rules: choice,
                ..
            } => {
                ctx = Some(CurveContext::new(*q, *n_marks));
                rules = Some(match choice {
                    RulesChoice::Adjunction => RuleSet::adjunction(),
                    RulesChoice::Cuspidal => RuleSet::cuspidal_symbolic(*n_marks),
                });
            }
            Item::Let { name, expr, .. } => {
                lets.insert(name.clone(), expr.clone());
            }
            Item::Check(chk) => {
                let label_base = format!("check@{}:{}", chk.line, chk.col);
                let (Some(ctx), Some(rules)) = (&ctx, &rules) else {
                    report.error(
                        label_base,
                        "no ctx declared and no default context supplied",
                    );
                    continue;
                };
                run_check(chk, ctx, rules, &lets, &mut report, &label_base);
            }
        }
    }
    report
}

fn run_check(
    chk: &CheckItem,
    ctx: &CurveContext,
    rules: &RuleSet,
    lets: &BTreeMap<String, Ast>,
    report: &mut Report,
    label_base: &str,
) {
    // Unroll quantifiers into one binding map per instance.
    let mut bindings: Vec<BTreeMap<String, i64>> = vec![BTreeMap::new()];
    for quant in &chk.quantifiers {
        let mut next = Vec::new();
        for b in &bindings {
            for v in quant.lo..=quant.hi {
                let mut b = b.clone();
                b.insert(quant.var.clone(), v);
                next.push(b);
            }
        }
        bindings = next;
    }

    for vars in bindings {
        let label = if vars.is_empty() {
            label_base.to_owned()
        } else {
            let parts: Vec<String> = vars.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{label_base} [{}]", parts.join(","))
        };
        let mut env = Env {
            ctx: ctx.clone(),
            lets: lets.clone(),
            vars,
            q: ctx.genus() as i64,
            lets_in_flight: Vec::new(),
        };
        let outcome = env.to_formal(&chk.lhs).and_then(|lhs| {
            let rhs = env.to_formal(&chk.rhs)?;
            crate::pairing::verify_identity(&crate::pairing::IdentityClaim { lhs, rhs }, ctx, rules)
        });
        match outcome {
            Ok(crate::pairing::Verdict::Equal) => report.pass(label),
            Ok(crate::pairing::Verdict::Unequal { diff }) => {
                report.fail(label, format!("diff: {}", diff.display(ctx)));
            }
            Err(e) => report.error(label, e.to_string()),
        }
    }
}

/// Evaluate a single expression string; exposed for interactive front ends.
pub fn eval_expr_str(src: &str, ctx: &CurveContext, rules: &RuleSet) -> Result<Value> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars: Vec::new(),
    };
    let ast = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input after expression");
    }
    let mut env = Env {
        ctx: ctx.clone(),
        lets: BTreeMap::new(),
        vars: BTreeMap::new(),
        q: ctx.genus() as i64,
        lets_in_flight: Vec::new(),
    };
    let formal = env.to_formal(&ast)?;
    eval_formal(&formal, ctx, rules)
}

/// Normalized vector of an expression string, mainly for demos and tests.
pub fn eval_vector_str(
    src: &str,
    ctx: &CurveContext,
    rules: &RuleSet,
) -> Result<crate::pairing::PairingVector> {
    match eval_expr_str(src, ctx, rules)? {
        Value::Vector(v) => Ok(normalize(&v, rules)),
        Value::Line(l) if l.is_pure_twist() => {
            Ok(crate::pairing::PairingVector::constant(l.twist().clone()))
        }
        Value::Line(_) => Err(Error::MalformedClaim(
            "expression is a bare line bundle, not a pairing expression".to_owned(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_mumford_script() {
        let src = "ctx q=2 N=2 rules=adjunction; forall n in 1..5: check lambda_n(n)^12 == Delta0^(6*n^2-6*n+1) * Delta1 * Delta2^(10-12*n) * e^{a(q)};";
        let script = parse(src).unwrap();
        assert_eq!(script.items.len(), 2);
        match &script.items[1] {
            Item::Check(c) => {
                assert_eq!(c.quantifiers.len(), 1);
                assert_eq!(c.quantifiers[0].var, "n");
            }
            other => panic!("expected check, got {other:?}"),
        }
    }

    #[test]
    fn empty_script_is_empty() {
        assert!(parse("").unwrap().items.is_empty());
        assert!(parse("# only a comment\n").unwrap().items.is_empty());
    }

    #[test]
    fn syntax_error_has_position() {
        match parse("check K ==") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 1);
                assert!(col >= 10);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reversed_range_is_rejected() {
        assert!(matches!(
            parse("ctx q=2 N=0 rules=adjunction; forall n in 5..1: check K == K;"),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn print_parse_roundtrip() {
        let src = "ctx q=2 N=2 rules=adjunction;\nlet KD = K * D;\nforall n in 1..6: check lambda_n(n)^12 == Delta0^(6*n^2-6*n+1) * Delta1 * Delta2^(10-12*n) * e^{a(q)};\ncheck lambda(K^2 / P1) == lambda(K^2) * pair(K^2, P1)^(-1);\ncheck lambda_n(2) == lambda_n(1)^13 * Delta1^(-(2*(2-1))/2) * Delta2^((2-1)^2) * e^{(-(2*(2-1))/2)*a(q)};\n";
        let ast1 = parse(src).unwrap();
        let printed = print_script(&ast1);
        let ast2 = parse(&printed).unwrap();
        assert_eq!(ast1, ast2);
    }

    #[test]
    fn runs_the_worked_example() {
        let src = "ctx q=2 N=2 rules=adjunction;\nforall n in 1..5: check lambda_n(n)^12 == Delta0^(6*n^2-6*n+1) * Delta1 * Delta2^(10-12*n) * e^{a(q)};";
        let report = run(&parse(src).unwrap(), None);
        assert!(report.is_success(), "{}", report.render_text());
        assert_eq!(report.count(StatusKind::Pass), 5);
    }

    #[test]
    fn quantifier_of_size_one_matches_plain_check() {
        let a = run(
            &parse("ctx q=2 N=1 rules=adjunction; forall n in 2..2: check lambda_n(n) == lambda_n(1-n);").unwrap(),
            None,
        );
        let b = run(
            &parse("ctx q=2 N=1 rules=adjunction; check lambda_n(2) == lambda_n(-1);").unwrap(),
            None,
        );
        assert!(a.is_success() && b.is_success());
        assert_eq!(a.count(StatusKind::Pass), b.count(StatusKind::Pass));
    }

    #[test]
    fn failing_check_reports_the_deligne_constant() {
        let src = "ctx q=2 N=0 rules=adjunction; check lambda(O)^12 == pair(K, K);";
        let report = run(&parse(src).unwrap(), None);
        assert!(!report.is_success());
        let detail = report.entries[0].detail.clone().unwrap();
        assert!(
            detail.contains("zeta'(-1)"),
            "diff should show a(q): {detail}"
        );
    }

    #[test]
    fn evaluation_error_does_not_abort_suite() {
        let src = "ctx q=2 N=1 rules=adjunction;\ncheck pair(lambda(K), K) == K;\ncheck K == K;";
        let report = run(&parse(src).unwrap(), None);
        assert_eq!(report.count(StatusKind::Error), 1);
        assert_eq!(report.count(StatusKind::Pass), 1);
    }

    #[test]
    fn unknown_mark_is_an_error_entry() {
        let src = "ctx q=2 N=1 rules=adjunction; check pair(P2, P2) == O;";
        let report = run(&parse(src).unwrap(), None);
        assert_eq!(report.count(StatusKind::Error), 1);
    }

    #[test]
    fn nested_quantifiers_unroll() {
        let src = "ctx q=2 N=2 rules=adjunction;\nforall n in 1..3: forall m in 0..1: check lambda_n(n)^(12) == lambda_n(n)^(12+m-m);";
        let report = run(&parse(src).unwrap(), None);
        assert!(report.is_success(), "{}", report.render_text());
        assert_eq!(report.count(StatusKind::Pass), 6);
        assert!(report.entries[0].label.contains("m=0") && report.entries[0].label.contains("n=1"));
    }

    #[test]
    fn division_by_zero_exponent_is_a_check_error() {
        let src = "ctx q=2 N=1 rules=adjunction; forall n in 0..1: check K^(1/(n)) == K;";
        let report = run(&parse(src).unwrap(), None);
        assert_eq!(report.count(StatusKind::Error), 1); // n = 0 divides by zero
        assert_eq!(report.count(StatusKind::Pass), 1); // n = 1 is fine
    }

    #[test]
    fn json_report_parses_back() {
        let src = "ctx q=2 N=1 rules=adjunction; check K == K;";
        let report = run(&parse(src).unwrap(), None);
        let json = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["entries"][0]["status"], "Pass");
    }
}
