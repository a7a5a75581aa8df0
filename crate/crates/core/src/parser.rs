//! Parser for the `.full` knowledge-base format.
//!
//! The format is line oriented. Declarations come in three phases:
//! sorts first, then signature symbols (`const`, `fn`, `pred`), then
//! `axiom` / `necessity` / `maxim` entries. Forward references are
//! errors. A declaration normally ends at the end of its line; lines
//! continue when a parenthesis is still open or when a line ends with
//! (or the next line begins with) a binary connective.
//!
//! Formula syntax: `not` binds tightest, then `and`, `or`, `->`, `<->`;
//! `->` and `<->` associate to the right; quantifier scope extends
//! maximally to the right; parentheses override. Comments run from `#`
//! to end of line.

use std::fmt;

use thiserror::Error;

use crate::kb::{ConstDecl, FnDecl, KbError, KnowledgeBase, NamedFormula, NamedMaxim, NecessitySchema, PredDecl};
use crate::lang::{DeonticOp, Formula, Maxim, SortName, Term};

/// A located parse or sort error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic { line, col, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Arrow,
    DoubleArrow,
    Equals,
    NotEquals,
    Subsort,
    Newline,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::DoubleArrow => write!(f, "`<->`"),
            Tok::Equals => write!(f, "`=`"),
            Tok::NotEquals => write!(f, "`!=`"),
            Tok::Subsort => write!(f, "`<:`"),
            Tok::Newline => write!(f, "end of line"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const RESERVED: [&str; 20] = [
    "sort", "const", "fn", "pred", "axiom", "necessity", "maxim", "refines", "forall", "exists",
    "not", "and", "or", "true", "false", "Does", "Wills", "Causes", "For", "Perm",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word) || word == "Imp" || word == "Obl"
}

fn lex(source: &str) -> Result<Vec<Spanned>, Diagnostic> {
    let mut out: Vec<Spanned> = Vec::new();
    let mut depth: usize = 0;
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = source.chars().peekable();

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Spanned { tok: $tok, line: $line, col: $col })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                chars.next();
                if depth == 0 {
                    push!(Tok::Newline, tl, tc);
                }
                line += 1;
                col = 1;
            }
            '\r' => {
                chars.next();
                col += 1;
            }
            ' ' | '\t' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                depth += 1;
                push!(Tok::LParen, tl, tc);
            }
            ')' => {
                chars.next();
                col += 1;
                depth = depth.saturating_sub(1);
                push!(Tok::RParen, tl, tc);
            }
            ',' => {
                chars.next();
                col += 1;
                push!(Tok::Comma, tl, tc);
            }
            ':' => {
                chars.next();
                col += 1;
                push!(Tok::Colon, tl, tc);
            }
            '.' => {
                chars.next();
                col += 1;
                push!(Tok::Dot, tl, tc);
            }
            '=' => {
                chars.next();
                col += 1;
                push!(Tok::Equals, tl, tc);
            }
            '!' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(Tok::NotEquals, tl, tc);
                } else {
                    return Err(Diagnostic::new(tl, tc, "expected `!=`"));
                }
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(Tok::Arrow, tl, tc);
                } else {
                    return Err(Diagnostic::new(tl, tc, "expected `->`"));
                }
            }
            '<' => {
                chars.next();
                col += 1;
                match chars.peek() {
                    Some(&'-') => {
                        chars.next();
                        col += 1;
                        if chars.peek() == Some(&'>') {
                            chars.next();
                            col += 1;
                            push!(Tok::DoubleArrow, tl, tc);
                        } else {
                            return Err(Diagnostic::new(tl, tc, "expected `<->`"));
                        }
                    }
                    Some(&':') => {
                        chars.next();
                        col += 1;
                        push!(Tok::Subsort, tl, tc);
                    }
                    _ => return Err(Diagnostic::new(tl, tc, "expected `<->` or `<:`")),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(ident), tl, tc);
            }
            other => {
                return Err(Diagnostic::new(tl, tc, format!("unexpected character `{other}`")));
            }
        }
    }
    push!(Tok::Newline, line, col);
    Ok(squash_newlines(out))
}

/// Drops newlines that sit inside an unfinished construct: after a
/// binary connective, opener or separator, or before a leading binary
/// connective on the next line. Collapses runs of newlines.
fn squash_newlines(tokens: Vec<Spanned>) -> Vec<Spanned> {
    fn continues_after(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Arrow
                | Tok::DoubleArrow
                | Tok::Comma
                | Tok::Colon
                | Tok::Dot
                | Tok::Equals
                | Tok::NotEquals
                | Tok::Subsort
                | Tok::LParen
        ) || matches!(tok, Tok::Ident(w) if ["and", "or", "not", "forall", "exists", "refines"].contains(&w.as_str()))
    }
    fn continues_before(tok: &Tok) -> bool {
        matches!(tok, Tok::Arrow | Tok::DoubleArrow)
            || matches!(tok, Tok::Ident(w) if ["and", "or"].contains(&w.as_str()))
    }
    let mut out: Vec<Spanned> = Vec::new();
    for (i, spanned) in tokens.iter().enumerate() {
        if spanned.tok == Tok::Newline {
            let prev = out.last().map(|s| &s.tok);
            let next = tokens[i + 1..].iter().find(|s| s.tok != Tok::Newline).map(|s| &s.tok);
            let drop = match (prev, next) {
                (None, _) => true,
                (Some(Tok::Newline), _) => true,
                (Some(p), _) if continues_after(p) => true,
                (_, Some(n)) if continues_before(n) => true,
                _ => false,
            };
            if drop {
                continue;
            }
        }
        out.push(spanned.clone());
    }
    out
}

const MAX_FORMULA_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Phase {
    Sorts,
    Symbols,
    Statements,
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    kb: KnowledgeBase,
    depth: usize,
}

/// Parses and sort-checks a whole knowledge base.
pub fn parse_kb(source: &str) -> Result<KnowledgeBase, Diagnostic> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0, kb: KnowledgeBase::new(), depth: 0 };
    parser.file()?;
    let mut kb = parser.kb;
    kb.finalize().map_err(|e| Diagnostic::new(1, 1, e.to_string()))?;
    Ok(kb)
}

/// Parses a single closed formula against an existing knowledge base.
pub fn parse_formula(source: &str, kb: &KnowledgeBase) -> Result<Formula, Diagnostic> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0, kb: kb.clone(), depth: 0 };
    let (line, col) = parser.here();
    let formula = parser.formula(&mut Vec::new())?;
    parser.skip_newlines();
    if !parser.at_end() {
        let (l, c) = parser.here();
        return Err(Diagnostic::new(l, c, "trailing input after formula"));
    }
    parser
        .kb
        .check_formula(&formula, &mut Vec::new())
        .map_err(|e| Diagnostic::new(line, col, e.to_string()))?;
    Ok(formula)
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        match self.tokens.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self
                .tokens
                .last()
                .map(|s| (s.line, s.col))
                .unwrap_or((1, 1)),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Diagnostic {
        let (l, c) = self.here();
        Diagnostic::new(l, c, message)
    }

    fn expect(&mut self, tok: &Tok) -> Result<Spanned, Diagnostic> {
        match self.peek() {
            Some(t) if t == tok => Ok(self.bump().expect("peeked")),
            Some(t) => Err(self.error_here(format!("expected {tok}, found {t}"))),
            None => Err(self.error_here(format!("expected {tok}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let s = self.bump().expect("peeked");
                match s.tok {
                    Tok::Ident(name) => {
                        if is_reserved(&name) {
                            Err(Diagnostic::new(
                                s.line,
                                s.col,
                                format!("`{name}` is a reserved word and cannot name a {what}"),
                            ))
                        } else {
                            Ok((name, s.line, s.col))
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Some(t) => Err(self.error_here(format!("expected a {what} name, found {t}"))),
            None => Err(self.error_here(format!("expected a {what} name, found end of input"))),
        }
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn end_decl(&mut self) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(Tok::Newline) => {
                self.pos += 1;
                Ok(())
            }
            None => Ok(()),
            Some(t) => Err(self.error_here(format!("expected end of line, found {t}"))),
        }
    }

    fn file(&mut self) -> Result<(), Diagnostic> {
        let mut phase = Phase::Sorts;
        loop {
            self.skip_newlines();
            if self.at_end() {
                return Ok(());
            }
            let (line, col) = self.here();
            let keyword = match self.peek() {
                Some(Tok::Ident(w)) => w.clone(),
                Some(t) => return Err(self.error_here(format!("expected a declaration, found {t}"))),
                None => return Ok(()),
            };
            let required = match keyword.as_str() {
                "sort" => Phase::Sorts,
                "const" | "fn" | "pred" => Phase::Symbols,
                "axiom" | "necessity" | "maxim" => Phase::Statements,
                other => {
                    return Err(Diagnostic::new(
                        line,
                        col,
                        format!("expected a declaration keyword, found `{other}`"),
                    ))
                }
            };
            if required < phase {
                return Err(Diagnostic::new(
                    line,
                    col,
                    format!("`{keyword}` declarations must come before {} declarations", match phase {
                        Phase::Sorts => "sort",
                        Phase::Symbols => "symbol",
                        Phase::Statements => "axiom, necessity and maxim",
                    }),
                ));
            }
            phase = required;
            self.pos += 1;
            match keyword.as_str() {
                "sort" => self.sort_decl(line, col)?,
                "const" => self.const_decl()?,
                "fn" => self.fn_decl()?,
                "pred" => self.pred_decl()?,
                "axiom" => self.axiom_decl()?,
                "necessity" => self.necessity_decl()?,
                "maxim" => self.maxim_decl()?,
                _ => unreachable!(),
            }
            self.end_decl()?;
        }
    }

    fn sort_name(&mut self) -> Result<(SortName, usize, usize), Diagnostic> {
        let (name, l, c) = self.expect_ident("sort")?;
        Ok((SortName::new(name), l, c))
    }

    fn sort_decl(&mut self, line: usize, col: usize) -> Result<(), Diagnostic> {
        let (sort, sl, sc) = self.sort_name()?;
        if matches!(self.peek(), Some(Tok::Subsort)) {
            self.pos += 1;
            let (parent, pl, pc) = self.sort_name()?;
            if !self.kb.sorts.contains(&parent) {
                return Err(Diagnostic::new(pl, pc, format!("unknown sort {parent}")));
            }
            self.kb
                .sorts
                .declare(sort, parent)
                .map_err(|e| Diagnostic::new(sl, sc, e.to_string()))?;
        } else if crate::kb::BASE_SORTS.contains(&sort.as_str()) {
            // Restating a base sort is allowed and changes nothing.
        } else {
            return Err(Diagnostic::new(
                line,
                col,
                format!("sort {sort} must name a parent: `sort {sort} <: Object`"),
            ));
        }
        Ok(())
    }

    fn declared_sort(&mut self) -> Result<SortName, Diagnostic> {
        let (sort, l, c) = self.sort_name()?;
        if !self.kb.sorts.contains(&sort) {
            return Err(Diagnostic::new(l, c, format!("unknown sort {sort}")));
        }
        Ok(sort)
    }

    fn check_fresh_symbol(&self, name: &str, line: usize, col: usize) -> Result<(), Diagnostic> {
        if self.kb.symbol_declared(name) {
            Err(Diagnostic::new(line, col, format!("{name} was declared twice")))
        } else {
            Ok(())
        }
    }

    fn const_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("constant")?;
        self.check_fresh_symbol(&name, l, c)?;
        self.expect(&Tok::Colon)?;
        let sort = self.declared_sort()?;
        self.kb.constants.push(ConstDecl { name, sort });
        Ok(())
    }

    fn sort_list(&mut self) -> Result<Vec<SortName>, Diagnostic> {
        let mut out = Vec::new();
        self.expect(&Tok::LParen)?;
        if matches!(self.peek(), Some(Tok::RParen)) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.declared_sort()?);
            match self.peek() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.error_here("expected `,` or `)` in sort list")),
            }
        }
    }

    fn fn_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("function")?;
        self.check_fresh_symbol(&name, l, c)?;
        let params = self.sort_list()?;
        self.expect(&Tok::Arrow)?;
        let result = self.declared_sort()?;
        let refines = if self.eat_keyword("refines") {
            let (target, tl, tc) = self.expect_ident("function")?;
            if self.kb.function(&target).is_none() {
                return Err(Diagnostic::new(
                    tl,
                    tc,
                    format!("refines target {target} is not a declared function"),
                ));
            }
            Some(target)
        } else {
            None
        };
        let decl = FnDecl { name, params, result, refines };
        self.kb.functions.push(decl);
        // Validate the refinement right away for a located error.
        if let Err(e @ (KbError::RefinesArity { .. }
        | KbError::RefinesResultSort { .. }
        | KbError::RefinesParamSort { .. })) = self.kb.validate()
        {
            return Err(Diagnostic::new(l, c, e.to_string()));
        }
        Ok(())
    }

    fn pred_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("predicate")?;
        self.check_fresh_symbol(&name, l, c)?;
        let params = self.sort_list()?;
        self.kb.predicates.push(PredDecl { name, params });
        Ok(())
    }

    fn checked_closed_formula(&mut self, what: &str, name: &str) -> Result<Formula, Diagnostic> {
        let (line, col) = self.here();
        let formula = self.formula(&mut Vec::new())?;
        if let Some(v) = formula.free_vars().first() {
            return Err(Diagnostic::new(
                line,
                col,
                format!("unbound variable {} in {what} {name}", v.name()),
            ));
        }
        self.kb
            .check_formula(&formula, &mut Vec::new())
            .map_err(|e| Diagnostic::new(line, col, format!("in {what} {name}: {e}")))?;
        Ok(formula)
    }

    fn axiom_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("axiom")?;
        if self.kb.axioms.iter().any(|a| a.name == name) {
            return Err(Diagnostic::new(l, c, format!("axiom {name} was declared twice")));
        }
        self.expect(&Tok::Colon)?;
        let formula = self.checked_closed_formula("axiom", &name)?;
        self.kb.axioms.push(NamedFormula { name, formula });
        Ok(())
    }

    fn necessity_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("necessity")?;
        if self.kb.necessities.iter().any(|n| n.name == name) {
            return Err(Diagnostic::new(l, c, format!("necessity {name} was declared twice")));
        }
        self.expect(&Tok::LParen)?;
        let (var_name, vl, vc) = self.expect_ident("variable")?;
        self.expect(&Tok::Colon)?;
        let sort = self.declared_sort()?;
        if sort != SortName::agent() {
            return Err(Diagnostic::new(vl, vc, "a necessity variable must have sort Agent"));
        }
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::Colon)?;
        let var = Term::var(var_name, sort);
        let (line, col) = self.here();
        let template = self.formula(&mut vec![var.clone()])?;
        self.kb
            .check_formula(&template, &mut vec![var.clone()])
            .map_err(|e| Diagnostic::new(line, col, format!("in necessity {name}: {e}")))?;
        let schema = NecessitySchema { name: name.clone(), var, template };
        let free = schema.template.free_vars();
        if free.len() != 1 || free[0].name() != schema.var.name() {
            return Err(Diagnostic::new(
                line,
                col,
                format!("necessity {name} must use its variable exactly as the one free variable"),
            ));
        }
        self.kb.necessities.push(schema);
        Ok(())
    }

    fn maxim_decl(&mut self) -> Result<(), Diagnostic> {
        let (name, l, c) = self.expect_ident("maxim")?;
        if self.kb.maxims.iter().any(|m| m.name == name) {
            return Err(Diagnostic::new(l, c, format!("maxim {name} was declared twice")));
        }
        self.expect(&Tok::Colon)?;
        let (line, col) = self.here();
        let formula = self.checked_closed_formula("maxim", &name)?;
        let maxim = match formula {
            Formula::For { behavior, purpose } => Maxim::new(*behavior, *purpose)
                .map_err(|e| Diagnostic::new(line, col, format!("in maxim {name}: {e}")))?,
            _ => {
                return Err(Diagnostic::new(
                    line,
                    col,
                    format!("maxim {name} must be a For(behavior, purpose) formula"),
                ))
            }
        };
        self.kb.maxims.push(NamedMaxim { name, maxim });
        Ok(())
    }

    // ----- formulas -----

    fn formula(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        self.depth += 1;
        if self.depth > MAX_FORMULA_DEPTH {
            self.depth -= 1;
            return Err(self.error_here("formula is too deeply nested"));
        }
        let result = self.iff(bound);
        self.depth -= 1;
        result
    }

    fn iff(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let lhs = self.implies(bound)?;
        if matches!(self.peek(), Some(Tok::DoubleArrow)) {
            self.pos += 1;
            let rhs = self.iff(bound)?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn implies(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let lhs = self.or(bound)?;
        if matches!(self.peek(), Some(Tok::Arrow)) {
            self.pos += 1;
            let rhs = self.implies(bound)?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let lhs = self.and(bound)?;
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == "or") {
            self.pos += 1;
            let rhs = self.or(bound)?;
            Ok(Formula::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn and(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let lhs = self.unary(bound)?;
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == "and") {
            self.pos += 1;
            let rhs = self.and(bound)?;
            Ok(Formula::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        self.depth += 1;
        if self.depth > MAX_FORMULA_DEPTH {
            self.depth -= 1;
            return Err(self.error_here("formula is too deeply nested"));
        }
        let result = (|| {
            if self.eat_keyword("not") {
                let inner = self.unary(bound)?;
                return Ok(Formula::not(inner));
            }
            if matches!(self.peek(), Some(Tok::Ident(w)) if w == "forall" || w == "exists") {
                return self.quantified(bound);
            }
            self.primary(bound)
        })();
        self.depth -= 1;
        result
    }

    fn quantified(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let universal = match self.bump() {
            Some(Spanned { tok: Tok::Ident(w), .. }) => w == "forall",
            _ => unreachable!("caller checked"),
        };
        // Binder list: names grouped by sort, e.g. `a1, a2: Agent, j1: Job`.
        let mut binders: Vec<Term> = Vec::new();
        loop {
            let mut names = vec![self.expect_ident("variable")?];
            while matches!(self.peek(), Some(Tok::Comma)) {
                self.pos += 1;
                names.push(self.expect_ident("variable")?);
            }
            self.expect(&Tok::Colon)?;
            let sort = self.declared_sort()?;
            for (name, l, c) in names {
                if bound.iter().any(|b| b.name() == name) || binders.iter().any(|b| b.name() == name) {
                    return Err(Diagnostic::new(l, c, format!("variable {name} shadows an enclosing binder")));
                }
                binders.push(Term::var(name, sort.clone()));
            }
            match self.peek() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::Dot) => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error_here("expected `,` or `.` after quantifier binders")),
            }
        }
        let before = bound.len();
        bound.extend(binders.iter().cloned());
        let body = self.formula(bound);
        bound.truncate(before);
        let body = body?;
        let mut out = body;
        for v in binders.into_iter().rev() {
            out = if universal { Formula::forall(v, out) } else { Formula::exists(v, out) };
        }
        Ok(out)
    }

    fn primary(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula(bound)?;
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(w)) => match w.as_str() {
                "true" => {
                    self.pos += 1;
                    Ok(Formula::True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(Formula::False)
                }
                "Does" => {
                    self.pos += 1;
                    self.expect(&Tok::LParen)?;
                    let agent = self.term(bound)?;
                    self.expect(&Tok::Comma)?;
                    let action = self.term(bound)?;
                    self.expect(&Tok::RParen)?;
                    Ok(Formula::does(agent, action))
                }
                "Wills" => {
                    self.pos += 1;
                    self.expect(&Tok::LParen)?;
                    let agent = self.term(bound)?;
                    self.expect(&Tok::Comma)?;
                    let body = self.formula(bound)?;
                    self.expect(&Tok::RParen)?;
                    Ok(Formula::wills(agent, body))
                }
                "Causes" => {
                    self.pos += 1;
                    self.expect(&Tok::LParen)?;
                    let antecedent = self.formula(bound)?;
                    self.expect(&Tok::Comma)?;
                    let consequent = self.formula(bound)?;
                    self.expect(&Tok::RParen)?;
                    Ok(Formula::causes(antecedent, consequent))
                }
                "For" => {
                    self.pos += 1;
                    self.expect(&Tok::LParen)?;
                    let behavior = self.formula(bound)?;
                    self.expect(&Tok::Comma)?;
                    let purpose = self.formula(bound)?;
                    self.expect(&Tok::RParen)?;
                    Ok(Formula::for_maxim(behavior, purpose))
                }
                "Perm" | "Imp" | "Obl" => {
                    let op = match w.as_str() {
                        "Perm" => DeonticOp::Perm,
                        "Imp" => DeonticOp::Imp,
                        _ => DeonticOp::Obl,
                    };
                    self.pos += 1;
                    self.expect(&Tok::LParen)?;
                    let maxim = self.formula(bound)?;
                    self.expect(&Tok::RParen)?;
                    Ok(Formula::deontic(op, maxim))
                }
                _ => self.atom_or_equality(bound),
            },
            Some(t) => Err(self.error_here(format!("expected a formula, found {t}"))),
            None => Err(self.error_here("expected a formula, found end of input")),
        }
    }

    /// An identifier here starts either a predicate atom or a term
    /// followed by `=` / `!=`.
    fn atom_or_equality(&mut self, bound: &mut Vec<Term>) -> Result<Formula, Diagnostic> {
        let (name, line, col) = self.expect_ident("symbol")?;
        let args = if matches!(self.peek(), Some(Tok::LParen)) {
            self.pos += 1;
            let mut args = Vec::new();
            if matches!(self.peek(), Some(Tok::RParen)) {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.term(bound)?);
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.pos += 1;
                        }
                        Some(Tok::RParen) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error_here("expected `,` or `)` in argument list")),
                    }
                }
            }
            Some(args)
        } else {
            None
        };

        match self.peek() {
            Some(Tok::Equals) | Some(Tok::NotEquals) => {
                let negated = matches!(self.peek(), Some(Tok::NotEquals));
                self.pos += 1;
                let lhs = self.resolve_term(name, args, line, col, bound)?;
                let rhs = self.term(bound)?;
                let eq = Formula::Equals(lhs, rhs);
                Ok(if negated { Formula::not(eq) } else { eq })
            }
            _ => {
                let args = args.unwrap_or_default();
                match self.kb.predicate(&name) {
                    Some(_) => Ok(Formula::Atom { pred: name, args }),
                    None => Err(Diagnostic::new(
                        line,
                        col,
                        format!("undeclared predicate {name}"),
                    )),
                }
            }
        }
    }

    fn term(&mut self, bound: &mut Vec<Term>) -> Result<Term, Diagnostic> {
        let (name, line, col) = self.expect_ident("term")?;
        let args = if matches!(self.peek(), Some(Tok::LParen)) {
            self.pos += 1;
            let mut args = Vec::new();
            if matches!(self.peek(), Some(Tok::RParen)) {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.term(bound)?);
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.pos += 1;
                        }
                        Some(Tok::RParen) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error_here("expected `,` or `)` in argument list")),
                    }
                }
            }
            Some(args)
        } else {
            None
        };
        self.resolve_term(name, args, line, col, bound)
    }

    /// Resolution order: bound variable, declared constant, declared
    /// function (zero-ary functions may be written without parentheses).
    fn resolve_term(
        &self,
        name: String,
        args: Option<Vec<Term>>,
        line: usize,
        col: usize,
        bound: &[Term],
    ) -> Result<Term, Diagnostic> {
        match args {
            None => {
                if let Some(v) = bound.iter().rev().find(|b| b.name() == name) {
                    return Ok(v.clone());
                }
                if let Some(c) = self.kb.constant(&name) {
                    return Ok(Term::constant(name, c.sort.clone()));
                }
                if let Some(f) = self.kb.function(&name) {
                    if f.params.is_empty() {
                        return Ok(Term::app(name, vec![], f.result.clone()));
                    }
                }
                Err(Diagnostic::new(
                    line,
                    col,
                    format!("unbound variable or undeclared constant {name}"),
                ))
            }
            Some(args) => match self.kb.function(&name) {
                Some(f) => {
                    if f.params.len() != args.len() {
                        return Err(Diagnostic::new(
                            line,
                            col,
                            format!(
                                "{} expects {} arguments but got {}",
                                name,
                                f.params.len(),
                                args.len()
                            ),
                        ));
                    }
                    Ok(Term::app(name, args, f.result.clone()))
                }
                None => Err(Diagnostic::new(line, col, format!("undeclared function {name}"))),
            },
        }
    }
}
