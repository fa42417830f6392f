//! Surface syntax for `.proleg` rule files and `.facts` case files.
//!
//! ```text
//! #source "GDPR Art. 6(1)(a)"
//! basis_consent(P) <= consent_given(P).
//! #source "GDPR Art. 7(3)"
//! exception(basis_consent(P), consent_withdrawn(P)).
//! ```
//!
//! `#source "citation" ["note"]` and `#id name` annotate the statement that
//! follows them. Rules without `#id` are numbered `r1, r2, ...` in textual
//! order. `%` starts a line comment.

use std::fmt;

use crate::ast::{Atom, ExceptionDecl, FactBase, Pos, Program, Rule, SourceRef, Term};
use crate::lexer::{tokenize, Tok, Token};

/// A syntax error with its 1-based position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The source line containing the error.
    pub snippet: String,
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }
}

/// Renders a list of errors one per line, as `line:column: message`.
pub struct ErrorList<'a>(pub &'a [ParseError]);

impl fmt::Display for ErrorList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{err}")?;
            if !err.snippet.is_empty() {
                write!(f, "\n    | {}", err.snippet)?;
            }
        }
        Ok(())
    }
}

/// Cursor over a token stream, collecting errors as it goes.
pub(crate) struct Cursor<'s> {
    tokens: Vec<Token>,
    idx: usize,
    lines: Vec<&'s str>,
    pub errors: Vec<ParseError>,
    anon: usize,
}

impl<'s> Cursor<'s> {
    pub fn new(source: &'s str) -> Self {
        Cursor {
            tokens: tokenize(source),
            idx: 0,
            lines: source.lines().collect(),
            errors: Vec::new(),
            anon: 0,
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.idx].tok
    }

    pub fn peek_token(&self) -> &Token {
        &self.tokens[self.idx]
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn advance(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.idx += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn error_at(&mut self, pos: Pos, message: impl Into<String>) {
        let snippet = self
            .lines
            .get(pos.line.saturating_sub(1))
            .map(|l| l.trim().to_string())
            .unwrap_or_default();
        self.errors.push(ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
            snippet,
        });
    }

    /// Reports that `what` was expected at the current token. When the
    /// current token sits on a later line than the previous one, the error
    /// points just past the previous token so it stays inside the unfinished
    /// statement, unless that token ended the previous statement.
    pub fn expected(&mut self, what: &str) {
        let current = self.peek_token().clone();
        let pos = match self.idx.checked_sub(1).map(|i| &self.tokens[i]) {
            Some(prev) if prev.end.line < current.start.line && prev.tok != Tok::Dot => prev.end,
            _ => current.start,
        };
        let found = match &current.tok {
            Tok::Error(msg) => msg.clone(),
            other => format!("found {}", other.describe()),
        };
        self.error_at(pos, format!("expected {what}, {found}"));
    }

    /// Skips to just past the next `.`, or to the next annotation.
    pub fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof | Tok::Annotation(_) => return,
                Tok::Dot => {
                    self.advance();
                    return;
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    pub fn parse_term(&mut self) -> Option<Term> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                if self.peek() == &Tok::LParen {
                    let args = self.parse_args()?;
                    Some(Term::Compound(name, args))
                } else {
                    Some(Term::Constant(name))
                }
            }
            Tok::Var(name) => {
                self.advance();
                if name == "_" {
                    self.anon += 1;
                    Some(Term::Variable(format!("_G{}", self.anon)))
                } else {
                    Some(Term::Variable(name))
                }
            }
            Tok::Int(n) => {
                self.advance();
                Some(Term::Integer(n))
            }
            Tok::Str(s) => {
                self.advance();
                Some(Term::Text(s))
            }
            _ => {
                self.expected("a term");
                None
            }
        }
    }

    fn parse_args(&mut self) -> Option<Vec<Term>> {
        self.advance(); // (
        let mut args = vec![self.parse_term()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                    args.push(self.parse_term()?);
                }
                Tok::RParen => {
                    self.advance();
                    return Some(args);
                }
                _ => {
                    self.expected("`,` or `)`");
                    return None;
                }
            }
        }
    }

    pub fn parse_atom(&mut self) -> Option<Atom> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                let args = if self.peek() == &Tok::LParen { self.parse_args()? } else { Vec::new() };
                Some(Atom::new(name, args))
            }
            _ => {
                self.expected("an atom");
                None
            }
        }
    }
}

#[derive(Default)]
struct Pending {
    source: Option<(SourceRef, Pos)>,
    id: Option<(String, Pos)>,
}

/// Parses a `.proleg` program. All syntax errors are collected.
pub fn parse_program(source: &str) -> Result<Program, Vec<ParseError>> {
    let mut cur = Cursor::new(source);
    let mut program = Program::new();
    let mut explicit_ids: Vec<Option<String>> = Vec::new();
    let mut pending = Pending::default();

    loop {
        let token = cur.peek_token().clone();
        match token.tok {
            Tok::Eof => break,
            Tok::Annotation(ref name) => {
                cur.advance();
                parse_annotation(&mut cur, name, token.start, &mut pending);
            }
            _ => {
                let taken = std::mem::take(&mut pending);
                match parse_statement(&mut cur) {
                    Ok(Statement::Rule(head, body)) => {
                        let mut rule = Rule::new(String::new(), head, body);
                        rule.source = taken.source.map(|(s, _)| s);
                        rule.pos = Some(token.start);
                        explicit_ids.push(taken.id.map(|(id, _)| id));
                        program.rules.push(rule);
                    }
                    Ok(Statement::Exception(head, exception)) => {
                        if let Some((_, pos)) = taken.id {
                            cur.error_at(pos, "`#id` applies only to rules");
                        }
                        let mut decl = ExceptionDecl::new(head, exception);
                        decl.source = taken.source.map(|(s, _)| s);
                        decl.pos = Some(token.start);
                        program.exceptions.push(decl);
                    }
                    Err(Rejected(true)) => cur.recover(),
                    Err(Rejected(false)) => {}
                }
            }
        }
    }
    let dangling = pending.source.map(|(_, p)| p).or(pending.id.map(|(_, p)| p));
    if let Some(pos) = dangling {
        cur.error_at(pos, "annotation is not followed by a statement");
    }

    // ids: explicit ones win, the rest are positional
    for (i, (rule, explicit)) in program.rules.iter_mut().zip(explicit_ids).enumerate() {
        rule.id = explicit.unwrap_or_else(|| format!("r{}", i + 1));
    }
    for i in 0..program.rules.len() {
        if program.rules[..i].iter().any(|r| r.id == program.rules[i].id) {
            let pos = program.rules[i].pos.unwrap_or(Pos { line: 1, column: 1 });
            let id = program.rules[i].id.clone();
            cur.error_at(pos, format!("duplicate rule id `{id}`"));
        }
    }

    if cur.errors.is_empty() {
        Ok(program)
    } else {
        cur.errors.sort_by_key(ParseError::pos);
        Err(cur.errors)
    }
}

fn parse_annotation(cur: &mut Cursor<'_>, name: &str, at: Pos, pending: &mut Pending) {
    match name {
        "source" => {
            let Tok::Str(citation) = cur.peek().clone() else {
                cur.expected("a quoted citation after `#source`");
                return;
            };
            cur.advance();
            let note = match cur.peek().clone() {
                Tok::Str(note) => {
                    cur.advance();
                    Some(note)
                }
                _ => None,
            };
            if citation.is_empty() {
                cur.error_at(at, "`#source` citation must not be empty");
            } else if pending.source.is_some() {
                cur.error_at(at, "duplicate `#source` annotation");
            } else {
                pending.source = Some((SourceRef { citation, note }, at));
            }
        }
        "id" => {
            let Tok::Ident(id) = cur.peek().clone() else {
                cur.expected("an identifier after `#id`");
                return;
            };
            cur.advance();
            if id == "fact" {
                cur.error_at(at, "`fact` is reserved and cannot be a rule id");
            } else if pending.id.is_some() {
                cur.error_at(at, "duplicate `#id` annotation");
            } else {
                pending.id = Some((id, at));
            }
        }
        other => cur.error_at(at, format!("unknown annotation `#{other}`")),
    }
}

enum Statement {
    Rule(Atom, Vec<Atom>),
    Exception(Atom, Atom),
}

/// Why a statement was rejected: `true` when the cursor still sits inside
/// the statement and must skip past its terminator.
struct Rejected(bool);

fn parse_statement(cur: &mut Cursor<'_>) -> Result<Statement, Rejected> {
    let start = cur.peek_token().start;
    let head = cur.parse_atom().ok_or(Rejected(true))?;
    let is_exception = head.predicate == "exception";
    match cur.peek() {
        Tok::Dot if is_exception => {
            cur.advance();
            if head.args.len() != 2 {
                cur.error_at(start, "`exception` takes exactly two atoms");
                return Err(Rejected(false));
            }
            let mut atoms = Vec::with_capacity(2);
            for arg in &head.args {
                match Atom::from_term(arg) {
                    Some(a) => atoms.push(a),
                    None => {
                        cur.error_at(start, format!("`{arg}` is not an atom"));
                        return Err(Rejected(false));
                    }
                }
            }
            let exception = atoms.pop().ok_or(Rejected(false))?;
            let concluded = atoms.pop().ok_or(Rejected(false))?;
            Ok(Statement::Exception(concluded, exception))
        }
        Tok::Arrow if is_exception => {
            cur.error_at(start, "`exception` is reserved and cannot head a rule");
            Err(Rejected(true))
        }
        Tok::Arrow => {
            cur.advance();
            let mut body = Vec::new();
            if cur.peek() != &Tok::Dot {
                body.push(cur.parse_atom().ok_or(Rejected(true))?);
                while cur.eat(&Tok::Comma) {
                    body.push(cur.parse_atom().ok_or(Rejected(true))?);
                }
            }
            if cur.eat(&Tok::Dot) {
                Ok(Statement::Rule(head, body))
            } else {
                cur.expected("`,` or `.`");
                Err(Rejected(true))
            }
        }
        Tok::Dot => {
            cur.expected("`<=` (write `p <=.` for an unconditional rule; case facts go in a .facts file)");
            Err(Rejected(true))
        }
        _ => {
            cur.expected("`<=`");
            Err(Rejected(true))
        }
    }
}

/// Parses a `.facts` file: ground atoms, each followed by `.`.
pub fn parse_facts(source: &str) -> Result<FactBase, Vec<ParseError>> {
    let mut cur = Cursor::new(source);
    let mut facts = FactBase::new();
    while !cur.at_eof() {
        let start = cur.peek_token().start;
        if let Tok::Annotation(name) = cur.peek().clone() {
            cur.error_at(start, format!("annotation `#{name}` is not allowed in facts"));
            cur.advance();
            continue;
        }
        let Some(atom) = cur.parse_atom() else {
            cur.recover();
            continue;
        };
        if !cur.eat(&Tok::Dot) {
            cur.expected("`.`");
            cur.recover();
            continue;
        }
        if !atom.is_ground() {
            cur.error_at(start, format!("facts must be ground: `{atom}`"));
            continue;
        }
        facts.insert(atom);
    }
    if cur.errors.is_empty() {
        Ok(facts)
    } else {
        Err(cur.errors)
    }
}

/// Parses a single atom, e.g. a query. A trailing `.` is allowed.
pub fn parse_atom(source: &str) -> Result<Atom, Vec<ParseError>> {
    let mut cur = Cursor::new(source);
    let atom = cur.parse_atom();
    if atom.is_some() {
        cur.eat(&Tok::Dot);
        if !cur.at_eof() {
            cur.expected("end of input");
        }
    }
    match atom {
        Some(a) if cur.errors.is_empty() => Ok(a),
        _ => Err(cur.errors),
    }
}

/// Canonical text: one statement per line, annotations first, rules before
/// exception declarations.
pub fn serialize(program: &Program) -> String {
    let mut out = String::new();
    for (i, rule) in program.rules.iter().enumerate() {
        write_source(&mut out, rule.source.as_ref());
        if rule.id != format!("r{}", i + 1) {
            out.push_str(&format!("#id {}\n", rule.id));
        }
        out.push_str(&format!("{} <=", rule.head));
        for (j, b) in rule.body.iter().enumerate() {
            out.push_str(if j == 0 { " " } else { ", " });
            out.push_str(&b.to_string());
        }
        out.push_str(".\n");
    }
    for exc in &program.exceptions {
        write_source(&mut out, exc.source.as_ref());
        out.push_str(&format!("exception({}, {}).\n", exc.head, exc.exception));
    }
    out
}

fn write_source(out: &mut String, source: Option<&SourceRef>) {
    if let Some(src) = source {
        out.push_str("#source ");
        out.push_str(&crate::ast::quote(&src.citation));
        if let Some(note) = &src.note {
            out.push(' ');
            out.push_str(&crate::ast::quote(note));
        }
        out.push('\n');
    }
}

/// Canonical text of a fact base, one fact per line.
pub fn serialize_facts(facts: &FactBase) -> String {
    facts.iter().map(|a| format!("{a}.\n")).collect()
}
