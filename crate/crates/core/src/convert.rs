//! Conversion from a restricted Prolog dialect into PROLEG.
//!
//! Accepted input is Horn clauses whose bodies may contain `\+ g`
//! (negation as failure) at the top level. Each negated literal becomes an
//! exception declared against the clause's conclusion. When clauses for one
//! predicate disagree on their negations, each clause is routed through its
//! own auxiliary head `h__via_i` so an exception written for one clause
//! cannot defeat a derivation made by another.

use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{Atom, PredKey, Program};
use crate::engine::{stratify, EngineError};
use crate::lexer::Tok;
use crate::parser::{Cursor, ErrorList, ParseError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrologClause {
    pub head: Atom,
    pub positive_body: Vec<Atom>,
    pub negated_body: Vec<Atom>,
}

impl PrologClause {
    pub fn fact(head: Atom) -> Self {
        PrologClause { head, positive_body: Vec::new(), negated_body: Vec::new() }
    }
}

impl fmt::Display for PrologClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let body: Vec<String> = self
            .positive_body
            .iter()
            .map(ToString::to_string)
            .chain(self.negated_body.iter().map(|n| format!("\\+ {n}")))
            .collect();
        if !body.is_empty() {
            write!(f, " :- {}", body.join(", "))?;
        }
        f.write_str(".")
    }
}

/// Clauses read from a Prolog source, plus notes about skipped directives
/// and queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrologSource {
    pub clauses: Vec<PrologClause>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConvertReport {
    pub converted_rules: usize,
    pub generated_exceptions: usize,
    pub synthesized_predicates: Vec<PredKey>,
    pub warnings: Vec<String>,
}

impl ConvertReport {
    pub fn is_synthesized(&self, key: &PredKey) -> bool {
        self.synthesized_predicates.contains(key)
    }
}

impl fmt::Display for ConvertReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "converted_rules: {}", self.converted_rules)?;
        writeln!(f, "generated_exceptions: {}", self.generated_exceptions)?;
        let synth: Vec<String> = self.synthesized_predicates.iter().map(ToString::to_string).collect();
        writeln!(f, "synthesized_predicates: [{}]", synth.join(", "))?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("{}", ErrorList(.0))]
    Parse(Vec<ParseError>),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

const OUTSIDE_SUBSET: &str = "is outside supported subset";

/// Reads clauses `h :- b1, ..., bn.` and facts `h.`. Directives (`:- ...`)
/// and queries (`?- ...`) are skipped with a warning.
pub fn parse_prolog_subset(source: &str) -> Result<PrologSource, Vec<ParseError>> {
    let mut cur = Cursor::new(source);
    let mut out = PrologSource::default();
    while !cur.at_eof() {
        let token = cur.peek_token().clone();
        match &token.tok {
            Tok::Neck | Tok::Query => {
                let kind = if token.tok == Tok::Neck { "directive" } else { "query" };
                out.warnings.push(format!("line {}: skipped {kind}", token.start.line));
                cur.advance();
                cur.recover();
                continue;
            }
            Tok::Annotation(name) => {
                cur.error_at(token.start, format!("annotation `#{name}` is not Prolog"));
                cur.advance();
                continue;
            }
            _ => {}
        }
        match parse_clause(&mut cur) {
            Some(clause) => out.clauses.push(clause),
            None => cur.recover(),
        }
    }
    if cur.errors.is_empty() {
        Ok(out)
    } else {
        Err(cur.errors)
    }
}

fn parse_clause(cur: &mut Cursor<'_>) -> Option<PrologClause> {
    let start = cur.peek_token().start;
    let head = cur.parse_atom()?;
    if head.predicate == "exception" {
        cur.error_at(start, "`exception` is reserved in PROLEG and cannot head a clause");
        return None;
    }
    let mut clause = PrologClause::fact(head);
    match cur.peek() {
        Tok::Dot => {
            cur.advance();
            return Some(clause);
        }
        Tok::Neck => {
            cur.advance();
        }
        _ => {
            cur.expected("`:-` or `.`");
            return None;
        }
    }
    loop {
        if !parse_literal(cur, &mut clause) {
            report_unsupported_rest(cur);
            return None;
        }
        match cur.peek() {
            Tok::Comma => {
                cur.advance();
            }
            Tok::Dot => {
                cur.advance();
                return Some(clause);
            }
            Tok::Semi | Tok::Cut => {
                report_unsupported_rest(cur);
                return None;
            }
            _ => {
                cur.expected("`,` or `.`");
                return None;
            }
        }
    }
}

fn unsupported(cur: &mut Cursor<'_>) -> bool {
    let token = cur.peek_token().clone();
    let what = match token.tok {
        Tok::Semi => "disjunction `;`",
        Tok::Cut => "cut `!`",
        _ => return false,
    };
    cur.error_at(token.start, format!("{what} {OUTSIDE_SUBSET}"));
    true
}

/// Reports every `;` and `!` up to the end of the clause, so one pass lists
/// all offending constructs.
fn report_unsupported_rest(cur: &mut Cursor<'_>) {
    loop {
        match cur.peek() {
            Tok::Eof | Tok::Dot | Tok::Annotation(_) => return,
            Tok::Semi | Tok::Cut => {
                unsupported(cur);
                cur.advance();
            }
            _ => {
                cur.advance();
            }
        }
    }
}

fn parse_literal(cur: &mut Cursor<'_>, clause: &mut PrologClause) -> bool {
    if unsupported(cur) {
        cur.advance();
        return false;
    }
    if cur.peek() != &Tok::Not {
        return match cur.parse_atom() {
            Some(atom) => {
                clause.positive_body.push(atom);
                true
            }
            None => false,
        };
    }
    let neg_pos = cur.advance().start;
    let parenthesized = cur.eat(&Tok::LParen);
    if cur.peek() == &Tok::Not {
        cur.error_at(neg_pos, "nested negation `\\+ \\+` is outside supported subset");
        return false;
    }
    if unsupported(cur) {
        cur.advance();
        return false;
    }
    let Some(atom) = cur.parse_atom() else {
        return false;
    };
    if parenthesized {
        if unsupported(cur) {
            cur.advance();
            return false;
        }
        if !cur.eat(&Tok::RParen) {
            cur.expected("`)`");
            return false;
        }
    }
    clause.negated_body.push(atom);
    true
}

fn canonical_negations(clause: &PrologClause) -> BTreeSet<Atom> {
    // rename relative to the head so clauses compare by how negations
    // depend on the conclusion's arguments
    let mut order = clause.head.vars();
    clause.positive_body.iter().for_each(|a| a.collect_vars(&mut order));
    clause.negated_body.iter().for_each(|a| a.collect_vars(&mut order));
    let mut rename = |v: &str| format!("_{}", order.iter().position(|o| o == v).unwrap_or(0));
    clause.negated_body.iter().map(|n| n.rename(&mut rename)).collect()
}

/// Variables of negated literals that the head does not bind, in order.
fn extra_vars(clause: &PrologClause) -> Vec<String> {
    let head_vars = clause.head.vars();
    let mut extras = Vec::new();
    clause.negated_body.iter().for_each(|n| n.collect_vars(&mut extras));
    extras.retain(|v| !head_vars.contains(v));
    extras
}

/// Converts clauses into a PROLEG program.
pub fn to_proleg(clauses: &[PrologClause]) -> Result<(Program, ConvertReport), EngineError> {
    // dependency structure equals the source's; reject cyclic negation
    let mut naive = Program::new();
    for c in clauses {
        naive.push_rule(c.head.clone(), c.positive_body.clone());
        for n in &c.negated_body {
            naive.push_exception(c.head.clone(), n.clone());
        }
    }
    stratify(&naive)?;

    let mut taken: BTreeSet<String> = naive.predicates().into_iter().map(|k| k.name).collect();
    let mut report = ConvertReport::default();
    let mut program = Program::new();

    let mut split_keys: BTreeSet<PredKey> = BTreeSet::new();
    for key in clauses.iter().map(|c| c.head.key()).collect::<BTreeSet<_>>() {
        let group: Vec<&PrologClause> = clauses.iter().filter(|c| c.head.key() == key).collect();
        let first = canonical_negations(group[0]);
        let differing = group.iter().any(|c| canonical_negations(c) != first);
        let unbound = group.iter().any(|c| !extra_vars(c).is_empty());
        if differing || unbound {
            split_keys.insert(key);
        }
    }

    let mut clause_no: std::collections::HashMap<PredKey, usize> = std::collections::HashMap::new();
    for clause in clauses {
        let key = clause.head.key();
        let mut positive_vars = clause.head.vars();
        clause.positive_body.iter().for_each(|a| a.collect_vars(&mut positive_vars));
        for n in &clause.negated_body {
            let floundering: Vec<String> =
                n.vars().into_iter().filter(|v| !positive_vars.contains(v)).collect();
            if !floundering.is_empty() {
                report.warnings.push(format!(
                    "negated `{n}` in a clause for {key} has variables bound nowhere else ({}); read existentially",
                    floundering.join(", ")
                ));
            }
        }

        if !split_keys.contains(&key) {
            program.push_rule(clause.head.clone(), clause.positive_body.clone());
            for n in &clause.negated_body {
                let duplicate = program
                    .exceptions
                    .iter()
                    .any(|e| pair_is_variant(&e.head, &e.exception, &clause.head, n));
                if !duplicate {
                    program.push_exception(clause.head.clone(), n.clone());
                }
            }
            continue;
        }

        let i = clause_no.entry(key.clone()).or_insert(0);
        *i += 1;
        let mut name = format!("{}__via_{}", clause.head.predicate, i);
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        let mut args = clause.head.args.clone();
        args.extend(extra_vars(clause).into_iter().map(crate::ast::Term::Variable));
        let aux = Atom::new(name, args);
        report.synthesized_predicates.push(aux.key());
        program.push_rule(clause.head.clone(), vec![aux.clone()]);
        program.push_rule(aux.clone(), clause.positive_body.clone());
        let mut seen: Vec<&Atom> = Vec::new();
        for n in &clause.negated_body {
            if !seen.contains(&n) {
                seen.push(n);
                program.push_exception(aux.clone(), n.clone());
            }
        }
    }

    report.converted_rules = program.rules.len();
    report.generated_exceptions = program.exceptions.len();
    Ok((program, report))
}

fn pair_is_variant(h1: &Atom, e1: &Atom, h2: &Atom, e2: &Atom) -> bool {
    let pair = |h: &Atom, e: &Atom| Atom::new("pair", vec![h.to_term(), e.to_term()]);
    pair(h1, e1).is_variant_of(&pair(h2, e2))
}

/// Parses Prolog text and converts it. Parse warnings are carried into the
/// report.
pub fn convert_source(source: &str) -> Result<(Program, ConvertReport), ConvertError> {
    let parsed = parse_prolog_subset(source).map_err(ConvertError::Parse)?;
    let (program, mut report) = to_proleg(&parsed.clauses)?;
    let mut warnings = parsed.warnings;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok((program, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::FactBase;
    use crate::engine::{solve, EngineConfig};

    fn clauses(src: &str) -> Vec<PrologClause> {
        parse_prolog_subset(src).unwrap().clauses
    }

    /// Stratified negation-as-failure over ground propositional clauses,
    /// written directly against the clause list.
    fn naf_model(clauses: &[PrologClause], facts: &[&str]) -> BTreeSet<String> {
        let mut holds: BTreeSet<String> = facts.iter().map(|f| f.to_string()).collect();
        // negated atoms are undefined by a higher layer; iterate layers by
        // repeatedly closing under clauses whose negations are settled
        let mut settled: BTreeSet<String> = BTreeSet::new();
        let heads: BTreeSet<String> = clauses.iter().map(|c| c.head.predicate.clone()).collect();
        loop {
            let ready: Vec<&PrologClause> = clauses
                .iter()
                .filter(|c| c.negated_body.iter().all(|n| settled.contains(&n.predicate) || !heads.contains(&n.predicate)))
                .collect();
            let mut changed = true;
            while changed {
                changed = false;
                for c in &ready {
                    let pos = c.positive_body.iter().all(|b| holds.contains(&b.predicate));
                    let neg = c.negated_body.iter().all(|n| !holds.contains(&n.predicate));
                    if pos && neg && holds.insert(c.head.predicate.clone()) {
                        changed = true;
                    }
                }
            }
            let before = settled.len();
            for h in &heads {
                let all_ready = clauses.iter().filter(|c| &c.head.predicate == h).all(|c| ready.contains(&c));
                let deps_settled = clauses.iter().filter(|c| &c.head.predicate == h).all(|c| {
                    c.positive_body.iter().all(|b| settled.contains(&b.predicate) || !heads.contains(&b.predicate) || &b.predicate == h)
                });
                if all_ready && deps_settled {
                    settled.insert(h.clone());
                }
            }
            if settled.len() == before {
                return holds;
            }
        }
    }

    fn check_equivalence(src: &str, universe: &[&str]) {
        let cs = clauses(src);
        let (program, report) = to_proleg(&cs).unwrap();
        let vocab: BTreeSet<String> = cs
            .iter()
            .flat_map(|c| std::iter::once(&c.head).chain(&c.positive_body).chain(&c.negated_body))
            .map(|a| a.predicate.clone())
            .collect();
        for mask in 0u32..(1 << universe.len()) {
            let chosen: Vec<&str> = universe.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, u)| *u).collect();
            let expected = naf_model(&cs, &chosen);
            let facts: FactBase = chosen.iter().map(|f| Atom::prop(*f)).collect();
            for name in &vocab {
                assert!(!report.is_synthesized(&PredKey::new(name.clone(), 0)));
                let (outcome, _) = solve(&program, &facts, &Atom::prop(name.clone()), &EngineConfig::default()).unwrap();
                assert_eq!(outcome.is_success(), expected.contains(name), "{name} with facts {chosen:?}");
            }
        }
    }

    #[test]
    fn parses_negation() {
        let cs = clauses("p :- q, \\+ e.");
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].positive_body, vec![Atom::prop("q")]);
        assert_eq!(cs[0].negated_body, vec![Atom::prop("e")]);
        let cs = clauses("lawful :- consent, \\+ withdrawn.");
        assert_eq!(cs[0].negated_body, vec![Atom::prop("withdrawn")]);
        let cs = clauses("p :- \\+(e).");
        assert_eq!(cs[0].negated_body, vec![Atom::prop("e")]);
    }

    #[test]
    fn rejects_unsupported_constructs() {
        let errs = parse_prolog_subset("p :- q ; r.").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("`;`") && errs[0].message.contains(OUTSIDE_SUBSET));
        let errs = parse_prolog_subset("p :- q, !.").unwrap_err();
        assert!(errs[0].message.contains("cut"));
        let errs = parse_prolog_subset("p :- \\+ (\\+ q).").unwrap_err();
        assert!(errs[0].message.contains("nested negation"));
        let errs = parse_prolog_subset("p :- \\+ \\+ q.").unwrap_err();
        assert!(errs[0].message.contains("nested negation"));
        let errs = parse_prolog_subset("p :- a ; b, !.\nq :- !.").unwrap_err();
        assert_eq!(errs.len(), 3);
    }

    #[test]
    fn directives_and_queries_are_skipped() {
        let parsed = parse_prolog_subset(":- dynamic(p).\np.\n?- p.").unwrap();
        assert_eq!(parsed.clauses.len(), 1);
        assert_eq!(parsed.warnings.len(), 2);
    }

    #[test]
    fn single_negation_becomes_exception() {
        let (program, report) = to_proleg(&clauses("p :- q, \\+ e.")).unwrap();
        assert_eq!(crate::parser::serialize(&program), "p <= q.\nexception(p, e).\n");
        assert_eq!(report.generated_exceptions, 1);
        assert!(report.synthesized_predicates.is_empty());
        check_equivalence("p :- q, \\+ e.", &["q", "e"]);
    }

    #[test]
    fn negation_free_passthrough() {
        let (program, report) = to_proleg(&clauses("p :- q.\nq.")).unwrap();
        assert_eq!(crate::parser::serialize(&program), "p <= q.\nq <=.\n");
        assert_eq!(report.generated_exceptions, 0);
        assert_eq!(report.converted_rules, 2);
    }

    #[test]
    fn differing_negations_are_split() {
        let src = "p :- a, \\+ e1.\np :- b, \\+ e2.";
        let (program, report) = to_proleg(&clauses(src)).unwrap();
        assert_eq!(
            report.synthesized_predicates,
            vec![PredKey::new("p__via_1", 0), PredKey::new("p__via_2", 0)]
        );
        assert_eq!(
            crate::parser::serialize(&program),
            "p <= p__via_1.\np__via_1 <= a.\np <= p__via_2.\np__via_2 <= b.\n\
             exception(p__via_1, e1).\nexception(p__via_2, e2).\n"
        );
        check_equivalence(src, &["a", "b", "e1", "e2"]);
    }

    #[test]
    fn shared_negations_are_not_split() {
        let src = "p :- a, \\+ e.\np :- b, \\+ e.";
        let (program, report) = to_proleg(&clauses(src)).unwrap();
        assert!(report.synthesized_predicates.is_empty());
        assert_eq!(program.exceptions.len(), 1);
        check_equivalence(src, &["a", "b", "e"]);
    }

    #[test]
    fn negation_free_sibling_forces_split() {
        check_equivalence("p :- a.\np :- b, \\+ e.\nq :- p, \\+ b.", &["a", "b", "e"]);
    }

    #[test]
    fn local_variables_in_negation_are_kept() {
        let src = "ok(X) :- item(X, Y), \\+ blocked(Y).";
        let (program, report) = to_proleg(&clauses(src)).unwrap();
        assert_eq!(report.synthesized_predicates, vec![PredKey::new("ok__via_1", 2)]);
        let facts: FactBase = crate::parser::parse_facts("item(a, k1). item(a, k2). item(b, k3). blocked(k1). blocked(k3).")
            .unwrap();
        let cfg = EngineConfig::default();
        let ok = |c: &str| solve(&program, &facts, &Atom::new("ok", vec![crate::ast::Term::constant(c)]), &cfg).unwrap().0;
        assert!(ok("a").is_success());
        assert!(!ok("b").is_success());
    }

    #[test]
    fn aux_names_avoid_collisions() {
        let (_, report) = to_proleg(&clauses("p__via_1.\np :- a, \\+ e.\np :- b.")).unwrap();
        assert_eq!(report.synthesized_predicates[0].name, "p__via_1_");
    }

    #[test]
    fn cyclic_negation_is_rejected() {
        let err = to_proleg(&clauses("p :- \\+ q.\nq :- \\+ p.")).unwrap_err();
        assert!(matches!(err, EngineError::Unstratified { .. }));
    }

    #[test]
    fn reserved_head() {
        assert!(parse_prolog_subset("exception(a, b).").is_err());
    }
}
