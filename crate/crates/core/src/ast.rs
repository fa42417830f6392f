//! Data model for PROLEG programs: terms, atoms, rules, exception
//! declarations, fact bases and substitutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A first-order term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(String),
    Variable(String),
    Integer(i64),
    Text(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Constant(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    /// Builds a compound term. Zero arguments collapse to a constant.
    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Self {
        if args.is_empty() {
            Term::Constant(functor.into())
        } else {
            Term::Compound(functor.into(), args)
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Variable(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Appends variable names in first-occurrence order, without duplicates.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Variable(v) => {
                if !out.iter().any(|seen| seen == v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    fn occurs(&self, var: &str, subst: &Substitution) -> bool {
        match self {
            Term::Variable(v) => {
                if v == var {
                    return true;
                }
                match subst.bindings.get(v) {
                    Some(bound) => bound.occurs(var, subst),
                    None => false,
                }
            }
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var, subst)),
            _ => false,
        }
    }

    /// Maps every variable name through `f`.
    pub fn rename(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Variable(v) => Term::Variable(f(v)),
            Term::Compound(name, args) => {
                Term::Compound(name.clone(), args.iter().map(|a| a.rename(f)).collect())
            }
            other => other.clone(),
        }
    }
}

/// `name/arity`, the key under which predicates are distinguished.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredKey { name: name.into(), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl std::str::FromStr for PredKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arity) = s
            .rsplit_once('/')
            .ok_or_else(|| format!("expected name/arity, got `{s}`"))?;
        if !is_identifier(name) {
            return Err(format!("`{name}` is not a predicate name"));
        }
        let arity = arity
            .parse()
            .map_err(|_| format!("`{arity}` is not a valid arity"))?;
        Ok(PredKey::new(name, arity))
    }
}

/// A predicate applied to arguments. Heads, conditions and exceptions are
/// all atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn rename(&self, f: &mut impl FnMut(&str) -> String) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| a.rename(f)).collect(),
        }
    }

    pub fn to_term(&self) -> Term {
        Term::compound(self.predicate.clone(), self.args.clone())
    }

    /// Reads a constant or compound term as an atom.
    pub fn from_term(term: &Term) -> Option<Atom> {
        match term {
            Term::Constant(name) => Some(Atom::prop(name.clone())),
            Term::Compound(name, args) => Some(Atom::new(name.clone(), args.clone())),
            _ => None,
        }
    }

    /// Renames variables to `_0`, `_1`, ... in order of first occurrence.
    pub fn canonical(&self) -> Atom {
        let order = self.vars();
        self.rename(&mut |v| {
            let idx = order.iter().position(|o| o == v).unwrap_or(0);
            format!("_{idx}")
        })
    }

    /// True when the two atoms are equal up to a consistent renaming of
    /// variables.
    pub fn is_variant_of(&self, other: &Atom) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Citation back to the authoritative legal text.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceRef {
    pub citation: String,
    pub note: Option<String>,
}

impl SourceRef {
    pub fn new(citation: impl Into<String>) -> Self {
        SourceRef { citation: citation.into(), note: None }
    }
}

/// 1-based position of a statement in its source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A general rule: `head` holds when every atom of `body` holds, unless an
/// exception to `head` holds.
///
/// Equality ignores `pos`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub id: String,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub source: Option<SourceRef>,
    pub pos: Option<Pos>,
}

impl Rule {
    pub fn new(id: impl Into<String>, head: Atom, body: Vec<Atom>) -> Self {
        Rule { id: id.into(), head, body, source: None, pos: None }
    }

    /// Every head variable also occurs in the body.
    pub fn is_range_restricted(&self) -> bool {
        let mut body_vars = Vec::new();
        self.body.iter().for_each(|b| b.collect_vars(&mut body_vars));
        self.head.vars().iter().all(|v| body_vars.contains(v))
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground() && self.body.iter().all(Atom::is_ground)
    }
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.head == other.head
            && self.body == other.body
            && self.source == other.source
    }
}

impl Eq for Rule {}

/// A proven `exception` defeats the conclusion `head`.
///
/// Equality ignores `pos`.
#[derive(Clone, Debug)]
pub struct ExceptionDecl {
    pub head: Atom,
    pub exception: Atom,
    pub source: Option<SourceRef>,
    pub pos: Option<Pos>,
}

impl ExceptionDecl {
    pub fn new(head: Atom, exception: Atom) -> Self {
        ExceptionDecl { head, exception, source: None, pos: None }
    }
}

impl PartialEq for ExceptionDecl {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.exception == other.exception && self.source == other.source
    }
}

impl Eq for ExceptionDecl {}

/// A PROLEG knowledge base. Rules keep their textual order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub exceptions: Vec<ExceptionDecl>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a rule with the next positional id (`r1`, `r2`, ...).
    pub fn push_rule(&mut self, head: Atom, body: Vec<Atom>) -> &mut Rule {
        let id = format!("r{}", self.rules.len() + 1);
        self.rules.push(Rule::new(id, head, body));
        self.rules.last_mut().expect("just pushed")
    }

    pub fn push_exception(&mut self, head: Atom, exception: Atom) -> &mut ExceptionDecl {
        self.exceptions.push(ExceptionDecl::new(head, exception));
        self.exceptions.last_mut().expect("just pushed")
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn is_ground(&self) -> bool {
        self.rules.iter().all(Rule::is_ground)
            && self
                .exceptions
                .iter()
                .all(|e| e.head.is_ground() && e.exception.is_ground())
    }

    /// Predicates with at least one rule.
    pub fn defined_predicates(&self) -> BTreeSet<PredKey> {
        self.rules.iter().map(|r| r.head.key()).collect()
    }

    /// Every predicate mentioned anywhere in the program.
    pub fn predicates(&self) -> BTreeSet<PredKey> {
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            out.insert(rule.head.key());
            out.extend(rule.body.iter().map(Atom::key));
        }
        for exc in &self.exceptions {
            out.insert(exc.head.key());
            out.insert(exc.exception.key());
        }
        out
    }

    /// Ids of rules whose head variables do not all occur in the body.
    pub fn non_range_restricted(&self) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| !r.is_range_restricted())
            .map(|r| r.id.as_str())
            .collect()
    }
}

/// Ground facts of a single case, kept apart from the rules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactBase {
    facts: BTreeSet<Atom>,
}

impl FactBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a fact. Returns `false` (and leaves the base unchanged) for
    /// non-ground atoms.
    pub fn insert(&mut self, atom: Atom) -> bool {
        if !atom.is_ground() {
            return false;
        }
        self.facts.insert(atom);
        true
    }

    pub fn remove(&mut self, atom: &Atom) -> bool {
        self.facts.remove(atom)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.facts.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }
}

impl FromIterator<Atom> for FactBase {
    /// Non-ground atoms are skipped.
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        let mut base = FactBase::new();
        for atom in iter {
            base.insert(atom);
        }
        base
    }
}

/// Variable bindings. Stored in triangular form; [`Substitution::resolved`]
/// gives the fully dereferenced view.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from explicit bindings. No occurs-check is done
    /// here; use [`unify`] to obtain checked bindings.
    pub fn from_bindings<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, Term)>,
        K: Into<String>,
    {
        Substitution {
            bindings: pairs.into_iter().map(|(k, t)| (k.into(), t)).collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Follows variable bindings at the top level only.
    fn walk<'a>(&'a self, mut term: &'a Term) -> &'a Term {
        while let Term::Variable(v) = term {
            match self.bindings.get(v) {
                Some(next) => term = next,
                None => break,
            }
        }
        term
    }

    pub fn apply(&self, term: &Term) -> Term {
        apply(self, term)
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom {
            predicate: atom.predicate.clone(),
            args: atom.args.iter().map(|a| apply(self, a)).collect(),
        }
    }

    /// Same bindings, each fully dereferenced.
    pub fn resolved(&self) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .map(|(k, t)| (k.clone(), apply(self, t)))
                .collect(),
        }
    }

    /// Extends `self` with a most general unifier of `a` and `b`. On failure
    /// `self` may hold partial bindings and should be discarded.
    pub fn unify_in_place(&mut self, a: &Term, b: &Term) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((left, right)) = stack.pop() {
            let left = self.walk(&left).clone();
            let right = self.walk(&right).clone();
            match (left, right) {
                (Term::Variable(x), Term::Variable(y)) if x == y => {}
                (Term::Variable(x), other) | (other, Term::Variable(x)) => {
                    if other.occurs(&x, self) {
                        return false;
                    }
                    self.bindings.insert(x, other);
                }
                (Term::Compound(f, fargs), Term::Compound(g, gargs)) => {
                    if f != g || fargs.len() != gargs.len() {
                        return false;
                    }
                    stack.extend(fargs.into_iter().zip(gargs).rev());
                }
                (l, r) => {
                    if l != r {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn unify_atoms_in_place(&mut self, a: &Atom, b: &Atom) -> bool {
        if a.predicate != b.predicate || a.args.len() != b.args.len() {
            return false;
        }
        a.args
            .iter()
            .zip(&b.args)
            .all(|(x, y)| self.unify_in_place(x, y))
    }
}

/// Replaces every bound variable in `term` by its fully dereferenced binding.
pub fn apply(s: &Substitution, term: &Term) -> Term {
    match s.walk(term) {
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| apply(s, a)).collect()),
        other => other.clone(),
    }
}

/// Most general unifier of two terms, with occurs-check. The result is in
/// resolved form.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    s.unify_in_place(a, b).then(|| s.resolved())
}

pub fn unify_atoms(a: &Atom, b: &Atom) -> Option<Substitution> {
    let mut s = Substitution::new();
    s.unify_atoms_in_place(a, b).then(|| s.resolved())
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_text(f: &mut fmt::Formatter<'_>, text: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in text.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

pub(crate) fn quote(text: &str) -> String {
    struct Quoted<'a>(&'a str);
    impl fmt::Display for Quoted<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_text(f, self.0)
        }
    }
    Quoted(text).to_string()
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    f.write_str("(")?;
    for (i, arg) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{arg}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(name) | Term::Variable(name) => f.write_str(name),
            Term::Integer(n) => write!(f, "{n}"),
            Term::Text(text) => write_text(f, text),
            Term::Compound(functor, args) => {
                f.write_str(functor)?;
                write_args(f, args)
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if self.args.is_empty() {
            Ok(())
        } else {
            write_args(f, &self.args)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn f(name: &str, args: Vec<Term>) -> Term {
        Term::compound(name, args)
    }

    /// Rewrites bound variables one layer at a time until nothing changes.
    fn rewrite_to_fixpoint(s: &Substitution, t: &Term) -> Term {
        fn once(s: &Substitution, t: &Term) -> Term {
            match t {
                Term::Variable(x) => s.get(x).cloned().unwrap_or_else(|| t.clone()),
                Term::Compound(g, args) => Term::Compound(g.clone(), args.iter().map(|a| once(s, a)).collect()),
                other => other.clone(),
            }
        }
        let mut current = t.clone();
        loop {
            let next = once(s, &current);
            if next == current {
                return current;
            }
            current = next;
        }
    }

    #[test]
    fn apply_binds_variables() {
        let s = Substitution::from_bindings([("X", c("a"))]);
        assert_eq!(apply(&s, &f("f", vec![v("X"), v("Y")])), f("f", vec![c("a"), v("Y")]));
    }

    #[test]
    fn empty_substitution_is_identity() {
        let t = f("f", vec![c("a")]);
        assert_eq!(apply(&Substitution::new(), &t), t);
    }

    #[test]
    fn apply_dereferences_chains() {
        let s = Substitution::from_bindings([("X", f("g", vec![v("Y")])), ("Y", c("b"))]);
        let oracle = rewrite_to_fixpoint(&s, &v("X"));
        assert_eq!(oracle, f("g", vec![c("b")]));
        assert_eq!(apply(&s, &v("X")), oracle);
    }

    #[test]
    fn textbook_mgu() {
        let s = unify(&f("f", vec![v("X"), c("b")]), &f("f", vec![c("a"), v("Y")])).unwrap();
        assert_eq!(s, Substitution::from_bindings([("X", c("a")), ("Y", c("b"))]));
    }

    #[test]
    fn occurs_check_rejects_cycles() {
        assert!(unify(&v("X"), &f("f", vec![v("X")])).is_none());
        // indirect: X = f(Y), Y = g(X)
        let a = f("p", vec![v("X"), v("Y")]);
        let b = f("p", vec![f("f", vec![v("Y")]), f("g", vec![v("X")])]);
        assert!(unify(&a, &b).is_none());
    }

    #[test]
    fn repeated_variable_against_distinct_constants() {
        let a = f("f", vec![v("X"), v("X")]);
        let b = f("f", vec![c("a"), c("b")]);
        // brute force: try every binding of X over {a, b}
        let brute = ["a", "b"].iter().any(|k| {
            let s = Substitution::from_bindings([("X", c(k))]);
            apply(&s, &a) == apply(&s, &b)
        });
        assert!(!brute);
        assert!(unify(&a, &b).is_none());
    }

    #[test]
    fn mismatched_kinds_do_not_unify() {
        assert!(unify(&Term::Integer(1), &c("a")).is_none());
        assert!(unify(&Term::Text("a".into()), &c("a")).is_none());
        assert!(unify(&f("f", vec![c("a")]), &f("f", vec![c("a"), c("b")])).is_none());
        assert!(unify(&Term::Integer(3), &Term::Integer(3)).is_some());
    }

    #[test]
    fn atoms_keyed_by_name_and_arity() {
        let p1 = Atom::new("p", vec![c("a")]);
        let p2 = Atom::new("p", vec![c("a"), c("b")]);
        assert_ne!(p1.key(), p2.key());
        assert!(unify_atoms(&p1, &p2).is_none());
    }

    #[test]
    fn variant_check() {
        let a = Atom::new("p", vec![v("X"), v("Y"), v("X")]);
        let b = Atom::new("p", vec![v("A"), v("B"), v("A")]);
        let c2 = Atom::new("p", vec![v("A"), v("A"), v("A")]);
        assert!(a.is_variant_of(&b));
        assert!(!a.is_variant_of(&c2));
    }

    #[test]
    fn range_restriction() {
        let ok = Rule::new("r1", Atom::new("p", vec![v("X")]), vec![Atom::new("q", vec![v("X")])]);
        let bad = Rule::new("r2", Atom::new("p", vec![v("X")]), vec![]);
        assert!(ok.is_range_restricted());
        assert!(!bad.is_range_restricted());
    }

    #[test]
    fn fact_base_rejects_variables() {
        let mut fb = FactBase::new();
        assert!(!fb.insert(Atom::new("p", vec![v("X")])));
        assert!(fb.insert(Atom::new("p", vec![c("a")])));
        assert_eq!(fb.len(), 1);
    }

    #[test]
    fn display_escapes_text() {
        let t = f("f", vec![Term::Text("a \"b\"\n".into()), Term::Integer(-3)]);
        assert_eq!(t.to_string(), "f(\"a \\\"b\\\"\\n\", -3)");
    }

    #[test]
    fn pred_key_parses() {
        assert_eq!("data_is_processed/1".parse::<PredKey>().unwrap(), PredKey::new("data_is_processed", 1));
        assert!("Bad/1".parse::<PredKey>().is_err());
        assert!("p".parse::<PredKey>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn term() -> impl Strategy<Value = Term> {
            let leaf = prop_oneof![
                prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(Term::constant),
                prop_oneof![Just("X"), Just("Y"), Just("Z"), Just("W")].prop_map(Term::var),
                (-3i64..3).prop_map(Term::Integer),
            ];
            leaf.prop_recursive(3, 16, 3, |inner| {
                (prop_oneof![Just("f"), Just("g")], prop::collection::vec(inner, 1..3))
                    .prop_map(|(name, args)| Term::compound(name, args))
            })
        }

        proptest! {
            #[test]
            fn apply_is_idempotent(a in term(), b in term(), t in term()) {
                if let Some(s) = unify(&a, &b) {
                    let once = apply(&s, &t);
                    prop_assert_eq!(apply(&s, &once), once);
                }
            }

            #[test]
            fn mgu_equalizes(a in term(), b in term()) {
                if let Some(s) = unify(&a, &b) {
                    prop_assert_eq!(apply(&s, &a), apply(&s, &b));
                }
            }

            #[test]
            fn unify_is_symmetric(a in term(), b in term()) {
                let ab = unify(&a, &b);
                let ba = unify(&b, &a);
                prop_assert_eq!(ab.is_some(), ba.is_some());
                if let (Some(s1), Some(s2)) = (ab, ba) {
                    // equivalent up to renaming: each instance is a variant of the other
                    let i1 = Atom::new("t", vec![apply(&s1, &a)]);
                    let i2 = Atom::new("t", vec![apply(&s2, &a)]);
                    prop_assert!(i1.is_variant_of(&i2));
                }
            }
        }
    }
}
