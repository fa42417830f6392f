//! GDPR Article 6 corpus and the JSON case runner.
//!
//! The curated ruleset, the unreviewed draft used as a linter fixture, and
//! the bundled case files live under `corpus/` in this crate. Case files
//! look like:
//!
//! ```json
//! {
//!   "id": "withdrawal",
//!   "description": "...",
//!   "ruleset": "../article6_curated.proleg",
//!   "facts": {"path": "../withdrawal.facts"},
//!   "query": "lawful_processing(case1)",
//!   "expected": "x",
//!   "expected_trace_fragments": [
//!     {"goal": "consent_withdrawn(_)", "outcome": "o", "edge": "exception"}
//!   ]
//! }
//! ```
//!
//! `facts` is either an inline list of atoms or `{"path": ...}`. Paths are
//! relative to the case file.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ast::{unify_atoms, Atom, FactBase, PredKey, Program};
use crate::engine::{solve, EngineConfig, EngineError, Outcome};
use crate::parser::{parse_atom, parse_facts, parse_program, ErrorList, ParseError};
use crate::trace::{EdgeKind, TraceNode};

pub const CURATED_RULESET: &str = include_str!("../corpus/article6_curated.proleg");
pub const LLM_RULESET: &str = include_str!("../corpus/article6_llm.proleg");
pub const WITHDRAWAL_FACTS: &str = include_str!("../corpus/withdrawal.facts");

/// The corpus directory inside the source tree.
pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn curated_program() -> Program {
    parse_program(CURATED_RULESET).expect("curated ruleset parses")
}

pub fn llm_program() -> Program {
    parse_program(LLM_RULESET).expect("draft ruleset parses")
}

/// Predicates a case may assert as facts: everything the curated ruleset
/// consults but never concludes.
pub fn fact_schema() -> Vec<PredKey> {
    let program = curated_program();
    let defined = program.defined_predicates();
    program.predicates().into_iter().filter(|k| !defined.contains(k)).collect()
}

/// Where a fragment's node hangs in the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentEdge {
    Condition,
    Exception,
    Root,
}

impl FragmentEdge {
    fn matches(self, edge: Option<EdgeKind>) -> bool {
        matches!(
            (self, edge),
            (FragmentEdge::Root, None)
                | (FragmentEdge::Condition, Some(EdgeKind::Condition))
                | (FragmentEdge::Exception, Some(EdgeKind::Exception))
        )
    }
}

/// A node the trace must contain. `_` in `goal` matches anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFragment {
    pub goal: Atom,
    pub outcome: Outcome,
    pub edge: FragmentEdge,
}

impl TraceFragment {
    pub fn matches(&self, trace: &TraceNode) -> bool {
        trace.walk().into_iter().any(|(edge, node)| {
            self.edge.matches(edge) && node.outcome == self.outcome && unify_atoms(&self.goal, &node.goal).is_some()
        })
    }
}

impl fmt::Display for TraceFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edge = match self.edge {
            FragmentEdge::Condition => "condition",
            FragmentEdge::Exception => "exception",
            FragmentEdge::Root => "root",
        };
        write!(f, "{} [{}] via {edge} edge", self.goal, self.outcome.glyph())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactsSource {
    Inline,
    File(PathBuf),
}

/// A loaded, validated case.
#[derive(Clone, Debug)]
pub struct CaseFile {
    pub id: String,
    pub description: String,
    pub ruleset: PathBuf,
    pub program: Program,
    pub facts_source: FactsSource,
    pub facts: FactBase,
    pub query: Atom,
    pub expected: Outcome,
    pub expected_trace_fragments: Vec<TraceFragment>,
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: schema violation: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}:\n{}", path.display(), ErrorList(errors))]
    Parse { path: PathBuf, errors: Vec<ParseError> },
    #[error("{}: query predicate {predicate} is not defined by the ruleset", path.display())]
    UndefinedQuery { path: PathBuf, predicate: PredKey },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    id: String,
    description: String,
    ruleset: String,
    facts: RawFacts,
    query: String,
    expected: RawOutcome,
    #[serde(default)]
    expected_trace_fragments: Vec<RawFragment>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFacts {
    Inline(Vec<String>),
    File { path: String },
}

#[derive(Clone, Copy, Deserialize)]
enum RawOutcome {
    #[serde(rename = "o")]
    Success,
    #[serde(rename = "x")]
    Failure,
}

impl From<RawOutcome> for Outcome {
    fn from(raw: RawOutcome) -> Self {
        match raw {
            RawOutcome::Success => Outcome::Success,
            RawOutcome::Failure => Outcome::Failure,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFragment {
    goal: String,
    outcome: RawOutcome,
    edge: FragmentEdge,
}

fn read(path: &Path) -> Result<String, CaseError> {
    fs::read_to_string(path).map_err(|source| CaseError::Io { path: path.to_path_buf(), source })
}

pub fn load_case(path: &Path) -> Result<CaseFile, CaseError> {
    let text = read(path)?;
    parse_case(&text, path)
}

/// Parses case JSON; relative paths resolve against `path`'s directory.
pub fn parse_case(text: &str, path: &Path) -> Result<CaseFile, CaseError> {
    let schema = |message: String| CaseError::Schema { path: path.to_path_buf(), message };
    let raw: RawCase = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let ruleset = base.join(&raw.ruleset);
    let program = parse_program(&read(&ruleset)?).map_err(|errors| CaseError::Parse { path: ruleset.clone(), errors })?;

    let (facts_source, facts) = match raw.facts {
        RawFacts::Inline(atoms) => {
            let joined: String = atoms.iter().map(|a| format!("{a}.\n")).collect();
            let facts = parse_facts(&joined).map_err(|errors| CaseError::Parse { path: path.to_path_buf(), errors })?;
            (FactsSource::Inline, facts)
        }
        RawFacts::File { path: facts_path } => {
            let facts_path = base.join(facts_path);
            let facts = parse_facts(&read(&facts_path)?)
                .map_err(|errors| CaseError::Parse { path: facts_path.clone(), errors })?;
            (FactsSource::File(facts_path), facts)
        }
    };

    let query = parse_atom(&raw.query).map_err(|errors| CaseError::Parse { path: path.to_path_buf(), errors })?;
    if !program.defined_predicates().contains(&query.key()) {
        return Err(CaseError::UndefinedQuery { path: path.to_path_buf(), predicate: query.key() });
    }

    let expected_trace_fragments = raw
        .expected_trace_fragments
        .into_iter()
        .map(|f| {
            let goal = parse_atom(&f.goal).map_err(|errors| CaseError::Parse { path: path.to_path_buf(), errors })?;
            Ok(TraceFragment { goal, outcome: f.outcome.into(), edge: f.edge })
        })
        .collect::<Result<_, CaseError>>()?;

    Ok(CaseFile {
        id: raw.id,
        description: raw.description,
        ruleset,
        program,
        facts_source,
        facts,
        query,
        expected: raw.expected.into(),
        expected_trace_fragments,
    })
}

#[derive(Clone, Debug)]
pub struct CaseRun {
    pub passed: bool,
    pub actual: Outcome,
    pub trace: TraceNode,
    /// Expected fragments the trace did not contain.
    pub missing_fragments: Vec<TraceFragment>,
}

pub fn run_case(case: &CaseFile, cfg: &EngineConfig) -> Result<CaseRun, EngineError> {
    let (actual, trace) = solve(&case.program, &case.facts, &case.query, cfg)?;
    let missing_fragments: Vec<TraceFragment> = case
        .expected_trace_fragments
        .iter()
        .filter(|f| !f.matches(&trace))
        .cloned()
        .collect();
    Ok(CaseRun { passed: actual == case.expected && missing_fragments.is_empty(), actual, trace, missing_fragments })
}

/// `*.case.json` files directly inside `dir`, sorted by name.
pub fn case_paths(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".case.json")))
        .collect();
    out.sort();
    Ok(out)
}

/// Lawful bases named by Art. 6(1), as the curated ruleset spells them.
pub const BASES: [&str; 6] = [
    "basis_consent",
    "basis_contract",
    "basis_legal_obligation",
    "basis_vital_interest",
    "basis_public_task",
    "basis_legitimate_interest",
];

/// Bases that hold for `case` under the curated ruleset.
pub fn holding_bases(program: &Program, facts: &FactBase, case: &str, cfg: &EngineConfig) -> Result<BTreeSet<&'static str>, EngineError> {
    let mut out = BTreeSet::new();
    for basis in BASES {
        let goal = Atom::new(basis, vec![crate::ast::Term::constant(case)]);
        if solve(program, facts, &goal, cfg)?.0.is_success() {
            out.insert(basis);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stratify;

    fn write_case(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn corpus_parses_and_stratifies() {
        let program = curated_program();
        let strata = stratify(&program).unwrap();
        let consent = strata.level_of(&PredKey::new("basis_consent", 1)).unwrap();
        let withdrawn = strata.level_of(&PredKey::new("consent_withdrawn", 1)).unwrap();
        let invalid = strata.level_of(&PredKey::new("consent_invalid", 1)).unwrap();
        assert!(consent > withdrawn && consent > invalid);
        assert!(program.rules.iter().all(|r| r.source.is_some()));
        llm_program();
    }

    #[test]
    fn fact_schema_lists_leaf_predicates() {
        let schema = fact_schema();
        assert!(schema.contains(&PredKey::new("consent_given", 1)));
        assert!(schema.contains(&PredKey::new("consent_withdrawn", 1)));
        assert!(!schema.contains(&PredKey::new("basis_consent", 1)));
        assert!(!schema.contains(&PredKey::new("data_is_processed", 1)));
    }

    #[test]
    fn loads_withdrawal_case() {
        let case = load_case(&corpus_dir().join("cases/withdrawal.case.json")).unwrap();
        assert_eq!(case.query.to_string(), "lawful_processing(case1)");
        assert_eq!(case.expected, Outcome::Failure);
        assert_eq!(case.facts.len(), 2);
        let run = run_case(&case, &EngineConfig::default()).unwrap();
        assert!(run.passed, "{:?}", run.missing_fragments);
        assert!(run
            .trace
            .walk()
            .iter()
            .any(|(_, n)| n.goal.to_string() == "basis_consent(case1)" && n.defeated));
    }

    #[test]
    fn rejects_unknown_expected_value() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("r.proleg"), "p(X) <= q(X).").unwrap();
        let path = write_case(
            dir.path(),
            "bad.case.json",
            r#"{"id":"b","description":"","ruleset":"r.proleg","facts":[],"query":"p(a)","expected":"maybe"}"#,
        );
        assert!(matches!(load_case(&path), Err(CaseError::Schema { .. })));
    }

    #[test]
    fn rejects_undefined_query() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("r.proleg"), "p(X) <= q(X).").unwrap();
        let path = write_case(
            dir.path(),
            "u.case.json",
            r#"{"id":"u","description":"","ruleset":"r.proleg","facts":["q(a)"],"query":"nope(a)","expected":"x"}"#,
        );
        let err = load_case(&path).unwrap_err();
        assert!(err.to_string().contains("nope/1"), "{err}");
    }

    #[test]
    fn missing_file_and_non_ground_facts() {
        assert!(matches!(load_case(Path::new("/nonexistent/x.case.json")), Err(CaseError::Io { .. })));
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("r.proleg"), "p(X) <= q(X).").unwrap();
        let path = write_case(
            dir.path(),
            "v.case.json",
            r#"{"id":"v","description":"","ruleset":"r.proleg","facts":["q(X)"],"query":"p(a)","expected":"x"}"#,
        );
        assert!(matches!(load_case(&path), Err(CaseError::Parse { .. })));
    }

    #[test]
    fn consent_without_withdrawal_succeeds() {
        let program = curated_program();
        let facts = parse_facts("consent_given(case1).").unwrap();
        let goal = parse_atom("lawful_processing(case1)").unwrap();
        let cfg = EngineConfig::default();
        assert_eq!(solve(&program, &facts, &goal, &cfg).unwrap().0, Outcome::Success);
        assert_eq!(solve(&program, &FactBase::new(), &goal, &cfg).unwrap().0, Outcome::Failure);
    }

    #[test]
    fn fragment_wildcards() {
        let f = TraceFragment {
            goal: parse_atom("consent_given(_)").unwrap(),
            outcome: Outcome::Success,
            edge: FragmentEdge::Root,
        };
        assert!(f.matches(&TraceNode::fact(parse_atom("consent_given(case9)").unwrap())));
        assert!(!f.matches(&TraceNode::fact(parse_atom("consent_withdrawn(case9)").unwrap())));
    }
}
