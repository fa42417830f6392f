//! Structural checks for PROLEG rulesets.
//!
//! Two checks target defects typical of machine-drafted legal rules:
//! conditions that restate what the rule already presupposes (for example
//! that data is being processed), and conditions that apply to all
//! processing but were attached to only some sibling rules. The remaining
//! checks are ruleset hygiene.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::{unify_atoms, Atom, PredKey, Pos, Program};
use crate::engine::{stratify, EngineError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckId {
    PresupposedClause,
    InconsistentSiblingCondition,
    OrphanException,
    UndefinedPredicate,
    UnstratifiedExceptionCycle,
}

impl CheckId {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::PresupposedClause => "PRESUPPOSED_CLAUSE",
            CheckId::InconsistentSiblingCondition => "INCONSISTENT_SIBLING_CONDITION",
            CheckId::OrphanException => "ORPHAN_EXCEPTION",
            CheckId::UndefinedPredicate => "UNDEFINED_PREDICATE",
            CheckId::UnstratifiedExceptionCycle => "UNSTRATIFIED_EXCEPTION_CYCLE",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

impl std::str::FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "warning" => Ok(Severity::Warning),
            "error" => Ok(Severity::Error),
            other => Err(format!("unknown severity `{other}`")),
        }
    }
}

/// The statement a finding refers to: a rule id, or `exception#N` for the
/// N-th exception declaration (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub statement: String,
    pub pos: Option<Pos>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LintFinding {
    pub check_id: CheckId,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    pub related: Vec<String>,
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(pos) = self.location.pos {
            write!(f, "{pos}: ")?;
        }
        write!(f, "{} {} [{}]: {}", self.severity, self.check_id, self.location.statement, self.message)
    }
}

#[derive(Serialize)]
struct JsonFinding<'a> {
    check_id: CheckId,
    severity: Severity,
    location: &'a str,
    line: Option<usize>,
    column: Option<usize>,
    message: &'a str,
    related: &'a [String],
}

/// Findings as a JSON array of
/// `{"check_id", "severity", "location", "line", "column", "message", "related"}`.
pub fn findings_to_json(findings: &[LintFinding]) -> String {
    let rows: Vec<JsonFinding<'_>> = findings
        .iter()
        .map(|f| JsonFinding {
            check_id: f.check_id,
            severity: f.severity,
            location: &f.location.statement,
            line: f.location.pos.map(|p| p.line),
            column: f.location.pos.map(|p| p.column),
            message: &f.message,
            related: &f.related,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("findings serialize")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LintConfig {
    /// Conditions implied by any rule about processing.
    pub presupposed_predicates: Vec<PredKey>,
    /// Conditions that belong to every sibling rule or to none.
    pub universal_condition_predicates: Vec<PredKey>,
    /// Predicates supplied by case facts rather than rules.
    pub declared_fact_schema: Vec<PredKey>,
    /// Treat every body predicate as a universal condition.
    pub generic_sibling_check: bool,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            presupposed_predicates: vec![PredKey::new("data_is_processed", 1), PredKey::new("processing_occurs", 1)],
            universal_condition_predicates: vec![PredKey::new("compliant_with_art5_principles", 1)],
            declared_fact_schema: Vec::new(),
            generic_sibling_check: false,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLintConfig {
    presupposed_predicates: Option<Vec<String>>,
    universal_condition_predicates: Option<Vec<String>>,
    declared_fact_schema: Option<Vec<String>>,
    generic_sibling_check: Option<bool>,
}

impl LintConfig {
    /// Reads a JSON config. Missing keys keep their defaults; predicates are
    /// written `name/arity`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: RawLintConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let keys = |list: Option<Vec<String>>, default: Vec<PredKey>| -> Result<Vec<PredKey>, String> {
            match list {
                Some(items) => items.iter().map(|s| s.parse()).collect(),
                None => Ok(default),
            }
        };
        let defaults = LintConfig::default();
        Ok(LintConfig {
            presupposed_predicates: keys(raw.presupposed_predicates, defaults.presupposed_predicates)?,
            universal_condition_predicates: keys(
                raw.universal_condition_predicates,
                defaults.universal_condition_predicates,
            )?,
            declared_fact_schema: keys(raw.declared_fact_schema, defaults.declared_fact_schema)?,
            generic_sibling_check: raw.generic_sibling_check.unwrap_or(defaults.generic_sibling_check),
        })
    }
}

fn rule_location(program: &Program, idx: usize) -> Location {
    let rule = &program.rules[idx];
    Location { statement: rule.id.clone(), pos: rule.pos }
}

fn exception_location(program: &Program, idx: usize) -> Location {
    Location { statement: format!("exception#{}", idx + 1), pos: program.exceptions[idx].pos }
}

pub fn lint(program: &Program, cfg: &LintConfig) -> Vec<LintFinding> {
    let mut findings = Vec::new();
    presupposed_clauses(program, cfg, &mut findings);
    inconsistent_siblings(program, cfg, &mut findings);
    orphan_exceptions(program, &mut findings);
    undefined_predicates(program, cfg, &mut findings);
    exception_cycles(program, &mut findings);
    // positioned findings first, in source order; the sort is stable
    findings.sort_by_key(|f| (f.location.pos.is_none(), f.location.pos));
    findings
}

fn presupposed_clauses(program: &Program, cfg: &LintConfig, out: &mut Vec<LintFinding>) {
    for (i, rule) in program.rules.iter().enumerate() {
        for atom in &rule.body {
            if cfg.presupposed_predicates.contains(&atom.key()) {
                out.push(LintFinding {
                    check_id: CheckId::PresupposedClause,
                    severity: Severity::Warning,
                    location: rule_location(program, i),
                    message: format!(
                        "condition `{atom}` is already presupposed by any rule on the lawfulness of processing",
                    ),
                    related: Vec::new(),
                });
            }
        }
    }
}

fn inconsistent_siblings(program: &Program, cfg: &LintConfig, out: &mut Vec<LintFinding>) {
    let mut groups: BTreeMap<PredKey, Vec<usize>> = BTreeMap::new();
    for (i, rule) in program.rules.iter().enumerate() {
        groups.entry(rule.head.key()).or_default().push(i);
    }
    for (head, members) in &groups {
        if members.len() < 2 {
            continue;
        }
        let candidates: BTreeSet<PredKey> = if cfg.generic_sibling_check {
            members.iter().flat_map(|&i| program.rules[i].body.iter().map(Atom::key)).collect()
        } else {
            cfg.universal_condition_predicates.iter().cloned().collect()
        };
        for cond in candidates {
            let (with, without): (Vec<usize>, Vec<usize>) = members
                .iter()
                .partition(|&&i| program.rules[i].body.iter().any(|b| b.key() == cond));
            if with.is_empty() || without.is_empty() {
                continue;
            }
            out.push(LintFinding {
                check_id: CheckId::InconsistentSiblingCondition,
                severity: Severity::Warning,
                location: rule_location(program, with[0]),
                message: format!(
                    "{cond} appears in {} of {} rules for {head}; it should condition all of them or none",
                    with.len(),
                    members.len()
                ),
                related: without.iter().map(|&i| program.rules[i].id.clone()).collect(),
            });
        }
    }
}

fn orphan_exceptions(program: &Program, out: &mut Vec<LintFinding>) {
    for (i, exc) in program.exceptions.iter().enumerate() {
        let head = exc.head.rename(&mut |v| format!("{v}#exc"));
        let matched = program.rules.iter().any(|r| unify_atoms(&head, &r.head).is_some());
        if !matched {
            out.push(LintFinding {
                check_id: CheckId::OrphanException,
                severity: Severity::Warning,
                location: exception_location(program, i),
                message: format!("exception targets `{}`, which no rule concludes", exc.head),
                related: Vec::new(),
            });
        }
    }
}

fn undefined_predicates(program: &Program, cfg: &LintConfig, out: &mut Vec<LintFinding>) {
    let defined = program.defined_predicates();
    let known = |k: &PredKey| defined.contains(k) || cfg.declared_fact_schema.contains(k);
    for (i, rule) in program.rules.iter().enumerate() {
        let mut reported = BTreeSet::new();
        for atom in &rule.body {
            let key = atom.key();
            if !known(&key) && reported.insert(key.clone()) {
                out.push(LintFinding {
                    check_id: CheckId::UndefinedPredicate,
                    severity: Severity::Warning,
                    location: rule_location(program, i),
                    message: format!("{key} has no rule and is not in the declared fact schema"),
                    related: Vec::new(),
                });
            }
        }
    }
    for (i, exc) in program.exceptions.iter().enumerate() {
        let key = exc.exception.key();
        if !known(&key) {
            out.push(LintFinding {
                check_id: CheckId::UndefinedPredicate,
                severity: Severity::Warning,
                location: exception_location(program, i),
                message: format!("{key} has no rule and is not in the declared fact schema"),
                related: Vec::new(),
            });
        }
    }
}

fn exception_cycles(program: &Program, out: &mut Vec<LintFinding>) {
    let Err(EngineError::Unstratified { cycle }) = stratify(program) else {
        return;
    };
    let next = cycle.get(1).unwrap_or(&cycle[0]);
    let idx = program
        .exceptions
        .iter()
        .position(|e| e.head.key() == cycle[0] && &e.exception.key() == next)
        .unwrap_or(0);
    let mut names: Vec<String> = cycle.iter().map(ToString::to_string).collect();
    names.push(cycle[0].to_string());
    out.push(LintFinding {
        check_id: CheckId::UnstratifiedExceptionCycle,
        severity: Severity::Error,
        location: exception_location(program, idx),
        message: format!("dependency cycle through an exception: {}", names.join(" -> ")),
        related: Vec::new(),
    });
}
