//! Query evaluation under rule-with-exception semantics.
//!
//! A goal succeeds when it matches a fact, or when some rule for it proves
//! its whole body and no exception declared against the resulting
//! conclusion instance can be proven. Exceptions are negation as failure,
//! so programs must be stratified: no dependency cycle may pass through an
//! exception edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use crate::ast::{Atom, FactBase, PredKey, Program, Rule, Substitution};
use crate::trace::{EdgeKind, TraceNode, Via};

/// Stack reserved per level of goal nesting when a solve runs on its own
/// thread.
const STACK_PER_LEVEL: usize = 24 * 1024;
const MIN_STACK: usize = 8 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_depth: usize,
    pub max_steps: usize,
    pub loop_check: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_depth: 512, max_steps: 100_000, loop_check: true }
    }
}

impl EngineConfig {
    /// Clamps both limits to at least 1.
    pub fn normalized(self) -> Self {
        EngineConfig {
            max_depth: self.max_depth.max(1),
            max_steps: self.max_steps.max(1),
            loop_check: self.loop_check,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    /// `o` for success, `x` for failure.
    pub fn glyph(self) -> char {
        match self {
            Outcome::Success => 'o',
            Outcome::Failure => 'x',
        }
    }

    pub fn from_glyph(glyph: &str) -> Option<Self> {
        match glyph {
            "o" => Some(Outcome::Success),
            "x" => Some(Outcome::Failure),
            _ => None,
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("program is not stratified: exception cycle through {}", fmt_cycle(.cycle))]
    Unstratified { cycle: Vec<PredKey> },
    #[error("depth limit exceeded while proving `{goal}`")]
    DepthExceeded { goal: Atom },
    #[error("step limit of {limit} resolution steps exceeded")]
    StepsExceeded { limit: usize },
    #[error("bottom-up evaluation needs a ground program; rule `{rule}` has variables")]
    NonGround { rule: String },
}

fn fmt_cycle(cycle: &[PredKey]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(ToString::to_string).collect();
    if let Some(first) = parts.first().cloned() {
        parts.push(first);
    }
    parts.join(" -> ")
}

/// Predicates partitioned into layers; every exception sits in a strictly
/// lower layer than the conclusion it defeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    pub strata: Vec<Vec<PredKey>>,
}

impl Stratification {
    pub fn level_of(&self, key: &PredKey) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(key))
    }
}

pub fn stratify(program: &Program) -> Result<Stratification, EngineError> {
    let mut graph: DiGraph<PredKey, bool> = DiGraph::new();
    let mut nodes: BTreeMap<PredKey, NodeIndex> = BTreeMap::new();
    for key in program.predicates() {
        let idx = graph.add_node(key.clone());
        nodes.insert(key, idx);
    }
    // `true` marks an exception (negative) edge
    for rule in &program.rules {
        let head = nodes[&rule.head.key()];
        for b in &rule.body {
            graph.add_edge(head, nodes[&b.key()], false);
        }
    }
    for exc in &program.exceptions {
        graph.add_edge(nodes[&exc.head.key()], nodes[&exc.exception.key()], true);
    }

    // Components come out dependencies-first.
    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; graph.node_count()];
    for (ci, comp) in components.iter().enumerate() {
        for n in comp {
            component_of[n.index()] = ci;
        }
    }

    for exc in &program.exceptions {
        let head = nodes[&exc.head.key()];
        let target = nodes[&exc.exception.key()];
        if component_of[head.index()] == component_of[target.index()] {
            let path = shortest_path(&graph, target, head, &component_of);
            let mut cycle = vec![graph[head].clone()];
            cycle.extend(path.iter().filter(|n| **n != head).map(|n| graph[*n].clone()));
            return Err(EngineError::Unstratified { cycle });
        }
    }

    let mut level = vec![0usize; components.len()];
    for (ci, comp) in components.iter().enumerate() {
        let mut l = 0;
        for n in comp {
            for edge in graph.edges(*n) {
                let other = component_of[edge.target().index()];
                if other != ci {
                    l = l.max(level[other] + usize::from(*edge.weight()));
                }
            }
        }
        level[ci] = l;
    }
    let height = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![Vec::new(); height];
    for (key, idx) in &nodes {
        strata[level[component_of[idx.index()]]].push(key.clone());
    }
    Ok(Stratification { strata })
}

/// Breadth-first path `from ..= to` staying inside one component.
fn shortest_path(
    graph: &DiGraph<PredKey, bool>,
    from: NodeIndex,
    to: NodeIndex,
    component_of: &[usize],
) -> Vec<NodeIndex> {
    let comp = component_of[from.index()];
    let mut parent: HashMap<NodeIndex, NodeIndex> = HashMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        let mut next: Vec<NodeIndex> = graph.edges(n).map(|e| e.target()).collect();
        next.sort();
        for m in next {
            if component_of[m.index()] == comp && seen.insert(m) {
                parent.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        match parent.get(&cur) {
            Some(p) => {
                cur = *p;
                path.push(cur);
            }
            None => break,
        }
    }
    path.reverse();
    path
}

/// A stratified program with its lookup indexes, reusable across many
/// queries and fact bases.
#[derive(Debug)]
pub struct Engine<'p> {
    program: &'p Program,
    stratification: Stratification,
    rules_by_key: HashMap<PredKey, Vec<usize>>,
    exceptions_by_key: HashMap<PredKey, Vec<usize>>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program) -> Result<Self, EngineError> {
        let stratification = stratify(program)?;
        let mut rules_by_key: HashMap<PredKey, Vec<usize>> = HashMap::new();
        for (i, rule) in program.rules.iter().enumerate() {
            rules_by_key.entry(rule.head.key()).or_default().push(i);
        }
        let mut exceptions_by_key: HashMap<PredKey, Vec<usize>> = HashMap::new();
        for (i, exc) in program.exceptions.iter().enumerate() {
            exceptions_by_key.entry(exc.head.key()).or_default().push(i);
        }
        Ok(Engine { program, stratification, rules_by_key, exceptions_by_key })
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn stratification(&self) -> &Stratification {
        &self.stratification
    }

    /// Proves `goal`, returning the outcome and the reasoning tree.
    ///
    /// Runs on a helper thread sized for `cfg.max_depth` levels of nesting.
    pub fn solve(
        &self,
        facts: &FactBase,
        goal: &Atom,
        cfg: &EngineConfig,
    ) -> Result<(Outcome, TraceNode), EngineError> {
        let cfg = cfg.normalized();
        let stack = MIN_STACK.max(cfg.max_depth.saturating_mul(STACK_PER_LEVEL));
        std::thread::scope(|scope| {
            std::thread::Builder::new()
                .name("proleg-solve".into())
                .stack_size(stack)
                .spawn_scoped(scope, || self.solve_here(facts, goal, &cfg))
                .expect("failed to spawn solver thread")
                .join()
                .unwrap_or_else(|panic| std::panic::resume_unwind(panic))
        })
    }

    /// Like [`Engine::solve`], but on the calling thread's stack.
    pub fn solve_here(
        &self,
        facts: &FactBase,
        goal: &Atom,
        cfg: &EngineConfig,
    ) -> Result<(Outcome, TraceNode), EngineError> {
        let mut solver = Solver::new(self, facts, cfg.normalized());
        let result = solver.goal(goal, 1)?;
        Ok(match result.answers.into_iter().next() {
            Some(answer) => (Outcome::Success, answer.node),
            None => (Outcome::Failure, result.failure.expect("failed goal carries a trace")),
        })
    }
}

/// Convenience wrapper: stratifies `program` and proves `goal`.
pub fn solve(
    program: &Program,
    facts: &FactBase,
    goal: &Atom,
    cfg: &EngineConfig,
) -> Result<(Outcome, TraceNode), EngineError> {
    Engine::new(program)?.solve(facts, goal, cfg)
}

struct Answer {
    instance: Atom,
    node: TraceNode,
}

struct GoalResult {
    answers: Vec<Answer>,
    /// Present exactly when `answers` is empty.
    failure: Option<TraceNode>,
}

struct BodyResult {
    solutions: Vec<(Substitution, Vec<TraceNode>)>,
    /// Condition nodes along the first failed branch, ending in the failure.
    failed_prefix: Vec<TraceNode>,
}

struct Solver<'e, 'p> {
    engine: &'e Engine<'p>,
    facts: BTreeMap<PredKey, Vec<&'e Atom>>,
    cfg: EngineConfig,
    steps: usize,
    fresh: usize,
    ancestors: Vec<Atom>,
}

impl<'e, 'p> Solver<'e, 'p> {
    fn new(engine: &'e Engine<'p>, facts: &'e FactBase, cfg: EngineConfig) -> Self {
        let mut by_key: BTreeMap<PredKey, Vec<&Atom>> = BTreeMap::new();
        for fact in facts.iter() {
            by_key.entry(fact.key()).or_default().push(fact);
        }
        Solver { engine, facts: by_key, cfg, steps: 0, fresh: 0, ancestors: Vec::new() }
    }

    fn rename_rule(&mut self, rule: &Rule) -> (Atom, Vec<Atom>) {
        self.fresh += 1;
        let n = self.fresh;
        let mut f = |v: &str| format!("{v}#{n}");
        (rule.head.rename(&mut f), rule.body.iter().map(|b| b.rename(&mut f)).collect())
    }

    fn goal(&mut self, goal: &Atom, depth: usize) -> Result<GoalResult, EngineError> {
        self.steps += 1;
        if self.steps > self.cfg.max_steps {
            return Err(EngineError::StepsExceeded { limit: self.cfg.max_steps });
        }
        if depth > self.cfg.max_depth {
            return Err(EngineError::DepthExceeded { goal: goal.canonical() });
        }
        if self.cfg.loop_check && self.ancestors.iter().any(|a| a.is_variant_of(goal)) {
            return Ok(GoalResult {
                answers: Vec::new(),
                failure: Some(TraceNode::failure(goal.canonical(), "loop check")),
            });
        }

        let ground = goal.is_ground();
        let key = goal.key();
        let mut answers: Vec<Answer> = Vec::new();

        if let Some(candidates) = self.facts.get(&key) {
            for fact in candidates {
                let mut s = Substitution::new();
                if s.unify_atoms_in_place(goal, fact) {
                    answers.push(Answer { instance: (*fact).clone(), node: TraceNode::fact((*fact).clone()) });
                    if ground {
                        return Ok(GoalResult { answers, failure: None });
                    }
                }
            }
        }

        let engine = self.engine;
        let rule_ids = engine.rules_by_key.get(&key).map(Vec::as_slice).unwrap_or_default();
        let mut attempts: Vec<TraceNode> = Vec::new();
        self.ancestors.push(goal.clone());
        let outcome = self.try_rules(goal, rule_ids, ground, depth, &mut answers, &mut attempts);
        self.ancestors.pop();
        outcome?;

        if !answers.is_empty() {
            return Ok(GoalResult { answers, failure: None });
        }
        let failure = match attempts.len() {
            0 => TraceNode::failure(goal.canonical(), "no rule matched"),
            1 => attempts.pop().expect("one attempt"),
            n => {
                let mut node = TraceNode::failure(goal.canonical(), format!("{n} rules attempted"));
                node.children = attempts.into_iter().map(|a| (EdgeKind::Condition, a)).collect();
                node
            }
        };
        Ok(GoalResult { answers, failure: Some(failure) })
    }

    fn try_rules(
        &mut self,
        goal: &Atom,
        rule_ids: &[usize],
        ground: bool,
        depth: usize,
        answers: &mut Vec<Answer>,
        attempts: &mut Vec<TraceNode>,
    ) -> Result<(), EngineError> {
        let program = self.engine.program;
        for &ri in rule_ids {
            let rule = &program.rules[ri];
            let (head, body) = self.rename_rule(rule);
            let mut s = Substitution::new();
            if !s.unify_atoms_in_place(&head, goal) {
                continue;
            }
            // one body proof suffices once the conclusion is fixed
            let need_one = s.apply_atom(&head).is_ground();
            let result = self.body(&body, 0, s.clone(), Vec::new(), need_one, depth)?;
            if result.solutions.is_empty() {
                let mut node = TraceNode::new(s.apply_atom(&head).canonical(), Outcome::Failure);
                node.via = Some(Via::Rule(rule.id.clone()));
                node.children = result.failed_prefix.into_iter().map(|n| (EdgeKind::Condition, n)).collect();
                attempts.push(node);
                continue;
            }
            for (sol, conditions) in result.solutions {
                let instance = sol.apply_atom(&head);
                if !ground && answers.iter().any(|a| a.instance.is_variant_of(&instance)) {
                    continue;
                }
                let (defeated, exception_nodes) = self.exceptions(&instance, depth)?;
                let mut node = TraceNode::new(
                    instance.canonical(),
                    if defeated { Outcome::Failure } else { Outcome::Success },
                );
                node.via = Some(Via::Rule(rule.id.clone()));
                node.defeated = defeated;
                node.children = conditions
                    .into_iter()
                    .map(|n| (EdgeKind::Condition, n))
                    .chain(exception_nodes.into_iter().map(|n| (EdgeKind::Exception, n)))
                    .collect();
                if defeated {
                    attempts.push(node);
                } else {
                    answers.push(Answer { instance, node });
                    if ground {
                        return Ok(());
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks every exception declared against `instance`. Returns whether
    /// one of them holds, plus a trace node per checked exception.
    fn exceptions(&mut self, instance: &Atom, depth: usize) -> Result<(bool, Vec<TraceNode>), EngineError> {
        let engine = self.engine;
        let Some(ids) = engine.exceptions_by_key.get(&instance.key()) else {
            return Ok((false, Vec::new()));
        };
        let mut defeated = false;
        let mut nodes = Vec::new();
        for &ei in ids {
            let decl = &engine.program.exceptions[ei];
            self.fresh += 1;
            let n = self.fresh;
            let mut f = |v: &str| format!("{v}#{n}");
            let head = decl.head.rename(&mut f);
            let exception = decl.exception.rename(&mut f);
            let mut s = Substitution::new();
            if !s.unify_atoms_in_place(&head, instance) {
                continue;
            }
            let result = self.goal(&s.apply_atom(&exception), depth + 1)?;
            match result.answers.into_iter().next() {
                Some(answer) => {
                    defeated = true;
                    nodes.push(answer.node);
                }
                None => nodes.push(result.failure.expect("failed goal carries a trace")),
            }
        }
        Ok((defeated, nodes))
    }

    fn body(
        &mut self,
        body: &[Atom],
        idx: usize,
        s: Substitution,
        prefix: Vec<TraceNode>,
        need_one: bool,
        depth: usize,
    ) -> Result<BodyResult, EngineError> {
        let Some(atom) = body.get(idx) else {
            return Ok(BodyResult { solutions: vec![(s, prefix)], failed_prefix: Vec::new() });
        };
        let subgoal = s.apply_atom(atom);
        let result = self.goal(&subgoal, depth + 1)?;
        if result.answers.is_empty() {
            let mut failed_prefix = prefix;
            failed_prefix.extend(result.failure);
            return Ok(BodyResult { solutions: Vec::new(), failed_prefix });
        }
        let mut solutions = Vec::new();
        let mut failed_prefix = Vec::new();
        for answer in result.answers {
            let mut next = s.clone();
            if !next.unify_atoms_in_place(&subgoal, &answer.instance) {
                continue;
            }
            let mut chain = prefix.clone();
            chain.push(answer.node);
            let rest = self.body(body, idx + 1, next, chain, need_one, depth)?;
            if failed_prefix.is_empty() {
                failed_prefix = rest.failed_prefix;
            }
            solutions.extend(rest.solutions);
            if need_one && !solutions.is_empty() {
                break;
            }
        }
        Ok(BodyResult { solutions, failed_prefix })
    }
}

/// Every ground atom that holds, computed bottom-up stratum by stratum.
pub fn holds_all(program: &Program, facts: &FactBase, _cfg: &EngineConfig) -> Result<BTreeSet<Atom>, EngineError> {
    if let Some(rule) = program.rules.iter().find(|r| !r.is_ground()) {
        return Err(EngineError::NonGround { rule: rule.id.clone() });
    }
    if !program.is_ground() {
        return Err(EngineError::NonGround { rule: "exception declaration".into() });
    }
    let strata = stratify(program)?;
    let mut holds: BTreeSet<Atom> = facts.iter().cloned().collect();
    for layer in &strata.strata {
        let rules: Vec<&Rule> = program.rules.iter().filter(|r| layer.contains(&r.head.key())).collect();
        loop {
            let mut changed = false;
            for rule in &rules {
                if holds.contains(&rule.head) || !rule.body.iter().all(|b| holds.contains(b)) {
                    continue;
                }
                let defeated = program
                    .exceptions
                    .iter()
                    .any(|e| e.head == rule.head && holds.contains(&e.exception));
                if !defeated {
                    holds.insert(rule.head.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_atom, parse_facts, parse_program};

    fn prog(src: &str) -> Program {
        parse_program(src).unwrap()
    }

    fn atom(src: &str) -> Atom {
        parse_atom(src).unwrap()
    }

    fn keys(names: &[&str]) -> Vec<PredKey> {
        names.iter().map(|n| PredKey::new(*n, 0)).collect()
    }

    #[test]
    fn stratify_places_exceptions_below() {
        let s = stratify(&prog("p <= q. exception(p, e). e <=.")).unwrap();
        assert_eq!(s.strata, vec![keys(&["e", "q"]), keys(&["p"])]);
    }

    #[test]
    fn stratify_rejects_exception_cycles() {
        let err = stratify(&prog("p <=. exception(p, q). q <=. exception(q, p).")).unwrap_err();
        assert_eq!(err, EngineError::Unstratified { cycle: keys(&["p", "q"]) });
        let err = stratify(&prog("p <= q. q <= r. exception(r, p).")).unwrap_err();
        assert_eq!(err, EngineError::Unstratified { cycle: keys(&["r", "p", "q"]) });
    }

    #[test]
    fn positive_recursion_is_stratified() {
        let s = stratify(&prog("p <= q. q <= p. exception(p, e).")).unwrap();
        assert_eq!(s.level_of(&PredKey::new("e", 0)), Some(0));
        assert_eq!(s.level_of(&PredKey::new("p", 0)), Some(1));
        assert_eq!(s.level_of(&PredKey::new("q", 0)), Some(1));
    }

    #[test]
    fn fact_lookup() {
        let facts = parse_facts("f(a).").unwrap();
        let (outcome, trace) = solve(&Program::new(), &facts, &atom("f(a)"), &EngineConfig::default()).unwrap();
        assert_eq!(outcome, Outcome::Success);
        assert_eq!(trace.via, Some(Via::Fact));
    }

    /// All models of a ground program, enumerated by brute force, filtered
    /// to the one a stratified reading selects.
    fn brute_force_model(atoms: &[&str], program: &Program) -> BTreeSet<String> {
        let strata = stratify(program).unwrap();
        // stratum by stratum: the least set closed under rules whose
        // exceptions (already decided) fail
        let mut decided: BTreeSet<String> = BTreeSet::new();
        for layer in &strata.strata {
            let names: Vec<&str> = atoms.iter().copied().filter(|a| layer.contains(&PredKey::new(*a, 0))).collect();
            let mut best: Option<BTreeSet<String>> = None;
            for mask in 0u32..(1 << names.len()) {
                let mut m = decided.clone();
                for (i, n) in names.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        m.insert(n.to_string());
                    }
                }
                let closed = program.rules.iter().all(|r| {
                    let body = r.body.iter().all(|b| m.contains(&b.predicate));
                    let exc = program
                        .exceptions
                        .iter()
                        .any(|e| e.head == r.head && m.contains(&e.exception.predicate));
                    !body || exc || m.contains(&r.head.predicate)
                });
                if closed && best.as_ref().is_none_or(|b| m.len() < b.len()) {
                    best = Some(m);
                }
            }
            decided = best.unwrap();
        }
        decided
    }

    #[test]
    fn exception_defeats_proven_body() {
        let p = prog("p <= q. q <=. exception(p, e). e <=.");
        let oracle = brute_force_model(&["p", "q", "e"], &p);
        assert_eq!(oracle, ["e", "q"].iter().map(|s| s.to_string()).collect());
        let (outcome, trace) = solve(&p, &FactBase::new(), &atom("p"), &EngineConfig::default()).unwrap();
        assert_eq!(outcome, Outcome::Failure);
        assert!(trace.defeated);
        assert_eq!(trace.children.len(), 2);
        assert_eq!(trace.children[0].0, EdgeKind::Condition);
        assert_eq!(trace.children[1].0, EdgeKind::Exception);
        assert_eq!(trace.children[1].1.outcome, Outcome::Success);
    }

    #[test]
    fn holds_all_examples() {
        let cfg = EngineConfig::default();
        let set = |names: &[&str]| names.iter().map(|n| Atom::prop(*n)).collect::<BTreeSet<_>>();
        assert_eq!(holds_all(&prog("p <= q. q <=."), &FactBase::new(), &cfg).unwrap(), set(&["p", "q"]));
        let p = prog("p <=. exception(p, e). e <=.");
        assert_eq!(holds_all(&p, &FactBase::new(), &cfg).unwrap(), set(&["e"]));
        for goal in ["p", "e"] {
            let (o, _) = solve(&p, &FactBase::new(), &atom(goal), &cfg).unwrap();
            assert_eq!(o.is_success(), goal == "e");
        }
        assert_eq!(holds_all(&prog("p <=. exception(p, e)."), &FactBase::new(), &cfg).unwrap(), set(&["p"]));
    }

    #[test]
    fn holds_all_rejects_variables() {
        let err = holds_all(&prog("p(X) <= q(X)."), &FactBase::new(), &EngineConfig::default()).unwrap_err();
        assert!(matches!(err, EngineError::NonGround { .. }));
    }

    #[test]
    fn self_loop_fails_finitely() {
        let p = prog("p <= p.");
        let (o, trace) = solve(&p, &FactBase::new(), &atom("p"), &EngineConfig::default()).unwrap();
        assert_eq!(o, Outcome::Failure);
        assert_eq!(trace.children[0].1.note.as_deref(), Some("loop check"));
    }

    #[test]
    fn depth_limit_without_loop_check() {
        let p = prog("p <= p.");
        let cfg = EngineConfig { max_depth: 40, loop_check: false, ..Default::default() };
        let err = solve(&p, &FactBase::new(), &atom("p"), &cfg).unwrap_err();
        assert_eq!(err, EngineError::DepthExceeded { goal: atom("p") });
    }

    #[test]
    fn step_limit() {
        let p = prog("p <= a, a, a, a. a <= b. a <= c. b <=. c <=.");
        let cfg = EngineConfig { max_steps: 3, ..Default::default() };
        assert_eq!(
            solve(&p, &FactBase::new(), &atom("p"), &cfg).unwrap_err(),
            EngineError::StepsExceeded { limit: 3 }
        );
    }

    #[test]
    fn variables_and_backtracking() {
        let p = prog(
            "grand(X, Z) <= parent(X, Y), parent(Y, Z).\n\
             ok(X) <= grand(X, Z), adult(Z).",
        );
        let facts = parse_facts("parent(a, b). parent(a, c). parent(c, d). adult(d).").unwrap();
        let cfg = EngineConfig::default();
        assert_eq!(solve(&p, &facts, &atom("ok(a)"), &cfg).unwrap().0, Outcome::Success);
        assert_eq!(solve(&p, &facts, &atom("ok(b)"), &cfg).unwrap().0, Outcome::Failure);
        let (o, trace) = solve(&p, &facts, &atom("grand(a, W)"), &cfg).unwrap();
        assert_eq!(o, Outcome::Success);
        assert_eq!(trace.goal.to_string(), "grand(a, d)");
    }

    #[test]
    fn exception_uses_resolved_instance() {
        let p = prog("basis(P) <= given(P). exception(basis(P), withdrawn(P)).");
        let facts = parse_facts("given(c1). given(c2). withdrawn(c1).").unwrap();
        let cfg = EngineConfig::default();
        assert_eq!(solve(&p, &facts, &atom("basis(c1)"), &cfg).unwrap().0, Outcome::Failure);
        assert_eq!(solve(&p, &facts, &atom("basis(c2)"), &cfg).unwrap().0, Outcome::Success);
        // open query skips the defeated instance
        let (o, trace) = solve(&p, &facts, &atom("basis(X)"), &cfg).unwrap();
        assert_eq!(o, Outcome::Success);
        assert_eq!(trace.goal.to_string(), "basis(c2)");
    }

    #[test]
    fn conclusion_level_defeat_covers_all_rules() {
        let p = prog("p <= a. p <= b. exception(p, e).");
        let facts = parse_facts("a. b. e.").unwrap();
        let (o, trace) = solve(&p, &facts, &atom("p"), &EngineConfig::default()).unwrap();
        assert_eq!(o, Outcome::Failure);
        assert_eq!(trace.note.as_deref(), Some("2 rules attempted"));
        assert!(trace.children.iter().all(|(_, c)| c.defeated));
    }

    #[test]
    fn failed_trace_shows_first_failing_condition() {
        let p = prog("p <= a, b, c.");
        let facts = parse_facts("a.").unwrap();
        let (_, trace) = solve(&p, &facts, &atom("p"), &EngineConfig::default()).unwrap();
        assert_eq!(trace.via, Some(Via::Rule("r1".into())));
        let goals: Vec<String> = trace.children.iter().map(|(_, c)| c.goal.to_string()).collect();
        assert_eq!(goals, vec!["a", "b"]);
        assert_eq!(trace.children[1].1.note.as_deref(), Some("no rule matched"));
    }

    #[test]
    fn solve_propagates_unstratified() {
        let p = prog("p <=. exception(p, q). q <=. exception(q, p).");
        assert!(matches!(
            solve(&p, &FactBase::new(), &atom("p"), &EngineConfig::default()),
            Err(EngineError::Unstratified { .. })
        ));
    }

    #[test]
    fn unstratified_message_lists_cycle() {
        let err = EngineError::Unstratified { cycle: keys(&["p", "q"]) };
        assert_eq!(err.to_string(), "program is not stratified: exception cycle through p/0 -> q/0 -> p/0");
    }
}
