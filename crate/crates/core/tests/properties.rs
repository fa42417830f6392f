use proptest::prelude::*;

use proleg::{parse_program, solve, Atom, EngineConfig, FactBase, Outcome, Program, Term, TraceNode};

const PREDS: usize = 6;

fn prop_atom(pred: usize, arg: Option<bool>) -> Atom {
    let args = arg.map(|b| vec![Term::constant(if b { "a" } else { "b" })]).unwrap_or_default();
    Atom::new(format!("p{pred}"), args)
}

fn atom_strategy() -> impl Strategy<Value = Atom> {
    (0..PREDS, any::<bool>()).prop_map(|(p, b)| prop_atom(p, (p % 2 == 1).then_some(b)))
}

/// Ground programs where rules only look at lower-numbered predicates and
/// exceptions at strictly lower ones, so every program is stratified.
fn program_strategy(with_exceptions: bool) -> impl Strategy<Value = Program> {
    let rule = (atom_strategy(), prop::collection::vec(atom_strategy(), 0..3));
    let exc = (atom_strategy(), atom_strategy());
    (prop::collection::vec(rule, 0..12), prop::collection::vec(exc, 0..if with_exceptions { 5 } else { 1 })).prop_map(
        move |(rules, excs)| {
            let index = |a: &Atom| a.predicate[1..].parse::<usize>().unwrap();
            let mut program = Program::new();
            for (head, body) in rules {
                let body = body.into_iter().filter(|b| index(b) <= index(&head)).collect();
                program.push_rule(head, body);
            }
            if with_exceptions {
                for (head, e) in excs {
                    if index(&e) < index(&head) {
                        program.push_exception(head, e);
                    }
                }
            }
            program
        },
    )
}

fn facts_strategy() -> impl Strategy<Value = FactBase> {
    prop::collection::vec(atom_strategy(), 0..8).prop_map(|atoms| {
        let mut facts = FactBase::new();
        atoms.into_iter().for_each(|a| {
            facts.insert(a);
        });
        facts
    })
}

fn all_atoms() -> Vec<Atom> {
    (0..PREDS)
        .flat_map(|p| if p % 2 == 1 { vec![prop_atom(p, Some(true)), prop_atom(p, Some(false))] } else { vec![prop_atom(p, None)] })
        .collect()
}

fn defeated_nodes(trace: &TraceNode) -> Vec<&TraceNode> {
    trace.walk().into_iter().map(|(_, n)| n).filter(|n| n.defeated).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn defeat_is_backed_by_a_provable_exception(program in program_strategy(true), facts in facts_strategy()) {
        let cfg = EngineConfig::default();
        for goal in all_atoms() {
            let (_, trace) = solve(&program, &facts, &goal, &cfg).unwrap();
            for node in defeated_nodes(&trace) {
                let winning: Vec<&Atom> = node
                    .children
                    .iter()
                    .filter(|(k, c)| *k == proleg::EdgeKind::Exception && c.outcome == Outcome::Success)
                    .map(|(_, c)| &c.goal)
                    .collect();
                prop_assert!(!winning.is_empty());
                for e in winning {
                    prop_assert!(program.exceptions.iter().any(|d| d.head == node.goal && &d.exception == e));
                    prop_assert_eq!(solve(&program, &facts, e, &cfg).unwrap().0, Outcome::Success);
                }
            }
        }
    }

    #[test]
    fn more_facts_never_lose_conclusions_without_exceptions(
        program in program_strategy(false),
        facts in facts_strategy(),
        extra in facts_strategy(),
    ) {
        let cfg = EngineConfig::default();
        let mut bigger = facts.clone();
        extra.iter().for_each(|a| { bigger.insert(a.clone()); });
        for goal in all_atoms() {
            if solve(&program, &facts, &goal, &cfg).unwrap().0 == Outcome::Success {
                prop_assert_eq!(solve(&program, &bigger, &goal, &cfg).unwrap().0, Outcome::Success);
            }
        }
    }

    #[test]
    fn solving_is_deterministic(program in program_strategy(true), facts in facts_strategy()) {
        let cfg = EngineConfig::default();
        for goal in all_atoms() {
            prop_assert_eq!(solve(&program, &facts, &goal, &cfg), solve(&program, &facts, &goal, &cfg));
        }
    }

    #[test]
    fn every_broken_statement_is_reported(kinds in prop::collection::vec(0..5usize, 1..10)) {
        let broken = ["p{i} q{i}.", "p{i}(a <= q.", "exception(p{i}).", "P{i} <= q.", "p{i} <= q & r."];
        let mut text = String::new();
        for (i, k) in kinds.iter().enumerate() {
            text.push_str("ok <= fine.\n");
            text.push_str(&broken[*k].replace("{i}", &i.to_string()));
            text.push('\n');
        }
        let errors = parse_program(&text).unwrap_err();
        prop_assert!(errors.len() >= kinds.len(), "{} errors for {} broken statements", errors.len(), kinds.len());
        for e in &errors {
            prop_assert!(e.line % 2 == 0, "error on a valid line: {}", e);
        }
    }
}
