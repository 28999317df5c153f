//! Reference semantics that work on the term tree directly, without
//! canonical forms or thread specs. Used to cross-check the real
//! implementation.

use std::collections::HashSet;

use crate::services::{RegisterBank, Reply};
use crate::syntax::{BasicInstruction, Instruction, Term};

/// Length of the sequence a term denotes; `None` when infinite.
pub fn length(term: &Term) -> Option<usize> {
    match term {
        Term::Single(_) => Some(1),
        Term::Concat(a, b) => Some(length(a)? + length(b)?),
        Term::Repeat(_) => None,
    }
}

/// The instruction at 0-based position `i` together with the index of its
/// occurrence in the term (leaves numbered left to right).
pub fn at(term: &Term, i: usize) -> Option<(usize, &Instruction)> {
    fn go(term: &Term, i: usize, base: usize) -> Option<(usize, &Instruction)> {
        match term {
            Term::Single(u) => (i == 0).then_some((base, u)),
            Term::Concat(a, b) => match length(a) {
                Some(len) if i >= len => go(b, i - len, base + a.size()),
                _ => go(a, i, base),
            },
            Term::Repeat(a) => match length(a) {
                Some(len) => go(a, i % len, base),
                None => go(a, i, base),
            },
        }
    }
    go(term, i, 0)
}

/// The first `depth` instructions, fewer if the sequence is shorter.
pub fn unfold(term: &Term, depth: usize) -> Vec<Instruction> {
    (0..depth)
        .map_while(|i| at(term, i).map(|(_, u)| u.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Terminated,
    Deadlocked,
    RepliesExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub actions: Vec<(BasicInstruction, bool)>,
    pub outcome: RunOutcome,
}

/// Executes a jump program instruction by instruction. Actions whose focus
/// is served by `bank` are answered by it; all others take the next reply.
/// Internal loops (a repeated occurrence and register state with no
/// external action in between) deadlock.
pub fn run(term: &Term, bank: &RegisterBank, replies: &[bool]) -> Run {
    let mut states: Vec<usize> = bank.entries().iter().map(|(_, s)| s.initial()).collect();
    let mut replies = replies.iter();
    let mut actions = Vec::new();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    let mut pc = 0;
    let outcome = loop {
        let Some((occurrence, u)) = at(term, pc) else {
            break RunOutcome::Deadlocked;
        };
        if !seen.insert((occurrence, states.clone())) {
            break RunOutcome::Deadlocked;
        }
        let (basic, on_true, on_false) = match u {
            Instruction::Halt => break RunOutcome::Terminated,
            Instruction::Jump(0) => break RunOutcome::Deadlocked,
            Instruction::Jump(l) => {
                pc += l;
                continue;
            }
            Instruction::Plain(a) => (a, 1, 1),
            Instruction::PosTest(a) => (a, 1, 2),
            Instruction::NegTest(a) => (a, 2, 1),
            Instruction::Label(_) | Instruction::Goto(_) => panic!("run expects a jump program"),
        };
        let served = basic
            .focus()
            .and_then(|f| bank.entries().iter().position(|(focus, _)| focus == f));
        let reply = match served {
            Some(i) => {
                let svc = &bank.entries()[i].1;
                let reply = svc.yield_of(basic.method(), states[i]);
                states[i] = svc.effect(basic.method(), states[i]);
                match reply {
                    Reply::True => true,
                    Reply::False => false,
                    Reply::Blocked => break RunOutcome::Deadlocked,
                }
            }
            None => {
                let Some(&reply) = replies.next() else {
                    break RunOutcome::RepliesExhausted;
                };
                actions.push((basic.clone(), reply));
                seen.clear();
                reply
            }
        };
        pc += if reply { on_true } else { on_false };
    };
    Run { actions, outcome }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::services::boolean_register;
    use crate::syntax::{parse, Dialect};

    fn t(s: &str) -> Term {
        parse(s, Dialect::Pga).unwrap()
    }

    fn names(xs: &[Instruction]) -> Vec<String> {
        xs.iter().map(|u| u.to_string()).collect()
    }

    #[test]
    fn unfold_nested() {
        assert_eq!(
            names(&unfold(&t("a; (b; c)*"), 6)),
            ["a", "b", "c", "b", "c", "b"]
        );
        assert_eq!(names(&unfold(&t("(a; (b)*)*; c"), 4)), ["a", "b", "b", "b"]);
        assert_eq!(names(&unfold(&t("a; b"), 6)), ["a", "b"]);
        assert_eq!(
            names(&unfold(&t("((a)^2; b)*"), 5)),
            ["a", "a", "b", "a", "a"]
        );
    }

    #[test]
    fn occurrences_number_leaves() {
        let term = t("a; (b; c)*");
        assert_eq!(at(&term, 3).unwrap().0, 1);
        assert_eq!(at(&term, 4).unwrap().0, 2);
    }

    #[test]
    fn run_tests_and_jumps() {
        let r = run(&t("+a; #2; b; !"), &RegisterBank::default(), &[true]);
        assert_eq!(r.outcome, RunOutcome::Terminated);
        assert_eq!(r.actions.len(), 1);
        let r = run(&t("+a; #2; b; !"), &RegisterBank::default(), &[false, true]);
        assert_eq!(r.outcome, RunOutcome::Terminated);
        assert_eq!(r.actions.len(), 2);
        let r = run(&t("-a; #0; !"), &RegisterBank::default(), &[false]);
        assert_eq!(r.outcome, RunOutcome::Deadlocked);
        assert_eq!(
            run(&t("(#1)*"), &RegisterBank::default(), &[]).outcome,
            RunOutcome::Deadlocked
        );
        assert_eq!(
            run(&t("(a)*"), &RegisterBank::default(), &[true; 3]).outcome,
            RunOutcome::RepliesExhausted
        );
    }

    #[test]
    fn run_with_register() {
        let bank = RegisterBank::new(vec![("f".into(), boolean_register(Reply::False))]).unwrap();
        assert_eq!(
            run(&t("(f.get)*"), &bank, &[]).outcome,
            RunOutcome::Deadlocked
        );
        let r = run(&t("f.set:true; +f.get; a; !"), &bank, &[true]);
        assert_eq!(r.outcome, RunOutcome::Terminated);
        assert_eq!(r.actions.len(), 1);
    }
}
