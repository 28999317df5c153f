//! Compiling regular threads to jump-free programs over Boolean registers.
//!
//! A thread in normal form has `n` action states `X_1 .. X_n`, each
//! `X_i = X_l(i) <| a_i |> X_r(i)`, plus `X_{n+1} = S` and `X_{n+2} = D`.
//! The compiled program keeps a one-hot encoding of the current state in
//! registers `st:1 .. st:(n+2)` and loops over one block per state. Only the
//! block of the active state performs its action; the registers `rt`/`rf`
//! record the reply, `en` marks the active block, and `sk.set:false` under a
//! positive test is used to skip the next instruction.

use thiserror::Error;

use crate::extraction::extract;
use crate::services::{apply_bank, apply_bank_joint, boolean_register, RegisterBank, Reply};
use crate::syntax::{BasicInstruction, Instruction, Term};
use crate::thread::{bisimilar, minimize, Equation, ThreadSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JumpfreeError {
    #[error("a normal form needs at least one action state")]
    Empty,
    #[error("action, left and right lists differ in length")]
    LengthMismatch,
    #[error("state X{state} targets X{target}, outside 1..={max}")]
    TargetOutOfRange {
        state: usize,
        target: usize,
        max: usize,
    },
    #[error("action `{0}` uses a focus reserved for the state registers")]
    FocusCollision(BasicInstruction),
}

/// `X_i = X_left(i) <| action(i) |> X_right(i)` for `i` in `1..=n`; indices
/// `n+1` and `n+2` are termination and deadlock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormSpec {
    actions: Vec<BasicInstruction>,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl NormalFormSpec {
    pub fn new(
        actions: Vec<BasicInstruction>,
        left: Vec<usize>,
        right: Vec<usize>,
    ) -> Result<Self, JumpfreeError> {
        let n = actions.len();
        if n == 0 {
            return Err(JumpfreeError::Empty);
        }
        if left.len() != n || right.len() != n {
            return Err(JumpfreeError::LengthMismatch);
        }
        for (i, &target) in left.iter().chain(right.iter()).enumerate() {
            if !(1..=n + 2).contains(&target) {
                return Err(JumpfreeError::TargetOutOfRange {
                    state: i % n + 1,
                    target,
                    max: n + 2,
                });
            }
        }
        Ok(Self {
            actions,
            left,
            right,
        })
    }

    pub fn n(&self) -> usize {
        self.actions.len()
    }

    /// `a_i`, 1-based.
    pub fn action(&self, i: usize) -> &BasicInstruction {
        &self.actions[i - 1]
    }

    pub fn left(&self, i: usize) -> usize {
        self.left[i - 1]
    }

    pub fn right(&self, i: usize) -> usize {
        self.right[i - 1]
    }

    pub fn stop_index(&self) -> usize {
        self.n() + 1
    }

    pub fn deadlock_index(&self) -> usize {
        self.n() + 2
    }
}

/// Normal forms of regular threads. Plain termination and plain deadlock
/// have no action state to start from and get their own variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalForm {
    Spec(NormalFormSpec),
    DeadlockOnly,
    StopOnly,
}

pub fn to_normal_form(spec: &ThreadSpec) -> NormalForm {
    let min = minimize(spec);
    match &min.states()[min.initial()] {
        Equation::Stop => return NormalForm::StopOnly,
        Equation::Deadlock => return NormalForm::DeadlockOnly,
        Equation::Post { .. } => {}
    }

    // minimized specs start at 0, and state 0 is a Post here
    let posts: Vec<usize> = (0..min.len())
        .filter(|&s| matches!(min.states()[s], Equation::Post { .. }))
        .collect();
    let n = posts.len();
    let mut index = vec![0; min.len()];
    for (k, &s) in posts.iter().enumerate() {
        index[s] = k + 1;
    }
    for (s, eq) in min.states().iter().enumerate() {
        match eq {
            Equation::Stop => index[s] = n + 1,
            Equation::Deadlock => index[s] = n + 2,
            Equation::Post { .. } => {}
        }
    }

    let mut actions = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for &s in &posts {
        if let Equation::Post {
            action,
            then_state,
            else_state,
        } = &min.states()[s]
        {
            actions.push(action.clone());
            left.push(index[*then_state]);
            right.push(index[*else_state]);
        }
    }
    NormalForm::Spec(
        NormalFormSpec::new(actions, left, right).expect("indices come from a valid spec"),
    )
}

/// The thread `X_1` denotes, as a spec with states `X_1 .. X_{n+2}` at
/// indices `0 .. n+1`.
pub fn solution(nf: &NormalForm) -> ThreadSpec {
    match nf {
        NormalForm::DeadlockOnly => ThreadSpec::deadlock(),
        NormalForm::StopOnly => ThreadSpec::stop(),
        NormalForm::Spec(nf) => {
            let mut states: Vec<Equation> = (1..=nf.n())
                .map(|i| Equation::post(nf.action(i).clone(), nf.left(i) - 1, nf.right(i) - 1))
                .collect();
            states.push(Equation::Stop);
            states.push(Equation::Deadlock);
            ThreadSpec::new(states, 0).expect("normal form indices are in range")
        }
    }
}

pub fn state_focus(j: usize) -> String {
    format!("st:{j}")
}

pub const REPLY_TRUE_FOCUS: &str = "rt";
pub const REPLY_FALSE_FOCUS: &str = "rf";
pub const ENABLE_FOCUS: &str = "en";
pub const SKIP_FOCUS: &str = "sk";

/// `st:1 .. st:(n+2), rt, rf, en, sk`.
pub fn register_foci(n: usize) -> Vec<String> {
    (1..=n + 2)
        .map(state_focus)
        .chain(
            [
                REPLY_TRUE_FOCUS,
                REPLY_FALSE_FOCUS,
                ENABLE_FOCUS,
                SKIP_FOCUS,
            ]
            .map(String::from),
        )
        .collect()
}

/// The `n + 6` registers, all initially false, in application order.
pub fn register_bank(n: usize) -> RegisterBank {
    one_hot_bank(n, None)
}

/// As [`register_bank`] but with `st:j` initially true.
pub fn one_hot_bank(n: usize, j: Option<usize>) -> RegisterBank {
    let entries = register_foci(n)
        .into_iter()
        .enumerate()
        .map(|(k, focus)| {
            let initial = if Some(k + 1) == j {
                Reply::True
            } else {
                Reply::False
            };
            (focus, boolean_register(initial))
        })
        .collect();
    RegisterBank::new(entries).expect("register foci are distinct")
}

fn call(focus: &str, method: &str) -> Instruction {
    Instruction::Plain(BasicInstruction::new(focus, method))
}

fn test(focus: &str, method: &str) -> Instruction {
    Instruction::PosTest(BasicInstruction::new(focus, method))
}

/// The 19-instruction block for action state `i`.
pub fn state_block(nf: &NormalFormSpec, i: usize) -> Vec<Instruction> {
    let st = state_focus(i);
    let (rt, rf, en, sk) = (
        REPLY_TRUE_FOCUS,
        REPLY_FALSE_FOCUS,
        ENABLE_FOCUS,
        SKIP_FOCUS,
    );
    vec![
        test(&st, "get"),
        call(en, "set:true"),
        test(&st, "get"),
        call(&st, "set:false"),
        test(en, "get"),
        Instruction::NegTest(nf.action(i).clone()),
        test(sk, "set:false"),
        call(rt, "set:true"),
        test(en, "get"),
        test(rt, "get"),
        test(sk, "set:false"),
        call(rf, "set:true"),
        test(rt, "get"),
        call(&state_focus(nf.left(i)), "set:true"),
        test(rf, "get"),
        call(&state_focus(nf.right(i)), "set:true"),
        call(rt, "set:false"),
        call(rf, "set:false"),
        call(en, "set:false"),
    ]
}

/// The termination block: `+st:(n+1).get; !`.
pub fn stop_block(nf: &NormalFormSpec) -> Vec<Instruction> {
    vec![
        test(&state_focus(nf.stop_index()), "get"),
        Instruction::Halt,
    ]
}

/// One pass over all blocks, `Q_1 .. Q_{n+1}`.
fn loop_body(nf: &NormalFormSpec) -> Vec<Instruction> {
    let mut body: Vec<Instruction> = (1..=nf.n()).flat_map(|i| state_block(nf, i)).collect();
    body.extend(stop_block(nf));
    body
}

/// `Q_i ; ... ; Q_{n+1} ; (Q_1 ; ... ; Q_{n+1})*`, the program from the
/// start of block `i` onwards, for `i` in `1..=n+1`.
pub fn suffix_program(nf: &NormalFormSpec, i: usize) -> Term {
    let body = loop_body(nf);
    let start = 19 * (i - 1);
    Term::from_parts(&body[start..], Some(&body)).expect("loop body is nonempty")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileResult {
    pub program: Term,
    pub bank: RegisterBank,
}

pub fn compile(nf: &NormalForm) -> CompileResult {
    match nf {
        NormalForm::DeadlockOnly => CompileResult {
            program: Term::repeat(Term::single(call(SKIP_FOCUS, "get"))),
            bank: RegisterBank::new(vec![(
                SKIP_FOCUS.to_string(),
                boolean_register(Reply::False),
            )])
            .expect("single focus"),
        },
        NormalForm::StopOnly => CompileResult {
            program: Term::single(Instruction::Halt),
            bank: RegisterBank::default(),
        },
        NormalForm::Spec(nf) => {
            let body = loop_body(nf);
            let program = Term::from_parts(&[call(&state_focus(1), "set:true")], Some(&body))
                .expect("loop body is nonempty");
            CompileResult {
                program,
                bank: register_bank(nf.n()),
            }
        }
    }
}

/// Rejects normal forms whose actions address one of the registers.
pub fn check_foci(nf: &NormalForm) -> Result<(), JumpfreeError> {
    let NormalForm::Spec(nf) = nf else {
        return Ok(());
    };
    let reserved = register_foci(nf.n());
    for i in 1..=nf.n() {
        let a = nf.action(i);
        if a.focus().is_some_and(|f| reserved.iter().any(|r| r == f)) {
            return Err(JumpfreeError::FocusCollision(a.clone()));
        }
    }
    Ok(())
}

/// The behaviour of a compiled program with its registers applied.
pub fn compiled_behaviour(compiled: &CompileResult) -> ThreadSpec {
    let program = extract(&compiled.program).expect("compiled programs use the jump dialect");
    apply_bank(&program, &compiled.bank)
}

/// Compiles `nf`, runs the program against its registers and checks the
/// result is the thread `nf` specifies.
pub fn verify_compilation(nf: &NormalForm) -> Result<bool, JumpfreeError> {
    check_foci(nf)?;
    let compiled = compile(nf);
    Ok(bisimilar(&solution(nf), &compiled_behaviour(&compiled)))
}

/// True when no reachable state of the joint program/register product has
/// two `st:j` registers holding true.
pub fn one_hot_discipline_holds(nf: &NormalForm) -> bool {
    let compiled = compile(nf);
    let NormalForm::Spec(spec) = nf else {
        return true;
    };
    let program = extract(&compiled.program).expect("compiled programs use the jump dialect");
    let (_, visited) = apply_bank_joint(&program, &compiled.bank);
    let true_state = compiled.bank.entries()[0]
        .1
        .state_names()
        .iter()
        .position(|s| s == "T")
        .expect("Boolean registers have a T state");
    let state_registers = spec.n() + 2;
    visited.iter().all(|(_, regs)| {
        regs[..state_registers]
            .iter()
            .filter(|&&r| r == true_state)
            .count()
            <= 1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{validate_dialect, Dialect};
    use crate::thread::projections_agree;

    fn b(s: &str) -> BasicInstruction {
        s.parse().unwrap()
    }

    fn nf(actions: &[&str], left: &[usize], right: &[usize]) -> NormalForm {
        NormalForm::Spec(
            NormalFormSpec::new(
                actions.iter().map(|a| b(a)).collect(),
                left.to_vec(),
                right.to_vec(),
            )
            .unwrap(),
        )
    }

    fn spec(s: &str) -> ThreadSpec {
        s.parse().unwrap()
    }

    #[test]
    fn normal_form_of_deadlock_and_stop() {
        assert_eq!(to_normal_form(&spec("X0 = D")), NormalForm::DeadlockOnly);
        assert_eq!(to_normal_form(&spec("X0 = S")), NormalForm::StopOnly);
        // unreachable actions do not matter
        assert_eq!(
            to_normal_form(&spec("X0 = D\nX1 = a ? X0 : X0")),
            NormalForm::DeadlockOnly
        );
    }

    #[test]
    fn normal_form_relabels() {
        assert_eq!(
            to_normal_form(&spec("X0 = a ? X1 : X2\nX1 = S\nX2 = D")),
            nf(&["a"], &[2], &[3])
        );
        // a loop that never stops: no Stop state, indices still n+1/n+2
        assert_eq!(
            to_normal_form(&spec("X0 = a ? X0 : X1\nX1 = D")),
            nf(&["a"], &[1], &[3])
        );
    }

    #[test]
    fn normal_form_solution_is_bisimilar() {
        let s = spec("X0 = a ? X1 : X2\nX1 = b ? X0 : X3\nX2 = S\nX3 = a ? X3 : X2");
        assert!(bisimilar(&solution(&to_normal_form(&s)), &s));
    }

    #[test]
    fn normal_form_rejects_bad_indices() {
        assert_eq!(
            NormalFormSpec::new(vec![], vec![], vec![]),
            Err(JumpfreeError::Empty)
        );
        assert_eq!(
            NormalFormSpec::new(vec![b("a")], vec![4], vec![1]),
            Err(JumpfreeError::TargetOutOfRange {
                state: 1,
                target: 4,
                max: 3
            })
        );
        assert_eq!(
            NormalFormSpec::new(vec![b("a")], vec![1, 2], vec![1]),
            Err(JumpfreeError::LengthMismatch)
        );
    }

    #[test]
    fn deadlock_compiles_to_skip_loop() {
        let c = compile(&NormalForm::DeadlockOnly);
        assert_eq!(c.program.render(), "(sk.get)*");
        assert_eq!(c.bank.foci().collect::<Vec<_>>(), ["sk"]);
        assert_eq!(verify_compilation(&NormalForm::DeadlockOnly), Ok(true));
    }

    #[test]
    fn stop_compiles_to_halt() {
        let c = compile(&NormalForm::StopOnly);
        assert_eq!(c.program.render(), "!");
        assert!(c.bank.is_empty());
        assert_eq!(verify_compilation(&NormalForm::StopOnly), Ok(true));
    }

    #[test]
    fn single_state_program_shape() {
        let n1 = nf(&["a"], &[2], &[3]);
        let c = compile(&n1);
        assert!(c.program.render().starts_with("st:1.set:true; "));
        assert_eq!(c.program.size(), 1 + 19 + 2);
        assert!(c.program.instructions().iter().all(|u| !u.is_jump()));
        assert!(validate_dialect(&c.program, Dialect::Pga).is_empty());
        assert_eq!(
            c.bank.foci().collect::<Vec<_>>(),
            ["st:1", "st:2", "st:3", "rt", "rf", "en", "sk"]
        );
    }

    #[test]
    fn block_text() {
        let NormalForm::Spec(n1) = nf(&["f.m"], &[2], &[3]) else {
            unreachable!()
        };
        let text: Vec<String> = state_block(&n1, 1).iter().map(|u| u.to_string()).collect();
        assert_eq!(
            text.join("; "),
            "+st:1.get; en.set:true; +st:1.get; st:1.set:false; +en.get; -f.m; +sk.set:false; \
             rt.set:true; +en.get; +rt.get; +sk.set:false; rf.set:true; +rt.get; st:2.set:true; \
             +rf.get; st:3.set:true; rt.set:false; rf.set:false; en.set:false"
        );
    }

    #[test]
    fn verify_small_cases() {
        assert_eq!(verify_compilation(&nf(&["a"], &[2], &[3])), Ok(true));
        let cycle = nf(&["a", "b"], &[2, 1], &[1, 4]);
        assert_eq!(verify_compilation(&cycle), Ok(true));
        // depth oracle agrees
        let compiled = compiled_behaviour(&compile(&cycle));
        let sol = solution(&cycle);
        let depth = sol.len() * compiled.len() + 1;
        assert!(projections_agree(&sol, &compiled, depth));
    }

    #[test]
    fn register_focus_collision_rejected() {
        assert_eq!(
            verify_compilation(&nf(&["st:1.get"], &[2], &[3])),
            Err(JumpfreeError::FocusCollision(b("st:1.get")))
        );
        assert!(verify_compilation(&nf(&["st:9.get"], &[2], &[3])).is_ok());
    }

    #[test]
    fn one_hot_registers() {
        assert!(one_hot_discipline_holds(&nf(&["a", "b"], &[2, 1], &[1, 4])));
        assert!(one_hot_discipline_holds(&nf(
            &["a", "b", "a"],
            &[3, 3, 4],
            &[2, 5, 1]
        )));
    }

    /// The step properties behind the construction: with one-hot register
    /// `j`, the program suffix from block `i` behaves as follows.
    mod step_properties {
        use super::*;

        fn wrapped(nf: &NormalFormSpec, i: usize, j: usize) -> ThreadSpec {
            let p = extract(&suffix_program(nf, i)).unwrap();
            apply_bank(&p, &one_hot_bank(nf.n(), Some(j)))
        }

        fn sample() -> NormalFormSpec {
            let NormalForm::Spec(s) = nf(&["a", "b", "f.c"], &[2, 4, 1], &[5, 3, 3]) else {
                unreachable!()
            };
            s
        }

        #[test]
        fn inactive_blocks_pass_control_on() {
            let s = sample();
            for i in 1..=s.n() {
                for j in (1..=s.n() + 1).filter(|&j| j != i) {
                    assert!(
                        bisimilar(&wrapped(&s, i, j), &wrapped(&s, i + 1, j)),
                        "i={i} j={j}"
                    );
                }
            }
        }

        #[test]
        fn last_block_wraps_around() {
            let s = sample();
            let i = s.n() + 1;
            for j in 1..=s.n() {
                assert!(bisimilar(&wrapped(&s, i, j), &wrapped(&s, 1, j)), "j={j}");
            }
        }

        #[test]
        fn active_block_performs_its_action() {
            let s = sample();
            for i in 1..=s.n() {
                let expected = ThreadSpec::post(
                    s.action(i).clone(),
                    &wrapped(&s, i + 1, s.left(i)),
                    &wrapped(&s, i + 1, s.right(i)),
                );
                assert!(bisimilar(&wrapped(&s, i, i), &expected), "i={i}");
            }
        }

        #[test]
        fn termination_register_stops() {
            let s = sample();
            let i = s.n() + 1;
            assert_eq!(wrapped(&s, i, i), ThreadSpec::stop());
        }

        #[test]
        fn deadlock_register_deadlocks() {
            let s = sample();
            for i in 1..=s.n() + 1 {
                assert_eq!(wrapped(&s, i, s.n() + 2), ThreadSpec::deadlock(), "i={i}");
            }
        }
    }
}
