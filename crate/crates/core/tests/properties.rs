use proptest::prelude::*;

use pga::canonical::{canonicalize, seq_equal};
use pga::extraction::extract;
use pga::goto::{collapse_jump_chains, metrics, project_bounded, project_unbounded};
use pga::jumpfree::{solution, to_normal_form};
use pga::oracle::{self, RunOutcome};
use pga::services::{apply_bank, apply_bank_fold, boolean_register, RegisterBank, Reply};
use pga::syntax::{parse, validate_dialect, BasicInstruction, Dialect, Instruction, Term};
use pga::thread::{
    bisimilar, minimize, projection_depth_bound, projections_agree, simulate, Equation, Outcome,
    ThreadSpec,
};

fn action() -> impl Strategy<Value = BasicInstruction> {
    prop_oneof![
        Just("a"),
        Just("b"),
        Just("f.get"),
        Just("f.set:true"),
        Just("g.m")
    ]
    .prop_map(|s| s.parse().unwrap())
}

fn pga_instruction() -> impl Strategy<Value = Instruction> {
    prop_oneof![
        3 => action().prop_map(Instruction::Plain),
        2 => action().prop_map(Instruction::PosTest),
        1 => action().prop_map(Instruction::NegTest),
        3 => (0usize..5).prop_map(Instruction::Jump),
        1 => Just(Instruction::Halt),
    ]
}

fn pgag_instruction(k: usize) -> impl Strategy<Value = Instruction> {
    prop_oneof![
        2 => action().prop_map(Instruction::Plain),
        2 => action().prop_map(Instruction::PosTest),
        1 => action().prop_map(Instruction::NegTest),
        2 => (1..=k).prop_map(Instruction::Label),
        2 => (0..=k + 1).prop_map(Instruction::Goto),
        1 => Just(Instruction::Halt),
    ]
}

fn term_of(leaf: BoxedStrategy<Instruction>) -> impl Strategy<Value = Term> {
    leaf.prop_map(Term::single)
        .prop_recursive(5, 24, 2, |inner| {
            prop_oneof![
                3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::concat(a, b)),
                1 => inner.prop_map(Term::repeat),
            ]
        })
}

fn pga_term() -> impl Strategy<Value = Term> {
    term_of(pga_instruction().boxed())
}

fn thread_spec() -> impl Strategy<Value = ThreadSpec> {
    (1usize..7).prop_flat_map(|n| {
        let eq = prop_oneof![
            1 => Just(Equation::Stop),
            1 => Just(Equation::Deadlock),
            4 => (action(), 0..n, 0..n).prop_map(|(a, t, e)| Equation::post(a, t, e)),
        ];
        (proptest::collection::vec(eq, n), 0..n)
            .prop_map(|(states, init)| ThreadSpec::new(states, init).unwrap())
    })
}

fn same_run(run: &oracle::Run, trace: &pga::thread::Trace) -> bool {
    let outcome = match trace.outcome {
        Outcome::Terminated => RunOutcome::Terminated,
        Outcome::Deadlocked => RunOutcome::Deadlocked,
        Outcome::RepliesExhausted(_) => RunOutcome::RepliesExhausted,
    };
    run.actions == trace.actions && run.outcome == outcome
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_parse_round_trip(t in pga_term()) {
        let back = parse(&t.render(), Dialect::Pga).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn canonical_form_is_idempotent(t in pga_term()) {
        let c = canonicalize(&t);
        prop_assert_eq!(canonicalize(&c.to_term()), c);
    }

    #[test]
    fn canonical_form_unfolds_like_the_term(t in pga_term()) {
        prop_assert_eq!(canonicalize(&t).unfold(64), oracle::unfold(&t, 64));
    }

    #[test]
    fn equal_sequences_behave_alike(t in pga_term(), u in pga_term()) {
        let joined = Term::concat(t.clone(), u);
        let rebuilt = canonicalize(&joined).to_term();
        prop_assert!(seq_equal(&joined, &rebuilt));
        prop_assert!(bisimilar(&extract(&joined).unwrap(), &extract(&rebuilt).unwrap()));
    }

    #[test]
    fn extraction_matches_direct_execution(t in pga_term(), replies in proptest::collection::vec(any::<bool>(), 0..10)) {
        let spec = extract(&t).unwrap();
        let run = oracle::run(&t, &RegisterBank::default(), &replies);
        prop_assert!(same_run(&run, &simulate(&spec, &replies)), "{}", t);
    }

    #[test]
    fn registers_match_direct_execution(t in pga_term(), replies in proptest::collection::vec(any::<bool>(), 0..10), init in prop_oneof![Just(Reply::True), Just(Reply::False)]) {
        let bank = RegisterBank::new(vec![("f".into(), boolean_register(init))]).unwrap();
        let used = apply_bank(&extract(&t).unwrap(), &bank);
        prop_assert!(same_run(&oracle::run(&t, &bank, &replies), &simulate(&used, &replies)), "{}", t);
    }

    #[test]
    fn joint_and_nested_use_agree(s in thread_spec(), f in any::<bool>(), g in any::<bool>()) {
        let reply = |b: bool| if b { Reply::True } else { Reply::False };
        let bank = RegisterBank::new(vec![
            ("f".into(), boolean_register(reply(f))),
            ("g".into(), boolean_register(reply(g))),
        ]).unwrap();
        prop_assert!(bisimilar(&apply_bank(&s, &bank), &apply_bank_fold(&s, &bank)));
    }

    #[test]
    fn minimize_keeps_behaviour(s in thread_spec()) {
        let m = minimize(&s);
        prop_assert!(bisimilar(&s, &m));
        prop_assert_eq!(minimize(&m), m.clone());
        prop_assert!(m.len() <= s.len() + 1);
    }

    #[test]
    fn bisimilarity_matches_projections(s1 in thread_spec(), s2 in thread_spec()) {
        let depth = projection_depth_bound(&s1, &s2);
        prop_assert_eq!(bisimilar(&s1, &s2), projections_agree(&s1, &s2, depth));
    }

    #[test]
    fn spec_text_round_trip(s in thread_spec()) {
        let back: ThreadSpec = s.to_string().parse().unwrap();
        prop_assert!(bisimilar(&back, &s));
        prop_assert_eq!(back.len(), s.len());
    }

    #[test]
    fn normal_form_solution_is_the_thread(s in thread_spec()) {
        prop_assert!(bisimilar(&solution(&to_normal_form(&s)), &s));
    }

    #[test]
    fn collapse_keeps_behaviour(t in pga_term()) {
        let c = collapse_jump_chains(&t);
        prop_assert!(bisimilar(&extract(&t).unwrap(), &extract(&c).unwrap()), "{} -> {}", t, c);
    }

    #[test]
    fn projections_agree_on_bounded_terms(
        (k, t) in (1usize..=5).prop_flat_map(|k| (Just(k), term_of(pgag_instruction(k).boxed())))
    ) {
        let unbounded = project_unbounded(&t);
        let bounded = project_bounded(&t, k);
        prop_assert!(validate_dialect(&unbounded, Dialect::Pga).is_empty());
        prop_assert!(validate_dialect(&bounded, Dialect::Pga).is_empty());
        prop_assert!(metrics(&bounded).max_jump <= k + 3);
        prop_assert!(bisimilar(&extract(&unbounded).unwrap(), &extract(&bounded).unwrap()), "{} k={}", t, k);
    }
}
