//! The reproduction suite: seven randomized checks of the core results,
//! each with a minimum case count and a time budget.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::canonical::{canonicalize, seq_equal};
use crate::extraction::{check_extraction_laws, extract, ExtractionLaw};
use crate::gen::Gen;
use crate::goto::{collapse_jump_chains, metrics, project_bounded, project_unbounded};
use crate::jumpfree::{
    compile, one_hot_discipline_holds, solution, verify_compilation, NormalForm,
};
use crate::oracle::{self, RunOutcome};
use crate::services::{
    apply_bank, apply_use, boolean_register, check_use_law, RegisterBank, Reply, ServiceTable,
    UseLaw,
};
use crate::syntax::{parse, validate_dialect, BasicInstruction, Dialect, Instruction, Term};
use crate::thread::{
    bisimilar, first_projection_difference, projection_depth_bound, projections_agree, simulate,
    Outcome, ThreadSpec,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub cases: usize,
    pub required: usize,
    /// First failing case, if any.
    pub failure: Option<String>,
    pub elapsed: Duration,
    pub budget: Duration,
    /// Extra counts worth printing, e.g. law coverage.
    pub note: String,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.cases >= self.required && self.elapsed < self.budget
    }

    /// One line: verdict, name, counts and timing.
    pub fn summary(&self) -> String {
        let mut line = format!(
            "[{}] {}. {}: {} cases (need {}), {:.2?} (budget {:?})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.cases,
            self.required,
            self.elapsed,
            self.budget
        );
        if !self.note.is_empty() {
            line.push_str("; ");
            line.push_str(&self.note);
        }
        if let Some(f) = &self.failure {
            line.push_str("; first failure: ");
            line.push_str(f);
        }
        if self.elapsed >= self.budget {
            line.push_str("; over time budget");
        }
        line
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub seed: u64,
    /// Raises every criterion's case count; never below its minimum.
    pub cases: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 2024,
            cases: None,
        }
    }
}

impl Config {
    fn cases(&self, required: usize) -> usize {
        self.cases.map_or(required, |c| c.max(required))
    }

    fn gen(&self, id: usize) -> Gen {
        Gen::new(
            self.seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(id as u64),
        )
    }
}

struct Check {
    failure: Option<String>,
    note: String,
}

impl Check {
    fn new() -> Self {
        Self {
            failure: None,
            note: String::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }
}

fn timed(
    id: usize,
    name: &'static str,
    required: usize,
    budget: Duration,
    body: impl FnOnce(&mut Check) -> usize,
) -> CriterionResult {
    let start = Instant::now();
    let mut check = Check::new();
    let cases = body(&mut check);
    CriterionResult {
        id,
        name,
        cases,
        required,
        failure: check.failure,
        elapsed: start.elapsed(),
        budget,
        note: check.note,
    }
}

fn pga(text: &str) -> Term {
    parse(text, Dialect::Pga).expect("fixed terms parse")
}

pub fn extraction_laws(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 500;
    timed(
        1,
        "extraction equations",
        REQUIRED,
        Duration::from_secs(5),
        |check| {
            let mut gen = cfg.gen(1);
            // one instance of every equation shape, then random terms
            let fixed = [
                "a",
                "a; b",
                "+a",
                "+a; !",
                "-a",
                "-a; b",
                "#4",
                "#0; a",
                "#1; a",
                "#3; b",
                "#3; b; !",
                "!",
                "!; a",
                "(#1)*",
                "#2; (#2; x)*",
                "#1; (#2; #3)*",
                "a; (#2)*",
            ];
            let mut terms: Vec<Term> = fixed.iter().map(|s| pga(s)).collect();
            let n = cfg.cases(REQUIRED);
            while terms.len() < n {
                terms.push(gen.pga_term(24));
            }
            let mut seen = BTreeSet::new();
            for t in &terms {
                let checks = check_extraction_laws(t).expect("generated terms are jump programs");
                for c in checks {
                    seen.insert(c.law);
                    check.require(c.holds, || format!("{:?} on `{t}`", c.law));
                }
            }
            let missing: Vec<_> = ExtractionLaw::ALL
                .iter()
                .filter(|l| !seen.contains(l))
                .collect();
            check.require(missing.is_empty(), || {
                format!("laws never exercised: {missing:?}")
            });
            check.note = format!(
                "{}/{} equations exercised",
                seen.len(),
                ExtractionLaw::ALL.len()
            );
            terms.len()
        },
    )
}

pub fn sequence_axioms(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 500;
    const DEPTH: usize = 64;
    timed(
        2,
        "instruction sequence axioms",
        REQUIRED,
        Duration::from_secs(5),
        |check| {
            let mut gen = cfg.gen(2);
            let agree = |a: &Term, b: &Term| oracle::unfold(a, DEPTH) == oracle::unfold(b, DEPTH);
            let n = cfg.cases(REQUIRED);
            for _ in 0..n {
                let x = gen.pga_term(8);
                let y = gen.pga_term(8);
                let z = gen.pga_term(8);
                let power = gen.rng().gen_range(1..=4);

                for t in [&x, &y, &z] {
                    check.require(
                        canonicalize(t).unfold(DEPTH) == oracle::unfold(t, DEPTH),
                        || format!("canonical form of `{t}` unfolds differently"),
                    );
                }
                let cases = [
                    (
                        "associativity",
                        Term::concat(Term::concat(x.clone(), y.clone()), z.clone()),
                        Term::concat(x.clone(), Term::concat(y.clone(), z.clone())),
                    ),
                    (
                        "power under repetition",
                        Term::repeat(x.power(power).expect("power >= 1")),
                        Term::repeat(x.clone()),
                    ),
                    (
                        "repetition absorbs tail",
                        Term::concat(Term::repeat(x.clone()), y.clone()),
                        Term::repeat(x.clone()),
                    ),
                    (
                        "rotation",
                        Term::concat(x.clone(), Term::repeat(Term::concat(y.clone(), x.clone()))),
                        Term::repeat(Term::concat(x.clone(), y.clone())),
                    ),
                ];
                for (axiom, lhs, rhs) in cases {
                    check.require(seq_equal(&lhs, &rhs), || {
                        format!("{axiom}: `{lhs}` vs `{rhs}`")
                    });
                    check.require(agree(&lhs, &rhs), || {
                        format!("{axiom}: oracle disagrees on `{lhs}` vs `{rhs}`")
                    });
                }

                // small two-letter terms collide often; equality must match
                // the oracle both ways
                let mut leaf =
                    |g: &mut Gen| Instruction::plain(if g.rng().gen_bool(0.5) { "a" } else { "b" });
                let sa = gen.rng().gen_range(1..=6);
                let sb = gen.rng().gen_range(1..=6);
                let a = gen.term_with(sa, &mut leaf);
                let b = gen.term_with(sb, &mut leaf);
                check.require(seq_equal(&a, &b) == agree(&a, &b), || {
                    format!("equality of `{a}` and `{b}`")
                });
            }
            n
        },
    )
}

const USE_ACTIONS: [&str; 7] = [
    "f.get",
    "f.set:true",
    "f.set:false",
    "f.nope",
    "g.get",
    "a",
    "b",
];

fn use_spec(gen: &mut Gen, max_states: usize) -> ThreadSpec {
    use crate::thread::Equation;
    let len = gen.rng().gen_range(1..=max_states);
    let states = (0..len)
        .map(|_| match gen.rng().gen_range(0..10) {
            0 => Equation::Stop,
            1 => Equation::Deadlock,
            _ => {
                let a: BasicInstruction = USE_ACTIONS[gen.rng().gen_range(0..USE_ACTIONS.len())]
                    .parse()
                    .expect("valid");
                Equation::post(a, gen.rng().gen_range(0..len), gen.rng().gen_range(0..len))
            }
        })
        .collect();
    ThreadSpec::new(states, 0).expect("indices in range")
}

fn random_register(gen: &mut Gen) -> ServiceTable {
    match gen.rng().gen_range(0..5) {
        0 => boolean_register(Reply::Blocked),
        1 | 2 => boolean_register(Reply::True),
        _ => boolean_register(Reply::False),
    }
}

fn runs_agree(run: &oracle::Run, trace: &crate::thread::Trace) -> bool {
    let outcome = match trace.outcome {
        Outcome::Terminated => RunOutcome::Terminated,
        Outcome::Deadlocked => RunOutcome::Deadlocked,
        Outcome::RepliesExhausted(_) => RunOutcome::RepliesExhausted,
    };
    run.actions == trace.actions && run.outcome == outcome
}

pub fn use_laws(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 500;
    timed(
        3,
        "use operator laws",
        REQUIRED,
        Duration::from_secs(2),
        |check| {
            let mut gen = cfg.gen(3);
            let mut seen = BTreeSet::new();

            let looping = extract(&pga("(f.get)*")).expect("jump program");
            check.require(
                apply_use(&looping, "f", &boolean_register(Reply::False)) == ThreadSpec::deadlock(),
                || "(f.get)* with a false register does not deadlock".into(),
            );

            let n = cfg.cases(REQUIRED);
            for _ in 0..n {
                let spec = use_spec(&mut gen, 5);
                let svc = random_register(&mut gen);
                let (law, holds) = check_use_law(&spec, "f", &svc);
                seen.insert(law);
                check.require(holds, || format!("{law:?} on\n{spec}"));

                // an action-free reachable part with no Stop must deadlock
                let focus_only = spec.actions().iter().all(|a| a.has_focus("f"));
                let used = apply_use(&spec, "f", &svc);
                if focus_only {
                    check.require(used.actions().is_empty(), || {
                        format!("focus-only spec kept actions:\n{spec}")
                    });
                }

                // a focus that does not occur changes nothing
                check.require(bisimilar(&apply_use(&spec, "h", &svc), &spec), || {
                    format!("unused focus changed\n{spec}")
                });

                // run programs against the registers directly
                let size = gen.rng().gen_range(1..=12);
                let term = gen.term_with(size, &mut |g: &mut Gen| {
                    let a: BasicInstruction = USE_ACTIONS[g.rng().gen_range(0..USE_ACTIONS.len())]
                        .parse()
                        .expect("valid");
                    match g.rng().gen_range(0..8) {
                        0 => Instruction::Halt,
                        1 => Instruction::Jump(g.rng().gen_range(0..3)),
                        2 | 3 => Instruction::PosTest(a),
                        4 => Instruction::NegTest(a),
                        _ => Instruction::Plain(a),
                    }
                });
                let bank = RegisterBank::new(vec![
                    ("f".into(), svc),
                    ("g".into(), random_register(&mut gen)),
                ])
                .expect("distinct foci");
                let replies = gen.replies(8);
                let used = apply_bank(&extract(&term).expect("jump program"), &bank);
                check.require(
                    runs_agree(
                        &oracle::run(&term, &bank, &replies),
                        &simulate(&used, &replies),
                    ),
                    || format!("direct run of `{term}` disagrees"),
                );
            }
            let all = [
                UseLaw::Stop,
                UseLaw::Deadlock,
                UseLaw::OtherFocus,
                UseLaw::ReplyTrue,
                UseLaw::ReplyFalse,
                UseLaw::ReplyBlocked,
            ];
            check.require(seen.len() == all.len(), || {
                format!("laws exercised: {seen:?}")
            });
            check.note = format!("{}/{} laws exercised", seen.len(), all.len());
            n
        },
    )
}

pub fn jump_free_compilation(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 200;
    const ORACLE_SAMPLES: usize = 20;
    timed(
        4,
        "jump-free compilation",
        REQUIRED,
        Duration::from_secs(60),
        |check| {
            let mut gen = cfg.gen(4);
            let n = cfg.cases(REQUIRED);
            let mut forms = vec![NormalForm::DeadlockOnly, NormalForm::StopOnly];
            while forms.len() < n + 2 {
                forms.push(gen.normal_form(8, 4));
            }
            let mut sampled = 0;
            for (i, nf) in forms.iter().enumerate() {
                let compiled = compile(nf);
                let jumps = compiled
                    .program
                    .instructions()
                    .iter()
                    .filter(|u| u.is_jump())
                    .count();
                check.require(jumps == 0, || {
                    format!("{jumps} jumps in `{}`", compiled.program)
                });
                check.require(verify_compilation(nf) == Ok(true), || {
                    format!("compiled behaviour differs for {nf:?}")
                });

                // every 10th case: depth oracle, register discipline and a
                // direct run
                if i % 10 == 0 || i < 2 {
                    sampled += 1;
                    let program = extract(&compiled.program).expect("jump program");
                    let behaviour = apply_bank(&program, &compiled.bank);
                    let sol = solution(nf);
                    let depth = projection_depth_bound(&sol, &behaviour);
                    check.require(projections_agree(&sol, &behaviour, depth), || {
                        format!("projections differ for {nf:?}")
                    });
                    check.require(one_hot_discipline_holds(nf), || {
                        format!("two state registers true for {nf:?}")
                    });
                    let replies = gen.replies(12);
                    check.require(
                        runs_agree(
                            &oracle::run(&compiled.program, &compiled.bank, &replies),
                            &simulate(&sol, &replies),
                        ),
                        || format!("direct run differs for {nf:?}"),
                    );
                }
            }
            check.require(sampled >= ORACLE_SAMPLES, || {
                format!("only {sampled} oracle samples")
            });
            check.note = format!("{sampled} cases confirmed by the projection oracle");
            forms.len() - 2
        },
    )
}

pub fn label_projections(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 200;
    timed(
        5,
        "bounded label projection",
        REQUIRED,
        Duration::from_secs(60),
        |check| {
            let mut gen = cfg.gen(5);
            let n = cfg.cases(REQUIRED);
            let mut worst = 0;
            for _ in 0..n {
                let k = gen.rng().gen_range(1..=5);
                let term = gen.bounded_pgag_term(20, k);
                let unbounded = project_unbounded(&term);
                let bounded = project_bounded(&term, k);
                for t in [&unbounded, &bounded] {
                    check.require(validate_dialect(t, Dialect::Pga).is_empty(), || {
                        format!("`{t}` is not a jump program")
                    });
                }
                let (Ok(a), Ok(b)) = (extract(&unbounded), extract(&bounded)) else {
                    continue;
                };
                check.require(bisimilar(&a, &b), || {
                    format!("projections of `{term}` (k = {k}) differ")
                });
                let max_jump = metrics(&bounded).max_jump;
                worst = worst.max(max_jump as isize - (k as isize + 3));
                check.require(max_jump <= k + 3, || {
                    format!("jump #{max_jump} > k+3 for `{term}` (k = {k})")
                });
            }
            check.note = format!("max jump minus (k+3) at most {worst}");
            n
        },
    )
}

pub fn jump_chain_collapse(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 200;
    timed(
        6,
        "jump chain collapse",
        REQUIRED,
        Duration::from_secs(10),
        |check| {
            let mut gen = cfg.gen(6);
            let n = cfg.cases(REQUIRED);
            for _ in 0..n {
                let chain = gen.rng().gen_range(3..=5);
                let term = gen.term_with_jump_chain(24, chain);
                let collapsed = collapse_jump_chains(&term);
                let (Ok(before), Ok(after)) = (extract(&term), extract(&collapsed)) else {
                    check.require(false, || format!("`{term}` is not a jump program"));
                    continue;
                };
                check.require(bisimilar(&before, &after), || {
                    format!("`{term}` became `{collapsed}`")
                });
            }
            n
        },
    )
}

pub fn approximation_induction(cfg: &Config) -> CriterionResult {
    const REQUIRED: usize = 200;
    timed(
        7,
        "projection approximation",
        REQUIRED,
        Duration::from_secs(10),
        |check| {
            let mut gen = cfg.gen(7);
            let n = cfg.cases(REQUIRED);
            let mut equal = 0;
            for _ in 0..n {
                let (s1, s2) = gen.spec_pair(6, 3);
                let bisim = bisimilar(&s1, &s2);
                let depth = projection_depth_bound(&s1, &s2);
                let proj = projections_agree(&s1, &s2, depth);
                equal += bisim as usize;
                check.require(bisim == proj, || {
                    format!("bisimilar = {bisim}, projections agree = {proj}\n{s1}\n--\n{s2}")
                });
                check.require(
                    bisim == first_projection_difference(&s1, &s2, depth).is_none(),
                    || format!("first difference inconsistent\n{s1}\n--\n{s2}"),
                );
            }
            check.require(equal > 0 && equal < n, || {
                format!("{equal} of {n} pairs bisimilar; both outcomes needed")
            });
            check.note = format!("{equal} bisimilar, {} not", n - equal);
            n
        },
    )
}

pub fn run_all(cfg: &Config) -> Vec<CriterionResult> {
    vec![
        extraction_laws(cfg),
        sequence_axioms(cfg),
        use_laws(cfg),
        jump_free_compilation(cfg),
        label_projections(cfg),
        jump_chain_collapse(cfg),
        approximation_induction(cfg),
    ]
}
