//! Thread extraction: the behaviour of a jump-dialect instruction sequence.
//!
//! Extraction works on canonical positions. Each position becomes a state;
//! a jump is an alias for the state it lands on. Running off the end of a
//! finite sequence, `#0`, and a jump whose alias chain returns to a position
//! already on the chain all denote deadlock.

use thiserror::Error;

use crate::canonical::{canonicalize, CanonicalSequence};
use crate::syntax::{validate_dialect, Dialect, Instruction, Term, Violation};
use crate::thread::{bisimilar, minimize, Equation, ThreadSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("labels and gotos have no direct behaviour; project the program first ({0})")]
    NotPga(Violation),
}

/// The behaviour of a jump-dialect term as a minimal thread spec.
pub fn extract(term: &Term) -> Result<ThreadSpec, ExtractError> {
    if let Some(v) = validate_dialect(term, Dialect::Pga).into_iter().next() {
        return Err(ExtractError::NotPga(v));
    }
    Ok(extract_canonical(&canonicalize(term)))
}

/// Where control ends up when execution reaches a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Landing {
    At(usize),
    Deadlock,
}

/// Follows jumps from `pos` until a non-jump position is reached.
fn resolve(seq: &CanonicalSequence, pos: Option<usize>) -> Landing {
    let Some(mut pos) = pos else {
        return Landing::Deadlock;
    };
    // every position is visited at most once along a finite chain
    let mut steps = 0;
    loop {
        match seq.at(pos) {
            Instruction::Jump(0) => return Landing::Deadlock,
            Instruction::Jump(l) => {
                steps += 1;
                if steps > seq.positions() {
                    return Landing::Deadlock;
                }
                match seq.advance(pos, *l) {
                    Some(next) => pos = next,
                    None => return Landing::Deadlock,
                }
            }
            _ => return Landing::At(pos),
        }
    }
}

/// Extraction from an already canonical sequence (unminimized states are
/// one per position plus a shared deadlock state).
pub fn extract_canonical(seq: &CanonicalSequence) -> ThreadSpec {
    let deadlock = seq.positions();
    let state = |landing: Landing| match landing {
        Landing::At(p) => p,
        Landing::Deadlock => deadlock,
    };
    let after = |pos: usize, steps: usize| state(resolve(seq, seq.advance(pos, steps)));

    let mut states: Vec<Equation> = (0..seq.positions())
        .map(|pos| match seq.at(pos) {
            Instruction::Plain(a) => Equation::post(a.clone(), after(pos, 1), after(pos, 1)),
            Instruction::PosTest(a) => Equation::post(a.clone(), after(pos, 1), after(pos, 2)),
            Instruction::NegTest(a) => Equation::post(a.clone(), after(pos, 2), after(pos, 1)),
            Instruction::Halt => Equation::Stop,
            // jumps are aliases, patched below
            Instruction::Jump(_) => Equation::Deadlock,
            Instruction::Label(_) | Instruction::Goto(_) => {
                unreachable!("extraction is only defined on the jump dialect")
            }
        })
        .collect();
    states.push(Equation::Deadlock);

    for pos in 0..seq.positions() {
        if seq.at(pos).is_jump() {
            states[pos] = match resolve(seq, Some(pos)) {
                Landing::At(p) => states[p].clone(),
                Landing::Deadlock => Equation::Deadlock,
            };
        }
    }

    let spec = ThreadSpec::new(states, 0).expect("positions are in range");
    minimize(&spec)
}

/// The defining equations of thread extraction, one variant per equation
/// shape, plus the infinite jump chain rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtractionLaw {
    /// `|a| = a o D`
    PlainLast,
    /// `|a ; X| = a o |X|`
    PlainThen,
    /// `|+a| = a o D`
    PosTestLast,
    /// `|+a ; X| = |X| <| a |> |#2 ; X|`
    PosTestThen,
    /// `|-a| = a o D`
    NegTestLast,
    /// `|-a ; X| = |#2 ; X| <| a |> |X|`
    NegTestThen,
    /// `|#l| = D`
    JumpLast,
    /// `|#0 ; X| = D`
    JumpZero,
    /// `|#1 ; X| = |X|`
    JumpOne,
    /// `|#l+2 ; u| = D`
    JumpPastEnd,
    /// `|#l+2 ; u ; X| = |#l+1 ; X|`
    JumpSkip,
    /// `|!| = S`
    HaltLast,
    /// `|! ; X| = S`
    HaltThen,
    /// `|#l ; X| = D` when `#l` starts an infinite jump chain.
    InfiniteJumpChain,
}

impl ExtractionLaw {
    pub const ALL: [ExtractionLaw; 14] = [
        ExtractionLaw::PlainLast,
        ExtractionLaw::PlainThen,
        ExtractionLaw::PosTestLast,
        ExtractionLaw::PosTestThen,
        ExtractionLaw::NegTestLast,
        ExtractionLaw::NegTestThen,
        ExtractionLaw::JumpLast,
        ExtractionLaw::JumpZero,
        ExtractionLaw::JumpOne,
        ExtractionLaw::JumpPastEnd,
        ExtractionLaw::JumpSkip,
        ExtractionLaw::HaltLast,
        ExtractionLaw::HaltThen,
        ExtractionLaw::InfiniteJumpChain,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawCheck {
    pub law: ExtractionLaw,
    pub holds: bool,
}

fn seq_term(prefix: Vec<Instruction>, rest: Option<&CanonicalSequence>) -> CanonicalSequence {
    match rest {
        Some(r) => {
            let mut p = prefix;
            p.extend(r.prefix().iter().cloned());
            CanonicalSequence::new(p, r.period().map(<[Instruction]>::to_vec)).expect("nonempty")
        }
        None => CanonicalSequence::new(prefix, None).expect("nonempty"),
    }
}

/// True when `#l` at the head of `seq` only ever lands on further jumps.
/// Decided by stepping through the unfolded sequence rather than through
/// canonical positions.
fn starts_infinite_jump_chain(seq: &CanonicalSequence) -> bool {
    let bound = seq.positions() + 1;
    let window = seq.unfold((bound + 2) * max_jump(seq).max(1) + 1);
    let mut pos = 0usize;
    for _ in 0..=bound {
        match window.get(pos) {
            Some(Instruction::Jump(l)) if *l > 0 => pos += l,
            _ => return false,
        }
    }
    true
}

fn max_jump(seq: &CanonicalSequence) -> usize {
    (0..seq.positions())
        .filter_map(|p| match seq.at(p) {
            Instruction::Jump(l) => Some(*l),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Checks every extraction law whose left-hand side matches a decomposition
/// of `term`, comparing `extract(lhs)` with the right-hand side assembled
/// from extractions of the subterms.
pub fn check_extraction_laws(term: &Term) -> Result<Vec<LawCheck>, ExtractError> {
    let whole = extract(term)?;
    let seq = canonicalize(term);
    let (head, rest) = seq.split_first();
    let ex = |s: &CanonicalSequence| extract_canonical(s);
    let jump_then =
        |l: usize, rest: &CanonicalSequence| ex(&seq_term(vec![Instruction::Jump(l)], Some(rest)));

    let mut out = Vec::new();
    let mut check = |law, rhs: ThreadSpec| {
        out.push(LawCheck {
            law,
            holds: bisimilar(&whole, &rhs),
        })
    };

    match (&head, &rest) {
        (Instruction::Plain(a), None) => check(
            ExtractionLaw::PlainLast,
            ThreadSpec::prefix(a.clone(), &ThreadSpec::deadlock()),
        ),
        (Instruction::Plain(a), Some(x)) => check(
            ExtractionLaw::PlainThen,
            ThreadSpec::prefix(a.clone(), &ex(x)),
        ),
        (Instruction::PosTest(a), None) => check(
            ExtractionLaw::PosTestLast,
            ThreadSpec::prefix(a.clone(), &ThreadSpec::deadlock()),
        ),
        (Instruction::PosTest(a), Some(x)) => check(
            ExtractionLaw::PosTestThen,
            ThreadSpec::post(a.clone(), &ex(x), &jump_then(2, x)),
        ),
        (Instruction::NegTest(a), None) => check(
            ExtractionLaw::NegTestLast,
            ThreadSpec::prefix(a.clone(), &ThreadSpec::deadlock()),
        ),
        (Instruction::NegTest(a), Some(x)) => check(
            ExtractionLaw::NegTestThen,
            ThreadSpec::post(a.clone(), &jump_then(2, x), &ex(x)),
        ),
        (Instruction::Jump(_), None) => check(ExtractionLaw::JumpLast, ThreadSpec::deadlock()),
        (Instruction::Jump(0), Some(_)) => check(ExtractionLaw::JumpZero, ThreadSpec::deadlock()),
        (Instruction::Jump(1), Some(x)) => check(ExtractionLaw::JumpOne, ex(x)),
        (Instruction::Jump(l), Some(x)) => {
            let (_, after_u) = x.split_first();
            match after_u {
                None => check(ExtractionLaw::JumpPastEnd, ThreadSpec::deadlock()),
                Some(rest_x) => check(ExtractionLaw::JumpSkip, jump_then(l - 1, &rest_x)),
            }
        }
        (Instruction::Halt, None) => check(ExtractionLaw::HaltLast, ThreadSpec::stop()),
        (Instruction::Halt, Some(_)) => check(ExtractionLaw::HaltThen, ThreadSpec::stop()),
        (Instruction::Label(_) | Instruction::Goto(_), _) => unreachable!("checked by extract"),
    }

    if matches!(head, Instruction::Jump(_)) && starts_infinite_jump_chain(&seq) {
        check(ExtractionLaw::InfiniteJumpChain, ThreadSpec::deadlock());
    }
    Ok(out)
}
