//! Label/goto programs and their projections to jump programs.
//!
//! A program with `%l` labels and `##l` gotos means whatever its projection
//! to plain jumps means. [`project_unbounded`] replaces each goto by a
//! forward jump to just past the next matching label; [`project_bounded`]
//! works for programs using at most `k` labels and only needs jumps up to
//! `#(k+3)`, by expanding every instruction into a block of `k+3` that
//! carries a "looking for label l" signal forward through its jumps.

use crate::canonical::{flatten, Flattened};
use crate::syntax::{Instruction, Term};

/// `u_1 .. u_n (u_{n+1} .. u_m)*`, with finite programs extended by
/// `(##1)*` so that running off the end deadlocks.
fn layout(term: &Term) -> Flattened {
    let mut flat = flatten(term);
    if flat.period.is_none() {
        flat.period = Some(vec![Instruction::Goto(1)]);
    }
    flat
}

/// Distance from 1-based position `j` to the first `%l` at or after it,
/// counting `u_j` itself as 1 and wrapping through the repeated part; 0 when
/// `%l` is not reachable.
pub fn tgt(flat: &Flattened, j: usize, l: usize) -> usize {
    let n = flat.prefix.len();
    let all = flat.instructions();
    let m = all.len();
    assert!((1..=m).contains(&j), "position {j} outside 1..={m}");
    let wrap = flat.period.as_ref().map(|_| n + 1..=m);
    let scan = (j..=m).chain(wrap.into_iter().flatten());
    scan.enumerate()
        .find(|&(_, p)| all[p - 1] == Instruction::Label(l))
        .map_or(0, |(i, _)| i + 1)
}

fn phi(flat: &Flattened, j: usize, u: &Instruction) -> Instruction {
    match u {
        Instruction::Label(_) => Instruction::Jump(1),
        Instruction::Goto(l) => Instruction::Jump(tgt(flat, j, *l)),
        other => other.clone(),
    }
}

/// Projects a label/goto program to a jump program, instruction for
/// instruction.
pub fn project_unbounded(term: &Term) -> Term {
    let flat = layout(term);
    let n = flat.prefix.len();
    let period = flat.period.as_deref().expect("layout always repeats");
    let prefix: Vec<Instruction> = flat
        .prefix
        .iter()
        .enumerate()
        .map(|(i, u)| phi(&flat, i + 1, u))
        .collect();
    let repeated: Vec<Instruction> = period
        .iter()
        .enumerate()
        .map(|(i, u)| phi(&flat, n + i + 1, u))
        .collect();
    Term::from_parts(&prefix, Some(&repeated)).expect("repeated part is nonempty")
}

/// First instruction of a block: the instruction itself, with gotos aimed at
/// slot `l` of the next block's label signal. `##0` has no label to find
/// (labels start at 1) and deadlocks like a goto past `k`.
pub fn psi_head(u: &Instruction, k: usize) -> Instruction {
    match u {
        Instruction::Label(_) => Instruction::Jump(1),
        Instruction::Goto(l) if (1..=k).contains(l) => Instruction::Jump(l + 2),
        Instruction::Goto(_) => Instruction::Jump(0),
        other => other.clone(),
    }
}

/// The `k` signal slots describing the instruction that follows: slot `l`
/// of a `%l` jumps back to that label's block, every other slot passes the
/// signal to the same slot of the next block.
pub fn psi_tail(u: &Instruction, k: usize) -> Vec<Instruction> {
    let pass = Instruction::Jump(k + 3);
    match u {
        Instruction::Label(l) => {
            assert!((1..=k).contains(l), "label %{l} outside 1..={k}");
            let mut slots = vec![pass; k];
            slots[l - 1] = Instruction::Jump(k - l + 1);
            slots
        }
        _ => vec![pass; k],
    }
}

/// The `k+3` instruction block for `u` followed by `next`.
pub fn psi(u: &Instruction, next: &Instruction, k: usize) -> Vec<Instruction> {
    let mut block = vec![
        psi_head(u, k),
        Instruction::Jump(k + 2),
        Instruction::Jump(k + 2),
    ];
    block.extend(psi_tail(next, k));
    block
}

/// Projects a program whose labels are all in `1..=k`, using jumps of at
/// most `k+3`. Position `i` of the source maps to `(k+3)(i-1)+1`.
pub fn project_bounded(term: &Term, k: usize) -> Term {
    let flat = layout(term);
    let period = flat.period.as_deref().expect("layout always repeats");
    let all = flat.instructions();
    let n = flat.prefix.len();
    let m = all.len();
    let successor = |j: usize| if j + 1 < m { &all[j + 1] } else { &all[n] };
    let prefix: Vec<Instruction> = (0..n).flat_map(|j| psi(&all[j], successor(j), k)).collect();
    let repeated: Vec<Instruction> = (n..m).flat_map(|j| psi(&all[j], successor(j), k)).collect();
    debug_assert_eq!(repeated.len(), period.len() * (k + 3));
    Term::from_parts(&prefix, Some(&repeated)).expect("repeated part is nonempty")
}

/// Position reached `steps` instructions after 0-based `pos`, wrapping in
/// the repeated part; `None` past the end of a finite program.
fn advance(flat: &Flattened, pos: usize, steps: usize) -> Option<usize> {
    let n = flat.prefix.len();
    let m = flat.len();
    let target = pos + steps;
    if target < m {
        return Some(target);
    }
    flat.period.as_ref()?;
    Some(n + (target - n) % (m - n))
}

/// True when the jumps starting at `pos` eventually reach a non-jump, the
/// end, or `#0`.
fn chain_ends(all: &[Instruction], flat: &Flattened, mut pos: usize) -> bool {
    for _ in 0..=all.len() {
        match all[pos] {
            Instruction::Jump(0) => return true,
            Instruction::Jump(l) => match advance(flat, pos, l) {
                Some(next) => pos = next,
                None => return true,
            },
            _ => return true,
        }
    }
    false
}

/// Shortens jump chains: a jump `#l` landing on a jump `#m` (`m > 0`)
/// becomes `#(l+m)`. Jump cycles are left alone.
pub fn collapse_jump_chains(term: &Term) -> Term {
    let flat = flatten(term);
    let mut all = flat.instructions();
    let max_jump = all
        .iter()
        .filter_map(|u| match u {
            Instruction::Jump(l) => Some(*l),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let fuel = all.len() * max_jump + 1;
    for _ in 0..fuel {
        let mut changed = false;
        for pos in 0..all.len() {
            let Instruction::Jump(l) = all[pos] else {
                continue;
            };
            if l == 0 {
                continue;
            }
            let Some(q) = advance(&flat, pos, l) else {
                continue;
            };
            let Instruction::Jump(m) = all[q] else {
                continue;
            };
            if m == 0 || !chain_ends(&all, &flat, pos) {
                continue;
            }
            all[pos] = Instruction::Jump(l + m);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let n = flat.prefix.len();
    let period = flat.period.as_ref().map(|_| &all[n..]);
    Term::from_parts(&all[..n], period).expect("flattened terms are nonempty")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub max_label: usize,
    pub max_jump: usize,
    pub max_goto: usize,
    /// Instruction occurrences in the term as written.
    pub size: usize,
    pub prefix_len: usize,
    /// 0 for finite programs.
    pub period_len: usize,
}

pub fn metrics(term: &Term) -> Metrics {
    let flat = flatten(term);
    let mut out = Metrics {
        size: term.size(),
        prefix_len: flat.prefix.len(),
        period_len: flat.period.as_ref().map_or(0, Vec::len),
        ..Metrics::default()
    };
    for u in term.instructions() {
        match u {
            Instruction::Label(l) => out.max_label = out.max_label.max(*l),
            Instruction::Jump(l) => out.max_jump = out.max_jump.max(*l),
            Instruction::Goto(l) => out.max_goto = out.max_goto.max(*l),
            _ => {}
        }
    }
    out
}
