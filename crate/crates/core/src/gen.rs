//! Seeded random programs, threads and normal forms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jumpfree::{NormalForm, NormalFormSpec};
use crate::syntax::{BasicInstruction, Instruction, Term};
use crate::thread::{Equation, ThreadSpec};

pub const ACTIONS: [&str; 4] = ["a", "b", "c", "f.m"];

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn action(&mut self, actions: usize) -> BasicInstruction {
        let name = ACTIONS[self.rng.gen_range(0..actions.clamp(1, ACTIONS.len()))];
        name.parse().expect("fixed action names are valid")
    }

    /// An instruction of the jump dialect with jumps up to `max_jump`.
    pub fn pga_instruction(&mut self, max_jump: usize) -> Instruction {
        match self.rng.gen_range(0..10) {
            0..=2 => Instruction::Plain(self.action(3)),
            3 | 4 => Instruction::PosTest(self.action(3)),
            5 => Instruction::NegTest(self.action(3)),
            6 | 7 => Instruction::Jump(self.rng.gen_range(0..=max_jump)),
            8 => Instruction::Halt,
            _ => Instruction::Jump(self.rng.gen_range(1..=2)),
        }
    }

    /// An instruction of the label dialect, labels in `1..=k` and gotos up
    /// to `k+1`.
    pub fn pgag_instruction(&mut self, k: usize) -> Instruction {
        match self.rng.gen_range(0..10) {
            0..=1 => Instruction::Plain(self.action(3)),
            2 | 3 => Instruction::PosTest(self.action(3)),
            4 => Instruction::NegTest(self.action(3)),
            5 | 6 => Instruction::Label(self.rng.gen_range(1..=k)),
            7 | 8 => Instruction::Goto(self.rng.gen_range(0..=k + 1)),
            _ => Instruction::Halt,
        }
    }

    /// A term with exactly `size` instruction occurrences, built with random
    /// bracketing and repetition.
    pub fn term_with(
        &mut self,
        size: usize,
        leaf: &mut dyn FnMut(&mut Self) -> Instruction,
    ) -> Term {
        assert!(size > 0);
        if size == 1 {
            let u = leaf(self);
            return if self.rng.gen_bool(0.1) {
                Term::repeat(Term::single(u))
            } else {
                Term::single(u)
            };
        }
        if self.rng.gen_bool(0.2) {
            return Term::repeat(self.term_with(size, leaf));
        }
        let split = self.rng.gen_range(1..size);
        let left = self.term_with(split, leaf);
        let right = self.term_with(size - split, leaf);
        Term::concat(left, right)
    }

    pub fn pga_term(&mut self, max_len: usize) -> Term {
        let size = self.rng.gen_range(1..=max_len);
        self.term_with(size, &mut |g| g.pga_instruction(4))
    }

    /// `prefix (period)*` or finite, with flat structure.
    pub fn flat_term(
        &mut self,
        max_len: usize,
        leaf: &mut dyn FnMut(&mut Self) -> Instruction,
    ) -> Term {
        let len = self.rng.gen_range(1..=max_len);
        let instrs: Vec<Instruction> = (0..len).map(|_| leaf(self)).collect();
        if self.rng.gen_bool(0.3) {
            return Term::from_instructions(instrs).expect("nonempty");
        }
        let n = self.rng.gen_range(0..len);
        Term::from_parts(&instrs[..n], Some(&instrs[n..])).expect("nonempty period")
    }

    pub fn bounded_pgag_term(&mut self, max_len: usize, k: usize) -> Term {
        if self.rng.gen_bool(0.5) {
            self.flat_term(max_len, &mut |g| g.pgag_instruction(k))
        } else {
            let size = self.rng.gen_range(1..=max_len);
            self.term_with(size, &mut |g| g.pgag_instruction(k))
        }
    }

    /// A jump program containing a chain of `chain` jumps, each landing
    /// exactly on the next, with random instructions around it.
    pub fn term_with_jump_chain(&mut self, max_len: usize, chain: usize) -> Term {
        let mut segment = Vec::new();
        for i in 0..chain {
            let gap = self.rng.gen_range(0..=2);
            let last = i + 1 == chain;
            segment.push(Instruction::Jump(gap + 1));
            for _ in 0..gap {
                segment.push(Instruction::Plain(self.action(3)));
            }
            if last {
                segment.push(Instruction::Plain(self.action(3)));
            }
        }
        let room = max_len.saturating_sub(segment.len()).max(2);
        let before: Vec<Instruction> = (0..self.rng.gen_range(0..room / 2))
            .map(|_| self.pga_instruction(3))
            .collect();
        let after: Vec<Instruction> = (0..self.rng.gen_range(1..=room / 2))
            .map(|_| self.pga_instruction(3))
            .collect();
        let mut all = before;
        let chain_start = all.len();
        all.extend(segment);
        all.extend(after);
        if self.rng.gen_bool(0.5) {
            Term::from_instructions(all).expect("nonempty")
        } else {
            let n = self.rng.gen_range(0..=chain_start);
            Term::from_parts(&all[..n], Some(&all[n..])).expect("nonempty period")
        }
    }

    pub fn thread_spec(&mut self, max_states: usize, actions: usize) -> ThreadSpec {
        let len = self.rng.gen_range(1..=max_states);
        let states = (0..len)
            .map(|_| match self.rng.gen_range(0..8) {
                0 => Equation::Stop,
                1 => Equation::Deadlock,
                _ => Equation::post(
                    self.action(actions),
                    self.rng.gen_range(0..len),
                    self.rng.gen_range(0..len),
                ),
            })
            .collect();
        ThreadSpec::new(states, 0).expect("indices in range")
    }

    /// A pair of specs that are often, but not always, bisimilar: the
    /// second is a relabelled copy of the first, sometimes perturbed.
    pub fn spec_pair(&mut self, max_states: usize, actions: usize) -> (ThreadSpec, ThreadSpec) {
        let s1 = self.thread_spec(max_states, actions);
        let mut order: Vec<usize> = (0..s1.len()).collect();
        order.shuffle(&mut self.rng);
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let mut states: Vec<Equation> = order
            .iter()
            .map(|&old| match &s1.states()[old] {
                Equation::Post {
                    action,
                    then_state,
                    else_state,
                } => Equation::post(action.clone(), inverse[*then_state], inverse[*else_state]),
                other => other.clone(),
            })
            .collect();
        // duplicate a state so the pair differs in size
        if self.rng.gen_bool(0.5) {
            let victim = self.rng.gen_range(0..states.len());
            states.push(states[victim].clone());
        }
        if self.rng.gen_bool(0.5) {
            let victim = self.rng.gen_range(0..states.len());
            let len = states.len();
            states[victim] = match self.rng.gen_range(0..3) {
                0 => Equation::Stop,
                1 => Equation::Deadlock,
                _ => Equation::post(
                    self.action(actions),
                    self.rng.gen_range(0..len),
                    self.rng.gen_range(0..len),
                ),
            };
        }
        let s2 = ThreadSpec::new(states, inverse[s1.initial()]).expect("indices in range");
        (s1, s2)
    }

    pub fn normal_form(&mut self, max_n: usize, actions: usize) -> NormalForm {
        let n = self.rng.gen_range(1..=max_n);
        let acts = (0..n).map(|_| self.action(actions)).collect();
        let target = |g: &mut Self| {
            // mostly action states, with some stops and deadlocks
            if g.rng.gen_bool(0.8) {
                g.rng.gen_range(1..=n)
            } else {
                g.rng.gen_range(n + 1..=n + 2)
            }
        };
        let left = (0..n).map(|_| target(self)).collect();
        let right = (0..n).map(|_| target(self)).collect();
        NormalForm::Spec(NormalFormSpec::new(acts, left, right).expect("targets in range"))
    }

    pub fn replies(&mut self, len: usize) -> Vec<bool> {
        (0..len).map(|_| self.rng.gen()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goto::metrics;
    use crate::syntax::{validate_dialect, Dialect};

    #[test]
    fn deterministic_for_a_seed() {
        let run = |seed| {
            let mut g = Gen::new(seed);
            (0..5).map(|_| g.pga_term(12).render()).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn generated_terms_are_in_dialect() {
        let mut g = Gen::new(1);
        for _ in 0..100 {
            let t = g.pga_term(24);
            assert!(t.size() <= 24);
            assert!(validate_dialect(&t, Dialect::Pga).is_empty());
            let k = g.rng().gen_range(1..=5);
            let b = g.bounded_pgag_term(20, k);
            assert!(
                validate_dialect(&b, Dialect::BoundedPgag(k)).is_empty(),
                "{b}"
            );
            assert!(metrics(&b).max_label <= k);
        }
    }

    #[test]
    fn jump_chains_are_present() {
        let mut g = Gen::new(2);
        for _ in 0..50 {
            let t = g.term_with_jump_chain(20, 3);
            let us = t.instructions();
            // some jump lands on a jump that lands on a jump
            let found = (0..us.len()).any(|i| {
                let mut p = i;
                for _ in 0..3 {
                    match us.get(p) {
                        Some(Instruction::Jump(l)) if *l > 0 => p += l,
                        _ => return false,
                    }
                }
                true
            });
            assert!(found, "{t}");
        }
    }
}
