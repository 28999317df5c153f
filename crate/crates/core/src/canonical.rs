//! First canonical form of instruction sequences.
//!
//! Every closed term denotes either a finite sequence or an eventually
//! periodic infinite one, i.e. a finite prefix followed by a repeated
//! period. [`canonicalize`] picks a unique representative: the period is
//! primitive (not a power of a shorter word) and the prefix is as short as
//! possible (no trailing prefix instruction can be absorbed by rotating the
//! period backwards). Two terms denote the same sequence iff their canonical
//! forms are equal.

use std::fmt;

use crate::syntax::{Instruction, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSequence {
    prefix: Vec<Instruction>,
    period: Option<Vec<Instruction>>,
}

/// A term flattened to `u_1 ... u_n (u_{n+1} ... u_m)*` without any
/// normalization: instructions keep their term positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flattened {
    pub prefix: Vec<Instruction>,
    pub period: Option<Vec<Instruction>>,
}

impl Flattened {
    pub fn len(&self) -> usize {
        self.prefix.len() + self.period.as_ref().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All instructions, prefix then one copy of the period.
    pub fn instructions(&self) -> Vec<Instruction> {
        let mut all = self.prefix.clone();
        if let Some(p) = &self.period {
            all.extend(p.iter().cloned());
        }
        all
    }

    pub fn to_term(&self) -> Term {
        Term::from_parts(&self.prefix, self.period.as_deref())
            .expect("flattened terms are nonempty")
    }
}

/// Flattens a term using only the repetition laws: whatever follows an
/// infinite sequence is dropped and a repeated infinite body is the body.
pub fn flatten(term: &Term) -> Flattened {
    match term {
        Term::Single(u) => Flattened {
            prefix: vec![u.clone()],
            period: None,
        },
        Term::Concat(a, b) => {
            let left = flatten(a);
            if left.period.is_some() {
                return left;
            }
            let right = flatten(b);
            let mut prefix = left.prefix;
            prefix.extend(right.prefix);
            Flattened {
                prefix,
                period: right.period,
            }
        }
        Term::Repeat(a) => {
            let body = flatten(a);
            if body.period.is_some() {
                body
            } else {
                Flattened {
                    prefix: Vec::new(),
                    period: Some(body.prefix),
                }
            }
        }
    }
}

pub fn canonicalize(term: &Term) -> CanonicalSequence {
    let Flattened { prefix, period } = flatten(term);
    CanonicalSequence::normalize(prefix, period)
}

/// True iff both terms denote the same instruction sequence.
pub fn seq_equal(t1: &Term, t2: &Term) -> bool {
    canonicalize(t1) == canonicalize(t2)
}

/// Length of the shortest word whose repetition yields `word`.
fn primitive_root_len(word: &[Instruction]) -> usize {
    let n = word.len();
    (1..=n)
        .filter(|&d| n.is_multiple_of(d))
        .find(|&d| (d..n).all(|i| word[i] == word[i - d]))
        .unwrap_or(n)
}

impl CanonicalSequence {
    /// Builds the canonical representative of `prefix (period)*`.
    ///
    /// Returns `None` for the empty sequence or an empty period.
    pub fn new(prefix: Vec<Instruction>, period: Option<Vec<Instruction>>) -> Option<Self> {
        match &period {
            Some(p) if p.is_empty() => None,
            None if prefix.is_empty() => None,
            _ => Some(Self::normalize(prefix, period)),
        }
    }

    fn normalize(mut prefix: Vec<Instruction>, period: Option<Vec<Instruction>>) -> Self {
        let Some(mut period) = period else {
            return Self {
                prefix,
                period: None,
            };
        };
        let root = primitive_root_len(&period);
        period.truncate(root);
        while let (Some(last), Some(p_last)) = (prefix.last(), period.last()) {
            if last != p_last {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        Self {
            prefix,
            period: Some(period),
        }
    }

    pub fn prefix(&self) -> &[Instruction] {
        &self.prefix
    }

    pub fn period(&self) -> Option<&[Instruction]> {
        self.period.as_deref()
    }

    pub fn is_finite(&self) -> bool {
        self.period.is_none()
    }

    /// Number of distinct positions: prefix plus one period.
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.period.as_ref().map_or(0, Vec::len)
    }

    /// Instruction at `pos` in `0..positions()`.
    pub fn at(&self, pos: usize) -> &Instruction {
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.period.as_ref().expect("position in range")[pos - self.prefix.len()]
        }
    }

    /// The position reached by moving `steps` instructions forward from
    /// `pos`, wrapping inside the period; `None` when a finite sequence ends.
    pub fn advance(&self, pos: usize, steps: usize) -> Option<usize> {
        let target = pos + steps;
        let total = self.positions();
        if target < total {
            return Some(target);
        }
        let period_len = self.period.as_ref()?.len();
        let start = self.prefix.len();
        Some(start + (target - start) % period_len)
    }

    pub fn unfold(&self, n: usize) -> Vec<Instruction> {
        let mut out: Vec<Instruction> = self.prefix.iter().take(n).cloned().collect();
        if let Some(period) = &self.period {
            out.extend(period.iter().cycle().take(n - out.len()).cloned());
        }
        out
    }

    pub fn to_term(&self) -> Term {
        Term::from_parts(&self.prefix, self.period.as_deref())
            .expect("canonical sequences are nonempty")
    }

    /// Splits off the first instruction; the rest is `None` when the
    /// sequence has length one.
    pub fn split_first(&self) -> (Instruction, Option<CanonicalSequence>) {
        let first = self.at(0).clone();
        let rest = match (&self.prefix[..], &self.period) {
            ([], Some(period)) => {
                let mut rotated = period.clone();
                rotated.rotate_left(1);
                Some(Self::normalize(Vec::new(), Some(rotated)))
            }
            ([_], None) => None,
            ([_, tail @ ..], period) => Some(Self::normalize(tail.to_vec(), period.clone())),
            ([], None) => unreachable!("canonical sequences are nonempty"),
        };
        (first, rest)
    }
}

impl fmt::Display for CanonicalSequence {
    /// `prefix || (period)*`, or just the prefix for finite sequences.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[Instruction]| {
            xs.iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        };
        match &self.period {
            None => f.write_str(&join(&self.prefix)),
            Some(p) if self.prefix.is_empty() => write!(f, "|| ({})*", join(p)),
            Some(p) => write!(f, "{} || ({})*", join(&self.prefix), join(p)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, Dialect};

    fn t(s: &str) -> Term {
        parse(s, Dialect::Pga).unwrap()
    }

    fn names(xs: &[Instruction]) -> Vec<String> {
        xs.iter().map(|u| u.to_string()).collect()
    }

    #[test]
    fn power_under_repetition_collapses() {
        let c = canonicalize(&t("((a; b)^2)*"));
        assert!(c.prefix().is_empty());
        assert_eq!(names(c.period().unwrap()), ["a", "b"]);
    }

    #[test]
    fn repetition_swallows_tail() {
        let c = canonicalize(&t("(a)*; b"));
        assert!(c.prefix().is_empty());
        assert_eq!(names(c.period().unwrap()), ["a"]);
    }

    #[test]
    fn prefix_absorbed_by_rotation() {
        let c = canonicalize(&t("a; (b; a)*"));
        assert!(c.prefix().is_empty());
        assert_eq!(names(c.period().unwrap()), ["a", "b"]);
    }

    #[test]
    fn seq_equal_cases() {
        assert!(seq_equal(&t("(a; b)*"), &t("a; b; (a; b)*")));
        assert!(seq_equal(&t("(x)*"), &t("x; (x)*")));
        assert!(!seq_equal(&t("!"), &t("#1; !")));
        assert!(!seq_equal(&t("(a; b)*"), &t("(b; a)*")));
        assert!(seq_equal(&t("(a; b)*"), &t("a; (b; a)*")));
    }

    #[test]
    fn nested_repetition() {
        let c = canonicalize(&t("(a; (b)*)*"));
        assert_eq!(names(c.prefix()), ["a"]);
        assert_eq!(names(c.period().unwrap()), ["b"]);
    }

    #[test]
    fn unfold_examples() {
        let c = CanonicalSequence::new(
            vec![Instruction::plain("a")],
            Some(vec![Instruction::plain("b")]),
        )
        .unwrap();
        assert_eq!(names(&c.unfold(4)), ["a", "b", "b", "b"]);
        let c =
            CanonicalSequence::new(vec![Instruction::plain("a"), Instruction::plain("b")], None)
                .unwrap();
        assert_eq!(names(&c.unfold(5)), ["a", "b"]);
        assert_eq!(
            names(&canonicalize(&t("(a; b)*")).unfold(5)),
            ["a", "b", "a", "b", "a"]
        );
    }

    #[test]
    fn advance_wraps_in_period() {
        let c = canonicalize(&t("x; (a; b; c)*"));
        assert_eq!(c.advance(0, 1), Some(1));
        assert_eq!(c.advance(3, 1), Some(1));
        assert_eq!(c.advance(2, 7), Some(3));
        let finite = canonicalize(&t("a; b"));
        assert_eq!(finite.advance(1, 1), None);
    }

    #[test]
    fn split_first_rotates_period() {
        let c = canonicalize(&t("(a; b)*"));
        let (u, rest) = c.split_first();
        assert_eq!(u, Instruction::plain("a"));
        assert_eq!(rest.unwrap(), canonicalize(&t("(b; a)*")));
        let (_, rest) = canonicalize(&t("!")).split_first();
        assert!(rest.is_none());
    }

    #[test]
    fn display_form() {
        assert_eq!(canonicalize(&t("x; (a; b)*")).to_string(), "x || (a; b)*");
        assert_eq!(canonicalize(&t("(a)*")).to_string(), "|| (a)*");
        assert_eq!(canonicalize(&t("a; !")).to_string(), "a; !");
    }

    #[test]
    fn empty_rejected() {
        assert!(CanonicalSequence::new(vec![], None).is_none());
        assert!(CanonicalSequence::new(vec![Instruction::Halt], Some(vec![])).is_none());
    }
}
