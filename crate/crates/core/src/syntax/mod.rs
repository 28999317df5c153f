//! Instruction-sequence terms: primitive instructions, concatenation and
//! repetition, together with the textual grammar used by program files.
//!
//! Grammar (one program per file, `//` starts a comment line):
//!
//! ```text
//! seq   := item (';' item)*          right-nested concatenation
//! item  := atom ('*' | '^' NAT)*
//! atom  := '(' seq ')' | instr
//! instr := ident | '+' ident | '-' ident | '#' NAT | '!' | '%' NAT | '##' NAT
//! ```
//!
//! `(T)*` is the infinite repetition `T T T ...`, not a Kleene star: a
//! repeated body never "stops repeating". `(T)^n` is sugar for `n` copies
//! of `T` joined by `;` and is expanded at parse time.

mod parse;

use std::fmt;

pub use parse::{parse, parse_instruction, parse_unchecked, ParseError};

/// A basic instruction `focus.method`, or a bare `method` with no focus.
///
/// A bare instruction never matches the focus of a use operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicInstruction {
    focus: Option<String>,
    method: String,
}

impl BasicInstruction {
    pub fn new(focus: impl Into<String>, method: impl Into<String>) -> Self {
        Self {
            focus: Some(focus.into()),
            method: method.into(),
        }
    }

    pub fn bare(method: impl Into<String>) -> Self {
        Self {
            focus: None,
            method: method.into(),
        }
    }

    pub fn focus(&self) -> Option<&str> {
        self.focus.as_deref()
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    /// True when this instruction is a request `f.m` addressed to `focus`.
    pub fn has_focus(&self, focus: &str) -> bool {
        self.focus.as_deref() == Some(focus)
    }
}

impl fmt::Display for BasicInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.focus {
            Some(focus) => write!(f, "{focus}.{}", self.method),
            None => f.write_str(&self.method),
        }
    }
}

impl std::str::FromStr for BasicInstruction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_basic(s).ok_or_else(|| format!("malformed basic instruction `{s}`"))
    }
}

/// Checks the identifier shape `[A-Za-z_][A-Za-z0-9_]*`, optionally followed
/// by `:` and a segment of `[A-Za-z0-9_]+` (so `st:1` and `set:true` are
/// single identifiers).
pub fn is_identifier(s: &str) -> bool {
    let (head, tail) = match s.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (s, None),
    };
    let mut chars = head.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    let tail_ok = tail
        .is_none_or(|t| !t.is_empty() && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    head_ok && tail_ok
}

/// Primitive instructions of both the jump dialect and the label/goto dialect.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    Plain(BasicInstruction),
    PosTest(BasicInstruction),
    NegTest(BasicInstruction),
    /// Forward jump `#l`; `#0` deadlocks.
    Jump(usize),
    Halt,
    /// Label `%l`, skipped on execution.
    Label(usize),
    /// Goto `##l`, continues at the next `%l`.
    Goto(usize),
}

impl Instruction {
    pub fn plain(method: &str) -> Self {
        Instruction::Plain(BasicInstruction::bare(method))
    }

    pub fn basic(&self) -> Option<&BasicInstruction> {
        match self {
            Instruction::Plain(b) | Instruction::PosTest(b) | Instruction::NegTest(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self, Instruction::Jump(_))
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Plain(b) => write!(f, "{b}"),
            Instruction::PosTest(b) => write!(f, "+{b}"),
            Instruction::NegTest(b) => write!(f, "-{b}"),
            Instruction::Jump(l) => write!(f, "#{l}"),
            Instruction::Halt => f.write_str("!"),
            Instruction::Label(l) => write!(f, "%{l}"),
            Instruction::Goto(l) => write!(f, "##{l}"),
        }
    }
}

/// A closed term. Terms are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Single(Instruction),
    Concat(Box<Term>, Box<Term>),
    Repeat(Box<Term>),
}

impl Term {
    pub fn single(u: Instruction) -> Self {
        Term::Single(u)
    }

    pub fn concat(left: Term, right: Term) -> Self {
        Term::Concat(Box::new(left), Box::new(right))
    }

    pub fn repeat(body: Term) -> Self {
        Term::Repeat(Box::new(body))
    }

    /// Right-nested concatenation of a nonempty instruction list.
    pub fn from_instructions<I>(instrs: I) -> Option<Self>
    where
        I: IntoIterator<Item = Instruction>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut iter = instrs.into_iter().rev();
        let last = Term::Single(iter.next()?);
        Some(iter.fold(last, |acc, u| Term::concat(Term::Single(u), acc)))
    }

    /// `prefix ; (period)*`, or just the prefix when there is no period.
    pub fn from_parts(prefix: &[Instruction], period: Option<&[Instruction]>) -> Option<Self> {
        let mut items: Vec<Term> = prefix.iter().cloned().map(Term::Single).collect();
        if let Some(p) = period {
            items.push(Term::repeat(Term::from_instructions(p.iter().cloned())?));
        }
        let mut iter = items.into_iter().rev();
        let last = iter.next()?;
        Some(iter.fold(last, |acc, u| Term::concat(u, acc)))
    }

    /// `t^n`: `n` copies joined right-nested. `n` must be at least 1.
    pub fn power(&self, n: usize) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = Term::concat(self.clone(), acc);
        }
        Some(acc)
    }

    /// Every instruction occurrence in left-to-right order.
    pub fn instructions(&self) -> Vec<&Instruction> {
        let mut out = Vec::new();
        self.collect_instructions(&mut out);
        out
    }

    fn collect_instructions<'a>(&'a self, out: &mut Vec<&'a Instruction>) {
        match self {
            Term::Single(u) => out.push(u),
            Term::Concat(a, b) => {
                a.collect_instructions(out);
                b.collect_instructions(out);
            }
            Term::Repeat(a) => a.collect_instructions(out),
        }
    }

    /// Number of instruction occurrences in the term (not its denotation).
    pub fn size(&self) -> usize {
        match self {
            Term::Single(_) => 1,
            Term::Concat(a, b) => a.size() + b.size(),
            Term::Repeat(a) => a.size(),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Single(u) => write!(f, "{u}"),
            Term::Concat(a, b) => {
                // the parser nests to the right, so a left concat needs a group
                if matches!(**a, Term::Concat(..)) {
                    write!(f, "({a}); {b}")
                } else {
                    write!(f, "{a}; {b}")
                }
            }
            Term::Repeat(a) => write!(f, "({a})*"),
        }
    }
}

/// The instruction sets a term may be drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    /// Jumps, no labels or gotos.
    Pga,
    /// Labels and gotos, no jumps.
    Pgag,
    /// As [`Dialect::Pgag`] with every label index in `1..=k`.
    BoundedPgag(usize),
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialect::Pga => f.write_str("pga"),
            Dialect::Pgag => f.write_str("pgag"),
            Dialect::BoundedPgag(k) => write!(f, "pgag:{k}"),
        }
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pga" => Ok(Dialect::Pga),
            "pgag" => Ok(Dialect::Pgag),
            _ => s
                .strip_prefix("pgag:")
                .and_then(|k| k.parse().ok())
                .map(Dialect::BoundedPgag)
                .ok_or_else(|| format!("unknown dialect `{s}` (expected pga, pgag or pgag:K)")),
        }
    }
}

/// An instruction that is not allowed in a dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index of the occurrence in [`Term::instructions`] order.
    pub index: usize,
    pub instruction: Instruction,
    pub dialect: Dialect,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let why = match (&self.instruction, self.dialect) {
            (Instruction::Jump(_), _) => {
                "jump instructions are not allowed in label/goto dialects".to_string()
            }
            (Instruction::Label(_) | Instruction::Goto(_), Dialect::Pga) => {
                "labels and gotos are not allowed in the jump dialect".to_string()
            }
            (Instruction::Label(l), Dialect::BoundedPgag(k)) => {
                format!("label index {l} outside 1..={k}")
            }
            _ => "not allowed".to_string(),
        };
        write!(
            f,
            "instruction {} `{}` violates {}: {why}",
            self.index, self.instruction, self.dialect
        )
    }
}

/// Lists every instruction occurrence that `dialect` forbids.
///
/// The bounded dialect also rejects `%0`: the bounded projection encodes
/// label `l` at slot `l` of a `k`-wide block, so only `1..=k` is
/// representable. Goto indices are never bounded.
pub fn validate_dialect(term: &Term, dialect: Dialect) -> Vec<Violation> {
    term.instructions()
        .into_iter()
        .enumerate()
        .filter(|(_, u)| !allowed(u, dialect))
        .map(|(index, u)| Violation {
            index,
            instruction: u.clone(),
            dialect,
        })
        .collect()
}

fn allowed(u: &Instruction, dialect: Dialect) -> bool {
    match (u, dialect) {
        (Instruction::Label(_) | Instruction::Goto(_), Dialect::Pga) => false,
        (Instruction::Jump(_), Dialect::Pgag | Dialect::BoundedPgag(_)) => false,
        (Instruction::Label(l), Dialect::BoundedPgag(k)) => (1..=k).contains(l),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Instruction {
        Instruction::plain(s)
    }

    #[test]
    fn identifiers() {
        for ok in ["a", "_x", "st:1", "set:true", "sk", "a1_b"] {
            assert!(is_identifier(ok), "{ok}");
        }
        for bad in ["", "1a", "st:", ":x", "a:b:c", "a-b", "a.b"] {
            assert!(!is_identifier(bad), "{bad}");
        }
    }

    #[test]
    fn render_single_and_repeat() {
        assert_eq!(Term::single(Instruction::Halt).render(), "!");
        assert_eq!(
            Term::repeat(Term::single(Instruction::Jump(1))).render(),
            "(#1)*"
        );
    }

    #[test]
    fn render_left_concat_is_grouped() {
        let t = Term::concat(
            Term::concat(Term::single(p("a")), Term::single(p("b"))),
            Term::single(p("c")),
        );
        assert_eq!(t.render(), "(a; b); c");
    }

    #[test]
    fn dialect_rules() {
        let jump = Term::single(Instruction::Jump(5));
        assert!(validate_dialect(&jump, Dialect::Pga).is_empty());
        assert_eq!(validate_dialect(&jump, Dialect::Pgag).len(), 1);

        let label = Term::single(Instruction::Label(7));
        let v = validate_dialect(&label, Dialect::BoundedPgag(3));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].instruction, Instruction::Label(7));

        let goto = Term::single(Instruction::Goto(9));
        assert!(validate_dialect(&goto, Dialect::BoundedPgag(3)).is_empty());
        assert_eq!(validate_dialect(&goto, Dialect::Pga).len(), 1);
        assert_eq!(
            validate_dialect(
                &Term::single(Instruction::Label(0)),
                Dialect::BoundedPgag(3)
            )
            .len(),
            1
        );
    }

    #[test]
    fn dialect_from_str() {
        assert_eq!("pga".parse::<Dialect>().unwrap(), Dialect::Pga);
        assert_eq!(
            "pgag:4".parse::<Dialect>().unwrap(),
            Dialect::BoundedPgag(4)
        );
        assert!("pgag:x".parse::<Dialect>().is_err());
    }

    #[test]
    fn from_parts_shapes() {
        let t = Term::from_parts(&[p("a")], Some(&[p("b"), p("c")])).unwrap();
        assert_eq!(t.render(), "a; (b; c)*");
        let t = Term::from_parts(&[], Some(&[p("b")])).unwrap();
        assert_eq!(t.render(), "(b)*");
        assert!(Term::from_parts(&[], None).is_none());
    }
}
