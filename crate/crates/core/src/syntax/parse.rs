use thiserror::Error;

use super::{
    is_identifier, validate_dialect, BasicInstruction, Dialect, Instruction, Term, Violation,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Dialect(Vec<Violation>),
}

/// Parses a program and checks it against `dialect`.
pub fn parse(text: &str, dialect: Dialect) -> Result<Term, ParseError> {
    let term = parse_unchecked(text)?;
    let violations = validate_dialect(&term, dialect);
    if violations.is_empty() {
        Ok(term)
    } else {
        Err(ParseError::Dialect(violations))
    }
}

/// Parses a program without any dialect restriction.
pub fn parse_unchecked(text: &str) -> Result<Term, ParseError> {
    let mut parser = Parser::new(text);
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.error("empty program"));
    }
    let term = parser.seq()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error("unexpected input after program"));
    }
    Ok(term)
}

/// Parses exactly one primitive instruction, e.g. `+st:1.get` or `##3`.
pub fn parse_instruction(text: &str) -> Result<Instruction, ParseError> {
    let mut parser = Parser::new(text);
    parser.skip_ws();
    let u = parser.instruction()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error("unexpected input after instruction"));
    }
    Ok(u)
}

/// Parses `focus.method` or a bare `method`.
pub(crate) fn parse_basic(text: &str) -> Option<BasicInstruction> {
    match text.split_once('.') {
        Some((f, m)) if is_identifier(f) && is_identifier(m) => Some(BasicInstruction::new(f, m)),
        None if is_identifier(text) => Some(BasicInstruction::bare(text)),
        _ => None,
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before
            .rfind('\n')
            .map_or(before.len(), |i| before.len() - i - 1)
            + 1;
        ParseError::Syntax {
            offset: self.pos,
            line,
            column,
            message: message.into(),
        }
    }

    /// Skips whitespace and `//` comments (to end of line).
    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'/') if self.bytes.get(self.pos + 1) == Some(&b'/') => {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn seq(&mut self) -> Result<Term, ParseError> {
        let mut items = vec![self.item()?];
        while self.eat(b';') {
            items.push(self.item()?);
        }
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("at least one item");
        Ok(iter.fold(last, |acc, t| Term::concat(t, acc)))
    }

    fn item(&mut self) -> Result<Term, ParseError> {
        let mut term = self.atom()?;
        loop {
            if self.eat(b'*') {
                term = Term::repeat(term);
            } else if self.eat(b'^') {
                self.skip_ws();
                let n = self.natural()?;
                term = term
                    .power(n)
                    .ok_or_else(|| self.error("power exponent must be at least 1"))?;
            } else {
                return Ok(term);
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        if self.eat(b'(') {
            let inner = self.seq()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            Ok(inner)
        } else {
            self.skip_ws();
            Ok(Term::Single(self.instruction()?))
        }
    }

    fn instruction(&mut self) -> Result<Instruction, ParseError> {
        match self.peek() {
            None => Err(self.error("expected an instruction")),
            Some(b'!') => {
                self.pos += 1;
                Ok(Instruction::Halt)
            }
            Some(b'#') => {
                self.pos += 1;
                if self.peek() == Some(b'#') {
                    self.pos += 1;
                    Ok(Instruction::Goto(self.natural()?))
                } else {
                    Ok(Instruction::Jump(self.natural()?))
                }
            }
            Some(b'%') => {
                self.pos += 1;
                Ok(Instruction::Label(self.natural()?))
            }
            Some(b'+') => {
                self.pos += 1;
                Ok(Instruction::PosTest(self.basic()?))
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(Instruction::NegTest(self.basic()?))
            }
            Some(_) => Ok(Instruction::Plain(self.basic()?)),
        }
    }

    fn natural(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        self.src[start..self.pos].parse().map_err(|_| {
            self.pos = start;
            self.error("number out of range")
        })
    }

    fn basic(&mut self) -> Result<BasicInstruction, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, b'_' | b':' | b'.'))
        {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        parse_basic(word).ok_or_else(|| {
            self.pos = start;
            if word.is_empty() {
                self.error("expected an instruction")
            } else {
                self.error(format!("malformed basic instruction `{word}`"))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Instruction as I;

    fn plain(f: Option<&str>, m: &str) -> Term {
        Term::Single(I::Plain(match f {
            Some(f) => BasicInstruction::new(f, m),
            None => BasicInstruction::bare(m),
        }))
    }

    #[test]
    fn test_then_halt_then_deadlock() {
        let t = parse("+a; !; #0", Dialect::Pga).unwrap();
        assert_eq!(
            t,
            Term::concat(
                Term::Single(I::PosTest(BasicInstruction::bare("a"))),
                Term::concat(Term::Single(I::Halt), Term::Single(I::Jump(0)))
            )
        );
    }

    #[test]
    fn labelled_loop() {
        let t = parse("(%1; f.m; ##1)*", Dialect::Pgag).unwrap();
        assert_eq!(
            t,
            Term::repeat(Term::concat(
                Term::Single(I::Label(1)),
                Term::concat(plain(Some("f"), "m"), Term::Single(I::Goto(1)))
            ))
        );
    }

    #[test]
    fn jump_rejected_in_goto_dialect() {
        match parse("#2; a", Dialect::Pgag) {
            Err(ParseError::Dialect(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].instruction, I::Jump(2));
                assert!(v[0].to_string().contains("#2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn power_expands_right_nested() {
        let t = parse("(a; b)^3", Dialect::Pga).unwrap();
        let ab = parse("a; b", Dialect::Pga).unwrap();
        assert_eq!(t, Term::concat(ab.clone(), Term::concat(ab.clone(), ab)));
        assert!(parse("(a)^0", Dialect::Pga).is_err());
    }

    #[test]
    fn colon_identifiers() {
        let t = parse("st:1.set:true; +st:12.get; -en.get", Dialect::Pga).unwrap();
        let instrs = t.instructions();
        assert_eq!(
            instrs[0],
            &I::Plain(BasicInstruction::new("st:1", "set:true"))
        );
        assert_eq!(
            instrs[1],
            &I::PosTest(BasicInstruction::new("st:12", "get"))
        );
        assert_eq!(instrs[2], &I::NegTest(BasicInstruction::new("en", "get")));
    }

    #[test]
    fn comments_and_whitespace() {
        let t = parse("// a program\n  a ;\n// middle\n!  \n", Dialect::Pga).unwrap();
        assert_eq!(t.render(), "a; !");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_unchecked("a;\n  ;b") {
            Err(ParseError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_unchecked(""),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_unchecked("(a; b"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_unchecked("a.b.c"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_unchecked("# 1"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_unchecked("a b"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn single_instruction() {
        assert_eq!(parse_instruction("##3").unwrap(), I::Goto(3));
        assert_eq!(parse_instruction(" %2 ").unwrap(), I::Label(2));
        assert!(parse_instruction("a; b").is_err());
    }
}
