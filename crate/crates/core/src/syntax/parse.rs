//! Recursive descent parser for the ASCII formula grammar.
//!
//! ```text
//! phi  ::= "true" | "false" | atom | "!" phi | "(" phi ")"
//!        | phi "&" phi | phi "|" phi | phi "->" phi | phi "<->" phi
//!        | "E" vars "." phi | "A" vars "." phi
//!        | "E[>=" INT "]" vars "." phi | "E[<=" INT "]" vars "." phi | "E[=" INT "]" vars "." phi
//! atom ::= IDENT "(" term ("," term)* ")" | term "=" term
//! term ::= VAR | "#" INT | "@" IDENT
//! ```
//!
//! Precedence from tightest: `!`, `&`, `|`, `->`, `<->`. `&` and `|` chains
//! are collected into one n-ary node, `->` associates to the right and `<->`
//! to the left. Quantifier bodies extend as far right as possible.

use std::fmt;

use super::ast::{is_variable_name, CountMode, Formula, Signature, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { expected: String, found: String },
    UnexpectedEnd { expected: String },
    UnknownRelation(String),
    UnknownConstant(String),
    ArityMismatch { relation: String, expected: usize, found: usize },
    ReservedVariable(String),
    DuplicateBoundVariable(String),
    IntegerOverflow,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input.
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "expected {expected}, found end of input")
            }
            ParseErrorKind::UnknownRelation(r) => write!(f, "unknown relation symbol {r}"),
            ParseErrorKind::UnknownConstant(c) => write!(f, "unknown constant @{c}"),
            ParseErrorKind::ArityMismatch { relation, expected, found } => write!(
                f,
                "relation {relation} has arity {expected} but is applied to {found} terms"
            ),
            ParseErrorKind::ReservedVariable(v) => {
                write!(f, "{v} is reserved and cannot be used as a variable")
            }
            ParseErrorKind::DuplicateBoundVariable(v) => {
                write!(f, "variable {v} is bound twice in the same quantifier")
            }
            ParseErrorKind::IntegerOverflow => write!(f, "integer literal out of range"),
        }?;
        write!(f, " at offset {}", self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Equals,
    Ge,
    Le,
    Hash,
    At,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Bang => f.write_str("'!'"),
            Tok::Amp => f.write_str("'&'"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::DoubleArrow => f.write_str("'<->'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Equals => f.write_str("'='"),
            Tok::Ge => f.write_str("'>='"),
            Tok::Le => f.write_str("'<='"),
            Tok::Hash => f.write_str("'#'"),
            Tok::At => f.write_str("'@'"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |kind, position| ParseError { kind, position };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let rest = &text[i..];
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::DoubleArrow, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if c.is_ascii_digit() {
            let len = rest.bytes().take_while(u8::is_ascii_digit).count();
            let n = rest[..len]
                .parse::<usize>()
                .map_err(|_| err(ParseErrorKind::IntegerOverflow, start))?;
            (Tok::Int(n), len)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            (Tok::Ident(rest[..len].to_string()), len)
        } else {
            let tok = match c {
                b'!' => Tok::Bang,
                b'&' => Tok::Amp,
                b'|' => Tok::Pipe,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b',' => Tok::Comma,
                b'.' => Tok::Dot,
                b'=' => Tok::Equals,
                b'#' => Tok::Hash,
                b'@' => Tok::At,
                _ => {
                    let ch = rest.chars().next().unwrap_or('?');
                    return Err(err(ParseErrorKind::UnexpectedChar(ch), start));
                }
            };
            (tok, 1)
        };
        out.push((tok, start));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, position: self.offset() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(ParseErrorKind::UnexpectedToken {
                expected: expected.to_string(),
                found: t.to_string(),
            }),
            None => self.error(ParseErrorKind::UnexpectedEnd { expected: expected.to_string() }),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while self.eat(&Tok::DoubleArrow) {
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Pipe) {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(s)) if (s == "E" || s == "A") && self.starts_quantifier() => {
                self.quantifier()
            }
            Some(Tok::Ident(_)) if self.peek_at(1) == Some(&Tok::LParen) => self.relation_atom(),
            Some(_) => {
                let lhs = self.term()?;
                self.expect(Tok::Equals, "'='")?;
                let rhs = self.term()?;
                Ok(Formula::Eq(lhs, rhs))
            }
            None => Err(self.unexpected("a formula")),
        }
    }

    fn starts_quantifier(&self) -> bool {
        let is_e = matches!(self.peek(), Some(Tok::Ident(s)) if s == "E");
        match self.peek_at(1) {
            Some(Tok::Ident(_)) => true,
            Some(Tok::LBracket) => is_e,
            _ => false,
        }
    }

    fn quantifier(&mut self) -> Result<Formula, ParseError> {
        let universal = matches!(self.peek(), Some(Tok::Ident(s)) if s == "A");
        self.pos += 1;
        let mut counting = None;
        if !universal && self.eat(&Tok::LBracket) {
            let mode = match self.peek() {
                Some(Tok::Ge) => CountMode::AtLeast,
                Some(Tok::Le) => CountMode::AtMost,
                Some(Tok::Equals) => CountMode::Exactly,
                _ => return Err(self.unexpected("'>=', '<=' or '='")),
            };
            self.pos += 1;
            let r = match self.peek() {
                Some(Tok::Int(n)) => *n,
                _ => return Err(self.unexpected("an integer")),
            };
            self.pos += 1;
            self.expect(Tok::RBracket, "']'")?;
            counting = Some((mode, r));
        }
        let mut vars: Vec<Var> = Vec::new();
        while let Some(Tok::Ident(name)) = self.peek() {
            if !is_variable_name(name) {
                return Err(self.error(ParseErrorKind::ReservedVariable(name.clone())));
            }
            let v = Var::from(name.as_str());
            if vars.contains(&v) {
                return Err(self.error(ParseErrorKind::DuplicateBoundVariable(name.clone())));
            }
            vars.push(v);
            self.pos += 1;
        }
        if vars.is_empty() {
            return Err(self.unexpected("a variable"));
        }
        self.expect(Tok::Dot, "'.'")?;
        let body = Box::new(self.formula()?);
        Ok(match (universal, counting) {
            (true, _) => Formula::Forall(vars, body),
            (false, None) => Formula::Exists(vars, body),
            (false, Some((mode, r))) => Formula::Count(mode, r, vars, body),
        })
    }

    fn relation_atom(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let name = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return Err(self.unexpected("a relation symbol")),
        };
        let arity = self.sig.arity(&name).ok_or(ParseError {
            kind: ParseErrorKind::UnknownRelation(name.clone()),
            position: at,
        })?;
        self.pos += 1;
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "')'")?;
        if args.len() != arity {
            return Err(ParseError {
                kind: ParseErrorKind::ArityMismatch { relation: name, expected: arity, found: args.len() },
                position: at,
            });
        }
        Ok(Formula::Atom(name, args))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Hash) => {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Int(n)) => {
                        let n = *n;
                        self.pos += 1;
                        Ok(Term::Elem(n))
                    }
                    _ => Err(self.unexpected("an element index")),
                }
            }
            Some(Tok::At) => {
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Tok::Ident(name)) => {
                        if !self.sig.has_constant(&name) {
                            return Err(self.error(ParseErrorKind::UnknownConstant(name)));
                        }
                        self.pos += 1;
                        Ok(Term::Const(name))
                    }
                    _ => Err(self.unexpected("a constant name")),
                }
            }
            Some(Tok::Ident(name)) => {
                if !is_variable_name(&name) {
                    return Err(self.error(ParseErrorKind::ReservedVariable(name)));
                }
                self.pos += 1;
                Ok(Term::Var(Var::from(name)))
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}

/// Parses `text` against `sig`, rejecting unknown symbols and arity errors.
pub fn parse(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), sig };
    let f = p.formula()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::parse("E/2,S/2,U/1,@c0").unwrap()
    }

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn exists_atom() {
        let f = parse("E x . E(x,y)", &sig()).unwrap();
        assert_eq!(
            f,
            Formula::Exists(vec!["x".into()], Box::new(Formula::atom("E", vec![v("x"), v("y")])))
        );
    }

    #[test]
    fn exact_count() {
        let f = parse("E[=2] x . E(x,y)", &sig()).unwrap();
        assert_eq!(
            f,
            Formula::Count(
                CountMode::Exactly,
                2,
                vec!["x".into()],
                Box::new(Formula::atom("E", vec![v("x"), v("y")]))
            )
        );
    }

    #[test]
    fn arity_mismatch() {
        let e = parse("E(x)", &sig()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ArityMismatch { expected: 2, found: 1, .. }));
        assert_eq!(e.position, 0);
    }

    #[test]
    fn unknown_symbols() {
        assert!(matches!(
            parse("R(x)", &sig()).unwrap_err().kind,
            ParseErrorKind::UnknownRelation(_)
        ));
        assert!(matches!(
            parse("x = @d", &sig()).unwrap_err().kind,
            ParseErrorKind::UnknownConstant(_)
        ));
    }

    #[test]
    fn precedence() {
        let f = parse("!a = b & c = d | e = f -> g = h <-> i = j", &sig()).unwrap();
        let eq = |a: &str, b: &str| Formula::eq(v(a), v(b));
        let expected = Formula::iff(
            Formula::implies(
                Formula::Or(vec![
                    Formula::And(vec![Formula::not(eq("a", "b")), eq("c", "d")]),
                    eq("e", "f"),
                ]),
                eq("g", "h"),
            ),
            eq("i", "j"),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let f = parse("U(x) & E y . E(x,y) | S(y,x)", &sig()).unwrap();
        match f {
            Formula::And(parts) => match &parts[1] {
                Formula::Exists(_, body) => assert!(matches!(**body, Formula::Or(_))),
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn terms() {
        let f = parse("E(#3,@c0)", &sig()).unwrap();
        assert_eq!(f, Formula::atom("E", vec![Term::Elem(3), Term::Const("c0".into())]));
    }

    #[test]
    fn implication_is_right_associative() {
        let f = parse("a = b -> c = d -> e = f", &sig()).unwrap();
        match f {
            Formula::Implies(_, rhs) => assert!(matches!(*rhs, Formula::Implies(..))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("E x . (E(x,y)", &sig()).unwrap_err();
        assert_eq!(e.position, 13);
        let e = parse("x = y )", &sig()).unwrap_err();
        assert_eq!(e.position, 6);
        let e = parse("E x x . U(x)", &sig()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DuplicateBoundVariable(_)));
        assert!(parse("x = E", &sig()).is_err());
        assert!(parse("x $ y", &sig()).is_err());
    }
}
