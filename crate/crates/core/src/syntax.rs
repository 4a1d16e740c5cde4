//! ASCII surface syntax for formulas and sequents.
//!
//! ```text
//! formula := "bot" | Pred "(" term ")" | "~" formula
//!          | formula "&" formula | formula "|" formula | formula "->" formula
//!          | "forall" var "." formula | "exists" var "." formula
//! sequent := [formula ("," formula)*] "|-" formula
//! ```
//!
//! `~` binds tightest, then `&`, `|`, `->`. `->` associates to the right,
//! `&` and `|` to the left. A quantifier body extends as far right as
//! possible.

use std::sync::Arc;

use thiserror::Error;

use crate::formula::{is_constant_name, is_variable_name, Formula, Name, Sequent, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {}: {kind}", .pos + 1)]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("predicate `{0}` must take exactly one argument")]
    NonMonadic(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Not,
    And,
    Or,
    Arrow,
    Turnstile,
    Comma,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Not => "`~`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Turnstile => "`|-`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const KEYWORDS: [&str; 3] = ["bot", "forall", "exists"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'~' => Tok::Not,
            b'&' => Tok::And,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            b'|' => Tok::Or,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    pos: start,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
                });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: Vec<Name>,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
            scope: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Arc::new(lhs), Arc::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::Or(Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::And(Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Not => Ok(Formula::Not(Arc::new(self.unary()?))),
            Tok::LParen => {
                let f = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(id) if id == "bot" => Ok(Formula::Falsum),
            Tok::Ident(id) if id == "forall" || id == "exists" => {
                let var_pos = self.pos();
                let var = match self.bump() {
                    Tok::Ident(v) if is_variable_name(&v) && !KEYWORDS.contains(&v.as_str()) => v,
                    other => {
                        return Err(ParseError {
                            pos: var_pos,
                            kind: ParseErrorKind::Syntax(format!(
                                "expected a variable after `{id}`, found {}",
                                other.describe()
                            )),
                        })
                    }
                };
                self.expect(Tok::Dot)?;
                let name: Name = var.into();
                self.scope.push(name.clone());
                let body = self.implication();
                self.scope.pop();
                let body = Arc::new(body?);
                Ok(if id == "forall" {
                    Formula::ForAll(name, body)
                } else {
                    Formula::Exists(name, body)
                })
            }
            Tok::Ident(id) if id.starts_with(|c: char| c.is_ascii_uppercase()) => self.atom(id, pos),
            other => Err(ParseError {
                pos,
                kind: ParseErrorKind::Syntax(format!("expected a formula, found {}", other.describe())),
            }),
        }
    }

    fn atom(&mut self, pred: String, pred_pos: usize) -> Result<Formula, ParseError> {
        self.expect(Tok::LParen)?;
        if *self.peek() == Tok::RParen {
            return Err(ParseError {
                pos: pred_pos,
                kind: ParseErrorKind::NonMonadic(pred),
            });
        }
        let term_pos = self.pos();
        let term = match self.bump() {
            Tok::Ident(t) if KEYWORDS.contains(&t.as_str()) => {
                return Err(ParseError {
                    pos: term_pos,
                    kind: ParseErrorKind::Syntax(format!("keyword `{t}` cannot be a term")),
                })
            }
            Tok::Ident(t) if is_variable_name(&t) => {
                if !self.scope.iter().any(|v| **v == *t) {
                    return Err(ParseError {
                        pos: term_pos,
                        kind: ParseErrorKind::UnboundVariable(t),
                    });
                }
                Term::Var(t.into())
            }
            Tok::Ident(t) if is_constant_name(&t) => Term::Const(t.into()),
            other => {
                return Err(ParseError {
                    pos: term_pos,
                    kind: ParseErrorKind::Syntax(format!(
                        "expected a lowercase term, found {}",
                        other.describe()
                    )),
                })
            }
        };
        if *self.peek() == Tok::Comma {
            return Err(ParseError {
                pos: pred_pos,
                kind: ParseErrorKind::NonMonadic(pred),
            });
        }
        self.expect(Tok::RParen)?;
        Ok(Formula::Atom(pred.into(), term))
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.peek().describe())))
        }
    }
}

/// Parse a closed formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.implication()?;
    p.finish()?;
    Ok(f)
}

/// Parse `P1, P2, ... |- C` (an empty premise list is written `|- C`).
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text)?;
    let mut premises = Vec::new();
    if *p.peek() != Tok::Turnstile {
        premises.push(p.implication()?);
        while *p.peek() == Tok::Comma {
            p.bump();
            premises.push(p.implication()?);
        }
    }
    p.expect(Tok::Turnstile)?;
    let conclusion = p.implication()?;
    p.finish()?;
    Ok(Sequent::new(premises, conclusion))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pa(p: &str) -> Formula {
        Formula::pred(p, "a")
    }

    #[test]
    fn negated_atom() {
        assert_eq!(parse_formula("~C(a)").unwrap(), Formula::not(pa("C")));
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let f = parse_formula("forall x. P(x) -> Q(x)").unwrap();
        let want = Formula::forall(
            "x",
            Formula::implies(
                Formula::atom("P", Term::var("x")),
                Formula::atom("Q", Term::var("x")),
            ),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn precedence_and_associativity() {
        // ~A & B | C -> D -> E  ==  (((~A & B) | C) -> (D -> E))
        let f = parse_formula("~A(a) & B(a) | C(a) -> D(a) -> E(a)").unwrap();
        let want = Formula::implies(
            Formula::or(Formula::and(Formula::not(pa("A")), pa("B")), pa("C")),
            Formula::implies(pa("D"), pa("E")),
        );
        assert_eq!(f, want);

        let left = parse_formula("A(a) & B(a) & C(a)").unwrap();
        assert_eq!(left, Formula::and(Formula::and(pa("A"), pa("B")), pa("C")));
    }

    #[test]
    fn free_variable_is_rejected() {
        let err = parse_formula("A(x) -> B(x)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnboundVariable("x".into()));
        assert_eq!(err.pos, 2);
    }

    #[test]
    fn arity_is_enforced() {
        let err = parse_formula("P(a, b)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonMonadic("P".into()));
        let err = parse_formula("P()").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonMonadic("P".into()));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_formula("A(a) & ").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.pos, 7);
        assert!(parse_formula("A(a) B(a)").is_err());
        assert!(parse_formula("forall a. P(a)").is_err());
        assert!(parse_formula("A(a) $ B(a)").is_err());
    }

    #[test]
    fn sequents() {
        let s = parse_sequent("A(a), A(a) -> B(a) |- B(a)").unwrap();
        assert_eq!(s.premises().len(), 2);
        assert_eq!(s.conclusion(), &pa("B"));
        let empty = parse_sequent("|- A(a) | ~A(a)").unwrap();
        assert!(empty.premises().is_empty());
        assert_eq!(parse_sequent(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn bot_and_scoping() {
        assert_eq!(parse_formula("bot").unwrap(), Formula::Falsum);
        let f = parse_formula("(forall x. P(x)) & Q(a)").unwrap();
        assert!(matches!(f, Formula::And(..)));
        assert!(parse_formula("(forall x. P(x)) & Q(x)").is_err());
    }
}
