use super::formula::{Alphabet, Formula};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Globally,
    Eventually,
    Until,
    Release,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("atom `{name}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Next => "`X`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Eventually => "`F`".into(),
            Tok::Until => "`U`".into(),
            Tok::Release => "`R`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = bytes.get(i..i + 2);
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            _ if two == Some(b"->") => Tok::Implies,
            _ if two == Some(b"[]") => Tok::Globally,
            _ if two == Some(b"<>") => Tok::Eventually,
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &text[i..j];
                i = j;
                out.push((
                    start,
                    match word {
                        "true" => Tok::True,
                        "false" => Tok::False,
                        "X" => Tok::Next,
                        "G" => Tok::Globally,
                        "F" => Tok::Eventually,
                        "U" => Tok::Until,
                        "R" => Tok::Release,
                        _ => Tok::Ident(word.to_string()),
                    },
                ));
                continue;
            }
            _ => {
                let found = text[i..].chars().next().unwrap_or(' ');
                return Err(Error::Syntax {
                    position: i,
                    expected: "a formula token".into(),
                    found: format!("`{found}`"),
                });
            }
        };
        i += match tok {
            Tok::Implies | Tok::Globally | Tok::Eventually => 2,
            _ => 1,
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    alphabet: &'a Alphabet,
    labels: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> Error {
        let (position, tok) = &self.tokens[self.pos];
        Error::Syntax {
            position: *position,
            expected: expected.to_string(),
            found: tok.describe(),
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = Formula::and(lhs, self.temporal()?);
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(Formula::until(lhs, self.temporal()?))
            }
            Tok::Release => {
                self.bump();
                Ok(Formula::release(lhs, self.temporal()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Tok::Globally => {
                self.bump();
                Ok(Formula::globally(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        const EXPECTED: &str = "one of atom, `true`, `false`, `!`, `X`, `G`, `F`, `(`";
        match self.peek().clone() {
            Tok::Ident(name) => {
                if !self.alphabet.contains(&name) && !self.labels.contains(&name) {
                    return Err(Error::UnknownAtom(name));
                }
                self.bump();
                Ok(Formula::Atom(name))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED)),
        }
    }
}

/// Parse `text` over `alphabet`, additionally admitting the label atoms in
/// `labels` (used by knowledge formulas).
pub fn parse_formula(text: &str, alphabet: &Alphabet, labels: &[String]) -> Result<Formula> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        alphabet,
        labels,
    };
    let f = parser.implication()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("binary operator or end of input"));
    }
    Ok(f)
}
