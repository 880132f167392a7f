//! Textual DSL for diagrams and contexts.
//!
//! Grammar (whitespace and `#` comments ignored):
//!
//! ```text
//! diagram := seq
//! seq     := par (';' par)*          -- left to right: A ; B runs A first
//! par     := atom ('+' atom)*        -- '+' binds tighter than ';'
//! atom    := 'empty' | 'id' | 'neg' | 'swap' | 'pbs' | 'hole'
//!          | 'gate' '[' label ']' | 'tr' '(' seq ')' | '(' seq ')'
//! label   := [A-Za-z_][A-Za-z0-9_]*
//! ```

use pbs_calculus::diagram::{gate, par, seq, trace, Term};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Semi,
    Plus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(c) = self.src.get(self.pos) {
                        if *c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.src.get(self.pos).copied() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            b';' => {
                self.bump();
                Tok::Semi
            }
            b'+' => {
                self.bump();
                Tok::Plus
            }
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b'[' => {
                self.bump();
                Tok::LBracket
            }
            b']' => {
                self.bump();
                Tok::RBracket
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut s = String::new();
                while let Some(&c) = self.src.get(self.pos) {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok((tok, line, col))
    }
}

pub struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (Tok, usize, usize),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_tok()?;
        Ok(Parser { lexer, lookahead })
    }

    fn peek(&self) -> &Tok {
        &self.lookahead.0
    }

    fn advance(&mut self) -> Result<Tok, ParseError> {
        let next = self.lexer.next_tok()?;
        Ok(std::mem::replace(&mut self.lookahead, next).0)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.lookahead.1, col: self.lookahead.2, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.advance()?;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn seq(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.par()?;
        while self.peek() == &Tok::Semi {
            self.advance()?;
            acc = seq(acc, self.par()?);
        }
        Ok(acc)
    }

    fn par(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.atom()?;
        while self.peek() == &Tok::Plus {
            self.advance()?;
            acc = par(acc, self.atom()?);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.advance()?;
                let t = self.seq()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(name) => {
                self.advance()?;
                match name.as_str() {
                    "empty" => Ok(Term::Empty),
                    "id" => Ok(Term::Wire),
                    "neg" => Ok(Term::Neg),
                    "swap" => Ok(Term::Swap),
                    "pbs" => Ok(Term::Pbs),
                    "hole" => Ok(Term::Hole),
                    "gate" => {
                        self.expect(Tok::LBracket, "`[`")?;
                        let label = match self.advance()? {
                            Tok::Ident(l) => l,
                            _ => return Err(self.error("expected gate label")),
                        };
                        self.expect(Tok::RBracket, "`]`")?;
                        Ok(gate(label))
                    }
                    "tr" => {
                        self.expect(Tok::LParen, "`(`")?;
                        let t = self.seq()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(trace(t))
                    }
                    other => Err(self.error(format!("unknown generator `{other}`"))),
                }
            }
            _ => Err(self.error("expected a diagram atom")),
        }
    }
}

/// Parse a diagram or context term (typechecking is separate).
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.seq()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error("trailing input after diagram"));
    }
    Ok(t)
}

/// Canonical fully parenthesized printer; `parse_term(print_term(t)) == t`.
pub fn print_term(t: &Term) -> String {
    match t {
        Term::Empty => "empty".into(),
        Term::Wire => "id".into(),
        Term::Neg => "neg".into(),
        Term::Swap => "swap".into(),
        Term::Pbs => "pbs".into(),
        Term::Hole => "hole".into(),
        Term::Gate(l) => format!("gate[{l}]"),
        Term::Seq(a, b) => format!("({} ; {})", print_term(a), print_term(b)),
        Term::Par(a, b) => format!("({} + {})", print_term(a), print_term(b)),
        Term::Trace(a) => format!("tr({})", print_term(a)),
    }
}
