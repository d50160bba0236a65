//! Recursive-descent parser for the scalar expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' nonneg-integer)?
//! base   := number | identifier | '(' expr ')' | ('sin' | 'cos' | 'exp') '(' expr ')'
//! ```
//!
//! Positions in errors are byte offsets into the source text.

use super::chart::Chart;
use super::expr::Expr;
use crate::error::{Error, Result};

pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        chart,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(&format!("unexpected `{}`", p.peek_char())));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or('?')
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.to_string(),
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else if self.at_end() {
            Err(self.error(&format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(&format!("expected `{}`, found `{}`", c as char, self.peek_char())))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.eat(b'/') {
                acc = acc / self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("exponent must be a non-negative integer literal"));
            }
            if self.peek() == Some(b'.') {
                return Err(self.error("exponent must be an integer"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let n: u32 = digits.parse().map_err(|_| Error::Syntax {
                position: start,
                message: "exponent out of range".into(),
            })?;
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'0'..=b'9' | b'.') => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
                match name {
                    "sin" | "cos" | "exp" => {
                        if !self.eat(b'(') {
                            return Err(Error::Syntax {
                                position: self.pos,
                                message: format!("`{}` must be followed by `(`", name),
                            });
                        }
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(match name {
                            "sin" => arg.sin(),
                            "cos" => arg.cos(),
                            _ => arg.exp(),
                        })
                    }
                    _ => self.chart.var(name),
                }
            }
            Some(_) => Err(self.error(&format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut int_digits = 0;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
            int_digits += 1;
        }
        let mut frac_digits = 0;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
                frac_digits += 1;
            }
        }
        if int_digits + frac_digits == 0 {
            return Err(Error::Syntax {
                position: start,
                message: "malformed number".into(),
            });
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>().map(Expr::num).map_err(|_| Error::Syntax {
            position: start,
            message: format!("malformed number `{}`", text),
        })
    }
}
