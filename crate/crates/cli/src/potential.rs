//! Whitelisted arithmetic for custom potentials `V(x)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'x1'..'xN' | 'pi' | 'e' | 'abs' '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(a, b) => {
                let (base, p) = (a.eval(x), b.eval(x));
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    base.powi(p as i32)
                } else {
                    base.powf(p)
                }
            }
            Expr::Abs(a) => a.eval(x).abs(),
        }
    }
}

/// A grammar error at a 0-based character offset of the expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at character {}", self.message, self.offset + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse()
                .map_err(|_| ExprError { offset: start, message: format!("malformed number `{text}`") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError { offset: i, message: format!("character `{c}` is not allowed") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { offset: self.offset(), message: message.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.pos += 1;
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    "x" if self.dim == 1 => Ok(Expr::Var(0)),
                    "abs" => {
                        if !self.eat('(') {
                            return self.err("expected `(` after abs");
                        }
                        let e = self.expr()?;
                        if !self.eat(')') {
                            return self.err("expected `)`");
                        }
                        Ok(Expr::Abs(Box::new(e)))
                    }
                    v if v.starts_with('x') => match v[1..].parse::<usize>() {
                        Ok(i) if (1..=self.dim).contains(&i) => Ok(Expr::Var(i - 1)),
                        _ => Err(ExprError {
                            offset: at,
                            message: format!("unknown variable `{v}` for dimension {}", self.dim),
                        }),
                    },
                    other => Err(ExprError { offset: at, message: format!("unknown identifier `{other}`") }),
                }
            }
            Tok::Sym(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

/// Parses a potential in `dim` variables: `x` when `dim = 1`, else `x1..xN`.
pub fn parse(src: &str, dim: usize) -> Result<Expr, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count(), dim };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_power() {
        let e = parse("1 + 2*x^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]), 19.0);
        assert_eq!(parse("-x^2", 1).unwrap().eval(&[2.0]), -4.0);
        assert_eq!(parse("2^3^2", 1).unwrap().eval(&[0.0]), 512.0);
        assert_eq!(parse("2^-1", 1).unwrap().eval(&[0.0]), 0.5);
        assert_eq!(parse("abs(x - 1) + 0.5*(x1)", 2).unwrap_err().offset, 4);
    }

    #[test]
    fn multivariate_and_constants() {
        let e = parse("x1^4 + 0.5*x2^2 + pi - e + 1e-3", 2).unwrap();
        let v = e.eval(&[1.0, 2.0]);
        assert!((v - (1.0 + 2.0 + std::f64::consts::PI - std::f64::consts::E + 1e-3)).abs() < 1e-15);
        assert_eq!(parse("abs(x1 - x2)", 2).unwrap().eval(&[1.0, 4.0]), 3.0);
    }

    #[test]
    fn rejects_outside_grammar() {
        assert_eq!(parse("x / 2", 1).unwrap_err().offset, 2);
        assert!(parse("exp(x)", 1).is_err());
        assert!(parse("x3", 2).is_err());
        assert!(parse("(x + 1", 1).is_err());
        assert!(parse("x x", 1).is_err());
        assert!(parse("", 1).is_err());
    }
}
