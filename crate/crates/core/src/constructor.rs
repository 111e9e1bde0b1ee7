//! Parser for constructor strings such as `CPn(n=1)`, `product_torus(1, 2)`,
//! `FlatTorus(lattice=[1, 1.5i])` or `reversed(cap(1))`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(Complex64),
    Ident(String),
    List(Vec<Value>),
    Call(Constructor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub key: Option<String>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constructor {
    pub name: String,
    pub args: Vec<Arg>,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Value::Number(z) if z.re == 0.0 => write!(f, "{}i", z.im),
            Value::Number(z) => write!(f, "{}{:+}i", z.re, z.im),
            Value::Ident(s) => f.write_str(s),
            Value::List(items) => {
                f.write_str("[")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Value::Call(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Constructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (k, arg) in self.args.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            if let Some(key) = &arg.key {
                write!(f, "{key}=")?;
            }
            write!(f, "{}", arg.value)?;
        }
        f.write_str(")")
    }
}

impl Constructor {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { src: text, pos: 0 };
        p.skip_ws();
        let name = p.ident()?;
        p.skip_ws();
        let args = if p.peek() == Some('(') { p.args()? } else { Vec::new() };
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.error("trailing characters"));
        }
        Ok(Self { name, args })
    }

    /// Positional argument `index`, or the keyword argument `key`.
    pub fn get(&self, index: usize, key: &str) -> Option<&Value> {
        self.args
            .iter()
            .find(|a| a.key.as_deref() == Some(key))
            .or_else(|| self.args.iter().filter(|a| a.key.is_none()).nth(index))
            .map(|a| &a.value)
    }

    pub fn real(&self, index: usize, key: &str) -> Result<f64> {
        match self.get(index, key) {
            Some(Value::Number(z)) if z.im == 0.0 => Ok(z.re),
            Some(other) => Err(Error::Constructor(format!(
                "{self}: argument `{key}` must be real, got {other}"
            ))),
            None => Err(Error::Constructor(format!("{self}: missing argument `{key}`"))),
        }
    }

    pub fn real_or(&self, index: usize, key: &str, default: f64) -> Result<f64> {
        if self.get(index, key).is_none() {
            Ok(default)
        } else {
            self.real(index, key)
        }
    }

    pub fn complex(&self, index: usize, key: &str) -> Result<Complex64> {
        match self.get(index, key) {
            Some(Value::Number(z)) => Ok(*z),
            Some(other) => Err(Error::Constructor(format!(
                "{self}: argument `{key}` must be a number, got {other}"
            ))),
            None => Err(Error::Constructor(format!("{self}: missing argument `{key}`"))),
        }
    }

    /// Non-negative integer argument.
    pub fn count(&self, index: usize, key: &str) -> Result<usize> {
        let x = self.real(index, key)?;
        if x.fract() != 0.0 || x < 0.0 {
            return Err(Error::Constructor(format!(
                "{self}: argument `{key}` must be a non-negative integer"
            )));
        }
        Ok(x as usize)
    }

    /// All positional arguments as real numbers.
    pub fn positional_reals(&self) -> Result<Vec<f64>> {
        self.args
            .iter()
            .filter(|a| a.key.is_none())
            .map(|a| match &a.value {
                Value::Number(z) if z.im == 0.0 => Ok(z.re),
                other => Err(Error::Constructor(format!(
                    "{self}: expected real arguments, got {other}"
                ))),
            })
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, what: &str) -> Error {
        Error::Constructor(format!("{}: {what} at column {}", self.src, self.pos + 1))
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.bump() == Some(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if start == self.pos || self.src[start..].starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error("expected a name"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn args(&mut self) -> Result<Vec<Arg>> {
        self.expect('(')?;
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.bump();
            return Ok(args);
        }
        loop {
            self.skip_ws();
            let save = self.pos;
            let mut key = None;
            if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                let name = self.ident()?;
                self.skip_ws();
                if self.peek() == Some('=') {
                    self.bump();
                    key = Some(name);
                } else {
                    self.pos = save;
                }
            }
            let value = self.value()?;
            args.push(Arg { key, value });
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some(')') => return Ok(args),
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            Some('[') => {
                self.bump();
                let mut items = Vec::new();
                self.skip_ws();
                if self.peek() == Some(']') {
                    self.bump();
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.bump() {
                        Some(',') => continue,
                        Some(']') => return Ok(Value::List(items)),
                        _ => return Err(self.error("expected `,` or `]`")),
                    }
                }
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                if self.peek() == Some('i')
                    && !self.src[self.pos + 1..]
                        .starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_' || c == '(')
                {
                    self.bump();
                    return Ok(Value::Number(Complex64::new(0.0, 1.0)));
                }
                let name = self.ident()?;
                self.skip_ws();
                if self.peek() == Some('(') {
                    let args = self.args()?;
                    Ok(Value::Call(Constructor { name, args }))
                } else {
                    Ok(Value::Ident(name))
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }

    /// Real or complex literal: `2`, `-1e-3`, `1.5i`, `0.25+1.5i`, `-i`.
    fn number(&mut self) -> Result<Value> {
        let mut total = Complex64::new(0.0, 0.0);
        let mut first = true;
        loop {
            self.skip_ws();
            let sign = match self.peek() {
                Some('-') => {
                    self.bump();
                    -1.0
                }
                Some('+') => {
                    self.bump();
                    1.0
                }
                _ if first => 1.0,
                _ => break,
            };
            self.skip_ws();
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                self.bump();
            }
            if matches!(self.peek(), Some('e') | Some('E')) {
                let save = self.pos;
                self.bump();
                if matches!(self.peek(), Some('-') | Some('+')) {
                    self.bump();
                }
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                    }
                } else {
                    self.pos = save;
                }
            }
            let digits = &self.src[start..self.pos];
            let magnitude = if digits.is_empty() {
                None
            } else {
                Some(digits.parse::<f64>().map_err(|_| self.error("malformed number"))?)
            };
            let imaginary = self.peek() == Some('i')
                && !self.src[self.pos + 1..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_');
            if imaginary {
                self.bump();
                total.im += sign * magnitude.unwrap_or(1.0);
            } else {
                let m = magnitude.ok_or_else(|| self.error("malformed number"))?;
                total.re += sign * m;
            }
            first = false;
        }
        Ok(Value::Number(total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keyword_and_positional_arguments() {
        let c = Constructor::parse("CPn(n=2)").unwrap();
        assert_eq!(c.name, "CPn");
        assert_eq!(c.count(0, "n").unwrap(), 2);

        let c = Constructor::parse("product_torus(1, 2.5, 3e-1)").unwrap();
        assert_eq!(c.positional_reals().unwrap(), vec![1.0, 2.5, 0.3]);
    }

    #[test]
    fn parses_complex_lists_and_nesting() {
        let c = Constructor::parse("FlatTorus(lattice=[1, 0.25+1.5i, -i])").unwrap();
        let Some(Value::List(items)) = c.get(0, "lattice") else {
            panic!("lattice not parsed: {c:?}");
        };
        assert_eq!(items[1], Value::Number(Complex64::new(0.25, 1.5)));
        assert_eq!(items[2], Value::Number(Complex64::new(0.0, -1.0)));

        let c = Constructor::parse("reversed(cap(1))").unwrap();
        assert!(matches!(c.get(0, "surface"), Some(Value::Call(inner)) if inner.name == "cap"));
    }

    #[test]
    fn bare_name_and_negative_curvature() {
        assert_eq!(Constructor::parse("sphere").unwrap().arity(), 0);
        let c = Constructor::parse("HyperbolicDisk(K=-1)").unwrap();
        assert_eq!(c.real(0, "K").unwrap(), -1.0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Constructor::parse("circle(1").is_err());
        assert!(Constructor::parse("circle(1))").is_err());
        assert!(Constructor::parse("(1)").is_err());
        assert!(Constructor::parse("circle(1..2)").is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["latitude(0.5)", "FlatTorus(lattice=[1, 1.5i])", "reversed(cap(1))"] {
            let c = Constructor::parse(text).unwrap();
            assert_eq!(Constructor::parse(&c.to_string()).unwrap(), c);
        }
    }
}
