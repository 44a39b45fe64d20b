//! Scalar coefficient expressions over the variables `x`, `y`, `t`.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right-associative
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are closed: variables `x y t`, constants `pi e`, functions
//! `sin cos exp sqrt abs`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Const {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Const),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Evaluation point. Spatial problems leave `t` at zero, space-time problems
/// leave `y` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Point { x, y, t: 0.0 }
    }

    pub fn xt(x: f64, t: f64) -> Self {
        Point { x, y: 0.0, t }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result from `{0}`")]
    NonFinite(&'static str),
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        }
    }
}

impl Const {
    fn name(self) -> &'static str {
        match self {
            Const::Pi => "pi",
            Const::E => "e",
        }
    }

    fn value(self) -> f64 {
        match self {
            Const::Pi => std::f64::consts::PI,
            Const::E => std::f64::consts::E,
        }
    }
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn name(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

fn finite(v: f64, op: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(op))
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn eval(&self, p: Point) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => Ok(match v {
                Var::X => p.x,
                Var::Y => p.y,
                Var::T => p.t,
            }),
            Expr::Const(c) => Ok(c.value()),
            Expr::Neg(a) => Ok(-a.eval(p)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval(p)?;
                let b = b.eval(p)?;
                let r = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                };
                finite(r, op.name())
            }
            Expr::Call(f, a) => finite(f.apply(a.eval(p)?), f.name()),
        }
    }

    /// True when the expression mentions no variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting of f64 is the shortest representation that
            // reads back to the same value.
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // An exponent needs digits; a bare trailing `e` is left for the
            // identifier lexer.
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })?;
            if !v.is_finite() {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("number `{text}` overflows"),
                });
            }
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            out.push((tok, start));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax("expected `)`")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.syntax("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    match self.peek() {
                        Some(Tok::LParen) => self.pos += 1,
                        _ => return Err(self.syntax(format!("expected `(` after `{name}`"))),
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Const(Const::Pi)),
                    "e" => Ok(Expr::Const(Const::E)),
                    _ => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            Tok::Op(c) => Err(ParseError::Syntax {
                offset,
                message: format!("unexpected operator `{c}`"),
            }),
            Tok::RParen => Err(ParseError::Syntax {
                offset,
                message: "unexpected `)`".into(),
            }),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.syntax("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, p: Point) -> f64 {
        parse(s).unwrap().eval(p).unwrap()
    }

    #[test]
    fn literal() {
        assert_eq!(parse("1").unwrap(), Expr::Num(1.0));
    }

    #[test]
    fn trig_exp_product() {
        let v = ev("sin(pi*y)*exp(-x)", Point::xy(0.0, 0.5));
        assert!((v - 1.0).abs() < 1e-15);
        let v = ev("exp(-x)*sin(pi*y)", Point::xy(1.0, 0.5));
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(ev("2^3^2", Point::default()), 512.0);
        assert_eq!(ev("(2^3)^2", Point::default()), 64.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-2^2", Point::default()), -4.0);
        assert_eq!(ev("2^-1", Point::default()), 0.5);
        assert_eq!(ev("1+2*3", Point::default()), 7.0);
        assert_eq!(ev("8/2/2", Point::default()), 2.0);
        assert_eq!(ev("1-2-3", Point::default()), -4.0);
        assert_eq!(ev("--3", Point::default()), 3.0);
        assert_eq!(ev("2*-3", Point::default()), -6.0);
        assert_eq!(ev("1.5e2 + 2E-1", Point::default()), 150.2);
    }

    #[test]
    fn variables() {
        assert_eq!(ev("x+y", Point::xy(1.0, 2.0)), 3.0);
        assert_eq!(ev("x*t", Point::xt(2.0, 3.0)), 6.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse("1/x").unwrap();
        assert_eq!(e.eval(Point::xy(0.0, 0.0)), Err(EvalError::DivisionByZero));
        assert!(e.eval(Point::xy(2.0, 0.0)).is_ok());
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(matches!(
            parse("sqrt(x)").unwrap().eval(Point::xy(-1.0, 0.0)),
            Err(EvalError::NonFinite("sqrt"))
        ));
        assert!(matches!(
            parse("exp(1000)").unwrap().eval(Point::default()),
            Err(EvalError::NonFinite("exp"))
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("1 + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse("(1 + 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1 $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("sin x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1 2"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("2*z"),
            Err(ParseError::UnknownIdentifier {
                name: "z".into(),
                offset: 2
            })
        );
        assert!(matches!(parse("tan(x)"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn constant_detection() {
        assert!(parse("2*pi + sin(1)").unwrap().is_constant());
        assert!(!parse("2*x").unwrap().is_constant());
    }

    #[test]
    fn round_trip_corpus() {
        for s in [
            "1",
            "sin(pi*y)*exp(-x)",
            "2^3^2",
            "-x^2 + 3*y/(1 + t)",
            "abs(cos(2*pi*(x - t))) - sqrt(e)",
            "0.1 + 1e-7 * x",
        ] {
            let a = parse(s).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::Y)),
            Just(Expr::Var(Var::T)),
            Just(Expr::Const(Const::Pi)),
            Just(Expr::Const(Const::E)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
            ];
            let func = prop_oneof![
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Exp),
                Just(Func::Sqrt),
                Just(Func::Abs),
            ];
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
                (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            let again = parse(&back.to_string()).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}
