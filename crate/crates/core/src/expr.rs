//! Arithmetic expressions over named real variables.
//!
//! Grammar (EBNF), lowest precedence first:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;              (* right-associative *)
//! atom    = number | constant | variable
//!         | function "(" expr ")" | "(" expr ")" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! constant = "pi" | "e" ;
//! function = "exp" | "log" | "sin" | "cos" | "abs" | "sqrt" ;
//! ```
//!
//! A rational literal such as `1/3` is a division of two numbers and evaluates
//! to the nearest double. Whitespace is insignificant between tokens.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Sqrt,
}

impl Func {
    const ALL: [Func; 6] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Abs,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, x: f64) -> Result<f64> {
        match self {
            Func::Exp => Ok(x.exp()),
            Func::Log if x <= 0.0 => Err(Error::Eval(format!("log of nonpositive value {x}"))),
            Func::Log => Ok(x.ln()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Abs => Ok(x.abs()),
            Func::Sqrt if x < 0.0 => Err(Error::Eval(format!("sqrt of negative value {x}"))),
            Func::Sqrt => Ok(x.sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }

    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Expression tree. Variables are indices into the owning [`ExprAst`]'s
/// declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn eval(&self, vars: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Const(c) => c.value(),
            Expr::Var(i) => vars[*i],
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Call(f, e) => f.apply(e.eval(vars)?)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(vars)?;
                let b = r.eval(vars)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => {
                        return Err(Error::Eval(format!("division by zero ({a} / 0)")))
                    }
                    BinOp::Div => a / b,
                    BinOp::Pow if a == 0.0 && b < 0.0 => {
                        return Err(Error::Eval(format!("zero raised to negative power {b}")))
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("non-finite result {v}")))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }

    fn write(&self, vars: &[String], min_prec: u8, out: &mut String) {
        let paren = self.precedence() < min_prec;
        if paren {
            out.push('(');
        }
        match self {
            Expr::Num(x) => out.push_str(&x.to_string()),
            Expr::Const(c) => out.push_str(c.name()),
            Expr::Var(i) => out.push_str(&vars[*i]),
            Expr::Neg(e) => {
                out.push('-');
                e.write(vars, 3, out);
            }
            Expr::Call(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.write(vars, 0, out);
                out.push(')');
            }
            Expr::Bin(op, l, r) => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                l.write(vars, lp, out);
                out.push_str(op.symbol());
                r.write(vars, rp, out);
            }
        }
        if paren {
            out.push(')');
        }
    }
}

/// A parsed expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    root: Expr,
    vars: Vec<String>,
}

impl ExprAst {
    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with positional values matching [`ExprAst::vars`].
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.vars.len() {
            return Err(Error::Argument(format!(
                "expected {} variable value(s), got {}",
                self.vars.len(),
                values.len()
            )));
        }
        self.root.eval(values)
    }

    /// Evaluates with a name-to-value assignment that must cover every variable.
    pub fn eval_named(&self, assignment: &[(&str, f64)]) -> Result<f64> {
        let values = self
            .vars
            .iter()
            .map(|v| {
                assignment
                    .iter()
                    .find(|(name, _)| name == v)
                    .map(|(_, x)| *x)
                    .ok_or_else(|| Error::Argument(format!("no value for variable `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.root.eval(&values)
    }

    /// Builds an AST from a tree; every `Var` index must be in range.
    pub fn from_parts(root: Expr, vars: Vec<String>) -> Result<ExprAst> {
        validate_vars(&vars)?;
        fn check(e: &Expr, n: usize) -> bool {
            match e {
                Expr::Var(i) => *i < n,
                Expr::Neg(a) | Expr::Call(_, a) => check(a, n),
                Expr::Bin(_, a, b) => check(a, n) && check(b, n),
                Expr::Num(x) => x.is_finite() && *x >= 0.0,
                Expr::Const(_) => true,
            }
        }
        if !check(&root, vars.len()) {
            return Err(Error::Argument("malformed expression tree".into()));
        }
        Ok(ExprAst { root, vars })
    }
}

/// Canonical text form; parses back to the same tree.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.root.write(&self.vars, 0, &mut s);
        f.write_str(&s)
    }
}

fn is_reserved(name: &str) -> bool {
    Func::from_name(name).is_some() || name == "pi" || name == "e"
}

fn validate_vars<S: AsRef<str>>(vars: &[S]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        let v = v.as_ref();
        let valid = v
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(Error::Argument(format!("invalid variable name `{v}`")));
        }
        if is_reserved(v) {
            return Err(Error::Argument(format!("variable name `{v}` is reserved")));
        }
        if vars[..i].iter().any(|w| w.as_ref() == v) {
            return Err(Error::Argument(format!("duplicate variable `{v}`")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
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
            let x: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !x.is_finite() {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("number `{text}` overflows"),
                });
            }
            out.push((Tok::Num(x), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(Error::Syntax {
                offset: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self) -> Result<T> {
        let message = match self.peek() {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(x) => format!("unexpected number {x}"),
            Tok::Ident(s) => format!("unexpected identifier `{s}`"),
            Tok::Sym(c) => format!("unexpected `{c}`"),
        };
        Err(Error::Syntax {
            offset: self.offset(),
            message,
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.unexpected()
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                let is_call = *self.peek() == Tok::Sym('(');
                if is_call {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(Error::UnknownIdentifier { name, offset });
                    };
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != 1 {
                        return Err(Error::Arity {
                            name,
                            expected: 1,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.remove(0))));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(Constant::Pi)),
                    "e" => Ok(Expr::Const(Constant::E)),
                    _ if Func::from_name(&name).is_some() => Err(Error::Syntax {
                        offset: self.offset(),
                        message: format!("expected `(` after function `{name}`"),
                    }),
                    _ => Err(Error::UnknownIdentifier { name, offset }),
                }
            }
            _ => self.unexpected(),
        }
    }
}

/// Parses `src` over the declared variables.
pub fn parse_expr<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<ExprAst> {
    validate_vars(vars)?;
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        vars: &vars,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.unexpected();
    }
    Ok(ExprAst { root, vars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy(src: &str) -> Result<ExprAst> {
        parse_expr(src, &["x", "y"])
    }

    #[test]
    fn examples() {
        assert_eq!(xy("2*x*y").unwrap().eval(&[3.0, 0.5]).unwrap(), 3.0);
        assert_eq!(
            parse_expr("t^2 - t", &["t"]).unwrap().eval(&[2.0]).unwrap(),
            2.0
        );
        match xy("2*+x") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_expr("exp(t)", &["t"]).unwrap().eval(&[0.0]).unwrap(),
            1.0
        );
        assert!(matches!(
            xy("1/x").unwrap().eval(&[0.0, 1.0]),
            Err(Error::Eval(_))
        ));
        let s = parse_expr("sin(pi)", &[] as &[&str])
            .unwrap()
            .eval(&[])
            .unwrap();
        assert!(s.abs() <= 1e-15);
    }

    #[test]
    fn precedence() {
        let e = |s: &str| parse_expr(s, &["x"]).unwrap().eval(&[2.0]).unwrap();
        assert_eq!(e("-x^2"), -4.0);
        assert_eq!(e("2^3^2"), 512.0);
        assert_eq!(e("2^-1"), 0.5);
        assert_eq!(e("1 - x - 1"), -2.0);
        assert_eq!(e("8 / x / 2"), 2.0);
        assert_eq!(e("1 + 2 * x"), 5.0);
        assert_eq!(e("(1 + 2) * x"), 6.0);
        assert_eq!(e("-x * 3"), -6.0);
        assert_eq!(e("1.5e1 + .5"), 15.5);
        assert!((e("e") - std::f64::consts::E).abs() == 0.0);
        assert!(parse_expr("2e", &["x"]).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            xy("foo + 1"),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(xy("z"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(xy("bar(x)"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(
            xy("sin(x, y)"),
            Err(Error::Arity { found: 2, .. })
        ));
        assert!(matches!(xy("sin x"), Err(Error::Syntax { .. })));
        assert!(matches!(xy("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(xy("x y"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(xy(""), Err(Error::Syntax { .. })));
        assert!(matches!(xy("x $ y"), Err(Error::Syntax { offset: 2, .. })));
        assert!(parse_expr("x", &["pi"]).is_err());
        assert!(parse_expr("x", &["x", "x"]).is_err());
        let ev = |s: &str, x: f64| xy(s).unwrap().eval(&[x, 0.0]);
        assert!(ev("log(x)", 0.0).is_err());
        assert!(ev("log(x)", -1.0).is_err());
        assert!(ev("sqrt(x)", -1.0).is_err());
        assert!(ev("x^-1", 0.0).is_err());
        assert!(ev("exp(x)", 1000.0).is_err());
        assert!(ev("x^0.5", -1.0).is_err());
    }

    #[test]
    fn named_assignment() {
        let a = xy("x - y").unwrap();
        assert_eq!(a.eval_named(&[("y", 1.0), ("x", 5.0)]).unwrap(), 4.0);
        assert!(a.eval_named(&[("x", 5.0)]).is_err());
        assert!(a.eval(&[1.0]).is_err());
    }

    #[test]
    fn display_canonical() {
        for (src, canon) in [
            ("2*x*y", "2 * x * y"),
            ("x-(y-1)", "x - (y - 1)"),
            ("-x^2", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("(x^y)^2", "(x^y)^2"),
            ("x^y^2", "x^y^2"),
            ("x - -y", "x - -y"),
            ("sqrt(abs(x))/ (1+y)", "sqrt(abs(x)) / (1 + y)"),
        ] {
            assert_eq!(xy(src).unwrap().to_string(), canon);
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
            (0usize..2).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (0usize..6, inner.clone()).prop_map(|(f, e)| Expr::Call(Func::ALL[f], Box::new(e))),
                (0usize..5, inner.clone(), inner).prop_map(|(o, a, b)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][o];
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let ast = ExprAst::from_parts(e, vec!["x".into(), "y".into()]).unwrap();
            let printed = ast.to_string();
            let reparsed = xy(&printed).unwrap();
            prop_assert_eq!(&reparsed, &ast);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
