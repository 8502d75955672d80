//! Arithmetic expressions in `x1`, `x2`, `z` for scenario files.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names are `x1`, `x2` (aliases `x`, `y`), `z`, `pi` and `e`; functions are `exp`, `log`,
//! `sin`, `cos`, `tanh`, `sqrt`, `abs`, `min`, `max` and `const` (the identity, for
//! readability of constant expressions).

use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character '{ch}' at offset {pos}")]
    Char { ch: char, pos: usize },
    #[error("unexpected end of expression")]
    End,
    #[error("unexpected token {found} at offset {pos}, expected {expected}")]
    Token {
        found: String,
        pos: usize,
        expected: &'static str,
    },
    #[error("unknown name '{0}'")]
    Name(String),
    #[error("function '{name}' takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: &'static str,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    X1,
    X2,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Abs,
    Const,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression, evaluated at `(x1, x2, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let text = &src[chars[start].0..end];
            let v = text.parse().map_err(|_| ParseError::Char { ch: c, pos })?;
            out.push((Tok::Num(v), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            out.push((Tok::Ident(src[chars[start].0..end].to_string()), pos));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
        } else {
            return Err(ParseError::Char { ch: c, pos });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, expected: &'static str) -> Result<(), ParseError> {
        if self.eat(c) {
            return Ok(());
        }
        Err(self.unexpected(expected))
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.toks.get(self.at) {
            Some((t, pos)) => ParseError::Token {
                found: t.to_string(),
                pos: *pos,
                expected,
            },
            None => ParseError::End,
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                '+'
            } else if self.eat('-') {
                '-'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                '*'
            } else if self.eat('/') {
                '/'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            // right-associative, and binds tighter than a leading minus on its right
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some((tok, _)) = self.toks.get(self.at).cloned() else {
            return Err(ParseError::End);
        };
        match tok {
            Tok::Num(v) => {
                self.at += 1;
                Ok(Node::Num(v))
            }
            Tok::Sym('(') => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')', "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.at += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')', "')' or ','")?;
                    call(&name, args)
                } else {
                    Ok(match name.as_str() {
                        "x1" | "x" => Node::Var(Var::X1),
                        "x2" | "y" => Node::Var(Var::X2),
                        "z" => Node::Var(Var::Z),
                        "pi" => Node::Num(std::f64::consts::PI),
                        "e" => Node::Num(std::f64::consts::E),
                        _ => return Err(ParseError::Name(name)),
                    })
                }
            }
            Tok::Sym(_) => Err(self.unexpected("a number, name or '('")),
        }
    }
}

fn call(name: &str, args: Vec<Node>) -> Result<Node, ParseError> {
    let f = match name {
        "exp" => Func::Exp,
        "log" => Func::Log,
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "tanh" => Func::Tanh,
        "sqrt" => Func::Sqrt,
        "abs" => Func::Abs,
        "const" => Func::Const,
        "min" => Func::Min,
        "max" => Func::Max,
        _ => return Err(ParseError::Name(name.to_string())),
    };
    let binary = matches!(f, Func::Min | Func::Max);
    let ok = if binary { args.len() >= 2 } else { args.len() == 1 };
    if !ok {
        return Err(ParseError::Arity {
            name: name.to_string(),
            expected: if binary { "two or more" } else { "one" },
            got: args.len(),
        });
    }
    Ok(Node::Call(f, args))
}

fn eval(node: &Node, x: [f64; 2], z: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(Var::X1) => x[0],
        Node::Var(Var::X2) => x[1],
        Node::Var(Var::Z) => z,
        Node::Neg(a) => -eval(a, x, z),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, z), eval(b, x, z));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let mut vals = args.iter().map(|a| eval(a, x, z));
            match f {
                Func::Min => vals.fold(f64::INFINITY, f64::min),
                Func::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                _ => {
                    let v = vals.next().unwrap_or(f64::NAN);
                    match f {
                        Func::Exp => v.exp(),
                        Func::Log => v.ln(),
                        Func::Sin => v.sin(),
                        Func::Cos => v.cos(),
                        Func::Tanh => v.tanh(),
                        Func::Sqrt => v.sqrt(),
                        Func::Abs => v.abs(),
                        _ => v,
                    }
                }
            }
        }
    }
}

fn mentions(node: &Node, var: Var) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var(v) => *v == var,
        Node::Neg(a) => mentions(a, var),
        Node::Bin(_, a, b) => mentions(a, var) || mentions(b, var),
        Node::Call(_, args) => args.iter().any(|a| mentions(a, var)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, at: 0 };
        let root = p.expr()?;
        if p.at != p.toks.len() {
            return Err(p.unexpected("end of expression"));
        }
        Ok(Expr {
            root,
            source: src.to_string(),
        })
    }

    pub fn eval(&self, x: [f64; 2], z: f64) -> f64 {
        eval(&self.root, x, z)
    }

    pub fn depends_on_z(&self) -> bool {
        mentions(&self.root, Var::Z)
    }

    /// `Some(c)` when the expression mentions no variable.
    pub fn as_constant(&self) -> Option<f64> {
        let free = [Var::X1, Var::X2, Var::Z].iter().all(|&v| !mentions(&self.root, v));
        free.then(|| self.eval([0.0, 0.0], 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: [f64; 2], z: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x, z)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", [0.0; 2], 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", [0.0; 2], 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", [0.0; 2], 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", [0.0; 2], 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", [0.0; 2], 0.0), 1.0);
        assert_eq!(ev("(1 - 2) - 3", [0.0; 2], 0.0), -4.0);
        assert_eq!(ev("1.5e1 + 2E-1", [0.0; 2], 0.0), 15.2);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("0.3 + 0.1*tanh(z) + 0.05*x1*x2", [2.0, 3.0], 0.0);
        assert!((v - 0.6).abs() < 1e-15);
        assert_eq!(ev("max(x, y, z)", [1.0, 5.0], 2.0), 5.0);
        assert_eq!(ev("min(x, z)", [1.0, 5.0], -2.0), -2.0);
        assert!((ev("exp(log(2)) + sin(0) + cos(0) + sqrt(4) + abs(-1) + const(0.25)", [0.0; 2], 0.0) - 6.25).abs() < 1e-15);
        assert!((ev("pi - 2*e", [0.0; 2], 0.0) - (std::f64::consts::PI - 2.0 * std::f64::consts::E)).abs() < 1e-15);
        assert!(Expr::parse("0.5*z").unwrap().depends_on_z());
        assert_eq!(Expr::parse("2*0.3").unwrap().as_constant(), Some(0.6));
        assert_eq!(Expr::parse("x1").unwrap().as_constant(), None);
    }

    #[test]
    fn errors() {
        assert!(matches!(Expr::parse("1 +"), Err(ParseError::End)));
        assert!(matches!(Expr::parse("foo"), Err(ParseError::Name(_))));
        assert!(matches!(Expr::parse("exp(1, 2)"), Err(ParseError::Arity { .. })));
        assert!(matches!(Expr::parse("max(1)"), Err(ParseError::Arity { .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(ParseError::Char { ch: '$', pos: 2 })));
        assert!(matches!(Expr::parse("(1"), Err(ParseError::End)));
        assert!(matches!(Expr::parse("1 2"), Err(ParseError::Token { .. })));
    }

    proptest::proptest! {
        #[test]
        fn arithmetic_matches_rust(a in -1e3f64..1e3, b in -1e3f64..1e3, c in 0.1f64..1e3, x in -5f64..5.0, z in -5f64..5.0) {
            let src = format!("{a:?} + {b:?}*x1 - z/{c:?}");
            let got = Expr::parse(&src).unwrap().eval([x, 0.0], z);
            let want = a + b * x - z / c;
            proptest::prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn constants_fold(a in 0.0f64..10.0, p in 0.0f64..3.0) {
            let e = Expr::parse(&format!("max({a:?}, 1)^{p:?}")).unwrap();
            proptest::prop_assert_eq!(e.as_constant(), Some(a.max(1.0).powf(p)));
        }
    }
}
