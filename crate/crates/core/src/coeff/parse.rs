//! Coefficient DSL.
//!
//! ```text
//! program   := statement ((';' | '\n') statement)*
//! statement := 'dim' '=' INT | 'a' IJ '=' expr
//! expr      := term (('+' | '-') term)*
//! term      := unary (('*' | '/') unary)*
//! unary     := ('+' | '-') unary | primary
//! primary   := NUMBER | 'pi' | VAR | ('cos' | 'sin') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Expressions are expanded symbolically; a trigonometric argument must reduce
//! to `2*pi*K*v` with integer `K >= 1` and `v` one of `y1, y2, z1, z2`.
//! Variables may only appear inside trigonometric arguments, and division is
//! only by constants. Omitted off-diagonal entries are zero.

use std::f64::consts::PI;

use super::{CoefficientSpec, Scale, Term, Trig, TrigFactor, TrigPoly};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Eq,
    Sep,
    End,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            })
        };
        match c {
            '\n' => {
                push(&mut out, Tok::Sep);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ';' => push(&mut out, Tok::Sep),
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            '*' => push(&mut out, Tok::Star),
            '/' => push(&mut out, Tok::Slash),
            '(' => push(&mut out, Tok::LParen),
            ')' => push(&mut out, Tok::RParen),
            '=' => push(&mut out, Tok::Eq),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
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
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    line: l0,
                    column: c0,
                    message: format!("malformed number '{s}'"),
                })?;
                push(&mut out, Tok::Num(v));
                col += i - start;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                push(&mut out, Tok::Ident(s));
                col += i - start;
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// One monomial of the symbolic expansion: `coeff * pi^pi_pow * vars * trig`.
#[derive(Clone, Debug)]
struct Mono {
    coeff: f64,
    pi_pow: i32,
    vars: Vec<(Scale, usize)>,
    trig: Vec<TrigFactor>,
}

impl Mono {
    fn number(c: f64) -> Self {
        Mono {
            coeff: c,
            pi_pow: 0,
            vars: Vec::new(),
            trig: Vec::new(),
        }
    }

    fn is_constant(&self) -> bool {
        self.vars.is_empty() && self.trig.is_empty()
    }

    fn constant_value(&self) -> f64 {
        self.coeff * PI.powi(self.pi_pow)
    }

    fn mul(&self, other: &Mono) -> Mono {
        let mut vars = self.vars.clone();
        vars.extend_from_slice(&other.vars);
        vars.sort();
        let mut trig = self.trig.clone();
        trig.extend_from_slice(&other.trig);
        trig.sort();
        Mono {
            coeff: self.coeff * other.coeff,
            pi_pow: self.pi_pow + other.pi_pow,
            vars,
            trig,
        }
    }
}

type Sum = Vec<Mono>;

/// Merge monomials that differ only in their coefficient; drop zeros.
fn simplify(sum: &Sum) -> Sum {
    let mut out: Sum = Vec::new();
    for m in sum {
        match out
            .iter_mut()
            .find(|o| o.pi_pow == m.pi_pow && o.vars == m.vars && o.trig == m.trig)
        {
            Some(o) => o.coeff += m.coeff,
            None => out.push(m.clone()),
        }
    }
    out.retain(|m| m.coeff != 0.0);
    out
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, at: &Spanned, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: at.line,
            column: at.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            self.syntax(&t, format!("expected {what}, found {:?}", t.tok))
        }
    }

    fn expr(&mut self) -> Result<Sum> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc.extend(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc.extend(self.term()?.into_iter().map(|mut m| {
                        m.coeff = -m.coeff;
                        m
                    }));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Sum> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = acc
                        .iter()
                        .flat_map(|a| rhs.iter().map(move |b| a.mul(b)))
                        .collect();
                }
                Tok::Slash => {
                    let at = self.bump();
                    let rhs = self.unary()?;
                    if !rhs.iter().all(Mono::is_constant) {
                        return self.syntax(&at, "division is only allowed by a constant");
                    }
                    let denom: f64 = rhs.iter().map(Mono::constant_value).sum();
                    if denom == 0.0 {
                        return self.syntax(&at, "division by zero");
                    }
                    for m in &mut acc {
                        m.coeff /= denom;
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Sum> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                let mut v = self.unary()?;
                for m in &mut v {
                    m.coeff = -m.coeff;
                }
                Ok(v)
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Sum> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(v) => Ok(vec![Mono::number(*v)]),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(v)
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => Ok(vec![Mono {
                    pi_pow: 1,
                    ..Mono::number(1.0)
                }]),
                "cos" | "sin" => {
                    let kind = if name == "cos" { Trig::Cos } else { Trig::Sin };
                    self.expect(Tok::LParen, "'(' after trigonometric function")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    trig_factor(kind, &arg, &t).map(|m| vec![m])
                }
                other => match variable(other) {
                    Some(v) => Ok(vec![Mono {
                        vars: vec![v],
                        ..Mono::number(1.0)
                    }]),
                    None => self.syntax(&t, format!("unknown identifier '{other}'")),
                },
            },
            other => self.syntax(&t, format!("unexpected {other:?}")),
        }
    }
}

fn variable(name: &str) -> Option<(Scale, usize)> {
    let mut chars = name.chars();
    let scale = match chars.next()? {
        'y' => Scale::Slow,
        'z' => Scale::Fast,
        _ => return None,
    };
    let idx: usize = chars.as_str().parse().ok()?;
    (idx >= 1).then_some((scale, idx - 1))
}

/// Reduce `cos(arg)` / `sin(arg)` to a single trigonometric factor.
fn trig_factor(kind: Trig, arg: &Sum, at: &Spanned) -> Result<Mono> {
    let freq_err = |message: String| Error::Frequency {
        line: at.line,
        column: at.column,
        message,
    };
    let arg = simplify(arg);
    let mono = match arg.as_slice() {
        [m] => m,
        _ => {
            return Err(freq_err(
                "argument must be a single term of the form 2*pi*K*v".into(),
            ))
        }
    };
    if !mono.trig.is_empty() || mono.vars.len() != 1 || mono.pi_pow != 1 {
        return Err(freq_err(
            "argument must be a single term of the form 2*pi*K*v".into(),
        ));
    }
    let half = mono.coeff / 2.0;
    let k = half.abs().round();
    if k < 1.0 || (half.abs() - k).abs() > 1e-12 * k.max(1.0) {
        return Err(freq_err(format!(
            "frequency {half} is not a positive integer; period must divide 1"
        )));
    }
    let (scale, axis) = mono.vars[0];
    let sign = if half < 0.0 && kind == Trig::Sin { -1.0 } else { 1.0 };
    Ok(Mono {
        coeff: sign,
        pi_pow: 0,
        vars: Vec::new(),
        trig: vec![TrigFactor {
            scale,
            axis,
            freq: k as u32,
            kind,
        }],
    })
}

fn to_poly(sum: Sum, at: &Spanned) -> Result<TrigPoly> {
    let mut terms = Vec::with_capacity(sum.len());
    for m in sum {
        if !m.vars.is_empty() {
            return Err(Error::Syntax {
                line: at.line,
                column: at.column,
                message: "variables may only appear inside cos/sin".into(),
            });
        }
        terms.push(Term {
            coeff: m.constant_value(),
            factors: m.trig,
        });
    }
    Ok(TrigPoly { terms })
}

/// Parse DSL source into a [`CoefficientSpec`]. The dimension is the largest
/// of an explicit `dim = N`, any entry index and any variable index.
pub fn parse_coefficient(text: &str) -> Result<CoefficientSpec> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut entries: Vec<((usize, usize), TrigPoly, Spanned)> = Vec::new();
    let mut declared_dim: Option<usize> = None;
    loop {
        while p.peek().tok == Tok::Sep {
            p.bump();
        }
        if p.peek().tok == Tok::End {
            break;
        }
        let head = p.bump();
        let name = match &head.tok {
            Tok::Ident(s) => s.clone(),
            _ => return p.syntax(&head, "expected 'aIJ =' or 'dim ='"),
        };
        p.expect(Tok::Eq, "'='")?;
        if name == "dim" {
            let v = p.bump();
            match v.tok {
                Tok::Num(n) if n.fract() == 0.0 && n >= 1.0 => declared_dim = Some(n as usize),
                _ => return p.syntax(&v, "dim must be a positive integer"),
            }
        } else {
            let idx = name
                .strip_prefix('a')
                .filter(|s| s.len() == 2 && s.chars().all(|c| c.is_ascii_digit()))
                .map(|s| {
                    let b = s.as_bytes();
                    ((b[0] - b'0') as usize, (b[1] - b'0') as usize)
                });
            let (i, j) = match idx {
                Some((i, j)) if i >= 1 && j >= 1 => (i - 1, j - 1),
                _ => return p.syntax(&head, format!("unknown entry '{name}'")),
            };
            if entries.iter().any(|(ij, _, _)| *ij == (i, j)) {
                return p.syntax(&head, format!("entry '{name}' assigned twice"));
            }
            let sum = p.expr()?;
            let poly = to_poly(sum, &head)?;
            entries.push(((i, j), poly, head));
        }
        match p.peek().tok {
            Tok::Sep | Tok::End => {}
            _ => {
                let t = p.peek().clone();
                return p.syntax(&t, format!("unexpected {:?} after statement", t.tok));
            }
        }
    }

    let mut dim = declared_dim.unwrap_or(1);
    for ((i, j), poly, _) in &entries {
        let axes = poly
            .terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|f| f.axis + 1));
        let needed = (*i + 1).max(*j + 1).max(axes.max().unwrap_or(1));
        if declared_dim.is_some_and(|d| needed > d) {
            return Err(Error::Dimension(format!(
                "entry a{}{} needs dimension {needed}, declared {}",
                i + 1,
                j + 1,
                declared_dim.unwrap()
            )));
        }
        dim = dim.max(needed);
    }
    if dim > 2 {
        return Err(Error::Dimension(format!(
            "dimension {dim} not supported (1 or 2)"
        )));
    }
    let mut table: Vec<Option<TrigPoly>> = vec![None; dim * dim];
    for ((i, j), poly, _) in entries {
        table[i * dim + j] = Some(poly);
    }
    let mut out = Vec::with_capacity(dim * dim);
    for (n, e) in table.into_iter().enumerate() {
        let (i, j) = (n / dim, n % dim);
        match e {
            Some(p) => out.push(p),
            None if i != j => out.push(TrigPoly::default()),
            None => {
                return Err(Error::Dimension(format!(
                    "diagonal entry a{}{} is missing",
                    i + 1,
                    j + 1
                )))
            }
        }
    }
    CoefficientSpec::new(dim, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_from_semicolons() {
        let spec = parse_coefficient("a11 = 1; a12 = 0; a21 = 0; a22 = 1").unwrap();
        assert_eq!(spec.to_dsl(), CoefficientSpec::identity(2).to_dsl());
    }

    #[test]
    fn half_frequency_is_rejected() {
        match parse_coefficient("a11 = cos(pi*y1)") {
            Err(Error::Frequency { line: 1, column: 7, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_coefficient("a11 = 2\na22 = 3 +* cos(2*pi*z2)") {
            Err(Error::Syntax { line: 2, column: 10, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bare_variable_is_rejected() {
        assert!(matches!(
            parse_coefficient("a11 = 2 + y1"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn missing_diagonal_is_a_dimension_error() {
        assert!(matches!(
            parse_coefficient("a11 = 2; a12 = 1"),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            parse_coefficient("dim = 1\na11 = 2 + cos(2*pi*z2)"),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn products_expand() {
        let spec = parse_coefficient("a11 = (2 + cos(2*pi*y1))*(2 + cos(2*pi*z1)) / 1").unwrap();
        for (y, z) in [(0.1, 0.7), (0.33, 0.25), (0.9, 0.05)] {
            let want = (2.0 + (2.0 * PI * y).cos()) * (2.0 + (2.0 * PI * z).cos());
            assert!((spec.eval(&[y], &[z])[(0, 0)] - want).abs() < 1e-14);
        }
        assert_eq!(spec.entry(0, 0).terms.len(), 4);
    }

    #[test]
    fn negative_frequency_folds_sign() {
        let a = parse_coefficient("a11 = 2 + sin(-2*pi*3*z1)").unwrap();
        let b = parse_coefficient("a11 = 2 - sin(6*pi*z1)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn comments_and_dim_declaration() {
        let spec = parse_coefficient("# laminate\ndim = 2\na11 = 3 + cos(2*pi*z1) # fast\na22 = 1").unwrap();
        assert_eq!(spec.dim(), 2);
    }
}
