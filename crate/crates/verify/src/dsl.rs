//! Constraint language: one comparison of unit-carrying arithmetic over
//! component attributes.
//!
//! ```text
//! constraint := expr cmp expr
//! cmp        := "<=" | "<" | ">=" | ">" | "=="
//! expr       := term (("+" | "-") term)*
//! term       := factor (("*" | "/") factor)*
//! factor     := number unit? | "-" factor | "(" expr ")" | call
//! call       := ("sum" | "max" | "min") "(" selector "," attr ")"
//!             | "count" "(" selector ")"
//!             | "attr" "(" selector "," attr ")"
//! selector   := "*" | "tag:" token | name glob
//! ```

use std::fmt;

use rust_decimal::Decimal;
use thiserror::Error;
use workbench_core::units::attribute_dimension;
use workbench_core::{Component, ConstraintRecord, Dimension, Measure, Uid, Unit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at column {}: {message}", .offset + 1)]
    Syntax { offset: usize, message: String },
    #[error("unknown unit `{unit}` at column {}", .offset + 1)]
    UnknownUnit { offset: usize, unit: String },
    #[error("unknown attribute `{name}` at column {}", .offset + 1)]
    UnknownAttribute { offset: usize, name: String },
    #[error("unit mismatch at column {}: {left} vs {right}", .offset + 1)]
    UnitMismatch { offset: usize, left: String, right: String },
}

impl DslError {
    pub fn offset(&self) -> usize {
        match self {
            DslError::Syntax { offset, .. }
            | DslError::UnknownUnit { offset, .. }
            | DslError::UnknownAttribute { offset, .. }
            | DslError::UnitMismatch { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    All,
    Tag(String),
    Glob(String),
}

impl Selector {
    pub fn matches(&self, c: &Component) -> bool {
        match self {
            Selector::All => true,
            Selector::Tag(t) => c.function_tags.contains(t),
            Selector::Glob(g) => glob_match(&g.to_lowercase(), &c.name.to_lowercase()),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("all"),
            Selector::Tag(t) => write!(f, "tag:{t}"),
            Selector::Glob(g) => f.write_str(g),
        }
    }
}

/// `*` matches any run, `?` one character.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl CmpOp {
    pub fn holds(self, l: Decimal, r: Decimal) -> bool {
        match self {
            CmpOp::Le => l <= r,
            CmpOp::Lt => l < r,
            CmpOp::Ge => l >= r,
            CmpOp::Gt => l > r,
            CmpOp::Eq => l == r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit {
        value: Decimal,
        unit: Option<Unit>,
    },
    Attr {
        selector: Selector,
        name: String,
    },
    Agg {
        op: Aggregate,
        selector: Selector,
        name: String,
    },
    Count {
        selector: Selector,
    },
    Neg(Box<Expr>),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub op: CmpOp,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit { value, unit: Some(u) } => write!(f, "{value} {u}"),
            Expr::Lit { value, unit: None } => write!(f, "{value}"),
            Expr::Attr { selector, name } => write!(f, "Attr({selector}, {name})"),
            Expr::Agg { op, selector, name } => write!(f, "{op:?}({selector}, {name})"),
            Expr::Count { selector } => write!(f, "Count({selector})"),
            Expr::Neg(e) => write!(f, "Neg({e})"),
            Expr::Bin { op, lhs, rhs } => write!(f, "{op:?}({lhs}, {rhs})"),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}, {})", self.op, self.lhs, self.rhs)
    }
}

/// A parsed, unit-checked constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSpec {
    pub uid: Option<Uid>,
    pub origin: Option<Uid>,
    pub text: String,
    pub ast: Comparison,
}

impl ConstraintSpec {
    pub fn from_record(r: &ConstraintRecord) -> Result<Self, DslError> {
        let mut spec = parse_constraint(&r.text)?;
        spec.uid = Some(r.uid.clone());
        spec.origin = r.origin.clone();
        Ok(spec)
    }
}

pub fn parse_constraint(text: &str) -> Result<ConstraintSpec, DslError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let ast = p.comparison()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(ConstraintSpec {
        uid: None,
        origin: None,
        text: text.to_string(),
        ast,
    })
}

/// Statements of a constraint file: one per line, `#` starts a comment.
pub fn parse_constraint_file(src: &str) -> Result<Vec<ConstraintSpec>, (usize, DslError)> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let stmt = line.split('#').next().unwrap_or("").trim();
        if !stmt.is_empty() {
            out.push(parse_constraint(stmt).map_err(|e| (i + 1, e))?);
        }
    }
    Ok(out)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn syntax(&self, message: &str) -> DslError {
        DslError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), DslError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{s}`")))
        }
    }

    fn comparison(&mut self) -> Result<Comparison, DslError> {
        let (lhs, ldim) = self.expr()?;
        let at = {
            self.skip_ws();
            self.pos
        };
        let op = if self.eat("<=") {
            CmpOp::Le
        } else if self.eat(">=") {
            CmpOp::Ge
        } else if self.eat("==") {
            CmpOp::Eq
        } else if self.eat("<") {
            CmpOp::Lt
        } else if self.eat(">") {
            CmpOp::Gt
        } else {
            return Err(self.syntax("expected a comparison operator"));
        };
        let (rhs, rdim) = self.expr()?;
        same_dim(at, ldim, rdim)?;
        Ok(Comparison { op, lhs, rhs })
    }

    fn expr(&mut self) -> Result<(Expr, Dimension), DslError> {
        let (mut lhs, mut dim) = self.term()?;
        loop {
            self.skip_ws();
            let at = self.pos;
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok((lhs, dim));
            };
            let (rhs, rdim) = self.term()?;
            same_dim(at, dim, rdim)?;
            lhs = Expr::Bin {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
            dim = rdim;
        }
    }

    fn term(&mut self) -> Result<(Expr, Dimension), DslError> {
        let (mut lhs, mut dim) = self.factor()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok((lhs, dim));
            };
            let (rhs, rdim) = self.factor()?;
            dim = if op == BinOp::Mul {
                dim.product(rdim)
            } else {
                dim.quotient(rdim)
            };
            lhs = Expr::Bin {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn factor(&mut self) -> Result<(Expr, Dimension), DslError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                let (e, d) = self.factor()?;
                Ok((Expr::Neg(Box::new(e)), d))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.literal(),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(_) => Err(self.syntax("expected a number, `(` or a function")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn literal(&mut self) -> Result<(Expr, Dimension), DslError> {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == '.')
        {
            self.pos += 1;
        }
        let num: String = self.chars[start..self.pos].iter().collect();
        let value = Decimal::from_str_exact(&num).map_err(|_| DslError::Syntax {
            offset: start,
            message: format!("bad number `{num}`"),
        })?;
        self.skip_ws();
        let ustart = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        if ustart == self.pos {
            return Ok((Expr::Lit { value, unit: None }, Dimension::NONE));
        }
        let sym: String = self.chars[ustart..self.pos].iter().collect();
        let unit = Unit::from_symbol(&sym).ok_or(DslError::UnknownUnit {
            offset: ustart,
            unit: sym,
        })?;
        Ok((
            Expr::Lit {
                value,
                unit: Some(unit),
            },
            unit.dimension(),
        ))
    }

    fn ident(&mut self) -> (usize, String) {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        (start, self.chars[start..self.pos].iter().collect())
    }

    fn selector(&mut self) -> Result<Selector, DslError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| *c != ',' && *c != ')') {
            self.pos += 1;
        }
        let raw: String = self.chars[start..self.pos].iter().collect();
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(DslError::Syntax {
                offset: start,
                message: "empty selector".into(),
            });
        }
        Ok(if raw == "*" {
            Selector::All
        } else if let Some(t) = raw.strip_prefix("tag:") {
            Selector::Tag(t.trim().to_string())
        } else {
            Selector::Glob(raw.to_string())
        })
    }

    fn attribute(&mut self) -> Result<(String, Dimension), DslError> {
        let (at, name) = self.ident();
        if name.is_empty() {
            return Err(self.syntax("expected an attribute name"));
        }
        let dim = attribute_dimension(&name).ok_or(DslError::UnknownAttribute {
            offset: at,
            name: name.clone(),
        })?;
        Ok((name, dim))
    }

    fn call(&mut self) -> Result<(Expr, Dimension), DslError> {
        let (at, name) = self.ident();
        self.expect("(")?;
        let selector = self.selector()?;
        let out = match name.as_str() {
            "count" => (Expr::Count { selector }, Dimension::NONE),
            "sum" | "max" | "min" | "attr" => {
                self.expect(",")?;
                let (attr, dim) = self.attribute()?;
                let e = match name.as_str() {
                    "attr" => Expr::Attr { selector, name: attr },
                    agg => Expr::Agg {
                        op: match agg {
                            "sum" => Aggregate::Sum,
                            "max" => Aggregate::Max,
                            _ => Aggregate::Min,
                        },
                        selector,
                        name: attr,
                    },
                };
                (e, dim)
            }
            _ => {
                return Err(DslError::Syntax {
                    offset: at,
                    message: format!("unknown function `{name}`"),
                })
            }
        };
        self.expect(")")?;
        Ok(out)
    }
}

fn same_dim(offset: usize, l: Dimension, r: Dimension) -> Result<(), DslError> {
    if l == r {
        Ok(())
    } else {
        Err(DslError::UnitMismatch {
            offset,
            left: l.to_string(),
            right: r.to_string(),
        })
    }
}

/// What a constraint's sides evaluated to, and which components fed them.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub lhs: Measure,
    pub rhs: Measure,
    pub holds: bool,
    pub contributing: Vec<Uid>,
    pub missing: Vec<(Uid, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalIssue {
    /// `attr()` matched no component, or more than one.
    Unresolved(String),
    /// An aggregate over nothing, a missing single attribute, or division by zero.
    Undefined(String),
}

struct Ctx<'a> {
    components: Vec<&'a Component>,
    contributing: std::collections::BTreeSet<Uid>,
    missing: std::collections::BTreeSet<(Uid, String)>,
}

pub fn evaluate<'a>(
    ast: &Comparison,
    components: impl IntoIterator<Item = &'a Component>,
) -> Result<Evaluation, EvalIssue> {
    let mut ctx = Ctx {
        components: components.into_iter().collect(),
        contributing: Default::default(),
        missing: Default::default(),
    };
    let lhs = eval(&ast.lhs, &mut ctx)?;
    let rhs = eval(&ast.rhs, &mut ctx)?;
    Ok(Evaluation {
        holds: ast.op.holds(lhs.value, rhs.value),
        lhs,
        rhs,
        contributing: ctx.contributing.into_iter().collect(),
        missing: ctx.missing.into_iter().collect(),
    })
}

fn overflow() -> EvalIssue {
    EvalIssue::Undefined("arithmetic overflow".into())
}

fn eval(e: &Expr, ctx: &mut Ctx<'_>) -> Result<Measure, EvalIssue> {
    match e {
        Expr::Lit { value, unit } => Ok(match unit {
            Some(u) => Measure::new(value * u.factor(), u.dimension()),
            None => Measure::scalar(*value),
        }),
        Expr::Count { selector } => {
            let n = ctx.components.iter().filter(|c| selector.matches(c)).count();
            Ok(Measure::scalar(Decimal::from(n)))
        }
        Expr::Attr { selector, name } => {
            let hits: Vec<&Component> = ctx.components.iter().copied().filter(|c| selector.matches(c)).collect();
            let [c] = hits.as_slice() else {
                return Err(EvalIssue::Unresolved(format!(
                    "selector `{selector}` matches {} components, expected one",
                    hits.len()
                )));
            };
            match c.attributes.get(name) {
                Some(q) => {
                    ctx.contributing.insert(c.uid.clone());
                    Ok(Measure::from(*q))
                }
                None => {
                    ctx.missing.insert((c.uid.clone(), name.clone()));
                    Err(EvalIssue::Undefined(format!("{} has no `{name}`", c.name)))
                }
            }
        }
        Expr::Agg { op, selector, name } => {
            let dim = attribute_dimension(name).expect("checked at parse time");
            let mut values = Vec::new();
            for c in ctx.components.iter().filter(|c| selector.matches(c)) {
                match c.attributes.get(name) {
                    Some(q) => {
                        ctx.contributing.insert(c.uid.clone());
                        values.push(Measure::from(*q).value);
                    }
                    None => {
                        ctx.missing.insert((c.uid.clone(), name.clone()));
                    }
                }
            }
            let v = match op {
                Aggregate::Sum => values
                    .iter()
                    .try_fold(Decimal::ZERO, |acc, v| acc.checked_add(*v))
                    .ok_or_else(overflow)?,
                Aggregate::Max => values
                    .iter()
                    .copied()
                    .max()
                    .ok_or_else(|| EvalIssue::Undefined(format!("max over no `{name}` values for `{selector}`")))?,
                Aggregate::Min => values
                    .iter()
                    .copied()
                    .min()
                    .ok_or_else(|| EvalIssue::Undefined(format!("min over no `{name}` values for `{selector}`")))?,
            };
            Ok(Measure::new(v, dim))
        }
        Expr::Neg(inner) => {
            let m = eval(inner, ctx)?;
            Ok(Measure::new(-m.value, m.dim))
        }
        Expr::Bin { op, lhs, rhs } => {
            let l = eval(lhs, ctx)?;
            let r = eval(rhs, ctx)?;
            match op {
                BinOp::Add => l.checked_add(r).ok_or_else(overflow),
                BinOp::Sub => l.checked_sub(r).ok_or_else(overflow),
                BinOp::Mul => l.checked_mul(r).ok_or_else(overflow),
                BinOp::Div if r.value.is_zero() => Err(EvalIssue::Undefined("division by zero".into())),
                BinOp::Div => l.checked_div(r).ok_or_else(overflow),
            }
        }
    }
}
