//! Integer/boolean expressions for state-machine guards, assignments and
//! invariants.
//!
//! Operators by precedence, loosest first: `||`, `&&`, `!`, comparisons
//! (`== != < <= > >=`), `+ -`, `* / %`, unary `-`. Atoms are integer
//! literals, `true`, `false`, variable names and parentheses.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at column {}: {message}", .offset + 1)]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

/// Variables are resolved to slots at compile time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IExpr {
    Int(i64),
    Bool(bool),
    Var(usize),
    Not(Box<IExpr>),
    Neg(Box<IExpr>),
    Bin(Op, Box<IExpr>, Box<IExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    I(i64),
    B(bool),
}

impl IExpr {
    pub fn eval_int(&self, vars: &[i64]) -> Result<i64, EvalError> {
        match self.eval(vars)? {
            Val::I(v) => Ok(v),
            Val::B(_) => unreachable!("type checked"),
        }
    }

    pub fn eval_bool(&self, vars: &[i64]) -> Result<bool, EvalError> {
        match self.eval(vars)? {
            Val::B(v) => Ok(v),
            Val::I(_) => unreachable!("type checked"),
        }
    }

    fn eval(&self, vars: &[i64]) -> Result<Val, EvalError> {
        Ok(match self {
            IExpr::Int(v) => Val::I(*v),
            IExpr::Bool(b) => Val::B(*b),
            IExpr::Var(i) => Val::I(vars[*i]),
            IExpr::Not(e) => Val::B(!e.eval_bool(vars)?),
            IExpr::Neg(e) => Val::I(e.eval_int(vars)?.checked_neg().ok_or(EvalError::Overflow)?),
            IExpr::Bin(Op::Or, l, r) => Val::B(l.eval_bool(vars)? || r.eval_bool(vars)?),
            IExpr::Bin(Op::And, l, r) => Val::B(l.eval_bool(vars)? && r.eval_bool(vars)?),
            IExpr::Bin(op, l, r) => {
                let (a, b) = (l.eval(vars)?, r.eval(vars)?);
                match (a, b) {
                    (Val::B(a), Val::B(b)) => Val::B(match op {
                        Op::Eq => a == b,
                        Op::Ne => a != b,
                        _ => unreachable!("type checked"),
                    }),
                    (Val::I(a), Val::I(b)) => match op {
                        Op::Eq => Val::B(a == b),
                        Op::Ne => Val::B(a != b),
                        Op::Lt => Val::B(a < b),
                        Op::Le => Val::B(a <= b),
                        Op::Gt => Val::B(a > b),
                        Op::Ge => Val::B(a >= b),
                        Op::Add => Val::I(a.checked_add(b).ok_or(EvalError::Overflow)?),
                        Op::Sub => Val::I(a.checked_sub(b).ok_or(EvalError::Overflow)?),
                        Op::Mul => Val::I(a.checked_mul(b).ok_or(EvalError::Overflow)?),
                        Op::Div | Op::Rem if b == 0 => return Err(EvalError::DivisionByZero),
                        Op::Div => Val::I(a.checked_div(b).ok_or(EvalError::Overflow)?),
                        Op::Rem => Val::I(a.checked_rem(b).ok_or(EvalError::Overflow)?),
                        Op::Or | Op::And => unreachable!(),
                    },
                    _ => unreachable!("type checked"),
                }
            }
        })
    }
}

/// Parses `src` against the variable slots in `vars` and checks it has type `want`.
pub fn compile(src: &str, vars: &BTreeMap<String, usize>, want: Ty) -> Result<IExpr, ExprError> {
    let mut p = P {
        c: src.chars().collect(),
        pos: 0,
        vars,
    };
    let (e, ty) = p.or()?;
    p.ws();
    if p.pos < p.c.len() {
        return Err(p.err("unexpected trailing input"));
    }
    if ty != want {
        return Err(ExprError::Type(format!("`{src}` is {ty:?}, expected {want:?}")));
    }
    Ok(e)
}

struct P<'a> {
    c: Vec<char>,
    pos: usize,
    vars: &'a BTreeMap<String, usize>,
}

impl P<'_> {
    fn err(&self, m: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: m.to_string(),
        }
    }

    fn ws(&mut self) {
        while self.c.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.ws();
        let n = s.chars().count();
        let hit = self.c.len() >= self.pos + n && self.c[self.pos..self.pos + n].iter().copied().eq(s.chars());
        if hit {
            self.pos += n;
        }
        hit
    }

    fn want(ty: Ty, got: Ty, what: &str) -> Result<(), ExprError> {
        if ty == got {
            Ok(())
        } else {
            Err(ExprError::Type(format!("{what} needs {ty:?} operands, got {got:?}")))
        }
    }

    fn or(&mut self) -> Result<(IExpr, Ty), ExprError> {
        let (mut l, lt) = self.and()?;
        while self.eat("||") {
            Self::want(Ty::Bool, lt, "`||`")?;
            let (r, rt) = self.and()?;
            Self::want(Ty::Bool, rt, "`||`")?;
            l = IExpr::Bin(Op::Or, Box::new(l), Box::new(r));
        }
        Ok((l, lt))
    }

    fn and(&mut self) -> Result<(IExpr, Ty), ExprError> {
        let (mut l, lt) = self.not()?;
        while self.eat("&&") {
            Self::want(Ty::Bool, lt, "`&&`")?;
            let (r, rt) = self.not()?;
            Self::want(Ty::Bool, rt, "`&&`")?;
            l = IExpr::Bin(Op::And, Box::new(l), Box::new(r));
        }
        Ok((l, lt))
    }

    fn not(&mut self) -> Result<(IExpr, Ty), ExprError> {
        self.ws();
        if self.c.get(self.pos) == Some(&'!') && self.c.get(self.pos + 1) != Some(&'=') {
            self.pos += 1;
            let (e, t) = self.not()?;
            Self::want(Ty::Bool, t, "`!`")?;
            return Ok((IExpr::Not(Box::new(e)), Ty::Bool));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<(IExpr, Ty), ExprError> {
        let (l, lt) = self.sum()?;
        let op = [
            ("==", Op::Eq),
            ("!=", Op::Ne),
            ("<=", Op::Le),
            (">=", Op::Ge),
            ("<", Op::Lt),
            (">", Op::Gt),
        ]
        .into_iter()
        .find(|(s, _)| self.eat(s));
        let Some((_, op)) = op else {
            return Ok((l, lt));
        };
        let (r, rt) = self.sum()?;
        if lt != rt || (lt == Ty::Bool && !matches!(op, Op::Eq | Op::Ne)) {
            return Err(ExprError::Type(format!(
                "cannot compare {lt:?} with {rt:?} using {op:?}"
            )));
        }
        Ok((IExpr::Bin(op, Box::new(l), Box::new(r)), Ty::Bool))
    }

    fn sum(&mut self) -> Result<(IExpr, Ty), ExprError> {
        let (mut l, lt) = self.prod()?;
        loop {
            let op = if self.eat("+") {
                Op::Add
            } else if self.eat("-") {
                Op::Sub
            } else {
                return Ok((l, lt));
            };
            Self::want(Ty::Int, lt, "arithmetic")?;
            let (r, rt) = self.prod()?;
            Self::want(Ty::Int, rt, "arithmetic")?;
            l = IExpr::Bin(op, Box::new(l), Box::new(r));
        }
    }

    fn prod(&mut self) -> Result<(IExpr, Ty), ExprError> {
        let (mut l, lt) = self.unary()?;
        loop {
            let op = if self.eat("*") {
                Op::Mul
            } else if self.eat("/") {
                Op::Div
            } else if self.eat("%") {
                Op::Rem
            } else {
                return Ok((l, lt));
            };
            Self::want(Ty::Int, lt, "arithmetic")?;
            let (r, rt) = self.unary()?;
            Self::want(Ty::Int, rt, "arithmetic")?;
            l = IExpr::Bin(op, Box::new(l), Box::new(r));
        }
    }

    fn unary(&mut self) -> Result<(IExpr, Ty), ExprError> {
        if self.eat("-") {
            let (e, t) = self.unary()?;
            Self::want(Ty::Int, t, "negation")?;
            return Ok((IExpr::Neg(Box::new(e)), Ty::Int));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<(IExpr, Ty), ExprError> {
        self.ws();
        match self.c.get(self.pos).copied() {
            Some('(') => {
                self.pos += 1;
                let inner = self.or()?;
                if !self.eat(")") {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.c.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let s: String = self.c[start..self.pos].iter().collect();
                let v = s.parse::<i64>().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("integer `{s}` out of range"),
                })?;
                Ok((IExpr::Int(v), Ty::Int))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self
                    .c
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.c[start..self.pos].iter().collect();
                match name.as_str() {
                    "true" => Ok((IExpr::Bool(true), Ty::Bool)),
                    "false" => Ok((IExpr::Bool(false), Ty::Bool)),
                    _ => match self.vars.get(&name) {
                        Some(&slot) => Ok((IExpr::Var(slot), Ty::Int)),
                        None => Err(ExprError::UnknownVariable(name)),
                    },
                }
            }
            Some(_) => Err(self.err("expected a value")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> BTreeMap<String, usize> {
        BTreeMap::from([("count".to_string(), 0), ("limit".to_string(), 1)])
    }

    #[test]
    fn precedence() {
        let e = compile("count + 2 * limit - 1", &vars(), Ty::Int).unwrap();
        assert_eq!(e.eval_int(&[1, 3]).unwrap(), 6);
        let g = compile("!(count >= limit) && count % 2 == 0 || false", &vars(), Ty::Bool).unwrap();
        assert!(g.eval_bool(&[2, 3]).unwrap());
        assert!(!g.eval_bool(&[3, 3]).unwrap());
        assert_eq!(
            compile("-count - -1", &vars(), Ty::Int)
                .unwrap()
                .eval_int(&[4, 0])
                .unwrap(),
            -3
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            compile("speed > 1", &vars(), Ty::Bool),
            Err(ExprError::UnknownVariable("speed".into()))
        );
        assert!(matches!(
            compile("count + 1", &vars(), Ty::Bool),
            Err(ExprError::Type(_))
        ));
        assert!(matches!(compile("true + 1", &vars(), Ty::Int), Err(ExprError::Type(_))));
        assert!(matches!(
            compile("count <", &vars(), Ty::Bool),
            Err(ExprError::Syntax { offset: 7, .. })
        ));
        assert!(matches!(
            compile("(count", &vars(), Ty::Int),
            Err(ExprError::Syntax { .. })
        ));
        let d = compile("count / limit", &vars(), Ty::Int).unwrap();
        assert_eq!(d.eval_int(&[1, 0]), Err(EvalError::DivisionByZero));
        let o = compile("count * count", &vars(), Ty::Int).unwrap();
        assert_eq!(o.eval_int(&[i64::MAX, 0]), Err(EvalError::Overflow));
    }

    #[test]
    fn not_equal_is_not_negation() {
        let e = compile("count != 1", &vars(), Ty::Bool).unwrap();
        assert!(e.eval_bool(&[0, 0]).unwrap());
        assert!(compile("true != false", &vars(), Ty::Bool)
            .unwrap()
            .eval_bool(&[0, 0])
            .unwrap());
    }
}
