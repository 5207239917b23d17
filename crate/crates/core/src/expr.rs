//! Classical expressions shared by the source language, the IR and the
//! flattening passes.

use std::fmt;

use crate::error::{Error, Pos, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(i) => i as f64,
            Value::Real(r) => r,
        }
    }

    /// Integral value, accepting reals with no fractional part.
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            Value::Real(r) if r.fract() == 0.0 && r.abs() < 9.0e15 => Some(r as i64),
            Value::Real(_) => None,
        }
    }

    pub fn truthy(self) -> bool {
        match self {
            Value::Int(i) => i != 0,
            Value::Real(r) => r != 0.0,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => {
                if r.fract() == 0.0 && r.is_finite() {
                    write!(f, "{r:.1}")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Pow,
    Floor,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Pow => "pow",
            Func::Floor => "floor",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "pow" => Some(Func::Pow),
            "floor" => Some(Func::Floor),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            Func::Floor | Func::Abs => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Lit(Value),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Self { kind, pos }
    }

    pub fn lit(v: Value, pos: Pos) -> Self {
        Self::new(ExprKind::Lit(v), pos)
    }

    pub fn int(i: i64) -> Self {
        Self::lit(Value::Int(i), Pos::default())
    }

    pub fn var(name: &str, pos: Pos) -> Self {
        Self::new(ExprKind::Var(name.to_string()), pos)
    }

    pub fn as_lit(&self) -> Option<Value> {
        match self.kind {
            ExprKind::Lit(v) => Some(v),
            _ => None,
        }
    }

    /// Visit every variable name referenced by the expression.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str)) {
        match &self.kind {
            ExprKind::Lit(_) => {}
            ExprKind::Var(v) => f(v),
            ExprKind::Unary(_, e) => e.for_each_var(f),
            ExprKind::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut hit = false;
        self.for_each_var(&mut |v| hit |= v == name);
        hit
    }

    pub fn is_const(&self) -> bool {
        let mut free = false;
        self.for_each_var(&mut |_| free = true);
        !free
    }

    /// Evaluate with a variable lookup. Unknown variables are an error.
    pub fn eval(&self, env: &impl Fn(&str) -> Option<Value>) -> Result<Value> {
        match &self.kind {
            ExprKind::Lit(v) => Ok(*v),
            ExprKind::Var(name) => env(name).ok_or_else(|| {
                Error::non_const(self.pos, format!("`{name}` has no known value"))
            }),
            ExprKind::Unary(op, e) => Ok(apply_unary(*op, e.eval(env)?)),
            ExprKind::Binary(op, a, b) => apply_binary(*op, a.eval(env)?, b.eval(env)?, self.pos),
            ExprKind::Call(func, args) => {
                let vals = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>>>()?;
                Ok(apply_func(*func, &vals))
            }
        }
    }

    pub fn eval_const(&self) -> Result<Value> {
        self.eval(&|_| None)
    }

    /// Substitute known variables and fold every constant subtree.
    pub fn fold(&self, env: &impl Fn(&str) -> Option<Value>) -> Result<Expr> {
        let pos = self.pos;
        let folded = match &self.kind {
            ExprKind::Lit(_) => self.clone(),
            ExprKind::Var(name) => match env(name) {
                Some(v) => Expr::lit(v, pos),
                None => self.clone(),
            },
            ExprKind::Unary(op, e) => {
                let e = e.fold(env)?;
                match e.as_lit() {
                    Some(v) => Expr::lit(apply_unary(*op, v), pos),
                    None => Expr::new(ExprKind::Unary(*op, Box::new(e)), pos),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (a.fold(env)?, b.fold(env)?);
                match (a.as_lit(), b.as_lit()) {
                    (Some(x), Some(y)) => Expr::lit(apply_binary(*op, x, y, pos)?, pos),
                    _ => Expr::new(ExprKind::Binary(*op, Box::new(a), Box::new(b)), pos),
                }
            }
            ExprKind::Call(func, args) => {
                let args = args.iter().map(|a| a.fold(env)).collect::<Result<Vec<_>>>()?;
                if let Some(vals) = args.iter().map(Expr::as_lit).collect::<Option<Vec<_>>>() {
                    Expr::lit(apply_func(*func, &vals), pos)
                } else {
                    Expr::new(ExprKind::Call(*func, args), pos)
                }
            }
        };
        Ok(folded)
    }

    /// Recognize `a*var + b` with integer `a`, `b`; returns `(a, b)`.
    pub fn affine_in(&self, var: &str) -> Option<(i64, i64)> {
        match &self.kind {
            ExprKind::Lit(v) => v.as_int().map(|b| (0, b)),
            ExprKind::Var(v) if v == var => Some((1, 0)),
            ExprKind::Var(_) => None,
            ExprKind::Unary(UnOp::Neg, e) => e.affine_in(var).map(|(a, b)| (-a, -b)),
            ExprKind::Binary(BinOp::Add, x, y) => {
                let (a1, b1) = x.affine_in(var)?;
                let (a2, b2) = y.affine_in(var)?;
                Some((a1 + a2, b1 + b2))
            }
            ExprKind::Binary(BinOp::Sub, x, y) => {
                let (a1, b1) = x.affine_in(var)?;
                let (a2, b2) = y.affine_in(var)?;
                Some((a1 - a2, b1 - b2))
            }
            ExprKind::Binary(BinOp::Mul, x, y) => {
                let (a1, b1) = x.affine_in(var)?;
                let (a2, b2) = y.affine_in(var)?;
                match (a1, a2) {
                    (0, _) => Some((b1 * a2, b1 * b2)),
                    (_, 0) => Some((a1 * b2, b1 * b2)),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

fn apply_unary(op: UnOp, v: Value) -> Value {
    match (op, v) {
        (UnOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
        (UnOp::Neg, Value::Real(r)) => Value::Real(-r),
        (UnOp::Not, v) => Value::Int(!v.truthy() as i64),
    }
}

fn apply_binary(op: BinOp, a: Value, b: Value, pos: Pos) -> Result<Value> {
    use Value::*;
    if op.is_comparison() {
        let r = match (a, b) {
            (Int(x), Int(y)) => cmp(op, x.cmp(&y)),
            _ => {
                let (x, y) = (a.as_f64(), b.as_f64());
                match x.partial_cmp(&y) {
                    Some(o) => cmp(op, o),
                    None => op == BinOp::Ne,
                }
            }
        };
        return Ok(Int(r as i64));
    }
    let v = match op {
        BinOp::And => Int((a.truthy() && b.truthy()) as i64),
        BinOp::Or => Int((a.truthy() || b.truthy()) as i64),
        _ => match (a, b) {
            (Int(x), Int(y)) => match op {
                BinOp::Add => Int(x.wrapping_add(y)),
                BinOp::Sub => Int(x.wrapping_sub(y)),
                BinOp::Mul => Int(x.wrapping_mul(y)),
                BinOp::Div | BinOp::Rem if y == 0 => {
                    return Err(Error::non_const(pos, "integer division by zero"))
                }
                BinOp::Div => Int(x.wrapping_div(y)),
                BinOp::Rem => Int(x.wrapping_rem(y)),
                _ => unreachable!(),
            },
            _ => {
                let (x, y) = (a.as_f64(), b.as_f64());
                Real(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Rem => x % y,
                    _ => unreachable!(),
                })
            }
        },
    };
    Ok(v)
}

fn cmp(op: BinOp, o: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        BinOp::Lt => o == Less,
        BinOp::Le => o != Greater,
        BinOp::Gt => o == Greater,
        BinOp::Ge => o != Less,
        BinOp::Eq => o == Equal,
        BinOp::Ne => o != Equal,
        _ => unreachable!(),
    }
}

fn apply_func(func: Func, args: &[Value]) -> Value {
    match func {
        Func::Pow => Value::Real(args[0].as_f64().powf(args[1].as_f64())),
        Func::Floor => Value::Real(args[0].as_f64().floor()),
        Func::Abs => match args[0] {
            Value::Int(i) => Value::Int(i.wrapping_abs()),
            Value::Real(r) => Value::Real(r.abs()),
        },
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, 0, f)
    }
}

fn fmt_expr(e: &Expr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &e.kind {
        ExprKind::Lit(v) => {
            if v.as_f64() < 0.0 {
                write!(f, "({v})")
            } else {
                write!(f, "{v}")
            }
        }
        ExprKind::Var(v) => f.write_str(v),
        ExprKind::Unary(op, x) => {
            f.write_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            })?;
            fmt_expr(x, 7, f)
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            if p <= parent {
                f.write_str("(")?;
            }
            fmt_expr(a, p - 1, f)?;
            write!(f, " {} ", op.symbol())?;
            fmt_expr(b, p, f)?;
            if p <= parent {
                f.write_str(")")?;
            }
            Ok(())
        }
        ExprKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                fmt_expr(a, 0, f)?;
            }
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), Pos::default())
    }

    #[test]
    fn c_like_arithmetic() {
        let e = bin(BinOp::Div, Expr::int(7), Expr::int(2));
        assert_eq!(e.eval_const().unwrap(), Value::Int(3));
        let e = bin(BinOp::Div, Expr::lit(Value::Real(7.0), Pos::default()), Expr::int(2));
        assert_eq!(e.eval_const().unwrap(), Value::Real(3.5));
        let e = bin(BinOp::Div, Expr::int(1), Expr::int(0));
        assert!(e.eval_const().is_err());
    }

    #[test]
    fn affine_recognition() {
        let i = Expr::var("i", Pos::default());
        let e = bin(BinOp::Sub, Expr::int(9), i.clone());
        assert_eq!(e.affine_in("i"), Some((-1, 9)));
        let e = bin(BinOp::Mul, Expr::int(2), i.clone());
        assert_eq!(e.affine_in("i"), Some((2, 0)));
        let e = bin(BinOp::Mul, i.clone(), i);
        assert_eq!(e.affine_in("i"), None);
    }

    #[test]
    fn fold_keeps_unknowns() {
        let e = bin(
            BinOp::Add,
            Expr::var("x", Pos::default()),
            bin(BinOp::Mul, Expr::int(2), Expr::var("y", Pos::default())),
        );
        let folded = e
            .fold(&|v| (v == "y").then_some(Value::Int(3)))
            .unwrap();
        assert_eq!(folded.to_string(), "x + 6");
    }
}
