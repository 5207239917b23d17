use indexmap::IndexMap;

use crate::error::Pos;
use crate::expr::{BinOp, Expr, ExprKind, Value};
use crate::gate::GateKind;

#[derive(Clone, Debug, PartialEq)]
pub struct Ast {
    pub modules: Vec<AstModule>,
    pub defines: IndexMap<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalType {
    Int,
    Double,
}

impl ClassicalType {
    pub fn keyword(self) -> &'static str {
        match self {
            ClassicalType::Int => "int",
            ClassicalType::Double => "double",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamKind {
    /// `qbit q[size]`
    QubitArray(Expr),
    /// `qbit q`
    Qubit,
    Classical(ClassicalType),
    /// `qint[width] r`
    Register(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AstModule {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub is_ctqg: bool,
    pub pos: Pos,
}

/// A qubit operand of a gate: `q`, `q[e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitOperand {
    pub name: String,
    pub index: Option<Expr>,
    pub pos: Pos,
}

/// A module call argument, classified syntactically. A bare identifier may
/// denote a qubit array or a classical value; resolution decides.
#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Expr(Expr),
    Index(String, Expr),
    Slice(String, Expr, Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CtqgOperand {
    Const(Expr),
    Reg(String),
    Mul(String, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Gate {
        kind: GateKind,
        operands: Vec<QubitOperand>,
        angle: Option<Expr>,
    },
    Call {
        name: String,
        args: Vec<Arg>,
    },
    /// `for (var = init; var op bound; var += step)`
    For {
        var: String,
        declares: bool,
        init: Expr,
        cond: BinOp,
        bound: Expr,
        step: Expr,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    QubitDecl {
        name: String,
        size: Option<Expr>,
    },
    ClassicalDecl {
        name: String,
        ty: ClassicalType,
        init: Option<Expr>,
    },
    Assign {
        name: String,
        value: Expr,
    },
    RegisterDecl {
        name: String,
        width: u32,
    },
    CtqgInit {
        reg: String,
        value: Expr,
    },
    CtqgAdd {
        reg: String,
        operand: CtqgOperand,
    },
    CtqgSub {
        reg: String,
        operand: CtqgOperand,
    },
    CtqgIf {
        lhs: CtqgOperand,
        op: BinOp,
        rhs: CtqgOperand,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
}

impl Ast {
    /// Copy with every source position reset, for structural comparison.
    pub fn without_positions(&self) -> Ast {
        let mut ast = self.clone();
        for m in &mut ast.modules {
            m.pos = Pos::default();
            for p in &mut m.params {
                p.pos = Pos::default();
                if let ParamKind::QubitArray(e) = &mut p.kind {
                    clear_expr(e);
                }
            }
            clear_stmts(&mut m.body);
        }
        ast
    }
}

fn clear_stmts(stmts: &mut [Stmt]) {
    for s in stmts {
        s.pos = Pos::default();
        match &mut s.kind {
            StmtKind::Gate {
                operands, angle, ..
            } => {
                for o in operands {
                    o.pos = Pos::default();
                    if let Some(e) = &mut o.index {
                        clear_expr(e);
                    }
                }
                if let Some(e) = angle {
                    clear_expr(e);
                }
            }
            StmtKind::Call { args, .. } => {
                for a in args {
                    match a {
                        Arg::Expr(e) | Arg::Index(_, e) => clear_expr(e),
                        Arg::Slice(_, a, b) => {
                            clear_expr(a);
                            clear_expr(b);
                        }
                    }
                }
            }
            StmtKind::For {
                init,
                bound,
                step,
                body,
                ..
            } => {
                clear_expr(init);
                clear_expr(bound);
                clear_expr(step);
                clear_stmts(body);
            }
            StmtKind::If { cond, then, els } => {
                clear_expr(cond);
                clear_stmts(then);
                clear_stmts(els);
            }
            StmtKind::QubitDecl { size, .. } => {
                if let Some(e) = size {
                    clear_expr(e);
                }
            }
            StmtKind::ClassicalDecl { init, .. } => {
                if let Some(e) = init {
                    clear_expr(e);
                }
            }
            StmtKind::Assign { value, .. } | StmtKind::CtqgInit { value, .. } => clear_expr(value),
            StmtKind::RegisterDecl { .. } => {}
            StmtKind::CtqgAdd { operand, .. } | StmtKind::CtqgSub { operand, .. } => {
                clear_operand(operand)
            }
            StmtKind::CtqgIf {
                lhs,
                rhs,
                then,
                els,
                ..
            } => {
                clear_operand(lhs);
                clear_operand(rhs);
                clear_stmts(then);
                clear_stmts(els);
            }
        }
    }
}

fn clear_operand(o: &mut CtqgOperand) {
    if let CtqgOperand::Const(e) = o {
        clear_expr(e);
    }
}

fn clear_expr(e: &mut Expr) {
    e.pos = Pos::default();
    match &mut e.kind {
        ExprKind::Lit(_) | ExprKind::Var(_) => {}
        ExprKind::Unary(_, x) => clear_expr(x),
        ExprKind::Binary(_, a, b) => {
            clear_expr(a);
            clear_expr(b);
        }
        ExprKind::Call(_, args) => args.iter_mut().for_each(clear_expr),
    }
}
