use std::fmt::Write;

use crate::expr::{BinOp, ExprKind};

use super::ast::*;

/// Render an AST as ScaffLite source. Macros are already substituted in
/// the AST, so no `#define` lines are produced.
pub fn pretty(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, m) in ast.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let params: Vec<String> = m.params.iter().map(param).collect();
        let _ = writeln!(out, "module {}({}) {{", m.name, params.join(", "));
        stmts(&mut out, &m.body, 1);
        out.push_str("}\n");
    }
    out
}

fn param(p: &Param) -> String {
    match &p.kind {
        ParamKind::QubitArray(e) => format!("qbit {}[{e}]", p.name),
        ParamKind::Qubit => format!("qbit {}", p.name),
        ParamKind::Classical(t) => format!("{} {}", t.keyword(), p.name),
        ParamKind::Register(w) => format!("qint[{w}] {}", p.name),
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn stmts(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        stmt(out, s, depth);
    }
}

fn operand(o: &CtqgOperand) -> String {
    match o {
        CtqgOperand::Reg(r) => r.clone(),
        CtqgOperand::Mul(a, b) => format!("{a} * {b}"),
        CtqgOperand::Const(e) => match &e.kind {
            ExprKind::Binary(op, ..) if op.precedence() < BinOp::Add.precedence() => {
                format!("({e})")
            }
            _ => e.to_string(),
        },
    }
}

fn arg(a: &Arg) -> String {
    match a {
        Arg::Expr(e) => e.to_string(),
        Arg::Index(n, e) => format!("{n}[{e}]"),
        Arg::Slice(n, lo, hi) => format!("{n}[{lo}:{hi}]"),
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Gate {
            kind,
            operands,
            angle,
        } => {
            let mut parts: Vec<String> = operands
                .iter()
                .map(|o| match &o.index {
                    Some(e) => format!("{}[{e}]", o.name),
                    None => o.name.clone(),
                })
                .collect();
            if let Some(a) = angle {
                parts.push(a.to_string());
            }
            let _ = writeln!(out, "{kind}({});", parts.join(", "));
        }
        StmtKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(arg).collect();
            let _ = writeln!(out, "{name}({});", args.join(", "));
        }
        StmtKind::For {
            var,
            declares,
            init,
            cond,
            bound,
            step,
            body,
        } => {
            let decl = if *declares { "int " } else { "" };
            let _ = writeln!(
                out,
                "for ({decl}{var} = {init}; {var} {} {bound}; {var} += {step}) {{",
                cond.symbol()
            );
            stmts(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If { cond, then, els } => {
            let _ = writeln!(out, "if ({cond}) {{");
            stmts(out, then, depth + 1);
            indent(out, depth);
            if els.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                stmts(out, els, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::QubitDecl { name, size } => match size {
            Some(e) => {
                let _ = writeln!(out, "qbit {name}[{e}];");
            }
            None => {
                let _ = writeln!(out, "qbit {name};");
            }
        },
        StmtKind::ClassicalDecl { name, ty, init } => match init {
            Some(e) => {
                let _ = writeln!(out, "{} {name} = {e};", ty.keyword());
            }
            None => {
                let _ = writeln!(out, "{} {name};", ty.keyword());
            }
        },
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{name} = {value};");
        }
        StmtKind::RegisterDecl { name, width } => {
            let _ = writeln!(out, "qint[{width}] {name};");
        }
        StmtKind::CtqgInit { reg, value } => {
            let _ = writeln!(out, "$ {reg} := {value};");
        }
        StmtKind::CtqgAdd { reg, operand: o } => {
            let _ = writeln!(out, "$ {reg} += {};", operand(o));
        }
        StmtKind::CtqgSub { reg, operand: o } => {
            let _ = writeln!(out, "$ {reg} -= {};", operand(o));
        }
        StmtKind::CtqgIf {
            lhs,
            op,
            rhs,
            then,
            els,
        } => {
            let _ = writeln!(out, "$if ({} {} {})", operand(lhs), op.symbol(), operand(rhs));
            stmts(out, then, depth + 1);
            if !els.is_empty() {
                indent(out, depth);
                out.push_str("$else\n");
                stmts(out, els, depth + 1);
            }
            indent(out, depth);
            out.push_str("$endif\n");
        }
    }
}
