use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::error::{Error, Pos, Result};
use crate::expr::{Expr, ExprKind, Value};
use crate::ir::{
    build_call_graph, CallArg, CtqgModuleIr, Inst, InstKind, LocalDecl, LoopClass, ModuleDef,
    ParamDef, ParamKind as IrParamKind, Program, QubitArg, QubitRef,
};

use super::ast::{self, Arg, Ast, AstModule, ClassicalType, ParamKind, Stmt, StmtKind};

/// Bind identifiers, check arities and types, and lower the AST to the IR.
pub fn resolve_semantics(ast: &Ast) -> Result<Program> {
    let main = ast
        .modules
        .iter()
        .find(|m| m.name == "main")
        .ok_or_else(|| Error::Undefined {
            pos: Pos::new(1, 1),
            name: "main".into(),
        })?;
    if !main.params.is_empty() {
        return Err(Error::ArityMismatch {
            pos: main.pos,
            name: "main".into(),
            expected: "no parameters".into(),
            found: main.params.len(),
        });
    }
    resolve_with_entry(ast, "main")
}

/// Resolve a set of modules that need not contain `main`. The entry is
/// `main` when present, else the last module.
pub fn resolve_library(ast: &Ast) -> Result<Program> {
    let entry = match ast.modules.iter().find(|m| m.name == "main") {
        Some(_) => return resolve_semantics(ast),
        None => ast.modules.last().map(|m| m.name.clone()).ok_or_else(|| {
            Error::syntax(Pos::new(1, 1), "no modules defined")
        })?,
    };
    resolve_with_entry(ast, &entry)
}

fn resolve_with_entry(ast: &Ast, entry: &str) -> Result<Program> {
    let mut seen = HashSet::new();
    for m in &ast.modules {
        if !seen.insert(m.name.as_str()) {
            return Err(Error::TypeMismatch {
                pos: m.pos,
                msg: format!("module `{}` is defined twice", m.name),
            });
        }
    }
    let signatures: HashMap<&str, &AstModule> =
        ast.modules.iter().map(|m| (m.name.as_str(), m)).collect();
    let mut modules = IndexMap::new();
    for m in &ast.modules {
        let def = Resolver::new(&signatures).module(m)?;
        modules.insert(m.name.clone(), def);
    }
    let program = Program {
        modules,
        entry: entry.into(),
    };
    build_call_graph(&program)?;
    Ok(program)
}

#[derive(Clone, Debug)]
enum Sym {
    Qubits { scalar: bool },
    Classical { renamed: String },
    Register,
}

struct Resolver<'a> {
    signatures: &'a HashMap<&'a str, &'a AstModule>,
    scopes: Vec<HashMap<String, Sym>>,
    locals: Vec<LocalDecl>,
    fresh: usize,
}

impl<'a> Resolver<'a> {
    fn new(signatures: &'a HashMap<&'a str, &'a AstModule>) -> Self {
        Self {
            signatures,
            scopes: vec![HashMap::new()],
            locals: Vec::new(),
            fresh: 0,
        }
    }

    fn lookup(&self, name: &str) -> Option<&Sym> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, name: &str, sym: Sym, pos: Pos) -> Result<()> {
        if self.scopes.last().unwrap().contains_key(name) {
            return Err(Error::TypeMismatch {
                pos,
                msg: format!("`{name}` is declared twice in the same scope"),
            });
        }
        self.scopes.last_mut().unwrap().insert(name.to_string(), sym);
        Ok(())
    }

    /// Declare a classical variable, renaming it if it shadows an outer one.
    fn declare_classical(&mut self, name: &str, pos: Pos) -> Result<String> {
        let renamed = if self.lookup(name).is_some() {
            self.fresh += 1;
            format!("{name}'{}", self.fresh)
        } else {
            name.to_string()
        };
        self.declare(
            name,
            Sym::Classical {
                renamed: renamed.clone(),
            },
            pos,
        )?;
        Ok(renamed)
    }

    fn expr(&self, e: &Expr) -> Result<Expr> {
        let kind = match &e.kind {
            ExprKind::Lit(_) => return Ok(e.clone()),
            ExprKind::Var(name) => match self.lookup(name) {
                Some(Sym::Classical { renamed }) => ExprKind::Var(renamed.clone()),
                Some(_) => {
                    return Err(Error::TypeMismatch {
                        pos: e.pos,
                        msg: format!("`{name}` is quantum, expected a classical value"),
                    })
                }
                None => {
                    return Err(Error::Undefined {
                        pos: e.pos,
                        name: name.clone(),
                    })
                }
            },
            ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(self.expr(x)?)),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(self.expr(a)?), Box::new(self.expr(b)?))
            }
            ExprKind::Call(f, args) => {
                ExprKind::Call(*f, args.iter().map(|a| self.expr(a)).collect::<Result<_>>()?)
            }
        };
        Ok(Expr::new(kind, e.pos))
    }

    fn module(mut self, m: &AstModule) -> Result<ModuleDef> {
        let mut params = Vec::new();
        // Classical parameters are visible in every qubit-array size.
        for p in &m.params {
            if let ParamKind::Classical(_) = p.kind {
                self.declare_classical(&p.name, p.pos)?;
            }
        }
        for p in &m.params {
            let kind = match &p.kind {
                ParamKind::QubitArray(size) => {
                    self.declare(&p.name, Sym::Qubits { scalar: false }, p.pos)?;
                    IrParamKind::Qubits {
                        size: self.expr(size)?,
                        scalar: false,
                    }
                }
                ParamKind::Qubit => {
                    self.declare(&p.name, Sym::Qubits { scalar: true }, p.pos)?;
                    IrParamKind::Qubits {
                        size: Expr::int(1),
                        scalar: true,
                    }
                }
                ParamKind::Classical(t) => IrParamKind::Classical(*t),
                ParamKind::Register(w) => {
                    self.declare(&p.name, Sym::Register, p.pos)?;
                    IrParamKind::Register(*w)
                }
            };
            if m.is_ctqg && !matches!(kind, IrParamKind::Register(_)) {
                return Err(Error::TypeMismatch {
                    pos: p.pos,
                    msg: format!(
                        "reversible-logic module `{}` may only take `qint` registers",
                        m.name
                    ),
                });
            }
            params.push(ParamDef {
                name: p.name.clone(),
                kind,
                pos: p.pos,
            });
        }
        if m.is_ctqg {
            let mut registers: Vec<(String, u32)> = m
                .params
                .iter()
                .filter_map(|p| match p.kind {
                    ParamKind::Register(w) => Some((p.name.clone(), w)),
                    _ => None,
                })
                .collect();
            check_ctqg_body(&m.body, &mut registers, true)?;
            return Ok(ModuleDef {
                name: m.name.clone(),
                params,
                locals: Vec::new(),
                body: Vec::new(),
                ctqg: Some(CtqgModuleIr {
                    registers,
                    body: m.body.clone(),
                }),
                pos: m.pos,
            });
        }
        self.scopes.push(HashMap::new());
        let body = self.block(&m.body, true)?;
        Ok(ModuleDef {
            name: m.name.clone(),
            params,
            locals: std::mem::take(&mut self.locals),
            body,
            ctqg: None,
            pos: m.pos,
        })
    }

    fn block(&mut self, stmts: &[Stmt], top: bool) -> Result<Vec<Inst>> {
        let mut out = Vec::new();
        for s in stmts {
            self.stmt(s, top, &mut out)?;
        }
        Ok(out)
    }

    fn scoped_block(&mut self, stmts: &[Stmt]) -> Result<Vec<Inst>> {
        self.scopes.push(HashMap::new());
        let r = self.block(stmts, false);
        self.scopes.pop();
        r
    }

    fn qubit_operand(&self, o: &ast::QubitOperand) -> Result<QubitRef> {
        match self.lookup(&o.name) {
            Some(Sym::Qubits { scalar: true }) => {
                if let Some(ix) = &o.index {
                    if ix.as_lit() != Some(Value::Int(0)) {
                        return Err(Error::TypeMismatch {
                            pos: o.pos,
                            msg: format!("`{}` is a single qubit", o.name),
                        });
                    }
                }
                Ok(QubitRef {
                    name: o.name.clone(),
                    index: Expr::lit(Value::Int(0), o.pos),
                })
            }
            Some(Sym::Qubits { scalar: false }) => match &o.index {
                Some(ix) => Ok(QubitRef {
                    name: o.name.clone(),
                    index: self.expr(ix)?,
                }),
                None => Err(Error::TypeMismatch {
                    pos: o.pos,
                    msg: format!("qubit array `{}` needs an index", o.name),
                }),
            },
            Some(_) => Err(Error::TypeMismatch {
                pos: o.pos,
                msg: format!("`{}` is not a qubit", o.name),
            }),
            None => Err(Error::Undefined {
                pos: o.pos,
                name: o.name.clone(),
            }),
        }
    }

    fn is_qubits(&self, name: &str) -> bool {
        matches!(self.lookup(name), Some(Sym::Qubits { .. }))
    }

    fn call_arg(&self, a: &Arg, param: &ast::Param, callee: &str, pos: Pos) -> Result<CallArg> {
        let quantum = !matches!(param.kind, ParamKind::Classical(_));
        let mismatch = |what: &str| Error::TypeMismatch {
            pos,
            msg: format!(
                "argument for `{}` of `{callee}` must be {what}",
                param.name
            ),
        };
        match a {
            Arg::Expr(Expr {
                kind: ExprKind::Var(n),
                ..
            }) if self.is_qubits(n) => {
                if quantum {
                    Ok(CallArg::Qubits(QubitArg::Whole(n.clone())))
                } else {
                    Err(mismatch("a classical value"))
                }
            }
            Arg::Expr(e) => {
                if quantum {
                    if let ExprKind::Var(n) = &e.kind {
                        if self.lookup(n).is_none() {
                            return Err(Error::Undefined {
                                pos: e.pos,
                                name: n.clone(),
                            });
                        }
                    }
                    Err(mismatch("qubits"))
                } else {
                    Ok(CallArg::Classical(self.expr(e)?))
                }
            }
            Arg::Index(n, ix) | Arg::Slice(n, ix, _) => {
                if !quantum {
                    return Err(mismatch("a classical value"));
                }
                match self.lookup(n) {
                    Some(Sym::Qubits { .. }) => {}
                    Some(_) => return Err(mismatch("qubits")),
                    None => {
                        return Err(Error::Undefined {
                            pos,
                            name: n.clone(),
                        })
                    }
                }
                Ok(CallArg::Qubits(match a {
                    Arg::Slice(_, _, hi) => {
                        QubitArg::Slice(n.clone(), self.expr(ix)?, self.expr(hi)?)
                    }
                    _ => QubitArg::Index(n.clone(), self.expr(ix)?),
                }))
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, top: bool, out: &mut Vec<Inst>) -> Result<()> {
        let pos = s.pos;
        let kind = match &s.kind {
            StmtKind::Gate {
                kind,
                operands,
                angle,
            } => {
                let want_angle = kind.has_angle();
                if operands.len() != kind.arity() || angle.is_some() != want_angle {
                    let expected = match (kind.arity(), want_angle) {
                        (1, true) => "1 qubit and 1 angle".to_string(),
                        (1, false) => "1 qubit".to_string(),
                        (n, _) => format!("{n} qubits"),
                    };
                    return Err(Error::ArityMismatch {
                        pos,
                        name: kind.name().into(),
                        expected,
                        found: operands.len() + angle.is_some() as usize,
                    });
                }
                let operands = operands
                    .iter()
                    .map(|o| self.qubit_operand(o))
                    .collect::<Result<Vec<_>>>()?;
                let angle = angle.as_ref().map(|a| self.expr(a)).transpose()?;
                InstKind::Gate {
                    kind: *kind,
                    operands,
                    angle,
                }
            }
            StmtKind::Call { name, args } => {
                let callee = self.signatures.get(name.as_str()).ok_or_else(|| {
                    Error::UndefinedModule {
                        pos,
                        name: name.clone(),
                    }
                })?;
                if name == "main" {
                    return Err(Error::TypeMismatch {
                        pos,
                        msg: "`main` cannot be called".into(),
                    });
                }
                if args.len() != callee.params.len() {
                    return Err(Error::ArityMismatch {
                        pos,
                        name: name.clone(),
                        expected: format!("{} arguments", callee.params.len()),
                        found: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .zip(&callee.params)
                    .map(|(a, p)| self.call_arg(a, p, name, pos))
                    .collect::<Result<Vec<_>>>()?;
                InstKind::Call {
                    callee: name.clone(),
                    args,
                }
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
                self.scopes.push(HashMap::new());
                let r = (|| {
                    if *declares {
                        let renamed = self.declare_classical(var, pos)?;
                        out.push(Inst::new(
                            InstKind::Let {
                                name: renamed,
                                ty: ClassicalType::Int,
                                value: None,
                            },
                            pos,
                        ));
                    }
                    let var = match self.lookup(var) {
                        Some(Sym::Classical { renamed }) => renamed.clone(),
                        Some(_) => {
                            return Err(Error::TypeMismatch {
                                pos,
                                msg: format!("loop variable `{var}` must be classical"),
                            })
                        }
                        None => {
                            return Err(Error::Undefined {
                                pos,
                                name: var.clone(),
                            })
                        }
                    };
                    Ok(InstKind::Loop {
                        var,
                        init: self.expr(init)?,
                        cond: *cond,
                        bound: self.expr(bound)?,
                        step: self.expr(step)?,
                        body: self.scoped_block(body)?,
                        class: LoopClass::Classical,
                    })
                })();
                self.scopes.pop();
                r?
            }
            StmtKind::If { cond, then, els } => InstKind::Cond {
                guard: self.expr(cond)?,
                then: self.scoped_block(then)?,
                els: self.scoped_block(els)?,
            },
            StmtKind::QubitDecl { name, size } => {
                if !top {
                    return Err(Error::TypeMismatch {
                        pos,
                        msg: "qubit declarations must be at module top level".into(),
                    });
                }
                if self.lookup(name).is_some() {
                    return Err(Error::TypeMismatch {
                        pos,
                        msg: format!("`{name}` is already declared"),
                    });
                }
                let scalar = size.is_none();
                self.declare(name, Sym::Qubits { scalar }, pos)?;
                let size = match size {
                    Some(e) => self.expr(e)?,
                    None => Expr::lit(Value::Int(1), pos),
                };
                self.locals.push(LocalDecl {
                    name: name.clone(),
                    size,
                    scalar,
                    pos,
                });
                return Ok(());
            }
            StmtKind::ClassicalDecl { name, ty, init } => {
                let value = init.as_ref().map(|e| self.expr(e)).transpose()?;
                let renamed = self.declare_classical(name, pos)?;
                InstKind::Let {
                    name: renamed,
                    ty: *ty,
                    value,
                }
            }
            StmtKind::Assign { name, value } => {
                let renamed = match self.lookup(name) {
                    Some(Sym::Classical { renamed }) => renamed.clone(),
                    Some(_) => {
                        return Err(Error::TypeMismatch {
                            pos,
                            msg: format!("cannot assign to quantum `{name}`"),
                        })
                    }
                    None => {
                        return Err(Error::Undefined {
                            pos,
                            name: name.clone(),
                        })
                    }
                };
                InstKind::Assign {
                    name: renamed,
                    value: self.expr(value)?,
                }
            }
            StmtKind::RegisterDecl { .. }
            | StmtKind::CtqgInit { .. }
            | StmtKind::CtqgAdd { .. }
            | StmtKind::CtqgSub { .. }
            | StmtKind::CtqgIf { .. } => {
                return Err(Error::TypeMismatch {
                    pos,
                    msg: "register statements are only allowed in modules with `qint` parameters"
                        .into(),
                })
            }
        };
        out.push(Inst::new(kind, pos));
        Ok(())
    }
}

fn check_ctqg_body(body: &[Stmt], registers: &mut Vec<(String, u32)>, top: bool) -> Result<()> {
    for s in body {
        match &s.kind {
            StmtKind::RegisterDecl { name, width } => {
                if !top {
                    return Err(Error::TypeMismatch {
                        pos: s.pos,
                        msg: "register declarations must be at module top level".into(),
                    });
                }
                if registers.iter().any(|(n, _)| n == name) {
                    return Err(Error::TypeMismatch {
                        pos: s.pos,
                        msg: format!("register `{name}` is declared twice"),
                    });
                }
                registers.push((name.clone(), *width));
            }
            StmtKind::For { body, .. } => check_ctqg_body(body, registers, false)?,
            StmtKind::If { then, els, .. } | StmtKind::CtqgIf { then, els, .. } => {
                check_ctqg_body(then, registers, false)?;
                check_ctqg_body(els, registers, false)?;
            }
            StmtKind::CtqgInit { .. }
            | StmtKind::CtqgAdd { .. }
            | StmtKind::CtqgSub { .. }
            | StmtKind::ClassicalDecl { .. }
            | StmtKind::Assign { .. } => {}
            StmtKind::Gate { .. } | StmtKind::Call { .. } | StmtKind::QubitDecl { .. } => {
                return Err(Error::TypeMismatch {
                    pos: s.pos,
                    msg: "reversible-logic modules contain only register statements and classical control".into(),
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse_scafflite;
    use super::*;

    fn resolve(src: &str) -> Result<Program> {
        resolve_semantics(&parse_scafflite(src)?)
    }

    #[test]
    fn arity_checked() {
        let err = resolve("module main(){ qbit q[2]; CNOT(q[0]); }").unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { .. }), "{err}");
        let err = resolve("module main(){ qbit q[2]; Rz(q[0]); }").unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { .. }), "{err}");
    }

    #[test]
    fn undefined_module_and_type_mismatch() {
        let err = resolve("module main(){ qbit q[2]; nope(q); }").unwrap_err();
        assert!(matches!(err, Error::UndefinedModule { .. }));
        let err =
            resolve("module f(qbit a[1]){ H(a[0]); } module main(){ int k; k = 1; f(k); }")
                .unwrap_err();
        assert!(matches!(err, Error::TypeMismatch { .. }), "{err}");
    }

    #[test]
    fn recursion_detected() {
        let err = resolve(
            "module a(qbit q[1]){ b(q); } module b(qbit q[1]){ a(q); } module main(){ qbit q[1]; a(q); }",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Recursion { .. }), "{err}");
    }

    #[test]
    fn shadowed_loop_vars_are_renamed() {
        let p = resolve(
            "module main(){ qbit q[4]; int i; i = 3; for (int i = 0; i < 2; i++) H(q[i]); X(q[i]); }",
        )
        .unwrap();
        let body = &p.modules["main"].body;
        let names: Vec<&str> = body
            .iter()
            .filter_map(|i| match &i.kind {
                InstKind::Let { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(names, vec!["i", "i'1"]);
    }
}
