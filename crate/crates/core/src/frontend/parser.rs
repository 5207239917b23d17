use std::collections::HashSet;

use crate::error::{Error, Pos, Result};
use crate::expr::{BinOp, Expr, ExprKind, Func, UnOp, Value};
use crate::gate::GateKind;

use super::ast::*;
use super::lexer::{lex, Tok, Token};

/// Common gate names outside the supported set. Calling one of these is
/// reported as an unknown gate rather than an undefined module.
const FOREIGN_GATES: [&str; 22] = [
    "CZ", "CY", "CH", "SWAP", "CSWAP", "Fredkin", "ISWAP", "U", "U1", "U2", "U3", "P", "Phase",
    "CPhase", "CRx", "CRy", "CRz", "Sdg", "Tdg", "I", "MeasX", "PrepX",
];

pub fn parse_scafflite(src: &str) -> Result<Ast> {
    if src.trim().is_empty() {
        return Err(Error::syntax(Pos::new(1, 1), "empty source"));
    }
    let (toks, defines) = lex(src)?;
    let module_names = toks
        .windows(2)
        .filter_map(|w| match (&w[0].tok, &w[1].tok) {
            (Tok::Ident(k), Tok::Ident(n)) if k == "module" => Some(n.clone()),
            _ => None,
        })
        .collect();
    let mut p = Parser {
        toks,
        at: 0,
        module_names,
        registers: HashSet::new(),
    };
    let mut modules = Vec::new();
    while p.peek() != &Tok::Eof {
        modules.push(p.module()?);
    }
    Ok(Ast { modules, defines })
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    module_names: HashSet<String>,
    registers: HashSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<Pos> {
        if self.is_sym(s) {
            Ok(self.next().pos)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn close(&mut self, s: &str, opened: Pos) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            let open = match s {
                ")" => "(",
                "]" => "[",
                _ => "{",
            };
            Err(Error::syntax(
                self.pos(),
                format!(
                    "expected `{s}` to close `{open}` opened at {opened}, found {}",
                    describe(self.peek())
                ),
            ))
        }
    }

    fn unexpected(&self, wanted: &str) -> Error {
        Error::syntax(
            self.pos(),
            format!("expected {wanted}, found {}", describe(self.peek())),
        )
    }

    fn ident(&mut self) -> Result<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.next().pos;
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn keyword(&mut self, w: &str) -> Result<Pos> {
        if self.is_word(w) {
            Ok(self.next().pos)
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    fn int_literal(&mut self) -> Result<i64> {
        match *self.peek() {
            Tok::Int(i) => {
                self.next();
                Ok(i)
            }
            _ => Err(self.unexpected("integer literal")),
        }
    }

    fn module(&mut self) -> Result<AstModule> {
        let pos = self.keyword("module")?;
        let (name, _) = self.ident()?;
        self.registers.clear();
        let open = self.expect("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                params.push(self.param()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.close(")", open)?;
        let body = self.block_body()?;
        let is_ctqg = params
            .iter()
            .any(|p| matches!(p.kind, ParamKind::Register(_)));
        Ok(AstModule {
            name,
            params,
            body,
            is_ctqg,
            pos,
        })
    }

    fn param(&mut self) -> Result<Param> {
        let pos = self.pos();
        let (kw, _) = self.ident()?;
        let kind = match kw.as_str() {
            "qbit" => {
                let (name, _) = self.ident()?;
                let kind = if self.is_sym("[") {
                    let open = self.next().pos;
                    let e = self.expr()?;
                    self.close("]", open)?;
                    ParamKind::QubitArray(e)
                } else {
                    ParamKind::Qubit
                };
                return Ok(Param { name, kind, pos });
            }
            "int" => ParamKind::Classical(ClassicalType::Int),
            "double" => ParamKind::Classical(ClassicalType::Double),
            "qint" => {
                let width = self.register_width()?;
                let (name, _) = self.ident()?;
                self.registers.insert(name.clone());
                return Ok(Param {
                    name,
                    kind: ParamKind::Register(width),
                    pos,
                });
            }
            _ => {
                return Err(Error::syntax(
                    pos,
                    format!("expected parameter type, found `{kw}`"),
                ))
            }
        };
        let (name, _) = self.ident()?;
        Ok(Param { name, kind, pos })
    }

    fn register_width(&mut self) -> Result<u32> {
        let open = self.expect("[")?;
        let pos = self.pos();
        let w = self.int_literal()?;
        self.close("]", open)?;
        if !(1..=64).contains(&w) {
            return Err(Error::syntax(pos, "register width must be in 1..=64"));
        }
        Ok(w as u32)
    }

    fn block_body(&mut self) -> Result<Vec<Stmt>> {
        let open = self.expect("{")?;
        let mut body = Vec::new();
        while !self.is_sym("}") {
            if self.peek() == &Tok::Eof {
                return Err(Error::syntax(
                    self.pos(),
                    format!("expected `}}` to close `{{` opened at {open}"),
                ));
            }
            self.stmt(&mut body)?;
        }
        self.next();
        Ok(body)
    }

    /// A braced block or a single statement.
    fn block(&mut self) -> Result<Vec<Stmt>> {
        if self.is_sym("{") {
            self.block_body()
        } else {
            let mut out = Vec::new();
            self.stmt(&mut out)?;
            Ok(out)
        }
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> Result<()> {
        let pos = self.pos();
        let push = |out: &mut Vec<Stmt>, kind| out.push(Stmt { kind, pos });
        if self.eat(";") {
            return Ok(());
        }
        if self.eat("$") {
            let kind = self.ctqg_reg_op()?;
            push(out, kind);
            return Ok(());
        }
        if self.eat("$if") {
            let kind = self.ctqg_if()?;
            push(out, kind);
            return Ok(());
        }
        if self.is_sym("{") {
            out.extend(self.block_body()?);
            return Ok(());
        }
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.unexpected("statement")),
        };
        match word.as_str() {
            "qbit" => {
                self.next();
                loop {
                    let (name, npos) = self.ident()?;
                    let size = if self.is_sym("[") {
                        let open = self.next().pos;
                        let e = self.expr()?;
                        self.close("]", open)?;
                        Some(e)
                    } else {
                        None
                    };
                    out.push(Stmt {
                        kind: StmtKind::QubitDecl { name, size },
                        pos: npos,
                    });
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            "qint" => {
                self.next();
                let width = self.register_width()?;
                loop {
                    let (name, npos) = self.ident()?;
                    self.registers.insert(name.clone());
                    out.push(Stmt {
                        kind: StmtKind::RegisterDecl { name, width },
                        pos: npos,
                    });
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            "int" | "double" => {
                self.next();
                let ty = if word == "int" {
                    ClassicalType::Int
                } else {
                    ClassicalType::Double
                };
                loop {
                    let (name, npos) = self.ident()?;
                    let init = if self.eat("=") {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    out.push(Stmt {
                        kind: StmtKind::ClassicalDecl { name, ty, init },
                        pos: npos,
                    });
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            "for" => {
                let kind = self.for_loop()?;
                push(out, kind);
            }
            "if" => {
                self.next();
                let open = self.expect("(")?;
                let cond = self.expr()?;
                self.close(")", open)?;
                let then = self.block()?;
                let els = if self.is_word("else") {
                    self.next();
                    self.block()?
                } else {
                    Vec::new()
                };
                push(out, StmtKind::If { cond, then, els });
            }
            _ => {
                if matches!(self.peek_at(1), Tok::Sym("(")) {
                    let kind = self.call()?;
                    push(out, kind);
                    self.expect(";")?;
                } else {
                    let kind = self.assignment()?;
                    push(out, kind);
                    self.expect(";")?;
                }
            }
        }
        Ok(())
    }

    fn assignment(&mut self) -> Result<StmtKind> {
        let (name, pos) = self.ident()?;
        let var = Expr::var(&name, pos);
        let value = if self.eat("=") {
            self.expr()?
        } else if self.eat("+=") {
            bin(BinOp::Add, var, self.expr()?, pos)
        } else if self.eat("-=") {
            bin(BinOp::Sub, var, self.expr()?, pos)
        } else if self.eat("++") {
            bin(BinOp::Add, var, Expr::lit(Value::Int(1), pos), pos)
        } else if self.eat("--") {
            bin(BinOp::Sub, var, Expr::lit(Value::Int(1), pos), pos)
        } else {
            return Err(self.unexpected("`=`, `+=`, `-=`, `++`, `--` or `(`"));
        };
        Ok(StmtKind::Assign { name, value })
    }

    fn for_loop(&mut self) -> Result<StmtKind> {
        self.keyword("for")?;
        let open = self.expect("(")?;
        let declares = if self.is_word("int") {
            self.next();
            true
        } else {
            false
        };
        let (var, _) = self.ident()?;
        self.expect("=")?;
        let init = self.expr()?;
        self.expect(";")?;
        let (cvar, cpos) = self.ident()?;
        if cvar != var {
            return Err(Error::syntax(cpos, format!("loop condition must test `{var}`")));
        }
        let cond = match self.peek() {
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("!=") => BinOp::Ne,
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.next();
        let bound = self.expr()?;
        self.expect(";")?;
        let step = self.for_update(&var)?;
        self.close(")", open)?;
        let body = self.block()?;
        Ok(StmtKind::For {
            var,
            declares,
            init,
            cond,
            bound,
            step,
            body,
        })
    }

    fn for_update(&mut self, var: &str) -> Result<Expr> {
        let pos = self.pos();
        let one = |sign: i64| Expr::lit(Value::Int(sign), pos);
        if self.eat("++") || self.eat("--") {
            let sign = if self.toks[self.at - 1].tok == Tok::Sym("++") { 1 } else { -1 };
            self.update_var(var)?;
            return Ok(one(sign));
        }
        self.update_var(var)?;
        if self.eat("++") {
            return Ok(one(1));
        }
        if self.eat("--") {
            return Ok(one(-1));
        }
        if self.eat("+=") {
            return self.expr();
        }
        if self.eat("-=") {
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), pos));
        }
        self.expect("=")?;
        self.update_var(var)?;
        if self.eat("+") {
            return self.expr();
        }
        if self.eat("-") {
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), pos));
        }
        Err(self.unexpected("`+` or `-`"))
    }

    fn update_var(&mut self, var: &str) -> Result<()> {
        let (name, pos) = self.ident()?;
        if name != var {
            return Err(Error::syntax(pos, format!("loop update must modify `{var}`")));
        }
        Ok(())
    }

    fn call(&mut self) -> Result<StmtKind> {
        let (name, pos) = self.ident()?;
        let open = self.expect("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.arg()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.close(")", open)?;
        let gate = name.parse::<GateKind>().ok().filter(|_| !self.module_names.contains(&name));
        let Some(kind) = gate else {
            if !self.module_names.contains(&name) && FOREIGN_GATES.contains(&name.as_str()) {
                return Err(Error::UnknownGate { pos, name });
            }
            return Ok(StmtKind::Call { name, args });
        };
        let mut qargs = args;
        let angle = if kind.has_angle() && qargs.len() >= 2 {
            match qargs.pop() {
                Some(Arg::Expr(e)) => Some(e),
                _ => {
                    return Err(Error::TypeMismatch {
                        pos,
                        msg: format!("last argument of `{name}` must be an angle"),
                    })
                }
            }
        } else {
            None
        };
        let operands = qargs
            .into_iter()
            .map(|a| match a {
                Arg::Index(name, e) => Ok(QubitOperand {
                    name,
                    pos: e.pos,
                    index: Some(e),
                }),
                Arg::Expr(Expr {
                    kind: ExprKind::Var(name),
                    pos,
                }) => Ok(QubitOperand {
                    name,
                    index: None,
                    pos,
                }),
                Arg::Expr(e) => Err(Error::TypeMismatch {
                    pos: e.pos,
                    msg: format!("gate operand `{e}` is not a qubit"),
                }),
                Arg::Slice(n, ..) => Err(Error::TypeMismatch {
                    pos,
                    msg: format!("slice of `{n}` cannot be a gate operand"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StmtKind::Gate {
            kind,
            operands,
            angle,
        })
    }

    fn arg(&mut self) -> Result<Arg> {
        if let (Tok::Ident(name), Tok::Sym("[")) = (self.peek().clone(), self.peek_at(1).clone()) {
            if Func::from_name(&name).is_none() {
                self.next();
                let open = self.next().pos;
                let lo = self.expr()?;
                let arg = if self.eat(":") {
                    let hi = self.expr()?;
                    Arg::Slice(name, lo, hi)
                } else {
                    Arg::Index(name, lo)
                };
                self.close("]", open)?;
                return Ok(arg);
            }
        }
        Ok(Arg::Expr(self.expr()?))
    }

    fn ctqg_operand(&mut self) -> Result<CtqgOperand> {
        if let Tok::Ident(name) = self.peek().clone() {
            if self.registers.contains(&name) {
                self.next();
                if self.eat("*") {
                    let (other, pos) = self.ident()?;
                    if !self.registers.contains(&other) {
                        return Err(Error::syntax(pos, format!("`{other}` is not a register")));
                    }
                    return Ok(CtqgOperand::Mul(name, other));
                }
                return Ok(CtqgOperand::Reg(name));
            }
        }
        Ok(CtqgOperand::Const(self.expr()?))
    }

    fn ctqg_reg_op(&mut self) -> Result<StmtKind> {
        let (reg, pos) = self.ident()?;
        if !self.registers.contains(&reg) {
            return Err(Error::syntax(pos, format!("`{reg}` is not a register")));
        }
        let kind = if self.eat(":=") {
            StmtKind::CtqgInit {
                reg,
                value: self.expr()?,
            }
        } else if self.eat("+=") {
            StmtKind::CtqgAdd {
                reg,
                operand: self.ctqg_operand()?,
            }
        } else if self.eat("-=") {
            let operand = self.ctqg_operand()?;
            if matches!(operand, CtqgOperand::Mul(..)) {
                return Err(Error::syntax(pos, "`-=` of a product is not supported"));
            }
            StmtKind::CtqgSub { reg, operand }
        } else {
            return Err(self.unexpected("`:=`, `+=` or `-=`"));
        };
        self.expect(";")?;
        Ok(kind)
    }

    fn ctqg_if(&mut self) -> Result<StmtKind> {
        let open = self.expect("(")?;
        let lhs = self.ctqg_operand_cmp()?;
        let op = match self.peek() {
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.next();
        let rhs = self.ctqg_operand_cmp()?;
        self.close(")", open)?;
        let mut then = Vec::new();
        while !self.is_sym("$else") && !self.is_sym("$endif") {
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected("`$endif`"));
            }
            self.stmt(&mut then)?;
        }
        let mut els = Vec::new();
        if self.eat("$else") {
            while !self.is_sym("$endif") {
                if self.peek() == &Tok::Eof {
                    return Err(self.unexpected("`$endif`"));
                }
                self.stmt(&mut els)?;
            }
        }
        self.expect("$endif")?;
        Ok(StmtKind::CtqgIf {
            lhs,
            op,
            rhs,
            then,
            els,
        })
    }

    /// Comparison operands: a register or an additive constant expression.
    fn ctqg_operand_cmp(&mut self) -> Result<CtqgOperand> {
        if let Tok::Ident(name) = self.peek() {
            if self.registers.contains(name) {
                let name = name.clone();
                self.next();
                return Ok(CtqgOperand::Reg(name));
            }
        }
        Ok(CtqgOperand::Const(self.binary(BinOp::Add.precedence())?))
    }

    pub fn expr(&mut self) -> Result<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else {
            return None;
        };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            let pos = self.next().pos;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = bin(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        if self.eat("-") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), pos));
        }
        if self.eat("!") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), pos));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                Ok(Expr::lit(Value::Int(i), pos))
            }
            Tok::Real(r) => {
                self.next();
                Ok(Expr::lit(Value::Real(r), pos))
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.close(")", pos)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                if !self.is_sym("(") {
                    return Ok(Expr::var(&name, pos));
                }
                let func = Func::from_name(&name).ok_or_else(|| {
                    Error::syntax(pos, format!("`{name}` is not a classical function"))
                })?;
                let open = self.next().pos;
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.close(")", open)?;
                if args.len() != func.arity() {
                    return Err(Error::ArityMismatch {
                        pos,
                        name,
                        expected: format!("{} arguments", func.arity()),
                        found: args.len(),
                    });
                }
                Ok(Expr::new(ExprKind::Call(func, args), pos))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn bin(op: BinOp, a: Expr, b: Expr, pos: Pos) -> Expr {
    Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), pos)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Real(r) => format!("`{r}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_layer_shape() {
        let src = "#define n 1000\nmodule foo(qbit q[n])\n{\n  for(int i=0;i<n;i++)\n    H(q[i]);\n  CNOT(q[n-1],q[0]);\n}\nmodule main()\n{\n  qbit b[n];\n  foo(b);\n}\n";
        let ast = parse_scafflite(src).unwrap();
        assert_eq!(ast.modules.len(), 2);
        let foo = &ast.modules[0];
        assert_eq!(foo.body.len(), 2);
        match &foo.body[0].kind {
            StmtKind::For {
                var, bound, body, ..
            } => {
                assert_eq!(var, "i");
                assert_eq!(bound.as_lit(), Some(Value::Int(1000)));
                assert!(matches!(body[0].kind, StmtKind::Gate { kind: GateKind::H, .. }));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            foo.body[1].kind,
            StmtKind::Gate {
                kind: GateKind::Cnot,
                ..
            }
        ));
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let err = parse_scafflite("module main(){ H(q[0]; }").unwrap_err();
        match err {
            Error::Syntax { pos, msg } => {
                assert_eq!(pos, Pos::new(1, 22));
                assert!(msg.contains("close `(`"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn foreign_gate_is_unknown() {
        let err = parse_scafflite("module main(){ qbit q[2]; CZ(q[0], q[1]); }").unwrap_err();
        assert!(matches!(err, Error::UnknownGate { .. }));
    }

    #[test]
    fn ctqg_statements() {
        let src = "module m(qint[8] a, qint[8] b){ $ a += 3; $ a -= b; $if (a <= 5) $ b += a; $else $ b -= 1; $endif }";
        let ast = parse_scafflite(src).unwrap();
        let m = &ast.modules[0];
        assert!(m.is_ctqg);
        assert!(matches!(
            &m.body[1].kind,
            StmtKind::CtqgSub { operand: CtqgOperand::Reg(r), .. } if r == "b"
        ));
        match &m.body[2].kind {
            StmtKind::CtqgIf { then, els, op, .. } => {
                assert_eq!(*op, BinOp::Le);
                assert_eq!(then.len(), 1);
                assert_eq!(els.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }
}
