use std::collections::HashMap;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::flatten::{ArgSlice, FlatInst, FlatModule, QubitRef, RegDecl, Span, SpecializedProgram};
use crate::gate::GateKind;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Punct(char),
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::QasmSyntax {
        line: line as u32,
        msg: msg.into(),
    }
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(s[st..i].to_string()));
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let st = i;
            i += 1;
            while i < b.len() {
                let d = b[i];
                let exp_sign = (d == b'-' || d == b'+') && matches!(b[i - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Tok::Num(s[st..i].to_string()));
        } else if "()[]:,;{}*".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else {
            return Err(err(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Line<'a> {
    toks: &'a [Tok],
    at: usize,
    no: usize,
}

impl Line<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<&Tok> {
        let t = self.toks.get(self.at).ok_or_else(|| err(self.no, "unexpected end of line"))?;
        self.at += 1;
        Ok(t)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.no, format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let no = self.no;
        match self.next()? {
            Tok::Ident(s) => Ok(s.clone()),
            t => Err(err(no, format!("expected a name, found {t:?}"))),
        }
    }

    fn uint(&mut self) -> Result<u64> {
        let no = self.no;
        match self.next()? {
            Tok::Num(s) => s.parse().map_err(|_| err(no, format!("`{s}` is not an index"))),
            t => Err(err(no, format!("expected a number, found {t:?}"))),
        }
    }

    fn done(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(err(self.no, format!("trailing {t:?}"))),
        }
    }
}

/// A qubit operand as written.
enum Operand {
    Bare(String),
    Index(String, u64),
    Range(String, u64, u64),
    Angle(f64),
}

fn operand(l: &mut Line) -> Result<Operand> {
    if let Some(Tok::Num(s)) = l.peek() {
        let s = s.clone();
        l.at += 1;
        return s
            .parse()
            .map(Operand::Angle)
            .map_err(|_| err(l.no, format!("bad number `{s}`")));
    }
    let name = l.ident()?;
    if !l.eat('[') {
        return Ok(Operand::Bare(name));
    }
    let lo = l.uint()?;
    let op = if l.eat(':') {
        let hi = l.uint()?;
        Operand::Range(name, lo, hi)
    } else {
        Operand::Index(name, lo)
    };
    l.expect(']')?;
    Ok(op)
}

/// Operands of a statement: `( a , b )` or a bare comma list.
fn operands(l: &mut Line) -> Result<Vec<Operand>> {
    let paren = l.eat('(');
    let mut ops = Vec::new();
    let closed = |l: &Line| {
        if paren {
            l.peek() == Some(&Tok::Punct(')'))
        } else {
            matches!(l.peek(), None | Some(Tok::Punct(';')))
        }
    };
    if !closed(l) {
        loop {
            ops.push(operand(l)?);
            if !l.eat(',') {
                break;
            }
        }
    }
    if paren {
        l.expect(')')?;
    }
    l.eat(';');
    l.done()?;
    Ok(ops)
}

struct PendingCall {
    callee: String,
    args: Vec<(u32, u64, Option<u64>)>,
}

struct ModBuilder {
    module: FlatModule,
    names: HashMap<String, u32>,
    /// Highest index used per register.
    max_index: Vec<u64>,
    /// Open repeat blocks: count and outer body.
    stack: Vec<(u64, Vec<FlatInst>)>,
    body: Vec<FlatInst>,
    /// Call argument lengths not yet known (whole-register arguments).
    calls: Vec<PendingCall>,
}

impl ModBuilder {
    fn reg(&self, name: &str, no: usize) -> Result<u32> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| err(no, format!("`{name}` is not declared")))
    }

    fn add_reg(&mut self, d: RegDecl, param: bool, no: usize) -> Result<()> {
        let r = (self.module.params.len() + self.module.locals.len()) as u32;
        if self.names.insert(d.name.clone(), r).is_some() {
            return Err(err(no, format!("`{}` is declared twice", d.name)));
        }
        if param {
            self.module.params.push(d);
        } else {
            self.module.locals.push(d);
        }
        self.max_index.push(0);
        Ok(())
    }

    fn touch(&mut self, r: u32, idx: u64) {
        let m = &mut self.max_index[r as usize];
        *m = (*m).max(idx);
    }

    fn qubit(&mut self, o: &Operand, no: usize) -> Result<QubitRef> {
        match o {
            Operand::Bare(n) => {
                let r = self.reg(n, no)?;
                if !self.module.reg(r).scalar {
                    return Err(err(no, format!("`{n}` needs an index")));
                }
                Ok(QubitRef { reg: r, index: 0 })
            }
            Operand::Index(n, i) => {
                let r = self.reg(n, no)?;
                self.touch(r, *i);
                Ok(QubitRef { reg: r, index: *i })
            }
            _ => Err(err(no, "expected a qubit")),
        }
    }

    fn push(&mut self, i: FlatInst) {
        self.body.push(i);
    }

    fn gate(&mut self, kind: GateKind, mut ops: Vec<Operand>, no: usize) -> Result<()> {
        let angle = if kind.has_angle() {
            match ops.pop() {
                Some(Operand::Angle(a)) => Some(a),
                _ => return Err(err(no, format!("`{kind}` needs an angle"))),
            }
        } else {
            None
        };
        if ops.len() != kind.arity() {
            return Err(err(
                no,
                format!("`{kind}` takes {} qubits, found {}", kind.arity(), ops.len()),
            ));
        }
        if ops.iter().any(|o| matches!(o, Operand::Range(..))) {
            let mut spans = Vec::new();
            let mut count = None;
            for o in &ops {
                let Operand::Range(n, lo, hi) = o else {
                    return Err(err(no, "slices and single qubits cannot be mixed"));
                };
                let r = self.reg(n, no)?;
                self.touch(r, (*lo).max(*hi));
                let c = lo.abs_diff(*hi) + 1;
                if count.is_some_and(|k| k != c) {
                    return Err(err(no, "slices differ in length"));
                }
                count = Some(c);
                spans.push(Span {
                    reg: r,
                    start: *lo,
                    stride: if hi >= lo { 1 } else { -1 },
                });
            }
            self.push(FlatInst::Forall {
                kind,
                operands: spans,
                count: count.unwrap_or(0),
                angle,
            });
        } else {
            let qubits = ops
                .iter()
                .map(|o| self.qubit(o, no))
                .collect::<Result<Vec<_>>>()?;
            self.push(FlatInst::Gate {
                kind,
                qubits,
                angle,
            });
        }
        Ok(())
    }

    fn call(&mut self, callee: String, ops: Vec<Operand>, no: usize) -> Result<()> {
        let mut args = Vec::new();
        for o in ops {
            let a = match o {
                Operand::Bare(n) => (self.reg(&n, no)?, 0, None),
                Operand::Index(n, i) => {
                    let r = self.reg(&n, no)?;
                    self.touch(r, i);
                    (r, i, Some(1))
                }
                Operand::Range(n, lo, hi) => {
                    if hi < lo {
                        return Err(err(no, "argument slices must ascend"));
                    }
                    let r = self.reg(&n, no)?;
                    self.touch(r, hi);
                    (r, lo, Some(hi - lo + 1))
                }
                Operand::Angle(_) => return Err(err(no, "modules take only qubit arguments")),
            };
            args.push(a);
        }
        self.calls.push(PendingCall {
            callee: callee.clone(),
            args: args.clone(),
        });
        self.push(FlatInst::Call {
            callee,
            args: args
                .iter()
                .map(|(reg, start, len)| ArgSlice {
                    reg: *reg,
                    start: *start,
                    len: len.unwrap_or(u64::MAX),
                })
                .collect(),
        });
        Ok(())
    }
}

fn header(l: &mut Line) -> Result<ModBuilder> {
    let name = l.ident()?;
    let mut b = ModBuilder {
        module: FlatModule {
            name,
            params: Vec::new(),
            locals: Vec::new(),
            body: Vec::new(),
        },
        names: HashMap::new(),
        max_index: Vec::new(),
        stack: Vec::new(),
        body: Vec::new(),
        calls: Vec::new(),
    };
    l.expect('(')?;
    if !l.eat(')') {
        loop {
            if l.ident()? != "qbit" {
                return Err(err(l.no, "parameters are declared `qbit* name`"));
            }
            let scalar = !l.eat('*');
            let n = l.ident()?;
            b.add_reg(
                RegDecl {
                    name: n,
                    size: if scalar { 1 } else { 0 },
                    scalar,
                },
                true,
                l.no,
            )?;
            if l.eat(')') {
                break;
            }
            l.expect(',')?;
        }
    }
    Ok(b)
}

/// Read a document in any of the three formats (they share one grammar)
/// into a program. Whole-register parameter sizes are inferred from call
/// sites, or from the largest index used when a module is never called.
pub fn parse_qasm_hl(doc: &str) -> Result<SpecializedProgram> {
    let mut modules: IndexMap<String, ModBuilder> = IndexMap::new();
    let mut cur: Option<ModBuilder> = None;
    let mut opened = false;
    for (k, raw) in doc.lines().enumerate() {
        let no = k + 1;
        let text = raw.split("//").next().unwrap_or("");
        let toks = tokenize(text, no)?;
        if toks.is_empty() {
            continue;
        }
        let mut l = Line {
            toks: &toks,
            at: 0,
            no,
        };
        let Some(b) = cur.as_mut() else {
            if l.ident()? != "module" {
                return Err(err(no, "expected `module`"));
            }
            let b = header(&mut l)?;
            opened = l.eat('{');
            l.done()?;
            if modules.contains_key(&b.module.name) {
                return Err(err(no, format!("module `{}` is defined twice", b.module.name)));
            }
            cur = Some(b);
            continue;
        };
        if !opened {
            l.expect('{')?;
            l.done()?;
            opened = true;
            continue;
        }
        if l.eat('}') {
            l.done()?;
            match b.stack.pop() {
                Some((count, outer)) => {
                    let body = std::mem::replace(&mut b.body, outer);
                    b.push(FlatInst::Repeat { count, body });
                }
                None => {
                    let mut b = cur.take().unwrap();
                    b.module.body = std::mem::take(&mut b.body);
                    modules.insert(b.module.name.clone(), b);
                }
            }
            continue;
        }
        let word = l.ident()?;
        match word.as_str() {
            "qbit" => {
                let name = l.ident()?;
                let (size, scalar) = if l.eat('[') {
                    let n = l.uint()?;
                    l.expect(']')?;
                    (n, false)
                } else {
                    (1, true)
                };
                l.eat(';');
                l.done()?;
                b.add_reg(RegDecl { name, size, scalar }, false, no)?;
            }
            "repeat" => {
                l.expect('(')?;
                let count = l.uint()?;
                l.expect(')')?;
                l.expect('{')?;
                l.done()?;
                let outer = std::mem::take(&mut b.body);
                b.stack.push((count, outer));
            }
            _ => {
                let ops = operands(&mut l)?;
                match word.parse::<GateKind>() {
                    Ok(kind) => b.gate(kind, ops, no)?,
                    Err(_) => b.call(word, ops, no)?,
                }
            }
        }
    }
    if let Some(b) = cur {
        return Err(err(
            doc.lines().count(),
            format!("module `{}` is not closed", b.module.name),
        ));
    }
    finish(modules)
}

fn finish(mut modules: IndexMap<String, ModBuilder>) -> Result<SpecializedProgram> {
    let entry = if modules.contains_key("main") {
        "main".to_string()
    } else {
        modules
            .keys()
            .last()
            .cloned()
            .ok_or_else(|| err(1, "no modules"))?
    };
    for b in modules.values() {
        for c in &b.calls {
            let callee = modules.get(&c.callee).ok_or_else(|| {
                Error::Invalid(format!("`{}` calls undefined module `{}`", b.module.name, c.callee))
            })?;
            if callee.module.params.len() != c.args.len() {
                return Err(Error::ArityMismatch {
                    pos: crate::error::Pos::new(0, 0),
                    name: c.callee.clone(),
                    expected: callee.module.params.len().to_string(),
                    found: c.args.len(),
                });
            }
        }
    }
    // Callers before callees, so whole-register arguments have known sizes.
    let shape = SpecializedProgram {
        modules: modules
            .iter()
            .map(|(n, b)| (n.clone(), b.module.clone()))
            .collect(),
        entry: entry.clone(),
        specialization_index: IndexMap::new(),
    };
    let mut order = shape.postorder()?;
    order.reverse();
    let mut sized: HashMap<String, Vec<Option<u64>>> = HashMap::new();
    for name in &order {
        let b = &modules[name.as_str()];
        let incoming = sized.remove(name).unwrap_or_default();
        let mut sizes: Vec<u64> = Vec::new();
        for (r, d) in b.module.params.iter().enumerate() {
            let s = if d.scalar {
                1
            } else {
                match incoming.get(r).copied().flatten() {
                    Some(s) => s,
                    None => b.max_index[r] + 1,
                }
            };
            sizes.push(s);
        }
        sizes.extend(b.module.locals.iter().map(|d| d.size));
        let mut out: Vec<(String, Vec<Option<u64>>)> = Vec::new();
        for c in &b.calls {
            let lens = c
                .args
                .iter()
                .map(|(reg, _, len)| Some(len.unwrap_or(sizes[*reg as usize])))
                .collect();
            out.push((c.callee.clone(), lens));
        }
        let b = modules.get_mut(name.as_str()).unwrap();
        for (r, d) in b.module.params.iter_mut().enumerate() {
            d.size = sizes[r];
        }
        resolve_whole_args(&mut b.module.body, &sizes);
        for (callee, lens) in out {
            let e = sized.entry(callee).or_default();
            if e.len() < lens.len() {
                e.resize(lens.len(), None);
            }
            for (k, l) in lens.into_iter().enumerate() {
                e[k] = e[k].max(l);
            }
        }
    }
    let modules: IndexMap<String, FlatModule> =
        modules.into_iter().map(|(n, b)| (n, b.module)).collect();
    Ok(SpecializedProgram {
        modules,
        entry,
        specialization_index: IndexMap::new(),
    })
}

fn resolve_whole_args(body: &mut [FlatInst], sizes: &[u64]) {
    for i in body {
        match i {
            FlatInst::Call { args, .. } => {
                for a in args {
                    if a.len == u64::MAX {
                        a.len = sizes[a.reg as usize];
                    }
                }
            }
            FlatInst::Repeat { body, .. } => resolve_whole_args(body, sizes),
            _ => {}
        }
    }
}
