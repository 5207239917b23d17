use indexmap::IndexMap;

use crate::error::{Error, Pos, Result};
use crate::expr::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    /// Punctuation and operators, including `$`, `$if`, `$else`, `$endif`.
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: [&str; 30] = [
    ":=", "+=", "-=", "++", "--", "<=", ">=", "==", "!=", "&&", "||", "(", ")", "{", "}", "[",
    "]", ";", ",", ":", "+", "-", "*", "/", "%", "<", ">", "!", "=", "$",
];

/// Tokenize ScaffLite source. `#define NAME literal` lines are collected
/// and every later use of `NAME` is replaced by the literal.
pub fn lex(src: &str) -> Result<(Vec<Token>, IndexMap<String, Value>)> {
    let mut out = Vec::new();
    let mut defines: IndexMap<String, Value> = IndexMap::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
                at_line_start = true;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(Error::syntax(pos, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '#' {
            if !at_line_start {
                return Err(Error::syntax(pos, "`#` must start a line"));
            }
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let text = text.split("//").next().unwrap_or("");
            let parts: Vec<&str> = text.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "#define" {
                return Err(Error::syntax(pos, "expected `#define NAME literal`"));
            }
            if !is_ident(parts[1]) {
                return Err(Error::syntax(pos, format!("bad macro name `{}`", parts[1])));
            }
            let v = parse_literal(parts[2])
                .ok_or_else(|| Error::syntax(pos, "macro value must be a numeric literal"))?;
            defines.insert(parts[1].to_string(), v);
            continue;
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            match defines.get(&word) {
                Some(v) => push_value(&mut out, *v, pos),
                None => out.push(Token {
                    tok: Tok::Ident(word),
                    pos,
                }),
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                bump!();
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                bump!();
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump!();
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = parse_literal(&text)
                .ok_or_else(|| Error::syntax(pos, format!("bad number `{text}`")))?;
            push_value(&mut out, v, pos);
            continue;
        }
        if c == '$' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j].is_ascii_alphabetic() {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let sym = match word.as_str() {
                "if" => Some("$if"),
                "else" => Some("$else"),
                "endif" => Some("$endif"),
                _ => None,
            };
            if let Some(sym) = sym {
                while i < j {
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Sym(sym),
                    pos,
                });
                continue;
            }
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
            return Err(Error::syntax(pos, format!("unexpected character `{c}`")));
        };
        for _ in 0..sym.chars().count() {
            bump!();
        }
        out.push(Token {
            tok: Tok::Sym(sym),
            pos,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos::new(line, col),
    });
    Ok((out, defines))
}

fn push_value(out: &mut Vec<Token>, v: Value, pos: Pos) {
    // Negative macro values become a parenthesized negation so that
    // `x - N` keeps its meaning.
    let neg = v.as_f64() < 0.0;
    let tok = match v {
        Value::Int(i) => Tok::Int(i.wrapping_abs()),
        Value::Real(r) => Tok::Real(r.abs()),
    };
    if neg {
        for t in [Tok::Sym("("), Tok::Sym("-"), tok, Tok::Sym(")")] {
            out.push(Token { tok: t, pos });
        }
    } else {
        out.push(Token { tok, pos });
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_literal(s: &str) -> Option<Value> {
    if let Some(rest) = s.strip_prefix('-') {
        return parse_literal(rest).map(|v| match v {
            Value::Int(i) => Value::Int(-i),
            Value::Real(r) => Value::Real(-r),
        });
    }
    if s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() {
        return s.parse().ok().map(Value::Int);
    }
    s.parse::<f64>().ok().filter(|r| r.is_finite()).map(Value::Real)
}
