use std::collections::HashSet;
use std::fmt;

use super::ast::{CircuitAst, InputPol, RotOp, Stmt, StmtKind};
use super::expr::{BinOp, Expr, Func, RESERVED};

/// Location and reason of a rejected source. Lines and columns are 1-based
/// and count characters; a column one past the end of a line marks the end
/// of that line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.token.is_empty() {
            write!(f, " (at `{}`)", self.token)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

const STOP: &[char] = &['{', '}', '(', ')', ',', '=', ':'];

fn is_label_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '+' | '-' | '\'' | '.')
}

fn is_identifier(s: &str) -> bool {
    let mut it = s.chars();
    matches!(it.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && it.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(text: &str, line: usize) -> Self {
        Self { chars: text.chars().collect(), pos: 0, line }
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

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn next_column(&mut self) -> usize {
        self.skip_ws();
        self.column()
    }

    fn error_at(&self, column: usize, message: impl Into<String>, token: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column, message: message.into(), token: token.into() }
    }

    /// Error at the current position, quoting whatever sits there.
    fn error_here(&mut self, message: impl Into<String>) -> ParseError {
        self.skip_ws();
        let token = self.token_here();
        self.error_at(self.column(), message, token)
    }

    fn token_here(&self) -> String {
        match self.chars.get(self.pos) {
            None => String::new(),
            Some(&c) if STOP.contains(&c) => c.to_string(),
            Some(_) => self.chars[self.pos..].iter().take_while(|c| !c.is_whitespace() && !STOP.contains(c)).collect(),
        }
    }

    fn word(&mut self) -> Option<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| !c.is_whitespace() && !STOP.contains(c)) {
            self.pos += 1;
        }
        (self.pos > start).then(|| (self.chars[start..self.pos].iter().collect(), start + 1))
    }

    fn expect_word(&mut self, what: &str) -> PResult<(String, usize)> {
        match self.word() {
            Some(w) => Ok(w),
            None => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{c}`")))
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn finish(&mut self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            let tok = self.token_here();
            Err(self.error_here(format!("unexpected `{tok}`")))
        }
    }

    fn number(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let digits = |c: &mut Cursor| {
            let s = c.pos;
            while c.chars.get(c.pos).is_some_and(|ch| ch.is_ascii_digit()) {
                c.pos += 1;
            }
            c.pos > s
        };
        let mut any = digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            any |= digits(self);
        }
        if any && matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(x) if any && x.is_finite() => Ok(Expr::Num(x)),
            _ => Err(self.error_at(start + 1, "malformed number", text)),
        }
    }

    fn identifier(&mut self) -> (String, usize) {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
            self.pos += 1;
        }
        (self.chars[start..self.pos].iter().collect(), start + 1)
    }

    fn expr(&mut self, names: &HashSet<String>) -> PResult<Expr> {
        self.expr_prec(names, 0)
    }

    fn expr_prec(&mut self, names: &HashSet<String>, min_prec: u8) -> PResult<Expr> {
        let mut lhs = match self.peek() {
            None => return Err(self.error_here("expected expression")),
            Some('-') => {
                self.pos += 1;
                Expr::Neg(Box::new(self.expr_prec(names, 3)?))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr_prec(names, 0)?;
                self.expect(')')?;
                e
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number()?,
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let (name, col) = self.identifier();
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.error_at(col, format!("function `{name}` needs an argument in parentheses"), name));
                    }
                    let arg = self.expr_prec(names, 0)?;
                    self.expect(')')?;
                    Expr::Call(f, Box::new(arg))
                } else if name == "pi" {
                    Expr::Pi
                } else if names.contains(&name) {
                    Expr::Var(name)
                } else if self.peek() == Some('(') {
                    return Err(self.error_at(col, format!("unknown function `{name}`"), name));
                } else {
                    return Err(self.error_at(col, format!("undeclared parameter `{name}`"), name));
                }
            }
            Some(_) => {
                let tok = self.token_here();
                return Err(self.error_here(format!("unexpected `{tok}` in expression")));
            }
        };
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => break,
            };
            let prec = match op {
                BinOp::Add | BinOp::Sub => 1,
                BinOp::Mul | BinOp::Div => 2,
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr_prec(names, prec + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }
}

struct Frame {
    count: Expr,
    body: Vec<Stmt>,
    line: usize,
    column: usize,
}

#[derive(Default)]
struct Parser {
    paths: Option<Vec<String>>,
    sinks: Option<Vec<String>>,
    levels: Option<Vec<String>>,
    names: HashSet<String>,
    has_input: bool,
    has_classify: bool,
    stack: Vec<Frame>,
    top: Vec<Stmt>,
}

impl Parser {
    fn emit(&mut self, stmt: Stmt) {
        match self.stack.last_mut() {
            Some(frame) => frame.body.push(stmt),
            None => self.top.push(stmt),
        }
    }

    fn top_level_only(&self, cur: &Cursor, keyword: &str, column: usize) -> PResult<()> {
        if self.stack.is_empty() {
            Ok(())
        } else {
            Err(cur.error_at(column, format!("`{keyword}` is not allowed inside a repeat block"), keyword))
        }
    }

    fn label_list(&self, cur: &mut Cursor, kind: &str) -> PResult<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        while !cur.at_end() {
            let (w, col) = cur.word().ok_or_else(|| cur.error_here(format!("expected {kind} label")))?;
            check_label(cur, &w, col)?;
            if out.contains(&w) {
                return Err(cur.error_at(col, format!("duplicate {kind} label `{w}`"), w));
            }
            out.push(w);
        }
        if out.is_empty() {
            return Err(cur.error_here(format!("expected at least one {kind} label")));
        }
        Ok(out)
    }

    fn path(&self, cur: &mut Cursor) -> PResult<String> {
        let (w, col) = cur.expect_word("path label")?;
        match &self.paths {
            Some(p) if p.contains(&w) => Ok(w),
            Some(_) => Err(cur.error_at(col, format!("undeclared path `{w}`"), w)),
            None => Err(cur.error_at(col, format!("undeclared path `{w}` (no `paths` declaration before this line)"), w)),
        }
    }

    fn keyed_expr(&self, cur: &mut Cursor, key: &str) -> PResult<Expr> {
        let (w, col) = cur.expect_word(&format!("`{key}=`"))?;
        if w != key {
            return Err(cur.error_at(col, format!("expected `{key}=`"), w));
        }
        cur.expect('=')?;
        cur.expr(&self.names)
    }

    fn new_name(&self, cur: &mut Cursor) -> PResult<String> {
        let (w, col) = cur.expect_word("parameter name")?;
        if !is_identifier(&w) {
            return Err(cur.error_at(col, format!("invalid parameter name `{w}`"), w));
        }
        if RESERVED.contains(&w.as_str()) {
            return Err(cur.error_at(col, format!("`{w}` is a reserved name"), w));
        }
        if self.names.contains(&w) {
            return Err(cur.error_at(col, format!("parameter `{w}` is already defined"), w));
        }
        Ok(w)
    }

    fn statement(&mut self, cur: &mut Cursor) -> PResult<()> {
        let line = cur.line;
        let Some((kw, kw_col)) = cur.word() else {
            // a line starting with a stop character
            let col = cur.next_column();
            if cur.eat('}') {
                return self.close(cur, col);
            }
            let tok = cur.token_here();
            return Err(cur.error_here(format!("unexpected `{tok}`")));
        };
        let kind = match kw.as_str() {
            "paths" | "sinks" | "atom-levels" => {
                self.top_level_only(cur, &kw, kw_col)?;
                let slot = match kw.as_str() {
                    "paths" => &self.paths,
                    "sinks" => &self.sinks,
                    _ => &self.levels,
                };
                if slot.is_some() {
                    return Err(cur.error_at(kw_col, format!("`{kw}` declared twice"), kw));
                }
                let kind_name = match kw.as_str() {
                    "paths" => "path",
                    "sinks" => "sink",
                    _ => "atom level",
                };
                let start = cur.next_column();
                let labels = self.label_list(cur, kind_name)?;
                match kw.as_str() {
                    "paths" => {
                        if let Some(bad) = labels.iter().find(|l| l.as_str() == "sinks") {
                            return Err(cur.error_at(start, "`sinks` cannot be used as a path label", bad.clone()));
                        }
                        if let Some(s) = &self.sinks {
                            if let Some(l) = labels.iter().find(|l| s.contains(l)) {
                                return Err(cur.error_at(start, format!("path `{l}` clashes with a sink label"), l.clone()));
                            }
                        }
                        self.paths = Some(labels.clone());
                        StmtKind::Paths(labels)
                    }
                    "sinks" => {
                        if labels.len() != 2 {
                            return Err(cur.error_at(start, "`sinks` takes exactly two labels (plus, minus)", kw));
                        }
                        if let Some(p) = &self.paths {
                            if let Some(l) = labels.iter().find(|l| p.contains(l)) {
                                return Err(cur.error_at(start, format!("sink `{l}` clashes with a path label"), l.clone()));
                            }
                        }
                        self.sinks = Some(labels.clone());
                        StmtKind::Sinks(labels)
                    }
                    _ => {
                        self.levels = Some(labels.clone());
                        StmtKind::AtomLevels(labels)
                    }
                }
            }
            "param" => {
                self.top_level_only(cur, &kw, kw_col)?;
                let name = self.new_name(cur)?;
                let default = if cur.eat('=') { Some(cur.expr(&self.names)?) } else { None };
                self.names.insert(name.clone());
                StmtKind::Param { name, default }
            }
            "let" => {
                self.top_level_only(cur, &kw, kw_col)?;
                let name = self.new_name(cur)?;
                cur.expect('=')?;
                let value = cur.expr(&self.names)?;
                self.names.insert(name.clone());
                StmtKind::Let { name, value }
            }
            "input" => {
                self.top_level_only(cur, &kw, kw_col)?;
                if self.has_input {
                    return Err(cur.error_at(kw_col, "`input` declared twice", kw));
                }
                let path = self.path(cur)?;
                let (w, col) = cur.expect_word("polarization (+, -, x or y)")?;
                let pol = InputPol::from_word(&w)
                    .ok_or_else(|| cur.error_at(col, format!("unknown polarization `{w}` (expected +, -, x or y)"), w.clone()))?;
                self.has_input = true;
                StmtKind::Input { path, pol }
            }
            "bs" => {
                let a = self.path(cur)?;
                let col = cur.next_column();
                let b = self.path(cur)?;
                if a == b {
                    return Err(cur.error_at(col, "beam splitter needs two distinct paths", b));
                }
                let t = self.keyed_expr(cur, "t")?;
                let r = self.keyed_expr(cur, "r")?;
                StmtKind::BeamSplitter { a, b, t, r }
            }
            "couple" => {
                let cavity = self.path(cur)?;
                let col = cur.next_column();
                let out = self.path(cur)?;
                if cavity == out {
                    return Err(cur.error_at(col, "coupler needs two distinct paths", out));
                }
                let t = self.keyed_expr(cur, "t")?;
                let r = self.keyed_expr(cur, "r")?;
                StmtKind::Couple { cavity, out, t, r }
            }
            "mirror" => StmtKind::Mirror { path: self.path(cur)? },
            "phase" => {
                let path = self.path(cur)?;
                let phi = cur.expr(&self.names)?;
                StmtKind::Phase { path, phi }
            }
            "rot" => {
                let path = self.path(cur)?;
                let (w, col) = cur.expect_word("`flip` or `matrix(...)`")?;
                let op = match w.as_str() {
                    "flip" => RotOp::Flip,
                    "matrix" => {
                        cur.expect('(')?;
                        let mut entries = Vec::with_capacity(4);
                        for k in 0..4 {
                            if k > 0 {
                                cur.expect(',')?;
                            }
                            entries.push(cur.expr(&self.names)?);
                        }
                        cur.expect(')')?;
                        RotOp::Matrix(entries.try_into().expect("four entries"))
                    }
                    _ => return Err(cur.error_at(col, format!("unknown rotation `{w}` (expected flip or matrix)"), w)),
                };
                StmtKind::Rot { path, op }
            }
            "atom" => {
                let path = self.path(cur)?;
                if self.sinks.is_none() {
                    return Err(cur.error_at(kw_col, "`atom` needs a `sinks` declaration before it", kw));
                }
                match &self.levels {
                    Some(l) if l.len() >= 3 => {}
                    Some(_) => return Err(cur.error_at(kw_col, "`atom` needs at least three atom levels", kw)),
                    None => return Err(cur.error_at(kw_col, "`atom` needs an `atom-levels` declaration before it", kw)),
                }
                let mut transparent = Vec::new();
                if let Some((w, col)) = cur.word() {
                    if w != "transparent" {
                        return Err(cur.error_at(col, format!("unexpected `{w}`"), w));
                    }
                    cur.expect(':')?;
                    while let Some((lvl, col)) = cur.word() {
                        if !self.levels.as_ref().is_some_and(|l| l.contains(&lvl)) {
                            return Err(cur.error_at(col, format!("undeclared atom level `{lvl}`"), lvl));
                        }
                        if transparent.contains(&lvl) {
                            return Err(cur.error_at(col, format!("duplicate atom level `{lvl}`"), lvl));
                        }
                        transparent.push(lvl);
                    }
                    if transparent.is_empty() {
                        return Err(cur.error_here("expected at least one atom level after `transparent:`"));
                    }
                }
                StmtKind::Atom { path, transparent }
            }
            "relabel" => {
                let mut mapping: Vec<(String, String)> = Vec::new();
                let start = cur.next_column();
                while let Some((w, col)) = cur.word() {
                    let Some((from, to)) = w.split_once("->") else {
                        return Err(cur.error_at(col, format!("expected `from->to`, found `{w}`"), w));
                    };
                    for (label, offset) in [(from, 0), (to, from.chars().count() + 2)] {
                        if !self.paths.as_ref().is_some_and(|p| p.iter().any(|x| x == label)) {
                            return Err(cur.error_at(col + offset, format!("undeclared path `{label}`"), label));
                        }
                    }
                    mapping.push((from.to_string(), to.to_string()));
                }
                if mapping.is_empty() {
                    return Err(cur.error_here("expected at least one `from->to` pair"));
                }
                let mut froms: Vec<&String> = mapping.iter().map(|(f, _)| f).collect();
                let mut tos: Vec<&String> = mapping.iter().map(|(_, t)| t).collect();
                froms.sort();
                tos.sort();
                if froms.windows(2).any(|w| w[0] == w[1]) || froms != tos {
                    return Err(cur.error_at(start, "relabeling must be a permutation of the listed paths", "relabel"));
                }
                StmtKind::Relabel(mapping)
            }
            "repeat" => {
                let count = cur.expr(&self.names)?;
                if count.variables().is_empty() {
                    let n = count.eval(&Default::default()).unwrap_or(f64::NAN);
                    if !(n >= 1.0 && n.fract() == 0.0) {
                        return Err(cur.error_at(kw_col, format!("repeat count `{count}` must be a positive integer"), kw));
                    }
                }
                cur.expect('{')?;
                cur.finish()?;
                self.stack.push(Frame { count, body: Vec::new(), line, column: kw_col });
                return Ok(());
            }
            "classify" => {
                self.top_level_only(cur, &kw, kw_col)?;
                if self.has_classify {
                    return Err(cur.error_at(kw_col, "only one `classify` statement is allowed", kw));
                }
                let Some(paths) = self.paths.clone() else {
                    return Err(cur.error_at(kw_col, "`classify` needs a `paths` declaration before it", kw));
                };
                let mut pairs: Vec<(String, String)> = Vec::new();
                let mut sinks: Option<String> = None;
                while let Some((key, col)) = cur.word() {
                    cur.expect('=')?;
                    let (value, vcol) = cur.expect_word("branch label")?;
                    check_label(cur, &value, vcol)?;
                    if key == "sinks" {
                        if sinks.replace(value).is_some() {
                            return Err(cur.error_at(col, "`sinks` classified twice", key));
                        }
                    } else if !paths.contains(&key) {
                        return Err(cur.error_at(col, format!("undeclared path `{key}`"), key));
                    } else if pairs.iter().any(|(p, _)| *p == key) {
                        return Err(cur.error_at(col, format!("path `{key}` classified twice"), key));
                    } else {
                        pairs.push((key, value));
                    }
                }
                if let Some(missing) = paths.iter().find(|p| !pairs.iter().any(|(q, _)| q == *p)) {
                    return Err(cur.error_here(format!("classifier does not cover path `{missing}`")));
                }
                self.has_classify = true;
                StmtKind::Classify { paths: pairs, sinks: sinks.unwrap_or_else(|| "absorbed".into()) }
            }
            _ => return Err(cur.error_at(kw_col, format!("unknown keyword `{kw}`"), kw)),
        };
        cur.finish()?;
        self.emit(Stmt::new(kind, line));
        Ok(())
    }

    fn close(&mut self, cur: &mut Cursor, column: usize) -> PResult<()> {
        let Some(frame) = self.stack.pop() else {
            return Err(cur.error_at(column, "unbalanced `}` without an open repeat", "}"));
        };
        cur.finish()?;
        if frame.body.is_empty() {
            return Err(cur.error_at(column, "empty repeat block", "}"));
        }
        self.emit(Stmt::new(StmtKind::Repeat { count: frame.count, body: frame.body }, frame.line));
        Ok(())
    }
}

fn check_label(cur: &Cursor, w: &str, col: usize) -> PResult<()> {
    if let Some(bad) = w.chars().find(|c| !is_label_char(*c)) {
        return Err(cur.error_at(col, format!("invalid character `{bad}` in label `{w}`"), w));
    }
    Ok(())
}

/// Parses a circuit description.
pub fn parse(source: &str) -> Result<CircuitAst, ParseError> {
    let lines: Vec<&str> = source.lines().collect();
    let mut p = Parser::default();
    for (i, raw) in lines.iter().enumerate() {
        let text = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor::new(text, i + 1);
        if cur.at_end() {
            continue;
        }
        p.statement(&mut cur)?;
    }
    let (last_line, end_col) = match lines.last() {
        Some(l) => (lines.len(), l.chars().count() + 1),
        None => (1, 1),
    };
    let at_end = |message: &str| ParseError { line: last_line, column: end_col, message: message.into(), token: String::new() };
    if let Some(frame) = p.stack.last() {
        return Err(ParseError {
            line: frame.line,
            column: frame.column,
            message: "unbalanced repeat: missing `}`".into(),
            token: "repeat".into(),
        });
    }
    if p.top.is_empty() {
        return Err(ParseError { line: 1, column: 1, message: "no declarations".into(), token: String::new() });
    }
    if p.paths.is_none() {
        return Err(at_end("missing `paths` declaration"));
    }
    if p.sinks.is_none() {
        return Err(at_end("missing `sinks` declaration"));
    }
    if p.levels.is_none() {
        return Err(at_end("missing `atom-levels` declaration"));
    }
    if !p.has_input {
        return Err(at_end("missing `input` statement"));
    }
    if !p.has_classify {
        return Err(at_end("missing `classify` statement"));
    }
    Ok(CircuitAst { statements: p.top })
}
