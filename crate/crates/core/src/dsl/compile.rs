use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;

use super::ast::{CircuitAst, InputPol, RotOp, Stmt, StmtKind};
use super::expr::Expr;
use super::printer::statement_text;
use crate::circuit::{Circuit, Classifier};
use crate::elements::{AtomInteraction, Element, LINEAR_X, LINEAR_Y, MINUS, PLUS};
use crate::state::{make_layout, BranchLabel};
use num_complex::Complex64;

/// Upper bound on the unrolled element count.
pub const MAX_ELEMENTS: usize = 5_000_000;

/// Rejected compilation. `line` is 0 when the error concerns the whole
/// description (for instance an unknown binding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileError {
    pub line: usize,
    pub statement: String,
    pub message: String,
}

impl CompileError {
    fn at(stmt: &Stmt, message: impl Into<String>) -> Self {
        Self { line: stmt.line, statement: statement_text(stmt), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: 0, statement: String::new(), message: message.into() }
    }
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {} in `{}`", self.line, self.message, self.statement)
        }
    }
}

impl std::error::Error for CompileError {}

type CResult<T> = Result<T, CompileError>;

struct Unroller<'a> {
    env: &'a HashMap<String, f64>,
    sink_stems: (&'a str, &'a str),
    elements: Vec<Element>,
    sinks: Vec<String>,
}

impl Unroller<'_> {
    fn value(&self, stmt: &Stmt, e: &Expr) -> CResult<f64> {
        let v = e.eval(self.env).map_err(|m| CompileError::at(stmt, m))?;
        if !v.is_finite() {
            return Err(CompileError::at(stmt, format!("expression `{e}` evaluates to {v}")));
        }
        Ok(v)
    }

    fn push(&mut self, stmt: &Stmt, el: crate::Result<Element>) -> CResult<()> {
        if self.elements.len() >= MAX_ELEMENTS {
            return Err(CompileError::at(stmt, format!("circuit exceeds {MAX_ELEMENTS} elements")));
        }
        self.elements.push(el.map_err(|e| CompileError::at(stmt, e.to_string()))?);
        Ok(())
    }

    fn block(&mut self, body: &[Stmt]) -> CResult<()> {
        for stmt in body {
            match &stmt.kind {
                StmtKind::BeamSplitter { a, b, t, r } => {
                    let (t, r) = (self.value(stmt, t)?, self.value(stmt, r)?);
                    self.push(stmt, Element::beam_splitter(a, b, t, r))?;
                }
                StmtKind::Couple { cavity, out, t, r } => {
                    let (t, r) = (self.value(stmt, t)?, self.value(stmt, r)?);
                    self.push(stmt, Element::coupler(cavity, out, t, r))?;
                }
                StmtKind::Mirror { path } => self.push(stmt, Ok(Element::mirror(path)))?,
                StmtKind::Phase { path, phi } => {
                    let phi = self.value(stmt, phi)?;
                    self.push(stmt, Ok(Element::phase(path, phi)))?;
                }
                StmtKind::Rot { path, op: RotOp::Flip } => self.push(stmt, Ok(Element::flip(path)))?,
                StmtKind::Rot { path, op: RotOp::Matrix(m) } => {
                    let mut v = [0.0; 4];
                    for (slot, e) in v.iter_mut().zip(m) {
                        *slot = self.value(stmt, e)?;
                    }
                    let u = Matrix2::new(v[0], v[1], v[2], v[3]).map(|x| Complex64::new(x, 0.0));
                    self.push(stmt, Element::rotator(path, u))?;
                }
                StmtKind::Atom { path, transparent } => {
                    let k = self.sinks.len() / 2 + 1;
                    let plus = format!("{}#{k}", self.sink_stems.0);
                    let minus = format!("{}#{k}", self.sink_stems.1);
                    let cfg = AtomInteraction::new(path, &plus, &minus).with_transparent(transparent.iter());
                    self.sinks.extend([plus, minus]);
                    self.push(stmt, Ok(Element::atom(cfg)))?;
                }
                StmtKind::Relabel(mapping) => {
                    self.push(stmt, Ok(Element::relabel(mapping.iter().map(|(a, b)| (a.as_str(), b.as_str())))))?
                }
                StmtKind::Repeat { count, body } => {
                    let n = self.value(stmt, count)?;
                    if n < 1.0 || (n - n.round()).abs() > 1e-9 {
                        return Err(CompileError::at(stmt, format!("repeat count {n} is not a positive integer")));
                    }
                    for _ in 0..n.round() as usize {
                        self.block(body)?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Binds parameters, unrolls repeat blocks and validates every element.
/// Each atom occurrence gets its own sink pair `<plus>#k`, `<minus>#k`.
pub fn compile(ast: &CircuitAst, bindings: &HashMap<String, f64>) -> Result<Circuit, CompileError> {
    let params: Vec<&str> = ast.params().iter().map(|(n, _)| *n).collect();
    let mut unknown: Vec<&String> = bindings.keys().filter(|k| !params.contains(&k.as_str())).collect();
    unknown.sort();
    if let Some(name) = unknown.first() {
        return Err(CompileError::global(format!("unknown parameter `{name}`")));
    }

    let mut env = HashMap::new();
    for stmt in &ast.statements {
        let (name, value) = match &stmt.kind {
            StmtKind::Param { name, default } => match (bindings.get(name), default) {
                (Some(v), _) => (name, *v),
                (None, Some(e)) => (name, e.eval(&env).map_err(|m| CompileError::at(stmt, m))?),
                (None, None) => return Err(CompileError::at(stmt, format!("missing binding for parameter `{name}`"))),
            },
            StmtKind::Let { name, value } => (name, value.eval(&env).map_err(|m| CompileError::at(stmt, m))?),
            _ => continue,
        };
        if !value.is_finite() {
            return Err(CompileError::at(stmt, format!("`{name}` evaluates to {value}")));
        }
        env.insert(name.clone(), value);
    }

    let stems = ast.sinks();
    if stems.len() != 2 {
        return Err(CompileError::global("`sinks` must name exactly two labels"));
    }
    let mut un = Unroller { env: &env, sink_stems: (&stems[0], &stems[1]), elements: Vec::new(), sinks: Vec::new() };
    un.block(&ast.statements)?;

    let layout = make_layout(ast.paths(), &un.sinks, ast.atom_levels()).map_err(|e| CompileError::global(e.to_string()))?;
    let (input_stmt, path, pol) = ast
        .statements
        .iter()
        .find_map(|s| match &s.kind {
            StmtKind::Input { path, pol } => Some((s, path, *pol)),
            _ => None,
        })
        .ok_or_else(|| CompileError::global("missing `input` statement"))?;
    let pol = match pol {
        InputPol::Plus => PLUS,
        InputPol::Minus => MINUS,
        InputPol::X => LINEAR_X,
        InputPol::Y => LINEAR_Y,
    };
    let input = layout.path_photon(path, pol).map_err(|e| CompileError::at(input_stmt, e.to_string()))?;
    let (pairs, sinks) = ast.classifier().ok_or_else(|| CompileError::global("missing `classify` statement"))?;
    let label = |s: &str| BranchLabel::from_str(s).unwrap_or_else(|never| match never {});
    let classifier = Classifier::new(pairs.iter().map(|(p, l)| (p.as_str(), label(l))), label(sinks));
    Circuit::new(layout, input, un.elements, classifier).map_err(|e| CompileError::global(e.to_string()))
}
