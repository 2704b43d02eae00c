use std::fmt::Write;

use super::ast::{CircuitAst, RotOp, Stmt, StmtKind};

/// Canonical text of a parsed circuit: one statement per line, two-space
/// indentation inside repeat blocks, no comments.
pub fn print(ast: &CircuitAst) -> String {
    let mut out = String::new();
    for s in &ast.statements {
        write_stmt(&mut out, s, 0);
    }
    out
}

/// Single-line rendering of a statement; repeat blocks show their header only.
pub fn statement_text(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::Repeat { count, .. } => format!("repeat {count} {{"),
        kind => header(kind),
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let indent = "  ".repeat(depth);
    match &stmt.kind {
        StmtKind::Repeat { count, body } => {
            let _ = writeln!(out, "{indent}repeat {count} {{");
            for s in body {
                write_stmt(out, s, depth + 1);
            }
            let _ = writeln!(out, "{indent}}}");
        }
        kind => {
            let _ = writeln!(out, "{indent}{}", header(kind));
        }
    }
}

fn header(kind: &StmtKind) -> String {
    match kind {
        StmtKind::Paths(l) => format!("paths {}", l.join(" ")),
        StmtKind::Sinks(l) => format!("sinks {}", l.join(" ")),
        StmtKind::AtomLevels(l) => format!("atom-levels {}", l.join(" ")),
        StmtKind::Param { name, default: None } => format!("param {name}"),
        StmtKind::Param { name, default: Some(e) } => format!("param {name} = {e}"),
        StmtKind::Let { name, value } => format!("let {name} = {value}"),
        StmtKind::Input { path, pol } => format!("input {path} {}", pol.word()),
        StmtKind::BeamSplitter { a, b, t, r } => format!("bs {a} {b} t={t} r={r}"),
        StmtKind::Mirror { path } => format!("mirror {path}"),
        StmtKind::Rot { path, op: RotOp::Flip } => format!("rot {path} flip"),
        StmtKind::Rot { path, op: RotOp::Matrix([a, b, c, d]) } => format!("rot {path} matrix({a}, {b}, {c}, {d})"),
        StmtKind::Phase { path, phi } => format!("phase {path} {phi}"),
        StmtKind::Atom { path, transparent } if transparent.is_empty() => format!("atom {path}"),
        StmtKind::Atom { path, transparent } => format!("atom {path} transparent: {}", transparent.join(" ")),
        StmtKind::Couple { cavity, out, t, r } => format!("couple {cavity} {out} t={t} r={r}"),
        StmtKind::Relabel(m) => {
            let pairs: Vec<String> = m.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            format!("relabel {}", pairs.join(" "))
        }
        StmtKind::Classify { paths, sinks } => {
            let mut s = String::from("classify");
            for (p, l) in paths {
                let _ = write!(s, " {p}={l}");
            }
            let _ = write!(s, " sinks={sinks}");
            s
        }
        StmtKind::Repeat { count, .. } => format!("repeat {count} {{"),
    }
}
