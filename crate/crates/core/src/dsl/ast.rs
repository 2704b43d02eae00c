use super::expr::Expr;

/// Polarization of the single input photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputPol {
    Plus,
    Minus,
    X,
    Y,
}

impl InputPol {
    pub fn from_word(w: &str) -> Option<Self> {
        match w {
            "+" => Some(InputPol::Plus),
            "-" => Some(InputPol::Minus),
            "x" => Some(InputPol::X),
            "y" => Some(InputPol::Y),
            _ => None,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            InputPol::Plus => "+",
            InputPol::Minus => "-",
            InputPol::X => "x",
            InputPol::Y => "y",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RotOp {
    Flip,
    /// Real row-major entries in the `(+, -)` basis.
    Matrix([Expr; 4]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Paths(Vec<String>),
    Sinks(Vec<String>),
    AtomLevels(Vec<String>),
    Param { name: String, default: Option<Expr> },
    Let { name: String, value: Expr },
    Input { path: String, pol: InputPol },
    BeamSplitter { a: String, b: String, t: Expr, r: Expr },
    Mirror { path: String },
    Rot { path: String, op: RotOp },
    Phase { path: String, phi: Expr },
    Atom { path: String, transparent: Vec<String> },
    Couple { cavity: String, out: String, t: Expr, r: Expr },
    Relabel(Vec<(String, String)>),
    Repeat { count: Expr, body: Vec<Stmt> },
    Classify { paths: Vec<(String, String)>, sinks: String },
}

/// A statement and the source line it started on. Equality ignores the line.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

impl Stmt {
    pub fn new(kind: StmtKind, line: usize) -> Self {
        Self { kind, line }
    }
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Parsed circuit description: the top-level statements in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitAst {
    pub statements: Vec<Stmt>,
}

impl CircuitAst {
    fn find<'a, T>(&'a self, f: impl Fn(&'a StmtKind) -> Option<T>) -> Option<T> {
        self.statements.iter().find_map(|s| f(&s.kind))
    }

    pub fn paths(&self) -> &[String] {
        self.find(|k| match k {
            StmtKind::Paths(p) => Some(p.as_slice()),
            _ => None,
        })
        .unwrap_or(&[])
    }

    pub fn sinks(&self) -> &[String] {
        self.find(|k| match k {
            StmtKind::Sinks(p) => Some(p.as_slice()),
            _ => None,
        })
        .unwrap_or(&[])
    }

    pub fn atom_levels(&self) -> &[String] {
        self.find(|k| match k {
            StmtKind::AtomLevels(p) => Some(p.as_slice()),
            _ => None,
        })
        .unwrap_or(&[])
    }

    /// Declared parameters with their defaults.
    pub fn params(&self) -> Vec<(&str, Option<&Expr>)> {
        self.statements
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Param { name, default } => Some((name.as_str(), default.as_ref())),
                _ => None,
            })
            .collect()
    }

    /// Top-level repeat blocks.
    pub fn repeat_blocks(&self) -> Vec<&Stmt> {
        self.statements.iter().filter(|s| matches!(s.kind, StmtKind::Repeat { .. })).collect()
    }

    /// The classifier as `(path, label)` pairs and the sink label.
    pub fn classifier(&self) -> Option<(&[(String, String)], &str)> {
        self.find(|k| match k {
            StmtKind::Classify { paths, sinks } => Some((paths.as_slice(), sinks.as_str())),
            _ => None,
        })
    }
}
