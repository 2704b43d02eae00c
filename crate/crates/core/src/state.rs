//! Joint photon-atom Hilbert space: basis enumeration, amplitude vectors,
//! branching and conditioning.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{NqiError, Result};
use crate::tol;

/// Circular polarization of the probe photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    Plus,
    Minus,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Plus, Polarization::Minus];

    pub fn index(self) -> usize {
        match self {
            Polarization::Plus => 0,
            Polarization::Minus => 1,
        }
    }

    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::Plus => Polarization::Minus,
            Polarization::Minus => Polarization::Plus,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::Plus => "+",
            Polarization::Minus => "-",
        })
    }
}

/// A photon mode resolved to layout indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhotonMode {
    Path { path: usize, pol: Polarization },
    Sink(usize),
}

/// A photon mode named by its labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRef<'a> {
    Path(&'a str, Polarization),
    Sink(&'a str),
}

/// Enumeration of the joint basis `((paths x polarizations) ∪ sinks) x atom levels`.
///
/// Photon modes are ordered path-major (`(p0,+), (p0,-), (p1,+), ...`) followed
/// by the sinks; the dense index of `(mode, level)` is `mode * levels + level`.
///
/// The first three atom levels carry fixed roles for [`crate::Element::AtomInteraction`]:
/// level 0 absorbs `+` photons, level 1 absorbs `-` photons, level 2 is the
/// ground level reached after absorption. Further levels never couple.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLayout {
    paths: Vec<String>,
    sinks: Vec<String>,
    levels: Vec<String>,
    path_index: HashMap<String, usize>,
    sink_index: HashMap<String, usize>,
    level_index: HashMap<String, usize>,
}

fn index_labels<S: AsRef<str>>(
    kind: &'static str,
    labels: &[S],
) -> Result<(Vec<String>, HashMap<String, usize>)> {
    let mut list = Vec::with_capacity(labels.len());
    let mut map = HashMap::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        let label = label.as_ref().to_string();
        if map.insert(label.clone(), i).is_some() {
            return Err(NqiError::DuplicateLabel { kind, label });
        }
        list.push(label);
    }
    Ok((list, map))
}

/// Builds a layout. Paths and atom levels must be nonempty; sinks may be empty.
pub fn make_layout<S: AsRef<str>>(
    paths: &[S],
    sinks: &[S],
    atom_levels: &[S],
) -> Result<Arc<BasisLayout>> {
    BasisLayout::new(paths, sinks, atom_levels).map(Arc::new)
}

impl BasisLayout {
    pub fn new<S: AsRef<str>>(paths: &[S], sinks: &[S], atom_levels: &[S]) -> Result<Self> {
        if paths.is_empty() {
            return Err(NqiError::EmptyList { kind: "path" });
        }
        if atom_levels.is_empty() {
            return Err(NqiError::EmptyList { kind: "atom level" });
        }
        let (paths, path_index) = index_labels("path", paths)?;
        let (sinks, sink_index) = index_labels("sink", sinks)?;
        let (levels, level_index) = index_labels("atom level", atom_levels)?;
        // a sink label shadowing a path label would make mode names ambiguous
        if let Some(s) = sinks.iter().find(|s| path_index.contains_key(*s)) {
            return Err(NqiError::DuplicateLabel { kind: "photon mode", label: s.clone() });
        }
        Ok(Self { paths, sinks, levels, path_index, sink_index, level_index })
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    pub fn sinks(&self) -> &[String] {
        &self.sinks
    }

    pub fn atom_levels(&self) -> &[String] {
        &self.levels
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_modes(&self) -> usize {
        2 * self.paths.len() + self.sinks.len()
    }

    pub fn dim(&self) -> usize {
        self.n_modes() * self.n_levels()
    }

    pub fn path(&self, label: &str) -> Result<usize> {
        self.path_index
            .get(label)
            .copied()
            .ok_or_else(|| NqiError::UnknownLabel { kind: "path", label: label.to_string() })
    }

    pub fn sink(&self, label: &str) -> Result<usize> {
        self.sink_index
            .get(label)
            .copied()
            .ok_or_else(|| NqiError::UnknownLabel { kind: "sink", label: label.to_string() })
    }

    pub fn level(&self, label: &str) -> Result<usize> {
        self.level_index
            .get(label)
            .copied()
            .ok_or_else(|| NqiError::UnknownLabel { kind: "atom level", label: label.to_string() })
    }

    pub fn resolve(&self, mode: ModeRef<'_>) -> Result<PhotonMode> {
        match mode {
            ModeRef::Path(p, pol) => Ok(PhotonMode::Path { path: self.path(p)?, pol }),
            ModeRef::Sink(s) => Ok(PhotonMode::Sink(self.sink(s)?)),
        }
    }

    pub fn mode_index(&self, mode: PhotonMode) -> usize {
        match mode {
            PhotonMode::Path { path, pol } => 2 * path + pol.index(),
            PhotonMode::Sink(s) => 2 * self.paths.len() + s,
        }
    }

    pub fn mode_at(&self, mode_index: usize) -> PhotonMode {
        let np = 2 * self.paths.len();
        if mode_index < np {
            let pol = if mode_index % 2 == 0 { Polarization::Plus } else { Polarization::Minus };
            PhotonMode::Path { path: mode_index / 2, pol }
        } else {
            PhotonMode::Sink(mode_index - np)
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = PhotonMode> + '_ {
        (0..self.n_modes()).map(|m| self.mode_at(m))
    }

    pub fn index(&self, mode: PhotonMode, level: usize) -> usize {
        self.mode_index(mode) * self.levels.len() + level
    }

    pub fn mode_label(&self, mode: PhotonMode) -> String {
        match mode {
            PhotonMode::Path { path, pol } => format!("{}{}", self.paths[path], pol),
            PhotonMode::Sink(s) => self.sinks[s].clone(),
        }
    }

    /// Level index of the ground level, when the layout has one.
    pub fn ground_level(&self) -> Option<usize> {
        (self.levels.len() >= 3).then_some(2)
    }

    /// Photon-sector vector (length `n_modes`) with the given components.
    pub fn photon_vector(&self, terms: &[(ModeRef<'_>, Complex64)]) -> Result<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.n_modes()];
        for &(mode, c) in terms {
            v[self.mode_index(self.resolve(mode)?)] += c;
        }
        Ok(v)
    }

    /// Photon on `path` with polarization components `(plus, minus)`.
    pub fn path_photon(&self, path: &str, pol: [Complex64; 2]) -> Result<Vec<Complex64>> {
        self.photon_vector(&[
            (ModeRef::Path(path, Polarization::Plus), pol[0]),
            (ModeRef::Path(path, Polarization::Minus), pol[1]),
        ])
    }
}

/// Complex amplitude vector over a [`BasisLayout`]; may be a sub-normalized branch.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    layout: Arc<BasisLayout>,
    amps: Vec<Complex64>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `⟨a|b⟩`, conjugating the left argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn same_layout(a: &Arc<BasisLayout>, b: &Arc<BasisLayout>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl JointState {
    pub fn zeros(layout: Arc<BasisLayout>) -> Self {
        let dim = layout.dim();
        Self { layout, amps: vec![zero(); dim] }
    }

    pub fn from_amplitudes(layout: Arc<BasisLayout>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(NqiError::DimensionMismatch { expected: layout.dim(), got: amps.len() });
        }
        Ok(Self { layout, amps })
    }

    /// Unit vector `|mode⟩|level⟩`.
    pub fn basis(layout: Arc<BasisLayout>, mode: ModeRef<'_>, level: &str) -> Result<Self> {
        let mode = layout.resolve(mode)?;
        let level = layout.level(level)?;
        let idx = layout.index(mode, level);
        let mut s = Self::zeros(layout);
        s.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Product state `photon ⊗ atom`.
    pub fn product(layout: Arc<BasisLayout>, photon: &[Complex64], atom: &[Complex64]) -> Result<Self> {
        if photon.len() != layout.n_modes() {
            return Err(NqiError::DimensionMismatch { expected: layout.n_modes(), got: photon.len() });
        }
        if atom.len() != layout.n_levels() {
            return Err(NqiError::DimensionMismatch { expected: layout.n_levels(), got: atom.len() });
        }
        let amps = photon.iter().flat_map(|p| atom.iter().map(move |a| p * a)).collect();
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, mode: PhotonMode, level: usize) -> Complex64 {
        self.amps[self.layout.index(mode, level)]
    }

    /// Amplitude addressed by labels.
    pub fn amplitude_at(&self, mode: ModeRef<'_>, level: &str) -> Result<Complex64> {
        let m = self.layout.resolve(mode)?;
        Ok(self.amplitude(m, self.layout.level(level)?))
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        if !same_layout(&self.layout, &other.layout) {
            return Err(NqiError::LayoutMismatch);
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self
    }

    /// Squared norm carried by one photon mode, summed over atom levels.
    pub fn mode_probability(&self, mode: PhotonMode) -> f64 {
        let start = self.layout.index(mode, 0);
        norm_sqr(&self.amps[start..start + self.layout.n_levels()])
    }

    /// Photon-mode by atom-level amplitude matrix.
    pub fn photon_atom_matrix(&self) -> DMatrix<Complex64> {
        let (m, n) = (self.layout.n_modes(), self.layout.n_levels());
        DMatrix::from_row_slice(m, n, &self.amps)
    }

    /// Contracts the photon index against `probe`: returns the unnormalized
    /// atom vector `⟨probe|state⟩` and its squared norm.
    pub fn condition_on_probe(&self, probe: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        let (nm, nl) = (self.layout.n_modes(), self.layout.n_levels());
        if probe.len() != nm {
            return Err(NqiError::DimensionMismatch { expected: nm, got: probe.len() });
        }
        let n = norm_sqr(probe);
        if (n - 1.0).abs() > 1e-9 {
            return Err(NqiError::NotNormalized { norm_sq: n });
        }
        let mut atom = vec![zero(); nl];
        for (m, p) in probe.iter().enumerate() {
            if *p == zero() {
                continue;
            }
            let pc = p.conj();
            for (a, amp) in atom.iter_mut().zip(&self.amps[m * nl..(m + 1) * nl]) {
                *a += pc * amp;
            }
        }
        let prob = norm_sqr(&atom);
        Ok((atom, prob))
    }

    /// Splits the state by photon mode into labelled branches. Branches appear
    /// in order of the first mode carrying their label.
    pub fn partition_branches<F>(&self, classifier: F) -> Vec<Branch>
    where
        F: Fn(PhotonMode) -> BranchLabel,
    {
        let nl = self.layout.n_levels();
        let mut branches: Vec<Branch> = Vec::new();
        for (m, mode) in self.layout.modes().enumerate() {
            let label = classifier(mode);
            let pos = match branches.iter().position(|b| b.label == label) {
                Some(p) => p,
                None => {
                    branches.push(Branch {
                        label,
                        probability: 0.0,
                        state: JointState::zeros(Arc::clone(&self.layout)),
                    });
                    branches.len() - 1
                }
            };
            let b = &mut branches[pos];
            b.state.amps[m * nl..(m + 1) * nl].copy_from_slice(&self.amps[m * nl..(m + 1) * nl]);
        }
        for b in &mut branches {
            b.probability = b.state.norm_sqr();
        }
        branches
    }
}

/// Linear combination of states sharing one layout; no normalization.
pub fn superpose(terms: &[(Complex64, &JointState)]) -> Result<JointState> {
    let (_, first) = terms.first().ok_or(NqiError::EmptyList { kind: "superposition term" })?;
    let mut out = JointState::zeros(Arc::clone(&first.layout));
    for (c, s) in terms {
        if !same_layout(&first.layout, &s.layout) {
            return Err(NqiError::LayoutMismatch);
        }
        for (o, a) in out.amps.iter_mut().zip(&s.amps) {
            *o += c * a;
        }
    }
    Ok(out)
}

/// `|⟨a|b⟩|²` for normalized atom-sector vectors.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(NqiError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    for v in [a, b] {
        let n = norm_sqr(v);
        if (n - 1.0).abs() > 1e-9 {
            return Err(NqiError::NotNormalized { norm_sq: n });
        }
    }
    Ok(inner(a, b).norm_sqr().min(1.0))
}

pub fn normalized(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm_sqr(v).sqrt();
    (n > 0.0).then(|| v.iter().map(|c| c / n).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    Success,
    Failure,
    Absorbed,
    Custom(String),
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchLabel::Success => f.write_str("success"),
            BranchLabel::Failure => f.write_str("failure"),
            BranchLabel::Absorbed => f.write_str("absorbed"),
            BranchLabel::Custom(s) => f.write_str(s),
        }
    }
}

impl FromStr for BranchLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "success" => BranchLabel::Success,
            "failure" => BranchLabel::Failure,
            "absorbed" => BranchLabel::Absorbed,
            other => BranchLabel::Custom(other.to_string()),
        })
    }
}

/// Projection of a state onto the photon modes carrying one label.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: BranchLabel,
    /// Squared norm of the projection.
    pub probability: f64,
    pub state: JointState,
}

impl Branch {
    pub fn is_empty(&self) -> bool {
        self.probability < tol::EMPTY_BRANCH
    }
}
