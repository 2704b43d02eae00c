//! Optical and atomic elements acting on a [`JointState`].
//!
//! Phase conventions: every reflection (beam splitter or mirror) contributes a
//! factor `i`; a beam splitter with amplitude transmission `t` sends light
//! entering on one path across to the other path, so
//! `|a⟩ → i r |a⟩ + t |b⟩`. Scattered-photon sink modes are terminal: every
//! element acts as the identity on them.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{NqiError, Result};
use crate::state::{JointState, Polarization};
use crate::tol;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const PLUS: [Complex64; 2] = [Complex64::new(1.0, 0.0), ZERO];
pub const MINUS: [Complex64; 2] = [ZERO, Complex64::new(1.0, 0.0)];
/// `(|−⟩ − |+⟩)/√2`, components ordered `(plus, minus)`.
pub const LINEAR_X: [Complex64; 2] =
    [Complex64::new(-FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)];
/// `(|−⟩ + |+⟩)/√2`.
pub const LINEAR_Y: [Complex64; 2] =
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)];

/// Exchanges `+` and `-` without a phase.
pub fn flip_matrix() -> Matrix2<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    Matrix2::new(ZERO, one, one, ZERO)
}

/// Unitary sending `from[k]` to `to[k]` for two orthonormal pairs.
pub fn basis_change(from: [[Complex64; 2]; 2], to: [[Complex64; 2]; 2]) -> Matrix2<Complex64> {
    let mut u = Matrix2::zeros();
    for k in 0..2 {
        for row in 0..2 {
            for col in 0..2 {
                u[(row, col)] += to[k][row] * from[k][col].conj();
            }
        }
    }
    u
}

/// Atom interaction on one path.
///
/// `+` photons on `path` are absorbed by atom level 0 and `-` photons by level
/// 1; the photon moves into `sink_plus` / `sink_minus` and the atom into the
/// ground level (level 2). Levels named in `transparent` never interact.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomInteraction {
    pub path: String,
    pub transparent: BTreeSet<String>,
    pub sink_plus: String,
    pub sink_minus: String,
}

impl AtomInteraction {
    pub fn new(path: impl Into<String>, sink_plus: impl Into<String>, sink_minus: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            transparent: BTreeSet::new(),
            sink_plus: sink_plus.into(),
            sink_minus: sink_minus.into(),
        }
    }

    pub fn with_transparent<I, S>(mut self, levels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.transparent.extend(levels.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    BeamSplitter { path_a: String, path_b: String, t: f64, r: f64 },
    Mirror { path: String },
    PolRotator { path: String, u: Matrix2<Complex64> },
    PhaseShift { path: String, phi: f64 },
    AtomInteraction(AtomInteraction),
    /// Partially transmitting cavity mirror. Each application leaks `t` times
    /// the cavity amplitude into `out`, which accumulates coherently, and
    /// keeps `i r` times it inside. Not an isometry step by step; the summed
    /// output is norm-preserving once the cavity has drained.
    Coupler { cavity: String, out: String, t: f64, r: f64 },
    /// Path permutation: amplitude on each `from` path moves to `to`.
    Relabel { mapping: Vec<(String, String)> },
}

/// How atom elements behave during one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomContext {
    pub absent: bool,
    /// Added to every atom element's own transparency mask.
    pub transparent: BTreeSet<String>,
}

fn check_splitter(t: f64, r: f64) -> Result<()> {
    if t < -tol::NORM || r < -tol::NORM || (t * t + r * r - 1.0).abs() > tol::NORM {
        return Err(NqiError::InvalidSplitter { t, r });
    }
    Ok(())
}

pub fn unitarity_defect(u: &Matrix2<Complex64>) -> f64 {
    (u.adjoint() * u - Matrix2::identity()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl Element {
    pub fn beam_splitter(path_a: impl Into<String>, path_b: impl Into<String>, t: f64, r: f64) -> Result<Self> {
        check_splitter(t, r)?;
        let (path_a, path_b) = (path_a.into(), path_b.into());
        if path_a == path_b {
            return Err(NqiError::SamePath(path_a));
        }
        Ok(Element::BeamSplitter { path_a, path_b, t, r })
    }

    pub fn mirror(path: impl Into<String>) -> Self {
        Element::Mirror { path: path.into() }
    }

    pub fn rotator(path: impl Into<String>, u: Matrix2<Complex64>) -> Result<Self> {
        let defect = unitarity_defect(&u);
        if defect > tol::NORM {
            return Err(NqiError::NonUnitaryRotator { defect });
        }
        Ok(Element::PolRotator { path: path.into(), u })
    }

    pub fn flip(path: impl Into<String>) -> Self {
        Element::PolRotator { path: path.into(), u: flip_matrix() }
    }

    pub fn phase(path: impl Into<String>, phi: f64) -> Self {
        Element::PhaseShift { path: path.into(), phi }
    }

    pub fn atom(cfg: AtomInteraction) -> Self {
        Element::AtomInteraction(cfg)
    }

    pub fn coupler(cavity: impl Into<String>, out: impl Into<String>, t: f64, r: f64) -> Result<Self> {
        check_splitter(t, r)?;
        let (cavity, out) = (cavity.into(), out.into());
        if cavity == out {
            return Err(NqiError::SamePath(cavity));
        }
        Ok(Element::Coupler { cavity, out, t, r })
    }

    pub fn relabel<S: Into<String>>(mapping: impl IntoIterator<Item = (S, S)>) -> Self {
        Element::Relabel { mapping: mapping.into_iter().map(|(a, b)| (a.into(), b.into())).collect() }
    }

    /// Whether the element preserves the squared norm of every state.
    pub fn is_isometric(&self) -> bool {
        !matches!(self, Element::Coupler { .. })
    }

    pub fn apply(&self, state: JointState) -> Result<JointState> {
        self.apply_in(state, &AtomContext::default())
    }

    pub fn apply_in(&self, state: JointState, ctx: &AtomContext) -> Result<JointState> {
        match self {
            Element::BeamSplitter { path_a, path_b, t, r } => apply_beam_splitter(state, path_a, path_b, *t, *r),
            Element::Mirror { path } => apply_mirror(state, path),
            Element::PolRotator { path, u } => apply_pol_rotator(state, path, u),
            Element::PhaseShift { path, phi } => apply_phase(state, path, *phi),
            Element::AtomInteraction(cfg) => {
                if ctx.absent {
                    Ok(state)
                } else if ctx.transparent.is_empty() {
                    apply_atom(state, cfg)
                } else {
                    let mut cfg = cfg.clone();
                    cfg.transparent.extend(ctx.transparent.iter().cloned());
                    apply_atom(state, &cfg)
                }
            }
            Element::Coupler { cavity, out, t, r } => apply_coupler(state, cavity, out, *t, *r),
            Element::Relabel { mapping } => apply_relabel(state, mapping),
        }
    }
}

/// Applies a sequence of elements in order.
pub fn apply_all(elements: &[Element], mut state: JointState, ctx: &AtomContext) -> Result<JointState> {
    for e in elements {
        state = e.apply_in(state, ctx)?;
    }
    Ok(state)
}

/// Start index of the `(path, pol)` block of atom amplitudes.
fn block(state: &JointState, path: usize, pol: Polarization) -> usize {
    state.layout().index(crate::PhotonMode::Path { path, pol }, 0)
}

pub fn apply_beam_splitter(mut state: JointState, path_a: &str, path_b: &str, t: f64, r: f64) -> Result<JointState> {
    check_splitter(t, r)?;
    if path_a == path_b {
        return Err(NqiError::SamePath(path_a.to_string()));
    }
    let layout = state.layout().clone();
    let (a, b) = (layout.path(path_a)?, layout.path(path_b)?);
    let nl = layout.n_levels();
    let (tc, ir) = (Complex64::new(t, 0.0), I * r);
    let (ia, ib) = (block(&state, a, Polarization::Plus), block(&state, b, Polarization::Plus));
    let amps = state.amplitudes_mut();
    // both polarizations are contiguous within a path block
    for k in 0..2 * nl {
        let (x, y) = (amps[ia + k], amps[ib + k]);
        amps[ia + k] = ir * x + tc * y;
        amps[ib + k] = tc * x + ir * y;
    }
    Ok(state)
}

fn scale_path(mut state: JointState, path: &str, c: Complex64) -> Result<JointState> {
    let p = state.layout().path(path)?;
    let nl = state.layout().n_levels();
    let start = block(&state, p, Polarization::Plus);
    state.amplitudes_mut()[start..start + 2 * nl].iter_mut().for_each(|a| *a *= c);
    Ok(state)
}

pub fn apply_mirror(state: JointState, path: &str) -> Result<JointState> {
    scale_path(state, path, I)
}

pub fn apply_phase(state: JointState, path: &str, phi: f64) -> Result<JointState> {
    scale_path(state, path, Complex64::from_polar(1.0, phi))
}

pub fn apply_pol_rotator(mut state: JointState, path: &str, u: &Matrix2<Complex64>) -> Result<JointState> {
    let defect = unitarity_defect(u);
    if defect > tol::NORM {
        return Err(NqiError::NonUnitaryRotator { defect });
    }
    let p = state.layout().path(path)?;
    let nl = state.layout().n_levels();
    let (ip, im) = (block(&state, p, Polarization::Plus), block(&state, p, Polarization::Minus));
    let amps = state.amplitudes_mut();
    for k in 0..nl {
        let (x, y) = (amps[ip + k], amps[im + k]);
        amps[ip + k] = u[(0, 0)] * x + u[(0, 1)] * y;
        amps[im + k] = u[(1, 0)] * x + u[(1, 1)] * y;
    }
    Ok(state)
}

pub fn apply_atom(mut state: JointState, cfg: &AtomInteraction) -> Result<JointState> {
    let layout = state.layout().clone();
    let ground = layout.ground_level().ok_or(NqiError::MissingAtomLevels(layout.n_levels()))?;
    let p = layout.path(&cfg.path)?;
    let sinks = [layout.sink(&cfg.sink_plus)?, layout.sink(&cfg.sink_minus)?];
    let mut transparent = [false; 2];
    for label in &cfg.transparent {
        let lvl = layout.level(label)?;
        if lvl < 2 {
            transparent[lvl] = true;
        }
    }
    let amps = state.amplitudes_mut();
    // level 0 couples to `+`, level 1 to `-`
    for pol in Polarization::BOTH {
        let lvl = pol.index();
        if transparent[lvl] {
            continue;
        }
        let from = layout.index(crate::PhotonMode::Path { path: p, pol }, lvl);
        let to = layout.index(crate::PhotonMode::Sink(sinks[lvl]), ground);
        let moved = std::mem::replace(&mut amps[from], ZERO);
        if moved == ZERO {
            continue;
        }
        if amps[to] != ZERO {
            return Err(NqiError::SinkCollision(layout.sinks()[sinks[lvl]].clone()));
        }
        amps[to] = moved;
    }
    Ok(state)
}

pub fn apply_coupler(mut state: JointState, cavity: &str, out: &str, t: f64, r: f64) -> Result<JointState> {
    check_splitter(t, r)?;
    if cavity == out {
        return Err(NqiError::SamePath(cavity.to_string()));
    }
    let layout = state.layout().clone();
    let (c, o) = (layout.path(cavity)?, layout.path(out)?);
    let n = 2 * layout.n_levels();
    let (ic, io) = (block(&state, c, Polarization::Plus), block(&state, o, Polarization::Plus));
    let amps = state.amplitudes_mut();
    for k in 0..n {
        let x = amps[ic + k];
        amps[io + k] += x * t;
        amps[ic + k] = x * (I * r);
    }
    Ok(state)
}

pub fn apply_relabel(mut state: JointState, mapping: &[(String, String)]) -> Result<JointState> {
    let layout = state.layout().clone();
    let mut from = Vec::with_capacity(mapping.len());
    let mut to = Vec::with_capacity(mapping.len());
    for (a, b) in mapping {
        from.push(layout.path(a)?);
        to.push(layout.path(b)?);
    }
    let mut fs = from.clone();
    let mut ts = to.clone();
    fs.sort_unstable();
    ts.sort_unstable();
    if fs.windows(2).any(|w| w[0] == w[1]) || fs != ts {
        let desc: Vec<String> = mapping.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        return Err(NqiError::InvalidRelabel(desc.join(" ")));
    }
    let n = 2 * layout.n_levels();
    let old = state.amplitudes().to_vec();
    let amps = state.amplitudes_mut();
    for (&f, &t) in from.iter().zip(&to) {
        amps[t * n..(t + 1) * n].copy_from_slice(&old[f * n..(f + 1) * n]);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_layout, superpose, ModeRef};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn layout() -> Arc<crate::BasisLayout> {
        make_layout(&["l", "u"], &["S+", "S-"], &["m+", "m-", "g"]).unwrap()
    }

    fn basis(mode: ModeRef<'_>, lvl: &str) -> JointState {
        JointState::basis(layout(), mode, lvl).unwrap()
    }

    fn close(a: &JointState, b: &JointState, tol: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < tol)
    }

    const LP: ModeRef<'static> = ModeRef::Path("l", Polarization::Plus);
    const UP: ModeRef<'static> = ModeRef::Path("u", Polarization::Plus);

    #[test]
    fn beam_splitter_transmits_across() {
        let (t, r) = ((PI / 4.0).sin(), (PI / 4.0).cos());
        let out = apply_beam_splitter(basis(LP, "m+"), "l", "u", t, r).unwrap();
        assert!((out.amplitude_at(UP, "m+").unwrap() - c(t, 0.0)).norm() < 1e-15);
        assert!((out.amplitude_at(LP, "m+").unwrap() - c(0.0, r)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_limits() {
        // full transmission only swaps paths
        let out = apply_beam_splitter(basis(LP, "m-"), "l", "u", 1.0, 0.0).unwrap();
        assert_eq!(out, basis(UP, "m-"));
        let twice = apply_beam_splitter(apply_beam_splitter(basis(LP, "m-"), "l", "u", 0.0, 1.0).unwrap(), "l", "u", 0.0, 1.0).unwrap();
        assert!(close(&twice, &basis(LP, "m-").scaled(c(-1.0, 0.0)), 1e-15));
        assert!(apply_beam_splitter(basis(LP, "m+"), "l", "z", 1.0, 0.0).is_err());
        assert!(Element::beam_splitter("l", "u", 0.6, 0.7).is_err());
        assert!(Element::beam_splitter("l", "l", 0.6, 0.8).is_err());
    }

    #[test]
    fn mirrors_and_phases() {
        let m = apply_mirror(basis(LP, "m+"), "l").unwrap();
        assert_eq!(m.amplitude_at(LP, "m+").unwrap(), c(0.0, 1.0));
        let mm = apply_mirror(m, "l").unwrap();
        assert_eq!(mm.amplitude_at(LP, "m+").unwrap(), c(-1.0, 0.0));
        // nothing on u
        assert_eq!(apply_mirror(basis(LP, "m+"), "u").unwrap(), basis(LP, "m+"));

        assert_eq!(apply_phase(basis(LP, "g"), "l", 0.0).unwrap(), basis(LP, "g"));
        assert!(close(&apply_phase(basis(LP, "g"), "l", 4.0 * PI).unwrap(), &basis(LP, "g"), 1e-12));
        assert!(close(&apply_phase(basis(LP, "g"), "l", PI).unwrap(), &basis(LP, "g").scaled(c(-1.0, 0.0)), 1e-15));
    }

    #[test]
    fn rotator_flip() {
        let f = apply_pol_rotator(basis(UP, "m+"), "u", &flip_matrix()).unwrap();
        assert_eq!(f, basis(ModeRef::Path("u", Polarization::Minus), "m+"));
        assert_eq!(apply_pol_rotator(f, "u", &flip_matrix()).unwrap(), basis(UP, "m+"));
        assert_eq!(apply_pol_rotator(basis(UP, "m+"), "u", &Matrix2::identity()).unwrap(), basis(UP, "m+"));
        let bad = Matrix2::new(c(1.0, 0.0), c(1.0, 0.0), ZERO, c(1.0, 0.0));
        assert!(matches!(apply_pol_rotator(basis(UP, "m+"), "u", &bad), Err(NqiError::NonUnitaryRotator { .. })));
        assert!(Element::rotator("u", bad).is_err());
    }

    #[test]
    fn basis_change_maps_pairs() {
        let u = basis_change([LINEAR_X, LINEAR_Y], [PLUS, MINUS]);
        assert!(unitarity_defect(&u) < 1e-15);
        let x = nalgebra::Vector2::new(LINEAR_X[0], LINEAR_X[1]);
        let out = u * x;
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-15 && out[1].norm() < 1e-15);
    }

    #[test]
    fn atom_absorbs_matching_pairs() {
        let (al, be) = (c(0.6, 0.0), c(0.0, 0.8));
        let input = superpose(&[(al, &basis(UP, "m+")), (be, &basis(UP, "m-"))]).unwrap();
        let out = apply_atom(input, &AtomInteraction::new("u", "S+", "S-")).unwrap();
        let expected = superpose(&[(al, &basis(ModeRef::Sink("S+"), "g")), (be, &basis(UP, "m-"))]).unwrap();
        assert_eq!(out, expected);

        let other = superpose(&[(al, &basis(LP, "m+")), (be, &basis(LP, "m-"))]).unwrap();
        assert_eq!(apply_atom(other.clone(), &AtomInteraction::new("u", "S+", "S-")).unwrap(), other);
    }

    #[test]
    fn atom_transparency_and_errors() {
        let cfg = AtomInteraction::new("u", "S+", "S-").with_transparent(["m+"]);
        assert_eq!(apply_atom(basis(UP, "m+"), &cfg).unwrap(), basis(UP, "m+"));
        let bad = AtomInteraction::new("u", "S+", "S-").with_transparent(["q"]);
        assert!(apply_atom(basis(UP, "m+"), &bad).is_err());
        let nosink = AtomInteraction::new("u", "T+", "S-");
        assert!(matches!(apply_atom(basis(UP, "m+"), &nosink), Err(NqiError::UnknownLabel { kind: "sink", .. })));
        let small = make_layout(&["u"], &["S+", "S-"], &["m+", "m-"]).unwrap();
        let s = JointState::basis(small, UP, "m+").unwrap();
        assert_eq!(apply_atom(s, &AtomInteraction::new("u", "S+", "S-")).unwrap_err(), NqiError::MissingAtomLevels(2));
    }

    #[test]
    fn atom_refuses_to_merge_into_occupied_sink() {
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = superpose(&[(h, &basis(UP, "m+")), (h, &basis(ModeRef::Sink("S+"), "g"))]).unwrap();
        assert_eq!(apply_atom(s, &AtomInteraction::new("u", "S+", "S-")).unwrap_err(), NqiError::SinkCollision("S+".into()));
    }

    #[test]
    fn context_can_remove_or_mask_the_atom() {
        let e = Element::atom(AtomInteraction::new("u", "S+", "S-"));
        let absent = AtomContext { absent: true, ..Default::default() };
        assert_eq!(e.apply_in(basis(UP, "m+"), &absent).unwrap(), basis(UP, "m+"));
        let masked = AtomContext { absent: false, transparent: ["m+".to_string()].into() };
        assert_eq!(e.apply_in(basis(UP, "m+"), &masked).unwrap(), basis(UP, "m+"));
        assert_eq!(e.apply(basis(UP, "m+")).unwrap(), basis(ModeRef::Sink("S+"), "g"));
    }

    #[test]
    fn coupler_leaks_and_keeps() {
        let (t, r) = (0.6, 0.8);
        let out = apply_coupler(basis(UP, "m+"), "u", "l", t, r).unwrap();
        assert_eq!(out.amplitude_at(LP, "m+").unwrap(), c(t, 0.0));
        assert_eq!(out.amplitude_at(UP, "m+").unwrap(), c(0.0, r));
    }

    #[test]
    fn relabel_permutes_paths() {
        let e = Element::relabel([("l", "u"), ("u", "l")]);
        assert_eq!(e.apply(basis(LP, "m-")).unwrap(), basis(UP, "m-"));
        assert!(Element::relabel([("l", "u")]).apply(basis(LP, "m-")).is_err());
        assert!(Element::relabel([("l", "l")]).apply(basis(LP, "m-")).is_ok());
    }
}
