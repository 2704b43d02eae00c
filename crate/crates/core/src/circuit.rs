//! Element sequences with an input photon and an output classifier, and the
//! branch bookkeeping that turns a final state into a [`ProtocolOutcome`].

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::elements::{apply_all, AtomContext, Element};
use crate::error::{NqiError, Result};
use crate::state::{norm_sqr, BasisLayout, BranchLabel, JointState, PhotonMode, Polarization};
use crate::tol;

/// The interrogated atom: `alpha|m+⟩ + beta|m-⟩`, optionally removed from the
/// apparatus or with levels made transparent.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub present: bool,
    pub transparent: BTreeSet<String>,
}

impl AtomSpec {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > tol::NORM {
            return Err(NqiError::NotNormalized { norm_sq: n });
        }
        Ok(Self { alpha, beta, present: true, transparent: BTreeSet::new() })
    }

    /// Normalizes `(alpha, beta)` before construction.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(NqiError::Degenerate("atom amplitudes are both zero".into()));
        }
        Self::new(alpha / n, beta / n)
    }

    pub fn absent(mut self) -> Self {
        self.present = false;
        self
    }

    pub fn with_transparent<I, S>(mut self, levels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.transparent.extend(levels.into_iter().map(Into::into));
        self
    }

    /// Atom vector over `n_levels` levels: `alpha` on level 0, `beta` on level 1.
    pub fn vector(&self, n_levels: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n_levels];
        v[0] = self.alpha;
        if n_levels > 1 {
            v[1] = self.beta;
        }
        v
    }

    pub fn context(&self) -> AtomContext {
        AtomContext { absent: !self.present, transparent: self.transparent.clone() }
    }
}

/// Assigns a branch label to every photon mode: one label per path, one shared
/// label for all sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    paths: HashMap<String, BranchLabel>,
    sinks: BranchLabel,
}

impl Classifier {
    pub fn new<S: Into<String>>(paths: impl IntoIterator<Item = (S, BranchLabel)>, sinks: BranchLabel) -> Self {
        Self { paths: paths.into_iter().map(|(p, l)| (p.into(), l)).collect(), sinks }
    }

    /// Fails when some path of `layout` has no label, or a label names an unknown path.
    pub fn check(&self, layout: &BasisLayout) -> Result<()> {
        for p in layout.paths() {
            if !self.paths.contains_key(p) {
                return Err(NqiError::InvalidParameter(format!("classifier does not cover path `{p}`")));
            }
        }
        for p in self.paths.keys() {
            layout.path(p)?;
        }
        Ok(())
    }

    pub fn label(&self, layout: &BasisLayout, mode: PhotonMode) -> BranchLabel {
        match mode {
            PhotonMode::Sink(_) => self.sinks.clone(),
            PhotonMode::Path { path, .. } => {
                self.paths.get(&layout.paths()[path]).cloned().unwrap_or(BranchLabel::Failure)
            }
        }
    }
}

/// A complete interrogation protocol: layout, input photon, element sequence
/// and output classifier. Measurement happens only at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub layout: Arc<BasisLayout>,
    /// Photon-sector input vector (length `layout.n_modes()`).
    pub input: Vec<Complex64>,
    pub elements: Vec<Element>,
    pub classifier: Classifier,
}

impl Circuit {
    pub fn new(
        layout: Arc<BasisLayout>,
        input: Vec<Complex64>,
        elements: Vec<Element>,
        classifier: Classifier,
    ) -> Result<Self> {
        if input.len() != layout.n_modes() {
            return Err(NqiError::DimensionMismatch { expected: layout.n_modes(), got: input.len() });
        }
        let n = norm_sqr(&input);
        if (n - 1.0).abs() > tol::NORM {
            return Err(NqiError::NotNormalized { norm_sq: n });
        }
        classifier.check(&layout)?;
        Ok(Self { layout, input, elements, classifier })
    }

    /// Final joint state for an arbitrary atom vector.
    pub fn evolve(&self, atom: &[Complex64], ctx: &AtomContext) -> Result<JointState> {
        let initial = JointState::product(Arc::clone(&self.layout), &self.input, atom)?;
        apply_all(&self.elements, initial, ctx)
    }

    pub fn run(&self, atom: &AtomSpec) -> Result<ProtocolOutcome> {
        let a = atom.vector(self.layout.n_levels());
        let fin = self.evolve(&a, &atom.context())?;
        ProtocolOutcome::evaluate(fin, &self.classifier, &a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub success_prob: f64,
    pub failure_prob: f64,
    pub absorbed_prob: f64,
    /// Every branch with its probability, in mode order.
    pub branches: Vec<(BranchLabel, f64)>,
    /// Dominant eigenvector of the atom state conditioned on success; `None`
    /// when the success branch is empty.
    pub success_atom_state: Option<Vec<Complex64>>,
    /// `⟨ψ_atom|ρ_success|ψ_atom⟩` against the initial atom state.
    pub success_fidelity: Option<f64>,
    pub final_state: JointState,
    /// Polarization of the photon over all path modes, when it is definite.
    pub exit_polarization: Option<Polarization>,
}

impl ProtocolOutcome {
    /// Classifies `final_state` and checks probability conservation.
    pub fn evaluate(final_state: JointState, classifier: &Classifier, initial_atom: &[Complex64]) -> Result<Self> {
        let layout = Arc::clone(final_state.layout());
        let branches = final_state.partition_branches(|m| classifier.label(&layout, m));
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if (total - 1.0).abs() > tol::PROB {
            return Err(NqiError::ConservationViolated { total, tol: tol::PROB });
        }
        let prob_of = |l: &BranchLabel| branches.iter().filter(|b| &b.label == l).map(|b| b.probability).sum::<f64>();
        let success_prob = prob_of(&BranchLabel::Success);

        let (success_atom_state, success_fidelity) = if success_prob > tol::EMPTY_BRANCH {
            let rho = reduced_atom_state(&final_state, |m| classifier.label(&layout, m) == BranchLabel::Success);
            let a = DVector::from_column_slice(initial_atom);
            let fid = (a.adjoint() * &rho * &a)[(0, 0)].re.clamp(0.0, 1.0);
            (Some(dominant_eigenvector(rho)), Some(fid))
        } else {
            (None, None)
        };

        Ok(Self {
            success_prob,
            failure_prob: prob_of(&BranchLabel::Failure),
            absorbed_prob: prob_of(&BranchLabel::Absorbed),
            branches: branches.iter().map(|b| (b.label.clone(), b.probability)).collect(),
            success_atom_state,
            success_fidelity,
            exit_polarization: exit_polarization(&final_state),
            final_state,
        })
    }

    pub fn total_prob(&self) -> f64 {
        self.branches.iter().map(|(_, p)| p).sum()
    }
}

/// Normalized atom density matrix conditioned on the photon being found in a
/// mode selected by `keep`.
pub fn reduced_atom_state<F>(state: &JointState, keep: F) -> DMatrix<Complex64>
where
    F: Fn(PhotonMode) -> bool,
{
    let layout = state.layout();
    let nl = layout.n_levels();
    let mut rho = DMatrix::zeros(nl, nl);
    for (m, mode) in layout.modes().enumerate() {
        if !keep(mode) {
            continue;
        }
        let s = DVector::from_column_slice(&state.amplitudes()[m * nl..(m + 1) * nl]);
        rho += &s * s.adjoint();
    }
    let tr = rho.trace().re;
    if tr > 0.0 {
        rho /= Complex64::new(tr, 0.0);
    }
    rho
}

/// Eigenvector of the largest eigenvalue, phased so its largest component is
/// real and positive.
fn dominant_eigenvector(rho: DMatrix<Complex64>) -> Vec<Complex64> {
    let eig = rho.symmetric_eigen();
    let k = eig.eigenvalues.iamax();
    let v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
    let big = v.iter().copied().fold(Complex64::new(0.0, 0.0), |acc, c| if c.norm() > acc.norm() { c } else { acc });
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { Complex64::new(1.0, 0.0) };
    v.into_iter().map(|c| c * phase).collect()
}

fn exit_polarization(state: &JointState) -> Option<Polarization> {
    let layout = state.layout();
    let mut marginal = [0.0; 2];
    for mode in layout.modes() {
        if let PhotonMode::Path { pol, .. } = mode {
            marginal[pol.index()] += state.mode_probability(mode);
        }
    }
    let total = marginal[0] + marginal[1];
    if total < tol::EMPTY_BRANCH {
        None
    } else if marginal[1] <= tol::PROB * total {
        Some(Polarization::Plus)
    } else if marginal[0] <= tol::PROB * total {
        Some(Polarization::Minus)
    } else {
        None
    }
}
