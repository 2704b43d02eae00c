//! Witness-projector search for nondistortion interrogation.
//!
//! A protocol can reveal the atom without disturbing it only if some probe
//! state `Φ`, orthogonal to the probe's final state without the atom, picks
//! out the initial atom superposition from the final state with the atom:
//! `(⟨Φ| ⊗ I) |present⟩ = Δ |ψ_atom⟩` with `Δ ≠ 0`. Atom levels that never
//! interact evolve exactly as without the atom, so the orthogonality
//! constraint removes them from every contraction and no such `Φ` exists.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::elements::AtomContext;
use crate::error::{NqiError, Result};
use crate::state::{inner, norm_sqr, JointState};
use crate::tol;

/// Final joint states of one protocol run with and without the atom.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalStatePair {
    pub absent: JointState,
    pub present: JointState,
    pub probe_dim: usize,
    pub atom_dim: usize,
}

impl FinalStatePair {
    /// Singular values of the absent state's probe-by-atom amplitude matrix,
    /// in decreasing order. A product state has exactly one nonzero value.
    pub fn absent_singular_values(&self) -> Vec<f64> {
        let m = self.absent.photon_atom_matrix();
        let mut s: Vec<f64> = real_embedding(&m).singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        // each complex singular value appears twice in the real embedding
        s.into_iter().step_by(2).take(m.nrows().min(m.ncols())).collect()
    }

    /// Probe final state without the atom: `(I ⊗ ⟨ψ_atom|) |absent⟩`.
    pub fn probe_final(&self, atom_init: &[Complex64]) -> Vec<Complex64> {
        let m = self.absent.photon_atom_matrix();
        (0..self.probe_dim)
            .map(|p| (0..self.atom_dim).map(|j| atom_init[j].conj() * m[(p, j)]).sum())
            .collect()
    }
}

/// Real form `[[Re, -Im], [Im, Re]]` of a complex matrix. nalgebra's complex
/// SVD loses accuracy on matrices mixing O(1) and O(1e-13) entries; the real
/// SVD of the embedding does not.
fn real_embedding(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    DMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = a[(i % m, j % n)];
        match (i < m, j < n) {
            (true, false) => -z.im,
            (false, true) => z.im,
            _ => z.re,
        }
    })
}

fn check_atom(atom_init: &[Complex64], atom_dim: usize) -> Result<()> {
    if atom_init.len() != atom_dim {
        return Err(NqiError::DimensionMismatch { expected: atom_dim, got: atom_init.len() });
    }
    let n = norm_sqr(atom_init);
    if (n - 1.0).abs() > 1e-9 {
        return Err(NqiError::NotNormalized { norm_sq: n });
    }
    Ok(())
}

/// Runs `circuit` without and with the atom, levels in `transparent` never
/// interacting. Absorbed components stay inside `present`.
pub fn build_final_states(
    circuit: &Circuit,
    atom_init: &[Complex64],
    transparent: &BTreeSet<String>,
) -> Result<FinalStatePair> {
    let layout = &circuit.layout;
    check_atom(atom_init, layout.n_levels())?;
    for level in transparent {
        layout.level(level)?;
    }
    let absent = circuit.evolve(atom_init, &AtomContext { absent: true, transparent: BTreeSet::new() })?;
    let present = circuit.evolve(atom_init, &AtomContext { absent: false, transparent: transparent.clone() })?;
    Ok(FinalStatePair { absent, present, probe_dim: layout.n_modes(), atom_dim: layout.n_levels() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Normalized probe state to post-select on.
    pub phi_p: Vec<Complex64>,
    /// `(⟨Φ| ⊗ I)|present⟩ = Δ |ψ_atom⟩`.
    pub delta: Complex64,
    /// Least-squares distance of the atom state from the reachable subspace.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessSearch {
    Found(Witness),
    /// No admissible probe reproduces the atom state; `residual` is the
    /// smallest distance achieved.
    Absent { residual: f64 },
}

impl WitnessSearch {
    pub fn is_found(&self) -> bool {
        matches!(self, WitnessSearch::Found(_))
    }

    pub fn residual(&self) -> f64 {
        match self {
            WitnessSearch::Found(w) => w.residual,
            WitnessSearch::Absent { residual } => *residual,
        }
    }

    pub fn delta_sq(&self) -> f64 {
        match self {
            WitnessSearch::Found(w) => w.delta.norm_sqr(),
            WitnessSearch::Absent { .. } => 0.0,
        }
    }
}

/// Searches for a witness probe.
///
/// With `M` the probe-by-atom matrix of `present` and `g` the unit vector
/// along the conjugated no-atom probe state, the atom vectors reachable by
/// admissible probes span the range of `A = Mᵀ (I − g g†)`. The atom state is
/// tested for membership by least squares against the SVD of `A`; when it is
/// a member, the minimum-norm preimage gives the probe with the largest `|Δ|`.
pub fn find_witness(pair: &FinalStatePair, atom_init: &[Complex64]) -> Result<WitnessSearch> {
    check_atom(atom_init, pair.atom_dim)?;
    if pair.present.norm_sqr() < tol::EMPTY_BRANCH {
        return Err(NqiError::Degenerate("final state with the atom is zero".into()));
    }
    let f = pair.probe_final(atom_init);
    let f_norm = norm_sqr(&f).sqrt();
    if f_norm < tol::RANK {
        return Err(NqiError::Degenerate("probe final state without the atom is zero".into()));
    }
    let g = DVector::from_iterator(f.len(), f.iter().map(|c| c.conj() / f_norm));
    let m = pair.present.photon_atom_matrix();
    let mt = m.transpose();
    let a_mat: DMatrix<Complex64> = &mt - (&mt * &g) * g.adjoint();
    let target = DVector::from_column_slice(atom_init);

    // minimum-norm least-squares preimage of the atom state under A
    let n = pair.probe_dim;
    let k = pair.atom_dim;
    let target_re = DVector::from_fn(2 * k, |i, _| if i < k { target[i].re } else { target[i - k].im });
    let svd = real_embedding(&a_mat).svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut pre_re = DVector::<f64>::zeros(2 * n);
    for (j, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > tol::RANK {
            pre_re += v_t.row(j).transpose() * (u.column(j).dot(&target_re) / sigma);
        }
    }
    let preimage = DVector::from_fn(n, |i, _| Complex64::new(pre_re[i], pre_re[i + n]));
    let residual = (&target - &a_mat * &preimage).norm();
    let pre_norm = preimage.norm();
    if residual >= tol::RANK || pre_norm == 0.0 {
        return Ok(WitnessSearch::Absent { residual });
    }
    let delta = Complex64::new(1.0 / pre_norm, 0.0);
    if delta.norm() <= tol::RANK {
        return Ok(WitnessSearch::Absent { residual });
    }
    // ⟨Φ| = uᵀ/|u|, so Φ = conj(u)/|u|
    let phi_p: Vec<Complex64> = preimage.iter().map(|c| c.conj() / pre_norm).collect();
    debug_assert!(inner(&phi_p, &f).norm() < 1e-6 * f_norm.max(1.0));
    Ok(WitnessSearch::Found(Witness { phi_p, delta, residual }))
}

/// One row of a transparency scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NogoRow {
    pub mask: BTreeSet<String>,
    pub atom: Vec<Complex64>,
    pub witness_found: bool,
    pub residual: f64,
    pub delta_sq: f64,
}

/// Witness search for every `(mask, sample)` pair, masks outermost.
pub fn transparency_nogo_scan(
    circuit: &Circuit,
    masks: &[BTreeSet<String>],
    samples: &[Vec<Complex64>],
) -> Result<Vec<NogoRow>> {
    if masks.is_empty() {
        return Err(NqiError::EmptyList { kind: "transparency mask" });
    }
    let mut rows = Vec::with_capacity(masks.len() * samples.len());
    for mask in masks {
        for atom in samples {
            let pair = build_final_states(circuit, atom, mask)?;
            let search = find_witness(&pair, atom)?;
            rows.push(NogoRow {
                mask: mask.clone(),
                atom: atom.clone(),
                witness_found: search.is_found(),
                residual: search.residual(),
                delta_sq: search.delta_sq(),
            });
        }
    }
    Ok(rows)
}
