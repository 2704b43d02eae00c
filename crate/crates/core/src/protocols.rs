//! The interrogation protocols: direct interaction, two-pass opacity, the
//! chained Mach-Zehnder interferometer and the Fabry-Perot cavity.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::circuit::{AtomSpec, Circuit, Classifier, ProtocolOutcome};
use crate::elements::{apply_all, basis_change, AtomInteraction, Element, LINEAR_X, LINEAR_Y, MINUS, PLUS};
use crate::error::{NqiError, Result};
use crate::state::{make_layout, norm_sqr, BasisLayout, BranchLabel, JointState, PhotonMode, Polarization};
use crate::tol;

pub const ATOM_LEVELS: [&str; 3] = ["m+", "m-", "g"];
pub const SINK_PLUS: &str = "S+";
pub const SINK_MINUS: &str = "S-";

/// Sink labels `S+#k`, `S-#k` for the k-th absorption site (1-based).
pub fn event_sinks(k: usize) -> (String, String) {
    (format!("{SINK_PLUS}#{k}"), format!("{SINK_MINUS}#{k}"))
}

fn event_sink_list(events: usize) -> Vec<String> {
    (1..=events)
        .flat_map(|k| {
            let (p, m) = event_sinks(k);
            [p, m]
        })
        .collect()
}

fn check_pol(pol: [Complex64; 2]) -> Result<()> {
    let n = norm_sqr(&pol);
    if (n - 1.0).abs() > tol::NORM {
        return Err(NqiError::NotNormalized { norm_sq: n });
    }
    Ok(())
}

/// One photon with polarization `pol` meets the atom once.
pub fn direct_circuit(pol: [Complex64; 2]) -> Result<Circuit> {
    check_pol(pol)?;
    let layout = make_layout(&["a"], &[SINK_PLUS, SINK_MINUS], &ATOM_LEVELS)?;
    let input = layout.path_photon("a", pol)?;
    Circuit::new(
        layout,
        input,
        vec![Element::atom(AtomInteraction::new("a", SINK_PLUS, SINK_MINUS))],
        Classifier::new([("a", BranchLabel::Success)], BranchLabel::Absorbed),
    )
}

/// Joint state after a single direct interaction.
pub fn run_direct(pol: [Complex64; 2], atom: &AtomSpec) -> Result<JointState> {
    let c = direct_circuit(pol)?;
    c.evolve(&atom.vector(c.layout.n_levels()), &atom.context())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPassOutcome {
    pub outcome: ProtocolOutcome,
    pub first_pass_absorbed: f64,
    pub second_pass_absorbed: f64,
}

/// A `+` photon passes the atom, is flipped to `-`, and passes again.
pub fn two_pass_circuit() -> Result<Circuit> {
    let layout = make_layout(&["a".to_string()], &event_sink_list(2), &ATOM_LEVELS.map(String::from))?;
    let input = layout.path_photon("a", PLUS)?;
    let (p1, m1) = event_sinks(1);
    let (p2, m2) = event_sinks(2);
    Circuit::new(
        layout,
        input,
        vec![
            Element::atom(AtomInteraction::new("a", p1, m1)),
            Element::flip("a"),
            Element::atom(AtomInteraction::new("a", p2, m2)),
        ],
        Classifier::new([("a", BranchLabel::Failure)], BranchLabel::Absorbed),
    )
}

pub fn run_two_pass(atom: &AtomSpec) -> Result<TwoPassOutcome> {
    let outcome = two_pass_circuit()?.run(atom)?;
    let layout = outcome.final_state.layout();
    let pass = |k: usize| {
        let (p, m) = event_sinks(k);
        [p, m]
            .iter()
            .map(|s| outcome.final_state.mode_probability(PhotonMode::Sink(layout.sink(s).unwrap())))
            .sum::<f64>()
    };
    let (first_pass_absorbed, second_pass_absorbed) = (pass(1), pass(2));
    Ok(TwoPassOutcome { outcome, first_pass_absorbed, second_pass_absorbed })
}

/// `[cos²(π/2N)]^N`, the success probability of the N-stage chain.
pub fn mz_closed_form(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(NqiError::InvalidParameter("number of stages must be at least 1".into()));
    }
    let c = (PI / (2.0 * n as f64)).cos();
    Ok((c * c).powf(n as f64))
}

/// Beam splitter amplitudes `(t, r) = (sin(π/2N), cos(π/2N))`.
pub fn mz_coefficients(n: usize) -> (f64, f64) {
    let theta = PI / (2.0 * n as f64);
    (theta.sin(), theta.cos())
}

/// N-stage Mach-Zehnder chain on paths `l`, `u` with the atom in the upper arm.
///
/// Each stage is a beam splitter followed by both arms: the upper arm passes
/// the atom, two mirrors with a polarization flip between them, then the atom
/// again; the lower arm has the mirrors and flip only. The splitter of stage
/// k+1 recombines the arms of stage k, so the chain holds N splitters and N
/// polarization flips. Absorption sites get their own sink pair.
pub fn mz_circuit(n: usize) -> Result<Circuit> {
    if n < 1 {
        return Err(NqiError::InvalidParameter("number of stages must be at least 1".into()));
    }
    let (t, r) = mz_coefficients(n);
    let layout = make_layout(&["l".to_string(), "u".to_string()], &event_sink_list(2 * n), &ATOM_LEVELS.map(String::from))?;
    let input = layout.path_photon("l", PLUS)?;
    let mut elements = Vec::with_capacity(9 * n);
    for stage in 0..n {
        let (p1, m1) = event_sinks(2 * stage + 1);
        let (p2, m2) = event_sinks(2 * stage + 2);
        elements.push(Element::beam_splitter("l", "u", t, r)?);
        elements.push(Element::atom(AtomInteraction::new("u", p1, m1)));
        elements.extend([Element::mirror("u"), Element::flip("u"), Element::mirror("u")]);
        elements.extend([Element::mirror("l"), Element::flip("l"), Element::mirror("l")]);
        elements.push(Element::atom(AtomInteraction::new("u", p2, m2)));
    }
    Circuit::new(
        layout,
        input,
        elements,
        Classifier::new([("l", BranchLabel::Success), ("u", BranchLabel::Failure)], BranchLabel::Absorbed),
    )
}

pub fn run_mz_chain(n: usize, atom: &AtomSpec) -> Result<ProtocolOutcome> {
    mz_circuit(n)?.run(atom)
}

/// Default truncation of the cavity iteration, on the squared intracavity
/// amplitude. The accumulated outputs carry an error of the order of the
/// residual amplitude, so this keeps them accurate to about 1e-12.
pub const FP_DEFAULT_EPS: f64 = 1e-24;
const FP_MAX_ROUNDS: usize = 10_000_000;

/// Fabry-Perot cavity on paths `refl` (input and reflected output), `cav`
/// (intracavity) and `trans` (transmitted output), atom in the middle.
///
/// The photon enters `x`-polarized. The first half of the cavity maps
/// `x → +` (and `y → -`), the second half `+ → y` (and `- → x`), so a round
/// trip runs `x → + → y → - → x`. Mirrors reflect with factor `i r`; the
/// propagation phase is fixed so that successive output beams are in phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabryPerot {
    pub r: f64,
    pub t: f64,
    pub r_prime: f64,
    pub t_prime: f64,
}

impl FabryPerot {
    pub fn new(r: f64, t: f64, r_prime: f64, t_prime: f64) -> Result<Self> {
        let bad = NqiError::NonUnitaryMirror { r, t, r_prime, t_prime };
        let pair_ok = |a: f64, b: f64| a >= -tol::NORM && b >= -tol::NORM && (a * a + b * b - 1.0).abs() <= tol::NORM;
        // [[i r, t'], [t, i r']] is unitary only for t r' = r t'
        if !pair_ok(r, t) || !pair_ok(r_prime, t_prime) || (t * r_prime - r * t_prime).abs() > tol::NORM {
            return Err(bad);
        }
        Ok(Self { r, t, r_prime, t_prime })
    }

    /// Identical front and back mirrors with reflection amplitude `r`.
    pub fn symmetric(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(NqiError::InvalidParameter(format!("reflection amplitude {r} outside [0, 1]")));
        }
        let t = (1.0 - r * r).sqrt();
        Self::new(r, t, r, t)
    }

    fn layout(sinks: &[String]) -> Result<Arc<BasisLayout>> {
        make_layout(&["refl".to_string(), "cav".to_string(), "trans".to_string()], sinks, &ATOM_LEVELS.map(String::from))
    }

    fn classifier() -> Classifier {
        Classifier::new(
            [("refl", BranchLabel::Success), ("cav", BranchLabel::Failure), ("trans", BranchLabel::Failure)],
            BranchLabel::Absorbed,
        )
    }

    fn entry(&self) -> Result<Element> {
        Element::beam_splitter("refl", "cav", self.t, self.r)
    }

    fn round_trip(&self, sinks: (&str, &str)) -> Result<Vec<Element>> {
        let first_half = basis_change([LINEAR_X, LINEAR_Y], [PLUS, MINUS]);
        let second_half = basis_change([PLUS, MINUS], [LINEAR_Y, LINEAR_X]);
        let atom = || Element::atom(AtomInteraction::new("cav", sinks.0, sinks.1));
        Ok(vec![
            Element::rotator("cav", first_half)?,
            atom(),
            Element::rotator("cav", second_half)?,
            Element::coupler("cav", "trans", self.t_prime, self.r_prime)?,
            Element::phase("cav", PI),
            Element::rotator("cav", first_half)?,
            atom(),
            Element::rotator("cav", second_half)?,
            Element::coupler("cav", "refl", self.t_prime, self.r_prime)?,
        ])
    }

    /// Round trips needed for the squared intracavity amplitude to drop below `eps`.
    pub fn round_trips_for(&self, eps: f64) -> usize {
        let q = self.r_prime * self.r_prime;
        let start = self.t * self.t;
        if start < eps || q == 0.0 {
            return 1;
        }
        if q >= 1.0 {
            return FP_MAX_ROUNDS;
        }
        // after k round trips the residual is t² q^(2k)
        (((eps / start).ln() / (2.0 * q.ln())).ceil() as usize + 1).min(FP_MAX_ROUNDS)
    }

    /// Fixed-length circuit with `rounds` round trips. Every round trip
    /// reuses the sink pair `S+`, `S-`: each level can be absorbed at most
    /// once because the cavity holds a single polarization at each atom pass.
    pub fn circuit(&self, rounds: usize) -> Result<Circuit> {
        let layout = Self::layout(&[SINK_PLUS.to_string(), SINK_MINUS.to_string()])?;
        let input = layout.path_photon("refl", LINEAR_X)?;
        let mut elements = vec![self.entry()?];
        let trip = self.round_trip((SINK_PLUS, SINK_MINUS))?;
        for _ in 0..rounds {
            elements.extend(trip.iter().cloned());
        }
        Circuit::new(layout, input, elements, Self::classifier())
    }

    /// Iterates round trips until the squared intracavity amplitude is below `eps`.
    pub fn run(&self, atom: &AtomSpec, eps: f64) -> Result<ProtocolOutcome> {
        if !(eps > 0.0) {
            return Err(NqiError::InvalidParameter(format!("truncation tolerance {eps} must be positive")));
        }
        let circuit = self.circuit(0)?;
        let a = atom.vector(circuit.layout.n_levels());
        let ctx = atom.context();
        let mut state = circuit.evolve(&a, &ctx)?;
        let trip = self.round_trip((SINK_PLUS, SINK_MINUS))?;
        let cav = circuit.layout.path("cav")?;
        let residual = |s: &JointState| {
            Polarization::BOTH.iter().map(|&pol| s.mode_probability(PhotonMode::Path { path: cav, pol })).sum::<f64>()
        };
        let mut rounds = 0;
        while residual(&state) >= eps {
            if rounds == FP_MAX_ROUNDS {
                return Err(NqiError::Degenerate(format!("cavity did not drain below {eps:e} in {FP_MAX_ROUNDS} round trips")));
            }
            state = apply_all(&trip, state, &ctx)?;
            rounds += 1;
        }
        ProtocolOutcome::evaluate(state, &circuit.classifier, &a)
    }
}

pub fn run_fabry_perot(r: f64, t: f64, r_prime: f64, t_prime: f64, atom: &AtomSpec, eps: f64) -> Result<ProtocolOutcome> {
    FabryPerot::new(r, t, r_prime, t_prime)?.run(atom, eps)
}

/// One row of a success-fidelity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub success_prob: f64,
    pub fidelity: Option<f64>,
}

/// Runs `runner` on every sample and tabulates success probability and
/// success-branch fidelity.
pub fn success_fidelity_scan<F>(runner: F, samples: &[AtomSpec]) -> Result<Vec<ScanRow>>
where
    F: Fn(&AtomSpec) -> Result<ProtocolOutcome>,
{
    samples
        .iter()
        .map(|s| {
            let out = runner(s)?;
            Ok(ScanRow { alpha: s.alpha, beta: s.beta, success_prob: out.success_prob, fidelity: out.success_fidelity })
        })
        .collect()
}

/// Haar-random atom superpositions: two independent standard complex
/// Gaussians, normalized. Deterministic for a given seed.
pub fn haar_samples(count: usize, seed: u64) -> Vec<AtomSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    (0..count)
        .map(|_| {
            let a = Complex64::new(gauss(), gauss());
            let b = Complex64::new(gauss(), gauss());
            AtomSpec::normalized(a, b).expect("gaussian sample is nonzero")
        })
        .collect()
}
