//! Helpers shared by the integration tests: small reference circuits, a
//! brute-force witness oracle and a generator of valid circuit sources.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nqi::elements::{AtomInteraction, PLUS};
use nqi::nogo::FinalStatePair;
use nqi::protocols::haar_samples;
use nqi::state::make_layout;
use nqi::{AtomSpec, BranchLabel, Circuit, Classifier, Complex64, Element};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Haar samples with both amplitudes bounded away from zero.
pub fn generic_atoms(count: usize, seed: u64) -> Vec<AtomSpec> {
    haar_samples(4 * count + 16, seed)
        .into_iter()
        .filter(|a| a.alpha.norm() > 0.05 && a.beta.norm() > 0.05)
        .take(count)
        .collect()
}

/// `+` photon through the atom once.
pub fn single_pass(pol: [Complex64; 2]) -> Circuit {
    let layout = make_layout(&["a"], &["S+", "S-"], &["m+", "m-", "g"]).unwrap();
    let input = layout.path_photon("a", pol).unwrap();
    Circuit::new(
        layout,
        input,
        vec![Element::atom(AtomInteraction::new("a", "S+", "S-"))],
        Classifier::new([("a", BranchLabel::Success)], BranchLabel::Absorbed),
    )
    .unwrap()
}

/// Balanced interferometer whose upper arm is made opaque by two atom
/// passes with a polarization flip on both arms in between.
pub fn opaque_arm_interferometer() -> Circuit {
    let (h, sinks) = (FRAC_1_SQRT_2, ["S+#1", "S-#1", "S+#2", "S-#2"]);
    let layout = make_layout(&["l", "u"], &sinks, &["m+", "m-", "g"]).unwrap();
    let input = layout.path_photon("l", PLUS).unwrap();
    let elements = vec![
        Element::beam_splitter("l", "u", h, h).unwrap(),
        Element::atom(AtomInteraction::new("u", "S+#1", "S-#1")),
        Element::flip("u"),
        Element::flip("l"),
        Element::atom(AtomInteraction::new("u", "S+#2", "S-#2")),
        Element::beam_splitter("l", "u", h, h).unwrap(),
    ];
    Circuit::new(
        layout,
        input,
        elements,
        Classifier::new([("l", BranchLabel::Success), ("u", BranchLabel::Failure)], BranchLabel::Absorbed),
    )
    .unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    /// Dimension of the populated probe complement that was searched.
    pub complement_dim: usize,
    /// Smallest `|v⊥| / |⟨ψ|v⟩|` over the grid, `v` being the contracted atom vector.
    pub min_ratio: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Proportionality defect of the atom vector obtained by projecting the
/// present state onto probe `w` (restricted rows).
pub fn ratio(rows: &[Vec<Complex64>], w: &[Complex64], atom: &[Complex64]) -> f64 {
    let n_levels = atom.len();
    let mut v = vec![c(0.0, 0.0); n_levels];
    for (wp, row) in w.iter().zip(rows) {
        for l in 0..n_levels {
            v[l] += wp.conj() * row[l];
        }
    }
    let along = dot(atom, &v);
    if along.norm() < 1e-12 {
        return f64::INFINITY;
    }
    let perp: Vec<Complex64> = v.iter().zip(atom).map(|(x, a)| x - along * a).collect();
    norm(&perp) / along.norm()
}

/// Exhaustive grid search over unit probe vectors orthogonal to the no-atom
/// probe state, restricted to modes populated in either final state. Returns
/// `None` when that complement has more than three dimensions.
pub fn grid_oracle(pair: &FinalStatePair, atom: &[Complex64], steps: usize) -> Option<OracleResult> {
    let layout = pair.present.layout();
    let (nm, nl) = (layout.n_modes(), layout.n_levels());
    let amp = |s: &nqi::JointState, m: usize, l: usize| s.amplitudes()[m * nl + l];
    let mut rows = Vec::new();
    let mut f = Vec::new();
    for m in 0..nm {
        let row: Vec<Complex64> = (0..nl).map(|l| amp(&pair.present, m, l)).collect();
        let fm: Complex64 = (0..nl).map(|l| atom[l].conj() * amp(&pair.absent, m, l)).sum();
        if row.iter().any(|x| x.norm() > 1e-14) || fm.norm() > 1e-14 {
            rows.push(row);
            f.push(fm);
        }
    }
    let d = rows.len();
    let f_norm = norm(&f);
    let f_hat: Vec<Complex64> = f.iter().map(|x| x / f_norm).collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..d {
        let mut e = vec![c(0.0, 0.0); d];
        e[k] = c(1.0, 0.0);
        for b in std::iter::once(&f_hat).chain(basis.iter()) {
            let p = dot(b, &e);
            for (x, y) in e.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let n = norm(&e);
        if n > 1e-9 {
            basis.push(e.iter().map(|x| x / n).collect());
        }
    }
    let k = basis.len();
    if k > 3 {
        return None;
    }
    let angle = |i: usize| (PI / 2.0) * i as f64 / (steps - 1) as f64;
    let phase = |i: usize| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / steps as f64);
    let mut coeffs: Vec<Vec<Complex64>> = Vec::new();
    match k {
        0 => {}
        1 => coeffs.push(vec![c(1.0, 0.0)]),
        2 => {
            for i in 0..steps {
                for j in 0..steps {
                    coeffs.push(vec![c(angle(i).cos(), 0.0), phase(j) * angle(i).sin()]);
                }
            }
        }
        _ => {
            for i1 in 0..steps {
                for i2 in 0..steps {
                    for j2 in 0..steps {
                        for j3 in 0..steps {
                            let (t1, t2) = (angle(i1), angle(i2));
                            coeffs.push(vec![
                                c(t1.cos(), 0.0),
                                phase(j2) * (t1.sin() * t2.cos()),
                                phase(j3) * (t1.sin() * t2.sin()),
                            ]);
                        }
                    }
                }
            }
        }
    }
    let mut min_ratio = f64::INFINITY;
    for cs in &coeffs {
        let mut w = vec![c(0.0, 0.0); d];
        for (ck, b) in cs.iter().zip(&basis) {
            for (x, y) in w.iter_mut().zip(b) {
                *x += ck * y;
            }
        }
        min_ratio = min_ratio.min(ratio(&rows, &w, atom));
    }
    Some(OracleResult { complement_dim: k, min_ratio })
}

/// Independent check of a witness: orthogonal to the no-atom probe state and
/// contracting the present state onto a multiple of the atom state.
pub fn verify_witness(pair: &FinalStatePair, atom: &[Complex64], phi: &[Complex64]) -> (f64, Complex64, f64) {
    let layout = pair.present.layout();
    let (nm, nl) = (layout.n_modes(), layout.n_levels());
    let f: Vec<Complex64> =
        (0..nm).map(|m| (0..nl).map(|l| atom[l].conj() * pair.absent.amplitudes()[m * nl + l]).sum()).collect();
    let overlap = dot(phi, &f).norm();
    let mut v = vec![c(0.0, 0.0); nl];
    for m in 0..nm {
        for l in 0..nl {
            v[l] += phi[m].conj() * pair.present.amplitudes()[m * nl + l];
        }
    }
    let delta = dot(atom, &v);
    let perp: Vec<Complex64> = v.iter().zip(atom).map(|(x, a)| x - delta * a).collect();
    (overlap, delta, norm(&perp))
}

// ---- random valid circuit sources ----

const PATHS: [&str; 3] = ["p0", "p1", "q"];
const LEVELS: [&str; 4] = ["m+", "m-", "g", "e"];

fn expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.random_bool(0.35) {
        return match rng.random_range(0..5) {
            0 => "pi".into(),
            1 => ["a", "b", "k"][rng.random_range(0..3)].into(),
            2 => format!("{}", rng.random_range(0..100)),
            3 => format!("{:e}", rng.random_range(0.0..1000.0)),
            _ => format!("{}", rng.random_range(0.0..10.0)),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..6) {
        0 => format!("-{}", expr(rng, d)),
        1 => format!("({} + {})", expr(rng, d), expr(rng, d)),
        2 => format!("{}-{}", expr(rng, d), expr(rng, d)),
        3 => format!("{} * ({})", expr(rng, d), expr(rng, d)),
        4 => format!("{}/{}", expr(rng, d), expr(rng, d)),
        _ => format!("{}({})", ["sin", "cos", "sqrt"][rng.random_range(0..3)], expr(rng, d)),
    }
}

fn spaces(rng: &mut ChaCha8Rng) -> &'static str {
    ["", " ", "  ", "\t"][rng.random_range(0..4)]
}

fn element(rng: &mut ChaCha8Rng, depth: usize, out: &mut Vec<String>) {
    let indent = "  ".repeat(depth);
    let p = |rng: &mut ChaCha8Rng| PATHS[rng.random_range(0..3)];
    let pair = |rng: &mut ChaCha8Rng| {
        let i = rng.random_range(0..3);
        (PATHS[i], PATHS[(i + rng.random_range(1..3)) % 3])
    };
    let line = match rng.random_range(0..10) {
        0 | 1 => {
            let (a, b) = pair(rng);
            format!("bs {a} {b} t={} r = {}", expr(rng, 2), expr(rng, 2))
        }
        2 => format!("mirror {}", p(rng)),
        3 => format!("rot {} flip", p(rng)),
        4 => format!(
            "rot {} matrix({}, {},{} , {})",
            p(rng),
            expr(rng, 1),
            expr(rng, 1),
            expr(rng, 1),
            expr(rng, 1)
        ),
        5 => format!("phase {} {}", p(rng), expr(rng, 3)),
        6 => {
            let k = rng.random_range(0..3);
            if k == 0 {
                format!("atom {}", p(rng))
            } else {
                format!("atom {} transparent: {}", p(rng), LEVELS[..k].join(" "))
            }
        }
        7 => {
            let (a, b) = pair(rng);
            format!("couple {a} {b} t={} r={}", expr(rng, 1), expr(rng, 1))
        }
        8 => ["relabel p0->p1 p1->p0", "relabel p0->p1 p1->q q->p0", "relabel q->q"][rng.random_range(0..3)].into(),
        _ if depth < 2 => {
            out.push(format!("{indent}repeat {} {{", ["2", "k", "1", "3"][rng.random_range(0..4)]));
            for _ in 0..rng.random_range(1..4) {
                element(rng, depth + 1, out);
            }
            out.push(format!("{indent}}}"));
            return;
        }
        _ => format!("mirror {}", p(rng)),
    };
    let sp = spaces(rng);
    out.push(format!("{indent}{sp}{line}"));
    if rng.random_bool(0.2) {
        out.push("# comment".into());
    }
}

/// A syntactically valid circuit description with random elements,
/// expressions, whitespace and comments.
pub fn random_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![
        "# generated".to_string(),
        format!("paths {}", PATHS.join(" ")),
        "sinks S+ S-".into(),
        format!("atom-levels {}", LEVELS.join(" ")),
        format!("param a = {}", rng.random_range(0.0..1.0)),
        "param k = 2".into(),
        format!("let b = {}", expr(&mut rng, 2).replace('b', "a")),
        String::new(),
        format!("input {} {}", PATHS[rng.random_range(0..3)], ["+", "-", "x", "y"][rng.random_range(0..4)]),
    ];
    for _ in 0..rng.random_range(1..8) {
        element(&mut rng, 0, &mut out);
    }
    out.push(format!("classify p0=success p1=failure q={} sinks=absorbed  # end", ["dark", "failure"][rng.random_range(0..2)]));
    out.join("\n")
}
