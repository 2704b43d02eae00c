//! `nqi`: run interrogation protocols, circuit files and no-go scans from the
//! command line. Output is CSV (default) or JSON.
//!
//! Exit status: 0 on success, 1 on a numerical check failure, 2 on usage,
//! parse or compile errors.

mod output;

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use nqi::dsl;
use nqi::elements::{LINEAR_X, LINEAR_Y, MINUS, PLUS};
use nqi::nogo::transparency_nogo_scan;
use nqi::protocols::{haar_samples, mz_closed_form, run_direct, run_mz_chain, FabryPerot, FP_DEFAULT_EPS};
use nqi::{AtomSpec, BranchLabel, Circuit, Complex64, JointState, NqiError, PhotonMode, Polarization};
use output::{fmt_real, Cell, Format, Table};

const MAX_STAGES: usize = 4096;
/// Largest tolerated gap between simulated and closed-form MZ success.
const SWEEP_TOL: f64 = 1e-10;
/// Amplitudes below this magnitude are left out of `run --amplitudes`.
const AMPLITUDE_FLOOR: f64 = 1e-15;

#[derive(Parser, Debug)]
#[command(name = "nqi", version, about = "Nondistortion quantum interrogation of a superposed atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct AtomArgs {
    /// Amplitude of m+, as a complex literal such as `0.6`, `0.8i` or `0.6-0.8i`.
    #[arg(long, allow_hyphen_values = true, requires = "beta")]
    alpha: Option<String>,
    /// Amplitude of m-.
    #[arg(long, allow_hyphen_values = true, requires = "alpha")]
    beta: Option<String>,
    /// Draw this many Haar-random superpositions instead.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    random: Option<usize>,
    /// Seed for `--random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chained Mach-Zehnder success probability against the closed form.
    MzSweep {
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fabry-Perot cavity with the atom in the middle.
    Fp {
        /// Mirror reflection amplitude.
        #[arg(long)]
        r: f64,
        /// Transmission amplitude (default sqrt(1 - r^2)).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        r_prime: Option<f64>,
        #[arg(long)]
        t_prime: Option<f64>,
        /// Stop once the squared intracavity amplitude drops below this.
        #[arg(long, default_value_t = FP_DEFAULT_EPS)]
        eps: f64,
        /// Run without the atom.
        #[arg(long)]
        absent: bool,
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joint state after one direct photon-atom interaction.
    Direct {
        /// Photon polarization: x, y, + or -.
        #[arg(long, default_value = "x", allow_hyphen_values = true)]
        pol: String,
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Witness search over transparency masks for a circuit file.
    NogoCheck {
        file: PathBuf,
        /// Parameter binding NAME=VALUE (repeatable).
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Comma-separated transparent levels, or `none` (repeatable).
        #[arg(long)]
        mask: Vec<String>,
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a circuit file and report branch probabilities.
    Run {
        file: PathBuf,
        /// Parameter binding NAME=VALUE (repeatable).
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Run without the atom.
        #[arg(long)]
        absent: bool,
        /// Comma-separated atom levels that never interact.
        #[arg(long, value_delimiter = ',')]
        transparent: Vec<String>,
        /// Print the nonzero final amplitudes instead of branch probabilities.
        #[arg(long)]
        amplitudes: bool,
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<NqiError> for Failure {
    fn from(e: NqiError) -> Self {
        match e {
            NqiError::ConservationViolated { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_complex(name: &str, s: &str) -> CliResult<Complex64> {
    Complex64::from_str(s.trim()).map_err(|_| Failure::Usage(format!("--{name}: cannot parse `{s}` as a complex number")))
}

/// Atom samples and the seed to record (`none` for explicit amplitudes).
fn atoms(args: &AtomArgs) -> CliResult<(Vec<AtomSpec>, String)> {
    if let Some(k) = args.random {
        if k == 0 {
            return Err(Failure::Usage("--random needs at least one sample".into()));
        }
        return Ok((haar_samples(k, args.seed), args.seed.to_string()));
    }
    let (a, b) = match (&args.alpha, &args.beta) {
        (Some(a), Some(b)) => (parse_complex("alpha", a)?, parse_complex("beta", b)?),
        _ => (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)),
    };
    Ok((vec![AtomSpec::normalized(a, b)?], "none".into()))
}

fn bindings(set: &[String]) -> CliResult<HashMap<String, f64>> {
    set.iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects NAME=VALUE, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Failure::Usage(format!("--set {k}: `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Records parameter bindings in the table header, sorted by name.
fn bound_meta(table: &mut Table, set: &[String]) -> CliResult<()> {
    let mut bound: Vec<(String, f64)> = bindings(set)?.into_iter().collect();
    bound.sort_by(|a, b| a.0.cmp(&b.0));
    for (k, v) in bound {
        table.meta(&k, fmt_real(v));
    }
    Ok(())
}

fn load_circuit(file: &Path, set: &[String]) -> CliResult<Circuit> {
    let src = fs::read_to_string(file).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
    let ast = dsl::parse(&src).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    dsl::compile(&ast, &bindings(set)?).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))
}

fn atom_cells(i: usize, a: &AtomSpec) -> [Cell; 3] {
    [i.into(), a.alpha.into(), a.beta.into()]
}

fn amplitude_rows(table: &mut Table, i: usize, atom: &AtomSpec, state: &JointState, floor: Option<f64>) {
    let layout = state.layout();
    for mode in layout.modes() {
        for (lvl, level) in layout.atom_levels().iter().enumerate() {
            let amp = state.amplitudes()[layout.index(mode, lvl)];
            if floor.is_some_and(|f| amp.norm() < f) {
                continue;
            }
            let [s, a, b] = atom_cells(i, atom);
            table.push(vec![s, a, b, layout.mode_label(mode).into(), level.as_str().into(), amp.re.into(), amp.im.into()]);
        }
    }
}

const AMPLITUDE_COLUMNS: [&str; 7] = ["sample", "alpha", "beta", "mode", "level", "re", "im"];

fn mz_sweep(n_min: usize, n_max: usize, atom: &AtomArgs) -> CliResult<(Table, Option<String>)> {
    if !(1 <= n_min && n_min <= n_max && n_max <= MAX_STAGES) {
        return Err(Failure::Usage(format!("invalid stage range {n_min}..{n_max}: need 1 <= n-min <= n-max <= {MAX_STAGES}")));
    }
    let (samples, seed) = atoms(atom)?;
    let jobs: Vec<(usize, usize)> = (n_min..=n_max).flat_map(|n| (0..samples.len()).map(move |i| (n, i))).collect();
    let results: Vec<CliResult<Vec<Cell>>> = jobs
        .par_iter()
        .map(|&(n, i)| {
            let out = run_mz_chain(n, &samples[i])?;
            let closed = mz_closed_form(n)?;
            let [s, a, b] = atom_cells(i, &samples[i]);
            Ok(vec![
                n.into(),
                out.success_prob.into(),
                closed.into(),
                (out.success_prob - closed).abs().into(),
                out.success_fidelity.into(),
                s,
                a,
                b,
            ])
        })
        .collect();
    let mut table = Table::new(
        "mz-sweep",
        &["N", "simulated_success", "closed_form", "abs_diff", "fidelity", "sample", "alpha", "beta"],
    );
    table.meta("seed", seed);
    table.meta("samples", samples.len());
    table.meta("n_min", n_min);
    table.meta("n_max", n_max);
    let mut worst = 0.0f64;
    for r in results {
        let row = r?;
        if let Cell::Real(d) = row[3] {
            worst = worst.max(d);
        }
        table.push(row);
    }
    let problem = (worst >= SWEEP_TOL).then(|| format!("simulated success deviates from the closed form by {worst:e}"));
    Ok((table, problem))
}

#[allow(clippy::too_many_arguments)]
fn fp(r: f64, t: Option<f64>, rp: Option<f64>, tp: Option<f64>, eps: f64, absent: bool, atom: &AtomArgs) -> CliResult<Table> {
    let t = t.unwrap_or_else(|| (1.0 - r * r).max(0.0).sqrt());
    let cavity = FabryPerot::new(r, t, rp.unwrap_or(r), tp.unwrap_or(t))?;
    let (samples, seed) = atoms(atom)?;
    let mut table = Table::new(
        "fp",
        &["sample", "alpha", "beta", "success_prob", "failure_prob", "transmitted_prob", "absorbed_prob", "fidelity"],
    );
    table.meta("seed", seed);
    table.meta("r", fmt_real(r));
    table.meta("t", fmt_real(t));
    table.meta("eps", fmt_real(eps));
    table.meta("atom", if absent { "absent" } else { "present" });
    for (i, a) in samples.iter().enumerate() {
        let spec = if absent { a.clone().absent() } else { a.clone() };
        let out = cavity.run(&spec, eps)?;
        let layout = out.final_state.layout();
        let trans = layout.path("trans")?;
        let transmitted: f64 = Polarization::BOTH
            .iter()
            .map(|&pol| out.final_state.mode_probability(PhotonMode::Path { path: trans, pol }))
            .sum();
        let [s, al, be] = atom_cells(i, a);
        table.push(vec![
            s,
            al,
            be,
            out.success_prob.into(),
            out.failure_prob.into(),
            transmitted.into(),
            out.absorbed_prob.into(),
            out.success_fidelity.into(),
        ]);
    }
    Ok(table)
}

fn direct(pol: &str, atom: &AtomArgs) -> CliResult<Table> {
    let vector = match pol {
        "x" => LINEAR_X,
        "y" => LINEAR_Y,
        "+" => PLUS,
        "-" => MINUS,
        other => return Err(Failure::Usage(format!("--pol: unknown polarization `{other}` (expected x, y, + or -)"))),
    };
    let (samples, seed) = atoms(atom)?;
    let mut table = Table::new("direct", &AMPLITUDE_COLUMNS);
    table.meta("seed", seed);
    table.meta("pol", pol);
    for (i, a) in samples.iter().enumerate() {
        let state = run_direct(vector, a)?;
        amplitude_rows(&mut table, i, a, &state, None);
    }
    Ok(table)
}

fn parse_mask(s: &str) -> BTreeSet<String> {
    if s.trim().is_empty() || s.trim() == "none" {
        return BTreeSet::new();
    }
    s.split(',').map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect()
}

fn mask_text(mask: &BTreeSet<String>) -> String {
    format!("{{{}}}", mask.iter().cloned().collect::<Vec<_>>().join(","))
}

fn nogo_check(file: &Path, set: &[String], masks: &[String], atom: &AtomArgs) -> CliResult<Table> {
    let circuit = load_circuit(file, set)?;
    let (samples, seed) = atoms(atom)?;
    let masks: Vec<BTreeSet<String>> =
        if masks.is_empty() { vec![BTreeSet::new()] } else { masks.iter().map(|m| parse_mask(m)).collect() };
    let vectors: Vec<Vec<Complex64>> = samples.iter().map(|a| a.vector(circuit.layout.n_levels())).collect();
    let rows = transparency_nogo_scan(&circuit, &masks, &vectors)?;
    let mut table = Table::new("nogo-check", &["mask", "alpha", "beta", "witness_found", "residual", "delta_sq"]);
    table.meta("file", file.display());
    table.meta("seed", seed);
    bound_meta(&mut table, set)?;
    for row in rows {
        table.push(vec![
            mask_text(&row.mask).into(),
            row.atom[0].into(),
            row.atom[1].into(),
            row.witness_found.into(),
            row.residual.into(),
            row.delta_sq.into(),
        ]);
    }
    Ok(table)
}

#[allow(clippy::too_many_arguments)]
fn run(
    file: &Path,
    set: &[String],
    absent: bool,
    transparent: &[String],
    amplitudes: bool,
    atom: &AtomArgs,
) -> CliResult<Table> {
    let circuit = load_circuit(file, set)?;
    let (samples, seed) = atoms(atom)?;
    let mut table = if amplitudes {
        Table::new("run", &AMPLITUDE_COLUMNS)
    } else {
        Table::new(
            "run",
            &["sample", "alpha", "beta", "success_prob", "failure_prob", "absorbed_prob", "other_prob", "fidelity"],
        )
    };
    table.meta("file", file.display());
    table.meta("seed", seed);
    bound_meta(&mut table, set)?;
    for l in transparent {
        circuit.layout.level(l)?;
    }
    for (i, a) in samples.iter().enumerate() {
        let mut spec = a.clone().with_transparent(transparent.iter().cloned());
        if absent {
            spec = spec.absent();
        }
        let out = circuit.run(&spec)?;
        if amplitudes {
            amplitude_rows(&mut table, i, a, &out.final_state, Some(AMPLITUDE_FLOOR));
        } else {
            let other: f64 =
                out.branches.iter().filter(|(l, _)| matches!(l, BranchLabel::Custom(_))).map(|(_, p)| p).sum();
            let [s, al, be] = atom_cells(i, a);
            table.push(vec![
                s,
                al,
                be,
                out.success_prob.into(),
                out.failure_prob.into(),
                out.absorbed_prob.into(),
                other.into(),
                out.success_fidelity.into(),
            ]);
        }
    }
    Ok(table)
}

fn emit(table: &Table, out: &OutArgs) -> CliResult<()> {
    let text = table.render(out.format);
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::MzSweep { n_min, n_max, atom, out } => {
            let (table, problem) = mz_sweep(n_min, n_max, &atom)?;
            emit(&table, &out)?;
            problem.map_or(Ok(()), |p| Err(Failure::Numerical(p)))
        }
        Command::Fp { r, t, r_prime, t_prime, eps, absent, atom, out } => {
            emit(&fp(r, t, r_prime, t_prime, eps, absent, &atom)?, &out)
        }
        Command::Direct { pol, atom, out } => emit(&direct(&pol, &atom)?, &out),
        Command::NogoCheck { file, set, mask, atom, out } => emit(&nogo_check(&file, &set, &mask, &atom)?, &out),
        Command::Run { file, set, absent, transparent, amplitudes, atom, out } => {
            emit(&run(&file, &set, absent, &transparent, amplitudes, &atom)?, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical check failed: {msg}");
            ExitCode::from(1)
        }
    }
}
