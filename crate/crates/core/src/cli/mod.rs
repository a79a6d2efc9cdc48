//! Command-line front end. [`run_command`] parses arguments, runs one
//! analysis and renders a report; `main` only prints it.
//!
//! Exit codes: 0 when the property holds or a search finished, 1 when it is
//! refuted (the report carries the witness), 2 on usage or input errors.

mod files;

pub use files::{parse_circuit_file, parse_state_file, parse_unitaries_file, write_circuit_file, CircuitFile};

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bits::{BitString, QubitSet};
use crate::circuits::{apply_circuit, check_clean_simulation, check_weak_parity, CleanTarget, QacCircuit};
use crate::constructions::{
    check_appendix_b, generate_appendix_b_instance, kill_parity_depth2, kill_parity_state_n, refute_depth1,
    AppendixBCase, AppendixBValues, Depth1Outcome,
};
use crate::entanglement::{entanglement_lemma_check, s_separability, simplify_status, SimplifyStatus};
use crate::error::{QacError, Result};
use crate::linalg::random_unitary_haar;
use crate::search::{optimize_depth2, sweep_topologies, SearchOptions, Topology};
use crate::state::{QuantumState, C64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "qaclab", version, about = "Exact state-vector analysis of QAC circuits")]
struct Cli {
    /// Numerical tolerance for every check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for random generation and search restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the full JSON report instead of a one-line summary.
    #[arg(long, global = true)]
    json: bool,
    /// Search only: score outputs up to a per-input phase.
    #[arg(long, global = true)]
    phase_free: bool,
    /// Search only: random restarts per topology.
    #[arg(long, global = true, default_value_t = 20)]
    restarts: usize,
    /// Search only: optimizer iterations per restart.
    #[arg(long, global = true, default_value_t = 1000)]
    budget_iters: usize,
    /// Include wall-clock times in the report.
    #[arg(long, global = true)]
    timing: bool,
    /// Sweep only: enumerate even past the topology-count guard.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a circuit on a classical input (ancillas start in |0⟩).
    Simulate {
        circuit: PathBuf,
        /// Bits for the n inputs or for all m qubits; defaults to all zeros.
        #[arg(long)]
        input: Option<String>,
    },
    /// Check that a circuit cleanly simulates a gate on its inputs.
    CheckClean {
        circuit: PathBuf,
        /// parity, fanout or toffoli.
        #[arg(long, default_value = "parity", conflicts_with = "unitary")]
        target: String,
        /// File holding one explicit 2^n × 2^n target unitary.
        #[arg(long)]
        unitary: Option<PathBuf>,
    },
    /// Check that qubit 1 ends in |⊕x⟩ for every input, given an ancilla state.
    CheckWeak {
        circuit: PathBuf,
        /// State file for the m − n ancillas; defaults to |0…0⟩.
        #[arg(long)]
        ancilla: Option<PathBuf>,
    },
    /// Decide whether a state is S-separable.
    Separability {
        state: PathBuf,
        #[arg(long = "set", value_parser = parse_set)]
        s: QubitSet,
    },
    /// Classify what G_η(S) reduces to on a state.
    Simplify {
        state: PathBuf,
        #[arg(long = "set", value_parser = parse_set)]
        s: QubitSet,
        #[arg(long, default_value = "-1", value_parser = parse_eta, allow_hyphen_values = true)]
        eta: C64,
    },
    /// Check that ψ or G_η(S)ψ is S-entangled, or that the gate simplifies.
    LemmaEntanglement {
        state: PathBuf,
        #[arg(long = "set", value_parser = parse_set)]
        s: QubitSet,
        #[arg(long, default_value = "-1", value_parser = parse_eta, allow_hyphen_values = true)]
        eta: C64,
    },
    /// Build a pure-parity state with no |1…1⟩ weight after each unitary prefix.
    KillParity {
        /// Unitaries file (list of matrices).
        #[arg(required_unless_present_any = ["haar", "circuit"])]
        unitaries: Option<PathBuf>,
        /// Use K seeded Haar-random unitaries instead of a file.
        #[arg(long, requires = "qubits", conflicts_with_all = ["unitaries", "circuit"])]
        haar: Option<usize>,
        /// Register size for --haar.
        #[arg(long)]
        qubits: Option<usize>,
        /// Depth-2 circuit; builds the killer on --triple and checks both shared gates turn off.
        #[arg(long, requires = "triple", conflicts_with = "unitaries")]
        circuit: Option<PathBuf>,
        /// Three qubits of --circuit, e.g. 1,2,3.
        #[arg(long, value_parser = parse_triple)]
        triple: Option<[usize; 3]>,
        /// Parity of the killer state.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        parity: u8,
    },
    /// Produce a witness that a depth-1 circuit does not compute parity.
    RefuteDepth1 { circuit: PathBuf },
    /// Check an amplitude equation system (file or generated).
    AppendixB {
        #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
        values: Option<PathBuf>,
        /// Generate a satisfying instance: 4, 3 or 2 (sets).
        #[arg(long)]
        generate: Option<AppendixBCase>,
    },
    /// Search one two-layer topology for a clean parity simulator.
    SearchDepth2 {
        /// Supports per layer, e.g. "1,2,3|1,2,3" (';' separates gates).
        #[arg(long)]
        topology: Topology,
        #[arg(long)]
        inputs: usize,
        /// Total qubits; defaults to the largest label in the topology or --inputs.
        #[arg(long)]
        qubits: Option<usize>,
    },
    /// Search every canonical connected two-layer topology.
    Sweep {
        #[arg(long)]
        inputs: usize,
        #[arg(long)]
        max_qubits: usize,
    },
}

fn parse_set(s: &str) -> std::result::Result<QubitSet, String> {
    let labels = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if labels.contains(&0) {
        return Err("labels are 1-based".into());
    }
    QubitSet::from_labels(labels).map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> std::result::Result<[usize; 3], String> {
    let v = parse_set(s)?.to_vec();
    v.try_into().map_err(|_| format!("expected three distinct qubits, got {s:?}"))
}

/// Radians as a float or a multiple of pi: `1.2`, `pi/3`, `-2pi/3`, `2*pi`.
fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let Some(at) = s.find("pi") else {
        return s.parse().map_err(|e| format!("angle {s:?}: {e}"));
    };
    let coef = s[..at].trim_end_matches('*').trim();
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|e| format!("angle {s:?}: {e}"))?,
    };
    let rest = s[at + 2..].trim();
    let div = match rest.strip_prefix('/') {
        Some(d) => d.trim().parse::<f64>().map_err(|e| format!("angle {s:?}: {e}"))?,
        None if rest.is_empty() => 1.0,
        None => return Err(format!("angle {s:?}: trailing {rest:?}")),
    };
    Ok(coef * PI / div)
}

/// `-1`, `i`, `-i`, `re,im`, or `exp:ANGLE` for `e^{i·ANGLE}`.
fn parse_eta(s: &str) -> std::result::Result<C64, String> {
    let s = s.trim();
    if let Some(angle) = s.strip_prefix("exp:") {
        return Ok(C64::from_polar(1.0, parse_angle(angle)?));
    }
    match s {
        "i" => return Ok(C64::new(0.0, 1.0)),
        "-i" => return Ok(C64::new(0.0, -1.0)),
        _ => {}
    }
    if let Some((re, im)) = s.split_once(',') {
        let re = re.trim().parse().map_err(|e| format!("eta {s:?}: {e}"))?;
        let im = im.trim().parse().map_err(|e| format!("eta {s:?}: {e}"))?;
        return Ok(C64::new(re, im));
    }
    s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|e| format!("eta {s:?}: {e}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    Refuted,
    Completed,
    NotApplicable,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified | Verdict::Completed | Verdict::NotApplicable => 0,
            Verdict::Refuted => 1,
            Verdict::Error => 2,
        }
    }
}

/// Exit code plus what goes to standard output and standard error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Outcome {
    verdict: Verdict,
    summary: String,
    seed: Option<u64>,
    result: Value,
}

#[derive(Serialize)]
struct Report<'a> {
    schema: u32,
    command: &'a str,
    /// SHA-256 of each input file, keyed by role.
    inputs: &'a BTreeMap<String, String>,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    verdict: Verdict,
    summary: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct Context {
    tol: f64,
    seed: u64,
    inputs: BTreeMap<String, String>,
}

impl Context {
    fn read(&mut self, role: &str, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path)
            .map_err(|e| QacError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(role.to_string(), hex::encode(Sha256::digest(&bytes)));
        String::from_utf8(bytes).map_err(|e| QacError::Parse { context: path.display().to_string(), message: e.to_string() })
    }

    fn circuit(&mut self, path: &Path) -> Result<QacCircuit> {
        parse_circuit_file(&self.read("circuit", path)?)
    }

    fn state(&mut self, role: &str, path: &Path) -> Result<QuantumState> {
        parse_state_file(&self.read(role, path)?)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Verified
    } else {
        Verdict::Refuted
    }
}

/// Parses `argv` (including the program name), runs the command and renders
/// its report.
pub fn run_command<I, T>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandOutput { code: 0, stdout: text, stderr: String::new() },
                _ => CommandOutput { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    let name = command_name(&cli.command);
    let mut ctx = Context { tol: cli.tol, seed: cli.seed, inputs: BTreeMap::new() };
    let start = Instant::now();
    let outcome = if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        Err(QacError::InvalidArgument(format!("--tol must be positive, got {}", cli.tol)))
    } else if cli.phase_free && !matches!(cli.command, Command::SearchDepth2 { .. } | Command::Sweep { .. }) {
        Err(QacError::InvalidArgument("--phase-free applies only to search-depth2 and sweep".into()))
    } else {
        dispatch(&cli, &mut ctx)
    };
    let wall = cli.timing.then(|| start.elapsed().as_secs_f64());
    match outcome {
        Ok(o) => {
            let report = Report {
                schema: SCHEMA_VERSION,
                command: name,
                inputs: &ctx.inputs,
                tolerance: cli.tol,
                seed: o.seed,
                verdict: o.verdict,
                summary: &o.summary,
                wall_time_secs: wall,
                result: Some(&o.result),
                error: None,
            };
            let stdout = if cli.json { render(&report) } else { format!("{name}: {:?}: {}\n", o.verdict, o.summary) };
            CommandOutput { code: o.verdict.exit_code(), stdout, stderr: String::new() }
        }
        Err(e) => {
            let message = e.to_string();
            let stdout = if cli.json {
                render(&Report {
                    schema: SCHEMA_VERSION,
                    command: name,
                    inputs: &ctx.inputs,
                    tolerance: cli.tol,
                    seed: None,
                    verdict: Verdict::Error,
                    summary: "input rejected",
                    wall_time_secs: None,
                    result: None,
                    error: Some(message.clone()),
                })
            } else {
                String::new()
            };
            CommandOutput { code: 2, stdout, stderr: format!("error: {message}\n") }
        }
    }
}

fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::CheckClean { .. } => "check-clean",
        Command::CheckWeak { .. } => "check-weak",
        Command::Separability { .. } => "separability",
        Command::Simplify { .. } => "simplify",
        Command::LemmaEntanglement { .. } => "lemma-entanglement",
        Command::KillParity { .. } => "kill-parity",
        Command::RefuteDepth1 { .. } => "refute-depth1",
        Command::AppendixB { .. } => "appendix-b",
        Command::SearchDepth2 { .. } => "search-depth2",
        Command::Sweep { .. } => "sweep",
    }
}

fn dispatch(cli: &Cli, ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.tol;
    let search = SearchOptions { restarts: cli.restarts, seed: cli.seed, budget_iters: cli.budget_iters, phase_free: cli.phase_free };
    match &cli.command {
        Command::Simulate { circuit, input } => {
            let c = ctx.circuit(circuit)?;
            let bits = input.clone().unwrap_or_else(|| "0".repeat(c.inputs));
            let x = BitString::parse(&bits)?;
            let width = x.domain().len();
            if width != c.inputs && width != c.qubits {
                return Err(QacError::InvalidArgument(format!(
                    "--input has {width} bits; expected {} (inputs) or {} (all qubits)",
                    c.inputs, c.qubits
                )));
            }
            let full = format!("{bits}{}", "0".repeat(c.qubits - width));
            let out = apply_circuit(&c, &QuantumState::from_bits(&full)?)?;
            let summary = format!("simulated input {full} on {} qubits", c.qubits);
            Ok(Outcome { verdict: Verdict::Completed, summary, seed: None, result: json!({ "input": full, "output": to_value(&out) }) })
        }
        Command::CheckClean { circuit, target, unitary } => {
            let c = ctx.circuit(circuit)?;
            let target = match unitary {
                Some(path) => {
                    let mut us = parse_unitaries_file(&ctx.read("unitary", path)?)?;
                    if us.len() != 1 {
                        return Err(QacError::InvalidArgument(format!("--unitary file holds {} matrices, expected 1", us.len())));
                    }
                    CleanTarget::Unitary(us.remove(0))
                }
                None => match target.as_str() {
                    "parity" => CleanTarget::Parity,
                    "fanout" => CleanTarget::Fanout,
                    "toffoli" => CleanTarget::Toffoli,
                    other => return Err(QacError::InvalidArgument(format!("unknown target {other:?}"))),
                },
            };
            let r = check_clean_simulation(&c, &target, tol)?;
            let summary = format!("max distance {:.3e} (worst input {})", r.max_distance, r.worst_input);
            Ok(Outcome { verdict: verdict_of(r.passed), summary, seed: None, result: to_value(&r) })
        }
        Command::CheckWeak { circuit, ancilla } => {
            let c = ctx.circuit(circuit)?;
            let anc = ancilla.as_ref().map(|p| ctx.state("ancilla", p)).transpose()?;
            let r = check_weak_parity(&c, anc.as_ref(), tol)?;
            let summary = format!("max leakage {:.3e} (worst input {})", r.max_leakage, r.worst_input);
            Ok(Outcome { verdict: verdict_of(r.passed), summary, seed: None, result: to_value(&r) })
        }
        Command::Separability { state, s } => {
            let psi = ctx.state("state", state)?;
            let r = s_separability(&psi, *s, tol)?;
            let summary = match &r.witness {
                Some(w) => format!("{s}-separable across {} | {}", w.part_a, w.part_b),
                None => format!("{s}-entangled across all {} splitting bipartitions", r.evidence.len()),
            };
            Ok(Outcome { verdict: verdict_of(r.separable), summary, seed: None, result: to_value(&r) })
        }
        Command::Simplify { state, s, eta } => {
            let psi = ctx.state("state", state)?;
            let status = simplify_status(&psi, *s, *eta, tol)?;
            let summary = match &status {
                SimplifyStatus::Disappears => "gate disappears".to_string(),
                SimplifyStatus::SimplifiesTo { t } => format!("gate simplifies to {t}"),
                SimplifyStatus::NoSimplify => "gate does not simplify".to_string(),
            };
            Ok(Outcome { verdict: Verdict::Completed, summary, seed: None, result: to_value(&status) })
        }
        Command::LemmaEntanglement { state, s, eta } => {
            let psi = ctx.state("state", state)?;
            let r = entanglement_lemma_check(&psi, *s, *eta, tol)?;
            let summary = format!(
                "psi entangled: {}, phi entangled: {}, simplifies: {}",
                r.psi_entangled, r.phi_entangled, r.simplifies
            );
            Ok(Outcome { verdict: verdict_of(r.holds), summary, seed: None, result: to_value(&r) })
        }
        Command::KillParity { unitaries, haar, qubits, circuit, triple, parity } => {
            if let (Some(path), Some(triple)) = (circuit, triple) {
                let c = ctx.circuit(path)?;
                let k = kill_parity_depth2(&c, *triple, *parity, tol)?;
                let summary = format!(
                    "turn-off {:.3e} / {:.3e} over {} completions",
                    k.layer1_turn_off, k.layer2_turn_off, k.completions_checked
                );
                return Ok(Outcome { verdict: verdict_of(k.verified), summary, seed: None, result: to_value(&k) });
            }
            let (n, us, seed) = match (unitaries, haar) {
                (_, Some(k)) => {
                    let n = qubits.expect("clap enforces --qubits with --haar");
                    if n == 0 || n > 12 {
                        return Err(QacError::InvalidArgument(format!("--qubits must be in 1..=12, got {n}")));
                    }
                    let us = (0..*k as u64)
                        .map(|i| random_unitary_haar(1 << n, ctx.seed.wrapping_add(i)))
                        .collect::<Result<Vec<_>>>()?;
                    (n, us, Some(ctx.seed))
                }
                (Some(path), None) => {
                    let us = parse_unitaries_file(&ctx.read("unitaries", path)?)?;
                    let dim = us.first().map(|u| u.nrows()).ok_or_else(|| QacError::InvalidArgument("no unitaries given".into()))?;
                    if !dim.is_power_of_two() || dim < 2 {
                        return Err(QacError::InvalidArgument(format!("dimension {dim} is not a power of two")));
                    }
                    (dim.trailing_zeros() as usize, us, None)
                }
                (None, None) => unreachable!("clap requires a unitary source"),
            };
            let cert = kill_parity_state_n(n, &us, *parity, tol)?;
            let summary = format!(
                "max residual {:.3e}, parity leakage {:.3e}, null space dim {}",
                cert.max_residual(),
                cert.parity_leakage,
                cert.null_space_dim
            );
            Ok(Outcome { verdict: verdict_of(cert.verified()), summary, seed, result: to_value(&cert) })
        }
        Command::RefuteDepth1 { circuit } => {
            let c = ctx.circuit(circuit)?;
            match refute_depth1(&c, tol)? {
                Depth1Outcome::NotApplicable { reason } => {
                    let result = to_value(&Depth1Outcome::NotApplicable { reason: reason.clone() });
                    Ok(Outcome { verdict: Verdict::NotApplicable, summary: reason, seed: None, result })
                }
                out @ Depth1Outcome::Refuted(_) => {
                    let Depth1Outcome::Refuted(w) = &out else { unreachable!() };
                    let verified = w.verified();
                    let summary = if verified {
                        "qubit 1 is blind to an input; parity not computed".to_string()
                    } else {
                        "witness did not verify at this tolerance".to_string()
                    };
                    // An unverified witness refutes nothing.
                    let verdict = if verified { Verdict::Refuted } else { Verdict::Completed };
                    Ok(Outcome { verdict, summary, seed: None, result: to_value(&out) })
                }
            }
        }
        Command::AppendixB { values, generate } => {
            let (v, seed) = match (values, generate) {
                (_, Some(case)) => (generate_appendix_b_instance(*case, ctx.seed), Some(ctx.seed)),
                (Some(path), None) => {
                    let text = ctx.read("values", path)?;
                    let v: AppendixBValues = serde_json::from_str(&text).map_err(|e| QacError::Parse {
                        context: format!("{} line {} column {}", path.display(), e.line(), e.column()),
                        message: e.to_string(),
                    })?;
                    (v, None)
                }
                (None, None) => unreachable!("clap requires --values or --generate"),
            };
            let r = check_appendix_b(&v, tol)?;
            let ok = r.hypotheses_ok && r.applicable && r.conclusion_ok;
            let failing: Vec<&str> =
                r.hypotheses.iter().chain(&r.conclusions).filter(|x| !(x.value < tol)).map(|x| x.label.as_str()).collect();
            let summary = if ok {
                "hypotheses and conclusions hold".to_string()
            } else if !r.applicable {
                "corner amplitudes vanish; system not applicable".to_string()
            } else {
                format!("failing: {}", failing.join(", "))
            };
            Ok(Outcome { verdict: verdict_of(ok), summary, seed, result: json!({ "values": to_value(&v), "check": to_value(&r) }) })
        }
        Command::SearchDepth2 { topology, inputs, qubits } => {
            let m = qubits.unwrap_or_else(|| topology.max_label().unwrap_or(0).max(*inputs));
            let mut report = optimize_depth2(topology, *inputs, m, &search)?;
            if !cli.timing {
                report.wall_time_secs = None;
            }
            let circuit = report.best_circuit();
            let check = check_clean_simulation(&circuit, &CleanTarget::Parity, tol)?;
            let summary = format!(
                "best loss {:.3e} over {} restarts; clean check at tol {:e}: {}",
                report.best_loss,
                report.restarts.len(),
                tol,
                if check.passed { "passed" } else { "failed" }
            );
            let result = json!({
                "search": to_value(&report),
                "best_circuit": to_value(&CircuitFile::from(&circuit)),
                "clean_check": to_value(&check),
            });
            Ok(Outcome { verdict: Verdict::Completed, summary, seed: Some(ctx.seed), result })
        }
        Command::Sweep { inputs, max_qubits } => {
            let mut sweep = sweep_topologies(*inputs, *max_qubits, &search, cli.force)?;
            if !cli.timing {
                sweep = sweep.without_timing();
            }
            let mut summary = format!("best loss {:.3e} over {} topologies", sweep.best_loss, sweep.topologies);
            if let Some(note) = &sweep.interpretation {
                summary = format!("{summary}; {note}");
            }
            Ok(Outcome { verdict: Verdict::Completed, summary, seed: Some(ctx.seed), result: to_value(&sweep) })
        }
    }
}
