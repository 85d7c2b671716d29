use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use sepconv::exec::{self, Strategy};
use sepconv::io;
use sepconv::kraus::{self, Which};
use sepconv::linalg::CMat;
use sepconv::locc;
use sepconv::random;
use sepconv::sep::{self, Verdict};
use sepconv::stabilizer;
use sepconv::tensor::{self, LocalOperator, PureState};

/// Batch checks for local-operator conversions of multipartite pure states.
///
/// Exit codes: 0 feasible/verified, 1 infeasible/refuted, 2 input error,
/// 3 inconclusive.
#[derive(Parser)]
#[command(name = "sepconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = sep::DEFAULT_TOL)]
    tol: f64,

    /// Parameter of the built-in examples.
    #[arg(long, global = true, default_value_t = 0.25)]
    a: f64,

    /// Sweep the example parameter, `lo:hi:step` (inclusive).
    #[arg(long, global = true)]
    a_sweep: Option<String>,

    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Decide invertible-Kraus convertibility by linear programming.
    CheckSep1 {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Verify a separable-map certificate.
    CheckWitness {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
    /// List Pauli elements whose trace condition fails.
    Obstruction {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Trace monotone for unitary stabilizers.
    TraceMonotone {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Build and check one of the explicit Kraus maps.
    VerifyExample {
        #[arg(long, default_value = "5q")]
        which: String,
    },
    /// Symmetries of a graph state.
    SymmetryAudit {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Enumerate the branches of a finite LOCC protocol.
    LoccRun {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    /// Branch produced by a local operator; random 3-qubit input when
    /// `--op` and `--state` are omitted.
    SingularBranch {
        #[arg(long, requires = "state")]
        op: Option<PathBuf>,
        #[arg(long, requires = "op")]
        state: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Feasible => Outcome::Pass,
            Verdict::Infeasible => Outcome::Fail,
            Verdict::Inconclusive => Outcome::Inconclusive,
        }
    }

    fn code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Inconclusive => 3,
        }
    }

    /// Worst of several results: refuted beats inconclusive beats pass.
    fn combine(items: impl IntoIterator<Item = Outcome>) -> Outcome {
        items
            .into_iter()
            .fold(Outcome::Pass, |acc, o| match (acc, o) {
                (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
                (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Outcome::Inconclusive,
                _ => Outcome::Pass,
            })
    }
}

#[derive(Serialize)]
struct SweepEntry<T> {
    a: f64,
    report: T,
}

fn parse_sweep(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad sweep {spec:?}"))?;
    let [lo, hi, step] = parts[..] else {
        bail!("sweep must be lo:hi:step, got {spec:?}");
    };
    let valid = step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite();
    if !valid {
        bail!("sweep needs lo <= hi and step > 0, got {spec:?}");
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        bail!("sweep has too many points");
    }
    Ok((0..=count).map(|i| lo + step * i as f64).collect())
}

fn parameters(cli: &Cli) -> anyhow::Result<Option<Vec<f64>>> {
    cli.a_sweep.as_deref().map(parse_sweep).transpose()
}

fn read(path: &Path) -> anyhow::Result<serde_json::Value> {
    io::read_json(path).with_context(|| format!("reading {}", path.display()))
}

fn emit<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Run `f` once, or over the sweep in parallel with results in input order.
fn single_or_sweep<T, F>(cli: &Cli, f: F) -> anyhow::Result<Outcome>
where
    T: Serialize + Send,
    F: Fn(f64) -> anyhow::Result<(T, Outcome)> + Sync,
{
    match parameters(cli)? {
        None => {
            let (report, outcome) = f(cli.a)?;
            emit(&report)?;
            Ok(outcome)
        }
        Some(values) => {
            let results = exec::map(Strategy::default(), &values, |&a| f(a));
            let mut entries = Vec::with_capacity(values.len());
            let mut outcomes = Vec::with_capacity(values.len());
            for (a, r) in values.iter().zip(results) {
                let (report, outcome) = r.with_context(|| format!("at a = {a}"))?;
                entries.push(SweepEntry { a: *a, report });
                outcomes.push(outcome);
            }
            emit(&entries)?;
            Ok(Outcome::combine(outcomes))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let tol = cli.tol;
    if tol.is_nan() || tol <= 0.0 {
        bail!("--tol must be positive");
    }
    match &cli.command {
        Command::CheckSep1 { instance } => {
            let value = read(instance)?;
            single_or_sweep(cli, |a| {
                let inst = io::instance_from_value(value.clone(), a)?;
                let report = sep::sep1_feasible(&inst, tol)?;
                let outcome = Outcome::from_verdict(report.verdict);
                Ok((report, outcome))
            })
        }
        Command::CheckWitness { instance, witness } => {
            let inst = io::instance_from_value(read(instance)?, cli.a)?;
            let w = io::witness_from_value(read(witness)?)?;
            let report = sep::sep_witness_check(&inst, &w, tol)?;
            emit(&report)?;
            Ok(Outcome::from_verdict(report.verdict))
        }
        Command::Obstruction { instance } => {
            let value = read(instance)?;
            single_or_sweep(cli, |a| {
                let inst = io::instance_from_value(value.clone(), a)?;
                let Some(group) = &inst.pauli_group else {
                    bail!("obstruction needs symmetries given as Pauli generators or a graph");
                };
                let found = sep::pauli_trace_obstruction(
                    &inst.h_matrix(),
                    group,
                    inst.r(),
                    &inst.g_matrix(),
                    tol,
                )?;
                let outcome = Outcome::from_bool(found.is_empty());
                Ok((
                    ObstructionReport {
                        r: inst.r(),
                        obstruction: found,
                    },
                    outcome,
                ))
            })
        }
        Command::TraceMonotone { instance } => {
            let value = read(instance)?;
            single_or_sweep(cli, |a| {
                let inst = io::instance_from_value(value.clone(), a)?;
                let report = sep::trace_monotone_check(&inst, tol)?;
                let outcome = Outcome::from_bool(report.necessary_condition_holds);
                Ok((report, outcome))
            })
        }
        Command::VerifyExample { which } => {
            let which: Which = which.parse()?;
            single_or_sweep(cli, |a| {
                let report = kraus::verify_example(which, a, tol)?;
                let outcome = Outcome::from_bool(report.verified);
                Ok((report, outcome))
            })
        }
        Command::SymmetryAudit { graph } => {
            let g = io::graph_from_value(read(graph)?)?;
            let report = stabilizer::symmetry_audit(&g, Strategy::default())?;
            emit(&report)?;
            Ok(Outcome::from_bool(report.passed()))
        }
        Command::LoccRun { protocol, state } => {
            let psi = io::state_from_value(read(state)?)?;
            let proto = io::protocol_from_value(read(protocol)?, psi.dims().to_vec())?;
            let branches = locc::run_protocol(&proto, &psi)?;
            let total = branches.iter().map(|b| b.probability).sum();
            let records = branches
                .into_iter()
                .map(|b| {
                    let fully_entangled = match &b.state {
                        Some(s) => Some(tensor::is_fully_entangled(s, tensor::RANK_TOL)?),
                        None => None,
                    };
                    Ok(BranchOut {
                        path: b.path.iter().map(|i| i + 1).collect(),
                        probability: b.probability,
                        fully_entangled,
                        state: b.state,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            emit(&LoccReport {
                total_probability: total,
                branches: records,
            })?;
            Ok(Outcome::Pass)
        }
        Command::SingularBranch { op, state } => {
            let (op, psi) = match (op, state) {
                (Some(op), Some(state)) => (
                    io::operator_from_value(read(op)?)?,
                    io::state_from_value(read(state)?)?,
                ),
                _ => random_singular_input(cli.seed),
            };
            let report = locc::singular_branch_analysis(&op, &psi)?;
            emit(&report)?;
            Ok(Outcome::from_bool(report.lemma_holds != Some(false)))
        }
    }
}

fn random_singular_input(seed: u64) -> (LocalOperator, PureState) {
    let mut rng = random::rng(seed);
    let dims = [2usize; 3];
    let psi = random::random_fully_entangled_state(&dims, &mut rng);
    let site = (seed % 3) as usize;
    let factors: Vec<CMat> = (0..3)
        .map(|k| {
            if k == site {
                random::random_rank_deficient(2, &mut rng)
            } else {
                random::random_matrix(2, &mut rng)
            }
        })
        .collect();
    (LocalOperator::new(factors).expect("2x2 factors"), psi)
}

#[derive(Serialize)]
struct ObstructionReport {
    r: f64,
    obstruction: Vec<(stabilizer::PauliString, sepconv::C64)>,
}

#[derive(Serialize)]
struct BranchOut {
    /// 1-based outcome indices.
    path: Vec<usize>,
    probability: f64,
    fully_entangled: Option<bool>,
    state: Option<PureState>,
}

#[derive(Serialize)]
struct LoccReport {
    total_probability: f64,
    branches: Vec<BranchOut>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
