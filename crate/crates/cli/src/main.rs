use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use powersched::curve::Frontier;
use powersched::flow::{min_flow_for_energy, pinned_regime_bounds_at, schedule_for_tail_speed_with, FlowChain, FlowSolverConfig, RelationCheck};
use powersched::makespan::{energy_for_deadline, inc_merge};
use powersched::model::{InstanceFile, InstanceLoadError, ScheduleReport};
use powersched::multi::{
    cyclic_assign, multi_energy_for_deadline_equal_work, multi_flow_equal_work, multi_makespan_equal_work,
    partition_to_instance, solve_partition_via_schedule, PartitionInstance,
};
use powersched::oracle::OracleConfig;
use powersched::{Error, Instance, Schedule};
use serde::Serialize;

mod verify;

#[derive(Parser)]
#[command(name = "powersched", version, about = "Energy-aware scheduling under speed scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum-makespan schedule for an energy budget or a deadline.
    #[command(group(ArgGroup::new("target").required(true).args(["energy", "deadline"])))]
    Makespan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long)]
        deadline: Option<f64>,
    },
    /// Least energy whose optimal schedule meets a deadline.
    EnergyForDeadline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deadline: f64,
    },
    /// Samples of the energy/makespan frontier.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Minimum total flow for equal-work jobs under an energy budget.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        energy: f64,
        /// Relative tolerance on the budget.
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
    },
    /// Energy range over which a job completes exactly at the next release.
    PinnedRange {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 1000.0)]
        to: f64,
        /// 1-based job whose completion is tested (default: second to last).
        #[arg(long)]
        boundary: Option<usize>,
    },
    /// Decides Partition through the two-processor makespan reduction.
    PartitionDemo {
        /// Comma-separated positive integers.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-checks the solvers against the reference optimizers on random instances.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        max_jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::DegenerateRelease { .. }
            | Error::UnsupportedInstance(_)
            | Error::TooLarge { .. } => 2,
            Error::InfeasibleDeadline { .. } => 3,
            Error::Convergence { .. } => 4,
            Error::Internal(_) => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Instance::from_json_str(&text).map_err(|e| match e {
        InstanceLoadError::Json(_) => Failure::input(format!("{}: {e}", path.display())),
        InstanceLoadError::Invalid(inner) => inner.into(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    let fail = |e: io::Error| Failure {
        code: 1,
        message: format!("cannot write output: {e}"),
    };
    match out {
        Some(path) => fs::write(path, text).map_err(fail),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(fail),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn makespan_schedule(instance: &Instance, energy: f64) -> CliResult<Schedule> {
    Ok(if instance.processors() == 1 {
        inc_merge(instance, energy)?
    } else {
        multi_makespan_equal_work(instance, energy)?.schedule
    })
}

fn deadline_energy(instance: &Instance, deadline: f64) -> CliResult<f64> {
    Ok(if instance.processors() == 1 {
        energy_for_deadline(instance, deadline)?
    } else {
        multi_energy_for_deadline_equal_work(instance, deadline)?
    })
}

#[derive(Serialize)]
struct DeadlineEnergy {
    deadline: f64,
    energy: f64,
}

#[derive(Serialize)]
struct CurveJson<'a> {
    breakpoints: &'a [f64],
    points: Vec<powersched::curve::CurvePoint>,
}

#[derive(Serialize)]
struct FlowOutput {
    schedule: ScheduleReport,
    flow: f64,
    energy: f64,
    sigma_n: f64,
    chains: Vec<Vec<FlowChain>>,
    relations: Vec<Vec<RelationCheck>>,
    max_residual: f64,
}

#[derive(Serialize)]
struct PinnedRange {
    boundary: usize,
    window: (f64, f64),
    regime: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct PartitionDemo {
    multiset: Vec<u64>,
    instance: InstanceFile,
    budget: f64,
    target: f64,
    makespan: Option<f64>,
    decision: bool,
    witness: Option<(Vec<u64>, Vec<u64>)>,
}

fn flow(instance: &Instance, energy: f64, config: &FlowSolverConfig) -> CliResult<FlowOutput> {
    let (schedule, sigma_n, parts) = if instance.processors() == 1 {
        let sol = min_flow_for_energy(instance, energy, config)?;
        (sol.tail.schedule.clone(), sol.tail.sigma_n, vec![sol.tail])
    } else {
        let sol = multi_flow_equal_work(instance, energy, config)?;
        let assignment = cyclic_assign(instance.len(), instance.processors())?;
        let mut parts = Vec::new();
        for p in 1..=instance.processors() {
            let ids = assignment.jobs_on(instance, p);
            if !ids.is_empty() {
                parts.push(schedule_for_tail_speed_with(&instance.subset(&ids)?, sol.coupling, config)?);
            }
        }
        (sol.schedule, sol.coupling, parts)
    };
    let relations: Vec<Vec<RelationCheck>> = parts.iter().map(|t| t.relations()).collect();
    let max_residual = relations.iter().flatten().map(|r| r.residual).fold(0.0, f64::max);
    Ok(FlowOutput {
        flow: schedule.total_flow(),
        energy: schedule.total_energy(),
        schedule: ScheduleReport::from(&schedule),
        sigma_n,
        chains: parts.into_iter().map(|t| t.chains).collect(),
        relations,
        max_residual,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Makespan { common, energy, deadline } => {
            let instance = load(&common.instance)?;
            let energy = match (energy, deadline) {
                (Some(e), _) => e,
                (None, Some(t)) => deadline_energy(&instance, t)?,
                (None, None) => unreachable!("clap requires one target"),
            };
            let schedule = makespan_schedule(&instance, energy)?;
            emit(common.out.as_deref(), &to_json(&ScheduleReport::from(&schedule)))
        }
        Command::EnergyForDeadline { common, deadline } => {
            let instance = load(&common.instance)?;
            let energy = deadline_energy(&instance, deadline)?;
            emit(common.out.as_deref(), &to_json(&DeadlineEnergy { deadline, energy }))
        }
        Command::Curve {
            common,
            from,
            to,
            samples,
            format,
        } => {
            let instance = load(&common.instance)?;
            if instance.processors() != 1 {
                return Err(Failure::input("curve needs a uniprocessor instance"));
            }
            let frontier = Frontier::build(&instance)?;
            let points = frontier.sample(from, to, samples)?;
            let text = match format {
                Format::Json => to_json(&CurveJson {
                    breakpoints: frontier.breakpoints(),
                    points,
                }),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for p in &points {
                        w.serialize(p).map_err(|e| Failure::input(e.to_string()))?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| Failure::input(e.to_string()))?).expect("utf-8")
                }
            };
            emit(common.out.as_deref(), &text)
        }
        Command::Flow {
            common,
            energy,
            epsilon,
            max_iterations,
        } => {
            if !(epsilon > 0.0) {
                return Err(Failure::input("epsilon must be positive"));
            }
            let instance = load(&common.instance)?;
            let config = FlowSolverConfig {
                epsilon_energy: epsilon,
                max_iterations,
                ..FlowSolverConfig::default()
            };
            emit(common.out.as_deref(), &to_json(&flow(&instance, energy, &config)?))
        }
        Command::PinnedRange {
            common,
            from,
            to,
            boundary,
        } => {
            let instance = load(&common.instance)?;
            if instance.len() < 2 {
                return Err(Failure::input("pinned-range needs at least two jobs"));
            }
            let boundary = boundary.unwrap_or(instance.len() - 1);
            let regime = pinned_regime_bounds_at(&instance, boundary, (from, to), &FlowSolverConfig::default())?;
            emit(
                common.out.as_deref(),
                &to_json(&PinnedRange {
                    boundary,
                    window: (from, to),
                    regime,
                }),
            )
        }
        Command::PartitionDemo { values, alpha, out } => {
            let partition = PartitionInstance::new(values.clone())?;
            let (instance, budget, target) = partition_to_instance(&partition, alpha)?;
            let outcome = solve_partition_via_schedule(&partition, alpha, &OracleConfig::default())?;
            let demo = PartitionDemo {
                multiset: values,
                instance: InstanceFile::from(&instance),
                budget,
                target,
                makespan: outcome.makespan,
                decision: outcome.decision,
                witness: outcome.witness,
            };
            emit(out.as_deref(), &to_json(&demo))
        }
        Command::Verify {
            seed,
            instances,
            max_jobs,
            out,
        } => {
            if max_jobs == 0 || max_jobs > 12 {
                return Err(Failure::input("max-jobs must lie in 1..=12"));
            }
            let report = verify::run(seed, instances, max_jobs)?;
            emit(out.as_deref(), &to_json(&report))?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    message: "verification found disagreements".into(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
