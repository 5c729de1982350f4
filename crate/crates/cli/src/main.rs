use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sbatch::bench::{self, BenchConfig, Report};
use sbatch::genins::{self, GenSpec, SuiteConfig};
use sbatch::milp::{self, Assignment, Model};
use sbatch::oracle::{enumerate_optimal, OracleError, DEFAULT_JOB_CAP};
use sbatch::schedule::ScheduleDoc;
use sbatch::solver::{solve, ModelVariant, SolveError, SolveStatus, SolverConfig};
use sbatch::{validate_instance, Availability, Initiation, Instance, Preemption, Rational, Scalar, Schedule, VariationConfig};

/// Serial-batch scheduling: generate, solve, verify, export and benchmark.
#[derive(Parser)]
#[command(name = "sbatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance or a whole suite.
    Gen(GenArgs),
    /// Solve an instance and print the result as JSON.
    Solve(SolveArgs),
    /// Enumerate every schedule of a tiny instance and print the optimum.
    Oracle(OracleArgs),
    /// Write the RP or PA model of an instance in LP format.
    Encode(EncodeArgs),
    /// Check a variable assignment against an LP model.
    Check(CheckArgs),
    /// Run solver configurations over a suite directory and write CSV reports.
    Bench(BenchArgs),
    /// Render a schedule as SVG.
    Gantt(GanttArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AvailabilityArg {
    Item,
    Batch,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitiationArg {
    Flexible,
    Complete,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formulation {
    Rp,
    Pa,
}

#[derive(Args)]
struct VariationArgs {
    #[arg(long, value_enum, default_value = "item")]
    availability: AvailabilityArg,
    /// Whether idle time may occur inside a batch.
    #[arg(long, value_enum, default_value = "on")]
    preemption: Switch,
    #[arg(long, value_enum, default_value = "flexible")]
    initiation: InitiationArg,
    /// Ignore minimum and maximum batch sizes.
    #[arg(long)]
    no_sizing: bool,
}

impl VariationArgs {
    fn variation(&self) -> VariationConfig {
        VariationConfig::new(
            match self.availability {
                AvailabilityArg::Item => Availability::Item,
                AvailabilityArg::Batch => Availability::Batch,
            },
            match self.preemption {
                Switch::On => Preemption::Allowed,
                Switch::Off => Preemption::Forbidden,
            },
            match self.initiation {
                InitiationArg::Flexible => Initiation::Flexible,
                InitiationArg::Complete => Initiation::Complete,
            },
        )
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 15)]
    jobs: usize,
    #[arg(long, default_value_t = 2)]
    families: usize,
    #[arg(long, default_value_t = 2)]
    machines: usize,
    /// Setup time scale.
    #[arg(long, default_value_t = 20)]
    scale: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Node budget of the sizing-free solve that draws minimum batch sizes.
    #[arg(long, default_value_t = 20_000)]
    core_nodes: u64,
    /// Keep minimum batch sizes at 1.
    #[arg(long)]
    no_min_batch: bool,
    /// Generate the full class grid into this directory instead.
    #[arg(long, value_name = "DIR")]
    suite: Option<PathBuf>,
    /// Instances per class and scale in suite mode.
    #[arg(long, default_value_t = 3)]
    per_class: usize,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "ia")]
    model: ModelVariant,
    #[command(flatten)]
    variation: VariationArgs,
    /// Batch-label symmetry breaking.
    #[arg(long)]
    sb: bool,
    /// Release-ordered jobs inside batches (batch availability with complete initiation).
    #[arg(long)]
    sbt: bool,
    #[arg(long, default_value = "10s", value_parser = humantime::parse_duration)]
    time_limit: Duration,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SBATCH_WORKERS", default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[command(flatten)]
    variation: VariationArgs,
    #[arg(long, default_value_t = DEFAULT_JOB_CAP)]
    cap: usize,
}

#[derive(Args)]
struct EncodeArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "rp")]
    formulation: Formulation,
    /// Big-M constant; derived from the instance when omitted.
    #[arg(long)]
    big_k: Option<i64>,
    /// Also translate this schedule into an assignment.
    #[arg(long, requires = "assignment_out")]
    schedule: Option<PathBuf>,
    #[arg(long, requires = "schedule")]
    assignment_out: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    /// JSON object of variable values, numbers or strings such as "7/2".
    assignment: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    suite: PathBuf,
    /// Comma-separated configs such as ia-IPF,h-BPC-sb-sbt.
    #[arg(long, value_delimiter = ',', default_value = "ia-IPF,g-IPF,h-IPF")]
    configs: Vec<String>,
    #[arg(long, default_value = "10s", value_parser = humantime::parse_duration)]
    time_limit: Duration,
    /// Spacing of improvement-curve samples.
    #[arg(long, default_value = "1s", value_parser = humantime::parse_duration)]
    sample: Duration,
    #[arg(long, env = "SBATCH_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(short, long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct GanttArgs {
    instance: PathBuf,
    /// Schedule JSON, or the output of `solve`.
    schedule: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Bad input exits 1, anything else 2.
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome = Result<ExitCode, Failure>;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)
}

/// Prints to standard output, ignoring a closed pipe.
fn say(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(internal),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?)
        .with_context(|| format!("parsing instance {}", path.display()))
        .map_err(input)
}

fn load_schedule(inst: &Instance, path: &Path) -> Result<Schedule, Failure> {
    let value: serde_json::Value = serde_json::from_str(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(input)?;
    let value = match value {
        serde_json::Value::Object(mut o) if o.contains_key("schedule") => o.remove("schedule").unwrap_or_default(),
        v => v,
    };
    let doc: ScheduleDoc = serde_json::from_value(value)
        .with_context(|| format!("parsing schedule {}", path.display()))
        .map_err(input)?;
    Ok(Schedule::from_doc(inst, doc))
}

fn require_valid(inst: &Instance) -> Result<(), Failure> {
    let v = validate_instance(inst);
    if v.is_empty() {
        return Ok(());
    }
    let text: Vec<String> = v.iter().map(|v| v.to_string()).collect();
    Err(input(anyhow!("invalid instance: {}", text.join("; "))))
}

fn cmd_gen(a: GenArgs) -> Outcome {
    if let Some(dir) = a.suite {
        let cfg = SuiteConfig {
            per_class: a.per_class,
            core_nodes: (!a.no_min_batch).then_some(a.core_nodes),
            ..SuiteConfig::desk(a.seed)
        };
        let suite = genins::gen_suite(&cfg).map_err(internal)?;
        genins::write_suite(&suite, &dir)
            .with_context(|| format!("writing suite to {}", dir.display()))
            .map_err(internal)?;
        say(&format!(
            "{} instances in {} (manifest sha256 {})",
            suite.instances.len(),
            dir.display(),
            suite.manifest.sha256()
        ));
        return Ok(ExitCode::SUCCESS);
    }
    let spec = GenSpec {
        num_jobs: a.jobs,
        num_families: a.families,
        num_machines: a.machines,
        setup_scale: a.scale,
        seed: a.seed,
    };
    let mut rng = genins::rng_from_seed(a.seed);
    let mut inst = genins::gen_instance(&spec, &mut rng).map_err(|e| match e {
        genins::GenError::InvalidSpec(_) => input(e),
        _ => internal(e),
    })?;
    if !a.no_min_batch {
        inst = inst.with_bounds(genins::derive_min_batch_sizes(&inst, &mut rng, a.core_nodes).map_err(internal)?);
    }
    emit(a.out.as_deref(), &inst.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let cfg = SolverConfig {
        model_variant: a.model,
        variation: a.variation.variation(),
        sizing_enabled: !a.variation.no_sizing,
        sb: a.sb,
        sbt: a.sbt,
        time_limit: a.time_limit,
        node_limit: a.node_limit,
        seed: a.seed,
        workers: a.workers,
    };
    let res = match solve(&inst, &cfg) {
        Ok(r) => r,
        Err(e @ (SolveError::InvalidInstance(_) | SolveError::InvalidConfig(_) | SolveError::InfeasibleInstance { .. })) => {
            return Err(input(e))
        }
    };
    say(&serde_json::to_string_pretty(&res.to_json()).map_err(internal)?);
    Ok(if res.status == SolveStatus::Infeasible {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_oracle(a: OracleArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    match enumerate_optimal(&inst, a.variation.variation(), !a.variation.no_sizing, a.cap) {
        Ok((objective, sched)) => {
            let out = serde_json::json!({ "objective": objective, "schedule": sched.to_doc() });
            say(&serde_json::to_string_pretty(&out).map_err(internal)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(OracleError::Infeasible) => {
            say(&serde_json::json!({ "objective": null, "schedule": null }).to_string());
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(input(e)),
    }
}

fn cmd_encode(a: EncodeArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    require_valid(&inst)?;
    let k = a.big_k.unwrap_or_else(|| milp::default_big_k(&inst));
    let model: Model<Rational> = match a.formulation {
        Formulation::Rp => milp::encode_rp(&inst, k),
        Formulation::Pa => milp::encode_pa(&inst, k),
    };
    emit(a.out.as_deref(), &milp::write_lp(&model))?;
    if let (Some(sched_path), Some(out)) = (a.schedule, a.assignment_out) {
        let sched = load_schedule(&inst, &sched_path)?;
        let assignment = match a.formulation {
            Formulation::Rp => milp::schedule_to_rp_assignment(&inst, &sched),
            Formulation::Pa => milp::schedule_to_pa_assignment(&inst, &sched),
        }
        .map_err(input)?;
        let named = milp::rename_for_lp(&model, &assignment);
        let json: serde_json::Map<String, serde_json::Value> = named
            .into_iter()
            .map(|(k, v)| {
                let value = if v.is_integer() {
                    serde_json::Value::from(v.to_integer())
                } else {
                    serde_json::Value::from(v.to_string())
                };
                (k, value)
            })
            .collect();
        emit(Some(&out), &serde_json::to_string_pretty(&json).map_err(internal)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let model: Model<Rational> = milp::read_lp(&read(&a.model)?)
        .with_context(|| format!("parsing {}", a.model.display()))
        .map_err(input)?;
    let raw: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&read(&a.assignment)?)
        .with_context(|| format!("parsing {}", a.assignment.display()))
        .map_err(input)?;
    let mut assignment: Assignment<Rational> = Assignment::new();
    for (name, v) in raw {
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(input(anyhow!("value of {name} is not a number"))),
        };
        let value = parse_value(&text).ok_or_else(|| input(anyhow!("bad value `{text}` for {name}")))?;
        assignment.insert(name, value);
    }
    let report = milp::check_assignment(&model, &assignment).map_err(input)?;
    let out = serde_json::json!({
        "feasible": report.feasible,
        "objective": report.objective.to_lp_string(),
        "violated": report.violated,
    });
    say(&serde_json::to_string_pretty(&out).map_err(internal)?);
    Ok(if report.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Decimal or `p/q`.
fn parse_value(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((p, q)) => {
            let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0).then(|| Rational::new(p, q))
        }
        None => Rational::parse_lp(text.trim()),
    }
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let configs: Vec<BenchConfig> = a
        .configs
        .iter()
        .map(|c| c.parse().map_err(|e: String| input(anyhow!(e))))
        .collect::<Result<_, _>>()?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.suite)
        .with_context(|| format!("reading {}", a.suite.display()))
        .map_err(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(input(anyhow!("no instance files in {}", a.suite.display())));
    }
    let suite: Vec<(String, Instance)> = files
        .iter()
        .map(|p| Ok((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), load_instance(p)?)))
        .collect::<Result<_, Failure>>()?;
    let rows = bench::run_matrix(&suite, &configs, a.time_limit, a.workers);
    let aggregates = bench::aggregate(&rows, a.sample, a.time_limit);
    let report = Report { rows, aggregates };
    bench::write_report(&report, &a.out)
        .with_context(|| format!("writing report to {}", a.out.display()))
        .map_err(internal)?;
    say(&bench::to_csv(&report.aggregates.gaps));
    Ok(ExitCode::SUCCESS)
}

fn cmd_gantt(a: GanttArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let sched = load_schedule(&inst, &a.schedule)?;
    emit(a.out.as_deref(), &bench::gantt_svg(&inst, &sched))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gantt(a) => cmd_gantt(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(Failure::Input(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
