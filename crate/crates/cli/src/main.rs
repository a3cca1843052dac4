use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cmu_lab::costs::CostModel;
use cmu_lab::engine::{simulate_with, SimOptions};
use cmu_lab::generators::{Family, GeneratorSpec};
use cmu_lab::harness::{self, ExperimentConfig};
use cmu_lab::instance::{Instance, ServiceKind};
use cmu_lab::policies::{PolicyConfig, PolicyKind, TsRule};
use cmu_lab::verify;
use cmu_lab::Error;

/// Empirical c-mu scheduling experiments.
#[derive(Debug, Parser)]
#[command(name = "cmu-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Simulate policies on one instance, replicating cost randomness.
    Run(RunArgs),
    /// Run an experiment config and write the result table.
    Sweep(SweepArgs),
    /// Run the built-in oracle checks; exit code 2 if any fails.
    Verify(VerifyArgs),
    /// Fit a log-log slope to one policy's rows of a result table.
    Slope(SlopeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    UniformBand,
    ParetoService,
    LowerBoundPair,
    LowerBoundBase,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::UniformBand => Family::UniformBand,
            FamilyArg::ParetoService => Family::ParetoService,
            FamilyArg::LowerBoundPair => Family::LowerBoundPair,
            FamilyArg::LowerBoundBase => Family::LowerBoundBase,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ServiceArg {
    Det,
    Geo,
}

impl From<ServiceArg> for ServiceKind {
    fn from(s: ServiceArg) -> Self {
        match s {
            ServiceArg::Det => ServiceKind::Deterministic,
            ServiceArg::Geo => ServiceKind::Geometric,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CostArg {
    Bernoulli,
    Gaussian,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    TwoJob,
    General,
    Geometric,
}

impl From<RuleArg> for TsRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::TwoJob => TsRule::TwoJob,
            RuleArg::General => TsRule::General,
            RuleArg::Geometric => TsRule::Geometric,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform-band")]
    family: FamilyArg,
    /// Number of jobs.
    #[arg(long)]
    n: usize,
    /// Time scale T (ignored by pareto-service, which sets T to the longest job).
    #[arg(long, default_value_t = 1000)]
    t_scale: u64,
    /// Cost band half-width, or the lower-bound boost (family default when absent).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Pareto shape parameter.
    #[arg(long, default_value_t = 0.7)]
    shape: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated rates for the lower-bound families (all ones when absent).
    #[arg(long, value_delimiter = ',')]
    mus: Option<Vec<f64>>,
    /// Boosted side (1 or 2) for lower-bound-pair.
    #[arg(long, default_value_t = 1)]
    side: u8,
    #[arg(long, value_enum, default_value = "det")]
    service: ServiceArg,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Policies, comma-separated: oracle, preemptive, nonpreemptive, ptn, ptn-geo.
    #[arg(long, value_delimiter = ',', default_value = "ptn")]
    policy: Vec<PolicyKind>,
    /// Multiplier on the preemption length.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Fixed preemption length T_s, used as given.
    #[arg(long)]
    ts_override: Option<u64>,
    /// Closed form for T_s (policy default when absent).
    #[arg(long, value_enum)]
    ts_rule: Option<RuleArg>,
    #[arg(long, value_enum, default_value = "bernoulli")]
    cost_model: CostArg,
    /// Standard deviation for gaussian costs, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Write a per-slot NDJSON audit of replication 0 of the first policy.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Experiment config JSON.
    ///
    /// Defaults: reps 100, seed_base 0, cost_model from the generator family
    /// (two_point for lower-bound families, bernoulli otherwise), kappa 1,
    /// pareto_shape 0.7, service det.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SlopeAxis {
    Any,
    T,
    N,
}

#[derive(Debug, Args)]
struct SlopeArgs {
    /// Result table written by `run` or `sweep`.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "ptn")]
    policy: String,
    /// `t` additionally requires four values over two decades.
    #[arg(long, value_enum, default_value = "any")]
    axis: SlopeAxis,
}

enum Failure {
    Invalid(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(2),
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Run(a) => with_threads(a.threads, || run(a)),
        Command::Sweep(a) => with_threads(a.threads, || sweep(a)),
        Command::Verify(a) => run_verify(a),
        Command::Slope(a) => slope(a),
    }
}

fn with_threads(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<(), Failure> + Send,
) -> Result<(), Failure> {
    match threads {
        None => f(),
        Some(0) => Err(Error::InvalidArgument("--threads must be >= 1".into()).into()),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn warn_instance(inst: &Instance) {
    for w in inst.warnings() {
        eprintln!("warning: {w}");
    }
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let spec = GeneratorSpec {
        family: a.family.into(),
        n: a.n,
        t_scale: a.t_scale,
        epsilon: a.epsilon,
        pareto_shape: a.shape,
        seed: a.seed,
        which_side: a.side,
        rates: a.mus,
        service: a.service.into(),
    };
    let inst: Instance = spec.generate(a.seed)?;
    warn_instance(&inst);
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "{}", inst.to_json())?;
    out.flush()?;
    Ok(())
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let inst = Instance::<f64>::from_json(&read_text(&a.instance)?)?;
    warn_instance(&inst);
    let model = match a.cost_model {
        CostArg::Bernoulli => CostModel::bernoulli(),
        CostArg::Gaussian => CostModel::gaussian(a.sigma)?,
        CostArg::TwoPoint => CostModel::two_point(),
    };
    if !(a.kappa > 0.0) || !a.kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must be > 0, got {}", a.kappa)).into());
    }
    let policies: Vec<PolicyConfig> = a
        .policy
        .iter()
        .map(|&kind| {
            let mut cfg = PolicyConfig::new(kind).with_kappa(a.kappa);
            cfg.t_s = a.ts_override;
            cfg.ts_rule = a.ts_rule.map(Into::into);
            cfg
        })
        .collect();
    for p in &policies {
        p.kind.check_service(inst.service())?;
        if let Some(from) = p.resolve_t_s(&inst)?.clamped_from {
            eprintln!(
                "warning: {}: T_s = {from} exceeds the total service {} and was clamped",
                p.label(),
                inst.total_service()
            );
        }
    }
    if let Some(path) = &a.trace {
        let mut w = BufWriter::new(File::create(path)?);
        let seed = harness::replication_seed(a.seed, 0, 0);
        simulate_with(
            &inst,
            &model,
            &policies[0],
            seed,
            SimOptions::default(),
            Some(&mut w),
        )?;
        w.flush()?;
    }
    let rows = harness::run_instance(&inst, &model, &policies, a.reps, a.seed)?;
    let mut out = output(a.out.as_deref())?;
    harness::write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_json(&read_text(&a.config)?)?;
    let rows = harness::run_experiment(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    harness::write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_verify(a: VerifyArgs) -> Result<(), Failure> {
    let outcomes = verify::run_all(a.seed);
    let mut failed = 0;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} checks passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

fn slope(a: SlopeArgs) -> Result<(), Failure> {
    let rows = harness::read_csv(File::open(&a.csv)?)?;
    let report = match a.axis {
        SlopeAxis::T => harness::sweep_t_slope(&rows, &a.policy)?,
        SlopeAxis::N => harness::sweep_n_slope(&rows, &a.policy)?,
        SlopeAxis::Any => harness::sweep_slope(&rows, &a.policy)?,
    };
    for x in &report.excluded {
        eprintln!("warning: axis value {x} excluded (nonpositive mean regret)");
    }
    println!(
        "policy={} slope={:.6} intercept={:.6} r2={:.6} points={}",
        a.policy,
        report.fit.slope,
        report.fit.intercept,
        report.fit.r_squared,
        report.points.len()
    );
    Ok(())
}
