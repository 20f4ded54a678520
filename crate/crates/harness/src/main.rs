use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rmoqpso_core::benchmarks::BenchmarkSpec;
use rmoqpso_core::mo::{LqrProblem, PenaltyMode};
use rmoqpso_core::optim::{Method, OptimizerConfig};
use rmoqpso_harness::export::{
    metric_definitions, simulate_gains, write_pareto_csv, write_runs, write_summary, write_timeseries_csv,
    GainsDocument, ModeFlags, SummaryDocument,
};
use rmoqpso_harness::runs::{compare_methods, repeated_runs, summary_table, t_test_matrix, RunRecord};
use rmoqpso_harness::sweep::{factorial_sweep, SweepPlan};
use rmoqpso_harness::{resolve_benchmark, HarnessError};

#[derive(Parser)]
#[command(name = "rmoqpso", version, about = "LQR weight tuning with multi-objective QPSO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune one controller and export its Pareto front and response.
    Tune(TuneArgs),
    /// Repeated runs of several methods with summary statistics and t-tests.
    Compare(CompareArgs),
    /// Full-factorial parameter sweep.
    Sweep(SweepArgs),
    /// Simulate a given controller and write its time series.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Eq17Mode {
    Literal,
    Corrected,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    swarm: Option<usize>,
    /// QPSO contraction parameter; must exceed ln(sqrt 2).
    #[arg(long)]
    g: Option<f64>,
    /// DWA period in iterations.
    #[arg(long = "dwa-f")]
    dwa_f: Option<usize>,
    #[arg(long = "eq17-mode", value_enum)]
    eq17_mode: Option<Eq17Mode>,
    /// Sign of the rise-time term, +1 or -1.
    #[arg(long = "rise-sign", allow_hyphen_values = true)]
    rise_sign: Option<f64>,
    #[arg(long)]
    verbose: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut OptimizerConfig) -> Result<(), HarnessError> {
        if let Some(t) = self.iterations {
            cfg.iterations = t;
        }
        if let Some(s) = self.swarm {
            if cfg.method != Method::Lm {
                cfg.swarm_size = s;
            }
        }
        if let Some(g) = self.g {
            cfg.qpso.g = g;
        }
        if let Some(f) = self.dwa_f {
            cfg.dwa_frequency = f;
        }
        if let Some(m) = self.eq17_mode {
            cfg.penalty.mode = match m {
                Eq17Mode::Literal => PenaltyMode::Literal,
                Eq17Mode::Corrected => PenaltyMode::Corrected,
            };
        }
        if let Some(r) = self.rise_sign {
            cfg.rise_sign = r;
        }
        cfg.verbose = self.verbose;
        cfg.validate()?;
        Ok(())
    }
}

#[derive(Args)]
struct TuneArgs {
    /// `pendulum`, `flight` or a model document path.
    #[arg(long)]
    benchmark: String,
    #[arg(long, default_value = "rmo-qpso")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    benchmark: String,
    #[arg(long, value_delimiter = ',', default_value = "ga,de,abc,pso,cpso,aiwpso,lm,rmo-qpso")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    benchmark: String,
    #[arg(long)]
    method: Method,
    /// JSON sweep plan; without it the standard grid for the method is used.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Coarser standard grid with two repetitions.
    #[arg(long)]
    reduced: bool,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    benchmark: String,
    /// JSON with `q` and `r`, or an explicit `k`.
    #[arg(long)]
    gains: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn prepare_out(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn document(
    command: &str,
    spec: &BenchmarkSpec,
    base_seed: u64,
    runs_per_method: usize,
    configs: Vec<OptimizerConfig>,
    records: &[RunRecord],
) -> SummaryDocument {
    let tail = spec.tail_kind.label();
    let modes = configs
        .iter()
        .find(|c| c.method == Method::RmoQpso)
        .or(configs.first())
        .map(ModeFlags::from_config)
        .unwrap_or_else(|| ModeFlags::from_config(&OptimizerConfig::defaults(Method::RmoQpso)));
    SummaryDocument {
        tool: "rmoqpso".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        benchmark: spec.to_document(),
        base_seed,
        runs_per_method,
        configs,
        modes,
        metric_definitions: metric_definitions(spec),
        summary: summary_table(&spec.name, tail, records),
        t_tests: t_test_matrix(records, tail),
        sweep: None,
    }
}

fn write_response(out: &Path, spec: &BenchmarkSpec, record: &RunRecord) -> Result<(), HarnessError> {
    let n = spec.n_states();
    let gains = GainsDocument {
        q: Some(record.position[..n].to_vec()),
        r: Some(record.position[n..].to_vec()),
        k: None,
    };
    match gains.gain(spec) {
        Ok(k) => {
            let doc = GainsDocument::from_gain(gains.q.clone().unwrap(), gains.r.clone().unwrap(), &k);
            rmoqpso_harness::export::write_json(&out.join("gains.json"), &doc)?;
            let traj = simulate_gains(spec, &doc)?;
            write_timeseries_csv(&out.join("timeseries.csv"), &traj, spec.model.state_names(), spec.model.input_names())
        }
        Err(e) => Err(HarnessError::Numerical(format!("reported solution has no LQR gain: {e}"))),
    }
}

fn tune(args: TuneArgs) -> Result<(), HarnessError> {
    let spec = resolve_benchmark(&args.benchmark)?;
    let mut cfg = OptimizerConfig::defaults(args.method).with_seed(args.seed);
    args.overrides.apply(&mut cfg)?;
    prepare_out(&args.out)?;
    let records = repeated_runs(&cfg, &spec, 1, args.seed)?;
    let record = &records[0];
    if let Some(archive) = &record.archive {
        write_pareto_csv(&args.out.join("pareto.csv"), archive, spec.n_states(), spec.n_inputs(), spec.tail_kind)?;
    }
    write_response(&args.out, &spec, record)?;
    write_summary(&args.out.join("summary.json"), &document("tune", &spec, args.seed, 1, vec![cfg], &records))?;
    write_runs(&args.out.join("runs.json"), &records)?;
    let o = &record.objectives;
    println!(
        "{} seed {}: fitness {:.4}  J {:.4e}  OS {:.4}  Tr {:.4}  Ts {:.4}  {} {:.4e}",
        record.method,
        record.seed,
        record.fitness,
        o.j,
        o.os,
        o.tr,
        o.ts,
        spec.tail_kind.label(),
        o.tail
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), HarnessError> {
    let spec = resolve_benchmark(&args.benchmark)?;
    if args.methods.is_empty() {
        return Err(HarnessError::Config("no methods given".into()));
    }
    prepare_out(&args.out)?;
    let records = compare_methods(&args.methods, &spec, args.runs, args.seed, |c| args.overrides.apply(c))?;
    let configs = args
        .methods
        .iter()
        .map(|&m| {
            let mut c = OptimizerConfig::defaults(m).with_seed(args.seed);
            args.overrides.apply(&mut c).map(|_| c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = records.iter().find(|r| r.archive.is_some()) {
        let archive = r.archive.as_ref().unwrap();
        write_pareto_csv(&args.out.join("pareto.csv"), archive, spec.n_states(), spec.n_inputs(), spec.tail_kind)?;
    }
    let doc = document("compare", &spec, args.seed, args.runs, configs, &records);
    write_summary(&args.out.join("summary.json"), &doc)?;
    write_runs(&args.out.join("runs.json"), &records)?;
    for m in &doc.summary.methods {
        let f = &m.stats["fitness"];
        println!(
            "{:<9} fitness mean {:>10}  sd {:>10}",
            m.method.name(),
            f.mean.map_or("n/a".into(), |v| format!("{v:.4}")),
            f.sd.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let spec = resolve_benchmark(&args.benchmark)?;
    let mut plan = match &args.plan {
        Some(path) => {
            let plan: SweepPlan = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if plan.method != args.method {
                return Err(HarnessError::Config(format!(
                    "plan is for {} but --method is {}",
                    plan.method, args.method
                )));
            }
            plan
        }
        None if args.reduced => SweepPlan::reduced(args.method, &args.benchmark),
        None => SweepPlan::full(args.method, &args.benchmark),
    };
    if let Some(r) = args.repetitions {
        plan.repetitions = r;
    }
    if let Some(s) = args.seed {
        plan.base_seed = s;
    }
    prepare_out(&args.out)?;
    let result = factorial_sweep(&plan, &spec)?;
    let best = &result.cells[result.best_index];
    println!("{}", best.summary_line());
    let mut doc = document("sweep", &spec, plan.base_seed, plan.repetitions, vec![result.best_config.clone()], &[]);
    doc.sweep = Some(result);
    write_summary(&args.out.join("summary.json"), &doc)
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let spec = resolve_benchmark(&args.benchmark)?;
    let gains: GainsDocument = serde_json::from_str(&std::fs::read_to_string(&args.gains)?)?;
    let traj = simulate_gains(&spec, &gains)?;
    prepare_out(&args.out)?;
    write_timeseries_csv(&args.out.join("timeseries.csv"), &traj, spec.model.state_names(), spec.model.input_names())?;
    let problem = LqrProblem::new(spec.clone());
    if let (Some(q), Some(r)) = (gains.q, gains.r) {
        let pos: Vec<f64> = q.into_iter().chain(r).collect();
        if pos.len() == spec.dimension() {
            let o = rmoqpso_core::mo::ObjectiveProblem::evaluate(&problem, &pos);
            println!("J {:.4e}  OS {:.4}  Tr {:.4}  Ts {:.4}  {} {:.4e}", o.j, o.os, o.tr, o.ts, spec.tail_kind.label(), o.tail);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tune(a) => tune(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
