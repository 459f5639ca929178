use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gpscale::csp;
use gpscale::domains::{self, descriptor, GeneratorInput};
use gpscale::eval::{self, EvalParams};
use gpscale::oracle;
use gpscale::planning::Instance;
use gpscale::policy::{PolicyError, PolicySpec};
use gpscale::report::{self, to_json, ExperimentConfig, ExperimentReport};
use gpscale::runner::{rollout_rng, run_policy_with, RunOptions, Termination};
use gpscale::selection::{self, Method, ValidationParams};
use gpscale::stats::{SequentialParams, SumCovMode};
use gpscale::{Error, Result};

/// Scaling-behavior evaluation of generalizing planning policies.
#[derive(Parser)]
#[command(name = "gpscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size-composition constraint problems.
    #[command(subcommand)]
    Csp(CspCommand),
    /// Generate one instance.
    Generate(GenerateArgs),
    /// Build training and fixed-validation sets with teacher data.
    BuildDatasets(BuildArgs),
    /// Score one policy with one validation method.
    Validate(ValidateArgs),
    /// Statistical coverage curve of one policy.
    Evaluate(EvaluateArgs),
    /// Select among checkpoints with every method and evaluate the picks.
    Experiment(ExperimentArgs),
    /// Re-emit the summary table and plot of a finished experiment.
    Report(ReportArgs),
    /// Roll out a policy on one instance.
    Run(RunArgs),
    /// Breadth-first teacher.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum CspCommand {
    /// Print satisfying assignments, one JSON object per line.
    Solve {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        size: u64,
        /// Return at most this many, sampled uniformly.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the CSP ledger of one or all domains.
    Ledger {
        #[arg(long)]
        domain: Option<String>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    domain: String,
    /// Generator parameter `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Sample a composition of this size instead of giving parameters.
    #[arg(long, conflicts_with = "params")]
    size: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit a PDDL problem instead of JSON.
    #[arg(long)]
    pddl: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    domain: String,
    #[arg(long)]
    policy: String,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    #[arg(long, default_value_t = 2)]
    zeta: usize,
    /// Base plan-length bound `L0`; size `n` runs with `L0 + n`.
    #[arg(long)]
    bound: usize,
    #[arg(long, default_value_t = 200)]
    max_size: usize,
    #[arg(long, default_value_t = SequentialParams::default().min_samples)]
    min_samples: usize,
    #[arg(long, default_value_t = SequentialParams::default().max_samples)]
    max_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write curve.csv, curve.json and coverage.svg here instead of
    /// printing CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON array of policy specs; overrides the config's checkpoints.
    #[arg(long)]
    checkpoints: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json of a finished experiment.
    #[arg(long)]
    input: PathBuf,
    /// Where to write summary.csv and coverage.svg; defaults to the input's
    /// directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sumcov: Option<SumCovMode>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    policy: String,
    #[arg(long)]
    bound: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Shortest plan as a JSON array of actions.
    Plan {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = usize::MAX)]
        horizon: usize,
    },
    /// Optimal cost-to-go of every reachable state as `digest,value` CSV.
    Values {
        #[arg(long)]
        instance: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Csp(c) => csp_cmd(c),
        Command::Generate(a) => generate(a),
        Command::BuildDatasets(a) => build_datasets(a),
        Command::Validate(a) => validate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report_cmd(a),
        Command::Run(a) => run(a),
        Command::Oracle(c) => oracle_cmd(c),
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::from_json(&fs::read_to_string(path)?)
}

fn csp_cmd(c: CspCommand) -> Result<()> {
    match c {
        CspCommand::Solve {
            domain,
            size,
            limit,
            seed,
        } => {
            let desc = descriptor(&domain)?;
            let sols = match limit {
                Some(0) => return Err(Error::Config("--limit must be at least 1".into())),
                Some(k) => csp::solve_k(&desc.csp, size, k, &mut ChaCha8Rng::seed_from_u64(seed))?,
                None => csp::solve_all(&desc.csp, size)?,
            };
            let mut out = String::new();
            for s in sols {
                let obj: serde_json::Map<String, serde_json::Value> = desc
                    .size_params()
                    .zip(s.values())
                    .map(|(k, v)| (k.to_owned(), json!(v)))
                    .collect();
                out.push_str(&serde_json::to_string(&obj)?);
                out.push('\n');
            }
            print(&out)
        }
        CspCommand::Ledger { domain } => match domain {
            Some(d) => print(&to_json(&descriptor(&d)?.ledger())?),
            None => print(&to_json(&report::csp_ledgers())?),
        },
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let desc = descriptor(&a.domain)?;
    let input = match a.size {
        Some(n) => {
            let all = csp::solve_all(&desc.csp, n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let pick = csp::sample_uniform(&all, &mut rng)
                .map_err(|_| Error::InvalidInput(format!("no {} composition of size {n}", a.domain)))?;
            desc.input_from(pick, &mut rng)
        }
        None => {
            let mut input = GeneratorInput::default();
            for p in &a.params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("expected NAME=VALUE, got `{p}`")))?;
                let v: i64 = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`{v}` is not an integer")))?;
                input = input.with(k, v);
            }
            input
        }
    };
    let inst = domains::generate_instance(&a.domain, &input, a.seed)?;
    if a.pddl {
        print(&inst.to_pddl(&format!("{}-{}", a.domain, a.seed)))
    } else {
        print(&(inst.to_json() + "\n"))
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn build_datasets(a: BuildArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let data = report::build_datasets(&cfg, Some(&a.out))?;
    print(&to_json(&data.manifest)?)
}

fn validate(a: ValidateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = a.domain {
        cfg.domain = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let spec = PolicySpec::parse(&a.policy)?;
    let mut policy = spec.build()?;
    match a.method {
        Method::Dynamic => {
            // Only the teacher statistics are needed for the default bound.
            let bound = match cfg.dynamic.bound {
                Some(b) => b,
                None => {
                    let train = domains::build_instance_set(
                        &cfg.domain,
                        &cfg.training_range()?.sizes(),
                        cfg.training_per_size,
                        gpscale::seeds::derive_seed(cfg.seed, &[1]),
                    )?;
                    oracle::teacher_stats(&train.instances, cfg.teacher_horizon)?.validation_bound()
                }
            };
            let params = ValidationParams {
                n0: cfg.training_range()?.max,
                m: cfg.dynamic.m,
                bound,
                tau: cfg.dynamic.tau,
                max_consecutive_invalid: cfg.dynamic.max_consecutive_invalid,
                max_size: cfg.dynamic.max_size,
                seed: gpscale::seeds::derive_seed(cfg.seed, &[3]),
                epoch: 0,
            };
            let r = selection::dynamic_coverage_validation(policy.as_mut(), &cfg.domain, &params)?;
            print(&to_json(&json!({"method": "dynamic", "bound": bound, "report": r}))?)
        }
        Method::Coverage | Method::Loss => {
            let data = report::build_datasets(&cfg, None)?;
            let bound = data.manifest.validation_bound;
            let score = if a.method == Method::Coverage {
                selection::fixed_coverage_validation(policy.as_mut(), &data.validation, bound)?
            } else {
                selection::fixed_loss_validation(policy.as_mut(), &data.labeled, cfg.loss)?
            };
            print(&to_json(&json!({
                "method": a.method.as_str(),
                "bound": bound,
                "instances": data.validation.len(),
                "score": score,
            }))?)
        }
    }
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let spec = PolicySpec::parse(&a.policy)?;
    let mut policy = spec.build()?;
    let params = EvalParams {
        sequential: SequentialParams {
            epsilon: a.epsilon,
            kappa: a.kappa,
            min_samples: a.min_samples,
            max_samples: a.max_samples,
        },
        l0: a.bound,
        tau: a.tau,
        zeta: a.zeta,
        max_size: a.max_size,
        seed: a.seed,
        ..Default::default()
    };
    let curve = eval::evaluate_scaling(policy.as_mut(), &a.domain, &params)?;
    match a.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("curve.csv"), curve.to_csv()?)?;
            fs::write(dir.join("curve.json"), to_json(&curve)?)?;
            let svg = report::emit_curve_svg(
                &[(curve.policy.clone(), curve.coverage())],
                &report::SvgStyle {
                    title: format!("{}: statistical coverage", a.domain),
                    ..Default::default()
                },
            );
            fs::write(dir.join("coverage.svg"), svg)?;
            Ok(())
        }
        None => print(&curve.to_csv()?),
    }
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let checkpoints: Vec<PolicySpec> = match &a.checkpoints {
        Some(p) => PolicySpec::parse_list(&fs::read_to_string(p)?)
            .map_err(|e| Error::Config(format!("cannot parse checkpoints: {e}")))?,
        None => cfg.checkpoints.clone(),
    };
    let report = report::run_experiment(&cfg, &checkpoints, Some(&a.out))?;
    print(&report.summary_csv())
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input)?;
    let mut rep: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("cannot parse report: {e}")))?;
    if let Some(mode) = a.sumcov {
        rep.sumcov_mode = mode;
        for r in &mut rep.results {
            let cov = r.curve.coverage();
            if !cov.is_empty() {
                r.sumcov = gpscale::stats::sumcov_metric(&cov, rep.tau, rep.zeta, mode)?;
            }
        }
    }
    let dir = match a.out {
        Some(d) => d,
        None => a.input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("summary.csv"), rep.summary_csv())?;
    fs::write(dir.join("coverage.svg"), rep.svg())?;
    print(&rep.summary_csv())
}

fn run(a: RunArgs) -> Result<()> {
    let spec = PolicySpec::parse(&a.policy)?;
    let inst = load_instance(&a.instance)?;
    if let Some(d) = &a.domain {
        if d != inst.domain() {
            return Err(Error::Config(format!(
                "instance is a {} instance, not {d}",
                inst.domain()
            )));
        }
    }
    let mut policy = spec.build()?;
    let mut rng = rollout_rng(&inst, a.seed);
    let r = run_policy_with(
        policy.as_mut(),
        &inst,
        a.bound,
        &mut rng,
        RunOptions { record_trace: true },
    );
    print(&to_json(&r)?)?;
    // The result is still printed so the trace is available.
    match r.termination {
        Termination::PolicyError => Err(Error::Policy(PolicyError::Failed(
            r.error.unwrap_or_else(|| "policy error".into()),
        ))),
        _ => Ok(()),
    }
}

fn oracle_cmd(c: OracleCommand) -> Result<()> {
    match c {
        OracleCommand::Plan { instance, horizon } => {
            let inst = load_instance(&instance)?;
            let plan = oracle::optimal_plan(&inst, horizon)?;
            let names: Option<Vec<String>> =
                plan.map(|p| p.iter().map(|a| inst.format_action(a)).collect());
            print(&to_json(&json!({"plan": names}))?)
        }
        OracleCommand::Values { instance } => {
            let inst = load_instance(&instance)?;
            print(&oracle::optimal_values(&inst)?.to_csv())
        }
    }
}
