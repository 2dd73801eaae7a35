//! `xdcop`: generate, solve, query and explain DCOP instances, run batch
//! experiments, or serve the HTTP session API.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value as JsonValue};

use xdcop_core::cedar::{run_cedar_traced, Variant};
use xdcop_core::experiment::{run_experiment, write_outputs, ExperimentConfig, QueryMode};
use xdcop_core::generators::{generate, GenConfig, GenKind};
use xdcop_core::query::{best_alternative_query, random_baseline_query, select_query_vars, Exclusions, Query};
use xdcop_core::rng::{derive_seed, rng_from, stream};
use xdcop_core::sim::write_trace;
use xdcop_core::solvers::{solve_1opt, solve_optimal, SolutionMode, DEFAULT_NODE_BUDGET};
use xdcop_core::{Assignment, DcopInstance};
use xdcop_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "xdcop", version, about = "Contrastive explanations for DCOP solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    Generate(GenerateArgs),
    /// Solve an instance optimally or with 1-opt local search.
    Solve(SolveArgs),
    /// Build a contrastive query about a solution.
    Query(QueryArgs),
    /// Answer a query with one CEDAR variant.
    Explain(ExplainArgs),
    /// Batch experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Meeting,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator config JSON; overrides the other generator flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "meeting")]
    kind: KindArg,
    #[arg(long, default_value_t = 10)]
    agents: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 10)]
    domain_size: usize,
    #[arg(long, default_value_t = 10)]
    slots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimal,
    OneOpt,
}

impl From<ModeArg> for SolutionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Optimal => SolutionMode::Optimal,
            ModeArg::OneOpt => SolutionMode::OneOpt,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "optimal")]
    mode: ModeArg,
    /// Seed of the 1-opt initial assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryModeArg {
    Random,
    Best,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON: an assignment or the output of `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 1)]
    size: usize,
    #[arg(long, value_enum, default_value = "best")]
    mode: QueryModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random mode only: also exclude each variable's value in a 1-opt
    /// solution computed from the same seed.
    #[arg(long)]
    exclude_one_opt: bool,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long, default_value = "o1")]
    variant: Variant,
    /// Write the message trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run a sweep and write raw.csv, summary.csv and meta.json.
    Run(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use 20 repetitions instead of the configured count.
    #[arg(long)]
    fast: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "XDCOP_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    /// Origin allowed by CORS (any origin when omitted).
    #[arg(long, env = "XDCOP_CORS_ORIGIN")]
    cors_origin: Option<String>,
    /// Directory for saved sessions.
    #[arg(long, env = "XDCOP_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_solution(path: &Path) -> Result<Assignment> {
    let mut v: JsonValue = read_json(path)?;
    if let Some(inner) = v.get_mut("solution") {
        v = inner.take();
    }
    serde_json::from_value(v).with_context(|| format!("parsing solution in {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let cfg: GenConfig = match &a.config {
        Some(path) => read_json(path)?,
        None => GenConfig {
            kind: match a.kind {
                KindArg::Random => GenKind::RandomUniform,
                KindArg::Meeting => GenKind::MeetingScheduling,
            },
            num_agents: a.agents,
            density: a.density,
            domain_size: a.domain_size,
            num_slots: a.slots,
            seed: a.seed,
            ..GenConfig::random_uniform(a.agents, a.density, a.seed)
        },
    };
    let inst = generate(&cfg)?;
    emit(&inst, a.out.as_deref())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst: DcopInstance = read_json(&a.instance)?;
    let mode = SolutionMode::from(a.mode);
    let r = match mode {
        SolutionMode::Optimal => solve_optimal(&inst, a.node_budget)?,
        SolutionMode::OneOpt => solve_1opt(&inst, a.seed)?,
    };
    emit(
        &json!({"mode": mode, "solution": r.solution, "cost": r.cost, "nodes_explored": r.nodes_explored}),
        a.out.as_deref(),
    )
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let inst: DcopInstance = read_json(&a.instance)?;
    let sigma = read_solution(&a.solution)?;
    let mut var_rng = rng_from(derive_seed(a.seed, &[stream::QUERY, 0]));
    let mut rng = rng_from(derive_seed(a.seed, &[stream::QUERY, 1]));
    let vars = select_query_vars(&inst, &sigma, a.size, &mut var_rng)?;
    let query: Query = match a.mode {
        QueryModeArg::Random => {
            let mut exclude = Exclusions::new();
            if a.exclude_one_opt {
                let local = solve_1opt(&inst, derive_seed(a.seed, &[stream::SOLVE]))?.solution;
                for &v in &vars {
                    exclude.entry(v).or_default().insert(local.get(v).expect("complete"));
                }
            }
            random_baseline_query(&inst, &sigma, &vars, &exclude, &mut rng)?
        }
        QueryModeArg::Best => {
            if a.exclude_one_opt {
                bail!("--exclude-one-opt applies to random queries only");
            }
            best_alternative_query(&inst, &sigma, &vars, a.node_budget, &mut rng)?
        }
    };
    emit(&query, a.out.as_deref())
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let inst: DcopInstance = read_json(&a.instance)?;
    let sigma = read_solution(&a.solution)?;
    let query: Query = read_json(&a.query)?;
    let run = run_cedar_traced(a.variant, &inst, &sigma, &query)?;
    if let Some(path) = &a.trace {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trace(&run.trace, std::io::BufWriter::new(file))?;
    }
    let s = run.stats;
    emit(
        &json!({
            "variant": a.variant,
            "explanation": run.explanation,
            "stats": {"nclo": s.nclo, "messages": s.messages_sent, "length": s.explanation_length,
                      "valid": s.valid, "rounds": s.rounds, "steps": s.steps},
        }),
        a.out.as_deref(),
    )
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(&a.config)?;
    if a.fast {
        cfg.repetitions = 20;
    }
    let out = run_experiment(&cfg)?;
    write_outputs(&cfg, &out, &a.out)?;
    let mode = match cfg.query_mode {
        QueryMode::RandomBaseline => "random-baseline",
        QueryMode::BestAlternative => "best-alternative",
    };
    eprintln!(
        "{} runs ({} skipped, {mode} queries) written to {}",
        out.rows.len(),
        out.skipped.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let config = ServiceConfig { cors_origin: a.cors_origin, data_dir: a.data_dir };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(xdcop_service::serve(&a.bind, config))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Query(a) => cmd_query(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Experiment(ExperimentCommand::Run(a)) => cmd_experiment(a),
        Command::Serve(a) => cmd_serve(a),
    }
}
