//! Seeded batch experiments: validity rate, explanation length, NCLO and
//! message counts per (solution mode, query mode, agent count, query size,
//! variant) cell.
//!
//! Seeds are split from the master seed so that every instance depends only
//! on `(agent_count, repetition)` and every query only on
//! `(agent_count, q_size, repetition)`. Adding a variant or a query size
//! therefore never changes the other runs, and every variant answers the
//! same query. Trials run in parallel; rows are sorted by cell key before
//! being returned, so output bytes do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cedar::{run_cedar, Variant};
use crate::cost::Cost;
use crate::generators::{generate, GenConfig, GenError};
use crate::model::{Assignment, DcopInstance};
use crate::query::{best_alternative_query, random_baseline_query, select_query_vars, Exclusions, Query};
use crate::rng::{derive_seed, rng_from, stream};
use crate::solvers::{solve_1opt, solve_optimal, SolutionMode, DEFAULT_NODE_BUDGET};

/// Version of the raw.csv / summary.csv / meta.json layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryMode {
    #[serde(alias = "random")]
    RandomBaseline,
    #[serde(alias = "best")]
    BestAlternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Instance family; `num_agents` and `seed` are overridden per run.
    pub generator: GenConfig,
    pub solution_mode: SolutionMode,
    pub query_mode: QueryMode,
    pub q_sizes: Vec<usize>,
    pub agent_counts: Vec<usize>,
    pub variants: Vec<Variant>,
    pub repetitions: usize,
    pub master_seed: u64,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
}

fn default_node_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("no rows to summarize")]
    EmptyInput,
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.q_sizes.is_empty() || self.agent_counts.is_empty() || self.variants.is_empty() {
            return bad("q_sizes, agent_counts and variants must be non-empty");
        }
        if self.q_sizes.contains(&0) || self.agent_counts.contains(&0) {
            return bad("q_sizes and agent_counts must be positive");
        }
        for &n in &self.agent_counts {
            self.instance_config(n, 0).validate()?;
        }
        Ok(())
    }

    fn instance_config(&self, agent_count: usize, seed: u64) -> GenConfig {
        GenConfig { num_agents: agent_count, seed, ..self.generator.clone() }
    }

    pub fn instance_seed(&self, agent_count: usize, rep: usize) -> u64 {
        derive_seed(self.master_seed, &[stream::INSTANCE, agent_count as u64, rep as u64])
    }

    pub fn solve_seed(&self, agent_count: usize, rep: usize) -> u64 {
        derive_seed(self.master_seed, &[stream::SOLVE, agent_count as u64, rep as u64])
    }

    pub fn query_seed(&self, agent_count: usize, q_size: usize, rep: usize) -> u64 {
        derive_seed(self.master_seed, &[stream::QUERY, agent_count as u64, q_size as u64, rep as u64])
    }
}

/// An instance and the solution queries are asked about.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub agent_count: usize,
    pub repetition: usize,
    pub instance_seed: u64,
    pub inst: DcopInstance,
    pub sigma: Assignment,
    /// Optimal solution, when random queries about a 1-opt solution must
    /// also avoid the optimal values.
    pub optimum: Option<Assignment>,
}

/// Generates and solves the instance of repetition `rep`.
pub fn prepare_instance(cfg: &ExperimentConfig, agent_count: usize, rep: usize) -> Result<Prepared, String> {
    let instance_seed = cfg.instance_seed(agent_count, rep);
    let inst = generate(&cfg.instance_config(agent_count, instance_seed)).map_err(|e| e.to_string())?;
    let optimal = |inst: &DcopInstance| {
        solve_optimal(inst, cfg.node_budget).map(|r| r.solution).map_err(|e| format!("optimal solve: {e}"))
    };
    let (sigma, optimum) = match cfg.solution_mode {
        SolutionMode::Optimal => (optimal(&inst)?, None),
        SolutionMode::OneOpt => {
            let sigma = solve_1opt(&inst, cfg.solve_seed(agent_count, rep))
                .map_err(|e| format!("1-opt solve: {e}"))?
                .solution;
            let optimum = match cfg.query_mode {
                QueryMode::RandomBaseline => Some(optimal(&inst)?),
                QueryMode::BestAlternative => None,
            };
            (sigma, optimum)
        }
    };
    Ok(Prepared { agent_count, repetition: rep, instance_seed, inst, sigma, optimum })
}

/// Builds the query of size `q_size` for a prepared instance. Variables are
/// drawn from one stream and the rest of the query from another, so both
/// query modes ask about the same variables.
pub fn build_query(cfg: &ExperimentConfig, p: &Prepared, q_size: usize) -> Result<Query, String> {
    let seed = cfg.query_seed(p.agent_count, q_size, p.repetition);
    let mut var_rng = rng_from(derive_seed(seed, &[0]));
    let mut rng = rng_from(derive_seed(seed, &[1]));
    let vars = select_query_vars(&p.inst, &p.sigma, q_size, &mut var_rng).map_err(|e| e.to_string())?;
    let query = match cfg.query_mode {
        QueryMode::RandomBaseline => {
            let mut exclude = Exclusions::new();
            if let Some(opt) = &p.optimum {
                for &v in &vars {
                    exclude.entry(v).or_insert_with(BTreeSet::new).insert(opt.get(v).expect("complete"));
                }
            }
            random_baseline_query(&p.inst, &p.sigma, &vars, &exclude, &mut rng)
        }
        QueryMode::BestAlternative => best_alternative_query(&p.inst, &p.sigma, &vars, cfg.node_budget, &mut rng),
    };
    query.map_err(|e| e.to_string())
}

/// One CEDAR run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub solution_mode: SolutionMode,
    pub query_mode: QueryMode,
    pub agent_count: usize,
    pub q_size: usize,
    pub variant: Variant,
    pub repetition: usize,
    pub instance_seed: u64,
    pub query_seed: u64,
    pub valid: bool,
    pub explanation_length: usize,
    pub nclo: u64,
    pub messages: u64,
    pub solution_cost: Cost,
    pub alternative_cost: Cost,
}

/// A run that could not be performed, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRun {
    pub agent_count: usize,
    pub q_size: Option<usize>,
    pub repetition: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<RawRow>,
    pub skipped: Vec<SkippedRun>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .agent_counts
        .iter()
        .flat_map(|&n| (0..cfg.repetitions).map(move |rep| (n, rep)))
        .collect();
    let results: Vec<(Vec<RawRow>, Vec<SkippedRun>)> = jobs.par_iter().map(|&(n, rep)| run_job(cfg, n, rep)).collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        skipped.extend(s);
    }
    rows.sort_by_key(|r| (r.agent_count, r.q_size, r.variant, r.repetition));
    skipped.sort_by_key(|s| (s.agent_count, s.q_size, s.repetition));
    for s in &skipped {
        log::warn!("skipped |A|={} q={:?} rep={}: {}", s.agent_count, s.q_size, s.repetition, s.reason);
    }
    Ok(ExperimentOutput { rows, skipped })
}

fn run_job(cfg: &ExperimentConfig, agent_count: usize, rep: usize) -> (Vec<RawRow>, Vec<SkippedRun>) {
    let skip = |q_size, reason| SkippedRun { agent_count, q_size, repetition: rep, reason };
    let prepared = match prepare_instance(cfg, agent_count, rep) {
        Ok(p) => p,
        Err(reason) => return (Vec::new(), vec![skip(None, reason)]),
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &q_size in &cfg.q_sizes {
        let query = match build_query(cfg, &prepared, q_size) {
            Ok(q) => q,
            Err(reason) => {
                skipped.push(skip(Some(q_size), reason));
                continue;
            }
        };
        for &variant in &cfg.variants {
            match run_cedar(variant, &prepared.inst, &prepared.sigma, &query) {
                Ok((e, stats)) => rows.push(RawRow {
                    solution_mode: cfg.solution_mode,
                    query_mode: cfg.query_mode,
                    agent_count,
                    q_size,
                    variant,
                    repetition: rep,
                    instance_seed: prepared.instance_seed,
                    query_seed: cfg.query_seed(agent_count, q_size, rep),
                    valid: stats.valid,
                    explanation_length: stats.explanation_length,
                    nclo: stats.nclo,
                    messages: stats.messages_sent,
                    solution_cost: e.solution_cost,
                    alternative_cost: e.alternative_cost,
                }),
                Err(e) => skipped.push(skip(Some(q_size), format!("{variant}: {e}"))),
            }
        }
    }
    (rows, skipped)
}

/// Aggregate of the runs sharing a cell key. Standard deviations are sample
/// deviations (zero for a single run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solution_mode: SolutionMode,
    pub query_mode: QueryMode,
    pub agent_count: usize,
    pub q_size: usize,
    pub variant: Variant,
    pub runs: usize,
    pub pct_valid: f64,
    pub mean_length: f64,
    pub sd_length: f64,
    pub mean_nclo: f64,
    pub sd_nclo: f64,
    pub mean_messages: f64,
    pub sd_messages: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type CellKey = (SolutionMode, QueryMode, usize, usize, Variant);

pub fn summarize(rows: &[RawRow]) -> Result<Vec<SummaryRow>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut cells: BTreeMap<CellKey, Vec<&RawRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.solution_mode, r.query_mode, r.agent_count, r.q_size, r.variant);
        cells.entry(key).or_default().push(r);
    }
    Ok(cells
        .into_iter()
        .map(|((solution_mode, query_mode, agent_count, q_size, variant), runs)| {
            let col = |f: fn(&RawRow) -> f64| runs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let valid = runs.iter().filter(|r| r.valid).count();
            let (mean_length, sd_length) = mean_sd(&col(|r| r.explanation_length as f64));
            let (mean_nclo, sd_nclo) = mean_sd(&col(|r| r.nclo as f64));
            let (mean_messages, sd_messages) = mean_sd(&col(|r| r.messages as f64));
            SummaryRow {
                solution_mode,
                query_mode,
                agent_count,
                q_size,
                variant,
                runs: runs.len(),
                pct_valid: 100.0 * valid as f64 / runs.len() as f64,
                mean_length,
                sd_length,
                mean_nclo,
                sd_nclo,
                mean_messages,
                sd_messages,
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    schema_version: u32,
    generator: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    instance_seeds: Vec<InstanceSeed>,
    runs: usize,
    skipped: &'a [SkippedRun],
}

#[derive(Debug, Serialize)]
struct InstanceSeed {
    agent_count: usize,
    repetition: usize,
    instance_seed: u64,
    solve_seed: u64,
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `raw.csv`, `summary.csv` and `meta.json` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    write_csv(&out.rows, &dir.join("raw.csv"))?;
    if out.rows.is_empty() {
        write_csv::<SummaryRow>(&[], &dir.join("summary.csv"))?;
    } else {
        write_csv(&summarize(&out.rows)?, &dir.join("summary.csv"))?;
    }
    let instance_seeds = cfg
        .agent_counts
        .iter()
        .flat_map(|&n| {
            (0..cfg.repetitions).map(move |rep| InstanceSeed {
                agent_count: n,
                repetition: rep,
                instance_seed: cfg.instance_seed(n, rep),
                solve_seed: cfg.solve_seed(n, rep),
            })
        })
        .collect();
    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        generator: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        instance_seeds,
        runs: out.rows.len(),
        skipped: &out.skipped,
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    fs::write(dir.join("meta.json"), json)?;
    Ok(())
}
