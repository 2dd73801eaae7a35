//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng as _;

use xdcop_core::cedar::{minimal_subset_oracle, run_cedar, RunStats, Variant};
use xdcop_core::experiment::{
    build_query, prepare_instance, run_experiment, summarize, ExperimentConfig, ExperimentOutput, QueryMode, RawRow,
    SummaryRow,
};
use xdcop_core::generators::{generate, GenConfig};
use xdcop_core::query::{best_alternative_query, random_baseline_query, select_query_vars, Exclusions, Query};
use xdcop_core::rng::rng_from;
use xdcop_core::samples::three_variable_example;
use xdcop_core::solvers::{solve_1opt, solve_optimal, SolutionMode, DEFAULT_NODE_BUDGET};
use xdcop_core::{AgentId, Assignment, ConstraintId, Cost, DcopInstance, Explanation, VarId};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion(name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = f();
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
        Err(detail) => println!("FAIL  {name}: {detail} [{secs:.2}s]"),
    }
    outcome.is_ok()
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Alternative-side cost minus solution-side cost over the whole instance:
/// constraints away from the queried variables cancel, so the query has a
/// valid explanation iff the full alternative schedule costs at least as
/// much as the solution.
fn global_verdict(inst: &DcopInstance, sigma: &Assignment, q: &Query) -> bool {
    let alt = sigma.overridden_by(&q.alternative);
    inst.solution_cost(&alt).unwrap() >= inst.solution_cost(sigma).unwrap()
}

/// Costs of every constraint touching a queried variable, evaluated by
/// walking the tables directly.
fn local_costs(inst: &DcopInstance, full: &Assignment, vars: &BTreeSet<VarId>) -> Vec<(ConstraintId, Cost)> {
    inst.constraints()
        .iter()
        .filter(|c| c.scope.iter().any(|v| vars.contains(v)))
        .map(|c| (c.id, inst.constraint_cost(c, full).unwrap()))
        .collect()
}

fn sum(costs: &[Cost]) -> Cost {
    costs.iter().fold(Cost::ZERO, |acc, &c| acc.checked_add(c).unwrap())
}

/// Fewest costs reaching `threshold`, by trying every subset.
fn brute_min_subset(costs: &[Cost], threshold: Cost) -> Option<usize> {
    let n = costs.len();
    (0u32..1 << n)
        .filter(|m| {
            let picked: Vec<Cost> = (0..n).filter(|i| m & (1 << i) != 0).map(|i| costs[i]).collect();
            sum(&picked) >= threshold
        })
        .map(|m| m.count_ones() as usize)
        .min()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// ---------------------------------------------------------------------------

fn ids(e: &Explanation) -> Vec<u32> {
    e.alternative_side.iter().map(|g| g.constraint_id.0).collect()
}

fn golden_example() -> Check {
    let start = Instant::now();
    let inst = three_variable_example();
    let sigma: Assignment = [(VarId(1), 1), (VarId(2), 1), (VarId(3), 0)].into_iter().collect();
    let q = Query {
        asked_agent: AgentId(1),
        original: [(VarId(1), 1)].into_iter().collect(),
        alternative: [(VarId(1), 0)].into_iter().collect(),
    };
    let (base, _) = run_cedar(Variant::Base, &inst, &sigma, &q).map_err(|e| e.to_string())?;
    ensure(base.solution_cost == Cost::Finite(2), || format!("BASE solution cost {}", base.solution_cost))?;
    ensure(base.alternative_cost == Cost::Finite(5), || format!("BASE alternative cost {}", base.alternative_cost))?;
    ensure(base.solution_side.len() == 2 && base.alternative_side.len() == 2, || "BASE sides not 2+2".into())?;
    for v in [Variant::O1, Variant::O2] {
        let (e, s) = run_cedar(v, &inst, &sigma, &q).map_err(|e| e.to_string())?;
        let g = &e.alternative_side;
        ensure(
            g.len() == 1 && g[0].constraint_id == ConstraintId(2) && g[0].values == vec![0, 0] && g[0].cost == Cost::Finite(3),
            || format!("{v} alternative side {:?}", ids(&e)),
        )?;
        ensure(s.explanation_length == 1, || format!("{v} length {}", s.explanation_length))?;
    }
    for v in Variant::ALL {
        let (_, s) = run_cedar(v, &inst, &sigma, &q).map_err(|e| e.to_string())?;
        ensure(s.valid, || format!("{v} reported invalid"))?;
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 1.0, || format!("took {t:.3}s"))?;
    Ok(format!("BASE 2 vs 5 over 2+2 constraints; O1/O2 = {{f2@(0,0)=3}}; 5/5 valid; {:.1} ms", t * 1e3))
}

fn config(generator: GenConfig, mode: SolutionMode, qm: QueryMode, q_sizes: Vec<usize>, agents: Vec<usize>, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        generator,
        solution_mode: mode,
        query_mode: qm,
        q_sizes,
        agent_counts: agents,
        variants: Variant::ALL.to_vec(),
        repetitions: reps,
        master_seed: seed,
        node_budget: DEFAULT_NODE_BUDGET,
    }
}

fn families() -> [(&'static str, GenConfig); 2] {
    [
        ("meeting", GenConfig::meeting_scheduling(10, 0.5, 0)),
        ("random", GenConfig::random_uniform(10, 0.5, 0)),
    ]
}

fn distinct_instances(out: &ExperimentOutput) -> usize {
    out.rows.iter().map(|r| (r.agent_count, r.repetition)).collect::<BTreeSet<_>>().len()
}

fn rate(rows: &[&RawRow]) -> f64 {
    100.0 * rows.iter().filter(|r| r.valid).count() as f64 / rows.len() as f64
}

fn optimal_always_valid() -> Check {
    let mut instances = 0;
    let mut runs = 0;
    for (name, gen) in families() {
        for qm in [QueryMode::RandomBaseline, QueryMode::BestAlternative] {
            let cfg = config(gen.clone(), SolutionMode::Optimal, qm, vec![1, 3, 5], vec![8, 9, 10], 34, 101);
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            ensure(out.skipped.is_empty(), || format!("{name}/{qm:?}: {} skipped runs", out.skipped.len()))?;
            let n = distinct_instances(&out);
            ensure(n >= 100, || format!("{name}: only {n} instances"))?;
            if qm == QueryMode::RandomBaseline {
                instances += n;
            }
            for q in [1, 3, 5] {
                let cell: Vec<&RawRow> = out.rows.iter().filter(|r| r.q_size == q).collect();
                let pct = rate(&cell);
                ensure(pct == 100.0, || format!("{name}/{qm:?}/q={q}: validity {pct}%"))?;
            }
            runs += out.rows.len();
        }
    }
    ensure(instances >= 200, || format!("only {instances} instances"))?;
    Ok(format!("{instances} instances (|A| 8-10), {runs} runs, q in {{1,3,5}} x 2 query modes: 100% valid in every cell"))
}

fn one_opt_table() -> Check {
    let mut instances = 0;
    let mut report = Vec::new();
    let mut checked = 0;
    for (name, gen) in families() {
        for qm in [QueryMode::RandomBaseline, QueryMode::BestAlternative] {
            let q_sizes = if qm == QueryMode::BestAlternative { vec![1, 3, 5] } else { vec![1] };
            let cfg = config(gen.clone(), SolutionMode::OneOpt, qm, q_sizes.clone(), vec![10], 100, 202);
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            ensure(out.skipped.is_empty(), || format!("{name}/{qm:?}: {} skipped runs", out.skipped.len()))?;
            let q1: Vec<&RawRow> = out.rows.iter().filter(|r| r.q_size == 1).collect();
            let n = q1.iter().map(|r| r.repetition).collect::<BTreeSet<_>>().len();
            ensure(n >= 100, || format!("{name}/{qm:?}: {n} instances"))?;
            if qm == QueryMode::RandomBaseline {
                instances += n;
            }
            let pct = rate(&q1);
            ensure(pct == 100.0, || format!("{name}/{qm:?}/q=1: validity {pct}%"))?;
            if qm == QueryMode::BestAlternative {
                let mut prepared = BTreeMap::new();
                for r in &out.rows {
                    let p = prepared
                        .entry(r.repetition)
                        .or_insert_with(|| prepare_instance(&cfg, r.agent_count, r.repetition).unwrap());
                    let q = build_query(&cfg, p, r.q_size).unwrap();
                    let oracle = global_verdict(&p.inst, &p.sigma, &q);
                    ensure(r.valid == oracle, || {
                        format!("{name} rep {} q={} {}: verdict {} vs oracle {}", r.repetition, r.q_size, r.variant, r.valid, oracle)
                    })?;
                    checked += 1;
                }
                for q in [3, 5] {
                    let cell: Vec<&RawRow> = out.rows.iter().filter(|r| r.q_size == q && r.variant == Variant::O1).collect();
                    report.push(format!("{name} q={q} {:.0}%", rate(&cell)));
                }
            }
        }
    }
    ensure(instances >= 200, || format!("only {instances} instances"))?;
    Ok(format!(
        "q=1 100% valid over {instances} instances in both query modes; best-alternative rates {}; {checked} verdicts equal the global oracle",
        report.join(", ")
    ))
}

/// Random small queries across families, solution kinds and query modes.
fn random_query(seed: u64) -> Option<(DcopInstance, Assignment, Query)> {
    let mut rng = rng_from(seed);
    let n = rng.random_range(4..=9);
    let mut gen = if rng.random_bool(0.5) {
        GenConfig::meeting_scheduling(n, rng.random_range(0.2..0.9), seed)
    } else {
        GenConfig::random_uniform(n, rng.random_range(0.2..0.9), seed)
    };
    gen.domain_size = rng.random_range(2..=5);
    gen.num_slots = rng.random_range(3..=6);
    gen.cost_max = rng.random_range(2..=50);
    let inst = generate(&gen).ok()?;
    let sigma = if rng.random_bool(0.5) {
        solve_optimal(&inst, DEFAULT_NODE_BUDGET).ok()?.solution
    } else {
        solve_1opt(&inst, seed).ok()?.solution
    };
    let q_size = rng.random_range(1..=4.min(n));
    let vars = select_query_vars(&inst, &sigma, q_size, &mut rng).ok()?;
    let mut q = if rng.random_bool(0.5) {
        random_baseline_query(&inst, &sigma, &vars, &Exclusions::new(), &mut rng).ok()?
    } else {
        best_alternative_query(&inst, &sigma, &vars, DEFAULT_NODE_BUDGET, &mut rng).ok()?
    };
    if rng.random_bool(0.3) {
        let agents = inst.agents();
        q.asked_agent = agents[rng.random_range(0..agents.len())];
    }
    Some((inst, sigma, q))
}

fn minimality() -> Check {
    let mut queries = 0;
    let mut valid = 0;
    let mut seed = 0u64;
    while queries < 500 {
        seed += 1;
        let Some((inst, sigma, q)) = random_query(seed) else { continue };
        let vars = q.vars();
        let alt: Vec<Cost> = local_costs(&inst, &sigma.overridden_by(&q.alternative), &vars).into_iter().map(|(_, c)| c).collect();
        if alt.len() > 20 {
            continue;
        }
        let sol: Vec<Cost> = local_costs(&inst, &sigma, &vars).into_iter().map(|(_, c)| c).collect();
        let threshold = sum(&sol);
        let exact = brute_min_subset(&alt, threshold);
        let lib = minimal_subset_oracle(&alt, threshold).map_err(|e| e.to_string())?;
        ensure(lib == exact, || format!("seed {seed}: oracle {lib:?} vs brute force {exact:?}"))?;
        let (o1, s1) = run_cedar(Variant::O1, &inst, &sigma, &q).map_err(|e| e.to_string())?;
        let (o2, _) = run_cedar(Variant::O2, &inst, &sigma, &q).map_err(|e| e.to_string())?;
        ensure(ids(&o1) == ids(&o2), || format!("seed {seed}: O1 {:?} vs O2 {:?}", ids(&o1), ids(&o2)))?;
        match exact {
            Some(k) => {
                ensure(s1.valid && o1.len() == k, || format!("seed {seed}: |O1| = {} valid {} vs minimum {k}", o1.len(), s1.valid))?;
                valid += 1;
            }
            None => ensure(!s1.valid && o1.len() == alt.len(), || format!("seed {seed}: O1 should report the full invalid set"))?,
        }
        queries += 1;
    }
    Ok(format!("{queries} queries ({valid} with a valid explanation): |O1| = exact minimum, O1 set = O2 set, 0 violations"))
}

fn sandwich() -> Check {
    let mut runs = 0;
    let mut invalid = 0;
    let mut seed = 10_000u64;
    while runs < 500 {
        seed += 1;
        let Some((inst, sigma, q)) = random_query(seed) else { continue };
        let oracle = global_verdict(&inst, &sigma, &q);
        let mut out: BTreeMap<Variant, (Explanation, RunStats)> = BTreeMap::new();
        for v in Variant::ALL {
            out.insert(v, run_cedar(v, &inst, &sigma, &q).map_err(|e| format!("seed {seed} {v}: {e}"))?);
        }
        let owners: BTreeSet<AgentId> = q.vars().iter().filter_map(|&x| inst.owner(x)).collect();
        for (v, (_, s)) in &out {
            ensure(s.valid == oracle, || format!("seed {seed}: {v} verdict {} vs oracle {oracle}", s.valid))?;
            ensure(s.steps <= 2 * (1 + s.rounds), || format!("seed {seed}: {v} {} steps for {} rounds", s.steps, s.rounds))?;
        }
        let v2_rounds = out[&Variant::V2].1.rounds;
        if owners.contains(&q.asked_agent) {
            ensure(v2_rounds as usize <= owners.len(), || format!("seed {seed}: V2 used {v2_rounds} rounds for {} owners", owners.len()))?;
        }
        if oracle {
            let len = |v: Variant| out[&v].0.len();
            ensure(len(Variant::O1) <= len(Variant::V1) && len(Variant::V1) <= len(Variant::Base), || {
                format!("seed {seed}: O1 {} V1 {} BASE {}", len(Variant::O1), len(Variant::V1), len(Variant::Base))
            })?;
            ensure(len(Variant::O1) <= len(Variant::V2) && len(Variant::V2) <= len(Variant::Base), || {
                format!("seed {seed}: O1 {} V2 {} BASE {}", len(Variant::O1), len(Variant::V2), len(Variant::Base))
            })?;
        } else {
            invalid += 1;
        }
        runs += 1;
    }
    Ok(format!("{runs} fuzzed queries x 5 variants ({invalid} without a valid explanation): sandwich, verdicts and step bound hold, 0 violations"))
}

struct Sweep {
    best: Vec<SummaryRow>,
    random: Vec<SummaryRow>,
}

fn sweep() -> Result<Sweep, String> {
    let run = |qm| {
        let cfg = config(GenConfig::meeting_scheduling(10, 0.5, 0), SolutionMode::Optimal, qm, vec![1, 3, 5, 7, 9], vec![10], 100, 303);
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        ensure(out.skipped.is_empty(), || format!("{} skipped runs", out.skipped.len()))?;
        summarize(&out.rows).map_err(|e| e.to_string())
    };
    Ok(Sweep { best: run(QueryMode::BestAlternative)?, random: run(QueryMode::RandomBaseline)? })
}

fn cell(rows: &[SummaryRow], q: usize, v: Variant) -> &SummaryRow {
    rows.iter().find(|r| r.q_size == q && r.variant == v).expect("cell present")
}

fn nclo_trend(s: &Sweep) -> Check {
    let mut worst_margin = f64::INFINITY;
    for q in [1, 3, 5, 7, 9] {
        let m = |v| cell(&s.best, q, v).mean_nclo;
        let (base, o1, o2, v1, v2) = (m(Variant::Base), m(Variant::O1), m(Variant::O2), m(Variant::V1), m(Variant::V2));
        ensure(cell(&s.best, q, Variant::Base).runs >= 100, || format!("q={q}: fewer than 100 runs"))?;
        ensure(base < o1 && base < o2, || format!("q={q}: BASE {base:.1} vs O1 {o1:.1} O2 {o2:.1}"))?;
        let cap = o1.max(o2);
        ensure(v1 < cap && v2 < cap, || format!("q={q}: V1 {v1:.1} V2 {v2:.1} vs max(O1,O2) {cap:.1}"))?;
        worst_margin = worst_margin.min(cap - v1.max(v2));
    }
    let line = |v| {
        [1, 3, 5, 7, 9].iter().map(|&q| format!("{:.0}", cell(&s.best, q, v).mean_nclo)).collect::<Vec<_>>().join("/")
    };
    Ok(format!(
        "mean NCLO q=1/3/5/7/9: BASE {} O1 {} O2 {} V1 {} V2 {}",
        line(Variant::Base),
        line(Variant::O1),
        line(Variant::O2),
        line(Variant::V1),
        line(Variant::V2)
    ))
}

fn length_trend(s: &Sweep) -> Check {
    let qs = [1.0, 3.0, 5.0, 7.0, 9.0];
    let mut rhos = Vec::new();
    for v in Variant::ALL {
        let means: Vec<f64> = [1, 3, 5, 7, 9].iter().map(|&q| cell(&s.best, q, v).mean_length).collect();
        let rho = spearman(&qs, &means);
        ensure(rho > 0.8, || format!("{v}: Spearman {rho:.2} over {means:?}"))?;
        rhos.push(format!("{v} {rho:.2}"));
        for q in [1, 3, 5, 7, 9] {
            let (b, r) = (cell(&s.best, q, v).mean_length, cell(&s.random, q, v).mean_length);
            ensure(b >= r, || format!("{v} q={q}: best-alternative {b:.2} < random {r:.2}"))?;
        }
    }
    Ok(format!("Spearman(length, q_size): {}; best-alternative >= random in all 25 cells", rhos.join(", ")))
}

fn xdcop(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_xdcop"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("xdcop {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn cli_session(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut stdout = BTreeMap::new();
    let exp = r#"{"generator": {"kind": "meeting_scheduling", "num_agents": 8}, "solution_mode": "one-opt",
                  "query_mode": "random-baseline", "q_sizes": [1, 3], "agent_counts": [6, 8],
                  "variants": ["base", "o1", "o2", "v1", "v2"], "repetitions": 5, "master_seed": 9}"#;
    std::fs::write(dir.join("exp.json"), exp).map_err(|e| e.to_string())?;
    let steps: Vec<Vec<&str>> = vec![
        vec!["generate", "--kind", "meeting", "--agents", "8", "--seed", "5", "--out", "m.json"],
        vec!["generate", "--kind", "random", "--agents", "7", "--domain-size", "4", "--seed", "6", "--out", "r.json"],
        vec!["solve", "--instance", "m.json", "--out", "m-opt.json"],
        vec!["solve", "--instance", "r.json", "--mode", "one-opt", "--seed", "3", "--out", "r-1opt.json"],
        vec!["query", "--instance", "m.json", "--solution", "m-opt.json", "--size", "3", "--mode", "best", "--seed", "1", "--out", "qb.json"],
        vec!["query", "--instance", "r.json", "--solution", "r-1opt.json", "--size", "2", "--mode", "random", "--exclude-one-opt", "--seed", "2", "--out", "qr.json"],
        vec!["experiment", "run", "--config", "exp.json", "--out", "exp"],
    ];
    for s in steps {
        xdcop(dir, &s)?;
    }
    for v in ["base", "o1", "o2", "v1", "v2"] {
        let trace = format!("trace-{v}.jsonl");
        let out = xdcop(dir, &["explain", "--instance", "m.json", "--solution", "m-opt.json", "--query", "qb.json", "--variant", v, "--trace", &trace])?;
        stdout.insert(format!("explain-{v}"), out);
        let out = xdcop(dir, &["explain", "--instance", "r.json", "--solution", "r-1opt.json", "--query", "qr.json", "--variant", v])?;
        stdout.insert(format!("explain-r-{v}"), out);
    }
    Ok(stdout)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_a = cli_session(a.path())?;
    let out_b = cli_session(b.path())?;
    ensure(out_a == out_b, || "explain stdout differs between runs".into())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs"))?;
    }
    ensure(fa.contains_key("exp/raw.csv") && fa.contains_key("exp/meta.json"), || "experiment outputs missing".into())?;
    Ok(format!("{} files and {} stdout streams byte-identical across two CLI sessions", fa.len(), out_a.len()))
}

fn main() {
    let mut ok = true;
    ok &= criterion("three-variable golden explanation", golden_example);
    ok &= criterion("optimal solutions always explainable", optimal_always_valid);
    ok &= criterion("1-opt validity table", one_opt_table);
    ok &= criterion("O1 minimality oracle", minimality);
    ok &= criterion("sandwich and correctness properties", sandwich);
    match sweep() {
        Ok(s) => {
            ok &= criterion("NCLO trend", || nclo_trend(&s));
            ok &= criterion("explanation-length trend", || length_trend(&s));
        }
        Err(e) => {
            ok &= criterion("NCLO trend", || Err(e.clone()));
            ok &= criterion("explanation-length trend", || Err(e));
        }
    }
    ok &= criterion("determinism", determinism);
    if !ok {
        std::process::exit(1);
    }
}
