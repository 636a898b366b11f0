//! Batch front end: generate benchmark graphs, run samplers, compute
//! estimates from traces, and drive replicated experiments. Every command is
//! deterministic in (config, seed) and writes a manifest that can be fed back
//! with --config to reproduce the run.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stratwalk::experiment::{
    measure_gain, run_replications, ExperimentReport, Method,
};
use stratwalk::generate::{
    gen_toy_a, gen_toy_b, gen_two_community, LabelMode, TwoCommunitySpec,
};
use stratwalk::graph::{set_stats, CategoryPartition, WeightedGraph};
use stratwalk::io::{
    load_graph, partition_for, read_category_labels, read_manifest, write_category_labels,
    write_curves_csv, write_edge_list, write_estimates_csv, write_gains_csv, write_manifest,
    write_visits_csv, write_walk_csv, write_weight_plan_csv,
};
use stratwalk::pipeline::{run_swrw, ConflictRule, SwrwConfig};
use stratwalk::stratify::Objective;
use stratwalk::walk::{mhrw, rw, uis, wis, wrw, SamplerKind};

#[derive(Parser)]
#[command(name = "stratwalk", about = "Graph sampling via stratified weighted random walks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic benchmark graph and its category file
    Generate(Opts),
    /// Run one sampler and write the visit trace
    Sample(Opts),
    /// Compute estimates from a trace
    Estimate(Opts),
    /// Replicated NRMSE curves and gain measurement
    Experiment(Opts),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Generate(_) => "generate",
            Cmd::Sample(_) => "sample",
            Cmd::Estimate(_) => "estimate",
            Cmd::Experiment(_) => "experiment",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Cmd::Generate(o) | Cmd::Sample(o) | Cmd::Estimate(o) | Cmd::Experiment(o) => o,
        }
    }
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// key=value file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// sample size, or a comma-separated grid for experiments
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// uis | wis | rw | mhrw | wrw | swrw
    #[arg(long)]
    method: Option<String>,
    /// mean | sizes | vol_node | vol_star
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "f-irrelevant")]
    f_irrelevant: Option<f64>,
    /// arithmetic | geometric | max | hybrid
    #[arg(long)]
    conflict: Option<String>,
    #[arg(long = "pilot-len")]
    pilot_len: Option<usize>,
    #[arg(long)]
    objective: Option<String>,
    /// two_community | toy_a | toy_b
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    scale: Option<f64>,
    /// random | clustered
    #[arg(long)]
    labels: Option<String>,
    /// figure5 | gain
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    /// toy_a category size / toy_b clique size
    #[arg(long)]
    size: Option<usize>,
    #[arg(long = "tiny-size")]
    tiny_size: Option<usize>,
    #[arg(long)]
    attachment: Option<usize>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long)]
    w2: Option<f64>,
}

impl Opts {
    /// Fill unset fields from the config file, if any.
    fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let map: HashMap<String, String> = read_manifest(&path)
            .with_context(|| format!("reading config {}", path.display()))?
            .into_iter()
            .collect();
        fn fill<T: std::str::FromStr>(slot: &mut Option<T>, map: &HashMap<String, String>, key: &str) -> Result<()>
        where
            T::Err: std::fmt::Display,
        {
            if slot.is_none() {
                if let Some(raw) = map.get(key) {
                    *slot =
                        Some(raw.parse().map_err(|e| anyhow!("config key {key}: {e}"))?);
                }
            }
            Ok(())
        }
        fill(&mut self.graph, &map, "graph")?;
        fill(&mut self.categories, &map, "categories")?;
        fill(&mut self.trace, &map, "trace")?;
        fill(&mut self.out, &map, "out")?;
        fill(&mut self.seed, &map, "seed")?;
        fill(&mut self.n, &map, "n")?;
        fill(&mut self.reps, &map, "reps")?;
        fill(&mut self.method, &map, "method")?;
        fill(&mut self.estimator, &map, "estimator")?;
        fill(&mut self.gamma, &map, "gamma")?;
        fill(&mut self.f_irrelevant, &map, "f_irrelevant")?;
        fill(&mut self.conflict, &map, "conflict")?;
        fill(&mut self.pilot_len, &map, "pilot_len")?;
        fill(&mut self.objective, &map, "objective")?;
        fill(&mut self.scenario, &map, "scenario")?;
        fill(&mut self.scale, &map, "scale")?;
        fill(&mut self.labels, &map, "labels")?;
        fill(&mut self.preset, &map, "preset")?;
        fill(&mut self.burn_in, &map, "burn_in")?;
        fill(&mut self.size, &map, "size")?;
        fill(&mut self.tiny_size, &map, "tiny_size")?;
        fill(&mut self.attachment, &map, "attachment")?;
        fill(&mut self.w1, &map, "w1")?;
        fill(&mut self.w2, &map, "w2")?;
        Ok(self)
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required"))
    }

    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("--seed is required for randomized commands"))
    }

    fn n_grid(&self) -> Result<Vec<usize>> {
        let raw = self.n.as_deref().ok_or_else(|| anyhow!("--n is required"))?;
        let grid: Vec<usize> = raw
            .split(',')
            .map(|t| t.trim().parse().map_err(|e| anyhow!("bad --n value {t:?}: {e}")))
            .collect::<Result<_>>()?;
        if grid.is_empty() || grid.contains(&0) {
            bail!("--n values must be positive");
        }
        Ok(grid)
    }

    fn n_single(&self) -> Result<usize> {
        let grid = self.n_grid()?;
        if grid.len() != 1 {
            bail!("--n must be a single value here");
        }
        Ok(grid[0])
    }

    fn swrw_config(&self) -> Result<SwrwConfig> {
        let mut cfg = SwrwConfig::default();
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(f) = self.f_irrelevant {
            cfg.f_irrelevant = f;
        }
        if let Some(c) = &self.conflict {
            cfg.conflict_rule = ConflictRule::parse(c)?;
        }
        if let Some(p) = self.pilot_len {
            cfg.pilot_length = Some(p);
        }
        if let Some(o) = &self.objective {
            cfg.objective = Objective::parse(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_graph_and_partition(&self) -> Result<(WeightedGraph, CategoryPartition)> {
        let graph_path = self.graph.as_deref().ok_or_else(|| anyhow!("--graph is required"))?;
        let g = load_graph(graph_path)
            .with_context(|| format!("loading graph {}", graph_path.display()))?;
        let p = match self.categories.as_deref() {
            Some(path) => {
                let labeled = read_category_labels(path)
                    .with_context(|| format!("loading categories {}", path.display()))?;
                partition_for(&g, &labeled)?
            }
            None => CategoryPartition::single(g.node_count()),
        };
        Ok((g, p))
    }

    /// Echo of every set option, for the manifest.
    fn manifest_entries(&self, command: &str) -> Vec<(String, String)> {
        let mut out = vec![("command".to_string(), command.to_string())];
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("graph", self.graph.as_ref().map(|p| p.display().to_string()));
        push("categories", self.categories.as_ref().map(|p| p.display().to_string()));
        push("trace", self.trace.as_ref().map(|p| p.display().to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("n", self.n.clone());
        push("reps", self.reps.map(|v| v.to_string()));
        push("method", self.method.clone());
        push("estimator", self.estimator.clone());
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("f_irrelevant", self.f_irrelevant.map(|v| v.to_string()));
        push("conflict", self.conflict.clone());
        push("pilot_len", self.pilot_len.map(|v| v.to_string()));
        push("objective", self.objective.clone());
        push("scenario", self.scenario.clone());
        push("scale", self.scale.map(|v| v.to_string()));
        push("labels", self.labels.clone());
        push("preset", self.preset.clone());
        push("burn_in", self.burn_in.map(|v| v.to_string()));
        push("size", self.size.map(|v| v.to_string()));
        push("tiny_size", self.tiny_size.map(|v| v.to_string()));
        push("attachment", self.attachment.map(|v| v.to_string()));
        push("w1", self.w1.map(|v| v.to_string()));
        push("w2", self.w2.map(|v| v.to_string()));
        out
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let command = cli.cmd.name();
    let opts = cli.cmd.opts().clone().merged()?;
    let out = opts.out_dir()?.to_path_buf();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    match command {
        "generate" => cmd_generate(&opts, &out)?,
        "sample" => cmd_sample(&opts, &out)?,
        "estimate" => cmd_estimate(&opts, &out)?,
        "experiment" => cmd_experiment(&opts, &out)?,
        _ => unreachable!(),
    }
    write_manifest(&out.join("manifest.txt"), &opts.manifest_entries(command))?;
    Ok(())
}

fn cmd_generate(opts: &Opts, out: &Path) -> Result<()> {
    let seed = opts.seed()?;
    let scenario = opts.scenario.as_deref().unwrap_or("two_community");
    let (g, p) = match scenario {
        "two_community" => {
            let labels = LabelMode::parse(opts.labels.as_deref().unwrap_or("random"))?;
            let spec = TwoCommunitySpec::at_scale(opts.scale.unwrap_or(0.1), labels)?;
            gen_two_community(&spec, seed)?
        }
        "toy_a" => gen_toy_a(
            opts.size.unwrap_or(4),
            opts.w1.unwrap_or(1.0),
            opts.w2.unwrap_or(1.0),
        )?,
        "toy_b" => gen_toy_b(
            opts.size.unwrap_or(20),
            opts.tiny_size.unwrap_or(2),
            opts.attachment.unwrap_or(1),
            opts.w1.unwrap_or(1.0),
            opts.w2.unwrap_or(1.0),
            seed,
        )?,
        other => bail!("unknown scenario {other:?}"),
    };
    write_edge_list(&out.join("graph.txt"), &g)?;
    write_category_labels(&out.join("categories.txt"), &g, &p)?;
    println!(
        "generated {} nodes, {} edges, {} categories",
        g.node_count(),
        g.edge_count(),
        p.category_count()
    );
    Ok(())
}

fn cmd_sample(opts: &Opts, out: &Path) -> Result<()> {
    let seed = opts.seed()?;
    let n = opts.n_single()?;
    let burn_in = opts.burn_in.unwrap_or(0);
    let (g, p) = opts.load_graph_and_partition()?;
    let method =
        SamplerKind::parse(opts.method.as_deref().ok_or_else(|| anyhow!("--method is required"))?)?;
    let sample = match method {
        SamplerKind::Uis => uis(&g, &p, n, seed)?,
        SamplerKind::Wis => {
            // WIS draws by the graph's node weights; an unweighted graph
            // carries nothing to bias by
            if g.edges().all(|(_, _, w)| w == 1.0) {
                bail!("wis on an unweighted graph: nothing to weight by");
            }
            let z: Vec<f64> =
                (0..g.node_count() as u32).map(|v| g.node_weight_dense(v)).collect();
            wis(&g, &p, n, &z, seed)?
        }
        SamplerKind::Rw => rw(&g, &p, n, None, burn_in, seed)?,
        SamplerKind::Mhrw => mhrw(&g, &p, n, None, burn_in, seed)?,
        SamplerKind::Wrw => wrw(&g, &p, n, None, burn_in, seed)?,
        SamplerKind::Swrw => {
            let cfg = opts.swrw_config()?;
            let run = run_swrw(&g, &p, &cfg, n, seed)?;
            write_weight_plan_csv(&out.join("plan.csv"), &run.plan)?;
            for w in &run.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            run.sample
        }
    };
    write_walk_csv(&out.join("trace.csv"), &sample, &g, &p)?;
    println!("wrote {} visits ({})", sample.len(), method.as_str());
    Ok(())
}

/// One parsed trace row; self-sufficient so estimates work without the graph.
struct TraceRow {
    node: u64,
    degree: u32,
    label: String,
    weight: f64,
}

fn read_trace_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading trace {}", path.display()))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "step,node,degree,category,node_weight" {
                bail!("line {}: unexpected trace header", i + 1);
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            bail!("line {}: expected 5 fields", i + 1);
        }
        rows.push(TraceRow {
            node: f[1].parse().with_context(|| format!("line {}: node", i + 1))?,
            degree: f[2].parse().with_context(|| format!("line {}: degree", i + 1))?,
            label: f[3].to_string(),
            weight: f[4].parse().with_context(|| format!("line {}: weight", i + 1))?,
        });
    }
    if rows.is_empty() {
        bail!("trace is empty");
    }
    Ok(rows)
}

fn cmd_estimate(opts: &Opts, out: &Path) -> Result<()> {
    let trace_path = opts.trace.as_deref().ok_or_else(|| anyhow!("--trace is required"))?;
    let rows = read_trace_rows(trace_path)?;
    for r in &rows {
        if r.weight <= 0.0 {
            bail!("trace row for node {} carries a nonpositive weight", r.node);
        }
    }
    let estimator = opts.estimator.as_deref().unwrap_or("sizes");

    // the graph is optional: with it we join exact ground truth and can
    // reconstruct the neighbor information the star estimator needs
    let joined = match (&opts.graph, &opts.categories) {
        (Some(_), _) => Some(opts.load_graph_and_partition()?),
        _ => None,
    };

    let inv_sum: f64 = rows.iter().map(|r| 1.0 / r.weight).sum();
    let vol_sum: f64 = rows.iter().map(|r| r.degree as f64 / r.weight).sum();
    let mut labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();

    let truth_for = |label: &str, volume: bool| -> Option<f64> {
        let (g, p) = joined.as_ref()?;
        let c = p.category_by_label(label).ok()?;
        let stats = set_stats(g, p, c).ok()?;
        Some(if volume { stats.volume_fraction } else { stats.size_fraction })
    };

    let mut results: Vec<(String, f64, Option<f64>)> = Vec::new();
    match estimator {
        "mean" => {
            // mean degree under the sampler's recorded weights
            let truth = joined
                .as_ref()
                .map(|(g, _)| g.total_volume() as f64 / g.node_count() as f64);
            results.push(("mean_degree".into(), vol_sum / inv_sum, truth));
        }
        "sizes" => {
            for label in &labels {
                let num: f64 =
                    rows.iter().filter(|r| r.label == *label).map(|r| 1.0 / r.weight).sum();
                results.push((format!("size_fraction_{label}"), num / inv_sum, truth_for(label, false)));
            }
        }
        "vol_node" => {
            for label in &labels {
                let num: f64 = rows
                    .iter()
                    .filter(|r| r.label == *label)
                    .map(|r| r.degree as f64 / r.weight)
                    .sum();
                results.push((format!("volume_fraction_{label}"), num / vol_sum, truth_for(label, true)));
            }
        }
        "vol_star" => {
            let (g, p) = joined.as_ref().ok_or_else(|| {
                anyhow!("the star estimator needs neighbor categories: pass --graph and --categories")
            })?;
            let dense: HashMap<u64, u32> =
                (0..g.node_count() as u32).map(|v| (g.external_id(v), v)).collect();
            let mut num: HashMap<&str, f64> = HashMap::new();
            for r in &rows {
                let &v = dense
                    .get(&r.node)
                    .ok_or_else(|| anyhow!("trace node {} is not in the graph", r.node))?;
                for (u, _) in g.neighbors(v) {
                    *num.entry(p.label(p.category_of(u))).or_insert(0.0) +=
                        1.0 / r.weight;
                }
            }
            let mut all_labels: Vec<&str> = num.keys().copied().collect();
            all_labels.sort_unstable();
            for label in all_labels {
                results.push((
                    format!("volume_fraction_{label}"),
                    num[label] / vol_sum,
                    truth_for(label, true),
                ));
            }
        }
        other => bail!("unknown estimator {other:?}"),
    }
    write_estimates_csv(&out.join("estimates.csv"), &results)?;
    println!("wrote {} estimates ({estimator})", results.len());
    Ok(())
}

fn cmd_experiment(opts: &Opts, out: &Path) -> Result<()> {
    let seed = opts.seed()?;
    let reps = opts.reps.unwrap_or(25);
    let labels = LabelMode::parse(opts.labels.as_deref().unwrap_or("random"))?;
    let scale = opts.scale.unwrap_or(0.1);
    let scenario = opts.scenario.as_deref().unwrap_or("two_community");
    if scenario != "two_community" {
        bail!("experiments run on the two_community scenario");
    }
    let spec = TwoCommunitySpec::at_scale(scale, labels)?;
    let scenario_name = format!("two_community_{}", labels.as_str());
    let (g, p) = gen_two_community(&spec, stratwalk::derive_seed(seed, 0))?;
    let tiny = p.category_by_label("tiny")?;
    let preset = opts.preset.as_deref().unwrap_or("figure5");

    let named = |mut report: ExperimentReport| {
        report.scenario = scenario_name.clone();
        report
    };

    let (reports, gains) = match preset {
        "figure5" => {
            let grid = match &opts.n {
                Some(_) => opts.n_grid()?,
                None => vec![500, 1000, 2000, 4000],
            };
            let swrw = named(run_replications(
                &g,
                &p,
                tiny,
                &Method::Swrw(opts.swrw_config()?),
                &grid,
                reps,
                stratwalk::derive_seed(seed, 1),
                false,
            )?);
            let rw_report = named(run_replications(
                &g,
                &p,
                tiny,
                &Method::Rw,
                &grid,
                reps,
                stratwalk::derive_seed(seed, 2),
                false,
            )?);
            let gains = vec![("swrw_vs_rw".to_string(), measure_gain(&swrw, &rw_report))];
            (vec![rw_report, swrw], gains)
        }
        "gain" => {
            let grid = match &opts.n {
                Some(_) => opts.n_grid()?,
                None => vec![100, 200, 400],
            };
            // equal category masses: per-node weight ratio = size ratio
            let w = p.size(1 - tiny) as f64 / p.size(tiny) as f64;
            let wis_report = named(run_replications(
                &g,
                &p,
                tiny,
                &Method::Wis { w },
                &grid,
                reps,
                stratwalk::derive_seed(seed, 1),
                false,
            )?);
            let base_grid: Vec<usize> = grid.iter().flat_map(|&n| [n * 5, n * 25, n * 50]).collect();
            let uis_report = named(run_replications(
                &g,
                &p,
                tiny,
                &Method::Uis,
                &base_grid,
                reps,
                stratwalk::derive_seed(seed, 2),
                false,
            )?);
            let gains = vec![("wis_vs_uis".to_string(), measure_gain(&wis_report, &uis_report))];
            (vec![uis_report, wis_report], gains)
        }
        other => bail!("unknown preset {other:?}"),
    };

    write_curves_csv(&out.join("curves.csv"), &reports)?;
    write_visits_csv(&out.join("visits.csv"), &reports)?;
    write_gains_csv(&out.join("gains.csv"), &gains)?;
    println!("wrote curves.csv, visits.csv, gains.csv ({preset})");
    Ok(())
}
