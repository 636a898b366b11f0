//! File formats: whitespace edge lists, category label files, walk-trace and
//! report CSVs, and key=value run manifests. All writers emit bytes that are
//! a pure function of their inputs, so identical runs produce identical
//! files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentReport, GainReport};
use crate::graph::{build_graph, CategoryPartition, WeightedGraph, OTHER_LABEL};
use crate::pipeline::EdgeWeightPlan;
use crate::stratify::AllocationPlan;
use crate::walk::{SamplerKind, Visit, WalkSample};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Edge list, one `u v [w]` per line; `#` starts a comment, blank lines are
/// skipped. Weight defaults to 1 when omitted.
pub fn read_edge_list(path: &Path) -> Result<Vec<(u64, u64, Option<f64>)>> {
    let file = BufReader::new(File::open(path)?);
    let mut edges = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let u: u64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| parse_err(i + 1, "bad node id"))?;
        let v: u64 = parts
            .next()
            .ok_or_else(|| parse_err(i + 1, "missing second endpoint"))?
            .parse()
            .map_err(|_| parse_err(i + 1, "bad node id"))?;
        let w = match parts.next() {
            Some(tok) => {
                Some(tok.parse::<f64>().map_err(|_| parse_err(i + 1, "bad edge weight"))?)
            }
            None => None,
        };
        if parts.next().is_some() {
            return Err(parse_err(i + 1, "trailing fields"));
        }
        edges.push((u, v, w));
    }
    Ok(edges)
}

pub fn load_graph(path: &Path) -> Result<WeightedGraph> {
    build_graph(&read_edge_list(path)?)
}

/// Writes `u v` for unit-weight graphs, `u v w` otherwise.
pub fn write_edge_list(path: &Path, g: &WeightedGraph) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let unit = g.edges().all(|(_, _, w)| w == 1.0);
    for (u, v, w) in g.edges() {
        let (eu, ev) = (g.external_id(u), g.external_id(v));
        if unit {
            writeln!(out, "{eu} {ev}")?;
        } else {
            writeln!(out, "{eu} {ev} {w}")?;
        }
    }
    Ok(())
}

/// Category file, one `node label` per line; same comment and blank-line
/// rules as edge lists.
pub fn read_category_labels(path: &Path) -> Result<Vec<(u64, String)>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let v: u64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| parse_err(i + 1, "bad node id"))?;
        let label = parts
            .next()
            .ok_or_else(|| parse_err(i + 1, "missing label"))?
            .to_string();
        if parts.next().is_some() {
            return Err(parse_err(i + 1, "trailing fields"));
        }
        out.push((v, label));
    }
    Ok(out)
}

pub fn write_category_labels(
    path: &Path,
    g: &WeightedGraph,
    p: &CategoryPartition,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut rows: Vec<(u64, &str)> = (0..g.node_count() as u32)
        .map(|v| (g.external_id(v), p.label(p.category_of(v))))
        .collect();
    rows.sort_unstable();
    for (v, label) in rows {
        writeln!(out, "{v} {label}")?;
    }
    Ok(())
}

/// Builds a partition for `g` from labeled nodes; nodes the file does not
/// mention fall into the irrelevant category `__other__`. Category ids follow
/// sorted label order for determinism.
pub fn partition_for(g: &WeightedGraph, labeled: &[(u64, String)]) -> Result<CategoryPartition> {
    let mut by_ext: HashMap<u64, &str> = HashMap::with_capacity(labeled.len());
    for (v, label) in labeled {
        by_ext.insert(*v, label.as_str());
    }
    let n = g.node_count();
    let mut label_of: Vec<&str> = Vec::with_capacity(n);
    let mut has_missing = false;
    for v in 0..n as u32 {
        match by_ext.get(&g.external_id(v)) {
            Some(&l) => label_of.push(l),
            None => {
                has_missing = true;
                label_of.push(OTHER_LABEL);
            }
        }
    }
    let mut labels: Vec<String> = label_of.iter().map(|s| s.to_string()).collect();
    labels.sort_unstable();
    labels.dedup();
    if has_missing && !labels.iter().any(|l| l == OTHER_LABEL) {
        labels.push(OTHER_LABEL.to_string());
        labels.sort_unstable();
    }
    let index: HashMap<&str, u32> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
    let category_of = label_of.iter().map(|l| index[l]).collect();
    let irrelevant = index.get(OTHER_LABEL).copied();
    CategoryPartition::new(category_of, labels, irrelevant)
}

/// Walk trace CSV: metadata comment, header, then one row per step with the
/// node's external id and its category label.
pub fn write_walk_csv(
    path: &Path,
    sample: &WalkSample,
    g: &WeightedGraph,
    p: &CategoryPartition,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "# sampler={} seed={} burn_in={}",
        sample.sampler.as_str(),
        sample.seed,
        sample.burn_in
    )?;
    writeln!(out, "step,node,degree,category,node_weight")?;
    for (i, v) in sample.visits.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i,
            g.external_id(v.node),
            v.degree,
            p.label(v.category),
            v.weight
        )?;
    }
    Ok(())
}

/// Reads a trace back against the graph and partition it was written with.
/// Loaded traces carry no neighbor-category information.
pub fn read_walk_csv(
    path: &Path,
    g: &WeightedGraph,
    p: &CategoryPartition,
) -> Result<WalkSample> {
    let file = BufReader::new(File::open(path)?);
    let dense: HashMap<u64, u32> =
        (0..g.node_count() as u32).map(|v| (g.external_id(v), v)).collect();
    let mut sampler = SamplerKind::Rw;
    let mut seed = 0u64;
    let mut burn_in = 0usize;
    let mut visits = Vec::new();
    let mut saw_header = false;
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            for tok in meta.split_whitespace() {
                match tok.split_once('=') {
                    Some(("sampler", v)) => sampler = SamplerKind::parse(v)?,
                    Some(("seed", v)) => {
                        seed = v.parse().map_err(|_| parse_err(i + 1, "bad seed"))?
                    }
                    Some(("burn_in", v)) => {
                        burn_in = v.parse().map_err(|_| parse_err(i + 1, "bad burn_in"))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != "step,node,degree,category,node_weight" {
                return Err(parse_err(i + 1, "unexpected trace header"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(i + 1, "expected 5 fields"));
        }
        let ext: u64 = fields[1].parse().map_err(|_| parse_err(i + 1, "bad node id"))?;
        let node = *dense.get(&ext).ok_or(Error::UnknownNode(ext))?;
        let degree: u32 = fields[2].parse().map_err(|_| parse_err(i + 1, "bad degree"))?;
        let category = p.category_by_label(fields[3])?;
        let weight: f64 =
            fields[4].parse().map_err(|_| parse_err(i + 1, "bad node weight"))?;
        visits.push(Visit { node, degree, category, weight, neighbor_categories: Vec::new() });
    }
    if !saw_header {
        return Err(parse_err(1, "missing trace header"));
    }
    Ok(WalkSample { visits, sampler, seed, burn_in, neighbor_info: false })
}

pub fn write_allocation_csv(path: &Path, labels: &[String], plan: &AllocationPlan) -> Result<()> {
    if labels.len() != plan.allocations.len() {
        return Err(Error::InvalidParameter("one label per stratum required".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# objective={}", plan.objective.as_str())?;
    writeln!(out, "label,allocation,weight")?;
    for (i, label) in labels.iter().enumerate() {
        writeln!(out, "{},{},{}", label, plan.allocations[i], plan.weights[i])?;
    }
    Ok(())
}

pub fn write_weight_plan_csv(path: &Path, plan: &EdgeWeightPlan) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# rule={} vol_min={}", plan.rule.as_str(), plan.vol_min)?;
    writeln!(out, "category,label,vol_hat,vol_tilde,w_wis,w_tilde,w_edge")?;
    for r in &plan.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.category, r.label, r.vol_hat, r.vol_tilde, r.w_wis, r.w_tilde, r.w_edge
        )?;
    }
    Ok(())
}

/// `quantity,estimate,truth` rows; truth column left empty when unknown.
pub fn write_estimates_csv(path: &Path, rows: &[(String, f64, Option<f64>)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "quantity,estimate,truth")?;
    for (name, est, truth) in rows {
        match truth {
            Some(t) => writeln!(out, "{name},{est},{t}")?,
            None => writeln!(out, "{name},{est},")?,
        }
    }
    Ok(())
}

pub fn write_curves_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "scenario,method,param,n,nrmse,stderr")?;
    for report in reports {
        for row in &report.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                report.scenario, report.method, report.param, row.n, row.nrmse, row.stderr
            )?;
        }
    }
    Ok(())
}

pub fn write_visits_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "scenario,method,param,n,visit_prob,stuck")?;
    for report in reports {
        for row in &report.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                report.scenario, report.method, report.param, row.n, row.visit_prob, row.stuck
            )?;
        }
    }
    Ok(())
}

pub fn write_gains_csv(path: &Path, gains: &[(String, GainReport)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "comparison,nrmse,n_optimized,n_baseline,alpha")?;
    for (name, gain) in gains {
        for row in &gain.rows {
            let nb = row.n_baseline.map(|x| x.to_string()).unwrap_or_default();
            let alpha = row.alpha.map(|x| x.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", name, row.nrmse, row.n_optimized, nb, alpha)?;
        }
    }
    Ok(())
}

/// Run manifest: `key=value` lines sorted by key.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut sorted = entries.to_vec();
    sorted.sort();
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in sorted {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, "expected key=value"))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
