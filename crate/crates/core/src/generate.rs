//! Synthetic graph generators: the two-community benchmark and the two toy
//! graphs used to study edge-weight choices.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::graph::{build_graph, CategoryPartition, WeightedGraph, OTHER_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels follow the communities exactly.
    Clustered,
    /// Same label counts, assigned uniformly at random over all nodes.
    Random,
}

impl LabelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelMode::Clustered => "clustered",
            LabelMode::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "clustered" => Ok(LabelMode::Clustered),
            "random" => Ok(LabelMode::Random),
            other => Err(Error::InvalidParameter(format!("unknown label mode {other:?}"))),
        }
    }
}

/// Two densely connected communities of very different size, joined by a few
/// uniform-random edges. All edge weights are 1.
#[derive(Debug, Clone)]
pub struct TwoCommunitySpec {
    pub tiny_size: usize,
    pub big_size: usize,
    pub tiny_edges: usize,
    pub big_edges: usize,
    pub inter_edges: usize,
    pub label_mode: LabelMode,
}

impl TwoCommunitySpec {
    /// Reference configuration at scale 1: communities of 1K and 100K nodes,
    /// 5K and 500K intra edges, 500 inter edges (505.5K edges total).
    /// Desk-scale runs use `scale = 0.1`.
    pub fn at_scale(scale: f64, label_mode: LabelMode) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        let s = |base: f64| (base * scale).round() as usize;
        let spec = TwoCommunitySpec {
            tiny_size: s(1_000.0),
            big_size: s(100_000.0),
            tiny_edges: s(5_000.0),
            big_edges: s(500_000.0),
            inter_edges: s(500.0),
            label_mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn node_count(&self) -> usize {
        self.tiny_size + self.big_size
    }

    pub fn edge_count(&self) -> usize {
        self.tiny_edges + self.big_edges + self.inter_edges
    }

    pub fn validate(&self) -> Result<()> {
        let feasible = |n: usize, m: usize| m <= n * n.saturating_sub(1) / 2;
        if self.tiny_size < 2 || self.big_size < 2 {
            return Err(Error::Generation("communities need at least 2 nodes".into()));
        }
        if !feasible(self.tiny_size, self.tiny_edges) || !feasible(self.big_size, self.big_edges) {
            return Err(Error::Generation("intra edge count exceeds simple-graph capacity".into()));
        }
        if self.tiny_edges < self.tiny_size - 1 || self.big_edges < self.big_size - 1 {
            return Err(Error::Generation("too few intra edges to connect a community".into()));
        }
        if self.inter_edges > self.tiny_size * self.big_size {
            return Err(Error::Generation("inter edge count exceeds cut capacity".into()));
        }
        if self.inter_edges == 0 {
            return Err(Error::Generation("communities must be connected to each other".into()));
        }
        Ok(())
    }
}

/// Connected random simple graph on `nodes` with exactly `m` edges, appended
/// to `edges` as (offset..offset+nodes) pairs: a random spanning tree plus
/// uniform random extras. Pure G(n,m) draws at these densities routinely
/// strand a few degree-0 nodes, which would silently shrink the population.
fn gnm(
    edges: &mut Vec<(u64, u64, Option<f64>)>,
    seen: &mut HashSet<(u64, u64)>,
    offset: u64,
    nodes: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
) {
    for v in 1..nodes as u64 {
        let u = rng.gen_range(0..v);
        seen.insert((offset + u, offset + v));
        edges.push((offset + u, offset + v, None));
    }
    let mut added = nodes - 1;
    while added < m {
        let a = offset + rng.gen_range(0..nodes as u64);
        let b = offset + rng.gen_range(0..nodes as u64);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push((key.0, key.1, None));
            added += 1;
        }
    }
}

const CONNECTIVITY_RETRIES: u64 = 20;

pub fn gen_two_community(
    spec: &TwoCommunitySpec,
    seed: u64,
) -> Result<(WeightedGraph, CategoryPartition)> {
    spec.validate()?;
    let n = spec.node_count();
    let tiny = spec.tiny_size as u64;

    // topology and labels draw from separate streams so the two label modes
    // share the exact same graph at a given seed
    let mut g = None;
    for retry in 0..CONNECTIVITY_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, retry));
        let mut edges = Vec::with_capacity(spec.edge_count());
        let mut seen = HashSet::with_capacity(spec.edge_count() * 2);
        gnm(&mut edges, &mut seen, 0, spec.tiny_size, spec.tiny_edges, &mut rng);
        gnm(&mut edges, &mut seen, tiny, spec.big_size, spec.big_edges, &mut rng);
        let mut added = 0;
        while added < spec.inter_edges {
            let a = rng.gen_range(0..tiny);
            let b = tiny + rng.gen_range(0..spec.big_size as u64);
            if seen.insert((a, b)) {
                edges.push((a, b, None));
                added += 1;
            }
        }
        let candidate = build_graph(&edges)?;
        if candidate.positive_weight_connected() {
            g = Some(candidate);
            break;
        }
    }
    let g = g.ok_or_else(|| {
        Error::Generation(format!("no connected graph in {CONNECTIVITY_RETRIES} attempts"))
    })?;

    let mut category_of = vec![1u32; n];
    match spec.label_mode {
        LabelMode::Clustered => {
            // communities live in external-id space; dense ids follow first
            // appearance in the edge list
            for v in 0..n as u32 {
                if g.external_id(v) < tiny {
                    category_of[v as usize] = 0;
                }
            }
        }
        LabelMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, CONNECTIVITY_RETRIES));
            // partial Fisher-Yates: a uniform tiny_size-subset of all nodes
            let mut ids: Vec<u32> = (0..n as u32).collect();
            for i in 0..spec.tiny_size {
                let j = rng.gen_range(i..n);
                ids.swap(i, j);
                category_of[ids[i] as usize] = 0;
            }
        }
    }
    let p = CategoryPartition::new(category_of, vec!["tiny".into(), "big".into()], None)?;
    Ok((g, p))
}

/// Add `factor * N` irrelevant nodes, each wired to `edges_per_node`
/// uniform-random distinct pre-existing nodes, so the result stays connected.
/// Existing labels are kept; the new nodes form (or join) the irrelevant
/// category.
pub fn augment_irrelevant(
    g: &WeightedGraph,
    p: &CategoryPartition,
    factor: f64,
    edges_per_node: usize,
    seed: u64,
) -> Result<(WeightedGraph, CategoryPartition)> {
    if !(factor > 0.0) || edges_per_node == 0 {
        return Err(Error::InvalidParameter("factor and edges_per_node must be positive".into()));
    }
    let n = g.node_count();
    let extra = (factor * n as f64).round() as usize;
    let mut edges: Vec<(u64, u64, Option<f64>)> = g
        .edges()
        .map(|(u, v, w)| (g.external_id(u), g.external_id(v), Some(w)))
        .collect();
    let max_id = (0..n as u32).map(|v| g.external_id(v)).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..extra {
        let new_id = max_id + 1 + i as u64;
        let k = edges_per_node.min(n + i);
        let mut chosen = HashSet::with_capacity(k);
        while chosen.len() < k {
            // earlier nodes only: original graph plus already-added extras
            let t = rng.gen_range(0..(n + i) as u64);
            let target = if t < n as u64 { g.external_id(t as u32) } else { max_id + 1 + (t - n as u64) };
            if chosen.insert(target) {
                edges.push((new_id, target, None));
            }
        }
    }
    let g2 = build_graph(&edges)?;

    let mut labels = p.labels().to_vec();
    let irr = match p.irrelevant() {
        Some(c) => c,
        None => {
            labels.push(OTHER_LABEL.to_string());
            (labels.len() - 1) as u32
        }
    };
    // dense ids follow first appearance in the edge list, so route the old
    // labels through external ids
    let old_dense: std::collections::HashMap<u64, u32> =
        (0..n as u32).map(|v| (g.external_id(v), v)).collect();
    let mut category_of = Vec::with_capacity(n + extra);
    for v in 0..g2.node_count() as u32 {
        let ext = g2.external_id(v);
        match old_dense.get(&ext) {
            Some(&old) => category_of.push(p.category_of(old)),
            None => category_of.push(irr),
        }
    }
    let p2 = CategoryPartition::new(category_of, labels, Some(irr))?;
    Ok((g2, p2))
}

/// Paired-nodes toy graph: two relevant categories ("red", "green") of
/// `category_size` nodes each, every relevant node carrying exactly one
/// intra-category edge of weight `w1` and one edge of weight `w2` to a single
/// irrelevant hub. From any relevant node the walk returns to the hub with
/// probability `p = w2 / (w1 + w2)`, and runs of consecutive relevant visits
/// are geometric with parameter `p`.
pub fn gen_toy_a(
    category_size: usize,
    w1: f64,
    w2: f64,
) -> Result<(WeightedGraph, CategoryPartition)> {
    if category_size < 2 || category_size % 2 != 0 {
        return Err(Error::Generation("category size must be even and at least 2".into()));
    }
    if w1 < 0.0 || w2 < 0.0 {
        return Err(Error::Generation("weight slots must be nonnegative".into()));
    }
    let k = category_size as u64;
    let hub = 2 * k;
    let mut edges = Vec::with_capacity(3 * category_size);
    for base in [0, k] {
        for i in (0..k).step_by(2) {
            edges.push((base + i, base + i + 1, Some(w1)));
        }
    }
    for v in 0..2 * k {
        edges.push((v, hub, Some(w2)));
    }
    let g = build_graph(&edges)?;
    let mut category_of = vec![0u32; 2 * category_size + 1];
    category_of[category_size..2 * category_size].fill(1);
    category_of[2 * category_size] = 2;
    let p = CategoryPartition::new(
        category_of,
        vec!["red".into(), "green".into(), OTHER_LABEL.into()],
        Some(2),
    )?;
    Ok((g, p))
}

/// Return probability of the paired-nodes toy walk.
pub fn toy_a_p(w1: f64, w2: f64) -> Result<f64> {
    if w1 < 0.0 || w2 <= 0.0 {
        return Err(Error::InvalidParameter("need w1 >= 0 and w2 > 0".into()));
    }
    Ok(w2 / (w1 + w2))
}

/// Clique-plus-tiny toy graph: a clique ("big") whose internal edges carry
/// `w2`, and a tiny path ("tiny") whose incident edges — the path itself and
/// `attachment` random edges from each tiny node into the clique — carry
/// `w1`.
pub fn gen_toy_b(
    clique_size: usize,
    tiny_size: usize,
    attachment: usize,
    w1: f64,
    w2: f64,
    seed: u64,
) -> Result<(WeightedGraph, CategoryPartition)> {
    if clique_size < 2 || tiny_size < 2 {
        return Err(Error::Generation("clique and tiny sizes must be at least 2".into()));
    }
    if attachment == 0 || attachment > clique_size {
        return Err(Error::Generation("attachment must be in 1..=clique_size".into()));
    }
    if w1 < 0.0 || w2 < 0.0 {
        return Err(Error::Generation("weight slots must be nonnegative".into()));
    }
    let c = clique_size as u64;
    let mut edges = Vec::new();
    for a in 0..c {
        for b in a + 1..c {
            edges.push((a, b, Some(w2)));
        }
    }
    for i in 0..tiny_size as u64 - 1 {
        edges.push((c + i, c + i + 1, Some(w1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..tiny_size as u64 {
        let mut chosen = HashSet::with_capacity(attachment);
        while chosen.len() < attachment {
            let target = rng.gen_range(0..c);
            if chosen.insert(target) {
                edges.push((c + i, target, Some(w1)));
            }
        }
    }
    let g = build_graph(&edges)?;
    let mut category_of = vec![0u32; clique_size + tiny_size];
    category_of[clique_size..].fill(1);
    let p = CategoryPartition::new(category_of, vec!["big".into(), "tiny".into()], None)?;
    Ok((g, p))
}
