//! Sampling processes: UIS/WIS independence sampling, the simple,
//! Metropolis-Hastings and weighted random walks, and an exact
//! stationary-distribution oracle.
//!
//! All samplers are driven by a ChaCha8 RNG seeded from the caller-provided
//! seed: the same seed reproduces the sample bit for bit. A weighted walk on
//! an all-unit-weight graph consumes randomness exactly like the simple walk,
//! so the two produce identical traces under the same seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{CategoryPartition, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Uis,
    Wis,
    Rw,
    Mhrw,
    Wrw,
    Swrw,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Uis => "uis",
            SamplerKind::Wis => "wis",
            SamplerKind::Rw => "rw",
            SamplerKind::Mhrw => "mhrw",
            SamplerKind::Wrw => "wrw",
            SamplerKind::Swrw => "swrw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uis" => Ok(SamplerKind::Uis),
            "wis" => Ok(SamplerKind::Wis),
            "rw" => Ok(SamplerKind::Rw),
            "mhrw" => Ok(SamplerKind::Mhrw),
            "wrw" => Ok(SamplerKind::Wrw),
            "swrw" => Ok(SamplerKind::Swrw),
            other => Err(Error::InvalidParameter(format!("unknown sampler {other:?}"))),
        }
    }
}

/// One recorded visit: everything a crawler would see at the node.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub node: u32,
    pub degree: u32,
    pub category: u32,
    /// Sampling weight of the node under the sampler's equilibrium, known up
    /// to a constant: 1 for UIS/MHRW, `z(v)` for WIS, `deg(v)` for RW, and
    /// `w(v)` for WRW.
    pub weight: f64,
    /// Category multiset of the node's neighbor list, as `(category, count)`.
    pub neighbor_categories: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct WalkSample {
    pub visits: Vec<Visit>,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub burn_in: usize,
    /// False for traces loaded from CSV, which carry no neighbor information.
    pub neighbor_info: bool,
}

impl WalkSample {
    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

fn neighbor_category_counts(g: &WeightedGraph, p: &CategoryPartition, v: u32) -> Vec<(u32, u32)> {
    let mut cats: Vec<u32> = g.neighbors(v).map(|(u, _)| p.category_of(u)).collect();
    cats.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for c in cats {
        match out.last_mut() {
            Some((lc, n)) if *lc == c => *n += 1,
            _ => out.push((c, 1)),
        }
    }
    out
}

fn visit(g: &WeightedGraph, p: &CategoryPartition, v: u32, weight: f64) -> Visit {
    Visit {
        node: v,
        degree: g.degree(v),
        category: p.category_of(v),
        weight,
        neighbor_categories: neighbor_category_counts(g, p, v),
    }
}

fn check_inputs(g: &WeightedGraph, p: &CategoryPartition, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    if p.node_count() != g.node_count() {
        return Err(Error::InvalidParameter("partition does not cover the graph".into()));
    }
    Ok(())
}

/// Uniform independence sampling: `n` i.i.d. uniform draws with replacement.
pub fn uis(g: &WeightedGraph, p: &CategoryPartition, n: usize, seed: u64) -> Result<WalkSample> {
    check_inputs(g, p, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let visits = (0..n)
        .map(|_| {
            let v = rng.gen_range(0..g.node_count() as u32);
            visit(g, p, v, 1.0)
        })
        .collect();
    Ok(WalkSample { visits, sampler: SamplerKind::Uis, seed, burn_in: 0, neighbor_info: true })
}

/// Weighted independence sampling with `P(v) = z(v) / sum z`.
pub fn wis(
    g: &WeightedGraph,
    p: &CategoryPartition,
    n: usize,
    z: &[f64],
    seed: u64,
) -> Result<WalkSample> {
    check_inputs(g, p, n)?;
    if z.len() != g.node_count() {
        return Err(Error::InvalidParameter("weight vector length mismatch".into()));
    }
    if z.iter().any(|&w| w < 0.0 || w.is_nan()) {
        return Err(Error::InvalidParameter("node weights must be nonnegative".into()));
    }
    let mut cum = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    for &w in z {
        acc += w;
        cum.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::Degenerate("all node weights are zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let visits = (0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * acc;
            let mut v = cum.partition_point(|&c| c <= r).min(z.len() - 1);
            // only reachable when r lands past the last cumulative value due
            // to floating-point slack; fall back to the last positive slot
            while z[v] == 0.0 {
                v -= 1;
            }
            visit(g, p, v as u32, z[v])
        })
        .collect();
    Ok(WalkSample { visits, sampler: SamplerKind::Wis, seed, burn_in: 0, neighbor_info: true })
}

/// Next hop of a weighted walk from `u`. With `unit_weights` every incident
/// endpoint counts 1 (a self-loop counts 2), which is the simple random walk.
pub(crate) fn step(g: &WeightedGraph, u: u32, rng: &mut ChaCha8Rng, unit_weights: bool) -> Result<u32> {
    let total = if unit_weights {
        g.degree(u) as f64
    } else {
        g.node_weight_dense(u)
    };
    if total <= 0.0 {
        return Err(Error::Stuck(u));
    }
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (v, w) in g.neighbors(u) {
        let eff = if unit_weights {
            if v == u { 2.0 } else { 1.0 }
        } else if v == u {
            2.0 * w
        } else {
            w
        };
        if eff > 0.0 {
            acc += eff;
            last_positive = Some(v);
            if r < acc {
                return Ok(v);
            }
        }
    }
    // floating-point slack at the top of the cumulative scan
    last_positive.ok_or(Error::Stuck(u))
}

fn start_node(g: &WeightedGraph, start: Option<u32>, rng: &mut ChaCha8Rng) -> Result<u32> {
    match start {
        Some(s) => {
            if (s as usize) < g.node_count() {
                Ok(s)
            } else {
                Err(Error::UnknownNode(s as u64))
            }
        }
        None => Ok(rng.gen_range(0..g.node_count() as u32)),
    }
}

/// Simple random walk; equilibrium `deg(v) / 2|E|`.
pub fn rw(
    g: &WeightedGraph,
    p: &CategoryPartition,
    n: usize,
    start: Option<u32>,
    burn_in: usize,
    seed: u64,
) -> Result<WalkSample> {
    walk(g, p, n, start, burn_in, seed, SamplerKind::Rw)
}

/// Weighted random walk with `P(u,v) proportional to w(u,v)`; equilibrium
/// `w(v) / sum w`. Zero-weight edges are never traversed.
pub fn wrw(
    g: &WeightedGraph,
    p: &CategoryPartition,
    n: usize,
    start: Option<u32>,
    burn_in: usize,
    seed: u64,
) -> Result<WalkSample> {
    walk(g, p, n, start, burn_in, seed, SamplerKind::Wrw)
}

fn walk(
    g: &WeightedGraph,
    p: &CategoryPartition,
    n: usize,
    start: Option<u32>,
    burn_in: usize,
    seed: u64,
    kind: SamplerKind,
) -> Result<WalkSample> {
    check_inputs(g, p, n)?;
    let unit = kind == SamplerKind::Rw;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = start_node(g, start, &mut rng)?;
    let mut visits = Vec::with_capacity(n);
    for i in 0..burn_in + n {
        if i > 0 {
            cur = step(g, cur, &mut rng, unit)?;
        }
        if i >= burn_in {
            let w = if unit { g.degree(cur) as f64 } else { g.node_weight_dense(cur) };
            visits.push(visit(g, p, cur, w));
        }
    }
    Ok(WalkSample { visits, sampler: kind, seed, burn_in, neighbor_info: true })
}

/// Metropolis-Hastings random walk targeting the uniform distribution:
/// propose a uniform neighbor `v`, accept with `min(1, deg(u)/deg(v))`, and
/// record a repeat visit of `u` on rejection.
pub fn mhrw(
    g: &WeightedGraph,
    p: &CategoryPartition,
    n: usize,
    start: Option<u32>,
    burn_in: usize,
    seed: u64,
) -> Result<WalkSample> {
    check_inputs(g, p, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = start_node(g, start, &mut rng)?;
    let mut visits = Vec::with_capacity(n);
    for i in 0..burn_in + n {
        if i > 0 {
            let proposal = step(g, cur, &mut rng, true)?;
            let (du, dv) = (g.degree(cur) as f64, g.degree(proposal) as f64);
            if du >= dv || rng.gen::<f64>() < du / dv {
                cur = proposal;
            }
        }
        if i >= burn_in {
            visits.push(visit(g, p, cur, 1.0));
        }
    }
    Ok(WalkSample { visits, sampler: SamplerKind::Mhrw, seed, burn_in, neighbor_info: true })
}

/// Per-node stationary probabilities, summing to 1.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub probabilities: Vec<f64>,
}

const POWER_ITER_TOL: f64 = 1e-12;
const POWER_ITER_CAP: usize = 200_000;

/// Stationary distribution of the weighted walk, by power iteration.
///
/// Verification oracle: the result must match `w(v) / sum w` analytically;
/// keeping the iterative route independent lets tests cross-check the two.
pub fn exact_stationary(g: &WeightedGraph) -> Result<StationaryDistribution> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !g.positive_weight_connected() {
        return Err(Error::Disconnected);
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..POWER_ITER_CAP {
        next.iter_mut().for_each(|x| *x = 0.0);
        for u in 0..n as u32 {
            let total = g.node_weight_dense(u);
            if total <= 0.0 {
                return Err(Error::Disconnected);
            }
            let mass = pi[u as usize];
            for (v, w) in g.neighbors(u) {
                let eff = if v == u { 2.0 * w } else { w };
                if eff > 0.0 {
                    next[v as usize] += mass * eff / total;
                }
            }
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < POWER_ITER_TOL {
            let sum: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|x| *x /= sum);
            return Ok(StationaryDistribution { probabilities: pi });
        }
    }
    Err(Error::NonConvergence)
}

/// Empirical visit frequencies of a sample, as a per-node vector.
pub fn visit_frequencies(sample: &WalkSample, node_count: usize) -> Vec<f64> {
    let mut freq = vec![0.0; node_count];
    for v in &sample.visits {
        freq[v.node as usize] += 1.0;
    }
    let n = sample.len() as f64;
    freq.iter_mut().for_each(|x| *x /= n);
    freq
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
