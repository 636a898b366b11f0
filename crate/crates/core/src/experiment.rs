//! Replicated sampling experiments: NRMSE curves over sample-size grids,
//! error-vs-weight sweeps, gain measurement by curve matching, and the
//! closed-form oracle for the paired-nodes toy walk.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::estimate::{category_size_fractions, nrmse, nrmse_stderr, volume_fraction_node, volume_fraction_star};
use crate::generate::{gen_toy_a, gen_toy_b, gen_two_community, toy_a_p, TwoCommunitySpec};
use crate::graph::{set_stats, CategoryPartition, WeightedGraph};
use crate::pipeline::{run_swrw, SwrwConfig};
use crate::walk::{self, mhrw, rw, uis, wis, wrw, WalkSample};

#[derive(Debug, Clone)]
pub enum Scenario {
    TwoCommunity(TwoCommunitySpec),
    ToyA { category_size: usize, w1: f64, w2: f64 },
    ToyB { clique_size: usize, tiny_size: usize, attachment: usize, w1: f64, w2: f64 },
}

impl Scenario {
    pub fn instantiate(&self, seed: u64) -> Result<(WeightedGraph, CategoryPartition)> {
        match self {
            Scenario::TwoCommunity(spec) => gen_two_community(spec, seed),
            Scenario::ToyA { category_size, w1, w2 } => gen_toy_a(*category_size, *w1, *w2),
            Scenario::ToyB { clique_size, tiny_size, attachment, w1, w2 } => {
                gen_toy_b(*clique_size, *tiny_size, *attachment, *w1, *w2, seed)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scenario::TwoCommunity(spec) => {
                format!("two_community_{}", spec.label_mode.as_str())
            }
            Scenario::ToyA { .. } => "toy_a".into(),
            Scenario::ToyB { .. } => "toy_b".into(),
        }
    }
}

/// A sampling method aimed at one target category.
#[derive(Debug, Clone)]
pub enum Method {
    Uis,
    /// Independence sampling with weight `w` on target-category nodes, 1
    /// elsewhere.
    Wis { w: f64 },
    Rw,
    Mhrw,
    /// Weighted walk where every edge incident on the target category
    /// carries `w`, all others 1.
    Wrw { w: f64 },
    Swrw(SwrwConfig),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Uis => "uis".into(),
            Method::Wis { .. } => "wis".into(),
            Method::Rw => "rw".into(),
            Method::Mhrw => "mhrw".into(),
            Method::Wrw { .. } => "wrw".into(),
            Method::Swrw(_) => "swrw".into(),
        }
    }

    /// The single scalar the report's `param` column carries.
    pub fn param(&self) -> f64 {
        match self {
            Method::Wis { w } | Method::Wrw { w } => *w,
            Method::Swrw(cfg) => cfg.gamma,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub n: usize,
    pub nrmse: f64,
    pub stderr: f64,
    /// Fraction of replications that visited the target category at all.
    pub visit_prob: f64,
    pub stuck: usize,
    pub replications_used: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub scenario: String,
    pub method: String,
    pub param: f64,
    pub rows: Vec<ReportRow>,
    pub replications: usize,
    pub master_seed: u64,
}

fn target_weights(g: &WeightedGraph, p: &CategoryPartition, target: u32, w: f64) -> Vec<f64> {
    (0..g.node_count() as u32)
        .map(|v| if p.category_of(v) == target { w } else { 1.0 })
        .collect()
}

fn target_edge_reweight(
    g: &WeightedGraph,
    p: &CategoryPartition,
    target: u32,
    w: f64,
) -> WeightedGraph {
    g.reweighted(|u, v, _| {
        if p.category_of(u) == target || p.category_of(v) == target {
            w
        } else {
            1.0
        }
    })
}

fn one_sample(
    g: &WeightedGraph,
    p: &CategoryPartition,
    target: u32,
    method: &Method,
    wrw_graph: Option<&WeightedGraph>,
    n: usize,
    seed: u64,
) -> Result<WalkSample> {
    match method {
        Method::Uis => uis(g, p, n, seed),
        Method::Wis { w } => wis(g, p, n, &target_weights(g, p, target, *w), seed),
        Method::Rw => rw(g, p, n, None, 0, seed),
        Method::Mhrw => mhrw(g, p, n, None, 0, seed),
        Method::Wrw { .. } => wrw(wrw_graph.unwrap(), p, n, None, 0, seed),
        Method::Swrw(cfg) => {
            // n is the total budget; the pilot is paid out of it
            let pilot = cfg.effective_pilot_length(n);
            if pilot + 1 > n {
                return Err(Error::InvalidParameter("budget smaller than the pilot".into()));
            }
            let mut cfg = cfg.clone();
            cfg.pilot_length = Some(pilot);
            Ok(run_swrw(g, p, &cfg, n - pilot, seed)?.sample)
        }
    }
}

/// `R` independent replications per grid point, estimating the target
/// category's size fraction; NRMSE is taken against the exact fraction.
/// When the partition carries an irrelevant category the fraction is taken
/// among the relevant categories only — the irrelevant mass is not an
/// estimand, and its deliberately tiny sampling weights would otherwise
/// dominate the denominator of the re-weighted estimator.
/// Replications that get stuck fail the run unless `skip_stuck` excludes
/// (and counts) them.
pub fn run_replications(
    g: &WeightedGraph,
    p: &CategoryPartition,
    target: u32,
    method: &Method,
    n_grid: &[usize],
    r: usize,
    master_seed: u64,
    skip_stuck: bool,
) -> Result<ExperimentReport> {
    if r == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("empty sample-size grid".into()));
    }
    let relevant_total: usize = (0..p.category_count() as u32)
        .filter(|&c| !p.is_irrelevant(c))
        .map(|c| p.size(c))
        .sum();
    if p.is_irrelevant(target) || relevant_total == 0 {
        return Err(Error::InvalidParameter("target category must be relevant".into()));
    }
    let truth = p.size(target) as f64 / relevant_total as f64;
    let wrw_graph = match method {
        Method::Wrw { w } => Some(target_edge_reweight(g, p, target, *w)),
        _ => None,
    };

    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let results: Vec<Result<Option<(f64, bool)>>> = (0..r as u64)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(master_seed, ((gi as u64) << 32) | rep);
                match one_sample(g, p, target, method, wrw_graph.as_ref(), n, seed) {
                    Ok(sample) => {
                        let fractions = category_size_fractions(&sample, p)?;
                        let relevant: f64 = fractions
                            .iter()
                            .enumerate()
                            .filter(|&(c, _)| !p.is_irrelevant(c as u32))
                            .map(|(_, f)| f)
                            .sum();
                        let f = if relevant > 0.0 {
                            fractions[target as usize] / relevant
                        } else {
                            0.0
                        };
                        let visited = sample.visits.iter().any(|v| v.category == target);
                        Ok(Some((f, visited)))
                    }
                    Err(Error::Stuck(u)) if skip_stuck => {
                        let _ = u;
                        Ok(None)
                    }
                    Err(e) => Err(e),
                }
            })
            .collect();

        let mut estimates = Vec::with_capacity(r);
        let mut visited_count = 0usize;
        let mut stuck = 0usize;
        for res in results {
            match res? {
                Some((f, visited)) => {
                    estimates.push(f);
                    visited_count += usize::from(visited);
                }
                None => stuck += 1,
            }
        }
        if estimates.is_empty() {
            return Err(Error::Degenerate(format!("every replication stuck at n={n}")));
        }
        let stderr = if estimates.len() < 2 {
            f64::INFINITY // single surviving replication: no spread to report
        } else {
            nrmse_stderr(&estimates, truth)?
        };
        rows.push(ReportRow {
            n,
            nrmse: nrmse(&estimates, truth)?,
            stderr,
            visit_prob: visited_count as f64 / r as f64,
            stuck,
            replications_used: estimates.len(),
            low_confidence: estimates.len() < 2,
        });
    }

    Ok(ExperimentReport {
        scenario: String::new(),
        method: method.name(),
        param: method.param(),
        rows,
        replications: r,
        master_seed,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub w: f64,
    pub nrmse: f64,
    pub stderr: f64,
    pub visit_prob: f64,
}

#[derive(Debug, Clone)]
pub struct WeightSweep {
    pub rows: Vec<SweepRow>,
    pub argmin_w: f64,
}

/// NRMSE of the target-category size estimate as a function of the category
/// weight `w`, for an independence (`wis = true`) or walk sampler.
pub fn error_vs_weight_sweep(
    g: &WeightedGraph,
    p: &CategoryPartition,
    target: u32,
    wis_sampler: bool,
    w_grid: &[f64],
    n: usize,
    r: usize,
    master_seed: u64,
) -> Result<WeightSweep> {
    if w_grid.is_empty() {
        return Err(Error::InvalidParameter("empty weight grid".into()));
    }
    let mut rows = Vec::with_capacity(w_grid.len());
    for (wi, &w) in w_grid.iter().enumerate() {
        if !(w > 0.0) {
            return Err(Error::InvalidParameter("weights in the grid must be positive".into()));
        }
        let method = if wis_sampler { Method::Wis { w } } else { Method::Wrw { w } };
        let report = run_replications(
            g,
            p,
            target,
            &method,
            &[n],
            r,
            derive_seed(master_seed, wi as u64),
            false,
        )?;
        let row = &report.rows[0];
        rows.push(SweepRow { w, nrmse: row.nrmse, stderr: row.stderr, visit_prob: row.visit_prob });
    }
    let argmin_w = rows
        .iter()
        .min_by(|a, b| a.nrmse.total_cmp(&b.nrmse))
        .map(|r| r.w)
        .unwrap();
    Ok(WeightSweep { rows, argmin_w })
}

#[derive(Debug, Clone)]
pub struct GainRow {
    pub nrmse: f64,
    pub n_optimized: usize,
    /// Baseline length reaching the same NRMSE, by log-log interpolation
    /// between its grid points; `None` when the baseline never gets there.
    pub n_baseline: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GainReport {
    pub rows: Vec<GainRow>,
}

impl GainReport {
    /// Geometric mean of the defined gains.
    pub fn mean_alpha(&self) -> Option<f64> {
        let alphas: Vec<f64> = self.rows.iter().filter_map(|r| r.alpha).collect();
        if alphas.is_empty() {
            None
        } else {
            Some((alphas.iter().map(|a| a.ln()).sum::<f64>() / alphas.len() as f64).exp())
        }
    }
}

/// Baseline length achieving `target` NRMSE, scanning the curve in grid
/// order for the first bracketing segment and interpolating log-log.
fn match_length(rows: &[ReportRow], target: f64) -> Option<f64> {
    for row in rows {
        if row.nrmse == target {
            return Some(row.n as f64);
        }
    }
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (lo, hi) = (a.nrmse.min(b.nrmse), a.nrmse.max(b.nrmse));
        if target >= lo && target <= hi && lo > 0.0 {
            let t = (target.ln() - a.nrmse.ln()) / (b.nrmse.ln() - a.nrmse.ln());
            return Some(((a.n as f64).ln() + t * ((b.n as f64).ln() - (a.n as f64).ln())).exp());
        }
    }
    None
}

/// Sampling-cost gain of `optimized` over `baseline`: for every NRMSE level
/// the optimized method achieves at length `n`, the ratio of the baseline
/// length reaching that level to `n`.
pub fn measure_gain(optimized: &ExperimentReport, baseline: &ExperimentReport) -> GainReport {
    let rows = optimized
        .rows
        .iter()
        .map(|row| {
            let n_baseline = match_length(&baseline.rows, row.nrmse);
            GainRow {
                nrmse: row.nrmse,
                n_optimized: row.n,
                n_baseline,
                alpha: n_baseline.map(|nb| nb / row.n as f64),
            }
        })
        .collect();
    GainReport { rows }
}

/// Exact volume-fraction truth for pilot-estimator comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeForm {
    Node,
    Star,
}

/// NRMSE of the target category's volume fraction from short random-walk
/// pilots, for either estimator form, at each pilot length.
pub fn pilot_volume_nrmse(
    g: &WeightedGraph,
    p: &CategoryPartition,
    target: u32,
    form: VolumeForm,
    lengths: &[usize],
    r: usize,
    master_seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let truth = set_stats(g, p, target)?.volume_fraction;
    let mut out = Vec::with_capacity(lengths.len());
    for (li, &len) in lengths.iter().enumerate() {
        let estimates: Vec<Result<f64>> = (0..r as u64)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(master_seed, ((li as u64) << 32) | rep);
                let sample = rw(g, p, len, None, 0, seed)?;
                let v = match form {
                    VolumeForm::Node => volume_fraction_node(&sample, p)?,
                    VolumeForm::Star => volume_fraction_star(&sample, p)?,
                };
                Ok(v[target as usize])
            })
            .collect();
        let estimates = estimates.into_iter().collect::<Result<Vec<f64>>>()?;
        out.push((len, nrmse(&estimates, truth)?));
    }
    Ok(out)
}

/// Closed-form moments of the paired-nodes toy estimator:
/// `E = 1/2`, `Var = (3 - 2p) / (4 n_wh)`.
pub fn toy_a_analytic(p: f64, n_wh: usize) -> Result<(f64, f64)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter("p must lie in (0, 1]".into()));
    }
    if n_wh == 0 {
        return Err(Error::InvalidParameter("n_wh must be at least 1".into()));
    }
    Ok((0.5, (3.0 - 2.0 * p) / (4.0 * n_wh as f64)))
}

/// One paired-nodes replication on the actual generated graph: `n_wh`
/// complete hub excursions, red-fraction estimate `n_red * p / n_wh`.
fn toy_a_replicate(
    g: &WeightedGraph,
    p_part: &CategoryPartition,
    hub: u32,
    red: u32,
    p: f64,
    n_wh: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut n_red = 0u64;
    for _ in 0..n_wh {
        let mut cur = walk::step(g, hub, rng, false)?;
        loop {
            if p_part.category_of(cur) == red {
                n_red += 1;
            }
            if cur == hub {
                break;
            }
            cur = walk::step(g, cur, rng, false)?;
        }
    }
    Ok(n_red as f64 * p / n_wh as f64)
}

/// Monte Carlo red-fraction estimates over `reps` independent walks on the
/// paired-nodes toy graph.
pub fn toy_a_monte_carlo(
    category_size: usize,
    w1: f64,
    w2: f64,
    n_wh: usize,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let p = toy_a_p(w1, w2)?;
    let (g, p_part) = gen_toy_a(category_size, w1, w2)?;
    let hub = (0..g.node_count() as u32)
        .find(|&v| p_part.is_irrelevant(p_part.category_of(v)))
        .ok_or_else(|| Error::Degenerate("no hub".into()))?;
    let red = p_part.category_by_label("red")?;
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, rep));
            toy_a_replicate(&g, &p_part, hub, red, p, n_wh, &mut rng)
        })
        .collect()
}

/// Lengths of consecutive relevant-visit runs between hub visits on the
/// paired-nodes toy graph; geometric with parameter `p` by construction.
pub fn toy_a_dwell_lengths(
    category_size: usize,
    w1: f64,
    w2: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<u32>> {
    toy_a_p(w1, w2)?;
    let (g, p_part) = gen_toy_a(category_size, w1, w2)?;
    let hub = (0..g.node_count() as u32)
        .find(|&v| p_part.is_irrelevant(p_part.category_of(v)))
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dwells = Vec::with_capacity(count);
    while dwells.len() < count {
        let mut cur = walk::step(&g, hub, &mut rng, false)?;
        let mut len = 0u32;
        while cur != hub {
            len += 1;
            cur = walk::step(&g, cur, &mut rng, false)?;
        }
        dwells.push(len);
    }
    Ok(dwells)
}

/// Pearson chi-square statistic for dwell lengths against Geometric(p) on
/// support {1, 2, ...}, binning the tail so every expected count is >= 5.
/// Returns (statistic, degrees of freedom).
pub fn geometric_chi_square(samples: &[u32], p: f64) -> Result<(f64, usize)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter("p must lie in (0, 1]".into()));
    }
    let n = samples.len() as f64;
    // bins 1..=k plus a tail; grow k while the tail expectation stays >= 5
    let mut k = 1usize;
    while n * (1.0 - p).powi(k as i32 + 1) >= 5.0 && k < 64 {
        k += 1;
    }
    let mut observed = vec![0.0f64; k + 1];
    for &s in samples {
        let idx = (s.max(1) as usize - 1).min(k);
        observed[idx] += 1.0;
    }
    let mut stat = 0.0;
    for (i, &obs) in observed.iter().enumerate() {
        let expect = if i < k {
            n * p * (1.0 - p).powi(i as i32)
        } else {
            n * (1.0 - p).powi(k as i32)
        };
        if expect > 0.0 {
            stat += (obs - expect).powi(2) / expect;
        }
    }
    Ok((stat, k)) // k+1 bins, no fitted parameters -> k degrees of freedom
}
