//! The stratified weighted random walk (S-WRW) pipeline.
//!
//! A pilot random walk estimates relative category volumes; an allocation
//! objective fixes the desired category weights; a small mass is injected
//! into the irrelevant category for connectivity; tiny and undiscovered
//! category volumes are clamped from below by the resolution cap `gamma`;
//! the per-category target edge weights are materialized onto the graph with
//! a conflict-resolution rule for inter-category edges; and the main weighted
//! walk runs on the result.

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::estimate::volume_fraction_star;
use crate::graph::{CategoryPartition, WeightedGraph};
use crate::stratify::{allocate, AllocationPlan, Objective};
use crate::walk::{rw, wrw, SamplerKind, WalkSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictRule {
    Arithmetic,
    Geometric,
    Max,
    /// Geometric mean when either endpoint is irrelevant, max otherwise.
    Hybrid,
}

impl ConflictRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConflictRule::Arithmetic => "arithmetic",
            ConflictRule::Geometric => "geometric",
            ConflictRule::Max => "max",
            ConflictRule::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(ConflictRule::Arithmetic),
            "geometric" => Ok(ConflictRule::Geometric),
            "max" => Ok(ConflictRule::Max),
            "hybrid" => Ok(ConflictRule::Hybrid),
            other => Err(Error::InvalidParameter(format!("unknown conflict rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SwrwConfig {
    /// Desired irrelevant-category mass as a fraction of the relevant total.
    pub f_irrelevant: f64,
    /// Maximal resolution: categories more than `gamma` times smaller (by
    /// volume) than the largest relevant one are deliberately undersampled.
    pub gamma: f64,
    pub conflict_rule: ConflictRule,
    /// Pilot walk length; `None` means 6.5% of the main walk length.
    pub pilot_length: Option<usize>,
    pub objective: Objective,
}

impl Default for SwrwConfig {
    fn default() -> Self {
        SwrwConfig {
            f_irrelevant: 0.01,
            gamma: 100.0,
            conflict_rule: ConflictRule::Hybrid,
            pilot_length: None,
            objective: Objective::RelativeSizes,
        }
    }
}

impl SwrwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.f_irrelevant) {
            return Err(Error::InvalidParameter("f_irrelevant must lie in [0, 1)".into()));
        }
        if self.gamma < 1.0 {
            return Err(Error::InvalidParameter("gamma must be at least 1".into()));
        }
        if self.pilot_length == Some(0) {
            return Err(Error::InvalidParameter("pilot length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_pilot_length(&self, n: usize) -> usize {
        self.pilot_length.unwrap_or(((n as f64 * 0.065).ceil() as usize).max(1))
    }
}

/// Per-category record of the volume clamping and weight computation.
#[derive(Debug, Clone)]
pub struct CategoryWeightRow {
    pub category: u32,
    pub label: String,
    pub vol_hat: f64,
    pub vol_tilde: f64,
    pub w_wis: f64,
    pub w_tilde: f64,
    pub w_edge: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeWeightPlan {
    pub rows: Vec<CategoryWeightRow>,
    pub rule: ConflictRule,
    pub vol_min: f64,
}

impl EdgeWeightPlan {
    pub fn edge_targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.w_edge).collect()
    }
}

/// Relative category volumes from a short pilot random walk, via the
/// star (neighbor-based) estimator. Categories never seen get 0.
pub fn pilot_volumes(
    g: &WeightedGraph,
    p: &CategoryPartition,
    pilot_length: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sample = rw(g, p, pilot_length, None, 0, seed)?;
    volume_fraction_star(&sample, p)
}

/// Step 2: category weights optimal under WIS, `w(C_i) = n_i`; the
/// irrelevant category gets 0 before irrelevant-mass injection.
pub fn category_wis_weights(plan: &AllocationPlan, p: &CategoryPartition) -> Vec<f64> {
    let mut w = plan.weights.clone();
    if let Some(c) = p.irrelevant() {
        w[c as usize] = 0.0;
    }
    w
}

/// Step 3: give the irrelevant category mass `f_irrelevant` times the
/// relevant total. Without an irrelevant category this is a no-op.
pub fn inject_irrelevant_mass(
    weights: &[f64],
    p: &CategoryPartition,
    f_irrelevant: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&f_irrelevant) {
        return Err(Error::InvalidParameter("f_irrelevant must lie in [0, 1)".into()));
    }
    let mut out = weights.to_vec();
    if let Some(c) = p.irrelevant() {
        let relevant_total: f64 = weights
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as u32 != c)
            .map(|(_, &w)| w)
            .sum();
        out[c as usize] = f_irrelevant * relevant_total;
    }
    Ok(out)
}

/// Step 4: clamp estimated volumes from below by
/// `vol_min = (1/gamma) * max over relevant categories`, which also assigns
/// `vol_min` to categories the pilot never discovered.
pub fn clamp_volumes(
    vol_estimates: &[f64],
    p: &CategoryPartition,
    gamma: f64,
) -> Result<(Vec<f64>, f64)> {
    if gamma < 1.0 {
        return Err(Error::InvalidParameter("gamma must be at least 1".into()));
    }
    let max_relevant = vol_estimates
        .iter()
        .enumerate()
        .filter(|&(i, _)| !p.is_irrelevant(i as u32))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_relevant > 0.0) {
        return Err(Error::Degenerate(
            "all relevant volume estimates are zero; pilot walk too short".into(),
        ));
    }
    let vol_min = max_relevant / gamma;
    let clamped = vol_estimates.iter().map(|&v| v.max(vol_min)).collect();
    Ok((clamped, vol_min))
}

/// Step 5 input: per-category target edge weight `w_tilde / vol_tilde`.
pub fn target_edge_weights(w_tilde: &[f64], vol_tilde: &[f64]) -> Result<Vec<f64>> {
    if w_tilde.len() != vol_tilde.len() {
        return Err(Error::InvalidParameter("length mismatch".into()));
    }
    w_tilde
        .iter()
        .zip(vol_tilde)
        .map(|(&w, &v)| {
            if v <= 0.0 {
                Err(Error::Degenerate("zero clamped volume".into()))
            } else {
                Ok(w / v)
            }
        })
        .collect()
}

fn combine(rule: ConflictRule, a: f64, b: f64, touches_irrelevant: bool) -> f64 {
    match rule {
        ConflictRule::Arithmetic => 0.5 * (a + b),
        ConflictRule::Geometric => (a * b).sqrt(),
        ConflictRule::Max => a.max(b),
        ConflictRule::Hybrid => {
            if touches_irrelevant {
                (a * b).sqrt()
            } else {
                a.max(b)
            }
        }
    }
}

/// Step 5: materialize per-category targets onto the graph. Intra-category
/// edges take their category's target; inter-category edges are resolved by
/// the rule.
pub fn resolve_conflicts(
    g: &WeightedGraph,
    p: &CategoryPartition,
    targets: &[f64],
    rule: ConflictRule,
) -> Result<WeightedGraph> {
    if targets.len() != p.category_count() {
        return Err(Error::InvalidParameter("one target per category required".into()));
    }
    Ok(g.reweighted(|u, v, _| {
        let (cu, cv) = (p.category_of(u), p.category_of(v));
        if cu == cv {
            targets[cu as usize]
        } else {
            let touches = p.is_irrelevant(cu) || p.is_irrelevant(cv);
            combine(rule, targets[cu as usize], targets[cv as usize], touches)
        }
    }))
}

/// Coverage diagnostic of the main walk; a confined run never left a strict
/// subset of the categories.
#[derive(Debug, Clone)]
pub struct SwrwDiagnostics {
    pub categories_visited: usize,
    pub category_count: usize,
    pub confined: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct SwrwRun {
    pub sample: WalkSample,
    pub plan: EdgeWeightPlan,
    pub pilot: WalkSample,
    pub reweighted: WeightedGraph,
    pub diagnostics: SwrwDiagnostics,
}

/// Full pipeline: pilot, allocation, irrelevant-mass injection, clamping,
/// conflict resolution, then the main weighted walk of length `n`.
///
/// The pilot and the main walk draw their seeds from `seed` via fixed
/// indices, so a run is reproducible from `(config, n, seed)`.
pub fn run_swrw(
    g: &WeightedGraph,
    p: &CategoryPartition,
    config: &SwrwConfig,
    n: usize,
    seed: u64,
) -> Result<SwrwRun> {
    config.validate()?;
    let mut warnings = Vec::new();
    if p.irrelevant().is_none() && config.f_irrelevant > 0.0 {
        warnings.push("f_irrelevant > 0 but the partition has no irrelevant category".into());
    }

    let pilot_len = config.effective_pilot_length(n);
    let pilot = rw(g, p, pilot_len, None, 0, derive_seed(seed, 0))?;
    let vol_hat = volume_fraction_star(&pilot, p)?;

    // allocation over relevant categories; pilot volume estimates stand in
    // for the unknown sizes where the objective needs them
    let strata = (0..p.category_count())
        .map(|c| crate::stratify::Stratum {
            label: p.label(c as u32).to_string(),
            size: vol_hat[c].max(f64::MIN_POSITIVE),
            sigma: None,
            relevant: !p.is_irrelevant(c as u32),
        })
        .collect();
    let spec = crate::stratify::StratumSpec::new(strata, 1.0)?;
    let allocation = allocate(&spec, config.objective)?;

    let w_wis = category_wis_weights(&allocation, p);
    let w_tilde = inject_irrelevant_mass(&w_wis, p, config.f_irrelevant)?;
    let (vol_tilde, vol_min) = clamp_volumes(&vol_hat, p, config.gamma)?;
    let w_edge = target_edge_weights(&w_tilde, &vol_tilde)?;
    let reweighted = resolve_conflicts(g, p, &w_edge, config.conflict_rule)?;

    let mut sample = wrw(&reweighted, p, n, None, 0, derive_seed(seed, 1))?;
    sample.sampler = SamplerKind::Swrw;

    let mut seen = vec![false; p.category_count()];
    for v in &sample.visits {
        seen[v.category as usize] = true;
    }
    let categories_visited = seen.iter().filter(|&&s| s).count();
    let diagnostics = SwrwDiagnostics {
        categories_visited,
        category_count: p.category_count(),
        confined: categories_visited < p.category_count(),
        warnings,
    };

    let rows = (0..p.category_count())
        .map(|c| CategoryWeightRow {
            category: c as u32,
            label: p.label(c as u32).to_string(),
            vol_hat: vol_hat[c],
            vol_tilde: vol_tilde[c],
            w_wis: w_wis[c],
            w_tilde: w_tilde[c],
            w_edge: w_edge[c],
        })
        .collect();
    let plan = EdgeWeightPlan { rows, rule: config.conflict_rule, vol_min };

    Ok(SwrwRun { sample, plan, pilot, reweighted, diagnostics })
}

/// Achieve arbitrary positive node weights on a graph with a self-loop at
/// every node: non-loop edges get `w_min / N`, and the loop at `v` gets
/// `(w(v) - (w_min/N)(deg(v) - 2)) / 2`, which reproduces every target
/// exactly with all weights positive.
pub fn arbitrary_node_weights(g: &WeightedGraph, targets: &[f64]) -> Result<WeightedGraph> {
    let n = g.node_count();
    if targets.len() != n {
        return Err(Error::InvalidParameter("one target per node required".into()));
    }
    if targets.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("targets must be positive".into()));
    }
    for v in 0..n as u32 {
        if !g.has_self_loop(v) {
            return Err(Error::MissingSelfLoop(g.external_id(v)));
        }
    }
    let w_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let base = w_min / n as f64;
    Ok(g.reweighted(|u, v, _| {
        if u == v {
            0.5 * (targets[u as usize] - base * (g.degree(u) as f64 - 2.0))
        } else {
            base
        }
    }))
}
