//! Bias-corrected estimators over walk samples.
//!
//! Every estimator works from the weights recorded in the sample, never from
//! the graph, so the same code path serves simulated traces and traces loaded
//! from disk. The general weight-corrected forms reduce to the familiar
//! special cases: recorded weight 1 gives the uniform-sample forms, recorded
//! weight `deg(v)` gives the random-walk forms.

use crate::error::{Error, Result};
use crate::graph::CategoryPartition;
use crate::walk::WalkSample;

/// Hansen-Hurwitz estimate of the population total `sum_v x(v)`:
/// `(1/n) sum_{v in S} x(v) / pi(v)`.
pub fn hh_total(sample: &WalkSample, x: &[f64], pi: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut acc = 0.0;
    for v in &sample.visits {
        let p = *pi
            .get(v.node as usize)
            .ok_or(Error::UnknownNode(v.node as u64))?;
        if p <= 0.0 {
            return Err(Error::Degenerate(format!(
                "zero sampling probability at sampled node {}",
                v.node
            )));
        }
        acc += x
            .get(v.node as usize)
            .copied()
            .ok_or(Error::UnknownNode(v.node as u64))?
            / p;
    }
    Ok(acc / sample.len() as f64)
}

/// Hansen-Hurwitz estimate of the population mean using unnormalized recorded
/// weights: `sum x(v)/w(v) / sum 1/w(v)`. Invariant under rescaling all
/// weights by a positive constant.
pub fn hh_mean(sample: &WalkSample, x: &[f64]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    for v in &sample.visits {
        if v.weight <= 0.0 {
            return Err(Error::Degenerate(format!("zero recorded weight at node {}", v.node)));
        }
        num += x
            .get(v.node as usize)
            .copied()
            .ok_or(Error::UnknownNode(v.node as u64))?
            / v.weight;
        den += 1.0 / v.weight;
    }
    Ok(num / den)
}

/// Per-category relative size estimates, summing to 1; categories never
/// observed in the sample get an explicit 0.
pub fn category_size_fractions(sample: &WalkSample, p: &CategoryPartition) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut num = vec![0.0; p.category_count()];
    let mut den = 0.0;
    for v in &sample.visits {
        if v.weight <= 0.0 {
            return Err(Error::Degenerate(format!("zero recorded weight at node {}", v.node)));
        }
        let c = v.category as usize;
        if c >= num.len() {
            return Err(Error::UnknownCategory(v.category.to_string()));
        }
        num[c] += 1.0 / v.weight;
        den += 1.0 / v.weight;
    }
    Ok(num.into_iter().map(|x| x / den).collect())
}

/// Naive (node-sampling) volume-fraction estimator:
/// `sum deg(v) 1_C / w(v)  over  sum deg(v) / w(v)`.
pub fn volume_fraction_node(sample: &WalkSample, p: &CategoryPartition) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut num = vec![0.0; p.category_count()];
    let mut den = 0.0;
    for v in &sample.visits {
        if v.weight <= 0.0 {
            return Err(Error::Degenerate(format!("zero recorded weight at node {}", v.node)));
        }
        let term = v.degree as f64 / v.weight;
        num[v.category as usize] += term;
        den += term;
    }
    if den <= 0.0 {
        return Err(Error::Degenerate("sample has zero total volume".into()));
    }
    Ok(num.into_iter().map(|x| x / den).collect())
}

/// Star-sampling volume-fraction estimator, using the neighbor categories of
/// every visit: `(1/sum deg(u)/w(u)) sum_u (1/w(u)) sum_{v in N(u)} 1_C`.
pub fn volume_fraction_star(sample: &WalkSample, p: &CategoryPartition) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if !sample.neighbor_info {
        return Err(Error::InvalidParameter(
            "trace lacks neighbor-category information required by the star estimator".into(),
        ));
    }
    let mut num = vec![0.0; p.category_count()];
    let mut den = 0.0;
    for v in &sample.visits {
        if v.weight <= 0.0 {
            return Err(Error::Degenerate(format!("zero recorded weight at node {}", v.node)));
        }
        if v.degree == 0 {
            return Err(Error::Degenerate(format!("degree-0 visit at node {}", v.node)));
        }
        for &(c, k) in &v.neighbor_categories {
            num[c as usize] += k as f64 / v.weight;
        }
        den += v.degree as f64 / v.weight;
    }
    Ok(num.into_iter().map(|x| x / den).collect())
}

/// Normalized root-mean-square error: `sqrt(mean((est - truth)^2)) / truth`.
pub fn nrmse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("no estimates".into()));
    }
    if truth == 0.0 {
        return Err(Error::Degenerate("NRMSE undefined for zero truth".into()));
    }
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(mse.sqrt() / truth.abs())
}

/// Standard error of an NRMSE estimate, by the delta method on the mean
/// squared error.
pub fn nrmse_stderr(estimates: &[f64], truth: f64) -> Result<f64> {
    let r = estimates.len();
    if r < 2 {
        return Err(Error::InvalidParameter("need at least 2 estimates".into()));
    }
    let sq: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mean = sq.iter().sum::<f64>() / r as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (r as f64 - 1.0);
    let se_mean = (var / r as f64).sqrt();
    Ok(se_mean / (2.0 * mean.sqrt() * truth.abs()))
}
