//! Closed-form stratified allocation: objectives, optimal weights, and gains.
//!
//! Allocations are real-valued — stratification is enforced in expectation by
//! the walk weights, so rounding is left to consumers. Unknown standard
//! deviations default to 1, which collapses the mean objective to
//! proportional allocation and the comparison objectives to an equal split
//! over the relevant categories.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Stratum {
    pub label: String,
    pub size: f64,
    pub sigma: Option<f64>,
    pub relevant: bool,
}

#[derive(Debug, Clone)]
pub struct StratumSpec {
    pub strata: Vec<Stratum>,
    pub budget: f64,
}

impl StratumSpec {
    pub fn new(strata: Vec<Stratum>, budget: f64) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::InvalidParameter("no strata".into()));
        }
        if strata.iter().any(|s| s.size <= 0.0) {
            return Err(Error::InvalidParameter("stratum sizes must be positive".into()));
        }
        if strata.iter().any(|s| s.sigma.map_or(false, |x| x < 0.0)) {
            return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
        }
        if budget < 0.0 {
            return Err(Error::InvalidParameter("budget must be nonnegative".into()));
        }
        Ok(StratumSpec { strata, budget })
    }

    fn total_size(&self) -> f64 {
        self.strata.iter().map(|s| s.size).sum()
    }

    fn sigma(&self, i: usize) -> f64 {
        self.strata[i].sigma.unwrap_or(1.0)
    }

    fn relevant_indices(&self) -> Vec<usize> {
        (0..self.strata.len()).filter(|&i| self.strata[i].relevant).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `n_i proportional to |C_i|`, over every category.
    Proportional,
    /// Minimal variance of the whole-population mean (Neyman allocation).
    Mean,
    /// Equal, highest possible per-category precision.
    MaxPrecision,
    /// Minimal sum of per-category variances.
    SumVariances,
    /// Equal split over relevant categories, optimal for size comparison.
    RelativeSizes,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Proportional => "proportional",
            Objective::Mean => "mean",
            Objective::MaxPrecision => "max_precision",
            Objective::SumVariances => "sum_variances",
            Objective::RelativeSizes => "relative_sizes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(Objective::Proportional),
            "mean" | "neyman" => Ok(Objective::Mean),
            "max_precision" | "max" => Ok(Objective::MaxPrecision),
            "sum_variances" | "sum" => Ok(Objective::SumVariances),
            "relative_sizes" | "sizes" => Ok(Objective::RelativeSizes),
            other => Err(Error::InvalidParameter(format!("unknown objective {other:?}"))),
        }
    }
}

/// Per-category target sample counts and the induced WIS category weights.
#[derive(Debug, Clone)]
pub struct AllocationPlan {
    pub objective: Objective,
    /// Real-valued `n_i`, summing to the budget.
    pub allocations: Vec<f64>,
    /// `w(C_i) proportional to n_i`; equal to `n_i` as stored.
    pub weights: Vec<f64>,
}

impl AllocationPlan {
    fn from_allocations(objective: Objective, allocations: Vec<f64>) -> Self {
        let weights = allocations.clone();
        AllocationPlan { objective, allocations, weights }
    }
}

pub fn allocate(spec: &StratumSpec, objective: Objective) -> Result<AllocationPlan> {
    match objective {
        Objective::Proportional => proportional(spec),
        Objective::Mean => neyman(spec),
        Objective::MaxPrecision => max_precision(spec),
        Objective::SumVariances => sum_variances(spec),
        Objective::RelativeSizes => relative_sizes(spec),
    }
}

/// `n_i = |C_i| n / N`, over every category including the irrelevant one.
pub fn proportional(spec: &StratumSpec) -> Result<AllocationPlan> {
    let total = spec.total_size();
    let alloc = spec.strata.iter().map(|s| s.size * spec.budget / total).collect();
    Ok(AllocationPlan::from_allocations(Objective::Proportional, alloc))
}

fn optimal_by(
    spec: &StratumSpec,
    objective: Objective,
    score: impl Fn(&StratumSpec, usize) -> f64,
) -> Result<AllocationPlan> {
    let relevant = spec.relevant_indices();
    if relevant.is_empty() {
        return Err(Error::InvalidParameter("no relevant categories".into()));
    }
    let total: f64 = relevant.iter().map(|&i| score(spec, i)).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all stratum scores are zero".into()));
    }
    let mut alloc = vec![0.0; spec.strata.len()];
    for &i in &relevant {
        alloc[i] = score(spec, i) / total * spec.budget;
    }
    Ok(AllocationPlan::from_allocations(objective, alloc))
}

/// Neyman allocation, optimal for the population mean:
/// `n_i = |C_i| sigma_i / sum |C_j| sigma_j * n`.
pub fn neyman(spec: &StratumSpec) -> Result<AllocationPlan> {
    optimal_by(spec, Objective::Mean, |s, i| s.strata[i].size * s.sigma(i))
}

/// Equalizes `Var(mu_i) = sigma_i^2 / n_i`: `n_i = sigma_i^2 / sum sigma_j^2 * n`.
pub fn max_precision(spec: &StratumSpec) -> Result<AllocationPlan> {
    optimal_by(spec, Objective::MaxPrecision, |s, i| s.sigma(i).powi(2))
}

/// Minimizes the sum of per-category variances: `n_i = sigma_i / sum sigma_j * n`.
pub fn sum_variances(spec: &StratumSpec) -> Result<AllocationPlan> {
    optimal_by(spec, Objective::SumVariances, |s, i| s.sigma(i))
}

/// Equal split over relevant categories, optimal for estimating their
/// relative sizes. Requires at least two relevant categories.
pub fn relative_sizes(spec: &StratumSpec) -> Result<AllocationPlan> {
    let relevant = spec.relevant_indices();
    if relevant.len() < 2 {
        return Err(Error::InvalidParameter(
            "relative-size allocation needs at least 2 relevant categories".into(),
        ));
    }
    let mut alloc = vec![0.0; spec.strata.len()];
    for &i in &relevant {
        alloc[i] = spec.budget / relevant.len() as f64;
    }
    Ok(AllocationPlan::from_allocations(Objective::RelativeSizes, alloc))
}

/// Gain of optimal over proportional allocation (always >= 1), computed over
/// the relevant categories only.
pub fn gain(spec: &StratumSpec, objective: Objective) -> Result<f64> {
    let relevant = spec.relevant_indices();
    if relevant.is_empty() {
        return Err(Error::InvalidParameter("no relevant categories".into()));
    }
    let n_total: f64 = relevant.iter().map(|&i| spec.strata[i].size).sum();
    match objective {
        Objective::Mean => {
            let num: f64 = relevant
                .iter()
                .map(|&i| spec.strata[i].size * spec.sigma(i).powi(2))
                .sum();
            let den: f64 = relevant.iter().map(|&i| spec.strata[i].size * spec.sigma(i)).sum();
            if den <= 0.0 {
                return Err(Error::Degenerate("all sigma are zero".into()));
            }
            Ok(n_total * num / den.powi(2))
        }
        Objective::MaxPrecision => {
            let num = relevant
                .iter()
                .map(|&i| n_total / spec.strata[i].size * spec.sigma(i).powi(2))
                .fold(f64::NEG_INFINITY, f64::max);
            let den: f64 = relevant.iter().map(|&i| spec.sigma(i).powi(2)).sum();
            if den <= 0.0 {
                return Err(Error::Degenerate("all sigma are zero".into()));
            }
            Ok(num / den)
        }
        Objective::SumVariances => {
            let num: f64 = relevant
                .iter()
                .map(|&i| n_total / spec.strata[i].size * spec.sigma(i).powi(2))
                .sum();
            let den: f64 = relevant.iter().map(|&i| spec.sigma(i)).sum();
            if den <= 0.0 {
                return Err(Error::Degenerate("all sigma are zero".into()));
            }
            Ok(num / den.powi(2))
        }
        Objective::RelativeSizes => {
            if relevant.len() != 2 {
                return Err(Error::InvalidParameter(
                    "size-comparison gain is defined for exactly 2 relevant categories".into(),
                ));
            }
            let (a, b) = (spec.strata[relevant[0]].size, spec.strata[relevant[1]].size);
            Ok(n_total.powi(2) / (4.0 * a * b))
        }
        Objective::Proportional => Err(Error::InvalidParameter(
            "gain is defined relative to proportional allocation".into(),
        )),
    }
}

/// Gain when an irrelevant category is avoided entirely:
/// `N / (N - |C_irrelevant|)` times the gain over the relevant categories.
pub fn gain_with_irrelevant(spec: &StratumSpec, objective: Objective) -> Result<f64> {
    let n_total = spec.total_size();
    let n_irr: f64 = spec.strata.iter().filter(|s| !s.relevant).map(|s| s.size).sum();
    if n_irr >= n_total {
        return Err(Error::Degenerate("every category is irrelevant".into()));
    }
    Ok(n_total / (n_total - n_irr) * gain(spec, objective)?)
}

/// Two-category WIS size estimator: from `X1` hits in `n` draws with
/// per-category node weights `w1`, `w2`, estimate
/// `f1 = X1 w2 / (X1 (w2 - w1) + n w1)`.
pub fn wis_two_category_estimate(x1: f64, n: f64, w1: f64, w2: f64) -> Result<f64> {
    if w1 <= 0.0 || w2 <= 0.0 {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    if x1 < 0.0 || x1 > n {
        return Err(Error::InvalidParameter("X1 must lie in [0, n]".into()));
    }
    let den = x1 * (w2 - w1) + n * w1;
    if den == 0.0 {
        return Err(Error::Degenerate("estimator denominator is zero".into()));
    }
    Ok(x1 * w2 / den)
}

/// Delta-method variance of the two-category WIS size estimator at the true
/// fractions: `f1 f2 / (n w1 w2) * (f1 w1 + f2 w2)^2`.
pub fn wis_two_category_variance(f1: f64, n: f64, w1: f64, w2: f64) -> Result<f64> {
    if w1 <= 0.0 || w2 <= 0.0 || n <= 0.0 {
        return Err(Error::InvalidParameter("weights and n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&f1) {
        return Err(Error::InvalidParameter("f1 must lie in [0, 1]".into()));
    }
    let f2 = 1.0 - f1;
    Ok(f1 * f2 / (n * w1 * w2) * (f1 * w1 + f2 * w2).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sizes: &[f64], sigmas: &[Option<f64>], budget: f64) -> StratumSpec {
        let strata = sizes
            .iter()
            .zip(sigmas)
            .enumerate()
            .map(|(i, (&size, &sigma))| Stratum {
                label: format!("c{i}"),
                size,
                sigma,
                relevant: true,
            })
            .collect();
        StratumSpec::new(strata, budget).unwrap()
    }

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn proportional_formula() {
        let p = proportional(&spec(&[100.0, 300.0], &[None, None], 40.0)).unwrap();
        assert_eq!(p.allocations, vec![10.0, 30.0]);
        let one = proportional(&spec(&[50.0], &[None], 7.0)).unwrap();
        assert_eq!(one.allocations, vec![7.0]);
        let eq = proportional(&spec(&[5.0, 5.0, 5.0], &[None, None, None], 9.0)).unwrap();
        assert_eq!(eq.allocations, vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn neyman_formula() {
        let p = neyman(&spec(&[100.0, 300.0], &[Some(2.0), Some(1.0)], 50.0)).unwrap();
        assert_close(p.allocations[0], 20.0);
        assert_close(p.allocations[1], 30.0);
    }

    #[test]
    fn neyman_equal_sigma_is_proportional() {
        let s = spec(&[120.0, 30.0, 50.0], &[None, None, None], 40.0);
        let a = neyman(&s).unwrap();
        let b = proportional(&s).unwrap();
        for (x, y) in a.allocations.iter().zip(&b.allocations) {
            assert_close(*x, *y);
        }
    }

    #[test]
    fn neyman_zero_sigma_category_gets_zero() {
        let p = neyman(&spec(&[10.0, 10.0], &[Some(0.0), Some(1.0)], 8.0)).unwrap();
        assert_eq!(p.allocations[0], 0.0);
        assert_close(p.allocations[1], 8.0);
        assert!(neyman(&spec(&[10.0, 10.0], &[Some(0.0), Some(0.0)], 8.0)).is_err());
    }

    #[test]
    fn max_precision_formula() {
        let p = max_precision(&spec(&[3.0, 5.0], &[Some(1.0), Some(1.0)], 10.0)).unwrap();
        assert_eq!(p.allocations, vec![5.0, 5.0]);
        let p = max_precision(&spec(&[3.0, 5.0], &[Some(1.0), Some(2.0)], 10.0)).unwrap();
        assert_close(p.allocations[0], 2.0);
        assert_close(p.allocations[1], 8.0);
        // per-category variance equal by construction
        let v0 = 1.0f64.powi(2) / p.allocations[0];
        let v1 = 2.0f64.powi(2) / p.allocations[1];
        assert_close(v0, v1);
    }

    #[test]
    fn sum_variances_formula() {
        let p = sum_variances(&spec(&[1.0, 1.0], &[Some(1.0), Some(2.0)], 9.0)).unwrap();
        assert_close(p.allocations[0], 3.0);
        assert_close(p.allocations[1], 6.0);
        let eq = sum_variances(&spec(&[1.0, 2.0, 3.0], &[None, None, None], 9.0)).unwrap();
        assert_eq!(eq.allocations, vec![3.0, 3.0, 3.0]);
        // optimal objective value equals (sum sigma)^2 / n
        let var_sum: f64 = [1.0f64, 2.0].iter().zip(&p.allocations).map(|(s, n)| s * s / n).sum();
        assert_close(var_sum, (1.0f64 + 2.0).powi(2) / 9.0);
    }

    #[test]
    fn relative_sizes_equal_split() {
        let p = relative_sizes(&spec(&[10.0, 1000.0], &[None, None], 100.0)).unwrap();
        assert_eq!(p.allocations, vec![50.0, 50.0]);
        // induced weights satisfy w1 f1 = w2 f2 on per-node weights
        // (category weight n_i spread over |C_i| nodes)
        let w1 = p.weights[0] / 10.0;
        let w2 = p.weights[1] / 1000.0;
        assert_close(w1 * (10.0 / 1010.0), w2 * (1000.0 / 1010.0));
    }

    #[test]
    fn relative_sizes_needs_two_relevant() {
        let mut s = spec(&[10.0, 20.0], &[None, None], 10.0);
        s.strata[1].relevant = false;
        assert!(relative_sizes(&s).is_err());
    }

    #[test]
    fn allocations_sum_to_budget_and_nonnegative() {
        let s = spec(&[13.0, 7.0, 101.0], &[Some(0.3), Some(2.1), Some(1.4)], 37.0);
        for obj in [
            Objective::Proportional,
            Objective::Mean,
            Objective::MaxPrecision,
            Objective::SumVariances,
            Objective::RelativeSizes,
        ] {
            let p = allocate(&s, obj).unwrap();
            let total: f64 = p.allocations.iter().sum();
            assert!((total - 37.0).abs() < 1e-9, "{obj:?}");
            assert!(p.allocations.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn irrelevant_gets_zero_under_optimal_objectives() {
        let mut s = spec(&[10.0, 20.0, 70.0], &[None, None, None], 30.0);
        s.strata[2].relevant = false;
        for obj in [
            Objective::Mean,
            Objective::MaxPrecision,
            Objective::SumVariances,
            Objective::RelativeSizes,
        ] {
            let p = allocate(&s, obj).unwrap();
            assert_eq!(p.allocations[2], 0.0, "{obj:?}");
            assert!((p.allocations.iter().sum::<f64>() - 30.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gain_sizes_formula() {
        let s = spec(&[1000.0, 100_000.0], &[None, None], 1.0);
        let a = gain(&s, Objective::RelativeSizes).unwrap();
        assert_close(a, 101_000.0f64.powi(2) / (4.0 * 1000.0 * 100_000.0));
        assert_close(a, 25.5025);
        let even = spec(&[50.0, 50.0], &[None, None], 1.0);
        assert_close(gain(&even, Objective::RelativeSizes).unwrap(), 1.0);
    }

    #[test]
    fn gain_mean_lower_bound_attained() {
        let s = spec(&[10.0, 10.0], &[Some(1.0), Some(1.0)], 1.0);
        assert_close(gain(&s, Objective::Mean).unwrap(), 1.0);
    }

    #[test]
    fn gain_at_least_one_on_random_specs() {
        let mut state = 12345u64;
        let mut next = || {
            state = crate::derive_seed(state, 1);
            (state % 1000) as f64 / 100.0 + 0.01
        };
        for _ in 0..200 {
            let sizes = [next() * 50.0, next() * 50.0, next() * 50.0];
            let sigmas = [Some(next()), Some(next()), Some(next())];
            let s = spec(&sizes, &sigmas, 10.0);
            for obj in [Objective::Mean, Objective::MaxPrecision, Objective::SumVariances] {
                let a = gain(&s, obj).unwrap();
                assert!(a >= 1.0 - 1e-12, "{obj:?} gain {a}");
            }
            let two = spec(&sizes[..2], &sigmas[..2], 10.0);
            assert!(gain(&two, Objective::RelativeSizes).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn gain_sizes_requires_two_categories() {
        let s = spec(&[1.0, 2.0, 3.0], &[None, None, None], 1.0);
        assert!(gain(&s, Objective::RelativeSizes).is_err());
    }

    #[test]
    fn gain_with_irrelevant_formula() {
        let mut s = spec(&[25.0, 25.0, 50.0], &[Some(2.0), Some(1.0), None], 1.0);
        s.strata[2].relevant = false;
        let inner = gain(&s, Objective::Mean).unwrap();
        let total = gain_with_irrelevant(&s, Objective::Mean).unwrap();
        assert_close(total, 2.0 * inner);

        // no irrelevant category reduces to the plain gain
        let r = spec(&[25.0, 25.0], &[Some(2.0), Some(1.0)], 1.0);
        assert_close(
            gain_with_irrelevant(&r, Objective::Mean).unwrap(),
            gain(&r, Objective::Mean).unwrap(),
        );
    }

    #[test]
    fn gain_with_irrelevant_all_irrelevant_errors() {
        let mut s = spec(&[10.0], &[None], 1.0);
        s.strata[0].relevant = false;
        assert!(gain_with_irrelevant(&s, Objective::Mean).is_err());
    }

    #[test]
    fn avoidance_factor_facebook_like() {
        // 96.5% irrelevant mass gives an avoidance factor of about 28.6 alone
        let mut s = spec(&[1.75, 1.75, 96.5], &[None, None, None], 1.0);
        s.strata[2].relevant = false;
        let sizes_inner = gain(&s, Objective::RelativeSizes).unwrap();
        let total = gain_with_irrelevant(&s, Objective::RelativeSizes).unwrap();
        let avoidance = total / sizes_inner;
        assert!((avoidance - 1.0 / 0.035).abs() < 0.01, "avoidance {avoidance}");
    }

    #[test]
    fn wis_two_category_estimator_cases() {
        assert_close(wis_two_category_estimate(5.0, 10.0, 1.0, 1.0).unwrap(), 0.5);
        assert_close(wis_two_category_estimate(5.0, 10.0, 1.0, 2.0).unwrap(), 2.0 / 3.0);
        assert!(wis_two_category_estimate(5.0, 10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn wis_variance_minimized_at_equal_category_mass() {
        // grid argmin of the analytic variance satisfies w1 f1 = w2 f2
        let (f1, n) = (0.2, 1000.0);
        let f2 = 1.0 - f1;
        let w2 = 1.0;
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.05).collect();
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| {
                wis_two_category_variance(f1, n, *a, w2)
                    .unwrap()
                    .total_cmp(&wis_two_category_variance(f1, n, *b, w2).unwrap())
            })
            .unwrap();
        let optimal_w1 = f2 * w2 / f1;
        assert!((best - optimal_w1).abs() <= 0.05 + 1e-12, "best {best} vs {optimal_w1}");
    }

    #[test]
    fn optimality_by_perturbation() {
        // perturbing any optimal plan does not decrease its objective value
        let s = spec(&[40.0, 25.0, 90.0], &[Some(1.3), Some(0.4), Some(2.0)], 60.0);
        let eps = 0.06; // 1e-3 * budget
        let mean_obj = |alloc: &[f64]| -> f64 {
            // Var(mu_hat) up to the 1/N^2 constant
            s.strata
                .iter()
                .zip(alloc)
                .map(|(st, &n)| st.size.powi(2) * st.sigma.unwrap().powi(2) / n)
                .sum()
        };
        let max_obj = |alloc: &[f64]| -> f64 {
            s.strata
                .iter()
                .zip(alloc)
                .map(|(st, &n)| st.sigma.unwrap().powi(2) / n)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let sum_obj = |alloc: &[f64]| -> f64 {
            s.strata
                .iter()
                .zip(alloc)
                .map(|(st, &n)| st.sigma.unwrap().powi(2) / n)
                .sum()
        };
        let check = |plan: &AllocationPlan, obj: &dyn Fn(&[f64]) -> f64| {
            let base = obj(&plan.allocations);
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let mut alt = plan.allocations.clone();
                    if alt[j] <= eps {
                        continue;
                    }
                    alt[i] += eps;
                    alt[j] -= eps;
                    assert!(obj(&alt) >= base - 1e-9, "perturbation improved the objective");
                }
            }
        };
        check(&neyman(&s).unwrap(), &mean_obj);
        check(&max_precision(&s).unwrap(), &max_obj);
        check(&sum_variances(&s).unwrap(), &sum_obj);
    }
}
