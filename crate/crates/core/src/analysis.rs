//! Independent oracles and diagnostics: exhaustive optimum, the pairwise
//! regret decomposition, clean-event coverage and log-log slope fits.

use crate::costs::{confidence_radius, CostKind, CostModel};
use crate::engine::EstimatorHistory;
use crate::error::{Error, Result};
use crate::instance::{descending_order, Instance};
use crate::scalar::{close_rel, Real, Scalar};

/// Largest instance the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_JOBS: usize = 10;

/// Exact minimum weighted completion cost over all `N!` service orders,
/// with the first minimizing order found.
pub fn brute_force_min_cost<S: Scalar>(inst: &Instance<S>) -> Result<(S, Vec<usize>)> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_JOBS {
        return Err(Error::InvalidArgument(format!(
            "brute force limited to {BRUTE_FORCE_MAX_JOBS} jobs, got {n}"
        )));
    }
    let lens: Vec<S> = (0..n).map(|i| inst.mean_service(i)).collect();
    let cost_of = |perm: &[usize]| {
        let mut clock = S::zero();
        perm.iter().fold(S::zero(), |acc, &j| {
            clock = clock + lens[j];
            acc + inst.costs()[j] * clock
        })
    };
    // Heap's algorithm, iterative form.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (cost_of(&perm), perm.clone());
    let mut stack = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            let c = cost_of(&perm);
            if c < best.0 {
                best = (c, perm.clone());
            }
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Both sides of a pairwise regret decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult<S = f64> {
    pub lhs: S,
    pub rhs: S,
    /// `(i, l, value)` for each inverted pair, positions 0-based in the
    /// completion sequence.
    pub terms: Vec<(usize, usize, S)>,
}

impl<S: Scalar> DecompositionResult<S> {
    pub fn holds(&self, rel: f64) -> bool {
        close_rel(self.lhs, self.rhs, rel)
    }
}

fn check_lengths<S>(c: &[S], mu: &[S]) -> Result<()> {
    if c.len() != mu.len() {
        return Err(Error::InvalidArgument(format!(
            "{} costs but {} rates",
            c.len(),
            mu.len()
        )));
    }
    Ok(())
}

fn check_distinct(idx: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(Error::InvalidArgument(format!(
                "job {i} out of range for {n} jobs"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!("job {i} appears twice")));
        }
    }
    Ok(())
}

/// Completion-order regret, directly and as a sum over inverted pairs.
///
/// Jobs are relabeled internally so that label 1 has the largest `c mu`.
/// With `sigma` the completion order in relabeled terms and
/// `E_i = { l > i : sigma(l) < sigma(i) }`:
///
/// ```text
/// lhs = sum_i ( c_{sigma(i)} sum_{j<=i} T/mu_{sigma(j)} - c_i sum_{j<=i} T/mu_j )
/// rhs = sum_i sum_{l in E_i} (c_{sigma(l)} mu_{sigma(l)} - c_{sigma(i)} mu_{sigma(i)}) T / (mu_{sigma(l)} mu_{sigma(i)})
/// ```
pub fn decomposition_check<S: Scalar>(
    c: &[S],
    mu: &[S],
    t_scale: u64,
    sigma: &[usize],
) -> Result<DecompositionResult<S>> {
    check_lengths(c, mu)?;
    let n = c.len();
    if sigma.len() != n {
        return Err(Error::InvalidArgument(format!(
            "sigma has {} entries, expected {n}",
            sigma.len()
        )));
    }
    check_distinct(sigma, n)?;
    let cmu: Vec<S> = c.iter().zip(mu).map(|(&a, &b)| a * b).collect();
    let order = descending_order(&cmu);
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let rc: Vec<S> = order.iter().map(|&i| c[i]).collect();
    let rmu: Vec<S> = order.iter().map(|&i| mu[i]).collect();
    let s: Vec<usize> = sigma.iter().map(|&i| rank[i]).collect();
    let t = S::from_count(t_scale);

    let mut lhs = S::zero();
    let mut served = S::zero();
    let mut ideal = S::zero();
    for i in 0..n {
        served = served + t / rmu[s[i]];
        ideal = ideal + t / rmu[i];
        lhs = lhs + rc[s[i]] * served - rc[i] * ideal;
    }

    let mut rhs = S::zero();
    let mut terms = Vec::new();
    for i in 0..n {
        for l in (i + 1)..n {
            if s[l] < s[i] {
                let (a, b) = (s[l], s[i]);
                let v = (rc[a] * rmu[a] - rc[b] * rmu[b]) * t / (rmu[a] * rmu[b]);
                rhs = rhs + v;
                terms.push((i, l, v));
            }
        }
    }
    Ok(DecompositionResult { lhs, rhs, terms })
}

/// Decomposition restricted to an ordered subset of jobs.
///
/// `subset` is the completion order `sigma_1..sigma_k`; `pi` is the same jobs
/// in decreasing `c mu` order and `E_j = { l > j : c mu(sigma_l) > c mu(sigma_j) }`.
pub fn stochastic_decomposition_check<S: Scalar>(
    c: &[S],
    mu: &[S],
    t_scale: u64,
    subset: &[usize],
) -> Result<DecompositionResult<S>> {
    check_lengths(c, mu)?;
    check_distinct(subset, c.len())?;
    let t = S::from_count(t_scale);
    let cmu = |i: usize| c[i] * mu[i];
    let keys: Vec<S> = subset.iter().map(|&i| cmu(i)).collect();
    let mut sorted: Vec<usize> = subset.to_vec();
    sorted.sort_unstable();
    let sorted_keys: Vec<S> = sorted.iter().map(|&i| cmu(i)).collect();
    let pi: Vec<usize> = descending_order(&sorted_keys)
        .into_iter()
        .map(|k| sorted[k])
        .collect();

    let mut lhs = S::zero();
    let mut served = S::zero();
    let mut ideal = S::zero();
    for (&sj, &pj) in subset.iter().zip(&pi) {
        served = served + t / mu[sj];
        ideal = ideal + t / mu[pj];
        lhs = lhs + c[sj] * served - c[pj] * ideal;
    }

    let mut rhs = S::zero();
    let mut terms = Vec::new();
    for j in 0..subset.len() {
        for l in (j + 1)..subset.len() {
            if keys[l] > keys[j] {
                let (a, b) = (subset[l], subset[j]);
                let v = (cmu(a) - cmu(b)) * t / (mu[a] * mu[b]);
                rhs = rhs + v;
                terms.push((j, l, v));
            }
        }
    }
    Ok(DecompositionResult { lhs, rhs, terms })
}

/// Largest `|center_i - c_hat_{i,t}| / x_t` over all recorded `(i, t)`.
///
/// The center is `c_i`, or `c_i mu_i` under the two-point model whose
/// observations average to the index directly.
pub fn clean_event_margin<S: Real>(
    history: &EstimatorHistory<S>,
    inst: &Instance<S>,
    model: &CostModel,
) -> Result<S> {
    let mut worst = S::zero();
    for (i, means) in history.means.iter().enumerate() {
        let center = match model.kind {
            CostKind::TwoPoint => inst.costs()[i] * inst.rates()[i],
            _ => inst.costs()[i],
        };
        for (k, &m) in means.iter().enumerate() {
            let x = confidence_radius(k as u64 + 1, inst.n(), inst.t_scale(), inst.mu_min())?;
            let ratio = (center - m).abs() / x;
            if ratio > worst {
                worst = ratio;
            }
        }
    }
    Ok(worst)
}

/// Fraction of runs in which every recorded estimate stays within
/// `radius_scale * x_t` of its mean.
pub fn clean_event_coverage<S: Real>(
    histories: &[EstimatorHistory<S>],
    inst: &Instance<S>,
    model: &CostModel,
    radius_scale: f64,
) -> Result<f64> {
    if histories.is_empty() {
        return Err(Error::InvalidArgument("no runs to evaluate".into()));
    }
    let scale = S::from_f64(radius_scale).expect("finite scale");
    let mut clean = 0usize;
    for h in histories {
        if clean_event_margin(h, inst, model)? <= scale {
            clean += 1;
        }
    }
    Ok(clean as f64 / histories.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit<S = f64> {
    pub slope: S,
    pub intercept: S,
    pub r_squared: S,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn loglog_slope<S: Real>(points: &[(S, S)]) -> Result<SlopeFit<S>> {
    if points
        .iter()
        .any(|&(x, y)| !(x > S::zero() && y > S::zero()))
    {
        return Err(Error::InvalidArgument(
            "log-log fit needs strictly positive points".into(),
        ));
    }
    let logs: Vec<(S, S)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = S::from_count(logs.len() as u64);
    if logs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let mx = logs.iter().fold(S::zero(), |a, p| a + p.0) / k;
    let my = logs.iter().fold(S::zero(), |a, p| a + p.1) / k;
    let sxx = logs
        .iter()
        .fold(S::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = logs
        .iter()
        .fold(S::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let syy = logs
        .iter()
        .fold(S::zero(), |a, p| a + (p.1 - my) * (p.1 - my));
    if !(sxx > S::zero()) {
        return Err(Error::DegenerateFit("x values are not distinct".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > S::zero() {
        let sse = logs.iter().fold(S::zero(), |a, p| {
            let e = p.1 - (intercept + slope * p.0);
            a + e * e
        });
        (S::one() - sse / syy).max(S::zero())
    } else {
        S::one()
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ServiceKind;
    use crate::regret::benchmark_cost;
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn brute_force_single_job() {
        let inst = Instance::new(10, vec![0.5], vec![1.0], ServiceKind::Deterministic).unwrap();
        assert_eq!(brute_force_min_cost(&inst).unwrap(), (5.0, vec![0]));
    }

    #[test]
    fn brute_force_equal_index_orders_tie() {
        let inst: Instance = Instance::new(
            12,
            vec![0.3, 0.6],
            vec![2.0, 1.0],
            ServiceKind::Deterministic,
        )
        .unwrap();
        let (best, _) = brute_force_min_cost(&inst).unwrap();
        // 0.3*6 + 0.6*18 = 12.6 and 0.6*12 + 0.3*18 = 12.6
        assert!((best - 12.6).abs() < 1e-12);
        assert!((benchmark_cost(&inst) - 12.6).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guard() {
        let inst =
            Instance::new(10, vec![0.5; 11], vec![1.0; 11], ServiceKind::Deterministic).unwrap();
        assert!(brute_force_min_cost(&inst).is_err());
    }

    #[test]
    fn identity_permutation_has_no_terms() {
        let c = [0.9, 0.5, 0.1];
        let mu = [1.0, 1.0, 1.0];
        let d = decomposition_check(&c, &mu, 10, &[0, 1, 2]).unwrap();
        assert_eq!((d.lhs, d.rhs), (0.0, 0.0));
        assert!(d.terms.is_empty());
    }

    #[test]
    fn swapped_pair_single_term() {
        let c = [0.8f64, 0.3];
        let mu = [2.0, 1.0];
        let d = decomposition_check(&c, &mu, 100, &[1, 0]).unwrap();
        let expected = (0.8 * 2.0 - 0.3 * 1.0) * 100.0 / (2.0 * 1.0);
        assert!((d.lhs - expected).abs() < 1e-9);
        assert!((d.rhs - expected).abs() < 1e-9);
        assert_eq!(d.terms.len(), 1);
        assert_eq!((d.terms[0].0, d.terms[0].1), (0, 1));
    }

    #[test]
    fn decomposition_is_exact_over_rationals() {
        let r = |a: i64, b: i64| Ratio::new(a, b);
        let c = [r(1, 3), r(7, 9), r(1, 2), r(2, 5)];
        let mu = [r(1, 1), r(3, 2), r(2, 1), r(5, 4)];
        let d = decomposition_check(&c, &mu, 60, &[2, 0, 3, 1]).unwrap();
        assert_eq!(d.lhs, d.rhs);
        let d = stochastic_decomposition_check(&c, &mu, 60, &[3, 0, 1]).unwrap();
        assert_eq!(d.lhs, d.rhs);
    }

    #[test]
    fn decomposition_rejects_bad_sigma() {
        assert!(decomposition_check(&[0.5, 0.5], &[1.0, 1.0], 10, &[0, 0]).is_err());
        assert!(decomposition_check(&[0.5, 0.5], &[1.0, 1.0], 10, &[0]).is_err());
        assert!(decomposition_check(&[0.5, 0.5], &[1.0, 1.0], 10, &[0, 2]).is_err());
        assert!(stochastic_decomposition_check(&[0.5, 0.5], &[1.0, 1.0], 10, &[1, 1]).is_err());
    }

    #[test]
    fn subset_cases() {
        let c = [0.9f64, 0.2, 0.6, 0.4];
        let mu = [1.0, 1.0, 1.0, 1.0];
        let d = stochastic_decomposition_check(&c, &mu, 10, &[0, 2, 3]).unwrap();
        assert_eq!((d.lhs, d.rhs), (0.0, 0.0));
        let d = stochastic_decomposition_check(&c, &mu, 10, &[3, 2]).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!(d.rhs > 0.0);
        assert!((d.lhs - d.rhs).abs() < 1e-12);
    }

    #[test]
    fn slope_examples() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, x.powf(2.0 / 3.0)))
            .collect();
        let fit = loglog_slope(&pts).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat = loglog_slope(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);

        // rise 3.4 over run 4.9 in natural-log units
        let e = std::f64::consts::E;
        let fit = loglog_slope(&[(1.0, 1.0), (e.powf(4.9), e.powf(3.4))]).unwrap();
        assert!((fit.slope - 0.694).abs() < 5e-4);
    }

    #[test]
    fn slope_errors() {
        assert!(loglog_slope(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(loglog_slope(&[(1.0, -1.0), (2.0, 2.0)]).is_err());
        assert!(matches!(
            loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            loglog_slope(&[(2.0, 1.0)]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn slope_works_in_single_precision() {
        let pts: Vec<(f32, f32)> = [1.0f32, 4.0, 16.0]
            .iter()
            .map(|&x| (x, 3.0 * x * x))
            .collect();
        assert!((loglog_slope(&pts).unwrap().slope - 2.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn slope_ignores_y_scale(
            exp in -3.0f64..3.0,
            scale in 0.001f64..1000.0,
        ) {
            let pts: Vec<(f64, f64)> = [1.0, 3.0, 9.0, 27.0].iter().map(|&x: &f64| (x, x.powf(exp))).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y * scale)).collect();
            let a = loglog_slope(&pts).unwrap();
            let b = loglog_slope(&scaled).unwrap();
            prop_assert!((a.slope - exp).abs() < 1e-9);
            prop_assert!((a.slope - b.slope).abs() < 1e-9);
        }
    }
}
