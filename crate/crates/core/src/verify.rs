//! Oracle suite behind `cmu-lab verify`.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    brute_force_min_cost, clean_event_coverage, decomposition_check, loglog_slope,
    stochastic_decomposition_check,
};
use crate::costs::{substream, CostModel};
use crate::engine::{simulate, simulate_with, SimOptions};
use crate::instance::{Instance, ServiceKind};
use crate::policies::{PolicyConfig, PolicyKind};
use crate::regret::{benchmark_cost, regret};
use crate::scalar::close_rel;
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deterministic instance with `c ~ U[0,1)`, `mu` from `rates` and `T` from `scales`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, rates: &[f64], scales: &[u64]) -> Instance {
    let costs = (0..n).map(|_| rng.random::<f64>()).collect();
    let mus = (0..n).map(|_| *rates.choose(rng).expect("rates")).collect();
    let t = *scales.choose(rng).expect("scales");
    Instance::new(t, costs, mus, ServiceKind::Deterministic).expect("valid random instance")
}

fn outcome(name: &'static str, failures: usize, total: usize, what: &str) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failures == 0,
        detail: format!("{}/{} {what}", total - failures, total),
    }
}

pub fn check_benchmark_optimality(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = substream(seed, 0);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let inst = random_instance(&mut rng, n, &[1.0, 2.0, 3.0], &[12, 60]);
        let (best, _) = brute_force_min_cost(&inst).expect("n <= 8");
        if !close_rel(best, benchmark_cost(&inst), 1e-9) {
            failures += 1;
        }
    }
    outcome(
        "benchmark-vs-brute-force",
        failures,
        cases,
        "instances agree within 1e-9",
    )
}

pub fn check_decomposition(cases: usize, subset_cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = substream(seed, 1);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let c: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let t = rng.random_range(1..=100_000);
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        if !decomposition_check(&c, &mu, t, &sigma)
            .expect("valid")
            .holds(1e-9)
        {
            failures += 1;
        }
    }
    for _ in 0..subset_cases {
        let n = rng.random_range(1..=12);
        let c: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let t = rng.random_range(1..=100_000);
        let k = rng.random_range(1..=n);
        let mut jobs: Vec<usize> = (0..n).collect();
        jobs.shuffle(&mut rng);
        jobs.truncate(k);
        if !stochastic_decomposition_check(&c, &mu, t, &jobs)
            .expect("valid")
            .holds(1e-9)
        {
            failures += 1;
        }
    }
    outcome(
        "regret-decomposition",
        failures,
        cases + subset_cases,
        "identities hold within 1e-9",
    )
}

pub fn check_exact_decomposition() -> CheckOutcome {
    let r = |a: i64, b: i64| Rational::new(a, b);
    let c = [r(1, 3), r(5, 7), r(1, 2), r(2, 9), r(4, 5)];
    let mu = [r(1, 1), r(3, 2), r(2, 1), r(7, 4), r(5, 3)];
    let mut failures = 0;
    let orders: [[usize; 5]; 3] = [[4, 3, 2, 1, 0], [2, 0, 4, 1, 3], [1, 3, 0, 4, 2]];
    for sigma in &orders {
        let d = decomposition_check(&c, &mu, 420, sigma).expect("valid");
        if d.lhs != d.rhs {
            failures += 1;
        }
        let s = stochastic_decomposition_check(&c, &mu, 420, &sigma[..3]).expect("valid");
        if s.lhs != s.rhs {
            failures += 1;
        }
    }
    outcome(
        "exact-rational-decomposition",
        failures,
        6,
        "identities hold exactly",
    )
}

pub fn check_oracle_zero_regret(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = substream(seed, 2);
    let mut failures = 0;
    for k in 0..cases {
        let n = rng.random_range(1..=10);
        let inst = random_instance(&mut rng, n, &[1.0, 1.5, 2.0, 3.0, 7.0], &[12, 60, 97]);
        let cfg = PolicyConfig::new(PolicyKind::OracleCmu);
        let sim = simulate(&inst, &CostModel::bernoulli(), &cfg, k as u64).expect("simulates");
        let r = regret(&sim.trace, &inst).expect("complete").regret;
        if r.abs() > 1e-9 {
            failures += 1;
        }
    }
    outcome(
        "oracle-zero-regret",
        failures,
        cases,
        "runs with |regret| <= 1e-9",
    )
}

pub fn check_slope_fit() -> CheckOutcome {
    let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 10000.0]
        .iter()
        .map(|&x: &f64| (x, 3.0 * x.powf(2.0 / 3.0)))
        .collect();
    let fit = loglog_slope(&pts).expect("fit");
    CheckOutcome {
        name: "loglog-slope",
        passed: (fit.slope - 2.0 / 3.0).abs() < 1e-9 && fit.r_squared > 1.0 - 1e-12,
        detail: format!("slope {:.12}, r^2 {:.12}", fit.slope, fit.r_squared),
    }
}

pub fn check_clean_event(reps: usize, seed: u64) -> CheckOutcome {
    let inst = Instance::new(
        100,
        vec![0.1, 0.3, 0.5, 0.7, 0.9],
        vec![1.0; 5],
        ServiceKind::Deterministic,
    )
    .expect("valid");
    let model = CostModel::bernoulli();
    let cfg = PolicyConfig::new(PolicyKind::PreemptThenNonpreempt);
    let opts = SimOptions {
        record_history: true,
        ..SimOptions::default()
    };
    let histories: Vec<_> = (0..reps)
        .map(|k| {
            simulate_with(&inst, &model, &cfg, seed.wrapping_add(k as u64), opts, None)
                .expect("simulates")
                .history
                .expect("recorded")
        })
        .collect();
    let cov = clean_event_coverage(&histories, &inst, &model, 1.0).expect("coverage");
    CheckOutcome {
        name: "clean-event-coverage",
        passed: cov >= 0.99,
        detail: format!("coverage {cov:.4} over {reps} runs (need >= 0.99)"),
    }
}

/// Every check, at sizes that finish in a few seconds.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_benchmark_optimality(200, seed),
        check_decomposition(1000, 500, seed),
        check_exact_decomposition(),
        check_oracle_zero_regret(100, seed),
        check_slope_fit(),
        check_clean_event(200, seed),
    ]
}
