use proptest::prelude::*;

use cmu_lab::analysis::{brute_force_min_cost, loglog_slope};
use cmu_lab::costs::CostModel;
use cmu_lab::engine::simulate;
use cmu_lab::generators::{gen_uniform_band, GeneratorSpec};
use cmu_lab::harness::{replication_regret, replication_seed};
use cmu_lab::instance::{Instance, ServiceKind};
use cmu_lab::policies::{PolicyConfig, PolicyKind};
use cmu_lab::regret::{benchmark_cost, gap_stats, regret, ScheduleTrace};

const DET_POLICIES: [PolicyKind; 4] = [
    PolicyKind::OracleCmu,
    PolicyKind::PreemptiveEmpirical,
    PolicyKind::NonpreemptiveEmpirical,
    PolicyKind::PreemptThenNonpreempt,
];

fn det_instance() -> impl Strategy<Value = Instance> {
    (1usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, 4.0]), n),
            prop::sample::select(vec![6u64, 12, 30, 60]),
        )
            .prop_map(|(c, mu, t)| Instance::new(t, c, mu, ServiceKind::Deterministic).unwrap())
    })
}

fn policy() -> impl Strategy<Value = PolicyKind> {
    prop::sample::select(DET_POLICIES.to_vec())
}

fn served_counts(trace: &ScheduleTrace) -> Vec<u64> {
    let mut counts = vec![0; trace.n()];
    for j in trace.served.iter().flatten() {
        counts[*j as usize] += 1;
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn brute_force_bounds_every_simulated_trace(inst in det_instance(), kind in policy(), seed in any::<u64>()) {
        let sim = simulate(&inst, &CostModel::bernoulli(), &PolicyConfig::new(kind), seed).unwrap();
        let report = regret(&sim.trace, &inst).unwrap();
        let (best, _) = brute_force_min_cost(&inst).unwrap();
        let tol = 1e-9 * report.realized_cost.max(1.0);
        prop_assert!(best <= report.realized_cost + tol);
        prop_assert!(report.regret >= -tol);
        prop_assert!((benchmark_cost(&inst) - best).abs() <= tol);
        let diff = report.realized_cost - report.benchmark_cost;
        prop_assert!((report.regret - diff).abs() <= 1e-12 * report.realized_cost.max(1.0));
    }

    #[test]
    fn service_accounting(inst in det_instance(), kind in policy(), seed in any::<u64>()) {
        let sim = simulate(&inst, &CostModel::bernoulli(), &PolicyConfig::new(kind), seed).unwrap();
        let t = &sim.trace;
        prop_assert_eq!(t.total_slots, inst.total_service());
        prop_assert_eq!(t.served.len() as u64, inst.total_service());
        prop_assert_eq!(served_counts(t), inst.service_lengths().to_vec());
        for (slot, j) in t.served.iter().enumerate() {
            let j = j.unwrap() as usize;
            prop_assert!((slot as u64) < t.completion_slot[j]);
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces(inst in det_instance(), kind in policy(), seed in any::<u64>()) {
        let cfg = PolicyConfig::new(kind);
        let a = simulate(&inst, &CostModel::bernoulli(), &cfg, seed).unwrap();
        let b = simulate(&inst, &CostModel::bernoulli(), &cfg, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn zero_preemption_is_nonpreemptive(inst in det_instance(), seed in any::<u64>()) {
        let ptn = PolicyConfig::new(PolicyKind::PreemptThenNonpreempt).with_t_s(0);
        let non = PolicyConfig::new(PolicyKind::NonpreemptiveEmpirical);
        let a = simulate(&inst, &CostModel::bernoulli(), &ptn, seed).unwrap();
        let b = simulate(&inst, &CostModel::bernoulli(), &non, seed).unwrap();
        prop_assert_eq!(a.trace.served, b.trace.served);
    }

    #[test]
    fn full_preemption_is_preemptive(inst in det_instance(), seed in any::<u64>(), extra in 0u64..10) {
        let ptn = PolicyConfig::new(PolicyKind::PreemptThenNonpreempt)
            .with_t_s(inst.total_service() + extra);
        let pre = PolicyConfig::new(PolicyKind::PreemptiveEmpirical);
        let a = simulate(&inst, &CostModel::bernoulli(), &ptn, seed).unwrap();
        let b = simulate(&inst, &CostModel::bernoulli(), &pre, seed).unwrap();
        prop_assert_eq!(a.trace.served, b.trace.served);
    }

    #[test]
    fn benchmark_order_ignores_common_cost_scale(inst in det_instance(), k in 0.01f64..1.0) {
        let scaled = inst.with_costs(inst.costs().iter().map(|c| c * k).collect()).unwrap();
        prop_assert_eq!(inst.cmu_order(), scaled.cmu_order());
    }

    #[test]
    fn gap_stats_ignore_order_of_other_jobs(
        keys in prop::collection::btree_set(1u32..1000, 2..8),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let c: Vec<f64> = keys.iter().rev().map(|&k| k as f64 / 1000.0).collect();
        let n = c.len();
        let mu = vec![1.0; n];
        let base = Instance::new(10, c.clone(), mu.clone(), ServiceKind::Deterministic).unwrap();
        let mut tail: Vec<usize> = (1..n).collect();
        tail.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let perm: Vec<usize> = std::iter::once(0).chain(tail).collect();
        let shuffled = Instance::new(10, perm.iter().map(|&i| c[i]).collect(), mu, ServiceKind::Deterministic).unwrap();
        prop_assert_eq!(gap_stats(&base).unwrap(), gap_stats(&shuffled).unwrap());
    }

    #[test]
    fn generated_band_instances_are_valid_and_reproducible(
        n in 1usize..50,
        t in 1u64..100_000,
        eps in 0.0f64..=0.5,
        seed in any::<u64>(),
    ) {
        let a: Instance = gen_uniform_band(n, t, eps, seed).unwrap();
        let b: Instance = gen_uniform_band(n, t, eps, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let reloaded = Instance::<f64>::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(&a, &reloaded);
        for &c in a.costs() {
            prop_assert!(c >= 0.5 - eps && c <= 0.5 + eps);
        }
    }

    #[test]
    fn relative_regret_nonnegative_on_generated_instances(
        n in 2usize..12,
        t in 5u64..200,
        eps in 0.0f64..=0.5,
        seed in any::<u64>(),
        kind in policy(),
    ) {
        let inst: Instance = GeneratorSpec::uniform_band(n, t, eps).generate(seed).unwrap();
        let out = replication_regret(&inst, &CostModel::bernoulli(), &PolicyConfig::new(kind), seed).unwrap();
        prop_assert!(out.relative >= -1e-12);
    }

    #[test]
    fn replication_seeds_are_injective(
        base in any::<u64>(),
        a in (0usize..1000, 0usize..100_000),
        b in (0usize..1000, 0usize..100_000),
    ) {
        prop_assume!(a != b);
        prop_assert_ne!(replication_seed(base, a.0, a.1), replication_seed(base, b.0, b.1));
    }

    #[test]
    fn slope_fit_is_exact_and_scale_free(
        exponent in -2.0f64..3.0,
        scale in 0.01f64..100.0,
        k in 0.001f64..1000.0,
    ) {
        let pts: Vec<(f64, f64)> = [2.0, 20.0, 200.0, 2000.0]
            .iter()
            .map(|&x: &f64| (x, scale * x.powf(exponent)))
            .collect();
        let fit = loglog_slope(&pts).unwrap();
        prop_assert!((fit.slope - exponent).abs() < 1e-9);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, k * y)).collect();
        prop_assert!((loglog_slope(&scaled).unwrap().slope - fit.slope).abs() < 1e-9);
    }
}
