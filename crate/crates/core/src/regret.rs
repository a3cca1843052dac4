//! Schedule traces, the c-mu benchmark and regret accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{descending_order, Instance};
use crate::scalar::Scalar;

/// Full record of one simulated run.
///
/// Slots are numbered from 1. `served[t - 1]` is the job served in slot `t`.
/// `completion_slot[i] == 0` marks a job that never completed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub served: Vec<Option<u32>>,
    pub completion_slot: Vec<u64>,
    /// Slots each job received during the preemption phase.
    pub preempt_service: Vec<u64>,
    pub completion_order: Vec<usize>,
    pub total_slots: u64,
    /// Preemption length the run used.
    pub t_s: u64,
}

impl ScheduleTrace {
    pub fn n(&self) -> usize {
        self.completion_slot.len()
    }

    pub fn is_complete(&self) -> bool {
        self.completion_slot.iter().all(|&t| t > 0)
    }

    /// Number of slots in which each job was served.
    pub fn served_counts(&self) -> Vec<u64> {
        let mut counts = vec![0; self.n()];
        for j in self.served.iter().flatten() {
            counts[*j as usize] += 1;
        }
        counts
    }

    /// Last slot in which each job was served (0 if never).
    pub fn last_served(&self) -> Vec<u64> {
        let mut last = vec![0; self.n()];
        for (t, j) in self.served.iter().enumerate() {
            if let Some(j) = j {
                last[*j as usize] = t as u64 + 1;
            }
        }
        last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport<S = f64> {
    /// `C(T) = sum_i c_i * completion_slot_i` with true means.
    pub realized_cost: S,
    pub benchmark_cost: S,
    pub regret: S,
    /// Completion slot minus the job's benchmark completion.
    pub per_job_delay: Vec<S>,
}

impl<S: Scalar> RegretReport<S> {
    pub fn relative_regret(&self) -> S {
        if self.benchmark_cost == S::zero() {
            S::zero()
        } else {
            self.regret / self.benchmark_cost
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStats<S = f64> {
    /// Only defined for two jobs.
    pub delta_two: Option<S>,
    pub delta_min: S,
    pub delta_max: S,
}

/// Completion time of every job when served in c-mu order.
pub fn benchmark_completions<S: Scalar>(inst: &Instance<S>) -> Vec<S> {
    let mut done = vec![S::zero(); inst.n()];
    let mut clock = S::zero();
    for i in inst.cmu_order() {
        clock = clock + inst.mean_service(i);
        done[i] = clock;
    }
    done
}

/// Minimum expected cumulative holding cost, attained by the c-mu rule.
pub fn benchmark_cost<S: Scalar>(inst: &Instance<S>) -> S {
    benchmark_completions(inst)
        .into_iter()
        .zip(inst.costs())
        .fold(S::zero(), |acc, (done, &c)| acc + c * done)
}

pub fn regret<S: Scalar>(trace: &ScheduleTrace, inst: &Instance<S>) -> Result<RegretReport<S>> {
    if trace.n() != inst.n() {
        return Err(Error::InvalidArgument(format!(
            "trace has {} jobs, instance has {}",
            trace.n(),
            inst.n()
        )));
    }
    if let Some(job) = trace.completion_slot.iter().position(|&t| t == 0) {
        return Err(Error::IncompleteTrace { job });
    }
    let bench = benchmark_completions(inst);
    let mut realized = S::zero();
    let mut benchmark = S::zero();
    let mut delay = Vec::with_capacity(inst.n());
    for (i, &c) in inst.costs().iter().enumerate() {
        let done = S::from_count(trace.completion_slot[i]);
        realized = realized + c * done;
        benchmark = benchmark + c * bench[i];
        delay.push(done - bench[i]);
    }
    Ok(RegretReport {
        realized_cost: realized,
        benchmark_cost: benchmark,
        regret: realized - benchmark,
        per_job_delay: delay,
    })
}

/// Expected regret of the served decisions, conditioned on the trace's path.
///
/// With memoryless service, serving job `j` while the set `J` is present adds
/// `sum_{i in J ranked above j} (c_i mu_i - c_j mu_j) / mu_i` to the expected
/// regret (the c-mu value function's one-step advantage), and an idle slot adds
/// `sum_{i in J} c_i`. Summing along the path gives an unbiased estimate of the
/// expected regret whose variance does not include service-time noise.
pub fn decision_regret<S: Scalar>(trace: &ScheduleTrace, inst: &Instance<S>) -> Result<S> {
    if let Some(job) = trace.completion_slot.iter().position(|&t| t == 0) {
        return Err(Error::IncompleteTrace { job });
    }
    let n = inst.n();
    let order = inst.cmu_order();
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let index: Vec<S> = (0..n)
        .map(|i| inst.costs()[i] * inst.index_rate(i))
        .collect();
    let mut present = vec![true; n];
    let mut total = S::zero();
    // (served job, present-set generation) -> advantage
    let mut cache: Option<(Option<u32>, usize, S)> = None;
    let mut generation = 0usize;
    for (t, &served) in trace.served.iter().enumerate() {
        let slot = t as u64 + 1;
        let adv = match cache {
            Some((j, g, a)) if j == served && g == generation => a,
            _ => {
                let a = match served {
                    None => (0..n)
                        .filter(|&i| present[i])
                        .fold(S::zero(), |acc, i| acc + inst.costs()[i]),
                    Some(j) => {
                        let j = j as usize;
                        (0..n)
                            .filter(|&i| present[i] && rank[i] < rank[j])
                            .fold(S::zero(), |acc, i| {
                                acc + (index[i] - index[j]) / inst.index_rate(i)
                            })
                    }
                };
                cache = Some((served, generation, a));
                a
            }
        };
        total = total + adv;
        if let Some(j) = served {
            let j = j as usize;
            if trace.completion_slot[j] == slot {
                present[j] = false;
                generation += 1;
            }
        }
    }
    Ok(total)
}

/// Normalized gaps between the top c-mu job and every other job.
pub fn gap_stats<S: Scalar>(inst: &Instance<S>) -> Result<GapStats<S>> {
    if inst.n() < 2 {
        return Err(Error::InvalidArgument(
            "gap statistics need at least two jobs".into(),
        ));
    }
    let cmu: Vec<S> = inst
        .costs()
        .iter()
        .zip(inst.rates())
        .map(|(&c, &mu)| c * mu)
        .collect();
    let top = descending_order(&cmu)[0];
    let mu = inst.rates();
    let gaps: Vec<S> = (0..inst.n())
        .filter(|&i| i != top)
        .map(|i| (cmu[top] - cmu[i]).magnitude() / (mu[top] + mu[i]))
        .collect();
    let delta_min = gaps
        .iter()
        .copied()
        .fold(gaps[0], |a, b| if b < a { b } else { a });
    let delta_max = gaps
        .iter()
        .copied()
        .fold(gaps[0], |a, b| if b > a { b } else { a });
    Ok(GapStats {
        delta_two: (inst.n() == 2).then_some(gaps[0]),
        delta_min,
        delta_max,
    })
}
