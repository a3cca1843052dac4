//! Discrete-time single-server simulation.
//!
//! Each slot runs four steps in order:
//!
//! 1. every job still present draws a holding cost, which the estimator observes;
//! 2. the policy picks a job from estimates that include this slot's draws;
//! 3. the picked job receives one slot of service;
//! 4. completion is checked, and a job finishing in slot `t` records
//!    `completion_slot = t` and is gone from slot `t + 1` on.
//!
//! Randomness comes from one ChaCha stream per job for costs and one per job
//! for geometric completions, so two policies run on the same seed see the
//! same `k`-th cost draw and the same service requirement for every job.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::costs::{completion_stream, cost_stream, substream, CostModel, EstimatorState};
use crate::error::{Error, Result};
use crate::instance::{Instance, ServiceKind};
use crate::policies::{PolicyConfig, PolicyState, ResolvedPreemption};
use crate::regret::ScheduleTrace;
use crate::scalar::Real;

/// Geometric runs abort after this many slots.
pub const DEFAULT_SLOT_CAP: u64 = 1_000_000_000;

/// One line of the audit dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub served: usize,
    pub completed: Option<usize>,
    /// `(job, cost)` for every job present at the start of the slot.
    pub costs_observed: Vec<(usize, f64)>,
}

/// Remaining work per job.
#[derive(Debug, Clone)]
pub enum ServiceState {
    Deterministic {
        remaining_work: Vec<u64>,
    },
    Geometric {
        probs: Vec<f64>,
        rngs: Vec<ChaCha8Rng>,
    },
}

impl ServiceState {
    pub fn new<S: Real>(inst: &Instance<S>, seed: u64) -> Self {
        match inst.service() {
            ServiceKind::Deterministic => ServiceState::Deterministic {
                remaining_work: inst.service_lengths().to_vec(),
            },
            ServiceKind::Geometric => ServiceState::Geometric {
                probs: (0..inst.n()).map(|i| inst.completion_prob(i)).collect(),
                rngs: (0..inst.n())
                    .map(|i| substream(seed, completion_stream(i)))
                    .collect(),
            },
        }
    }

    /// Apply one slot of service to `job`; true when it completes.
    pub fn serve(&mut self, job: usize) -> bool {
        match self {
            ServiceState::Deterministic { remaining_work } => {
                remaining_work[job] -= 1;
                remaining_work[job] == 0
            }
            ServiceState::Geometric { probs, rngs } => rngs[job].random::<f64>() < probs[job],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Keep every `c_hat_{i,t}` for clean-event checks.
    pub record_history: bool,
    pub slot_cap: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            record_history: false,
            slot_cap: DEFAULT_SLOT_CAP,
        }
    }
}

/// Empirical means of each job after each of its observations:
/// `means[i][t - 1] = c_hat_{i,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorHistory<S = f64> {
    pub means: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<S = f64> {
    pub trace: ScheduleTrace,
    pub estimator: EstimatorState<S>,
    pub history: Option<EstimatorHistory<S>>,
    pub preemption: ResolvedPreemption,
}

pub fn simulate<S: Real>(
    inst: &Instance<S>,
    model: &CostModel,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<Simulation<S>> {
    simulate_with(inst, model, cfg, seed, SimOptions::default(), None)
}

pub fn simulate_with<S: Real>(
    inst: &Instance<S>,
    model: &CostModel,
    cfg: &PolicyConfig,
    seed: u64,
    opts: SimOptions,
    mut audit: Option<&mut dyn Write>,
) -> Result<Simulation<S>> {
    cfg.kind.check_service(inst.service())?;
    model.validate()?;
    let preemption = cfg.resolve_t_s(inst)?;
    let n = inst.n();
    let costs: Vec<f64> = inst.costs().iter().map(|c| c.lossy_f64()).collect();
    let rates: Vec<f64> = inst.rates().iter().map(|m| m.lossy_f64()).collect();
    let weights = model.index_weights(inst);
    let mut cost_rngs: Vec<ChaCha8Rng> = (0..n).map(|i| substream(seed, cost_stream(i))).collect();
    let mut service = ServiceState::new(inst, seed);
    let mut policy = PolicyState::new(cfg.kind, preemption.t_s);
    let mut est = EstimatorState::<S>::new(n);
    let mut history = opts.record_history.then(|| EstimatorHistory {
        means: vec![Vec::new(); n],
    });

    let mut remaining = vec![true; n];
    let mut left = n;
    let capacity = match inst.service() {
        ServiceKind::Deterministic => inst.total_service() as usize,
        ServiceKind::Geometric => 0,
    };
    let mut served = Vec::with_capacity(capacity);
    let mut completion_slot = vec![0; n];
    let mut preempt_service = vec![0; n];
    let mut completion_order = Vec::with_capacity(n);
    let mut observed = Vec::new();

    let mut slot = 0u64;
    while left > 0 {
        slot += 1;
        if slot > opts.slot_cap {
            return Err(Error::SlotCapExceeded {
                cap: opts.slot_cap,
                remaining: left,
            });
        }
        observed.clear();
        for i in (0..n).filter(|&i| remaining[i]) {
            let x = model.sample(costs[i], rates[i], &mut cost_rngs[i]);
            est.observe(i, S::from_f64(x).expect("finite cost sample"));
            if let Some(h) = history.as_mut() {
                h.means[i].push(est.mean(i));
            }
            if audit.is_some() {
                observed.push((i, x));
            }
        }
        let j = policy.select(&est, &weights, inst, &remaining, slot)?;
        served.push(Some(j as u32));
        if slot <= preemption.t_s {
            preempt_service[j] += 1;
        }
        let done = service.serve(j);
        if done {
            remaining[j] = false;
            left -= 1;
            completion_slot[j] = slot;
            completion_order.push(j);
        }
        if let Some(w) = audit.as_mut() {
            let rec = SlotRecord {
                slot,
                served: j,
                completed: done.then_some(j),
                costs_observed: std::mem::take(&mut observed),
            };
            serde_json::to_writer(&mut **w, &rec)?;
            w.write_all(b"\n")?;
        }
    }

    Ok(Simulation {
        trace: ScheduleTrace {
            served,
            completion_slot,
            preempt_service,
            completion_order,
            total_slots: slot,
            t_s: preemption.t_s,
        },
        estimator: est,
        history,
        preemption,
    })
}

/// Run two policies on identical per-job random streams.
pub fn replay_pair<S: Real>(
    inst: &Instance<S>,
    model: &CostModel,
    a: &PolicyConfig,
    b: &PolicyConfig,
    seed: u64,
) -> Result<(Simulation<S>, Simulation<S>)> {
    Ok((
        simulate(inst, model, a, seed)?,
        simulate(inst, model, b, seed)?,
    ))
}
